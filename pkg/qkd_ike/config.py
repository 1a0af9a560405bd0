from dataclasses import dataclass
from qkd_ike.utils.get_logger import get_logger, VERBOSITY_MAP


@dataclass()
class QkdIkeConfig:

    KMS_LOG_LEVEL: int = 3
    CODEC_LOG_LEVEL: int = 3
    KEYS_LOG_LEVEL: int = 3
    HANDSHAKE_LOG_LEVEL: int = 3
    TRANSPORT_LOG_LEVEL: int = 3
    BENCH_LOG_LEVEL: int = 4
    # Fixed by the ETSI 014 deployment, not by the KMS itself
    SAE_ID_HEADER: str = "X-SAE-ID"

CONFIG = QkdIkeConfig()

LOGGER_SPEC = {
    "kms": {
        "name": "QkdIke-Kms",
        "level_attr": "KMS_LOG_LEVEL",
        "with_threads": True,
        "logger": None
    },
    "codec": {
        "name": "QkdIke-Codec",
        "level_attr": "CODEC_LOG_LEVEL",
        "with_threads": False,
        "logger": None
    },
    "keys": {
        "name": "QkdIke-Keys",
        "level_attr": "KEYS_LOG_LEVEL",
        "with_threads": False,
        "logger": None
    },
    "handshake": {
        "name": "QkdIke-Handshake",
        "level_attr": "HANDSHAKE_LOG_LEVEL",
        "with_threads": False,
        "logger": None
    },
    "transport": {
        "name": "QkdIke-Transport",
        "level_attr": "TRANSPORT_LOG_LEVEL",
        "with_threads": True,
        "logger": None
    },
    "bench": {
        "name": "QkdIke-Bench",
        "level_attr": "BENCH_LOG_LEVEL",
        "with_threads": False,
        "logger": None
    }
}


def update_loggers():
    global LOGGER_SPEC
    for name, spec in LOGGER_SPEC.items():
        verbosity = getattr(CONFIG, spec["level_attr"])
        spec["logger"] = get_logger(name=spec["name"], verbosity=verbosity, with_threads=spec["with_threads"])
        spec["logger"].disabled = verbosity == 0
        for handler in spec["logger"].handlers:
            if handler.__class__.__name__ == "StreamHandler":
                handler.setLevel(VERBOSITY_MAP.get(verbosity, VERBOSITY_MAP[4]))

update_loggers()

LOGGER_KMS = LOGGER_SPEC["kms"]["logger"]
LOGGER_CODEC = LOGGER_SPEC["codec"]["logger"]
LOGGER_KEYS = LOGGER_SPEC["keys"]["logger"]
LOGGER_HANDSHAKE = LOGGER_SPEC["handshake"]["logger"]
LOGGER_TRANSPORT = LOGGER_SPEC["transport"]["logger"]
LOGGER_BENCH = LOGGER_SPEC["bench"]["logger"]
