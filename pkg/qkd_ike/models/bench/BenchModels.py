# Standard Libraries
import math
# Third party packages
from pydantic import root_validator, validator, Field, conint
from pydantic.typing import List, Optional, Literal, Dict
# Local package
from qkd_ike.fields import MODE, PHASE, POSITIVE_INT, KEY_ID_ENCODING, MILLISECONDS
from qkd_ike.validators import validate_unique
from qkd_ike.models.BaseModels import BaseIkeModel
from qkd_ike.models.kms import KmsConfig
from qkd_ike.models.transport import TransportConfig
from qkd_ike.models.handshake import SaPlan, EapRoundPlan, HandshakeConfig
# Local module

__all__ = ['BenchConfig', 'PhaseStats', 'OverheadRow', 'OverheadTable', 'DhCostReport', 'BenchReport']

ALL_MODES = ["DH_PSK", "DH_CERT", "QKD"]
FRAMING_BYTES = 42


class BenchConfig(BaseIkeModel):

    modes: List[MODE] = list(ALL_MODES)
    iterations: POSITIVE_INT = 100
    sa_plan: SaPlan = SaPlan()
    eap: EapRoundPlan = EapRoundPlan()
    kms: KmsConfig = KmsConfig()
    kms_endpoint: Literal["local", "http"] = "local"
    kms_latency_ms: MILLISECONDS = 0.0
    transport: TransportConfig = TransportConfig()
    key_count_override: Optional[POSITIVE_INT]
    key_id_encoding: KEY_ID_ENCODING = "raw"
    include_framing: bool = True
    framing_bytes: conint(ge=0) = FRAMING_BYTES
    dh_iterations: conint(ge=10) = 100
    output_dir: str = "bench-results"
    seed: Optional[int]

    _unique_modes = validator("modes", allow_reuse=True)(validate_unique)

    @validator("modes", allow_reuse=True)
    def validate_modes_present(cls, value):
        if len(value) == 0:
            raise AssertionError("At least one mode must be benchmarked")
        return value

    @root_validator(allow_reuse=True)
    def validate_kms_for_qkd(cls, values):
        if "QKD" in (values.get("modes") or []) and values.get("kms") is None:
            raise AssertionError("QKD mode requires KMS endpoints")
        return values

    @property
    def effective_framing(self) -> int:
        return self.framing_bytes if self.include_framing else 0

    def handshake_config(self, mode: str, iteration: int = 0) -> HandshakeConfig:
        return HandshakeConfig(
            mode=mode,
            sa_plan=self.sa_plan,
            eap=self.eap,
            transport=self.transport,
            kms=self.kms,
            kms_endpoint=self.kms_endpoint,
            kms_latency_ms=self.kms_latency_ms,
            key_count_override=self.key_count_override,
            key_id_encoding=self.key_id_encoding,
            seed=None if self.seed is None else self.seed + iteration
        )

    @property
    def qkd_key_demand(self) -> int:
        """Keys a QKD run of this bench draws from the KMS, 0 when QKD is not benchmarked."""
        if "QKD" not in self.modes:
            return 0
        return self.iterations * self.handshake_config(mode="QKD").assignment_plan().slot_count


class PhaseStats(BaseIkeModel):

    mode: MODE
    phase: Literal["INIT", "AUTH", "CHILD_SA"]
    count: POSITIVE_INT
    mean_ms: float
    std_ms: float
    min_ms: float
    q1_ms: float
    median_ms: float
    q3_ms: float
    max_ms: float
    outliers: List[float] = []

    @root_validator(skip_on_failure=True, allow_reuse=True)
    def validate_ordering(cls, values):
        # Tolerance for float summation in the mean
        eps = 1e-9 * max(1.0, abs(values["max_ms"]))
        if not values["min_ms"] - eps <= values["mean_ms"] <= values["max_ms"] + eps:
            raise AssertionError(f"mean {values['mean_ms']} outside [{values['min_ms']}, {values['max_ms']}]")
        if not values["min_ms"] <= values["q1_ms"] <= values["median_ms"] <= values["q3_ms"] <= values["max_ms"]:
            raise AssertionError("Quartiles are not ordered")
        if not math.isfinite(values["std_ms"]):
            raise AssertionError("Standard deviation must be finite")
        return values

    @property
    def iqr_ms(self) -> float:
        return self.q3_ms - self.q1_ms


class OverheadRow(BaseIkeModel):

    label: str
    bytes: Dict[MODE, Optional[int]] = {}


class OverheadTable(BaseIkeModel):
    """Per message sizes per mode. The total row is always derived from the rows."""

    modes: List[MODE]
    framing_bytes: conint(ge=0) = 0
    rows: List[OverheadRow] = []

    @property
    def totals(self) -> Dict[str, int]:
        return {mode: sum(row.bytes.get(mode) or 0 for row in self.rows) for mode in self.modes}

    @property
    def labels(self) -> List[str]:
        return [row.label for row in self.rows]

    def size(self, label: str, mode: str) -> Optional[int]:
        for row in self.rows:
            if row.label == label:
                return row.bytes.get(mode)
        return None


class DhCostReport(BaseIkeModel):

    group_id: int
    iterations: conint(ge=10)
    keypair_mean_ms: float = Field(ge=0)
    shared_secret_mean_ms: float = Field(ge=0)

    @property
    def modexp_mean_ms(self) -> float:
        return (self.keypair_mean_ms + self.shared_secret_mean_ms) / 2

    @property
    def predicted_init_gap_ms(self) -> float:
        """Two exponentiations on each end of the exchange, all on the critical path."""
        return 2 * (self.keypair_mean_ms + self.shared_secret_mean_ms)


class BenchReport(BaseIkeModel):

    config: BenchConfig
    stats: List[PhaseStats] = []
    overhead: Optional[OverheadTable]
    failures: Dict[MODE, int] = {}
    failure_statuses: Dict[MODE, List[str]] = {}
    dh_cost: Optional[DhCostReport]
    measured_init_gap_ms: Dict[MODE, float] = {}
    output_files: List[str] = []

    @property
    def success(self) -> bool:
        return sum(self.failures.values()) == 0

    def stats_for(self, mode: str, phase: str) -> Optional[PhaseStats]:
        for stats in self.stats:
            if stats.mode == mode and stats.phase == phase:
                return stats
        return None
