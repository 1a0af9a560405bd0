# Standard Libraries
import base64
import uuid
# Third party packages
from pydantic import root_validator, validator, Field
from pydantic.typing import Optional, List, Dict
# Local package
from qkd_ike.fields import SAE_ID, KME_ID, KEY_SIZE_BITS, KEY_COUNT, POSITIVE_INT, MILLISECONDS, PORT, GENERIC_OBJECT_NAME
from qkd_ike.validators import validate_fields_unique, validate_unique
from qkd_ike.models.BaseModels import BaseIkeModel, WireModel
# Local module

__all__ = [
    'SaeId', 'QkdKey', 'KeyContainer', 'KmeStatus', 'KeyReservation',
    'KeyRequest', 'KeyIdEntry', 'KeyIdsRequest', 'KmeConfig', 'KmsConfig'
]

SaeId = SAE_ID


class QkdKey(WireModel):

    key_id: uuid.UUID
    material: bytes

    @property
    def size_bits(self) -> int:
        return len(self.material) * 8

    def to_etsi(self) -> dict:
        return {"key_ID": str(self.key_id), "key": base64.b64encode(self.material).decode("ascii")}

    @classmethod
    def from_etsi(cls, data: dict) -> "QkdKey":
        return cls(key_id=uuid.UUID(data["key_ID"]), material=base64.b64decode(data["key"]))


class KeyContainer(WireModel):
    """Ordered keys as delivered by a KME. Order is significant downstream."""

    keys: List[QkdKey] = []

    _unique_ids = validator("keys", allow_reuse=True)(lambda v: validate_fields_unique(obj_list=v, fields=["key_id"]))

    def __len__(self):
        return len(self.keys)

    @property
    def key_ids(self) -> List[uuid.UUID]:
        return [k.key_id for k in self.keys]

    def to_etsi(self) -> dict:
        return {"keys": [k.to_etsi() for k in self.keys]}

    @classmethod
    def from_etsi(cls, data: dict) -> "KeyContainer":
        return cls(keys=[QkdKey.from_etsi(x) for x in data.get("keys", [])])


class KmeStatus(BaseIkeModel):

    source_kme_id: KME_ID
    target_kme_id: KME_ID
    master_sae_id: SAE_ID
    slave_sae_id: SAE_ID
    key_size_bits: KEY_SIZE_BITS
    stored_key_count: KEY_COUNT
    max_key_count: POSITIVE_INT
    max_key_per_request: POSITIVE_INT

    @root_validator(allow_reuse=True)
    def validate_count_within_capacity(cls, values):
        stored, capacity = values.get("stored_key_count"), values.get("max_key_count")
        if stored is not None and capacity is not None and stored > capacity:
            raise AssertionError(f"stored_key_count {stored} exceeds max_key_count {capacity}")
        return values

    def to_etsi(self) -> dict:
        return {
            "source_KME_ID": self.source_kme_id,
            "target_KME_ID": self.target_kme_id,
            "master_SAE_ID": self.master_sae_id,
            "slave_SAE_ID": self.slave_sae_id,
            "key_size": self.key_size_bits,
            "stored_key_count": self.stored_key_count,
            "max_key_count": self.max_key_count,
            "max_key_per_request": self.max_key_per_request,
            "max_key_size": self.key_size_bits,
            "min_key_size": self.key_size_bits,
            "max_SAE_ID_count": 0
        }

    @classmethod
    def from_etsi(cls, data: dict) -> "KmeStatus":
        return cls(
            source_kme_id=data["source_KME_ID"],
            target_kme_id=data["target_KME_ID"],
            master_sae_id=data["master_SAE_ID"],
            slave_sae_id=data["slave_SAE_ID"],
            key_size_bits=data["key_size"],
            stored_key_count=data["stored_key_count"],
            max_key_count=data["max_key_count"],
            max_key_per_request=data["max_key_per_request"]
        )


class KeyReservation(WireModel):

    key: QkdKey
    master_sae_id: SAE_ID
    slave_sae_id: SAE_ID
    reserved_ns: KEY_COUNT = 0


# ETSI GS QKD 014 request bodies. Range checks happen in the KME so that
# they map to the interface's own 400 response.

class KeyRequest(BaseIkeModel):

    number: int = 1
    size: Optional[int]


class KeyIdEntry(BaseIkeModel):

    key_ID: str


class KeyIdsRequest(BaseIkeModel):

    key_IDs: List[KeyIdEntry] = []


class KmeConfig(BaseIkeModel):

    kme_id: KME_ID
    sae_ids: List[SAE_ID]
    host: str = "127.0.0.1"
    port: PORT

    _unique_saes = validator("sae_ids", allow_reuse=True)(validate_unique)

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"


class KmsConfig(BaseIkeModel):

    kme_a: KmeConfig = KmeConfig(kme_id="KME-N3IWF-01", sae_ids=["N3IWF-001"], port=8001)
    kme_b: KmeConfig = KmeConfig(kme_id="KME-UE-01", sae_ids=["UE-001"], port=8002)
    key_size_bits: KEY_SIZE_BITS = 256
    capacity: POSITIVE_INT = 100000
    initial_keys: KEY_COUNT = 1000
    max_key_per_request: POSITIVE_INT = 128
    consumed_history: POSITIVE_INT = Field(default=10000, description="Consumed or expired key IDs each KME remembers")
    reservation_ttl_s: Optional[float] = Field(default=None, gt=0, description="Reservations older than this are discarded by the next get_keys")
    generation_rate: float = Field(default=0.0, ge=0, description="Keys per second added by the background link, 0 disables")
    request_latency_ms: MILLISECONDS = 0.0
    seed: Optional[int] = Field(default=None, description="Deterministic key source for tests")
    sae_id_header: GENERIC_OBJECT_NAME = "X-SAE-ID"

    @root_validator(allow_reuse=True)
    def validate_initial_within_capacity(cls, values):
        initial, capacity = values.get("initial_keys"), values.get("capacity")
        if initial is not None and capacity is not None and initial > capacity:
            raise AssertionError(f"initial_keys {initial} exceeds capacity {capacity}")
        return values

    @root_validator(allow_reuse=True)
    def validate_kme_saes_disjoint(cls, values):
        a, b = values.get("kme_a"), values.get("kme_b")
        if a is not None and b is not None:
            validate_unique(values=list(a.sae_ids) + list(b.sae_ids))
            validate_unique(values=[a.kme_id, b.kme_id])
        return values
