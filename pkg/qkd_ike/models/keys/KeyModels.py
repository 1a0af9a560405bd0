# Standard Libraries
import hashlib
# Third party packages
from pydantic import root_validator, conint
from pydantic.typing import List, Optional, Literal
# Local package
from qkd_ike.constants import SLOT_KEY_LENGTH
from qkd_ike.fields import KEY_MATERIAL, POSITIVE_INT, KEY_COUNT, ROLE
from qkd_ike.validators import required_together
from qkd_ike.models.BaseModels import BaseIkeModel, WireModel
# Local module

__all__ = [
    'DhGroup', 'DirectionalKeys', 'IkeSaKeys', 'ChildSaKeys', 'KeyAssignmentPlan', 'AuthSecret', 'CryptoCounters',
    'fingerprint', 'IKE_SLOTS', 'CHILD_SLOTS', 'AUTH_SLOT'
]


def fingerprint(*parts: bytes) -> str:
    """Short SHA-256 digest used to compare key sets without exposing them."""
    digest = hashlib.sha256()
    for part in parts:
        digest.update(len(part).to_bytes(2, "big"))
        digest.update(part)
    return digest.hexdigest()[:32]


class DhGroup(BaseIkeModel):

    group_id: conint(ge=0, le=65535)
    prime: conint(gt=3)
    generator: conint(ge=2)

    @property
    def byte_length(self) -> int:
        return (self.prime.bit_length() + 7) // 8


class DirectionalKeys(WireModel):
    """Keys protecting one traffic direction of an SA."""

    encryption: KEY_MATERIAL
    integrity: KEY_MATERIAL


class _SaKeysMixin(object):

    def outbound(self, role: ROLE) -> DirectionalKeys:
        return self.initiator_keys() if role == "initiator" else self.responder_keys()

    def inbound(self, role: ROLE) -> DirectionalKeys:
        return self.responder_keys() if role == "initiator" else self.initiator_keys()


class IkeSaKeys(_SaKeysMixin, WireModel):

    sk_ei: KEY_MATERIAL
    sk_er: KEY_MATERIAL
    sk_ai: KEY_MATERIAL
    sk_ar: KEY_MATERIAL
    sk_d: Optional[KEY_MATERIAL]
    sk_pi: Optional[KEY_MATERIAL]
    sk_pr: Optional[KEY_MATERIAL]

    _derived_together = root_validator(allow_reuse=True)(
        lambda cls, values: required_together(values=values, required=["sk_d", "sk_pi", "sk_pr"])
    )

    @property
    def is_classical(self) -> bool:
        return self.sk_d is not None

    def initiator_keys(self) -> DirectionalKeys:
        return DirectionalKeys(encryption=self.sk_ei, integrity=self.sk_ai)

    def responder_keys(self) -> DirectionalKeys:
        return DirectionalKeys(encryption=self.sk_er, integrity=self.sk_ar)

    def fingerprint(self) -> str:
        parts = [self.sk_ei, self.sk_er, self.sk_ai, self.sk_ar]
        if self.is_classical:
            parts.extend([self.sk_d, self.sk_pi, self.sk_pr])
        return fingerprint(*parts)


class ChildSaKeys(_SaKeysMixin, WireModel):

    enc_i: KEY_MATERIAL
    enc_r: KEY_MATERIAL
    int_i: KEY_MATERIAL
    int_r: KEY_MATERIAL

    def initiator_keys(self) -> DirectionalKeys:
        return DirectionalKeys(encryption=self.enc_i, integrity=self.int_i)

    def responder_keys(self) -> DirectionalKeys:
        return DirectionalKeys(encryption=self.enc_r, integrity=self.int_r)

    def fingerprint(self) -> str:
        return fingerprint(self.enc_i, self.enc_r, self.int_i, self.int_r)


IKE_SLOTS = ["sk_ei", "sk_er", "sk_ai", "sk_ar"]
CHILD_SLOTS = ["enc_i", "enc_r", "int_i", "int_r"]
AUTH_SLOT = "auth"


class KeyAssignmentPlan(BaseIkeModel):
    """
    Positional mapping of an ordered QKD key list to SA key slots.

    Slots are the four IKE SA keys, four keys per Child SA in creation order, the authentication
    key when used, and finally any reserve keys requested on top of the plan.
    """

    child_sa_count: POSITIVE_INT = 2
    include_auth_key: bool = True
    reserve_count: KEY_COUNT = 0
    slot_width: POSITIVE_INT = SLOT_KEY_LENGTH

    @property
    def slots(self) -> List[str]:
        slots = list(IKE_SLOTS)
        for child_index in range(1, self.child_sa_count + 1):
            slots.extend([f"child{child_index}.{name}" for name in CHILD_SLOTS])
        if self.include_auth_key:
            slots.append(AUTH_SLOT)
        slots.extend([f"reserve{i}" for i in range(1, self.reserve_count + 1)])
        return slots

    @property
    def required_count(self) -> int:
        return 4 + 4 * self.child_sa_count + (1 if self.include_auth_key else 0)

    @property
    def slot_count(self) -> int:
        return self.required_count + self.reserve_count

    def index_of(self, slot: str) -> int:
        return self.slots.index(slot)


class AuthSecret(WireModel):

    material: KEY_MATERIAL
    source: Literal["psk", "eap_msk", "qkd"]


class CryptoCounters(BaseIkeModel):
    """Per-session instrumentation of the key establishment cost."""

    modexp: KEY_COUNT = 0
    prf: KEY_COUNT = 0
    prf_plus: KEY_COUNT = 0
    kms_calls: KEY_COUNT = 0

    class Config:
        validate_assignment = False

    def merged(self, other: "CryptoCounters") -> "CryptoCounters":
        return CryptoCounters(
            modexp=self.modexp + other.modexp,
            prf=self.prf + other.prf,
            prf_plus=self.prf_plus + other.prf_plus,
            kms_calls=self.kms_calls + other.kms_calls
        )
