"""
SA key production for the three modes.

Classical modes derive keys from the DH shared secret with prf+. QKD mode assigns delivered keys to
slots by position, without any PRF mixing.
"""
# Standard Libraries
# Third party packages
from pydantic.typing import List, Optional, Tuple
# Local package
from qkd_ike.config import LOGGER_KEYS
from qkd_ike.constants import SLOT_KEY_LENGTH
from qkd_ike.exceptions import KeyPlanError
from qkd_ike.models.kms import KeyContainer
from qkd_ike.models.keys import (
    IkeSaKeys, ChildSaKeys, KeyAssignmentPlan, AuthSecret, CryptoCounters, IKE_SLOTS, CHILD_SLOTS, AUTH_SLOT
)
# Local module
from .prf import prf, prf_plus

LOGGER = LOGGER_KEYS

CLASSICAL_IKE_KEY_NAMES = ["sk_d", "sk_ai", "sk_ar", "sk_ei", "sk_er", "sk_pi", "sk_pr"]
CLASSICAL_CHILD_KEY_NAMES = ["enc_i", "int_i", "enc_r", "int_r"]


def _split(keymat: bytes, names: List[str], width: int) -> dict:
    return {name: keymat[i * width:(i + 1) * width] for i, name in enumerate(names)}


def derive_classical_ike_keys(shared_secret: bytes, nonce_i: bytes, nonce_r: bytes, spi_i: bytes, spi_r: bytes,
                              counters: Optional[CryptoCounters] = None) -> IkeSaKeys:
    """SKEYSEED = prf(Ni | Nr, g^ir), then SK_d | SK_ai | SK_ar | SK_ei | SK_er | SK_pi | SK_pr from prf+."""
    skeyseed = prf(key=nonce_i + nonce_r, data=shared_secret, counters=counters)
    width = SLOT_KEY_LENGTH
    keymat = prf_plus(
        key=skeyseed, seed=nonce_i + nonce_r + spi_i + spi_r, out_len=len(CLASSICAL_IKE_KEY_NAMES) * width,
        counters=counters
    )
    return IkeSaKeys(**_split(keymat=keymat, names=CLASSICAL_IKE_KEY_NAMES, width=width))


def derive_classical_child_keys(sk_d: bytes, nonce_i: bytes, nonce_r: bytes,
                                counters: Optional[CryptoCounters] = None) -> ChildSaKeys:
    """KEYMAT = prf+(SK_d, Ni | Nr), taken in the order encryption and integrity for I->R, then R->I."""
    width = SLOT_KEY_LENGTH
    keymat = prf_plus(
        key=sk_d, seed=nonce_i + nonce_r, out_len=len(CLASSICAL_CHILD_KEY_NAMES) * width, counters=counters
    )
    return ChildSaKeys(**_split(keymat=keymat, names=CLASSICAL_CHILD_KEY_NAMES, width=width))


def assign_qkd_keys(container: KeyContainer, plan: KeyAssignmentPlan) -> Tuple[IkeSaKeys, List[ChildSaKeys], Optional[AuthSecret]]:
    """
    Key i of the container fills slot i of the plan.

    Keys longer than the slot width are cut to it. Reserve slots are left unused.
    """
    if len(container) != plan.slot_count:
        msg = f"Container holds {len(container)} keys, plan has {plan.slot_count} slots"
        LOGGER.error(msg)
        raise KeyPlanError(msg)
    width = plan.slot_width
    short = [i for i, key in enumerate(container.keys) if len(key.material) < width]
    if short:
        msg = f"Keys at positions {short} are shorter than the {width} byte slot width"
        LOGGER.error(msg)
        raise KeyPlanError(msg)
    material = dict(zip(plan.slots, [key.material[:width] for key in container.keys]))
    ike_keys = IkeSaKeys(**{name: material[name] for name in IKE_SLOTS})
    child_keys = [
        ChildSaKeys(**{name: material[f"child{index}.{name}"] for name in CHILD_SLOTS})
        for index in range(1, plan.child_sa_count + 1)
    ]
    auth_secret = AuthSecret(material=material[AUTH_SLOT], source="qkd") if plan.include_auth_key else None
    LOGGER.debug(f"Assigned {plan.slot_count} QKD keys: IKE SA {ike_keys.fingerprint()}")
    return ike_keys, child_keys, auth_secret
