from .dh import MODP_2048, TOY_GROUP, dh_keypair, dh_public, dh_shared_secret, public_to_bytes, public_from_bytes
from .prf import prf, prf_plus
from .KeySchedule import derive_classical_ike_keys, derive_classical_child_keys, assign_qkd_keys
from .auth import SigningIdentity, generate_self_signed, cached_identity, signed_octets, compute_auth, verify_auth
