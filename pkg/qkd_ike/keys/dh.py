# Standard Libraries
import random
import secrets
# Third party packages
from pydantic.typing import Tuple, Optional, Union
# Local package
from qkd_ike.config import LOGGER_KEYS
from qkd_ike.exceptions import DhWeakValueError
from qkd_ike.models.keys import DhGroup, CryptoCounters
# Local module

LOGGER = LOGGER_KEYS

# RFC 3526, 2048-bit MODP group
MODP_2048_PRIME = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD1"
    "29024E088A67CC74020BBEA63B139B22514A08798E3404DD"
    "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245"
    "E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3D"
    "C2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F"
    "83655D23DCA3AD961C62F356208552BB9ED529077096966D"
    "670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9"
    "DE2BCBF6955817183995497CEA956AE515D2261898FA0510"
    "15728E5A8AACAA68FFFFFFFFFFFFFFFF",
    16
)

MODP_2048 = DhGroup(group_id=14, prime=MODP_2048_PRIME, generator=2)
# Textbook group for arithmetic checks, never negotiated
TOY_GROUP = DhGroup(group_id=0, prime=23, generator=5)

Rng = Union[random.Random, secrets.SystemRandom]


def dh_public(private: int, group: DhGroup, counters: Optional[CryptoCounters] = None) -> int:
    if counters is not None:
        counters.modexp += 1
    return pow(group.generator, private, group.prime)


def dh_keypair(group: DhGroup = MODP_2048, rng: Rng = None, counters: Optional[CryptoCounters] = None) -> Tuple[int, int]:
    """
    Generates a private exponent in [2, p-2] and the matching public value.

    Exponents are full size so the exponentiation cost matches real stacks.
    """
    rng = rng or secrets.SystemRandom()
    private = rng.randrange(2, group.prime - 1)
    return private, dh_public(private=private, group=group, counters=counters)


def validate_public(value: int, group: DhGroup) -> int:
    if value in (0, 1, group.prime - 1) or value < 0 or value >= group.prime:
        msg = f"Weak or out of range DH public value for group {group.group_id}"
        LOGGER.error(msg)
        raise DhWeakValueError(msg)
    return value


def dh_shared_secret(private: int, peer_public: int, group: DhGroup = MODP_2048, counters: Optional[CryptoCounters] = None) -> bytes:
    """Shared secret g^ir as a big-endian octet string of the prime's length."""
    validate_public(value=peer_public, group=group)
    if counters is not None:
        counters.modexp += 1
    secret = pow(peer_public, private, group.prime)
    return secret.to_bytes(group.byte_length, "big")


def public_to_bytes(value: int, group: DhGroup) -> bytes:
    return value.to_bytes(group.byte_length, "big")


def public_from_bytes(data: bytes, group: DhGroup) -> int:
    if len(data) != group.byte_length:
        msg = f"DH public value is {len(data)} bytes, group {group.group_id} needs {group.byte_length}"
        LOGGER.error(msg)
        raise DhWeakValueError(msg)
    return validate_public(value=int.from_bytes(data, "big"), group=group)
