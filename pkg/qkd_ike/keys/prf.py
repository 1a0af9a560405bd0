# Standard Libraries
import hashlib
import hmac
# Third party packages
from pydantic.typing import Optional
# Local package
from qkd_ike.config import LOGGER_KEYS
from qkd_ike.constants import PRF_OUTPUT_LENGTH
from qkd_ike.exceptions import PrfParameterError
from qkd_ike.models.keys import CryptoCounters
# Local module

LOGGER = LOGGER_KEYS

PRF_PLUS_MAX_LENGTH = 255 * PRF_OUTPUT_LENGTH


def prf(key: bytes, data: bytes, counters: Optional[CryptoCounters] = None) -> bytes:
    """PRF_HMAC_SHA2_256"""
    if counters is not None:
        counters.prf += 1
    return hmac.new(key, data, hashlib.sha256).digest()


def prf_plus(key: bytes, seed: bytes, out_len: int, counters: Optional[CryptoCounters] = None) -> bytes:
    """
    Iterated expansion T1 = prf(K, S | 0x01), Tn = prf(K, Tn-1 | S | n).

    Args:
        key: PRF key
        seed: S
        out_len: Number of octets to produce, at most 255 blocks

    Returns: out_len octets of keying material

    """
    if out_len < 0 or out_len > PRF_PLUS_MAX_LENGTH:
        msg = f"prf+ cannot produce {out_len} octets, limit is {PRF_PLUS_MAX_LENGTH}"
        LOGGER.error(msg)
        raise PrfParameterError(msg)
    if counters is not None:
        counters.prf_plus += 1
    output = b""
    block = b""
    counter = 1
    while len(output) < out_len:
        block = hmac.new(key, block + seed + bytes([counter]), hashlib.sha256).digest()
        output += block
        counter += 1
    return output[:out_len]
