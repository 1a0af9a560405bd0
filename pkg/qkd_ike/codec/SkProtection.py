"""
Encrypted payload (SK) protection with AES-256-CBC and HMAC-SHA-256-128.

The integrity tag covers the associated data (IKE header and SK generic header), the IV and the ciphertext.
"""
# Standard Libraries
import hashlib
import hmac
import os
# Third party packages
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from pydantic.typing import List, Tuple
# Local package
from qkd_ike.config import LOGGER_CODEC
from qkd_ike.constants import (
    IKE_HEADER_LENGTH, PAYLOAD_HEADER, PAYLOAD_HEADER_LENGTH, SK_IV_LENGTH, SK_BLOCK_LENGTH, SK_ICV_LENGTH, PayloadType
)
from qkd_ike.exceptions import IkeIntegrityError, IkeParseError
from qkd_ike.models.ike import IkeHeader, IkeMessage, SkPayload
from qkd_ike.models.keys import DirectionalKeys
# Local module
from .IkeCodec import encode_payloads, encode_header, decode, decode_payloads

LOGGER = LOGGER_CODEC


def padded_length(plaintext_length: int) -> int:
    """Ciphertext length for a plaintext, accounting for the trailing Pad Length octet."""
    return -(-(plaintext_length + 1) // SK_BLOCK_LENGTH) * SK_BLOCK_LENGTH


def _integrity_tag(keys: DirectionalKeys, data: bytes) -> bytes:
    return hmac.new(keys.integrity, data, hashlib.sha256).digest()[:SK_ICV_LENGTH]


def seal(plaintext: bytes, keys: DirectionalKeys, aad: bytes = b"", iv: bytes = None, inner_type: int = 0) -> SkPayload:
    """Encrypts and authenticates plaintext with one direction of an SA."""
    iv = os.urandom(SK_IV_LENGTH) if iv is None else iv
    pad_length = padded_length(len(plaintext)) - len(plaintext) - 1
    padded = plaintext + bytes(pad_length) + bytes([pad_length])
    encryptor = Cipher(algorithms.AES(keys.encryption), modes.CBC(iv)).encryptor()
    ciphertext = encryptor.update(padded) + encryptor.finalize()
    tag = _integrity_tag(keys=keys, data=aad + iv + ciphertext)
    return SkPayload(inner_type=inner_type, iv=iv, ciphertext=ciphertext, integrity_tag=tag)


def unseal(sk: SkPayload, keys: DirectionalKeys, aad: bytes = b"") -> bytes:
    """Verifies and decrypts an SK payload. Raises IkeIntegrityError when anything does not check out."""
    expected = _integrity_tag(keys=keys, data=aad + sk.iv + sk.ciphertext)
    if not hmac.compare_digest(expected, sk.integrity_tag):
        msg = "Integrity check of encrypted payload failed"
        LOGGER.error(msg)
        raise IkeIntegrityError(msg)
    decryptor = Cipher(algorithms.AES(keys.encryption), modes.CBC(sk.iv)).decryptor()
    padded = decryptor.update(sk.ciphertext) + decryptor.finalize()
    pad_length = padded[-1]
    if pad_length + 1 > len(padded):
        msg = f"Invalid pad length {pad_length}"
        LOGGER.error(msg)
        raise IkeIntegrityError(msg)
    return padded[:len(padded) - pad_length - 1]


def encode_protected(header: IkeHeader, payloads: list, keys: DirectionalKeys, iv: bytes = None) -> bytes:
    """Encodes a message whose payloads all travel inside one SK payload."""
    inner_type, plaintext = encode_payloads(payloads)
    iv = os.urandom(SK_IV_LENGTH) if iv is None else iv
    sk_length = PAYLOAD_HEADER_LENGTH + SK_IV_LENGTH + padded_length(len(plaintext)) + SK_ICV_LENGTH
    aad = encode_header(header=header, next_payload=PayloadType.SK.value, length=IKE_HEADER_LENGTH + sk_length)
    aad += PAYLOAD_HEADER.pack(inner_type, 0, sk_length)
    sk = seal(plaintext=plaintext, keys=keys, aad=aad, iv=iv, inner_type=inner_type)
    return aad + sk.iv + sk.ciphertext + sk.integrity_tag


def decode_protected(data: bytes, keys: DirectionalKeys) -> Tuple[IkeMessage, List]:
    """
    Decodes a protected message and opens its SK payload.

    Returns: The outer message and the decrypted inner payloads.
    """
    data = bytes(data)
    message = decode(data)
    if not message.payloads or not isinstance(message.payloads[-1], SkPayload):
        raise IkeParseError("Message carries no encrypted payload", offset=IKE_HEADER_LENGTH)
    sk = message.payloads[-1]
    sk_length = PAYLOAD_HEADER_LENGTH + len(sk.iv) + len(sk.ciphertext) + len(sk.integrity_tag)
    sk_offset = len(data) - sk_length
    aad = data[:sk_offset + PAYLOAD_HEADER_LENGTH]
    plaintext = unseal(sk=sk, keys=keys, aad=aad)
    inner = decode_payloads(data=plaintext, first_type=sk.inner_type, base_offset=sk_offset + PAYLOAD_HEADER_LENGTH)
    return message, inner
