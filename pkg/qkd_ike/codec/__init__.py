from .IkeCodec import encode, decode, peek_header, encode_payloads, decode_payloads
from .SkProtection import seal, unseal, encode_protected, decode_protected, padded_length
