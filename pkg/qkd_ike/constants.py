# Standard Libraries
import struct
from enum import IntEnum
# Third party packages
# Local package
# Local module

IKE_VERSION = (2 << 4 | 0)  # Major << 4 | Minor

# SPIi, SPIr, NextPayload, Version, ExchangeType, Flags, MessageID, Length
IKE_HEADER = struct.Struct("!8s8sBBBBLL")
# NextPayload, Critical|Reserved, PayloadLength
PAYLOAD_HEADER = struct.Struct("!BBH")
# Last(0) or 2, Reserved, ProposalLength, Num, ProtocolID, SPI Size, NumTransforms
PROPOSAL_HEADER = struct.Struct("!BBHBBBB")
# Last(0) or 3, Reserved, TransformLength, TransformType, Reserved, TransformID
TRANSFORM_HEADER = struct.Struct("!BBHBBH")
# AF|AttributeType, Value
TRANSFORM_ATTRIBUTE = struct.Struct("!HH")
# TS Type, IP Protocol, Selector Length, Start Port, End Port
TS_HEADER = struct.Struct("!BBHHH")
# Reserved|AttributeType, Length
CP_ATTRIBUTE_HEADER = struct.Struct("!HH")

IKE_HEADER_LENGTH = IKE_HEADER.size
PAYLOAD_HEADER_LENGTH = PAYLOAD_HEADER.size
CRITICAL_FLAG = 0x80
FLAG_INITIATOR = 0b00001000
FLAG_RESPONSE = 0b00100000
KEY_LENGTH_ATTRIBUTE = 0x8000 | 14

MAX_PAYLOAD_LENGTH = 0xFFFF
MAX_DATAGRAM_LENGTH = 65507

# Fixed algorithm suite: AES-256-CBC, HMAC-SHA-256-128, HMAC-SHA-256
SK_IV_LENGTH = 16
SK_BLOCK_LENGTH = 16
SK_ICV_LENGTH = 16
SLOT_KEY_LENGTH = 32
PRF_OUTPUT_LENGTH = 32


class PayloadType(IntEnum):
    NONE = 0
    SA = 33
    KE = 34
    IDi = 35
    IDr = 36
    CERT = 37
    CERTREQ = 38
    AUTH = 39
    NONCE = 40
    NOTIFY = 41
    DELETE = 42
    VENDOR = 43
    TSi = 44
    TSr = 45
    SK = 46
    CP = 47
    EAP = 48


class ExchangeType(IntEnum):
    IKE_SA_INIT = 34
    IKE_AUTH = 35
    CREATE_CHILD_SA = 36
    INFORMATIONAL = 37


class ProtocolId(IntEnum):
    NONE = 0
    IKE = 1
    AH = 2
    ESP = 3


class TransformType(IntEnum):
    ENCR = 1
    PRF = 2
    INTEG = 3
    DH = 4
    ESN = 5


TRANSFORMS = dict(
    ENCR_AES_CBC=(TransformType.ENCR, 12),
    PRF_HMAC_SHA2_256=(TransformType.PRF, 5),
    AUTH_HMAC_SHA2_256_128=(TransformType.INTEG, 12),
    DH_GROUP_14=(TransformType.DH, 14),
    NO_ESN=(TransformType.ESN, 0),
)
ENCR_KEY_LENGTH_BITS = 256


class NotifyType(IntEnum):
    UNSUPPORTED_CRITICAL_PAYLOAD = 1
    INVALID_SYNTAX = 7
    NO_PROPOSAL_CHOSEN = 14
    INVALID_KE_PAYLOAD = 17
    AUTHENTICATION_FAILED = 24
    # Private use error: the responder could not obtain QKD keys
    KMS_UNAVAILABLE = 8192
    # Private use error: key confirmation tag mismatch
    KEY_CONFIRMATION_FAILED = 8193
    NAT_DETECTION_SOURCE_IP = 16388
    NAT_DETECTION_DESTINATION_IP = 16389
    IKEV2_FRAGMENTATION_SUPPORTED = 16430
    SIGNATURE_HASH_ALGORITHMS = 16431
    # Private use status types
    QKD_KEY_IDS = 40960
    QKD_KEY_CONTEXT = 40961

    @property
    def is_error(self) -> bool:
        return self.value < 16384


class HashAlgorithm(IntEnum):
    SHA2_256 = 2
    SHA2_384 = 3
    SHA2_512 = 4


class AuthMethod(IntEnum):
    RSA_SIGNATURE = 1
    SHARED_KEY = 2


class IdType(IntEnum):
    IPV4_ADDR = 1
    FQDN = 2
    RFC822_ADDR = 3
    KEY_ID = 11


class CertEncoding(IntEnum):
    X509_SIGNATURE = 4


class TsType(IntEnum):
    IPV4_ADDR_RANGE = 7


class CfgType(IntEnum):
    CFG_REQUEST = 1
    CFG_REPLY = 2


class CfgAttribute(IntEnum):
    INTERNAL_IP4_ADDRESS = 1
    INTERNAL_IP4_NETMASK = 2


class EapCode(IntEnum):
    REQUEST = 1
    RESPONSE = 2
    SUCCESS = 3
    FAILURE = 4


EAP_TYPE_EXPANDED = 254
EAP_VENDOR_3GPP = 10415
EAP_VENDOR_TYPE_EAP_5G = 3
# Code, Identifier, Length, Type, Vendor-Id(3), Vendor-Type, Message-Id, Spare
EAP_5G_HEADER = struct.Struct("!BBHB3sLBB")
EAP_HEADER = struct.Struct("!BBH")


class Eap5gMessageId(IntEnum):
    START = 1
    NAS = 2
    NOTIFICATION = 3
    STOP = 4
