from pydantic import constr, conint, conbytes, confloat
from pydantic.typing import Literal


SAE_ID = constr(strip_whitespace=True, min_length=1, regex=r"^\S+$")
KME_ID = constr(strip_whitespace=True, min_length=1, regex=r"^\S+$")
GENERIC_OBJECT_NAME = constr(strip_whitespace=True, regex=r"\S+")

KEY_SIZE_BITS = conint(gt=0, multiple_of=8)
KEY_COUNT = conint(ge=0)
POSITIVE_INT = conint(ge=1)
PORT = conint(ge=0, le=65535)
UINT8 = conint(ge=0, le=255)
UINT16 = conint(ge=0, le=65535)
UINT32 = conint(ge=0, le=4294967295)
MESSAGE_ID = UINT32
NOTIFY_TYPE = UINT16
MILLISECONDS = confloat(ge=0)
PROBABILITY = confloat(ge=0, le=1)

IKE_SPI = conbytes(min_length=8, max_length=8)
NONCE = conbytes(min_length=16, max_length=256)
KEY_MATERIAL = conbytes(min_length=1)

MODE = Literal["DH_PSK", "DH_CERT", "QKD"]
PHASE = Literal["INIT", "AUTH", "CHILD_SA"]
ROLE = Literal["initiator", "responder"]
TRANSPORT_KIND = Literal["memory", "udp"]
KEY_ID_ENCODING = Literal["raw", "text"]
