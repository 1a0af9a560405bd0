# Standard Libraries
# Third party packages
from pydantic import root_validator, conint
from pydantic.typing import Optional
# Local package
from qkd_ike.constants import EapCode, EAP_TYPE_EXPANDED, EAP_VENDOR_3GPP, EAP_VENDOR_TYPE_EAP_5G
from qkd_ike.fields import UINT8
from qkd_ike.models.BaseModels import WireModel
# Local module

__all__ = ['EapPacket']


class EapPacket(WireModel):
    """
    EAP packet as used by the EAP-5G stub.

    Requests and responses use the expanded type with the 3GPP vendor id, success and failure are
    bare 4 byte packets. body holds whatever follows the EAP-5G header.
    """

    code: conint(ge=1, le=4)
    identifier: UINT8
    length: conint(ge=4, le=65535)
    eap_type: Optional[UINT8]
    vendor_id: Optional[conint(ge=0, le=0xFFFFFF)]
    vendor_type: Optional[conint(ge=0, le=0xFFFFFFFF)]
    message_id: Optional[UINT8]
    body: bytes = b""

    @root_validator(allow_reuse=True)
    def validate_expanded_type(cls, values):
        if values.get("code") in (EapCode.REQUEST, EapCode.RESPONSE):
            if values.get("eap_type") != EAP_TYPE_EXPANDED:
                raise AssertionError(f"EAP type {values.get('eap_type')} is not the expanded type")
            if values.get("vendor_id") != EAP_VENDOR_3GPP or values.get("vendor_type") != EAP_VENDOR_TYPE_EAP_5G:
                raise AssertionError("EAP packet is not an EAP-5G packet")
        return values

    @property
    def is_success(self) -> bool:
        return self.code == EapCode.SUCCESS

    @property
    def is_failure(self) -> bool:
        return self.code == EapCode.FAILURE
