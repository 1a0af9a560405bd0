# Standard Libraries
import json
import uuid
import yaml
# Third party packages
from pydantic import BaseModel, Extra
# Local package
from qkd_ike.utils.CustomYamlDumper import CustomYamlDumper
# Local module

__all__ = ['BaseIkeModel', 'WireModel']


class BaseIkeModel(BaseModel):
    """Base qkd_ike Model Class"""

    class Config:
        extra = Extra.forbid
        anystr_strip_whitespace = True
        validate_assignment = True
        smart_union = True
        json_encoders = {
            bytes: lambda v: v.hex(),
            uuid.UUID: str
        }

    def serial_dict(self, exclude_none: bool = False, **kwargs):
        return json.loads(self.json(exclude_none=exclude_none, **kwargs))

    def yaml(self, indent: int = 2, exclude_none: bool = False, **kwargs):
        data_dict = self.serial_dict(exclude_none=exclude_none, **kwargs)
        return yaml.dump(data=data_dict, Dumper=CustomYamlDumper, indent=indent)


class WireModel(BaseIkeModel):
    """Base class of wire-level structures (IKE payloads, keys). Binary fields are kept verbatim."""

    class Config:
        anystr_strip_whitespace = False
        validate_assignment = False
