# Standard Libraries
import copy
import pathlib
# Third party packages
from pydantic import ValidationError
from pydantic.typing import Union, Optional, Dict, Any
# Local package
from qkd_ike.models.bench import BenchConfig
# Local module
from .BaseLoader import BaseLoader


class ConfigLoader(BaseLoader):
    """
    Builds a BenchConfig from an optional file and command line overrides.

    Override keys are dotted paths into the config, e.g. ``transport.kind``. ``None`` values
    mean the flag was not given and are skipped.
    """

    def __init__(self, input_file: Optional[Union[str, pathlib.Path]] = None):
        super(ConfigLoader, self).__init__()
        self.input_file = None if input_file is None else self.resolve_path(path=input_file)

    def apply_overrides(self, data: dict, overrides: Dict[str, Any]) -> dict:
        data = copy.deepcopy(data)
        for key, value in overrides.items():
            if value is None:
                continue
            *parents, leaf = key.split(".")
            target = data
            for parent in parents:
                child = target.get(parent)
                if child is None:
                    child = target[parent] = {}
                elif not isinstance(child, dict):
                    msg = f"Cannot override '{key}', '{parent}' is not a mapping"
                    self.logger.error(msg)
                    raise ValueError(msg)
                target = child
            self.logger.debug(f"Override {key}={value!r}")
            target[leaf] = value
        return data

    def load(self, overrides: Dict[str, Any] = None) -> BenchConfig:
        data = {} if self.input_file is None else self.load_document(path=self.input_file)
        data = self.apply_overrides(data=data, overrides=overrides or {})
        try:
            return BenchConfig.parse_obj(data)
        except ValidationError as e:
            self.logger.error(f"Invalid benchmark configuration: {e}")
            raise
