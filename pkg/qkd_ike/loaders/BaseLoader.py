# Standard Libraries
import pathlib
# Third party packages
import yaml
from pydantic.typing import Union
# Local package
from qkd_ike.utils import get_logger
# Local module


class BaseLoader(object):

    def __init__(self):
        self.logger = get_logger(name="QkdIke-Loader", verbosity=3)

    def resolve_path(self, path: Union[str, pathlib.Path]) -> pathlib.Path:
        if not isinstance(path, pathlib.Path):
            path = pathlib.Path(path)
        path = path.expanduser().resolve()
        if not path.exists():
            msg = f"File {path} does not exist."
            self.logger.error(msg)
            raise FileNotFoundError(msg)
        if not path.is_file():
            msg = f"Path {path} is not a valid path to file."
            self.logger.error(msg)
            raise FileNotFoundError(msg)
        return path

    def load_document(self, path: Union[str, pathlib.Path]) -> dict:
        """Reads a JSON or YAML mapping. JSON documents are valid YAML."""
        path = self.resolve_path(path=path)
        self.logger.info(f"Loading file: '{path}'")
        with path.open(mode="r") as f:
            data = yaml.safe_load(f)
        if data is None:
            return {}
        if not isinstance(data, dict):
            msg = f"Top level of {path} must be a mapping, got {type(data).__name__}"
            self.logger.error(msg)
            raise ValueError(msg)
        return data
