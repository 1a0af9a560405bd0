from .get_logger import get_logger
