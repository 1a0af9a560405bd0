from .BaseLoader import BaseLoader
from .ConfigLoader import ConfigLoader
