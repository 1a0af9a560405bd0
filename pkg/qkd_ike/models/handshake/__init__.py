from .HandshakeModels import *
from .EapModels import *
