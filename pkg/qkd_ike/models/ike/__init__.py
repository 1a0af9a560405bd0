from .IkeModels import *
from .QkdNotifyModels import *
