from .KeyModels import *
