from .BaseIkeModels import *
