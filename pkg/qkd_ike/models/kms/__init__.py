from .KmsModels import *
