from .TransportModels import *
