from .BenchModels import *
