from .dataset import RawTable, Dataset, DatasetStatistics
from .gp import TTGPModel
from .grid import Grid, InterpWeights
from .kernel import RBFParams, LinearEmbedding
from .kronecker import KroneckerMatrix, KroneckerChol
from .training import AdamState, TrainResult
from .tt_vector import TTVector
