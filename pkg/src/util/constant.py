from enum import Enum, IntEnum

DEFAULT_CHARSET = "utf-8"
DEFAULT_DENSE_SIZE_CAP = 2 ** 24
DEFAULT_JITTER = 1e-6
STENCIL_SIZE = 4
MAX_EMBEDDING_DIM = 10
EMBEDDING_GRID_RANGE = (-1.0, 1.0)
EMBEDDING_SPREAD = 2.5
EMBEDDING_MOMENTUM = 0.1
MU_INIT_SCALE = 0.05

CHECKPOINT_MAGIC = b"TTGPCKPT"
CHECKPOINT_VERSION = 2
MANIFEST_SUFFIX = ".manifest.json"

HISTORY_COLUMNS = ["epoch", "elbo", "metric", "seconds"]
DEMO_COLUMNS = ["r", "mse", "cosine"]


class EnvVar(str, Enum):
    LOG_LEVEL = "LOG_LEVEL"
    DENSE_SIZE_CAP = "TTGP_DENSE_SIZE_CAP"
    JITTER = "TTGP_JITTER"


class TaskKind(str, Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


class DataFormat(str, Enum):
    CSV = "csv"
    LIBSVM = "libsvm"


class ExitCode(IntEnum):
    SUCCESS = 0
    CONFIGURATION = 2
    DATA = 3
    NUMERIC = 4
