from pydantic import Field, model_validator

from src.config.model import Configuration
from src.config.model.kernel import KernelConfiguration
from src.util.constant import TaskKind, STENCIL_SIZE, MAX_EMBEDDING_DIM


class TrainConfiguration(Configuration):
    """
    Training loop, optimizer and model-size settings.
    """
    task: TaskKind
    epochs: int = Field(default=30, ge=0)
    batch_size: int = Field(default=256, gt=0)
    learning_rate: float = Field(default=0.01, gt=0.0)
    beta1: float = Field(default=0.9, gt=0.0, lt=1.0)
    beta2: float = Field(default=0.999, gt=0.0, lt=1.0)
    epsilon: float = Field(default=1e-8, gt=0.0)
    seed: int = Field(default=0, ge=0)
    m0: int = Field(default=20, ge=STENCIL_SIZE, description="Grid points per dimension.")
    tt_rank: int = Field(default=10, ge=1)
    embedding_dim: int = Field(default=0, ge=0, le=MAX_EMBEDDING_DIM, description="0 disables the embedding.")
    kernel: KernelConfiguration = Field(default_factory=KernelConfiguration)
    eval_every: int = Field(default=1, ge=1, description="Evaluate the held-out metric every this many epochs.")
    kernel_lr_decay_epoch: int | None = Field(
        default=None, ge=1, description="After this epoch kernel hyperparameters use kernel_lr_factor·lr.")
    kernel_lr_factor: float = Field(default=0.1, gt=0.0, le=1.0)
    workers: int = Field(default=1, ge=1, description="Threads sharing each gradient evaluation.")

    @model_validator(mode="after")
    def validate_kernel_sharing(self):
        if self.kernel.per_class and self.task == TaskKind.REGRESSION:
            raise ValueError("Per-class kernels only apply to classification.")
        return self
