import numpy as np
from pydantic import Field

from src.config.model import Configuration
from src.data.model.kernel import RBFParams


class KernelConfiguration(Configuration):
    """
    Initial RBF hyperparameters and how they are shared.
    """
    lengthscale: float = Field(default=1.0, gt=0.0, description="Initial lengthscale of every dimension.")
    variance: float = Field(default=1.0, gt=0.0, description="Initial signal variance σ_f².")
    noise_variance: float = Field(default=0.1, gt=0.0, description="Initial noise variance ν², regression only.")
    tied_lengthscales: bool = Field(default=False, description="Share one lengthscale across all dimensions.")
    per_class: bool = Field(default=False, description="Give every class its own hyperparameters.")

    def create_params(self, ndim: int, num_classes: int) -> list[RBFParams]:
        regression = num_classes == 1
        count = num_classes if self.per_class and not regression else 1
        return [
            RBFParams.create(
                lengthscales=np.full(ndim, self.lengthscale),
                variance=self.variance,
                noise_variance=self.noise_variance if regression else None,
                tied=self.tied_lengthscales,
            )
            for _ in range(count)
        ]
