from pydantic import BaseModel, ConfigDict


class Configuration(BaseModel):
    """
    Base of every settings model; unknown keys are rejected.
    """
    model_config = ConfigDict(extra="forbid")
