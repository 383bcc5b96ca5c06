import numpy as np
import pytest

from src.util.constant import EnvVar


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240521)


@pytest.fixture(autouse=True)
def default_environment(monkeypatch):
    monkeypatch.delenv(EnvVar.DENSE_SIZE_CAP.value, raising=False)
    monkeypatch.delenv(EnvVar.JITTER.value, raising=False)


@pytest.fixture
def write_text(tmp_path):
    def write(name: str, content: str):
        path = tmp_path / name
        path.write_text(content, encoding="utf-8")
        return path

    return write
