import pytest
from hypothesis import HealthCheck, settings

from lefcert import CertConfig, Metric

from helpers import basis_episode

settings.register_profile(
    "ci",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture
def tiny_episode():
    return basis_episode()


@pytest.fixture
def cosine_cfg() -> CertConfig:
    return CertConfig(lam=1.0, m=1, metric=Metric.COSINE, budget=2)
