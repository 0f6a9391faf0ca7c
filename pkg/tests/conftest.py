import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from opscale.covariance import FieldModel
from opscale.specs import NAMED_SPECS, named_spec

settings.register_profile("repo", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

SPEC_NAMES = list(NAMED_SPECS)
PLANAR = ["S2", "S3", "S4", "S5"]


@pytest.fixture(params=SPEC_NAMES)
def spec(request):
    return named_spec(request.param)


@pytest.fixture(scope="session")
def models():
    """Standard-profile models, built once (their quadrature caches are reused)."""
    return {name: FieldModel(named_spec(name)) for name in SPEC_NAMES}


@pytest.fixture(scope="session")
def fast_models():
    return {name: FieldModel(named_spec(name), profile="fast") for name in SPEC_NAMES}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
