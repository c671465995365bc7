import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bogoexp.expansion import prepare
from bogoexp.model import build_torus_model, random_gapped_model, torus_from_couplings, uniform_torus

settings.register_profile(
    "default",
    deadline=None,
    max_examples=20,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=str):
        terminalreporter.write_line(ACCEPTANCE[key])


@pytest.fixture(scope="session")
def torus():
    """Fourier coefficient 3/2 on every momentum transfer (d=1, Kcut=1)."""
    return build_torus_model(uniform_torus(1, 1, 1.5), label="torus")


@pytest.fixture(scope="session")
def torus_coupling():
    """Pair kernels equal to 3/2 at momenta 0 and +-1."""
    spec = torus_from_couplings(1, 1, {(1,): 1.5, (-1,): 1.5, (0,): 1.5})
    return build_torus_model(spec, label="torus-coupling")


@pytest.fixture(scope="session")
def torus_ctx(torus):
    return prepare(torus, 12, 3)


@pytest.fixture(scope="session")
def random3():
    """A gapped complex model on three modes with its Hartree solution."""
    return random_gapped_model(3, np.random.default_rng(11), min_gap=0.2, terms=4)


@pytest.fixture(scope="session")
def random3_ctx(random3):
    model, sol = random3
    return prepare(model, 9, 3, sol)
