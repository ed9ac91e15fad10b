import contextlib
import random

import pytest
from hypothesis import HealthCheck, reject, settings
from hypothesis import strategies as st

from weylore.errors import ResourceCap
from weylore.ore import ansatz_budget
from weylore.weyl import WeylAlgebra, WeylOp

settings.register_profile(
    "default",
    max_examples=40,
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def A1():
    return WeylAlgebra(1)


@pytest.fixture
def A2():
    return WeylAlgebra(2)


def ops(m, max_degree=3, K=None, nterms=4):
    """Strategy for random operators of A_m (derivations restricted to K)."""
    return st.integers(0, 2**32).map(
        lambda s: WeylAlgebra(m).random_element(random.Random(s), max_degree=max_degree,
                                                K=K, nterms=nterms))


def nonzero_ops(m, max_degree=2, K=None, nterms=3):
    return ops(m, max_degree, K, nterms).filter(bool)


def polys(m, max_degree=4):
    """Strategy for polynomials ``{xexp: coeff}`` in m variables."""
    def build(seed):
        rng = random.Random(seed)
        out = {}
        for _ in range(rng.randint(1, 4)):
            e = tuple(rng.randint(0, max_degree) for _ in range(m))
            c = rng.randint(-5, 5)
            if c:
                out[e] = c
        return out
    return st.integers(0, 2**32).map(build)


def same_op(a: WeylOp, b: WeylOp) -> bool:
    return (a - b).is_zero()


@contextlib.contextmanager
def capped(max_unknowns=1500):
    """Run under an ansatz budget; examples that exceed it are discarded."""
    try:
        with ansatz_budget(max_unknowns):
            yield
    except ResourceCap:
        reject()
