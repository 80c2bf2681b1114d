import numpy as np
import pytest

from painleve_torus import make_context

# fixed sample of tau values with moderate nome, used by randomized suites
RANDOM_TAUS = [
    0.2 + 1.1j,
    -0.31 + 0.83j,
    0.05 + 1.52j,
    0.44 + 0.97j,
    -0.12 + 1.27j,
]


@pytest.fixture(scope="session")
def ctx_oblique():
    return make_context(0.2 + 1.1j)


@pytest.fixture(scope="session")
def ctx_square():
    return make_context(1j)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_points(ctx, rng, n, margin=0.04):
    """n points of the fundamental cell staying off the lattice corners."""
    pts = []
    while len(pts) < n:
        r = rng.uniform(margin, 1 - margin)
        s = rng.uniform(margin, 1 - margin)
        pts.append(r + s * ctx.tau)
    return np.array(pts)
