import hypothesis
import numpy as np
import pytest

import detfield as df

hypothesis.settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[hypothesis.HealthCheck.too_slow])
hypothesis.settings.load_profile("default")


def random_admissible_kernel(rng, n=None, complex_=None, lo=0.05, hi=0.95):
    """Random Hermitian kernel with eigenvalues inside (lo, hi)."""
    if n is None:
        n = int(rng.integers(4, 11))
    if complex_ is None:
        complex_ = bool(rng.integers(0, 2))
    shape = (n, n)
    a = rng.normal(size=shape)
    if complex_:
        a = a + 1j * rng.normal(size=shape)
    q, _ = np.linalg.qr(a)
    lam = rng.uniform(lo, hi, size=n)
    k = (q * lam) @ q.conj().T
    return df.MatrixKernel.from_dense((k + k.conj().T) / 2)


def sitewise_statistic(kernel, values):
    """Step function taking the given value at each lattice site (L = 1)."""
    return df.step_combo([(v, c - 0.25, c + 0.25)
                          for v, c in zip(values, kernel.coords)])


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
