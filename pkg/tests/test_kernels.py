import math
import os
import subprocess
import sys

import numpy as np
import pytest

from corramsey import kernels
from corramsey.fisher import phase_grid

BACKENDS = kernels.backends()
needs_both = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")


def _cases():
    rng = np.random.default_rng(11)
    for _ in range(20):
        yield (rng.uniform(0, 4 * math.pi), rng.uniform(0, 5), rng.uniform(0, 2 * math.pi),
               rng.uniform(0.05, 5), rng.uniform(0, 3), int(rng.integers(1, 300)),
               math.expm1(rng.uniform(0.01, 4)), int(rng.integers(1, 4)))
    # series branch of sinc and the zero-phase branch
    yield (0.0, 1.0, 0.3, 0.5, 0.5, 10, math.expm1(1.0), 1)
    yield (1e-7, 0.0, 0.3, 0.5, 0.5, 10, math.expm1(1.0), 2)


@needs_both
def test_fisher_terms_agree():
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    for w, xi, phi, tau_r, tau_o, n, em1, p in _cases():
        args = (w, xi, phi, tau_r, 0.0, tau_r + tau_o, n, em1, p)
        np.testing.assert_allclose(cy.ramsey_fisher_terms(*args), py.ramsey_fisher_terms(*args),
                                   rtol=1e-12, atol=1e-300)


@needs_both
def test_phase_average_agrees():
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    phis = phase_grid(32)
    for w, xi, _, tau_r, tau_o, n, em1, p in _cases():
        args = (w, xi, phis, tau_r, 0.0, tau_r + tau_o, n, em1, p)
        assert cy.ramsey_fisher_phase_average(*args) == pytest.approx(
            py.ramsey_fisher_phase_average(*args), rel=1e-11, abs=1e-300)


@needs_both
def test_loglik_agrees():
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    rng = np.random.default_rng(5)
    t = np.arange(500) * 0.75
    for y in ((rng.random(500) < 0.4).astype(float), rng.random(500)):
        args = (t, y, 0.4, 2.0, 1.1, 0.5, math.exp(-0.5))
        assert cy.bernoulli_loglik(*args) == pytest.approx(py.bernoulli_loglik(*args), rel=1e-12)


def test_loglik_floors_certain_events():
    ll = kernels.bernoulli_loglik(np.array([0.0]), np.array([0.0]), 0.0, 0.0, 0.0, 0.5, 1.0)
    assert ll == pytest.approx(math.log(1e-12))


def test_loglik_length_mismatch():
    with pytest.raises(ValueError):
        kernels.bernoulli_loglik(np.zeros(3), np.zeros(2), 0.1, 1.0, 0.0, 0.5, 0.9)


def test_env_forces_python_backend():
    env = dict(os.environ, CORRAMSEY_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import corramsey.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
