"""Seeded generators shared by the test modules."""

import numpy as np

from spinrs.cli import random_state  # noqa: F401  (re-exported for tests)
from spinrs.phasespace import ReducedState


def seeded_state3():
    """Fixed n = 3 state that stays regular for t <= 10 under the main flow."""
    q = np.array([2.0, 0.1, -2.1])
    q -= q.mean()
    sigma = np.zeros((3, 3), dtype=complex)
    sigma[0, 1] = 0.6 + 0.2j
    sigma[1, 2] = -0.4 + 0.5j
    sigma[0, 2] = 0.3 - 0.3j
    return ReducedState(q, [0.3, -0.1, -0.2], sigma)


def random_unitary(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))[np.newaxis, :]
    return q / np.linalg.det(q) ** (1.0 / n)


def random_sl(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return z / np.linalg.det(z) ** (1.0 / n)


def random_hermitian(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (z + z.conj().T)


def random_lax(rng, n):
    """Positive definite Hermitian with unit determinant."""
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = z @ z.conj().T + 0.5 * np.eye(n)
    return h / np.linalg.det(h).real ** (1.0 / n)


def random_unipotent(rng, n, scale=1.0):
    s = np.eye(n, dtype=complex)
    iu = np.triu_indices(n, 1)
    s[iu] = scale * (rng.normal(size=iu[0].size) + 1j * rng.normal(size=iu[0].size))
    return s
