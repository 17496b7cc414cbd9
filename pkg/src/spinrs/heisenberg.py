"""Iwasawa decompositions, dressing and quasi-adjoint actions on SL(n, C).

A point of the unreduced phase space is a pair ``(K, S)`` with ``K`` in
SL(n, C) and ``S`` in the Borel group B (upper triangular, positive diagonal,
determinant one).  The two Iwasawa decompositions used throughout are::

    K = g_L b_R^{-1} = b_L g_R^{-1}

with ``g_L, g_R`` in SU(n) and ``b_L, b_R`` in B.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DecompositionFailure
from .matrixcore import as_complex, dagger, qr_positive, rq_positive


@dataclass(frozen=True)
class DoublePoint:
    """Point ``(K, S)`` of the Heisenberg double extended by a dressing orbit.

    Decompositions of ``K`` are recomputed on demand instead of being cached.
    """

    K: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "K", as_complex(self.K))
        object.__setattr__(self, "S", as_complex(self.S))
        if abs(np.linalg.det(self.K) - 1.0) > 1e-10 * max(1.0, np.linalg.norm(self.K) ** self.K.shape[0]):
            raise ValueError("K must have unit determinant")
        if not is_borel(self.S):
            raise ValueError("S must be an element of B")


def is_borel(b, tol: float = 1e-10) -> bool:
    b = np.asarray(b)
    d = np.diag(b)
    return (
        np.abs(np.tril(b, -1)).max(initial=0.0) <= tol * max(1.0, np.abs(b).max())
        and np.all(np.abs(d.imag) <= tol)
        and np.all(d.real > 0)
        and abs(np.linalg.det(b) - 1.0) <= tol * max(1.0, np.abs(b).max() ** b.shape[0])
    )


def decompose_right(k):
    """Return ``(g_L, b_R)`` with ``K = g_L b_R^{-1}``."""
    try:
        g, r = qr_positive(k)
    except np.linalg.LinAlgError as exc:
        raise DecompositionFailure("numerically singular input") from exc
    r = np.triu(r)
    try:
        b = np.linalg.inv(r)
    except np.linalg.LinAlgError as exc:
        raise DecompositionFailure("numerically singular input") from exc
    return g, np.triu(b)


def decompose_left(k):
    """Return ``(b_L, g_R)`` with ``K = b_L g_R^{-1}``."""
    try:
        r, q = rq_positive(k)
    except np.linalg.LinAlgError as exc:
        raise DecompositionFailure("numerically singular input") from exc
    return np.triu(r), dagger(q)


def lambda_left(k):
    return decompose_left(k)[0]


def lambda_right(k):
    return decompose_right(k)[1]


def xi_left(k):
    return decompose_right(k)[0]


def xi_right(k):
    return decompose_left(k)[1]


def dressing(eta, b):
    """Left dressing action ``Dr_eta(b) = Lambda_L(eta b)``."""
    return lambda_left(as_complex(eta) @ as_complex(b))


def quasi_adjoint(eta, point: DoublePoint) -> DoublePoint:
    """Action of ``eta`` in SU(n) on ``(K, S)``::

        (K, S) -> (eta K Xi_R(eta b_L), Dr_{Xi_R(eta b_L b_R)^{-1}}(S))
    """
    eta = as_complex(eta)
    b_l, _ = decompose_left(point.K)
    _, b_r = decompose_right(point.K)
    k_new = eta @ point.K @ xi_right(eta @ b_l)
    s_new = dressing(dagger(xi_right(eta @ b_l @ b_r)), point.S)
    return DoublePoint(k_new, s_new)


def moment_map(point: DoublePoint):
    """``Lambda(K, S) = b_L b_R S``."""
    b_l, _ = decompose_left(point.K)
    _, b_r = decompose_right(point.K)
    return b_l @ b_r @ point.S
