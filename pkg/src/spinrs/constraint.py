"""Explicit solution of the moment-map constraint on the diagonal gauge slice.

For a regular torus element ``Q = diag(exp(i q))`` and an upper unipotent spin
``S`` the constraint ``Q^{-1} b Q = b S`` has a unique upper unipotent solution
``b``.  Writing ``I[a, c] = 1 / (Q_c / Q_a - 1)`` the entries satisfy::

    b[a, a+k] = I[a, a+k] * (S[a, a+k] + sum_{i=1}^{k-1} b[a, a+i] S[a+i, a+k])

which is solved grade by grade (``k = 1 .. n-1``).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .matrixcore import REGULARITY_TOL, as_complex, require_regular, torus

ILL_CONDITIONED = 1e8


@dataclass(frozen=True)
class ConstraintSolution:
    b_plus: np.ndarray
    residual: float
    max_inverse_factor: float

    @property
    def ill_conditioned(self) -> bool:
        return self.max_inverse_factor > ILL_CONDITIONED


def inverse_factors(q) -> np.ndarray:
    """Matrix of ``1 / (exp(i(q_c - q_a)) - 1)`` for ``a < c`` (zero elsewhere)."""
    q = np.asarray(q, dtype=float)
    n = q.size
    out = np.zeros((n, n), dtype=np.complex128)
    for a in range(n):
        for c in range(a + 1, n):
            out[a, c] = 1.0 / np.expm1(1j * (q[c] - q[a]))
    return out


def constraint_residual(q, b, s) -> float:
    tq = torus(q)
    return float(np.linalg.norm(tq.conj() @ b @ tq - b @ s))


def solve_bplus(q, s_plus, tol: float = REGULARITY_TOL) -> ConstraintSolution:
    """Solve ``Q^{-1} b Q = b S`` for upper unipotent ``b`` by the grade recursion."""
    q = np.asarray(q, dtype=float)
    require_regular(q, tol)
    s = as_complex(s_plus)
    n = q.size
    inv = inverse_factors(q)
    b = np.eye(n, dtype=np.complex128)
    for k in range(1, n):
        for a in range(n - k):
            c = a + k
            acc = s[a, c]
            for i in range(1, k):
                acc += b[a, a + i] * s[a + i, c]
            b[a, c] = inv[a, c] * acc
    return ConstraintSolution(
        b_plus=b,
        residual=constraint_residual(q, b, s),
        max_inverse_factor=float(np.abs(inv).max(initial=0.0)),
    )


def _compositions(k):
    """All ordered tuples of positive integers summing to ``k``."""
    for m in range(1, k + 1):
        for cuts in combinations(range(1, k), m - 1):
            bounds = (0,) + cuts + (k,)
            yield tuple(bounds[i + 1] - bounds[i] for i in range(m))


def solve_bplus_closed_form(q, s_plus) -> np.ndarray:
    """Same solution via the explicit sum over compositions of each grade.

    Kept as an independent cross-check of :func:`solve_bplus`; the cost grows
    like ``2**n``.
    """
    q = np.asarray(q, dtype=float)
    require_regular(q)
    s = as_complex(s_plus)
    n = q.size
    inv = inverse_factors(q)
    b = np.eye(n, dtype=np.complex128)
    for a in range(n):
        for k in range(1, n - a):
            total = 0.0j
            for comp in _compositions(k):
                term = 1.0 + 0.0j
                pos = a
                for step in comp:
                    term *= inv[a, pos + step] * s[pos, pos + step]
                    pos += step
                total += term
            b[a, a + k] = total
    return b


def reconstruct_spin(q, b_r, tol: float = REGULARITY_TOL):
    """Return ``S = b_R^{-1} Q^{-1} b_R Q`` and the deviation of its diagonal from one.

    The diagonal of the result is exactly one for any upper triangular ``b_R``,
    so the deviation only measures roundoff.
    """
    q = np.asarray(q, dtype=float)
    require_regular(q, tol)
    b_r = as_complex(b_r)
    tq = torus(q)
    s = np.linalg.solve(b_r, tq.conj() @ b_r @ tq)
    s = np.triu(s)
    deviation = float(np.abs(np.diag(s) - 1.0).max())
    return s, deviation
