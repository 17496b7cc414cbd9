"""Trigonometric spin Sutherland model and its emergence as a scaling limit.

For ``A_{n-1}`` the Hamiltonian is::

    h = 1/2 sum_a p_a^2 + 1/4 sum_{j<k} |xi_jk|^2 / sin^2((q_j - q_k)/2)

with Lax matrix ``L_Suth = diag(p) + sum_{j<k} i xi_jk / (exp(-i(q_j - q_k)) - 1) E_jk + h.c.``
The reduced Ruijsenaars type system at ``(q, eps p, eps sigma)`` reproduces it
as ``eps -> 0`` once ``sigma = 2i xi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matrixcore import REGULARITY_TOL, as_complex, require_regular
from .phasespace import ReducedState, h_red_minus_n, lax_minus_identity


@dataclass(frozen=True)
class SutherlandState:
    q: np.ndarray
    p: np.ndarray
    xi: np.ndarray = field(default=None)
    tol: float = field(default=REGULARITY_TOL, compare=False)

    def __post_init__(self):
        # same invariants as a reduced state; reuse its validation
        ref = ReducedState(self.q, self.p, self.xi, self.tol)
        object.__setattr__(self, "q", ref.q)
        object.__setattr__(self, "p", ref.p)
        object.__setattr__(self, "xi", ref.sigma)

    @property
    def n(self) -> int:
        return self.q.size

    @classmethod
    def from_reduced(cls, state: ReducedState) -> "SutherlandState":
        """Spin ``xi = sigma / (2i)`` of the reduced state."""
        return cls(state.q, state.p, state.sigma / 2j, state.tol)


def _inv_sin2(q) -> np.ndarray:
    """``1 / sin^2((q_j - q_k)/2)`` for j < k, zero elsewhere."""
    q = np.asarray(q, dtype=float)
    n = q.size
    out = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    out[iu] = 1.0 / np.sin(0.5 * (q[iu[0]] - q[iu[1]])) ** 2
    return out


def h_suth(state: SutherlandState) -> float:
    require_regular(state.q, state.tol)
    kinetic = 0.5 * float(np.dot(state.p, state.p))
    return kinetic + 0.25 * float(np.sum(np.abs(state.xi) ** 2 * _inv_sin2(state.q)))


def h_suth_tilde(q, p, xi_tilde, tol: float = REGULARITY_TOL) -> float:
    """The same Hamiltonian written in the spin ``xi_tilde = -2i xi``."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    require_regular(q, tol)
    xt = as_complex(xi_tilde)
    return 0.5 * float(np.dot(p, p)) + float(np.sum(np.abs(xt) ** 2 * _inv_sin2(q))) / 16.0


def lax_suth(state: SutherlandState) -> np.ndarray:
    require_regular(state.q, state.tol)
    q = state.q
    n = state.n
    out = np.diag(state.p).astype(np.complex128)
    for j in range(n):
        for k in range(j + 1, n):
            out[j, k] = 1j * state.xi[j, k] / np.expm1(-1j * (q[j] - q[k]))
            out[k, j] = np.conj(out[j, k])
    return out


def _check_epsilons(epsilons) -> np.ndarray:
    eps = np.asarray(epsilons, dtype=float)
    if eps.ndim != 1 or eps.size == 0 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ValueError("epsilons must be positive and strictly decreasing")
    return eps


def convergence_slope(epsilons, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(eps)``."""
    x = np.log(np.asarray(epsilons, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def scaling_limit_sweep(state_base: ReducedState, epsilons):
    """Rows ``(eps, (H_red - n)/(4 eps^2), |value - h_suth|)`` for ``(q, eps p, eps sigma)``."""
    eps = _check_epsilons(epsilons)
    target = h_suth(SutherlandState.from_reduced(state_base))
    rows = []
    for e in eps:
        value = h_red_minus_n(state_base.scaled(e)) / (4.0 * e * e)
        rows.append((float(e), value, abs(value - target)))
    return np.array(rows)


def lax_limit_sweep(state_base: ReducedState, k: int, epsilons):
    """Rows ``(eps, tr((L - 1)^k)/(2 eps)^k, |value - tr(L_Suth^k)|)``."""
    n = state_base.n
    if not 2 <= k <= n:
        raise ValueError(f"k must lie in [2, {n}]")
    eps = _check_epsilons(epsilons)
    ls = lax_suth(SutherlandState.from_reduced(state_base))
    target = float(np.trace(np.linalg.matrix_power(ls, k)).real)
    rows = []
    for e in eps:
        m = lax_minus_identity(state_base.scaled(e)) / (2.0 * e)
        value = float(np.trace(np.linalg.matrix_power(m, k)).real)
        rows.append((float(e), value, abs(value - target)))
    return np.array(rows)
