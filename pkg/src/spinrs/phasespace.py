"""Reduced states on the diagonal gauge slice, the Lax matrix and its invariants.

A reduced state is ``(q, p, sigma)``: alcove phases ``q``, momenta ``p``
(``sum(p) == 0``) and the strictly upper triangular spin ``sigma`` with
``S = exp(sigma)``.  The Lax matrix is ``L = b_R b_R^dag`` where
``b_R = diag(exp(p)) b_plus(q, S)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .constraint import reconstruct_spin, solve_bplus
from .heisenberg import DoublePoint
from .matrixcore import (
    REGULARITY_TOL,
    as_complex,
    check_alcove,
    dagger,
    expm,
    hermitian_eig,
    nilpotent_log,
    torus,
    udu_factor,
)


@dataclass(frozen=True)
class ReducedState:
    q: np.ndarray
    p: np.ndarray
    sigma: np.ndarray = field(default=None)
    tol: float = field(default=REGULARITY_TOL, compare=False)

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        p = np.array(self.p, dtype=float)
        n = q.size
        sigma = np.zeros((n, n), dtype=np.complex128) if self.sigma is None else as_complex(self.sigma)
        problems = check_alcove(q, self.tol)
        if p.shape != (n,):
            problems.append("p must have the same length as q")
        elif not np.all(np.isfinite(p)) or abs(p.sum()) > 1e-8 * max(1.0, np.abs(p).max()):
            problems.append(f"sum(p) must be 0, got {p.sum():.3e}")
        if sigma.shape != (n, n):
            problems.append("sigma must be n x n")
        elif np.abs(np.tril(sigma)).max() > 0 or not np.all(np.isfinite(sigma)):
            problems.append("sigma must be finite and strictly upper triangular")
        if problems:
            raise ValueError("invalid reduced state: " + "; ".join(problems))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n(self) -> int:
        return self.q.size

    @property
    def spin(self) -> np.ndarray:
        """Unipotent spin ``S = exp(sigma)``."""
        return expm(self.sigma)

    def scaled(self, eps: float) -> "ReducedState":
        return ReducedState(self.q, eps * self.p, eps * self.sigma, self.tol)


def build_bR(state: ReducedState) -> np.ndarray:
    sol = solve_bplus(state.q, state.spin, state.tol)
    return np.exp(state.p)[:, np.newaxis] * sol.b_plus


def unreduced_point(state: ReducedState) -> DoublePoint:
    """Point ``(K, S) = (Q^{-1} b_R^{-1}, exp(sigma))`` of the gauge slice.

    Its Iwasawa factors are ``g_L = Q^{-1}`` and ``b_R = build_bR(state)``, and
    the moment map evaluates to the identity there.
    """
    b_r = build_bR(state)
    k = torus(state.q).conj() @ np.linalg.solve(b_r, np.eye(state.n))
    return DoublePoint(k, state.spin)


def lax(state: ReducedState) -> np.ndarray:
    b = build_bR(state)
    out = b @ dagger(b)
    return 0.5 * (out + dagger(out))


def lax_minus_identity(state: ReducedState) -> np.ndarray:
    """``L - 1`` evaluated without cancellation on the diagonal."""
    sol = solve_bplus(state.q, state.spin, state.tol)
    b = sol.b_plus
    n = state.n
    e = np.exp(state.p)
    off = np.triu(b, 1)
    # b b^dag = (1 + off)(1 + off)^dag
    prod = off + dagger(off) + off @ dagger(off)
    out = e[:, np.newaxis] * prod * e[np.newaxis, :]
    out[np.diag_indices(n)] += np.expm1(2.0 * state.p)
    return 0.5 * (out + dagger(out))


def h_red(state: ReducedState) -> float:
    """Reduced main Hamiltonian ``tr(b_R b_R^dag)``."""
    return float(np.trace(lax(state)).real)


def h_red_minus_n(state: ReducedState) -> float:
    return float(np.trace(lax_minus_identity(state)).real)


def _n3_terms(state: ReducedState):
    if state.n != 3:
        raise ValueError("closed form is specific to n = 3")
    q, p, s = state.q, state.p, state.spin
    inv = lambda a, c: 1.0 / (np.exp(1j * (q[c] - q[a])) - 1.0)  # noqa: E731
    i12, i13, i23 = inv(0, 1), inv(0, 2), inv(1, 2)
    e = np.exp(2.0 * p)
    value = (
        e.sum()
        + e[0] * (abs(i12 * s[0, 1]) ** 2 + abs(i13 * s[0, 2]) ** 2)
        + e[1] * abs(i23 * s[1, 2]) ** 2
        + 2.0 * e[0] * abs(i13) ** 2 * (i12 * s[0, 1] * s[1, 2] * np.conj(s[0, 2])).real
    )
    # |b_13|^2 also contains the square of the composite path 1 -> 2 -> 3
    missing = e[0] * abs(i13 * i12 * s[0, 1] * s[1, 2]) ** 2
    return float(value), float(missing)


def h_red_n3_closed_form(state: ReducedState) -> float:
    """Fully explicit n = 3 expression of ``tr(b_R b_R^dag)`` in terms of ``S``.

    With ``b_13 = I_13 (S_13 + I_12 S_12 S_23)``::

        H = sum_m e^{2 p_m} + e^{2 p_1}(|I_12 S_12|^2 + |I_13 S_13|^2 + |I_13 I_12 S_12 S_23|^2)
            + e^{2 p_2} |I_23 S_23|^2 + 2 e^{2 p_1} |I_13|^2 Re(I_12 S_12 S_23 conj(S_13))
    """
    value, missing = _n3_terms(state)
    return value + missing


def h_red_n3_abridged(state: ReducedState) -> float:
    """The same expansion without the ``|I_13 I_12 S_12 S_23|^2`` term.

    This is not ``H``; it is kept only to show that the term is required.
    """
    return _n3_terms(state)[0]


def conjugated_lax(state: ReducedState, lax_matrix=None) -> np.ndarray:
    """``Q^{-1} L Q``."""
    lm = lax(state) if lax_matrix is None else lax_matrix
    tq = torus(state.q)
    return tq.conj() @ lm @ tq


def mixed_invariant(state: ReducedState, word, lax_matrix=None) -> complex:
    """Trace of the product ``word`` with ``'A' -> L`` and ``'B' -> Q^{-1} L Q``."""
    word = list(word)
    if not word:
        raise ValueError("word must be nonempty")
    lm = lax(state) if lax_matrix is None else lax_matrix
    mats = {"A": lm, "B": conjugated_lax(state, lm)}
    out = np.eye(state.n, dtype=np.complex128)
    for sym in word:
        out = out @ mats[sym]
    return complex(np.trace(out))


def spectral_lax(state: ReducedState, lam: complex) -> np.ndarray:
    """Spectral-parameter Lax matrix ``L + lam Q^{-1} L Q``."""
    lm = lax(state)
    return lm + lam * conjugated_lax(state, lm)


def spin_triples(n: int):
    return list(combinations(range(n), 3))


def gauge_invariant_observables(state: ReducedState, lax_matrix=None) -> np.ndarray:
    """Observables invariant under the residual torus action ``sigma -> T sigma T^{-1}``.

    Layout: ``|sigma_jk|^2`` (row-major, j < k); real and imaginary parts of
    ``sigma_ab sigma_bc conj(sigma_ac)`` for all a < b < c; ``|L_jk|`` (j < k);
    the diagonal of ``L``.
    """
    n = state.n
    sig = state.sigma
    lm = lax(state) if lax_matrix is None else lax_matrix
    iu = np.triu_indices(n, 1)
    trip = [sig[a, b] * sig[b, c] * np.conj(sig[a, c]) for a, b, c in spin_triples(n)]
    return np.concatenate(
        [
            np.abs(sig[iu]) ** 2,
            np.real(trip),
            np.imag(trip),
            np.abs(lm[iu]),
            np.diag(lm).real,
        ]
    )


def spin_spectrum(state: ReducedState) -> np.ndarray:
    s = state.spin
    return hermitian_eig(s @ dagger(s))[0]


@dataclass(frozen=True)
class InvariantLedger:
    """Conserved quantities evaluated at one point of a trajectory."""

    lax_traces: np.ndarray  # tr(L^k), k = 2 .. n
    mixed: float  # tr(L Q^{-1} L Q)
    spin_spectrum: np.ndarray
    h_red: float

    def as_dict(self) -> dict:
        d = {f"tr_L{k}": float(v) for k, v in enumerate(self.lax_traces, start=2)}
        d["tr_L_QinvLQ"] = float(self.mixed)
        for i, v in enumerate(self.spin_spectrum, start=1):
            d[f"spin_eig{i}"] = float(v)
        d["H_red"] = float(self.h_red)
        return d


def invariant_ledger(state: ReducedState, lax_matrix=None) -> InvariantLedger:
    lm = lax(state) if lax_matrix is None else lax_matrix
    n = state.n
    traces = []
    power = lm
    for _ in range(2, n + 1):
        power = power @ lm
        traces.append(np.trace(power).real)
    mixed = mixed_invariant(state, "AB", lm).real
    return InvariantLedger(
        lax_traces=np.array(traces),
        mixed=float(mixed),
        spin_spectrum=spin_spectrum(state),
        h_red=float(np.trace(lm).real),
    )


def recover_state(q, lax_matrix, tol: float = REGULARITY_TOL) -> ReducedState:
    """Rebuild ``(q, p, sigma)`` from a torus point and a Lax matrix."""
    q = np.asarray(q, dtype=float)
    n_plus, p = udu_factor(lax_matrix)
    b_r = np.exp(p)[np.newaxis, :] * n_plus
    s, _ = reconstruct_spin(q, b_r, tol)
    np.fill_diagonal(s, 1.0)
    sigma = np.triu(nilpotent_log(s), 1)
    return ReducedState(q, p - p.mean(), sigma, tol)
