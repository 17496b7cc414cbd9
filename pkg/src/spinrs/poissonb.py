"""Numerical checks of the multiplicative Poisson structure on the Borel group B.

The brackets of matrix entries of ``b`` in B are::

    {b_mj, b_kl}  = i b_kj b_ml [d_mk + 2 th(m-k) - d_lj - 2 th(l-j)]
    {b_mj, b*_kl} = i b_mj b*_kl [d_mk - d_jl]
                    + 2i [d_mk sum_{s>m} b_sj b*_sl - d_jl sum_{s<j} b_ms b*_ks]

with ``th`` the unit step (1 for positive arguments, 0 otherwise).  The factor
2 in front of the sums is what the bracket ``-(b^{-1} d^L f b, d^R g)`` gives
(see :func:`bracket_from_definition`); with a factor 1 the Jacobi identity
fails, which ``printed=True`` reproduces.

Real coordinates on B (determinant one) are

    u = (Re b_jk, Im b_jk for j < k row-major, log b_mm for m < n)

and ``b_nn = exp(-sum log b_mm)``.  The bracket of two real functions is
``grad f . P(b) . grad g`` with ``P`` the bracket matrix of the coordinates.

The entry brackets are quadratic in ``(b, conj(b))``, so ``P`` and its
derivatives are available in closed form; :func:`schouten_residual` uses them
to evaluate the Jacobiator without finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import IndexOutOfStructure, ToleranceExceeded
from .matrixcore import as_complex, dagger, expm, nilpotent_log

FD_REL_STEP = 1e-3


def _theta(x: int) -> int:
    return 1 if x > 0 else 0


def _delta(a: int, b: int) -> int:
    return 1 if a == b else 0


def _check_index(n, idx):
    i, j = idx
    if not (0 <= i < n and 0 <= j < n) or i > j:
        raise IndexOutOfStructure(f"index {idx} is not upper triangular for n = {n}")


def bracket_coords(b, idx1, idx2, conj2: bool = False, printed: bool = False) -> complex:
    """``{b_idx1, b_idx2}`` or, with ``conj2``, ``{b_idx1, conj(b_idx2)}`` (0-based indices).

    ``printed=True`` drops the factor 2 on the sum terms of the conjugate
    bracket; that variant is kept only to exhibit its failure of Jacobi.
    """
    b = np.asarray(b)
    n = b.shape[0]
    _check_index(n, idx1)
    _check_index(n, idx2)
    m, j = idx1
    k, l = idx2
    if not conj2:
        coef = _delta(m, k) + 2 * _theta(m - k) - _delta(l, j) - 2 * _theta(l - j)
        return 1j * b[k, j] * b[m, l] * coef
    bc = b.conj()
    w = 1j if printed else 2j
    val = 1j * b[m, j] * bc[k, l] * (_delta(m, k) - _delta(j, l))
    if m == k:
        val += w * sum(b[s, j] * bc[s, l] for s in range(m + 1, n))
    if j == l:
        val -= w * sum(b[m, s] * bc[k, s] for s in range(j))
    return val


# ---------------------------------------------------------------------------
# Quadratic tensor of the entry brackets
#
# Complex coordinates Z = (b_A for A upper incl. diagonal, conj(b_A)), 2N slots.
# {Z_I, Z_J} = sum_{K,L} C[I, J, K, L] Z_K Z_L.


@lru_cache(maxsize=None)
def upper_indices(n: int):
    return tuple((i, j) for i in range(n) for j in range(i, n))


@lru_cache(maxsize=None)
def _bracket_tensor(n: int, printed: bool = False) -> np.ndarray:
    idx = upper_indices(n)
    pos = {a: i for i, a in enumerate(idx)}
    big = len(idx)
    c = np.zeros((2 * big, 2 * big, 2 * big, 2 * big), dtype=np.complex128)
    w = 1j if printed else 2j

    def slot(a, conj=False):
        return pos[a] + (big if conj else 0)

    for (m, j) in idx:
        for (k, l) in idx:
            i_, j_ = slot((m, j)), slot((k, l))
            # {b_mj, b_kl}
            coef = _delta(m, k) + 2 * _theta(m - k) - _delta(l, j) - 2 * _theta(l - j)
            if coef and k <= j and m <= l:
                c[i_, j_, slot((k, j)), slot((m, l))] += 1j * coef
            # {b_mj, b*_kl}
            jc = slot((k, l), True)
            d = _delta(m, k) - _delta(j, l)
            if d:
                c[i_, jc, slot((m, j)), slot((k, l), True)] += 1j * d
            if m == k:
                for s in range(m + 1, n):
                    if s <= j and s <= l:
                        c[i_, jc, slot((s, j)), slot((s, l), True)] += w
            if j == l:
                for s in range(j):
                    if m <= s and k <= s:
                        c[i_, jc, slot((m, s)), slot((k, s), True)] -= w
    # conjugate blocks: {conj a, conj b} = conj{a, b}, {conj a, b} = conj{a, conj b}
    sw = np.concatenate([np.arange(big, 2 * big), np.arange(big)])
    c[big:, big:] = c[:big, :big][..., sw[:, None], sw[None, :]].conj()
    c[big:, :big] = c[:big, big:][..., sw[:, None], sw[None, :]].conj()
    return c


def complex_coords(b) -> np.ndarray:
    b = np.asarray(b)
    vals = np.array([b[i, j] for (i, j) in upper_indices(b.shape[0])])
    return np.concatenate([vals, vals.conj()])


def complex_bracket_matrix(b, printed: bool = False) -> np.ndarray:
    """``{Z_I, Z_J}`` evaluated at ``b``."""
    z = complex_coords(b)
    return np.einsum("ijkl,k,l->ij", _bracket_tensor(b.shape[0], printed), z, z)


# ---------------------------------------------------------------------------
# Real coordinates


@lru_cache(maxsize=None)
def _strict_indices(n: int):
    return tuple((i, j) for i in range(n) for j in range(i + 1, n))


def coord_dim(n: int) -> int:
    return n * (n - 1) + (n - 1)


def coord_labels(n: int) -> list[str]:
    labels = []
    for i, j in _strict_indices(n):
        labels += [f"Re b[{i + 1},{j + 1}]", f"Im b[{i + 1},{j + 1}]"]
    labels += [f"log b[{m + 1},{m + 1}]" for m in range(n - 1)]
    return labels


def to_coords(b) -> np.ndarray:
    b = np.asarray(b)
    n = b.shape[0]
    out = []
    for i, j in _strict_indices(n):
        out += [b[i, j].real, b[i, j].imag]
    out += list(np.log(np.diag(b).real[:-1]))
    return np.array(out, dtype=float)


def from_coords(u, n: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    b = np.zeros((n, n), dtype=np.complex128)
    pos = 0
    for i, j in _strict_indices(n):
        b[i, j] = u[pos] + 1j * u[pos + 1]
        pos += 2
    logs = u[pos:]
    b[np.arange(n - 1), np.arange(n - 1)] = np.exp(logs)
    b[n - 1, n - 1] = np.exp(-logs.sum())
    return b


def _coord_map(b) -> np.ndarray:
    """Rows express ``{u_a, .}`` as combinations of ``{Z_I, .}``."""
    n = b.shape[0]
    idx = upper_indices(n)
    big = len(idx)
    pos = {a: i for i, a in enumerate(idx)}
    a = np.zeros((coord_dim(n), 2 * big), dtype=np.complex128)
    r = 0
    for i, j in _strict_indices(n):
        s = pos[(i, j)]
        a[r, s], a[r, s + big] = 0.5, 0.5
        a[r + 1, s], a[r + 1, s + big] = -0.5j, 0.5j
        r += 2
    for m in range(n - 1):
        a[r, pos[(m, m)]] = 1.0 / b[m, m].real
        r += 1
    return a


def _coord_jacobian(b) -> np.ndarray:
    """``dZ_I / du_c`` as a (2N, dim) matrix."""
    n = b.shape[0]
    idx = upper_indices(n)
    big = len(idx)
    pos = {a: i for i, a in enumerate(idx)}
    jac = np.zeros((2 * big, coord_dim(n)), dtype=np.complex128)
    c = 0
    for i, j in _strict_indices(n):
        s = pos[(i, j)]
        jac[s, c], jac[s + big, c] = 1.0, 1.0
        jac[s, c + 1], jac[s + big, c + 1] = 1j, -1j
        c += 2
    last = pos[(n - 1, n - 1)]
    for m in range(n - 1):
        s = pos[(m, m)]
        jac[s, c] = jac[s + big, c] = b[m, m].real
        jac[last, c] = jac[last + big, c] = -b[n - 1, n - 1].real
        c += 1
    return jac


def poisson_matrix(b, printed: bool = False) -> np.ndarray:
    """Real antisymmetric matrix ``P_ab = {u_a, u_b}`` at ``b``."""
    a = _coord_map(b)
    p = a @ complex_bracket_matrix(b, printed) @ a.T
    return p.real


def poisson_matrix_derivative(b, printed: bool = False) -> np.ndarray:
    """``dP_ab / du_c`` in closed form, shape (dim, dim, dim)."""
    b = np.asarray(b)
    n = b.shape[0]
    z = complex_coords(b)
    c4 = _bracket_tensor(n, printed)
    jac = _coord_jacobian(b)
    a = _coord_map(b)
    pz = np.einsum("ijkl,k,l->ij", c4, z, z)
    dpz = np.einsum("ijkl,l->ijk", c4 + c4.transpose(0, 1, 3, 2), z)  # d/dZ_K
    dpz_du = np.einsum("ijk,kc->ijc", dpz, jac)
    # only the log-diagonal rows of A depend on u
    da = np.zeros(a.shape + (coord_dim(n),), dtype=np.complex128)
    rows0 = n * (n - 1)
    for m in range(n - 1):
        k = upper_indices(n).index((m, m))
        da[rows0 + m, k, :] = -jac[k, :] / b[m, m].real ** 2
    out = (
        np.einsum("ai,ijc,bj->abc", a, dpz_du, a)
        + np.einsum("aic,ij,bj->abc", da, pz, a)
        + np.einsum("ai,ij,bjc->abc", a, pz, da)
    )
    return out.real


# ---------------------------------------------------------------------------
# Observables


@dataclass(frozen=True)
class Observable:
    """Real function of ``b`` with an optional holomorphic (Wirtinger) derivative.

    ``dz(b)`` returns the matrix ``df/db_ij`` treating ``conj(b)`` as
    independent; when absent, gradients use a five-point central difference
    in the real coordinates with step ``FD_REL_STEP * scale``.
    """

    value: Callable
    dz: Callable | None = None
    name: str = ""
    scale: float = 1.0

    def __call__(self, b) -> float:
        return float(self.value(b))


def gradient(obs: Observable, b) -> np.ndarray:
    b = np.asarray(b)
    n = b.shape[0]
    if obs.dz is not None:
        d = np.asarray(obs.dz(b))
        out = []
        for i, j in _strict_indices(n):
            out += [2.0 * d[i, j].real, -2.0 * d[i, j].imag]
        last = 2.0 * d[n - 1, n - 1].real * b[n - 1, n - 1].real
        for m in range(n - 1):
            out.append(2.0 * d[m, m].real * b[m, m].real - last)
        return np.array(out)
    return fd_gradient(obs, b)


def fd_gradient(obs, b) -> np.ndarray:
    b = np.asarray(b)
    n = b.shape[0]
    u = to_coords(b)
    h = FD_REL_STEP * getattr(obs, "scale", 1.0)
    out = np.empty(u.size)
    for c in range(u.size):
        e = np.zeros(u.size)
        e[c] = h
        f1 = obs(from_coords(u + e, n)) - obs(from_coords(u - e, n))
        f2 = obs(from_coords(u + 2 * e, n)) - obs(from_coords(u - 2 * e, n))
        # fourth order: a plain two-point stencil is roundoff-limited when nested
        out[c] = (8.0 * f1 - f2) / (12.0 * h)
    return out


def coordinate(index: int, n: int) -> Observable:
    """The real coordinate function ``u_index``."""
    lab = coord_labels(n)[index]
    n_strict = n * (n - 1) // 2

    def value(b):
        return to_coords(b)[index]

    def dz(b):
        d = np.zeros((n, n), dtype=np.complex128)
        if index < 2 * n_strict:
            i, j = _strict_indices(n)[index // 2]
            d[i, j] = 0.5 if index % 2 == 0 else -0.5j
        else:
            m = index - 2 * n_strict
            d[m, m] = 0.5 / b[m, m].real
        return d

    return Observable(value, dz, lab)


def trace_power(k: int) -> Observable:
    """``tr((b b^dag)^k)``, a dressing invariant."""

    def value(b):
        p = b @ dagger(b)
        return np.trace(np.linalg.matrix_power(p, k)).real

    def dz(b):
        p = b @ dagger(b)
        return k * (dagger(b) @ np.linalg.matrix_power(p, k - 1)).T

    return Observable(value, dz, f"tr((bb^dag)^{k})")


def polynomial_observable(rng, n: int, scale: float = 1.0) -> Observable:
    """Random real quadratic polynomial ``Re(c.z) + Re(z^T M conj z)`` in the upper entries."""
    idx = upper_indices(n)
    size = len(idx)
    c = scale * (rng.normal(size=size) + 1j * rng.normal(size=size))
    mm = scale * (rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size)))

    def vec(b):
        return np.array([b[i, j] for i, j in idx])

    def value(b):
        z = vec(b)
        return (c @ z + z @ mm @ z.conj()).real

    def dz(b):
        z = vec(b)
        g = 0.5 * (c + mm @ z.conj() + (mm.T @ z).conj())
        d = np.zeros((n, n), dtype=np.complex128)
        for (i, j), v in zip(idx, g):
            d[i, j] = v
        return d

    return Observable(value, dz, "poly")


def without_gradient(obs: Observable) -> Observable:
    return Observable(obs.value, None, obs.name, obs.scale)


# ---------------------------------------------------------------------------
# Brackets and checks


def bracket_fn(b, f: Observable, g: Observable, consistency_tol: float | None = None) -> float:
    """``{f, g}_B(b)`` by the chain rule over the real coordinates.

    With ``consistency_tol`` set, analytic gradients are compared with central
    differences first and ``ToleranceExceeded`` is raised on disagreement.
    """
    b = np.asarray(b)
    gf, gg = gradient(f, b), gradient(g, b)
    if consistency_tol is not None:
        for obs, grad in ((f, gf), (g, gg)):
            if obs.dz is None:
                continue
            err = np.abs(grad - fd_gradient(obs, b)).max()
            if err > consistency_tol * max(1.0, np.abs(grad).max()):
                raise ToleranceExceeded(f"gradient of {obs.name or 'observable'} inconsistent: {err:.3e}")
    return float(gf @ poisson_matrix(b) @ gg)


def bracket_observable(f: Observable, g: Observable) -> Observable:
    """``{f, g}`` as an observable (no analytic derivative)."""
    return Observable(lambda b: bracket_fn(b, f, g), None, f"{{{f.name},{g.name}}}")


def schouten_residual(b, f: Observable, g: Observable, h: Observable, printed: bool = False) -> float:
    """Jacobiator ``{f,{g,h}} + cyc`` from the closed-form derivative of ``P``.

    Second derivatives of the observables cancel in the cyclic sum, so only
    first derivatives and ``dP`` enter.
    """
    p = poisson_matrix(b, printed)
    dp = poisson_matrix_derivative(b, printed)
    gf, gg, gh = gradient(f, b), gradient(g, b), gradient(h, b)
    # J_abc = sum_l P_al dP_bc/du_l + cyclic(a, b, c)
    t = np.einsum("al,bcl->abc", p, dp)
    jac = t + t.transpose(1, 2, 0) + t.transpose(2, 0, 1)
    return float(np.einsum("abc,a,b,c->", jac, gf, gg, gh))


def jacobi_check(b, f: Observable, g: Observable, h: Observable, analytic: bool = True) -> float:
    """Absolute cyclic-sum residual of the Jacobi identity.

    ``analytic=True`` uses :func:`schouten_residual`; otherwise the inner
    brackets are differentiated by central differences.
    """
    if analytic:
        return abs(schouten_residual(b, f, g, h))
    total = 0.0
    for x, y, z in ((f, g, h), (g, h, f), (h, f, g)):
        total += bracket_fn(b, x, bracket_observable(y, z))
    return abs(total)


def center_check(b, f_invariant: Observable) -> float:
    """Largest ``|{f, u_a}|`` over all real coordinates ``u_a``."""
    return float(np.abs(poisson_matrix(b) @ gradient(f_invariant, b)).max())


# ---------------------------------------------------------------------------
# Linearisation at the identity


def borel_from_beta(beta0, beta_plus) -> np.ndarray:
    """``b = exp(beta0) exp(beta_plus)`` with ``beta0`` real diagonal (zero trace)."""
    beta0 = np.asarray(beta0, dtype=float)
    return np.diag(np.exp(beta0)).astype(np.complex128) @ expm(np.triu(as_complex(beta_plus), 1))


def beta_of(b):
    """Inverse of :func:`borel_from_beta`."""
    b = np.asarray(b)
    d = np.diag(b).real
    return np.log(d), nilpotent_log(b / d[:, np.newaxis])


def random_borel(rng, n: int, spread: float = 0.5) -> np.ndarray:
    """Seeded element of B: ``exp(beta0) exp(beta_plus)`` with normal entries of width ``spread``."""
    beta0 = rng.normal(scale=spread, size=n)
    beta0 -= beta0.mean()
    bp = rng.normal(scale=spread, size=(n, n)) + 1j * rng.normal(scale=spread, size=(n, n))
    return borel_from_beta(beta0, np.triu(bp, 1))


def cartan_basis(n: int) -> list[np.ndarray]:
    """``X^g = i (E_gg - E_{g+1,g+1})`` spanning the torus Lie algebra."""
    out = []
    for g in range(n - 1):
        x = np.zeros((n, n), dtype=np.complex128)
        x[g, g], x[g + 1, g + 1] = 1j, -1j
        out.append(x)
    return out


def offdiag_basis(n: int) -> list[np.ndarray]:
    """``E_jk - E_kj`` and ``i(E_jk + E_kj)`` for j < k."""
    out = []
    for j, k in _strict_indices(n):
        y = np.zeros((n, n), dtype=np.complex128)
        y[j, k], y[k, j] = 1.0, -1.0
        out.append(y)
        y = np.zeros((n, n), dtype=np.complex128)
        y[j, k] = y[k, j] = 1j
        out.append(y)
    return out


def pairing(x, y) -> float:
    """``Im tr(x y)``."""
    return float(np.trace(np.asarray(x) @ np.asarray(y)).imag)


def beta_observables(n: int):
    """Coordinate functions ``(beta0, X^g)`` and ``(beta_plus, Y^i)`` as observables."""
    xs, ys = cartan_basis(n), offdiag_basis(n)

    def make0(x):
        return Observable(lambda b: pairing(np.diag(beta_of(b)[0]), x), None, "beta0")

    def makep(y):
        return Observable(lambda b: pairing(beta_of(b)[1], y), None, "beta+")

    return [make0(x) for x in xs], [makep(y) for y in ys]


def linearization_residuals(beta0, beta_plus, scale: float):
    """Residuals of the linear bracket relations at ``b = exp(s beta0) exp(s beta_plus)``.

    Returns ``(mixed, plus)``: the largest deviation of ``{beta+^k, beta0^g}``
    from ``([Y^k, X^g], beta_plus)`` (an exact relation) and of
    ``{beta+^i, beta+^j}`` from ``([Y^i, Y^j], beta0 + beta_plus)``.
    """
    b0 = scale * np.asarray(beta0, dtype=float)
    bp = scale * np.triu(as_complex(beta_plus), 1)
    b = borel_from_beta(b0, bp)
    n = b.shape[0]
    xs, ys = cartan_basis(n), offdiag_basis(n)
    obs0, obsp = beta_observables(n)
    p = poisson_matrix(b)
    g0 = [fd_gradient(o, b) for o in obs0]
    gp = [fd_gradient(o, b) for o in obsp]
    beta = np.diag(b0).astype(np.complex128) + bp
    mixed = 0.0
    for k, y in enumerate(ys):
        for g, x in enumerate(xs):
            lhs = gp[k] @ p @ g0[g]
            rhs = pairing(y @ x - x @ y, bp)
            mixed = max(mixed, abs(lhs - rhs))
    plus = 0.0
    for i, yi in enumerate(ys):
        for j, yj in enumerate(ys):
            lhs = gp[i] @ p @ gp[j]
            rhs = pairing(yi @ yj - yj @ yi, beta)
            plus = max(plus, abs(lhs - rhs))
    return mixed, plus


def linearization_check(beta0, beta_plus, scales=(1e-1, 1e-2, 1e-3)):
    """Fit the log-log slope of the ``{beta+, beta+}`` residual against the scale.

    Returns ``(slope, mixed_max, plus_residuals)``.
    """
    mixed_max = 0.0
    plus = []
    for s in scales:
        m, r = linearization_residuals(beta0, beta_plus, s)
        mixed_max = max(mixed_max, m)
        plus.append(r)
    slope = float(np.polyfit(np.log(scales), np.log(plus), 1)[0])
    return slope, mixed_max, np.array(plus)


# ---------------------------------------------------------------------------
# Independent route: the bracket -(b^{-1} d^L f b, d^R g) with (X, Y) = Im tr(XY)


def _borel_algebra_basis(n: int) -> list[np.ndarray]:
    out = []
    for j, k in _strict_indices(n):
        e = np.zeros((n, n), dtype=np.complex128)
        e[j, k] = 1.0
        out += [e, 1j * e]
    for g in range(n - 1):
        h = np.zeros((n, n), dtype=np.complex128)
        h[g, g], h[g + 1, g + 1] = 1.0, -1.0
        out.append(h)
    return out


def _compact_algebra_basis(n: int) -> list[np.ndarray]:
    return offdiag_basis(n) + cartan_basis(n)


def _invariant_derivative(f, b, left: bool, h: float) -> np.ndarray:
    """``d^L f`` or ``d^R f`` in su(n), from central differences along the Borel algebra."""
    n = b.shape[0]
    bb, gg = _borel_algebra_basis(n), _compact_algebra_basis(n)
    gram = np.array([[pairing(x, y) for y in gg] for x in bb])
    ders = []
    for y in bb:
        ep, em = expm(h * y), expm(-h * y)
        if left:
            ders.append((f(ep @ b) - f(em @ b)) / (2 * h))
        else:
            ders.append((f(b @ ep) - f(b @ em)) / (2 * h))
    coef = np.linalg.solve(gram, np.array(ders))
    return sum(c * g for c, g in zip(coef, gg))


def bracket_from_definition(b, f, g, h: float = 1e-6) -> float:
    """``{f, g}_B(b) = -(b^{-1} d^L f(b) b, d^R g(b))``, evaluated numerically.

    Independent of the matrix-entry formulas; used to validate them.
    """
    b = np.asarray(b)
    dl = _invariant_derivative(f, b, True, h)
    dr = _invariant_derivative(g, b, False, h)
    return -pairing(np.linalg.solve(b, dl @ b), dr)
