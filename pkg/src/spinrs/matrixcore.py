"""Dense complex matrix kernels for small SU(n) / SL(n, C) computations.

Everything here works on plain ``numpy`` arrays of dtype complex128 (or
float64 vectors for eigenvalues and phases).  Functions never modify their
inputs.

Conventions
-----------
* A torus element is stored by its phase vector ``q``; ``torus(q)`` returns
  ``diag(exp(1j*q))``.
* The alcove representative of a regular SU(n) conjugacy class is the unique
  phase vector with ``q[0] > q[1] > ... > q[-1]``, ``q[0] - q[-1] < 2*pi`` and
  ``sum(q) == 0``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import (
    NonRegularTorus,
    NotHermitian,
    NotPositiveDefinite,
    NotUnipotent,
    NotUnitary,
)

TWO_PI = 2.0 * math.pi
REGULARITY_TOL = 1e-9
JACOBI_TOL = 1e-13
# Eigenvalues of the Hermitian part closer than this are treated as one block
# and separated by the anti-Hermitian part.
_CLUSTER_TOL = 1e-4


def as_complex(a) -> np.ndarray:
    return np.array(a, dtype=np.complex128, copy=True)


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def torus(q) -> np.ndarray:
    """Diagonal unitary ``diag(exp(i q))``."""
    return np.diag(np.exp(1j * np.asarray(q, dtype=float)))


def alcove_gaps(q) -> np.ndarray:
    """Consecutive gaps ``q_a - q_{a+1}`` followed by the wrap gap ``2pi - (q_1 - q_n)``."""
    q = np.asarray(q, dtype=float)
    return np.append(q[:-1] - q[1:], TWO_PI - (q[0] - q[-1]))


def min_alcove_gap(q) -> float:
    return float(np.min(alcove_gaps(q)))


def check_alcove(q, tol: float = REGULARITY_TOL) -> list[str]:
    """Return a list of human-readable violations of the alcove conditions (empty if fine)."""
    q = np.asarray(q, dtype=float)
    problems = []
    if q.ndim != 1 or q.size < 2:
        return ["q must be a vector with at least 2 entries"]
    if not np.all(np.isfinite(q)):
        return ["q has non-finite entries"]
    if abs(q.sum()) > 1e-9 * max(1.0, np.abs(q).max()):
        problems.append(f"sum(q) must be 0, got {q.sum():.3e}")
    gaps = alcove_gaps(q)
    for a in range(q.size - 1):
        if gaps[a] <= 0:
            problems.append(f"ordering q_{a + 1} > q_{a + 2} violated")
        elif gaps[a] < tol:
            problems.append(f"gap q_{a + 1} - q_{a + 2} = {gaps[a]:.3e} below regularity tolerance")
    if gaps[-1] <= 0:
        problems.append("q_1 - q_n < 2*pi violated")
    elif gaps[-1] < tol:
        problems.append(f"wrap gap 2*pi - (q_1 - q_n) = {gaps[-1]:.3e} below regularity tolerance")
    return problems


def require_regular(q, tol: float = REGULARITY_TOL) -> None:
    gap = min_alcove_gap(q)
    if gap < tol or not np.all(np.diff(q) < 0):
        raise NonRegularTorus(f"torus point not regular: min alcove gap {gap:.3e}", min_gap=gap)


def normalize_phases(theta) -> np.ndarray:
    """Map a multiset of SU(n) eigenphases to its alcove representative.

    Returns the representative sorted decreasingly; the permutation that was
    applied is available through :func:`normalize_phases_with_order`.
    """
    return normalize_phases_with_order(theta)[0]


def normalize_phases_with_order(theta):
    theta = np.angle(np.exp(1j * np.asarray(theta, dtype=float)))
    order = list(np.argsort(-theta, kind="stable"))
    vals = [float(theta[i]) for i in order]
    m = int(round(sum(vals) / TWO_PI))
    while m > 0:
        vals = vals[1:] + [vals[0] - TWO_PI]
        order = order[1:] + order[:1]
        m -= 1
    while m < 0:
        vals = [vals[-1] + TWO_PI] + vals[:-1]
        order = order[-1:] + order[:-1]
        m += 1
    q = np.array(vals)
    q -= q.mean()
    return q, np.array(order, dtype=int)


# ---------------------------------------------------------------------------
# Hermitian eigensolver


def hermitian_eig(h, tol: float = JACOBI_TOL, max_sweeps: int = 60):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    h : (n, n) array_like
        Hermitian input; ``NotHermitian`` is raised if ``||h - h^dag||`` exceeds
        ``1e-10 * ||h||``.
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm is below
        ``tol * ||h||``.

    Returns
    -------
    w : (n,) ndarray
        Eigenvalues in ascending order.
    u : (n, n) ndarray
        Unitary matrix whose columns are the eigenvectors, ``h u = u diag(w)``.
    """
    a = as_complex(h)
    n = a.shape[0]
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - dagger(a)) > 1e-10 * max(scale, 1e-300):
        raise NotHermitian("matrix is not Hermitian")
    a = 0.5 * (a + dagger(a))
    u = np.eye(n, dtype=np.complex128)
    if scale == 0.0:
        return np.zeros(n), u
    # Sweeps continue past ``tol`` down to roundoff: eigenvector accuracy is
    # off-norm / eigengap, and nearly degenerate pairs need the extra digits.
    thresh = min(tol, 1e-15) * scale
    prev_off = np.inf
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= thresh or (off <= tol * scale and off >= 0.5 * prev_off):
            break
        prev_off = off
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300 or mag < 1e-18 * scale:
                    continue
                phase = apq / mag
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                g = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = dagger(g) @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                u[:, idx] = u[:, idx] @ g
    w = np.diag(a).real
    order = np.argsort(w, kind="stable")
    return w[order].copy(), u[:, order]


# ---------------------------------------------------------------------------
# Unitary diagonalisation


def _fix_column_phases(v: np.ndarray, reference: np.ndarray | None) -> np.ndarray:
    v = v.copy()
    for j in range(v.shape[1]):
        col = v[:, j]
        if reference is not None:
            ov = np.vdot(reference[:, j], col)
            if abs(ov) > 1e-300:
                v[:, j] = col * (abs(ov) / ov)
                continue
        mags = np.abs(col)
        k = int(np.flatnonzero(mags >= mags.max() * (1.0 - 1e-12))[0])
        v[:, j] = col * (mags[k] / col[k])
    return v


def unitary_diag(w, reference=None, tol: float = REGULARITY_TOL):
    """Diagonalise a special unitary matrix.

    Returns ``(phases, eta)`` with ``eta^{-1} w eta = diag(exp(1j*phases))``.
    ``phases`` is the alcove representative (strictly decreasing, zero sum) and
    the columns of ``eta`` follow that order.  Column phases are fixed either by
    maximal overlap with ``reference`` or, without a reference, by making the
    largest-modulus entry of each column real positive.

    Works in two stages: the Hermitian part ``(w + w^dag)/2`` is diagonalised
    first, and any near-degenerate block of it is split with the Hermitian
    matrix ``(w - w^dag)/(2i)``, which commutes with it because ``w`` is normal.
    """
    w = as_complex(w)
    n = w.shape[0]
    if np.linalg.norm(w @ dagger(w) - np.eye(n)) > 1e-10:
        raise NotUnitary("matrix is not unitary")
    herm = 0.5 * (w + dagger(w))
    anti = (w - dagger(w)) / 2j
    cvals, v = hermitian_eig(herm)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and cvals[stop] - cvals[stop - 1] < _CLUSTER_TOL:
            stop += 1
        if stop - start > 1:
            block = v[:, start:stop]
            _, rot = hermitian_eig(dagger(block) @ anti @ block)
            v[:, start:stop] = block @ rot
        start = stop
    theta = np.angle(np.einsum("ij,jk,ki->i", dagger(v), w, v))
    phases, order = normalize_phases_with_order(theta)
    v = v[:, order]
    gap = min_alcove_gap(phases)
    if gap < tol:
        raise NonRegularTorus(f"eigenphases not separated: min gap {gap:.3e}", min_gap=gap)
    eta = _fix_column_phases(v, None if reference is None else np.asarray(reference))
    return phases, eta


# ---------------------------------------------------------------------------
# Triangular factorizations


def upper_cholesky(h) -> np.ndarray:
    """Upper-triangular ``r`` with positive diagonal such that ``h = r r^dag``."""
    h = as_complex(h)
    rev = h[::-1, ::-1]
    try:
        low = np.linalg.cholesky(0.5 * (rev + dagger(rev)))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("matrix is not positive definite") from exc
    return low[::-1, ::-1].copy()


def udu_factor(lax):
    """Factor ``lax = n_plus diag(exp(2p)) n_plus^dag`` with ``n_plus`` upper unipotent."""
    lax = as_complex(lax)
    if np.linalg.norm(lax - dagger(lax)) > 1e-10 * np.linalg.norm(lax):
        raise NotHermitian("Lax matrix is not Hermitian")
    r = upper_cholesky(lax)
    d = np.diag(r).real
    p = np.log(d)
    return r / d[np.newaxis, :], p


def qr_positive(k):
    """QR factorization ``k = q r`` normalised so that ``diag(r) > 0``."""
    q, r = np.linalg.qr(as_complex(k))
    d = np.diag(r)
    if np.any(np.abs(d) < 1e-300):
        raise np.linalg.LinAlgError("singular matrix")
    ph = d / np.abs(d)
    return q * ph[np.newaxis, :], r / ph[:, np.newaxis]


def rq_positive(k):
    """RQ factorization ``k = r q`` with ``r`` upper triangular, ``diag(r) > 0``, ``q`` unitary."""
    k = as_complex(k)
    q0, r0 = qr_positive(k[::-1, :].T)
    r = r0.T[::-1, ::-1].copy()
    q = q0.T[::-1, :].copy()
    return r, q


# ---------------------------------------------------------------------------
# Exponential and logarithm


def _is_strictly_triangular(a: np.ndarray) -> bool:
    return not np.any(np.tril(a)) or not np.any(np.triu(a))


def expm(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring of a truncated Taylor series.

    Strictly triangular (nilpotent) input is summed exactly with ``n - 1`` terms.
    """
    a = as_complex(a)
    n = a.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    if _is_strictly_triangular(a):
        out = eye.copy()
        term = eye
        for k in range(1, n):
            term = term @ a / k
            out = out + term
        return out
    norm = np.linalg.norm(a, 1)
    s = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    x = a / (2.0**s)
    out = eye.copy()
    term = eye
    for k in range(1, 19):
        term = term @ x / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def nilpotent_log(u) -> np.ndarray:
    """Logarithm of an upper unipotent matrix (finite series)."""
    u = as_complex(u)
    n = u.shape[0]
    scale = max(1.0, np.abs(u).max())
    if np.abs(np.tril(u, -1)).max() > 1e-12 * scale or np.abs(np.diag(u) - 1).max() > 1e-10 * scale:
        raise NotUnipotent("matrix is not upper unipotent")
    x = np.triu(u, 1)
    out = np.zeros_like(x)
    term = np.eye(n, dtype=np.complex128)
    for k in range(1, n):
        term = term @ x
        out = out + ((-1) ** (k + 1) / k) * term
    return out
