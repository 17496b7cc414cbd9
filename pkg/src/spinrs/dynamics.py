"""Reduced equations of motion for ``H = tr(b_R b_R^dag)`` and their solution.

The flow is written for the pair ``(q, L)``::

    q_dot_j = 2 L_jj - (2/n) tr L
    L_dot   = [Y, L]

with ``Y_jk = (cot((q_j - q_k)/2) - i) L_jk`` off the diagonal.  The diagonal of
``Y`` is a gauge freedom; ``Y_jj = -i (L_jj - tr L / n)`` is used throughout,
which makes the commutator agree term by term with the dynamical R-matrix form.

Two independent solvers are provided: fixed-step RK4 (:func:`integrate`) and
the projection of the explicitly known unreduced flow (:func:`project_solve`).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import NonRegularTorus, ToleranceExceeded
from .matrixcore import (
    REGULARITY_TOL,
    dagger,
    expm,
    min_alcove_gap,
    require_regular,
    torus,
    unitary_diag,
)
from .phasespace import (
    InvariantLedger,
    ReducedState,
    gauge_invariant_observables,
    invariant_ledger,
    lax,
    recover_state,
)

log = logging.getLogger(__name__)

METHODS = ("rk4", "projection", "both")


@dataclass(frozen=True)
class FlowConfig:
    t_end: float = 1.0
    dt: float = 1e-3
    method: str = "rk4"
    sample_stride: int = 10
    regularity_tolerance: float = REGULARITY_TOL
    max_drift: float | None = None

    def __post_init__(self):
        problems = []
        if not self.dt > 0:
            problems.append("dt must be positive")
        elif self.dt > self.t_end:
            problems.append("dt must not exceed t_end")
        if self.method not in METHODS:
            problems.append(f"method must be one of {METHODS}")
        if int(self.sample_stride) != self.sample_stride or self.sample_stride < 1:
            problems.append("sample_stride must be a positive integer")
        if not self.regularity_tolerance > 0:
            problems.append("regularity_tolerance must be positive")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    ledgers: list = field(default_factory=list)
    termination: str = "completed"

    def append(self, t: float, state: ReducedState, ledger: InvariantLedger) -> None:
        if self.times and not t > self.times[-1]:
            raise ValueError("trajectory times must be strictly increasing")
        self.times.append(float(t))
        self.states.append(state)
        self.ledgers.append(ledger)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def drift(self) -> dict:
        return drift_report(self)


# ---------------------------------------------------------------------------
# Vector field


def velocity(lax_matrix) -> np.ndarray:
    """Derivative ``V(L) = 2i L - (2i/n) tr(L)`` of ``h = tr(b b^dag)``; the only h-specific function."""
    lm = np.asarray(lax_matrix)
    n = lm.shape[0]
    return 2j * lm - (2j / n) * np.trace(lm) * np.eye(n)


def _cot_half_differences(q) -> np.ndarray:
    """``cot((q_j - q_k)/2)`` off the diagonal, zero on it."""
    q = np.asarray(q, dtype=float)
    diff = 0.5 * (q[:, np.newaxis] - q[np.newaxis, :])
    n = q.size
    out = np.zeros((n, n))
    mask = ~np.eye(n, dtype=bool)
    out[mask] = 1.0 / np.tan(diff[mask])
    return out


def compensator(q, lax_matrix, tol: float = REGULARITY_TOL) -> np.ndarray:
    """Compensating gauge generator ``Y`` in the canonical diagonal gauge."""
    require_regular(q, tol)
    lm = np.asarray(lax_matrix)
    n = lm.shape[0]
    y = (_cot_half_differences(q) - 1j) * lm
    y[np.diag_indices(n)] = -1j * (np.diag(lm).real - np.trace(lm).real / n)
    return y


def rhs(q, lax_matrix, tol: float = REGULARITY_TOL):
    """Return ``(q_dot, L_dot)``."""
    lm = np.asarray(lax_matrix)
    n = lm.shape[0]
    y = compensator(q, lm, tol)
    qdot = 2.0 * np.diag(lm).real - (2.0 / n) * np.trace(lm).real
    return qdot, y @ lm - lm @ y


def r_matrix(q, x, tol: float = REGULARITY_TOL) -> np.ndarray:
    """Dynamical R-matrix: zero on the diagonal, ``-(i/2) cot((q_j - q_k)/2)`` multiplier off it."""
    require_regular(q, tol)
    return -0.5j * _cot_half_differences(q) * np.asarray(x)


def rmatrix_rhs(q, lax_matrix, tol: float = REGULARITY_TOL) -> np.ndarray:
    """``L_dot = [R(Q) V(L), L]``."""
    lm = np.asarray(lax_matrix)
    g = r_matrix(q, velocity(lm), tol)
    return g @ lm - lm @ g


# ---------------------------------------------------------------------------
# Fixed-step integration


def _rk4_step(q, lm, dt, tol):
    k1q, k1l = rhs(q, lm, tol)
    k2q, k2l = rhs(q + 0.5 * dt * k1q, lm + 0.5 * dt * k1l, tol)
    k3q, k3l = rhs(q + 0.5 * dt * k2q, lm + 0.5 * dt * k2l, tol)
    k4q, k4l = rhs(q + dt * k3q, lm + dt * k3l, tol)
    q_new = q + dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
    l_new = lm + dt / 6.0 * (k1l + 2 * k2l + 2 * k3l + k4l)
    return q_new - q_new.mean(), 0.5 * (l_new + dagger(l_new))


def _check_drift(traj: Trajectory, config: FlowConfig) -> None:
    if config.max_drift is None:
        return
    drift = drift_report(traj)
    worst = max(drift, key=drift.get)
    if drift[worst] > config.max_drift:
        traj.termination = "ToleranceExceeded"
        raise ToleranceExceeded(
            f"invariant {worst} drifted by {drift[worst]:.3e} > {config.max_drift:.3e}",
            partial=traj,
            detail={"invariant": worst, "drift": drift[worst]},
        )


def integrate(state0: ReducedState, config: FlowConfig) -> Trajectory:
    """Classical RK4 on ``(q, L)``; ``(p, sigma)`` are reconstructed at every sample.

    Raises ``NonRegularTorus`` (carrying the partial trajectory) when the
    smallest alcove gap falls below the configured tolerance.
    """
    tol = config.regularity_tolerance
    q = state0.q.copy()
    lm = lax(state0)
    traj = Trajectory()
    traj.append(0.0, state0, invariant_ledger(state0, lm))
    n_steps = int(round(config.t_end / config.dt))
    for step in range(1, n_steps + 1):
        try:
            q_new, l_new = _rk4_step(q, lm, config.dt, tol)
            require_regular(q_new, tol)
        except NonRegularTorus as exc:
            traj.termination = "NonRegularTorus"
            t_last = traj.times[-1]
            raise NonRegularTorus(
                f"alcove wall reached after t = {(step - 1) * config.dt:.6g}",
                min_gap=min_alcove_gap(q),
                last_good_time=t_last,
                partial=traj,
            ) from exc
        q, lm = q_new, l_new
        if step % config.sample_stride == 0 or step == n_steps:
            state = recover_state(q, lm, tol)
            traj.append(step * config.dt, state, invariant_ledger(state, lm))
    _check_drift(traj, config)
    return traj


# ---------------------------------------------------------------------------
# Projection method


def project_solve(state0: ReducedState, t: float, reference=None, return_frame: bool = False):
    """Exact solution at time ``t`` by diagonalising ``exp(t V(L0)) Q0``.

    ``reference`` is a previous eigenvector frame used for phase continuity;
    with ``return_frame=True`` the frame of this call is returned as well.
    """
    l0 = lax(state0)
    w = expm(t * velocity(l0)) @ torus(state0.q)
    phases, frame = unitary_diag(w, reference=reference, tol=state0.tol)
    # eta(t) = frame^{-1}: Q(t) = eta W eta^{-1}, L(t) = eta L0 eta^{-1}
    lt = dagger(frame) @ l0 @ frame
    lt = 0.5 * (lt + dagger(lt))
    state = recover_state(phases, lt, state0.tol)
    if return_frame:
        return state, frame
    return state


def project_trajectory(state0: ReducedState, times, config: FlowConfig | None = None) -> Trajectory:
    """Projection solutions at increasing ``times`` with eigenvector continuity tracking.

    A wall crossing between two samples shows up as a relabelling of the
    eigenvectors (each tracked column no longer overlaps most with its own
    predecessor); it is reported as ``NonRegularTorus`` like a direct hit.
    """
    traj = Trajectory()
    frame = None
    l0 = lax(state0)
    for t in times:
        try:
            state, new_frame = project_solve(state0, t, reference=frame, return_frame=True)
            if frame is not None:
                overlap = np.abs(dagger(frame) @ new_frame)
                if np.any(np.argmax(overlap, axis=0) != np.arange(state0.n)):
                    raise NonRegularTorus(
                        f"eigenphases crossed between t = {traj.times[-1]:.6g} and t = {t:.6g}",
                        min_gap=0.0,
                    )
            frame = new_frame
        except NonRegularTorus as exc:
            traj.termination = "NonRegularTorus"
            raise NonRegularTorus(
                str(exc),
                min_gap=exc.min_gap,
                last_good_time=traj.times[-1] if traj.times else None,
                partial=traj,
            ) from exc
        lt = dagger(frame) @ l0 @ frame
        traj.append(t, state, invariant_ledger(state, 0.5 * (lt + dagger(lt))))
    if config is not None:
        _check_drift(traj, config)
    return traj


def comparison_observables(state: ReducedState) -> np.ndarray:
    """``q`` followed by the torus-invariant observables; used to compare solvers."""
    return np.concatenate([state.q, gauge_invariant_observables(state)])


def drift_report(traj: Trajectory) -> dict:
    """Maximum ``|value(t) - value(0)|`` of every recorded invariant."""
    if not traj.ledgers:
        return {}
    first = traj.ledgers[0].as_dict()
    out = {k: 0.0 for k in first}
    for led in traj.ledgers[1:]:
        for k, v in led.as_dict().items():
            out[k] = max(out[k], abs(v - first[k]))
    return out
