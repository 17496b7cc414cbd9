import numpy as np
import pytest

from helpers import random_lax, random_state
from spinrs.dynamics import (
    FlowConfig,
    Trajectory,
    comparison_observables,
    compensator,
    drift_report,
    integrate,
    project_solve,
    project_trajectory,
    rhs,
    rmatrix_rhs,
    velocity,
)
from spinrs.errors import NonRegularTorus, ToleranceExceeded
from spinrs.matrixcore import expm, torus, unitary_diag
from spinrs.phasespace import ReducedState, gauge_invariant_observables, lax, mixed_invariant


def random_q(rng, n):
    return random_state(rng, n).q


def cot(x):
    return 1.0 / np.tan(x)


def test_config_validation():
    FlowConfig()
    with pytest.raises(ValueError, match="dt"):
        FlowConfig(dt=0.0)
    with pytest.raises(ValueError, match="exceed"):
        FlowConfig(t_end=0.1, dt=0.2)
    with pytest.raises(ValueError, match="method"):
        FlowConfig(method="euler")
    with pytest.raises(ValueError, match="sample_stride"):
        FlowConfig(sample_stride=0)


def test_trajectory_times_increase(state3):
    traj = Trajectory()
    traj.append(0.0, state3, None)
    with pytest.raises(ValueError):
        traj.append(0.0, state3, None)


def test_velocity():
    np.testing.assert_allclose(velocity(np.eye(3)), 0.0, atol=1e-16)
    e = np.e
    c = (e**2 + e**-2) / 2
    np.testing.assert_allclose(velocity(np.diag([e**2, e**-2])), 2j * np.diag([e**2 - c, e**-2 - c]))


def test_velocity_commutes(rng):
    for n in range(2, 7):
        lm = random_lax(rng, n)
        v = velocity(lm)
        assert np.abs(v @ lm - lm @ v).max() < 1e-12 * np.abs(lm).max() ** 2
        assert abs(np.trace(v)) < 1e-12 * np.abs(lm).max()
        np.testing.assert_allclose(v, -v.conj().T, atol=1e-14 * np.abs(v).max())


def test_compensator_diagonal_and_n2(rng):
    q = np.array([1.0, 0.2, -1.2])
    lm = np.diag([2.0, 0.8, 1 / 1.6])
    np.testing.assert_allclose(compensator(q, lm), -1j * np.diag(np.diag(lm) - np.trace(lm) / 3))
    a = 0.7
    lm = random_lax(rng, 2)
    y = compensator([a, -a], lm)
    assert y[0, 1] == pytest.approx((cot(a) - 1j) * lm[0, 1], rel=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_compensator_defining_equation(rng, n):
    for _ in range(10):
        q = random_q(rng, n)
        lm = random_lax(rng, n)
        y = compensator(q, lm)
        off = ~np.eye(n, dtype=bool)
        y_perp = np.where(off, y, 0)
        tq = torus(q)
        lhs = tq @ y_perp @ tq.conj() - y_perp
        v = velocity(lm)
        np.testing.assert_allclose(lhs[off], v[off], atol=1e-12 * np.abs(v).max())
        np.testing.assert_allclose(y, -y.conj().T, atol=1e-13 * np.abs(y).max())
        assert abs(np.trace(y)) < 1e-12


def test_rhs_free_motion():
    p = np.array([0.4, -0.1, -0.3])
    st_ = ReducedState([1.0, 0.2, -1.2], p)
    qdot, ldot = rhs(st_.q, lax(st_))
    e = np.exp(2 * p)
    np.testing.assert_allclose(qdot, 2 * e - 2 * e.sum() / 3)
    np.testing.assert_allclose(ldot, 0.0, atol=1e-16)


def test_rhs_matches_explicit_formulas(rng):
    for n in (3, 4):
        q = random_q(rng, n)
        lm = random_lax(rng, n)
        qdot, ldot = rhs(q, lm)
        assert abs(qdot.sum()) < 1e-13
        c = lambda a, b: cot((q[a] - q[b]) / 2)  # noqa: E731
        for j in range(n):
            expected = 2 * sum(abs(lm[j, l]) ** 2 * c(j, l) for l in range(n) if l != j)
            assert ldot[j, j] == pytest.approx(expected, abs=1e-12)
            for k in range(n):
                if k == j:
                    continue
                first = sum(lm[j, l] * lm[l, k] * c(j, l) for l in range(n) if l != j)
                second = sum(lm[j, l] * lm[l, k] * c(l, k) for l in range(n) if l != k)
                assert abs(ldot[j, k] - (first - second)) < 1e-12 * np.abs(lm).max() ** 2
        assert abs(np.trace(ldot)) < 1e-12
        assert abs(np.trace(lm @ ldot)) < 1e-11


def test_rmatrix_form(rng):
    np.testing.assert_allclose(rmatrix_rhs([1.0, 0.0, -1.0], np.diag([2.0, 1.0, 0.5])), 0.0)
    for n in range(2, 7):
        for _ in range(20):
            q = random_q(rng, n)
            lm = random_lax(rng, n)
            assert np.abs(rhs(q, lm)[1] - rmatrix_rhs(q, lm)).max() < 1e-12 * max(1, np.abs(lm).max() ** 2)


def test_rmatrix_n2_hand_commutator():
    a, l12 = 0.6, 0.3 - 0.4j
    lm = np.array([[1.3, l12], [np.conj(l12), 1 / 1.3 + abs(l12) ** 2 / 1.3]])
    ld = rmatrix_rhs([a, -a], lm)
    assert ld[0, 0].real == pytest.approx(2 * abs(l12) ** 2 * cot(a), rel=1e-13)


def test_integrate_free_motion():
    p = np.array([0.3, -0.1, -0.2])
    st_ = ReducedState([1.0, 0.2, -1.2], p)
    traj = integrate(st_, FlowConfig(t_end=0.5, dt=1e-2, sample_stride=5))
    e = np.exp(2 * p)
    v = 2 * e - 2 * e.sum() / 3
    for t, s in zip(traj.times, traj.states):
        np.testing.assert_allclose(s.q, st_.q + t * v, atol=1e-13)
        np.testing.assert_allclose(s.p, p, atol=1e-14)
    assert all(val < 1e-13 for val in drift_report(traj).values())
    assert traj.termination == "completed"
    assert traj.times[-1] == pytest.approx(0.5)


def test_integrate_sampling_layout(state3):
    traj = integrate(state3, FlowConfig(t_end=0.1, dt=1e-2, sample_stride=3))
    np.testing.assert_allclose(traj.times, [0, 0.03, 0.06, 0.09, 0.1])
    assert len(traj.states) == len(traj.ledgers) == 5


def test_integrate_wall():
    st_ = ReducedState([0.5, -0.5], [-1.0, 1.0])
    with pytest.raises(NonRegularTorus) as info:
        integrate(st_, FlowConfig(t_end=1.0, dt=1e-3))
    err = info.value
    assert err.partial is not None and err.partial.termination == "NonRegularTorus"
    assert err.last_good_time == err.partial.times[-1]
    # collision time of the free motion
    v = 2 * np.exp(-2) - (np.exp(-2) + np.exp(2))
    t_wall = 0.5 / -v
    assert err.last_good_time <= t_wall < err.last_good_time + 0.011


def test_integrate_drift_guard(state3):
    with pytest.raises(ToleranceExceeded) as info:
        integrate(state3, FlowConfig(t_end=0.5, dt=0.05, sample_stride=1, max_drift=1e-14))
    assert info.value.partial.termination == "ToleranceExceeded"
    assert "drift" in info.value.to_dict()


def test_conservation_and_mixed_invariants(state3):
    traj = integrate(state3, FlowConfig(t_end=2.0, dt=1e-3, sample_stride=100))
    drift = drift_report(traj)
    for key in ("tr_L2", "tr_L3", "tr_L_QinvLQ", "H_red"):
        assert drift[key] < 1e-8
    assert max(v for k, v in drift.items() if k.startswith("spin_eig")) < 1e-6
    words = ["AB", "AAB", "ABB", "BBB"]
    first = [mixed_invariant(traj.states[0], w) for w in words]
    for s in traj.states[1:]:
        for w, v0 in zip(words, first):
            assert abs(mixed_invariant(s, w) - v0) < 1e-8


def test_momentum_reconstruction_consistency(state3):
    dt = 1e-3
    traj = integrate(state3, FlowConfig(t_end=0.2, dt=dt, sample_stride=1))
    qs = np.array([s.q for s in traj.states])
    qdot_fd = (qs[2:] - qs[:-2]) / (2 * dt)
    for i in range(1, len(qs) - 1):
        lm = lax(traj.states[i])
        expected = 2 * np.diag(lm).real - 2 * np.trace(lm).real / 3
        assert np.abs(qdot_fd[i - 1] - expected).max() < 1e-5


def test_project_solve_t0(state3):
    back = project_solve(state3, 0.0)
    np.testing.assert_allclose(gauge_invariant_observables(back), gauge_invariant_observables(state3), atol=1e-12)
    np.testing.assert_allclose(back.q, state3.q, atol=1e-13)


def test_project_solve_free_motion():
    p = np.array([0.3, -0.1, -0.2])
    st_ = ReducedState([1.0, 0.2, -1.2], p)
    e = np.exp(2 * p)
    v = 2 * e - 2 * e.sum() / 3
    for t in np.linspace(0.0, 1.0, 11):
        s = project_solve(st_, t)
        np.testing.assert_allclose(s.q, st_.q + t * v, atol=1e-12)
        np.testing.assert_allclose(s.p, p, atol=1e-12)


def test_unitary_diag_phases_track_rk4(state3):
    traj = integrate(state3, FlowConfig(t_end=0.05, dt=1e-3, sample_stride=10))
    l0 = lax(state3)
    for t, s in zip(traj.times, traj.states):
        phases, _ = unitary_diag(expm(t * velocity(l0)) @ torus(state3.q))
        np.testing.assert_allclose(phases, s.q, atol=1e-6)


def test_projection_agrees_with_rk4(state3):
    traj = integrate(state3, FlowConfig(t_end=1.0, dt=1e-3, sample_stride=50))
    proj = project_trajectory(state3, traj.times)
    for a, b in zip(traj.states, proj.states):
        assert np.abs(comparison_observables(a) - comparison_observables(b)).max() < 1e-6


def test_projection_wall():
    st_ = ReducedState([0.5, -0.5], [-1.0, 1.0])
    with pytest.raises(NonRegularTorus) as info:
        project_trajectory(st_, np.linspace(0, 0.2, 21))
    assert info.value.partial.times[-1] < 0.07


def test_drift_order_four(state3):
    drifts = []
    for dt in (0.02, 0.01, 0.005):
        traj = integrate(state3, FlowConfig(t_end=2.0, dt=dt, sample_stride=1))
        drifts.append(drift_report(traj)["tr_L2"])
    assert drifts[0] / drifts[1] > 10 and drifts[1] / drifts[2] > 10


def test_drift_report_trivial(state3):
    assert drift_report(Trajectory()) == {}
