"""Command line runner.

Usage::

    spinrs {simulate,project,compare,invariants,scaling-limit,poisson-check}
           [--config FILE] [--out DIR] [--quiet]

The config file is flat ``key = value`` text; ``#`` starts a comment and blank
lines are ignored.  Recognised keys (defaults in brackets):

    n               dimension, >= 2 (taken from q when explicit data is given)
    seed            unsigned integer seed for random data and sampling [0]
    initial         random | explicit [explicit if q is present, else random]
    q, p            comma separated floats (explicit data)
    sigma_jk        "re, im" of the spin entry (j, k), 1-based, j < k [0];
                    sigma_j_k is accepted as well (needed for n >= 10)
    t_end, dt       integration window and step [1, 1e-3]
    stride          samples are written every stride steps [10]
    tolerance       regularity tolerance of the torus [1e-9]
    method          rk4 | projection | both (simulate only) [rk4]
    max_drift       abort with exit 3 if an invariant drifts further [none]
    epsilons        scaling-limit ladder [1e-1, 1e-2, 1e-3, 1e-4]
    poisson_samples number of random triples for poisson-check [50]
    output_dir      where files go [out]; --out overrides

Random data: q from sorted uniform gaps (each >= 0.1) then centred, p uniform
with |p| <= 1 and zero sum, sigma entries uniform on the unit disk.

Exit codes: 0 success, 2 configuration error, 3 numerical error.  Errors are
printed to stderr as one JSON object and written to ``error.json``.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import poissonb
from .dynamics import (
    METHODS,
    FlowConfig,
    Trajectory,
    comparison_observables,
    drift_report,
    integrate,
    project_trajectory,
)
from .errors import ConfigError, SpinRSError
from .matrixcore import REGULARITY_TOL, TWO_PI, check_alcove
from .phasespace import ReducedState, invariant_ledger, lax, mixed_invariant
from .sutherland import SutherlandState, convergence_slope, h_suth, lax_limit_sweep, scaling_limit_sweep

COMMANDS = ("simulate", "project", "compare", "invariants", "scaling-limit", "poisson-check")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
MIN_GAP = 0.1

_FLOAT_KEYS = ("t_end", "dt", "tolerance", "max_drift")
_INT_KEYS = ("n", "seed", "stride", "poisson_samples")
_SIGMA_KEY = re.compile(r"sigma_(\d+)_(\d+)$|sigma_(\d)(\d)$")


@dataclass
class RunConfig:
    command: str = "simulate"
    n: int = 3
    seed: int = 0
    initial: str = "random"
    q: list | None = None
    p: list | None = None
    sigma: dict = field(default_factory=dict)  # (j, k) 0-based -> complex
    flow: FlowConfig = field(default_factory=FlowConfig)
    epsilons: tuple = (1e-1, 1e-2, 1e-3, 1e-4)
    poisson_samples: int = 50
    output_dir: str = "out"

    def echo(self) -> dict:
        d = asdict(self)
        d["sigma"] = {f"{j + 1}{k + 1}": [v.real, v.imag] for (j, k), v in sorted(self.sigma.items())}
        d["epsilons"] = list(self.epsilons)
        return d


def _floats(text):
    return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config document, reporting every violation at once."""
    raw, problems = {}, []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value'")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key in raw:
            problems.append(f"line {lineno}: duplicate key '{key}'")
        raw[key] = value

    cfg = RunConfig()
    flow = {}
    for key, value in raw.items():
        try:
            if key in _INT_KEYS:
                v = int(value)
                if v < 0:
                    raise ValueError
                if key in ("n", "seed", "poisson_samples"):
                    setattr(cfg, key, v)
                else:
                    flow["sample_stride"] = v
            elif key in _FLOAT_KEYS:
                v = float(value)
                if not math.isfinite(v):
                    raise ValueError
                flow[{"tolerance": "regularity_tolerance"}.get(key, key)] = v
            elif key in ("q", "p"):
                setattr(cfg, key, _floats(value))
            elif key == "epsilons":
                cfg.epsilons = tuple(_floats(value))
            elif _SIGMA_KEY.match(key):
                j, k = (int(g) - 1 for g in _SIGMA_KEY.match(key).groups() if g is not None)
                re_im = _floats(value)
                if len(re_im) != 2 or not 0 <= j < k:
                    raise ValueError
                cfg.sigma[(j, k)] = complex(*re_im)
            elif key in ("command", "initial", "method", "output_dir"):
                if key == "method":
                    flow["method"] = value
                else:
                    setattr(cfg, key, value)
            else:
                problems.append(f"{key}: unknown key")
        except (ValueError, IndexError):
            problems.append(f"{key}: cannot parse '{value}'")

    if "initial" not in raw:
        cfg.initial = "explicit" if cfg.q is not None else "random"
    if cfg.command not in COMMANDS:
        problems.append(f"command: must be one of {', '.join(COMMANDS)}")
    if cfg.initial not in ("random", "explicit"):
        problems.append("initial: must be 'random' or 'explicit'")
    if flow.get("method", "rk4") not in METHODS:
        problems.append(f"method: must be one of {', '.join(METHODS)}")
    if cfg.poisson_samples < 1:
        problems.append("poisson_samples: must be positive")
    eps = np.array(cfg.epsilons)
    if eps.size < 2 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        problems.append("epsilons: need at least two positive, strictly decreasing values")

    if cfg.initial == "explicit":
        problems += _explicit_problems(cfg, raw, flow.get("regularity_tolerance", REGULARITY_TOL))
    elif cfg.n < 2:
        problems.append("n: must be at least 2")

    try:
        cfg.flow = FlowConfig(**flow)
    except ValueError as exc:
        problems += [f"flow: {m}" for m in str(exc).split("; ")]
    except TypeError as exc:  # pragma: no cover - guarded by the key table
        problems.append(str(exc))
    if problems:
        raise ConfigError(problems)
    return cfg


def _explicit_problems(cfg: RunConfig, raw: dict, tol: float) -> list[str]:
    problems = []
    if cfg.q is None or cfg.p is None:
        return ["initial: explicit data needs both q and p"]
    n = len(cfg.q)
    if "n" in raw and cfg.n != n:
        problems.append(f"n: {cfg.n} disagrees with len(q) = {n}")
    cfg.n = n
    if len(cfg.p) != n:
        problems.append(f"p: expected {n} entries, got {len(cfg.p)}")
    problems += [f"q: {m}" for m in check_alcove(cfg.q, tol)]
    if len(cfg.p) == n and abs(sum(cfg.p)) > 1e-8 * max(1.0, max(map(abs, cfg.p))):
        problems.append(f"p: sum(p) must be 0, got {sum(cfg.p):.3e}")
    for j, k in cfg.sigma:
        if k >= n:
            problems.append(f"sigma_{j + 1}{k + 1}: index outside the {n} x {n} upper triangle")
    return problems


def random_state(rng, n: int, tol: float = REGULARITY_TOL) -> ReducedState:
    """Random initial data with the distribution described in the module docstring."""
    cuts = np.sort(rng.uniform(size=n - 1))
    w = np.diff(np.concatenate([[0.0], cuts, [1.0]]))
    gaps = MIN_GAP + (TWO_PI - n * MIN_GAP) * w  # n gaps including the wrap-around one
    q = -np.concatenate([[0.0], np.cumsum(gaps[: n - 1])])
    q -= q.mean()
    p = rng.uniform(-1.0, 1.0, size=n)
    p -= p.mean()
    p /= max(1.0, np.abs(p).max())
    sigma = np.zeros((n, n), dtype=np.complex128)
    iu = np.triu_indices(n, 1)
    m = iu[0].size
    sigma[iu] = np.sqrt(rng.uniform(size=m)) * np.exp(1j * rng.uniform(0.0, TWO_PI, size=m))
    return ReducedState(q, p, sigma, tol)


def initial_state(cfg: RunConfig, rng) -> ReducedState:
    tol = cfg.flow.regularity_tolerance
    if cfg.initial == "random":
        return random_state(rng, cfg.n, tol)
    sigma = np.zeros((cfg.n, cfg.n), dtype=np.complex128)
    for (j, k), v in cfg.sigma.items():
        sigma[j, k] = v
    return ReducedState(cfg.q, cfg.p, sigma, tol)


# ---------------------------------------------------------------------------
# Output


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def trajectory_rows(traj: Trajectory):
    if not traj.states:
        return [], []
    n = traj.states[0].n
    iu = np.triu_indices(n, 1)
    keys = list(traj.ledgers[0].as_dict())
    header = ["t"] + [f"q_{i}" for i in range(1, n + 1)] + [f"p_{i}" for i in range(1, n + 1)]
    for j, k in zip(*iu):
        header += [f"re_sigma_{j + 1}{k + 1}", f"im_sigma_{j + 1}{k + 1}"]
    header += keys
    rows = []
    for t, st, led in zip(traj.times, traj.states, traj.ledgers):
        sig = st.sigma[iu]
        spins = np.column_stack([sig.real, sig.imag]).ravel()
        d = led.as_dict()
        rows.append([t, *st.q, *st.p, *spins, *(d[k] for k in keys)])
    return header, rows


def write_trajectory(path: Path, traj: Trajectory) -> None:
    header, rows = trajectory_rows(traj)
    _write_csv(path, header, rows)


def _sample_times(flow: FlowConfig) -> np.ndarray:
    n_steps = int(round(flow.t_end / flow.dt))
    steps = list(range(flow.sample_stride, n_steps + 1, flow.sample_stride))
    if not steps or steps[-1] != n_steps:
        steps.append(n_steps)
    return np.array([0.0] + [s * flow.dt for s in steps])


# ---------------------------------------------------------------------------
# Commands


def _cmd_simulate(cfg, state, out, summary):
    if cfg.flow.method == "projection":
        return _cmd_project(cfg, state, out, summary)
    if cfg.flow.method == "both":
        return _cmd_compare(cfg, state, out, summary)
    traj = _guarded(lambda: integrate(state, cfg.flow), out, summary)
    write_trajectory(out / "trajectory.csv", traj)
    summary["drift"] = drift_report(traj)
    summary["termination"] = traj.termination


def _cmd_project(cfg, state, out, summary):
    traj = _guarded(lambda: project_trajectory(state, _sample_times(cfg.flow), cfg.flow), out, summary)
    write_trajectory(out / "trajectory.csv", traj)
    summary["drift"] = drift_report(traj)
    summary["termination"] = traj.termination


def _cmd_compare(cfg, state, out, summary):
    rk = _guarded(lambda: integrate(state, cfg.flow), out, summary)
    pj = _guarded(lambda: project_trajectory(state, rk.times, cfg.flow), out, summary)
    write_trajectory(out / "trajectory.csv", rk)
    rows = []
    for t, a, b in zip(rk.times, rk.states, pj.states):
        rows.append([t, float(np.abs(comparison_observables(a) - comparison_observables(b)).max())])
    _write_csv(out / "comparison.csv", ["t", "max_discrepancy"], rows)
    summary["max_discrepancy"] = max(r[1] for r in rows)
    summary["drift"] = drift_report(rk)
    summary["drift_projection"] = drift_report(pj)
    summary["termination"] = rk.termination


def _cmd_invariants(cfg, state, out, summary):
    lm = lax(state)
    words = ["AB", "AAB", "ABB", "AABB", "ABAB"]
    report = {
        "ledger": invariant_ledger(state, lm).as_dict(),
        "mixed": {w: [c.real, c.imag] for w, c in ((w, mixed_invariant(state, w, lm)) for w in words)},
        "h_suth": h_suth(SutherlandState.from_reduced(state)),
    }
    (out / "invariants.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    summary["termination"] = "completed"


def _cmd_scaling(cfg, state, out, summary):
    rows, slopes = [], {}
    tables = {"H": scaling_limit_sweep(state, cfg.epsilons)}
    for k in range(2, state.n + 1):
        tables[f"lax_k{k}"] = lax_limit_sweep(state, k, cfg.epsilons)
    for i, (name, table) in enumerate(tables.items()):
        for r in table:
            rows.append([i, *r])
        slopes[name] = convergence_slope(table[:, 0], table[:, 2]) if np.all(table[:, 2] > 0) else None
    _write_csv(out / "scaling.csv", ["table", "eps", "value", "error"], rows)
    summary["tables"] = list(tables)
    summary["slopes"] = slopes
    summary["termination"] = "completed"


def _cmd_poisson(cfg, state, out, summary):
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    jac_an, jac_fd = [], []
    for _ in range(cfg.poisson_samples):
        b = poissonb.random_borel(rng, n)
        f, g, h = (poissonb.polynomial_observable(rng, n) for _ in range(3))
        jac_an.append(poissonb.jacobi_check(b, f, g, h, analytic=True))
        jac_fd.append(poissonb.jacobi_check(b, f, g, h, analytic=False))
    b = poissonb.random_borel(rng, n)
    center = {str(k): poissonb.center_check(b, poissonb.trace_power(k)) for k in range(1, n + 1)}
    beta0 = rng.normal(size=n)
    beta0 -= beta0.mean()
    bplus = np.triu(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)), 1)
    slope, mixed, plus = poissonb.linearization_check(beta0, bplus)
    report = {
        "jacobi_analytic_max": max(jac_an),
        "jacobi_fd_max": max(jac_fd),
        "center": center,
        "linearization_slope": slope,
        "linearization_mixed_max": mixed,
        "linearization_plus": plus.tolist(),
    }
    (out / "poisson.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    summary["poisson"] = report
    summary["termination"] = "completed"


_COMMANDS = {
    "simulate": _cmd_simulate,
    "project": _cmd_project,
    "compare": _cmd_compare,
    "invariants": _cmd_invariants,
    "scaling-limit": _cmd_scaling,
    "poisson-check": _cmd_poisson,
}


def _guarded(fn, out: Path, summary: dict):
    """Run a solver; on failure keep the partial trajectory before re-raising."""
    try:
        return fn()
    except SpinRSError as exc:
        partial = getattr(exc, "partial", None)
        if isinstance(partial, Trajectory) and partial.times:
            write_trajectory(out / "trajectory.csv", partial)
            summary["drift"] = drift_report(partial)
        summary["termination"] = exc.kind
        raise


def run(cfg: RunConfig, quiet: bool = True) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"command": cfg.command, "config": cfg.echo()}
    start = time.perf_counter()
    try:
        rng = np.random.default_rng(cfg.seed)
        state = initial_state(cfg, rng)
        summary["initial_state"] = {
            "q": state.q.tolist(),
            "p": state.p.tolist(),
            "sigma": [[v.real, v.imag] for v in state.sigma[np.triu_indices(state.n, 1)]],
        }
        summary["ledger_t0"] = invariant_ledger(state).as_dict()
        _COMMANDS[cfg.command](cfg, state, out, summary)
        status = EXIT_OK
    except SpinRSError as exc:
        status = _report_error(exc.to_dict(), out)
        summary["error"] = exc.to_dict()
        summary.setdefault("termination", exc.kind)
    except ValueError as exc:
        detail = {"error": "ValueError", "message": str(exc)}
        status = _report_error(detail, out)
        summary["error"] = detail
        summary.setdefault("termination", "ValueError")
    summary["timings"] = {"wall_seconds": time.perf_counter() - start}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=_json_default) + "\n")
    if not quiet and status == EXIT_OK:
        print(f"{cfg.command}: {summary.get('termination')} -> {out}")
    return status


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serialisable: {type(obj).__name__}")


def _report_error(detail: dict, out: Path | None, code: int = EXIT_NUMERICAL) -> int:
    text = json.dumps(detail, sort_keys=True, default=_json_default)
    print(text, file=sys.stderr)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "error.json").write_text(text + "\n")
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="spinrs", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="flat key = value config file")
    parser.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    parser.add_argument("--quiet", action="store_true", help="print nothing on success")
    args = parser.parse_args(argv)

    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            return _report_error(ConfigError([f"config: {exc}"]).to_dict(), args.out, EXIT_CONFIG)
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        return _report_error(exc.to_dict(), args.out, EXIT_CONFIG)
    cfg.command = args.command
    if args.out is not None:
        cfg.output_dir = str(args.out)
    return run(cfg, quiet=args.quiet)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
