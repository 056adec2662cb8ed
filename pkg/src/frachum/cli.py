"""Command-line front end.

``frachum solve FILE [--out DIR] [--ridge]`` runs the HUM pipeline on a
scenario and writes ``control.csv``, ``state.csv`` and ``report.json`` (plus
``timing.json``, kept apart so the report stays bit-identical across runs).

``frachum sweep FILE --axis {alpha,n_modes,nt,epsilon} --values v1,v2,...``
reruns the scenario once per value and writes ``sweep_<axis>.csv``.

``frachum selftest`` runs a handful of fast built-in checks.

The output directory is ``--out``, else ``$FRACHUM_OUT``, else the scenario's
``[output] directory``, else ``./frachum_out``. Exit codes: 0 success,
2 scenario error, 3 ill-posed Gramian, 4 infeasible constraint, 5 numeric
failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from frachum.energy import (
    adjoint_diagnostics,
    build_constraint_map,
    minimum_norm_oracle,
    penalized_solve,
    penalty_operators,
)
from frachum.errors import FracHUMError, ScenarioError
from frachum.hum import HUMProblem, solve_hum
from frachum.scenario import Scenario, parse_scenario
from frachum.solver import forward_solve

__all__ = ["RunReport", "SWEEP_AXES", "main", "output_directory", "run_scenario", "run_sweep"]

ENV_OUT = "FRACHUM_OUT"
DEFAULT_OUT = "frachum_out"
SWEEP_AXES = ("alpha", "n_modes", "nt", "epsilon")
SWEEP_COLUMNS = ("value", "status", "residual", "relative_residual", "energy", "condition")


@dataclass(frozen=True)
class RunReport:
    """Scalar summary of one HUM run. Oracle fields are ``None`` when the oracle is off."""

    alpha: float
    nt: int
    n_modes: int
    actuator: str
    polar_dim: int
    residual: float
    relative_residual: float
    target_norm: float
    control_energy: float
    oracle_energy: float | None
    relative_energy_gap: float | None
    relative_control_gap: float | None
    condition_estimate: float
    ridge: float
    penalization: tuple[dict, ...] = ()
    timing: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.residual >= 0.0:
            raise FracHUMError(f"negative or undefined residual {self.residual!r}")
        for name in ("residual", "relative_residual", "target_norm", "control_energy",
                     "oracle_energy", "relative_energy_gap", "relative_control_gap",
                     "condition_estimate", "ridge"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(v):
                raise FracHUMError(f"report field {name} is not finite ({v!r})")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("timing")
        d["penalization"] = list(d["penalization"])
        return d


def _relative(a: float, b: float) -> float:
    return a / b if b > 0.0 else (0.0 if a == 0.0 else math.inf)


def _penalization_rows(problem: HUMProblem, s: Scenario, y0, u_star) -> tuple[dict, ...]:
    if not s.epsilon_sweep or problem.is_trivial:
        return ()
    ops = penalty_operators(problem)
    ustar_norm = u_star.norm()
    rows = []
    for eps in s.epsilon_sweep:
        it = penalized_solve(problem, eps, y0, ops)
        diag = adjoint_diagnostics(it, problem.target)
        gap = _l2_distance(problem, it.u_eps, u_star)
        rows.append({
            "epsilon": float(eps),
            "penalty_residual": it.penalty_residual,
            "terminal_residual": it.terminal_residual,
            "energy": it.energy,
            "relative_control_gap": _finite(_relative(gap, ustar_norm)),
            "g_ratio": diag["g_ratio"],
            "coercivity": _finite(diag["coercivity"]),
        })
    return tuple(rows)


def _l2_distance(problem: HUMProblem, u, v) -> float:
    d = u.values - v.values
    return math.sqrt(float(np.sum(problem.grid.trapezoid_weights * d**2)))


def _finite(v: float) -> float | None:
    return v if math.isfinite(v) else None


def run_scenario(s: Scenario, out_dir=None, *, ridge: bool | None = None, write: bool = True):
    """Run HUM (plus the oracle and penalization when enabled) and write the outputs.

    Returns ``(report, solution)``. Module errors propagate; the CLI turns them
    into exit codes.
    """
    timing = {}
    t0 = time.perf_counter()
    problem = s.build_problem()
    y0 = s.initial_state(problem.basis)
    sol = solve_hum(problem, y0, ridge=s.ridge if ridge is None else ridge)
    timing["hum"] = time.perf_counter() - t0

    oracle_energy = energy_gap = control_gap = None
    if s.run_oracle and not problem.is_trivial:
        t1 = time.perf_counter()
        oracle = minimum_norm_oracle(build_constraint_map(problem, y0), problem.grid)
        oe = oracle.energy()
        oracle_energy = oe
        energy_gap = _finite(_relative(abs(sol.energy - oe), oe))
        diff = _l2_distance(problem, sol.control, oracle)
        control_gap = _finite(_relative(diff, oracle.norm()))
        timing["oracle"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    pen = _penalization_rows(problem, s, y0, sol.control)
    if pen:
        timing["penalization"] = time.perf_counter() - t2

    report = RunReport(
        alpha=s.alpha,
        nt=s.nt,
        n_modes=s.n_modes,
        actuator=type(s.actuator).__name__,
        polar_dim=problem.polar_dim,
        residual=sol.residual,
        relative_residual=_relative(sol.residual, sol.target_norm) if sol.target_norm > 0 else 0.0,
        target_norm=sol.target_norm,
        control_energy=sol.energy,
        oracle_energy=oracle_energy,
        relative_energy_gap=energy_gap,
        relative_control_gap=control_gap,
        condition_estimate=sol.condition_estimate,
        ridge=sol.ridge,
        penalization=pen,
        timing=timing,
    )
    if write:
        out = Path(out_dir) if out_dir is not None else output_directory(s)
        t3 = time.perf_counter()
        _write_outputs(out, problem, y0, sol, report)
        timing["write"] = time.perf_counter() - t3
        _write_json(out / "timing.json", timing)
    return report, sol


def _fmt(v) -> str:
    return str(v) if isinstance(v, (int, np.integer)) else repr(float(v))


def _write_outputs(out: Path, problem: HUMProblem, y0, sol, report: RunReport) -> None:
    out.mkdir(parents=True, exist_ok=True)
    t = problem.grid.nodes
    with open(out / "control.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t", "u_star"))
        w.writerows((_fmt(a), _fmt(b)) for a, b in zip(t, sol.control.values))

    basis = problem.basis
    x = np.linspace(0.0, basis.L, basis.nx)
    psi = problem.free_terminal(y0)
    y_t, _ = forward_solve(y0, sol.control, problem.actuator, problem.alpha)
    cols = (x, y0.evaluate(x), psi.evaluate(x), y_t.evaluate(x))
    with open(out / "state.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("x", "y0", "psi1_T", "y_T_controlled"))
        w.writerows(tuple(map(_fmt, row)) for row in zip(*cols))

    _write_json(out / "report.json", report.to_dict())


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def output_directory(s: Scenario | None, cli_value=None) -> Path:
    if cli_value:
        return Path(cli_value)
    env = os.environ.get(ENV_OUT)
    if env:
        return Path(env)
    if s is not None and s.output_dir:
        return Path(s.output_dir)
    return Path(DEFAULT_OUT)


# {{{ sweeps


def _sweep_value(axis: str, text: str):
    try:
        return int(text) if axis in ("n_modes", "nt") else float(text)
    except ValueError:
        kind = "an integer" if axis in ("n_modes", "nt") else "a number"
        raise ScenarioError("--values", f"entries for axis {axis} must be {kind}, got {text!r}") from None


def _sweep_row(s: Scenario, axis: str, value) -> dict:
    row = {"value": value}
    try:
        if axis == "epsilon":
            if not value > 0:
                raise ScenarioError("--values", f"epsilon must be positive, got {value!r}")
            problem = s.build_problem()
            y0 = s.initial_state(problem.basis)
            it = penalized_solve(problem, value, y0)
            scale = solve_hum(problem, y0, ridge=s.ridge).target_norm
            res, energy, cond = it.terminal_residual, it.energy, it.condition_estimate
        else:
            if axis == "alpha" and not 0.0 < value <= 1.0:
                raise ScenarioError("problem.alpha", f"must lie in (0,1], got {value!r}")
            if axis == "n_modes" and len(s.initial) > value:
                raise ScenarioError("domain.n_modes", f"is smaller than the {len(s.initial)} initial coefficients")
            if axis == "nt" and value < 3:
                raise ScenarioError("problem.nt", f"must be at least 3, got {value}")
            variant = dataclasses.replace(s, **{axis: value})
            problem = variant.build_problem()
            sol = solve_hum(problem, variant.initial_state(problem.basis), ridge=s.ridge)
            res, energy, cond, scale = sol.residual, sol.energy, sol.condition_estimate, sol.target_norm
        row.update(status="ok", residual=res, relative_residual=res / scale if scale > 0 else 0.0,
                   energy=energy, condition=cond)
    except FracHUMError as exc:
        row.update(status=f"{type(exc).__name__}: {exc}", residual=None, relative_residual=None,
                   energy=None, condition=None)
    return row


def run_sweep(s: Scenario, axis: str, values, out_dir=None, *, write: bool = True) -> list[dict]:
    """One row per value, in input order; a failing row records its error and the sweep goes on."""
    if axis not in SWEEP_AXES:
        raise ScenarioError("--axis", f"must be one of {', '.join(SWEEP_AXES)}, got {axis!r}")
    rows = [_sweep_row(s, axis, v) for v in values]
    if write:
        out = Path(out_dir if out_dir is not None else output_directory(s))
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"sweep_{axis}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_COLUMNS)
            for r in rows:
                w.writerow(["" if r[c] is None else (_fmt(r[c]) if c not in ("status",) else r[c])
                            for c in SWEEP_COLUMNS])
    return rows


# }}}


# {{{ selftest


def _selftest_checks():
    from frachum.fracops import TimeGrid
    from frachum.hum import assemble_gramian
    from frachum.mlf import mittag_leffler, wright_density
    from frachum.solver import ControlSignal, apply_H, apply_Hstar
    from frachum.spectral import Region, SpectralBasis, ZoneActuator, build_target

    def ml_exp():
        return max(abs(mittag_leffler(1.0, 1.0, z) - math.exp(z)) / math.exp(z) for z in (-5.0, -1.0, 0.5))

    def ml_series():
        ref = sum(0.25 ** k / math.gamma(0.5 * k + 1.0) for k in range(60))
        return abs(mittag_leffler(0.5, 1.0, 0.25) - ref) / ref

    def wright_mass():
        from scipy import integrate
        val, _ = integrate.quad(lambda th: wright_density(0.5, th), 0.0, math.inf)
        return abs(val - 1.0)

    basis = SpectralBasis(1.0, 8)
    grid = TimeGrid(1.0, 101)
    act = ZoneActuator(0.1, 0.4)
    region = Region.interval(0.2, 0.5)
    target = build_target(region, basis, 5, 2)

    def duality():
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(5):
            u = ControlSignal(grid, rng.standard_normal(grid.nt))
            v = basis.field(rng.standard_normal(basis.N))
            lhs = float(apply_H(u, act, 0.6, basis=basis).coefficients @ v.coefficients)
            rhs = float(np.sum(grid.trapezoid_weights * u.values * apply_Hstar(v, act, 0.6, grid).values))
            worst = max(worst, abs(lhs - rhs) / (u.norm() * v.norm()))
        return worst

    def gramian_symmetry():
        problem = HUMProblem(basis, act, target, 0.6, grid)
        g, _ = assemble_gramian(problem)
        return float(np.max(np.abs(g - g.T)) / np.max(np.abs(g)))

    return [
        ("mittag_leffler(1, 1, z) = exp(z)", ml_exp, 1e-12),
        ("mittag_leffler series value", ml_series, 1e-10),
        ("wright_density has unit mass", wright_mass, 1e-6),
        ("<Hu, v> = <u, H*v>", duality, 1e-8),
        ("Gramian symmetry", gramian_symmetry, 1e-12),
    ]


def selftest(stream=None) -> bool:
    stream = sys.stdout if stream is None else stream
    ok = True
    for name, check, tol in _selftest_checks():
        err = check()
        passed = err <= tol
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {err:.2e} (tol {tol:.0e})", file=stream)
    return ok


# }}}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="frachum", description="Regional enlarged controllability of fractional diffusion.")
    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("solve", help="solve one scenario")
    sp.add_argument("scenario")
    sp.add_argument("--out", help=f"output directory (overrides ${ENV_OUT})")
    sp.add_argument("--ridge", action="store_true", help="regularize a near-singular Gramian")
    sw = sub.add_parser("sweep", help="rerun a scenario across one parameter")
    sw.add_argument("scenario")
    sw.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--out", help=f"output directory (overrides ${ENV_OUT})")
    sub.add_parser("selftest", help="run fast built-in checks")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            return 0 if selftest() else 5
        s = parse_scenario(args.scenario)
        out = output_directory(s, args.out)
        if args.command == "solve":
            report, _ = run_scenario(s, out, ridge=True if args.ridge else None)
            print(f"residual {report.residual:.3e} (relative {report.relative_residual:.3e}), "
                  f"energy {report.control_energy:.6e}, condition {report.condition_estimate:.3e}")
            print(f"wrote {out}")
            return 0
        values = [_sweep_value(args.axis, v.strip()) for v in args.values.split(",") if v.strip()]
        rows = run_sweep(s, args.axis, values, out)
        for r in rows:
            print(f"{args.axis}={r['value']}: {r['status']}"
                  + (f", residual {r['residual']:.3e}, energy {r['energy']:.6e}" if r["status"] == "ok" else ""))
        print(f"wrote {out / f'sweep_{args.axis}.csv'}")
        return 0
    except FracHUMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
