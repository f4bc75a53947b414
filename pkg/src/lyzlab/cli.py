"""Command-line entry point: ``python -m lyzlab <command> [flags]``.

Exit codes: 0 success, 1 precondition or invalid config, 2 solver failure,
3 I/O failure.  Every output file is written atomically, and reports carry
no timings, so re-runs with the same config and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from . import io as lio
from .conesuite import run_cone_suite
from .continuity import PathPreconditionError, PathSolverError, Schedule, critical_residual, hmw_trace_check, run_path
from .phase import hat_theta
from .solver import BranchSafeguardStall, SolverOptions, monitors, newton_solve
from .suites import BuildError, build_3d_example, build_4d_example, verify_3d, verify_4d
from .torus import build_chi, make_grid, trig_field
from .weak import weaklab_run

__all__ = ["RunConfig", "ConfigError", "main", "build_parser"]

log = logging.getLogger("lyzlab")

EXIT_OK, EXIT_PRECONDITION, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class ChiSpec:
    """How to build chi: an explicit constant plus trig modes, or a seeded suite example."""

    kind: str = "explicit"
    C: list = field(default_factory=lambda: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
    C_imag: list | None = None
    modes: list = field(default_factory=list)
    perturbation: float = 0.05
    base: list | None = None


@dataclass
class ScheduleSpec:
    t0: float = 0.2
    ratio: float = 0.5
    t_min: float = 1e-3


@dataclass
class SolverSpec:
    tol: float = 1e-9
    max_iter: int = 50
    slack: float = 1e-3


@dataclass
class RunConfig:
    n: int = 3
    N: int = 8
    chi: ChiSpec = field(default_factory=ChiSpec)
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    seed: int = 0
    chi_path: str | None = None
    t_solve: float | None = None
    weak_dims: list = field(default_factory=lambda: [2, 3, 4])
    weak_samples: int = 10_000
    comparison_pairs: int = 100
    cone_samples: int = 100_000
    cone_dims: list = field(default_factory=lambda: [2, 3, 4, 5])

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return lio.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        nested = {"chi": ChiSpec, "schedule": ScheduleSpec, "solver": SolverSpec}
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        kw = {}
        for key, val in data.items():
            if key in nested:
                sub = nested[key]
                if not isinstance(val, dict):
                    raise ConfigError(f"{key}: expected an object")
                bad = set(val) - {f.name for f in fields(sub)}
                if bad:
                    raise ConfigError(f"{key}: unknown fields {sorted(bad)}")
                kw[key] = sub(**val)
            else:
                kw[key] = val
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def validate(self):
        if not isinstance(self.n, int) or not 1 <= self.n <= 4:
            raise ConfigError(f"n: {self.n!r} not in 1..4")
        if not isinstance(self.N, int) or self.N % 2 or not 4 <= self.N <= 64:
            raise ConfigError(f"N: {self.N!r} must be an even integer in [4, 64]")
        if self.chi.kind not in ("explicit", "suite3d", "suite4d"):
            raise ConfigError(f"chi.kind: {self.chi.kind!r} is not explicit, suite3d or suite4d")
        if self.chi.kind == "explicit":
            C = np.asarray(self.chi.C, dtype=float)
            if C.shape != (self.n, self.n):
                raise ConfigError(f"chi.C: expected a {self.n}x{self.n} matrix")
        if self.chi.kind == "suite3d" and self.n != 3:
            raise ConfigError("n: suite3d examples need n = 3")
        if self.chi.kind == "suite4d" and self.n != 4:
            raise ConfigError("n: suite4d examples need n = 4")
        s = self.schedule
        if not (s.t0 > 0 and s.t_min > 0 and 0 < s.ratio < 1):
            raise ConfigError("schedule: need t0 > 0, t_min > 0 and 0 < ratio < 1")
        if not (self.solver.tol > 0 and self.solver.max_iter >= 1 and self.solver.slack >= 0):
            raise ConfigError("solver: need tol > 0, max_iter >= 1, slack >= 0")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed: {self.seed!r} is not an unsigned 64-bit integer")

    def schedule_obj(self) -> Schedule:
        return Schedule(self.schedule.t0, self.schedule.ratio, self.schedule.t_min)

    def solver_opts(self) -> SolverOptions:
        return SolverOptions(tol=self.solver.tol, max_iter=self.solver.max_iter, slack=self.solver.slack)


def _suite_defaults(dim: int) -> RunConfig:
    if dim == 3:
        return RunConfig(n=3, N=8, chi=ChiSpec(kind="suite3d"), schedule=ScheduleSpec(0.2, 0.5, 1e-3))
    return RunConfig(
        n=4,
        N=4,
        chi=ChiSpec(kind="suite4d", C=np.eye(4).tolist()),
        schedule=ScheduleSpec(0.2, 0.5, 2e-3),
    )


def build_chi_from_config(cfg: RunConfig):
    if cfg.chi.kind == "suite3d":
        return build_3d_example(cfg.seed, cfg.chi.perturbation, N=cfg.N).chi
    if cfg.chi.kind == "suite4d":
        base = cfg.chi.base or (1.0, 1.0, 1.0, 1.0)
        return build_4d_example(cfg.seed, cfg.chi.perturbation, N=cfg.N, base=base).chi
    grid = make_grid(cfg.n, cfg.N)
    C = np.asarray(cfg.chi.C, dtype=float).astype(complex)
    if cfg.chi.C_imag is not None:
        C = C + 1j * np.asarray(cfg.chi.C_imag, dtype=float)
    rho = None
    if cfg.chi.modes:
        rho = trig_field(grid, [(tuple(k), float(a), float(p)) for k, a, p in cfg.chi.modes])
    return build_chi(grid, C, rho)


def _load_chi(cfg: RunConfig):
    if cfg.chi_path:
        chi = lio.read_field(cfg.chi_path)
        if chi.grid.n != cfg.n or chi.grid.N != cfg.N:
            raise ConfigError(f"chi file has n={chi.grid.n}, N={chi.grid.N}; config says n={cfg.n}, N={cfg.N}")
        return chi
    return build_chi_from_config(cfg)


def cmd_gen(cfg: RunConfig, out: Path) -> int:
    chi = build_chi_from_config(cfg)
    lio.write_field(out / "chi.lyzf", chi)
    lio.atomic_write(out / "config.json", cfg.to_json())
    return EXIT_OK


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    chi = _load_chi(cfg)
    t = cfg.t_solve if cfg.t_solve is not None else cfg.schedule.t0
    ps = hat_theta(chi, t)
    try:
        state = newton_solve(chi, t, opts=cfg.solver_opts())
    except BranchSafeguardStall as exc:
        raise PathSolverError(str(exc)) from exc
    mon = monitors(state)
    report = {
        "command": "solve",
        "t": t,
        "hat_theta": ps.hat_theta,
        "target_theta": ps.target_theta,
        "c_solved": state.c,
        "iterations": state.iterations,
        "converged": state.converged,
        "res_sup": state.res_sup,
        "monitors": mon,
        "config": cfg.to_dict(),
    }
    lio.write_state(out, state, stem="u", monitors=mon)
    lio.write_json(out / "solve.json", report)
    return EXIT_OK if state.converged else EXIT_SOLVER


def _path_report(chi, trace, cfg: RunConfig) -> dict:
    state = trace.final_state
    theta_res, sigma_res = critical_residual(state)
    fit = trace.bracket()
    top, hmw_ok = hmw_trace_check(trace)
    converged = all(r.converged for r in trace.rows) and not trace.stalled
    gauge = max(abs(r.c_solved - r.target_theta) for r in trace.rows)
    return {
        "command": "path",
        "hat_theta_table": [{"t": r.t, "hat_theta": r.hat_theta, "target_theta": r.target_theta} for r in trace.rows],
        "critical_residuals": {"theta_form": theta_res, "sigma_form": sigma_res},
        "hmw_max": top,
        "hmw_pass": hmw_ok,
        "bracket": {"passed": fit.passed, "C": fit.C_fit, "C_interval": fit.C_interval},
        "max_gauge_gap": gauge,
        "all_converged": converged,
        "t_reached": trace.rows[-1].t,
        "pass": bool(converged and fit.passed and hmw_ok and gauge <= 1e-3),
        "config": cfg.to_dict(),
    }


def cmd_path(cfg: RunConfig, out: Path) -> int:
    chi = _load_chi(cfg)
    trace = run_path(chi, cfg.schedule_obj(), cfg.solver_opts())
    report = _path_report(chi, trace, cfg)
    lio.atomic_write(out / "trace.csv", trace.to_csv())
    lio.write_state(out, trace.final_state, stem="u_final", monitors=monitors(trace.final_state))
    lio.write_json(out / "summary.json", report)
    return EXIT_OK if report["all_converged"] else EXIT_SOLVER


def _cmd_suite(dim: int, cfg: RunConfig, out: Path) -> int:
    build = build_3d_example if dim == 3 else build_4d_example
    kw = {"N": cfg.N}
    if dim == 4 and cfg.chi.base is not None:
        kw["base"] = cfg.chi.base
    example = build(cfg.seed, cfg.chi.perturbation, **kw)
    verify = verify_3d if dim == 3 else verify_4d
    report, trace = verify(example.chi, cfg.schedule_obj(), cfg.solver_opts(), seed=cfg.seed, return_trace=True)
    payload = report.to_dict()
    payload["scale"] = example.scale
    payload["config"] = cfg.to_dict()
    if trace is not None:
        lio.atomic_write(out / f"suite{dim}d_trace.csv", trace.to_csv())
    lio.write_json(out / f"suite{dim}d.json", payload)
    if report.passed:
        return EXIT_OK
    return EXIT_PRECONDITION if not all(report.preconditions.values()) else EXIT_SOLVER


def cmd_conecheck(cfg: RunConfig, out: Path) -> int:
    report = run_cone_suite(cfg.cone_samples, cfg.seed, tuple(cfg.cone_dims))
    report["config"] = cfg.to_dict()
    lio.write_json(out / "conecheck.json", report)
    return EXIT_OK if report["pass"] else EXIT_SOLVER


def weaklab_pass(block: dict) -> bool:
    tol = 1e-10
    iii = block["iii_min_margin"]
    return bool(
        block["constraint_max_rel"] <= 1e-12
        and block["closure_min_sigma"] >= -tol
        and block["lift_max_rel"] <= 1e-12
        and block["ii_min_margin"] >= -tol
        and (iii is None or iii >= -tol)
        and block["iv_min_margin"] >= -tol
        and min(block["garding_min"].values()) >= -tol
        and block["comparison_passed"] == block["comparison_pairs"]
    )


def cmd_weaklab(cfg: RunConfig, out: Path) -> int:
    blocks = {}
    for n in sorted(cfg.weak_dims):
        block = weaklab_run(n, cfg.weak_samples, cfg.seed, cfg.comparison_pairs)
        block["pass"] = weaklab_pass(block)
        blocks[str(n)] = block
    report = {"dimensions": blocks, "pass": all(b["pass"] for b in blocks.values()), "config": cfg.to_dict()}
    lio.write_json(out / "weaklab.json", report)
    return EXIT_OK if report["pass"] else EXIT_SOLVER


def cmd_report(cfg: RunConfig, out: Path) -> int:
    """Collect the pass flags of every JSON report under --out into report.json."""
    if not out.is_dir():
        raise FileNotFoundError(f"output directory {out} does not exist")
    rows = {}
    for path in sorted(out.glob("*.json")):
        if path.name in ("report.json", "config.json") or path.stem in ("u", "u_final"):
            continue
        data = lio.read_json(path)
        rows[path.name] = data.get("pass", data.get("passed"))
    lines = [f"{name:<24} {'PASS' if ok else 'FAIL' if ok is not None else '-'}" for name, ok in rows.items()]
    lio.write_json(out / "report.json", {"reports": rows, "all_pass": all(v for v in rows.values() if v is not None)})
    print("\n".join(lines))
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "solve": cmd_solve,
    "path": cmd_path,
    "suite3d": lambda cfg, out: _cmd_suite(3, cfg, out),
    "suite4d": lambda cfg, out: _cmd_suite(4, cfg, out),
    "conecheck": cmd_conecheck,
    "weaklab": cmd_weaklab,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lyzlab", description="Critical and supercritical dHYM experiments on flat tori.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="JSON RunConfig")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    p.add_argument("--grid", type=int, help="points per real axis (N)")
    p.add_argument("--tmin", type=float, help="smallest t of the schedule")
    p.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    p.add_argument("--n", type=int, action="append", dest="dims", help="weaklab dimension (repeatable)")
    p.add_argument("--samples", type=int, help="sample count for weaklab / conecheck")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _resolve_config(args) -> RunConfig:
    if args.config is not None:
        cfg = RunConfig.from_json(args.config.read_text(encoding="utf-8"))
    elif args.command in ("suite3d", "suite4d"):
        cfg = _suite_defaults(3 if args.command == "suite3d" else 4)
    else:
        cfg = RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.grid is not None:
        cfg.N = args.grid
    if args.tmin is not None:
        cfg.schedule.t_min = args.tmin
    if args.dims:
        cfg.weak_dims = list(args.dims)
    if args.samples is not None:
        cfg.weak_samples = cfg.cone_samples = args.samples
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_PRECONDITION
    try:
        cfg = _resolve_config(args)
        with sfft.set_workers(args.threads):
            return COMMANDS[args.command](cfg, args.out)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PathSolverError, BranchSafeguardStall) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, BuildError, PathPreconditionError, ValueError, TypeError, MemoryError, ArithmeticError) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
