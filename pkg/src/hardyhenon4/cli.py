"""Command line front end.

Exit statuses: 0 success, 1 usage error, 2 numerical failure (integration
breakdown, divergent quadrature, invalid field data).  Data goes to
stdout or --out; every diagnostic goes to stderr.  Output defaults to
aligned columns on a terminal and CSV when redirected; config files are
flat `key = value` text with `#` comments, and explicit flags win over
file values.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .params import ProblemParams, in_dichotomy_window, coefficients, classify_regime
from .transform import OdeState
from .dynamics import (
    DEFAULT_MARGIN,
    IntegrationUnderflow,
    NonPositiveState,
    classify_limit,
    fixed_points,
    integrate,
)
from .energy import energy
from .green import IntegrabilityError, RadialField, bilaplacian_solve_radial
from .experiments import (
    ATLAS,
    CLASSIFICATION,
    ENERGY_AUDIT,
    GREEN_STUDY,
    DEFAULT_HORIZON,
    ExperimentConfig,
    ResultTable,
    run_experiment,
    _rng,
)

COMMANDS = ("coeffs", "simulate", "classify", "energy-audit", "green-check", "atlas")


class UsageError(ValueError):
    """Bad flags, bad config keys or parameters outside a command's domain."""


class NumericalFailure(RuntimeError):
    """Invalid numerical data discovered while executing a command."""


@dataclass
class CliInvocation:
    command: str
    flags: dict = field(default_factory=dict)
    config_path: str | None = None


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 by default; the interface reserves 2
    # for numerical failures, so usage problems are remapped to 1.
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="hardyhenon4", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", help="flat key = value config file")
        cmd.add_argument("--n", type=int, help="space dimension")
        cmd.add_argument("--alpha", type=float, help="weight exponent")
        cmd.add_argument("--p", type=float, help="nonlinearity exponent")
        cmd.add_argument("--tol", type=float, help="integrator tolerance")
        cmd.add_argument("--seed", type=int, help="draw seed (64-bit)")
        cmd.add_argument("--samples", type=int, help="number of seeded draws")
        cmd.add_argument("--margin", type=float, help="classification margin")
        cmd.add_argument("--t-end", dest="t_end", type=float, help="backward time horizon")
        cmd.add_argument("--grid-nodes", dest="grid_nodes", type=int, help="radial grid nodes")
        cmd.add_argument("--out", help="write data here instead of stdout")
        cmd.add_argument("--format", choices=("csv", "aligned"), help="force output format")
        cmd.add_argument("--quiet", action="store_true", default=None, help="silence diagnostics")
        cmd.add_argument("--jobs", type=int, help="worker count (output is order-independent)")
        return cmd

    add("coeffs", "coefficients, exponents and regime for one (n, alpha, p)")
    add("simulate", "one seeded backward trajectory with its energy")
    add("classify", "seeded classification sweep near the equilibrium")
    add("energy-audit", "monotonicity and rate-law audit over seeded draws")
    green = add("green-check", "Green-operator diagnostics or field validation")
    green.add_argument("--field", help="stored radial field to validate and solve")
    atlas = add("atlas", "coefficient atlas over a parameter grid")
    atlas.add_argument("--grid", help="semicolon-separated n alpha p triples")
    return parser


def parse_invocation(argv: list[str]) -> CliInvocation:
    """Parse argv into a command plus only the explicitly given flags."""
    ns = _build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config") and v is not None}
    return CliInvocation(command=ns.command, flags=flags, config_path=ns.config)


_CONFIG_TYPES = {
    "n": int,
    "alpha": float,
    "p": float,
    "tol": float,
    "seed": int,
    "samples": int,
    "margin": float,
    "t_end": float,
    "grid_nodes": int,
    "jobs": int,
    "out": str,
    "format": str,
    "quiet": lambda s: s.lower() in ("1", "true", "yes"),
    "field": str,
    "grid": str,
}


def _read_config(path: str) -> dict:
    opts: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONFIG_TYPES:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            opts[key] = _CONFIG_TYPES[key](value)
        except ValueError as err:
            raise UsageError(f"{path}:{lineno}: bad value for {key!r}: {err}") from err
    return opts


def _merged_options(inv: CliInvocation) -> dict:
    opts = _read_config(inv.config_path) if inv.config_path else {}
    opts.update(inv.flags)
    return opts


def _parse_grid(text: str) -> list[tuple[float, float, float]]:
    triples = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.replace(",", " ").split()
        if len(parts) != 3:
            raise UsageError(f"grid entry {chunk!r} is not an 'n alpha p' triple")
        triples.append((float(parts[0]), float(parts[1]), float(parts[2])))
    if not triples:
        raise UsageError("grid is empty")
    return triples


def _require_triple(opts: dict) -> tuple[int, float, float]:
    missing = [k for k in ("n", "alpha", "p") if k not in opts]
    if missing:
        raise UsageError("missing required parameter(s): " + ", ".join(f"--{m}" for m in missing))
    return opts["n"], opts["alpha"], opts["p"]


def _emit(text: str, opts: dict) -> None:
    out = opts.get("out")
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _render(table: ResultTable, opts: dict) -> str:
    fmt = opts.get("format")
    if fmt is None:
        tty = sys.stdout.isatty() and not opts.get("out")
        fmt = "aligned" if tty else "csv"
    return table.to_aligned() if fmt == "aligned" else table.to_csv()


def _log(msg: str, opts: dict) -> None:
    if not opts.get("quiet"):
        print(msg, file=sys.stderr)


def _check_jobs(opts: dict) -> None:
    jobs = opts.get("jobs")
    if jobs is not None and jobs < 1:
        raise UsageError(f"--jobs must be at least 1, got {jobs}")


def _cmd_coeffs(opts: dict) -> int:
    triple = _require_triple(opts)
    ProblemParams(n=triple[0], alpha=triple[1], p=triple[2])  # surface errors as usage
    table = run_experiment(ExperimentConfig(kind=ATLAS, param_grid=(triple,)))
    _emit(_render(table, opts), opts)
    return 0


def _cmd_atlas(opts: dict) -> int:
    if "grid" in opts:
        grid = _parse_grid(opts["grid"])
    else:
        grid = [_require_triple(opts)]
    table = run_experiment(ExperimentConfig(kind=ATLAS, param_grid=tuple(grid)))
    _emit(_render(table, opts), opts)
    return 0


def _cmd_simulate(opts: dict) -> int:
    triple = _require_triple(opts)
    params = ProblemParams(n=triple[0], alpha=triple[1], p=triple[2])
    ok, reason = in_dichotomy_window(params)
    if not ok:
        raise UsageError(reason)
    coeffs = coefficients(params)
    tol = opts.get("tol", 1e-10)
    t_end = opts.get("t_end", -15.0)
    if t_end >= 0.0:
        raise UsageError(f"--t-end must be negative (backward time), got {t_end}")
    wstar = fixed_points(coeffs, params.p)[1]
    draw = _rng(opts.get("seed", 0), 0).uniform(-1e-3, 1e-3, 4)
    state = OdeState(float(wstar + draw[0]), float(draw[1]), float(draw[2]), float(draw[3]))
    traj = integrate(state, 0.0, t_end, tol, coeffs, params.p)
    margin = opts.get("margin", DEFAULT_MARGIN)
    window = min(5.0, traj.span / 2.0)
    cls = classify_limit(traj, coeffs, params.p, margin=margin, window=window)
    rows = tuple(
        (t, s.w0, s.w1, s.w2, s.w3, energy(s, coeffs, params.p, params.n).value)
        for t, s in zip(traj.times, traj.states)
    )
    table = ResultTable(
        kind="trajectory",
        schema=("t", "w0", "w1", "w2", "w3", "energy"),
        rows=rows,
        config_digest=ExperimentConfig(
            kind=CLASSIFICATION,
            param_grid=(triple,),
            tol=tol,
            samples=1,
            seed=opts.get("seed", 0),
            margin=margin,
            horizon=t_end,
        ).digest(),
    )
    _log(
        f"terminated {traj.termination} at t={traj.t_end:.6g}; "
        f"classified {cls.tag} (terminal w0 = {cls.terminal_value:.6g})",
        opts,
    )
    _emit(_render(table, opts), opts)
    return 0


def _sweep_config(kind: str, opts: dict) -> ExperimentConfig:
    triple = _require_triple(opts)
    ProblemParams(n=triple[0], alpha=triple[1], p=triple[2])
    return ExperimentConfig(
        kind=kind,
        param_grid=(triple,),
        tol=opts.get("tol", 1e-10),
        samples=opts.get("samples", 64),
        seed=opts.get("seed", 0),
        margin=opts.get("margin", DEFAULT_MARGIN),
        horizon=opts.get("t_end", DEFAULT_HORIZON),
    )


def _cmd_classify(opts: dict) -> int:
    table = run_experiment(_sweep_config(CLASSIFICATION, opts))
    _emit(_render(table, opts), opts)
    return 0


def _cmd_energy_audit(opts: dict) -> int:
    table = run_experiment(_sweep_config(ENERGY_AUDIT, opts))
    _emit(_render(table, opts), opts)
    return 0


def _cmd_green_check(opts: dict) -> int:
    if "field" in opts:
        field_obj = RadialField.load(opts["field"])
        bad = [j for j, v in enumerate(field_obj.values) if v < 0.0]
        if bad:
            j = bad[0]
            raise NumericalFailure(
                f"field value at node {j} (r = {field_obj.grid.nodes[j]:.6g}) is negative: "
                f"{float(field_obj.values[j])!r}"
            )
        n = opts.get("n", field_obj.n)
        if n is None:
            raise UsageError("field file carries no dimension; pass --n")
        solved = bilaplacian_solve_radial(field_obj, int(n))
        solved.n, solved.alpha, solved.p = field_obj.n, field_obj.alpha, field_obj.p
        _log(f"solved on {field_obj.grid.count} nodes (n = {int(n)})", opts)
        _emit(solved.dumps(), opts)
        return 0
    triple = _require_triple(opts)
    ProblemParams(n=triple[0], alpha=triple[1], p=triple[2])
    config = ExperimentConfig(
        kind=GREEN_STUDY,
        param_grid=(triple,),
        tol=opts.get("tol", 1e-12),
        samples=opts.get("samples", 4),
        seed=opts.get("seed", 0),
        box=1e-5,
        grid_nodes=opts.get("grid_nodes", 2048),
    )
    _emit(_render(run_experiment(config), opts), opts)
    return 0


_HANDLERS = {
    "coeffs": _cmd_coeffs,
    "simulate": _cmd_simulate,
    "classify": _cmd_classify,
    "energy-audit": _cmd_energy_audit,
    "green-check": _cmd_green_check,
    "atlas": _cmd_atlas,
}


def execute(inv: CliInvocation) -> int:
    """Run a parsed invocation; maps failures onto the exit-status contract."""
    opts: dict = {}
    try:
        opts = _merged_options(inv)
        _check_jobs(opts)
        return _HANDLERS[inv.command](opts)
    except (NumericalFailure, IntegrabilityError, IntegrationUnderflow, NonPositiveState) as err:
        print(f"hardyhenon4 {inv.command}: numerical failure: {err}", file=sys.stderr)
        return 2
    except (UsageError, ValueError) as err:
        print(f"hardyhenon4 {inv.command}: error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"hardyhenon4 {inv.command}: error: {err}", file=sys.stderr)
        return 1


def main(argv: list[str] | None = None) -> int:
    inv = parse_invocation(sys.argv[1:] if argv is None else list(argv))
    return execute(inv)


if __name__ == "__main__":
    raise SystemExit(main())
