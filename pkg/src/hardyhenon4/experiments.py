"""Reproducible experiment runners producing deterministic result tables.

Each runner maps an ExperimentConfig to a ResultTable whose serialization
is byte-identical for identical configs: pseudo-random initial conditions
come from a counter-based generator keyed by (seed, row key), so a row's
draw does not depend on execution order, and every cell is formatted with
round-trip float repr.  Rows never raise; per-row failures are recorded
in the note column.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, fields
from importlib import metadata

import numpy as np

from .params import (
    CRITICAL,
    OUT_OF_RANGE,
    SUBCRITICAL,
    SUPERCRITICAL,
    ProblemParams,
    classify_regime,
    coefficients,
    critical_exponents,
    in_dichotomy_window,
)
from .transform import OdeState
from .dynamics import (
    IntegrationUnderflow,
    NonPositiveState,
    Trajectory,
    classify_limit,
    equilibrium_trajectory,
    fixed_points,
    integrate,
    linearize,
    mode_trajectory,
)
from .energy import audit_monotonicity, energy
from .green import (
    MIN_NODE_COUNT,
    IntegrabilityError,
    integrability_report,
    representation_check,
    singularity_bound_check,
    superharmonic_check,
)

ATLAS = "atlas"
CLASSIFICATION = "classification"
ENERGY_AUDIT = "energy-audit"
GREEN_STUDY = "green-study"
_KINDS = (ATLAS, CLASSIFICATION, ENERGY_AUDIT, GREEN_STUDY)

DEFAULT_BOX = 1e-3
DEFAULT_HORIZON = -60.0

# Green-study perturbed orbits stop here: quadratic coupling feeds the
# one backward-growing mode, whose amplification past t ~ -4 swamps any
# draw bigger than roughly 1e-5 (use a small config.box for this kind).
_PERTURBED_HORIZON = -4.0
_AUDIT_ESCAPE_FACTOR = 4.0

try:
    _VERSION = metadata.version("artifact")
except metadata.PackageNotFoundError:  # not installed, e.g. direct checkout
    _VERSION = "0.1.0"

_EXPECTED_SIGNS = {
    SUBCRITICAL: ("+", "+", "-"),
    CRITICAL: ("+", "0", "0"),
    SUPERCRITICAL: ("+", "-", "+"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a runner needs; hashable into the table provenance."""

    kind: str
    param_grid: tuple[tuple[float, float, float], ...] = ()
    tol: float = 1e-10
    samples: int = 64
    seed: int = 0
    margin: float = 1e-3
    window: float = 5.0
    box: float = DEFAULT_BOX
    horizon: float = DEFAULT_HORIZON
    grid_nodes: int = 2048

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; choose from {_KINDS}")
        grid = []
        for item in self.param_grid:
            if isinstance(item, ProblemParams):
                grid.append((item.n, item.alpha, item.p))
                continue
            if len(item) != 3:
                raise ValueError(f"param grid entries are (n, alpha, p) triples, got {item!r}")
            n, alpha, p = item
            n = int(n) if float(n).is_integer() else float(n)
            grid.append((n, float(alpha), float(p)))
        object.__setattr__(self, "param_grid", tuple(grid))
        if not self.tol > 0.0:
            raise ValueError(f"need tol > 0, got {self.tol!r}")
        if self.samples < 0 or int(self.samples) != self.samples:
            raise ValueError(f"samples must be a nonnegative integer, got {self.samples!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed!r}")
        for name in ("margin", "window", "box"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"need {name} > 0, got {getattr(self, name)!r}")
        if not self.horizon < 0.0:
            raise ValueError(f"horizon must be negative (backward time), got {self.horizon!r}")
        if self.grid_nodes < MIN_NODE_COUNT:
            raise ValueError(f"grid_nodes must be >= {MIN_NODE_COUNT}, got {self.grid_nodes!r}")

    def canonical_text(self) -> str:
        parts = [f"{f.name}={getattr(self, f.name)!r}" for f in fields(self)]
        return "\n".join(parts) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


def _fmt(cell) -> str:
    if cell is None:
        return ""
    if isinstance(cell, bool):
        return "true" if cell else "false"
    if isinstance(cell, float):
        return repr(float(cell))  # plain float repr even for numpy scalars
    if isinstance(cell, str):
        return cell.replace(",", ";").replace("\n", " ")
    return str(cell)


@dataclass(frozen=True)
class ResultTable:
    kind: str
    schema: tuple[str, ...]
    rows: tuple[tuple, ...]
    config_digest: str

    def __post_init__(self) -> None:
        for i, row in enumerate(self.rows):
            if len(row) != len(self.schema):
                raise ValueError(
                    f"row {i} has {len(row)} cells for {len(self.schema)} columns"
                )

    def _header_lines(self) -> list[str]:
        return [
            f"# result-table kind={self.kind}",
            f"# config sha256={self.config_digest}",
            f"# generator hardyhenon4 {_VERSION} numpy {np.__version__}",
        ]

    def to_csv(self) -> str:
        lines = self._header_lines()
        lines.append(",".join(self.schema))
        for row in self.rows:
            lines.append(",".join(_fmt(c) for c in row))
        return "\n".join(lines) + "\n"

    def to_aligned(self) -> str:
        cells = [list(self.schema)] + [[_fmt(c) for c in row] for row in self.rows]
        widths = [max(len(r[j]) for r in cells) for j in range(len(self.schema))]
        lines = self._header_lines()
        for r in cells:
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        return "\n".join(lines) + "\n"


def _rng(seed: int, row_key: int) -> np.random.Generator:
    key = np.array([seed, row_key], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _row_key(param_index: int, draw_index: int) -> int:
    return (param_index << 32) | draw_index


def _make_params(triple: tuple) -> ProblemParams:
    n, alpha, p = triple
    return ProblemParams(n=int(n), alpha=float(alpha), p=float(p))


def run_atlas(config: ExperimentConfig) -> ResultTable:
    """One row per grid point: exponents, coefficients, regime, equilibrium."""
    schema = (
        "n", "alpha", "p",
        "serrin", "hardy_sobolev", "sobolev", "upper_dichotomy",
        "B", "a0", "a1", "a2", "a3", "a4",
        "regime", "signs_ok", "w_star", "note",
    )
    rows = []
    blank = [None] * (len(schema) - 4)
    for triple in config.param_grid:
        try:
            params = _make_params(triple)
        except ValueError as err:
            rows.append((*triple, *blank, str(err)))
            continue
        exps = critical_exponents(params)
        coeffs = coefficients(params)
        report = classify_regime(params)
        expected = _EXPECTED_SIGNS.get(report.regime)
        signs_ok = None if expected is None else report.signs == expected
        w_star = fixed_points(coeffs, params.p)[1] if coeffs.a0 > 0.0 else None
        rows.append(
            (
                params.n, params.alpha, params.p,
                exps.serrin, exps.hardy_sobolev, exps.sobolev, exps.upper_dichotomy,
                coeffs.B, coeffs.a0, coeffs.a1, coeffs.a2, coeffs.a3, coeffs.a4,
                report.regime, signs_ok, w_star, "",
            )
        )
    return ResultTable(kind=ATLAS, schema=schema, rows=tuple(rows), config_digest=config.digest())


def _energies_along(traj: Trajectory, coeffs, p: float, n: int) -> tuple[float, float]:
    vals = [energy(s, coeffs, p, n).value for s in traj.states]
    return min(vals), max(vals)


def run_classification_sweep(config: ExperimentConfig) -> ResultTable:
    """Backward classification of seeded draws near the positive equilibrium.

    Grid points outside the dichotomy window are rejected per row, except
    that points with alpha > 0 and a positive equilibrium still run,
    tagged exploratory: there is no removable/singular contract there,
    only the two-sided bound regime.
    """
    schema = (
        "n", "alpha", "p", "regime", "kind", "index",
        "limit_class", "terminal_w0", "window_variation",
        "e_min", "e_max", "count", "note",
    )
    rows = []
    for idx, triple in enumerate(config.param_grid):
        try:
            params = _make_params(triple)
        except ValueError as err:
            rows.append((*triple, None, "reject", None, None, None, None, None, None, None, str(err)))
            continue
        regime = classify_regime(params).regime
        coeffs = coefficients(params)
        tag = (params.n, params.alpha, params.p, regime)
        ok, reason = in_dichotomy_window(params)
        note = ""
        if not ok:
            exploratory = (
                params.alpha > 0.0
                and coeffs.a0 > 0.0
                and regime in (SUBCRITICAL, CRITICAL, SUPERCRITICAL)
            )
            if not exploratory:
                rows.append((*tag, "reject", None, None, None, None, None, None, None, reason))
                continue
            note = "exploratory: " + reason
        wstar = fixed_points(coeffs, params.p)[1]
        if wstar <= config.box:
            rows.append(
                (*tag, "reject", None, None, None, None, None, None, None,
                 f"box {config.box:g} swallows the equilibrium {wstar:.6g}")
            )
            continue
        counts: Counter[str] = Counter()
        for i in range(config.samples):
            draw = _rng(config.seed, _row_key(idx, i)).uniform(-config.box, config.box, 4)
            state = OdeState(float(wstar + draw[0]), float(draw[1]), float(draw[2]), float(draw[3]))
            try:
                traj = integrate(state, 0.0, config.horizon, config.tol, coeffs, params.p)
                cls = classify_limit(
                    traj, coeffs, params.p, margin=config.margin, window=config.window
                )
            except (NonPositiveState, IntegrationUnderflow, ValueError) as err:
                rows.append((*tag, "draw", i, None, None, None, None, None, None, str(err)))
                continue
            e_min, e_max = _energies_along(traj, coeffs, params.p, params.n)
            counts[cls.tag] += 1
            rows.append(
                (*tag, "draw", i, cls.tag, cls.terminal_value, cls.window_variation,
                 e_min, e_max, None, note)
            )
        for cls_tag in sorted(counts):
            rows.append(
                (*tag, "summary", None, cls_tag, None, None, None, None, counts[cls_tag], note)
            )
    return ResultTable(
        kind=CLASSIFICATION, schema=schema, rows=tuple(rows), config_digest=config.digest()
    )


def run_energy_audit(config: ExperimentConfig) -> ResultTable:
    """Monotonicity and rate-law audit over seeded trajectories.

    Trajectories stop once w leaves a 4 w* escape box: past that point the
    power term dominates every polynomial scale and finite differencing
    the energy is no longer conditioned at the audited tolerances.
    """
    schema = (
        "n", "alpha", "p", "regime", "index",
        "max_violation", "rate_mismatch", "e_initial", "e_final", "note",
    )
    rows = []
    for idx, triple in enumerate(config.param_grid):
        try:
            params = _make_params(triple)
        except ValueError as err:
            rows.append((*triple, None, None, None, None, None, None, str(err)))
            continue
        coeffs = coefficients(params)
        regime = classify_regime(params).regime
        tag = (params.n, params.alpha, params.p, regime)
        note = "" if regime != OUT_OF_RANGE else "no monotone-direction contract for OutOfRange"
        if coeffs.a0 > 0.0:
            center = fixed_points(coeffs, params.p)[1]
        else:
            center = 1.0
        threshold = _AUDIT_ESCAPE_FACTOR * max(center, 1.0)
        for i in range(config.samples):
            draw = _rng(config.seed, _row_key(idx, i)).uniform(-config.box, config.box, 4)
            state = OdeState(float(center + draw[0]), float(draw[1]), float(draw[2]), float(draw[3]))
            try:
                traj = integrate(
                    state, 0.0, config.horizon, config.tol, coeffs, params.p,
                    blowup_threshold=threshold,
                )
                audit = audit_monotonicity(traj, coeffs, params.p, params.n)
            except (NonPositiveState, IntegrationUnderflow, ValueError) as err:
                rows.append((*tag, i, None, None, None, None, str(err)))
                continue
            e_initial = energy(traj.states[0], coeffs, params.p, params.n).value
            e_final = energy(traj.states[-1], coeffs, params.p, params.n).value
            rows.append(
                (*tag, i, audit.max_violation, audit.rate_mismatch, e_initial, e_final, note)
            )
    return ResultTable(
        kind=ENERGY_AUDIT, schema=schema, rows=tuple(rows), config_digest=config.digest()
    )


def _backward_decaying_basis(coeffs, p: float) -> list[OdeState]:
    """Real unit vectors spanning the modes that decay as t -> -infinity."""
    wstar = fixed_points(coeffs, p)[1]
    rep = linearize(wstar, coeffs, p)
    basis = []
    for z in rep.roots:
        if z.real <= 0.0 or z.imag < -1e-9:
            continue
        v = np.array([z**k for k in range(4)])
        if abs(z.imag) < 1e-9:
            basis.append(v.real / np.linalg.norm(v.real))
        else:
            basis.append(v.real / np.linalg.norm(v.real))
            basis.append(v.imag / np.linalg.norm(v.imag))
    return [OdeState(*map(float, b)) for b in basis]


_GREEN_DEEP_HORIZON = -16.0


def run_green_study(config: ExperimentConfig) -> ResultTable:
    """Green-operator diagnostics for exact, removable and perturbed orbits.

    The exact equilibrium orbit gets the full battery (representation
    residual at two resolutions, superharmonicity, both integrability
    tests, scaled-jet sups).  The u == 1 orbit documents the removable
    side.  Perturbed singular orbits are integrated only to t = -4 and
    checked for superharmonicity and sups; their useful depth is limited
    by the backward-growing mode, see the module notes.
    """
    schema = (
        "n", "alpha", "p", "regime", "case", "index",
        "residual_coarse", "residual_fine", "ratio",
        "tau", "neglap_min",
        "l1_converges", "weighted_diverges", "l1_exponent", "weighted_exponent",
        "sup0", "sup1", "sup2", "sup3", "note",
    )
    blank = {name: None for name in schema}

    def emit(rows, tag, case, index, **cells) -> None:
        filled = dict(blank, **cells)
        rows.append(
            (*tag, case, index, *(filled[name] for name in schema[6:-1]), filled["note"] or "")
        )

    rows: list[tuple] = []
    for idx, triple in enumerate(config.param_grid):
        try:
            params = _make_params(triple)
        except ValueError as err:
            emit(rows, (*triple, None), "reject", None, note=str(err))
            continue
        coeffs = coefficients(params)
        tag = (params.n, params.alpha, params.p, classify_regime(params).regime)

        removable = mode_trajectory([(1.0, coeffs.B)], 0.0, _GREEN_DEEP_HORIZON)
        cells: dict = {}
        try:
            superharmonic_check(removable, params)
            cells["note"] = "superharmonic check unexpectedly accepted a removable orbit"
        except ValueError as err:
            cells["note"] = f"superharmonic rejected: {err}"
        try:
            rep = integrability_report(removable, params)
            cells.update(
                l1_converges=rep.l1_converges,
                weighted_diverges=rep.weighted_diverges,
                l1_exponent=rep.l1_shell_exponent,
                weighted_exponent=rep.weighted_shell_exponent,
            )
        except (IntegrabilityError, ValueError) as err:
            cells["note"] = str(err)
        sups = singularity_bound_check(removable, params).sup_values
        cells.update(sup0=sups[0], sup1=sups[1], sup2=sups[2], sup3=sups[3])
        emit(rows, tag, "removable", None, **cells)

        if coeffs.a0 <= 0.0:
            emit(rows, tag, "reject", None, note="no positive equilibrium (a0 <= 0)")
            continue

        exact = equilibrium_trajectory(coeffs, params.p, 0.0, _GREEN_DEEP_HORIZON)
        cells = {}
        try:
            coarse = representation_check(exact, params, count=config.grid_nodes)
            fine = representation_check(exact, params, count=4 * config.grid_nodes)
            ratio = coarse.residual / fine.residual if fine.residual > 0.0 else float("inf")
            cells.update(
                residual_coarse=coarse.residual, residual_fine=fine.residual, ratio=ratio
            )
        except (IntegrabilityError, ValueError) as err:
            cells["note"] = str(err)
        try:
            sh = superharmonic_check(exact, params)
            cells.update(tau=sh.tau, neglap_min=sh.min_value)
            rep = integrability_report(exact, params)
            cells.update(
                l1_converges=rep.l1_converges,
                weighted_diverges=rep.weighted_diverges,
                l1_exponent=rep.l1_shell_exponent,
                weighted_exponent=rep.weighted_shell_exponent,
            )
        except (IntegrabilityError, ValueError) as err:
            cells["note"] = (cells.get("note") or "") + str(err)
        sups = singularity_bound_check(exact, params).sup_values
        cells.update(sup0=sups[0], sup1=sups[1], sup2=sups[2], sup3=sups[3])
        emit(rows, tag, "exact", None, **cells)

        basis = _backward_decaying_basis(coeffs, params.p)
        wstar = fixed_points(coeffs, params.p)[1]
        for i in range(config.samples):
            draw = _rng(config.seed, _row_key(idx, i)).uniform(-config.box, config.box, len(basis))
            comps = [wstar, 0.0, 0.0, 0.0]
            for c, vec in zip(draw, basis):
                for k in range(4):
                    comps[k] = float(comps[k] + c * vec[k])
            cells = {}
            try:
                traj = integrate(
                    OdeState(*comps), 0.0, _PERTURBED_HORIZON, config.tol, coeffs, params.p
                )
                sh = superharmonic_check(traj, params)
                sups = singularity_bound_check(traj, params).sup_values
                cells.update(
                    tau=sh.tau, neglap_min=sh.min_value,
                    sup0=sups[0], sup1=sups[1], sup2=sups[2], sup3=sups[3],
                )
            except (NonPositiveState, IntegrationUnderflow, ValueError) as err:
                cells["note"] = str(err)
            emit(rows, tag, "perturbed", i, **cells)
    return ResultTable(
        kind=GREEN_STUDY, schema=schema, rows=tuple(rows), config_digest=config.digest()
    )


_RUNNERS = {
    ATLAS: run_atlas,
    CLASSIFICATION: run_classification_sweep,
    ENERGY_AUDIT: run_energy_audit,
    GREEN_STUDY: run_green_study,
}


def run_experiment(config: ExperimentConfig) -> ResultTable:
    return _RUNNERS[config.kind](config)
