"""Radial Green-operator machinery on the unit ball for -Delta and Delta^2.

The solves are double cumulative quadratures in the log variable t = ln r
on a log-uniform grid:

    v(r) = int_r^1 tau^{1-n} ( int_0^tau f(s) s^{n-1} ds ) dtau,

iterated twice for the bilaplacian with Navier data v(1) = Delta v(1) = 0.
Panel integrals use a 5-node Lagrange rule (exact weights derived in
rational arithmetic at import, O(h^5) globally); the inner integral's
piece below the grid is closed by a geometric tail whose exponent comes
from the two bottom octave sums, which is exact for power-law integrands.
The outer integral is accumulated from the boundary downward so the large
interior mass never cancels.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .params import ProblemParams, coefficients
from .transform import OdeState, neg_laplacian_radial
from .dynamics import (
    CONVERGES_TO_FIXED_POINT,
    Trajectory,
    _wpow,
    classify_limit,
)

DEFAULT_R_MIN = 2.0**-20
DEFAULT_NODE_COUNT = 2048
MIN_NODE_COUNT = 256

# Shells per dyadic integrability test and trailing run length that
# declares convergence/divergence.
_DIVERGENCE_RUN = 6
_SHELL_PANELS = 64


class IntegrabilityError(ValueError):
    """A required radial integral fails its dyadic integrability test."""


def _panel_rows() -> tuple[tuple[float, ...], ...]:
    # Integrals of the degree-4 Lagrange basis on nodes {0..4} over the
    # panels [0,1], [1,2], [2,3], [3,4], in exact rational arithmetic.
    rows = []
    for panel in range(4):
        row = []
        for i in range(5):
            poly = [Fraction(1)]
            denom = Fraction(1)
            for j in range(5):
                if j == i:
                    continue
                denom *= i - j
                shifted = [Fraction(0)] * (len(poly) + 1)
                for k, c in enumerate(poly):
                    shifted[k + 1] += c
                    shifted[k] -= c * j
                poly = shifted
            val = Fraction(0)
            for k, c in enumerate(poly):
                val += c * (Fraction(panel + 1) ** (k + 1) - Fraction(panel) ** (k + 1)) / (k + 1)
            row.append(float(val / denom))
        rows.append(tuple(row))
    return tuple(rows)


_ROWS = _panel_rows()


def _panel_increments(g: np.ndarray, h: float) -> np.ndarray:
    n = len(g)
    if n < 5:
        raise ValueError(f"need at least 5 nodes, got {n}")
    inc = np.empty(n - 1)
    for k in range(n - 1):
        b = min(max(k - 2, 0), n - 5)
        inc[k] = h * float(np.dot(_ROWS[k - b], g[b : b + 5]))
    return inc


def _cumulative_up(g: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros(len(g))
    out[1:] = np.cumsum(_panel_increments(g, h))
    return out


def _cumulative_down(g: np.ndarray, h: float) -> np.ndarray:
    inc = _panel_increments(g, h)
    out = np.zeros(len(g))
    out[:-1] = np.cumsum(inc[::-1])[::-1]
    return out


def _tail_estimate(g: np.ndarray, h: float) -> float:
    """Mass of int_{-inf}^{t_0} g dt assuming a geometric (power-law) tail.

    The exponent is read off the two bottom octave sums S1, S2 of the
    grid: for g = C e^{sigma t} the estimate S1 / (S2/S1 - 1) is exact,
    and the panel-rule errors cancel in the ratio.
    """
    m = max(2, int(round(math.log(2.0) / h)))
    if 2 * m + 5 > len(g):
        raise ValueError("grid too coarse for the octave tail estimate")
    F = _cumulative_up(g[: 2 * m + 5], h)
    s1, s2 = float(F[m]), float(F[2 * m] - F[m])
    if s1 <= 0.0:
        return 0.0
    rho = s2 / s1
    if rho <= 1.0 + 1e-12:
        raise IntegrabilityError(
            f"inner integrand has a non-integrable tail (octave ratio {rho:.6g} <= 1)"
        )
    return s1 / (rho - 1.0)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Log-uniform radii in (r_min, 1]; 1 is always a node, r_min is not."""

    r_min: float
    t: np.ndarray      # log-radii, strictly increasing, t[-1] == 0
    nodes: np.ndarray  # radii exp(t)
    h: float           # log spacing

    @property
    def count(self) -> int:
        return len(self.nodes)


def make_grid(r_min: float = DEFAULT_R_MIN, count: int = DEFAULT_NODE_COUNT) -> RadialGrid:
    if not 0.0 < r_min < 1.0:
        raise ValueError(f"need 0 < r_min < 1, got {r_min!r}")
    if count < MIN_NODE_COUNT:
        raise ValueError(f"need at least {MIN_NODE_COUNT} nodes, got {count}")
    t_min = math.log(r_min)
    h = -t_min / count
    t = t_min + (np.arange(count) + 1) * h
    t[-1] = 0.0
    return RadialGrid(r_min=r_min, t=t, nodes=np.exp(t), h=h)


@dataclass(eq=False)
class RadialField:
    """A sampled radial function, optionally labeled with (n, alpha, p)."""

    grid: RadialGrid
    values: np.ndarray
    n: int | None = None
    alpha: float | None = None
    p: float | None = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if len(self.values) != self.grid.count:
            raise ValueError(
                f"field has {len(self.values)} values for {self.grid.count} nodes"
            )
        if not np.all(np.isfinite(self.values)):
            bad = int(np.flatnonzero(~np.isfinite(self.values))[0])
            raise ValueError(f"non-finite field value at node {bad}")

    def dumps(self) -> str:
        head = (
            f"# radial-field n={'' if self.n is None else self.n}"
            f" alpha={'' if self.alpha is None else format(self.alpha, 'g')}"
            f" p={'' if self.p is None else format(self.p, 'g')}"
        )
        lines = [head]
        for r, v in zip(self.grid.nodes, self.values):
            lines.append(f"{float(r)!r},{float(v)!r}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> "RadialField":
        text = Path(path).read_text()
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("# radial-field"):
            raise ValueError(f"{path}: missing '# radial-field' header")
        m = re.match(
            r"# radial-field n=(\S*) alpha=(\S*) p=(\S*)\s*$", lines[0]
        )
        if m is None:
            raise ValueError(f"{path}: malformed radial-field header: {lines[0]!r}")
        n = int(m.group(1)) if m.group(1) else None
        alpha = float(m.group(2)) if m.group(2) else None
        p = float(m.group(3)) if m.group(3) else None
        radii, vals = [], []
        for ln in lines[1:]:
            parts = ln.split(",")
            if len(parts) != 2:
                raise ValueError(f"{path}: expected 'radius,value', got {ln!r}")
            radii.append(float(parts[0]))
            vals.append(float(parts[1]))
        radii_arr = np.array(radii)
        t = np.log(radii_arr)
        diffs = np.diff(t)
        if len(diffs) == 0 or np.max(np.abs(diffs - diffs[0])) > 1e-9 * abs(diffs[0]):
            raise ValueError(f"{path}: radii are not log-uniform")
        h = float(diffs[0])
        grid = RadialGrid(
            r_min=float(np.exp(t[0] - h)), t=t, nodes=radii_arr, h=h
        )
        return cls(grid=grid, values=np.array(vals), n=n, alpha=alpha, p=p)


def poisson_solve_radial(f: RadialField, n: int) -> RadialField:
    """Solve -Delta v = f radially with v(1) = 0 by double cumulative quadrature."""
    if n < 3:
        raise ValueError(f"need dimension n >= 3, got {n}")
    grid = f.grid
    g_in = f.values * np.exp(n * grid.t)
    inner = _tail_estimate(g_in, grid.h) + _cumulative_up(g_in, grid.h)
    g_out = inner * np.exp((2.0 - n) * grid.t)
    return RadialField(grid=grid, values=_cumulative_down(g_out, grid.h))


def bilaplacian_solve_radial(f: RadialField, n: int) -> RadialField:
    """Solve Delta^2 v = f radially with Navier data v(1) = Delta v(1) = 0."""
    return poisson_solve_radial(poisson_solve_radial(f, n), n)


def _project_span(target: np.ndarray, columns: np.ndarray) -> np.ndarray:
    # Least squares with per-column equilibration: the biharmonic columns
    # span many decades on a log grid and would otherwise fall below the
    # SVD cutoff, silently dropping the directions the fit needs.
    scale = np.linalg.norm(columns, axis=0)
    scale[scale == 0.0] = 1.0
    cols = columns / scale
    coef, *_ = np.linalg.lstsq(cols, target, rcond=None)
    return target - cols @ coef


def biharmonic_span_residual(u: RadialField, source: RadialField, n: int) -> float:
    """Relative residual of u - G2[source] after projecting out biharmonics.

    The comparison runs on the interior half of the grid (middle two
    quarters), in units of |u| per node; the projected span is
    {1, r^2, r^{2-n}, r^{4-n}}, the radial kernel of Delta^2.
    """
    grid = u.grid
    if source.grid is not grid and (
        source.grid.count != grid.count
        or abs(source.grid.r_min - grid.r_min) > 1e-15
    ):
        raise ValueError("u and source must share a grid")
    v = bilaplacian_solve_radial(source, n)
    d = u.values - v.values
    r = grid.nodes
    lo, hi = grid.count // 4, 3 * grid.count // 4
    basis = np.stack(
        [np.ones(grid.count), r**2, r ** (2.0 - n), r ** (4.0 - n)], axis=1
    )
    scale = np.abs(u.values[lo:hi])
    if np.any(scale == 0.0):
        raise ValueError("u vanishes on the interior window; cannot form relative residual")
    res = _project_span(d[lo:hi] / scale, basis[lo:hi] / scale[:, None])
    return math.sqrt(float(np.mean(res**2)))


def _field_from_trajectory(
    traj: Trajectory, params: ProblemParams, grid: RadialGrid
) -> tuple[RadialField, RadialField]:
    """Sample u = r^{-B} w and f = r^alpha u^p on the grid nodes."""
    B = params.B
    t0 = float(grid.t[0])
    if not (traj.covers(t0) and traj.covers(0.0)):
        raise ValueError(
            f"trajectory covers [{traj.t_start:.3g}, {traj.t_end:.3g}] but the "
            f"grid needs [{t0:.3g}, 0]"
        )
    u_vals = np.empty(grid.count)
    f_vals = np.empty(grid.count)
    for j, t in enumerate(grid.t):
        w0 = traj.sample(float(t)).w0
        if w0 <= 0.0:
            raise ValueError(f"non-positive field value at node {j} (r={grid.nodes[j]:.6g})")
        u = math.exp(-B * t) * w0
        u_vals[j] = u
        f_vals[j] = math.exp(params.alpha * t) * _wpow(u, params.p)
    u_field = RadialField(grid=grid, values=u_vals, n=params.n, alpha=params.alpha, p=params.p)
    f_field = RadialField(grid=grid, values=f_vals, n=params.n, alpha=params.alpha, p=params.p)
    return u_field, f_field


@dataclass(frozen=True)
class RepresentationReport:
    residual: float
    node_count: int


def representation_check(
    traj: Trajectory,
    params: ProblemParams,
    count: int = DEFAULT_NODE_COUNT,
    r_min: float = DEFAULT_R_MIN,
) -> RepresentationReport:
    """Post-projection residual of u - G2[r^alpha u^p] for a trajectory.

    For a true solution the difference is a radial biharmonic function
    (boundary kernels), so the projected residual is pure quadrature
    error and must shrink under grid refinement.
    """
    grid = make_grid(r_min=r_min, count=count)
    u_field, f_field = _field_from_trajectory(traj, params, grid)
    return RepresentationReport(
        residual=biharmonic_span_residual(u_field, f_field, params.n),
        node_count=count,
    )


@dataclass(frozen=True)
class SuperharmonicReport:
    tau: float
    min_value: float


def superharmonic_check(traj: Trajectory, params: ProblemParams) -> SuperharmonicReport:
    """Positivity sweep of -Delta u along a singular-class trajectory.

    Returns the largest tau with -Delta u > 0 on (0, tau) within the
    sampled range and the minimum over that range.  Removable-class
    trajectories are rejected: the property is asserted only near a
    non-removable singularity.
    """
    coeffs = coefficients(params)
    window = min(5.0, traj.span / 2.0)
    cls = classify_limit(traj, coeffs, params.p, window=window)
    if cls.tag != CONVERGES_TO_FIXED_POINT:
        raise ValueError(
            f"superharmonicity needs a singular-class trajectory, got {cls.tag}"
        )
    order = sorted(range(len(traj.times)), key=lambda i: traj.times[i])
    vals = [
        neg_laplacian_radial(traj.times[i], traj.states[i], params) for i in order
    ]
    ts = [traj.times[i] for i in order]
    # Largest prefix from the deep end on which -Delta u stays positive.
    k_bad = next((k for k, v in enumerate(vals) if v <= 0.0), None)
    if k_bad == 0:
        return SuperharmonicReport(tau=0.0, min_value=vals[0])
    last = len(vals) - 1 if k_bad is None else k_bad - 1
    prefix = vals[: last + 1]
    return SuperharmonicReport(tau=math.exp(ts[last]), min_value=min(prefix))


@dataclass(frozen=True)
class IntegrabilityReport:
    """Dyadic shell diagnostics for the L^1 and weighted radial integrals."""

    l1_converges: bool
    weighted_diverges: bool
    l1_ratios: tuple[float, ...]
    weighted_ratios: tuple[float, ...]
    l1_shell_exponent: float
    weighted_shell_exponent: float

    @property
    def dyadic_ratios(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        return (self.l1_ratios, self.weighted_ratios)


def _shell_sums(traj: Trajectory, params: ProblemParams, weight_exp: float, k_max: int) -> np.ndarray:
    """Quadrature of e^{weight_exp * t} u^p over shells [2^{-k-1}, 2^{-k}]."""
    B, p = params.B, params.p
    ln2 = math.log(2.0)
    h = ln2 / _SHELL_PANELS
    sums = np.empty(k_max + 1)
    for k in range(k_max + 1):
        t_hi = -k * ln2
        g = np.empty(_SHELL_PANELS + 1)
        for i in range(_SHELL_PANELS + 1):
            t = t_hi - ln2 + i * h
            w0 = traj.sample(t).w0
            if w0 < 0.0:
                raise ValueError(f"negative w at t={t:.6g}; integrand undefined")
            u = math.exp(-B * t) * w0
            g[i] = math.exp(weight_exp * t) * _wpow(u, p)
        sums[k] = float(np.sum(_panel_increments(g, h)))
    return sums


def integrability_report(traj: Trajectory, params: ProblemParams) -> IntegrabilityReport:
    """Run both dyadic shell tests on r^alpha u^p.

    The L^1 test integrates against r^{n-1} dr and must converge for the
    representation to exist at all (six consecutive growing shells raise
    IntegrabilityError).  The weighted test integrates against r dr
    (the m = 2 kernel weight) and is expected to diverge exactly for the
    singular class.  Shell exponents are read off the deepest ratio.
    """
    n, alpha = params.n, params.alpha
    t_min = min(traj.t_start, traj.t_end)
    if not traj.covers(0.0):
        raise ValueError("trajectory must reach t = 0 (the outer boundary)")
    k_max = int(-t_min / math.log(2.0)) - 1
    if k_max < 17:
        raise ValueError(
            f"insufficient resolution: trajectory reaches r = {math.exp(t_min):.3g}, "
            f"need 2^-17 or deeper"
        )
    l1 = _shell_sums(traj, params, weight_exp=float(n) + alpha, k_max=k_max)
    wt = _shell_sums(traj, params, weight_exp=2.0 + alpha, k_max=k_max)

    # ratios[k] = deeper shell / shallower shell
    l1_ratios = tuple(float(l1[k + 1] / l1[k]) for k in range(k_max))
    wt_ratios = tuple(float(wt[k + 1] / wt[k]) for k in range(k_max))
    run = _DIVERGENCE_RUN
    l1_diverges = all(q >= 1.0 for q in l1_ratios[-run:])
    if l1_diverges:
        raise IntegrabilityError(
            "L^1 dyadic test diverges: last "
            f"{run} shell ratios all >= 1 (deepest {l1_ratios[-1]:.6g})"
        )
    l1_conv = all(q < 1.0 for q in l1_ratios[-run:])
    wt_div = all(q >= 1.0 for q in wt_ratios[-run:])
    return IntegrabilityReport(
        l1_converges=l1_conv,
        weighted_diverges=wt_div,
        l1_ratios=l1_ratios,
        weighted_ratios=wt_ratios,
        l1_shell_exponent=-math.log2(l1_ratios[-1]),
        weighted_shell_exponent=-math.log2(wt_ratios[-1]),
    )


@dataclass(frozen=True)
class SingularityBoundReport:
    """sup over r <= 1/2 of r^{B+i} |u^(i)(r)| for i = 0..3."""

    sup_values: tuple[float, float, float, float]


def singularity_bound_check(traj: Trajectory, params: ProblemParams) -> SingularityBoundReport:
    """Scaled sups of the u-jet; finite iff the scale-invariant bound holds.

    r^{B+i} u^(i)(r) equals the i-th inverse-transform bracket in w, so
    the sups are computed directly from trajectory states without any
    exponentials (exact scaling).
    """
    B = params.B
    half = -math.log(2.0)
    sups = [0.0, 0.0, 0.0, 0.0]
    seen = False
    for t, s in zip(traj.times, traj.states):
        if t > half:
            continue
        seen = True
        w0, w1, w2, w3 = s
        b0 = w0
        b1 = w1 - B * w0
        b2 = w2 - (2.0 * B + 1.0) * w1 + B * (B + 1.0) * w0
        b3 = (
            w3
            - 3.0 * (B + 1.0) * w2
            + (3.0 * B * B + 6.0 * B + 2.0) * w1
            - B * (B + 1.0) * (B + 2.0) * w0
        )
        for i, b in enumerate((b0, b1, b2, b3)):
            sups[i] = max(sups[i], abs(b))
    if not seen:
        raise ValueError("trajectory has no samples with r <= 1/2")
    return SingularityBoundReport(sup_values=tuple(sups))
