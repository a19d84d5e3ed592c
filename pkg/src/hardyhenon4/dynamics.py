"""The transformed fourth-order equation as an autonomous dynamical system.

State is the 4-jet y = (w, w', w'', w''') in log-radius t; the flow is

    y' = (w', w'', w''', w^p - a3 w''' - a2 w'' - a1 w' - a0 w).

Backward time (t decreasing) walks toward the singularity r -> 0.  The two
equilibria are w = 0 and w = a0^{1/(p-1)}; trajectories are produced by an
embedded Dormand-Prince 5(4) pair with PI step-size control and cubic
Hermite dense output, and are classified against those equilibria.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .params import CoefficientSet
from .transform import OdeState

# Termination reasons.
REACHED_END = "ReachedEnd"
BLOW_UP = "BlowUp"
NON_POSITIVE = "NonPositive"

# Limit-class tags.
CONVERGES_TO_ZERO = "ConvergesToZero"
CONVERGES_TO_FIXED_POINT = "ConvergesToFixedPoint"
UNDETERMINED = "Undetermined"

DEFAULT_BLOWUP_THRESHOLD = 1e6
DEFAULT_MARGIN = 1e-3
DEFAULT_WINDOW = 5.0
DEFAULT_SAMPLE_SPACING = 0.01

TOL_MIN, TOL_MAX = 1e-13, 1e-4

_FIXED_POINT_SCAN_ULPS = 2048


class NonPositiveState(ValueError):
    """Raised by vector_field when w < 0: the nonlinearity w^p is undefined."""


class IntegrationUnderflow(RuntimeError):
    """Step size collapsed; the integration outcome is undetermined."""


def _wpow(w: float, q: float) -> float:
    # One shared power path for the nonlinearity and for fixed-point
    # refinement, so that both see bit-identical arithmetic.
    if w > 0.0:
        return math.exp(q * math.log(w))
    return 0.0


def vector_field(state: OdeState, coeffs: CoefficientSet, p: float) -> OdeState:
    """Right-hand side of the first-order system; rejects negative w."""
    w0, w1, w2, w3 = state
    if w0 < 0.0:
        raise NonPositiveState(f"w={w0!r} < 0: trajectory left the admissible cone")
    w4 = (
        _wpow(w0, p)
        - coeffs.a3 * w3
        - coeffs.a2 * w2
        - coeffs.a1 * w1
        - coeffs.a0 * w0
    )
    return OdeState(w1, w2, w3, w4)


def fixed_points(coeffs: CoefficientSet, p: float) -> list[float]:
    """Return the equilibria {0, a0^{1/(p-1)}} of the scalar reduction.

    The positive root is refined over a small ulp neighborhood of the
    power-function seed to the double minimizing |w^p - a0 w| in the same
    floating-point path vector_field uses (exact zeros preferred).  The
    equilibrium is hyperbolic, so a nonzero residual would be amplified
    exponentially along any long integration started there; snapping to
    an exact machine equilibrium makes such runs honestly stationary.
    """
    a0 = coeffs.a0
    if a0 <= 0.0:
        warnings.warn(
            f"a0={a0:g} <= 0: no positive equilibrium (outside the expected regime)",
            stacklevel=2,
        )
        return [0.0]
    seed = a0 ** (1.0 / (p - 1.0))
    best_w, best_g = seed, abs(_wpow(seed, p) - a0 * seed)
    w = seed
    for _ in range(_FIXED_POINT_SCAN_ULPS):
        w = math.nextafter(w, 0.0)
    for _ in range(2 * _FIXED_POINT_SCAN_ULPS + 1):
        g = abs(_wpow(w, p) - a0 * w)
        if g < best_g or (g == best_g and abs(w - seed) < abs(best_w - seed)):
            best_w, best_g = w, g
        w = math.nextafter(w, math.inf)
    return [0.0, best_w]


@dataclass(frozen=True)
class LinearizationReport:
    """Characteristic data of the linearization at an equilibrium."""

    char_coeffs: tuple[float, float, float, float, float]
    roots: tuple[complex, complex, complex, complex]
    n_unstable_backward: int

    def residual(self) -> float:
        """Relative defect between the roots multiplied out and char_coeffs."""
        poly = np.poly(np.array(self.roots))
        ref = np.array(self.char_coeffs)
        return float(np.max(np.abs(poly.real - ref)) / (1.0 + np.max(np.abs(ref))))


def linearize(point: float, coeffs: CoefficientSet, p: float) -> LinearizationReport:
    """Characteristic polynomial and roots of the linearization at a point.

    The polynomial is mu^4 + a3 mu^3 + a2 mu^2 + a1 mu + (a0 - p point^{p-1});
    roots come from numpy's balanced companion eigenvalues, which stay
    accurate when root patterns collide near the critical exponent.
    """
    c0 = coeffs.a0 - p * _wpow(point, p - 1.0)
    cs = (1.0, coeffs.a3, coeffs.a2, coeffs.a1, c0)
    roots = np.roots(np.array(cs))
    roots = tuple(sorted((complex(z) for z in roots), key=lambda z: (z.real, z.imag)))
    n_right = sum(1 for z in roots if z.real > 0.0)
    return LinearizationReport(char_coeffs=cs, roots=roots, n_unstable_backward=n_right)


def backward_stable_mode(coeffs: CoefficientSet, p: float) -> tuple[float, OdeState]:
    """Largest real root mu at the positive equilibrium and its unit mode.

    States displaced along (1, mu, mu^2, mu^3) with Re mu > 0 decay onto
    the equilibrium as t -> -infinity, which makes this the direction of
    choice for seeding trajectories that converge backward.
    """
    wstar = fixed_points(coeffs, p)[1]
    rep = linearize(wstar, coeffs, p)
    real_roots = [z.real for z in rep.roots if abs(z.imag) < 1e-9 and z.real > 0.0]
    if not real_roots:
        raise ValueError("no real backward-stable root at the positive equilibrium")
    mu = max(real_roots)
    vec = (1.0, mu, mu * mu, mu**3)
    scale = math.sqrt(sum(v * v for v in vec))
    return mu, OdeState(*(v / scale for v in vec))


# Cubic Hermite evaluation of one accepted step's dense segment.
def _hermite(t: float, ta: float, tb: float, ya, yb, fa, fb) -> OdeState:
    h = tb - ta
    s = (t - ta) / h
    s2 = s * s
    s3 = s2 * s
    h00 = 2.0 * s3 - 3.0 * s2 + 1.0
    h10 = s3 - 2.0 * s2 + s
    h01 = -2.0 * s3 + 3.0 * s2
    h11 = s3 - s2
    return OdeState(
        *(
            h00 * ya[i] + h10 * h * fa[i] + h01 * yb[i] + h11 * h * fb[i]
            for i in range(4)
        )
    )


@dataclass(frozen=True)
class Trajectory:
    """A computed orbit: uniform samples plus dense per-step segments.

    times run strictly monotonically (decreasing for backward runs); the
    stored samples lie on a uniform spacing except for the terminal point.
    sample(t) evaluates the dense representation anywhere in the covered
    span, so audits can resample at their own stencils.
    """

    times: tuple[float, ...]
    states: tuple[OdeState, ...]
    tol: float
    termination: str
    segments: tuple = field(repr=False, default=())
    analytic: Callable[[float], OdeState] | None = field(repr=False, default=None)

    def __post_init__(self) -> None:
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if len(self.times) >= 2:
            diffs = [b - a for a, b in zip(self.times, self.times[1:])]
            if not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
                raise ValueError("trajectory times must be strictly monotone")
        for s in self.states:
            if not s.finite:
                raise ValueError("trajectory contains a non-finite state")

    @property
    def t_start(self) -> float:
        return self.times[0]

    @property
    def t_end(self) -> float:
        return self.times[-1]

    @property
    def span(self) -> float:
        return abs(self.t_end - self.t_start)

    def covers(self, t: float) -> bool:
        lo, hi = min(self.t_start, self.t_end), max(self.t_start, self.t_end)
        return lo - 1e-12 <= t <= hi + 1e-12

    def sample(self, t: float) -> OdeState:
        """Dense evaluation at any covered time."""
        if not self.covers(t):
            raise ValueError(f"t={t!r} outside the covered span [{self.t_start}, {self.t_end}]")
        if self.analytic is not None:
            return self.analytic(t)
        if not self.segments:
            raise ValueError("trajectory carries no dense segments")
        # Segments are ordered along the integration direction.
        lo, hi = 0, len(self.segments) - 1
        forward = self.segments[0][1] > self.segments[0][0]
        while lo < hi:
            mid = (lo + hi) // 2
            ta, tb = self.segments[mid][0], self.segments[mid][1]
            if (t <= tb if forward else t >= tb):
                hi = mid
            else:
                lo = mid + 1
        return _hermite(t, *self.segments[lo])


def analytic_trajectory(
    fn: Callable[[float], OdeState],
    t0: float,
    t1: float,
    spacing: float = DEFAULT_SAMPLE_SPACING,
    termination: str = REACHED_END,
) -> Trajectory:
    """Wrap a closed-form solution t -> state as a Trajectory."""
    if t0 == t1:
        raise ValueError("need t0 != t1")
    sgn = 1.0 if t1 > t0 else -1.0
    n = max(2, int(abs(t1 - t0) / spacing) + 1)
    ts = [t0 + sgn * k * spacing for k in range(n)]
    if ts[-1] != t1:
        ts.append(t1)
    states = [fn(t) for t in ts]
    return Trajectory(
        times=tuple(ts),
        states=tuple(states),
        tol=0.0,
        termination=termination,
        analytic=fn,
    )


def equilibrium_trajectory(
    coeffs: CoefficientSet,
    p: float,
    t0: float = 0.0,
    t1: float = -15.0,
    spacing: float = DEFAULT_SAMPLE_SPACING,
) -> Trajectory:
    """The exact constant orbit at the positive equilibrium."""
    wstar = fixed_points(coeffs, p)[1]
    return analytic_trajectory(lambda t: OdeState(wstar, 0.0, 0.0, 0.0), t0, t1, spacing)


def mode_trajectory(
    terms: Sequence[tuple[float, float]],
    t0: float,
    t1: float,
    spacing: float = DEFAULT_SAMPLE_SPACING,
) -> Trajectory:
    """Exact orbit of the linear part: w(t) = sum of c * e^{mu t} terms.

    Useful for kernel elements of the linearization at zero, e.g. u == 1
    corresponds to the single term (1, B).
    """

    def fn(t: float) -> OdeState:
        comps = [0.0, 0.0, 0.0, 0.0]
        for c, mu in terms:
            e = c * math.exp(mu * t)
            for k in range(4):
                comps[k] += e
                e *= mu
        return OdeState(*comps)

    return analytic_trajectory(fn, t0, t1, spacing)


# Dormand-Prince 5(4) tableau.
_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0)
_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
)
_B5 = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0)
# Difference between the 5th- and 4th-order solutions (error estimator).
_E = (
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_PI_ALPHA = 0.7 / 5.0
_PI_BETA = 0.4 / 5.0


def _rhs(y, coeffs: CoefficientSet, p: float):
    # Internal right-hand side for trial stages: the pow base is clipped
    # at zero; sign crossings are handled by the termination logic, so a
    # stage poking below zero is tolerated without raising.
    w0 = y[0]
    w4 = (
        _wpow(w0, p)
        - coeffs.a3 * y[3]
        - coeffs.a2 * y[2]
        - coeffs.a1 * y[1]
        - coeffs.a0 * y[0]
    )
    return (y[1], y[2], y[3], w4)


def _err_norm(err, y_old, y_new, rtol: float, atol: float) -> float:
    acc = 0.0
    for i in range(4):
        scale = atol + rtol * max(abs(y_old[i]), abs(y_new[i]))
        q = err[i] / scale
        acc += q * q
    return math.sqrt(acc / 4.0)


def _initial_step(y0, f0, span: float, rtol: float, atol: float) -> float:
    # Standard curvature-free heuristic; a vanishing field means the state
    # is an exact equilibrium and the whole span can be taken at once.
    d0 = math.sqrt(sum((y0[i] / (atol + rtol * abs(y0[i]))) ** 2 for i in range(4)) / 4.0)
    d1 = math.sqrt(sum((f0[i] / (atol + rtol * abs(y0[i]))) ** 2 for i in range(4)) / 4.0)
    if d1 == 0.0:
        return span
    if d0 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    return min(h, span)


def _bisect_crossing(seg, level: float) -> tuple[float, OdeState]:
    """Locate w0 == level inside one dense segment by bisection."""
    ta, tb = seg[0], seg[1]
    fa = seg[2][0] - level
    lo, hi = ta, tb
    flo = fa
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fmid = _hermite(mid, *seg)[0] - level
        if fmid == 0.0:
            lo = hi = mid
            break
        if (fmid > 0.0) == (flo > 0.0):
            lo = mid
            flo = fmid
        else:
            hi = mid
    tc = 0.5 * (lo + hi)
    return tc, _hermite(tc, *seg)


def integrate(
    initial: OdeState,
    t0: float,
    t1: float,
    tol: float,
    coeffs: CoefficientSet,
    p: float,
    sample_spacing: float = DEFAULT_SAMPLE_SPACING,
    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD,
) -> Trajectory:
    """Adaptive integration of the flow from t0 to t1 (either direction).

    Parameters
    ----------
    initial : starting 4-jet with w >= 0.
    t0, t1 : time span; t1 < t0 integrates backward toward r -> 0.
    tol : relative tolerance in [1e-13, 1e-4]; absolute tolerance is
        tol/100.
    sample_spacing : spacing of the stored uniform samples.
    blowup_threshold : w level that terminates the run as BlowUp.

    Returns
    -------
    Trajectory with termination ReachedEnd, BlowUp (threshold crossed,
    trajectory truncated at the crossing) or NonPositive (w hit zero;
    terminal sample clamped to the crossing).

    Raises
    ------
    IntegrationUnderflow
        if the controller collapses the step: the outcome is then
        undetermined and never silently truncated.
    """
    if not TOL_MIN <= tol <= TOL_MAX:
        raise ValueError(f"tol={tol!r} outside [{TOL_MIN}, {TOL_MAX}]")
    if t0 == t1:
        raise ValueError("need t0 != t1")
    if not initial.finite:
        raise ValueError("initial state must be finite")
    if initial.w0 < 0.0:
        raise NonPositiveState(f"initial w={initial.w0!r} < 0")
    if sample_spacing <= 0.0:
        raise ValueError("sample_spacing must be positive")

    rtol, atol = tol, tol * 1e-2
    sgn = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)

    y = tuple(initial)
    t = t0
    f = _rhs(y, coeffs, p)
    h = _initial_step(y, f, span, rtol, atol)
    err_prev = 1.0

    segments: list[tuple] = []
    termination = REACHED_END

    while sgn * (t1 - t) > 0.0:
        h = min(h, abs(t1 - t))
        if h < 1e-13 * max(1.0, abs(t)):
            raise IntegrationUnderflow(
                f"step size underflow at t={t:.6g}; outcome undetermined"
            )
        hs = sgn * h
        k = [f]
        for i in range(1, 6):
            yi = tuple(
                y[j] + hs * sum(_A[i][m] * k[m][j] for m in range(i)) for j in range(4)
            )
            k.append(_rhs(yi, coeffs, p))
        y_new = tuple(y[j] + hs * sum(_B5[m] * k[m][j] for m in range(6)) for j in range(4))
        f_new = _rhs(y_new, coeffs, p)
        k.append(f_new)
        err = tuple(hs * sum(_E[m] * k[m][j] for m in range(7)) for j in range(4))

        if not all(map(math.isfinite, y_new)):
            h *= 0.25
            continue
        norm = _err_norm(err, y, y_new, rtol, atol)
        if norm > 1.0:
            h *= max(_MIN_FACTOR, _SAFETY * norm**-0.2)
            continue

        seg = (t, t + hs, OdeState(*y), OdeState(*y_new), OdeState(*f), OdeState(*f_new))
        segments.append(seg)
        t, y, f = t + hs, y_new, f_new

        if y[0] > blowup_threshold:
            tc, yc = _bisect_crossing(seg, blowup_threshold)
            t, y = tc, tuple(yc)
            termination = BLOW_UP
            break
        if y[0] < 0.0:
            tc, yc = _bisect_crossing(seg, 0.0)
            w0c = max(yc.w0, 0.0)
            t, y = tc, (w0c, yc.w1, yc.w2, yc.w3)
            termination = NON_POSITIVE
            break

        if norm == 0.0:
            factor = _MAX_FACTOR
        else:
            factor = _SAFETY * norm**-_PI_ALPHA * err_prev**_PI_BETA
            factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
            err_prev = norm
        h *= factor

    # Uniform samples from the dense segments, terminal point included.
    times = [t0]
    states = [OdeState(*initial)]
    if segments:
        traj_stub = Trajectory(
            times=(t0, t),
            states=(OdeState(*initial), OdeState(*y)),
            tol=tol,
            termination=termination,
            segments=tuple(segments),
        )
        n_full = int(abs(t - t0) / sample_spacing)
        for kk in range(1, n_full + 1):
            tk = t0 + sgn * kk * sample_spacing
            times.append(tk)
            states.append(traj_stub.sample(tk))
        if times[-1] != t:
            times.append(t)
            states.append(OdeState(*y))
    return Trajectory(
        times=tuple(times),
        states=tuple(states),
        tol=tol,
        termination=termination,
        segments=tuple(segments),
    )


@dataclass(frozen=True)
class LimitClass:
    """Outcome of backward classification against the two equilibria."""

    tag: str
    terminal_value: float
    window_variation: float


def classify_limit(
    traj: Trajectory,
    coeffs: CoefficientSet,
    p: float,
    margin: float = DEFAULT_MARGIN,
    window: float = DEFAULT_WINDOW,
) -> LimitClass:
    """Classify a backward trajectory as zero / equilibrium / blow-up.

    Early terminations decide immediately: a threshold exit is BlowUp and
    a zero crossing is ConvergesToZero (a nonnegative solution touching
    zero has left the basin of the positive equilibrium for good, which is
    the removable branch).  Otherwise the final `window` time units must
    sit inside the margin-tube of one equilibrium, with the variation over
    the window also below margin for the equilibrium class.
    """
    if margin <= 0.0 or window <= 0.0:
        raise ValueError("margin and window must be positive")
    w_end = traj.states[-1].w0
    span_len = abs(traj.t_end - traj.t_start)
    wvals_window = [
        s.w0 for tt, s in zip(traj.times, traj.states) if abs(tt - traj.t_end) <= window
    ]
    variation = max(wvals_window) - min(wvals_window) if wvals_window else 0.0

    if traj.termination == BLOW_UP:
        return LimitClass(tag=BLOW_UP, terminal_value=w_end, window_variation=variation)
    if traj.termination == NON_POSITIVE:
        return LimitClass(tag=CONVERGES_TO_ZERO, terminal_value=w_end, window_variation=variation)

    if span_len < 2.0 * window:
        raise ValueError(
            f"trajectory spans {span_len:.3g} time units, need at least {2.0 * window:.3g}"
        )
    if all(w < margin for w in wvals_window):
        return LimitClass(tag=CONVERGES_TO_ZERO, terminal_value=w_end, window_variation=variation)
    if coeffs.a0 > 0.0:
        wstar = fixed_points(coeffs, p)[1]
        if variation < margin and all(abs(w - wstar) < margin for w in wvals_window):
            return LimitClass(
                tag=CONVERGES_TO_FIXED_POINT, terminal_value=w_end, window_variation=variation
            )
    return LimitClass(tag=UNDETERMINED, terminal_value=w_end, window_variation=variation)
