"""The monotone energy of the log-variable flow and its audits.

For radial w the energy per unit sphere measure is

    e(y) = w3 w1 - w2^2/2 + a3 w2 w1 + a2 w1^2/2 + a0 w0^2/2 - w0^{p+1}/(p+1),

and differentiating along the flow (substituting w4 from the equation)
collapses everything except

    de/dt = a3 w2^2 - a1 w1^2,

so e decreases in t below the critical exponent (a3 < 0, a1 > 0), is
conserved exactly at it (a1 = a3 = 0), and increases above it.  Note the
-w2^2/2 term: it is forced by the rate law, since any first integral must
have its w3-dependence enter through w3 w1 - w2^2/2 for the w3 w2 and
w1 w2 cross terms to cancel.  E multiplies e by |S^{n-1}|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .params import CoefficientSet, SUPERCRITICAL
from .transform import OdeState, RadialJet, from_log, to_log
from .dynamics import Trajectory, _wpow

_FD_STEP = 1e-3
# Per-increment floating-point allowance when auditing monotonicity: a few
# ulps of the energy magnitude, subtracted before calling an increment a
# violation.
_ULP_ALLOWANCE = 4.0 * math.ulp(1.0)


def sphere_measure(n: int) -> float:
    """|S^{n-1}| = 2 pi^{n/2} / Gamma(n/2), by the closed form."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True)
class EnergyValue:
    value: float
    sphere_measure: float


@dataclass(frozen=True)
class MonotonicityAudit:
    """Worst monotonicity violation and worst rate-law mismatch.

    max_violation is the largest increment of E in the direction the
    regime forbids (increase below/at critical, decrease above), after
    subtracting a few-ulp floating-point allowance per increment.
    rate_mismatch is max |dE/dt_fd - rate| / (1 + |rate|) with centered
    differences at step 1e-3 on dense resamples.
    """

    max_violation: float
    rate_mismatch: float

    def __post_init__(self) -> None:
        if self.max_violation < 0.0 or self.rate_mismatch < 0.0:
            raise ValueError("audit fields must be nonnegative")


def energy(state: OdeState, coeffs: CoefficientSet, p: float, n: int) -> EnergyValue:
    """E at one state; angular contributions vanish in the radial slice."""
    w0, w1, w2, w3 = state
    bracket = (
        w3 * w1
        - 0.5 * w2 * w2
        + coeffs.a3 * w2 * w1
        + 0.5 * coeffs.a2 * w1 * w1
        + 0.5 * coeffs.a0 * w0 * w0
        - _wpow(w0, p + 1.0) / (p + 1.0)
    )
    measure = sphere_measure(n)
    return EnergyValue(value=measure * bracket, sphere_measure=measure)


def energy_rate(state: OdeState, coeffs: CoefficientSet, n: int) -> float:
    """Exact dE/dt along the flow: |S^{n-1}| (a3 w2^2 - a1 w1^2)."""
    _, w1, w2, _ = state
    return sphere_measure(n) * (coeffs.a3 * w2 * w2 - coeffs.a1 * w1 * w1)


def _audit_times(traj: Trajectory) -> list[float]:
    # Uniform resample of the covered span through the dense output; the
    # stored spacing is reused so audits see the intended resolution.
    if len(traj.times) < 2:
        raise ValueError("trajectory too short to audit")
    spacing = abs(traj.times[1] - traj.times[0])
    sgn = 1.0 if traj.t_end > traj.t_start else -1.0
    k = int(traj.span / spacing)
    return [traj.t_start + sgn * i * spacing for i in range(k + 1)]


def audit_monotonicity(
    traj: Trajectory, coeffs: CoefficientSet, p: float, n: int
) -> MonotonicityAudit:
    """Check the monotone direction and the rate law along one trajectory."""
    ts = _audit_times(traj)
    if len(ts) < 100:
        raise ValueError(f"need at least 100 samples to audit, got {len(ts)}")
    ts = sorted(ts)  # the law is stated for increasing t
    evals = [energy(traj.sample(t), coeffs, p, n).value for t in ts]

    forbidden_decrease = coeffs.regime == SUPERCRITICAL
    max_violation = 0.0
    for ea, eb in zip(evals, evals[1:]):
        inc = -(eb - ea) if forbidden_decrease else (eb - ea)
        allowance = _ULP_ALLOWANCE * max(abs(ea), abs(eb), 1.0)
        max_violation = max(max_violation, inc - allowance)
    max_violation = max(0.0, max_violation)

    lo = min(traj.t_start, traj.t_end)
    hi = max(traj.t_start, traj.t_end)
    mismatch = 0.0
    for t in ts:
        if t - _FD_STEP < lo or t + _FD_STEP > hi:
            continue
        e_plus = energy(traj.sample(t + _FD_STEP), coeffs, p, n).value
        e_minus = energy(traj.sample(t - _FD_STEP), coeffs, p, n).value
        fd = (e_plus - e_minus) / (2.0 * _FD_STEP)
        rate = energy_rate(traj.sample(t), coeffs, n)
        mismatch = max(mismatch, abs(fd - rate) / (1.0 + abs(rate)))
    return MonotonicityAudit(max_violation=max_violation, rate_mismatch=mismatch)


def scaling_check(
    traj: Trajectory, lam: float, coeffs: CoefficientSet, p: float, n: int
) -> float:
    """Verify the scaling identity for u_lam(x) = lam^B u(lam x).

    In log variables the scaling is exactly time translation by ln(lam),
    so the check routes one side through physical space: the w-jet at
    t + ln(lam) is pulled back to a u-jet, rescaled by powers of lam, and
    pushed forward again before comparing energies.  The result is zero
    up to floating-point rounding of the transform chain.
    """
    if lam <= 0.0:
        raise ValueError(f"need lam > 0, got {lam!r}")
    if lam == 1.0:
        return 0.0
    s = math.log(lam)
    lo = min(traj.t_start, traj.t_end)
    hi = max(traj.t_start, traj.t_end)
    lo_olap = max(lo, lo - s)
    hi_olap = min(hi, hi - s)
    if hi_olap - lo_olap < 0.1:
        raise ValueError(
            f"overlap of [{lo:.3g}, {hi:.3g}] with its ln(lam)={s:.3g} shift is too short"
        )
    B = coeffs.B
    worst = 0.0
    k = 200
    for i in range(k + 1):
        t = lo_olap + (hi_olap - lo_olap) * i / k
        shifted = traj.sample(t + s)
        e_ref = energy(shifted, coeffs, p, n).value
        jet = from_log(t + s, shifted, B)
        scaled = RadialJet(
            r=jet.r / lam,
            u0=lam**B * jet.u0,
            u1=lam ** (B + 1.0) * jet.u1,
            u2=lam ** (B + 2.0) * jet.u2,
            u3=lam ** (B + 3.0) * jet.u3,
        )
        _, state = to_log(scaled, B)
        e_scaled = energy(state, coeffs, p, n).value
        worst = max(worst, abs(e_scaled - e_ref))
    return worst
