"""The Emden-Fowler change of variables between physical radial jets of u
and log-variable jets of w, plus the radial Laplacian in w-coordinates.

With t = ln r and w(t) = e^{Bt} u(e^t), each t-derivative of w is a fixed
lower-triangular combination of (u, r u', r^2 u'', r^3 u''') scaled by r^B,
and conversely.  Both direction matrices are hard-coded closed forms, so
the round trip is exact up to floating-point rounding.  Jets stop at order
three: the fourth derivative is supplied by the differential equation and
never transported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .params import ProblemParams


@dataclass(frozen=True)
class RadialJet:
    """u and its first three radial derivatives at a single radius r > 0."""

    r: float
    u0: float
    u1: float
    u2: float
    u3: float

    def __post_init__(self) -> None:
        if not self.r > 0.0:
            raise ValueError(f"radius must be positive, got r={self.r!r}")


class OdeState(NamedTuple):
    """w and its first three t-derivatives at one log-time."""

    w0: float
    w1: float
    w2: float
    w3: float

    @property
    def finite(self) -> bool:
        return all(map(math.isfinite, self))


def to_log(jet: RadialJet, B: float) -> tuple[float, OdeState]:
    """Map a physical jet at radius r to (t, w-jet) with t = ln r.

    Writing D = r d/dr, the forward map is w_k = r^B (B + D)^k u, expanded
    below into radial derivatives.
    """
    r = jet.r
    if not r > 0.0:
        raise ValueError(f"radius must be positive, got r={r!r}")
    t = math.log(r)
    rB = r**B
    ru1 = r * jet.u1
    r2u2 = r * r * jet.u2
    r3u3 = r * r * r * jet.u3
    w0 = rB * jet.u0
    w1 = rB * (B * jet.u0 + ru1)
    w2 = rB * (B * B * jet.u0 + (2.0 * B + 1.0) * ru1 + r2u2)
    w3 = rB * (
        B**3 * jet.u0
        + (3.0 * B * B + 3.0 * B + 1.0) * ru1
        + 3.0 * (B + 1.0) * r2u2
        + r3u3
    )
    return t, OdeState(w0, w1, w2, w3)


def from_log(t: float, state: OdeState, B: float) -> RadialJet:
    """Invert to_log: recover the u-jet at r = e^t from a w-jet."""
    w0, w1, w2, w3 = state
    r = math.exp(t)
    rmB = r**-B
    u0 = rmB * w0
    u1 = rmB / r * (w1 - B * w0)
    u2 = rmB / (r * r) * (w2 - (2.0 * B + 1.0) * w1 + B * (B + 1.0) * w0)
    u3 = rmB / (r * r * r) * (
        w3
        - 3.0 * (B + 1.0) * w2
        + (3.0 * B * B + 6.0 * B + 2.0) * w1
        - B * (B + 1.0) * (B + 2.0) * w0
    )
    return RadialJet(r=r, u0=u0, u1=u1, u2=u2, u3=u3)


def neg_laplacian_radial(t: float, state: OdeState, params: ProblemParams) -> float:
    """-Delta u at r = e^t, straight from the w-jet.

    Substituting the inverse transform into u'' + (n-1)u'/r gives

        -Delta u = r^{-B-2} [ -w2 - (n-2-2B) w1 + B(n-2-B) w0 ],

    positivity of which is the super-polyharmonicity property for m = 2.
    """
    if params.m != 2:
        raise ValueError(f"radial -Delta in w-coordinates assumes m=2, got m={params.m}")
    n = float(params.n)
    B = params.B
    w0, w1, w2, _ = state
    bracket = -w2 - (n - 2.0 - 2.0 * B) * w1 + B * (n - 2.0 - B) * w0
    return math.exp(-(B + 2.0) * t) * bracket
