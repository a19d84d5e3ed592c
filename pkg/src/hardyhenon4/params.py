"""Problem parameters, critical exponents, and the coefficient algebra of the
transformed radial equation.

Everything here is closed-form polynomial/rational algebra in (n, alpha, p).
The Emden-Fowler substitution w(t) = r^B u(r), t = ln r, with
B = (4+alpha)/(p-1), turns the radial equation Delta^2 u = r^alpha u^p into

    w'''' + A3 w''' + A2 w'' + A1 w' + A0 w = w^p,

and the signs of (A0, A1, A3) split the exponent range into the regimes
below/at/above the Hardy-Sobolev critical exponent.
"""

from __future__ import annotations

from dataclasses import dataclass

# Regime tags for RegimeReport / CoefficientSet.
SUBCRITICAL = "Subcritical"
CRITICAL = "Critical"
SUPERCRITICAL = "Supercritical"
OUT_OF_RANGE = "OutOfRange"

# p counts as critical when within this absolute distance of the
# Hardy-Sobolev exponent.  Chosen over testing a1, a3 for smallness to
# avoid circularity with the sign checks.
CRITICALITY_TOL = 1e-12


@dataclass(frozen=True)
class ProblemParams:
    """The triple (n, alpha, p) plus the polyharmonic order m.

    m is fixed to 2 for all dynamics and coefficient work; exponent
    formulas are the only consumers that accept other values.
    """

    n: int
    alpha: float
    p: float
    m: int = 2

    def __post_init__(self) -> None:
        if int(self.n) != self.n:
            raise ValueError(f"dimension n must be an integer, got {self.n!r}")
        if self.m < 1 or int(self.m) != self.m:
            raise ValueError(f"polyharmonic order m must be a positive integer, got {self.m!r}")
        if self.n <= 2 * self.m:
            raise ValueError(f"need n > 2m, got n={self.n}, m={self.m}")
        if not self.alpha > -2.0 * self.m:
            raise ValueError(f"need alpha > {-2.0 * self.m}, got alpha={self.alpha}")
        if not self.p > 1.0:
            raise ValueError(f"need p > 1, got p={self.p}")

    @property
    def B(self) -> float:
        return (4.0 + self.alpha) / (self.p - 1.0)


@dataclass(frozen=True)
class ExponentSet:
    """The four critical exponents attached to (n, m, alpha)."""

    serrin: float          # (n + alpha) / (n - 2m)
    hardy_sobolev: float   # (n + 2m + 2 alpha) / (n - 2m)
    sobolev: float         # (n + 2m) / (n - 2m)
    upper_dichotomy: float     # (n + 2m + alpha) / (n - 2m)


@dataclass(frozen=True)
class CoefficientSet:
    """B and the coefficients A0..A4 of the transformed equation.

    a4 multiplies the angular Laplacian and is inert in the radial
    reduction; it is carried because the coefficient list is a unit.
    """

    B: float
    a0: float
    a1: float
    a2: float
    a3: float
    a4: float
    regime: str


@dataclass(frozen=True)
class RegimeReport:
    regime: str
    signs: tuple[str, str, str]  # sign tags of (a0, a1, a3)


def critical_exponents(params: ProblemParams) -> ExponentSet:
    """Evaluate the four exponents by their defining rational formulas."""
    n, m, alpha = params.n, params.m, params.alpha
    d = n - 2 * m
    return ExponentSet(
        serrin=(n + alpha) / d,
        hardy_sobolev=(n + 2 * m + 2 * alpha) / d,
        sobolev=(n + 2 * m) / d,
        upper_dichotomy=(n + 2 * m + alpha) / d,
    )


def _require_m2(params: ProblemParams, what: str) -> None:
    if params.m != 2:
        raise ValueError(f"{what} is derived for m=2 only, got m={params.m}")


def _regime_tag(params: ProblemParams) -> str:
    exps = critical_exponents(params)
    if params.p <= exps.serrin:
        return OUT_OF_RANGE
    if abs(params.p - exps.hardy_sobolev) < CRITICALITY_TOL:
        return CRITICAL
    if params.p < exps.hardy_sobolev:
        return SUBCRITICAL
    return SUPERCRITICAL


def coefficients(params: ProblemParams) -> CoefficientSet:
    """B and A0..A4, evaluated exactly as the displayed polynomials in B."""
    _require_m2(params, "the coefficient list")
    n = float(params.n)
    B = params.B
    q = n * n - 10.0 * n + 20.0
    a0 = B**4 - 2.0 * (n - 4.0) * B**3 + q * B**2 + 2.0 * (n - 2.0) * (n - 4.0) * B
    a1 = -4.0 * B**3 + 6.0 * (n - 4.0) * B**2 - 2.0 * q * B - 2.0 * (n - 2.0) * (n - 4.0)
    a2 = 6.0 * B**2 - 6.0 * (n - 4.0) * B + q
    a3 = -4.0 * B + 2.0 * n - 8.0
    a4 = 2.0 * B**2 - 2.0 * (n - 4.0) * B - 2.0 * (n - 4.0)
    return CoefficientSet(B=B, a0=a0, a1=a1, a2=a2, a3=a3, a4=a4, regime=_regime_tag(params))


def a0_factored(params: ProblemParams) -> float:
    """A0 in product form B(B+2)(n-2-B)(n-4-B); cross-check for the quartic."""
    _require_m2(params, "the A0 factorization")
    n = float(params.n)
    B = params.B
    return B * (B + 2.0) * (n - 2.0 - B) * (n - 4.0 - B)


def _sign_tag(x: float, scale: float) -> str:
    if abs(x) <= 1e-12 * scale:
        return "0"
    return "+" if x > 0.0 else "-"


def classify_regime(params: ProblemParams) -> RegimeReport:
    """Place p relative to the Serrin / Hardy-Sobolev exponents.

    OutOfRange means p at or below the Serrin exponent, where the
    dichotomy machinery has no positive equilibrium; the computed signs
    are still reported.  The upper admissibility cap used by sweeps is
    a separate check (see in_dichotomy_window), since the supercritical
    regime is open-ended.
    """
    c = coefficients(params)
    scale = 1.0 + abs(c.a2)
    signs = (_sign_tag(c.a0, scale), _sign_tag(c.a1, scale), _sign_tag(c.a3, scale))
    return RegimeReport(regime=c.regime, signs=signs)


def in_dichotomy_window(params: ProblemParams) -> tuple[bool, str]:
    """Check the hypothesis window for the removable/singular dichotomy.

    Requires -2m < alpha <= 0, serrin < p < (n+2m+alpha)/(n-2m) and p not
    critical.  Returns (ok, reason); reason spells out the violated bound
    with its numeric endpoints so callers can surface it verbatim.
    """
    exps = critical_exponents(params)
    if params.alpha > 0.0:
        return False, (
            f"alpha={params.alpha:g} is positive; the dichotomy window needs "
            f"{-2.0 * params.m:g} < alpha <= 0"
        )
    if not exps.serrin < params.p < exps.upper_dichotomy:
        return False, (
            f"p={params.p:g} outside the admissible window "
            f"({exps.serrin:g}, {exps.upper_dichotomy:g}) for n={params.n}, "
            f"alpha={params.alpha:g}"
        )
    if abs(params.p - exps.hardy_sobolev) < CRITICALITY_TOL:
        return False, (
            f"p={params.p:g} sits on the critical exponent "
            f"{exps.hardy_sobolev:g}, excluded from the dichotomy window"
        )
    return True, ""
