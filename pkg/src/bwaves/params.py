"""Maps from physical/modeling parameters to the four dispersion coefficients.

The long-wave system carries coefficients (a, b, c, d) derived from the
velocity sampling height theta, two free modeling parameters, and the Bond
number.  The solver itself only handles the focusing corner a < 0, c < 0 with
b = d = 0; everything else is reported, not raised, so parameter sweeps can
log and skip.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ModelParams:
    """Physical/modeling inputs of the coefficient map."""

    theta: float          # dimensionless sampling height in [0, 1]
    lambda_model: float   # free modeling parameter
    mu_model: float       # free modeling parameter
    tau_bond: float       # Bond number, >= 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if self.tau_bond < 0.0:
            raise ValueError(f"tau_bond must be >= 0, got {self.tau_bond}")


@dataclass(frozen=True)
class Coefficients:
    a: float
    b: float
    c: float
    d: float


@dataclass(frozen=True)
class RegimeReport:
    """Outcome of the solver-regime gate; rejection is data, not a fault."""

    accepted: bool
    violations: tuple[str, ...]

    def __str__(self) -> str:
        return "accepted" if self.accepted else "rejected: " + ", ".join(self.violations)


def abcd_from_model(p: ModelParams) -> Coefficients:
    """Coefficient map; the Bond number enters as a surface-tension correction to c."""
    half_a = 0.5 * (p.theta**2 - 1.0 / 3.0)
    half_c = 0.5 * (1.0 - p.theta**2)
    return Coefficients(
        a=half_a * p.lambda_model,
        b=half_a * (1.0 - p.lambda_model),
        c=half_c * p.mu_model - p.tau_bond,
        d=half_c * (1.0 - p.mu_model),
    )


def validate_solver_regime(co: Coefficients) -> RegimeReport:
    """Accept exactly the regime a < 0, c < 0, b = 0, d = 0."""
    violations = []
    if not co.a < 0.0:
        violations.append("a>=0")
    if not co.c < 0.0:
        violations.append("c>=0")
    if co.b != 0.0:
        violations.append("b!=0")
    if co.d != 0.0:
        violations.append("d!=0")
    return RegimeReport(accepted=not violations, violations=tuple(violations))
