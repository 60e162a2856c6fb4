"""Physical parameters and the derived scalar scales of the radial problem.

Natural units (hbar = c = 1) are used throughout.  The rotating-frame
Hamiltonian is never represented as an operator; only the scalar
combinations that enter the scaled radial equation are computed here:

    omega   = 2 M lambda / m                 cyclotron frequency
    delta^2 = m^2 omega^2 / 4 + m^2 Omega omega
    Theta   = 2 m E + 2 m Omega l + m omega l
    Lambda  = Theta / delta
    xi      = 2 m theta / sqrt(delta)         Coulomb-like coupling
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import InvalidParameters, NonPositiveDelta, NonPositiveRadicand


@dataclass(frozen=True)
class PhysicalParams:
    """Experiment knobs.

    ``lambda_`` is the charge-density parameter; it may be left as ``None``
    when the cyclotron frequency is supplied directly.
    """

    m: float = 1.0
    M_quad: float = 1.0
    lambda_: float | None = None
    Omega: float = 0.0
    theta_pot: float = 0.0

    def __post_init__(self):
        values = [self.m, self.M_quad, self.Omega, self.theta_pot]
        if self.lambda_ is not None:
            values.append(self.lambda_)
        if not all(math.isfinite(v) for v in values):
            raise InvalidParameters(f"non-finite parameter in {self!r}")
        if self.m <= 0:
            raise InvalidParameters(f"mass must be positive, got {self.m}")
        if self.M_quad <= 0:
            raise InvalidParameters(f"quadrupole moment must be positive, got {self.M_quad}")


@dataclass(frozen=True)
class DerivedScales:
    omega: float
    delta: float
    Lambda: float
    xi: float


def cyclotron_frequency(p: PhysicalParams) -> float:
    if p.lambda_ is None:
        raise InvalidParameters("lambda is required to derive the cyclotron frequency")
    return 2.0 * p.M_quad * p.lambda_ / p.m


def effective_field(p: PhysicalParams) -> float:
    """z-component of the effective uniform field, lambda * M."""
    if p.lambda_ is None:
        raise InvalidParameters("lambda is required for the effective field")
    return p.lambda_ * p.M_quad


def resolve_omega(p: PhysicalParams, omega: float | None = None) -> float:
    """Pick the cyclotron frequency: a direct value wins over (M, lambda)."""
    if omega is None:
        return cyclotron_frequency(p)
    if not math.isfinite(omega):
        raise InvalidParameters(f"non-finite omega {omega}")
    if p.lambda_ is not None:
        derived = cyclotron_frequency(p)
        warnings.warn(
            f"omega={omega} given directly; ignoring omega={derived} derived from M and lambda",
            stacklevel=2,
        )
    return float(omega)


def delta_from_omega(p: PhysicalParams, omega: float) -> float:
    """Positive root of delta^2 = m^2 omega^2/4 + m^2 Omega omega.

    Raises NonPositiveRadicand inside the closed band between 0 and
    -4 Omega, where the radial solution cannot decay.
    """
    # omega * (omega/4 + Omega) avoids squaring large omega twice
    radicand = p.m * p.m * omega * (0.25 * omega + p.Omega)
    if not radicand > 0:
        raise NonPositiveRadicand(
            f"m^2 omega^2/4 + m^2 Omega omega = {radicand} <= 0 "
            f"(omega={omega}, Omega={p.Omega})"
        )
    return math.sqrt(radicand)


def theta_capital(p: PhysicalParams, E: float, l: int, omega: float) -> float:
    return 2.0 * p.m * E + 2.0 * p.m * p.Omega * l + p.m * omega * l


def xi_coupling(p: PhysicalParams, delta: float) -> float:
    if not delta > 0:
        raise NonPositiveDelta(f"delta must be positive, got {delta}")
    return 2.0 * p.m * p.theta_pot / math.sqrt(delta)


def derived_scales(p: PhysicalParams, E: float, l: int, omega: float) -> DerivedScales:
    delta = delta_from_omega(p, omega)
    return DerivedScales(
        omega=omega,
        delta=delta,
        Lambda=theta_capital(p, E, l, omega) / delta,
        xi=xi_coupling(p, delta),
    )
