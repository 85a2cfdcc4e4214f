"""Physical constants used throughout the toolkit.

Internal units are km, kg, s, rad everywhere; degrees and metres only appear
at I/O boundaries.  ``g0`` is therefore stored in km/s^2 so that thrust [kN],
mass [kg] and exhaust velocity isp*g0 [km/s] compose without conversion
factors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

#: Julian year, used for the sun-synchronous nodal-drift condition.
SECONDS_PER_YEAR = 365.25 * 86400.0

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhysicalConstants:
    """Earth gravity model constants (WGS84/EGM96 defaults)."""

    mu: float = 398600.4418   # gravitational parameter [km^3/s^2]
    re: float = 6378.137      # mean equatorial radius [km]
    j2: float = 1.08263e-3    # second zonal harmonic [-]
    g0: float = 9.80665e-3    # standard gravity [km/s^2]

    def __post_init__(self) -> None:
        if self.mu <= 0.0 or self.re <= 0.0 or self.g0 <= 0.0:
            raise ValueError("mu, re and g0 must be positive")
        if self.j2 < 0.0:
            raise ValueError("j2 must be non-negative")


#: Default constants instance shared by every module.
EARTH = PhysicalConstants()


def wrap_angle(theta: float) -> float:
    """Normalize an angle to [0, 2*pi)."""
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    return theta if theta < TWO_PI else 0.0
