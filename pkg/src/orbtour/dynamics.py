"""Dynamics right-hand sides: variational equations, LVLH frame, thrust and
oblateness models.

All rates are expressed in the spacecraft LVLH frame (radial r, along-track
theta, cross-track phi).  Scalar helpers operating on plain floats are the
hot path for sequential propagation; batch variants operate on (N, ...)
arrays for vectorized finite differencing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import EARTH, TWO_PI, PhysicalConstants, wrap_angle
from .elements import KeplerianState, SpacecraftState, kep_to_mee, mee_to_kep
from .errors import SingularStateError


@dataclass(frozen=True)
class PerturbAccel:
    """Perturbing acceleration components in the LVLH frame [km/s^2]."""

    dr: float = 0.0
    dt: float = 0.0
    dn: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.dr, self.dt, self.dn])


# ---------------------------------------------------------------------------
# Gauss variational equations
# ---------------------------------------------------------------------------

def gve_rhs_scalar(p, f, g, h, k, L, ar, at, an, mu):
    """Element rates (dp, df, dg, dh, dk, dL) for one state, plain floats.

    Signs of the cross-track couplings follow the orientation stated in
    :mod:`orbtour.elements` (df carries -g*v/w*an, dg carries +f*v/w*an);
    the combination is validated against a Cartesian finite-difference
    oracle in the tests.
    """
    cosL = math.cos(L)
    sinL = math.sin(L)
    w = 1.0 + f * cosL + g * sinL
    if w <= 0.0:
        raise SingularStateError(f"w = {w} <= 0: radius diverges")
    s2 = 1.0 + h * h + k * k
    v = h * sinL - k * cosL
    sqpm = math.sqrt(p / mu)

    dp = 2.0 * p / w * sqpm * at
    df = sqpm * (ar * sinL + ((w + 1.0) * cosL + f) / w * at - g * v / w * an)
    dg = sqpm * (-ar * cosL + ((w + 1.0) * sinL + g) / w * at + f * v / w * an)
    dh = sqpm * s2 / (2.0 * w) * cosL * an
    dk = sqpm * s2 / (2.0 * w) * sinL * an
    dL = math.sqrt(mu * p) * (w / p) ** 2 + sqpm * v / w * an
    return dp, df, dg, dh, dk, dL


def gve_rates(state: SpacecraftState, accel: PerturbAccel, consts: PhysicalConstants = EARTH) -> np.ndarray:
    """Time derivatives of the six equinoctial elements under ``accel``."""
    if state.mee.retrograde_factor != 1:
        raise SingularStateError("variational equations require retrograde factor +1")
    m = state.mee
    return np.array(gve_rhs_scalar(m.p, m.f, m.g, m.h, m.k, m.L,
                                   accel.dr, accel.dt, accel.dn, consts.mu))


def gve_rhs_batch(mee: np.ndarray, accel: np.ndarray, mu: float) -> np.ndarray:
    """Vectorized element rates: ``mee`` (N, 6), ``accel`` (N, 3) -> (N, 6)."""
    p, f, g, h, k, L = (mee[:, j] for j in range(6))
    ar, at, an = accel[:, 0], accel[:, 1], accel[:, 2]
    cosL, sinL = np.cos(L), np.sin(L)
    w = 1.0 + f * cosL + g * sinL
    if np.any(w <= 0.0):
        raise SingularStateError("w <= 0 in batch evaluation")
    s2 = 1.0 + h * h + k * k
    v = h * sinL - k * cosL
    sqpm = np.sqrt(p / mu)

    out = np.empty_like(mee)
    out[:, 0] = 2.0 * p / w * sqpm * at
    out[:, 1] = sqpm * (ar * sinL + ((w + 1.0) * cosL + f) / w * at - g * v / w * an)
    out[:, 2] = sqpm * (-ar * cosL + ((w + 1.0) * sinL + g) / w * at + f * v / w * an)
    out[:, 3] = sqpm * s2 / (2.0 * w) * cosL * an
    out[:, 4] = sqpm * s2 / (2.0 * w) * sinL * an
    out[:, 5] = np.sqrt(mu * p) * (w / p) ** 2 + sqpm * v / w * an
    return out


# ---------------------------------------------------------------------------
# LVLH frame and thrust
# ---------------------------------------------------------------------------

def lvlh_basis(position: np.ndarray, velocity: np.ndarray) -> np.ndarray:
    """Rotation matrix whose columns are the LVLH unit vectors
    (e_r, e_theta, e_phi) expressed in ECI.

    e_r is the radial direction, e_phi the orbit normal r x v, and
    e_theta = e_phi x e_r completes the right-handed triad.
    """
    r = np.asarray(position, dtype=float)
    v = np.asarray(velocity, dtype=float)
    rn = np.linalg.norm(r)
    if rn == 0.0:
        raise ValueError("position vector must be nonzero")
    e_r = r / rn
    hvec = np.cross(r, v)
    hn = np.linalg.norm(hvec)
    if hn < 1e-12 * rn * max(np.linalg.norm(v), 1e-300):
        raise ValueError("position and velocity are parallel or velocity is zero")
    e_phi = hvec / hn
    e_theta = np.cross(e_phi, e_r)
    return np.column_stack([e_r, e_theta, e_phi])


def thrust_and_mass_rates(thrust_kn: float, direction: np.ndarray,
                          state: SpacecraftState, isp: float,
                          consts: PhysicalConstants = EARTH) -> tuple[PerturbAccel, float]:
    """Thrust acceleration (LVLH) and the mass-flow rate it implies.

    ``thrust_kn`` is the magnitude [kN]; ``direction`` the LVLH unit vector.
    The mass rate is returned negative: propellant is consumed.
    """
    if thrust_kn < 0.0:
        raise ValueError("thrust must be non-negative")
    if state.mass <= 0.0:
        raise ValueError("mass must be positive")
    d = np.asarray(direction, dtype=float)
    if thrust_kn > 0.0 and abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise ValueError("thrust direction must be a unit vector")
    acc = thrust_kn / state.mass * d
    dmdt = -thrust_kn / (isp * consts.g0)
    return PerturbAccel(acc[0], acc[1], acc[2]), dmdt


# ---------------------------------------------------------------------------
# Oblateness models
# ---------------------------------------------------------------------------

def j2_accel_scalar(p, f, g, h, k, L, mu, j2, re):
    """Instantaneous J2 acceleration components (ar, at, an), plain floats."""
    cosL = math.cos(L)
    sinL = math.sin(L)
    w = 1.0 + f * cosL + g * sinL
    r = p / w
    s2 = 1.0 + h * h + k * k
    v = h * sinL - k * cosL
    coef = mu * j2 * re * re / r**4
    ar = -1.5 * coef * (1.0 - 12.0 * v * v / (s2 * s2))
    at = -12.0 * coef * v * (h * cosL + k * sinL) / (s2 * s2)
    an = -6.0 * coef * v * (1.0 - h * h - k * k) / (s2 * s2)
    return ar, at, an


def j2_accel_lvlh(state: SpacecraftState, consts: PhysicalConstants = EARTH) -> PerturbAccel:
    """Instantaneous oblateness acceleration at the spacecraft, LVLH frame."""
    if state.mee.retrograde_factor != 1:
        raise SingularStateError("J2 model requires retrograde factor +1")
    m = state.mee
    r = m.p / (1.0 + m.f * math.cos(m.L) + m.g * math.sin(m.L))
    if r <= consts.re:
        raise ValueError(f"radius {r:.1f} km is below the surface")
    return PerturbAccel(*j2_accel_scalar(m.p, m.f, m.g, m.h, m.k, m.L,
                                         consts.mu, consts.j2, consts.re))


def j2_accel_batch(mee: np.ndarray, mu: float, j2: float, re: float) -> np.ndarray:
    """Vectorized J2 acceleration: ``mee`` (N, 6) -> (N, 3)."""
    p, f, g, h, k, L = (mee[:, j] for j in range(6))
    cosL, sinL = np.cos(L), np.sin(L)
    w = 1.0 + f * cosL + g * sinL
    r = p / w
    s2 = 1.0 + h * h + k * k
    v = h * sinL - k * cosL
    coef = mu * j2 * re * re / r**4
    out = np.empty((mee.shape[0], 3))
    out[:, 0] = -1.5 * coef * (1.0 - 12.0 * v * v / (s2 * s2))
    out[:, 1] = -12.0 * coef * v * (h * cosL + k * sinL) / (s2 * s2)
    out[:, 2] = -6.0 * coef * v * (1.0 - h * h - k * k) / (s2 * s2)
    return out


def j2_secular_rates(a: float, e: float, i: float,
                     consts: PhysicalConstants = EARTH) -> tuple[float, float]:
    """Secular node and perigee drift rates (draan/dt, dargp/dt) [rad/s].

    The (re/p) ratio enters squared and the perigee rate is positive below
    the critical inclination: some published variants carry (re/p) to the
    first power and/or flip the perigee sign, but only the form used here
    reproduces the sun-synchronous geometry (~97.4 deg at 500 km altitude)
    and the averaged behaviour of the instantaneous J2 model, which the
    tests assert.
    """
    p = a * (1.0 - e**2)
    if p <= 0.0:
        raise ValueError("a(1 - e^2) must be positive")
    n = math.sqrt(consts.mu / a**3)
    ratio2 = (consts.re / p) ** 2
    cos_i = math.cos(i)
    draan = -1.5 * consts.j2 * ratio2 * n * cos_i
    dargp = 0.75 * consts.j2 * ratio2 * n * (5.0 * cos_i**2 - 1.0)
    return draan, dargp


# ---------------------------------------------------------------------------
# Coast propagation and orbit scalars
# ---------------------------------------------------------------------------

def solve_kepler(mean_anom: float, e: float, tol: float = 1e-14) -> float:
    """Eccentric anomaly from mean anomaly (Newton iteration)."""
    E = mean_anom if e < 0.8 else math.pi
    for _ in range(64):
        delta = (E - e * math.sin(E) - mean_anom) / (1.0 - e * math.cos(E))
        E -= delta
        if abs(delta) < tol:
            break
    return E


def true_to_mean_anomaly(ta: float, e: float) -> float:
    E = 2.0 * math.atan2(math.sqrt(1.0 - e) * math.sin(ta / 2.0),
                         math.sqrt(1.0 + e) * math.cos(ta / 2.0))
    return E - e * math.sin(E)


def mean_to_true_anomaly(M: float, e: float) -> float:
    E = solve_kepler(M, e)
    return 2.0 * math.atan2(math.sqrt(1.0 + e) * math.sin(E / 2.0),
                            math.sqrt(1.0 - e) * math.cos(E / 2.0))


def propagate_secular(state: SpacecraftState, dt: float,
                      consts: PhysicalConstants = EARTH) -> SpacecraftState:
    """Advance a coasting state by ``dt``: Keplerian mean motion on the
    anomaly plus secular J2 drift on node and perigee; a, e, i and mass are
    untouched."""
    if dt < 0.0:
        raise ValueError("dt must be non-negative")
    if dt == 0.0:
        return state
    kep = mee_to_kep(state.mee)
    draan, dargp = j2_secular_rates(kep.a, kep.e, kep.i, consts)
    n = math.sqrt(consts.mu / kep.a**3)
    M = true_to_mean_anomaly(kep.ta, kep.e) + n * dt
    new_kep = KeplerianState(
        a=kep.a, e=kep.e, i=kep.i,
        raan=wrap_angle(kep.raan + draan * dt),
        argp=wrap_angle(kep.argp + dargp * dt),
        ta=wrap_angle(mean_to_true_anomaly(math.fmod(M, TWO_PI), kep.e)),
    )
    mee = kep_to_mee(new_kep, state.mee.retrograde_factor)
    return SpacecraftState(mee=mee, mass=state.mass, epoch=state.epoch + dt)


def orbit_scalars(a: float, consts: PhysicalConstants = EARTH) -> tuple[float, float, float]:
    """Mean motion [rad/s], period [s] and circular speed [km/s] at SMA ``a``."""
    if a <= 0.0:
        raise ValueError("semi-major axis must be positive")
    n = math.sqrt(consts.mu / a**3)
    return n, TWO_PI / n, math.sqrt(consts.mu / a)


def mean_longitude_rate(a: float, e: float, i: float,
                        consts: PhysicalConstants = EARTH) -> float:
    """Mean rate of the true longitude (n plus secular node/perigee drift),
    used for phasing arithmetic on near-circular orbits."""
    n = math.sqrt(consts.mu / a**3)
    draan, dargp = j2_secular_rates(a, e, i, consts)
    return n + draan + dargp
