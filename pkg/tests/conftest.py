"""Shared fixtures and independent oracles for the test suite.

The Cartesian oracle here deliberately avoids the package's element
machinery: two-body + oblateness accelerations in inertial coordinates,
integrated directly, give an independent reference for the variational
equations and the LVLH force model.
"""
from __future__ import annotations

import math

import numpy as np
import pytest

from orbtour.constants import EARTH
from orbtour.elements import KeplerianState
from orbtour.scenario import (Bundle, MissionScenario, PayloadSpec,
                              ScenarioConfig, SpacecraftSpec, sample_scenario)


def cart_accel_j2(r: np.ndarray, consts=EARTH) -> np.ndarray:
    """Oblateness acceleration in inertial axes [km/s^2]."""
    x, y, z = r
    rn = np.linalg.norm(r)
    coef = -1.5 * consts.j2 * consts.mu * consts.re**2 / rn**5
    zr2 = (z / rn) ** 2
    return coef * np.array([x * (1 - 5 * zr2), y * (1 - 5 * zr2), z * (3 - 5 * zr2)])


def cart_rhs(state: np.ndarray, consts=EARTH, j2: bool = True) -> np.ndarray:
    r, v = state[:3], state[3:]
    rn = np.linalg.norm(r)
    a = -consts.mu * r / rn**3
    if j2:
        a = a + cart_accel_j2(r, consts)
    return np.concatenate([v, a])


def cart_rk4(state: np.ndarray, dt: float, nsteps: int, consts=EARTH,
             j2: bool = True) -> np.ndarray:
    for _ in range(nsteps):
        k1 = cart_rhs(state, consts, j2)
        k2 = cart_rhs(state + dt / 2 * k1, consts, j2)
        k3 = cart_rhs(state + dt / 2 * k2, consts, j2)
        k4 = cart_rhs(state + dt * k3, consts, j2)
        state = state + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return state


def cart_to_kep(r: np.ndarray, v: np.ndarray, consts=EARTH) -> KeplerianState:
    """Classical elements from an inertial state (independent path)."""
    rn = float(np.linalg.norm(r))
    hv = np.cross(r, v)
    hn = float(np.linalg.norm(hv))
    evec = np.cross(v, hv) / consts.mu - r / rn
    e = float(np.linalg.norm(evec))
    p = hn**2 / consts.mu
    i = math.acos(min(max(hv[2] / hn, -1.0), 1.0))
    nodev = np.cross([0.0, 0.0, 1.0], hv)
    nn = float(np.linalg.norm(nodev))
    raan = math.atan2(nodev[1], nodev[0]) if nn > 1e-12 else 0.0
    hhat = hv / hn
    if e > 1e-12:
        ehat = evec / e
        argp = math.atan2(float(np.dot(np.cross(nodev / nn, ehat), hhat)),
                          float(np.dot(nodev / nn, ehat)))
        ta = math.atan2(float(np.dot(np.cross(ehat, r / rn), hhat)),
                        float(np.dot(ehat, r / rn)))
    else:
        argp = 0.0
        ta = math.atan2(float(np.dot(np.cross(nodev / nn, r / rn), hhat)),
                        float(np.dot(nodev / nn, r / rn)))
    a = p / (1 - e**2)
    tau = 2 * math.pi
    return KeplerianState(a, e, i, raan % tau, argp % tau, ta % tau)


def random_kep(rng: np.random.Generator, e_max: float = 0.9) -> KeplerianState:
    return KeplerianState(
        a=float(rng.uniform(6600.0, 9500.0)),
        e=float(rng.uniform(0.0, e_max)),
        i=float(rng.uniform(0.02, math.pi - 0.02)),
        raan=float(rng.uniform(0.0, 2 * math.pi)),
        argp=float(rng.uniform(0.0, 2 * math.pi)),
        ta=float(rng.uniform(0.0, 2 * math.pi)),
    )


def tiny_mission(da0: float = 6.0, da1: float = -5.0, di_deg: float = 0.02,
                 seed: int = 0) -> MissionScenario:
    """Hand-built two-bundle mission with short transfers (fast to refine)."""
    ins = KeplerianState(EARTH.re + 500.0, 0.0, math.radians(97.4),
                         math.radians(158.0), 0.0, 0.0)
    t0 = KeplerianState(ins.a + da0, 0.0, ins.i + math.radians(di_deg),
                        math.radians(30.0), 0.0, 1.0)
    t1 = KeplerianState(ins.a + da1, 0.0, ins.i - math.radians(di_deg),
                        math.radians(200.0), 0.0, 2.0)
    bundles = (
        Bundle((PayloadSpec("cubesat", 6.0, t0), PayloadSpec("cubesat", 6.5, t0)), t0),
        Bundle((PayloadSpec("smallsat", 25.0, t1),), t1),
    )
    return MissionScenario(spacecraft=SpacecraftSpec(), insertion=ins,
                           decommission_radius=EARTH.re + 460.0, bundles=bundles,
                           seed=seed)


@pytest.fixture(scope="session")
def small_scenario():
    cfg = ScenarioConfig(n_cubesats=3, n_pocketqubes=1, n_smallsats=0)
    return sample_scenario(cfg, seed=11)
