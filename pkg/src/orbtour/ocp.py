"""Discretized optimal-control problem construction: thrust-bound schedules
aligned to a burn plan, the multi-impulsive warm start, and linearization of
the discrete dynamics by vectorized central finite differences.

The stage grid is nonuniform: burn windows (one per planned impulse, the
thruster's maximum on-time wide, centered on the impulse) are resolved by
several short stages, coast gaps by a configurable number of stages per
revolution.  This keeps multi-revolution arcs well under the stage cap that
a uniform burn-resolving step would explode past.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import EARTH, PhysicalConstants
from .maneuvers import BurnPlan, ThrusterSpec
from .propagate import rk4_batch, rk4_segment

#: default grid resolution (stages per burn window / per coast revolution)
BURN_STAGES = 4
COAST_STAGES_PER_ORBIT = 40
STAGE_CAP = 20000
#: max internal integration substep on coast stages [s]
COAST_SUBSTEP = 40.0


@dataclass
class BurnWindow:
    """One thrust-allowed interval with the impulses it must realize."""

    start: float
    end: float
    dv: np.ndarray          # summed LVLH impulse [km/s]
    mass: float             # mass entering the window (from the plan)

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass
class StageGrid:
    """Nonuniform time discretization with per-stage thrust bounds."""

    dt: np.ndarray             # (N,) stage durations [s]
    tmax: np.ndarray           # (N,) thrust bound [kN]
    windows: list[BurnWindow] = field(default_factory=list)
    window_of_stage: np.ndarray | None = None   # (N,) window index or -1

    @property
    def n_stages(self) -> int:
        return self.dt.size

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.dt)])

    @property
    def horizon(self) -> float:
        return float(self.dt.sum())

    def substeps(self, coast_substep: float = COAST_SUBSTEP) -> np.ndarray:
        """Internal integration substeps per stage (integration accuracy)."""
        return np.maximum(1, np.ceil(self.dt / coast_substep - 1e-12)).astype(int)


def burn_windows(plan: BurnPlan, thruster: ThrusterSpec,
                 horizon: float | None = None) -> list[BurnWindow]:
    """Thrust windows of width t_on centered on each planned impulse.

    Windows that overlap (or violate the cooldown separation) after
    placement are merged with a warning and carry the summed impulse.
    """
    t_on = thruster.t_on
    wins: list[BurnWindow] = []
    for ev in plan.events:
        start = max(ev.epoch - 0.5 * t_on, 0.0)
        w = BurnWindow(start, start + t_on, np.asarray(ev.dv, dtype=float),
                       ev.mass_before)
        if wins and w.start < wins[-1].end + thruster.t_cooldown:
            warnings.warn("burn windows overlap after quantization; merged",
                          stacklevel=2)
            prev = wins[-1]
            prev.end = max(prev.end, w.end)
            prev.dv = prev.dv + w.dv
        else:
            wins.append(w)
    if horizon is not None:
        for w in wins:
            if w.end > horizon:
                raise ValueError("burn plan extends past the arc horizon")
    return wins


def tmax_schedule(plan: BurnPlan, step: float, thruster: ThrusterSpec,
                  horizon: float | None = None) -> np.ndarray:
    """Per-stage thrust bounds on a uniform grid of step ``step``.

    Stages whose start lies within the on-time after a planned burn epoch
    get the peak thrust; everything else coasts at zero.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    if horizon is None:
        horizon = plan.duration + thruster.t_on
    n = max(1, math.ceil(horizon / step - 1e-12))
    tmax = np.zeros(n)
    starts = np.arange(n) * step
    for ev in plan.events:
        on = (starts >= ev.epoch - 1e-12) & (starts < ev.epoch + thruster.t_on - 1e-12)
        if np.any(on & (tmax > 0.0)):
            warnings.warn("burn windows overlap after quantization; merged",
                          stacklevel=2)
        tmax[on] = thruster.thrust_kn
    return tmax


def build_grid(plan: BurnPlan, thruster: ThrusterSpec, orbit_period: float,
               tail: float | None = None,
               burn_stages: int = BURN_STAGES,
               coast_stages_per_orbit: int = COAST_STAGES_PER_ORBIT,
               stage_cap: int = STAGE_CAP) -> StageGrid:
    """Nonuniform stage grid covering a burn plan plus a trailing coast."""
    coast_dt = orbit_period / coast_stages_per_orbit
    if tail is None:
        tail = 0.25 * orbit_period
    wins = burn_windows(plan, thruster)

    dts: list[float] = []
    bounds: list[float] = []
    owner: list[int] = []

    def add_coast(duration: float) -> None:
        if duration <= 1e-9:
            return
        n = max(1, math.ceil(duration / coast_dt - 1e-12))
        d = duration / n
        dts.extend([d] * n)
        bounds.extend([0.0] * n)
        owner.extend([-1] * n)

    cursor = 0.0
    for idx, w in enumerate(wins):
        add_coast(w.start - cursor)
        d = w.duration / burn_stages
        dts.extend([d] * burn_stages)
        bounds.extend([thruster.thrust_kn] * burn_stages)
        owner.extend([idx] * burn_stages)
        cursor = w.end
    add_coast(tail)

    if len(dts) > stage_cap:
        raise ValueError(f"grid needs {len(dts)} stages, cap is {stage_cap}; "
                         "split the arc at a coast midpoint")
    return StageGrid(dt=np.array(dts), tmax=np.array(bounds), windows=wins,
                     window_of_stage=np.array(owner, dtype=np.int64))


def split_plan(plan: BurnPlan, max_duration: float) -> list[BurnPlan]:
    """Split a plan into chunks at coast midpoints so no chunk spans more
    than ``max_duration``; chunk epochs stay on the original timeline."""
    if plan.duration <= max_duration or len(plan.events) <= 1:
        return [plan]
    chunks: list[list] = [[]]
    start = 0.0
    for ev in plan.events:
        if chunks[-1] and ev.epoch - start > max_duration:
            chunks.append([])
            start = 0.5 * (chunks[-2][-1].epoch + ev.epoch)
        chunks[-1].append(ev)
    return [BurnPlan(events) for events in chunks]


def warm_start(plan: BurnPlan, grid: StageGrid, x0: np.ndarray, isp: float,
               consts: PhysicalConstants = EARTH, j2: bool = True,
               coast_substep: float = COAST_SUBSTEP,
               spill_tol: float = 1e-3,
               ) -> tuple[np.ndarray, np.ndarray]:
    """Initial trajectory realizing the plan's impulses as finite burns.

    Each window applies a constant thrust m*|dv|/duration along the
    impulse's LVLH direction; forces above the window's bound are clipped
    and the impulse shortfall spills into the next window (a final shortfall
    above ``spill_tol`` [kN*s] warns).  States come from the true nonlinear
    rollout of these controls, so (states, controls) is dynamics-consistent
    from the start.

    Returns (states (N+1, 7), controls (N, 3) [kN]).
    """
    n = grid.n_stages
    controls = np.zeros((n, 3))
    ve = isp * consts.g0
    y = tuple(float(v) for v in x0)
    states = np.empty((n + 1, 7))
    states[0] = y

    owner = grid.window_of_stage
    carry = np.zeros(3)  # impulse shortfall spilled forward [km/s * kg]
    i = 0
    while i < n:
        w = owner[i]
        if w < 0:
            y = rk4_segment(y, (0.0, 0.0, 0.0), float(grid.dt[i]), coast_substep,
                            ve, consts, j2)
            states[i + 1] = y
            i += 1
            continue
        # one whole window: stages i..j-1
        j = i
        while j < n and owner[j] == w:
            j += 1
        window = grid.windows[w]
        mass = y[6]
        needed = mass * np.asarray(window.dv) + carry
        force = needed / window.duration
        fmag = float(np.linalg.norm(force))
        bound = float(grid.tmax[i])
        if fmag > bound * (1.0 + 1e-9):
            force = force * (bound / fmag)
            applied = force * window.duration
            carry = needed - applied
            # an unrealized tail above the impulse-bit scale is reportable
            if (w == len(grid.windows) - 1
                    and float(np.linalg.norm(carry)) > spill_tol):
                warnings.warn("warm start could not realize the full impulse "
                              "within the thrust bound", stacklevel=2)
        else:
            carry = np.zeros(3)
        for s in range(i, j):
            controls[s] = force
            y = rk4_segment(y, (force[0], force[1], force[2]), float(grid.dt[s]),
                            coast_substep, ve, consts, j2)
            states[s + 1] = y
        i = j
    return states, controls


# ---------------------------------------------------------------------------
# linearization
# ---------------------------------------------------------------------------

#: characteristic scales for finite-difference steps on [p f g h k L m] and u
_FD_STATE_SCALE = np.array([7000.0, 1.0, 1.0, 1.0, 1.0, 1.0, 200.0])
_FD_REL = 6.0e-6


def linearize_dynamics(x: np.ndarray, u: np.ndarray, dt: float, substeps: int,
                       isp: float, consts: PhysicalConstants = EARTH,
                       j2: bool = True, u_scale: float | None = None,
                       ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Jacobians of one discrete step x+ = f(x, u) by central differences.

    Returns (A (7,7), B (7,3), c (7,)) with c = f(x, u) - A x - B u.
    """
    A, B, fval = linearize_batch(np.asarray(x, dtype=float)[None, :],
                                 np.asarray(u, dtype=float)[None, :],
                                 np.array([dt]), np.array([substeps]),
                                 isp, consts, j2, u_scale)
    c = fval[0] - A[0] @ np.asarray(x, dtype=float) - B[0] @ np.asarray(u, dtype=float)
    return A[0], B[0], c


def linearize_batch(x: np.ndarray, u: np.ndarray, dt: np.ndarray,
                    substeps: np.ndarray, isp: float,
                    consts: PhysicalConstants = EARTH, j2: bool = True,
                    u_scale: float | None = None, skip_b: np.ndarray | None = None,
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized central-difference Jacobians of the discrete dynamics at
    every node: x (N,7), u (N,3), dt (N,), substeps (N,) ints.

    ``skip_b`` marks stages whose control is structurally zero (coast); their
    B block is left zero and costs no evaluations.  Returns (A (N,7,7),
    B (N,7,3), f (N,7)).
    """
    N = x.shape[0]
    ve = isp * consts.g0
    if u_scale is None:
        u_scale = max(float(np.max(np.linalg.norm(u, axis=1), initial=0.0)), 1e-4)
    eps_x = _FD_REL * _FD_STATE_SCALE
    eps_u = _FD_REL * max(u_scale, 1e-4)
    if skip_b is None:
        skip_b = np.zeros(N, dtype=bool)
    nb = int(np.sum(~skip_b))

    # rows: nominal + 14 state perturbations + 6 control perturbations
    rows_x = [x]
    rows_u = [u]
    for jcomp in range(7):
        for sign in (+1.0, -1.0):
            xp = x.copy()
            xp[:, jcomp] += sign * eps_x[jcomp]
            rows_x.append(xp)
            rows_u.append(u)
    bsel = ~skip_b
    for jcomp in range(3):
        for sign in (+1.0, -1.0):
            up = u[bsel].copy()
            up[:, jcomp] += sign * eps_u
            rows_x.append(x[bsel])
            rows_u.append(up)

    big_x = np.concatenate(rows_x, axis=0)
    big_u = np.concatenate(rows_u, axis=0)
    base = np.concatenate([dt] * 15 + [dt[bsel]] * 6)
    sub = np.concatenate([substeps] * 15 + [substeps[bsel]] * 6)

    out = np.empty_like(big_x)
    for ns in np.unique(sub):
        rows = sub == ns
        out[rows] = rk4_batch(big_x[rows], big_u[rows], base[rows], int(ns),
                              ve, consts, j2)

    fval = out[:N]
    A = np.empty((N, 7, 7))
    for jcomp in range(7):
        plus = out[(1 + 2 * jcomp) * N:(2 + 2 * jcomp) * N]
        minus = out[(2 + 2 * jcomp) * N:(3 + 2 * jcomp) * N]
        A[:, :, jcomp] = (plus - minus) / (2.0 * eps_x[jcomp])
    B = np.zeros((N, 7, 3))
    off = 15 * N
    for jcomp in range(3):
        plus = out[off + 2 * jcomp * nb: off + (2 * jcomp + 1) * nb]
        minus = out[off + (2 * jcomp + 1) * nb: off + (2 * jcomp + 2) * nb]
        B[bsel, :, jcomp] = (plus - minus) / (2.0 * eps_u)
    return A, B, fval
