"""Trajectory refinement by successive convexification.

Each transfer arc is re-optimized as a discrete optimal-control problem on
the nonuniform stage grid of :mod:`orbtour.ocp`: the nonlinear dynamics are
linearized about the current rollout, the convex subproblem is solved with
hard per-stage thrust balls and a box trust region, the candidate controls
are re-rolled through the true dynamics, and the step is accepted or
rejected on the ratio of actual to predicted objective reduction, which
also drives the trust radius.

States are scaled by the terminal reference magnitudes and controls by the
peak thrust before solving, and everything is reported back in physical
units.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .constants import EARTH, PhysicalConstants
from .elements import KeplerianState, MeeState, SpacecraftState, kep_to_mee, mee_to_kep
from .maneuvers import ASC_NODE, BurnEvent, BurnPlan, DESC_NODE, ThrusterSpec
from .ocp import (COAST_SUBSTEP, STAGE_CAP, StageGrid, build_grid, linearize_batch,
                  split_plan, warm_start)
from .propagate import PropagatorConfig, propagate_numeric
from .qp import ConvexSubproblem, ReducedArcSolver
from .scenario import MissionScenario
from .tour import Tour, tour_plans

#: default terminal weights on scaled [p f g h k L m] errors: orbit shape and
#: plane dominate, phase is soft, terminal mass is free
DEFAULT_P_DIAG = (1e4, 1e4, 1e4, 1e4, 1e4, 1e2, 0.0)
#: control-energy weight in scaled units; regularization only, so the
#: terminal error always dominates the trade
DEFAULT_R_SCALE = 1e-6
#: scale floors for near-zero reference components [p f g h k L m]
_SCALE_FLOOR = np.array([1.0, 1e-2, 1e-2, 1e-2, 1e-2, 1.0, 1.0])


@dataclass(frozen=True)
class TrustRegion:
    radius: float = 0.1
    shrink: float = 0.5
    grow: float = 2.0
    ratio_accept: float = 0.25
    ratio_expand: float = 0.75
    min_radius: float = 1e-7
    max_radius: float = 10.0

    def __post_init__(self) -> None:
        if not (0.0 < self.shrink < 1.0 < self.grow):
            raise ValueError("need shrink < 1 < grow")
        if not (0.0 < self.ratio_accept < self.ratio_expand):
            raise ValueError("need 0 < ratio_accept < ratio_expand")


@dataclass
class OcpProblem:
    """One refinement problem: grid, boundary data and weights."""

    x0: np.ndarray                # (7,) [p f g h k L m] at arc start
    grid: StageGrid
    x_ref: np.ndarray             # (7,) terminal reference
    isp: float
    p_diag: tuple = DEFAULT_P_DIAG
    r_scale: float = DEFAULT_R_SCALE
    j2: bool = True
    consts: PhysicalConstants = field(default_factory=lambda: EARTH)
    t0: float = 0.0               # arc start epoch [s]
    label: str = "arc"

    def scales(self) -> tuple[np.ndarray, float]:
        sx = np.maximum(np.abs(self.x_ref), _SCALE_FLOOR)
        su = max(float(np.max(self.grid.tmax, initial=0.0)), 1e-4)
        return sx, su


@dataclass
class RefinedArc:
    """Refined discrete trajectory for one arc."""

    states: np.ndarray            # (N+1, 7) physical units
    controls: np.ndarray          # (N, 3) [kN]
    dt: np.ndarray                # (N,) [s]
    t0: float
    dv_total: float               # [km/s]
    iterations: int
    converged: bool
    objective: float
    x_ref: np.ndarray
    label: str = "arc"
    objective_history: list[float] = field(default_factory=list)

    @property
    def terminal_error(self) -> dict:
        """Deviation of the achieved terminal orbit from the reference."""
        got = mee_to_kep(MeeState.from_array(self.states[-1, :6]))
        want = mee_to_kep(MeeState.from_array(self.x_ref[:6]))
        return {
            "da_km": got.a - want.a,
            "de": got.e - want.e,
            "di_deg": math.degrees(got.i - want.i),
        }

    @property
    def fuel_used(self) -> float:
        return float(self.states[0, 6] - self.states[-1, 6])


def realized_dv(controls: np.ndarray, dt: np.ndarray, states: np.ndarray) -> float:
    """Integrated |u|/m over the arc [km/s]."""
    mags = np.linalg.norm(controls, axis=1)
    m_mid = 0.5 * (states[:-1, 6] + states[1:, 6])
    return float(np.sum(mags * dt / m_mid))


def scp_solve(problem: OcpProblem, warm_states: np.ndarray,
              warm_controls: np.ndarray, trust: TrustRegion = TrustRegion(),
              max_iterations: int = 50, update_tol: float = 1e-6,
              qp_iters: int = 100, qp_tol: float = 1e-11) -> RefinedArc:
    """Refine one arc from a dynamics-consistent warm start.

    Returns the best accepted iterate; ``converged`` is False when the
    update-norm criterion was not met within the iteration cap.
    """
    grid = problem.grid
    N = grid.n_stages
    sx, su = problem.scales()
    P = np.diag(problem.p_diag)
    R = problem.r_scale * np.eye(3)
    ball = grid.tmax / su
    z_ref = problem.x_ref / sx
    dt = grid.dt
    substeps = grid.substeps()
    consts = problem.consts
    prop_cfg = PropagatorConfig(step=COAST_SUBSTEP, j2=problem.j2)

    def rollout(controls: np.ndarray) -> np.ndarray:
        state0 = SpacecraftState(MeeState.from_array(problem.x0[:6]),
                                 mass=float(problem.x0[6]))
        return propagate_numeric(state0, controls, dt, problem.isp, prop_cfg, consts)

    def true_objective(states: np.ndarray, controls: np.ndarray) -> float:
        err = states[-1] / sx - z_ref
        w = controls / su
        return float(0.5 * err @ P @ err + 0.5 * problem.r_scale * np.sum(w * w))

    X = np.asarray(warm_states, dtype=float).copy()
    U = np.asarray(warm_controls, dtype=float).copy()
    J = true_objective(X, U)
    history = [J]
    radius = trust.radius
    converged = False
    iterations = 0
    duals = None
    coast = grid.tmax <= 0.0

    if N == 0 or np.all(grid.tmax == 0.0) and np.all(np.abs(U) == 0.0):
        # pure coast: the warm start is the unique feasible point
        return RefinedArc(states=X, controls=U, dt=dt, t0=problem.t0,
                          dv_total=realized_dv(U, dt, X), iterations=1,
                          converged=True, objective=J, x_ref=problem.x_ref.copy(),
                          label=problem.label, objective_history=history)

    solver = None
    z_ref_dev = None
    for iterations in range(1, max_iterations + 1):
        if solver is None:
            A, B, _ = linearize_batch(X[:-1], U, dt, substeps, problem.isp, consts,
                                      problem.j2, u_scale=su, skip_b=coast)
            # scaled deviation dynamics with absolute scaled controls w=u/su:
            # z' = (A*) z + (B*)(w - w_bar)  ->  offset c = -(B*) w_bar
            A_s = A * (sx[None, None, :] / sx[None, :, None])
            B_s = B * (su / sx[None, :, None])
            c_s = -np.einsum("nij,nj->ni", B_s, U / su)
            z_ref_dev = (problem.x_ref - X[-1]) / sx
            sub = ConvexSubproblem(A=A_s, B=B_s, c=c_s, P=P, z_ref=z_ref_dev,
                                   R=R, ball=ball, trust=np.full(7, radius),
                                   z0=np.zeros(7))
            solver = ReducedArcSolver(sub)
        sol = solver.solve(max_iter=qp_iters, tol=qp_tol, warm=duals)
        duals = sol.duals
        # trust region: the step is affine in the controls, so scaling the
        # control step keeps it ball-feasible and model-consistent
        step_scale = float(np.max(np.abs(sol.states)))
        lam = 1.0 if step_scale <= radius else radius / step_scale
        W_step = U / su + lam * (sol.controls - U / su)
        U_new = W_step * su
        U_new[coast] = 0.0
        Z_lam = lam * sol.states
        err = Z_lam[-1] - z_ref_dev
        J_pred = float(0.5 * err @ P @ err
                       + 0.5 * problem.r_scale * np.sum(W_step * W_step))

        X_new = rollout(U_new)
        J_new = true_objective(X_new, U_new)
        pred_red = J - J_pred
        act_red = J - J_new
        step_norm = max(lam * step_scale,
                        float(np.max(np.abs((U_new - U) / su))) if U.size else 0.0)

        if step_norm < update_tol or pred_red < 1e-9 * (1.0 + abs(J)):
            # no meaningful step left at solver precision
            if act_red > 0.0:
                X, U, J = X_new, U_new, J_new
                history.append(J)
            converged = True
            break
        ratio = act_red / pred_red
        if ratio < trust.ratio_accept:
            radius = max(radius * trust.shrink, trust.min_radius)
            continue
        X, U, J = X_new, U_new, J_new
        history.append(J)
        solver = None  # accepted: linearization point moved
        if ratio > trust.ratio_expand and lam < 1.0:
            radius = min(radius * trust.grow, trust.max_radius)

    return RefinedArc(states=X, controls=U, dt=dt, t0=problem.t0,
                      dv_total=realized_dv(U, dt, X), iterations=iterations,
                      converged=converged, objective=J, x_ref=problem.x_ref.copy(),
                      label=problem.label, objective_history=history)


# ---------------------------------------------------------------------------
# tour-level refinement
# ---------------------------------------------------------------------------

@dataclass
class RefineOptions:
    arcs_per_problem: int = 1     # 1: each maneuver phase alone; 2: whole leg
    trust: TrustRegion = field(default_factory=TrustRegion)
    max_iterations: int = 50
    stage_cap: int = STAGE_CAP
    p_diag: tuple = DEFAULT_P_DIAG
    r_scale: float = DEFAULT_R_SCALE


def _phase_groups(plan: BurnPlan) -> list[BurnPlan]:
    """Split a leg plan into maneuver phases (altitude vs plane groups)."""
    groups: list[list] = []
    kind_of = lambda tag: "plane" if tag in (ASC_NODE, DESC_NODE) else "altitude"
    current_kind = None
    for ev in plan.events:
        k = kind_of(ev.tag)
        if k != current_kind:
            groups.append([])
            current_kind = k
        groups[-1].append(ev)
    return [BurnPlan(evts) for evts in groups]


def _problems_for_leg(state0: SpacecraftState, est, plan: BurnPlan,
                      thruster: ThrusterSpec, options: RefineOptions,
                      x_ref_final: np.ndarray, consts: PhysicalConstants,
                      label: str) -> list[tuple[BurnPlan, np.ndarray | None, str]]:
    """(sub-plan, terminal reference or None, label) triples for one leg.

    A None reference means "pin to the warm rollout terminal": used for the
    interior pieces produced by phase grouping or stage-cap splitting, whose
    physical target is just the staircase state where the next piece starts.
    """
    if not plan.events:
        return []
    groups = _phase_groups(plan)
    if options.arcs_per_problem >= 2:
        groups = [plan]
    pieces: list[tuple[BurnPlan, np.ndarray | None, str]] = []
    for gi, g in enumerate(groups):
        # enforce the stage cap by splitting long phases at coast midpoints;
        # the margin covers the phase-matching tail and per-gap rounding
        kep = mee_to_kep(state0.mee)
        period = 2.0 * math.pi * math.sqrt(kep.a**3 / consts.mu)
        est_stages = (len(g.events) * 5
                      + (g.duration / period + 2.5) * 40)
        n_chunks = max(1, math.ceil(est_stages / (0.9 * options.stage_cap)))
        chunks = split_plan(g, g.duration / n_chunks) if n_chunks > 1 else [g]
        for ci, chunk in enumerate(chunks):
            last = (gi == len(groups) - 1) and (ci == len(chunks) - 1)
            pieces.append((chunk, x_ref_final if last else None,
                           f"{label}/phase{gi}.{ci}"))
    return pieces


def refine_tour(tour: Tour, scenario: MissionScenario,
                options: RefineOptions = RefineOptions(),
                consts: PhysicalConstants = EARTH) -> list[RefinedArc]:
    """Refine every leg of a tour; returns one RefinedArc per solved piece.

    Non-converged pieces are flagged on their arc; callers treat the tour as
    partially refined when any flag is down.
    """
    thruster = scenario.spacecraft.thruster
    arcs: list[RefinedArc] = []
    for li, (state0, est, plan) in enumerate(tour_plans(scenario, tour.order, consts)):
        label = f"leg{li}"
        if not plan.events:
            continue
        x_ref_final = np.concatenate([est.end_state.mee.as_array(),
                                      [est.end_state.mass]])
        pieces = _problems_for_leg(state0, est, plan, thruster, options,
                                   x_ref_final, consts, label)
        # chain on the leg timeline: each piece starts where the previous
        # arc's rollout (which extends past its last burn) ended; terminal
        # pieces anchor their endpoint phase to the leg's starting phase
        x_cursor = np.concatenate([state0.mee.as_array(), [state0.mass]])
        leg_u0 = (state0.mee.L - math.atan2(state0.mee.k, state0.mee.h))
        cursor = 0.0  # leg-relative time already covered
        for chunk, x_ref, piece_label in pieces:
            arc_start = max(chunk.events[0].epoch - 0.5 * thruster.t_on, cursor)
            lead = arc_start - cursor
            rel_plan = chunk.shifted(-arc_start)
            arc = refine_arc(x_cursor, rel_plan, thruster, x_ref, options,
                             consts, isp=thruster.isp,
                             t0=state0.epoch + arc_start, label=piece_label,
                             lead_coast=lead, j2=True,
                             terminal=x_ref is not None, u_anchor=leg_u0)
            arcs.append(arc)
            x_cursor = arc.states[-1].copy()
            cursor = arc_start + float(arc.dt.sum())
    return arcs


def _retime_node_plan(plan: BurnPlan, x0: np.ndarray, isp: float,
                      consts: PhysicalConstants, j2: bool) -> BurnPlan:
    """Re-anchor a nodal plan's epochs to the propagated dynamics.

    The analytic plan spaces burns by the Keplerian half period, but the
    J2 argument-of-latitude rate differs enough (mean-vs-osculating SMA
    offset plus secular terms) to sweep burn phases off the nodes across
    hundreds of revolutions.  A short coast rollout measures the actual
    rate and the epochs are rebuilt onto true node crossings of the right
    parity (ascending first when the plan says so).
    """
    if not plan.events or any(ev.tag not in (ASC_NODE, DESC_NODE)
                              for ev in plan.events):
        return plan
    state0 = SpacecraftState(MeeState.from_array(x0[:6]), mass=float(x0[6]))
    kep = mee_to_kep(state0.mee)
    period = 2.0 * math.pi * math.sqrt(kep.a**3 / consts.mu)
    # fit over a whole number of revolutions so the short-period terms
    # integrate out of the slope; phase errors must stay small across
    # hundreds of burn revolutions
    n_orbits, n_seg = 8, 256
    seg = n_orbits * period / n_seg
    traj = propagate_numeric(state0, np.zeros((n_seg, 3)), np.full(n_seg, seg),
                             isp, PropagatorConfig(step=COAST_SUBSTEP, j2=j2),
                             consts)
    t = np.arange(n_seg + 1) * seg
    u = traj[:, 5] - np.unwrap(np.arctan2(traj[:, 4], traj[:, 3]))
    u_rate, u0 = np.polyfit(t, u, 1)
    parity = 0 if plan.events[0].tag == ASC_NODE else 1
    t_first = ((parity * math.pi - u0) % (2.0 * math.pi)) / u_rate
    half = math.pi / u_rate
    events = [BurnEvent(t_first + k * half, ev.dv, ev.tag, ev.mass_before)
              for k, ev in enumerate(plan.events)]
    return BurnPlan(events)


def prepare_arc(x0: np.ndarray, plan: BurnPlan, thruster: ThrusterSpec,
                x_ref: np.ndarray | None, options: RefineOptions,
                consts: PhysicalConstants, isp: float, t0: float = 0.0,
                label: str = "arc", lead_coast: float = 0.0,
                j2: bool = True, terminal: bool = True,
                u_anchor: float | None = None,
                ) -> tuple[OcpProblem, np.ndarray, np.ndarray]:
    """Build the refinement problem and warm start for one plan chunk.

    ``lead_coast`` seconds of coast are prepended numerically to ``x0``
    before the first window (phasing/idle time between chunks).  Terminal
    chunks get a tail stretched to end at the anchor argument-of-latitude
    phase — the phase where the leg's ideal-element boundary state was
    defined — so the J2 short-period element oscillations cancel between
    the leg endpoints and ideal-element references are reachable.  Interior
    chunks keep a minimal tail and pin to their own warm terminal.  Returns
    (problem, warm states, warm controls).
    """
    if lead_coast > 0.0:
        state0 = SpacecraftState(MeeState.from_array(x0[:6]), mass=float(x0[6]))
        traj = propagate_numeric(state0, np.zeros((1, 3)), np.array([lead_coast]),
                                 isp, PropagatorConfig(step=COAST_SUBSTEP, j2=j2),
                                 consts)
        x0 = traj[-1]
    x0 = np.asarray(x0, dtype=float)
    plan = _retime_node_plan(plan, x0, isp, consts, j2)

    kep = mee_to_kep(MeeState.from_array(x0[:6]))
    period = 2.0 * math.pi * math.sqrt(kep.a**3 / consts.mu)

    if not terminal:
        grid = build_grid(plan, thruster, period, tail=period / 40.0,
                          stage_cap=options.stage_cap)
        W, U = warm_start(plan, grid, x0, isp, consts, j2)
    else:
        u0 = (u_anchor if u_anchor is not None
              else (x0[5] - math.atan2(x0[4], x0[3]))) % (2.0 * math.pi)
        tail = 0.25 * period
        W = U = None
        for _ in range(3):
            grid = build_grid(plan, thruster, period, tail=tail,
                              stage_cap=options.stage_cap)
            W, U = warm_start(plan, grid, x0, isp, consts, j2)
            kep_w = mee_to_kep(MeeState.from_array(W[-1, :6]))
            u_n = (W[-1, 5] - kep_w.raan) % (2.0 * math.pi)
            gap = (u0 - u_n) % (2.0 * math.pi)
            if gap < 1e-4 or gap > 2.0 * math.pi - 1e-4:
                break
            tail += gap / math.sqrt(consts.mu / kep_w.a**3)

    kep_w = mee_to_kep(MeeState.from_array(W[-1, :6]))
    if x_ref is None:
        x_ref = W[-1].copy()
    else:
        # keep the target's shape and plane (a, e, i); take node, phase and
        # mass from the warm rollout: the node is untargeted by the mission
        # and the phase was resolved combinatorially
        kep_ref = mee_to_kep(MeeState.from_array(np.asarray(x_ref[:6], dtype=float)))
        ref = KeplerianState(a=kep_ref.a, e=kep_ref.e, i=kep_ref.i,
                             raan=kep_w.raan, argp=0.0,
                             ta=(W[-1, 5] - kep_w.raan) % (2.0 * math.pi))
        mee_ref = kep_to_mee(ref)
        x_ref = np.concatenate([mee_ref.as_array(), [W[-1, 6]]])
        x_ref[5] = W[-1, 5]
    problem = OcpProblem(x0=x0, grid=grid, x_ref=x_ref,
                         isp=isp, p_diag=options.p_diag, r_scale=options.r_scale,
                         j2=j2, consts=consts, t0=t0, label=label)
    return problem, W, U


def refine_arc(x0: np.ndarray, plan: BurnPlan, thruster: ThrusterSpec,
               x_ref: np.ndarray | None, options: RefineOptions,
               consts: PhysicalConstants, isp: float, t0: float = 0.0,
               label: str = "arc", lead_coast: float = 0.0,
               j2: bool = True, terminal: bool = True,
               u_anchor: float | None = None) -> RefinedArc:
    """Prepare and solve one plan chunk."""
    problem, W, U = prepare_arc(x0, plan, thruster, x_ref, options, consts,
                                isp, t0, label, lead_coast, j2, terminal,
                                u_anchor)
    return scp_solve(problem, W, U, trust=options.trust,
                     max_iterations=options.max_iterations)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def arc_to_dict(arc: RefinedArc) -> dict:
    coast_steps = arc.dt[np.isclose(np.linalg.norm(arc.controls, axis=1), 0.0)]
    step_s = float(np.median(coast_steps)) if coast_steps.size else float(np.median(arc.dt))
    return {
        "label": arc.label,
        "n_stages": int(arc.dt.size),
        "t0_s": arc.t0,
        "step_s": step_s,
        "dt_s": arc.dt.tolist(),
        "states": arc.states.tolist(),
        "controls_lvlh_kN": arc.controls.tolist(),
        "dv_mps": arc.dv_total * 1000.0,
        "iterations": arc.iterations,
        "converged": arc.converged,
        "x_ref": arc.x_ref.tolist(),
        "terminal_error": {k: float(v) for k, v in arc.terminal_error.items()},
    }


def arc_from_dict(d: dict) -> RefinedArc:
    return RefinedArc(
        states=np.array(d["states"]), controls=np.array(d["controls_lvlh_kN"]),
        dt=np.array(d["dt_s"]), t0=d.get("t0_s", 0.0),
        dv_total=d["dv_mps"] / 1000.0, iterations=d["iterations"],
        converged=d["converged"], objective=0.0, x_ref=np.array(d["x_ref"]),
        label=d.get("label", "arc"))


def save_arcs(arcs: list[RefinedArc], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"version": 1, "arcs": [arc_to_dict(a) for a in arcs]}, fh,
                  sort_keys=True)
        fh.write("\n")


def load_arcs(path: str | os.PathLike) -> list[RefinedArc]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return [arc_from_dict(d) for d in data["arcs"]]
