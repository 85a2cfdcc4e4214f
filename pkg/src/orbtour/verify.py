"""Independent verification of refined trajectories.

Every arc's controls are re-propagated from the arc's stored initial state
with the plain fixed-step integrator (full nonlinear dynamics plus the
instantaneous oblateness term) and the achieved terminal orbits are
compared against the mission targets and fuel accounting.  The verifier
shares only the dynamics primitives with the refiner, never its linearized
model, and failures become report rows rather than exceptions.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .constants import EARTH, PhysicalConstants
from .elements import MeeState, SpacecraftState, mee_to_kep
from .propagate import PropagatorConfig, propagate_numeric
from .scenario import MissionScenario
from .scp import RefinedArc, realized_dv
from .tour import Tour

#: injection accuracy requirements (defaults)
TOL_SMA_KM = 10.0
TOL_INC_DEG = 0.1


@dataclass(frozen=True)
class Tolerances:
    sma_km: float = TOL_SMA_KM
    inc_deg: float = TOL_INC_DEG
    fuel_rel: float = 0.05


@dataclass
class LegReport:
    label: str
    target_a_km: float
    target_i_deg: float
    achieved_a_km: float
    achieved_e: float
    achieved_i_deg: float
    da_km: float
    de: float
    di_deg: float
    fuel_numeric_kg: float
    fuel_analytic_kg: float
    dv_numeric_mps: float
    consistency_err: float       # refiner-vs-verifier terminal state mismatch
    pass_sma: bool
    pass_inc: bool
    pass_fuel: bool

    @property
    def passed(self) -> bool:
        return self.pass_sma and self.pass_inc


@dataclass
class VerificationReport:
    legs: list[LegReport] = field(default_factory=list)
    # reserved for higher-fidelity perturbation deltas (drag, third-body, srp)
    perturbations: dict = field(default_factory=lambda: {"j2_instantaneous": True})

    @property
    def all_passed(self) -> bool:
        return all(leg.passed for leg in self.legs)

    def to_dict(self) -> dict:
        return {"version": 1,
                "perturbations": self.perturbations,
                "all_passed": self.all_passed,
                "legs": [vars(leg) for leg in self.legs]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = ["label", "target_a_km", "target_i_deg", "achieved_a_km",
                  "achieved_e", "achieved_i_deg", "da_km", "de", "di_deg",
                  "fuel_numeric_kg", "fuel_analytic_kg", "dv_numeric_mps",
                  "consistency_err", "pass_sma", "pass_inc", "pass_fuel"]
        writer = csv.DictWriter(buf, fieldnames=fields)
        writer.writeheader()
        for leg in self.legs:
            writer.writerow({k: vars(leg)[k] for k in fields})
        return buf.getvalue()


def repropagate_arc(arc: RefinedArc, config: PropagatorConfig, isp: float,
                    consts: PhysicalConstants = EARTH) -> np.ndarray:
    """Re-propagate an arc's controls from its stored initial state."""
    state0 = SpacecraftState(MeeState.from_array(arc.states[0, :6]),
                             mass=float(arc.states[0, 6]), epoch=arc.t0)
    return propagate_numeric(state0, arc.controls, arc.dt, isp, config, consts)


def verify_trajectory(arcs: list[RefinedArc], tour: Tour,
                      scenario: MissionScenario,
                      tolerances: Tolerances = Tolerances(),
                      config: PropagatorConfig = PropagatorConfig(),
                      consts: PhysicalConstants = EARTH) -> VerificationReport:
    """Check every refined leg against its mission target.

    Arcs are grouped by their ``legN/...`` labels; the last arc of each leg
    carries the injection.  Fuel is compared against the analytical leg
    estimates recorded on the tour.
    """
    isp = scenario.spacecraft.thruster.isp
    by_leg: dict[int, list[RefinedArc]] = {}
    for arc in arcs:
        leg_idx = int(arc.label.split("/")[0].removeprefix("leg"))
        by_leg.setdefault(leg_idx, []).append(arc)

    report = VerificationReport()
    n = scenario.n_bundles
    for leg_idx in sorted(by_leg):
        leg_arcs = by_leg[leg_idx]
        fuel_numeric = 0.0
        dv_numeric = 0.0
        consistency = 0.0
        final_traj = None
        for arc in leg_arcs:
            traj = repropagate_arc(arc, config, isp, consts)
            fuel_numeric += float(traj[0, 6] - traj[-1, 6])
            dv_numeric += realized_dv(arc.controls, arc.dt, traj)
            scale = np.maximum(np.abs(arc.x_ref), 1e-2)
            consistency = max(consistency, float(
                np.max(np.abs((traj[-1] - arc.states[-1]) / scale))))
            final_traj = traj

        achieved = mee_to_kep(MeeState.from_array(final_traj[-1, :6]))
        if leg_idx < n:
            bundle = scenario.bundles[tour.order[leg_idx]]
            target_a, target_i = bundle.target.a, bundle.target.i
        else:
            target_a, target_i = scenario.decommission_radius, achieved.i

        leg_est = tour.legs[leg_idx]
        da = achieved.a - target_a
        di = achieved.i - target_i
        fuel_analytic = leg_est.fuel_mass
        fuel_ok = (abs(fuel_numeric - fuel_analytic)
                   <= tolerances.fuel_rel * max(fuel_analytic, 1e-12))
        report.legs.append(LegReport(
            label=f"leg{leg_idx}",
            target_a_km=target_a, target_i_deg=math.degrees(target_i),
            achieved_a_km=achieved.a, achieved_e=achieved.e,
            achieved_i_deg=math.degrees(achieved.i),
            da_km=da, de=achieved.e, di_deg=math.degrees(di),
            fuel_numeric_kg=fuel_numeric, fuel_analytic_kg=fuel_analytic,
            dv_numeric_mps=dv_numeric * 1000.0,
            consistency_err=consistency,
            pass_sma=abs(da) <= tolerances.sma_km,
            pass_inc=abs(math.degrees(di)) <= tolerances.inc_deg,
            pass_fuel=fuel_ok,
        ))
    return report


def save_report(report: VerificationReport, json_path: str | os.PathLike,
                csv_path: str | os.PathLike | None = None) -> None:
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if csv_path is not None:
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
