import json
import math

import numpy as np
import pytest
from scipy import stats

from orbtour.constants import EARTH
from orbtour.errors import SchemaError
from orbtour.scenario import (PAYLOAD_CLASS_MASS, ScenarioConfig,
                              load_scenario, sample_scenario, save_scenario,
                              scenario_from_dict, scenario_to_dict,
                              sso_inclination)

TAU = 2 * math.pi


# ---------------------------------------------------------------------------
# sun-synchronous condition
# ---------------------------------------------------------------------------

def test_sso_inclination_reference_values():
    assert math.degrees(sso_inclination(EARTH.re + 500.0)) == pytest.approx(97.40, abs=0.5)
    assert math.degrees(sso_inclination(7000.0)) == pytest.approx(97.3964, abs=0.5)


def test_sso_inclination_monotone():
    prev = sso_inclination(6800.0)
    for a in np.linspace(6850.0, 7500.0, 12):
        cur = sso_inclination(float(a))
        assert cur > prev
        assert math.pi / 2 < cur < math.pi
        prev = cur


def test_sso_no_solution_when_too_high():
    with pytest.raises(ValueError):
        sso_inclination(40000.0)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def test_sampling_deterministic():
    cfg = ScenarioConfig()
    a = scenario_to_dict(sample_scenario(cfg, 123))
    b = scenario_to_dict(sample_scenario(cfg, 123))
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_sampling_statistics():
    cfg = ScenarioConfig()
    smas, incs, counts = [], [], []
    n_draws = 2000
    for s in range(n_draws):
        scn = sample_scenario(cfg, s)
        counts.append(scn.n_bundles)
        for b in scn.bundles:
            smas.append(b.target.a)
            incs.append(b.target.i)
            for p in b.payloads:
                assert p.mass >= PAYLOAD_CLASS_MASS[p.cls]
    smas = np.array(smas)
    a_lo = EARTH.re + 450.0
    a_hi = EARTH.re + 550.0
    assert smas.min() >= a_lo and smas.max() <= a_hi
    # uniformity over the altitude band
    _, p_value = stats.kstest((smas - a_lo) / 100.0, "uniform")
    assert p_value > 1e-3
    incs = np.array(incs)
    assert incs.min() >= sso_inclination(a_lo) - 1e-12
    assert incs.max() <= sso_inclination(a_hi) + 1e-12
    counts = np.array(counts)
    assert counts.min() == 2 and counts.max() == 13


def test_payload_mass_floor_and_exponential_excess():
    cfg = ScenarioConfig()
    excesses = []
    for s in range(400):
        scn = sample_scenario(cfg, 10_000 + s)
        for b in scn.bundles:
            for p in b.payloads:
                excesses.append(p.mass / PAYLOAD_CLASS_MASS[p.cls] - 1.0)
    excesses = np.array(excesses)
    assert np.all(excesses >= 0.0)
    assert np.mean(excesses) == pytest.approx(0.15, rel=0.1)


def test_total_payload_mass_conserved_across_bundles():
    scn = sample_scenario(ScenarioConfig(), 5)
    per_payload = sum(p.mass for b in scn.bundles for p in b.payloads)
    assert scn.payload_mass == pytest.approx(per_payload, rel=1e-12)
    n_payloads = sum(len(b.payloads) for b in scn.bundles)
    assert n_payloads == 13


def test_fixed_bundle_count():
    scn = sample_scenario(ScenarioConfig(fixed_bundles=13), 3)
    assert scn.n_bundles == 13
    assert all(len(b.payloads) == 1 for b in scn.bundles)
    scn = sample_scenario(ScenarioConfig(fixed_bundles=2), 3)
    assert scn.n_bundles == 2


def test_initial_mass_accounts_for_sampled_payloads():
    scn = sample_scenario(ScenarioConfig(), 8)
    sc = scn.spacecraft
    assert scn.initial_mass == pytest.approx(
        sc.wet_mass - sc.payload_mass_total + scn.payload_mass, rel=1e-12)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_save_load_round_trip(tmp_path):
    scn = sample_scenario(ScenarioConfig(), 77)
    path = tmp_path / "scn.json"
    save_scenario(scn, path)
    back = load_scenario(path)
    assert back.n_bundles == scn.n_bundles
    assert back.decommission_radius == pytest.approx(scn.decommission_radius, abs=1e-9)
    for b0, b1 in zip(scn.bundles, back.bundles):
        assert b1.target.a == pytest.approx(b0.target.a, abs=1e-9)
        assert b1.target.i == pytest.approx(b0.target.i, abs=1e-12)
        assert b1.target.raan == pytest.approx(b0.target.raan, abs=1e-12)
        for p0, p1 in zip(b0.payloads, b1.payloads):
            assert p1.mass == p0.mass and p1.cls == p0.cls
    # angles travel as degrees: a second save agrees to fp rounding
    path2 = tmp_path / "scn2.json"
    save_scenario(back, path2)
    d1 = json.loads(path.read_text())
    d2 = json.loads(path2.read_text())
    for b1, b2 in zip(d1["bundles"], d2["bundles"]):
        for key in b1["target"]:
            assert b2["target"][key] == pytest.approx(b1["target"][key],
                                                      rel=1e-15, abs=1e-12)


def test_unknown_schema_version_rejected():
    scn = sample_scenario(ScenarioConfig(), 1)
    d = scenario_to_dict(scn)
    d["version"] = 99
    with pytest.raises(SchemaError):
        scenario_from_dict(d)


def test_malformed_record_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(SchemaError):
        load_scenario(path)
    path.write_text(json.dumps({"version": 1, "bundles": "nope"}))
    with pytest.raises(SchemaError):
        load_scenario(path)


def test_minimal_hand_written_scenario_parses():
    ins = {"a_km": EARTH.re + 500.0, "e": 0.0, "i_deg": 97.0, "raan_deg": 158.0,
           "argp_deg": 0.0, "ta_deg": 0.0}
    record = {
        "version": 1, "seed": None, "epoch0_s": 0.0,
        "spacecraft": {"wet_mass_kg": 235.0, "payload_mass_total_kg": 80.0,
                       "fuel_mass_kg": 35.0,
                       "thruster": {"thrust_n": 12.6, "isp_s": 277.0, "t_on_s": 5.0,
                                    "t_cooldown_s": 60.0, "min_impulse_bit_ns": 1.0,
                                    "cluster": 1}},
        "insertion": ins,
        "decommission_alt_km": 250.0,
        "bundles": [{"target": ins, "payloads": [{"class": "cubesat", "mass_kg": 6.0}]}],
    }
    scn = scenario_from_dict(record)
    assert scn.n_bundles == 1
    assert scn.bundles[0].target.a == pytest.approx(EARTH.re + 500.0)
