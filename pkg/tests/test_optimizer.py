import numpy as np
import pytest

from orbtour.optimizer import OptimizerConfig, optimize
from orbtour.scenario import ScenarioConfig, sample_scenario
from orbtour.tour import brute_force, heuristic_walks


def test_two_bundles_solved_immediately():
    scn = sample_scenario(ScenarioConfig(fixed_bundles=2), seed=1)
    best, _ = optimize(scn, OptimizerConfig(islands=2, population=8,
                                            generations=1, seed=0))
    oracle = brute_force(scn)
    assert best.cost == pytest.approx(oracle.cost, rel=1e-12)


def test_matches_brute_force_on_small_instance():
    cfg = ScenarioConfig(n_cubesats=4, n_pocketqubes=1, n_smallsats=0,
                         fixed_bundles=5)
    scn = sample_scenario(cfg, seed=9)
    best, _ = optimize(scn, OptimizerConfig(seed=5, generations=60))
    oracle = brute_force(scn)
    assert best.cost == pytest.approx(oracle.cost, rel=1e-9)


def test_seeding_never_hurts(small_scenario):
    walks = heuristic_walks(small_scenario)
    seeds = list(walks.values())
    best, _ = optimize(small_scenario,
                       OptimizerConfig(seed=3, generations=5, islands=2,
                                       population=12),
                       seeds=seeds)
    assert best.cost <= min(t.cost for t in seeds) + 1e-12


def test_deterministic_under_seed(small_scenario):
    cfg = OptimizerConfig(seed=42, generations=30, islands=3, population=16)
    a, tra = optimize(small_scenario, cfg)
    b, trb = optimize(small_scenario, cfg)
    assert a.order == b.order
    assert a.fuel_total == b.fuel_total
    assert np.array_equal(tra.best_fuel, trb.best_fuel)
    assert np.array_equal(tra.mean_fuel, trb.mean_fuel)
    assert tra.migrations == trb.migrations


def test_island_best_monotone_and_migrations_logged(small_scenario):
    cfg = OptimizerConfig(seed=7, generations=50, islands=4, population=16,
                          migration_interval=10)
    _, trace = optimize(small_scenario, cfg)
    assert np.all(np.diff(trace.best_fuel, axis=0) <= 1e-12)
    gens = sorted({g for g, _, _ in trace.migrations})
    assert gens == [9, 19, 29, 39, 49]
    ring = {(s, d) for _, s, d in trace.migrations}
    assert ring == {(i, (i + 1) % 4) for i in range(4)}


def test_full_size_instance_solves_at_desk_scale():
    import time
    from orbtour.scenario import ScenarioConfig, sample_scenario
    scn = sample_scenario(ScenarioConfig(fixed_bundles=13), seed=77)
    t0 = time.time()
    best, _ = optimize(scn, OptimizerConfig(seed=0))
    assert time.time() - t0 < 60.0
    assert best.feasible


def test_both_algorithms_run(small_scenario):
    for alg in ("ga", "pso"):
        best, _ = optimize(small_scenario,
                           OptimizerConfig(seed=1, generations=25, islands=2,
                                           population=16, algorithms=(alg,)))
        assert best.feasible


def test_trace_csv_format(small_scenario):
    _, trace = optimize(small_scenario,
                        OptimizerConfig(seed=2, generations=3, islands=2,
                                        population=8))
    lines = trace.to_csv().strip().split("\n")
    assert lines[0] == "generation,island,best_fuel_kg,mean_fuel_kg"
    assert len(lines) == 1 + 3 * 2
    gen, isl, best, mean = lines[1].split(",")
    assert float(best) <= float(mean)


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(islands=0)
    with pytest.raises(ValueError):
        OptimizerConfig(seeding_fraction=1.5)
    with pytest.raises(ValueError):
        OptimizerConfig(algorithms=("annealing",))


def test_bad_seed_tour_rejected(small_scenario):
    with pytest.raises(ValueError):
        optimize(small_scenario, OptimizerConfig(seed=1, generations=1),
                 seeds=[[0, 0, 1, 2]])
