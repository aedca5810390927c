"""Smoke test for the fuzzychain_py extension module.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/fuzzychain_py-*.whl
"""

import math
import tempfile
from pathlib import Path

import fuzzychain_py as fc


def check_partition():
    var = fc.LinguisticVariable(["VL", "L", "M", "H", "VH"], 0.0, 10.0)
    assert len(var) == 5
    assert var.peaks == [0.0, 2.5, 5.0, 7.5, 10.0]
    label, degree = var.hmdf(6.0)
    assert label == "M" and abs(degree - 0.6) < 1e-9
    for i in range(101):
        assert abs(sum(var.degrees(i / 10)) - 1.0) < 1e-9
    assert var.classify(25.0)[0] == "VH"
    try:
        var.hmdf(11.0)
    except ValueError:
        pass
    else:
        raise AssertionError("hmdf outside the universe should raise")


def check_rules():
    assert fc.update_reputation(1.0, True) == 1.0
    assert abs(fc.update_reputation(0.9, True) - 0.905) < 1e-12
    assert abs(fc.update_reputation(0.95, False) - 0.85) < 1e-12
    assert fc.update_reputation(0.05, False) == 0.0
    assert fc.expulsion_rate(1.0) == 0.0
    assert [fc.trusted_sets_required(n) for n in (5, 7, 9)] == [2, 3, 4]
    assert fc.gini([1, 0, 0, 0]) == 0.75
    assert abs(fc.skewness([0, 0, 1]) - 1 / math.sqrt(2)) < 1e-12
    assert abs(fc.kurtosis([0, 1, 0, 1]) + 2) < 1e-12


def check_simulation():
    sim = fc.Simulation(seed=7, byzantine_rate=0.1, invalid_block_rate=0.2)
    first = sim.step()
    assert len(first["panel"]["members"]) % 2 == 1
    assert first["winner"] in first["successful"]
    counts = dict(sim.run(99))
    assert sim.round == 100 and sum(counts.values()) == 100
    sim.verify_chain()
    assert sim.chain_length >= 1
    assert sum(sim.census()) <= 990
    assert 0.0 <= sim.metrics()["gini"] <= 1.0


def check_experiments():
    with tempfile.TemporaryDirectory() as tmp:
        summary = fc.run_experiment("exp1", seed=3, rounds=[50], repetitions=2, out=tmp)
        assert summary["config"]["seed"] == 3
        assert summary["trusted_sets_required"] == 2
        tables = fc.read_frequencies(str(Path(tmp) / "frequencies.csv"))
        assert len(tables) == 2
        assert all(sum(c for _, c in t["table"]["entries"]) == 50 for t in tables)
    config = """
experiment = "exp2"
seed = 1
[partition]
labels = ["VL", "L", "M", "H", "VH"]
population = [40, 25, 15, 6, 3]
[baselines]
participants = 30
rounds = 40
fuzzy_rounds = 60
pow_power = { kind = "pareto", shape = 0.8, scale = 1.0 }
pos_stake = { kind = "pareto", shape = 1.5, scale = 1.0 }
dpos_stake = { kind = "pareto", shape = 3.0, scale = 1.0 }
dpos_reputation = { kind = "uniform", lo = 0.5, hi = 1.0 }
"""
    summary = fc.run_experiment(config=config)
    algorithms = {m["algorithm"] for m in summary["metrics"]}
    assert algorithms == {"pow", "pos", "dpos", "fuzzychain"}
    try:
        fc.run_experiment("exp1", repetitions=0)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid config should raise ValueError")


if __name__ == "__main__":
    for check in (check_partition, check_rules, check_simulation, check_experiments):
        check()
        print(f"ok  {check.__name__}")
    print("smoke test passed")
