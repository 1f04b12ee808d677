import json
import math

import numpy as np
import pytest

from stoqsim import kernels, oracle
from stoqsim.errors import DiagnosticError, SizeError, ValidationError
from stoqsim.ising import (
    ClassicalIsingModel,
    energy,
    estimate_partition,
    estimate_tim_partition,
    ising_from_json,
    ising_to_json,
    partition_exact_enum,
    sw_sweep,
)
from stoqsim.model import TimModel, tim_to_local
from stoqsim.rng import Stream


def test_model_validation():
    with pytest.raises(ValidationError):
        ClassicalIsingModel(2, [(0, 1, -0.5)])
    with pytest.raises(ValidationError):
        ClassicalIsingModel(2, [(1, 0, 0.5)])
    with pytest.raises(ValidationError):
        ClassicalIsingModel(2, [(0, 1, 0.5), (0, 1, 0.2)])


def test_energy_examples():
    pair = ClassicalIsingModel(2, [(0, 1, 1.0)])
    assert energy(pair, [1, 1]) == pytest.approx(1.0)
    assert energy(pair, [1, -1]) == pytest.approx(-1.0)
    free = ClassicalIsingModel(3, [])
    assert energy(free, [1, -1, 1]) == 0.0
    with pytest.raises(ValidationError):
        energy(pair, [1, 1, 1])
    with pytest.raises(ValidationError):
        energy(pair, [1, 0])


def test_partition_exact_enum_values():
    one = ClassicalIsingModel(1, [])
    assert partition_exact_enum(one) == pytest.approx(math.log(2.0))
    pair = ClassicalIsingModel(2, [(0, 1, 1.0)])
    assert math.exp(partition_exact_enum(pair)) == pytest.approx(
        2 * math.e + 2 * math.exp(-1.0)
    )
    shifted = ClassicalIsingModel(2, [(0, 1, 1.0)], log_prefactor=1.5)
    assert partition_exact_enum(shifted) == pytest.approx(partition_exact_enum(pair) + 1.5)


def test_partition_exact_enum_matches_direct_sum():
    rng = np.random.default_rng(61)
    for _ in range(5):
        n = int(rng.integers(2, 11))
        edges = []
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.4:
                    edges.append((i, j, float(rng.uniform(0, 1))))
        model = ClassicalIsingModel(n, edges)
        # independent route: explicit configuration sum
        total = 0.0
        for state in range(1 << n):
            sigma = 1.0 - 2.0 * ((state >> np.arange(n)) & 1)
            total += math.exp(sum(w * sigma[i] * sigma[j] for i, j, w in edges))
        assert partition_exact_enum(model) == pytest.approx(math.log(total), abs=1e-9)


def test_partition_enum_size_limit():
    with pytest.raises(SizeError):
        partition_exact_enum(ClassicalIsingModel(25, []))


def test_sw_sweep_beta_zero_uniform():
    model = ClassicalIsingModel(4, [(0, 1, 5.0), (2, 3, 5.0)])
    rng = Stream(3)
    seen = set()
    config = np.ones(4, dtype=np.int8)
    for _ in range(200):
        config = sw_sweep(model, 0.0, config, rng)
        seen.add(tuple(int(s) for s in config))
    assert len(seen) == 16  # every configuration reachable at scale zero


def test_sw_sweep_strong_coupling_locks():
    # once the pair aligns, the saturated bond keeps it in one cluster forever
    model = ClassicalIsingModel(2, [(0, 1, 60.0)])
    rng = Stream(5)
    config = np.array([1, -1], dtype=np.int8)
    trace = []
    for _ in range(300):
        config = sw_sweep(model, 1.0, config, rng)
        trace.append(config[0] == config[1])
    first = trace.index(True)
    assert first < 50
    assert all(trace[first:])


def test_sw_sweep_invariance_chi_square():
    # empirical distribution over the four states of a coupled pair matches
    # the Gibbs weights (chi-square p-value above 0.01)
    model = ClassicalIsingModel(2, [(0, 1, 0.8)])
    rng = Stream(7)
    config = np.ones(2, dtype=np.int8)
    counts = {}
    sweeps = 300000 if kernels.BACKEND == "compiled" else 30000
    for _ in range(sweeps):
        config = sw_sweep(model, 1.0, config, rng)
        key = (int(config[0]), int(config[1]))
        counts[key] = counts.get(key, 0) + 1
    weights = {}
    for s0 in (1, -1):
        for s1 in (1, -1):
            weights[(s0, s1)] = math.exp(0.8 * s0 * s1)
    z = sum(weights.values())
    chi2 = 0.0
    for key, w in weights.items():
        expected = sweeps * w / z
        chi2 += (counts.get(key, 0) - expected) ** 2 / expected
    # 3 dof: chi2 < 11.34 is p > 0.01
    assert chi2 < 11.34


def test_estimate_partition_no_edges_exact():
    model = ClassicalIsingModel(8, [], log_prefactor=0.25)
    est = estimate_partition(model, 0.1, seed=1)
    assert est.log_value == pytest.approx(8 * math.log(2.0) + 0.25)
    assert est.diagnostics.get("exact") is True


def test_estimate_partition_pair_accuracy():
    model = ClassicalIsingModel(2, [(0, 1, 1.0)])
    exact = partition_exact_enum(model)
    ok = 0
    for rep in range(10):
        est = estimate_partition(model, 0.05, seed=100 + rep)
        if abs(math.exp(est.log_value - exact) - 1.0) <= 0.05:
            ok += 1
    assert ok >= 7


def test_estimate_partition_medium_model():
    rng = np.random.default_rng(62)
    edges = [(i, i + 1, float(rng.uniform(0.2, 1.0))) for i in range(17)]
    edges += [(0, 9, 0.5), (3, 14, 0.4)]
    model = ClassicalIsingModel(18, edges, log_prefactor=-0.7)
    exact = partition_exact_enum(model)
    est = estimate_partition(model, 0.1, seed=200)
    assert abs(math.exp(est.log_value - exact) - 1.0) <= 0.1
    assert est.confidence == pytest.approx(2.0 / 3.0)


def test_estimate_partition_determinism():
    model = ClassicalIsingModel(6, [(0, 1, 0.9), (1, 2, 0.4), (3, 4, 1.1), (4, 5, 0.2), (0, 5, 0.6)])
    a = estimate_partition(model, 0.1, seed=42)
    b = estimate_partition(model, 0.1, seed=42)
    assert a.log_value == b.log_value
    assert a.diagnostics["passes"] == b.diagnostics["passes"]


def test_estimate_partition_relabeling_invariance():
    # exact enumeration is label-invariant; the estimator agrees within its
    # combined tolerance on a relabeled copy
    edges = [(0, 1, 0.8), (1, 2, 0.5), (2, 3, 0.9), (0, 3, 0.3)]
    model = ClassicalIsingModel(4, edges)
    perm = [2, 0, 3, 1]
    relabeled_edges = []
    for i, j, w in edges:
        a, b = perm[i], perm[j]
        relabeled_edges.append((min(a, b), max(a, b), w))
    relabeled = ClassicalIsingModel(4, relabeled_edges)
    assert partition_exact_enum(model) == pytest.approx(
        partition_exact_enum(relabeled), abs=1e-10
    )
    delta = 0.05
    e1 = estimate_partition(model, delta, seed=7)
    e2 = estimate_partition(relabeled, delta, seed=7)
    assert abs(math.exp(e1.log_value - e2.log_value) - 1.0) <= 2 * delta


def test_estimate_partition_ladder_collapse_diagnostic():
    # a single rung on a strongly coupled model cannot carry the weights
    model = ClassicalIsingModel(12, [(i, j, 4.0) for i in range(12) for j in range(i + 1, 12)])
    with pytest.raises(DiagnosticError):
        estimate_partition(model, 0.3, seed=3, rungs=1)


def test_estimate_partition_custom_rungs_refine():
    model = ClassicalIsingModel(4, [(0, 1, 1.2), (1, 2, 1.0), (2, 3, 0.8)])
    exact = partition_exact_enum(model)
    est = estimate_partition(model, 0.1, seed=11, rungs=3)
    assert est.diagnostics["refinements"] >= 1
    assert abs(math.exp(est.log_value - exact) - 1.0) <= 0.1


def test_estimate_tim_partition_small():
    tim = TimModel(1, [], [1.0])
    exact = oracle.partition_exact(tim_to_local(tim))
    est = estimate_tim_partition(tim, 0.2, seed=9)
    assert abs(math.exp(est.log_value - exact.log_value) - 1.0) <= 0.2
    assert est.diagnostics["trotter_steps"] >= 2
    assert est.diagnostics["error_budget"] == {"trotter": 0.1, "estimator": 0.1}


def test_estimate_tim_partition_floored_fields():
    tim = TimModel(2, [(0, 1, 0.5)], [0.0, 0.4])
    est = estimate_tim_partition(tim, 0.3, seed=13)
    assert est.diagnostics["floored_qubits"] == [0]
    assert est.diagnostics["field_perturbation_norm"] == pytest.approx(0.15)
    # classical reference: flooring plus both stages stay within the combined
    # budget delta + n * floor against the h = 0 classical value
    classical = TimModel(2, [(0, 1, 0.5)], [0.0, 0.4])
    z = oracle.partition_exact(tim_to_local(classical))
    combined = math.exp(0.3 + est.diagnostics["field_perturbation_norm"]) - 1.0 + 0.3
    assert abs(math.exp(est.log_value - z.log_value) - 1.0) <= combined


def test_tim_pipeline_rejects_bad_input():
    with pytest.raises(ValidationError):
        estimate_tim_partition(TimModel(1, [], [-0.2], ferromagnetic=False), 0.1, seed=1)
    with pytest.raises(ValidationError):
        estimate_tim_partition(TimModel(1, [], [1.0]), 1.5, seed=1)


def test_json_round_trip(tmp_path):
    model = ClassicalIsingModel(3, [(0, 2, 0.7)], log_prefactor=-2.0)
    data = ising_to_json(model)
    again = ising_from_json(json.loads(json.dumps(data)))
    assert again.edges == model.edges
    assert again.log_prefactor == model.log_prefactor
