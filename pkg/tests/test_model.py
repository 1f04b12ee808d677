import json

import numpy as np
import pytest

from conftest import kron_chain, random_stoquastic
from stoqsim import oracle
from stoqsim.errors import (
    DegenerateInstanceError,
    NotStoquasticError,
    ValidationError,
)
from stoqsim.model import (
    LocalTerm,
    ProblemInstance,
    StoquasticHamiltonian,
    TimModel,
    hamiltonian_to_json,
    load_model,
    model_from_json,
    is_stoquastic,
    protocol_params,
    tim_to_json,
    tim_to_local,
)

X = np.array([[0.0, 1.0], [1.0, 0.0]])
Z = np.diag([1.0, -1.0])


def test_minus_x_is_stoquastic():
    assert is_stoquastic(LocalTerm((0,), -X))


def test_plus_x_is_not_stoquastic():
    assert not is_stoquastic(LocalTerm((0,), X))


def test_tim_field_term_stoquastic_iff_nonnegative():
    assert is_stoquastic(LocalTerm((0,), -0.7 * X))
    assert not is_stoquastic(LocalTerm((0,), 0.7 * X))


def test_non_hermitian_block_rejected():
    with pytest.raises(ValidationError):
        LocalTerm((0,), [[0.0, 1.0], [0.5, 0.0]])


def test_term_support_validation():
    with pytest.raises(ValidationError):
        LocalTerm((0, 0), np.zeros((4, 4)))
    with pytest.raises(ValidationError):
        LocalTerm((1, 0), np.zeros((4, 4)))
    with pytest.raises(ValidationError):
        LocalTerm((0,), np.zeros((4, 4)))


def test_hamiltonian_rejects_positive_offdiagonal():
    with pytest.raises(NotStoquasticError):
        StoquasticHamiltonian(1, [LocalTerm((0,), X)])


def test_protocol_params_single_flip():
    h = StoquasticHamiltonian(1, [LocalTerm((0,), -X)])
    params = protocol_params(ProblemInstance(h, -1.0, -0.5))
    assert params.total_norm_J == pytest.approx(1.0)
    assert params.beta == pytest.approx(0.5)
    assert params.decision_gap == pytest.approx(0.25)
    assert not params.trivial


def test_protocol_params_tim_three_unit_terms():
    h = tim_to_local(TimModel(2, [(0, 1, 1.0)], [1.0, 1.0]))
    params = protocol_params(ProblemInstance(h, -2.3, -2.0))
    assert params.total_norm_J == pytest.approx(3.0)
    assert params.beta == pytest.approx(1.0 / 6.0)


def test_empty_gap_rejected():
    h = StoquasticHamiltonian(1, [LocalTerm((0,), -X)])
    with pytest.raises(ValidationError):
        ProblemInstance(h, -0.5, -0.5)


def test_zero_norm_degenerate():
    h = StoquasticHamiltonian(1, [LocalTerm((0,), np.zeros((2, 2)))])
    with pytest.raises(DegenerateInstanceError):
        protocol_params(ProblemInstance(h, -0.5, 0.5))


def test_out_of_range_thresholds_flagged_trivial():
    h = StoquasticHamiltonian(1, [LocalTerm((0,), -X)])
    params = protocol_params(ProblemInstance(h, -2.0, -0.5))
    assert params.trivial
    params = protocol_params(ProblemInstance(h, -0.5, 2.0))
    assert params.trivial


def test_tim_to_local_classical_only():
    h = tim_to_local(TimModel(2, [(0, 1, 1.0)], [0.0, 0.0]))
    assert h.num_terms == 1
    assert h.terms[0].support == (0, 1)


def test_tim_to_local_single_field():
    h = tim_to_local(TimModel(1, [], [1.0]))
    assert h.num_terms == 1
    np.testing.assert_allclose(h.terms[0].block, -X)


def test_tim_to_local_dense_matches_kron():
    h = tim_to_local(TimModel(2, [(0, 1, 1.0)], [1.0, 1.0]))
    dense = oracle.build_dense(h)
    expected = -kron_chain([Z, Z]) - kron_chain([X, np.eye(2)]) - kron_chain([np.eye(2), X])
    np.testing.assert_allclose(dense, expected, atol=1e-12)


def test_tim_to_local_dense_matches_kron_random():
    rng = np.random.default_rng(3)
    for _ in range(8):
        n = int(rng.integers(2, 7))
        couplings = []
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < 0.6:
                    couplings.append((u, v, float(rng.uniform(0, 1))))
        fields = rng.uniform(0, 1, n)
        tim = TimModel(n, couplings, fields)
        dense = oracle.build_dense(tim_to_local(tim))
        expected = np.zeros_like(dense)
        for u, v, j in couplings:
            ops = [np.eye(2)] * n
            ops[u] = Z
            ops_v = list(ops)
            ops_v[v] = Z
            ops[v] = Z
            expected -= j * kron_chain(ops)
        for u in range(n):
            ops = [np.eye(2)] * n
            ops[u] = X
            expected -= fields[u] * kron_chain(ops)
        np.testing.assert_allclose(dense, expected, atol=1e-12)


def test_tim_negative_field_rejected_with_gauge_fix():
    tim = TimModel(2, [(0, 1, 1.0)], [1.0, -1.0])
    with pytest.raises(NotStoquasticError):
        tim_to_local(tim)
    flipped = tim.flip_fields([1])
    assert flipped.is_stoquastic
    h = tim_to_local(flipped)
    assert all(is_stoquastic(t) for t in h.terms)


def test_boltzmann_nonnegativity_invariant():
    rng = np.random.default_rng(9)
    for _ in range(6):
        h = random_stoquastic(rng, int(rng.integers(2, 6)))
        dense = oracle.build_dense(h)
        w, v = np.linalg.eigh(dense)
        boltz = (v * np.exp(-w)) @ v.T
        assert boltz.min() >= -1e-9


def test_json_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    h = random_stoquastic(rng, 3)
    path = tmp_path / "model.json"
    path.write_text(json.dumps(hamiltonian_to_json(h)))
    h2 = load_model(path)
    np.testing.assert_allclose(oracle.build_dense(h), oracle.build_dense(h2), atol=1e-15)

    tim = TimModel(3, [(0, 2, 0.5)], [0.1, 0.2, 0.3])
    path2 = tmp_path / "tim.json"
    path2.write_text(json.dumps(tim_to_json(tim)))
    tim2 = load_model(path2)
    assert tim2.couplings == tim.couplings
    np.testing.assert_allclose(tim2.fields, tim.fields)


def test_model_json_validation():
    with pytest.raises(ValidationError):
        model_from_json({"terms": []})
    with pytest.raises(ValidationError):
        model_from_json({"n": 2})
    with pytest.raises(ValidationError):
        model_from_json({"n": 2, "terms": [{"qubits": [0]}]})


def test_missing_model_file():
    with pytest.raises(ValidationError):
        load_model("/nonexistent/path.json")


def test_tim_duplicate_coupling_rejected():
    with pytest.raises(ValidationError):
        TimModel(3, [(0, 1, 1.0), (0, 1, 0.5)], [0, 0, 0])
