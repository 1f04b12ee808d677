import math

import numpy as np
import pytest

from conftest import gw_poisson_survival, random_stoquastic
from stoqsim import oracle
from stoqsim.errors import ValidationError
from stoqsim.guiding import GuidingState, as_regularized, exact_guide, product_guide, uniform_guide
from stoqsim.model import (
    LocalTerm,
    ProblemInstance,
    StoquasticHamiltonian,
    TimModel,
    protocol_params,
    tim_to_local,
)
from stoqsim.rng import SALT_WALK, Stream
from stoqsim.walk import (
    WalkConfig,
    WalkProcess,
    WalkerPopulation,
    choose_start,
    default_lengths,
    envelope_for,
    estimate_acceptance,
    green_row,
    run_population_trajectories,
    run_verdict_trials,
    run_walk,
    soundness_envelope,
    transition_row,
)

X = np.array([[0.0, 1.0], [1.0, 0.0]])


def flip_instance():
    h = StoquasticHamiltonian(1, [LocalTerm((0,), -X)])
    instance = ProblemInstance(h, -1.0, -0.5)
    return h, instance, protocol_params(instance)


def test_green_row_flip():
    h, _, params = flip_instance()
    row = green_row(h, params, -1.0, "0")
    assert row == [("0", pytest.approx(0.5)), ("1", pytest.approx(0.5))]


def test_green_row_diagonal_hamiltonian():
    h = tim_to_local(TimModel(2, [(0, 1, 1.0)], [0.0, 0.0]))
    params = protocol_params(ProblemInstance(h, -1.0, -0.5))
    row = green_row(h, params, -1.0, "00")
    assert len(row) == 1 and row[0][0] == "00"


def test_green_row_matches_dense():
    rng = np.random.default_rng(41)
    for _ in range(6):
        h = random_stoquastic(rng, int(rng.integers(2, 7)))
        total = h.total_norm()
        lam = oracle.ground_energy_exact(h)
        params = protocol_params(ProblemInstance(h, lam, min(lam + 0.3 * total, total)))
        dense_g = oracle.green_dense(h, params.beta, lam)
        from stoqsim.bits import bits_to_index, index_to_bits

        for _ in range(4):
            x = int(rng.integers(0, 1 << h.n))
            row = dict(green_row(h, params, lam, index_to_bits(x, h.n)))
            reconstructed = np.zeros(1 << h.n)
            for key, val in row.items():
                reconstructed[bits_to_index(key)] = val
            np.testing.assert_allclose(reconstructed, dense_g[x], atol=1e-10)


def test_transition_row_uniform_guide_identity():
    h, _, params = flip_instance()
    reg = as_regularized(uniform_guide(1))
    g_row = green_row(h, params, -1.0, "0")
    p_row = transition_row(g_row, reg, "0")
    assert p_row == [("0", pytest.approx(0.5)), ("1", pytest.approx(0.5))]


def test_transition_row_ratio_arithmetic():
    g = GuidingState(1, lambda x: {"0": 0.5, "1": 0.25}[x])
    row = transition_row([("1", 0.5)], as_regularized(g), "0")
    assert row == [("1", pytest.approx(0.25))]


def test_transition_row_stationarity():
    # with the exact-ground guide at lambda_M = lambda, the expected total
    # offspring from pi-weighted states is exactly 1 per walker
    rng = np.random.default_rng(42)
    h = random_stoquastic(rng, 4)
    lam, psi = oracle.ground_state_exact(h)
    total = h.total_norm()
    params = protocol_params(ProblemInstance(h, lam, min(lam + 0.3 * total, total)))
    reg = as_regularized(exact_guide(h))
    process = WalkProcess(h, params, lam, reg)
    from stoqsim.guiding import amplitude_vector

    phi = amplitude_vector(reg, h.n)
    pi = psi * phi / float(psi @ phi)
    mean_offspring = 0.0
    for x in range(1 << h.n):
        mean_offspring += pi[x] * sum(p for _, p in process.rates(x))
    assert mean_offspring == pytest.approx(1.0, abs=1e-9)


def test_step_expected_offspring_and_absorbing():
    h, _, params = flip_instance()
    reg = as_regularized(uniform_guide(1))
    process = WalkProcess(h, params, -1.0, reg)
    rng = Stream(7)
    totals = []
    for _ in range(4000):
        pop = WalkerPopulation(1, {"0": 1})
        totals.append(process.step(pop, rng).total)
    mean = np.mean(totals)
    var = np.var(totals)
    # one walker spawning Poisson(0.5) + Poisson(0.5): total ~ Poisson(1)
    assert mean == pytest.approx(1.0, abs=4 * math.sqrt(1.0 / 4000))
    assert var == pytest.approx(1.0, abs=0.15)
    empty = WalkerPopulation(1, {})
    assert process.step(empty, rng).total == 0


def test_run_walk_extinct_reason():
    h, instance, params = flip_instance()
    reg = as_regularized(uniform_guide(1))
    config = WalkConfig(steps=200, gamma_max=10_000, lambda_m=-1.0, x_m="0", seed=5)
    seen_extinct = False
    for trial in range(50):
        out = run_walk(instance, reg, config, rng=Stream(5, trial, SALT_WALK))
        if out.verdict == "reject":
            assert out.reject_reason in ("extinct",) or out.reject_reason.startswith("overflow")
            if out.reject_reason == "extinct":
                seen_extinct = True
    assert seen_extinct


def test_run_walk_gamma_max_zero_rejects_immediately():
    _, instance, _ = flip_instance()
    reg = as_regularized(uniform_guide(1))
    config = WalkConfig(steps=5, gamma_max=0, lambda_m=-1.0, x_m="0", seed=1)
    out = run_walk(instance, reg, config)
    assert out.verdict == "reject"
    assert out.reject_reason == "overflow-at-step-0"


def test_run_walk_witness_format_rejects():
    _, instance, _ = flip_instance()
    reg = as_regularized(uniform_guide(1))
    # lambda_M above lambda_yes
    out = run_walk(instance, reg, WalkConfig(5, 10, lambda_m=-0.4, x_m="0", seed=1))
    assert out.reject_reason == "witness-format"
    # lambda_M below -J
    out = run_walk(instance, reg, WalkConfig(5, 10, lambda_m=-1.5, x_m="0", seed=1))
    assert out.reject_reason == "witness-format"
    # malformed start string
    out = run_walk(instance, reg, WalkConfig(5, 10, lambda_m=-1.0, x_m="01", seed=1))
    assert out.reject_reason == "witness-format"


def test_run_walk_trajectory_recorded():
    _, instance, _ = flip_instance()
    reg = as_regularized(uniform_guide(1))
    config = WalkConfig(steps=10, gamma_max=100, lambda_m=-1.0, x_m="0", seed=3,
                        record_trajectory=True)
    out = run_walk(instance, reg, config)
    assert out.trajectory is not None
    assert out.trajectory[0] == 1
    assert len(out.trajectory) == 11 or out.reject_reason.startswith("overflow")


def test_flip_survival_matches_branching_oracle():
    # the two-state flip walk at the ground energy is a critical unit-mean
    # Poisson branching process; survival comes from the generating function
    h, instance, params = flip_instance()
    reg = as_regularized(uniform_guide(1))
    steps = 32
    trials = 100000
    config = WalkConfig(steps=steps, gamma_max=50 * steps, lambda_m=-1.0, x_m="0",
                        seed=11, trials=trials)
    est = estimate_acceptance(instance, reg, config)
    expected = gw_poisson_survival(steps)
    sigma = math.sqrt(expected * (1 - expected) / trials)
    assert abs(est.p_hat - expected) <= 4 * sigma


def test_extinction_is_absorbing_in_recorded_totals():
    h, _, params = flip_instance()
    reg = as_regularized(uniform_guide(1))
    traj = run_population_trajectories(h, params, -1.0, reg, "0", 30, 4000, seed=13)
    for row in traj:
        dead = np.flatnonzero(row == 0)
        if dead.size:
            assert np.all(row[dead[0]:] == 0)


def test_estimate_acceptance_determinism_and_all_reject():
    _, instance, _ = flip_instance()
    reg = as_regularized(uniform_guide(1))
    config = WalkConfig(steps=30, gamma_max=0, lambda_m=-1.0, x_m="0", seed=2, trials=500)
    est = estimate_acceptance(instance, reg, config)
    assert est.p_hat == 0.0 and est.stderr == 0.0
    config2 = WalkConfig(steps=30, gamma_max=300, lambda_m=-1.0, x_m="0", seed=2, trials=2000)
    a = estimate_acceptance(instance, reg, config2)
    b = estimate_acceptance(instance, reg, config2)
    assert a == b


def test_threaded_trials_match_serial():
    h, instance, params = flip_instance()
    reg = as_regularized(uniform_guide(1))
    base = dict(steps=25, gamma_max=250, lambda_m=-1.0, x_m="0", seed=9, trials=4000)
    serial = estimate_acceptance(instance, reg, WalkConfig(**base, threads=1))
    threaded = estimate_acceptance(instance, reg, WalkConfig(**base, threads=2))
    assert serial == threaded


def test_dict_engine_matches_kernel_engine():
    rng = np.random.default_rng(43)
    for _ in range(3):
        h = random_stoquastic(rng, int(rng.integers(2, 5)))
        lam = oracle.ground_energy_exact(h)
        total = h.total_norm()
        instance = ProblemInstance(h, lam, min(lam + 0.4 * total, total))
        params = protocol_params(instance)
        reg = as_regularized(uniform_guide(h.n))
        config = WalkConfig(steps=12, gamma_max=60, lambda_m=lam, x_m="0" * h.n,
                            seed=17, trials=40)
        verdicts, steps_out, _, _ = run_verdict_trials(h, params, lam, reg, config)
        for trial in range(config.trials):
            out = run_walk(instance, reg, config, rng=Stream(17, trial, SALT_WALK))
            code = {"accept": 0}.get(out.verdict)
            if code is None:
                code = 1 if out.reject_reason == "extinct" else 2
            assert verdicts[trial] == code
            if code:
                assert steps_out[trial] == out.reject_step


def test_verdict_step_statistics_match_trajectories():
    # with the cutoff disabled, the verdict kernel's per-step population sums
    # equal the trajectory kernel's column sums (same streams, same draws)
    h, instance, params = flip_instance()
    reg = as_regularized(uniform_guide(1))
    config = WalkConfig(steps=12, gamma_max=10**9, lambda_m=-1.0, x_m="0",
                        seed=23, trials=3000, unconstrained=True)
    out = run_verdict_trials(h, params, -1.0, reg, config)
    traj = run_population_trajectories(h, params, -1.0, reg, "0", 12, 3000, seed=23)
    assert np.array_equal(out.gamma_sum, traj.sum(axis=0))
    assert out.alive[0] == 3000


def test_soundness_envelope_values():
    env = soundness_envelope(4, guide_norm=1.0, phi_xm=1.0, gap=0.1, steps=200)
    assert env.specific == pytest.approx(0.9**200)
    assert env.generic == pytest.approx(2.0**7 * 0.9**200)
    env0 = soundness_envelope(4, 2.0, 0.5, gap=0.1, steps=0)
    assert env0.specific == pytest.approx(4.0)
    env_nogap = soundness_envelope(4, 2.0, 0.5, gap=0.0, steps=50)
    assert env_nogap.specific == pytest.approx(4.0)


def test_no_instance_acceptance_below_envelope():
    rng = np.random.default_rng(44)
    h = random_stoquastic(rng, 4)
    lam = oracle.ground_energy_exact(h)
    total = h.total_norm()
    lambda_yes = lam - 0.4 * total
    if lambda_yes < -total:
        lambda_yes = -total
    instance = ProblemInstance(h, lambda_yes, lam)
    params = protocol_params(instance)
    reg = as_regularized(uniform_guide(h.n))
    x_m = choose_start(h, reg, params)
    for steps in (25, 50):
        env = envelope_for(h, reg, x_m, params.decision_gap, steps)
        config = WalkConfig(steps=steps, gamma_max=10 * steps, lambda_m=lambda_yes,
                            x_m=x_m, seed=19, trials=30000, threads=2)
        est = estimate_acceptance(instance, reg, config)
        assert est.p_hat <= min(1.0, env.specific)


def test_unconstrained_mode_skips_cutoff():
    _, instance, _ = flip_instance()
    reg = as_regularized(uniform_guide(1))
    config = WalkConfig(steps=8, gamma_max=0, lambda_m=-1.0, x_m="0", seed=21,
                        unconstrained=True, record_trajectory=True)
    out = run_walk(instance, reg, config)
    # with the cutoff disabled a zero gamma_max cannot trigger overflow
    assert out.reject_reason != "overflow-at-step-0"
    assert out.trajectory[0] == 1


def test_choose_start_flip_lexicographic():
    h, _, params = flip_instance()
    assert choose_start(h, as_regularized(uniform_guide(1)), params) == "0"


def test_choose_start_oracle_membership():
    rng = np.random.default_rng(45)
    h = random_stoquastic(rng, 4)
    params = protocol_params(ProblemInstance(h, -h.total_norm(), h.total_norm()))
    reg = as_regularized(uniform_guide(4))
    x_m = choose_start(h, reg, params)
    res = oracle.pi_and_good_set(h, params, reg)
    from stoqsim.bits import bits_to_index

    assert bits_to_index(x_m) in set(int(s) for s in res.good_states)


def test_choose_start_product_deterministic_distribution():
    # heuristic path exercised at n > 12 where the oracle is unavailable
    g = product_guide([1.0, 0.0] + [0.0] * 11)
    reg = as_regularized(g)
    h = StoquasticHamiltonian(13, [LocalTerm((0,), -X)])
    x = choose_start(h, reg, None)
    assert x == "10" + "0" * 11


def test_default_lengths():
    steps, gamma_max = default_lengths(4, 0.25, safety_c=3)
    assert steps == 48
    assert gamma_max == 480
    steps, _ = default_lengths(2, 100.0)
    assert steps == 1
    with pytest.raises(ValidationError):
        default_lengths(4, 0.0)


def test_walk_config_validation():
    with pytest.raises(ValidationError):
        WalkConfig(steps=-1, gamma_max=1, lambda_m=0.0, x_m="0")
    with pytest.raises(ValidationError):
        WalkConfig(steps=1, gamma_max=-1, lambda_m=0.0, x_m="0")
    with pytest.raises(ValidationError):
        WalkConfig(steps=1, gamma_max=1, lambda_m=0.0, x_m="0", trials=0)


def test_population_container():
    pop = WalkerPopulation(2, {"01": 2, "10": 0})
    assert pop.total == 2
    assert pop.occupations == {"01": 2}
    with pytest.raises(ValidationError):
        WalkerPopulation(2, {"0": 1})
