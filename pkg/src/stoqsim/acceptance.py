"""Release-gate criteria, runnable via `stoqsim fixtures` or pytest.

Each criterion uses a frozen seed and a pre-registered tolerance band, so a
run is deterministic end to end; `quick` trades trial counts for speed with
correspondingly looser thresholds.  Criteria report structured details and an
overall pass flag; statistical failures are data, not exceptions.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .guiding import as_regularized, exact_guide, padded_guide, product_guide, uniform_guide
from .ising import ClassicalIsingModel, estimate_partition, estimate_tim_partition, partition_exact_enum
from .model import (
    LocalTerm,
    ProblemInstance,
    StoquasticHamiltonian,
    TimModel,
    protocol_params,
    tim_to_local,
)
from .trotter import (
    TrotterPlan,
    _expm_sym,
    map_to_classical,
    plan_trotter,
    trotter_error_operator,
    trotterized_trace_exact,
)
from .walk import (
    WalkConfig,
    choose_start,
    envelope_for,
    estimate_acceptance,
    run_population_trajectories,
    run_verdict_trials,
)

THREADS = 2

# one-sided binomial acceptance lines at 95% against success probability 2/3
BINOM_PASS_30 = 16  # P(K <= 15 | n=30, p=2/3) = 0.0435
BINOM_PASS_10 = 4   # P(K <= 3  | n=10, p=2/3) = 0.0197


@dataclass
class CriterionResult:
    ident: str
    name: str
    passed: bool
    runtime_s: float
    details: dict = field(default_factory=dict)


def random_stoquastic(rng, n, max_terms=4, max_k=3):
    """Random k-local stoquastic Hamiltonian with mixed-sign diagonals."""
    terms = []
    n_terms = int(rng.integers(1, max_terms + 1))
    for _ in range(n_terms):
        k = int(rng.integers(1, min(max_k, n) + 1))
        support = sorted(rng.choice(n, size=k, replace=False).tolist())
        dim = 1 << k
        diag = rng.uniform(-1.0, 1.0, dim)
        off = np.zeros((dim, dim))
        for i in range(dim):
            for j in range(i + 1, dim):
                if rng.random() < 0.7:
                    off[i, j] = -rng.uniform(0.0, 1.0)
        terms.append(LocalTerm(support, np.diag(diag) + off + off.T))
    return StoquasticHamiltonian(n, terms)


def random_ferro_ising(rng, n_spins):
    """Connected random ferromagnetic model: a random tree plus extra edges."""
    edges = {}
    order = rng.permutation(n_spins)
    for i in range(1, n_spins):
        a = int(order[i])
        b = int(order[int(rng.integers(0, i))])
        edges[(min(a, b), max(a, b))] = float(rng.uniform(0.05, 1.0))
    extra = int(rng.integers(0, n_spins))
    for _ in range(extra):
        a, b = rng.choice(n_spins, size=2, replace=False)
        key = (int(min(a, b)), int(max(a, b)))
        if key not in edges:
            edges[key] = float(rng.uniform(0.05, 0.8))
    prefactor = float(rng.uniform(-1.0, 1.0))
    return ClassicalIsingModel(n_spins, [(i, j, w) for (i, j), w in edges.items()], prefactor)


def random_ferro_tim(rng, n, j_scale=1.0, h_lo=0.1, h_hi=1.0):
    couplings = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < 0.8:
                couplings.append((u, v, float(rng.uniform(0.0, j_scale))))
    fields = rng.uniform(h_lo, h_hi, n)
    return TimModel(n, couplings, fields)


_MOMENT_CACHE = {}


def _moment_stats(quick):
    """Shared Lemma-1 data: per-(instance, guide) trajectory statistics.

    One unconstrained run provides every step's first/second-moment samples,
    consumed by criteria 1 and 2.
    """
    if quick in _MOMENT_CACHE:
        return _MOMENT_CACHE[quick]
    rng = np.random.default_rng(20240601)
    n_instances = 5 if quick else 20
    trials = 20000 if quick else 100000
    steps = 6
    rows = []
    for i in range(n_instances):
        n = int(rng.integers(2, 7))
        h = random_stoquastic(rng, n)
        lam, _ = oracle.ground_state_exact(h)
        total = h.total_norm()
        instance = ProblemInstance(h, lam, min(lam + 0.5 * total, total))
        params = protocol_params(instance)
        # half the instances verify the formulas away from the critical point
        lambda_m = lam if i % 2 == 0 else max(lam - 0.2 * total, -total)
        for guide_name in ("uniform", "exact"):
            guide = uniform_guide(h.n) if guide_name == "uniform" else exact_guide(h)
            reg = as_regularized(guide)
            x_m = choose_start(h, reg, params)
            traj = run_population_trajectories(
                h, params, lambda_m, reg, x_m, steps, trials, seed=31000 + i, threads=THREADS
            )
            expected = [
                oracle.expected_population_exact(h, params, lambda_m, reg, x_m, t)
                for t in range(steps + 1)
            ]
            second_l = 4
            expected_second = oracle.second_moment_exact(
                h, params, lambda_m, reg, x_m, second_l
            )
            gamma = traj.astype(np.float64)
            gsq = gamma[:, second_l] ** 2
            rows.append(
                {
                    "instance": i,
                    "n": n,
                    "guide": guide_name,
                    "lambda_m_is_ground": lambda_m == lam,
                    "mean": gamma.mean(axis=0).tolist(),
                    "se": (gamma.std(axis=0) / math.sqrt(trials)).tolist(),
                    "expected": expected,
                    "second_L": second_l,
                    "second_mean": float(gsq.mean()),
                    "second_se": float(gsq.std() / math.sqrt(trials)),
                    "second_expected": expected_second,
                }
            )
    _MOMENT_CACHE[quick] = (rows, trials)
    return _MOMENT_CACHE[quick]


def criterion_1(quick=False):
    """Lemma-1 first moment on random instances, both guide families."""
    t0 = time.time()
    rows, trials = _moment_stats(quick)
    worst = 0.0
    failures = []
    for row in rows:
        for t in range(1, 7):
            se = max(row["se"][t], 1e-12)
            dev = abs(row["mean"][t] - row["expected"][t]) / se
            worst = max(worst, dev)
            if dev > 4.0:
                failures.append({"instance": row["instance"], "guide": row["guide"], "t": t, "dev": dev})
    runtime = time.time() - t0
    limit = 300.0
    passed = not failures and runtime <= limit
    return CriterionResult(
        "criterion-1",
        "first moment matches the dense propagator formula (4 SE)",
        passed,
        runtime,
        {
            "instances": len(rows) // 2,
            "trials": trials,
            "worst_deviation_sigma": worst,
            "failures": failures,
            "runtime_limit_s": limit,
        },
    )


def criterion_2(quick=False):
    """Lemma-1 second moment, plus the two-state closed form L + 1."""
    t0 = time.time()
    rows, trials = _moment_stats(quick)
    worst = 0.0
    failures = []
    for row in rows:
        se = max(row["second_se"], 1e-12)
        dev = abs(row["second_mean"] - row["second_expected"]) / se
        worst = max(worst, dev)
        if dev > 5.0:
            failures.append({"instance": row["instance"], "guide": row["guide"], "dev": dev})

    # flip-only fixture: E[Gamma_L^2] = L + 1 exactly
    h = StoquasticHamiltonian(1, [LocalTerm((0,), [[0.0, -1.0], [-1.0, 0.0]])])
    instance = ProblemInstance(h, -1.0, -0.5)
    params = protocol_params(instance)
    reg = as_regularized(uniform_guide(1))
    closed_form_ok = True
    for L in range(0, 6):
        val = oracle.second_moment_exact(h, params, -1.0, reg, "0", L)
        if abs(val - (L + 1)) > 1e-9:
            closed_form_ok = False
    fixture_trials = 20000 if quick else 100000
    traj = run_population_trajectories(
        h, params, -1.0, reg, "0", 5, fixture_trials, seed=32000, threads=THREADS
    )
    gsq = traj[:, 5].astype(np.float64) ** 2
    fixture_dev = abs(gsq.mean() - 6.0) / max(gsq.std() / math.sqrt(fixture_trials), 1e-12)
    runtime = time.time() - t0
    passed = not failures and closed_form_ok and fixture_dev <= 5.0
    return CriterionResult(
        "criterion-2",
        "second moment matches the two-sided propagator sum (5 SE)",
        passed,
        runtime,
        {
            "worst_deviation_sigma": worst,
            "failures": failures,
            "closed_form_L_plus_1": closed_form_ok,
            "fixture_deviation_sigma": fixture_dev,
        },
    )


def criterion_3(quick=False):
    """Stationarity: exact guide at the true ground energy keeps E[Gamma] = 1."""
    t0 = time.time()
    steps = 20 if quick else 50
    trials = 20000 if quick else 100000
    fixtures = [
        StoquasticHamiltonian(1, [LocalTerm((0,), [[0.0, -1.0], [-1.0, 0.0]])]),
        tim_to_local(TimModel(2, [(0, 1, 1.0)], [1.0, 1.0])),
        random_stoquastic(np.random.default_rng(77), 3),
    ]
    failures = []
    worst = 0.0
    for idx, h in enumerate(fixtures):
        lam, _ = oracle.ground_state_exact(h)
        total = h.total_norm()
        instance = ProblemInstance(h, lam, min(lam + 0.5 * total, total))
        params = protocol_params(instance)
        reg = as_regularized(exact_guide(h))
        x_m = choose_start(h, reg, params)
        traj = run_population_trajectories(
            h, params, lam, reg, x_m, steps, trials, seed=33000 + idx, threads=THREADS
        )
        gamma = traj.astype(np.float64)
        mean = gamma.mean(axis=0)
        se = gamma.std(axis=0) / math.sqrt(trials)
        for t in range(1, steps + 1):
            dev = abs(mean[t] - 1.0) / max(se[t], 1e-12)
            worst = max(worst, dev)
            if dev > 4.0:
                failures.append({"fixture": idx, "t": t, "dev": dev})
    runtime = time.time() - t0
    return CriterionResult(
        "criterion-3",
        "martingale population: E[Gamma_t] = 1 under the exact guide (4 SE)",
        not failures,
        runtime,
        {"steps": steps, "trials": trials, "worst_deviation_sigma": worst, "failures": failures},
    )


def _make_no_instance(rng, gap_target):
    """No-instance with the requested decision gap: thresholds hug the ground
    energy from below so Merlin's best witness decays at exactly the gap."""
    while True:
        n = int(rng.integers(3, 6))
        h = random_stoquastic(rng, n)
        total = h.total_norm()
        lam, _ = oracle.ground_state_exact(h)
        lambda_no = lam
        lambda_yes = lam - 2.0 * total * gap_target
        if lambda_yes >= -total:
            instance = ProblemInstance(h, lambda_yes, lambda_no)
            return instance, protocol_params(instance)


def _soundness_trials(env, quick):
    base = 10000 if quick else 30000
    cap = 300000 if quick else 2000000
    if env >= 5e-5:
        return int(min(cap, max(base, math.ceil(200.0 / env))))
    # deep tail: a single accept would already be counted against a bound
    # below 1/T, so cap trials to keep the false-alarm rate ~ T * env / 2
    return int(min(base, max(200, math.floor(0.01 / env))))


def criterion_4(quick=False):
    """Soundness: no-instance acceptance under the analytic envelope with the
    right exponential decay rate."""
    t0 = time.time()
    rng = np.random.default_rng(20240604)
    n_instances = 3 if quick else 10
    gaps = np.linspace(0.05, 0.3, n_instances)
    steps_grid = [25, 50, 100, 200]
    instances_out = []
    failures = []
    for i, gap_target in enumerate(gaps):
        instance, params = _make_no_instance(rng, float(gap_target))
        h = instance.hamiltonian
        gap = params.decision_gap
        lambda_m = instance.lambda_yes  # Merlin's least-decaying legal energy
        reg = as_regularized(uniform_guide(h.n))
        x_m = choose_start(h, reg, params)
        points = []
        for L in steps_grid:
            env = envelope_for(h, reg, x_m, gap, L)
            trials = _soundness_trials(env.specific, quick)
            config = WalkConfig(
                steps=L, gamma_max=10 * L, lambda_m=lambda_m, x_m=x_m,
                seed=34000 + 17 * i + L, trials=trials, threads=THREADS,
            )
            est = estimate_acceptance(instance, reg, config)
            capped = min(1.0, env.specific)
            if est.p_hat > capped:
                failures.append({"instance": i, "L": L, "p_hat": est.p_hat, "envelope": capped})
            points.append(
                {"L": L, "p_hat": est.p_hat, "accepts": est.accepts, "trials": trials,
                 "envelope": env.specific, "envelope_generic": env.generic}
            )
        # weighted least squares decay rate over well-measured points
        xs = [p["L"] for p in points if p["accepts"] >= 5]
        ys = [math.log(p["p_hat"]) for p in points if p["accepts"] >= 5]
        ws = [p["accepts"] for p in points if p["accepts"] >= 5]
        slope = None
        slope_sigma = None
        if len(xs) >= 2:
            xs, ys, ws = np.array(xs, float), np.array(ys), np.array(ws, float)
            xbar = np.sum(ws * xs) / np.sum(ws)
            ybar = np.sum(ws * ys) / np.sum(ws)
            sxx = np.sum(ws * (xs - xbar) ** 2)
            slope = float(np.sum(ws * (xs - xbar) * (ys - ybar)) / sxx)
            slope_sigma = float(1.0 / math.sqrt(sxx))
            if slope > -gap + 3.0 * slope_sigma:
                failures.append(
                    {"instance": i, "slope": slope, "bound": -gap, "sigma": slope_sigma}
                )
        instances_out.append(
            {"instance": i, "n": h.n, "gap": gap, "points": points,
             "slope": slope, "slope_sigma": slope_sigma}
        )
    runtime = time.time() - t0
    limit = 600.0
    passed = not failures and runtime <= limit
    return CriterionResult(
        "criterion-4",
        "soundness decay: p_hat under the envelope with slope <= -gap + 3 sigma",
        passed,
        runtime,
        {"instances": instances_out, "failures": failures, "runtime_limit_s": limit},
    )


def criterion_5(quick=False):
    """Steady-state mass of the good start set, and start-choice membership."""
    t0 = time.time()
    rng = np.random.default_rng(20240605)
    n_instances = 4 if quick else 12
    checked = 0
    failures = []
    for i in range(n_instances):
        n = int(rng.integers(2, 7))
        h = random_stoquastic(rng, n)
        params = protocol_params(ProblemInstance(h, -h.total_norm(), h.total_norm()))
        p_vec = rng.uniform(0.2, 0.8, n)
        basis = product_guide((rng.random(n) < 0.5).astype(float))
        guides = [
            ("uniform", uniform_guide(n)),
            ("exact", exact_guide(h)),
            ("padded-product", padded_guide(product_guide(p_vec))[0]),
            ("padded-basis", padded_guide(basis)[0]),
        ]
        for name, guide in guides:
            res = oracle.pi_and_good_set(h, params, guide)
            checked += 1
            if res.pi_good_mass < 0.5 - 1e-9:
                failures.append({"instance": i, "guide": name, "mass": res.pi_good_mass})
            if abs(float(np.sum(res.pi)) - 1.0) > 1e-9:
                failures.append({"instance": i, "guide": name, "pi_sum": float(np.sum(res.pi))})
            reg = as_regularized(guide)
            x_m = choose_start(h, reg, params)
            reg_set = oracle.pi_and_good_set(h, params, reg)
            from .bits import bits_to_index

            if bits_to_index(x_m) not in set(int(s) for s in reg_set.good_states):
                failures.append({"instance": i, "guide": name, "start_not_good": x_m})
    runtime = time.time() - t0
    return CriterionResult(
        "criterion-5",
        "good-set mass >= 1/2 and oracle start choice lies in the good set",
        not failures,
        runtime,
        {"checked": checked, "failures": failures},
    )


def criterion_6(quick=False):
    """Splitting remainder: reconstruction identity and the 12 rho^3 bound."""
    t0 = time.time()
    rng = np.random.default_rng(20240606)
    count = 30 if quick else 100
    worst_ratio = 0.0
    worst_recon = 0.0
    for _ in range(count):
        dim = int(rng.integers(2, 17))
        a = rng.normal(size=(dim, dim))
        a = (a + a.T) / 2.0
        b = rng.normal(size=(dim, dim))
        b = (b + b.T) / 2.0
        wa = np.linalg.eigvalsh(a)
        wb = np.linalg.eigvalsh(b)
        rho = float(wa[-1] - wa[0] + wb[-1] - wb[0])
        t_step = 1.0 / (2.0 * rho)
        d, norm = trotter_error_operator(a, b, t_step)
        half = _expm_sym(a * (t_step / 2.0))
        lhs = half @ _expm_sym(b * t_step) @ half
        rhs = _expm_sym((a + b) * t_step + d * t_step**3)
        worst_recon = max(worst_recon, float(np.max(np.abs(lhs - rhs))))
        worst_ratio = max(worst_ratio, norm / (12.0 * rho**3))
    runtime = time.time() - t0
    limit = 60.0
    passed = worst_ratio <= 1.0 and worst_recon <= 1e-8 and runtime <= limit
    return CriterionResult(
        "criterion-6",
        "splitting remainder bound ||D|| <= 12 rho^3 and exact reconstruction",
        passed,
        runtime,
        {
            "pairs": count,
            "worst_norm_ratio": worst_ratio,
            "worst_reconstruction_error": worst_recon,
            "runtime_limit_s": limit,
        },
    )


def criterion_7(quick=False):
    """Mapping identity: layered classical sum equals the dense splitting trace."""
    t0 = time.time()
    rng = np.random.default_rng(20240607)
    cases = [(1, 1), (1, 16), (2, 1), (2, 2), (2, 8), (2, 12), (3, 3), (3, 8), (4, 4), (4, 6)]
    if quick:
        cases = [(1, 1), (2, 2), (2, 8), (3, 4), (4, 4)]
    worst = 0.0
    rows = []
    for n, r in cases:
        tim = random_ferro_tim(rng, n)
        plan = TrotterPlan.from_r(tim, r)
        mapping = map_to_classical(tim, plan)
        lhs = partition_exact_enum(mapping.ising)
        rhs = trotterized_trace_exact(tim, r)
        rel = abs(math.exp(lhs - math.log(rhs)) - 1.0)
        worst = max(worst, rel)
        rows.append({"n": n, "r": r, "spins": mapping.ising.n_spins, "rel_error": rel})
    runtime = time.time() - t0
    return CriterionResult(
        "criterion-7",
        "quantum-to-classical mapping identity to relative 1e-8",
        worst <= 1e-8,
        runtime,
        {"cases": rows, "worst_rel_error": worst},
    )


def criterion_8(quick=False):
    """Multiplicative splitting error at the planned step count."""
    t0 = time.time()
    rng = np.random.default_rng(20240608)
    delta = 0.1
    bound = math.exp(delta) - 1.0
    rows = []
    worst = 0.0
    for n in (1, 2, 3, 4):
        tim = random_ferro_tim(rng, n, j_scale=0.8, h_lo=0.2, h_hi=0.8)
        plan = plan_trotter(tim, delta)
        z_prime = trotterized_trace_exact(tim, plan.r)
        z = oracle.partition_exact(tim_to_local(tim))
        rel = abs(z_prime / z.value - 1.0)
        worst = max(worst, rel)
        rows.append({"n": n, "r": plan.r, "rel_error": rel, "bound": bound})
    runtime = time.time() - t0
    return CriterionResult(
        "criterion-8",
        "planned-step trace within the multiplicative budget e^delta - 1",
        worst <= bound,
        runtime,
        {"cases": rows, "worst_rel_error": worst, "bound": bound},
    )


def criterion_9(quick=False):
    """Estimator accuracy on random ferromagnetic models vs exact enumeration."""
    t0 = time.time()
    rng = np.random.default_rng(20240609)
    n_models = 8 if quick else 50
    repeats = 10 if quick else 30
    need = BINOM_PASS_10 if quick else BINOM_PASS_30
    rows = []
    failures = []

    def one_model(i):
        n_spins = int(rng.integers(6, 21))
        model = random_ferro_ising(rng, n_spins)
        delta = 0.05 if i % 2 == 0 else 0.1
        exact = partition_exact_enum(model)
        return i, model, delta, exact

    specs = [one_model(i) for i in range(n_models)]

    def run_model(spec):
        i, model, delta, exact = spec
        ok = 0
        for rep in range(repeats):
            est = estimate_partition(model, delta, seed=36000 + 1000 * i + rep)
            if abs(math.exp(est.log_value - exact) - 1.0) <= delta:
                ok += 1
        return i, model.n_spins, delta, ok

    with ThreadPoolExecutor(max_workers=THREADS) as pool:
        outcomes = list(pool.map(run_model, specs))
    for i, n_spins, delta, ok in sorted(outcomes):
        rows.append({"model": i, "spins": n_spins, "delta": delta, "successes": ok, "repeats": repeats})
        if ok < need:
            failures.append(rows[-1])
    runtime = time.time() - t0
    limit = 1200.0
    passed = not failures and runtime <= limit
    return CriterionResult(
        "criterion-9",
        f"estimator within delta in >= {need}/{repeats} repeats per model (95% binomial)",
        passed,
        runtime,
        {"models": len(rows), "failures": failures, "min_successes": min(r["successes"] for r in rows),
         "runtime_limit_s": limit, "rows": rows},
    )


PIPELINE_FIXTURES = [
    TimModel(1, [], [1.0]),
    TimModel(2, [(0, 1, 0.3)], [0.25, 0.25]),
    TimModel(3, [(0, 1, 0.15), (0, 2, 0.15), (1, 2, 0.15)], [0.15, 0.15, 0.15]),
]


def criterion_10(quick=False):
    """End-to-end pipeline accuracy against the dense quantum oracle."""
    t0 = time.time()
    delta = 0.1
    fixtures = PIPELINE_FIXTURES[:2] if quick else PIPELINE_FIXTURES
    repeats = 4 if quick else 12
    need = 3 if quick else 8  # >= 2/3 of the repeats
    rows = []
    failures = []
    for idx, tim in enumerate(fixtures):
        z = oracle.partition_exact(tim_to_local(tim))
        free_energy_bound = -math.log1p(-delta)

        def run_rep(rep):
            est = estimate_tim_partition(tim, delta, seed=37000 + 100 * idx + rep)
            log_err = est.log_value - z.log_value
            return abs(math.exp(log_err) - 1.0), abs(log_err)

        with ThreadPoolExecutor(max_workers=THREADS) as pool:
            outcomes = list(pool.map(run_rep, range(repeats)))
        ok = sum(1 for rel, _ in outcomes if rel <= delta)
        free_errs = [logerr for rel, logerr in outcomes if rel <= delta]
        row = {
            "n": tim.n,
            "successes": ok,
            "repeats": repeats,
            "max_rel_error": max(rel for rel, _ in outcomes),
            "free_energy_errors_ok": all(e <= free_energy_bound + 1e-12 for e in free_errs),
            "free_energy_bound": free_energy_bound,
        }
        rows.append(row)
        if ok < need or not row["free_energy_errors_ok"]:
            failures.append(row)
    runtime = time.time() - t0
    return CriterionResult(
        "criterion-10",
        f"pipeline within delta=0.1 of the quantum oracle in >= {need}/{repeats} repeats",
        not failures,
        runtime,
        {"rows": rows, "failures": failures},
    )


def criterion_11(quick=False):
    """Determinism: seeded stochastic components reproduce bit-identically."""
    t0 = time.time()
    checks = {}

    h = tim_to_local(TimModel(2, [(0, 1, 1.0)], [1.0, 1.0]))
    lam, _ = oracle.ground_state_exact(h)
    instance = ProblemInstance(h, lam, lam + 0.5)
    params = protocol_params(instance)
    reg = as_regularized(exact_guide(h))
    x_m = choose_start(h, reg, params)
    t1 = run_population_trajectories(h, params, lam, reg, x_m, 10, 2000, seed=41)
    t2 = run_population_trajectories(h, params, lam, reg, x_m, 10, 2000, seed=41, threads=2)
    checks["walk_trajectories"] = bool(np.array_equal(t1, t2))

    config = WalkConfig(steps=30, gamma_max=100, lambda_m=lam, x_m=x_m, seed=42, trials=3000)
    e1 = estimate_acceptance(instance, reg, config)
    e2 = estimate_acceptance(instance, reg, config)
    checks["estimate_acceptance"] = e1 == e2

    model = ClassicalIsingModel(6, [(0, 1, 0.8), (1, 2, 0.5), (2, 3, 0.9), (3, 4, 0.4), (4, 5, 0.7), (0, 5, 0.3)])
    p1 = estimate_partition(model, 0.1, seed=43)
    p2 = estimate_partition(model, 0.1, seed=43)
    checks["estimate_partition"] = p1.log_value == p2.log_value

    tim = PIPELINE_FIXTURES[1]
    q1 = estimate_tim_partition(tim, 0.2, seed=44)
    q2 = estimate_tim_partition(tim, 0.2, seed=44)
    checks["estimate_tim_partition"] = q1.log_value == q2.log_value

    v1 = run_verdict_trials(h, params, lam, reg, config)
    v2 = run_verdict_trials(h, params, lam, reg, config)
    checks["verdict_trials"] = all(np.array_equal(a, b) for a, b in zip(v1, v2))
    runtime = time.time() - t0
    return CriterionResult(
        "criterion-11",
        "seeded reruns reproduce identical numbers",
        all(checks.values()),
        runtime,
        {"checks": checks},
    )


ALL_CRITERIA = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
    criterion_11,
]


def run_all(quick=False, only=None):
    """Run the acceptance criteria; `only` may be '1,4,9' style."""
    selected = None
    if only:
        selected = {int(x.strip()) for x in str(only).split(",") if x.strip()}
    results = []
    for idx, fn in enumerate(ALL_CRITERIA, start=1):
        if selected is not None and idx not in selected:
            continue
        results.append(fn(quick=quick))
    _MOMENT_CACHE.clear()
    return results
