"""Command-line interface with JSON reports.

Every subcommand emits a single JSON report containing the fully resolved
configuration, version and backend information, wall time, and its results.
Re-running with the embedded config reproduces every field under "results"
byte-for-byte (the "meta" section carries timing and is excluded from that
guarantee).  Exit codes: 0 success, 2 validation error, 3 statistical or
diagnostic failure.
"""

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, kernels
from .bits import index_to_bits
from .errors import DiagnosticError, ValidationError
from .guiding import as_regularized, builtin_guides
from .ising import (
    estimate_partition,
    estimate_tim_partition,
    ising_to_json,
    load_ising,
    partition_exact_enum,
)
from .model import (
    ProblemInstance,
    TimModel,
    as_local_hamiltonian,
    load_model,
    protocol_params,
)
from .oracle import (
    ORACLE_MAX_QUBITS,
    ground_state_exact,
    green_norm,
    partition_exact,
    pi_and_good_set,
)
from .trotter import map_to_classical, plan_trotter, trotter_error_operator
from .walk import (
    WalkConfig,
    choose_start,
    envelope_for,
    estimate_acceptance,
    run_verdict_trials,
)

# Report skeleton; the fixture suite validates emitted reports against it.
REPORT_SCHEMA = {
    "type": "object",
    "required": ["command", "config", "meta", "results"],
    "properties": {
        "command": {"type": "string"},
        "config": {"type": "object"},
        "meta": {
            "type": "object",
            "required": ["version", "backend", "numpy", "wall_time_s"],
        },
        "results": {"type": "object"},
    },
}


def validate_report(report):
    """Structural check of a report against REPORT_SCHEMA."""
    if not isinstance(report, dict):
        return False
    for key in REPORT_SCHEMA["required"]:
        if key not in report:
            return False
    if not isinstance(report["command"], str):
        return False
    for key in ("config", "meta", "results"):
        if not isinstance(report[key], dict):
            return False
    for key in REPORT_SCHEMA["properties"]["meta"]["required"]:
        if key not in report["meta"]:
            return False
    return True


def _default_seed(args_seed):
    if args_seed is not None:
        return int(args_seed)
    env = os.environ.get("STOQSIM_SEED")
    if env is not None:
        return int(env)
    seed = int.from_bytes(os.urandom(8), "little")
    print(f"note: no seed given; using random seed {seed}", file=sys.stderr)
    return seed


def _emit(report, output):
    if not validate_report(report):
        raise RuntimeError("internal error: report failed schema validation")
    text = json.dumps(report, indent=2, sort_keys=True)
    if output:
        with open(output, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


def _report(command, config, results, t_start):
    return {
        "command": command,
        "config": config,
        "meta": {
            "version": __version__,
            "backend": kernels.BACKEND,
            "numpy": np.__version__,
            "wall_time_s": time.time() - t_start,
        },
        "results": results,
    }


def _load_instance_guide(args, need_promise=True):
    model = load_model(args.model)
    h = as_local_hamiltonian(model)
    guide = builtin_guides(h, args.guide)
    instance = None
    if need_promise:
        instance = ProblemInstance(h, args.lambda_yes, args.lambda_no)
    return model, h, guide, instance


def _resolve_start(args, h, guide, params):
    if args.x_m == "auto":
        return choose_start(h, guide, params)
    return args.x_m


def cmd_verify(args):
    t0 = time.time()
    seed = _default_seed(args.seed)
    _, h, guide, instance = _load_instance_guide(args)
    params = protocol_params(instance)
    x_m = _resolve_start(args, h, guide, params)
    steps = args.steps
    gamma_max = args.gamma_max
    if steps is None or gamma_max is None:
        auto_steps, auto_gamma = _auto_lengths(h.n, params)
        steps = auto_steps if steps is None else steps
        gamma_max = auto_gamma if gamma_max is None else gamma_max
    config = WalkConfig(
        steps=steps,
        gamma_max=gamma_max,
        lambda_m=args.lambda_m,
        x_m=x_m,
        seed=seed,
        trials=args.trials,
        threads=args.threads,
    )
    est = estimate_acceptance(instance, guide, config)
    env = envelope_for(h, guide, x_m, params.decision_gap, steps) if not est.format_reject else None
    results = {
        "p_hat": est.p_hat,
        "stderr": est.stderr,
        "accepts": est.accepts,
        "reject_extinct": est.extinct,
        "reject_overflow": est.overflow,
        "format_reject": est.format_reject,
        "decision_gap": params.decision_gap,
        "beta": params.beta,
        "total_norm_J": params.total_norm_J,
        "trivial_instance": params.trivial,
        "envelope_specific": env.specific if env else None,
        "envelope_generic": env.generic if env else None,
        "step_alive_trials": est.step_alive,
        "step_mean_population": est.step_gamma_mean,
    }
    cfg = {
        "model": args.model,
        "lambda_yes": args.lambda_yes,
        "lambda_no": args.lambda_no,
        "lambda_m": args.lambda_m,
        "guide": args.guide,
        "x_m": x_m,
        "steps": steps,
        "gamma_max": gamma_max,
        "trials": args.trials,
        "seed": seed,
        "threads": args.threads,
    }
    _emit(_report("verify", cfg, results, t0), args.output)
    return 0


def _auto_lengths(n, params):
    from .walk import default_lengths

    if params.decision_gap <= 0:
        raise ValidationError("cannot derive walk lengths from a non-positive gap")
    return default_lengths(n, params.decision_gap)


def cmd_sweep(args):
    t0 = time.time()
    seed = _default_seed(args.seed)
    model = load_model(args.model)
    h = as_local_hamiltonian(model)
    guide = builtin_guides(h, args.guide)
    total = h.total_norm()
    if total <= 0:
        raise ValidationError("sweep needs a non-degenerate model (positive term norms)")
    params_like = protocol_params(ProblemInstance(h, -total, total))
    x_m = args.x_m if args.x_m != "auto" else choose_start(h, guide, params_like)
    if args.points < 1:
        raise ValidationError("sweep needs at least one point")
    lam_grid = np.linspace(args.lambda_lo, args.lambda_hi, args.points)
    rows = []
    for lam in lam_grid:
        config = WalkConfig(
            steps=args.steps,
            gamma_max=args.gamma_max,
            lambda_m=float(lam),
            x_m=x_m,
            seed=seed,
            trials=args.trials,
            threads=args.threads,
        )
        try:
            verdicts = run_verdict_trials(h, params_like, float(lam), guide, config).verdicts
            accepts = int(np.sum(verdicts == 0))
            p_hat = accepts / args.trials
            rows.append(
                {
                    "lambda_m": float(lam),
                    "p_hat": p_hat,
                    "stderr": math.sqrt(p_hat * (1 - p_hat) / args.trials),
                    "reject_overflow": int(np.sum(verdicts == 2)),
                    "reject_extinct": int(np.sum(verdicts == 1)),
                }
            )
        except Exception as exc:  # inconsistent rate rows are data, not crashes
            rows.append({"lambda_m": float(lam), "error": str(exc)})
    results = {
        "note": "heuristic sweep; no completeness guarantee without a tuned start string",
        "x_m": x_m,
        "rows": rows,
    }
    cfg = {
        "model": args.model,
        "lambda_lo": args.lambda_lo,
        "lambda_hi": args.lambda_hi,
        "points": args.points,
        "guide": args.guide,
        "x_m": x_m,
        "steps": args.steps,
        "gamma_max": args.gamma_max,
        "trials": args.trials,
        "seed": seed,
        "threads": args.threads,
    }
    _emit(_report("sweep", cfg, results, t0), args.output)
    return 0


def cmd_oracle(args):
    t0 = time.time()
    model = load_model(args.model)
    h = as_local_hamiltonian(model)
    if h.n > ORACLE_MAX_QUBITS:
        raise ValidationError(f"oracle subcommand needs n <= {ORACLE_MAX_QUBITS}")
    energy, psi = ground_state_exact(h)
    z = partition_exact(h)
    results = {
        "n": h.n,
        "ground_energy": energy,
        "partition": z.value,
        "log_partition": z.log_value,
        "total_norm_J": h.total_norm(),
    }
    if args.lambda_m is not None:
        beta = 1.0 / (2.0 * h.total_norm())
        results["green_norm"] = green_norm(h, beta, args.lambda_m)
    if args.guide is not None:
        guide = as_regularized(builtin_guides(h, args.guide))
        pigs = pi_and_good_set(h, None, guide)
        results["pi"] = {
            index_to_bits(ix, h.n): float(pigs.pi[ix]) for ix in range(1 << h.n)
        }
        results["good_set"] = [index_to_bits(int(s), h.n) for s in pigs.good_states]
        results["pi_good_mass"] = pigs.pi_good_mass
        results["overlap"] = pigs.overlap
    cfg = {"model": args.model, "lambda_m": args.lambda_m, "guide": args.guide}
    _emit(_report("oracle", cfg, results, t0), args.output)
    return 0


def cmd_map(args):
    t0 = time.time()
    model = load_model(args.model)
    if not isinstance(model, TimModel):
        raise ValidationError("map expects a TIM model file")
    if args.r is not None:
        from .trotter import TrotterPlan

        plan = TrotterPlan.from_r(model, args.r, delta=args.delta)
    else:
        plan = plan_trotter(model, args.delta / 2.0)
    mapping = map_to_classical(model, plan, field_floor_delta=args.delta)
    results = {
        "ising": ising_to_json(mapping.ising),
        "trotter_steps": plan.r,
        "step": plan.t,
        "spread_bound": plan.rho,
        "eigenvalue_shift_bound": plan.eigenvalue_shift_bound,
        "floored_qubits": list(mapping.floored_qubits),
    }
    cfg = {"model": args.model, "delta": args.delta, "r": args.r}
    _emit(_report("map", cfg, results, t0), args.output)
    return 0


def cmd_trotter_check(args):
    t0 = time.time()
    seed = _default_seed(args.seed)
    rng = np.random.default_rng(seed)
    worst_ratio = 0.0
    worst_recon = 0.0
    for _ in range(args.count):
        dim = int(rng.integers(2, args.max_dim + 1))
        a = rng.normal(size=(dim, dim))
        a = (a + a.T) / 2.0
        b = rng.normal(size=(dim, dim))
        b = (b + b.T) / 2.0
        rho = _spread_pair(a, b)
        t = 1.0 / (2.0 * rho)
        d, norm = trotter_error_operator(a, b, t)
        from .trotter import _expm_sym

        half = _expm_sym(a * (t / 2.0))
        lhs = half @ _expm_sym(b * t) @ half
        rhs = _expm_sym((a + b) * t + d * t**3)
        recon = float(np.max(np.abs(lhs - rhs)))
        worst_ratio = max(worst_ratio, norm / (12.0 * rho**3))
        worst_recon = max(worst_recon, recon)
    results = {
        "count": args.count,
        "max_dim": args.max_dim,
        "worst_norm_ratio": worst_ratio,
        "bound_holds": worst_ratio <= 1.0,
        "worst_reconstruction_error": worst_recon,
    }
    cfg = {"count": args.count, "max_dim": args.max_dim, "seed": seed}
    _emit(_report("trotter-check", cfg, results, t0), args.output)
    return 0 if worst_ratio <= 1.0 and worst_recon <= 1e-8 else 3


def _spread_pair(a, b):
    wa = np.linalg.eigvalsh(a)
    wb = np.linalg.eigvalsh(b)
    return float(wa[-1] - wa[0] + wb[-1] - wb[0])


def cmd_ising_z(args):
    t0 = time.time()
    seed = _default_seed(args.seed)
    model = load_ising(args.model)
    est = estimate_partition(model, args.delta, seed)
    results = {
        "log_Z": est.log_value,
        "Z": est.value,
        "delta": est.delta,
        "confidence": est.confidence,
        "repeats": est.diagnostics.get("passes", 0),
        "diagnostics": est.diagnostics,
    }
    if model.n_spins <= 24 and args.check_exact:
        results["log_Z_exact"] = partition_exact_enum(model)
    cfg = {"model": args.model, "delta": args.delta, "seed": seed}
    _emit(_report("ising-z", cfg, results, t0), args.output)
    return 0


def cmd_tim_z(args):
    t0 = time.time()
    seed = _default_seed(args.seed)
    model = load_model(args.model)
    if not isinstance(model, TimModel):
        raise ValidationError("tim-z expects a TIM model file")
    est = estimate_tim_partition(model, args.delta, seed)
    results = {
        "log_Z": est.log_value,
        "Z": est.value,
        "delta": est.delta,
        "confidence": est.confidence,
        "repeats": est.diagnostics.get("passes", 0),
        "free_energy_additive_error_bound": -math.log1p(-est.delta),
        "diagnostics": est.diagnostics,
    }
    cfg = {"model": args.model, "delta": args.delta, "seed": seed}
    _emit(_report("tim-z", cfg, results, t0), args.output)
    return 0


def cmd_fixtures(args):
    t0 = time.time()
    from . import acceptance

    results = {}
    failed = 0
    for res in acceptance.run_all(quick=args.quick, only=args.only):
        line = f"{'PASS' if res.passed else 'FAIL'} {res.ident}: {res.name} ({res.runtime_s:.1f}s)"
        print(line, file=sys.stderr)
        results[res.ident] = {
            "name": res.name,
            "passed": res.passed,
            "runtime_s": res.runtime_s,
            "details": res.details,
        }
        if not res.passed:
            failed += 1
    cfg = {"quick": args.quick, "only": args.only}
    _emit(_report("fixtures", cfg, results, t0), args.output)
    return 0 if failed == 0 else 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stoqsim",
        description="Branching-walk verification and TIM partition estimation",
    )
    parser.add_argument("--output", help="write the JSON report here instead of stdout")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("verify", help="run the walk verifier on a witness")
    p.add_argument("--model", required=True)
    p.add_argument("--lambda-yes", type=float, required=True, dest="lambda_yes")
    p.add_argument("--lambda-no", type=float, required=True, dest="lambda_no")
    p.add_argument("--lambda-m", type=float, required=True, dest="lambda_m")
    p.add_argument("--guide", default="uniform")
    p.add_argument("--x-m", default="auto", dest="x_m")
    p.add_argument("--L", type=int, default=None, dest="steps")
    p.add_argument("--gamma-max", type=int, default=None, dest="gamma_max")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="sweep lambda_M and record acceptance rates")
    p.add_argument("--model", required=True)
    p.add_argument("--lambda-lo", type=float, required=True, dest="lambda_lo")
    p.add_argument("--lambda-hi", type=float, required=True, dest="lambda_hi")
    p.add_argument("--points", type=int, default=11)
    p.add_argument("--guide", default="uniform")
    p.add_argument("--x-m", default="auto", dest="x_m")
    p.add_argument("--L", type=int, required=True, dest="steps")
    p.add_argument("--gamma-max", type=int, required=True, dest="gamma_max")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="exact desk-scale quantities for a model")
    p.add_argument("--model", required=True)
    p.add_argument("--lambda-m", type=float, default=None, dest="lambda_m")
    p.add_argument("--guide", default=None)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("map", help="map a TIM to its layered classical model")
    p.add_argument("--model", required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--r", type=int, default=None)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("trotter-check", help="fuzz the splitting error bound")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--max-dim", type=int, default=16, dest="max_dim")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_trotter_check)

    p = sub.add_parser("ising-z", help="estimate a classical partition value")
    p.add_argument("--model", required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--check-exact", action="store_true", dest="check_exact")
    p.set_defaults(func=cmd_ising_z)

    p = sub.add_parser("tim-z", help="estimate a TIM partition value end to end")
    p.add_argument("--model", required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_tim_z)

    p = sub.add_parser("fixtures", help="run the bundled acceptance suite")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--only", default=None, help="comma-separated criterion numbers")
    p.set_defaults(func=cmd_fixtures)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DiagnosticError as exc:
        print(f"diagnostic failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
