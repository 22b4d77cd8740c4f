"""Command-line surface.

Subcommands: gen-instance, gen-pool, gen-pairs, train, predict, eval,
reproduce. Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

import argparse
import json
import sys

import numpy as np

from . import core, datagen, serial
from .errors import CkoptError, DomainError, ModelLoadError, ParseError
from .harness import dist_spec_from_label, run_experiment, save_table, write_csv
from .presets import PRESETS, _build_pool
from .rng import new_rng, sub_seed
from .trainer import TrainerParams, train_one_slack, write_training_log


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ParseError, ModelLoadError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CkoptError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ckopt",
        description="Learn input-solution regressors for stochastic "
                    "combinatorial optimization from solved examples.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-instance", help="generate a problem instance file")
    p.add_argument("--family", required=True, choices=sorted(serial.FAMILIES))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_instance)

    p = sub.add_parser("gen-pool", help="generate a configuration pool file")
    p.add_argument("--family", required=True, choices=sorted(serial.FAMILIES))
    p.add_argument("--dist", required=True,
                   help="distribution label, e.g. phi_true, phi_exp, phi_q0.3")
    p.add_argument("--pool-size", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_pool)

    p = sub.add_parser("gen-pairs", help="generate labeled input-solution pairs")
    p.add_argument("--family", required=True, choices=sorted(serial.FAMILIES))
    p.add_argument("--instance", required=True)
    p.add_argument("--n-pairs", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_pairs)

    p = sub.add_parser("train", help="train a model on a pairs file")
    p.add_argument("--family", required=True, choices=sorted(serial.FAMILIES))
    p.add_argument("--instance", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--train-size", type=int, default=160)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--log", help="write the per-iteration training log (CSV)")
    _add_trainer_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict the solution for one input")
    p.add_argument("--family", required=True, choices=sorted(serial.FAMILIES))
    p.add_argument("--instance", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--x", required=True,
                   help="JSON input, same shape as in pairs files")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="mean performance ratio of a model on pairs")
    p.add_argument("--family", required=True, choices=sorted(serial.FAMILIES))
    p.add_argument("--instance", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("reproduce",
                       help="run a desk-scale preset mirroring a benchmark grid")
    p.add_argument("preset", choices=sorted(PRESETS))
    p.add_argument("--out", required=True, help="working/output directory")
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--timing", action="store_true",
                   help="append wall times to the CSV (breaks byte determinism)")
    p.add_argument("--perturb", action="store_true",
                   help="predict with Gaussian-perturbed weights")
    p.set_defaults(func=cmd_reproduce)

    return parser


def _add_trainer_flags(p):
    p.add_argument("--c-reg", type=float, default=None)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--margin-factor", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--max-outer-iter", type=int, default=200)


def cmd_gen_instance(args):
    family = serial.family_module(args.family)
    serial.save_instance(family.default_instance(args.seed), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_gen_pool(args):
    dist_spec_from_label(args.family, args.dist)  # validate label early
    spec = datagen.PoolSpec(dist_spec_from_label(args.family, args.dist),
                            args.pool_size, args.seed)
    serial.save_pool(args.family, spec.dist_spec, args.seed,
                     datagen.pool_sub_seeds(spec), args.out)
    print(f"wrote {args.out} ({args.pool_size} configurations)")
    return 0


def cmd_gen_pairs(args):
    family = serial.family_module(args.family)
    instance = serial.load_instance(args.instance)
    pairs = datagen.gen_pairs(family, instance, args.n_pairs,
                              datagen.PowerLawSpec(), args.seed)
    serial.save_pairs(args.family, pairs, args.out)
    print(f"wrote {args.out} ({len(pairs)} pairs)")
    return 0


def cmd_train(args):
    family = serial.family_module(args.family)
    instance = serial.load_instance(args.instance)
    fam, pairs = serial.load_pairs(args.pairs)
    if fam != args.family:
        raise DomainError(f"pairs file is for family {fam!r}")
    pool_family, dist_spec, _seed, sub_seeds = serial.load_pool(args.pool)
    if pool_family != args.family:
        raise DomainError(f"pool file is for family {pool_family!r}")
    if args.k > len(sub_seeds):
        raise DomainError(f"K={args.k} exceeds pool size {len(sub_seeds)}")
    config_ids = new_rng(args.seed, "configs").choice(
        len(sub_seeds), size=args.k, replace=False)
    sample = serial.sample_from_pool(family, instance, dist_spec,
                                     sub_seeds, config_ids)
    train = pairs[: args.train_size]
    problem = family.make_problem(instance)
    params = TrainerParams(c_reg=args.c_reg, eta=args.eta,
                           margin_factor=args.margin_factor, tol=args.tol,
                           max_outer_iter=args.max_outer_iter)
    outcome = train_one_slack(problem, train, sample, params)
    model = core.ScoreModel(sample, outcome.seed_weights, problem.alpha,
                            problem.sense)
    meta = {
        "k": args.k,
        "train_size": len(train),
        "converged": outcome.converged,
        "iterations": outcome.iterations,
        "objective_trace_tail": outcome.objective_trace[-5:],
        "c_reg": params.c_reg if params.c_reg is not None else 0.01 * len(train),
        "eta": params.eta,
        "margin_factor": params.margin_factor,
        "tol": params.tol,
    }
    serial.save_model(problem, instance, model, args.family, args.out,
                      probe_pair=(train[0].x, train[0].y_ref),
                      trainer_meta=meta)
    if args.log:
        with open(args.log, "w") as fh:
            write_training_log(outcome.log_rows, fh)
    print(f"wrote {args.out} (converged={outcome.converged}, "
          f"iterations={outcome.iterations})")
    return 0


def cmd_predict(args):
    instance = serial.load_instance(args.instance)
    model, _meta = serial.load_model(args.model, instance)
    family = serial.family_module(args.family)
    problem = family.make_problem(instance)
    x = serial._decode_x(args.family, json.loads(args.x))
    y = core.predict(problem, model, x)
    print(json.dumps(list(y)))
    return 0


def cmd_eval(args):
    from .harness import performance_ratio
    instance = serial.load_instance(args.instance)
    model, _meta = serial.load_model(args.model, instance)
    family = serial.family_module(args.family)
    problem = family.make_problem(instance)
    fam, pairs = serial.load_pairs(args.pairs)
    if fam != args.family:
        raise DomainError(f"pairs file is for family {fam!r}")
    ratios = []
    for p in pairs:
        y_pred = core.predict(problem, model, p.x)
        r = performance_ratio(problem.sense,
                              family.true_value(instance, p.x, y_pred),
                              family.true_value(instance, p.x, p.y_ref))
        if r is not None:
            ratios.append(r)
    print(f"mean_ratio {np.mean(ratios)!r} over {len(ratios)} pairs")
    return 0


def cmd_reproduce(args):
    config = PRESETS[args.preset](args.out, master_seed=args.seed)
    config.timing = args.timing
    config.perturb = args.perturb
    rows, _diag = run_experiment(config)
    out_csv = f"{args.out}/{args.preset}_results.csv"
    save_table(rows, out_csv, timing=args.timing)
    write_csv(rows, sys.stdout, timing=args.timing)
    print(f"wrote {out_csv}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
