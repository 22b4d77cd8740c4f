"""Experiment orchestration: performance ratios, K-sweeps, result tables.

Each (distribution, K) cell is repeated over seeded runs; a run draws K
configurations from a pre-generated pool without replacement, splits the
pairs file into train/test, trains the weights, and evaluates the mean
performance ratio of the predictions on the exact expected objective.
Tables are deterministic byte-for-byte given the master seed (wall times
are only written when explicitly requested).
"""

import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import core, serial
from .errors import DomainError
from .rng import new_rng, sub_seed
from .trainer import TrainerParams, train_one_slack

CSV_COLUMNS = ["dataset", "dist", "K", "runs", "mean_ratio", "std_ratio", "excluded"]

RATIO_GUARD = 1e-9  # exact-label minimization ratios may only dip this far below 1


@dataclass
class ExperimentConfig:
    family: str
    instance_path: str
    pairs_path: str
    pools: dict                  # distribution label -> pool path
    cells: list                  # list of (distribution label, K)
    train_size: int = 160
    test_size: int = 640
    runs: int = 5
    master_seed: int = 0
    dataset: str = "desk"
    c_reg: float = None
    eta: float = 1.0
    margin_factor: float = 1.0
    tol: float = 1e-4
    max_outer_iter: int = 200
    baselines: list = field(default_factory=list)  # subset of {"base", "rand"}
    perturb: bool = False
    timing: bool = False

    def validate(self):
        if self.runs < 1:
            raise DomainError("runs must be >= 1")
        if self.train_size < 1 or self.test_size < 1:
            raise DomainError("train/test sizes must be >= 1")
        for path in [self.instance_path, self.pairs_path, *self.pools.values()]:
            if not os.path.exists(path):
                raise DomainError(f"missing file: {path}")
        for dist, k in self.cells:
            if dist not in self.pools:
                raise DomainError(f"cell references unknown pool {dist!r}")
            if k < 1:
                raise DomainError("K must be >= 1")


@dataclass
class ResultRow:
    dataset: str
    dist: str
    k: int
    runs: int
    mean_ratio: float
    std_ratio: float
    excluded: int
    wall_time_s: float = 0.0


def performance_ratio(sense, f_pred: float, f_ref: float):
    """Ratio of predicted to reference objective under the true law.

    Lower is better for both senses; None flags an undefined ratio (zero
    denominator), which callers exclude from means.
    """
    if sense == core.MINIMIZE:
        num, den = f_pred, f_ref
    else:
        num, den = f_ref, f_pred
    if den == 0:
        return None
    return num / den


def dist_spec_from_label(family: str, label: str) -> dict:
    """Map a distribution label (e.g. 'phi_q0.3') to its spec dict."""
    if family == "sbm" and label.startswith("phi_q"):
        try:
            return {"name": "phi_q", "q": float(label[len("phi_q"):])}
        except ValueError:
            raise DomainError(f"bad band-width suffix in label {label!r}") from None
    return {"name": label}


# ------------------------------------------------------------------ running

_FILE_CACHE = {}


def _cached(path, loader):
    key = (loader.__name__, os.path.abspath(path))
    if key not in _FILE_CACHE:
        _FILE_CACHE[key] = loader(path)
    return _FILE_CACHE[key]


def _execute_run(payload):
    """One seeded run of one (distribution, K) cell. Top-level for pickling."""
    t_start = time.perf_counter()
    cfg = payload["config"]
    dist, k, run_idx = payload["dist"], payload["k"], payload["run"]
    run_seed = sub_seed(cfg.master_seed, "run", dist, k, run_idx)

    family = serial.family_module(cfg.family)
    instance = _cached(cfg.instance_path, serial.load_instance)
    _fam, pairs = _cached(cfg.pairs_path, serial.load_pairs)
    pool_family, pool_spec, _pool_seed, sub_seeds = _cached(
        cfg.pools[dist], serial.load_pool)
    if pool_family != cfg.family:
        raise DomainError(
            f"pool {cfg.pools[dist]} is for family {pool_family!r}")
    if k > len(sub_seeds):
        raise DomainError(f"K={k} exceeds pool size {len(sub_seeds)}")
    if cfg.train_size + cfg.test_size > len(pairs):
        raise DomainError(
            f"train+test={cfg.train_size + cfg.test_size} exceeds "
            f"pairs pool size {len(pairs)}")

    config_ids = new_rng(run_seed, "configs").choice(
        len(sub_seeds), size=k, replace=False)
    sample = serial.sample_from_pool(family, instance, pool_spec,
                                     sub_seeds, config_ids)
    perm = new_rng(run_seed, "split").permutation(len(pairs))
    train = [pairs[i] for i in perm[:cfg.train_size]]
    test = [pairs[i] for i in perm[cfg.train_size:cfg.train_size + cfg.test_size]]

    problem = family.make_problem(instance)
    params = TrainerParams(c_reg=cfg.c_reg, eta=cfg.eta,
                           margin_factor=cfg.margin_factor, tol=cfg.tol,
                           max_outer_iter=cfg.max_outer_iter)
    outcome = train_one_slack(problem, train, sample, params)

    weights = outcome.seed_weights
    if cfg.perturb:
        beta = core.compute_beta(weights, len(train), problem.alpha)
        weights = np.maximum(
            core.perturb_weights(weights, beta, sub_seed(run_seed, "perturb")),
            0.0)
    model = core.ScoreModel(sample, weights, problem.alpha, problem.sense)

    exact_labels = problem.alpha == 1.0
    ratios, excluded = [], 0
    for p in test:
        y_pred = core.predict(problem, model, p.x)
        r = performance_ratio(problem.sense,
                              family.true_value(instance, p.x, y_pred),
                              family.true_value(instance, p.x, p.y_ref))
        if r is None:
            excluded += 1
            continue
        if exact_labels and problem.sense == core.MINIMIZE:
            assert r >= 1.0 - RATIO_GUARD, (
                f"ratio {r} below 1 with exactly-optimal labels")
        ratios.append(r)

    baseline_ratios = {}
    for name in cfg.baselines:
        vals = []
        for i, p in enumerate(test):
            y_b = family.baseline(instance, p.x,
                                  sub_seed(run_seed, "baseline", name, i))
            r = performance_ratio(problem.sense,
                                  family.true_value(instance, p.x, y_b),
                                  family.true_value(instance, p.x, p.y_ref))
            if r is not None:
                vals.append(r)
        baseline_ratios[name] = float(np.mean(vals)) if vals else float("nan")

    return {
        "mean_ratio": float(np.mean(ratios)) if ratios else float("nan"),
        "excluded": excluded,
        "wall_time": time.perf_counter() - t_start,
        "baselines": baseline_ratios,
        "diagnostics": {
            "dist": dist,
            "k": k,
            "run": run_idx,
            "w_min": float(weights.min()) if weights.size else 0.0,
            "seed_w_min": float(outcome.seed_weights.min()),
            "final_xi": outcome.final_xi,
            "max_constraint_gap": outcome.max_constraint_gap,
            "tol": params.tol,
            "qp_tol": params.qp_tol,
            "trace": list(outcome.objective_trace),
            "converged": outcome.converged,
            "iterations": outcome.iterations,
        },
    }


def run_experiment(config: ExperimentConfig):
    """Run every (distribution, K) cell; returns (rows, diagnostics)."""
    config.validate()
    payloads = [{"config": config, "dist": dist, "k": k, "run": r}
                for dist, k in config.cells for r in range(config.runs)]
    workers = int(os.environ.get("CKOPT_WORKERS", "1"))
    if workers > 1 and len(payloads) > 1:
        import multiprocessing
        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_execute_run, payloads)
    else:
        results = []
        for p in payloads:
            results.append(_execute_run(p))

    rows, diagnostics = [], []
    idx = 0
    baseline_acc = {name: [] for name in config.baselines}
    for dist, k in config.cells:
        cell = results[idx:idx + config.runs]
        idx += config.runs
        means = [c["mean_ratio"] for c in cell]
        rows.append(ResultRow(
            dataset=config.dataset,
            dist=dist,
            k=k,
            runs=config.runs,
            mean_ratio=float(np.mean(means)),
            std_ratio=float(np.std(means, ddof=1)) if len(means) > 1 else 0.0,
            excluded=int(sum(c["excluded"] for c in cell)),
            wall_time_s=sum(c["wall_time"] for c in cell),
        ))
        for c in cell:
            diagnostics.append(c["diagnostics"])
            for name, val in c["baselines"].items():
                baseline_acc[name].append(val)
    for name, vals in baseline_acc.items():
        if vals:
            rows.append(ResultRow(
                dataset=config.dataset,
                dist=name,
                k=0,
                runs=len(vals),
                mean_ratio=float(np.mean(vals)),
                std_ratio=float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
                excluded=0,
            ))
    return rows, diagnostics


def write_csv(rows, stream, timing=False):
    cols = CSV_COLUMNS + (["wall_time_s"] if timing else [])
    stream.write(",".join(cols) + "\n")
    for row in rows:
        vals = [row.dataset, row.dist, str(row.k), str(row.runs),
                repr(row.mean_ratio), repr(row.std_ratio), str(row.excluded)]
        if timing:
            vals.append(f"{row.wall_time_s:.3f}")
        stream.write(",".join(vals) + "\n")


def save_table(rows, path, timing=False):
    with open(path, "w") as fh:
        write_csv(rows, fh, timing=timing)
