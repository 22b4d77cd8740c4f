"""Desk-scale experiment presets, one per problem family.

These mirror the shape of the full-size benchmark grids (distribution x K)
at sizes that run on a laptop; they are scaled approximations, not
replications. All generated files land in a working directory and are
reused if already present.
"""

import os

from . import datagen, sbm, serial, ssc, ssp
from .harness import ExperimentConfig, dist_spec_from_label
from .rng import sub_seed

POOL_SIZE = 10_000

# instance construction seeds are fixed: the desk instances are part of the
# preset definition, independent of the experiment master seed
INSTANCE_SEEDS = {"ssp": 7, "ssc": 11, "sbm": 13}


def _ensure(path, builder):
    if not os.path.exists(path):
        builder(path)
    return path


def _build_pool(family_name, label, master_seed, path):
    dist_spec = dist_spec_from_label(family_name, label)
    spec = datagen.PoolSpec(dist_spec, POOL_SIZE, master_seed)
    serial.save_pool(family_name, dist_spec, master_seed,
                     datagen.pool_sub_seeds(spec), path)


def _preset(family, family_name, workdir, master_seed, dist_labels, n_pairs,
            pair_spec=None, **config_kwargs):
    os.makedirs(workdir, exist_ok=True)
    instance_path = os.path.join(workdir, f"{family_name}_instance.jsonl")
    if not os.path.exists(instance_path):
        serial.save_instance(family.default_instance(INSTANCE_SEEDS[family_name]),
                             instance_path)
    instance = serial.load_instance(instance_path)
    pairs_path = os.path.join(workdir, f"{family_name}_pairs.jsonl")
    if not os.path.exists(pairs_path):
        pairs = datagen.gen_pairs(family, instance, n_pairs,
                                  pair_spec or datagen.PowerLawSpec(),
                                  sub_seed(master_seed, "pairs", family_name))
        serial.save_pairs(family_name, pairs, pairs_path)
    pools = {}
    for label in dist_labels:
        path = os.path.join(workdir, f"{family_name}_pool_{label}.jsonl")
        pools[label] = _ensure(
            path, lambda p, lb=label: _build_pool(
                family_name, lb, sub_seed(master_seed, "pool", family_name, lb), p))
    return ExperimentConfig(
        family=family_name,
        instance_path=instance_path,
        pairs_path=pairs_path,
        pools=pools,
        master_seed=master_seed,
        **config_kwargs,
    )


def preset_ssp(workdir, master_seed=2024):
    """64-node shortest path: near-optimality under phi_true, K-trend under phi_exp."""
    return _preset(
        ssp, "ssp", workdir, master_seed,
        dist_labels=["phi_true", "phi_exp"],
        n_pairs=1600,
        cells=[("phi_true", 160), ("phi_exp", 16), ("phi_exp", 1600)],
        train_size=160,
        test_size=640,
        runs=5,
        baselines=["base"],
        dataset="ssp-desk64",
    )


def preset_ssc(workdir, master_seed=2024):
    """200x500 coverage: near-optimality under phi_true vs the random baseline."""
    return _preset(
        ssc, "ssc", workdir, master_seed,
        dist_labels=["phi_true"],
        n_pairs=400,
        cells=[("phi_true", 320)],
        train_size=80,
        test_size=160,
        runs=5,
        baselines=["rand"],
        dataset="ssc-desk200x500",
    )


def preset_sbm(workdir, master_seed=2024):
    """n=32 matching: prior-knowledge effect (phi_q0.3 vs phi_uni vs random)."""
    return _preset(
        sbm, "sbm", workdir, master_seed,
        dist_labels=["phi_uni", "phi_q0.3"],
        n_pairs=400,
        # size scale matched to n=32: the default scale of 200 would pin
        # nearly every draw at the cap, where only one distinct input exists
        pair_spec=datagen.PowerLawSpec(scale=32.0),
        cells=[("phi_uni", 160), ("phi_q0.3", 160)],
        train_size=160,
        test_size=160,
        runs=5,
        baselines=["rand"],
        dataset="sbm-desk32",
    )


PRESETS = {"ssp": preset_ssp, "ssc": preset_ssc, "sbm": preset_sbm}
