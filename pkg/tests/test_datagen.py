"""Instance generators, input-size law, and labeled pair construction."""

import math

import numpy as np
import pytest

from ckopt import datagen, sbm, ssc, ssp
from ckopt.errors import DomainError
from ckopt.rng import new_rng, sub_seed


# ---------------------------------------------------------- power-law sizes

def test_powerlaw_spec_validation():
    with pytest.raises(DomainError):
        datagen.PowerLawSpec(exponent=0.0)
    with pytest.raises(DomainError):
        datagen.PowerLawSpec(scale=-1.0)
    with pytest.raises(DomainError):
        datagen.PowerLawSpec(min_value=5, max_value=4)


def test_powerlaw_sample_mean():
    # density a x^(a-1) / s^a on [0, s] has mean s * a / (a + 1); the floor
    # shifts it down by at most 1
    spec = datagen.PowerLawSpec(exponent=2.5, scale=200.0)
    rng = new_rng(0, "plmean")
    n = 40_000
    draws = np.array([datagen.sample_powerlaw_size(spec, rng)
                      for _ in range(n)], dtype=float)
    want = 200.0 * 2.5 / 3.5
    se = draws.std(ddof=1) / math.sqrt(n)
    assert want - 1.0 - 3.0 * se <= draws.mean() <= want + 3.0 * se


def test_powerlaw_sample_clamps_and_accepts_int_seed():
    spec = datagen.PowerLawSpec(exponent=2.5, scale=8.0, min_value=3,
                                max_value=5)
    rng = new_rng(1, "plclamp")
    draws = {datagen.sample_powerlaw_size(spec, rng) for _ in range(200)}
    assert draws <= {3, 4, 5}
    assert (datagen.sample_powerlaw_size(spec, 42)
            == datagen.sample_powerlaw_size(spec, 42))


# --------------------------------------------------------------- instances

def test_gen_ssp_instance_ranges_and_determinism():
    graph = ssp.Graph(4, [(0, 1), (1, 2), (2, 3)])
    law = datagen.gen_ssp_instance(graph, 99)
    law2 = datagen.gen_ssp_instance(graph, 99)
    assert np.array_equal(law.shape, law2.shape)
    assert np.array_equal(law.scale, law2.scale)
    assert np.all((law.shape >= 1) & (law.shape <= 10))
    assert np.all((law.scale >= 1) & (law.scale <= 10))


def test_gen_ssc_instance_prob_range():
    graph = ssc.CoverGraph(5, 6, [(l, r) for l in range(5) for r in range(6)])
    law = datagen.gen_ssc_instance(graph, 3)
    # a/(a+b) with a, b in 1..10 lies in [1/11, 10/11]
    assert np.all((law.probs >= 1.0 / 11.0) & (law.probs <= 10.0 / 11.0))


def test_gen_sbm_instance_mu_range():
    g = datagen.gen_sbm_instance(6, 4)
    assert g.n == 6
    assert np.all((g.mu >= 1.0) & (g.mu <= 10.0))
    assert np.allclose(g.sigma, 0.3 * g.mu)
    with pytest.raises(DomainError):
        datagen.gen_sbm_instance(0, 4)


# ------------------------------------------------------------------ pairs

def test_ssp_pairs_distinct_and_optimally_labeled():
    graph = ssp.Graph(10, [(u, v) for u in range(10) for v in range(u + 1, 10)
                           if (u + v) % 3 != 0 or v == u + 1])
    instance = ssp.SspInstance(graph, datagen.gen_ssp_instance(graph, 1))
    pairs = datagen.gen_pairs(ssp, instance, 12, datagen.PowerLawSpec(), 5)
    assert len({p.x for p in pairs}) == 12
    exp_weights = instance.law.expected_weights()
    for p in pairs:
        assert p.y_ref == ssp.dijkstra_oracle(graph, exp_weights, p.x)


def test_ssc_pairs_budget_rule_and_labels():
    inst = ssc.default_instance(2, left=30, right=40)
    spec = datagen.PowerLawSpec(scale=30.0)
    pairs = datagen.gen_pairs(ssc, inst, 8, spec, 9)
    assert len({p.x for p in pairs}) == 8
    for p in pairs:
        rstar, k = p.x
        assert k == max(1, int(0.1 * len(rstar)))
        assert p.y_ref == ssc.greedy_expected(inst, p.x)


def test_sbm_pairs_equal_sides_and_optimal_labels():
    inst = sbm.SbmInstance(datagen.gen_sbm_instance(8, 3))
    spec = datagen.PowerLawSpec(scale=8.0)
    pairs = datagen.gen_pairs(sbm, inst, 6, spec, 11)
    assert len({p.x for p in pairs}) == 6
    for p in pairs:
        lstar, rstar = p.x
        assert len(lstar) == len(rstar)
        sub = inst.graph.mu[np.ix_(list(lstar), list(rstar))]
        cols = sbm.hungarian_oracle(sub)
        assert p.y_ref == tuple(rstar[c] for c in cols)


def test_gen_pairs_determinism_and_unknown_family():
    inst = sbm.SbmInstance(datagen.gen_sbm_instance(6, 3))
    spec = datagen.PowerLawSpec(scale=6.0)
    a = datagen.gen_pairs(sbm, inst, 4, spec, 2)
    b = datagen.gen_pairs(sbm, inst, 4, spec, 2)
    assert [(p.x, p.y_ref) for p in a] == [(p.x, p.y_ref) for p in b]

    class Fake:
        FAMILY = "nope"

    with pytest.raises(DomainError):
        datagen.gen_pairs(Fake, inst, 1, spec, 0)


# ------------------------------------------------------------------- pools

def test_pool_spec_and_sub_seeds():
    with pytest.raises(DomainError):
        datagen.PoolSpec({"name": "phi_true"}, pool_size=0)
    spec = datagen.PoolSpec({"name": "phi_true"}, pool_size=5, master_seed=17)
    seeds = datagen.pool_sub_seeds(spec)
    assert seeds == [sub_seed(17, "config", i) for i in range(5)]
    assert len(set(seeds)) == 5
