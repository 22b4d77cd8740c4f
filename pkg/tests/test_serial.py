"""JSON-lines round trips: instances, pairs, pools, models, corruption."""

import json

import numpy as np
import pytest

from ckopt import core, datagen, sbm, serial, ssc, ssp
from ckopt.errors import ModelLoadError, ParseError
from ckopt.trainer import TrainingPair


def rewrite_record(path, mutate):
    """Load, mutate, and rewrite the single payload record of a jsonl file."""
    lines = path.read_text().splitlines()
    rec = json.loads(lines[1])
    mutate(rec)
    lines[1] = json.dumps(rec, sort_keys=True)
    path.write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------- instances

def ssp_instance():
    graph = ssp.Graph(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    return ssp.SspInstance(graph, ssp.WeibullEdgeLaw([1, 2, 3, 4],
                                                     [4, 3, 2, 1]))


def ssc_instance():
    graph = ssc.CoverGraph(3, 4, [(0, 0), (0, 1), (1, 2), (2, 3)])
    return ssc.SscInstance(graph, ssc.EdgeProbLaw([0.2, 0.4, 0.6, 0.8]))


def sbm_instance():
    return sbm.SbmInstance(datagen.gen_sbm_instance(4, 2))


@pytest.mark.parametrize("make", [ssp_instance, ssc_instance, sbm_instance])
def test_instance_roundtrip(make, tmp_path):
    instance = make()
    path = tmp_path / "instance.jsonl"
    serial.save_instance(instance, path)
    loaded = serial.load_instance(path)
    assert type(loaded) is type(instance)
    if isinstance(instance, ssp.SspInstance):
        assert loaded.graph.edges == instance.graph.edges
        assert np.array_equal(loaded.law.shape, instance.law.shape)
        assert np.array_equal(loaded.law.scale, instance.law.scale)
    elif isinstance(instance, ssc.SscInstance):
        assert loaded.graph.edges == instance.graph.edges
        assert np.array_equal(loaded.law.probs, instance.law.probs)
    else:
        assert np.array_equal(loaded.graph.mu, instance.graph.mu)


def test_instance_file_errors(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text("")
    with pytest.raises(ParseError, match="empty"):
        serial.load_instance(path)
    path.write_text("not json\n")
    with pytest.raises(ParseError, match="bad header"):
        serial.load_instance(path)
    path.write_text(json.dumps({"format": "pairs", "version": 1,
                                "family": "ssp"}) + "\n")
    with pytest.raises(ParseError, match="expected format"):
        serial.load_instance(path)
    path.write_text(json.dumps({"format": "instance", "version": 99,
                                "family": "ssp"}) + "\n")
    with pytest.raises(ParseError, match="version"):
        serial.load_instance(path)


def test_unknown_family_module():
    with pytest.raises(ParseError):
        serial.family_module("nope")
    assert serial.family_module("ssp") is ssp


# ------------------------------------------------------------------- pairs

def test_pairs_roundtrip_all_families(tmp_path):
    cases = {
        "ssp": [TrainingPair((0, 3), (0, 1, 2, 3))],
        "ssc": [TrainingPair(((1, 2, 3), 2), (0, 1))],
        "sbm": [TrainingPair(((0, 2), (1, 3)), (3, 1))],
    }
    for fam, pairs in cases.items():
        path = tmp_path / f"{fam}_pairs.jsonl"
        serial.save_pairs(fam, pairs, path)
        got_fam, got = serial.load_pairs(path)
        assert got_fam == fam
        assert [(p.x, p.y_ref) for p in got] == [(p.x, p.y_ref) for p in pairs]


# ------------------------------------------------------------------- pools

def test_pool_roundtrip_and_regeneration(tmp_path):
    instance = ssp_instance()
    spec = datagen.PoolSpec({"name": "phi_true"}, pool_size=6, master_seed=21)
    sub_seeds = datagen.pool_sub_seeds(spec)
    path = tmp_path / "pool.jsonl"
    serial.save_pool("ssp", spec.dist_spec, spec.master_seed, sub_seeds, path)
    fam, dist_spec, master_seed, loaded_seeds = serial.load_pool(path)
    assert (fam, master_seed) == ("ssp", 21)
    assert loaded_seeds == sub_seeds
    sample = serial.sample_from_pool(ssp, instance, dist_spec, loaded_seeds,
                                     [0, 3, 5])
    # pool materialization equals direct regeneration from the same seeds
    direct = core.build_sample(ssp, instance, dist_spec, 21, 6)
    for cfg, cid in zip(sample.configs, [0, 3, 5]):
        assert np.array_equal(cfg.payload, direct.configs[cid].payload)


def test_pool_size_mismatch(tmp_path):
    path = tmp_path / "pool.jsonl"
    serial.save_pool("ssp", {"name": "phi_true"}, 0, [1, 2, 3], path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")  # drop one record
    with pytest.raises(ParseError, match="pool_size mismatch"):
        serial.load_pool(path)


# ------------------------------------------------------------------- models

def trained_model_fixture():
    instance = ssp_instance()
    problem = ssp.make_problem(instance)
    sample = core.build_sample(ssp, instance, {"name": "phi_true"}, 8, 5)
    weights = np.array([0.1, 0.0, 0.4, 0.2, 0.3])
    model = core.ScoreModel(sample, weights, problem.alpha, problem.sense)
    return instance, problem, model


def test_model_roundtrip_with_probe(tmp_path):
    instance, problem, model = trained_model_fixture()
    path = tmp_path / "model.jsonl"
    probe = ((0, 2), (0, 1, 2))
    serial.save_model(problem, instance, model, "ssp", path,
                      probe_pair=probe, trainer_meta={"iterations": 3})
    loaded, meta = serial.load_model(path, instance)
    assert np.array_equal(loaded.weights, model.weights)
    assert loaded.sense == model.sense and loaded.alpha == model.alpha
    assert meta == {"iterations": 3}
    for got, want in zip(loaded.sample.configs, model.sample.configs):
        assert np.array_equal(got.payload, want.payload)


def test_model_checksum_detects_corruption(tmp_path):
    instance, problem, model = trained_model_fixture()
    path = tmp_path / "model.jsonl"
    serial.save_model(problem, instance, model, "ssp", path)
    rewrite_record(path, lambda rec: rec["sub_seeds"].reverse())
    with pytest.raises(ModelLoadError, match="checksum"):
        serial.load_model(path, instance)


def test_model_probe_detects_feature_drift(tmp_path):
    instance, problem, model = trained_model_fixture()
    path = tmp_path / "model.jsonl"
    serial.save_model(problem, instance, model, "ssp", path,
                      probe_pair=((0, 2), (0, 1, 2)))

    def corrupt(rec):
        rec["probe"]["features"][0] += 0.5

    rewrite_record(path, corrupt)
    with pytest.raises(ModelLoadError, match="probe"):
        serial.load_model(path, instance)


def test_model_single_record_enforced(tmp_path):
    instance, problem, model = trained_model_fixture()
    path = tmp_path / "model.jsonl"
    serial.save_model(problem, instance, model, "ssp", path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    path.write_text("\n".join(lines + [lines[1]]) + "\n")
    with pytest.raises(ModelLoadError, match="exactly one"):
        serial.load_model(path, instance)
