"""JSON-lines file formats: instances, pairs, pools, models, result tables.

Every file starts with a one-line header record {"format", "version",
"family"}. Formats are diff-able and regenerable: pools persist stream
seeds rather than payloads, and model files embed a checksum over the
regenerated configuration payloads plus a recorded feature probe.
"""

import hashlib
import json

import numpy as np

from . import core, sbm, ssc, ssp
from .errors import ModelLoadError, ParseError
from .trainer import TrainingPair

FORMAT_VERSION = 1

FAMILIES = {"ssp": ssp, "ssc": ssc, "sbm": sbm}


def family_module(name: str):
    try:
        return FAMILIES[name]
    except KeyError:
        raise ParseError(f"unknown problem family {name!r}") from None


def _write_jsonl(path, header, records):
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _read_jsonl(path, expected_format):
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip()]
    if not lines:
        raise ParseError(f"{path}: empty file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: bad header: {exc}") from None
    if header.get("format") != expected_format:
        raise ParseError(
            f"{path}: expected format {expected_format!r}, got {header.get('format')!r}")
    if header.get("version") != FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported version {header.get('version')!r}")
    records = [json.loads(ln) for ln in lines[1:]]
    return header, records


# ---------------------------------------------------------------- instances

def save_instance(instance, path):
    if isinstance(instance, ssp.SspInstance):
        header = _header("instance", "ssp")
        rec = {
            "node_count": instance.graph.node_count,
            "edges": [list(e) for e in instance.graph.edges],
            "directed": instance.graph.directed,
            "shape": instance.law.shape.tolist(),
            "scale": instance.law.scale.tolist(),
        }
    elif isinstance(instance, ssc.SscInstance):
        header = _header("instance", "ssc")
        rec = {
            "left_count": instance.graph.left_count,
            "right_count": instance.graph.right_count,
            "edges": [list(e) for e in instance.graph.edges],
            "probs": instance.law.probs.tolist(),
        }
    elif isinstance(instance, sbm.SbmInstance):
        header = _header("instance", "sbm")
        rec = {"n": instance.graph.n, "mu": instance.graph.mu.tolist()}
    else:
        raise ParseError(f"cannot serialize instance of type {type(instance)}")
    _write_jsonl(path, header, [rec])


def load_instance(path):
    header, records = _read_jsonl(path, "instance")
    if len(records) != 1:
        raise ParseError(f"{path}: instance file must hold exactly one record")
    rec = records[0]
    fam = header["family"]
    if fam == "ssp":
        graph = ssp.Graph(rec["node_count"], [tuple(e) for e in rec["edges"]],
                          directed=rec["directed"])
        return ssp.SspInstance(graph, ssp.WeibullEdgeLaw(rec["shape"], rec["scale"]))
    if fam == "ssc":
        graph = ssc.CoverGraph(rec["left_count"], rec["right_count"],
                               [tuple(e) for e in rec["edges"]])
        return ssc.SscInstance(graph, ssc.EdgeProbLaw(rec["probs"]))
    if fam == "sbm":
        return sbm.SbmInstance(sbm.MatchGraph(rec["n"], rec["mu"]))
    raise ParseError(f"{path}: unknown family {fam!r}")


# -------------------------------------------------------------------- pairs

def _encode_x(family_name, x):
    if family_name == "ssp":
        return list(x)
    if family_name == "ssc":
        return [list(x[0]), x[1]]
    if family_name == "sbm":
        return [list(x[0]), list(x[1])]
    raise ParseError(f"unknown family {family_name!r}")


def _decode_x(family_name, rec):
    if family_name == "ssp":
        return tuple(rec)
    if family_name == "ssc":
        return (tuple(rec[0]), rec[1])
    if family_name == "sbm":
        return (tuple(rec[0]), tuple(rec[1]))
    raise ParseError(f"unknown family {family_name!r}")


def save_pairs(family_name, pairs, path):
    header = _header("pairs", family_name)
    records = [{"x": _encode_x(family_name, p.x), "y": list(p.y_ref)}
               for p in pairs]
    _write_jsonl(path, header, records)


def load_pairs(path):
    header, records = _read_jsonl(path, "pairs")
    fam = header["family"]
    return fam, [TrainingPair(_decode_x(fam, r["x"]), tuple(r["y"])) for r in records]


# -------------------------------------------------------------------- pools

def save_pool(family_name, dist_spec, master_seed, sub_seeds, path):
    header = _header("pool", family_name)
    header["dist_spec"] = dist_spec
    header["master_seed"] = master_seed
    header["pool_size"] = len(sub_seeds)
    _write_jsonl(path, header, [{"config_id": i, "sub_seed": s}
                                for i, s in enumerate(sub_seeds)])


def load_pool(path):
    """Returns (family, dist_spec, master_seed, sub_seeds)."""
    header, records = _read_jsonl(path, "pool")
    if len(records) != header["pool_size"]:
        raise ParseError(f"{path}: pool_size mismatch")
    sub_seeds = [None] * len(records)
    for r in records:
        sub_seeds[r["config_id"]] = r["sub_seed"]
    if any(s is None for s in sub_seeds):
        raise ParseError(f"{path}: missing config ids")
    return header["family"], header["dist_spec"], header["master_seed"], sub_seeds


def sample_from_pool(family, instance, dist_spec, sub_seeds, config_ids):
    """Materialize the chosen pool configurations into a sample."""
    configs = []
    for cid in config_ids:
        seed = sub_seeds[cid]
        payload = family.sample_config(instance, dist_spec, seed)
        configs.append(core.Configuration(int(cid), payload,
                                          (dist_spec["name"], seed)))
    # master_seed records the pool seed; regeneration goes through config_ids
    return core.ConfigurationSample(configs, dist_spec, 0)


# -------------------------------------------------------------------- models

def _payload_digest(family_name, configs):
    h = hashlib.sha256()
    for cfg in configs:
        arr = np.asarray(cfg.payload)
        if arr.dtype == bool:
            h.update(arr.astype(np.uint8).tobytes())
        else:
            h.update(np.asarray(arr, dtype=np.float64).tobytes())
    return h.hexdigest()


def save_model(problem, instance, model: core.ScoreModel, family_name, path,
               probe_pair=None, trainer_meta=None):
    """Persist a trained model; configs as seeds, with regeneration checksum."""
    header = _header("model", family_name)
    sub_seeds = [cfg.provenance[1] for cfg in model.sample.configs]
    rec = {
        "sense": problem.sense,
        "alpha": model.alpha,
        "dist_spec": model.sample.dist_spec,
        "master_seed": model.sample.master_seed,
        "sub_seeds": sub_seeds,
        "weights": model.weights.tolist(),
        "trainer_meta": trainer_meta or {},
        "checksum": _payload_digest(family_name, model.sample.configs),
    }
    if probe_pair is not None:
        x, y = probe_pair
        feats = core.kernel_features(problem, x, y, model.sample)
        rec["probe"] = {"x": _encode_x(family_name, x), "y": list(y),
                        "features": feats.tolist()}
    _write_jsonl(path, header, [rec])


def load_model(path, instance):
    """Reload a model, verifying the regeneration checksum and probe."""
    header, records = _read_jsonl(path, "model")
    if len(records) != 1:
        raise ModelLoadError(f"{path}: model file must hold exactly one record")
    rec = records[0]
    fam = header["family"]
    family = family_module(fam)
    dist_spec = rec["dist_spec"]
    configs = []
    for i, seed in enumerate(rec["sub_seeds"]):
        payload = family.sample_config(instance, dist_spec, seed)
        configs.append(core.Configuration(i, payload, (dist_spec["name"], seed)))
    digest = _payload_digest(fam, configs)
    if digest != rec["checksum"]:
        raise ModelLoadError(
            f"{path}: checksum mismatch (regenerated configurations differ)")
    sample = core.ConfigurationSample(configs, dist_spec, rec["master_seed"])
    model = core.ScoreModel(sample, np.array(rec["weights"]),
                            rec["alpha"], rec["sense"])
    problem = family.make_problem(instance)
    if "probe" in rec:
        probe = rec["probe"]
        x = _decode_x(fam, probe["x"])
        feats = core.kernel_features(problem, x, tuple(probe["y"]), sample)
        if not np.allclose(feats, probe["features"], rtol=0, atol=1e-12):
            raise ModelLoadError(f"{path}: probe features mismatch")
    return model, rec.get("trainer_meta", {})


def _header(fmt, family):
    return {"format": fmt, "version": FORMAT_VERSION, "family": family}
