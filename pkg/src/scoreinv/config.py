"""Experiment configuration: a single strict-schema JSON document.

Unknown keys are rejected, every failure is reported at once, and all
randomness flows from the named seeds; a run's metadata JSON embeds the
fully resolved config so reruns are bit-identical.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

DEFAULT_SEEDS = {
    "truth": 101,
    "truth_forcing": 202,
    "obs_noise": 303,
    "scenarios": 404,
    "observations": 505,
    "ties": 606,
}

DEFAULT_CONFIG = {
    "experiment": None,  # "elliptic" | "powergrid" | "score-eval"
    "out_dir": None,
    "seeds": DEFAULT_SEEDS,
    "score": {
        "kinds": ["es", "vs", "hs"],
        "exponent": 2.0,
        "alpha": 0.1,
        "beta": 0.9,
        "weights": "constant",  # "constant" | "inverse-distance" | "banded"
        "band": 50,
    },
    "elliptic": {
        "mesh": 64,
        "sample_counts": [1, 4, 8, 32, 64, 128],
        "priors": ["informed", "standard"],
        "gamma": 0.1,
        "delta": 0.5,
        "penalty": 10.0,
        "theta": [[1.0, 0.0], [0.0, 1.0]],
        "obs_grid": 5,
        "noise_sigma": 0.1,
        "score_weight": 1.0,
        "forcing": {"sigma": 0.7, "len_x": 0.1875, "len_y": 0.1406, "nugget": 1e-4},
        "lbfgs": {"memory": 10, "max_iters": 300, "grad_tol": 1e-6,
                  "armijo_c1": 1e-4, "backtrack": 0.5, "max_backtracks": 40},
    },
    "powergrid": {
        "ns": 100,
        "n_obs": 50,
        "estimate_n_obs": 20,
        "truths": [10.0, 20.0],
        "m_grid": [1, 35],
        "dt": 0.01,
        "steps": 1000,
        "window": [3.0, 8.0],
        "estimate": True,
        "bounds_pad": 5.0,
        "debug_trajectory": False,
        "loads": {"p_mean": 1.25, "p_std": 0.1, "q_mean": 0.5, "q_std": 0.05,
                  "length_sq": 0.002, "floor": 0.1},
    },
}

_EXPERIMENTS = ("elliptic", "powergrid", "score-eval")
_SCORE_KINDS = ("crps", "es", "vs", "hs")
_WEIGHT_SCHEMES = ("constant", "inverse-distance", "banded")


class ConfigError(Exception):
    """Carries the full list of validation failures."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _merge(defaults, user, path, errors):
    """Deep-merge user over defaults, rejecting keys absent from defaults."""
    out = copy.deepcopy(defaults)
    for key, value in user.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            errors.append(f"unknown config key: {where}")
            continue
        if isinstance(defaults[key], dict) and defaults[key]:
            if not isinstance(value, dict):
                errors.append(f"{where}: expected an object")
                continue
            out[key] = _merge(defaults[key], value, where, errors)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _require_number(cfg, errors, path, positive=False, integer=False):
    node = cfg
    for part in path.split(".")[:-1]:
        node = node[part]
    value = node[path.split(".")[-1]]
    ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if ok and integer:
        ok = float(value).is_integer()
    if ok and positive:
        ok = value > 0
    if not ok:
        kind = "positive " if positive else ""
        kind += "integer" if integer else "number"
        errors.append(f"{path}: expected a {kind}, got {value!r}")


def validate(user_config: dict) -> dict:
    """Resolve a user config against the defaults; raise ConfigError with
    every problem found."""
    errors: list[str] = []
    if not isinstance(user_config, dict):
        raise ConfigError(["config must be a JSON object"])
    cfg = _merge(DEFAULT_CONFIG, user_config, "", errors)

    if cfg["experiment"] not in _EXPERIMENTS:
        errors.append(f"experiment: expected one of {_EXPERIMENTS}, "
                      f"got {cfg['experiment']!r}")

    for name, value in cfg["seeds"].items():
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            errors.append(f"seeds.{name}: expected a nonnegative integer")

    score = cfg["score"]
    if not isinstance(score["kinds"], list) or not score["kinds"]:
        errors.append("score.kinds: expected a nonempty list")
    else:
        for k in score["kinds"]:
            if k not in _SCORE_KINDS:
                errors.append(f"score.kinds: unknown score kind {k!r}")
    if score["weights"] not in _WEIGHT_SCHEMES:
        errors.append(f"score.weights: expected one of {_WEIGHT_SCHEMES}")
    for path in ("score.exponent", "score.alpha", "score.beta"):
        _require_number(cfg, errors, path, positive=True)
    _require_number(cfg, errors, "score.band", positive=True, integer=True)

    ell = cfg["elliptic"]
    _require_number(cfg, errors, "elliptic.mesh", positive=True, integer=True)
    _require_number(cfg, errors, "elliptic.gamma", positive=True)
    _require_number(cfg, errors, "elliptic.delta", positive=True)
    _require_number(cfg, errors, "elliptic.obs_grid", positive=True, integer=True)
    _require_number(cfg, errors, "elliptic.score_weight", positive=True)
    if not isinstance(ell["penalty"], (int, float)) or ell["penalty"] < 0:
        errors.append("elliptic.penalty: expected a nonnegative number")
    if not isinstance(ell["noise_sigma"], (int, float)) or ell["noise_sigma"] < 0:
        errors.append("elliptic.noise_sigma: expected a nonnegative number")
    if (not isinstance(ell["sample_counts"], list) or not ell["sample_counts"]
            or any(not isinstance(n, int) or n < 1 for n in ell["sample_counts"])):
        errors.append("elliptic.sample_counts: expected a list of positive integers")
    if not set(ell["priors"]) <= {"informed", "standard"} or not ell["priors"]:
        errors.append("elliptic.priors: expected a nonempty subset of "
                      "['informed', 'standard']")

    grid = cfg["powergrid"]
    for path in ("powergrid.ns", "powergrid.n_obs", "powergrid.estimate_n_obs",
                 "powergrid.steps"):
        _require_number(cfg, errors, path, positive=True, integer=True)
    _require_number(cfg, errors, "powergrid.dt", positive=True)
    _require_number(cfg, errors, "powergrid.bounds_pad", positive=True)
    if (not isinstance(grid["m_grid"], list) or len(grid["m_grid"]) != 2
            or grid["m_grid"][0] >= grid["m_grid"][1]):
        errors.append("powergrid.m_grid: expected [low, high] with low < high")
    if (not isinstance(grid["window"], list) or len(grid["window"]) != 2
            or grid["window"][0] >= grid["window"][1]):
        errors.append("powergrid.window: expected [start, end] with start < end")
    if not isinstance(grid["truths"], list) or not grid["truths"]:
        errors.append("powergrid.truths: expected a nonempty list of values")

    if cfg["experiment"] == "elliptic" and score["weights"] == "banded":
        errors.append("score.weights: banded weights are a time-series scheme; "
                      "the elliptic experiment needs constant or inverse-distance")
    if cfg["experiment"] in ("elliptic", "powergrid") and "crps" in score["kinds"]:
        errors.append("score.kinds: crps is univariate; experiments use "
                      "es, vs, or hs")

    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path: str | Path) -> dict:
    """Read a config file; metadata files (with an embedded config) also work."""
    with open(path) as fh:
        doc = json.load(fh)
    if isinstance(doc, dict) and "config" in doc and "experiment" not in doc:
        doc = doc["config"]
    return doc


def apply_seed_override(cfg: dict, seed: int) -> dict:
    """Re-derive every named seed from one master seed, preserving names."""
    out = copy.deepcopy(cfg)
    for k, name in enumerate(sorted(out["seeds"])):
        out["seeds"][name] = seed + k
    return out


def write_metadata(cfg: dict, out_dir: Path, version: str) -> None:
    meta = {"config": cfg, "package_version": version}
    with open(out_dir / "metadata.json", "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
