"""Experiment configuration files (JSON, versioned)."""

from __future__ import annotations

from dataclasses import dataclass, field
import json

import numpy as np

from .errors import ConfigError
from .groups import GroupSpec

__all__ = ["SCHEMA_VERSION", "ExperimentConfig", "load_config", "parse_config"]

SCHEMA_VERSION = 1

_KNOWN = {"schemaVersion", "seed", "group", "model", "modelA", "modelB", "epsilon", "radii",
          "replicas", "tgrid", "thresholds", "outDir", "observables", "window", "coord", "lags",
          "probe", "finite", "cells", "description"}


@dataclass
class ExperimentConfig:
    """Validated experiment settings.

    ``tgrid`` may be given as a list or as ``{"start", "stop", "step"}``
    (inclusive of ``stop``). ``seed`` is mandatory.
    """

    seed: int
    group: GroupSpec = None
    model: dict = None
    model_a: dict = None
    model_b: dict = None
    epsilon: float = 0.01
    radii: list = field(default_factory=lambda: [8, 16, 32])
    replicas: int = 1000
    tgrid: np.ndarray = None
    thresholds: dict = field(default_factory=dict)
    out_dir: str = "."
    observables: list = None
    window: int = 10
    coord: list = None
    lags: list = field(default_factory=lambda: [0, 1, 2, 3])
    probe: dict = field(default_factory=dict)
    finite: dict = field(default_factory=dict)
    cells: int = None
    raw: dict = field(default_factory=dict, repr=False)


def _tgrid(obj):
    if obj is None:
        return np.round(np.arange(-50, 51) / 10.0, 12)
    if isinstance(obj, dict):
        start, stop, step = float(obj["start"]), float(obj["stop"]), float(obj["step"])
        if step <= 0 or stop < start:
            raise ConfigError("tgrid needs step > 0 and stop >= start")
        k = int(round((stop - start) / step))
        return np.round(start + step * np.arange(k + 1), 12)
    return np.asarray(obj, dtype=float)


def parse_config(obj: dict) -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(obj) - _KNOWN
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    version = obj.get("schemaVersion")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schemaVersion must be {SCHEMA_VERSION}, got {version!r}")
    if "seed" not in obj:
        raise ConfigError("seed is mandatory")
    seed = obj["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    try:
        group = GroupSpec.from_json(obj["group"]) if "group" in obj else None
        replicas = int(obj.get("replicas", 1000))
        if replicas < 1:
            raise ConfigError("replicas must be positive")
        eps = float(obj.get("epsilon", 0.01))
        if not 0 < eps <= 1:
            raise ConfigError("epsilon must lie in (0, 1]")
        radii = [int(r) for r in obj.get("radii", [8, 16, 32])]
        if not radii or min(radii) < 0:
            raise ConfigError("radii must be a nonempty list of nonnegative integers")
        return ExperimentConfig(
            seed=seed, group=group, model=obj.get("model"), model_a=obj.get("modelA"),
            model_b=obj.get("modelB"), epsilon=eps, radii=radii, replicas=replicas,
            tgrid=_tgrid(obj.get("tgrid")), thresholds=dict(obj.get("thresholds", {})),
            out_dir=str(obj.get("outDir", ".")), observables=obj.get("observables"),
            window=int(obj.get("window", 10)), coord=obj.get("coord"),
            lags=list(obj.get("lags", [0, 1, 2, 3])), probe=dict(obj.get("probe", {})),
            finite=dict(obj.get("finite", {})), cells=obj.get("cells"), raw=obj)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid configuration: {exc}") from None


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from None
    return parse_config(obj)
