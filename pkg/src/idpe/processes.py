"""
Stationary infinitely divisible fields on a countable group.

A model is a tree. Leaves are ``Z + P + b``: an optional Gaussian moving
average ``Z``, an optional Poissonian part ``P_g = I(Xi_g)`` built from a
translation-invariant Levy measure, and a drift ``b``. Inner nodes are
independent sums (``SumNode``) and independent pairings (``PairNode``,
whose coordinates are vectors).

Every leaf draws ONE point configuration per replica and reads all
coordinates off it, so ``X_g`` is literally ``X_e`` evaluated on the
shifted configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import csv
import hashlib
import io
import json
import math

import numpy as np

from . import _parallel
from .errors import DimensionMismatch, GroupMismatch
from .groups import CoordIndex, FolnerWindow, GroupSpec, element, group_op, inverse
from .integrals import field_values, log_charfn_linear
from .measures import (Kernel, LevySpec, NullityVerdict, ValidatedLevy, canonical_coords,
                       classify_nullity, levy_from_json, validate_levy, zero_levy)
from .poisson import RngStream, kernel_region, sample_point_config, window_coords

__all__ = ["GaussianSpec", "ProcessModel", "Leaf", "SumNode", "PairNode", "Trace",
           "build_process", "leaf", "combine_sum", "combine_pair", "simulate_values",
           "simulate_trace", "marginal_charfn", "log_marginal_charfn", "canonical_metric",
           "MetricEstimate", "leaf_values", "model_hash", "iter_leaves", "DEFAULT_EPS"]

DEFAULT_EPS = 0.01


@dataclass(frozen=True)
class GaussianSpec:
    """Moving average ``Z_g = sum_s k(s) W_{g-s}`` of i.i.d. standard normals."""

    kernel: Kernel

    def covariance(self, u) -> float:
        """``rho(u) = sum_s k(s) k(s+u)``."""
        group = self.kernel.group
        coefs = self.kernel.as_dict()
        terms = [c * coefs.get(group_op(group, s, u), 0.0) for s, c in coefs.items()]
        return math.fsum(terms)

    def cov_matrix(self, coords) -> np.ndarray:
        group = self.kernel.group
        k = len(coords)
        out = np.empty((k, k))
        for i in range(k):
            for j in range(i, k):
                out[i, j] = out[j, i] = self.covariance(group_op(group, inverse(group, coords[i]), coords[j]))
        return out

    @property
    def variance(self) -> float:
        return math.fsum(c * c for c in self.kernel.coefs)

    def to_json(self):
        return {"kernel": self.kernel.to_json()}


class ProcessModel:
    """Base class of model tree nodes."""

    group: GroupSpec

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def to_json(self):
        raise NotImplementedError

    def __add__(self, other):
        return combine_sum(self, other)


@dataclass(frozen=True, eq=False)
class Leaf(ProcessModel):
    group: GroupSpec
    gaussian: GaussianSpec = None
    levy: ValidatedLevy = None
    drift: float = 0.0
    nullity: NullityVerdict = None

    def __post_init__(self):
        if self.gaussian is None and self.levy is None:
            raise ValueError("a leaf needs a Gaussian part or a Poissonian part")
        if self.levy is not None and self.levy.group != self.group:
            raise GroupMismatch("Levy measure lives on another group")
        if self.gaussian is not None and self.gaussian.kernel.group != self.group:
            raise GroupMismatch("Gaussian kernel lives on another group")
        if self.nullity is None:
            levy = self.levy if self.levy is not None else zero_levy(self.group)
            object.__setattr__(self, "nullity", classify_nullity(levy))

    @property
    def dim(self) -> int:
        return 1

    @property
    def jumps(self) -> ValidatedLevy:
        return self.levy if self.levy is not None else zero_levy(self.group)

    def to_json(self):
        out = {"type": "leaf", "drift": self.drift}
        if self.gaussian is not None:
            out["gaussian"] = self.gaussian.to_json()
        if self.levy is not None:
            out["levy"] = self.levy.to_json()
        return out


@dataclass(frozen=True, eq=False)
class SumNode(ProcessModel):
    left: ProcessModel
    right: ProcessModel

    @property
    def group(self):
        return self.left.group

    @property
    def dim(self):
        return self.left.dim

    def to_json(self):
        return {"type": "sum", "left": self.left.to_json(), "right": self.right.to_json()}


@dataclass(frozen=True, eq=False)
class PairNode(ProcessModel):
    left: ProcessModel
    right: ProcessModel

    @property
    def group(self):
        return self.left.group

    @property
    def dim(self):
        return self.left.dim + self.right.dim

    def to_json(self):
        return {"type": "pair", "left": self.left.to_json(), "right": self.right.to_json()}


def leaf(group: GroupSpec, gaussian=None, levy=None, drift: float = 0.0) -> Leaf:
    """Convenience constructor.

    ``gaussian`` may be a kernel mapping, ``levy`` a :class:`LevySpec`
    (validated here) or a :class:`ValidatedLevy`. Without either, the leaf
    is the constant process ``b``.
    """
    if gaussian is not None and not isinstance(gaussian, GaussianSpec):
        gaussian = GaussianSpec(gaussian if isinstance(gaussian, Kernel) else Kernel.create(group, gaussian))
    if isinstance(levy, LevySpec):
        levy = validate_levy(levy)
    if gaussian is None and levy is None:
        levy = zero_levy(group)
    return Leaf(group, gaussian, levy, float(drift))


def combine_sum(a: ProcessModel, b: ProcessModel) -> SumNode:
    """Independent sum ``a (+) b``."""
    if a.group != b.group:
        raise GroupMismatch("cannot combine processes on different groups")
    if a.dim != b.dim:
        raise DimensionMismatch("summands must have the same coordinate dimension")
    return SumNode(a, b)


def combine_pair(a: ProcessModel, b: ProcessModel) -> PairNode:
    """Independent pairing ``a (x) b`` with vector coordinates."""
    if a.group != b.group:
        raise GroupMismatch("cannot combine processes on different groups")
    return PairNode(a, b)


def iter_leaves(model: ProcessModel, path=()):
    """Yield ``(path, leaf)``; ``path`` addresses the leaf's random stream."""
    if isinstance(model, Leaf):
        yield path, model
    else:
        yield from iter_leaves(model.left, path + (0,))
        yield from iter_leaves(model.right, path + (1,))


def build_process(config, group: GroupSpec = None, cells: int = None) -> ProcessModel:
    """Build a model tree from its JSON form.

    ``{"type": "leaf", "gaussian": {"kernel": [[[0], 1.0]]}, "levy": {...}, "drift": b}``
    or ``{"type": "sum"|"pair", "left": ..., "right": ...}``.
    """
    if group is None:
        group = GroupSpec.from_json(config["group"])
    typ = config.get("type", "leaf")
    if typ in ("sum", "pair"):
        left = build_process(config["left"], group, cells)
        right = build_process(config["right"], group, cells)
        return combine_sum(left, right) if typ == "sum" else combine_pair(left, right)
    if typ != "leaf":
        raise ValueError(f"unknown model node type {typ!r}")
    gauss = None
    if config.get("gaussian"):
        pairs = [(tuple(k) if isinstance(k, list) else k, v) for k, v in config["gaussian"]["kernel"]]
        gauss = GaussianSpec(Kernel.create(group, pairs))
    levy = None
    if config.get("levy") and config["levy"].get("components"):
        spec = levy_from_json(config["levy"], group)
        levy = validate_levy(spec, cells) if cells else validate_levy(spec)
    return leaf(group, gauss, levy, float(config.get("drift", 0.0)))


def model_hash(model: ProcessModel) -> str:
    blob = json.dumps({"group": model.group.to_json(), "model": model.to_json()}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ----------------------------------------------------------------------------
# simulation

def _gaussian_values(gspec: GaussianSpec, carr: np.ndarray, gen, n: int) -> np.ndarray:
    group = gspec.kernel.group
    offsets = gspec.kernel.offsets_array
    region = kernel_region(group, carr, offsets)
    noise = gen.standard_normal((n, len(region)))
    index = CoordIndex(group, region)
    out = np.zeros((n, len(carr)))
    for s, c in zip(offsets, gspec.kernel.coefs):
        out += c * noise[:, index.lookup(carr - s)]
    return out


def leaf_values(lf: Leaf, carr: np.ndarray, rng: RngStream, n: int, eps: float, return_config=False):
    """Values of one leaf on ``carr`` for ``n`` replicas, shape ``(n, k)``."""
    vals = np.full((n, len(carr)), lf.drift)
    theta = None
    if lf.levy is not None and not lf.levy.is_zero:
        theta = sample_point_config(lf.levy, carr, rng.child(0), n)
        vals = field_values(theta, carr, eps) + lf.drift
    if lf.gaussian is not None:
        vals = vals + _gaussian_values(lf.gaussian, carr, rng.child(1).generator(), n)
    return (vals, theta) if return_config else vals


def _tree_values(model, carr, rng, n, eps, path, configs):
    if isinstance(model, Leaf):
        if configs is not None:
            vals, theta = leaf_values(model, carr, rng.child(*path), n, eps, return_config=True)
            configs[path] = theta
        else:
            vals = leaf_values(model, carr, rng.child(*path), n, eps)
        return vals[:, :, None]
    left = _tree_values(model.left, carr, rng, n, eps, path + (0,), configs)
    right = _tree_values(model.right, carr, rng, n, eps, path + (1,), configs)
    if isinstance(model, SumNode):
        return left + right
    return np.concatenate([left, right], axis=2)


def simulate_values(model: ProcessModel, coords, rng: RngStream, n: int = 1, eps: float = DEFAULT_EPS,
                    return_configs: bool = False):
    """Simulate ``n`` independent replicas of the field on ``coords``.

    Returns an array of shape ``(n, k, dim)``. Replicas are produced in
    fixed chunks of ``CHUNK`` with stream ``rng.child(chunk)``, so results
    do not depend on the number of worker threads. With
    ``return_configs`` a list (one dict per chunk) maps leaf paths to the
    point configurations used.
    """
    carr = window_coords(model.group, coords)

    def work(i, m):
        configs = {} if return_configs else None
        vals = _tree_values(model, carr, rng.child(i), m, eps, (), configs)
        return vals, configs

    parts = _parallel.map_chunks(work, n)
    vals = np.concatenate([p[0] for p in parts]) if parts else np.zeros((0, len(carr), model.dim))
    if return_configs:
        return vals, [p[1] for p in parts]
    return vals


@dataclass(frozen=True, eq=False)
class Trace:
    """Sample path on a window: ``values[i]`` belongs to ``coords[i]``."""

    coords: np.ndarray
    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    def value(self, g) -> np.ndarray:
        pos = _row_of(self.coords, g)
        return self.values[pos]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        ar = self.coords.shape[1]
        w.writerow([f"g{i}" for i in range(ar)] + [f"x{j}" for j in range(self.values.shape[1])])
        for c, v in zip(self.coords, self.values):
            w.writerow([int(x) for x in c] + [repr(float(x)) for x in v])
        return buf.getvalue()


def _row_of(coords: np.ndarray, g) -> int:
    hits = np.flatnonzero(np.all(coords == np.asarray(g), axis=1))
    if not len(hits):
        raise KeyError(g)
    return int(hits[0])


def simulate_trace(model: ProcessModel, window, rng: RngStream, eps: float = DEFAULT_EPS) -> Trace:
    """One sample path on ``window``."""
    carr = window_coords(model.group, window)
    vals = simulate_values(model, carr, rng, 1, eps)[0]
    prov = {"rng": rng.to_json(), "model": model_hash(model), "eps": eps}
    if isinstance(window, FolnerWindow):
        prov["radius"] = window.radius
    return Trace(np.array(carr), vals, prov)


# ----------------------------------------------------------------------------
# characteristic functions

def _as_t(model, coords, tvec):
    t = np.asarray(tvec, dtype=float)
    k, d = len(coords), model.dim
    if d == 1 and t.shape[-1:] == (k,):
        t = t[..., None]
    if t.shape[-2:] != (k, d):
        raise DimensionMismatch(f"t must have trailing shape ({k},) or ({k}, {d}), got {t.shape}")
    return t


def _log_cf(model, coords, t):
    if isinstance(model, Leaf):
        tt = t[..., 0]
        out = log_charfn_linear(model.jumps, coords, tt) + 1j * model.drift * tt.sum(axis=-1)
        if model.gaussian is not None:
            cov = model.gaussian.cov_matrix(coords)
            out = out - 0.5 * np.einsum("...i,ij,...j->...", tt, cov, tt)
        return out
    if isinstance(model, SumNode):
        return _log_cf(model.left, coords, t) + _log_cf(model.right, coords, t)
    dl = model.left.dim
    return _log_cf(model.left, coords, t[..., :dl]) + _log_cf(model.right, coords, t[..., dl:])


def log_marginal_charfn(model: ProcessModel, coords, tvec):
    """``log E exp(i sum_j <t_j, X_{g_j}>)`` (exact, from the Levy-Khintchine triplet)."""
    coords = canonical_coords(model.group, coords)
    res = _log_cf(model, coords, _as_t(model, coords, tvec))
    return complex(res) if np.ndim(res) == 0 else res


def marginal_charfn(model: ProcessModel, coords, tvec):
    """Finite-dimensional characteristic function; never zero."""
    res = np.exp(log_marginal_charfn(model, coords, tvec))
    return complex(res) if np.ndim(res) == 0 else res


# ----------------------------------------------------------------------------
# canonical pseudo-metric

@dataclass(frozen=True)
class MetricEstimate:
    value: float
    stderr: float
    n: int


def canonical_metric(model: ProcessModel, g, h, n: int, rng: RngStream, eps: float = DEFAULT_EPS) -> MetricEstimate:
    """Monte Carlo estimate of ``E[|X_g - X_h| ^ 1]``."""
    if n < 1:
        raise ValueError("need at least one sample")
    g, h = element(model.group, g), element(model.group, h)
    if g == h:
        return MetricEstimate(0.0, 0.0, n)
    vals = simulate_values(model, [g, h], rng, n, eps)
    d = np.minimum(np.linalg.norm(vals[:, 0, :] - vals[:, 1, :], axis=-1), 1.0)
    se = float(d.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return MetricEstimate(float(d.mean()), se, n)
