"""
Translation-invariant Levy measures on R^G built from two families.

``DissipativeKernel``
    ell = sum over t in G of the translate by t of kappa, where kappa is
    ``rate`` times the law of the configuration ``h -> v * f(h)`` with ``v``
    drawn from a mark distribution and ``f`` a finitely supported kernel.
    A point at location ``t`` with mark ``v`` therefore contributes
    ``v * f(g - t)`` to coordinate ``g``.
``FixedPointAtoms``
    Finitely many atoms sitting on constant configurations ``(c)_{g in G}``,
    which are fixed by every translation.

Finite-dimensional marginals are exact atom lists when marks are discrete
and deterministic quadrature grids otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy import stats

from .errors import (DuplicateCoords, EmptySpec, Nonintegrable, NoWitness,
                     ZeroAtomMass)
from .groups import GroupSpec, element

__all__ = [
    "DiscreteAtoms", "GaussianMarks", "TwoSidedPareto", "Kernel",
    "DissipativeKernel", "FixedPointAtoms", "LevySpec", "ValidatedLevy",
    "FinDimLevy", "NullityVerdict", "validate_levy", "coordinate_marginal",
    "classify_nullity", "split_by_invariant", "zero_levy", "marks_from_json",
    "levy_from_json", "DEFAULT_CELLS", "canonical_coords", "truncation_bias_bound",
]

DEFAULT_CELLS = 2048
TAIL_MASS = 1e-8
_OVERFLOW = 1e300


# ----------------------------------------------------------------------------
# mark distributions

@dataclass(frozen=True)
class DiscreteAtoms:
    """Finitely supported mark law."""

    values: tuple
    probs: tuple
    is_discrete = True

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        probs = tuple(float(p) for p in self.probs)
        if not values or len(values) != len(probs):
            raise ValueError("DiscreteAtoms needs equally long nonempty values/probs")
        if any(p < 0 for p in probs):
            raise ValueError("negative mark probability")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ValueError(f"mark probabilities sum to {math.fsum(probs)!r}, not 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        values = np.asarray(self.values)
        if len(values) == 1:
            return np.full(size, values[0])
        return values[gen.choice(len(values), size=size, p=np.asarray(self.probs))]

    def nodes(self, cells: int = DEFAULT_CELLS):
        keep = np.asarray(self.probs) > 0
        return np.asarray(self.values)[keep], np.asarray(self.probs)[keep]

    def to_json(self):
        return {"kind": "atoms", "values": list(self.values), "probs": list(self.probs)}


@dataclass(frozen=True)
class GaussianMarks:
    mean: float
    stddev: float
    is_discrete = False

    def __post_init__(self):
        if not self.stddev > 0:
            raise ValueError("Gaussian mark stddev must be positive")

    def sample(self, gen, size):
        return gen.normal(self.mean, self.stddev, size=size)

    def nodes(self, cells: int = DEFAULT_CELLS):
        # midpoint rule on [mean - R sd, mean + R sd], two-sided tail mass TAIL_MASS
        r = stats.norm.isf(TAIL_MASS / 2)
        edges = np.linspace(-r, r, cells + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        w = stats.norm.pdf(mid) * (edges[1] - edges[0])
        return self.mean + self.stddev * mid, w

    def to_json(self):
        return {"kind": "gaussian", "mean": self.mean, "stddev": self.stddev}


@dataclass(frozen=True)
class TwoSidedPareto:
    """Symmetric mark ``scale * Y`` with density of ``Y`` proportional to
    ``|y|^(-1-alpha)`` on ``|y| >= cutoff``."""

    alpha: float
    scale: float
    cutoff: float
    is_discrete = False

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ValueError("Pareto alpha must lie in (0, 2)")
        if not (self.scale > 0 and self.cutoff > 0):
            raise ValueError("Pareto scale and cutoff must be positive")

    @property
    def min_abs(self) -> float:
        return self.scale * self.cutoff

    def sample(self, gen, size):
        u = 1.0 - gen.random(size)  # (0, 1]
        sign = np.where(gen.random(size) < 0.5, -1.0, 1.0)
        return sign * self.min_abs * u ** (-1.0 / self.alpha)

    def nodes(self, cells: int = DEFAULT_CELLS):
        # midpoint rule in log|y|, truncated where the tail mass drops below TAIL_MASS
        half = max(cells // 2, 1)
        top = math.log(1.0 / TAIL_MASS) / self.alpha
        edges = np.linspace(0.0, top, half + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        w = 0.5 * self.alpha * np.exp(-self.alpha * mid) * (edges[1] - edges[0])
        mag = self.min_abs * np.exp(mid)
        return np.concatenate([-mag[::-1], mag]), np.concatenate([w[::-1], w])

    def to_json(self):
        return {"kind": "pareto", "alpha": self.alpha, "scale": self.scale, "cutoff": self.cutoff}


def marks_from_json(obj):
    kind = obj.get("kind")
    if kind == "atoms":
        return DiscreteAtoms(tuple(obj["values"]), tuple(obj["probs"]))
    if kind == "delta":
        return DiscreteAtoms((obj["value"],), (1.0,))
    if kind == "gaussian":
        return GaussianMarks(float(obj["mean"]), float(obj["stddev"]))
    if kind == "pareto":
        return TwoSidedPareto(float(obj["alpha"]), float(obj.get("scale", 1.0)), float(obj["cutoff"]))
    raise ValueError(f"unknown mark kind {kind!r}")


# ----------------------------------------------------------------------------
# kernels and Levy specs

@dataclass(frozen=True)
class Kernel:
    """Finitely supported real filter on the group; zero coefficients dropped."""

    group: GroupSpec
    offsets: tuple
    coefs: tuple

    @classmethod
    def create(cls, group: GroupSpec, mapping) -> "Kernel":
        items = mapping.items() if hasattr(mapping, "items") else mapping
        acc = {}
        for key, coef in items:
            s = element(group, key)
            acc.setdefault(s, []).append(float(coef))
        merged = {s: math.fsum(v) for s, v in acc.items()}
        merged = {s: c for s, c in sorted(merged.items()) if c != 0.0}
        if not merged:
            raise EmptySpec("kernel has no nonzero coefficient")
        return cls(group, tuple(merged), tuple(merged.values()))

    def __len__(self):
        return len(self.offsets)

    @property
    def offsets_array(self) -> np.ndarray:
        return np.array(self.offsets, dtype=np.int64).reshape(len(self.offsets), self.group.arity)

    @property
    def coef_array(self) -> np.ndarray:
        return np.array(self.coefs, dtype=float)

    @property
    def width(self) -> int:
        """Chebyshev diameter of the support."""
        arr = self.offsets_array
        return int((arr.max(axis=0) - arr.min(axis=0)).max())

    def as_dict(self) -> dict:
        return dict(zip(self.offsets, self.coefs))

    def to_json(self):
        return [[list(s), c] for s, c in zip(self.offsets, self.coefs)]


@dataclass(frozen=True)
class DissipativeKernel:
    kernel: Kernel
    marks: object
    rate: float

    def to_json(self):
        return {"type": "kernel", "kernel": self.kernel.to_json(),
                "marks": self.marks.to_json(), "rate": self.rate}


@dataclass(frozen=True)
class FixedPointAtoms:
    """Atoms ``(c, w)``: mass ``w`` on the constant configuration ``c``."""

    atoms: tuple

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple((float(c), float(w)) for c, w in self.atoms))

    @property
    def total_mass(self) -> float:
        return math.fsum(w for _, w in self.atoms)

    def to_json(self):
        return {"type": "fixed_atoms", "atoms": [list(a) for a in self.atoms]}


@dataclass(frozen=True)
class LevySpec:
    group: GroupSpec
    components: tuple

    def to_json(self):
        return {"components": [c.to_json() for c in self.components]}


@dataclass(frozen=True)
class ValidatedLevy:
    """A checked :class:`LevySpec`.

    ``integrability[i]`` is the integral of ``|x_g|^2 ^ 1`` under component
    ``i`` (the same for every coordinate ``g``).
    """

    group: GroupSpec
    components: tuple
    integrability: tuple
    cells: int = DEFAULT_CELLS

    @property
    def is_zero(self) -> bool:
        return not self.components

    @property
    def total_integrability(self) -> float:
        return math.fsum(self.integrability)

    def subset(self, indices) -> "ValidatedLevy":
        indices = sorted(indices)
        return ValidatedLevy(self.group, tuple(self.components[i] for i in indices),
                             tuple(self.integrability[i] for i in indices), self.cells)

    def component_mass(self, i: int) -> float:
        comp = self.components[i]
        if isinstance(comp, FixedPointAtoms):
            return comp.total_mass
        if self.group.is_finite:
            return comp.rate * self.group.order
        return math.inf

    def to_json(self):
        return LevySpec(self.group, self.components).to_json()


def zero_levy(group: GroupSpec, cells: int = DEFAULT_CELLS) -> ValidatedLevy:
    """The zero Levy measure (no jumps)."""
    return ValidatedLevy(group, (), (), cells)


def levy_from_json(obj, group: GroupSpec) -> LevySpec:
    comps = []
    for c in obj.get("components", []):
        typ = c.get("type")
        if typ == "kernel":
            kern = Kernel.create(group, [(tuple(k) if isinstance(k, list) else k, v)
                                         for k, v in c["kernel"]])
            comps.append(DissipativeKernel(kern, marks_from_json(c.get("marks", {"kind": "delta", "value": 1.0})),
                                           float(c.get("rate", 1.0))))
        elif typ == "fixed_atoms":
            comps.append(FixedPointAtoms(tuple(tuple(a) for a in c["atoms"])))
        else:
            raise ValueError(f"unknown Levy component type {typ!r}")
    return LevySpec(group, tuple(comps))


def _min_sq_one(x):
    return np.minimum(np.square(x), 1.0)


def validate_levy(spec: LevySpec, cells: int = DEFAULT_CELLS) -> ValidatedLevy:
    """Check ``ell({0}) = 0`` and per-coordinate integrability.

    Raises
    ------
    EmptySpec
        No components, or a component without atoms.
    ZeroAtomMass
        Mass on the zero configuration.
    Nonintegrable
        Integrability constant not finite (or beyond the overflow guard).
    """
    if not spec.components:
        raise EmptySpec("Levy spec has no components")
    consts = []
    for comp in spec.components:
        if isinstance(comp, FixedPointAtoms):
            if not comp.atoms:
                raise EmptySpec("FixedPointAtoms without atoms")
            for c, w in comp.atoms:
                if c == 0.0:
                    raise ZeroAtomMass("fixed-point atom at the zero configuration")
                if not w > 0:
                    raise ValueError(f"atom mass must be positive, got {w}")
            value = math.fsum(w * min(c * c, 1.0) for c, w in comp.atoms)
        elif isinstance(comp, DissipativeKernel):
            if comp.kernel.group != spec.group:
                raise ValueError("kernel built for a different group")
            if not comp.rate > 0:
                raise ValueError(f"rate must be positive, got {comp.rate}")
            if isinstance(comp.marks, DiscreteAtoms):
                for v, p in zip(comp.marks.values, comp.marks.probs):
                    if v == 0.0 and p > 0:
                        raise ZeroAtomMass("mark law charges 0")
            vals, probs = comp.marks.nodes(cells)
            prod = vals[:, None] * comp.kernel.coef_array[None, :]
            value = comp.rate * math.fsum((probs[:, None] * _min_sq_one(prod)).ravel())
        else:
            raise TypeError(f"unknown component {comp!r}")
        if not math.isfinite(value) or value > _OVERFLOW:
            raise Nonintegrable(f"integrability constant {value!r} not finite")
        consts.append(value)
    return ValidatedLevy(spec.group, tuple(spec.components), tuple(consts), cells)


# ----------------------------------------------------------------------------
# finite-dimensional marginals

@dataclass(frozen=True)
class FinDimLevy:
    """Marginal of ell on ``coords``: ``points[j]`` carries ``weights[j]``.

    ``exact`` is True for atom lists and False for quadrature grids.
    """

    coords: tuple
    points: np.ndarray
    weights: np.ndarray
    exact: bool

    def __len__(self):
        return len(self.weights)

    def as_dict(self) -> dict:
        return {tuple(float(x) for x in p): float(w) for p, w in zip(self.points, self.weights)}


def _translates(group, coords_arr, offsets):
    """Sorted distinct t with g - t in the kernel support for some g in coords."""
    ts = group.reduce(coords_arr[:, None, :] - offsets[None, :, :]).reshape(-1, group.arity)
    return np.unique(ts, axis=0)


def _kernel_profile(kernel: Kernel, coords_arr, ts) -> np.ndarray:
    """Matrix ``A[t, i] = f(coords_i - t)``."""
    group = kernel.group
    lookup = kernel.as_dict()
    diffs = group.reduce(coords_arr[None, :, :] - ts[:, None, :])
    out = np.zeros(diffs.shape[:2])
    for a in range(diffs.shape[0]):
        for i in range(diffs.shape[1]):
            out[a, i] = lookup.get(tuple(int(x) for x in diffs[a, i]), 0.0)
    return out


def canonical_coords(group: GroupSpec, coords) -> tuple:
    coords = tuple(element(group, c) for c in coords)
    if not coords:
        raise ValueError("coordinate list must be nonempty")
    if len(set(coords)) != len(coords):
        raise DuplicateCoords(f"duplicate coordinates in {coords}")
    return coords


def coordinate_marginal(spec: ValidatedLevy, coords) -> FinDimLevy:
    """Push ell forward under ``x -> (x_g)_{g in coords}``, zero vector removed."""
    group = spec.group
    coords = canonical_coords(group, coords)
    carr = np.array(coords, dtype=np.int64)
    k = len(coords)
    vecs, masses = [np.zeros((0, k))], [np.zeros(0)]
    exact = True
    for comp in spec.components:
        if isinstance(comp, FixedPointAtoms):
            vecs.append(np.array([[c] * k for c, _ in comp.atoms], dtype=float))
            masses.append(np.array([w for _, w in comp.atoms], dtype=float))
        else:
            exact &= comp.marks.is_discrete
            ts = _translates(group, carr, comp.kernel.offsets_array)
            prof = _kernel_profile(comp.kernel, carr, ts)
            vals, probs = comp.marks.nodes(spec.cells)
            vecs.append((vals[:, None, None] * prof[None, :, :]).reshape(-1, k))
            masses.append(np.repeat(comp.rate * probs, len(ts)))
    pts = np.concatenate(vecs)
    w = np.concatenate(masses)
    nonzero = np.any(pts != 0.0, axis=1) & (w > 0)
    pts, w = pts[nonzero], w[nonzero]
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    inv = inv.ravel()
    merged = np.zeros(len(uniq))
    counts = np.bincount(inv, minlength=len(uniq))
    single = counts == 1
    merged[inv[single[inv]]] = w[single[inv]]
    for j in np.flatnonzero(~single):
        merged[j] = math.fsum(w[inv == j])
    return FinDimLevy(coords, uniq, merged, exact)


# ----------------------------------------------------------------------------
# nullity and the invariant split

@dataclass(frozen=True)
class NullityVerdict:
    """``null`` is True when no invariant set has finite positive mass.

    Otherwise ``witness`` lists the components forming such a set and
    ``mass`` is its total mass.
    """

    null: bool
    witness: tuple = ()
    mass: float = 0.0
    reason: str = ""

    def to_json(self):
        return {"verdict": "Null" if self.null else "NonNull", "witness": list(self.witness),
                "mass": self.mass, "reason": self.reason}


def classify_nullity(spec: ValidatedLevy) -> NullityVerdict:
    atoms = [i for i, c in enumerate(spec.components) if isinstance(c, FixedPointAtoms)]
    if atoms:
        mass = math.fsum(spec.component_mass(i) for i in atoms)
        return NullityVerdict(False, tuple(atoms), mass, "fixed-point atoms form an invariant set")
    if spec.group.is_finite and spec.components:
        idx = tuple(range(len(spec.components)))
        mass = math.fsum(spec.component_mass(i) for i in idx)
        return NullityVerdict(False, idx, mass, "finite group: the whole space is invariant with finite mass")
    if not spec.components:
        return NullityVerdict(True, reason="zero measure")
    return NullityVerdict(True, reason="kernel translates wander; total mass infinite")


def split_by_invariant(spec: ValidatedLevy, witness: NullityVerdict = None):
    """Split ell into the witnessed invariant part and the rest."""
    if witness is None:
        witness = classify_nullity(spec)
    if witness.null or not witness.witness:
        raise NoWitness("Levy measure is null; no invariant set of finite positive mass")
    rest = [i for i in range(len(spec.components)) if i not in witness.witness]
    return spec.subset(witness.witness), spec.subset(rest)


def truncation_bias_bound(marginal: FinDimLevy, fvals: np.ndarray, eps: float) -> float:
    """Integral of ``f^2`` over ``{|f| <= eps}`` on a marginal."""
    small = np.abs(fvals) <= eps
    return math.fsum(marginal.weights[small] * fvals[small] ** 2)
