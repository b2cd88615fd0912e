"""
Poisson random measures with a translation-invariant Levy intensity,
sampled on a finite window.

A :class:`PointConfiguration` holds ``n_replicas`` independent draws at
once. Kernel components become located points (location ``t``, mark
``v``); fixed-point atoms are stored as per-replica multiplicities because
constant configurations do not move under translation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
import io

import numpy as np

from .errors import OverflowGuard, WindowUnderflow
from .groups import CoordIndex, FolnerWindow, GroupSpec, element
from .measures import DissipativeKernel, FixedPointAtoms, ValidatedLevy, canonical_coords

__all__ = ["RngStream", "PointConfiguration", "sample_point_config", "count",
           "shift_config", "window_coords", "kernel_region", "check_coverage",
           "MAX_EXPECTED_POINTS"]

MAX_EXPECTED_POINTS = 1e8


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by ``(seed, stream_id, path)``.

    Draws come from numpy's counter-based Philox bit generator, keyed
    through a ``SeedSequence``; children extend ``path`` so replicas and
    model leaves get independent streams without shared state.
    """

    seed: int
    stream_id: int = 0
    path: tuple = ()

    def __post_init__(self):
        for v in (self.seed, self.stream_id):
            if not 0 <= int(v) < 2**64:
                raise ValueError("seed and stream_id must be unsigned 64-bit integers")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),) + tuple(self.path))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, *keys: int) -> "RngStream":
        return replace(self, path=tuple(self.path) + tuple(int(k) for k in keys))

    def to_json(self):
        return {"seed": int(self.seed), "streamId": int(self.stream_id), "path": list(self.path)}


def window_coords(group: GroupSpec, window) -> np.ndarray:
    """Coordinates of a window (a :class:`FolnerWindow` or a list of elements)."""
    if isinstance(window, FolnerWindow):
        return window.array
    if isinstance(window, np.ndarray) and window.ndim == 2:
        return group.reduce(window)
    coords = canonical_coords(group, window)
    return np.array(coords, dtype=np.int64).reshape(len(coords), group.arity)


def kernel_region(group: GroupSpec, coords: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Locations ``t`` with ``g - t`` in the kernel support for some window ``g``."""
    ts = group.reduce(coords[:, None, :] - offsets[None, :, :]).reshape(-1, group.arity)
    return np.unique(ts, axis=0)


@dataclass(frozen=True, eq=False)
class PointConfiguration:
    """Realised Poisson counting measure(s) on a window.

    Attributes
    ----------
    locations, marks, components, replica : ndarray
        One row per located point.
    regions : dict
        Component index -> array of locations that were sampled; the
        configuration is complete on those sites.
    atom_values, atom_components : ndarray
        Constant value and component of each fixed-point atom.
    atom_counts : ndarray, shape (n_replicas, n_atoms)
        Multiplicities of the fixed-point atoms.
    coords : ndarray
        Window the configuration was drawn for (shifted along with it).
    """

    levy: ValidatedLevy
    n_replicas: int
    locations: np.ndarray
    marks: np.ndarray
    components: np.ndarray
    replica: np.ndarray
    regions: dict
    atom_values: np.ndarray
    atom_components: np.ndarray
    atom_counts: np.ndarray
    coords: np.ndarray
    rng: object = None

    @property
    def group(self) -> GroupSpec:
        return self.levy.group

    def __len__(self):
        return len(self.marks)

    def replica_config(self, i: int) -> "PointConfiguration":
        sel = self.replica == i
        return replace(self, n_replicas=1, locations=self.locations[sel], marks=self.marks[sel],
                       components=self.components[sel], replica=np.zeros(int(sel.sum()), dtype=np.int64),
                       atom_counts=self.atom_counts[i:i + 1])

    def to_csv(self) -> str:
        """CSV audit table: one row per point, fixed-point atoms repeated by multiplicity."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        ar = self.group.arity
        w.writerow(["replica", "componentId", "kind"] + [f"loc{i}" for i in range(ar)] + ["mark"])
        for r, c, loc, m in zip(self.replica, self.components, self.locations, self.marks):
            w.writerow([int(r), int(c), "point"] + [int(x) for x in loc] + [repr(float(m))])
        for r in range(self.n_replicas):
            for a, (v, c) in enumerate(zip(self.atom_values, self.atom_components)):
                for _ in range(int(self.atom_counts[r, a])):
                    w.writerow([r, int(c), "global"] + [""] * ar + [repr(float(v))])
        return buf.getvalue()


def _readonly(*arrays):
    for a in arrays:
        a.setflags(write=False)


def sample_point_config(spec: ValidatedLevy, window, rng: RngStream, n: int = 1) -> PointConfiguration:
    """Draw ``n`` independent Poisson configurations covering ``window``.

    For each kernel component the sampled region is the window dilated by
    the kernel support, so every in-window coordinate sees all points that
    contribute to it. The number of points is Poisson with mean
    ``rate * |region|`` and locations are uniform on the region.

    Raises
    ------
    OverflowGuard
        If the expected number of points exceeds ``MAX_EXPECTED_POINTS``.
    """
    group = spec.group
    coords = window_coords(group, window)
    if len(coords) == 0:
        raise ValueError("window must be nonempty")
    gen = rng.generator()
    locs, marks, comps, reps = [], [], [], []
    regions = {}
    atom_vals, atom_comps, atom_mass = [], [], []
    for ci, comp in enumerate(spec.components):
        if isinstance(comp, FixedPointAtoms):
            for c, w in comp.atoms:
                atom_vals.append(c)
                atom_comps.append(ci)
                atom_mass.append(w)
            continue
        region = kernel_region(group, coords, comp.kernel.offsets_array)
        regions[ci] = region
        mean = comp.rate * len(region)
        if mean * n > MAX_EXPECTED_POINTS:
            raise OverflowGuard(f"expected {mean * n:.3g} points exceeds {MAX_EXPECTED_POINTS:.0e}")
        counts = gen.poisson(mean, size=n)
        total = int(counts.sum())
        reps.append(np.repeat(np.arange(n, dtype=np.int64), counts))
        locs.append(region[gen.integers(len(region), size=total)])
        marks.append(np.asarray(comp.marks.sample(gen, total), dtype=float))
        comps.append(np.full(total, ci, dtype=np.int64))
    if atom_vals:
        atom_counts = gen.poisson(np.asarray(atom_mass), size=(n, len(atom_mass))).astype(np.int64)
    else:
        atom_counts = np.zeros((n, 0), dtype=np.int64)
    ar = group.arity
    out = PointConfiguration(
        levy=spec, n_replicas=int(n),
        locations=np.concatenate(locs) if locs else np.zeros((0, ar), dtype=np.int64),
        marks=np.concatenate(marks) if marks else np.zeros(0),
        components=np.concatenate(comps) if comps else np.zeros(0, dtype=np.int64),
        replica=np.concatenate(reps) if reps else np.zeros(0, dtype=np.int64),
        regions=regions,
        atom_values=np.asarray(atom_vals, dtype=float),
        atom_components=np.asarray(atom_comps, dtype=np.int64),
        atom_counts=atom_counts,
        coords=np.array(coords),
        rng=rng,
    )
    _readonly(out.locations, out.marks, out.components, out.replica, out.atom_counts, out.coords)
    return out


def count(theta: PointConfiguration, region=None, atoms=None):
    """Number of points of ``theta`` in a region.

    Parameters
    ----------
    region : callable or None or False
        Vectorised predicate ``region(locations, marks) -> bool mask`` on
        located points; ``None`` keeps all of them, ``False`` none.
    atoms : callable or None or False
        Predicate ``atoms(values) -> bool mask`` on fixed-point atoms,
        with the same ``None``/``False`` conventions.

    Returns
    -------
    int for a single configuration, otherwise an array of per-replica counts.
    """
    if region is False:
        mask = np.zeros(len(theta.marks), dtype=bool)
    elif region is None:
        mask = np.ones(len(theta.marks), dtype=bool)
    else:
        mask = np.asarray(region(theta.locations, theta.marks), dtype=bool)
    res = np.bincount(theta.replica[mask], minlength=theta.n_replicas).astype(np.int64)
    if atoms is not False and theta.atom_counts.shape[1]:
        amask = np.ones(len(theta.atom_values), dtype=bool) if atoms is None \
            else np.asarray(atoms(theta.atom_values), dtype=bool)
        res = res + theta.atom_counts[:, amask].sum(axis=1)
    return int(res[0]) if theta.n_replicas == 1 else res


def shift_config(theta: PointConfiguration, g, require=None) -> PointConfiguration:
    """Suspension shift: every location ``t`` becomes ``g . t``.

    Marks and fixed-point multiplicities are unchanged. The sampled
    regions move with the points. If ``require`` (a window) is given, the
    shifted configuration must still cover it, else ``WindowUnderflow``.
    """
    group = theta.group
    g = np.array(element(group, g), dtype=np.int64)
    locs = group.reduce(theta.locations + g)
    regions = {k: group.reduce(v + g) for k, v in theta.regions.items()}
    out = replace(theta, locations=locs, regions=regions, coords=group.reduce(theta.coords + g))
    _readonly(out.locations, out.coords)
    if require is not None:
        check_coverage(out, window_coords(group, require))
    return out


def check_coverage(theta: PointConfiguration, coords: np.ndarray):
    """Raise ``WindowUnderflow`` unless every contributing site of ``coords`` was sampled."""
    group = theta.group
    for ci, comp in enumerate(theta.levy.components):
        if not isinstance(comp, DissipativeKernel):
            continue
        need = kernel_region(group, coords, comp.kernel.offsets_array)
        have = theta.regions.get(ci)
        if have is None:
            raise WindowUnderflow(f"component {ci} was not sampled")
        if np.any(CoordIndex(group, have).lookup(need) < 0):
            raise WindowUnderflow("coordinates outside the sampled region")
