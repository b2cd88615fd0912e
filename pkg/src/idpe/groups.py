"""
Countable index groups: integer lattices Z^d and finite products of cyclic
groups Z/m_1 x ... x Z/m_k.

Group elements are plain integer tuples. All group laws are written
additively, so ``group_op(a, b)`` is ``a + b`` (reduced modulo the moduli
for cyclic factors) and the identity is the all-zeros tuple.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import itertools

import numpy as np

from .errors import InvalidElement

__all__ = [
    "GroupSpec",
    "FolnerWindow",
    "IntegerLattice",
    "FiniteCyclicProduct",
    "group_op",
    "inverse",
    "identity",
    "folner_window",
    "element",
    "CoordIndex",
]


@dataclass(frozen=True)
class GroupSpec:
    """Index group description.

    Parameters
    ----------
    kind : {"lattice", "cyclic"}
    dim : int
        Lattice dimension (``kind == "lattice"``).
    moduli : tuple of int
        Cyclic factor orders (``kind == "cyclic"``).
    """

    kind: str
    dim: int = 0
    moduli: tuple = ()

    def __post_init__(self):
        if self.kind == "lattice":
            if int(self.dim) < 1:
                raise ValueError(f"lattice dimension must be >= 1, got {self.dim}")
            object.__setattr__(self, "dim", int(self.dim))
            object.__setattr__(self, "moduli", ())
        elif self.kind == "cyclic":
            moduli = tuple(int(m) for m in self.moduli)
            if not moduli or any(m < 1 for m in moduli):
                raise ValueError(f"cyclic moduli must be a nonempty list of ints >= 1, got {self.moduli}")
            object.__setattr__(self, "moduli", moduli)
            object.__setattr__(self, "dim", 0)
        else:
            raise ValueError(f"unknown group kind {self.kind!r}")

    @property
    def arity(self) -> int:
        return self.dim if self.kind == "lattice" else len(self.moduli)

    @property
    def is_finite(self) -> bool:
        return self.kind == "cyclic"

    @property
    def order(self):
        """Number of elements (``inf`` for lattices)."""
        if self.kind == "lattice":
            return float("inf")
        return int(np.prod(self.moduli))

    @property
    def identity(self) -> tuple:
        return (0,) * self.arity

    def reduce(self, coords):
        """Reduce an integer array of shape ``(..., arity)`` into canonical form."""
        coords = np.asarray(coords, dtype=np.int64)
        if self.kind == "cyclic":
            coords = np.mod(coords, np.asarray(self.moduli, dtype=np.int64))
        return coords

    def to_json(self) -> dict:
        if self.kind == "lattice":
            return {"kind": "lattice", "dim": self.dim}
        return {"kind": "cyclic", "moduli": list(self.moduli)}

    @classmethod
    def from_json(cls, obj) -> "GroupSpec":
        kind = obj.get("kind")
        if kind == "lattice":
            return cls("lattice", dim=obj.get("dim", 1))
        if kind == "cyclic":
            return cls("cyclic", moduli=tuple(obj.get("moduli", ())))
        raise ValueError(f"unknown group kind {kind!r}")


def IntegerLattice(dim: int = 1) -> GroupSpec:
    return GroupSpec("lattice", dim=dim)


def FiniteCyclicProduct(moduli) -> GroupSpec:
    return GroupSpec("cyclic", moduli=tuple(moduli))


def element(spec: GroupSpec, a) -> tuple:
    """Validate ``a`` against ``spec`` and return it as a canonical tuple.

    Integers are accepted for one-dimensional groups. Cyclic coordinates
    are reduced into ``[0, m_i)``.
    """
    if isinstance(a, (int, np.integer)):
        a = (int(a),)
    try:
        a = tuple(a)
    except TypeError:
        raise InvalidElement(f"not a group element: {a!r}") from None
    if len(a) != spec.arity:
        raise InvalidElement(f"element {a!r} has arity {len(a)}, group needs {spec.arity}")
    out = []
    for x in a:
        if isinstance(x, (bool, np.bool_)) or not float(x).is_integer():
            raise InvalidElement(f"non-integer coordinate in {a!r}")
        out.append(int(x))
    if spec.kind == "cyclic":
        out = [x % m for x, m in zip(out, spec.moduli)]
    return tuple(out)


def identity(spec: GroupSpec) -> tuple:
    return spec.identity


def group_op(spec: GroupSpec, a, b) -> tuple:
    """Group product ``a . b``."""
    a = element(spec, a)
    b = element(spec, b)
    return element(spec, tuple(x + y for x, y in zip(a, b)))


def inverse(spec: GroupSpec, a) -> tuple:
    a = element(spec, a)
    return element(spec, tuple(-x for x in a))


@dataclass(frozen=True)
class FolnerWindow:
    """Finite averaging window, elements in lexicographic order.

    On a lattice the window of radius N is the box ``[-N, N]^d``; on a
    finite group it is the whole group.
    """

    group: GroupSpec
    radius: int
    elements: tuple

    def __len__(self):
        return len(self.elements)

    @cached_property
    def array(self) -> np.ndarray:
        arr = np.array(self.elements, dtype=np.int64).reshape(len(self.elements), self.group.arity)
        arr.setflags(write=False)
        return arr

    def boundary(self) -> tuple:
        """Elements of the window having a unit-step neighbour outside it."""
        if self.group.is_finite:
            return ()
        n = self.radius
        return tuple(e for e in self.elements if any(abs(x) == n for x in e))


def folner_window(spec: GroupSpec, radius: int) -> FolnerWindow:
    radius = int(radius)
    if radius < 0:
        raise ValueError(f"radius must be nonnegative, got {radius}")
    if spec.kind == "lattice":
        side = range(-radius, radius + 1)
        elems = tuple(itertools.product(side, repeat=spec.dim))
    else:
        elems = tuple(itertools.product(*(range(m) for m in spec.moduli)))
    return FolnerWindow(spec, radius, elems)


class CoordIndex:
    """Vectorised lookup from group elements to positions in a coordinate list.

    Parameters
    ----------
    group : GroupSpec
    coords : array_like, shape (k, arity)
        Distinct canonical elements.
    """

    def __init__(self, group: GroupSpec, coords):
        self.group = group
        coords = group.reduce(np.asarray(coords, dtype=np.int64).reshape(-1, group.arity))
        self.coords = coords
        self.lo = coords.min(axis=0)
        self.span = coords.max(axis=0) - self.lo + 1
        self._strides = np.concatenate([np.cumprod(self.span[::-1])[::-1][1:], [1]]).astype(np.int64)
        keys = (coords - self.lo) @ self._strides
        order = np.argsort(keys, kind="stable")
        self._keys = keys[order]
        if np.any(np.diff(self._keys) == 0):
            raise ValueError("coordinate list contains duplicates")
        self._pos = order

    def __len__(self):
        return len(self.coords)

    def lookup(self, query) -> np.ndarray:
        """Positions of ``query`` rows (shape ``(..., arity)``), ``-1`` if absent."""
        q = self.group.reduce(query)
        shape = q.shape[:-1]
        q = q.reshape(-1, self.group.arity)
        rel = q - self.lo
        inside = np.all((rel >= 0) & (rel < self.span), axis=1)
        keys = np.where(inside, rel @ self._strides, -1)
        pos = np.searchsorted(self._keys, keys).clip(0, len(self._keys) - 1)
        found = inside & (self._keys[pos] == keys)
        out = np.where(found, self._pos[pos], -1)
        return out.reshape(shape)
