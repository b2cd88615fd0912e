"""
Exact ergodic theory on finite state spaces.

A system is a measure on ``n`` states together with a finite family of
self-maps ``T_theta`` indexed by ``theta in range(m)``. Everything is
decided exactly: invariant sets modulo null sets are unions of connected
components of the graph ``s -- T_theta(s)`` on the positive-mass states.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction
import itertools
import math
import numbers

import numpy as np
from scipy.linalg import null_space

from .errors import (BudgetExceeded, HypothesisViolation, IndexMismatch, NotMeasurePreserving,
                     NotProbability, UnsupportedDescriptor)

__all__ = ["FiniteSystem", "InvariantPartition", "LatticeTranslation", "invariant_partition",
           "is_ergodic", "product_system", "is_weakly_mixing", "check_double_ergodicity_equivalence",
           "appendixA_pipeline", "is_null_action", "rotation", "identity_system",
           "random_pipeline_instance", "EquivalenceReport", "PipelineReport"]

_TOL = 1e-12


def _is_exact(values) -> bool:
    return all(isinstance(v, (numbers.Rational, Fraction)) and not isinstance(v, bool) for v in values)


@dataclass(frozen=True, eq=False)
class FiniteSystem:
    """Finite measure space with a family of measure-preserving maps.

    Parameters
    ----------
    measure : sequence of nonnegative reals
        Exact arithmetic is used when every entry is an ``int`` or
        ``Fraction``.
    maps : array_like, shape (m, n)
        ``maps[theta, s] = T_theta(s)``.
    infinite : sequence of bool, optional
        States flagged as carrying infinite mass; their ``measure`` entry
        is ignored.
    """

    measure: tuple
    maps: np.ndarray
    infinite: tuple = None

    def __post_init__(self):
        meas = tuple(self.measure)
        maps = np.atleast_2d(np.asarray(self.maps, dtype=np.int64))
        n = len(meas)
        if maps.shape[1] != n:
            raise NotMeasurePreserving(f"maps act on {maps.shape[1]} states but the measure has {n}")
        if maps.size and (maps.min() < 0 or maps.max() >= n):
            raise NotMeasurePreserving("map image outside the state space")
        inf = tuple(bool(b) for b in (self.infinite if self.infinite is not None else (False,) * n))
        if len(inf) != n:
            raise NotMeasurePreserving("infinite flags must match the state count")
        if any(m < 0 for m in meas):
            raise NotMeasurePreserving("negative mass")
        maps.setflags(write=False)
        object.__setattr__(self, "measure", meas)
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "infinite", inf)
        self._validate()

    @property
    def n(self) -> int:
        return len(self.measure)

    @property
    def n_maps(self) -> int:
        return self.maps.shape[0]

    @property
    def exact(self) -> bool:
        return _is_exact(self.measure)

    @property
    def positive(self) -> np.ndarray:
        return np.array([inf or m > 0 for m, inf in zip(self.measure, self.infinite)], dtype=bool)

    def total(self):
        if any(self.infinite):
            return math.inf
        return sum(self.measure) if self.exact else math.fsum(self.measure)

    def _validate(self):
        n = self.n
        exact = self.exact
        for theta, tmap in enumerate(self.maps):
            pre = [[] for _ in range(n)]
            for s, t in enumerate(tmap):
                pre[t].append(s)
            for s in range(n):
                pre_inf = any(self.infinite[u] for u in pre[s])
                if pre_inf != self.infinite[s]:
                    raise NotMeasurePreserving(f"map {theta}: infinite mass not preserved at state {s}")
                if self.infinite[s]:
                    continue
                if exact:
                    ok = sum(self.measure[u] for u in pre[s]) == self.measure[s]
                else:
                    got = math.fsum(self.measure[u] for u in pre[s])
                    ok = abs(got - self.measure[s]) <= _TOL * max(1.0, abs(self.measure[s]))
                if not ok:
                    raise NotMeasurePreserving(f"map {theta}: mass of T^-1({s}) differs from mass of {s}")

    def to_json(self):
        return {"measure": [str(m) if isinstance(m, Fraction) else m for m in self.measure],
                "maps": self.maps.tolist(), "infinite": list(self.infinite)}


@dataclass(frozen=True)
class LatticeTranslation:
    """Symbolic translation action of ``Z^dim`` on itself with counting measure."""

    dim: int = 1


@dataclass(frozen=True)
class InvariantPartition:
    """Atoms of the invariant sigma-algebra, as sorted tuples of states."""

    atoms: tuple
    masses: tuple

    def __len__(self):
        return len(self.atoms)


def rotation(n: int, step: int = 1, maps: int = 1) -> FiniteSystem:
    """Rotation by ``step`` on ``Z/n`` with uniform exact measure."""
    row = (np.arange(n) + step) % n
    return FiniteSystem(tuple(Fraction(1, n) for _ in range(n)), np.tile(row, (maps, 1)))


def identity_system(n: int, maps: int = 1) -> FiniteSystem:
    return FiniteSystem(tuple(Fraction(1, n) for _ in range(n)), np.tile(np.arange(n), (maps, 1)))


def _components(maps: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Component label per state (``-1`` off ``keep``), labels in order of first state."""
    n = len(keep)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for row in maps:
        for s in range(n):
            if keep[s]:
                a, b = find(s), find(int(row[s]))
                if a != b:
                    parent[max(a, b)] = min(a, b)
    labels = np.full(n, -1, dtype=np.int64)
    seen = {}
    for s in range(n):
        if keep[s]:
            labels[s] = seen.setdefault(find(s), len(seen))
    return labels


def invariant_partition(sys: FiniteSystem) -> InvariantPartition:
    """Minimal invariant sets modulo null states."""
    labels = _components(sys.maps, sys.positive)
    k = labels.max() + 1 if labels.size else 0
    atoms, masses = [], []
    for c in range(k):
        states = tuple(int(s) for s in np.flatnonzero(labels == c))
        atoms.append(states)
        if any(sys.infinite[s] for s in states):
            masses.append(math.inf)
        else:
            masses.append(sum(sys.measure[s] for s in states))
    return InvariantPartition(tuple(atoms), tuple(masses))


def _require_probability(sys: FiniteSystem):
    if any(sys.infinite):
        raise NotProbability("system carries infinite mass")
    total = sys.total()
    if sys.exact:
        if total != 1:
            raise NotProbability(f"total mass {total} != 1")
    elif abs(total - 1.0) > 1e-9:
        raise NotProbability(f"total mass {total} != 1")


def is_ergodic(sys: FiniteSystem) -> bool:
    _require_probability(sys)
    return len(invariant_partition(sys)) == 1


def product_system(a: FiniteSystem, b: FiniteSystem) -> FiniteSystem:
    """``(T_theta x S_theta)`` on ``n_a * n_b`` states; state ``(x, y)`` is ``x * n_b + y``."""
    if a.n_maps != b.n_maps:
        raise IndexMismatch(f"index sets differ in size: {a.n_maps} vs {b.n_maps}")
    nb = b.n
    meas = tuple(mx * my for mx in a.measure for my in b.measure)
    inf = tuple(ix or iy for ix in a.infinite for iy in b.infinite)
    maps = (a.maps[:, :, None] * nb + b.maps[:, None, :]).reshape(a.n_maps, -1)
    return FiniteSystem(meas, maps, inf)


def is_weakly_mixing(sys: FiniteSystem) -> bool:
    return is_ergodic(product_system(sys, sys))


def is_null_action(obj) -> bool:
    """True when no invariant set has positive finite mass."""
    if isinstance(obj, LatticeTranslation):
        return True
    if not isinstance(obj, FiniteSystem):
        raise UnsupportedDescriptor(f"cannot decide nullity for {type(obj).__name__}")
    part = invariant_partition(obj)
    return not any(0 < m < math.inf for m in part.masses)


# ----------------------------------------------------------------------------
# exhaustive enumeration

@dataclass
class EquivalenceReport:
    enumerated: int
    distinctClasses: int
    ergodicCount: int
    wmCount: int
    wmNontrivial: int
    ergodicPartners: int
    pairsChecked: int
    counterexamples: list
    scope: dict

    def to_json(self):
        return asdict(self)


def _measure_grid(n: int, max_den: int):
    """Sorted (nonincreasing) probability vectors with entries ``k/d``, ``d <= max_den``."""
    out = set()
    for d in range(1, max_den + 1):
        for parts in itertools.combinations_with_replacement(range(d + 1), n):
            if sum(parts) == d:
                out.add(tuple(sorted((Fraction(p, d) for p in parts), reverse=True)))
    return sorted(out, reverse=True)


def _preserving_maps(meas, positive_only: bool):
    n = len(meas)
    idx = [s for s in range(n) if meas[s] > 0] if positive_only else list(range(n))
    out = []
    for img in itertools.product(range(n), repeat=n):
        mass = [Fraction(0)] * n
        for s in range(n):
            mass[img[s]] += meas[s]
        if mass == list(meas):
            out.append(img)
    if positive_only:
        # on positive states a preserving map is a bijection; zero states map to themselves
        out = [m for m in out if all(m[s] == s for s in range(n) if s not in idx)]
    return out


def _stabilizer(meas):
    n = len(meas)
    return [p for p in itertools.permutations(range(n)) if all(meas[p[s]] == meas[s] for s in range(n))]


def _conj(tmap, perm):
    inv = [0] * len(perm)
    for s, p in enumerate(perm):
        inv[p] = s
    return tuple(perm[tmap[inv[s]]] for s in range(len(perm)))


def _canon(family, perms, sort_theta: bool):
    best = None
    for p in perms:
        key = tuple(_conj(t, p) for t in family)
        if sort_theta:
            key = tuple(sorted(key))
        if best is None or key < best:
            best = key
    return best


def _null_class(meas, family):
    """Key of the system modulo null states (positive part relabelled in order)."""
    pos = [s for s in range(len(meas)) if meas[s] > 0]
    rel = {s: i for i, s in enumerate(pos)}
    return tuple(tuple(rel[t[s]] for s in pos) for t in family)


def check_double_ergodicity_equivalence(max_states: int, max_maps: int, max_denominator: int = 4,
                                        budget: int = 5_000_000) -> EquivalenceReport:
    """Exhaustively test ``T x T`` ergodic iff ``T x S`` ergodic for every ergodic ``S``.

    ``T`` ranges over probability systems with at most ``max_states``
    states, measures on the grid of fractions with denominators at most
    ``max_denominator``, and ``|Theta| <= max_maps`` preserving maps (all
    self-maps, including non-invertible ones on null states), up to
    isomorphism. ``S`` ranges over ergodic systems of the same size
    bounds with the same index set.

    Raises
    ------
    BudgetExceeded
        ``max_states > 5`` or the candidate count exceeds ``budget``.
    """
    if max_states > 5:
        raise BudgetExceeded("max_states is limited to 5")
    if max_states < 1 or max_maps < 1 or max_denominator < 1:
        raise ValueError("sizes must be positive")
    enumerated = 0
    t_classes = {}  # (m, null class) -> representative system
    s_ergodic = {m: {} for m in range(1, max_maps + 1)}
    erg_cache = {}

    def ergodic_of(sys, key):
        if key not in erg_cache:
            erg_cache[key] = is_ergodic(sys)
        return erg_cache[key]

    for n in range(1, max_states + 1):
        for meas in _measure_grid(n, max_denominator):
            pos_meas = tuple(m for m in meas if m > 0)
            all_maps = _preserving_maps(meas, positive_only=False)
            perms = _stabilizer(meas)
            for m in range(1, max_maps + 1):
                seen = set()
                for fam in itertools.combinations_with_replacement(all_maps, m):
                    enumerated += 1
                    if enumerated > budget:
                        raise BudgetExceeded(f"more than {budget} candidate systems")
                    key = _canon(fam, perms, sort_theta=True)
                    if key in seen:
                        continue
                    seen.add(key)
                    nkey = (m, pos_meas, _canon(_null_class(meas, fam), _stabilizer(pos_meas), True))
                    if nkey not in t_classes:
                        t_classes[nkey] = FiniteSystem(meas, np.array(fam))
            if 0 in meas:
                continue
            # ergodic partners: positive states only, ordered index set
            pmaps = _preserving_maps(meas, positive_only=True)
            for m in range(1, max_maps + 1):
                for fam in itertools.product(pmaps, repeat=m):
                    key = (m, meas, _canon(fam, perms, sort_theta=False))
                    if key in s_ergodic[m]:
                        continue
                    sys = FiniteSystem(meas, np.array(fam))
                    if is_ergodic(sys):
                        s_ergodic[m][key] = sys

    ergodic_count = wm_count = wm_nontrivial = pairs = 0
    counterexamples = []
    for (m, _, _), T in t_classes.items():
        erg = is_ergodic(T)
        ergodic_count += erg
        wm = is_weakly_mixing(T)
        wm_count += wm
        if wm and int(T.positive.sum()) > 1:
            wm_nontrivial += 1
        all_partners = True
        for skey, S in s_ergodic[m].items():
            pairs += 1
            if not is_ergodic(product_system(T, S)):
                all_partners = False
                break
        if wm != all_partners:
            counterexamples.append({"T": T.to_json(), "wm": wm, "allPartnersErgodic": all_partners})
    return EquivalenceReport(
        enumerated=enumerated, distinctClasses=len(t_classes), ergodicCount=ergodic_count,
        wmCount=wm_count, wmNontrivial=wm_nontrivial,
        ergodicPartners=sum(len(v) for v in s_ergodic.values()), pairsChecked=pairs,
        counterexamples=counterexamples,
        scope={"maxStates": max_states, "maxMaps": max_maps, "maxDenominator": max_denominator,
               "indexSets": f"Theta = {{0..m-1}}, 1 <= m <= {max_maps}"})


# ----------------------------------------------------------------------------
# machine-checked proof pipeline

@dataclass
class PipelineReport:
    C: float
    F_invariant_err: float
    F_constant_err: float
    fY_max: float
    gram_max: float
    f_max_positive: float
    passed: bool
    F: list = field(default_factory=list)

    def to_json(self):
        return asdict(self)


def _as_float(sys: FiniteSystem) -> np.ndarray:
    return np.array([float(m) for m in sys.measure])


def appendixA_pipeline(T: FiniteSystem, S: FiniteSystem, f, tol: float = 1e-12) -> PipelineReport:
    """Run the argument forcing an invariant zero-mean ``f`` on ``T x S`` to vanish.

    With ``F(x, x') = sum_y f(x, y) f(x', y) eta(y)``: ``F`` is ``T x T``
    invariant, hence constant ``C`` a.e.; ``f_Y = xi^T f`` is ``S``
    invariant with zero mean, hence zero, so ``C = 0``. Then
    ``Psi_f^* Psi_f = diag(sqrt xi) F diag(sqrt xi) = 0`` and ``f = 0``
    on positive pairs.

    Raises
    ------
    HypothesisViolation
        Names the failing hypothesis.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (T.n, S.n):
        raise HypothesisViolation(f"f has shape {f.shape}, expected {(T.n, S.n)}")
    if T.n_maps != S.n_maps:
        raise HypothesisViolation("T and S are indexed by different sets")
    for name, sys in (("T", T), ("S", S)):
        try:
            _require_probability(sys)
        except NotProbability as exc:
            raise HypothesisViolation(f"{name} is not a probability system: {exc}") from None
    if not is_ergodic(product_system(T, T)):
        raise HypothesisViolation("T x T is not ergodic")
    if not is_ergodic(S):
        raise HypothesisViolation("S is not ergodic")
    xi, eta = _as_float(T), _as_float(S)
    px, py = xi > 0, eta > 0
    pos = np.outer(px, py)
    for th in range(T.n_maps):
        moved = f[np.ix_(T.maps[th], S.maps[th])]
        if np.max(np.abs(moved - f)[pos], initial=0.0) > tol:
            raise HypothesisViolation("f is not T x S invariant")
    if abs(xi @ f @ eta) > tol:
        raise HypothesisViolation("f does not have zero mean")
    F = f @ np.diag(eta) @ f.T
    pp = np.outer(px, px)
    inv_err = 0.0
    for th in range(T.n_maps):
        moved = F[np.ix_(T.maps[th], T.maps[th])]
        inv_err = max(inv_err, float(np.max(np.abs(moved - F)[pp], initial=0.0)))
    C = float(F[pp][0]) if pp.any() else 0.0
    const_err = float(np.max(np.abs(F - C)[pp], initial=0.0))
    fY = xi @ f
    fy_max = float(np.max(np.abs(fY[py]), initial=0.0))
    sq = np.sqrt(xi)
    gram = sq[:, None] * F * sq[None, :]
    gram_max = float(np.max(np.abs(gram)))
    f_max = float(np.max(np.abs(f)[pos], initial=0.0))
    passed = max(inv_err, const_err, fy_max, abs(C), gram_max, f_max) <= tol
    return PipelineReport(C, inv_err, const_err, fy_max, gram_max, f_max, bool(passed), F.tolist())


def random_pipeline_instance(gen: np.random.Generator, max_states: int = 4, max_maps: int = 2,
                             noise: float = 1.0):
    """Random ``(T, S, f)`` satisfying the pipeline hypotheses.

    ``T`` has one positive state and some null states (on a finite space
    ``T x T`` ergodic forces this); ``S`` is transitive with uniform mass
    plus null states. ``f`` is a random element of the solution space of
    the invariance and zero-mean equations on positive pairs, with
    arbitrary values on null pairs.
    """
    m = int(gen.integers(1, max_maps + 1))
    nt_null = int(gen.integers(0, max_states))
    nt = 1 + nt_null
    t_maps = np.zeros((m, nt), dtype=np.int64)
    t_maps[:, 1:] = gen.integers(0, nt, size=(m, nt_null))
    T = FiniteSystem((1.0,) + (0.0,) * nt_null, t_maps)
    k = int(gen.integers(1, max_states + 1))
    ns_null = int(gen.integers(0, max_states - k + 1))
    ns = k + ns_null
    cyc = gen.permutation(k)
    s_maps = np.empty((m, ns), dtype=np.int64)
    s_maps[0, cyc] = np.roll(cyc, -1)
    for th in range(1, m):
        s_maps[th, :k] = gen.permutation(k)
    s_maps[:, k:] = gen.integers(0, ns, size=(m, ns_null))
    S = FiniteSystem((1.0 / k,) * k + (0.0,) * ns_null, s_maps)
    xi, eta = _as_float(T), _as_float(S)
    pos = np.flatnonzero(np.outer(xi > 0, eta > 0).ravel())
    rows = []
    for th in range(m):
        img = (T.maps[th][:, None] * ns + S.maps[th][None, :]).ravel()
        for p in pos:
            r = np.zeros(nt * ns)
            r[img[p]] += 1.0
            r[p] -= 1.0
            rows.append(r[pos])
    rows.append(np.outer(xi, eta).ravel()[pos])
    basis = null_space(np.array(rows))
    f = np.zeros(nt * ns)
    f[pos] = basis @ gen.standard_normal(basis.shape[1]) if basis.shape[1] else 0.0
    null_pairs = np.setdiff1d(np.arange(nt * ns), pos)
    f[null_pairs] = noise * gen.standard_normal(len(null_pairs))
    return T, S, f.reshape(nt, ns)
