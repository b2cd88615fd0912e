"""
Monte Carlo diagnostics of ergodicity and weak mixing for simulated fields,
plus exact dependence functionals computed from the Levy triplet.

Ergodic averages use the statistic

    A_N = mean over g in F_N of E[f o R_g . h],

estimated over independent replicas and compared with E f . E h. A gap
that shrinks below ``consistent_se`` standard errors at the largest radius
is read as consistent with ergodicity; one that stays above
``inconsistent_se`` standard errors at the two largest radii is not.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
import csv
import io
import math

import numpy as np

from .errors import DimensionMismatch, NoInvariantEvent, NullModel
from .groups import CoordIndex, GroupSpec, element, folner_window, group_op, inverse
from .integrals import compensator, empirical_charfn, marginal, projection
from .measures import FixedPointAtoms, canonical_coords, split_by_invariant
from .poisson import RngStream, window_coords
from .processes import (DEFAULT_EPS, Leaf, PairNode, ProcessModel, SumNode, combine_pair,
                        combine_sum, iter_leaves, log_marginal_charfn, marginal_charfn,
                        model_hash, simulate_values)

__all__ = ["Observable", "box_indicator", "cos_observable", "tensor", "Thresholds",
           "ErgodicityReport", "ergodic_average", "ergodicity_report", "weak_mixing_report",
           "Estimate", "symm_diff_functional", "codifference", "codifference_mc",
           "invariant_event_probe", "mixture_decomposition_check", "verdict_from_gaps",
           "CONSISTENT", "INCONSISTENT", "INCONCLUSIVE"]

CONSISTENT = "ConsistentWithErgodic"
INCONSISTENT = "InconsistentWithErgodic"
INCONCLUSIVE = "Inconclusive"


# ----------------------------------------------------------------------------
# observables

@dataclass(frozen=True, eq=False)
class Observable:
    """Bounded function of the field on finitely many coordinates.

    ``fn`` maps values of shape ``(..., k, dim)`` to shape ``(...)`` and
    satisfies ``|fn| <= bound``.
    """

    coords: tuple
    fn: object
    bound: float = 1.0
    description: str = ""

    def __call__(self, values) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(values, dtype=float)), dtype=float)

    def to_json(self):
        return {"coords": [list(c) for c in self.coords], "bound": self.bound,
                "description": self.description}


def box_indicator(group: GroupSpec, coord=None, lo=-math.inf, hi=math.inf, component: int = 0,
                  lo_open: bool = False, hi_open: bool = False) -> Observable:
    """``1{lo <= X_coord[component] <= hi}`` (ends optionally open)."""
    coord = group.identity if coord is None else element(group, coord)

    def fn(v):
        x = v[..., 0, component]
        lower = x > lo if lo_open else x >= lo
        upper = x < hi if hi_open else x <= hi
        return (lower & upper).astype(float)

    lb, rb = "(" if lo_open else "[", ")" if hi_open else "]"
    return Observable((coord,), fn, 1.0, f"1{{X{list(coord)}[{component}] in {lb}{lo}, {hi}{rb}}}")


def cos_observable(group: GroupSpec, coord=None, t: float = 1.0, component: int = 0) -> Observable:
    coord = group.identity if coord is None else element(group, coord)
    return Observable((coord,), lambda v: np.cos(t * v[..., 0, component]), 1.0,
                      f"cos({t} X{list(coord)}[{component}])")


def tensor(f: Observable, h: Observable, dim_left: int = 1) -> Observable:
    """``(x, y) -> f(x) h(y)`` on a paired field whose left block has ``dim_left`` components."""
    coords = tuple(dict.fromkeys(f.coords + h.coords))
    fi = [coords.index(c) for c in f.coords]
    hi = [coords.index(c) for c in h.coords]

    def fn(v):
        return f(v[..., fi, :dim_left]) * h(v[..., hi, dim_left:])

    return Observable(coords, fn, f.bound * h.bound, f"{f.description} (x) {h.description}")


# ----------------------------------------------------------------------------
# ergodic averages

@dataclass(frozen=True)
class Thresholds:
    consistent_se: float = 4.0
    inconsistent_se: float = 6.0
    atol: float = 1e-12


def verdict_from_gaps(gaps, ses, thr: Thresholds = Thresholds()) -> str:
    """Deterministic verdict from gap/standard-error sequences ordered by radius."""
    gaps = np.abs(np.asarray(gaps, dtype=float))
    ses = np.asarray(ses, dtype=float)
    if gaps[-1] <= thr.consistent_se * ses[-1] + thr.atol:
        return CONSISTENT
    tail = slice(-2, None) if len(gaps) > 1 else slice(-1, None)
    if np.all(gaps[tail] > thr.inconsistent_se * ses[tail] + thr.atol):
        return INCONSISTENT
    return INCONCLUSIVE


def _combine_verdicts(verdicts) -> str:
    if any(v == INCONSISTENT for v in verdicts):
        return INCONSISTENT
    if verdicts and all(v == CONSISTENT for v in verdicts):
        return CONSISTENT
    return INCONCLUSIVE


@dataclass
class ErgodicityReport:
    """Averages per radius and observable pair, with the resulting verdict."""

    kind: str
    radii: list
    rows: list
    pair_verdicts: list
    verdict: str
    replicas: int
    seeds: dict
    model: str
    thresholds: dict = field(default_factory=dict)

    def gap(self, pair: int = 0, radius=None) -> dict:
        radius = self.radii[-1] if radius is None else radius
        for row in self.rows:
            if row["pair"] == pair and row["radius"] == radius:
                return row
        raise KeyError((pair, radius))

    def to_json(self):
        return asdict(self)

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["pair", "radius", "window_size", "A_N", "mean_f", "mean_h", "gap", "se", "z"]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        w.writerows(self.rows)
        return buf.getvalue()


def _window_radius(group: GroupSpec, arr: np.ndarray) -> np.ndarray:
    if group.is_finite:
        return np.zeros(len(arr), dtype=np.int64)
    return np.abs(arr).max(axis=1)


def _averages(model, pairs, radii, replicas, rng, eps, thr, kind):
    group = model.group
    radii = sorted(int(r) for r in radii)
    if not radii:
        raise ValueError("need at least one radius")
    if replicas < 2:
        raise ValueError("need at least two replicas for standard errors")
    big = folner_window(group, radii[-1]).array
    inv_big = group.reduce(-big)
    base = []
    for f, h in pairs:
        base.extend(f.coords)
        base.extend(h.coords)
    base = np.unique(np.array(base, dtype=np.int64).reshape(-1, group.arity), axis=0)
    union = np.unique(group.reduce(inv_big[:, None, :] + base[None, :, :]).reshape(-1, group.arity), axis=0)
    index = CoordIndex(group, union)
    vals = simulate_values(model, union, rng, replicas, eps)
    ring = _window_radius(group, big)

    def along_window(obs):
        c = np.array(obs.coords, dtype=np.int64).reshape(-1, group.arity)
        pos = index.lookup(inv_big[:, None, :] + c[None, :, :])  # (|F|, k)
        return obs(vals[:, pos, :])  # (n, |F|)

    rows, pair_verdicts = [], []
    for p, (f, h) in enumerate(pairs):
        fv = along_window(f)
        hv_all = along_window(h)
        h0 = h(vals[:, index.lookup(np.array(h.coords, dtype=np.int64).reshape(-1, group.arity)), :])
        # shifted data: centre at a reference value so constant observables give exact zeros
        ref_f, ref_h = fv[0, 0], h0[0]
        fv = fv - ref_f
        hv_all = hv_all - ref_h
        h0 = h0 - ref_h
        gaps, ses = [], []
        for r in radii:
            sel = ring <= r
            fbar = fv[:, sel].mean(axis=1)
            hbar = hv_all[:, sel].mean(axis=1)
            a = h0 * fbar
            mf, mh = fbar.mean(), hbar.mean()
            gap = a.mean() - mf * mh
            infl = a - mh * fbar - mf * hbar
            se = float(infl.std(ddof=1) / math.sqrt(replicas))
            gaps.append(gap)
            ses.append(se)
            mean_f, mean_h = ref_f + mf, ref_h + mh
            rows.append({"pair": p, "radius": r, "window_size": int(sel.sum()),
                         "A_N": float(gap + mean_f * mean_h), "mean_f": float(mean_f),
                         "mean_h": float(mean_h), "gap": float(gap), "se": se,
                         "z": float(abs(gap) / se) if se > 0 else (0.0 if abs(gap) <= thr.atol else math.inf)})
        pair_verdicts.append(verdict_from_gaps(gaps, ses, thr))
    return ErgodicityReport(kind, radii, rows, pair_verdicts, _combine_verdicts(pair_verdicts), int(replicas),
                            rng.to_json(), model_hash(model), asdict(thr))


def ergodic_average(model: ProcessModel, f: Observable, h: Observable = None, radii=(8, 16, 32),
                    replicas: int = 200, rng: RngStream = RngStream(0), eps: float = DEFAULT_EPS,
                    thresholds: Thresholds = Thresholds()) -> ErgodicityReport:
    """Følner averages of ``E[f o R_g . h]`` against ``E f . E h``.

    Raises
    ------
    WindowUnderflow
        Never for the provided groups: the simulation window is sized from
        the largest radius.
    """
    h = f if h is None else h
    return _averages(model, [(f, h)], radii, replicas, rng, eps, thresholds, "ergodicity")


def ergodicity_report(model, observables, radii=(8, 16, 32), replicas=200, rng=RngStream(0),
                      eps=DEFAULT_EPS, thresholds=Thresholds()) -> ErgodicityReport:
    """Ergodic averages for each observable paired with itself (one shared simulation)."""
    pairs = [(o, o) for o in observables]
    return _averages(model, pairs, radii, replicas, rng, eps, thresholds, "ergodicity")


def weak_mixing_report(model, observables, radii=(8, 16, 32), replicas=200, rng=RngStream(0),
                       eps=DEFAULT_EPS, thresholds=Thresholds()) -> ErgodicityReport:
    """Ergodicity of the independent self-pair ``X (x) X`` with product observables."""
    pair = combine_pair(model, model)
    prods = [tensor(o, o, model.dim) for o in observables]
    return _averages(pair, [(p, p) for p in prods], radii, replicas, rng, eps, thresholds, "weakmixing")


# ----------------------------------------------------------------------------
# symmetric difference and codifference

@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    n: int


def symm_diff_functional(model: ProcessModel, event: Observable, g, n: int, rng: RngStream,
                         eps: float = DEFAULT_EPS) -> Estimate:
    """Monte Carlo ``P(R_g^{-1}(E) symmetric-difference E)`` for a 0/1 observable ``E``."""
    group = model.group
    g = element(group, g)
    if g == group.identity:
        return Estimate(0.0, 0.0, n)
    ginv = inverse(group, g)
    shifted = tuple(group_op(group, ginv, c) for c in event.coords)
    coords = tuple(dict.fromkeys(event.coords + shifted))
    vals = simulate_values(model, coords, rng, n, eps)
    a = event(vals[:, [coords.index(c) for c in event.coords], :]) > 0.5
    b = event(vals[:, [coords.index(c) for c in shifted], :]) > 0.5
    x = (a != b).astype(float)
    se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return Estimate(float(x.mean()), se, n)


def _require_scalar(model):
    if isinstance(model, PairNode) or model.dim != 1:
        raise DimensionMismatch("codifference needs a scalar field")


def _leaf_codifference(lf: Leaf, g) -> complex:
    group = lf.group
    e = group.identity
    out = 0j
    if not lf.jumps.is_zero:
        coords = (e,) if g == e else (g, e)
        m = marginal(lf.jumps, coords)
        xg = m.points[:, 0]
        xe = m.points[:, -1]
        out += complex(((np.exp(1j * xg) - 1.0) * (np.exp(-1j * xe) - 1.0)) @ m.weights)
    if lf.gaussian is not None:
        out += lf.gaussian.covariance(g)
    return out


def codifference(model: ProcessModel, g) -> complex:
    """``log E e^{i(X_g - X_e)} - log E e^{i X_g} - log E e^{-i X_e}``, exactly.

    Per leaf this equals ``int (e^{i x_g} - 1)(e^{-i x_e} - 1) d ell + rho(g)``;
    compensators and drift cancel, and translates whose configuration
    vanishes at ``g`` or at ``e`` contribute exact zeros.
    """
    _require_scalar(model)
    g = element(model.group, g)
    return sum((_leaf_codifference(lf, g) for _, lf in iter_leaves(model)), 0j)


def codifference_mc(model: ProcessModel, g, n: int, rng: RngStream, eps: float = DEFAULT_EPS):
    """Monte Carlo codifference with a delta-method standard error.

    Returns ``(tau_hat, stderr)``; ``tau_hat`` uses the principal logarithm
    of ``phi_joint / (phi_g phi_e)``.
    """
    _require_scalar(model)
    group = model.group
    g = element(group, g)
    e = group.identity
    coords = (e,) if g == e else (g, e)
    vals = simulate_values(model, coords, rng, n, eps)[..., 0]
    xg, xe = vals[:, 0], vals[:, -1]
    zj = np.exp(1j * (xg - xe))
    zg = np.exp(1j * xg)
    ze = np.exp(-1j * xe)
    pj, pg, pe = zj.mean(), zg.mean(), ze.mean()
    tau = complex(np.log(pj / (pg * pe)))
    infl = (zj - pj) / pj - (zg - pg) / pg - (ze - pe) / pe
    se = float(np.sqrt(np.sum(np.abs(infl) ** 2) / (n * (n - 1))))
    return tau, se


# ----------------------------------------------------------------------------
# invariant event and mixture decomposition

def _witness_leaf(model):
    for path, lf in iter_leaves(model):
        if lf.levy is not None and not lf.nullity.null:
            return path, lf
    return None, None


def _event_window(group, lf, coords):
    """Coordinates on which absence of witnessed points is fully observed."""
    witness = lf.nullity.witness
    if all(isinstance(lf.levy.components[i], FixedPointAtoms) for i in witness):
        return coords
    return folner_window(group, 0).array  # finite group: whole group


def _empty_event(theta, witness) -> np.ndarray:
    """Per-replica indicator that witnessed components have no points."""
    n = theta.n_replicas
    sel = np.isin(theta.components, witness)
    counts = np.bincount(theta.replica[sel], minlength=n)
    if theta.atom_counts.shape[1]:
        amask = np.isin(theta.atom_components, witness)
        counts = counts + theta.atom_counts[:, amask].sum(axis=1)
    return counts == 0


@dataclass
class ProbeReport:
    lam: float
    target: float
    floor: float
    radii: list
    p_event: list
    se_event: list
    p_trace_constant: list
    limit: float
    lower: float
    upper: float
    passed: bool
    replicas: int
    seeds: dict

    def to_json(self):
        return asdict(self)


def invariant_event_probe(model: ProcessModel, radii=(1, 4, 16), replicas: int = 10000,
                          rng: RngStream = RngStream(0), eps: float = DEFAULT_EPS,
                          tol: float = 0.01, delta: float = 0.01) -> ProbeReport:
    """Estimate ``P(X' == b - c_o on F_N)`` for the witnessed invariant part ``X'``.

    ``X'`` is built from the finite-mass invariant part ``ell'`` of the
    first non-null leaf, with that leaf's drift ``b``; ``c_o`` is its
    compensator. The estimate at the largest radius must lie in
    ``[exp(-lambda) - tol, 1 - delta]``.

    Raises
    ------
    NullModel
        No leaf has a non-null Levy measure.
    """
    group = model.group
    path, lf = _witness_leaf(model)
    if lf is None:
        raise NullModel("no leaf carries an invariant set of finite positive mass")
    lam = lf.nullity.mass
    inv_part, _ = split_by_invariant(lf.levy, lf.nullity)
    target = lf.drift - compensator(inv_part, projection(group), eps)
    exact = all(isinstance(c, FixedPointAtoms) for c in inv_part.components)
    atol = 0.0 if exact else 1e-9
    radii = sorted(int(r) for r in radii)
    big = folner_window(group, radii[-1]).array
    ring = _window_radius(group, big)
    xprime = Leaf(group, None, inv_part, lf.drift)
    xv = simulate_values(xprime, big, rng.child(0), replicas, eps)[..., 0]
    full = simulate_values(model, big, rng.child(1), replicas, eps)
    p_event, se_event, p_const = [], [], []
    for r in radii:
        sel = ring <= r
        hit = np.all(np.abs(xv[:, sel] - target) <= atol, axis=1)
        p = float(hit.mean())
        p_event.append(p)
        se_event.append(math.sqrt(p * (1 - p) / replicas))
        sub = full[:, sel, :]
        const = np.all(np.abs(sub - sub[:, :1, :]) <= max(atol, 1e-9), axis=(1, 2))
        p_const.append(float(const.mean()))
    floor = math.exp(-lam)
    lower, upper = floor - tol, 1.0 - delta
    limit = p_event[-1]
    return ProbeReport(lam, target, floor, radii, p_event, se_event, p_const, limit, lower, upper,
                       bool(lower <= limit <= upper), int(replicas), rng.to_json())


@dataclass
class DecompositionReport:
    p_event: float
    n: int
    n_event: int
    tgrid: list
    residual: float
    residual_tol: float
    witness_t: float
    witness_gap: float
    witness_se: float
    witness_z: float
    exact_branch_gap: float
    passed: bool
    seeds: dict

    def to_json(self):
        return asdict(self)


def mixture_decomposition_check(model_a: ProcessModel, model_b: ProcessModel, tgrid, n: int = 100000,
                                rng: RngStream = RngStream(0), eps: float = DEFAULT_EPS, coord=None,
                                residual_k: float = 5.0, witness_k: float = 10.0) -> DecompositionReport:
    """Check the convex decomposition of ``A (+) B`` along an invariant event of ``A``.

    The event ``E`` is "the witnessed invariant part of ``A`` has no
    points", with ``P(E) = exp(-lambda)``. Replicas of ``A (+) B`` are split
    by ``E`` (branch selection on the sampled configuration). Reported:
    the sup-gap between the exact characteristic function of ``A (+) B``
    and ``P(E) phi_1 + (1 - P(E)) phi_2`` built from the branch estimates,
    and the ``t`` where the branches differ most in standard errors.

    Raises
    ------
    NoInvariantEvent
        ``A`` is null or ``P(E)`` is 0 or 1 in floating point.
    """
    group = model_a.group
    if model_a.dim != 1 or model_b.dim != 1:
        raise DimensionMismatch("decomposition check needs scalar fields")
    path, lf = _witness_leaf(model_a)
    if lf is None:
        raise NoInvariantEvent("model A has no invariant set of finite positive mass")
    p = math.exp(-lf.nullity.mass)
    if not 0.0 < p < 1.0:
        raise NoInvariantEvent(f"P(E) = {p} is degenerate")
    coord = group.identity if coord is None else element(group, coord)
    coords = _event_window(group, lf, np.array([coord], dtype=np.int64))
    pos = CoordIndex(group, coords).lookup(np.array([coord]))[0]
    mix = combine_sum(model_a, model_b)
    vals, chunks = simulate_values(mix, coords, rng, n, eps, return_configs=True)
    leaf_path = (0,) + path
    event = np.concatenate([_empty_event(c[leaf_path], lf.nullity.witness) for c in chunks])
    y = vals[:, pos, 0]
    t = np.asarray(tgrid, dtype=float)
    n1 = int(event.sum())
    if n1 == 0 or n1 == n:
        raise NoInvariantEvent("one branch received no replicas; increase n")
    phi1, se1 = empirical_charfn(y[event], t)
    phi2, se2 = empirical_charfn(y[~event], t)
    phi_mix = marginal_charfn(mix, [coord], t[:, None])
    residual = float(np.max(np.abs(phi_mix - (p * phi1 + (1 - p) * phi2))))
    diff = np.abs(phi1 - phi2)
    se = np.sqrt(se1 ** 2 + se2 ** 2)
    z = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff > 0, np.inf, 0.0))
    j = int(np.argmax(z))
    # exact branch 1: replace the witnessed part by its value on the empty event
    inv_part, rest = split_by_invariant(lf.levy, lf.nullity)
    shift = lf.drift - compensator(inv_part, projection(group), eps)
    keep = rest if (rest.components or lf.gaussian is None) else None
    a1 = _replace_leaf(model_a, path, Leaf(group, lf.gaussian, keep, shift))
    phi1_exact = marginal_charfn(combine_sum(a1, model_b), [coord], t[:, None])
    exact_gap = float(np.max(np.abs(phi1 - phi1_exact)))
    tol = residual_k / math.sqrt(n)
    passed = residual <= tol and z[j] >= witness_k
    return DecompositionReport(p, int(n), n1, t.tolist(), residual, tol, float(t[j]), float(diff[j]),
                               float(se[j]), float(z[j]), exact_gap, bool(passed), rng.to_json())


def _replace_leaf(model, path, new):
    if not path:
        return new
    if path[0] == 0:
        left, right = _replace_leaf(model.left, path[1:], new), model.right
    else:
        left, right = model.left, _replace_leaf(model.right, path[1:], new)
    return SumNode(left, right) if isinstance(model, SumNode) else PairNode(left, right)
