"""
Poisson stochastic integrals of cylinder functions.

For a point configuration ``theta`` the finite-eps member of the defining
net is

    sum over points p of f(p) 1{|f(p)| > eps}  -  int f 1{eps <= |f| <= 1} d ell,

where ``f(p)`` is ``f`` applied to the configuration carried by the point
(``mark * kernel(. - t)`` for located points, the constant ``c`` for
fixed-point atoms). The analytic counterpart is

    log E exp(i t I(f)) = int (e^{i t f} - 1 - i t f 1{|f| <= 1}) d ell.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from .errors import DimensionMismatch, Nonintegrable
from .groups import CoordIndex, GroupSpec, element, inverse, group_op
from .measures import (DissipativeKernel, FixedPointAtoms, ValidatedLevy,
                       canonical_coords, coordinate_marginal, truncation_bias_bound)
from .poisson import PointConfiguration, check_coverage

__all__ = ["CylinderFunction", "projection", "linear_combo", "indicator", "cylinder",
           "compensator", "stochastic_integral", "field_values", "analytic_log_charfn",
           "log_charfn_linear", "marginal", "bias_bound", "psi", "empirical_charfn"]


@dataclass(frozen=True, eq=False)
class CylinderFunction:
    """Function of finitely many coordinates, with ``f(0) = 0``.

    ``kind`` is one of ``"projection"``, ``"linear"``, ``"indicator"``
    (closed box ``lo <= x <= hi`` not containing the origin) or ``"custom"``.
    """

    group: GroupSpec
    coords: tuple
    kind: str
    weights: tuple = None
    lo: tuple = None
    hi: tuple = None
    fn: object = None

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != len(self.coords):
            raise DimensionMismatch(f"expected {len(self.coords)} coordinates, got {x.shape[-1]}")
        if self.kind == "projection":
            return x[..., 0]
        if self.kind == "linear":
            return x @ np.asarray(self.weights, dtype=float)
        if self.kind == "indicator":
            inside = np.all((x >= np.asarray(self.lo)) & (x <= np.asarray(self.hi)), axis=-1)
            return inside.astype(float)
        return np.asarray(self.fn(x), dtype=float)

    def compose_shift(self, g) -> "CylinderFunction":
        """``f o R_g``: coordinate ``c`` is replaced by ``g^{-1} c``."""
        ginv = inverse(self.group, g)
        coords = tuple(group_op(self.group, ginv, c) for c in self.coords)
        return CylinderFunction(self.group, coords, self.kind, self.weights, self.lo, self.hi, self.fn)


def projection(group: GroupSpec, g=None) -> CylinderFunction:
    g = group.identity if g is None else element(group, g)
    return CylinderFunction(group, (g,), "projection")


def linear_combo(group: GroupSpec, coords, weights) -> CylinderFunction:
    coords = canonical_coords(group, coords)
    weights = tuple(float(w) for w in weights)
    if len(weights) != len(coords):
        raise DimensionMismatch("one weight per coordinate required")
    return CylinderFunction(group, coords, "linear", weights=weights)


def indicator(group: GroupSpec, coords, lo, hi) -> CylinderFunction:
    coords = canonical_coords(group, coords)
    lo = tuple(float(v) for v in lo)
    hi = tuple(float(v) for v in hi)
    if len(lo) != len(coords) or len(hi) != len(coords):
        raise DimensionMismatch("box bounds must match the coordinates")
    if all(a <= 0.0 <= b for a, b in zip(lo, hi)):
        raise Nonintegrable("indicator box contains the origin; its Levy mass is infinite")
    return CylinderFunction(group, coords, "indicator", lo=lo, hi=hi)


def cylinder(group: GroupSpec, coords, fn) -> CylinderFunction:
    coords = canonical_coords(group, coords)
    f = CylinderFunction(group, coords, "custom", fn=fn)
    if float(f(np.zeros(len(coords)))) != 0.0:
        raise Nonintegrable("cylinder function must vanish at the origin")
    return f


@lru_cache(maxsize=512)
def marginal(spec: ValidatedLevy, coords: tuple):
    """Cached :func:`coordinate_marginal`."""
    m = coordinate_marginal(spec, coords)
    m.points.setflags(write=False)
    m.weights.setflags(write=False)
    return m


def _check_eps(eps):
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")


def compensator(spec: ValidatedLevy, f: CylinderFunction, eps: float) -> float:
    """``int f 1{eps <= |f| <= 1} d ell`` on the finite-dimensional marginal."""
    _check_eps(eps)
    if spec.is_zero:
        return 0.0
    m = marginal(spec, f.coords)
    y = f(m.points)
    sel = (np.abs(y) >= eps) & (np.abs(y) <= 1.0)
    value = math.fsum(m.weights[sel] * y[sel])
    if not math.isfinite(value):
        raise Nonintegrable("compensator diverges")
    return value


def bias_bound(spec: ValidatedLevy, f: CylinderFunction, eps: float) -> float:
    """Small-jump truncation bound ``int_{|f| <= eps} f^2 d ell``."""
    if spec.is_zero:
        return 0.0
    m = marginal(spec, f.coords)
    return truncation_bias_bound(m, f(m.points), eps)


def field_values(theta: PointConfiguration, coords, eps: float, spec: ValidatedLevy = None) -> np.ndarray:
    """``I(Xi_g)`` for every ``g`` in ``coords``, shape ``(n_replicas, k)``.

    The same arithmetic serves single projections and whole windows, so
    values agree bit for bit however the coordinates are grouped.
    """
    _check_eps(eps)
    spec = theta.levy if spec is None else spec
    group = spec.group
    if isinstance(coords, np.ndarray) and coords.ndim == 2:
        carr = group.reduce(coords)
    else:
        carr = np.array(canonical_coords(group, coords), dtype=np.int64).reshape(-1, group.arity)
    k = len(carr)
    n = theta.n_replicas
    out = np.zeros(n * k)
    if spec.is_zero:
        return out.reshape(n, k)
    check_coverage(theta, carr)
    index = CoordIndex(group, carr)
    for ci, comp in enumerate(spec.components):
        if not isinstance(comp, DissipativeKernel):
            continue
        sel = theta.components == ci
        locs, marks, reps = theta.locations[sel], theta.marks[sel], theta.replica[sel]
        for s, coef in zip(comp.kernel.offsets_array, comp.kernel.coefs):
            idx = index.lookup(locs + s)
            val = marks * coef
            keep = (idx >= 0) & (np.abs(val) > eps)
            out += np.bincount(reps[keep] * k + idx[keep], weights=val[keep], minlength=n * k)
    out = out.reshape(n, k)
    if len(theta.atom_values):
        c = theta.atom_values
        atom_sum = theta.atom_counts @ np.where(np.abs(c) > eps, c, 0.0)
        out = out + atom_sum[:, None]
    return out - compensator(spec, projection(group), eps)


def stochastic_integral(theta: PointConfiguration, f: CylinderFunction, spec: ValidatedLevy = None,
                        eps: float = 0.01):
    """Finite-eps Poisson integral of ``f`` over ``theta``.

    Returns a float for a single configuration, else one value per replica.

    Raises
    ------
    WindowUnderflow
        If ``f`` reads coordinates whose contributing sites were not sampled.
    """
    _check_eps(eps)
    spec = theta.levy if spec is None else spec
    if f.kind == "projection":
        res = field_values(theta, f.coords, eps, spec)[:, 0]
    else:
        res = _general_integral(theta, f, spec, eps)
    return float(res[0]) if theta.n_replicas == 1 else res


def _general_integral(theta, f, spec, eps):
    group = spec.group
    n = theta.n_replicas
    carr = np.array(f.coords, dtype=np.int64).reshape(-1, group.arity)
    k = len(carr)
    total = np.zeros(n)
    if spec.is_zero:
        return total
    check_coverage(theta, carr)
    index = CoordIndex(group, carr)
    for ci, comp in enumerate(spec.components):
        if not isinstance(comp, DissipativeKernel):
            continue
        sel = np.flatnonzero(theta.components == ci)
        vec = np.zeros((len(sel), k))
        hit = np.zeros(len(sel), dtype=bool)
        locs, marks = theta.locations[sel], theta.marks[sel]
        for s, coef in zip(comp.kernel.offsets_array, comp.kernel.coefs):
            idx = index.lookup(locs + s)
            ok = idx >= 0
            vec[np.flatnonzero(ok), idx[ok]] += marks[ok] * coef
            hit |= ok
        y = np.zeros(len(sel))
        if hit.any():
            y[hit] = f(vec[hit])
        keep = np.abs(y) > eps
        total += np.bincount(theta.replica[sel][keep], weights=y[keep], minlength=n)
    if len(theta.atom_values):
        ya = f(np.repeat(theta.atom_values[:, None], k, axis=1))
        total += theta.atom_counts @ np.where(np.abs(ya) > eps, ya, 0.0)
    return total - compensator(spec, f, eps)


def psi(y: np.ndarray, t) -> np.ndarray:
    """Levy-Khintchine integrand ``e^{i t y} - 1 - i t y 1{|y| <= 1}``.

    The real part is written as ``-2 sin^2(t y / 2)`` so it is exactly zero
    at ``y = 0`` and never positive.
    """
    ty = np.multiply.outer(np.asarray(t, dtype=float), y)
    small = (np.abs(y) <= 1.0)
    re = -2.0 * np.sin(0.5 * ty) ** 2
    im = np.sin(ty) - np.where(small, ty, 0.0)
    return re + 1j * im


def analytic_log_charfn(spec: ValidatedLevy, f: CylinderFunction, t):
    """``log E exp(i t I(f))`` for scalar or array ``t``."""
    t_arr = np.asarray(t, dtype=float)
    if spec.is_zero:
        res = np.zeros(t_arr.shape, dtype=complex)
    else:
        m = marginal(spec, f.coords)
        res = psi(f(m.points), t_arr) @ m.weights
    if not np.all(np.isfinite(res)):
        raise Nonintegrable("log characteristic function not finite")
    return complex(res) if t_arr.ndim == 0 else res


def log_charfn_linear(spec: ValidatedLevy, coords, tvecs) -> np.ndarray:
    """``log E exp(i <t, (I(Xi_g))_g>)`` for each row of ``tvecs`` (shape ``(..., k)``).

    Each coordinate carries its own compensator, so the drift term is
    ``sum_j t_j x_j 1{|x_j| <= 1}`` rather than a cut on ``<t, x>``.
    """
    tvecs = np.asarray(tvecs, dtype=float)
    coords = tuple(coords)
    if tvecs.shape[-1] != len(coords):
        raise DimensionMismatch("t vector length must match the coordinates")
    if spec.is_zero:
        return np.zeros(tvecs.shape[:-1], dtype=complex)
    m = marginal(spec, coords)
    y = tvecs @ m.points.T  # (..., m)
    comp = tvecs @ np.where(np.abs(m.points) <= 1.0, m.points, 0.0).T
    re = -2.0 * np.sin(0.5 * y) ** 2
    im = np.sin(y) - comp
    return (re + 1j * im) @ m.weights


def empirical_charfn(samples, tgrid, chunk: int = 65536):
    """Empirical characteristic function of scalar ``samples`` on ``tgrid``.

    Returns ``(phi_hat, stderr)`` where ``stderr = sqrt((1 - |phi_hat|^2) / n)``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    t = np.asarray(tgrid, dtype=float)
    n = len(x)
    if n == 0:
        raise ValueError("no samples")
    acc = np.zeros(t.shape, dtype=complex)
    for start in range(0, n, chunk):
        acc += np.exp(1j * np.multiply.outer(x[start:start + chunk], t)).sum(axis=0)
    phi = acc / n
    se = np.sqrt(np.clip(1.0 - np.abs(phi) ** 2, 0.0, None) / n)
    return phi, se
