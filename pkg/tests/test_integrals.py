import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from idpe import (DiscreteAtoms, DissipativeKernel, FixedPointAtoms, GaussianMarks, Kernel, LevySpec,
                  Nonintegrable, RngStream, TwoSidedPareto, WindowUnderflow, analytic_log_charfn,
                  bias_bound, compensator, cylinder, empirical_charfn, folner_window, indicator,
                  linear_combo, log_charfn_linear, projection, sample_point_config, shift_config,
                  stochastic_integral, validate_levy, zero_levy)

from conftest import Z, e1_spec, e2_spec, make_config

TGRID = np.round(np.arange(-50, 51) / 10.0, 12)


def test_compensator_examples(E1, E2):
    assert compensator(E1, projection(Z), 0.01) == 0.0
    assert compensator(E2, projection(Z), 0.1) == 1.5


def test_compensator_boundary_inclusive():
    spec = e2_spec(kernel={0: 1.0, 1: 0.5})
    assert compensator(spec, projection(Z), 1.0) == 1.0
    spec = e2_spec(kernel={0: 1.0, 1: 0.1})
    assert compensator(spec, projection(Z), 0.1) == 1.1


def test_compensator_eps_range(E2):
    with pytest.raises(ValueError):
        compensator(E2, projection(Z), 0.0)
    with pytest.raises(ValueError):
        compensator(E2, projection(Z), 1.5)


def test_integral_empty_atoms_config(E1):
    theta = make_config(E1, [], [0], atom_counts=[0])
    assert stochastic_integral(theta, projection(Z), eps=0.01) == 0.0


def test_integral_single_global_atom(E1):
    theta = make_config(E1, [], [0], atom_counts=[1])
    assert stochastic_integral(theta, projection(Z), eps=0.01) == 2.0


def test_integral_two_points(E2):
    theta = make_config(E2, [(0, (0,), 1.0), (0, (-1,), 1.0)], [0])
    assert stochastic_integral(theta, projection(Z), eps=0.1) == 0.0


def test_integral_underflow(E2):
    theta = make_config(E2, [], [0])
    with pytest.raises(WindowUnderflow):
        stochastic_integral(theta, projection(Z, 5), eps=0.1)


def test_indicator_rejects_origin_box():
    with pytest.raises(Nonintegrable):
        indicator(Z, [0], [-1.0], [1.0])
    with pytest.raises(Nonintegrable):
        cylinder(Z, [0], lambda x: np.cos(x[..., 0]))


def test_one_atom_log_charfn():
    spec = validate_levy(LevySpec(Z, (FixedPointAtoms(((1.0, 1.0),)),)))
    got = analytic_log_charfn(spec, projection(Z), math.pi)
    # independent oracle: integrate the integrand against the point mass as a quadrature of a narrow density
    want = cmath.exp(1j * math.pi) - 1 - 1j * math.pi
    assert got == pytest.approx(want, abs=1e-15)
    assert got.real == pytest.approx(-2.0, abs=1e-15) and got.imag == pytest.approx(-math.pi, abs=1e-15)


def test_log_charfn_at_zero_and_zero_measure(E2):
    assert analytic_log_charfn(E2, projection(Z), 0.0) == 0
    assert np.all(analytic_log_charfn(zero_levy(Z), projection(Z), TGRID) == 0)


def _gauss_log_cf_oracle(t, mean=0.5, sd=1.0):
    def part(fn):
        return integrate.quad(lambda v: fn(v) * stats.norm.pdf(v, mean, sd), mean - 12 * sd, mean + 12 * sd,
                              points=[-1, 0, 1], limit=400, epsabs=1e-13)[0]

    return part(lambda v: math.cos(t * v) - 1), part(lambda v: math.sin(t * v) - t * v * (abs(v) <= 1))


def _cell_width(cells, sd=1.0):
    return 2 * stats.norm.isf(1e-8 / 2) * sd / cells


@pytest.mark.parametrize("cells", [2048, 8192])
def test_log_charfn_gaussian_marks_against_quadrature(cells):
    spec = validate_levy(LevySpec(Z, (DissipativeKernel(Kernel.create(Z, {0: 1.0}), GaussianMarks(0.5, 1.0), 1.0),)),
                         cells=cells)
    t = 1.7
    re, im = _gauss_log_cf_oracle(t)
    got = analytic_log_charfn(spec, projection(Z), t)
    assert got.real == pytest.approx(re, abs=1e-6)
    # the compensator cut |x| <= 1 sits inside a grid cell: at most half a cell of
    # mass |t x| pdf(x) is misassigned at each of the two jumps x = -1, 1
    jump = t * (stats.norm.pdf(1, 0.5, 1.0) + stats.norm.pdf(-1, 0.5, 1.0))
    assert abs(got.imag - im) <= 0.5 * _cell_width(cells) * jump


def test_real_part_nonpositive():
    spec = validate_levy(LevySpec(Z, (DissipativeKernel(Kernel.create(Z, {0: 1.0, 1: -2.0}),
                                                        TwoSidedPareto(1.2, 1.0, 0.05), 1.0),)))
    assert np.all(analytic_log_charfn(spec, projection(Z), TGRID).real <= 0)


def test_additive_over_components(E1, E2):
    both = validate_levy(LevySpec(Z, E1.components + E2.components))
    f = linear_combo(Z, [0, 1], [1.0, -0.5])
    lhs = analytic_log_charfn(both, f, TGRID)
    rhs = analytic_log_charfn(E1, f, TGRID) + analytic_log_charfn(E2, f, TGRID)
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-13)


def test_projection_agrees_with_linear_form(E2):
    a = analytic_log_charfn(E2, projection(Z), TGRID)
    b = log_charfn_linear(E2, [(0,)], TGRID[:, None])
    assert np.allclose(a, b, atol=1e-15)


def test_eps_stability(E2):
    theta = sample_point_config(E2, folner_window(Z, 5), RngStream(1), n=500)
    a = stochastic_integral(theta, projection(Z, 3), eps=0.4)
    b = stochastic_integral(theta, projection(Z, 3), eps=0.01)
    assert np.array_equal(a, b)


def test_bias_bound_against_quadrature():
    spec = validate_levy(LevySpec(Z, (DissipativeKernel(Kernel.create(Z, {0: 1.0}), GaussianMarks(0.0, 1.0), 1.0),)))
    eps = 0.2
    want = integrate.quad(lambda v: v * v * stats.norm.pdf(v), -eps, eps)[0]
    # cut at |x| = eps falls inside a grid cell: half a cell of x^2 pdf(x) per side at most
    edge = 2 * 0.5 * _cell_width(2048) * eps ** 2 * stats.norm.pdf(eps)
    assert abs(bias_bound(spec, projection(Z), eps) - want) <= edge


def _mc_check(spec, f, n, seed, eps=0.01, window=3):
    theta = sample_point_config(spec, folner_window(Z, window), RngStream(seed), n=n)
    x = stochastic_integral(theta, f, eps=eps)
    phi_hat, _ = empirical_charfn(x, TGRID)
    phi = np.exp(analytic_log_charfn(spec, f, TGRID))
    return float(np.max(np.abs(phi_hat - phi))), 5 / math.sqrt(n)


@pytest.mark.parametrize("which", ["E1", "E2"])
def test_mc_charfn_projection(which):
    spec = e1_spec() if which == "E1" else e2_spec()
    gap, tol = _mc_check(spec, projection(Z), 100_000, 21)
    assert gap <= tol


def test_mc_charfn_linear_combo(E2):
    gap, tol = _mc_check(E2, linear_combo(Z, [0, 1, 2], [1.0, -1.0, 0.5]), 100_000, 22)
    assert gap <= tol


def test_mc_charfn_indicator(E2):
    gap, tol = _mc_check(E2, indicator(Z, [0, 1], [0.4, 0.9], [1.1, 1.1]), 100_000, 23)
    assert gap <= tol


def test_mc_charfn_gaussian_marks():
    spec = validate_levy(LevySpec(Z, (DissipativeKernel(Kernel.create(Z, {0: 1.0, 1: 0.5}),
                                                        GaussianMarks(0.2, 1.0), 0.7),)))
    gap, tol = _mc_check(spec, projection(Z), 100_000, 24, eps=0.001)
    assert gap <= tol


def test_mc_charfn_pareto_marks():
    spec = validate_levy(LevySpec(Z, (DissipativeKernel(Kernel.create(Z, {0: 1.0}),
                                                        TwoSidedPareto(1.5, 1.0, 0.2), 1.0),)))
    gap, tol = _mc_check(spec, projection(Z), 100_000, 25, eps=0.01)
    assert gap <= tol


def _fns(kind):
    if kind == "projection":
        return projection(Z, 1)
    if kind == "linear":
        return linear_combo(Z, [0, 2], [1.0, -0.3])
    if kind == "indicator":
        return indicator(Z, [0, 1], [0.3, -2.0], [3.0, 2.0])
    return cylinder(Z, [-1, 1], lambda x: np.tanh(x[..., 0] * x[..., 1]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(-5, 5), st.sampled_from(["projection", "linear", "indicator", "custom"]))
def test_equivariance_exact(seed, g, kind):
    spec = validate_levy(LevySpec(Z, (DissipativeKernel(Kernel.create(Z, {0: 1.0, 1: 0.5, -2: -0.75}),
                                                        GaussianMarks(0.3, 1.0), 1.3),
                                      FixedPointAtoms(((2.0, 0.5), (-0.5, 0.25))))))
    theta = sample_point_config(spec, folner_window(Z, 12), RngStream(seed), n=20)
    f = _fns(kind)
    lhs = stochastic_integral(shift_config(theta, (g,)), f, eps=0.01)
    rhs = stochastic_integral(theta, f.compose_shift((g,)), eps=0.01)
    assert np.array_equal(lhs, rhs)
