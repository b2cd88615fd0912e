import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from idpe import (DimensionMismatch, FiniteCyclicProduct, GaussianSpec, GroupMismatch, IntegerLattice, Kernel,
                  RngStream, build_process, canonical_metric, combine_pair, combine_sum, empirical_charfn,
                  field_values, folner_window, leaf, leaf_values, log_marginal_charfn, marginal_charfn,
                  model_hash, shift_config, simulate_trace, simulate_values)

from conftest import Z, e1_spec, e2_spec

E2_CFG = {"type": "leaf", "levy": {"components": [
    {"type": "kernel", "kernel": [[[0], 1.0], [[1], 0.5]], "marks": {"kind": "delta", "value": 1.0}, "rate": 1.0}]}}


def test_build_pure_drift_is_constant():
    m = build_process({"type": "leaf", "drift": 3.0}, Z)
    tr = simulate_trace(m, folner_window(Z, 4), RngStream(0))
    assert np.all(tr.values == 3.0)


def test_build_e2_is_null():
    m = build_process(E2_CFG, Z)
    assert m.nullity.null and m.drift == 0.0


def test_build_gaussian_iid_standard_normal():
    m = build_process({"type": "leaf", "gaussian": {"kernel": [[[0], 1.0]]}}, Z)
    assert m.gaussian.covariance((0,)) == 1.0 and m.gaussian.covariance((1,)) == 0.0
    x = simulate_values(m, [(0,), (3,)], RngStream(1), 20_000)[..., 0]
    assert stats.kstest(x[:, 0], "norm").pvalue > 0.001
    assert abs(np.corrcoef(x.T)[0, 1]) <= 4 / math.sqrt(20_000)


def test_build_tree_and_group_from_config():
    cfg = {"group": {"kind": "cyclic", "moduli": [6]}, "type": "sum", "left": E2_CFG,
           "right": {"type": "leaf", "drift": 1.0}}
    m = build_process(cfg)
    assert m.group == FiniteCyclicProduct([6]) and m.dim == 1
    pair = build_process({"type": "pair", "left": E2_CFG, "right": E2_CFG}, Z)
    assert pair.dim == 2


def test_e1_empty_event_trace_equals_drift():
    m = leaf(Z, levy=e1_spec(), drift=0.75)
    vals, theta = leaf_values(m, folner_window(Z, 5).array, RngStream(2), 2000, 0.01, return_config=True)
    empty = theta.atom_counts.sum(axis=1) == 0
    assert empty.any() and np.all(vals[empty] == 0.75)
    assert np.all(vals[~empty] == vals[~empty][:, :1])


def test_e2_direct_convolution_oracle():
    m = leaf(Z, levy=e2_spec())
    window = folner_window(Z, 6)
    vals, theta = leaf_values(m, window.array, RngStream(3), 50, 0.01, return_config=True)
    kern = [(0, 1.0), (1, 0.5)]
    for r in range(theta.n_replicas):
        pts = [(int(t[0]), v) for t, v, rr in zip(theta.locations, theta.marks, theta.replica) if rr == r]
        for j, g in enumerate(range(-6, 7)):
            total = 0.0
            for off, coef in kern:
                s = 0.0
                for t, v in pts:
                    if g - t == off:
                        s += v * coef
                total += s
            assert vals[r, j] == total - 1.5


def test_pathwise_equivariance_of_traces():
    spec = e2_spec(kernel={0: 1.0, 1: 0.5, -1: -0.25})
    m = leaf(Z, levy=spec)
    window = folner_window(Z, 8)
    vals, theta = leaf_values(m, window.array, RngStream(4), 100, 0.01, return_config=True)
    for j, g in enumerate(window.elements):
        moved = shift_config(theta, (-g[0],))
        assert np.array_equal(field_values(moved, [(0,)], 0.01)[:, 0], vals[:, j])


def test_charfn_at_zero_is_one():
    m = combine_sum(leaf(Z, levy=e2_spec()), leaf(Z, gaussian={0: 1.0, 1: 0.3}, drift=2.0))
    assert marginal_charfn(m, [0, 1, 2], np.zeros(3)) == 1.0


def test_charfn_standard_normal():
    m = leaf(Z, gaussian={0: 1.0})
    t = np.linspace(-4, 4, 17)
    assert np.allclose(marginal_charfn(m, [0], t[:, None]), np.exp(-t ** 2 / 2), rtol=0, atol=1e-15)


def test_charfn_e2_at_pi_exact():
    m = leaf(Z, levy=e2_spec())
    want = np.exp((np.exp(1j * np.pi) - 1 - 1j * np.pi) + (np.exp(1j * np.pi / 2) - 1 - 1j * np.pi / 2))
    assert abs(marginal_charfn(m, [0], [np.pi]) - want) <= 1e-15


def test_charfn_e2_against_monte_carlo():
    m = leaf(Z, levy=e2_spec())
    n = 200_000
    x = simulate_values(m, [0], RngStream(5), n)[:, 0, 0]
    t = np.round(np.arange(-50, 51) / 10.0, 12)
    phi_hat, _ = empirical_charfn(x, t)
    assert np.max(np.abs(phi_hat - marginal_charfn(m, [0], t[:, None]))) <= 5 / math.sqrt(n)


def test_joint_charfn_against_monte_carlo():
    m = combine_sum(leaf(Z, levy=e2_spec()), leaf(Z, gaussian={0: 0.5, 2: 0.5}))
    n = 200_000
    x = simulate_values(m, [0, 1, 2], RngStream(6), n)[..., 0]
    gen = np.random.default_rng(0)
    tv = gen.uniform(-2, 2, size=(20, 3))
    phi_hat = np.exp(1j * x @ tv.T).mean(axis=0)
    assert np.max(np.abs(phi_hat - marginal_charfn(m, [0, 1, 2], tv))) <= 5 / math.sqrt(n)


def test_sum_with_zero_constant_unchanged():
    x = leaf(Z, levy=e2_spec(), gaussian={0: 0.3})
    y = combine_sum(x, leaf(Z))
    t = np.random.default_rng(1).normal(size=(5, 2))
    assert np.array_equal(marginal_charfn(x, [0, 1], t), marginal_charfn(y, [0, 1], t))


def test_sum_and_pair_multiplicativity():
    a = leaf(Z, levy=e2_spec(), drift=0.1)
    b = leaf(Z, gaussian={0: 1.0, 1: -0.5}, levy=e1_spec())
    gen = np.random.default_rng(2)
    for _ in range(5):
        t = gen.normal(size=3)
        s = marginal_charfn(combine_sum(a, b), [0, 1, 4], t)
        assert abs(s - marginal_charfn(a, [0, 1, 4], t) * marginal_charfn(b, [0, 1, 4], t)) <= 1e-12
        ta, tb = gen.normal(size=3), gen.normal(size=3)
        p = marginal_charfn(combine_pair(a, b), [0, 1, 4], np.stack([ta, tb], axis=-1))
        assert abs(p - marginal_charfn(a, [0, 1, 4], ta) * marginal_charfn(b, [0, 1, 4], tb)) <= 1e-12


def test_pair_blocks_have_original_marginals():
    a = leaf(Z, levy=e2_spec())
    pair = combine_pair(a, a)
    t = np.linspace(-3, 3, 13)
    zeros = np.zeros_like(t)
    left = marginal_charfn(pair, [0], np.stack([t, zeros], axis=-1)[:, None, :])
    right = marginal_charfn(pair, [0], np.stack([zeros, t], axis=-1)[:, None, :])
    assert np.array_equal(left, marginal_charfn(a, [0], t[:, None]))
    assert np.array_equal(right, left)


def test_charfn_never_vanishes():
    m = combine_sum(leaf(Z, levy=e2_spec()), leaf(Z, levy=e1_spec()))
    t = np.random.default_rng(3).uniform(-50, 50, size=(1000, 2))
    assert np.all(np.abs(marginal_charfn(m, [0, 3], t)) > 0)


def test_combinator_errors():
    a = leaf(Z, levy=e2_spec())
    c = leaf(FiniteCyclicProduct([3]), drift=1.0)
    with pytest.raises(GroupMismatch):
        combine_sum(a, c)
    with pytest.raises(DimensionMismatch):
        combine_sum(a, combine_pair(a, a))
    with pytest.raises(DimensionMismatch):
        marginal_charfn(a, [0, 1], [1.0])


def test_gaussian_covariance_closed_form():
    g = GaussianSpec(Kernel.create(Z, {0: 1.0, 1: 0.5, 3: -0.25}))
    assert g.covariance((0,)) == 1.0 + 0.25 + 0.0625
    assert g.covariance((1,)) == 0.5
    assert g.covariance((2,)) == -0.125
    assert g.covariance((-3,)) == -0.25
    assert g.covariance((4,)) == 0.0
    assert np.all(np.linalg.eigvalsh(g.cov_matrix([(k,) for k in range(8)])) >= -1e-12)


def test_canonical_metric_zero_on_diagonal():
    m = leaf(Z, levy=e2_spec())
    assert canonical_metric(m, 3, 3, 10, RngStream(0)).value == 0.0


def test_canonical_metric_iid_constant_in_shift():
    m = leaf(Z, levy=e2_spec(kernel={0: 1.0}))
    est = [canonical_metric(m, 0, k, 20_000, RngStream(7, k)) for k in (1, 2, 5, 11)]
    for e in est[1:]:
        assert abs(e.value - est[0].value) <= 3 * math.hypot(e.stderr, est[0].stderr)


def test_canonical_metric_symmetry_and_triangle():
    m = leaf(Z, levy=e2_spec(), gaussian={0: 0.3})
    rng = RngStream(8)
    assert canonical_metric(m, 0, 2, 5000, rng).value == canonical_metric(m, 2, 0, 5000, rng).value
    ab = canonical_metric(m, 0, 1, 20_000, RngStream(9, 0))
    bc = canonical_metric(m, 1, 3, 20_000, RngStream(9, 1))
    ac = canonical_metric(m, 0, 3, 20_000, RngStream(9, 2))
    pooled = math.sqrt(ab.stderr ** 2 + bc.stderr ** 2 + ac.stderr ** 2)
    assert ac.value <= ab.value + bc.value + 3 * pooled


def test_thread_count_does_not_change_results(monkeypatch):
    m = combine_sum(leaf(Z, levy=e2_spec()), leaf(Z, gaussian={0: 1.0}))
    monkeypatch.setenv("IDPE_THREADS", "1")
    a = simulate_values(m, [0, 1], RngStream(10), 20_000)
    monkeypatch.setenv("IDPE_THREADS", "4")
    b = simulate_values(m, [0, 1], RngStream(10), 20_000)
    assert np.array_equal(a, b)


def test_trace_csv_and_provenance():
    m = leaf(Z, levy=e2_spec())
    tr = simulate_trace(m, folner_window(Z, 2), RngStream(11))
    lines = tr.to_csv().strip().splitlines()
    assert lines[0] == "g0,x0" and len(lines) == 6
    assert tr.provenance["model"] == model_hash(m)
    assert tr.value((0,)).shape == (1,)


@settings(max_examples=10, deadline=None)
@given(st.integers(-5, 5))
def test_stationary_marginals_ks(g):
    m = combine_sum(leaf(Z, levy=e2_spec()), leaf(Z, gaussian={0: 0.5, 1: 0.5}))
    x0 = simulate_values(m, [0], RngStream(12, 0), 10_000)[:, 0, 0]
    xg = simulate_values(m, [g], RngStream(12, 1), 10_000)[:, 0, 0]
    assert stats.ks_2samp(x0, xg).pvalue > 0.001


def test_log_charfn_drift_term():
    m = leaf(IntegerLattice(1), drift=2.5)
    assert log_marginal_charfn(m, [0, 1], [0.5, 0.25]) == 1j * 2.5 * 0.75
