import itertools
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from idpe import (BudgetExceeded, FiniteSystem, HypothesisViolation, IndexMismatch, LatticeTranslation,
                  NotMeasurePreserving, NotProbability, UnsupportedDescriptor, appendixA_pipeline,
                  check_double_ergodicity_equivalence, identity_system, invariant_partition, is_ergodic,
                  is_null_action, is_weakly_mixing, product_system, random_pipeline_instance, rotation)


def brute_invariant_sets(sys):
    """All subsets E of positive states with T^{-1}(E) = E modulo null states."""
    pos = [s for s in range(sys.n) if sys.positive[s]]
    out = set()
    for r in range(len(pos) + 1):
        for sub in itertools.combinations(pos, r):
            e = set(sub)
            if all({s for s in pos if int(t[s]) in e} == e for t in sys.maps):
                out.add(frozenset(e))
    return out


def unions_of_atoms(part):
    out = set()
    for r in range(len(part.atoms) + 1):
        for combo in itertools.combinations(part.atoms, r):
            out.add(frozenset(itertools.chain.from_iterable(combo)))
    return out


def test_rotation_single_atom():
    assert invariant_partition(rotation(4)).atoms == ((0, 1, 2, 3),)


def test_identity_three_atoms():
    assert len(invariant_partition(identity_system(3))) == 3


def test_rotation_square_two_atoms():
    sq = product_system(rotation(2), rotation(2))
    part = invariant_partition(sq)
    assert len(part) == 2
    # diagonal {(0,0),(1,1)} and antidiagonal
    assert set(part.atoms) == {(0, 3), (1, 2)}
    assert unions_of_atoms(part) == brute_invariant_sets(sq)


def test_is_ergodic_examples():
    assert is_ergodic(rotation(5))
    assert not is_ergodic(identity_system(2))
    assert is_ergodic(FiniteSystem((1,), [[0]]))


def test_not_probability():
    with pytest.raises(NotProbability):
        is_ergodic(FiniteSystem((Fraction(1, 2), Fraction(1, 4)), [[0, 1]]))
    with pytest.raises(NotProbability):
        is_ergodic(FiniteSystem((1, 0), [[0, 1]], infinite=(False, True)))


def test_product_examples():
    sq = product_system(rotation(2), rotation(2))
    assert sq.n == 4 and not is_ergodic(sq)
    a = FiniteSystem((Fraction(1, 4), Fraction(3, 4)), [[0, 1]])
    b = FiniteSystem((Fraction(1, 3), Fraction(2, 3)), [[0, 1]])
    assert product_system(a, b).measure == (Fraction(1, 12), Fraction(2, 12), Fraction(3, 12), Fraction(6, 12))
    one = FiniteSystem((1,), [[0]])
    for s in (rotation(3), identity_system(2), a):
        p = product_system(s, one)
        assert is_ergodic(p) == is_ergodic(s) and len(invariant_partition(p)) == len(invariant_partition(s))
    with pytest.raises(IndexMismatch):
        product_system(rotation(2, maps=2), rotation(2))


def test_weak_mixing_examples():
    assert is_weakly_mixing(FiniteSystem((1,), [[0]]))
    assert not is_weakly_mixing(rotation(2))
    assert is_weakly_mixing(FiniteSystem((1, 0, 0), [[0, 0, 1]]))


def test_validator_rejects_non_preserving():
    with pytest.raises(NotMeasurePreserving):
        FiniteSystem((Fraction(1, 2), Fraction(1, 2)), [[0, 0]])
    with pytest.raises(NotMeasurePreserving):
        FiniteSystem((Fraction(1, 4), Fraction(3, 4)), [[1, 0]])
    with pytest.raises(NotMeasurePreserving):
        FiniteSystem((1,), [[1]])
    with pytest.raises(NotMeasurePreserving):
        FiniteSystem((0.5, 0.5), [[0, 0]])


def _preserves(meas, tmap):
    return all(sum((meas[u] for u in range(len(meas)) if tmap[u] == s), Fraction(0)) == meas[s]
               for s in range(len(meas)))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 3), min_size=n, max_size=n).filter(lambda w: sum(w) > 0),
    st.lists(st.integers(0, n - 1), min_size=n, max_size=n))))
def test_validator_fuzz(data):
    weights, tmap = data
    meas = tuple(Fraction(w, sum(weights)) for w in weights)
    if _preserves(meas, tmap):
        FiniteSystem(meas, [tmap])
    else:
        with pytest.raises(NotMeasurePreserving):
            FiniteSystem(meas, [tmap])


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 2), min_size=n, max_size=n).filter(lambda w: sum(w) > 0),
    st.lists(st.permutations(list(range(n))), min_size=1, max_size=2))))
def test_partition_matches_subset_enumeration(data):
    weights, perms = data
    meas = tuple(Fraction(w, sum(weights)) for w in weights)
    maps = []
    for p in perms:
        # keep the map measure preserving: act by p only inside classes of equal mass
        q = list(range(len(meas)))
        for cls in {m for m in meas}:
            idx = [s for s in range(len(meas)) if meas[s] == cls]
            img = sorted(idx, key=lambda s: p[s])
            for a, b in zip(idx, img):
                q[a] = b
        maps.append(q)
    sys = FiniteSystem(meas, maps)
    assert unions_of_atoms(invariant_partition(sys)) == brute_invariant_sets(sys)


def test_equivalence_small_cases():
    rep = check_double_ergodicity_equivalence(1, 1)
    assert rep.counterexamples == [] and rep.enumerated >= 1
    rep = check_double_ergodicity_equivalence(2, 2, max_denominator=2)
    assert rep.counterexamples == []
    rep = check_double_ergodicity_equivalence(3, 2)
    assert rep.counterexamples == [] and rep.wmNontrivial == 0


def test_equivalence_budget():
    with pytest.raises(BudgetExceeded):
        check_double_ergodicity_equivalence(6, 1)
    with pytest.raises(BudgetExceeded):
        check_double_ergodicity_equivalence(4, 2, budget=100)


def test_finite_weak_mixing_only_trivial():
    rep = check_double_ergodicity_equivalence(4, 2)
    assert rep.wmNontrivial == 0 and rep.wmCount >= 1
    js = rep.to_json()
    assert set(js) >= {"enumerated", "ergodicCount", "wmCount", "counterexamples"}


def test_pipeline_trivial():
    T = FiniteSystem((1,), [[0]])
    S = rotation(3)
    rep = appendixA_pipeline(T, S, np.zeros((1, 3)))
    assert rep.passed and rep.C == 0.0


def test_pipeline_forced_zero_by_exact_oracle():
    # invariance f(0, y + 1) = f(0, y) with zero mean: exact nullspace is trivial
    rows = [[(1 if j == (y + 1) % 3 else 0) - (1 if j == y else 0) for j in range(3)] for y in range(3)]
    rows.append([1, 1, 1])
    assert sympy.Matrix(rows).nullspace() == []
    rep = appendixA_pipeline(FiniteSystem((1,), [[0]]), rotation(3), np.zeros((1, 3)))
    assert rep.passed and rep.f_max_positive == 0.0


def test_pipeline_hypotheses():
    T = FiniteSystem((1,), [[0]])
    with pytest.raises(HypothesisViolation, match="zero mean"):
        appendixA_pipeline(T, rotation(3), np.ones((1, 3)))
    with pytest.raises(HypothesisViolation, match="invariant"):
        appendixA_pipeline(T, rotation(3), np.array([[1.0, -1.0, 0.0]]))
    with pytest.raises(HypothesisViolation, match="T x T"):
        appendixA_pipeline(rotation(2), rotation(2), np.zeros((2, 2)))
    with pytest.raises(HypothesisViolation, match="S is not ergodic"):
        appendixA_pipeline(T, identity_system(2), np.zeros((1, 2)))


def test_pipeline_random_instances():
    gen = np.random.default_rng(123)
    for _ in range(100):
        T, S, f = random_pipeline_instance(gen)
        assert appendixA_pipeline(T, S, f).passed


def test_null_action_examples():
    assert not is_null_action(rotation(4))
    assert is_null_action(LatticeTranslation(1))
    two = FiniteSystem((1, 0), [[0, 1]], infinite=(False, True))
    assert not is_null_action(two)
    only_inf = FiniteSystem((0, 0), [[1, 0]], infinite=(True, True))
    assert is_null_action(only_inf)
    with pytest.raises(UnsupportedDescriptor):
        is_null_action("Z^2")


def test_infinite_mass_preservation():
    with pytest.raises(NotMeasurePreserving):
        FiniteSystem((1, 0), [[1, 1]], infinite=(False, True))
