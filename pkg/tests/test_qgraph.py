from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from covspec.mixed_moments import MixedMomentProvider, canonical_key
from covspec.qgraph import (MomentExpansion, Structure, classify_structure, enumerate_c1,
                            enumerate_c1_classes, evaluate_expansion, oracle_moment_expansion)

ONE = MixedMomentProvider.constant(1)


def narayana(k, r):
    return comb(k, r) * comb(k, r - 1) // k


def test_class_counts():
    (only,) = enumerate_c1_classes(1, 1)
    assert (only.r, only.s, only.ccmi_multiset) == (1, 1, ((1,),))
    two = enumerate_c1_classes(2, 1)
    assert sorted((c.r, c.nu, c.s) for c in two) == [(1, (2,), 2), (2, (1, 1), 1)]
    six = enumerate_c1_classes(2, 2)
    assert len(six) == 6
    assert sorted(c.r for c in six) == [1, 1, 1, 1, 2, 2]
    for c in six:
        if c.r == 2:
            assert len(set(c.colors)) == 1


def test_k2_m2_expansion():
    e = oracle_moment_expansion(2, 2)
    assert e.as_dict() == {
        (1, (2, 0), ((1, 1),)): 1,
        (1, (1, 1), ((1, 2),)): 2,
        (1, (0, 2), ((2, 2),)): 1,
        (2, (1, 0), ((1,), (1,))): 1,
        (2, (0, 1), ((2,), (2,))): 1,
    }


@pytest.mark.parametrize("k", range(1, 7))
def test_narayana_coefficients(k):
    poly = oracle_moment_expansion(k, 1).c_polynomial([1], ONE)
    assert poly == [narayana(k, r) for r in range(1, k + 1)]


@pytest.mark.parametrize("m", [1, 2, 3])
def test_first_moment(m):
    e = oracle_moment_expansion(1, m)
    assert {t.ccmis for t in e.terms} == {((l,),) for l in range(1, m + 1)}
    assert all(t.r == 1 and t.coeff == 1 for t in e.terms)


def test_enumeration_flags_are_clear():
    res = enumerate_c1(4, 2)
    assert not res.j_partition_flags and not res.counting_flags


def test_caps():
    with pytest.raises(ValueError):
        enumerate_c1(7, 1)
    with pytest.raises(ValueError):
        enumerate_c1(2, 4)


def test_classify_examples():
    assert classify_structure(Structure.from_matching((1,), (1,))).category == "C1"
    assert classify_structure(Structure.from_identifications((1,))).category == "C2"
    glued = Structure.from_identifications((1, 1), i_pairs=[(2, 3), (3, 5), (5, 6)], j_pairs=[(1, 2)])
    cl = classify_structure(glued)
    assert (cl.category, cl.max_multiplicity, cl.p, cl.s) == ("C3", 4, 1, 1)


def test_c3_bound_uses_head_components():
    # two vertical edges of multiplicity two: p + s - 1 equals k, r + s - 1 stays below it
    st_ = Structure.from_identifications((1, 1), i_pairs=[(2, 3), (5, 6)], j_pairs=[(1, 2)])
    cl = classify_structure(st_)
    assert cl.category == "C3"
    assert (cl.p, cl.s) == (2, 1)
    assert cl.p + cl.s - 1 == 2
    assert cl.r + cl.s - 1 < 2


def test_matching_must_respect_colours():
    with pytest.raises(ValueError):
        Structure.from_matching((1, 2), (2, 1))


def test_evaluate_examples():
    assert evaluate_expansion(oracle_moment_expansion(2, 1), 0.5, [1], ONE) == pytest.approx(1.5)
    assert evaluate_expansion(oracle_moment_expansion(3, 1), 1, [1], ONE) == 5


@pytest.mark.parametrize("k", [2, 3, 4])
def test_zero_ratio_keeps_single_component_terms(k):
    e = oracle_moment_expansion(k, 2)
    r1 = MomentExpansion(k, 2, tuple(t for t in e.terms if t.r == 1))
    deltas = [Fraction(1, 3), Fraction(2, 3)]
    prov = MixedMomentProvider.constant(Fraction(3, 2))
    assert evaluate_expansion(e, 0, deltas, prov) == evaluate_expansion(r1, 1, deltas, prov)


@pytest.mark.parametrize("k", range(1, 5))
def test_interval_merge(k):
    deltas = [Fraction(3, 10), Fraction(7, 10)]
    split = oracle_moment_expansion(k, 2).c_polynomial(deltas, ONE)
    assert split == oracle_moment_expansion(k, 1).c_polynomial([1], ONE)


def test_evaluate_validates_deltas():
    e = oracle_moment_expansion(2, 2)
    with pytest.raises(ValueError):
        evaluate_expansion(e, 1, [0.5, 0.6], ONE)
    with pytest.raises(ValueError):
        evaluate_expansion(e, 1, [1.0], ONE)


@settings(max_examples=25, deadline=None)
@given(st.fractions(Fraction(1, 20), Fraction(19, 20)), st.fractions(0, 3),
       st.lists(st.fractions(Fraction(1, 10), 5), min_size=12, max_size=12))
def test_label_permutation_invariance(t, c, vals):
    e = oracle_moment_expansion(3, 2)
    words = sorted(e.keys_needed())
    table = dict(zip(words, vals))
    swapped = {canonical_key(tuple(3 - x for x in w)): v for w, v in table.items()}
    a = evaluate_expansion(e, c, [t, 1 - t], MixedMomentProvider.analytic(table))
    b = evaluate_expansion(e, c, [1 - t, t], MixedMomentProvider.analytic(swapped))
    assert a == b


def test_json_round_trip_shape():
    doc = oracle_moment_expansion(2, 1).to_json()
    assert doc == {"k": 2, "m": 1, "terms": [
        {"r": 1, "s_counts": [2], "ccmis": [[1, 1]], "coeff": 1},
        {"r": 2, "s_counts": [1], "ccmis": [[1], [1]], "coeff": 1},
    ]}
