"""Curve computations against the brute-force oracle and the structural
identities linking the four statistics."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from replab.seqstat import (CensoredValue, CurveKind, StatCurve, SymbolSeq,
                            brute_force_curve, check_duality,
                            check_min_decomposition, compute_curve,
                            longest_match_curve, maximal_repetition_curve,
                            recurrence_time, recurrence_time_curve,
                            repetition_time, repetition_time_curve,
                            seq_from_text, z_array)


def curves_equal(a: StatCurve, b: StatCurve) -> bool:
    return (a.kind is b.kind
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.values, b.values)
            and np.array_equal(a.censored, b.censored))


small_seqs = st.lists(st.integers(0, 3), max_size=40).map(
    lambda xs: SymbolSeq(np.array(xs, dtype=np.int64), alphabet_size=4))


# ---------------------------------------------------------------------------
# worked examples


def test_longest_match_examples():
    abab = longest_match_curve(seq_from_text("abab"))
    assert [abab.point(n).value for n in range(1, 5)] == [0, 0, 1, 2]
    aaaa = longest_match_curve(seq_from_text("aaaa"))
    assert [aaaa.point(n).value for n in (2, 3, 4)] == [1, 2, 3]
    single = longest_match_curve(seq_from_text("a"))
    assert single.point(1) == CensoredValue(0, False)


def test_maximal_repetition_examples():
    assert maximal_repetition_curve(seq_from_text("abcd")).point(4).value == 0
    assert maximal_repetition_curve(seq_from_text("abab")).point(4).value == 2
    assert maximal_repetition_curve(seq_from_text("aaaa")).point(4).value == 3


def test_recurrence_time_examples():
    aaaa = recurrence_time_curve(seq_from_text("aaaa"))
    for k in (1, 2, 3):
        assert aaaa.point(k) == CensoredValue(1, False)
    assert recurrence_time_curve(seq_from_text("abababab")).point(2) == \
        CensoredValue(2, False)
    abc = recurrence_time_curve(seq_from_text("abc"))
    assert abc.point(2) == CensoredValue(2, True)


def test_repetition_time_examples():
    aaaaa = repetition_time_curve(seq_from_text("aaaaa"))
    for k in range(1, 5):
        assert aaaaa.point(k) == CensoredValue(1, False)
    abcabc = repetition_time_curve(seq_from_text("abcabc"))
    assert abcabc.point(3).value == 3
    assert abcabc.point(1).value == 3
    assert repetition_time_curve(seq_from_text("abab")).point(2).value == 2


def test_brute_force_is_self_consistent():
    seq = seq_from_text("abab")
    assert curves_equal(brute_force_curve(seq, CurveKind.L2),
                        maximal_repetition_curve(seq))
    assert brute_force_curve(seq_from_text("abababab"), CurveKind.R1).point(2).value == 2


def test_brute_force_refuses_above_limit():
    seq = SymbolSeq(np.zeros(50, dtype=np.int64), alphabet_size=2)
    with pytest.raises(ValueError, match="oracle limit"):
        brute_force_curve(seq, CurveKind.L1, limit=10)


# ---------------------------------------------------------------------------
# oracle equivalence


@pytest.mark.parametrize("kind", list(CurveKind))
def test_exhaustive_binary_small(kind):
    for n in range(0, 11):
        for tup in itertools.product((0, 1), repeat=n):
            seq = SymbolSeq(np.array(tup, dtype=np.int64), alphabet_size=2)
            assert curves_equal(compute_curve(seq, kind),
                                brute_force_curve(seq, kind)), tup


@settings(max_examples=120, deadline=None)
@given(small_seqs, st.sampled_from(list(CurveKind)))
def test_oracle_equivalence_random(seq, kind):
    assert curves_equal(compute_curve(seq, kind), brute_force_curve(seq, kind))


def test_oracle_equivalence_larger_random():
    rng = np.random.default_rng(2024)
    for d in (2, 4):
        for _ in range(10):
            n = int(rng.integers(50, 500))
            seq = SymbolSeq(rng.integers(0, d, size=n), alphabet_size=d)
            for kind in CurveKind:
                assert curves_equal(compute_curve(seq, kind),
                                    brute_force_curve(seq, kind))


# ---------------------------------------------------------------------------
# invariants


@settings(max_examples=100, deadline=None)
@given(small_seqs)
def test_monotonicity_and_dominance(seq):
    l1 = longest_match_curve(seq)
    l2 = maximal_repetition_curve(seq)
    r1 = recurrence_time_curve(seq)
    r2 = repetition_time_curve(seq)
    assert np.all(np.diff(l1.values) >= 0)
    assert np.all(np.diff(l2.values) >= 0)
    assert np.all(l2.values >= l1.values)
    assert np.all(l1.values <= l1.indices)
    # uncensored R prefixes are non-decreasing and R2 <= R1 pointwise
    for curve in (r1, r2):
        vals = [cv.value for _, cv in curve.items() if not cv.censored]
        assert all(a <= b for a, b in zip(vals, vals[1:]))
    for k in range(1, len(seq) + 1):
        p1, p2 = r1.point(k), r2.point(k)
        if not p1.censored and not p2.censored:
            assert p2.value <= p1.value
        if not p2.censored:
            assert p2.value <= seq.alphabet_size ** k


@settings(max_examples=100, deadline=None)
@given(small_seqs)
def test_duality_property(seq):
    assert check_duality(longest_match_curve(seq), recurrence_time_curve(seq))
    assert check_duality(maximal_repetition_curve(seq), repetition_time_curve(seq))


def test_duality_rejects_kind_mismatch():
    seq = seq_from_text("abab")
    with pytest.raises(ValueError, match="kind mismatch"):
        check_duality(longest_match_curve(seq), repetition_time_curve(seq))


def test_duality_negative_control():
    seq = seq_from_text("abab")
    r2 = repetition_time_curve(seq)
    corrupted = StatCurve(CurveKind.R2, r2.indices,
                          np.where(r2.indices == 2, r2.values - 1, r2.values),
                          r2.censored)
    assert not check_duality(maximal_repetition_curve(seq), corrupted)


def test_min_decomposition_examples():
    assert check_min_decomposition(seq_from_text("abcabc"), 3) is True
    for k in (1, 2, 3):
        assert check_min_decomposition(seq_from_text("aaaaa"), k) is True
    # censored repetition time cannot decide the identity
    assert check_min_decomposition(seq_from_text("abcd"), 2) is None


def test_min_decomposition_exhaustive_binary():
    for n in range(2, 12):
        for tup in itertools.product((0, 1), repeat=n):
            seq = SymbolSeq(np.array(tup, dtype=np.int64), alphabet_size=2)
            for k in range(1, n):
                assert check_min_decomposition(seq, k) is not False, (tup, k)


@settings(max_examples=80, deadline=None)
@given(small_seqs)
def test_point_queries_match_curves(seq):
    if len(seq) == 0:
        return
    r1 = recurrence_time_curve(seq)
    r2 = repetition_time_curve(seq)
    for k in range(1, len(seq) + 1):
        assert recurrence_time(seq, k) == r1.point(k)
        assert repetition_time(seq, k) == r2.point(k)


def test_point_queries_on_wide_alphabet():
    # above 256 symbols the byte fast path is unavailable
    rng = np.random.default_rng(7)
    seq = SymbolSeq(rng.integers(0, 500, size=200), alphabet_size=500)
    r1 = recurrence_time_curve(seq)
    r2 = repetition_time_curve(seq)
    for k in (1, 2, 3, 5):
        assert recurrence_time(seq, k) == r1.point(k)
        assert repetition_time(seq, k) == r2.point(k)


def test_append_stability():
    # curves recomputed on every prefix agree with the final curves where
    # the prefix determines them; the online automaton is the stream path
    rng = np.random.default_rng(5)
    data = rng.integers(0, 2, size=80)
    full = SymbolSeq(data, alphabet_size=2)
    l1_full = longest_match_curve(full)
    l2_full = maximal_repetition_curve(full)
    for n in (1, 13, 27, 80):
        pre = full.prefix(n)
        assert np.array_equal(longest_match_curve(pre).values, l1_full.values[:n])
        assert np.array_equal(maximal_repetition_curve(pre).values, l2_full.values[:n])
        # uncensored R-points of a prefix stay valid on the full sequence
        for k in range(1, n + 1):
            point = recurrence_time(pre, k)
            if not point.censored:
                assert recurrence_time(full, k) == point
            point = repetition_time(pre, k)
            if not point.censored:
                assert repetition_time(full, k) == point


def test_empty_and_degenerate():
    empty = SymbolSeq(np.empty(0, dtype=np.int64))
    for kind in CurveKind:
        assert len(compute_curve(empty, kind)) == 0
    with pytest.raises(ValueError):
        recurrence_time(empty, 1)


# ---------------------------------------------------------------------------
# data types


def test_symbolseq_validation():
    with pytest.raises(ValueError, match="non-negative"):
        SymbolSeq(np.array([0, -1]))
    with pytest.raises(ValueError, match="declared alphabet"):
        SymbolSeq(np.array([0, 5]), alphabet_size=3)
    with pytest.raises(ValueError):
        SymbolSeq(np.array([0.5, 1.0]))
    seq = SymbolSeq(np.array([0, 2, 2]))
    assert seq.alphabet_size == 3 and not seq.declared
    seq = SymbolSeq(np.array([0, 1]), alphabet_size=6)
    assert seq.alphabet_size == 6 and seq.declared


def test_symbolseq_is_immutable():
    seq = seq_from_text("abc")
    with pytest.raises(AttributeError):
        seq.alphabet_size = 9
    with pytest.raises(ValueError):
        seq.symbols[0] = 1


def test_ingestion_builds_dense_ids():
    seq = SymbolSeq.from_tokens("the cat the hat".split())
    assert seq.symbols.tolist() == [0, 1, 0, 2]
    assert seq.alphabet_size == 3
    seq = SymbolSeq.from_bytes(b"zaza")
    assert seq.symbols.tolist() == [1, 0, 1, 0]
    assert seq.alphabet_size == 2


def test_suffix_view():
    seq = seq_from_text("abcabc")
    tail = seq.suffix(2)
    assert tail.symbols.tolist() == seq.symbols[2:].tolist()
    assert tail.alphabet_size == seq.alphabet_size
    with pytest.raises(ValueError):
        seq.suffix(10)


def test_statcurve_validation_and_access():
    with pytest.raises(ValueError, match="censored"):
        StatCurve(CurveKind.L1, [1, 2], [0, 1], [False, True])
    curve = StatCurve(CurveKind.R1, [2, 4, 8], [1, 3, 5], [False, False, True])
    assert curve.point(4) == CensoredValue(3, False)
    with pytest.raises(KeyError):
        curve.point(3)
    assert curve.censored_fraction() == pytest.approx(1 / 3)
    sub = curve.restrict([4, 8, 100])
    assert sub.indices.tolist() == [4, 8]


def test_z_array_basics():
    assert z_array([]) == []
    assert z_array(list(b"aaaa")) == [4, 3, 2, 1]
    assert z_array(list(b"abab")) == [4, 0, 2, 0]
