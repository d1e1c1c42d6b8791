"""Blockwise coding order, replacement stages, antichain certification."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carpetq.coding import (
    AntichainInvariantError, CodingWord, CodingWordError, build_antichain,
    coding_predecessor, comparable, is_descendant, l_inverse, l_map,
    lambda_mass, make_coding_word, naive_comparable_pairs,
    raw_coding_antichain, swap_tail, verify_maximal_antichain, xi_sequence,
)
from carpetq.words import carpet_children, ell, make_word, word_mass


def test_l_map_round_trip(cache_a, carpet_a):
    for k in (1, 2, 3):
        for w, mass in cache_a.partition(k).iter_words():
            cw = l_map(w)
            assert len(cw) == len(w)
            assert l_inverse(carpet_a, cw) == w
            assert lambda_mass(carpet_a, cw) == mass


def test_lambda_mass_product_form(carpet_a):
    w = CodingWord(pairs=((0, 0), (2, 2)), tail=(2, 0))
    expect = (Fraction(1, 3) * Fraction(1, 3)
              * Fraction(2, 3) * Fraction(1, 3))
    assert lambda_mass(carpet_a, w) == expect


def test_make_coding_word_shape(carpet_a):
    w = make_coding_word(carpet_a, [(0, 0), (2, 2)], [0])
    assert w.pairs == ((0, 0), (2, 2))
    with pytest.raises(CodingWordError):
        make_coding_word(carpet_a, [(0, 0)], [0, 0])   # h=3 needs 2 pairs
    with pytest.raises(CodingWordError):
        make_coding_word(carpet_a, [(1, 0), (0, 0)], [0])
    with pytest.raises(CodingWordError):
        make_coding_word(carpet_a, [], [])


def test_coding_predecessor_prefers_tail(carpet_a):
    # 5 -> 4 keeps ell (3 = 3): the tail shortens, pairs stay.
    w = make_coding_word(carpet_a, [(0, 0), (2, 2), (0, 2)], [2, 0])
    pred = coding_predecessor(carpet_a, w)
    assert pred == CodingWord(w.pairs, (2,))
    # 4 -> 3 drops ell (3 -> 2): the last pair goes, tail unchanged.
    pred2 = coding_predecessor(carpet_a, pred)
    assert pred2 == CodingWord(((0, 0), (2, 2)), (2,))
    one = make_coding_word(carpet_a, [], [0])
    with pytest.raises(CodingWordError):
        coding_predecessor(carpet_a, one)


def test_coding_vs_flat_predecessor_on_plateau(carpet_a):
    # Lengths 9 and 10 share ell = 7, where both notions coincide.
    pairs = tuple([(0, 0)] * 7)
    w10 = make_word(carpet_a, pairs, [2, 0, 2])
    flat = l_map(make_word(carpet_a, pairs, [2, 0]))
    assert coding_predecessor(carpet_a, l_map(w10)) == flat


def test_descend_and_compare(carpet_a):
    a = CodingWord(((0, 0),), (2,))
    b = CodingWord(((0, 0), (2, 2)), (2, 0))
    c = CodingWord(((0, 2), (2, 2)), (2, 0))
    assert is_descendant(a, b) and not is_descendant(b, a)
    assert comparable(a, b) and comparable(b, a)
    assert not comparable(b, c)
    assert is_descendant(a, a)


def test_naive_comparable_pairs_refuses_large():
    words = [CodingWord((), (0,) * (h + 1)) for h in range(3)] * 4000
    with pytest.raises(ValueError):
        naive_comparable_pairs(words)


def test_xi_sequence_single_and_double(cache_a):
    assert xi_sequence(cache_a.partition(2)) == (5, 6)
    assert xi_sequence(cache_a.partition(3)) == (7, 8)
    # ell plateaus across the k=4 window, so the ladder has one rung.
    assert xi_sequence(cache_a.partition(4)) == (9,)


def test_xi_sequence_many_stages(cache_d):
    ladder = xi_sequence(cache_d.partition(2))
    assert ladder[0] == cache_d.partition(2).xi_min
    assert all(b > a for a, b in zip(ladder, ladder[1:]))
    params = cache_d.params
    assert len(ladder) == (ell(params, cache_d.partition(2).xi_max)
                           - ell(params, cache_d.partition(2).xi_min) + 1)


def test_swap_tail_example(carpet_a):
    w = CodingWord(((0, 0), (2, 2)), (2, 0))
    swapped = swap_tail(carpet_a, w, 0)
    assert swapped == CodingWord(((0, 0), (0, 0)), (2, 2))
    assert lambda_mass(carpet_a, swapped) == Fraction(4, 81)
    family = [CodingWord(((0, 0), (i, 2)), (2, 0)) for i in (0, 2)]
    fam_mass = sum((lambda_mass(carpet_a, f) for f in family), Fraction(0))
    assert fam_mass == Fraction(4, 81)


def test_swap_tail_validates_digits(carpet_a):
    w = CodingWord(((0, 0), (2, 2)), (2, 0))
    with pytest.raises(CodingWordError):
        swap_tail(carpet_a, w, 2)      # column 0 holds no i=2 map
    with pytest.raises(CodingWordError):
        swap_tail(carpet_a, CodingWord(((0, 0),), ()), 0)


def test_raw_coding_order_violations(cache_a):
    raw = raw_coding_antichain(cache_a.partition(2))
    words = [raw.word_at(idx) for idx in range(raw.size)]
    pairs = naive_comparable_pairs(words)
    assert len(pairs) == 54
    report = verify_maximal_antichain(raw)
    assert len(report.comparable_pairs) == 54
    assert not report.ok
    assert report.mass_exact          # mass is fine, the order is not


def test_raw_equals_built_when_single_stage(cache_a):
    # One ladder rung means no replacements; the built antichain is the
    # raw image, word for word.
    raw = raw_coding_antichain(cache_a.partition(4))
    built = cache_a.antichain(4)
    assert built.stage_logs == ()
    assert raw.size == built.size
    assert sorted(zip(raw.lengths, raw.pair_bytes, raw.tail_bytes, raw.nus)) \
        == sorted(zip(built.lengths, built.pair_bytes, built.tail_bytes,
                      built.nus))
    assert verify_maximal_antichain(built).ok


@pytest.mark.parametrize("k,size,base", [(2, 162, 189), (3, 1458, 1701)])
def test_antichain_frozen_sizes(cache_a, k, size, base):
    chain = cache_a.antichain(k)
    assert chain.base_size == base
    assert chain.size == size


def test_antichain_certified(cache_a, cache_d):
    for cache, ks in ((cache_a, (1, 2, 3, 4)), (cache_d, (2, 3))):
        for k in ks:
            chain = cache.antichain(k)
            report = verify_maximal_antichain(chain)
            assert report.ok
            assert report.mass_exact
            assert report.comparable_pairs == ()
            assert report.below_threshold


def test_antichain_exact_mass_and_identity(cache_a, cache_d):
    for cache, k in ((cache_a, 2), (cache_a, 3), (cache_d, 3)):
        chain = cache.antichain(k)
        assert chain.mass_total == 1
        total = sum((m for _, m in chain.iter_words()), Fraction(0))
        assert total == 1
        # Length-weighted mass is preserved exactly by every swap.
        assert chain.mass_len_total == chain.base_mass_len_total


def test_antichain_incomparability_naive(cache_a, carpet_a):
    chain = cache_a.antichain(2)
    words = [chain.word_at(idx) for idx in range(chain.size)]
    assert naive_comparable_pairs(words) == []
    eta_k = carpet_a.eta ** 2
    for w, mass in chain.iter_words():
        assert mass < eta_k


def test_stage_accounting(cache_a, cache_d):
    for cache, k in ((cache_a, 2), (cache_a, 3), (cache_d, 2), (cache_d, 3)):
        chain = cache.antichain(k)
        size = chain.base_size
        shift = 0.0
        for log in chain.stage_logs:
            size -= log.removed_count
            size += log.inserted_count
            shift += log.entropy_shift
            if log.removed_count:
                assert log.removed_mass > 0
                assert log.family_count > 0
            else:
                assert log.removed_mass == 0
            assert log.max_family_gap <= cache.params.c1 + 1e-12
        assert size == chain.size
        assert shift == pytest.approx(
            chain.entropy_sum - chain.base_entropy_sum, abs=1e-9)


def test_stage_words_kept_for_small_k(cache_a):
    chain = cache_a.antichain(2)
    assert chain.stage_logs
    for log in chain.stage_logs:
        assert log.families is not None
        for removed, inserted in log.families:
            r_mass = sum((lambda_mass(cache_a.params, w) for w in removed),
                         Fraction(0))
            i_mass = sum((lambda_mass(cache_a.params, w) for w in inserted),
                         Fraction(0))
            assert r_mass == i_mass         # per-family mass identity
            assert len(set(inserted)) == len(inserted)


def test_delta_within_per_mass_budget(cache_a):
    from carpetq.sequences import delta_k
    chain = cache_a.antichain(2)
    removed = sum((log.removed_mass for log in chain.stage_logs),
                  Fraction(0))
    assert removed == Fraction(4, 27)
    assert delta_k(chain) <= cache_a.params.c1 * float(removed) + 1e-12


def test_multi_stage_ladder_carpet_d(cache_d):
    chain = cache_d.antichain(3)
    assert len(chain.stage_logs) >= 5
    assert verify_maximal_antichain(chain).ok
    # Singleton columns make each swap mass-preserving per word, so the
    # entropy sums agree exactly.
    assert chain.entropy_sum == pytest.approx(chain.base_entropy_sum,
                                              abs=1e-12)


def test_build_rejects_aggregate_partition(carpet_a):
    from carpetq.partition import stream_lambda_k
    streamed = stream_lambda_k(carpet_a, 2)
    with pytest.raises(ValueError):
        build_antichain(streamed)


@settings(max_examples=60, deadline=None)
@given(steps=st.lists(st.integers(0, 10 ** 9), min_size=1, max_size=10),
       pick=st.integers(0, 2))
def test_random_words_round_trip_coding(carpet_a, carpet_c, carpet_d,
                                        steps, pick):
    params = (carpet_a, carpet_c, carpet_d)[pick]
    w = make_word(params, [], [params.gy[0]]) if ell(params, 1) == 0 \
        else make_word(params, [params.spec.digits[0]], [])
    for s in steps:
        kids = carpet_children(params, w)
        w = kids[s % len(kids)]
    cw = l_map(w)
    assert l_inverse(params, cw) == w
    assert lambda_mass(params, cw) == word_mass(params, w)
    if len(cw) > 1:
        pred = coding_predecessor(params, cw)
        assert is_descendant(pred, cw)
        assert comparable(cw, pred) and comparable(pred, cw)
        assert lambda_mass(params, pred) > lambda_mass(params, cw)
