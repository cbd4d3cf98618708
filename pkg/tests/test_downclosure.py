"""Downclosure pipeline tests.

Independent oracles:

* pattern emptiness — w is in the downward closure of L(A) iff
  L(A) intersected with Sigma* w1 Sigma* ... wk Sigma* is nonempty; the
  intersection goes through the regular-product construction and emptiness
  through the run-pair grammar.  This is the ground truth the closure
  automaton is checked against.
* the word-set saturation engine (`pda_downclosed_upto`) — an
  algorithmically unrelated bounded-length slice of the closure.
* exact NFA equivalence — via determinization and complementation, for the
  hand examples with known closed forms.
"""

import random

import pytest

from corpus import all_words_upto, random_pda
from apv.automata import (
    nfa_empty,
    nfa_eps_free,
    nfa_finite,
    nfa_intersect,
    nfa_is_empty,
    nfa_determinize,
    dfa_complement,
    nfa_letters_star,
    nfa_member,
    nfa_word,
    nfa_words_upto,
    Nfa,
)
from apv.downclosure import (
    AugmentedPda,
    PostIdeal,
    augment,
    delta_alphabet,
    downclosure_nfa,
    dual,
    ideal_decomposition,
    m_pq_pda,
    pda_to_bounded_pn,
    stack_bound,
)
from apv.errors import InputError, ResourceLimit
from apv.multiset import Multiset, parikh, subwords_of
from apv.pda import (
    SimplePda,
    bounded_words_upto,
    intersect_regular,
    nfa_to_pda,
    pda_downclosed_upto,
    pda_is_empty,
    pda_member,
    pda_words_upto,
)
from apv.automata import subword_pattern_nfa
from apv.petrinet import pn_language_upto, reachable_markings


def sp(states, edges, initial, finals, sigma, gamma):
    return SimplePda(
        states=frozenset(states),
        input_alphabet=frozenset(sigma),
        stack_alphabet=frozenset(gamma),
        edges=frozenset(edges),
        initial=initial,
        finals=frozenset(finals),
    )


ANBN = sp(
    {0, 1},
    {(0, "a", ("push", "A"), 0), (0, None, None, 1), (1, "b", ("pop", "A"), 1)},
    0,
    {1},
    {"a", "b"},
    {"A"},
)

BRACKETS = sp(
    {0},
    {(0, "(", ("push", "X"), 0), (0, ")", ("pop", "X"), 0)},
    0,
    {0},
    {"(", ")"},
    {"X"},
)


def in_downclosure_oracle(machine, word):
    """Pattern-emptiness ground truth for membership in the closure."""
    pattern = subword_pattern_nfa(word, machine.input_alphabet)
    return not pda_is_empty(intersect_regular(machine, pattern))


def nfa_equal(m1: Nfa, m2: Nfa, alphabet) -> bool:
    d1 = nfa_determinize(m1, alphabet)
    d2 = nfa_determinize(m2, alphabet)
    only1 = nfa_intersect(nfa_eps_free(d1), dfa_complement(d2))
    only2 = nfa_intersect(nfa_eps_free(d2), dfa_complement(d1))
    return nfa_is_empty(only1) and nfa_is_empty(only2)


# ---------------------------------------------------------------------------
# dual
# ---------------------------------------------------------------------------


def test_dual_reverses_anbn():
    words = pda_words_upto(dual(ANBN), 6)
    assert words == [(), ("b", "a"), ("b", "b", "a", "a"), ("b",) * 3 + ("a",) * 3]


def test_dual_reverses_random():
    rng = random.Random(21)
    for _ in range(25):
        a = random_pda(rng, max_edges=5)
        fwd = {tuple(reversed(w)) for w in pda_words_upto(a, 4)}
        assert set(pda_words_upto(dual(a), 4)) == fwd


def test_dual_twice_restores_language():
    rng = random.Random(22)
    for _ in range(10):
        a = random_pda(rng, max_edges=5)
        assert pda_words_upto(dual(dual(a)), 4) == pda_words_upto(a, 4)


# ---------------------------------------------------------------------------
# m_pq_pda and delta_alphabet
# ---------------------------------------------------------------------------

PUSH_POP = sp(
    {"p", "q"},
    {("p", "a", ("push", "G"), "p"), ("q", "b", ("pop", "G"), "q")},
    "p",
    {"q"},
    {"a", "b"},
    {"G"},
)


def test_m_pq_words_are_a_star():
    m = m_pq_pda(PUSH_POP, "p", "q")
    assert pda_words_upto(m, 3) == [(), ("a",), ("a", "a"), ("a", "a", "a")]


def test_m_pq_requires_known_states():
    with pytest.raises(InputError):
        m_pq_pda(PUSH_POP, "p", "zzz")


def test_delta_examples():
    assert delta_alphabet(PUSH_POP, "p", "q") == frozenset({"a"})
    assert delta_alphabet(dual(PUSH_POP), "q", "p") == frozenset({"b"})
    # Same state on both sides: no stack can be built at q and consumed at q
    # in this machine beyond the empty one, so no letters occur.
    assert delta_alphabet(PUSH_POP, "q", "q") == frozenset()


def test_delta_matches_pattern_emptiness():
    rng = random.Random(23)
    for _ in range(12):
        a = random_pda(rng, state_counts=(1, 2, 2, 3), max_edges=5)
        states = sorted(a.states)
        for p in states:
            for q in states:
                m = m_pq_pda(a, p, q)
                want = frozenset(
                    letter
                    for letter in a.input_alphabet
                    if not pda_is_empty(
                        intersect_regular(m, subword_pattern_nfa((letter,), a.input_alphabet))
                    )
                )
                assert delta_alphabet(a, p, q) == want


# ---------------------------------------------------------------------------
# augment
# ---------------------------------------------------------------------------


def test_stack_bound_formula():
    assert stack_bound(ANBN) == 8
    assert stack_bound(PUSH_POP) == 8
    assert stack_bound(BRACKETS) == 2


def test_augment_shape_and_recovery():
    aug = augment(ANBN)
    assert isinstance(aug, AugmentedPda)
    assert aug.bound == 8
    assert aug.pda.states == aug.source.states
    assert len(aug.pair_symbols) == 4
    assert aug.pda.stack_alphabet == aug.source.stack_alphabet | aug.pair_symbols
    extra = aug.pda.edges - aug.source.edges
    assert len(extra) == 8  # two loops per ordered pair
    for (p, _label, op, q) in extra:
        assert p == q and op is not None and op[1] in aug.pair_symbols
    assert aug.strip() == aug.source


def test_augment_accepts_dropped_letters():
    aug = augment(ANBN)
    assert pda_member(aug.pda, ("a", "a", "b"))
    assert pda_member(aug.pda, ("a", "b", "b"))
    assert not pda_member(aug.pda, ("b", "a"))  # not a subword of any a^n b^n


def test_augment_language_sandwich():
    rng = random.Random(24)
    for _ in range(20):
        a = random_pda(rng, state_counts=(1, 2, 2, 3), max_edges=5)
        aug = augment(a)
        exact = set(pda_words_upto(a, 4))
        middle = set(pda_words_upto(aug.pda, 4))
        closed = set(pda_downclosed_upto(a, 4))
        assert exact <= middle <= closed


def test_augment_bounded_stack_suffices():
    rng = random.Random(25)
    for _ in range(12):
        a = random_pda(rng, state_counts=(1, 2, 2), max_edges=4)
        aug = augment(a)
        full = pda_words_upto(aug.pda, 4)
        bounded = bounded_words_upto(aug.pda, aug.bound, 4)
        assert bounded == full


# ---------------------------------------------------------------------------
# downclosure_nfa
# ---------------------------------------------------------------------------


def test_downclosure_anbn_is_astar_bstar():
    dn = downclosure_nfa(ANBN)
    astar_bstar = nfa_finite([], {"a", "b"})  # replaced below; build a*b* directly
    from apv.automata import nfa_concat, nfa_star, nfa_word as w

    astar_bstar = nfa_concat(
        [nfa_star(w(("a",), {"a", "b"})), nfa_star(w(("b",), {"a", "b"}))]
    )
    assert nfa_equal(dn, astar_bstar, {"a", "b"})


def test_downclosure_single_word_has_all_subwords():
    machine = nfa_to_pda(nfa_word(("a", "b", "c"), {"a", "b", "c"}))
    dn = downclosure_nfa(machine)
    got = set(nfa_words_upto(dn, 6))
    assert got == subwords_of(("a", "b", "c"))
    assert len(got) == 8


def test_downclosure_brackets_is_everything():
    dn = downclosure_nfa(BRACKETS)
    assert nfa_equal(dn, nfa_letters_star(["(", ")"], {"(", ")"}), {"(", ")"})


def test_downclosure_empty_language():
    dead = sp({0, 1}, {(0, "a", ("push", "X"), 0)}, 0, {1}, {"a"}, {"X"})
    dn = downclosure_nfa(dead)
    assert nfa_is_empty(dn)


def test_downclosure_vs_saturation_random():
    rng = random.Random(26)
    for _ in range(60):
        a = random_pda(rng)
        dn = downclosure_nfa(a)
        assert set(nfa_words_upto(dn, 4)) == set(pda_downclosed_upto(a, 4))


def test_downclosure_vs_pattern_oracle_random():
    rng = random.Random(27)
    for _ in range(15):
        a = random_pda(rng, max_edges=5)
        dn = downclosure_nfa(a)
        for w in all_words_upto(a.input_alphabet, 3):
            assert nfa_member(dn, w) == in_downclosure_oracle(a, w), (a, w)


def test_downclosure_downward_closed_and_contains_language():
    rng = random.Random(28)
    for _ in range(25):
        a = random_pda(rng, max_edges=5)
        dn = downclosure_nfa(a)
        slice_ = set(nfa_words_upto(dn, 4))
        for w in pda_words_upto(a, 4):
            assert w in slice_
        for w in slice_:
            assert subwords_of(w) <= slice_


# ---------------------------------------------------------------------------
# Petri net translation
# ---------------------------------------------------------------------------


def test_net_shape_anbn():
    net = pda_to_bounded_pn(ANBN)
    assert ("s", 0) in net.places and ("s", 8) in net.places
    assert any(isinstance(p, tuple) and p[:1] == ("h",) for p in net.places)
    assert net.m0[("s", 0)] == 1 and net.mf[("s", 0)] == 1
    assert net.m0.card == 2 and net.mf.card == 2


def test_net_one_state_machines_match_closure():
    rng = random.Random(29)
    for _ in range(12):
        a = random_pda(rng, state_counts=(1,), max_edges=4)
        net = pda_to_bounded_pn(a)
        markings, _ = reachable_markings(net, require_1bounded=True)
        for m in markings:
            assert all(v == 1 for v in m.values())
        got = pn_language_upto(net, 4)
        want = set(nfa_words_upto(downclosure_nfa(a), 4))
        assert got == want, (sorted(got ^ want))


def test_net_empty_language_machine():
    dead = sp({0, 1}, {(0, "a", ("push", "X"), 0)}, 0, {1}, {"a"}, {"X"})
    net = pda_to_bounded_pn(dead)
    assert pn_language_upto(net, 3) == set()


# ---------------------------------------------------------------------------
# Ideal decomposition
# ---------------------------------------------------------------------------


def test_ideal_normalizes_base():
    ideal = PostIdeal(Multiset({"a": 2, "b": 1}), {"a"})
    assert ideal.base == Multiset({"b": 1})
    assert ideal.covers(Multiset({"a": 99, "b": 1}))
    assert not ideal.covers(Multiset({"b": 2}))


def test_ideal_subsumption():
    big = PostIdeal(Multiset({"b": 1}), {"a"})
    small = PostIdeal(Multiset({"b": 1}), frozenset())
    assert big.subsumes(small)
    assert not small.subsumes(big)
    assert big.subsumes(big)


def test_ideals_of_astar_bstar():
    dn = downclosure_nfa(ANBN)
    assert ideal_decomposition(dn) == frozenset(
        [PostIdeal(Multiset(), frozenset({"a", "b"}))]
    )


def test_ideals_of_finite_diamond():
    fin = nfa_finite([(), ("a",), ("b",), ("a", "b")], {"a", "b"})
    assert ideal_decomposition(fin) == frozenset(
        [PostIdeal(Multiset({"a": 1, "b": 1}), frozenset())]
    )


def test_ideals_of_empty():
    assert ideal_decomposition(nfa_empty({"a"})) == frozenset()


def test_ideals_cover_exactly_the_parikh_image():
    rng = random.Random(30)
    for _ in range(25):
        a = random_pda(rng, max_edges=5)
        dn = downclosure_nfa(a)
        ideals = ideal_decomposition(dn)
        words = set(nfa_words_upto(dn, 4))
        images = {parikh(w) for w in words}
        for w in words:
            assert any(i.covers(parikh(w)) for i in ideals), w
        # Conversely, small multisets covered by some ideal are realized.
        for i in ideals:
            if i.base.card <= 4 and not i.pumpable:
                assert i.base in images, i


def test_ideal_path_cap():
    # A chain of 14 two-edge diamonds has 2^14 interleaving-free edge paths.
    states = set(range(15))
    transitions = set()
    for i in range(14):
        transitions.add((i, "a", i + 1))
        transitions.add((i, "b", i + 1))
    diamond = Nfa(
        states=frozenset(states),
        alphabet=frozenset({"a", "b"}),
        transitions=frozenset(transitions),
        initial=0,
        finals=frozenset({14}),
    )
    with pytest.raises(ResourceLimit):
        ideal_decomposition(diamond, path_cap=10_000)


def test_nfa_downclosure_reexport():
    from apv.downclosure import nfa_downclosure

    closed = nfa_downclosure(nfa_word(("a", "b"), {"a", "b"}))
    assert set(nfa_words_upto(closed, 3)) == {(), ("a",), ("b",), ("a", "b")}
