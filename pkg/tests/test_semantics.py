"""Tests for the program semantics and bounded exploration.

Oracles: successor sets are cross-checked against hand-computed posts; graph
edges are replayed against the defining step rule (remove one instance, add
the Parikh image of a witness word); downclosure invariance is checked by
state-set inclusion and prerun domination on random programs.
"""

import itertools
import random

import pytest

from apv.automata import nfa_finite
from apv.errors import InputError
from apv.multiset import Configuration, Multiset, Prerun, parikh, prerun_leq
from apv.semantics import (
    APWithInternal,
    AsyncProgram,
    downclose_ap,
    explore,
    find_fair_lasso,
    lang_downclose,
    lang_member,
    lang_words_upto,
    simulate_run,
    successors,
)

from corpus import doubling_program, random_ap, shared_counter_program

M = Multiset


# ---------------------------------------------------------------------------
# Construction and validation
# ---------------------------------------------------------------------------


def test_program_validates_initial_state():
    with pytest.raises(InputError):
        AsyncProgram({"d"}, {"x"}, {}, "nope", M())


def test_program_validates_buffer_letters():
    with pytest.raises(InputError):
        AsyncProgram({"d"}, {"x"}, {}, "d", M(["y"]))


def test_program_validates_context_shape_and_letters():
    with pytest.raises(InputError):
        AsyncProgram({"d"}, {"x"}, {("d", "x"): frozenset()}, "d", M())
    with pytest.raises(InputError):
        AsyncProgram({"d"}, {"x"}, {("d", "y", "d"): frozenset({()})}, "d", M())
    with pytest.raises(InputError):
        AsyncProgram({"d"}, {"x"}, {("d", "x", "e"): frozenset({()})}, "d", M())


def test_program_rejects_language_posting_unknown_handler():
    with pytest.raises(InputError):
        AsyncProgram({"d"}, {"x"}, {("d", "x", "d"): frozenset({("q",)})}, "d", M(["x"]))


def test_absent_context_is_empty():
    p = AsyncProgram({"d"}, {"x"}, {}, "d", M(["x"]))
    assert p.language("d", "x", "d") == frozenset()


# ---------------------------------------------------------------------------
# Successors
# ---------------------------------------------------------------------------


def test_successors_empty_buffer():
    p = AsyncProgram({"d"}, {"x"}, {("d", "x", "d"): frozenset({("x",)})}, "d", M())
    assert successors(p, p.initial_configuration, 3) == frozenset()


def test_successors_epsilon_handler_consumes():
    p = AsyncProgram({"d"}, {"x"}, {("d", "x", "d"): frozenset({()})}, "d", M(["x", "x"]))
    succ = successors(p, p.initial_configuration, 3)
    assert succ == frozenset({("x", Configuration("d", M(["x"])))})


def test_successors_counter_program_includes_two_pump():
    p = shared_counter_program("s1")
    succ = successors(p, p.initial_configuration, 4)
    targets = {c for (s, c) in succ if s == "s1"}
    assert Configuration("t0x0", M(["a", "a", "b", "b"])) in targets
    assert Configuration("t0x0", M()) in targets
    assert Configuration("t0x0", M(["a", "b"])) in targets
    # No witness word of odd length exists for the balanced loop.
    assert Configuration("t0x0", M(["a"])) not in targets


def test_successors_respect_word_bound():
    p = shared_counter_program("s1")
    succ = successors(p, p.initial_configuration, 2)
    targets = {c for (s, c) in succ if s == "s1"}
    assert Configuration("t0x0", M(["a", "a", "b", "b"])) not in targets
    assert Configuration("t0x0", M(["a", "b"])) in targets


def test_successors_monotone_in_buffer_sampled():
    rng = random.Random(7)
    checked = 0
    for _ in range(40):
        p = random_ap(rng)
        g = explore(p, 60, 3)
        for c in sorted(g.configurations, key=repr)[:6]:
            bigger = Configuration(c.state, c.buffer + M([sorted(p.alphabet)[0]]))
            small = successors(p, c, 3)
            big = successors(p, bigger, 3)
            for (s, c2) in small:
                lifted = Configuration(c2.state, c2.buffer + (bigger.buffer - c.buffer))
                assert (s, lifted) in big
                checked += 1
    assert checked > 100


# ---------------------------------------------------------------------------
# Exploration
# ---------------------------------------------------------------------------


def test_explore_counter_program_never_hits_abstract_top():
    p = shared_counter_program("s1")
    g = explore(p, 10_000, 6)
    states_seen = {c.state for c in g.configurations}
    assert not any(s.endswith("xw") for s in states_seen)
    assert g.initial == p.initial_configuration


def test_explore_alternation_invariant():
    # turn=0 goes with x=0 and turn=1 with x=1, whatever the buffer holds.
    p = shared_counter_program("s2")
    g = explore(p, 4_000, 5)
    assert {c.state for c in g.configurations} <= {"t0x0", "t1x1"}


def test_explore_doubling_buffer_grows():
    p = doubling_program()
    g = explore(p, 50, 2)
    assert not g.complete
    assert max(c.buffer.card for c in g.configurations) >= 3


def test_explore_complete_flag_small():
    p = AsyncProgram({"d"}, {"x"}, {("d", "x", "d"): frozenset({()})}, "d", M(["x"]))
    g = explore(p, 10, 2)
    assert g.complete
    assert g.frontier == frozenset()
    assert len(g.configurations) == 2


def test_explore_cap_marks_incomplete():
    p = doubling_program()
    g = explore(p, 3, 2)
    assert not g.complete
    assert g.frontier


def test_edges_replay_under_step_rule():
    rng = random.Random(11)
    for _ in range(25):
        p = random_ap(rng)
        g = explore(p, 80, 3)
        for (c, sigma, posted, c2) in g.edges:
            assert c.buffer[sigma] >= 1
            assert c2.buffer == c.buffer.remove(sigma) + posted
            lang = p.language(c.state, sigma, c2.state)
            words = lang_words_upto(lang, g.wordlen)
            assert any(parikh(w) == posted for w in words)


# ---------------------------------------------------------------------------
# Downclosure of programs
# ---------------------------------------------------------------------------


def test_downclose_ap_finite_language():
    p = doubling_program()
    q = downclose_ap(p)
    assert q.language("d", "s3", "d") == frozenset({(), ("s3",), ("s3", "s3")})


def test_downclose_ap_idempotent_on_slices():
    rng = random.Random(13)
    for _ in range(20):
        p = random_ap(rng)
        q1 = downclose_ap(p)
        q2 = downclose_ap(q1)
        for ctx in p.languages:
            w1 = lang_words_upto(q1.languages[ctx], 5)
            w2 = lang_words_upto(q2.languages[ctx], 5)
            assert w1 == w2


def test_downclosure_preserves_global_states_at_desk_scale():
    rng = random.Random(17)
    agreed = 0
    for _ in range(100):
        p = random_ap(rng, finite_only=True)
        g = explore(p, 500, 4)
        gd = explore(downclose_ap(p), 500, 4)
        if not (g.complete and gd.complete):
            continue
        assert {c.state for c in g.configurations} <= {c.state for c in gd.configurations}
        agreed += 1
    assert agreed >= 40


def _paths_upto(graph, maxlen):
    """All edge paths from the initial configuration, as preruns."""
    out = []
    frontier = [(graph.initial, [])]
    for _ in range(maxlen):
        nxt = []
        for (cfg, path) in frontier:
            for e in graph.out_edges(cfg):
                path2 = path + [e]
                out.append(path2)
                nxt.append((e[3], path2))
        frontier = nxt
    return out


def _as_prerun(path, initial):
    configs = [initial] + [e[3] for e in path]
    letters = [e[1] for e in path]
    return Prerun(configs=tuple(configs), letters=tuple(letters))


def test_downclosed_runs_dominated_by_original_runs():
    # Every short run of the downclosed program is pointwise below some run
    # of the original program (same states and letters, larger buffers).
    rng = random.Random(19)
    checked_programs = 0
    for _ in range(100):
        p = random_ap(rng, finite_only=True, max_word=3)
        gd = explore(downclose_ap(p), 500, 4)
        g = explore(p, 500, 8)
        if not (g.complete and gd.complete):
            continue
        big_paths = [_as_prerun(path, g.initial) for path in _paths_upto(g, 3)]
        for path in _paths_upto(gd, 3):
            rho = _as_prerun(path, gd.initial)
            assert any(prerun_leq(rho, tau) for tau in big_paths), rho
        checked_programs += 1
    assert checked_programs >= 40


# ---------------------------------------------------------------------------
# Fair lassos
# ---------------------------------------------------------------------------


def test_fair_lasso_lone_b_reposts():
    p = shared_counter_program("s2")
    g = explore(p, 10_000, 6)
    lasso = find_fair_lasso(g)
    assert lasso is not None
    cycle_labels = {e[1] for e in lasso.cycle}
    pending = {s for e in lasso.cycle for s in e[0].buffer.support}
    assert pending <= cycle_labels
    # the only fair cycle in this graph is b re-posting itself
    assert cycle_labels == {"b"}
    assert all(e[0].buffer == M(["b"]) for e in lasso.cycle)
    assert lasso.starved == frozenset()


def test_fair_lasso_absent_on_acyclic_graph():
    p = doubling_program()
    g = explore(p, 200, 2)
    assert find_fair_lasso(g) is None


def test_fair_lasso_starving_on_downclosed_doubling():
    p = downclose_ap(doubling_program())
    g = explore(p, 60, 2)
    lasso = find_fair_lasso(g, starve="s3")
    assert lasso is not None
    assert "s3" in lasso.starved
    assert all(e[0].buffer["s3"] >= 2 for e in lasso.cycle if e[1] == "s3")
    assert all(e[0].buffer["s3"] >= 1 for e in lasso.cycle)
    # without the starvation constraint a fair, non-starving self-loop exists
    plain = find_fair_lasso(g)
    assert plain is not None


def test_fair_lasso_stem_connects_initial_to_cycle():
    p = shared_counter_program("s2")
    g = explore(p, 10_000, 6)
    lasso = find_fair_lasso(g)
    cur = g.initial
    for e in lasso.stem:
        assert e[0] == cur
        cur = e[3]
    assert cur == lasso.cycle[0][0]
    for e in lasso.cycle:
        assert e[0] == cur
        cur = e[3]
    assert cur == lasso.cycle[0][0]


def test_fair_lasso_cycle_edges_exist_in_graph():
    p = downclose_ap(doubling_program())
    g = explore(p, 60, 2)
    lasso = find_fair_lasso(g, starve="s3")
    for e in itertools.chain(lasso.stem, lasso.cycle):
        assert e in g.edges


def test_fair_lasso_unfair_cycle_rejected():
    # A cycle that leaves a second handler pending forever is not fair:
    # y is pending but never executed on the only cycle.
    p = AsyncProgram(
        states={"d"},
        alphabet={"x", "y"},
        languages={("d", "x", "d"): frozenset({("x",)})},
        initial="d",
        initial_buffer=M(["x", "y"]),
    )
    g = explore(p, 50, 2)
    assert g.complete
    assert find_fair_lasso(g) is None


def test_fair_lasso_two_handler_alternation_found():
    p = AsyncProgram(
        states={"d"},
        alphabet={"x", "y"},
        languages={
            ("d", "x", "d"): frozenset({("y",)}),
            ("d", "y", "d"): frozenset({("x",)}),
        },
        initial="d",
        initial_buffer=M(["x"]),
    )
    g = explore(p, 50, 2)
    lasso = find_fair_lasso(g)
    assert lasso is not None
    assert {e[1] for e in lasso.cycle} == {"x", "y"}


# ---------------------------------------------------------------------------
# Language helpers and internal-action programs
# ---------------------------------------------------------------------------


def test_lang_words_upto_orders_shortest_first():
    lang = frozenset({("x", "x"), ("x",), ()})
    assert lang_words_upto(lang, 2) == [(), ("x",), ("x", "x")]


def test_lang_downclose_member_agrees_with_subwords():
    nfa = nfa_finite([("x", "y", "z")], {"x", "y", "z"})
    closed = lang_downclose(nfa)
    for w in [(), ("x",), ("y",), ("x", "z"), ("x", "y", "z")]:
        assert lang_member(closed, w)
    assert not lang_member(closed, ("z", "x"))


def test_ap_with_internal_validation_and_routing():
    prog = APWithInternal(
        states={"d0", "d1"},
        alphabet={"x"},
        internal_alphabet={"i"},
        languages={"x": frozenset({("i", "x")})},
        router={("d0", "i"): "d1", ("d1", "x"): "d1"},
        initial="d0",
        initial_buffer=M(["x"]),
    )
    assert prog.route("d0", ("i", "x")) == "d1"
    assert prog.route("d0", ("x",)) is None
    with pytest.raises(InputError):
        APWithInternal(
            states={"d"},
            alphabet={"x"},
            internal_alphabet={"x"},
            languages={},
            router={},
            initial="d",
            initial_buffer=M(),
        )


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def test_simulate_run_deterministic_per_seed():
    p = shared_counter_program("s2")
    r1 = simulate_run(p, 12, 5, 4)
    r2 = simulate_run(p, 12, 5, 4)
    assert r1 == r2
    assert len(r1) == 12
    assert all(set(rec) == {"step", "handler", "posted", "state", "buffer"} for rec in r1)


def test_simulate_run_stops_when_stuck():
    p = AsyncProgram({"d"}, {"x"}, {("d", "x", "d"): frozenset({()})}, "d", M(["x"]))
    recs = simulate_run(p, 10, 1, 2)
    assert len(recs) == 1
    assert recs[0]["buffer"] == {}
