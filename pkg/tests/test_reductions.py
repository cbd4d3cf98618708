"""Certified-direction tests for the reduction gadgets.

Every gadget promises a correspondence between a source property and a
target property.  These tests decide the source side with the bounded
oracle interpreter (or exactly, for finite instances) and check the target
side agrees in the certified direction on randomized instances, plus the
documented special cases and freshness guarantees.
"""

import random
from collections import deque

import pytest

from apv.automata import nfa_empty, nfa_finite, nfa_star
from apv.errors import InputError
from apv.multiset import Configuration, Multiset, parikh
from apv.pda import nfa_to_pda, pda_words_upto
from apv.reductions import (
    GadgetOutput,
    compile_internal,
    emptiness_to_safety,
    emptiness_to_termination,
    fairnt_to_starvation,
    lang_apply_hom,
    lang_concat_word,
    lang_union_concat_letter,
    project_starvation_steps,
    reach_to_fairnt,
    starvation_to_reach,
    strip_letter_steps,
    zint_to_reach,
)
from apv.semantics import (
    APWithInternal,
    AsyncProgram,
    as_finite_language,
    explore,
    find_fair_lasso,
    lang_is_empty,
    lang_words_upto,
    successors,
)

from corpus import counter_pda, doubling_program, random_ap


def _random_lang(rng, letters):
    """A random handler language over a subset of ``letters``."""
    words = [
        tuple(rng.choice(letters) for _ in range(rng.randrange(0, 4)))
        for _ in range(rng.randrange(0, 4))
    ]
    roll = rng.random()
    if roll < 0.5:
        return as_finite_language(words)
    if roll < 0.7:
        return nfa_finite(words, alphabet=letters)
    if roll < 0.85:
        return nfa_star(nfa_finite(words, alphabet=letters))
    return nfa_to_pda(nfa_finite(words, alphabet=letters))


def _bfs_steps(graph, target):
    """Shortest path to ``target`` in an explored graph, as step triples."""
    by_src = {}
    for e in graph.edges:
        by_src.setdefault(e[0], []).append(e)
    prev = {graph.initial: None}
    queue = deque([graph.initial])
    while queue:
        c = queue.popleft()
        if c == target:
            steps = []
            while prev[c] is not None:
                e = prev[c]
                steps.append((e[1], e[2], e[3]))
                c = e[0]
            steps.reverse()
            return steps
        for e in sorted(by_src.get(c, []), key=lambda e: str(e)):
            if e[3] not in prev:
                prev[e[3]] = e
                queue.append(e[3])
    return None


# ---------------------------------------------------------------------------
# Emptiness gadgets
# ---------------------------------------------------------------------------


def test_emptiness_to_safety_random():
    rng = random.Random(101)
    agreements = 0
    for i in range(50):
        lang = _random_lang(rng, ["a", "b"])
        if i % 10 == 0:
            lang = rng.choice([frozenset(), nfa_empty({"a", "b"}), nfa_to_pda(nfa_empty({"a", "b"}))])
        out = emptiness_to_safety(lang)
        assert out.info["target_state"] == "d1"
        if lang_is_empty(lang):
            graph = explore(out.program, 200, 4)
            assert graph.complete
            assert all(c.state != "d1" for c in graph.configurations)
            agreements += 1
        else:
            words = lang_words_upto(lang, 5)
            if not words:
                continue
            graph = explore(out.program, 400, len(words[0]))
            assert any(c.state == "d1" for c in graph.configurations)
            agreements += 1
    assert agreements >= 45


def test_emptiness_to_safety_freshness():
    out = emptiness_to_safety(as_finite_language([("sigma",)]))
    trigger = out.info["trigger"]
    assert trigger != "sigma"
    assert out.program.initial_buffer == Multiset({trigger: 1})


def test_emptiness_to_termination_cases():
    loop = lambda p: p.languages[("d0", "sigma", "d0")]
    nonempty = emptiness_to_termination(as_finite_language([("a", "b")]))
    assert lang_words_upto(loop(nonempty), 3) == [("sigma",)]
    empty = emptiness_to_termination(frozenset())
    assert lang_is_empty(loop(empty))
    eps_only = emptiness_to_termination(as_finite_language([()]))
    assert lang_words_upto(loop(eps_only), 3) == [("sigma",)]
    pushdown = emptiness_to_termination(counter_pda())
    assert ("sigma",) in pda_words_upto(loop(pushdown), 2)


def test_emptiness_to_termination_random():
    rng = random.Random(102)
    for i in range(20):
        lang = _random_lang(rng, ["a", "b"])
        program = emptiness_to_termination(lang)
        loop_lang = program.languages[("d0", "sigma", "d0")]
        assert lang_is_empty(lang) == lang_is_empty(loop_lang)
        assert set(lang_words_upto(loop_lang, 4)) <= {("sigma",)}


def test_emptiness_to_termination_run_behavior():
    looping = emptiness_to_termination(as_finite_language([("a",)]))
    graph = explore(looping, 50, 2)
    assert any(e[0] == e[3] for e in graph.edges)
    halting = emptiness_to_termination(frozenset())
    graph = explore(halting, 50, 2)
    # the empty loop language blocks the only dispatch: stuck immediately
    assert graph.complete
    assert graph.configurations == frozenset([halting.initial_configuration])
    assert not graph.edges


# ---------------------------------------------------------------------------
# Reachability -> fair nontermination
# ---------------------------------------------------------------------------


def test_reach_to_fairnt_random():
    from apv.automata import skey

    rng = random.Random(103)
    positive = negative = 0
    for _ in range(50):
        program = random_ap(rng)
        if not program.alphabet:
            continue
        graph = explore(program, 400, 3)
        reached = sorted(graph.configurations, key=str)
        target = reached[rng.randrange(len(reached))]
        steps = _bfs_steps(graph, target)
        assert steps is not None
        out = reach_to_fairnt(program, target)
        z = out.info["z"]
        # the source witness replays inside the gadget with z riding along,
        # then the switch chain drains exactly the target buffer and the
        # z-loop closes a fair lasso
        cur = out.program.initial_configuration
        assert cur.buffer == program.initial_buffer.add(z)
        for (sigma, posted, nxt) in steps:
            lifted = Configuration(nxt.state, nxt.buffer.add(z))
            assert (sigma, lifted) in successors(out.program, cur, 3)
            cur = lifted
        chain = [z] + [
            a
            for a in sorted(target.buffer.support, key=skey)
            for _ in range(target.buffer[a])
        ]
        for a in chain:
            options = [nc for (s, nc) in successors(out.program, cur, 3) if s == a]
            moved = [nc for nc in options if nc.state not in program.states]
            assert moved, f"chain letter {a!r} must be consumable"
            cur = min(moved, key=str)
        assert cur == Configuration(out.info["loop_state"], Multiset({z: 1}))
        assert (z, cur) in successors(out.program, cur, 3)
        positive += 1
        if graph.complete and negative < 20:
            letter = sorted(program.alphabet)[0]
            missing = Configuration(target.state, target.buffer.add(letter, 9))
            assert missing not in graph.configurations
            out2 = reach_to_fairnt(program, missing)
            lifted2 = explore(out2.program, 6000, 3)
            if lifted2.complete:
                assert find_fair_lasso(lifted2) is None
                negative += 1
    assert positive >= 40
    assert negative >= 5


def test_reach_to_fairnt_word_edge_structure():
    program = AsyncProgram(
        states={"d0", "d1"},
        alphabet={"a", "b"},
        languages={("d0", "a", "d1"): as_finite_language([("b", "b")])},
        initial="d0",
        initial_buffer=Multiset({"a": 1}),
    )
    target = Configuration("d1", Multiset({"b": 2}))
    out = reach_to_fairnt(program, target)
    # chain: z, b, b -> two intermediate states plus the loop state
    assert len(out.program.states) == len(program.states) + 3
    z = out.info["z"]
    assert z not in program.alphabet
    assert out.program.initial_buffer == program.initial_buffer.add(z)
    graph = explore(out.program, 300, 3)
    lasso = find_fair_lasso(graph)
    assert lasso is not None
    assert all(e[1] == z for e in lasso.cycle)


def test_reach_to_fairnt_rejects_bad_targets():
    program = doubling_program()
    with pytest.raises(InputError):
        reach_to_fairnt(program, Configuration("nowhere", Multiset()))
    with pytest.raises(InputError):
        reach_to_fairnt(program, Configuration("d", Multiset({"unknown": 1})))


# ---------------------------------------------------------------------------
# Fair nontermination -> fair starvation
# ---------------------------------------------------------------------------


def test_fairnt_to_starvation_random():
    rng = random.Random(104)
    lifted_hits = 0
    for _ in range(50):
        program = random_ap(rng)
        graph = explore(program, 600, 3)
        lasso = find_fair_lasso(graph)
        out = fairnt_to_starvation(program)
        s = out.info["s"]
        graph2 = explore(out.program, 4000, 4)
        lasso2 = find_fair_lasso(graph2, starve=s)
        if lasso is not None:
            assert lasso2 is not None, "fair run must lift to a starving run"
            assert s in lasso2.starved
            lifted_hits += 1
        elif lasso2 is not None and graph.complete:
            pytest.fail("starving lasso found although the source graph is fair-cycle-free")
    assert lifted_hits >= 8


def test_fairnt_to_starvation_structure():
    program = doubling_program()
    out = fairnt_to_starvation(program)
    s = out.info["s"]
    assert s not in program.alphabet
    lang = out.program.languages[("d", "s3", "d")]
    assert lang == as_finite_language([("s3", "s3"), ("s3", "s3", s)])
    assert out.program.languages[("d", s, "d")] == as_finite_language([()])
    assert out.program.initial_buffer == program.initial_buffer.add(s)


def test_fairnt_to_starvation_fresh_even_if_s_taken():
    program = AsyncProgram(
        states={"d"},
        alphabet={"s"},
        languages={("d", "s", "d"): as_finite_language([("s",)])},
        initial="d",
        initial_buffer=Multiset({"s": 1}),
    )
    out = fairnt_to_starvation(program)
    assert out.info["s"] not in program.alphabet


# ---------------------------------------------------------------------------
# Fair starvation -> configuration reachability
# ---------------------------------------------------------------------------


def test_starvation_to_reach_on_doubling_program():
    program = doubling_program()
    out = starvation_to_reach(program, {"s3"}, "s3")
    graph = explore(out.program, 22000, 5)
    assert out.target in graph.configurations
    steps = _bfs_steps(graph, out.target)
    assert steps is not None
    projected = project_starvation_steps(out, steps)
    assert projected["complete"]
    # replay both phases as source-program steps
    state, buffer = program.initial, program.initial_buffer
    trace = projected["phase1"] + projected["phase2"]
    assert trace, "the witness must contain source steps"
    for (sigma, posted) in trace:
        assert buffer[sigma] >= 1
        lang = program.languages[(state, sigma, state)]
        assert any(parikh(w) == posted for w in lang_words_upto(lang, posted.card + 1))
        buffer = buffer.remove(sigma) + posted
    # second phase: starts with two pending, executes s3 with a spare
    assert projected["phase2"][0][0] == "s3"


def test_starvation_to_reach_structure():
    program = AsyncProgram(
        states={"d0", "d1"},
        alphabet={"a", "b"},
        languages={("d0", "a", "d1"): as_finite_language([("a", "b")])},
        initial="d0",
        initial_buffer=Multiset({"a": 1}),
    )
    out = starvation_to_reach(program, {"a", "b"}, "b")
    bar, hat = out.info["bar"], out.info["hat"]
    # phase-one chain posts the doubled word
    doubled = [
        lang for ctx, lang in out.program.languages.items()
        if isinstance(lang, frozenset) and ("a", bar["a"], "b", bar["b"]) in lang
    ]
    assert doubled, "doubling homomorphism must appear on the phase-one edge"
    assert out.target.buffer == Multiset({hat["a"]: 1, hat["b"]: 1})
    assert out.program.initial_buffer == Multiset({"a": 1, bar["a"]: 1, out.info["z"]: 1})
    assert set(bar.values()).isdisjoint(program.alphabet)
    assert set(hat.values()).isdisjoint(program.alphabet)
    with pytest.raises(InputError):
        starvation_to_reach(program, {"a"}, "nope")
    with pytest.raises(InputError):
        starvation_to_reach(program, {"nope"}, "a")


def test_starvation_to_reach_gamma_empty_unreachable():
    # every dispatch posts at least one letter, so the buffer never drains
    program = doubling_program()
    out = starvation_to_reach(program, frozenset(), "s3")
    assert out.target == Configuration(out.info["final_state"], Multiset())
    graph = explore(out.program, 3000, 5)
    assert out.target not in graph.configurations


def test_starvation_to_reach_lasso_implies_reachable():
    """Programs with a starving lasso in the exact graph yield reachable targets."""
    rng = random.Random(105)
    hits = 0
    for _ in range(30):
        program = random_ap(rng, finite_only=True)
        if not program.alphabet:
            continue
        graph = explore(program, 500, 3)
        for tau in sorted(program.alphabet):
            lasso = find_fair_lasso(graph, starve=tau)
            if lasso is None or tau not in lasso.starved:
                continue
            gamma = frozenset(e[1] for e in lasso.cycle)
            out = starvation_to_reach(program, gamma, tau)
            lifted = explore(out.program, 60000, 7)
            assert out.target in lifted.configurations, (
                "starving lasso must make the gadget target reachable"
            )
            hits += 1
            break
        if hits >= 5:
            break
    assert hits >= 3


def test_project_starvation_steps_strips_letters():
    posted = Multiset({"a": 1, "s": 2})
    steps = [("a", posted), ("s", Multiset()), ("b", Multiset({"s": 1}))]
    stripped = strip_letter_steps(steps, "s")
    assert stripped == [("a", Multiset({"a": 1})), ("b", Multiset())]


# ---------------------------------------------------------------------------
# Z-intersection -> reachability
# ---------------------------------------------------------------------------


def test_zint_random_finite():
    rng = random.Random(106)
    agreements = 0
    for _ in range(50):
        words = [
            tuple(rng.choice(["a", "b"]) for _ in range(rng.randrange(0, 5)))
            for _ in range(rng.randrange(0, 4))
        ]
        lang = as_finite_language(words)
        balanced = any(w.count("a") == w.count("b") for w in lang)
        out = zint_to_reach(lang)
        maxlen = max((len(w) for w in lang), default=0)
        graph = explore(out.program, 4000, max(1, maxlen))
        if not graph.complete:
            continue
        assert (out.target in graph.configurations) == balanced
        agreements += 1
    assert agreements >= 45


def test_zint_counter_languages():
    reachable = zint_to_reach(counter_pda())  # {a^n b^n}
    graph = explore(reachable.program, 3000, 4)
    assert reachable.target in graph.configurations
    unbalanced = zint_to_reach(counter_pda(extra_bs=1))  # {a^n b^(n+1)}
    graph = explore(unbalanced.program, 3000, 5)
    assert unbalanced.target not in graph.configurations


def test_zint_rejects_other_alphabets():
    with pytest.raises(InputError):
        zint_to_reach(as_finite_language([("c",)]))


# ---------------------------------------------------------------------------
# Internal-action compilation
# ---------------------------------------------------------------------------


def _random_internal(rng):
    n_states = rng.randrange(1, 4)
    states = [f"q{i}" for i in range(n_states)]
    alphabet = ["x", "y"][: rng.randrange(1, 3)]
    internal = ["i", "j"][: rng.randrange(1, 3)]
    full = alphabet + internal
    languages = {}
    for sigma in alphabet:
        words = [
            tuple(rng.choice(full) for _ in range(rng.randrange(0, 4)))
            for _ in range(rng.randrange(0, 4))
        ]
        languages[sigma] = as_finite_language(words)
    router = {}
    for d in states:
        for letter in full:
            if rng.random() < 0.8:
                router[(d, letter)] = rng.choice(states)
    buffer = Multiset({rng.choice(alphabet): rng.randrange(1, 3)})
    return APWithInternal(
        states=states,
        alphabet=alphabet,
        internal_alphabet=internal,
        languages=languages,
        router=router,
        initial=states[0],
        initial_buffer=buffer,
    )


def _explore_internal(pi, max_configs, wordlen):
    """Direct bounded exploration of an internal-action program."""
    initial = Configuration(pi.initial, pi.initial_buffer)
    seen = {initial}
    edges = set()
    queue = deque([initial])
    complete = True
    expanded = 0
    while queue:
        if expanded >= max_configs:
            complete = False
            break
        c = queue.popleft()
        expanded += 1
        for sigma in sorted(c.buffer.support):
            lang = pi.languages.get(sigma)
            if lang is None:
                continue
            for w in lang_words_upto(lang, wordlen):
                d2 = pi.route(c.state, w)
                if d2 is None:
                    continue
                posted = parikh([a for a in w if a in pi.alphabet])
                nxt = Configuration(d2, c.buffer.remove(sigma) + posted)
                edges.add((c, sigma, posted, nxt))
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
    return seen, edges, complete


def test_compile_internal_preserves_runs():
    rng = random.Random(107)
    agreements = 0
    for _ in range(25):
        pi = _random_internal(rng)
        compiled = compile_internal(pi)
        nodes, edges, complete = _explore_internal(pi, 600, 4)
        graph = explore(compiled, 600, 4)
        if not (complete and graph.complete):
            continue
        assert graph.configurations == frozenset(nodes)
        assert graph.edges == frozenset(edges)
        agreements += 1
    assert agreements >= 15


def test_compile_internal_pure_and_blocked_cases():
    pi = APWithInternal(
        states={"q0", "q1"},
        alphabet={"x"},
        internal_alphabet={"i"},
        languages={"x": as_finite_language([("i", "i"), ()])},
        router={("q0", "i"): "q1", ("q1", "i"): "q0"},
        initial="q0",
        initial_buffer=Multiset({"x": 1}),
    )
    compiled = compile_internal(pi)
    # pure-internal words project to epsilon; routing decides the context
    assert set(lang_words_upto(compiled.language("q0", "x", "q0"), 2)) == {()}
    assert set(lang_words_upto(compiled.language("q1", "x", "q1"), 2)) == {()}
    # no route from q0 back to q0 with a single 'i'
    assert lang_is_empty(compiled.language("q0", "x", "q1"))


def test_compile_internal_machine_languages():
    pi = APWithInternal(
        states={"q0", "q1"},
        alphabet={"x"},
        internal_alphabet={"i"},
        languages={"x": nfa_star(nfa_finite([("i", "x")], alphabet={"i", "x"}))},
        router={("q0", "i"): "q1", ("q1", "x"): "q1", ("q1", "i"): "q1"},
        initial="q0",
        initial_buffer=Multiset({"x": 1}),
    )
    compiled = compile_internal(pi)
    words = set(lang_words_upto(compiled.language("q0", "x", "q1"), 3))
    # (ix)^n for n >= 1 routes q0 -> q1 and projects to x^n
    assert ("x",) in words and ("x", "x") in words and () not in words
    # the empty word stays at q0
    assert set(lang_words_upto(compiled.language("q0", "x", "q0"), 3)) == {()}


# ---------------------------------------------------------------------------
# Language combinators
# ---------------------------------------------------------------------------


def test_lang_combinators_across_kinds():
    from apv.automata import Homomorphism

    finite = as_finite_language([("a",), ()])
    nfa = nfa_finite([("a",), ()], alphabet={"a", "b"})
    pda = nfa_to_pda(nfa)
    for lang in (finite, nfa, pda):
        appended = lang_concat_word(lang, ("b",))
        assert set(lang_words_upto(appended, 3)) == {("b",), ("a", "b")}
        union = lang_union_concat_letter(lang, "b")
        assert set(lang_words_upto(union, 3)) == {(), ("a",), ("b",), ("a", "b")}
        doubled = lang_apply_hom(
            lang, Homomorphism.make({"a": ("a", "A"), "b": ("b", "B")})
        )
        assert set(lang_words_upto(doubled, 3)) == {(), ("a", "A")}
