"""Program-to-program reduction gadgets between verification problems.

Each construction here turns one question about an asynchronous program (or
a handler language) into another question about a freshly built program:

* :func:`compile_internal` removes internal actions by intersecting each
  handler language with the router's regular language and projecting the
  internal letters away; the run sets before and after agree.
* :func:`emptiness_to_safety` and :func:`emptiness_to_termination` turn
  language emptiness into a safety / termination question.
* :func:`reach_to_fairnt` turns configuration reachability into existence
  of a fair infinite run.
* :func:`fairnt_to_starvation` turns existence of a fair infinite run into
  existence of a fair run starving some handler.
* :func:`starvation_to_reach` turns existence of a fair run starving a
  designated handler into configuration reachability, via a two-phase
  simulation (first phase doubles every posted handler with a barred copy,
  the second phase posts hatted receipts and enforces that the starved
  handler is only dispatched with a spare instance pending).
* :func:`zint_to_reach` turns emptiness of an intersection with the
  equal-counts language ``Z`` into configuration reachability.

Diagrams of the form ``d --w|L--> d'`` where ``w`` is a *word* of handlers
expand into a chain of intermediate states: each prefix letter is consumed
posting nothing and the final letter posts a word from ``L``.  Intermediate
chain states are reserved tuples and never user-visible targets.

A positive reachability answer on a gadget can be projected back to a run
of the source program with :func:`project_starvation_steps` /
:func:`strip_letter_steps`; consumers must replay and re-validate the
projected run, because a two-phase certificate need not itself witness the
source property (see the analysis module).
"""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .automata import (
    Homomorphism,
    Nfa,
    apply_hom_nfa,
    inverse_hom_nfa,
    nfa_concat,
    nfa_finite,
    nfa_intersect,
    nfa_union,
    nfa_word,
    skey,
)
from .errors import InputError
from .multiset import Configuration, Multiset
from .pda import (
    Pda,
    SimplePda,
    intersect_regular,
    pda_apply_hom,
    pda_concat_word,
    pda_inverse_hom,
    pda_union,
)
from .semantics import (
    APWithInternal,
    AsyncProgram,
    as_finite_language,
    lang_alphabet,
    lang_is_empty,
)

__all__ = [
    "GadgetOutput",
    "compile_internal",
    "emptiness_to_safety",
    "emptiness_to_termination",
    "reach_to_fairnt",
    "fairnt_to_starvation",
    "starvation_to_reach",
    "zint_to_reach",
    "lang_apply_hom",
    "lang_concat_word",
    "lang_union_concat_letter",
    "project_starvation_steps",
    "strip_letter_steps",
]


# ---------------------------------------------------------------------------
# Fresh names
# ---------------------------------------------------------------------------


class _Arena:
    """Hands out names guaranteed fresh against a taken set (and each other)."""

    def __init__(self, taken):
        self.taken = set(taken)

    def claim(self, *parts) -> tuple:
        cand = tuple(parts)
        while cand in self.taken:
            cand = cand + ("+",)
        self.taken.add(cand)
        return cand

    def claim_str(self, base: str) -> str:
        cand = base
        i = 1
        while cand in self.taken:
            i += 1
            cand = f"{base}{i}"
        self.taken.add(cand)
        return cand


# ---------------------------------------------------------------------------
# Language combinators (kind-dispatched: finite set / Nfa / pushdown)
# ---------------------------------------------------------------------------


def lang_concat_word(lang, word: Sequence):
    """The language ``L . v`` for a fixed suffix word ``v``."""
    word = tuple(word)
    if isinstance(lang, Nfa):
        if not word:
            return lang
        return nfa_concat([lang, nfa_word(word)])
    if isinstance(lang, (Pda, SimplePda)):
        return pda_concat_word(lang, word)
    return frozenset(w + word for w in as_finite_language(lang))


def lang_union_concat_letter(lang, letter):
    """The language ``L ∪ L . x`` for a single letter ``x``."""
    if isinstance(lang, Nfa):
        return nfa_union([lang, lang_concat_word(lang, (letter,))])
    if isinstance(lang, (Pda, SimplePda)):
        return pda_union([lang, lang_concat_word(lang, (letter,))])
    fin = as_finite_language(lang)
    return fin | frozenset(w + (letter,) for w in fin)


def lang_apply_hom(lang, hom: Homomorphism):
    """The homomorphic image ``h(L)``."""
    if isinstance(lang, Nfa):
        return apply_hom_nfa(lang, hom)
    if isinstance(lang, (Pda, SimplePda)):
        return pda_apply_hom(lang, hom)
    return frozenset(hom.apply_word(w) for w in as_finite_language(lang))


# ---------------------------------------------------------------------------
# Word-labeled edges
# ---------------------------------------------------------------------------


def _add_word_edge(languages: Dict, states: set, mids: set, arena: "_Arena", d, word: Sequence, lang, d2) -> None:
    """Installs ``d --word|lang--> d2``.

    Prefix letters of ``word`` are consumed posting nothing via fresh chain
    states; the final letter posts ``lang`` and moves to ``d2``.
    """
    word = tuple(word)
    if not word:
        raise InputError("a word-labeled edge needs at least one letter")
    prev = d
    for j, a in enumerate(word[:-1]):
        mid = arena.claim("w", len(mids), j)
        states.add(mid)
        mids.add(mid)
        languages[(prev, a, mid)] = as_finite_language([()])
        prev = mid
    key = (prev, word[-1], d2)
    if key in languages:
        raise InputError(f"word edge collides with existing context {key!r}")
    languages[key] = lang


# ---------------------------------------------------------------------------
# Gadget output
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GadgetOutput:
    """A constructed program plus the data needed to interpret it.

    ``target`` is the configuration whose reachability encodes the source
    property, when the gadget produces one.  ``letter_maps`` records the
    provenance of every fresh letter (``{new_letter: (kind, original)}``
    with kinds ``"z"``, ``"s"``, ``"bar"``, ``"hat"``, ``"sigma"``).
    ``info`` carries structural maps (state copies, chain states) used to
    project gadget runs back to source-program runs.
    """

    program: AsyncProgram
    target: Optional[Configuration] = None
    letter_maps: Mapping = field(default_factory=dict)
    info: Mapping = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Internal-action compilation
# ---------------------------------------------------------------------------


def compile_internal(pi: APWithInternal) -> AsyncProgram:
    """Eliminates internal actions, preserving the set of runs.

    For every context ``(d, sigma, d')`` the new language is the projection
    to the posted alphabet of ``L_sigma`` intersected with the words the
    router can read from ``d`` ending at ``d'``.
    """
    full = pi.alphabet | pi.internal_alphabet
    router_edges = frozenset((d, a, d2) for (d, a), d2 in pi.router.items())
    erase = Homomorphism.make({a: ((a,) if a in pi.alphabet else ()) for a in full})
    languages: Dict = {}
    for sigma in sorted(pi.alphabet, key=skey):
        lang = pi.languages.get(sigma)
        if lang is None or lang_is_empty(lang):
            continue
        finite = not isinstance(lang, (Nfa, Pda, SimplePda))
        for d in sorted(pi.states, key=skey):
            for d2 in sorted(pi.states, key=skey):
                if finite:
                    words = frozenset(
                        tuple(a for a in w if a in pi.alphabet)
                        for w in as_finite_language(lang)
                        if pi.route(d, w) == d2
                    )
                    if words:
                        languages[(d, sigma, d2)] = words
                    continue
                router_nfa = Nfa(
                    states=pi.states,
                    alphabet=full,
                    transitions=router_edges,
                    initial=d,
                    finals=frozenset([d2]),
                )
                if isinstance(lang, Nfa):
                    product = nfa_intersect(lang, router_nfa)
                else:
                    product = intersect_regular(lang, router_nfa)
                if lang_is_empty(product):
                    continue
                languages[(d, sigma, d2)] = lang_apply_hom(product, erase)
    return AsyncProgram(
        states=pi.states,
        alphabet=pi.alphabet,
        languages=languages,
        initial=pi.initial,
        initial_buffer=pi.initial_buffer,
    )


# ---------------------------------------------------------------------------
# Emptiness gadgets
# ---------------------------------------------------------------------------


def emptiness_to_safety(k) -> GadgetOutput:
    """A two-state program that can reach state ``d1`` iff ``K`` is nonempty."""
    sigma_letters = lang_alphabet(k)
    arena = _Arena(sigma_letters)
    trigger = arena.claim_str("sigma")
    program = AsyncProgram(
        states={"d0", "d1"},
        alphabet=sigma_letters | {trigger},
        languages={("d0", trigger, "d1"): k},
        initial="d0",
        initial_buffer=Multiset({trigger: 1}),
    )
    return GadgetOutput(
        program=program,
        letter_maps={trigger: ("sigma", None)},
        info={"target_state": "d1", "trigger": trigger},
    )


def emptiness_to_termination(k) -> AsyncProgram:
    """A one-state program that terminates iff ``K`` is empty.

    Over the tagged alphabet ``(Sigma ∪ {None}) × {0,1}`` the regular
    language ``R`` keeps words with exactly one tag-1 position; ``g`` drops
    tags (erasing ``None`` letters), ``h`` sends tag-1 letters to the
    single handler and tag-0 letters to nothing.  The resulting language
    ``h(g^-1(K) ∩ R)`` is ``{trigger}`` when ``K`` is nonempty and empty
    otherwise, wired as a self-posting loop.
    """
    sigma_letters = lang_alphabet(k)
    arena = _Arena(sigma_letters)
    trigger = arena.claim_str("sigma")
    tagged = [(a, t) for a in sorted(sigma_letters, key=skey) + [None] for t in (0, 1)]
    drop_tag = Homomorphism.make({(a, t): ((a,) if a is not None else ()) for (a, t) in tagged})
    to_trigger = Homomorphism.make({(a, t): ((trigger,) if t == 1 else ()) for (a, t) in tagged})
    one_tagged = Nfa(
        states=frozenset([0, 1]),
        alphabet=frozenset(tagged),
        transitions=frozenset(
            {(0, (a, 0), 0) for (a, t) in tagged if t == 0}
            | {(0, (a, 1), 1) for (a, t) in tagged if t == 1}
            | {(1, (a, 0), 1) for (a, t) in tagged if t == 0}
        ),
        initial=0,
        finals=frozenset([1]),
    )
    if isinstance(k, (Pda, SimplePda)):
        lifted = pda_inverse_hom(k, drop_tag)
        restricted = intersect_regular(lifted, one_tagged)
        loop_lang = pda_apply_hom(restricted, to_trigger)
    else:
        nfa = k if isinstance(k, Nfa) else nfa_finite(
            sorted(as_finite_language(k), key=skey), alphabet=sigma_letters
        )
        lifted = inverse_hom_nfa(nfa, drop_tag)
        restricted = nfa_intersect(lifted, one_tagged)
        loop_lang = apply_hom_nfa(restricted, to_trigger)
    return AsyncProgram(
        states={"d0"},
        alphabet={trigger},
        languages={("d0", trigger, "d0"): loop_lang},
        initial="d0",
        initial_buffer=Multiset({trigger: 1}),
    )


# ---------------------------------------------------------------------------
# Reachability -> fair nontermination
# ---------------------------------------------------------------------------


def reach_to_fairnt(program: AsyncProgram, target: Configuration) -> GadgetOutput:
    """A program with a fair infinite run iff ``target`` is reachable.

    A fresh handler ``z`` rides along; from ``target.state`` one word edge
    consumes ``z`` together with exactly ``target.buffer`` and moves to a
    fresh state whose only activity is a ``z``-consuming, ``z``-posting
    loop.  Fairness forces any infinite run to eventually execute ``z``,
    and looping fairly requires the buffer to hold nothing but ``z``, which
    pins the source configuration exactly.
    """
    if target.state not in program.states:
        raise InputError(f"target state {target.state!r} not among program states")
    extra = target.buffer.support - program.alphabet
    if extra:
        raise InputError(f"target buffer uses unknown handlers: {sorted(extra, key=skey)}")
    letter_arena = _Arena(program.alphabet)
    z = letter_arena.claim_str("z")
    state_arena = _Arena(program.states)
    loop_state = state_arena.claim("loop")
    languages = dict(program.languages)
    states = set(program.states) | {loop_state}
    mids: set = set()
    word = (z,) + tuple(
        sigma
        for sigma in sorted(target.buffer.support, key=skey)
        for _ in range(target.buffer[sigma])
    )
    _add_word_edge(languages, states, mids, state_arena, target.state, word, as_finite_language([(z,)]), loop_state)
    languages[(loop_state, z, loop_state)] = as_finite_language([(z,)])
    out = AsyncProgram(
        states=states,
        alphabet=program.alphabet | {z},
        languages=languages,
        initial=program.initial,
        initial_buffer=program.initial_buffer.add(z),
    )
    return GadgetOutput(
        program=out,
        letter_maps={z: ("z", None)},
        info={"z": z, "loop_state": loop_state, "mids": frozenset(mids)},
    )


# ---------------------------------------------------------------------------
# Fair nontermination -> fair starvation
# ---------------------------------------------------------------------------


def fairnt_to_starvation(program: AsyncProgram) -> GadgetOutput:
    """A program with a starving fair run iff the source has a fair infinite run.

    Every context may optionally post one extra instance of a fresh handler
    ``s`` (language ``L ∪ L.s``), and every state carries an ``s``-consuming
    self-loop.  A fair infinite source run can keep one spare ``s`` pending
    forever while consuming the rest, starving ``s``; conversely dropping
    all ``s`` activity from a starving fair run leaves a fair infinite
    source run.
    """
    letter_arena = _Arena(program.alphabet)
    s = letter_arena.claim_str("s")
    languages: Dict = {}
    for ctx in sorted(program.languages, key=skey):
        languages[ctx] = lang_union_concat_letter(program.languages[ctx], s)
    for d in sorted(program.states, key=skey):
        languages[(d, s, d)] = as_finite_language([()])
    out = AsyncProgram(
        states=program.states,
        alphabet=program.alphabet | {s},
        languages=languages,
        initial=program.initial,
        initial_buffer=program.initial_buffer.add(s),
    )
    return GadgetOutput(
        program=out,
        letter_maps={s: ("s", None)},
        info={"s": s},
    )


# ---------------------------------------------------------------------------
# Fair starvation -> configuration reachability
# ---------------------------------------------------------------------------


def starvation_to_reach(program: AsyncProgram, gamma, tau) -> GadgetOutput:
    """A program whose target configuration is reachable when the source has
    a fair run starving ``tau`` with infinitely-executed set ``gamma``.

    Phase one simulates the source while doubling every posted handler with
    a barred copy (the frozen snapshot of the eventual loop-entry buffer).
    A ``z`` edge switches to phase two, which posts a hatted receipt for
    every executed handler and dispatches ``tau`` only with a second
    instance pending.  A final state consumes, per ``gamma`` member: one
    barred/plain pair (buffer grew over the snapshot), plain letters, and
    exactly one hatted receipt (the handler was executed in phase two).

    Reaching the target proves exactly that a two-phase certificate run
    exists.  Certificates whose second phase returns to its starting state
    with the right pending counts unroll to starving fair runs; consumers
    must verify this on the projected run (see the analysis module), since
    the certificate itself does not pin the second phase's end state.
    """
    gamma = frozenset(gamma)
    if tau not in program.alphabet:
        raise InputError(f"starved handler {tau!r} not in the alphabet")
    if not gamma <= program.alphabet:
        raise InputError("gamma must be a subset of the alphabet")
    letter_arena = _Arena(program.alphabet)
    z = letter_arena.claim_str("z")
    bar = {a: letter_arena.claim("bar", a) for a in sorted(program.alphabet, key=skey)}
    hat = {a: letter_arena.claim("hat", a) for a in sorted(program.alphabet, key=skey)}
    state_arena = _Arena(program.states)
    tilde = {d: state_arena.claim("tilde", d) for d in sorted(program.states, key=skey)}
    final_state = state_arena.claim("final")
    double = Homomorphism.make({a: (a, bar[a]) for a in program.alphabet})

    languages: Dict = {}
    states = set(program.states) | set(tilde.values()) | {final_state}
    mids: set = set()
    for (d, sigma, d2) in sorted(program.languages, key=skey):
        lang = program.languages[(d, sigma, d2)]
        # Phase one: consume sigma and its bar twin, post doubled words.
        _add_word_edge(
            languages, states, mids, state_arena,
            d, (sigma, bar[sigma]), lang_apply_hom(lang, double), d2,
        )
        # Phase two: post a hatted receipt; tau needs a spare instance.
        if sigma == tau:
            _add_word_edge(
                languages, states, mids, state_arena,
                tilde[d], (tau, tau), lang_concat_word(lang, (tau, hat[tau])), tilde[d2],
            )
        else:
            languages[(tilde[d], sigma, tilde[d2])] = lang_concat_word(lang, (hat[sigma],))
    for d in sorted(program.states, key=skey):
        languages[(d, z, tilde[d])] = as_finite_language([(z,)])
        languages[(tilde[d], z, final_state)] = as_finite_language([()])
    for g in sorted(gamma, key=skey):
        _add_word_edge(
            languages, states, mids, state_arena,
            final_state, (g, bar[g]), as_finite_language([()]), final_state,
        )
        languages[(final_state, g, final_state)] = as_finite_language([()])
        languages[(final_state, hat[g], final_state)] = as_finite_language([()])

    buffer = program.initial_buffer
    for a in sorted(buffer.support, key=skey):
        buffer = buffer.add(bar[a], program.initial_buffer[a])
    buffer = buffer.add(z)
    out = AsyncProgram(
        states=states,
        alphabet=program.alphabet | set(bar.values()) | set(hat.values()) | {z},
        languages=languages,
        initial=program.initial,
        initial_buffer=buffer,
    )
    target = Configuration(final_state, Multiset({hat[g]: 1 for g in gamma}))
    letter_maps = {z: ("z", None)}
    letter_maps.update({bar[a]: ("bar", a) for a in bar})
    letter_maps.update({hat[a]: ("hat", a) for a in hat})
    return GadgetOutput(
        program=out,
        target=target,
        letter_maps=letter_maps,
        info={
            "z": z,
            "bar": dict(bar),
            "hat": dict(hat),
            "tilde": dict(tilde),
            "final_state": final_state,
            "mids": frozenset(mids),
            "source_alphabet": frozenset(program.alphabet),
            "tau": tau,
            "gamma": gamma,
        },
    )


# ---------------------------------------------------------------------------
# Z-intersection -> configuration reachability
# ---------------------------------------------------------------------------


def zint_to_reach(k) -> GadgetOutput:
    """A three-state program reaching ``("0", empty)`` iff ``K`` meets ``Z``.

    ``Z`` is the language of words over ``{a, b}`` with equally many ``a``
    and ``b``.  Dispatching the trigger posts a word of ``K``; the two-state
    cycle then consumes ``a`` and ``b`` strictly alternately, draining the
    buffer completely iff the counts agree.
    """
    letters = lang_alphabet(k)
    if not letters <= {"a", "b"}:
        raise InputError(f"the language must be over {{'a','b'}}, got {sorted(letters, key=skey)}")
    arena = _Arena({"a", "b"})
    trigger = arena.claim_str("c")
    program = AsyncProgram(
        states={"d0", "0", "1"},
        alphabet={"a", "b", trigger},
        languages={
            ("d0", trigger, "0"): k,
            ("0", "a", "1"): as_finite_language([()]),
            ("1", "b", "0"): as_finite_language([()]),
        },
        initial="d0",
        initial_buffer=Multiset({trigger: 1}),
    )
    return GadgetOutput(
        program=program,
        target=Configuration("0", Multiset()),
        letter_maps={trigger: ("sigma", None)},
        info={"trigger": trigger},
    )


# ---------------------------------------------------------------------------
# Projecting gadget runs back to source runs
# ---------------------------------------------------------------------------


def project_starvation_steps(gadget: GadgetOutput, steps: Sequence[Tuple]) -> Dict:
    """Splits a run of a :func:`starvation_to_reach` program into source steps.

    ``steps`` is a sequence of ``(handler, posted_multiset, configuration)``
    triples as produced by the exploration graph, starting at the gadget's
    initial configuration.  The result maps ``"phase1"`` and ``"phase2"``
    to lists of ``(handler, posted_multiset)`` over the source alphabet;
    ``"complete"`` is False when the run ends mid-chain.
    """
    info = gadget.info
    z = info["z"]
    source_alphabet = info["source_alphabet"]
    bar_of = {v: k for k, v in info["bar"].items()}
    mids = info["mids"]
    final_state = info["final_state"]
    tau = info["tau"]
    phase1: List[Tuple] = []
    phase2: List[Tuple] = []
    phase = 1
    pending = None  # handler whose chain is underway
    for (sigma, posted, cfg) in steps:
        in_chain = cfg.state in mids
        if sigma == z:
            if pending is not None:
                raise InputError("switch taken mid-chain in a gadget run")
            phase = 3 if cfg.state == final_state else 2
            continue
        if phase == 1:
            if in_chain:
                pending = sigma
            else:
                if pending is None or bar_of.get(sigma) != pending:
                    raise InputError("malformed phase-one chain in a gadget run")
                phase1.append((pending, posted.restrict(source_alphabet)))
                pending = None
        elif phase == 2:
            if in_chain:
                pending = sigma
            else:
                start = pending if pending is not None else sigma
                stripped = posted.restrict(source_alphabet)
                if start == tau and sigma == tau and pending is not None:
                    stripped = stripped.remove(tau)
                phase2.append((start, stripped))
                pending = None
        # Phase 3 consumes leftovers at the final state; nothing to project.
    return {"phase1": phase1, "phase2": phase2, "complete": pending is None}


def strip_letter_steps(steps: Sequence[Tuple], letter) -> List[Tuple]:
    """Removes a handler from projected steps: drops its dispatches and
    erases it from every posted multiset."""
    out = []
    for (sigma, posted) in steps:
        if sigma == letter:
            continue
        out.append((sigma, posted.restrict(posted.support - {letter})))
    return out
