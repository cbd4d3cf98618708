"""Asynchronous shared-memory programs and a bounded-exploration interpreter.

An asynchronous program has a finite set of global states, a finite alphabet
of handler names, and, for every context ``(d, sigma, d')``, a language of
words over the handler alphabet.  A configuration is a global state plus a
multiset of pending handler instances (the task buffer).  One step removes
one pending instance of some ``sigma``, picks a context ``(d, sigma, d')``
and a word ``w`` in its language, moves the global state to ``d'`` and adds
``Parikh(w)`` to the buffer.

The step relation is infinitely branching whenever a handler language is
infinite, so the interpreter in this module truncates by witness-word
length.  Every consumer must treat its POSITIVE findings (a configuration
was reached, an edge exists, a lasso was found) as ground truth and its
NEGATIVE findings (nothing found within the bounds) as inconclusive unless
the exploration is recorded as complete.
"""

import random
from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .automata import Nfa, nfa_downclosure, nfa_is_empty, nfa_is_finite, nfa_member, nfa_words_upto, skey, tarjan_scc
from .downclosure import downclosure_nfa
from .errors import InputError
from .multiset import Configuration, Multiset, parikh, subwords_of
from .pda import Pda, SimplePda, pda_is_empty, pda_is_finite, pda_member, pda_words_upto

__all__ = [
    "AsyncProgram",
    "APWithInternal",
    "ReachGraph",
    "FairLasso",
    "lang_alphabet",
    "lang_is_empty",
    "lang_is_finite",
    "lang_member",
    "lang_words_upto",
    "lang_downclose",
    "as_finite_language",
    "successors",
    "explore",
    "downclose_ap",
    "find_fair_lasso",
    "simulate_run",
]


# ---------------------------------------------------------------------------
# Handler languages
# ---------------------------------------------------------------------------
#
# A handler language is one of:
#   * a finite set of words (any iterable of sequences; normalized to a
#     frozenset of tuples),
#   * an Nfa,
#   * a Pda or SimplePda.
# The helpers below dispatch on the kind.


def as_finite_language(words: Iterable[Sequence]) -> FrozenSet[Tuple]:
    return frozenset(tuple(w) for w in words)


def _kind(lang) -> str:
    if isinstance(lang, Nfa):
        return "nfa"
    if isinstance(lang, (Pda, SimplePda)):
        return "pda"
    if isinstance(lang, (frozenset, set, list, tuple)):
        return "finite"
    raise InputError(f"not a handler language: {lang!r}")


def lang_alphabet(lang) -> FrozenSet:
    k = _kind(lang)
    if k == "nfa":
        return lang.alphabet
    if k == "pda":
        return lang.input_alphabet
    return frozenset(a for w in lang for a in w)


def lang_is_empty(lang) -> bool:
    k = _kind(lang)
    if k == "nfa":
        return nfa_is_empty(lang)
    if k == "pda":
        return pda_is_empty(lang)
    return len(lang) == 0


def lang_is_finite(lang) -> bool:
    k = _kind(lang)
    if k == "nfa":
        return nfa_is_finite(lang)
    if k == "pda":
        return pda_is_finite(lang)
    return True


def lang_member(lang, word: Sequence) -> bool:
    word = tuple(word)
    k = _kind(lang)
    if k == "nfa":
        return nfa_member(lang, word)
    if k == "pda":
        return pda_member(lang, word)
    return word in as_finite_language(lang)


_WORDS_CACHE: Dict = {}


def lang_words_upto(lang, maxlen: int) -> List[Tuple]:
    """All words of length <= maxlen, shortest first, deterministic order."""
    key = None
    try:
        key = (lang if not isinstance(lang, (set, list)) else as_finite_language(lang), maxlen)
        cached = _WORDS_CACHE.get(key)
        if cached is not None:
            return cached
    except TypeError:
        key = None
    k = _kind(lang)
    if k == "nfa":
        out = nfa_words_upto(lang, maxlen)
    elif k == "pda":
        out = pda_words_upto(lang, maxlen)
    else:
        words = sorted(as_finite_language(lang), key=lambda w: (len(w), skey(w)))
        out = [w for w in words if len(w) <= maxlen]
    if key is not None:
        _WORDS_CACHE[key] = out
    return out


def lang_downclose(lang):
    """The downward closure of a handler language under the subword order.

    Finite sets close explicitly; automata map to finite automata for the
    (always regular) closure.  Idempotent at the language level.
    """
    k = _kind(lang)
    if k == "nfa":
        return nfa_downclosure(lang)
    if k == "pda":
        return downclosure_nfa(lang)
    closed: Set[Tuple] = set()
    for w in as_finite_language(lang):
        closed |= subwords_of(w)
    return frozenset(closed)


# ---------------------------------------------------------------------------
# Programs
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AsyncProgram:
    """``(states, alphabet, languages, initial, initial_buffer)``.

    ``languages`` maps contexts ``(d, sigma, d')`` to handler languages;
    a context absent from the mapping denotes the empty language.
    """

    states: FrozenSet
    alphabet: FrozenSet
    languages: Mapping
    initial: object
    initial_buffer: Multiset

    def __init__(self, states, alphabet, languages, initial, initial_buffer):
        states = frozenset(states)
        alphabet = frozenset(alphabet)
        languages = dict(languages)
        if initial not in states:
            raise InputError(f"initial state {initial!r} not among the states")
        if not isinstance(initial_buffer, Multiset):
            initial_buffer = Multiset(initial_buffer)
        bad = initial_buffer.support - alphabet
        if bad:
            raise InputError(f"initial buffer uses unknown handlers: {sorted(bad, key=skey)}")
        for ctx, lang in languages.items():
            if not (isinstance(ctx, tuple) and len(ctx) == 3):
                raise InputError(f"malformed context key: {ctx!r}")
            d, sigma, d2 = ctx
            if d not in states or d2 not in states:
                raise InputError(f"context {ctx!r} uses unknown states")
            if sigma not in alphabet:
                raise InputError(f"context {ctx!r} uses unknown handler {sigma!r}")
            extra = lang_alphabet(lang) - alphabet
            if extra:
                raise InputError(
                    f"language of context {ctx!r} posts unknown handlers: {sorted(extra, key=skey)}"
                )
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "languages", languages)
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "initial_buffer", initial_buffer)

    @property
    def initial_configuration(self) -> Configuration:
        return Configuration(self.initial, self.initial_buffer)

    def language(self, d, sigma, d2):
        """The language of a context; a frozen empty set when absent."""
        return self.languages.get((d, sigma, d2), frozenset())

    def dispatch_index(self) -> Dict:
        """Maps (d, sigma) to the sorted list of (d', language) options."""
        index: Dict = {}
        for (d, sigma, d2) in sorted(self.languages, key=skey):
            lang = self.languages[(d, sigma, d2)]
            if lang_is_empty(lang):
                continue
            index.setdefault((d, sigma), []).append((d2, lang))
        return index


@dataclass(frozen=True, eq=False)
class APWithInternal:
    """A program whose handler words mix posted handlers and internal actions.

    Internal actions (``internal_alphabet``) do not post anything; instead a
    deterministic router automaton over the global states reads the full
    word (posted letters and internal actions alike) and determines the
    state change of each handler execution.  ``router`` maps pairs
    ``(state, letter)`` to states and must be deterministic by construction;
    letters without an entry at a state simply block there.
    """

    states: FrozenSet
    alphabet: FrozenSet
    internal_alphabet: FrozenSet
    languages: Mapping
    router: Mapping
    initial: object
    initial_buffer: Multiset

    def __init__(self, states, alphabet, internal_alphabet, languages, router, initial, initial_buffer):
        states = frozenset(states)
        alphabet = frozenset(alphabet)
        internal_alphabet = frozenset(internal_alphabet)
        languages = dict(languages)
        router = dict(router)
        if alphabet & internal_alphabet:
            raise InputError("posted and internal alphabets must be disjoint")
        if initial not in states:
            raise InputError(f"initial state {initial!r} not among the states")
        if not isinstance(initial_buffer, Multiset):
            initial_buffer = Multiset(initial_buffer)
        if initial_buffer.support - alphabet:
            raise InputError("initial buffer uses unknown handlers")
        full = alphabet | internal_alphabet
        for sigma, lang in languages.items():
            if sigma not in alphabet:
                raise InputError(f"language given for unknown handler {sigma!r}")
            extra = lang_alphabet(lang) - full
            if extra:
                raise InputError(f"handler {sigma!r} uses unknown letters: {sorted(extra, key=skey)}")
        for key, target in router.items():
            if not (isinstance(key, tuple) and len(key) == 2):
                raise InputError(f"malformed router key: {key!r}")
            d, letter = key
            if d not in states or target not in states:
                raise InputError(f"router entry {key!r} -> {target!r} uses unknown states")
            if letter not in full:
                raise InputError(f"router entry {key!r} uses unknown letter")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "internal_alphabet", internal_alphabet)
        object.__setattr__(self, "languages", languages)
        object.__setattr__(self, "router", router)
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "initial_buffer", initial_buffer)

    def route(self, d, word: Sequence):
        """Runs the router on a word; None when it blocks."""
        cur = d
        for letter in word:
            cur = self.router.get((cur, letter))
            if cur is None:
                return None
        return cur


# ---------------------------------------------------------------------------
# Bounded exploration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReachGraph:
    """A bounded fragment of the configuration graph.

    Every edge ``(c, sigma, posted, c')`` replays: ``c'.buffer`` equals
    ``c.buffer - [sigma] + posted`` and ``posted`` is the Parikh image of a
    context word of length <= ``wordlen``.  ``complete`` is True iff the
    frontier was exhausted, i.e. the graph contains EVERY configuration
    reachable using witness words of length <= ``wordlen``.  Negative
    queries against an incomplete graph are inconclusive.
    """

    configurations: FrozenSet[Configuration]
    edges: FrozenSet[Tuple]
    initial: Configuration
    complete: bool
    frontier: FrozenSet[Configuration]
    max_configs: int
    wordlen: int

    def out_edges(self, config: Configuration) -> List[Tuple]:
        return sorted((e for e in self.edges if e[0] == config), key=skey)


def _successor_items(index: Dict, c: Configuration, wordlen: int) -> List[Tuple]:
    """Sorted (sigma, posted, target) triples derivable with short words."""
    out: Set[Tuple] = set()
    for sigma in c.buffer.support:
        options = index.get((c.state, sigma))
        if not options:
            continue
        left = c.buffer.remove(sigma)
        for (d2, lang) in options:
            for w in lang_words_upto(lang, wordlen):
                posted = parikh(w)
                out.add((sigma, posted, Configuration(d2, left + posted)))
    return sorted(out, key=skey)


def successors(program: AsyncProgram, c: Configuration, wordlen: int) -> FrozenSet[Tuple]:
    """All one-step successors derivable with witness words of length
    <= wordlen.

    This is a bounded underapproximation of the (possibly infinitely
    branching) step relation; it is exact when every relevant language is
    finite with words no longer than ``wordlen``.
    """
    if wordlen < 0:
        raise InputError("wordlen must be nonnegative")
    index = program.dispatch_index()
    return frozenset((sigma, c2) for (sigma, _posted, c2) in _successor_items(index, c, wordlen))


def explore(program: AsyncProgram, max_configs: int, wordlen: int) -> ReachGraph:
    """Breadth-first closure under bounded successors.

    Stops when the frontier empties or ``max_configs`` configurations have
    been expanded; hitting the cap is recorded (``complete=False``), not an
    error.
    """
    if max_configs <= 0 or wordlen < 0:
        raise InputError("exploration bounds must be positive")
    index = program.dispatch_index()
    start = program.initial_configuration
    seen: Set[Configuration] = {start}
    queue = deque([start])
    edges: Set[Tuple] = set()
    expanded = 0
    while queue:
        if expanded >= max_configs:
            break
        c = queue.popleft()
        expanded += 1
        for (sigma, posted, c2) in _successor_items(index, c, wordlen):
            edges.add((c, sigma, posted, c2))
            if c2 not in seen:
                seen.add(c2)
                queue.append(c2)
    frontier = frozenset(queue)
    return ReachGraph(
        configurations=frozenset(seen),
        edges=frozenset(edges),
        initial=start,
        complete=not frontier,
        frontier=frontier,
        max_configs=max_configs,
        wordlen=wordlen,
    )


def downclose_ap(program: AsyncProgram) -> AsyncProgram:
    """Replaces every context language by its downward closure.

    State reachability, termination and boundedness are invariant under
    this transformation, and the result's languages are all regular or
    finite, which the exact checkers exploit.  Idempotent up to language
    equality.
    """
    return AsyncProgram(
        states=program.states,
        alphabet=program.alphabet,
        languages={ctx: lang_downclose(lang) for ctx, lang in program.languages.items()},
        initial=program.initial,
        initial_buffer=program.initial_buffer,
    )


# ---------------------------------------------------------------------------
# Fair lassos
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FairLasso:
    """A reachable cycle witnessing a fair infinite run.

    ``stem`` leads from the graph's initial configuration to the cycle's
    first configuration; ``cycle`` is a closed edge walk.  Fairness of the
    unrolled run: every handler pending somewhere on the cycle labels some
    cycle edge, so after any point of the infinite unrolling, every pending
    handler is executed within the next cycle round.  (An infinite fair run
    exists, obtained by repeating the cycle forever; pending counts evolve
    periodically, so the fairness condition holds at every index.)

    ``starved`` lists each handler tau such that every configuration on the
    cycle has tau pending and every tau-labeled cycle edge leaves from a
    configuration with at least two pending instances of tau: unrolling
    then keeps one specific instance of tau pending forever.
    """

    stem: Tuple
    cycle: Tuple
    starved: FrozenSet


def _scc_walk(nodes: FrozenSet, edges: List[Tuple]) -> List[Tuple]:
    """A closed walk through the given strongly-connected edge set that
    executes every edge label at least once.

    Visiting one representative edge per label suffices for fairness: every
    handler pending anywhere in the component also labels some component
    edge, and the walk executes each such label.
    """
    adj: Dict = {}
    for e in edges:
        adj.setdefault(e[0], []).append(e)
    for v in adj:
        adj[v].sort(key=skey)

    def path(src, dst) -> List[Tuple]:
        if src == dst:
            return []
        seen = {src: None}
        queue = deque([src])
        while queue:
            v = queue.popleft()
            for e in adj.get(v, ()):
                if e[3] not in seen:
                    seen[e[3]] = e
                    if e[3] == dst:
                        out = []
                        cur = dst
                        while cur != src:
                            out.append(seen[cur])
                            cur = seen[cur][0]
                        return list(reversed(out))
                    queue.append(e[3])
        raise AssertionError("strongly-connected component is not connected")

    first_by_label: Dict = {}
    for e in sorted(edges, key=skey):
        first_by_label.setdefault(e[1], e)
    reps = [first_by_label[label] for label in sorted(first_by_label, key=skey)]
    start = reps[0][0]
    walk: List[Tuple] = []
    cur = start
    for e in reps:
        walk.extend(path(cur, e[0]))
        walk.append(e)
        cur = e[3]
    walk.extend(path(cur, start))
    return walk


def find_fair_lasso(graph: ReachGraph, starve=None) -> Optional[FairLasso]:
    """Searches the graph for a fair cycle; exact over the given graph.

    Returns a lasso whose cycle is fair (see FairLasso), or None when the
    graph has no fair cycle at all.  None is conclusive for the program
    only when ``graph.complete`` holds AND exploration was exact; otherwise
    it is inconclusive.  With ``starve=tau``, only cycles that starve tau
    are considered.

    The search decomposes the graph into strongly connected components and
    repeatedly deletes, inside each component, the configurations that have
    some handler pending which no component edge executes; a component that
    stabilizes with no such defect yields a fair cycle executing every one
    of its edge labels.  Every fair cycle survives the deletions, so the
    search is complete over the graph.
    """
    edges = list(graph.edges)
    if starve is not None:
        edges = [
            e
            for e in edges
            if e[0].buffer[starve] >= 1
            and e[3].buffer[starve] >= 1
            and not (e[1] == starve and e[0].buffer[starve] < 2)
        ]

    def solve(edge_set: List[Tuple]) -> Optional[List[Tuple]]:
        if not edge_set:
            return None
        nodes = {e[0] for e in edge_set} | {e[3] for e in edge_set}
        comps = tarjan_scc(nodes, [(e[0], e[3]) for e in edge_set])
        comp_of: Dict = {}
        for i, comp in enumerate(comps):
            for v in comp:
                comp_of[v] = i
        buckets: List[List[Tuple]] = [[] for _ in comps]
        for e in edge_set:
            i = comp_of[e[0]]
            if comp_of[e[3]] == i:
                buckets[i].append(e)
        for comp, internal in zip(comps, buckets):
            if not internal:
                continue
            pending = {
                sigma for c in comp for sigma in c.buffer.support
            }
            labels = {e[1] for e in internal}
            violated = pending - labels
            if not violated:
                return _scc_walk(comp, internal)
            shrunk = [
                e
                for e in internal
                if not any(e[0].buffer[sigma] >= 1 for sigma in violated)
                and not any(e[3].buffer[sigma] >= 1 for sigma in violated)
            ]
            if len(shrunk) < len(internal):
                found = solve(shrunk)
                if found is not None:
                    return found
        return None

    cycle = solve(edges)
    if cycle is None:
        return None

    # Reach the cycle's first configuration from the initial one.
    anchor = cycle[0][0]
    stem: List[Tuple] = []
    if anchor != graph.initial:
        by_src: Dict = {}
        for e in graph.edges:
            by_src.setdefault(e[0], []).append(e)
        for v in by_src:
            by_src[v].sort(key=skey)
        seen: Dict = {graph.initial: None}
        queue = deque([graph.initial])
        while queue:
            v = queue.popleft()
            if v == anchor:
                break
            for e in by_src.get(v, ()):
                if e[3] not in seen:
                    seen[e[3]] = e
                    queue.append(e[3])
        if anchor not in seen:
            return None  # cycle exists but is unreachable from the initial node
        cur = anchor
        while cur != graph.initial:
            stem.append(seen[cur])
            cur = seen[cur][0]
        stem.reverse()

    on_cycle = [cycle[0][0]] + [e[3] for e in cycle]
    starved = set()
    for sigma in sorted({s for c in on_cycle for s in c.buffer.support}, key=skey):
        if all(c.buffer[sigma] >= 1 for c in on_cycle) and all(
            e[0].buffer[sigma] >= 2 for e in cycle if e[1] == sigma
        ):
            starved.add(sigma)
    return FairLasso(stem=tuple(stem), cycle=tuple(cycle), starved=frozenset(starved))


# ---------------------------------------------------------------------------
# Random simulation
# ---------------------------------------------------------------------------


def simulate_run(program: AsyncProgram, steps: int, seed: int, wordlen: int) -> List[Dict]:
    """Replays one pseudo-random run; deterministic for a given seed.

    Returns one record per executed step; stops early when no successor is
    derivable within the word bound.
    """
    rng = random.Random(seed)
    index = program.dispatch_index()
    c = program.initial_configuration
    out: List[Dict] = []
    for i in range(steps):
        options = _successor_items(index, c, wordlen)
        if not options:
            break
        sigma, posted, c2 = rng.choice(options)
        out.append(
            {
                "step": i,
                "handler": sigma,
                "posted": posted.to_json(),
                "state": c2.state,
                "buffer": c2.buffer.to_json(),
            }
        )
        c = c2
    return out
