"""Top-level decision procedures for asynchronous shared-memory programs.

The checks in this module answer questions about the infinite configuration
space of an :class:`~apv.semantics.AsyncProgram`:

* :func:`check_safety` — is a given global state reachable?  Exact.
* :func:`check_termination` — is every run finite?  Exact when the cover
  construction stays finite-valued; otherwise a certificate search that
  may return UNKNOWN.
* :func:`check_boundedness` — is the pending-task count bounded?  Exact.
* :func:`check_config_reachability` — is an exact configuration reachable?
  Three-valued (positive side by bounded search, negative side by the
  cover overapproximation).
* :func:`check_fair_nontermination`, :func:`check_fair_starvation` —
  liveness under fair scheduling, decided by a semantics-level lasso
  search plus the reduction gadgets.  FAILS verdicts always carry a
  reconstructed, independently verified lasso; a reachable gadget target
  whose projection does not verify is reported as UNKNOWN, never FAILS.
* :func:`z_intersection` — does a language contain a word with equally
  many ``a``'s and ``b``'s?
* ``check_*_enumerative`` — the two-sided enumeration procedures that
  alternate between guessing regular overapproximations and searching for
  concrete counterexample runs.

The exact checkers share one engine: every handler language is replaced
by its downward closure (which preserves state reachability, termination
and boundedness), the Parikh images of the closed languages are split
into ideals (a finite base plus a set of letters that can be posted in
any number), and a Karp–Miller-style forward search over
``(state, counts-with-omega)`` macro configurations computes the exact
downward closure of the reachable quiescent configurations.  Witnesses
are realized by replaying the tree path that introduced each omega the
minimal number of times needed, and are finally re-expressed with words
of the original (un-closed) languages whenever a superword search
succeeds.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .automata import Nfa, nfa_intersect, nfa_is_empty, nfa_member, skey, tarjan_scc
from .downclosure import PostIdeal, ideal_decomposition
from .errors import ApvError, InputError, ResourceLimit
from .multiset import Configuration, Multiset, Prerun, is_subword, parikh
from .pda import Pda, SimplePda, intersect_regular, pda_is_empty, pda_words_upto
from .petrinet import LabeledPetriNet, OmegaMarking, Transition, coverable
from .reductions import (
    fairnt_to_starvation,
    project_starvation_steps,
    starvation_to_reach,
    strip_letter_steps,
    zint_to_reach,
)
from .semantics import (
    AsyncProgram,
    downclose_ap,
    explore,
    find_fair_lasso,
    lang_alphabet,
    lang_downclose,
    lang_is_empty,
    lang_is_finite,
    lang_member,
    lang_words_upto,
)

HOLDS = "HOLDS"
FAILS = "FAILS"
UNKNOWN = "UNKNOWN"

OMEGA = OmegaMarking.OMEGA

DEFAULT_MAX_CONFIGS = 20_000
DEFAULT_WORDLEN = 4
DEFAULT_NODE_CAP = 100_000
MAX_FAIR_ALPHABET = 12


# ---------------------------------------------------------------------------
# Verdicts and witnesses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    """Outcome of a check plus its evidence.

    ``note`` states the property's polarity (what HOLDS means).  A FAILS
    verdict always carries a replayable witness; an UNKNOWN verdict's
    ``bounds`` record the exhausted limits.
    """

    outcome: str
    note: str
    witness: object = None
    bounds: Mapping = field(default_factory=dict)

    def to_json(self) -> dict:
        w = self.witness
        if w is not None and hasattr(w, "to_json"):
            w = w.to_json()
        elif isinstance(w, tuple):
            w = list(w)
        return {
            "verdict": self.outcome,
            "note": self.note,
            "witness": w,
            "bounds": dict(self.bounds),
        }


@dataclass(frozen=True)
class RunWitness:
    """A validated run; ``words[i]`` is the handler word of step ``i``.

    When ``downclosed`` is true the words belong to the downward-closed
    languages (a superword search into the original languages failed);
    otherwise they belong to the program's own languages.
    """

    prerun: Prerun
    words: Tuple[Tuple, ...]
    downclosed: bool = False

    def to_json(self) -> dict:
        return {
            "prerun": self.prerun.to_json(),
            "words": [list(w) for w in self.words],
            "downclosed": self.downclosed,
        }


@dataclass(frozen=True)
class SelfCoveringRun:
    """A run whose tail segment can be repeated forever.

    ``prerun.configs[split]`` and ``prerun.configs[-1]`` share their global
    state and the final buffer dominates the one at ``split``; repeating
    the segment is enabled again from the larger buffer, so the program
    has an infinite run.  ``strict`` records that the domination is strict
    somewhere, in which case iterating the segment grows the buffer without
    bound.
    """

    prerun: Prerun
    words: Tuple[Tuple, ...]
    split: int
    strict: bool = False
    downclosed: bool = False

    def to_json(self) -> dict:
        return {
            "prerun": self.prerun.to_json(),
            "words": [list(w) for w in self.words],
            "split": self.split,
            "strict": self.strict,
            "downclosed": self.downclosed,
        }


@dataclass(frozen=True)
class PumpWitness:
    """A run to a configuration where a context with a pumpable Parikh
    ideal is dispatchable: one further dispatch can post any number of the
    pumpable letters, so the program is unbounded.
    """

    prerun: Prerun
    words: Tuple[Tuple, ...]
    context: Tuple
    ideal: PostIdeal
    downclosed: bool = False

    def to_json(self) -> dict:
        return {
            "prerun": self.prerun.to_json(),
            "words": [list(w) for w in self.words],
            "context": list(self.context),
            "base": self.ideal.base.to_json(),
            "pumpable": sorted(self.ideal.pumpable, key=skey),
            "downclosed": self.downclosed,
        }


@dataclass(frozen=True)
class FairWitness:
    """A lasso whose infinite unrolling is a fair run.

    ``prerun.configs[split:]`` is the cycle: it returns to the state of
    ``configs[split]`` with a pointwise larger-or-equal buffer, and every
    handler pending anywhere on the cycle labels some cycle step, so each
    pending instance is executed within one further round.  ``starved``
    lists handlers kept pending forever by the unrolling: they stay
    pending at every cycle configuration and are only ever executed with a
    spare instance in the buffer.
    """

    prerun: Prerun
    words: Tuple[Tuple, ...]
    split: int
    starved: FrozenSet = frozenset()

    def to_json(self) -> dict:
        return {
            "prerun": self.prerun.to_json(),
            "words": [list(w) for w in self.words],
            "split": self.split,
            "starved": sorted(self.starved, key=skey),
        }


# ---------------------------------------------------------------------------
# Language plumbing
# ---------------------------------------------------------------------------


def _ideal_key(ideal: PostIdeal):
    return skey(
        (
            tuple(sorted(ideal.base.items(), key=skey)),
            tuple(sorted(ideal.pumpable, key=skey)),
        )
    )


def _ideals_of_language(lang) -> Tuple[PostIdeal, ...]:
    """Parikh ideals of a downward-closed language (finite set or NFA)."""
    if isinstance(lang, Nfa):
        ideals = list(ideal_decomposition(lang))
    elif isinstance(lang, (Pda, SimplePda)):
        raise InputError("cover analysis needs downclosed languages; close the program first")
    else:
        parikhs = {parikh(w) for w in lang}
        maxima = [p for p in parikhs if not any(p < q for q in parikhs)]
        ideals = [PostIdeal(p, frozenset()) for p in maxima]
    return tuple(sorted(ideals, key=_ideal_key))


def _word_with_parikh(lang, target: Multiset) -> Optional[Tuple]:
    """A word of ``lang`` whose Parikh image is exactly ``target``.

    Exact for finite sets and NFAs (breadth-first product with the letter
    budget); for pushdown languages falls back to bounded enumeration.
    Deterministic: shortest word first, stable tie-break.
    """
    if isinstance(lang, Nfa):
        start = (lang.initial, Multiset())
        parent: Dict = {start: None}
        queue = deque([start])
        moves = sorted(lang.transitions, key=skey)
        by_src: Dict = {}
        for (p, a, q) in moves:
            by_src.setdefault(p, []).append((a, q))
        while queue:
            state, used = queue.popleft()
            if used == target and state in lang.finals:
                out: List = []
                cur = (state, used)
                while parent[cur] is not None:
                    prev, letter = parent[cur]
                    if letter is not None:
                        out.append(letter)
                    cur = prev
                return tuple(reversed(out))
            for (a, q) in by_src.get(state, ()):
                if a is None:
                    nxt = (q, used)
                elif used[a] < target[a]:
                    nxt = (q, used.add(a))
                else:
                    continue
                if nxt not in parent:
                    parent[nxt] = ((state, used), a)
                    queue.append(nxt)
        return None
    if isinstance(lang, (Pda, SimplePda)):
        for w in pda_words_upto(lang, target.card):
            if parikh(w) == target:
                return w
        return None
    for w in sorted(lang, key=lambda v: (len(v), skey(v))):
        if parikh(w) == target:
            return w
    return None


def _superword_nfa(word: Tuple, alphabet: FrozenSet) -> Nfa:
    """Accepts exactly the words containing ``word`` as a subword."""
    n = len(word)
    transitions = set()
    for i in range(n + 1):
        for a in alphabet:
            transitions.add((i, a, i))
    for i, a in enumerate(word):
        transitions.add((i, a, i + 1))
    return Nfa(
        states=frozenset(range(n + 1)),
        alphabet=frozenset(alphabet),
        transitions=frozenset(transitions),
        initial=0,
        finals=frozenset({n}),
    )


def _nfa_shortest_word(nfa: Nfa) -> Optional[Tuple]:
    parent: Dict = {nfa.initial: None}
    queue = deque([nfa.initial])
    by_src: Dict = {}
    for (p, a, q) in sorted(nfa.transitions, key=skey):
        by_src.setdefault(p, []).append((a, q))
    while queue:
        state = queue.popleft()
        if state in nfa.finals:
            out: List = []
            cur = state
            while parent[cur] is not None:
                prev, letter = parent[cur]
                if letter is not None:
                    out.append(letter)
                cur = prev
            return tuple(reversed(out))
        for (a, q) in by_src.get(state, ()):
            if q not in parent:
                parent[q] = (state, a)
                queue.append(q)
    return None


def _superword_in(lang, word: Tuple) -> Optional[Tuple]:
    """A short member of ``lang`` containing ``word`` as a subword, or None."""
    word = tuple(word)
    if lang_member(lang, word):
        return word
    if isinstance(lang, Nfa):
        if not set(word) <= set(lang.alphabet):
            return None
        inter = nfa_intersect(lang, _superword_nfa(word, lang.alphabet))
        return _nfa_shortest_word(inter)
    if isinstance(lang, (Pda, SimplePda)):
        alphabet = lang_alphabet(lang)
        if not set(word) <= set(alphabet):
            return None
        inter = intersect_regular(lang, _superword_nfa(word, alphabet))
        for bound in (len(word), len(word) + 2, len(word) + 4, len(word) + 8, len(word) + 16):
            found = pda_words_upto(inter, bound)
            if found:
                return min(found, key=lambda v: (len(v), skey(v)))
        return None
    candidates = [tuple(v) for v in lang if is_subword(word, v)]
    if not candidates:
        return None
    return min(candidates, key=lambda v: (len(v), skey(v)))


def _finite_word_cap(program: AsyncProgram) -> Optional[int]:
    """The longest word any handler language contains, when that is certain.

    Returns None when some language is infinite or its finiteness bound is
    not computable here (pushdown languages).
    """
    longest = 0
    for lang in program.languages.values():
        if not lang_is_finite(lang):
            return None
        if isinstance(lang, Nfa):
            words = lang_words_upto(lang, len(lang.states))
            if words:
                longest = max(longest, max(len(w) for w in words))
        elif isinstance(lang, (Pda, SimplePda)):
            return None
        elif lang:
            longest = max(longest, max(len(w) for w in lang))
    return longest


# ---------------------------------------------------------------------------
# The cover construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MacroConfig:
    """A quiescent configuration with omega-extended pending counts."""

    state: object
    buffer: OmegaMarking


class _CoverNode:
    __slots__ = ("nid", "state", "buffer", "pre", "parent", "step", "accels")

    def __init__(self, nid, state, buffer, pre, parent, step, accels):
        self.nid = nid
        self.state = state
        self.buffer = buffer
        self.pre = pre  # buffer before omega widening
        self.parent = parent  # parent node id or None
        self.step = step  # (context, ideal) from the parent, or None
        self.accels = accels  # tuple of (ancestor_nid, widened_letters)


@dataclass
class CoverTree:
    """The forward cover of a program's quiescent configurations.

    ``nodes`` are in creation (breadth-first) order; ``maximal`` keeps, per
    state, the antichain of maximal buffers; ``fired`` collects every
    ``(context, ideal)`` macro edge dispatched anywhere in the cover.  The
    downward closure of the reachable quiescent configurations is exactly
    the union of the downward closures of the antichain elements.
    """

    program: AsyncProgram
    ideals: Mapping
    nodes: List[_CoverNode]
    maximal: Dict
    fired: FrozenSet

    def covers(self, config: Configuration) -> bool:
        return any(
            buf.covers(config.buffer) for (_nid, buf) in self.maximal.get(config.state, ())
        )

    def reachable_states(self) -> FrozenSet:
        return frozenset(n.state for n in self.nodes)

    def has_omega(self) -> bool:
        return any(n.buffer.has_omega() for n in self.nodes)

    def macro_configs(self) -> Tuple[MacroConfig, ...]:
        out = []
        for state in sorted(self.maximal, key=skey):
            for (_nid, buf) in self.maximal[state]:
                out.append(MacroConfig(state, buf))
        return tuple(out)


def build_cover(program: AsyncProgram, node_cap: int = DEFAULT_NODE_CAP) -> CoverTree:
    """Forward cover search over macro configurations.

    ``program`` must have downward-closed languages (finite sets or NFAs);
    use :func:`~apv.semantics.downclose_ap` first.  One macro step
    dispatches a pending handler through a context and posts one of the
    context's Parikh ideals: the ideal's base plus omega on its pumpable
    letters.  A new node dominated by an ancestor with the same state
    widens the strictly increased coordinates to omega (the segment between
    them can be repeated); a node dominated by any existing node with the
    same state is dropped (its successors are covered by the dominator's).
    """
    ideals = {
        ctx: _ideals_of_language(program.languages[ctx])
        for ctx in sorted(program.languages, key=skey)
    }
    ctxs_from: Dict = {}
    for ctx in sorted(ideals, key=skey):
        if ideals[ctx]:
            ctxs_from.setdefault(ctx[0], []).append(ctx)

    root_buf = OmegaMarking(dict(program.initial_buffer))
    root = _CoverNode(0, program.initial, root_buf, root_buf, None, None, ())
    nodes = [root]
    maximal: Dict = {root.state: [(0, root_buf)]}
    fired: Set[Tuple] = set()
    queue = deque([0])
    while queue:
        nid = queue.popleft()
        node = nodes[nid]
        for ctx in ctxs_from.get(node.state, ()):
            (_d, sigma, d2) = ctx
            if node.buffer[sigma] < 1:
                continue
            for ideal in ideals[ctx]:
                fired.add((ctx, ideal))
                buf = (node.buffer - Multiset({sigma: 1})) + ideal.base
                if ideal.pumpable:
                    d = buf.as_dict()
                    for x in ideal.pumpable:
                        d[x] = OMEGA
                    buf = OmegaMarking(d)
                pre = buf
                accels: List[Tuple] = []
                changed = True
                while changed:
                    changed = False
                    anc: Optional[_CoverNode] = node
                    while anc is not None:
                        if anc.state == d2 and anc.buffer <= buf and anc.buffer != buf:
                            widened = buf.widen(anc.buffer)
                            if widened != buf:
                                letters = frozenset(
                                    k
                                    for k in widened.support()
                                    if widened[k] == OMEGA and buf[k] != OMEGA
                                )
                                accels.append((anc.nid, letters))
                                buf = widened
                                changed = True
                        anc = nodes[anc.parent] if anc.parent is not None else None
                chain = maximal.setdefault(d2, [])
                if any(buf <= other for (_i, other) in chain):
                    continue
                new = _CoverNode(len(nodes), d2, buf, pre, nid, (ctx, ideal), tuple(accels))
                nodes.append(new)
                if len(nodes) > node_cap:
                    raise ResourceLimit("cover_nodes", node_cap, "cover construction")
                maximal[d2] = [(i, b) for (i, b) in chain if not b <= buf] + [(new.nid, buf)]
                queue.append(new.nid)
    return CoverTree(
        program=program,
        ideals=ideals,
        nodes=nodes,
        maximal=maximal,
        fired=frozenset(fired),
    )


# ---------------------------------------------------------------------------
# Realizing cover nodes as concrete runs
# ---------------------------------------------------------------------------


def _expand_path(path: List[_CoverNode], reps: int) -> List[Tuple]:
    """Unrolls a tree path into macro steps, repeating each widening
    segment ``reps`` extra times."""
    out: List[Tuple] = []
    pos: Dict[int, int] = {}
    for node in path:
        if node.parent is not None:
            out.append(node.step)
        for (anc, _letters) in node.accels:
            segment = list(out[pos[anc]:])
            for _ in range(reps):
                out.extend(segment)
        pos[node.nid] = len(out)
    return out


def _backward_plan(
    steps: List[Tuple], demand: Multiset, m0: Multiset
) -> Optional[List[Multiset]]:
    """Chooses a concrete post for every macro step so the run ends with a
    buffer dominating ``demand``; None when the initial buffer cannot seed
    the steps' demands."""
    need = demand
    plan: List[Multiset] = []
    for (ctx, ideal) in reversed(steps):
        sigma = ctx[1]
        post = Multiset(
            {
                x: (need[x] if x in ideal.pumpable else min(need[x], ideal.base[x]))
                for x in need.support
            }
        )
        plan.append(post)
        need = (need - post) + Multiset({sigma: 1})
    if need <= m0:
        plan.reverse()
        return plan
    return None


def _realize(
    tree: CoverTree, nid: int, demand: Multiset, rep_cap: int = 256
) -> List[Tuple]:
    """Concrete macro steps ``(context, ideal, posted)`` from the initial
    configuration to the state of node ``nid`` with a buffer dominating
    ``demand``.

    Widening segments are replayed 1, 2, 4, ... times until the demands
    propagate back into the initial buffer; nested widenings that amplify
    each other's demands can exceed the repetition cap, in which case a
    ResourceLimit is raised and callers fall back to plain forward search.
    """
    path: List[_CoverNode] = []
    cur: Optional[_CoverNode] = tree.nodes[nid]
    while cur is not None:
        path.append(cur)
        cur = tree.nodes[cur.parent] if cur.parent is not None else None
    path.reverse()
    m0 = tree.program.initial_buffer
    reps = 1
    while reps <= rep_cap:
        steps = _expand_path(path, reps)
        plan = _backward_plan(steps, demand, m0)
        if plan is not None:
            out = [(ctx, ideal, post) for ((ctx, ideal), post) in zip(steps, plan)]
            state = tree.program.initial
            m = m0
            for (ctx, ideal, post) in out:
                assert ctx[0] == state and m[ctx[1]] >= 1 and ideal.covers(post)
                m = m.remove(ctx[1]) + post
                state = ctx[2]
            assert demand <= m
            return out
        reps *= 2
    raise ResourceLimit("realize_repetitions", rep_cap, "witness realization")


def _witness_steps(
    program: AsyncProgram, down: AsyncProgram, steps: List[Tuple]
) -> Tuple[Tuple[Configuration, ...], Tuple, Tuple[Tuple, ...], bool]:
    """Turns macro steps over the closed program into a concrete prerun.

    Picks, per step, a word of the closed language with the planned Parikh
    image, then tries to lift every word to a superword of the original
    language (which only enlarges buffers and so preserves every
    domination a caller relies on).  Returns (configs, letters, words,
    downclosed_flag).
    """
    words_down: List[Tuple] = []
    for (ctx, _ideal, post) in steps:
        w = _word_with_parikh(down.language(*ctx), post)
        if w is None:
            raise ApvError(f"internal: no closed word realizes {post!r} for {ctx!r}")
        words_down.append(w)
    lifted: List[Tuple] = []
    ok = True
    for ((ctx, _ideal, _post), w) in zip(steps, words_down):
        v = _superword_in(program.language(*ctx), w)
        if v is None:
            ok = False
            break
        lifted.append(v)
    words = lifted if ok else words_down
    base = program if ok else down
    configs = [base.initial_configuration]
    letters: List = []
    for ((ctx, _ideal, _post), w) in zip(steps, words):
        (_d, sigma, d2) = ctx
        c = configs[-1]
        configs.append(Configuration(d2, c.buffer.remove(sigma) + parikh(w)))
        letters.append(sigma)
    return tuple(configs), tuple(letters), tuple(words), not ok


def _run_witness(program: AsyncProgram, down: AsyncProgram, steps: List[Tuple]) -> RunWitness:
    configs, letters, words, downclosed = _witness_steps(program, down, steps)
    return RunWitness(
        prerun=Prerun(configs, letters, is_run=True), words=words, downclosed=downclosed
    )


# ---------------------------------------------------------------------------
# Bounded exact search
# ---------------------------------------------------------------------------


def _targeted_bfs(
    program: AsyncProgram,
    max_configs: int,
    wordlen: int,
    target: Optional[Configuration] = None,
    target_state=None,
) -> Tuple[Optional[RunWitness], int, bool]:
    """Breadth-first search that stops on the first hit.

    Matches either an exact configuration (``target``) or any configuration
    with a given global state (``target_state``).  Returns
    ``(witness_or_None, expanded, complete)`` where ``complete`` means the
    frontier was exhausted within the bounds.
    """

    def hit(c: Configuration) -> bool:
        if target is not None and c == target:
            return True
        return target_state is not None and c.state == target_state

    index = program.dispatch_index()
    start = program.initial_configuration
    parent: Dict[Configuration, Optional[Tuple]] = {start: None}

    def witness(c: Configuration) -> RunWitness:
        chain: List[Tuple] = []
        cur = c
        while parent[cur] is not None:
            prev, sigma, w = parent[cur]
            chain.append((prev, sigma, w, cur))
            cur = prev
        chain.reverse()
        configs = [start] + [edge[3] for edge in chain]
        letters = tuple(edge[1] for edge in chain)
        words = tuple(edge[2] for edge in chain)
        return RunWitness(
            prerun=Prerun(tuple(configs), letters, is_run=True), words=words
        )

    if hit(start):
        return witness(start), 0, True
    queue = deque([start])
    expanded = 0
    while queue and expanded < max_configs:
        c = queue.popleft()
        expanded += 1
        for sigma in sorted(c.buffer.support, key=skey):
            for (d2, lang) in index.get((c.state, sigma), ()):
                left = c.buffer.remove(sigma)
                for w in lang_words_upto(lang, wordlen):
                    c2 = Configuration(d2, left + parikh(w))
                    if c2 in parent:
                        continue
                    parent[c2] = (c, sigma, w)
                    if hit(c2):
                        return witness(c2), expanded, False
                    queue.append(c2)
    return None, expanded, not queue


# ---------------------------------------------------------------------------
# The dispatch/step/finish Petri net (fallback backend)
# ---------------------------------------------------------------------------


def step_net(program: AsyncProgram) -> LabeledPetriNet:
    """A Petri net whose coverability agrees with the program's state
    reachability.

    Places: one per global state (the single state token acts as a lock),
    one per handler, and one per automaton state of each context's
    language.  Dispatching consumes the state and task tokens and starts
    the context's automaton; letter transitions post handler tokens;
    finishing restores the target state token.  The lock keeps handler
    executions atomic, so quiescent markings (lock present) correspond
    exactly to program configurations.  Languages must be finite sets or
    NFAs; close the program first.
    """
    places: Set = {("state", d) for d in program.states}
    places |= {("task", a) for a in program.alphabet}
    transitions: List[Transition] = []
    for ctx in sorted(program.languages, key=skey):
        lang = program.languages[ctx]
        if lang_is_empty(lang):
            continue
        if isinstance(lang, (Pda, SimplePda)):
            raise InputError("step net needs downclosed languages; close the program first")
        if not isinstance(lang, Nfa):
            words = sorted(lang, key=lambda w: (len(w), skey(w)))
            states = {("w", i, j) for i, w in enumerate(words) for j in range(len(w) + 1)}
            trans = set()
            for i, w in enumerate(words):
                for j, a in enumerate(w):
                    trans.add((("w", i, j), a, ("w", i, j + 1)))
                trans.add((("root",), None, ("w", i, 0)))
            states.add(("root",))
            lang = Nfa(
                states=frozenset(states),
                alphabet=frozenset(lang_alphabet(program.languages[ctx])),
                transitions=frozenset(trans),
                initial=("root",),
                finals=frozenset(("w", i, len(w)) for i, w in enumerate(words)),
            )
        (d, sigma, d2) = ctx
        for q in lang.states:
            places.add(("exec", ctx, q))
        transitions.append(
            Transition(
                name=("dispatch", ctx),
                pre=Multiset({("state", d): 1, ("task", sigma): 1}),
                post=Multiset({("exec", ctx, lang.initial): 1}),
            )
        )
        for i, (p, a, q) in enumerate(sorted(lang.transitions, key=skey)):
            post = Multiset({("exec", ctx, q): 1})
            if a is not None:
                post = post + Multiset({("task", a): 1})
            transitions.append(
                Transition(
                    name=("word", ctx, i),
                    pre=Multiset({("exec", ctx, p): 1}),
                    post=post,
                )
            )
        for q in sorted(lang.finals, key=skey):
            transitions.append(
                Transition(
                    name=("finish", ctx, q),
                    pre=Multiset({("exec", ctx, q): 1}),
                    post=Multiset({("state", d2): 1}),
                )
            )
    m0 = Multiset({("state", program.initial): 1}) + Multiset(
        {("task", a): n for a, n in program.initial_buffer.items()}
    )
    return LabeledPetriNet(
        alphabet=frozenset(),
        places=frozenset(places),
        transitions=tuple(transitions),
        m0=m0,
        mf=Multiset(),
    )


# ---------------------------------------------------------------------------
# Safety
# ---------------------------------------------------------------------------


def check_safety(program: AsyncProgram, target_state, *, node_cap: int = 200_000) -> Verdict:
    """Is the given global state unreachable?  Exact.

    HOLDS means no run ever enters ``target_state``; FAILS carries a
    validated run that does.  State reachability is invariant under
    closing the handler languages downward, so the cover construction
    decides it; if the Parikh-ideal split overflows, a Petri-net
    coverability fallback decides the verdict instead.
    """
    note = "HOLDS = the target global state is unreachable"
    if target_state not in program.states:
        raise InputError(f"unknown target state: {target_state!r}")
    down = downclose_ap(program)
    try:
        tree = build_cover(down, node_cap=node_cap)
    except ResourceLimit:
        return _safety_fallback(program, down, target_state, note)
    hit = next((n for n in tree.nodes if n.state == target_state), None)
    bounds = {"cover_nodes": len(tree.nodes)}
    if hit is None:
        return Verdict(HOLDS, note, bounds=bounds)
    try:
        steps = _realize(tree, hit.nid, Multiset())
    except ResourceLimit:
        return _safety_fallback(program, down, target_state, note, known_reachable=True)
    return Verdict(FAILS, note, witness=_run_witness(program, down, steps), bounds=bounds)


def _safety_fallback(
    program: AsyncProgram,
    down: AsyncProgram,
    target_state,
    note: str,
    known_reachable: bool = False,
) -> Verdict:
    bounds = {"backend": "step-net coverability"}
    if not known_reachable:
        # The step net encodes the exact step semantics, so only pushdown
        # languages (which a net cannot carry) need their downward closure;
        # closing a context never changes which states are reachable.
        mixed = AsyncProgram(
            states=program.states,
            alphabet=program.alphabet,
            languages={
                ctx: (
                    lang_downclose(lang)
                    if isinstance(lang, (Pda, SimplePda))
                    else lang
                )
                for ctx, lang in program.languages.items()
            },
            initial=program.initial,
            initial_buffer=program.initial_buffer,
        )
        net = step_net(mixed)
        if not coverable(net, Multiset({("state", target_state): 1})):
            return Verdict(HOLDS, note, bounds=bounds)
    for (max_configs, wordlen) in ((20_000, 4), (100_000, 6), (400_000, 8)):
        witness, _expanded, _complete = _targeted_bfs(
            program, max_configs, wordlen, target_state=target_state
        )
        if witness is not None:
            return Verdict(FAILS, note, witness=witness, bounds=bounds)
    raise ResourceLimit(
        "safety_witness", 400_000, "state is reachable but no witness was found in bounds"
    )


# ---------------------------------------------------------------------------
# Boundedness
# ---------------------------------------------------------------------------


def check_boundedness(program: AsyncProgram, *, node_cap: int = 200_000) -> Verdict:
    """Is the number of pending handler instances uniformly bounded?  Exact.

    The program is unbounded iff the cover construction introduces an
    omega: either a reachable dispatch posts a pumpable Parikh ideal (one
    dispatch can post arbitrarily many tasks), or a quiescent segment
    strictly grows the buffer (the segment pumps).  HOLDS additionally
    reports the maximum pending count; FAILS carries a witness whose pump
    can be iterated to exceed any bound (see :func:`iterate_pump`).
    """
    note = "HOLDS = pending-task counts are uniformly bounded"
    down = downclose_ap(program)
    tree = build_cover(down, node_cap=node_cap)
    bounds = {"cover_nodes": len(tree.nodes)}
    omega_node = next((n for n in tree.nodes if n.buffer.has_omega()), None)
    if omega_node is None:
        max_card = max(sum(v for (_k, v) in n.buffer.counts) for n in tree.nodes)
        bounds["max_card"] = max_card
        return Verdict(HOLDS, note, bounds=bounds)
    v = omega_node
    (ctx, ideal) = v.step
    if ideal.pumpable:
        parent = tree.nodes[v.parent]
        steps = _realize(tree, parent.nid, Multiset({ctx[1]: 1}))
        configs, letters, words, downclosed = _witness_steps(program, down, steps)
        witness = PumpWitness(
            prerun=Prerun(configs, letters, is_run=True),
            words=words,
            context=ctx,
            ideal=ideal,
            downclosed=downclosed,
        )
        return Verdict(FAILS, note, witness=witness, bounds=bounds)
    anc_id, _letters = v.accels[0]
    segment: List[_CoverNode] = []
    cur: Optional[_CoverNode] = v
    while cur is not None and cur.nid != anc_id:
        segment.append(cur)
        cur = tree.nodes[cur.parent] if cur.parent is not None else None
    segment.reverse()
    anc = tree.nodes[anc_id]
    stem = _realize(tree, anc.nid, Multiset(anc.buffer.as_dict()))
    seg_steps = [(n.step[0], n.step[1], n.step[1].base) for n in segment]
    configs, letters, words, downclosed = _witness_steps(program, down, stem + seg_steps)
    witness = SelfCoveringRun(
        prerun=Prerun(configs, letters, is_run=True),
        words=words,
        split=len(stem),
        strict=True,
        downclosed=downclosed,
    )
    return Verdict(FAILS, note, witness=witness, bounds=bounds)


def iterate_pump(program: AsyncProgram, witness, target_card: int) -> Prerun:
    """Replays an unboundedness witness until the buffer holds at least
    ``target_card`` pending instances; returns the validated prerun."""
    base_program = downclose_ap(program) if witness.downclosed else program
    if isinstance(witness, SelfCoveringRun):
        if not witness.strict:
            raise InputError("only strict self-covering runs can be pumped")
        configs = list(witness.prerun.configs)
        letters = list(witness.prerun.letters)
        cycle_letters = letters[witness.split:]
        cycle_words = list(witness.words[witness.split:])
        cycle_ctx = [
            (configs[i].state, letters[i], configs[i + 1].state)
            for i in range(witness.split, len(letters))
        ]
        while configs[-1].buffer.card < target_card:
            for ((_d, sigma, d2), w) in zip(cycle_ctx, cycle_words):
                c = configs[-1]
                configs.append(Configuration(d2, c.buffer.remove(sigma) + parikh(w)))
                letters.append(sigma)
        return Prerun(tuple(configs), tuple(letters), is_run=True)
    if isinstance(witness, PumpWitness):
        (_d, sigma, d2) = witness.context
        lang = base_program.language(*witness.context)
        if witness.downclosed:
            down_lang = lang
        else:
            down_lang = lang_downclose(program.language(*witness.context))
        pumps = sorted(witness.ideal.pumpable, key=skey)
        pump_letter = pumps[0]
        want = witness.ideal.base + Multiset({pump_letter: target_card})
        w = _word_with_parikh(down_lang, want)
        if w is None:
            raise ApvError("internal: pump ideal did not realize the requested post")
        if not witness.downclosed:
            lifted = _superword_in(lang, w)
            if lifted is not None:
                w = lifted
        configs = list(witness.prerun.configs)
        letters = list(witness.prerun.letters)
        c = configs[-1]
        configs.append(Configuration(d2, c.buffer.remove(sigma) + parikh(w)))
        letters.append(sigma)
        return Prerun(tuple(configs), tuple(letters), is_run=True)
    raise InputError(f"not a pumpable witness: {witness!r}")


# ---------------------------------------------------------------------------
# Termination
# ---------------------------------------------------------------------------


def check_termination(
    program: AsyncProgram,
    *,
    node_cap: int = 200_000,
    graph_cap: int = 50_000,
    walk_cap: Optional[int] = None,
) -> Verdict:
    """Does every run terminate?

    Exact when the cover stays omega-free: the reachable quiescent
    configurations then form a finite graph under maximal posts, and the
    program is non-terminating iff that graph has a reachable cycle
    (posting less than the maximum never enables more).  With omegas
    present, FAILS comes from a certificate: a cyclic sequence of macro
    edges, launchable under some cover element, whose integer effect is
    nonnegative on every letter it does not pump — such a loop can be
    repeated forever with suitable pump counts.  HOLDS with omegas needs
    the static prune to empty every strongly connected component of the
    macro edge graph; otherwise the verdict is UNKNOWN with the exhausted
    search bounds.
    """
    note = "HOLDS = every run is finite"
    down = downclose_ap(program)
    tree = build_cover(down, node_cap=node_cap)
    bounds = {"cover_nodes": len(tree.nodes)}
    if not tree.has_omega():
        try:
            found = _maxpost_cycle(down, tree, graph_cap)
        except ResourceLimit:
            bounds["quiescent_graph_cap"] = graph_cap
            return Verdict(UNKNOWN, note, bounds=bounds)
        if found is None:
            bounds["backend"] = "finite quiescent graph"
            return Verdict(HOLDS, note, bounds=bounds)
        stem_edges, cycle_edges = found
        steps = [(ctx, ideal, ideal.base) for (_c, ctx, ideal, _c2) in stem_edges + cycle_edges]
        configs, letters, words, downclosed = _witness_steps(program, down, steps)
        witness = SelfCoveringRun(
            prerun=Prerun(configs, letters, is_run=True),
            words=words,
            split=len(stem_edges),
            downclosed=downclosed,
        )
        return Verdict(FAILS, note, witness=witness, bounds=bounds)
    survivors = _prune_macro_edges(down, tree.fired)
    if not survivors:
        bounds["backend"] = "macro edge prune"
        return Verdict(HOLDS, note, bounds=bounds)
    if walk_cap is None:
        walk_cap = max(6, 2 * (len(program.states) + len(program.alphabet)))
    bounds["walk_cap"] = walk_cap
    cert = _walk_certificate(tree, survivors, walk_cap, graph_cap)
    if cert is not None:
        witness = _certificate_witness(program, down, tree, cert)
        if witness is not None:
            return Verdict(FAILS, note, witness=witness, bounds=bounds)
    bounds["surviving_edges"] = len(survivors)
    return Verdict(UNKNOWN, note, bounds=bounds)


def _maxpost_cycle(
    down: AsyncProgram, tree: CoverTree, graph_cap: int
) -> Optional[Tuple[List[Tuple], List[Tuple]]]:
    """A reachable cycle of the maximal-post quiescent graph, as
    ``(stem_edges, cycle_edges)`` with edges ``(config, ctx, ideal, config')``.
    Only meaningful when the cover is omega-free (posts are then finite and
    the graph is finite)."""
    ctxs_from: Dict = {}
    for ctx in sorted(tree.ideals, key=skey):
        if tree.ideals[ctx]:
            ctxs_from.setdefault(ctx[0], []).append(ctx)

    def out_edges(c: Configuration) -> List[Tuple]:
        out = []
        for ctx in ctxs_from.get(c.state, ()):
            (_d, sigma, d2) = ctx
            if c.buffer[sigma] < 1:
                continue
            for ideal in tree.ideals[ctx]:
                assert not ideal.pumpable
                c2 = Configuration(d2, c.buffer.remove(sigma) + ideal.base)
                out.append((c, ctx, ideal, c2))
        return out

    start = down.initial_configuration
    color: Dict[Configuration, int] = {start: 1}
    stack: List[Tuple[Configuration, Iterable]] = [(start, iter(out_edges(start)))]
    path_edges: List[Tuple] = []
    visited = 1
    while stack:
        node, it = stack[-1]
        step = next(it, None)
        if step is None:
            color[node] = 2
            stack.pop()
            if path_edges:
                path_edges.pop()
            continue
        c2 = step[3]
        if color.get(c2, 0) == 1:
            pos = next(i for i, (n, _it) in enumerate(stack) if n == c2)
            return path_edges[:pos], path_edges[pos:] + [step]
        if color.get(c2, 0) == 0:
            color[c2] = 1
            visited += 1
            if visited > graph_cap:
                raise ResourceLimit("quiescent_graph", graph_cap, "termination analysis")
            stack.append((c2, iter(out_edges(c2))))
            path_edges.append(step)
    return None


def _edge_effect(edge: Tuple) -> Dict:
    (ctx, ideal) = edge
    eff = dict(ideal.base)
    sigma = ctx[1]
    eff[sigma] = eff.get(sigma, 0) - 1
    return {k: v for k, v in eff.items() if v != 0}


def _prune_macro_edges(down: AsyncProgram, fired: FrozenSet) -> List[Tuple]:
    """Macro edges that could still participate in a repeatable loop.

    Repeatedly removes, inside each strongly connected component, every
    edge that strictly consumes a letter which no component edge pumps and
    no component edge produces — no closed walk through such an edge can
    have a nonnegative effect on that letter.  An empty result proves
    termination."""
    live = sorted(fired, key=lambda e: (skey(e[0]), _ideal_key(e[1])))
    while True:
        if not live:
            return []
        comps = tarjan_scc(down.states, [(e[0][0], e[0][2]) for e in live])
        comp_of = {s: i for i, comp in enumerate(comps) for s in comp}
        groups: Dict[int, List[Tuple]] = {}
        for e in live:
            ci = comp_of[e[0][0]]
            if comp_of[e[0][2]] == ci:
                groups.setdefault(ci, []).append(e)
        pumped = {ci: frozenset().union(*(e[1].pumpable for e in es)) for ci, es in groups.items()}
        positive: Dict[int, Set] = {}
        for ci, es in groups.items():
            pos: Set = set()
            for e in es:
                for (x, v) in _edge_effect(e).items():
                    if v > 0:
                        pos.add(x)
            positive[ci] = pos
        kept: List[Tuple] = []
        removed = False
        for ci, es in sorted(groups.items()):
            for e in es:
                bad = any(
                    v < 0 and x not in pumped[ci] and x not in positive[ci]
                    for (x, v) in _edge_effect(e).items()
                )
                if bad:
                    removed = True
                else:
                    kept.append(e)
        if not removed:
            return kept
        live = kept


def _walk_certificate(
    tree: CoverTree, edges: List[Tuple], walk_cap: int, visit_cap: int
) -> Optional[Tuple[int, List[Tuple]]]:
    """Searches for a launchable repeatable loop of macro edges.

    A loop anchored at a cover element ``(d, M)`` qualifies when it starts
    and ends at ``d``, every edge's dispatch is enabled along the way
    (pumped letters count as unlimited from their pumping edge on, and the
    stock drawn from ``M`` seeds the first round), and every letter the
    loop does not pump has a nonnegative integer effect.  Breadth-first
    and deterministic; returns ``(anchor_node_id, loop_edges)``.
    """
    by_src: Dict = {}
    for e in edges:
        by_src.setdefault(e[0][0], []).append(e)
    clip = walk_cap + 1

    starts: List[Tuple[int, object, OmegaMarking]] = []
    for state in sorted(tree.maximal, key=skey):
        if state not in by_src:
            continue
        for (nid, buf) in tree.maximal[state]:
            starts.append((nid, state, buf))

    for (nid, anchor, buf) in starts:
        stock0 = tuple(
            sorted(
                ((k, min(int(v) if v != OMEGA else clip, clip)) for (k, v) in buf.counts),
                key=skey,
            )
        )
        init = (anchor, frozenset(), stock0, ())
        parent: Dict[Tuple, Optional[Tuple]] = {init: None}
        depth = {init: 0}
        queue = deque([init])
        visited = 0
        while queue:
            state = queue.popleft()
            visited += 1
            if visited > visit_cap:
                break
            (cur, pumps, stock_t, eff_t) = state
            if depth[state] >= walk_cap:
                continue
            stock = dict(stock_t)
            eff = dict(eff_t)
            for e in by_src.get(cur, ()):
                (ctx, ideal) = e
                sigma = ctx[1]
                if stock.get(sigma, 0) < 1:
                    continue
                nstock = dict(stock)
                nstock[sigma] -= 1
                for (x, v) in ideal.base.items():
                    nstock[x] = min(nstock.get(x, 0) + v, clip)
                npumps = pumps | ideal.pumpable
                for x in ideal.pumpable:
                    nstock[x] = clip
                neff = dict(eff)
                for (x, v) in _edge_effect(e).items():
                    neff[x] = neff.get(x, 0) + v
                if ctx[2] == anchor and all(
                    v >= 0 or x in npumps for (x, v) in neff.items()
                ):
                    walk: List[Tuple] = []
                    c = state
                    while parent[c] is not None:
                        prev, edge = parent[c]
                        walk.append(edge)
                        c = prev
                    walk.reverse()
                    walk.append(e)
                    return (nid, walk)
                nstate = (
                    ctx[2],
                    npumps,
                    tuple(sorted(((k, v) for (k, v) in nstock.items() if v > 0), key=skey)),
                    tuple(sorted(((k, min(v, clip)) for (k, v) in neff.items() if v != 0), key=skey)),
                )
                if nstate in parent:
                    continue
                parent[nstate] = (state, e)
                depth[nstate] = depth[state] + 1
                queue.append(nstate)
    return None


def _certificate_witness(
    program: AsyncProgram, down: AsyncProgram, tree: CoverTree, cert: Tuple[int, List[Tuple]]
) -> Optional[SelfCoveringRun]:
    """Realizes a repeatable-loop certificate as a validated self-covering
    run: chooses pump counts large enough that one round has a nonnegative
    concrete effect, realizes a stem covering the round's prefix deficits,
    and replays."""
    (nid, walk) = cert
    consumed: Dict = {}
    for (ctx, _ideal) in walk:
        consumed[ctx[1]] = consumed.get(ctx[1], 0) + 1
    posts: List[Multiset] = []
    for (ctx, ideal) in walk:
        post = dict(ideal.base)
        for x in sorted(ideal.pumpable, key=skey):
            post[x] = post.get(x, 0) + consumed.get(x, 0) + 1
        posts.append(Multiset(post))
    running: Dict = {}
    deficit: Dict = {}
    for ((ctx, _ideal), post) in zip(walk, posts):
        sigma = ctx[1]
        running[sigma] = running.get(sigma, 0) - 1
        deficit[sigma] = min(deficit.get(sigma, 0), running[sigma])
        for (x, v) in post.items():
            running[x] = running.get(x, 0) + v
    demand = Multiset({x: -v for (x, v) in deficit.items() if v < 0})
    try:
        stem = _realize(tree, nid, demand)
    except ResourceLimit:
        return None
    steps = stem + [(ctx, ideal, post) for ((ctx, ideal), post) in zip(walk, posts)]
    configs, letters, words, downclosed = _witness_steps(program, down, steps)
    split = len(stem)
    if configs[-1].state != configs[split].state or not (
        configs[split].buffer <= configs[-1].buffer
    ):
        return None
    return SelfCoveringRun(
        prerun=Prerun(configs, letters, is_run=True),
        words=words,
        split=split,
        downclosed=downclosed,
    )


# ---------------------------------------------------------------------------
# Configuration reachability
# ---------------------------------------------------------------------------


def check_config_reachability(
    program: AsyncProgram,
    target: Configuration,
    *,
    max_configs: int = DEFAULT_MAX_CONFIGS,
    wordlen: int = DEFAULT_WORDLEN,
    node_cap: int = 50_000,
) -> Verdict:
    """Is the exact configuration ``target`` reachable?  Three-valued.

    FAILS (reachable) comes from bounded forward search and carries the
    run; HOLDS (unreachable) is sound because every reachable
    configuration is dominated by some cover element of the downward-closed
    program; UNKNOWN reports the exhausted bounds.  The search also closes
    the gap exactly when every handler language is finite with words inside
    the word bound and the frontier empties.
    """
    note = "HOLDS = the target configuration is unreachable; FAILS = reachable"
    if target.state not in program.states:
        raise InputError(f"unknown target state: {target.state!r}")
    extra = target.buffer.support - program.alphabet
    if extra:
        raise InputError(f"target buffer uses unknown handlers: {sorted(extra, key=skey)}")
    bounds: Dict = {"max_configs": max_configs, "wordlen": wordlen}
    covered = None
    try:
        tree = build_cover(downclose_ap(program), node_cap=node_cap)
        covered = tree.covers(target)
        bounds["cover_nodes"] = len(tree.nodes)
    except ResourceLimit:
        bounds["cover_nodes"] = None
    if covered is False:
        return Verdict(HOLDS, note, bounds=bounds)
    witness, expanded, complete = _targeted_bfs(program, max_configs, wordlen, target=target)
    bounds["expanded"] = expanded
    if witness is not None:
        return Verdict(FAILS, note, witness=witness, bounds=bounds)
    cap = _finite_word_cap(program)
    if complete and cap is not None and cap <= wordlen:
        return Verdict(HOLDS, note, bounds=bounds)
    return Verdict(UNKNOWN, note, bounds=bounds)


# ---------------------------------------------------------------------------
# Fairness
# ---------------------------------------------------------------------------


def _word_for_posted(lang, posted: Multiset) -> Optional[Tuple]:
    return _word_with_parikh(lang, posted)


def _make_fair_witness(
    program: AsyncProgram,
    configs: Sequence[Configuration],
    letters: Sequence,
    words: Sequence[Tuple],
    split: int,
    starve=None,
) -> Optional[FairWitness]:
    """Validates a candidate lasso end to end; None when any condition
    fails.

    Checks each step against the program, the cycle's state closure and
    buffer growth, that every handler pending on the cycle labels a cycle
    step (the unrolled run is then fair: pending instances are executed
    within one further round, and counts never shrink silently), and the
    starvation conditions for ``starve`` when given.
    """
    configs = list(configs)
    letters = list(letters)
    words = [tuple(w) for w in words]
    if len(configs) != len(letters) + 1 or len(words) != len(letters):
        return None
    if not (0 <= split < len(letters)):
        return None
    if configs[0] != program.initial_configuration:
        return None
    for i, sigma in enumerate(letters):
        c, c2 = configs[i], configs[i + 1]
        if c.buffer[sigma] < 1:
            return None
        lang = program.language(c.state, sigma, c2.state)
        if lang_is_empty(lang) or not lang_member(lang, words[i]):
            return None
        if c2.buffer != c.buffer.remove(sigma) + parikh(words[i]):
            return None
    anchor = configs[split]
    last = configs[-1]
    if last.state != anchor.state or not (anchor.buffer <= last.buffer):
        return None
    cycle_configs = configs[split:]
    cycle_labels = set(letters[split:])
    pending = set()
    for c in cycle_configs:
        pending |= set(c.buffer.support)
    if not pending <= cycle_labels:
        return None
    starved: Set = set()
    if starve is not None:
        if starve not in cycle_labels:
            return None
        if not all(c.buffer[starve] >= 1 for c in cycle_configs):
            return None
        for i in range(split, len(letters)):
            if letters[i] == starve and configs[i].buffer[starve] < 2:
                return None
        starved.add(starve)
    return FairWitness(
        prerun=Prerun(tuple(configs), tuple(letters), is_run=True),
        words=tuple(words),
        split=split,
        starved=frozenset(starved),
    )


def _fair_segment_lasso(
    program: AsyncProgram,
    max_nodes: int,
    wordlen: int,
    starves: Sequence = (None,),
    max_depth: int = 60,
) -> Optional[FairWitness]:
    """Depth-first search for a fair lasso whose cycle may grow the buffer.

    Looks for two path positions with equal state and pointwise-dominating
    buffer whose segment serves every handler pending on it (and satisfies
    the starvation conditions for some requested ``starves`` entry).  The
    plain configuration-graph cycle search only sees segments with exactly
    equal end configurations, so this is the route that catches runs whose
    repetition accumulates pending instances.
    """
    index = program.dispatch_index()
    start = program.initial_configuration

    def out_edges(c: Configuration) -> List[Tuple]:
        out = []
        for sigma in sorted(c.buffer.support, key=skey):
            for (d2, lang) in index.get((c.state, sigma), ()):
                left = c.buffer.remove(sigma)
                for w in lang_words_upto(lang, wordlen):
                    out.append((sigma, w, Configuration(d2, left + parikh(w))))
        return out

    def segment_found(cfgs: List[Configuration], steps: List[Tuple]) -> Optional[Tuple]:
        end = cfgs[-1]
        for i in range(len(cfgs) - 1):
            anchor = cfgs[i]
            if anchor.state != end.state or not (anchor.buffer <= end.buffer):
                continue
            labels = {sigma for (sigma, _w) in steps[i:]}
            pending: Set = set()
            for c in cfgs[i:]:
                pending |= c.buffer.support
            if not pending <= labels:
                continue
            for starve in starves:
                if starve is None:
                    return (i, None)
                if starve not in labels:
                    continue
                if not all(c.buffer[starve] >= 1 for c in cfgs[i:]):
                    continue
                if any(
                    sigma == starve and cfgs[k].buffer[starve] < 2
                    for k, (sigma, _w) in enumerate(steps[i:], start=i)
                ):
                    continue
                return (i, starve)
        return None

    seen = {start}
    cfgs: List[Configuration] = [start]
    steps: List[Tuple] = []
    stack: List[Iterable] = [iter(out_edges(start))]
    while stack:
        step = next(stack[-1], None)
        if step is None:
            stack.pop()
            cfgs.pop()
            if steps:
                steps.pop()
            continue
        (sigma, w, c2) = step
        cfgs.append(c2)
        steps.append((sigma, w))
        hit = segment_found(cfgs, steps)
        if hit is not None:
            (split, starve) = hit
            fw = _make_fair_witness(
                program,
                cfgs,
                [s for (s, _w) in steps],
                [w2 for (_s, w2) in steps],
                split,
                starve=starve,
            )
            if fw is not None:
                return fw
        if c2 in seen or len(seen) >= max_nodes or len(cfgs) > max_depth:
            cfgs.pop()
            steps.pop()
            continue
        seen.add(c2)
        stack.append(iter(out_edges(c2)))
    return None


def _lasso_to_witness(program: AsyncProgram, lasso, starve=None) -> Optional[FairWitness]:
    """Converts a configuration-graph lasso into a validated FairWitness."""
    edges = list(lasso.stem) + list(lasso.cycle)
    configs = [edges[0][0]] if edges else [program.initial_configuration]
    letters: List = []
    words: List[Tuple] = []
    for (c, sigma, posted, c2) in edges:
        lang = program.language(c.state, sigma, c2.state)
        w = _word_for_posted(lang, posted)
        if w is None:
            return None
        configs.append(c2)
        letters.append(sigma)
        words.append(w)
    return _make_fair_witness(program, configs, letters, words, len(lasso.stem), starve=starve)


def _assign_run(
    program: AsyncProgram,
    start: Configuration,
    pairs: Sequence[Tuple],
    end_state=None,
) -> Optional[Tuple[List[Configuration], List[Tuple]]]:
    """Finds contexts and words realizing ``(handler, posted)`` steps.

    Depth-first over the (usually unique) context choices; returns the
    configuration chain and words, or None when no assignment replays.
    """
    index = program.dispatch_index()

    def go(i: int, cfg: Configuration) -> Optional[Tuple[List[Configuration], List[Tuple]]]:
        if i == len(pairs):
            if end_state is not None and cfg.state != end_state:
                return None
            return ([], [])
        (sigma, posted) = pairs[i]
        if cfg.buffer[sigma] < 1:
            return None
        for (d2, lang) in index.get((cfg.state, sigma), ()):
            w = _word_for_posted(lang, posted)
            if w is None:
                continue
            nxt = Configuration(d2, cfg.buffer.remove(sigma) + posted)
            rest = go(i + 1, nxt)
            if rest is not None:
                return ([nxt] + rest[0], [w] + rest[1])
        return None

    return go(0, start)


def _reconstruct_lasso(
    program: AsyncProgram,
    stem_pairs: Sequence[Tuple],
    cycle_pairs: Sequence[Tuple],
    starve=None,
) -> Optional[FairWitness]:
    if not cycle_pairs:
        return None
    start = program.initial_configuration
    stem = _assign_run(program, start, stem_pairs)
    if stem is None:
        return None
    anchor = stem[0][-1] if stem[0] else start
    cycle = _assign_run(program, anchor, cycle_pairs, end_state=anchor.state)
    if cycle is None:
        return None
    configs = [start] + stem[0] + cycle[0]
    letters = [sigma for (sigma, _posted) in list(stem_pairs) + list(cycle_pairs)]
    words = stem[1] + cycle[1]
    return _make_fair_witness(
        program, configs, letters, words, len(stem_pairs), starve=starve
    )


def _witness_as_steps(witness: RunWitness) -> List[Tuple]:
    """Gadget-run steps ``(handler, posted, configuration)`` from a
    reachability witness."""
    prerun = witness.prerun
    out = []
    for i, sigma in enumerate(prerun.letters):
        out.append((sigma, parikh(witness.words[i]), prerun.configs[i + 1]))
    return out


def _subsets_by_size(letters: Sequence) -> List[Tuple]:
    out: List[Tuple] = []
    base = sorted(letters, key=skey)
    for size in range(len(base) + 1):
        for combo in combinations(base, size):
            out.append(combo)
    return out


def check_fair_nontermination(
    program: AsyncProgram,
    *,
    max_configs: int = DEFAULT_MAX_CONFIGS,
    wordlen: int = DEFAULT_WORDLEN,
    node_cap: int = 50_000,
) -> Verdict:
    """Does every fair run terminate?

    FAILS carries a validated fair lasso of the program itself — found
    either directly in the bounded configuration graph or reconstructed
    from a reachability witness of the starvation gadget applied to the
    program extended with an always-pending marker handler.  HOLDS comes
    from the marker-handler route when every pump-set/marker pair's gadget
    target is unreachable (sound because a fair infinite run would make
    some such target reachable), or from an exhaustively explored finite
    configuration graph without a fair cycle.  Reachable gadget targets
    whose projections do not verify give UNKNOWN, never FAILS.
    """
    note = "HOLDS = every fair run is finite"
    if len(program.alphabet) > MAX_FAIR_ALPHABET:
        raise InputError(
            f"fairness checks support at most {MAX_FAIR_ALPHABET} handlers, "
            f"got {len(program.alphabet)}"
        )
    bounds: Dict = {"max_configs": max_configs, "wordlen": wordlen}
    graph = explore(program, max_configs, wordlen)
    lasso = find_fair_lasso(graph)
    if lasso is not None:
        fw = _lasso_to_witness(program, lasso)
        if fw is not None:
            bounds["route"] = "configuration graph"
            return Verdict(FAILS, note, witness=fw, bounds=bounds)
    cap = _finite_word_cap(program)
    if graph.complete and cap is not None and cap <= wordlen:
        bounds["route"] = "exhausted configuration graph"
        return Verdict(HOLDS, note, bounds=bounds)
    fw = _fair_segment_lasso(program, max_configs, wordlen)
    if fw is not None:
        bounds["route"] = "growing segment"
        return Verdict(FAILS, note, witness=fw, bounds=bounds)

    marked = fairnt_to_starvation(program)
    s = marked.info["s"]
    subsets = _subsets_by_size(sorted(program.alphabet, key=skey))
    npairs = len(subsets)
    per_configs = max(800, max_configs // npairs)
    per_nodes = max(2000, node_cap // npairs)
    bounds["pairs"] = npairs
    bounds["per_pair_configs"] = per_configs
    all_unreachable = True
    for subset in subsets:
        gamma = frozenset(subset) | {s}
        gadget = starvation_to_reach(marked.program, gamma, s)
        r = check_config_reachability(
            gadget.program,
            gadget.target,
            max_configs=per_configs,
            wordlen=wordlen,
            node_cap=per_nodes,
        )
        if r.outcome == HOLDS:
            continue
        all_unreachable = False
        if r.outcome == FAILS:
            try:
                proj = project_starvation_steps(gadget, _witness_as_steps(r.witness))
            except InputError:
                continue
            if not proj["complete"]:
                continue
            stem_pairs = strip_letter_steps(proj["phase1"], s)
            cycle_pairs = strip_letter_steps(proj["phase2"], s)
            fw = _reconstruct_lasso(program, stem_pairs, cycle_pairs)
            if fw is not None:
                bounds["route"] = "starvation gadget"
                return Verdict(FAILS, note, witness=fw, bounds=bounds)
    if all_unreachable:
        bounds["route"] = "starvation gadget"
        return Verdict(HOLDS, note, bounds=bounds)
    return Verdict(UNKNOWN, note, bounds=bounds)


def check_fair_starvation(
    program: AsyncProgram,
    *,
    max_configs: int = DEFAULT_MAX_CONFIGS,
    wordlen: int = DEFAULT_WORDLEN,
    node_cap: int = 50_000,
) -> Verdict:
    """Can a fair run keep one instance of some handler pending forever?

    HOLDS means no fair run starves any handler.  FAILS carries a
    validated starving fair lasso: the starved handler stays pending at
    every cycle configuration and every cycle execution of it leaves from
    at least two pending instances.  The search runs a direct lasso pass
    over the bounded configuration graph, then the reachability gadget per
    (pump set, starved handler) pair — only pairs with the starved handler
    inside the pump set matter, since a starved handler is pending forever
    and, by fairness, executed infinitely often.
    """
    note = "HOLDS = no fair run starves a handler"
    if len(program.alphabet) > MAX_FAIR_ALPHABET:
        raise InputError(
            f"fairness checks support at most {MAX_FAIR_ALPHABET} handlers, "
            f"got {len(program.alphabet)}"
        )
    bounds: Dict = {"max_configs": max_configs, "wordlen": wordlen}
    graph = explore(program, max_configs, wordlen)
    for tau in sorted(program.alphabet, key=skey):
        lasso = find_fair_lasso(graph, starve=tau)
        if lasso is None:
            continue
        fw = _lasso_to_witness(program, lasso, starve=tau)
        if fw is not None:
            bounds["route"] = "configuration graph"
            return Verdict(FAILS, note, witness=fw, bounds=bounds)
    cap = _finite_word_cap(program)
    if graph.complete and cap is not None and cap <= wordlen:
        bounds["route"] = "exhausted configuration graph"
        return Verdict(HOLDS, note, bounds=bounds)
    fw = _fair_segment_lasso(
        program, max_configs, wordlen, starves=sorted(program.alphabet, key=skey)
    )
    if fw is not None:
        bounds["route"] = "growing segment"
        return Verdict(FAILS, note, witness=fw, bounds=bounds)

    pairs: List[Tuple] = []
    for subset in _subsets_by_size(sorted(program.alphabet, key=skey)):
        if not subset:
            continue
        for tau in subset:
            pairs.append((frozenset(subset), tau))
    npairs = max(1, len(pairs))
    per_configs = max(800, max_configs // npairs)
    per_nodes = max(2000, node_cap // npairs)
    bounds["pairs"] = npairs
    bounds["per_pair_configs"] = per_configs
    all_unreachable = True
    for (gamma, tau) in pairs:
        gadget = starvation_to_reach(program, gamma, tau)
        r = check_config_reachability(
            gadget.program,
            gadget.target,
            max_configs=per_configs,
            wordlen=wordlen,
            node_cap=per_nodes,
        )
        if r.outcome == HOLDS:
            continue
        all_unreachable = False
        if r.outcome == FAILS:
            try:
                proj = project_starvation_steps(gadget, _witness_as_steps(r.witness))
            except InputError:
                continue
            if not proj["complete"]:
                continue
            fw = _reconstruct_lasso(program, proj["phase1"], proj["phase2"], starve=tau)
            if fw is not None:
                bounds["route"] = "starvation gadget"
                return Verdict(FAILS, note, witness=fw, bounds=bounds)
    if all_unreachable:
        bounds["route"] = "starvation gadget"
        return Verdict(HOLDS, note, bounds=bounds)
    return Verdict(UNKNOWN, note, bounds=bounds)


# ---------------------------------------------------------------------------
# Balanced-word intersection
# ---------------------------------------------------------------------------


def _balanced(word: Sequence) -> bool:
    w = tuple(word)
    return w.count("a") == w.count("b")


def z_intersection(
    k,
    *,
    max_configs: int = DEFAULT_MAX_CONFIGS,
    wordlen: int = DEFAULT_WORDLEN,
    node_cap: int = 50_000,
    scan_len: int = 24,
    cross_check: bool = True,
) -> Verdict:
    """Does ``k`` (over {a, b}) contain a word with #a = #b?

    FAILS = yes, with a witness word; HOLDS = no.  The primary route feeds
    the language into a two-state consumer program and asks whether it can
    drain its buffer completely; for regular ``k`` an exact product with a
    one-counter acceptor settles the question either way (and cross-checks
    the program route), while for pushdown ``k`` only the positive side is
    semi-decided and UNKNOWN is possible.
    """
    note = "HOLDS = no member has equally many a's and b's"
    alphabet = lang_alphabet(k)
    if not alphabet <= {"a", "b"}:
        raise InputError(f"alphabet must be within {{a, b}}, got {sorted(alphabet, key=skey)}")
    bounds: Dict = {"max_configs": max_configs, "wordlen": wordlen}
    if not isinstance(k, (Nfa, Pda, SimplePda)):
        for w in sorted(k, key=lambda v: (len(v), skey(v))):
            if _balanced(w):
                return Verdict(FAILS, note, witness=tuple(w), bounds=bounds)
        return Verdict(HOLDS, note, bounds=bounds)

    gadget = zint_to_reach(k)
    r = check_config_reachability(
        gadget.program,
        gadget.target,
        max_configs=max_configs,
        wordlen=max(wordlen, 2),
        node_cap=node_cap,
    )
    gadget_outcome = r.outcome
    gadget_word: Optional[Tuple] = None
    if gadget_outcome == FAILS:
        gadget_word = tuple(r.witness.words[0])
        if not (_balanced(gadget_word) and lang_member(k, gadget_word)):
            raise ApvError("internal: program route produced an invalid balanced word")

    if isinstance(k, Nfa):
        exact_word = _nfa_balanced_word(k)
        if cross_check and gadget_outcome != UNKNOWN:
            if (gadget_outcome == FAILS) != (exact_word is not None):
                raise ApvError("internal: program route and counter product disagree")
        if exact_word is not None:
            return Verdict(FAILS, note, witness=exact_word, bounds=bounds)
        return Verdict(HOLDS, note, bounds=bounds)

    if gadget_outcome == FAILS:
        return Verdict(FAILS, note, witness=gadget_word, bounds=bounds)
    if gadget_outcome == HOLDS:
        return Verdict(HOLDS, note, bounds=bounds)
    for w in pda_words_upto(k, scan_len):
        if _balanced(w):
            return Verdict(FAILS, note, witness=tuple(w), bounds=bounds)
    bounds["scan_len"] = scan_len
    return Verdict(UNKNOWN, note, bounds=bounds)


def _nfa_balanced_word(nfa: Nfa) -> Optional[Tuple]:
    """Exact search for an accepted word with #a = #b.

    Breadth-first over (state, imbalance).  A shortest balanced witness
    never repeats a (state, imbalance) pair — a repeat delimits an infix
    with zero net imbalance that could be cut — so each imbalance level
    holds at most |Q| positions and levels beyond |Q|^2 + 1 cannot all be
    crossed; clipping the imbalance there keeps the search exact.
    """
    cap = len(nfa.states) ** 2 + 2
    start = (nfa.initial, 0)
    parent: Dict[Tuple, Optional[Tuple]] = {start: None}
    queue = deque([start])
    by_src: Dict = {}
    for (p, a, q) in sorted(nfa.transitions, key=skey):
        by_src.setdefault(p, []).append((a, q))
    while queue:
        (state, imb) = queue.popleft()
        if imb == 0 and state in nfa.finals:
            out: List = []
            cur = (state, imb)
            while parent[cur] is not None:
                prev, letter = parent[cur]
                if letter is not None:
                    out.append(letter)
                cur = prev
            return tuple(reversed(out))
        for (a, q) in by_src.get(state, ()):
            nimb = imb + (1 if a == "a" else -1 if a == "b" else 0)
            if abs(nimb) > cap:
                continue
            nxt = (q, nimb)
            if nxt not in parent:
                parent[nxt] = ((state, imb), a)
                queue.append(nxt)
    return None


# ---------------------------------------------------------------------------
# Enumerative procedures
# ---------------------------------------------------------------------------


def _canonical_partial_dfa(n: int, alphabet: Tuple, transitions: Tuple) -> bool:
    """True when breadth-first discovery from state 0, following letters in
    alphabet order, numbers the states 0, 1, 2, ... — the canonical
    representative of each isomorphism class of connected machines."""
    step = {(p, a): q for (p, a, q) in transitions}
    order = [0]
    seen = {0}
    queue = deque([0])
    while queue:
        p = queue.popleft()
        for a in alphabet:
            q = step.get((p, a))
            if q is None or q in seen:
                continue
            if q != len(order):
                return False
            order.append(q)
            seen.add(q)
            queue.append(q)
    return len(order) == n


_DFA_CACHE: Dict = {}


def _partial_dfas(alphabet: Tuple, size: int) -> List[Nfa]:
    """All canonical connected partial deterministic automata of the given
    total size (states + transitions), in a fixed enumeration order."""
    key = (alphabet, size)
    cached = _DFA_CACHE.get(key)
    if cached is not None:
        return cached
    out: List[Nfa] = []
    for n in range(1, size + 1):
        t = size - n
        if t < 0 or t > n * len(alphabet) or n > t + 1:
            continue
        slots = [(i, a) for i in range(n) for a in alphabet]
        for chosen in combinations(slots, t):
            for targets in product(range(n), repeat=t):
                transitions = tuple(
                    (src, a, dst) for ((src, a), dst) in zip(chosen, targets)
                )
                if not _canonical_partial_dfa(n, alphabet, transitions):
                    continue
                for mask in range(2 ** n):
                    finals = frozenset(i for i in range(n) if (mask >> i) & 1)
                    out.append(
                        Nfa(
                            states=frozenset(range(n)),
                            alphabet=frozenset(alphabet),
                            transitions=frozenset(transitions),
                            initial=0,
                            finals=finals,
                        )
                    )
    _DFA_CACHE[key] = out
    return out


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _candidate_tuples(alphabets: List[Tuple], cap: int):
    """Tuples of candidate automata, one per context, enumerated by total
    size, then by the size split, then lexicographically; stops after
    ``cap`` tuples."""
    m = len(alphabets)
    count = 0
    total = m
    while count < cap:
        for split in _compositions(total, m):
            pools = [_partial_dfas(alphabets[i], split[i]) for i in range(m)]
            if any(not pool for pool in pools):
                continue
            for combo in product(*pools):
                yield combo
                count += 1
                if count >= cap:
                    return
        total += 1


def _complement_dfa(dfa: Nfa, alphabet: FrozenSet) -> Nfa:
    n = len(dfa.states)
    step = {(p, a): q for (p, a, q) in dfa.transitions}
    transitions = set()
    for p in range(n + 1):
        for a in alphabet:
            transitions.add((p, a, step.get((p, a), n) if p < n else n))
    finals = frozenset(q for q in range(n + 1) if q not in dfa.finals)
    return Nfa(
        states=frozenset(range(n + 1)),
        alphabet=frozenset(alphabet),
        transitions=frozenset(transitions),
        initial=0,
        finals=finals,
    )


def _lang_subset(lang, dfa: Nfa) -> bool:
    """Is the handler language included in the candidate automaton's?"""
    if not isinstance(lang, (Nfa, Pda, SimplePda)):
        return all(nfa_member(dfa, w) for w in lang)
    alphabet = frozenset(dfa.alphabet) | frozenset(lang_alphabet(lang))
    comp = _complement_dfa(dfa, alphabet)
    if isinstance(lang, Nfa):
        return nfa_is_empty(nfa_intersect(lang, comp))
    return pda_is_empty(intersect_regular(lang, comp))


def _overapprox_pass(program: AsyncProgram, candidate_cap: int, decide) -> Optional[Verdict]:
    """Enumerates tuples of regular overapproximations; the first tuple
    that contains every handler language and whose regular program
    satisfies the property proves the property for the program."""
    ctxs = [
        ctx
        for ctx in sorted(program.languages, key=skey)
        if not lang_is_empty(program.languages[ctx])
    ]
    rest = {
        ctx: program.languages[ctx]
        for ctx in program.languages
        if ctx not in set(ctxs)
    }
    alphabets = [tuple(sorted(lang_alphabet(program.languages[ctx]), key=skey)) for ctx in ctxs]
    used = 0
    if not ctxs:
        candidate = AsyncProgram(
            states=program.states,
            alphabet=program.alphabet,
            languages=rest,
            initial=program.initial,
            initial_buffer=program.initial_buffer,
        )
        v = decide(candidate)
        if v is not None and v.outcome == HOLDS:
            return Verdict(v.outcome, v.note, bounds={"candidates": 1})
        return None
    for combo in _candidate_tuples(alphabets, candidate_cap):
        used += 1
        if not all(_lang_subset(program.languages[ctx], dfa) for ctx, dfa in zip(ctxs, combo)):
            continue
        languages = dict(rest)
        for ctx, dfa in zip(ctxs, combo):
            languages[ctx] = dfa
        candidate = AsyncProgram(
            states=program.states,
            alphabet=program.alphabet,
            languages=languages,
            initial=program.initial,
            initial_buffer=program.initial_buffer,
        )
        v = decide(candidate)
        if v is not None and v.outcome == HOLDS:
            return Verdict(v.outcome, v.note, bounds={"candidates": used})
    return None


def check_safety_enumerative(
    program: AsyncProgram,
    target_state,
    *,
    candidate_cap: int = 10_000,
    max_configs: int = DEFAULT_MAX_CONFIGS,
    wordlen: int = DEFAULT_WORDLEN,
) -> Verdict:
    """Two-sided enumeration for safety.

    One side searches bounded runs for the target state (refuting safety
    with a witness); the other enumerates tuples of regular candidate
    languages in canonical order (total automaton size, then shape), keeps
    those containing the handler languages, and accepts when the resulting
    regular program is safe.  Both sides are bounded, so the answer can be
    UNKNOWN; a produced verdict never contradicts :func:`check_safety`.
    """
    note = "HOLDS = the target global state is unreachable"
    if target_state not in program.states:
        raise InputError(f"unknown target state: {target_state!r}")
    witness, _expanded, complete = _targeted_bfs(
        program, max_configs, wordlen, target_state=target_state
    )
    if witness is not None:
        return Verdict(FAILS, note, witness=witness, bounds={"max_configs": max_configs})

    def decide(candidate: AsyncProgram) -> Optional[Verdict]:
        try:
            return check_safety(candidate, target_state, node_cap=20_000)
        except ResourceLimit:
            return None

    found = _overapprox_pass(program, candidate_cap, decide)
    if found is not None:
        return Verdict(HOLDS, note, bounds=found.bounds)
    cap = _finite_word_cap(program)
    if complete and cap is not None and cap <= wordlen:
        return Verdict(HOLDS, note, bounds={"max_configs": max_configs})
    return Verdict(
        UNKNOWN, note, bounds={"candidates": candidate_cap, "max_configs": max_configs}
    )


def _self_cover_in_graph(program: AsyncProgram, max_configs: int, wordlen: int):
    """A genuine self-covering run found by bounded search: a path from the
    initial configuration containing two configurations with equal state
    and pointwise-growing buffer."""
    index = program.dispatch_index()
    start = program.initial_configuration

    def out_edges(c: Configuration) -> List[Tuple]:
        out = []
        for sigma in sorted(c.buffer.support, key=skey):
            for (d2, lang) in index.get((c.state, sigma), ()):
                left = c.buffer.remove(sigma)
                for w in lang_words_upto(lang, wordlen):
                    out.append((c, sigma, w, Configuration(d2, left + parikh(w))))
        return out

    seen = {start}
    stack: List[Tuple[Configuration, Iterable]] = [(start, iter(out_edges(start)))]
    path_edges: List[Tuple] = []
    while stack:
        node, it = stack[-1]
        step = next(it, None)
        if step is None:
            stack.pop()
            if path_edges:
                path_edges.pop()
            continue
        c2 = step[3]
        chain = [n for (n, _it) in stack] + [c2]
        for i, anc in enumerate(chain[:-1]):
            if anc.state == c2.state and anc.buffer <= c2.buffer:
                return path_edges[:i] + [], path_edges[i:] + [step]
        if c2 in seen or len(seen) >= max_configs:
            continue
        seen.add(c2)
        stack.append((c2, iter(out_edges(c2))))
        path_edges.append(step)
    return None


def check_termination_enumerative(
    program: AsyncProgram,
    *,
    candidate_cap: int = 10_000,
    max_configs: int = DEFAULT_MAX_CONFIGS,
    wordlen: int = DEFAULT_WORDLEN,
) -> Verdict:
    """Two-sided enumeration for termination: bounded search for a
    self-covering run against enumeration of terminating regular
    overapproximations."""
    note = "HOLDS = every run is finite"
    found = _self_cover_in_graph(program, max_configs, wordlen)
    if found is not None:
        stem_edges, cycle_edges = found
        edges = stem_edges + cycle_edges
        configs = [program.initial_configuration] + [e[3] for e in edges]
        witness = SelfCoveringRun(
            prerun=Prerun(tuple(configs), tuple(e[1] for e in edges), is_run=True),
            words=tuple(e[2] for e in edges),
            split=len(stem_edges),
        )
        return Verdict(FAILS, note, witness=witness, bounds={"max_configs": max_configs})

    def decide(candidate: AsyncProgram) -> Optional[Verdict]:
        try:
            return check_termination(candidate, node_cap=20_000, graph_cap=20_000)
        except ResourceLimit:
            return None

    hit = _overapprox_pass(program, candidate_cap, decide)
    if hit is not None:
        return Verdict(HOLDS, note, bounds=hit.bounds)
    return Verdict(
        UNKNOWN, note, bounds={"candidates": candidate_cap, "max_configs": max_configs}
    )


def check_boundedness_enumerative(
    program: AsyncProgram,
    *,
    word_cap: int = 16,
    node_cap: int = 100_000,
) -> Verdict:
    """Boundedness by context classification.

    Contexts with infinite languages refute boundedness as soon as they are
    dispatchable in some reachable configuration — reachability of a
    context is itself a safety question about a program extended with a
    probe state entered by that dispatch.  When every infinite context is
    unreachable, the finite languages are materialized as explicit word
    sets (each member confirmed by a membership test) and the exact checker
    decides the finite-language program.
    """
    note = "HOLDS = pending-task counts are uniformly bounded"
    probe = ("probe",)
    while probe in program.states:
        probe = probe + ("probe",)
    materialized: Dict = {}
    for ctx in sorted(program.languages, key=skey):
        lang = program.languages[ctx]
        if lang_is_empty(lang):
            materialized[ctx] = frozenset()
            continue
        if not lang_is_finite(lang):
            extended = AsyncProgram(
                states=program.states | {probe},
                alphabet=program.alphabet,
                languages={**program.languages, (ctx[0], ctx[1], probe): frozenset({()})},
                initial=program.initial,
                initial_buffer=program.initial_buffer,
            )
            v = check_safety(extended, probe, node_cap=node_cap)
            if v.outcome == FAILS:
                prerun = v.witness.prerun
                stem = Prerun(prerun.configs[:-1], prerun.letters[:-1], is_run=True)
                down_lang = lang_downclose(lang)
                ideals = [i for i in _ideals_of_language(down_lang) if i.pumpable]
                witness = PumpWitness(
                    prerun=stem,
                    words=v.witness.words[:-1],
                    context=ctx,
                    ideal=ideals[0],
                    downclosed=v.witness.downclosed,
                )
                return Verdict(
                    FAILS, note, witness=witness, bounds={"infinite_context": list(ctx)}
                )
            materialized[ctx] = frozenset()
            continue
        if isinstance(lang, (Pda, SimplePda)):
            return Verdict(
                UNKNOWN,
                note,
                bounds={"reason": "finite pushdown language without a computed length bound"},
            )
        if isinstance(lang, Nfa):
            words = [w for w in lang_words_upto(lang, len(lang.states)) if lang_member(lang, w)]
            materialized[ctx] = frozenset(words)
        else:
            materialized[ctx] = frozenset(tuple(w) for w in lang)
    finite_program = AsyncProgram(
        states=program.states,
        alphabet=program.alphabet,
        languages=materialized,
        initial=program.initial,
        initial_buffer=program.initial_buffer,
    )
    v = check_boundedness(finite_program, node_cap=node_cap)
    return Verdict(v.outcome, note, witness=v.witness, bounds=v.bounds)


# ---------------------------------------------------------------------------
# Witness replay
# ---------------------------------------------------------------------------


def replay_witness(program: AsyncProgram, witness) -> bool:
    """Validates a witness against the program semantics.

    Checks every step (one pending instance consumed, a handler word's
    Parikh image posted, the word a member of the context's language) plus
    the shape condition of the witness kind: state closure and buffer
    domination for self-covering runs and lassos, fairness and starvation
    conditions for fair lassos.  Witnesses marked ``downclosed`` replay
    against the downward-closed program.
    """
    if isinstance(witness, FairWitness):
        return (
            _make_fair_witness(
                program,
                witness.prerun.configs,
                witness.prerun.letters,
                witness.words,
                witness.split,
                starve=min(witness.starved, key=skey) if witness.starved else None,
            )
            is not None
        )
    base = downclose_ap(program) if getattr(witness, "downclosed", False) else program
    prerun = witness.prerun
    words = witness.words
    if len(prerun.configs) != len(words) + 1 or prerun.configs[0] != base.initial_configuration:
        return False
    for i, sigma in enumerate(prerun.letters):
        c, c2 = prerun.configs[i], prerun.configs[i + 1]
        if c.buffer[sigma] < 1:
            return False
        lang = base.language(c.state, sigma, c2.state)
        if lang_is_empty(lang) or not lang_member(lang, words[i]):
            return False
        if c2.buffer != c.buffer.remove(sigma) + parikh(words[i]):
            return False
    if isinstance(witness, SelfCoveringRun):
        a = prerun.configs[witness.split]
        b = prerun.configs[-1]
        if a.state != b.state or not (a.buffer <= b.buffer):
            return False
        if witness.strict and a.buffer == b.buffer:
            return False
    if isinstance(witness, PumpWitness):
        (_d, sigma, _d2) = witness.context
        if prerun.configs[-1].buffer[sigma] < 1:
            return False
        if not witness.ideal.pumpable:
            return False
    return True
