"""Downward closures of pushdown languages, in polynomial time.

The pipeline around a pushdown automaton A with state set Q:

* :func:`m_pq_pda` builds, for a state pair (p, q), an automaton for the
  set M of words readable on a run that starts at p with an empty stack,
  returns to p leaving some stack v, such that v can then be silently
  consumed from q back to q.  Its letter set :func:`delta_alphabet` says
  which letters can occur while such surplus stack is built.
* :func:`dual` reverses a pushdown automaton (and each regular edge
  label), swapping pushes with pops, so its language is the reversal.
* :func:`augment` adds, per ordered state pair (p, q), a fresh stack
  symbol and two self-loop edges — a push loop at p reading any word over
  delta(p, q) and a pop loop at q reading any word over the dual's
  delta(q, p).  The augmented automaton accepts a language squeezed
  between L(A) and its downward closure, and every word it accepts is
  already accepted using stack height at most :func:`stack_bound`
  = 2|Q|^2.
* :func:`downclosure_nfa` produces a finite automaton for the downward
  closure of L(A) directly, working on the run-pair grammar of A: each
  strongly connected component of the grammar's nonterminal graph
  contributes either a letters-star language (components with a
  two-occurrence production), a star–exit–star sandwich (other cyclic
  components), or a plain union of downclosed bodies.
* :func:`pda_to_bounded_pn` turns the augmented automaton into a labeled
  Petri net that is 1-bounded by construction and accepts exactly the
  downward closure, encoding the bounded stack into height-indexed
  places.
* :func:`ideal_decomposition` decomposes the Parikh image of a
  downward-closed regular language into finitely many ideals, each a base
  multiset plus a set of pumpable letters.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from .automata import (
    Nfa,
    nfa_downclosure,
    nfa_empty,
    nfa_eps,
    nfa_concat,
    nfa_is_empty,
    nfa_letter_opt,
    nfa_letters_star,
    nfa_rename,
    nfa_reverse,
    nfa_star,
    nfa_trim,
    nfa_union,
    nfa_word,
    skey,
    tarjan_scc,
)
from .cfg import Grammar, is_empty as grammar_is_empty, nt_letters, trim as grammar_trim
from .errors import InputError, ResourceLimit
from .multiset import Multiset, parikh
from .pda import (
    Pda,
    SimplePda,
    add_eps_twins,
    as_simple,
    letter_normalize,
    pair_grammar,
    simple_to_pda,
    simple_trim,
    single_final,
)
from .petrinet import LabeledPetriNet, Transition

__all__ = [
    "AugmentedPda",
    "PostIdeal",
    "augment",
    "delta_alphabet",
    "downclosure_nfa",
    "dual",
    "ideal_decomposition",
    "m_pq_pda",
    "nfa_downclosure",
    "pda_to_bounded_pn",
    "stack_bound",
]


def _as_pda(x) -> Pda:
    if isinstance(x, Pda):
        return x
    if isinstance(x, SimplePda):
        return simple_to_pda(x)
    raise InputError(f"expected a pushdown automaton, got {type(x).__name__}")


def _flip(op):
    if op is None:
        return None
    kind, symbol = op
    return (("pop", symbol) if kind == "push" else ("push", symbol))


def dual(x) -> Pda:
    """The reversal automaton: L(dual(A)) = {reverse(w) : w in L(A)}.

    Every edge is reversed, its label language reversed, and its stack
    operation flipped (push becomes pop and vice versa), so a run of the
    dual replays a run of A backwards; empty-stack acceptance is preserved.
    """
    a = _as_pda(x)
    edges = set()
    for (p, label, op, q) in a.edges:
        edges.add((q, nfa_reverse(label), _flip(op), p))
    finals = sorted(a.finals, key=skey)
    if len(finals) == 1:
        initial = finals[0]
        states = set(a.states)
    else:
        initial = ("dual-init",)
        while initial in a.states:
            initial = initial + ("*",)
        states = set(a.states) | {initial}
        for f in finals:
            edges.add((initial, nfa_eps(a.input_alphabet), None, f))
    return Pda(
        states=frozenset(states),
        input_alphabet=a.input_alphabet,
        stack_alphabet=a.stack_alphabet,
        edges=frozenset(edges),
        initial=initial,
        finals=frozenset([a.initial]),
    )


def m_pq_pda(x, p, q) -> Pda:
    """Words readable from p back to p whose surplus stack q can consume.

    Two copies of A: copy one reads input as usual and hosts the growing
    phase from p; copy two has every label erased (the shrinking phase is
    silent) and must return to q with an empty stack.  A silent bridge
    connects p in copy one to q in copy two, carrying the surplus stack
    across unchanged.
    """
    a = _as_pda(x)
    if p not in a.states or q not in a.states:
        raise InputError(f"states {p!r}, {q!r} must belong to the automaton")
    eps = nfa_eps(a.input_alphabet)
    edges = set()
    for (s, label, op, t) in a.edges:
        edges.add(((("m1", s)), label, op, ("m1", t)))
        if not nfa_is_empty(label):
            edges.add(((("m2", s)), eps, op, ("m2", t)))
    edges.add((("m1", p), eps, None, ("m2", q)))
    states = {("m1", s) for s in a.states} | {("m2", s) for s in a.states}
    return Pda(
        states=frozenset(states),
        input_alphabet=a.input_alphabet,
        stack_alphabet=a.stack_alphabet,
        edges=frozenset(edges),
        initial=("m1", p),
        finals=frozenset([("m2", q)]),
    )


@functools.lru_cache(maxsize=16384)
def _delta_cached(a: Pda, p, q) -> FrozenSet:
    m = m_pq_pda(a, p, q)
    g = grammar_trim(pair_grammar(simple_trim(as_simple(m))))
    if grammar_is_empty(g):
        return frozenset()
    return frozenset(nt_letters(g).get(g.start, frozenset()))


def delta_alphabet(x, p, q) -> FrozenSet:
    """Letters occurring in some word of the (p, q) surplus-stack language.

    A letter a belongs to the result exactly when the language of
    :func:`m_pq_pda` meets Sigma* a Sigma*; the letter sets are read off
    the trimmed run-pair grammar, whose per-nonterminal letters are
    precisely the letters realizable in derivable words.  Results are
    memoized per (automaton, p, q).
    """
    return _delta_cached(_as_pda(x), p, q)


def stack_bound(x) -> int:
    """The height bound 2|Q|^2 under which the augmented automaton is complete.

    Q is the state set of the input automaton (the augmentation adds edges
    and stack symbols but no states).
    """
    a = x if isinstance(x, (Pda, SimplePda)) else _as_pda(x)
    return 2 * len(a.states) ** 2


@dataclass(frozen=True)
class AugmentedPda:
    """A pushdown automaton extended with per-pair surplus-stack loops.

    `pda` has the same states as `source`; its stack alphabet adds one
    fresh symbol ("pair", p, q) per ordered state pair, pushed in a
    self-loop at p (reading words over delta(p, q)) and popped in a
    self-loop at q (reading words over the dual's delta(q, p)).  Removing
    those two edges per pair and the fresh symbols recovers `source`
    exactly.  Every accepted word is accepted within stack height
    `bound` = 2|Q|^2.
    """

    pda: Pda
    source: Pda
    bound: int
    pair_symbols: FrozenSet

    def strip(self) -> Pda:
        return self.source


def augment(x) -> AugmentedPda:
    a = _as_pda(x)
    d = dual(a)
    states = sorted(a.states, key=skey)
    sigma = a.input_alphabet
    edges = set(a.edges)
    pair_symbols = set()
    for p in states:
        for q in states:
            symbol = ("pair", p, q)
            if symbol in a.stack_alphabet:
                raise InputError(f"stack symbol {symbol!r} collides with the augmentation")
            pair_symbols.add(symbol)
            up = delta_alphabet(a, p, q)
            down = delta_alphabet(d, q, p)
            edges.add((p, nfa_letters_star(up, sigma), ("push", symbol), p))
            edges.add((q, nfa_letters_star(down, sigma), ("pop", symbol), q))
    aug = Pda(
        states=a.states,
        input_alphabet=sigma,
        stack_alphabet=a.stack_alphabet | frozenset(pair_symbols),
        edges=frozenset(edges),
        initial=a.initial,
        finals=a.finals,
    )
    return AugmentedPda(
        pda=aug, source=a, bound=stack_bound(a), pair_symbols=frozenset(pair_symbols)
    )


# ---------------------------------------------------------------------------
# Downward closure as a finite automaton
# ---------------------------------------------------------------------------


def _part_nfa(body, built: Dict, nonterminals, sigma) -> Nfa:
    """Downclosed concatenation of a production-body slice."""
    pieces = []
    for symbol in body:
        if symbol in nonterminals:
            pieces.append(built[symbol])
        else:
            pieces.append(nfa_letter_opt(symbol, sigma))
    if not pieces:
        return nfa_eps(sigma)
    if len(pieces) == 1:
        return pieces[0]
    return nfa_concat(pieces)


def downclosure_nfa(x) -> Nfa:
    """A finite automaton accepting exactly the downward closure of L(A).

    Works on the run-pair grammar of A, bottom-up over the strongly
    connected components of its nonterminal graph:

    * a component with a production carrying two or more same-component
      occurrences derives sentential forms with unboundedly many component
      occurrences in sequence, so each member's downclosure is the star of
      its letter set (the letter sets of members of one component
      coincide);
    * any other cyclic component chains prefix parts, one exit body, and
      suffix parts; strong connectivity lets the parts appear in any order
      (prefixes) and any reverse order (suffixes), so the downclosure is
      star(prefix parts) . exit parts . star(suffix parts);
    * an acyclic singleton is the union of its downclosed bodies.

    Every piece below a component is already a downclosure, terminals are
    made optional, and concatenations/unions/stars of downward-closed
    languages stay downward-closed.
    """
    sp = simple_trim(as_simple(x))
    sigma = sp.input_alphabet
    g = grammar_trim(pair_grammar(sp))
    if grammar_is_empty(g):
        return nfa_rename(nfa_trim(nfa_empty(sigma)))
    letters = nt_letters(g)
    prods_of: Dict = {}
    dep_edges = []
    for (lhs, body) in g.productions:
        prods_of.setdefault(lhs, []).append(body)
        for symbol in body:
            if symbol in g.nonterminals:
                dep_edges.append((lhs, symbol))
    built: Dict = {}
    for scc in tarjan_scc(g.nonterminals, dep_edges):
        members = sorted(scc, key=skey)
        internal: List[Tuple] = []  # (lhs, body, positions of same-component symbols)
        exits: List[Tuple] = []
        nonlinear = False
        cyclic = False
        for lhs in members:
            for body in prods_of.get(lhs, ()):
                occ = [i for i, s in enumerate(body) if s in scc]
                if len(occ) >= 2:
                    nonlinear = True
                if occ:
                    cyclic = True
                    internal.append((lhs, body, occ))
                else:
                    exits.append((lhs, body))
        if nonlinear:
            scc_letters = sorted(letters.get(members[0], frozenset()), key=skey)
            nfa = nfa_rename(nfa_trim(nfa_letters_star(scc_letters, sigma)))
        elif cyclic:
            pres = []
            sufs = []
            for (_lhs, body, occ) in internal:
                i = occ[0]
                pres.append(_part_nfa(body[:i], built, g.nonterminals, sigma))
                sufs.append(_part_nfa(body[i + 1:], built, g.nonterminals, sigma))
            exit_nfas = [
                _part_nfa(body, built, g.nonterminals, sigma) for (_lhs, body) in exits
            ]
            nfa = nfa_concat(
                [nfa_star(nfa_union(pres)), nfa_union(exit_nfas), nfa_star(nfa_union(sufs))]
            )
            nfa = nfa_rename(nfa_trim(nfa))
        else:
            bodies = [
                _part_nfa(body, built, g.nonterminals, sigma)
                for lhs in members
                for body in prods_of.get(lhs, ())
            ]
            nfa = nfa_rename(nfa_trim(nfa_union(bodies)))
        for member in members:
            built[member] = nfa
    return nfa_rename(nfa_trim(built[g.start]))


# ---------------------------------------------------------------------------
# Petri net translation
# ---------------------------------------------------------------------------


def pda_to_bounded_pn(x) -> LabeledPetriNet:
    """Translate A into a 1-bounded labeled Petri net accepting ↓L(A).

    The augmented automaton is letter-normalized, every letter edge gets a
    silent twin, and a single final state is arranged.  The bounded stack
    (height cap h = 2|Q|^2 over the extended stack alphabet) is then laid
    out into places: one place per automaton state, one place ("s", i) per
    height 0 <= i <= h marking the current height, and one place
    ("h", i, symbol) per height 1 <= i <= h and stack symbol recording the
    symbol stored at that depth.  A push at height n moves the height token
    from ("s", n) to ("s", n+1) and fills ("h", n+1, symbol); a pop undoes
    it.  Every reachable marking holds exactly one state token and one
    height token, so the net is 1-bounded.
    """
    aug = augment(x)
    h = aug.bound
    sp = single_final(add_eps_twins(letter_normalize(aug.pda)))
    gamma = sorted(sp.stack_alphabet, key=skey)
    places = set(sp.states)
    places.update(("s", i) for i in range(h + 1))
    places.update(("h", i, g) for i in range(1, h + 1) for g in gamma)
    transitions = []
    for idx, (p, a, op, q) in enumerate(sorted(sp.edges, key=skey)):
        if op is None:
            transitions.append(
                Transition(("t", idx), Multiset({p: 1}), Multiset({q: 1}), a)
            )
        elif op[0] == "push":
            symbol = op[1]
            for n in range(h):
                transitions.append(
                    Transition(
                        ("t", idx, n),
                        Multiset({p: 1, ("s", n): 1}),
                        Multiset({q: 1, ("h", n + 1, symbol): 1, ("s", n + 1): 1}),
                        a,
                    )
                )
        else:
            symbol = op[1]
            for n in range(1, h + 1):
                transitions.append(
                    Transition(
                        ("t", idx, n),
                        Multiset({p: 1, ("h", n, symbol): 1, ("s", n): 1}),
                        Multiset({q: 1, ("s", n - 1): 1}),
                        a,
                    )
                )
    (final,) = sp.finals
    return LabeledPetriNet(
        alphabet=sp.input_alphabet,
        places=places,
        transitions=transitions,
        m0=Multiset({sp.initial: 1, ("s", 0): 1}),
        mf=Multiset({final: 1, ("s", 0): 1}),
    )


# ---------------------------------------------------------------------------
# Ideal decomposition of a downward-closed regular language
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PostIdeal:
    """A Parikh-image ideal: any multiset m with m(s) <= base(s) for every
    letter s outside `pumpable` (pumpable letters may appear in any number).

    The base is normalized to carry no pumpable letters.
    """

    base: Multiset
    pumpable: FrozenSet

    def __init__(self, base, pumpable):
        pumpable = frozenset(pumpable)
        base = Multiset({k: v for k, v in Multiset(base).items() if k not in pumpable})
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "pumpable", pumpable)

    def covers(self, m: Multiset) -> bool:
        return all(v <= self.base[k] for k, v in Multiset(m).items() if k not in self.pumpable)

    def subsumes(self, other: "PostIdeal") -> bool:
        return other.pumpable <= self.pumpable and all(
            v <= self.base[k]
            for k, v in other.base.items()
            if k not in self.pumpable
        )


def _prune(ideals: List[PostIdeal]) -> List[PostIdeal]:
    kept: List[PostIdeal] = []
    for cand in ideals:
        if any(other.subsumes(cand) for other in kept):
            continue
        kept = [other for other in kept if not cand.subsumes(other)]
        kept.append(cand)
    return kept


def ideal_decomposition(nfa: Nfa, path_cap: int = 10_000) -> FrozenSet:
    """Decompose the Parikh image of a downward-closed regular language.

    Every accepted run projects to a path through the condensation of the
    automaton: the letters of inter-component edges are needed at most once
    each (the base), and the letters inside visited components can be
    pumped arbitrarily (strong connectivity plus downward closedness).
    Enumerates edge-paths through the acyclic condensation, capped at
    `path_cap` paths, pruning subsumed ideals along the way.
    """
    t = nfa_trim(nfa)
    if nfa_is_empty(t):
        return frozenset()
    comps = tarjan_scc(t.states, [(p, q) for (p, _a, q) in t.transitions])
    comp_of = {s: i for i, comp in enumerate(comps) for s in comp}
    intra: Dict[int, Set] = {i: set() for i in range(len(comps))}
    outgoing: Dict[int, List[Tuple]] = {i: [] for i in range(len(comps))}
    for (p, a, q) in sorted(t.transitions, key=skey):
        cp, cq = comp_of[p], comp_of[q]
        if cp == cq:
            if a is not None:
                intra[cp].add(a)
        else:
            outgoing[cp].append((a, cq))
    has_final = {i: bool(comps[i] & t.finals) for i in range(len(comps))}

    ideals: List[PostIdeal] = []
    paths = 0

    start = comp_of[t.initial]
    stack: List[Tuple[int, Tuple, FrozenSet]] = [
        (start, (), frozenset(intra[start]))
    ]
    while stack:
        comp, base_letters, pumps = stack.pop()
        paths += 1
        if paths > path_cap:
            raise ResourceLimit("path_cap", path_cap, "ideal decomposition")
        if has_final[comp]:
            ideals.append(PostIdeal(parikh(base_letters), pumps))
            if len(ideals) % 100 == 0:
                ideals = _prune(ideals)
        for (a, cq) in outgoing[comp]:
            nb = base_letters if a is None else base_letters + (a,)
            stack.append((cq, nb, pumps | frozenset(intra[cq])))
    return frozenset(_prune(ideals))
