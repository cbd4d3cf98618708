"""Pushdown automata with regular-labeled edges.

An edge (p, R, op, q) moves from state p to q, reads any one word of the
regular language R (given as an NFA), and performs one stack operation:
("push", g) pushes the stack symbol g, ("pop", g) pops it (blocking if the
top differs), and None leaves the stack alone.  Acceptance requires ending
in a final state with an empty stack, having started from the initial state
with an empty stack.

Most algorithms run on the letter-normal form (SimplePda), where each edge
reads at most one letter.  A pair grammar — nonterminal (p, q) generating
the words of stack-neutral runs from p to q that never dip below their
starting height — turns language questions (emptiness, membership,
finiteness, bounded enumeration) into grammar questions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .automata import Homomorphism, Nfa, nfa_eps_free, nfa_trim, nfa_word, skey
from .cfg import Grammar, generated_upto, is_empty, is_finite, member
from .errors import InputError

# Stack operations: ("push", sym) | ("pop", sym) | None.


def _check_op(op, stack_alphabet):
    if op is None:
        return
    if (
        not isinstance(op, tuple)
        or len(op) != 2
        or op[0] not in ("push", "pop")
    ):
        raise InputError(f"bad stack operation {op!r}")
    if op[1] not in stack_alphabet:
        raise InputError(f"stack operation {op!r} uses unknown stack symbol")


@dataclass(frozen=True)
class Pda:
    """Pushdown automaton with regular-labeled edges."""

    states: FrozenSet
    input_alphabet: FrozenSet
    stack_alphabet: FrozenSet
    edges: FrozenSet[Tuple]  # (p, label_nfa, op, q)
    initial: object
    finals: FrozenSet

    def __post_init__(self):
        if self.initial not in self.states:
            raise InputError(f"initial state {self.initial!r} not among states")
        if not self.finals <= self.states:
            raise InputError("final states not among states")
        for (p, label, op, q) in self.edges:
            if p not in self.states or q not in self.states:
                raise InputError(f"edge {(p, op, q)!r} uses unknown state")
            if not isinstance(label, Nfa):
                raise InputError("edge labels must be NFAs")
            if not label.alphabet <= self.input_alphabet:
                raise InputError("edge label alphabet exceeds input alphabet")
            _check_op(op, self.stack_alphabet)


@dataclass(frozen=True)
class SimplePda:
    """Letter-normal pushdown automaton: each edge reads one letter or
    nothing (label None)."""

    states: FrozenSet
    input_alphabet: FrozenSet
    stack_alphabet: FrozenSet
    edges: FrozenSet[Tuple]  # (p, letter_or_None, op, q)
    initial: object
    finals: FrozenSet

    def __post_init__(self):
        if self.initial not in self.states:
            raise InputError(f"initial state {self.initial!r} not among states")
        if not self.finals <= self.states:
            raise InputError("final states not among states")
        for (p, a, op, q) in self.edges:
            if p not in self.states or q not in self.states:
                raise InputError(f"edge {(p, a, op, q)!r} uses unknown state")
            if a is not None and a not in self.input_alphabet:
                raise InputError(f"edge letter {a!r} not in input alphabet")
            _check_op(op, self.stack_alphabet)


def simple_to_pda(sp: SimplePda) -> Pda:
    """Lift a letter-normal automaton to the regular-labeled form."""
    edges = set()
    for (p, a, op, q) in sp.edges:
        label = nfa_word(() if a is None else (a,), sp.input_alphabet)
        edges.add((p, label, op, q))
    return Pda(
        states=sp.states,
        input_alphabet=sp.input_alphabet,
        stack_alphabet=sp.stack_alphabet,
        edges=frozenset(edges),
        initial=sp.initial,
        finals=sp.finals,
    )


def letter_normalize(pda: Pda) -> SimplePda:
    """Paste each edge's label automaton in place of the edge.

    The stack operation fires first on a silent move into the pasted
    automaton; the label word is then read on stack-neutral moves.  Fresh
    intermediate states are tagged with the edge's index.
    """
    states = set(pda.states)
    edges: Set[Tuple] = set()
    for idx, (p, label, op, q) in enumerate(
        sorted(pda.edges, key=lambda e: skey(e))
    ):
        lab = nfa_trim(label)
        entry = ("e", idx, lab.initial)
        states.add(entry)
        edges.add((p, None, op, entry))
        for (r, x, s) in lab.transitions:
            states.add(("e", idx, r))
            states.add(("e", idx, s))
            edges.add((("e", idx, r), x, None, ("e", idx, s)))
        for f in lab.finals:
            states.add(("e", idx, f))
            edges.add((("e", idx, f), None, None, q))
    return SimplePda(
        states=frozenset(states),
        input_alphabet=pda.input_alphabet,
        stack_alphabet=pda.stack_alphabet,
        edges=frozenset(edges),
        initial=pda.initial,
        finals=pda.finals,
    )


def as_simple(x) -> SimplePda:
    if isinstance(x, SimplePda):
        return x
    if isinstance(x, Pda):
        return letter_normalize(x)
    raise InputError(f"expected a pushdown automaton, got {type(x).__name__}")


def simple_trim(sp: SimplePda) -> SimplePda:
    """Drop states that no run can use, judged on the edge graph alone.

    Keeps states reachable from the initial state and co-reachable to some
    final state, ignoring stack contents (an overapproximation, so removal
    is always language-preserving).  The initial state survives even when
    the language is empty.
    """
    fwd: Dict = {}
    bwd: Dict = {}
    for (p, _a, _op, q) in sp.edges:
        fwd.setdefault(p, set()).add(q)
        bwd.setdefault(q, set()).add(p)

    def closure(seeds, adj):
        seen = set(seeds)
        work = list(seeds)
        while work:
            s = work.pop()
            for t in adj.get(s, ()):
                if t not in seen:
                    seen.add(t)
                    work.append(t)
        return seen

    reach = closure({sp.initial}, fwd)
    coreach = closure(set(sp.finals), bwd)
    keep = (reach & coreach) | {sp.initial}
    return SimplePda(
        states=frozenset(keep),
        input_alphabet=sp.input_alphabet,
        stack_alphabet=sp.stack_alphabet,
        edges=frozenset(
            e for e in sp.edges if e[0] in keep and e[3] in keep
        ),
        initial=sp.initial,
        finals=frozenset(f for f in sp.finals if f in keep),
    )


def single_final(sp: SimplePda) -> SimplePda:
    """Equivalent automaton with exactly one final state."""
    if len(sp.finals) == 1:
        return sp
    fin = ("final",)
    while fin in sp.states:
        fin = fin + ("*",)
    edges = set(sp.edges)
    for f in sp.finals:
        edges.add((f, None, None, fin))
    return SimplePda(
        states=sp.states | {fin},
        input_alphabet=sp.input_alphabet,
        stack_alphabet=sp.stack_alphabet,
        edges=frozenset(edges),
        initial=sp.initial,
        finals=frozenset([fin]),
    )


def add_eps_twins(sp: SimplePda) -> SimplePda:
    """For every letter-reading edge, add a silent edge with the same
    endpoints and stack operation.  The result accepts exactly the
    downward closure of each run's word, hence of the language."""
    edges = set(sp.edges)
    for (p, a, op, q) in sp.edges:
        if a is not None:
            edges.add((p, None, op, q))
    return SimplePda(
        states=sp.states,
        input_alphabet=sp.input_alphabet,
        stack_alphabet=sp.stack_alphabet,
        edges=frozenset(edges),
        initial=sp.initial,
        finals=sp.finals,
    )


# -- pair grammar -------------------------------------------------------------


def pair_grammar(x) -> Grammar:
    """Grammar for the accepted language, via stack-neutral run pairs.

    Nonterminal ("W", p, q) derives exactly the words readable on runs from
    p to q that start and end at the same stack height and never dip below
    it.  A run is empty, starts
    with a stack-neutral move, or starts with a push whose matching pop is
    the first return to the starting height.
    """
    sp = as_simple(x)
    states = sorted(sp.states, key=skey)
    nts = {("W", p, q) for p in states for q in states}
    start = ("S",)
    nts.add(start)
    prods: Set[Tuple] = set()
    for p in states:
        prods.add((("W", p, p), ()))
    pushes = []
    pops = []
    for (p, a, op, q) in sp.edges:
        if op is None:
            for r in states:
                body = (("W", q, r),) if a is None else (a, ("W", q, r))
                prods.add((("W", p, r), body))
        elif op[0] == "push":
            pushes.append((p, a, op[1], q))
        else:
            pops.append((p, a, op[1], q))
    for (p, a, g, p1) in pushes:
        for (q1, b, g2, q2) in pops:
            if g != g2:
                continue
            for r in states:
                body: Tuple = ()
                if a is not None:
                    body += (a,)
                body += (("W", p1, q1),)
                if b is not None:
                    body += (b,)
                body += (("W", q2, r),)
                prods.add((("W", p, r), body))
    for f in sorted(sp.finals, key=skey):
        prods.add((start, (("W", sp.initial, f),)))
    return Grammar(
        nonterminals=frozenset(nts),
        alphabet=sp.input_alphabet,
        productions=frozenset(prods),
        start=start,
    )


def pda_is_empty(x) -> bool:
    return is_empty(pair_grammar(x))


def pda_member(x, word: Sequence) -> bool:
    return member(pair_grammar(x), tuple(word))


def pda_is_finite(x) -> bool:
    return is_finite(pair_grammar(x))


def pda_words_upto(x, maxlen: int) -> List[Tuple]:
    """All accepted words of length <= maxlen, shortest first."""
    return generated_upto(pair_grammar(x), maxlen)


def optional_letters_grammar(g: Grammar) -> Grammar:
    """Grammar for the subword closure: every terminal occurrence becomes
    optional, so derivations may drop any subset of letters."""
    nts = set(g.nonterminals)
    prods: Set[Tuple] = set()
    for a in g.alphabet:
        wrapper = ("opt", a)
        nts.add(wrapper)
        prods.add((wrapper, (a,)))
        prods.add((wrapper, ()))
    for (lhs, body) in g.productions:
        prods.add(
            (lhs, tuple(("opt", s) if s in g.alphabet else s for s in body))
        )
    return Grammar(
        nonterminals=frozenset(nts),
        alphabet=g.alphabet,
        productions=frozenset(prods),
        start=g.start,
    )


def downclosed_upto_via_grammar(x, maxlen: int) -> List[Tuple]:
    """Subword slice computed on the subword-closure grammar.  Slower than
    pda_downclosed_upto but algorithmically unrelated, which makes the two
    useful cross-checks of each other."""
    return generated_upto(optional_letters_grammar(pair_grammar(x)), maxlen)


# -- word-set saturation -------------------------------------------------------
#
# Both the subword slice and the bounded-stack slice are computed by a
# fixpoint over state pairs of the original (few-state) machine, with edge
# labels pre-expanded to their word sets up to the length bound.  Working on
# the original states rather than the letter-normal form keeps the number of
# pairs at |Q|^2.


_EMPTY_WS = frozenset()
_EPS_WS = frozenset([()])


class _ConcatCache:
    """Length-bucketed, memoized concatenation of truncated word sets.

    Word sets are frozensets of tuples; the same label sets recur across
    rules and fixpoint rounds, so caching pays for itself quickly.
    """

    def __init__(self, maxlen: int):
        self.maxlen = maxlen
        self.memo: Dict = {}
        self.buckets: Dict = {}

    def _bucketed(self, ws):
        got = self.buckets.get(ws)
        if got is None:
            got = {}
            for w in ws:
                got.setdefault(len(w), []).append(w)
            self.buckets[ws] = got
        return got

    def concat(self, ws1, ws2) -> FrozenSet:
        if not ws1 or not ws2:
            return _EMPTY_WS
        if ws1 == _EPS_WS:
            return ws2
        if ws2 == _EPS_WS:
            return ws1
        key = (ws1, ws2)
        got = self.memo.get(key)
        if got is None:
            b1 = self._bucketed(ws1)
            b2 = self._bucketed(ws2)
            out = set()
            for i, us in b1.items():
                for j, vs in b2.items():
                    if i + j <= self.maxlen:
                        out.update(u + v for u in us for v in vs)
            got = frozenset(out)
            self.memo[key] = got
        return got


def _label_items(x, maxlen: int, down: bool):
    """Edges of x with labels expanded to word sets of length <= maxlen
    (subword-closed when down is set).  Returns (states, none_edges,
    pushes, pops, initial, finals)."""
    from .automata import nfa_downclosure, nfa_words_upto

    none_edges = []
    pushes = []
    pops = []
    if isinstance(x, SimplePda):
        states = sorted(x.states, key=skey)
        init, finals = x.initial, x.finals
        for (p, a, op, q) in x.edges:
            ws = frozenset([()]) if a is None else (
                frozenset([(), (a,)]) if down else frozenset([(a,)])
            )
            if op is None:
                none_edges.append((p, ws, q))
            elif op[0] == "push":
                pushes.append((p, ws, op[1], q))
            else:
                pops.append((p, ws, op[1], q))
    elif isinstance(x, Pda):
        states = sorted(x.states, key=skey)
        init, finals = x.initial, x.finals
        for (p, label, op, q) in sorted(x.edges, key=skey):
            lab = nfa_downclosure(label) if down else label
            ws = frozenset(nfa_words_upto(lab, maxlen))
            if not ws:
                continue
            if op is None:
                none_edges.append((p, ws, q))
            elif op[0] == "push":
                pushes.append((p, ws, op[1], q))
            else:
                pops.append((p, ws, op[1], q))
    else:
        raise InputError(f"expected a pushdown automaton, got {type(x).__name__}")
    return states, none_edges, pushes, pops, init, finals


def _blocks(pushes, pops, inner: Dict, cache: _ConcatCache):
    """For matched push/pop edge pairs, the word sets of one full nesting:
    push label, inner stack-neutral words, pop label."""
    out = []
    for (p, ws1, g, p1) in pushes:
        for (q1, ws2, g2, q2) in pops:
            if g != g2:
                continue
            mid = inner.get((p1, q1))
            if not mid:
                continue
            block = cache.concat(cache.concat(ws1, mid), ws2)
            if block:
                out.append((p, block, q2))
    return out


def _left_linear_fixpoint(states, rules, cache: _ConcatCache, seed: Dict) -> Dict:
    """Least solution of W[p,r] >= ws . W[q,r] for rules (p, ws, q), with
    W[p,p] seeded.  Worklist propagation, one batch per added word set."""
    cur: Dict = {(p, q): set() for p in states for q in states}
    for key, ws in seed.items():
        cur[key] |= ws
    incoming: Dict = {}
    for (p, ws, q) in rules:
        incoming.setdefault(q, []).append((p, ws))
    work = [(key, frozenset(ws)) for key, ws in cur.items() if ws]
    while work:
        (q, r), delta = work.pop()
        for (p, ws) in incoming.get(q, ()):
            add = cache.concat(ws, delta) - cur[(p, r)]
            if add:
                cur[(p, r)] |= add
                work.append(((p, r), frozenset(add)))
    return {key: frozenset(ws) for key, ws in cur.items()}


def _saturate_pairs(states, none_edges, pushes, pops, cache: _ConcatCache) -> Dict:
    """Unstratified fixpoint: stack-neutral run words (<= maxlen) for every
    state pair, nesting allowed to any depth.  Iterates the left-linear
    solver, rebuilding nesting blocks until they stabilize."""
    seed = {(p, p): _EPS_WS for p in states}
    cur: Dict = {(p, q): _EMPTY_WS for p in states for q in states}
    for key, ws in seed.items():
        cur[key] = ws
    while True:
        rules = list(none_edges) + _blocks(pushes, pops, cur, cache)
        nxt = _left_linear_fixpoint(states, rules, cache, seed)
        if nxt == cur:
            return cur
        cur = nxt


def pda_downclosed_upto(x, maxlen: int) -> List[Tuple]:
    """All subwords (of any accepted word) of length <= maxlen.

    Long accepted words contribute their short subwords: labels are
    subword-closed before saturation, so the result is the length-bounded
    slice of the full subword closure.
    """
    states, none_edges, pushes, pops, init, finals = _label_items(
        x, maxlen, down=True
    )
    cache = _ConcatCache(maxlen)
    table = _saturate_pairs(states, none_edges, pushes, pops, cache)
    out: Set[Tuple] = set()
    for f in finals:
        out |= table[(init, f)]
    return sorted(out, key=lambda w: (len(w), [skey(a) for a in w]))


# -- bounded-stack slices ------------------------------------------------------


def bounded_words_upto(x, height: int, maxlen: int) -> List[Tuple]:
    """Words of length <= maxlen accepted by runs whose stack height never
    exceeds `height`.

    Level-stratified fixpoint: level d holds the words of stack-neutral
    runs nesting pushes at most d deep.  Levels are monotone and the
    recurrence is level-local, so as soon as one level repeats, all higher
    levels coincide and the computation stops early.
    """
    states, none_edges, pushes, pops, init, finals = _label_items(
        x, maxlen, down=False
    )
    cache = _ConcatCache(maxlen)
    seed = {(p, p): _EPS_WS for p in states}
    level = _left_linear_fixpoint(states, list(none_edges), cache, seed)
    for _ in range(height):
        rules = list(none_edges) + _blocks(pushes, pops, level, cache)
        nxt = _left_linear_fixpoint(states, rules, cache, seed)
        if nxt == level:
            break
        level = nxt
    out: Set[Tuple] = set()
    for f in finals:
        out |= level[(init, f)]
    return sorted(out, key=lambda w: (len(w), [skey(a) for a in w]))


# -- closure operations --------------------------------------------------------


def intersect_regular(x, nfa: Nfa) -> SimplePda:
    """Product automaton recognizing L(x) with the word constrained to the
    NFA's language."""
    sp = as_simple(x)
    aut = nfa_eps_free(nfa)
    states = {(p, r) for p in sp.states for r in aut.states}
    edges: Set[Tuple] = set()
    for (p, a, op, q) in sp.edges:
        if a is None:
            for r in aut.states:
                edges.add(((p, r), None, op, (q, r)))
        else:
            for (r, b, r2) in aut.transitions:
                if b == a:
                    edges.add(((p, r), a, op, (q, r2)))
    finals = frozenset(
        (f, rf) for f in sp.finals for rf in aut.finals
    )
    return SimplePda(
        states=frozenset(states),
        input_alphabet=sp.input_alphabet | aut.alphabet,
        stack_alphabet=sp.stack_alphabet,
        edges=frozenset(edges),
        initial=(sp.initial, aut.initial),
        finals=finals,
    )


def pda_apply_hom(x, h: Homomorphism) -> Pda:
    """Image under a letter-to-word homomorphism (labels mapped edgewise)."""
    from .automata import apply_hom_nfa

    p = simple_to_pda(x) if isinstance(x, SimplePda) else x
    missing = p.input_alphabet - h.source_alphabet
    if missing:
        raise InputError(
            f"homomorphism undefined on letters: {sorted(missing, key=skey)}"
        )
    edges = set()
    for (src, label, op, dst) in p.edges:
        edges.add((src, apply_hom_nfa(label, h), op, dst))
    return Pda(
        states=p.states,
        input_alphabet=h.target_alphabet,
        stack_alphabet=p.stack_alphabet,
        edges=frozenset(edges),
        initial=p.initial,
        finals=p.finals,
    )


def pda_inverse_hom(x, h: Homomorphism) -> SimplePda:
    """Inverse image: accepts w iff h(w) is accepted.

    States are pairs (state, pending image suffix): reading letter x loads
    the image h(x), which is then consumed by the underlying automaton's
    letter moves; silent moves are always available.
    """
    sp = as_simple(x)
    images = {x_: tuple(img) for (x_, img) in h.mapping}
    suffixes = {()}
    for img in images.values():
        for i in range(len(img) + 1):
            suffixes.add(img[i:])
    states = {(p, suf) for p in sp.states for suf in suffixes}
    edges: Set[Tuple] = set()
    for (p, suf) in states:
        if not suf:
            for (letter, img) in images.items():
                edges.add(((p, ()), letter, None, (p, img)))
    for (p, a, op, q) in sp.edges:
        if a is None:
            for suf in suffixes:
                edges.add(((p, suf), None, op, (q, suf)))
        else:
            for suf in suffixes:
                if suf and suf[0] == a:
                    edges.add(((p, suf), None, op, (q, suf[1:])))
    finals = frozenset((f, ()) for f in sp.finals)
    return SimplePda(
        states=frozenset(states),
        input_alphabet=frozenset(images.keys()),
        stack_alphabet=sp.stack_alphabet,
        edges=frozenset(edges),
        initial=(sp.initial, ()),
        finals=finals,
    )


def pda_union(parts: Sequence) -> SimplePda:
    """Automaton for the union of the given pushdown languages."""
    simples = [as_simple(p) for p in parts]
    init = ("u",)
    states = {init}
    edges: Set[Tuple] = set()
    finals: Set = set()
    input_alphabet: Set = set()
    stack_alphabet: Set = set()
    for i, sp in enumerate(simples):
        states |= {(i, s) for s in sp.states}
        input_alphabet |= sp.input_alphabet
        # tag stack symbols per branch so pops cannot cross branches
        stack_alphabet |= {(i, g) for g in sp.stack_alphabet}
        for (p, a, op, q) in sp.edges:
            op2 = None if op is None else (op[0], (i, op[1]))
            edges.add(((i, p), a, op2, (i, q)))
        edges.add((init, None, None, (i, sp.initial)))
        finals |= {(i, f) for f in sp.finals}
    return SimplePda(
        states=frozenset(states),
        input_alphabet=frozenset(input_alphabet),
        stack_alphabet=frozenset(stack_alphabet),
        edges=frozenset(edges),
        initial=init,
        finals=frozenset(finals),
    )


def pda_concat_word(x, word: Sequence) -> SimplePda:
    """Automaton for L(x) . {word}: the fixed word appended after acceptance."""
    sp = as_simple(x)
    word = tuple(word)
    states = set(sp.states)
    edges = set(sp.edges)
    alphabet = sp.input_alphabet | set(word)
    prev_layer = list(sp.finals)
    cur: List = []
    for i, a in enumerate(word):
        nxt = ("w", i)
        while nxt in states:
            nxt = nxt + ("*",)
        states.add(nxt)
        for f in prev_layer:
            edges.add((f, a, None, nxt))
        prev_layer = [nxt]
        cur.append(nxt)
    finals = frozenset(prev_layer) if word else sp.finals
    return SimplePda(
        states=frozenset(states),
        input_alphabet=frozenset(alphabet),
        stack_alphabet=sp.stack_alphabet,
        edges=frozenset(edges),
        initial=sp.initial,
        finals=finals,
    )


def nfa_to_pda(nfa: Nfa) -> SimplePda:
    """A finite automaton viewed as a pushdown automaton that never uses
    its stack."""
    aut = nfa
    return SimplePda(
        states=aut.states,
        input_alphabet=aut.alphabet,
        stack_alphabet=frozenset(),
        edges=frozenset((p, a, None, q) for (p, a, q) in aut.transitions),
        initial=aut.initial,
        finals=aut.finals,
    )
