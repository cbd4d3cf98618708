"""Nondeterministic finite automata and word homomorphisms.

NFAs here are the label machines of the toolkit: handler languages, edge
labels of pushdown automata, downward closures, and gadget-transformed
languages are all carried around as values of this one type.  A transition
labeled None reads nothing (an epsilon move); any other label is a single
letter.  Letters are arbitrary hashable values, usually strings such as
"a" or "s1".  Words are tuples of letters.

All operations are pure: they return fresh automata and never mutate their
inputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Optional, Sequence, Tuple

from .errors import InputError


def skey(x):
    """Stable sort key for heterogeneous state/letter sets."""
    return (x.__class__.__name__, repr(x))


@dataclass(frozen=True)
class Nfa:
    """Finite automaton with one initial state, a set of final states, and
    letter- or epsilon-labeled transitions (epsilon encoded as None)."""

    states: FrozenSet
    alphabet: FrozenSet
    transitions: FrozenSet[Tuple]  # (src, label_or_None, dst)
    initial: object
    finals: FrozenSet

    def __post_init__(self):
        if self.initial not in self.states:
            raise InputError(f"initial state {self.initial!r} not among states")
        bad = self.finals - self.states
        if bad:
            raise InputError(f"final states not among states: {sorted(bad, key=skey)}")
        for (p, a, q) in self.transitions:
            if p not in self.states or q not in self.states:
                raise InputError(f"transition {(p, a, q)!r} uses unknown state")
            if a is not None and a not in self.alphabet:
                raise InputError(f"transition label {a!r} not in alphabet")

    def out_edges(self, p):
        return [(a, q) for (src, a, q) in self.transitions if src == p]


def _succ_map(nfa: Nfa) -> Dict:
    succ: Dict = {}
    for (p, a, q) in nfa.transitions:
        succ.setdefault(p, []).append((a, q))
    for p in succ:
        succ[p].sort(key=lambda aq: (aq[0] is not None, skey(aq[0]) if aq[0] is not None else "", skey(aq[1])))
    return succ


def eps_closure(nfa: Nfa, states: Iterable) -> FrozenSet:
    seen = set(states)
    stack = list(seen)
    succ = _succ_map(nfa)
    while stack:
        p = stack.pop()
        for (a, q) in succ.get(p, ()):
            if a is None and q not in seen:
                seen.add(q)
                stack.append(q)
    return frozenset(seen)


def nfa_member(nfa: Nfa, word: Sequence) -> bool:
    current = eps_closure(nfa, [nfa.initial])
    for a in word:
        nxt = {q for p in current for (b, q) in nfa.out_edges(p) if b == a}
        if not nxt:
            return False
        current = eps_closure(nfa, nxt)
    return bool(current & nfa.finals)


def nfa_trim(nfa: Nfa) -> Nfa:
    """Restrict to states reachable from the initial state and co-reachable
    to a final state.  If nothing useful remains, keep a bare initial state."""
    succ: Dict = {}
    pred: Dict = {}
    for (p, a, q) in nfa.transitions:
        succ.setdefault(p, set()).add(q)
        pred.setdefault(q, set()).add(p)

    def reach(starts, adj):
        seen = set(starts)
        stack = list(starts)
        while stack:
            p = stack.pop()
            for q in adj.get(p, ()):
                if q not in seen:
                    seen.add(q)
                    stack.append(q)
        return seen

    fwd = reach([nfa.initial], succ)
    bwd = reach(list(nfa.finals), pred)
    useful = fwd & bwd
    if not useful:
        return Nfa(
            states=frozenset([nfa.initial]),
            alphabet=nfa.alphabet,
            transitions=frozenset(),
            initial=nfa.initial,
            finals=frozenset(),
        )
    keep = useful | {nfa.initial}
    return Nfa(
        states=frozenset(keep),
        alphabet=nfa.alphabet,
        transitions=frozenset(
            (p, a, q) for (p, a, q) in nfa.transitions if p in useful and q in useful
        ),
        initial=nfa.initial,
        finals=frozenset(nfa.finals & useful),
    )


def nfa_rename(nfa: Nfa) -> Nfa:
    """Canonical integer state names in BFS order from the initial state."""
    order = {nfa.initial: 0}
    queue = [nfa.initial]
    succ = _succ_map(nfa)
    while queue:
        p = queue.pop(0)
        for (a, q) in succ.get(p, ()):
            if q not in order:
                order[q] = len(order)
                queue.append(q)
    for p in sorted(nfa.states - set(order), key=skey):
        order[p] = len(order)
    return Nfa(
        states=frozenset(order.values()),
        alphabet=nfa.alphabet,
        transitions=frozenset((order[p], a, order[q]) for (p, a, q) in nfa.transitions),
        initial=0,
        finals=frozenset(order[f] for f in nfa.finals),
    )


def nfa_is_empty(nfa: Nfa) -> bool:
    trimmed = nfa_trim(nfa)
    return not trimmed.finals and not (nfa.initial in nfa.finals)


def nfa_is_finite(nfa: Nfa) -> bool:
    """True iff the language is finite: no useful cycle carrying the run.

    Any cycle among useful states (even an epsilon cycle) pumps run length,
    but only letter-bearing cycles pump the language, so epsilon-only cycles
    are ignored.
    """
    trimmed = nfa_trim(nfa)
    # A cycle through useful states makes the language infinite only if some
    # letter transition lies on it.  Contract epsilon edges: look for a cycle
    # (in the useful graph) containing at least one letter edge.
    sccs = tarjan_scc(
        trimmed.states, {(p, q) for (p, a, q) in trimmed.transitions}
    )
    comp = {}
    for i, c in enumerate(sccs):
        for s in c:
            comp[s] = i
    for (p, a, q) in trimmed.transitions:
        if a is None:
            continue
        if p == q or (comp[p] == comp[q] and len(sccs[comp[p]]) > 1):
            return False
    return True


def tarjan_scc(states: Iterable, edges: Iterable[Tuple]) -> list:
    """Strongly connected components, iterative Tarjan; deterministic order."""
    adj: Dict = {}
    for (p, q) in edges:
        adj.setdefault(p, []).append(q)
    for p in adj:
        adj[p].sort(key=skey)
    index: Dict = {}
    low: Dict = {}
    on_stack = set()
    stack = []
    sccs = []
    counter = itertools.count()

    for root in sorted(states, key=skey):
        if root in index:
            continue
        work = [(root, iter(adj.get(root, ())))]
        index[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for child in it:
                if child not in index:
                    index[child] = low[child] = next(counter)
                    stack.append(child)
                    on_stack.add(child)
                    work.append((child, iter(adj.get(child, ()))))
                    advanced = True
                    break
                elif child in on_stack:
                    low[node] = min(low[node], index[child])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    s = stack.pop()
                    on_stack.discard(s)
                    comp.append(s)
                    if s == node:
                        break
                sccs.append(frozenset(comp))
    return sccs


def nfa_words_upto(nfa: Nfa, maxlen: int) -> list:
    """All accepted words of length <= maxlen, shortest first, ties broken
    lexicographically by letter representation."""
    start = eps_closure(nfa, [nfa.initial])
    letters = sorted(nfa.alphabet, key=skey)
    found = []
    seen_sets = {(): start}
    frontier = [((), start)]
    for _ in range(maxlen + 1):
        new_frontier = []
        for (word, states) in frontier:
            if states & nfa.finals:
                found.append(word)
            if len(word) == maxlen:
                continue
            for a in letters:
                nxt = {q for p in states for (b, q) in nfa.out_edges(p) if b == a}
                if nxt:
                    closed = eps_closure(nfa, nxt)
                    w2 = word + (a,)
                    if w2 not in seen_sets:
                        seen_sets[w2] = closed
                        new_frontier.append((w2, closed))
        frontier = new_frontier
        if not frontier:
            break
    found.sort(key=lambda w: (len(w), [skey(a) for a in w]))
    return found


def nfa_shortest_word(nfa: Nfa) -> Optional[Tuple]:
    """A shortest accepted word, or None if the language is empty."""
    start = eps_closure(nfa, [nfa.initial])
    if start & nfa.finals:
        return ()
    letters = sorted(nfa.alphabet, key=skey)
    seen = {start}
    frontier = [((), start)]
    while frontier:
        new_frontier = []
        for (word, states) in frontier:
            for a in letters:
                nxt = {q for p in states for (b, q) in nfa.out_edges(p) if b == a}
                if not nxt:
                    continue
                closed = eps_closure(nfa, nxt)
                if closed in seen:
                    continue
                w2 = word + (a,)
                if closed & nfa.finals:
                    return w2
                seen.add(closed)
                new_frontier.append((w2, closed))
        frontier = new_frontier
    return None


def nfa_eps_free(nfa: Nfa) -> Nfa:
    """Equivalent automaton without epsilon transitions."""
    new_trans = set()
    finals = set()
    closures = {p: eps_closure(nfa, [p]) for p in nfa.states}
    for p in nfa.states:
        if closures[p] & nfa.finals:
            finals.add(p)
        for r in closures[p]:
            for (a, q) in nfa.out_edges(r):
                if a is not None:
                    new_trans.add((p, a, q))
    return Nfa(
        states=nfa.states,
        alphabet=nfa.alphabet,
        transitions=frozenset(new_trans),
        initial=nfa.initial,
        finals=frozenset(finals),
    )


def nfa_determinize(nfa: Nfa, alphabet: Optional[Iterable] = None) -> Nfa:
    """Complete deterministic automaton via the subset construction.

    The result has integer states, exactly one transition per state and
    letter, and includes a sink, so it is safe input for dfa_complement.
    """
    sigma = sorted(set(alphabet) if alphabet is not None else nfa.alphabet, key=skey)
    start = eps_closure(nfa, [nfa.initial])
    names = {start: 0}
    queue = [start]
    trans = set()
    finals = set()
    while queue:
        cur = queue.pop(0)
        if cur & nfa.finals:
            finals.add(names[cur])
        for a in sigma:
            nxt = frozenset(
                q2
                for p in cur
                for (b, q) in nfa.out_edges(p)
                if b == a
                for q2 in eps_closure(nfa, [q])
            )
            if nxt not in names:
                names[nxt] = len(names)
                queue.append(nxt)
            trans.add((names[cur], a, names[nxt]))
    return Nfa(
        states=frozenset(names.values()),
        alphabet=frozenset(sigma),
        transitions=frozenset(trans),
        initial=0,
        finals=frozenset(finals),
    )


def dfa_complement(dfa: Nfa) -> Nfa:
    """Complement of a complete DFA; rejects automata that are not one."""
    out: Dict = {}
    for (p, a, q) in dfa.transitions:
        if a is None:
            raise InputError("complement requires a DFA; epsilon transition found")
        if (p, a) in out:
            raise InputError(f"complement requires a DFA; state {p!r} has two {a!r}-moves")
        out[(p, a)] = q
    for p in dfa.states:
        for a in dfa.alphabet:
            if (p, a) not in out:
                raise InputError(f"complement requires a complete DFA; {p!r} lacks a {a!r}-move")
    return Nfa(
        states=dfa.states,
        alphabet=dfa.alphabet,
        transitions=dfa.transitions,
        initial=dfa.initial,
        finals=frozenset(dfa.states - dfa.finals),
    )


def nfa_intersect(m1: Nfa, m2: Nfa) -> Nfa:
    """Product automaton for the intersection of two NFA languages."""
    a1, a2 = nfa_eps_free(m1), nfa_eps_free(m2)
    alphabet = a1.alphabet | a2.alphabet
    start = (a1.initial, a2.initial)
    names = {start}
    queue = [start]
    trans = set()
    while queue:
        (p1, p2) = queue.pop(0)
        for (a, q1) in a1.out_edges(p1):
            for (b, q2) in a2.out_edges(p2):
                if a == b:
                    dst = (q1, q2)
                    trans.add(((p1, p2), a, dst))
                    if dst not in names:
                        names.add(dst)
                        queue.append(dst)
    finals = frozenset(
        (p1, p2) for (p1, p2) in names if p1 in a1.finals and p2 in a2.finals
    )
    return nfa_rename(
        nfa_trim(
            Nfa(
                states=frozenset(names),
                alphabet=frozenset(alphabet),
                transitions=frozenset(trans),
                initial=start,
                finals=finals,
            )
        )
    )


def nfa_reverse(nfa: Nfa) -> Nfa:
    """Automaton for the reversed language."""
    init = ("rev-init",)
    states = set(nfa.states) | {init}
    trans = {(q, a, p) for (p, a, q) in nfa.transitions}
    trans |= {(init, None, f) for f in nfa.finals}
    return Nfa(
        states=frozenset(states),
        alphabet=nfa.alphabet,
        transitions=frozenset(trans),
        initial=init,
        finals=frozenset([nfa.initial]),
    )


# -- builders ---------------------------------------------------------------


def _tag(nfa: Nfa, tag) -> Nfa:
    return Nfa(
        states=frozenset((tag, s) for s in nfa.states),
        alphabet=nfa.alphabet,
        transitions=frozenset(((tag, p), a, (tag, q)) for (p, a, q) in nfa.transitions),
        initial=(tag, nfa.initial),
        finals=frozenset((tag, f) for f in nfa.finals),
    )


def nfa_empty(alphabet: Iterable = ()) -> Nfa:
    return Nfa(
        states=frozenset([0]),
        alphabet=frozenset(alphabet),
        transitions=frozenset(),
        initial=0,
        finals=frozenset(),
    )


def nfa_eps(alphabet: Iterable = ()) -> Nfa:
    return Nfa(
        states=frozenset([0]),
        alphabet=frozenset(alphabet),
        transitions=frozenset(),
        initial=0,
        finals=frozenset([0]),
    )


def nfa_word(word: Sequence, alphabet: Optional[Iterable] = None) -> Nfa:
    word = tuple(word)
    sigma = frozenset(alphabet) if alphabet is not None else frozenset(word)
    n = len(word)
    return Nfa(
        states=frozenset(range(n + 1)),
        alphabet=sigma,
        transitions=frozenset((i, word[i], i + 1) for i in range(n)),
        initial=0,
        finals=frozenset([n]),
    )


def nfa_finite(words: Iterable[Sequence], alphabet: Optional[Iterable] = None) -> Nfa:
    """Automaton for an explicit finite set of words."""
    words = [tuple(w) for w in words]
    sigma = set(alphabet) if alphabet is not None else {a for w in words for a in w}
    if not words:
        return nfa_empty(sigma)
    return nfa_union([nfa_word(w, sigma) for w in words])


def nfa_union(parts: Sequence[Nfa]) -> Nfa:
    if not parts:
        return nfa_empty()
    alphabet = frozenset().union(*(p.alphabet for p in parts))
    tagged = [_tag(p, i) for i, p in enumerate(parts)]
    init = ("u",)
    states = {init}
    trans = set()
    finals = set()
    for t in tagged:
        states |= t.states
        trans |= t.transitions
        trans.add((init, None, t.initial))
        finals |= t.finals
    return nfa_rename(
        Nfa(
            states=frozenset(states),
            alphabet=alphabet,
            transitions=frozenset(trans),
            initial=init,
            finals=frozenset(finals),
        )
    )


def nfa_concat(parts: Sequence[Nfa]) -> Nfa:
    if not parts:
        return nfa_eps()
    alphabet = frozenset().union(*(p.alphabet for p in parts))
    tagged = [_tag(p, i) for i, p in enumerate(parts)]
    states = set()
    trans = set()
    for t in tagged:
        states |= t.states
        trans |= t.transitions
    for cur, nxt in zip(tagged, tagged[1:]):
        for f in cur.finals:
            trans.add((f, None, nxt.initial))
    return nfa_rename(
        Nfa(
            states=frozenset(states),
            alphabet=alphabet,
            transitions=frozenset(trans),
            initial=tagged[0].initial,
            finals=tagged[-1].finals,
        )
    )


def nfa_star(nfa: Nfa) -> Nfa:
    t = _tag(nfa, 0)
    init = ("s",)
    trans = set(t.transitions)
    trans.add((init, None, t.initial))
    for f in t.finals:
        trans.add((f, None, init))
    return nfa_rename(
        Nfa(
            states=frozenset(t.states | {init}),
            alphabet=nfa.alphabet,
            transitions=frozenset(trans),
            initial=init,
            finals=frozenset([init]),
        )
    )


def nfa_letters_star(letters: Iterable, alphabet: Optional[Iterable] = None) -> Nfa:
    """One-state automaton for X* over a letter set X."""
    letters = set(letters)
    sigma = frozenset(alphabet) if alphabet is not None else frozenset(letters)
    return Nfa(
        states=frozenset([0]),
        alphabet=sigma,
        transitions=frozenset((0, a, 0) for a in letters),
        initial=0,
        finals=frozenset([0]),
    )


def nfa_letter_opt(letter, alphabet: Optional[Iterable] = None) -> Nfa:
    """Automaton for {letter, epsilon}."""
    sigma = frozenset(alphabet) if alphabet is not None else frozenset([letter])
    return Nfa(
        states=frozenset([0, 1]),
        alphabet=sigma,
        transitions=frozenset([(0, letter, 1)]),
        initial=0,
        finals=frozenset([0, 1]),
    )


def nfa_downclosure(nfa: Nfa) -> Nfa:
    """Automaton for the subword closure: every letter transition gains a
    silent twin, so any subset of letters may be skipped."""
    extra = {
        (p, None, q) for (p, a, q) in nfa.transitions if a is not None
    }
    return Nfa(
        states=nfa.states,
        alphabet=nfa.alphabet,
        transitions=nfa.transitions | frozenset(extra),
        initial=nfa.initial,
        finals=nfa.finals,
    )


def subword_pattern_nfa(word: Sequence, alphabet: Iterable) -> Nfa:
    """Automaton for Sigma* w1 Sigma* w2 ... wk Sigma*: words containing
    `word` as a scattered subword."""
    word = tuple(word)
    sigma = frozenset(alphabet)
    n = len(word)
    trans = set()
    for i in range(n + 1):
        for a in sigma:
            trans.add((i, a, i))
    for i, a in enumerate(word):
        if a not in sigma:
            raise InputError(f"pattern letter {a!r} not in alphabet")
        trans.add((i, a, i + 1))
    return Nfa(
        states=frozenset(range(n + 1)),
        alphabet=sigma,
        transitions=frozenset(trans),
        initial=0,
        finals=frozenset([n]),
    )


# -- homomorphisms -----------------------------------------------------------


@dataclass(frozen=True)
class Homomorphism:
    """Letter-to-word map extended to words by concatenation.

    mapping[x] is the image of letter x as a tuple of letters; an empty
    tuple erases x.  Letters of the source alphabet must all be mapped.
    """

    mapping: Tuple[Tuple[object, Tuple], ...]  # sorted ((letter, image), ...)

    @classmethod
    def make(cls, mapping: Dict) -> "Homomorphism":
        items = tuple(sorted(((k, tuple(v)) for k, v in mapping.items()), key=lambda kv: skey(kv[0])))
        return cls(items)

    @property
    def as_dict(self) -> Dict:
        return dict(self.mapping)

    @property
    def source_alphabet(self) -> FrozenSet:
        return frozenset(k for k, _ in self.mapping)

    @property
    def target_alphabet(self) -> FrozenSet:
        return frozenset(a for _, img in self.mapping for a in img)

    def apply_word(self, word: Sequence) -> Tuple:
        m = self.as_dict
        out = []
        for a in word:
            if a not in m:
                raise InputError(f"letter {a!r} not in homomorphism domain")
            out.extend(m[a])
        return tuple(out)


def apply_hom_nfa(nfa: Nfa, h: Homomorphism) -> Nfa:
    """Automaton for the homomorphic image h(L)."""
    m = h.as_dict
    missing = {a for (p, a, q) in nfa.transitions if a is not None and a not in m}
    if missing:
        raise InputError(f"homomorphism undefined on letters: {sorted(missing, key=skey)}")
    states = set(nfa.states)
    trans = set()
    for idx, (p, a, q) in enumerate(sorted(nfa.transitions, key=lambda t: skey(t))):
        if a is None:
            trans.add((p, None, q))
            continue
        img = m[a]
        if not img:
            trans.add((p, None, q))
            continue
        prev = p
        for j, b in enumerate(img[:-1]):
            mid = ("h", idx, j)
            states.add(mid)
            trans.add((prev, b, mid))
            prev = mid
        trans.add((prev, img[-1], q))
    return nfa_rename(
        Nfa(
            states=frozenset(states),
            alphabet=h.target_alphabet,
            transitions=frozenset(trans),
            initial=nfa.initial,
            finals=nfa.finals,
        )
    )


def inverse_hom_nfa(nfa: Nfa, h: Homomorphism) -> Nfa:
    """Automaton for the inverse image h^-1(L) = {w : h(w) in L}."""
    m = h.as_dict
    # For each state p and letter x, q is an x-successor iff q is reachable
    # from p reading h(x) (with epsilon closure on both sides).
    trans = set()
    for x, img in h.mapping:
        for p in nfa.states:
            current = eps_closure(nfa, [p])
            for b in img:
                current = eps_closure(
                    nfa, {q for r in current for (c, q) in nfa.out_edges(r) if c == b}
                )
                if not current:
                    break
            for q in current:
                trans.add((p, x, q))
    finals = frozenset(
        p for p in nfa.states if eps_closure(nfa, [p]) & nfa.finals
    )
    return Nfa(
        states=nfa.states,
        alphabet=frozenset(m.keys()),
        transitions=frozenset(trans),
        initial=nfa.initial,
        finals=finals,
    )
