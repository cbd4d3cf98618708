"""Context-free grammars: trimming, normal form, membership, finiteness.

Grammars serve as the bridge between pushdown automata and the regular
overapproximations built elsewhere: a pushdown's language is converted to a
grammar, and questions about the pushdown (emptiness, membership of a word,
finiteness of the language) are answered on the grammar.

A production maps a nonterminal to a tuple of symbols; each symbol is either
a terminal (member of `alphabet`) or a nonterminal.  The two sets must be
disjoint.  The empty tuple is the empty word.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .automata import skey, tarjan_scc
from .errors import InputError

Production = Tuple[object, Tuple]


@dataclass(frozen=True)
class Grammar:
    nonterminals: FrozenSet
    alphabet: FrozenSet
    productions: FrozenSet[Production]
    start: object

    def __post_init__(self):
        overlap = self.nonterminals & self.alphabet
        if overlap:
            raise InputError(
                f"symbols both terminal and nonterminal: {sorted(overlap, key=skey)}"
            )
        if self.start not in self.nonterminals:
            raise InputError(f"start symbol {self.start!r} not a nonterminal")
        for (lhs, body) in self.productions:
            if lhs not in self.nonterminals:
                raise InputError(f"production head {lhs!r} not a nonterminal")
            for sym in body:
                if sym not in self.nonterminals and sym not in self.alphabet:
                    raise InputError(f"unknown symbol {sym!r} in production body")

    def prods_of(self, nt) -> List[Tuple]:
        return sorted(
            (body for (lhs, body) in self.productions if lhs == nt),
            key=lambda b: (len(b), [skey(s) for s in b]),
        )


def grammar(prods: Dict, start, alphabet: Optional[Iterable] = None) -> Grammar:
    """Convenience constructor from {nonterminal: [body, ...]}.

    Bodies may be tuples/lists of symbols.  Terminals are inferred as the
    body symbols that are not production heads, unless given explicitly.
    """
    nts = frozenset(prods.keys())
    prodset = set()
    syms = set()
    for lhs, bodies in prods.items():
        for body in bodies:
            body = tuple(body)
            prodset.add((lhs, body))
            syms |= set(body)
    sigma = frozenset(alphabet) if alphabet is not None else frozenset(syms - nts)
    return Grammar(
        nonterminals=nts, alphabet=sigma, productions=frozenset(prodset), start=start
    )


def productive_nts(g: Grammar) -> FrozenSet:
    """Nonterminals deriving at least one terminal word."""
    prod: Set = set()
    changed = True
    while changed:
        changed = False
        for (lhs, body) in g.productions:
            if lhs in prod:
                continue
            if all(sym in g.alphabet or sym in prod for sym in body):
                prod.add(lhs)
                changed = True
    return frozenset(prod)


def reachable_nts(g: Grammar) -> FrozenSet:
    seen = {g.start}
    stack = [g.start]
    bodies: Dict = {}
    for (lhs, body) in g.productions:
        bodies.setdefault(lhs, []).append(body)
    while stack:
        nt = stack.pop()
        for body in bodies.get(nt, ()):
            for sym in body:
                if sym in g.nonterminals and sym not in seen:
                    seen.add(sym)
                    stack.append(sym)
    return frozenset(seen)


def trim(g: Grammar) -> Grammar:
    """Keep only nonterminals that are productive and reachable (in that
    order, so reachability is judged through productive rules only).  The
    start symbol is always retained; an empty language yields a grammar
    with no productions."""
    prod = productive_nts(g)
    g1 = Grammar(
        nonterminals=g.nonterminals,
        alphabet=g.alphabet,
        productions=frozenset(
            (lhs, body)
            for (lhs, body) in g.productions
            if lhs in prod and all(s in g.alphabet or s in prod for s in body)
        ),
        start=g.start,
    )
    reach = reachable_nts(g1)
    keep = (prod & reach) | {g.start}
    return Grammar(
        nonterminals=frozenset(keep),
        alphabet=g.alphabet,
        productions=frozenset(
            (lhs, body)
            for (lhs, body) in g1.productions
            if lhs in keep and all(s in g.alphabet or s in keep for s in body)
        ),
        start=g.start,
    )


def is_empty(g: Grammar) -> bool:
    return g.start not in productive_nts(g)


def nullable_nts(g: Grammar) -> FrozenSet:
    nul: Set = set()
    changed = True
    while changed:
        changed = False
        for (lhs, body) in g.productions:
            if lhs in nul:
                continue
            if all(sym in nul for sym in body):
                nul.add(lhs)
                changed = True
    return frozenset(nul)


# -- Chomsky normal form and membership --------------------------------------


def to_cnf(g: Grammar) -> Grammar:
    """Chomsky normal form: productions A -> B C, A -> a, and possibly
    S -> empty for a fresh start symbol S."""
    g = trim(g)
    start = ("S0",)
    prods: Set[Production] = {(start, (g.start,))} if not is_empty(g) else set()
    nts: Set = set(g.nonterminals) | {start}

    # TERM: in bodies of length >= 2, replace terminal a by a wrapper.
    def wrap(a):
        return ("T", a)

    term_prods: Set[Production] = set()
    for (lhs, body) in g.productions:
        if len(body) >= 2:
            new_body = []
            for sym in body:
                if sym in g.alphabet:
                    w = wrap(sym)
                    nts.add(w)
                    term_prods.add((w, (sym,)))
                    new_body.append(w)
                else:
                    new_body.append(sym)
            prods.add((lhs, tuple(new_body)))
        else:
            prods.add((lhs, body))
    prods |= term_prods

    # BIN: split long bodies.
    binned: Set[Production] = set()
    for (lhs, body) in prods:
        if len(body) <= 2:
            binned.add((lhs, body))
            continue
        prev = lhs
        for i in range(len(body) - 2):
            mid = ("B", lhs, tuple(body), i)
            nts.add(mid)
            binned.add((prev, (body[i], mid)))
            prev = mid
        binned.add((prev, (body[-2], body[-1])))
    prods = binned

    # DEL: remove empty bodies except at the new start.
    g2 = Grammar(
        nonterminals=frozenset(nts),
        alphabet=g.alphabet,
        productions=frozenset(prods),
        start=start,
    )
    nul = nullable_nts(g2)
    deled: Set[Production] = set()
    for (lhs, body) in prods:
        if len(body) == 0:
            continue
        if len(body) == 1:
            deled.add((lhs, body))
            continue
        x, y = body
        deled.add((lhs, body))
        if x in nul:
            deled.add((lhs, (y,)))
        if y in nul:
            deled.add((lhs, (x,)))
    deled = {(lhs, body) for (lhs, body) in deled if len(body) > 0}
    if start in nul:
        deled.add((start, ()))

    # UNIT: close over unit chains, then inline.
    unit_next: Dict = {}
    for (lhs, body) in deled:
        if len(body) == 1 and body[0] in nts:
            unit_next.setdefault(lhs, set()).add(body[0])
    closure: Dict = {}
    for a in nts:
        seen = {a}
        stack = [a]
        while stack:
            b = stack.pop()
            for c in unit_next.get(b, ()):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        closure[a] = seen
    final: Set[Production] = set()
    for a in nts:
        for b in closure[a]:
            for (lhs, body) in deled:
                if lhs != b:
                    continue
                if len(body) == 1 and body[0] in nts:
                    continue
                final.add((a, body))

    return trim(
        Grammar(
            nonterminals=frozenset(nts),
            alphabet=g.alphabet,
            productions=frozenset(final),
            start=start,
        )
    )


def cnf_member(g: Grammar, word: Tuple) -> bool:
    """CYK membership for a grammar in Chomsky normal form."""
    word = tuple(word)
    if not word:
        return (g.start, ()) in g.productions
    n = len(word)
    by_pair: Dict[Tuple, Set] = {}
    by_term: Dict[object, Set] = {}
    for (lhs, body) in g.productions:
        if len(body) == 1:
            by_term.setdefault(body[0], set()).add(lhs)
        elif len(body) == 2:
            by_pair.setdefault(body, set()).add(lhs)
    table: List[List[Set]] = [[set() for _ in range(n + 1)] for _ in range(n)]
    for i, a in enumerate(word):
        table[i][i + 1] = set(by_term.get(a, ()))
    for width in range(2, n + 1):
        for i in range(0, n - width + 1):
            j = i + width
            cell = table[i][j]
            for k in range(i + 1, j):
                for x in table[i][k]:
                    for y in table[k][j]:
                        cell |= by_pair.get((x, y), set())
    return g.start in table[0][n]


def member(g: Grammar, word: Tuple) -> bool:
    return cnf_member(to_cnf(g), word)


# -- finiteness ---------------------------------------------------------------


def _proper(g: Grammar) -> Grammar:
    """Equivalent-but-for-epsilon grammar with no empty and no unit
    productions, trimmed.  (The empty word may be lost; callers that only
    look at cycles do not care.)"""
    g = trim(g)
    nul = nullable_nts(g)
    prods: Set[Production] = set()
    for (lhs, body) in g.productions:
        # all subsets of nullable occurrences removed
        positions = [i for i, s in enumerate(body) if s in nul]
        total = 1 << len(positions)
        if total > 4096:
            # extremely wide bodies: fall back to keeping the body and
            # dropping each nullable position individually (sound for the
            # cycle test, which only needs the one-symbol-kept variants)
            variants = {body}
            for i in positions:
                variants.add(body[:i] + body[i + 1 :])
        else:
            variants = set()
            for mask in range(total):
                keep = [
                    s
                    for i, s in enumerate(body)
                    if s not in nul or (mask >> positions.index(i)) & 1
                ]
                variants.add(tuple(keep))
        for v in variants:
            if v:
                prods.add((lhs, v))
    # unit elimination
    nts = g.nonterminals
    unit_next: Dict = {}
    for (lhs, body) in prods:
        if len(body) == 1 and body[0] in nts:
            unit_next.setdefault(lhs, set()).add(body[0])
    closure: Dict = {}
    for a in nts:
        seen = {a}
        stack = [a]
        while stack:
            b = stack.pop()
            for c in unit_next.get(b, ()):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        closure[a] = seen
    final: Set[Production] = set()
    for a in nts:
        for b in closure[a]:
            for (lhs, body) in prods:
                if lhs == b and not (len(body) == 1 and body[0] in nts):
                    final.add((a, body))
    return trim(
        Grammar(
            nonterminals=nts,
            alphabet=g.alphabet,
            productions=frozenset(final),
            start=g.start,
        )
    )


def is_finite(g: Grammar) -> bool:
    """True iff the generated language is finite.

    On a trimmed grammar without empty or unit productions, the language is
    infinite exactly when the nonterminal reference graph has a cycle: going
    around the cycle pumps at least one symbol, and every symbol derives a
    nonempty terminal word.
    """
    p = _proper(g)
    if is_empty(p):
        return True
    edges = set()
    for (lhs, body) in p.productions:
        for sym in body:
            if sym in p.nonterminals:
                edges.add((lhs, sym))
    sccs = tarjan_scc(p.nonterminals, edges)
    comp = {}
    for i, c in enumerate(sccs):
        for s in c:
            comp[s] = i
    for (a, b) in edges:
        if comp[a] == comp[b] and (len(sccs[comp[a]]) > 1 or a == b):
            return False
    return True


def generated_upto(g: Grammar, maxlen: int, cap: int = 200000) -> List[Tuple]:
    """All derivable terminal words of length <= maxlen, shortest first.

    Computed as a least fixpoint of per-nonterminal word sets with all
    concatenations truncated at maxlen.  `cap` bounds the total number of
    stored words as a safety valve.
    """
    from .errors import ResourceLimit

    g = trim(g)
    words: Dict[object, Set[Tuple]] = {nt: set() for nt in g.nonterminals}
    changed = True
    while changed:
        changed = False
        total = sum(len(v) for v in words.values())
        if total > cap:
            raise ResourceLimit("generated_upto.cap", cap, "word sets too large")
        for (lhs, body) in g.productions:
            partial = {()}
            ok = True
            for sym in body:
                if sym in g.alphabet:
                    partial = {w + (sym,) for w in partial if len(w) < maxlen}
                else:
                    opts = words[sym]
                    if not opts:
                        ok = False
                        break
                    partial = {
                        w + u
                        for w in partial
                        for u in opts
                        if len(w) + len(u) <= maxlen
                    }
                if not partial:
                    ok = False
                    break
            if ok:
                new = partial - words[lhs]
                if new:
                    words[lhs] |= new
                    changed = True
    out = sorted(words[g.start], key=lambda w: (len(w), [skey(a) for a in w]))
    return out


def nt_letters(g: Grammar) -> Dict:
    """For each productive nonterminal, the set of terminals occurring in at
    least one word derivable from it."""
    g = trim(g)
    prod = productive_nts(g)
    letters: Dict[object, Set] = {nt: set() for nt in g.nonterminals}
    changed = True
    while changed:
        changed = False
        for (lhs, body) in g.productions:
            if lhs not in prod:
                continue
            if not all(s in g.alphabet or s in prod for s in body):
                continue
            acc = set()
            for sym in body:
                if sym in g.alphabet:
                    acc.add(sym)
                else:
                    acc |= letters[sym]
            if not acc <= letters[lhs]:
                letters[lhs] |= acc
                changed = True
    return {nt: frozenset(v) for nt, v in letters.items()}
