"""Labeled Petri nets and their analysis backends.

A :class:`LabeledPetriNet` carries an input alphabet, places, named
transitions with input/output markings and an optional letter label, an
initial marking, and a final marking.  Its language is the set of label
sequences of firing sequences that start at the initial marking and end
exactly at the final marking (silent transitions contribute nothing).

Analyses provided here:

* :func:`coverable` — backward coverability over upward-closed sets
  represented by finite antichains of minimal elements.
* :func:`is_bounded` — Karp–Miller-style tree; an acceleration (a node
  strictly dominating an ancestor) is an omega acquisition and yields the
  pumping path as an unboundedness witness.
* :func:`has_infinite_run` — reduced reachability tree without
  acceleration; reports the first self-covering run ``m0 => m1 =>+ m2``
  with ``m2 >= m1``, and cuts a branch only when its marking is dominated
  by an ancestor's.
* :func:`pn_language_upto` — bounded-length language slice of a 1-bounded
  net by explicit-state search (the 1-boundedness is verified during the
  exploration).

All analyses are deterministic: transitions are kept in a canonical sorted
order and explored lowest-first.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Tuple

from .automata import skey
from .errors import DisabledTransition, InputError, MultisetUnderflow, ResourceLimit
from .multiset import Multiset


@dataclass(frozen=True)
class Transition:
    """A named Petri net transition: consume `pre`, produce `post`, emit `label`.

    `label` is an input letter or None for a silent transition.
    """

    name: object
    pre: Multiset
    post: Multiset
    label: object = None


@dataclass(frozen=True)
class LabeledPetriNet:
    alphabet: frozenset
    places: frozenset
    transitions: Tuple[Transition, ...]
    m0: Multiset
    mf: Multiset

    def __init__(self, alphabet, places, transitions, m0, mf):
        object.__setattr__(self, "alphabet", frozenset(alphabet))
        object.__setattr__(self, "places", frozenset(places))
        trans = tuple(sorted(transitions, key=lambda t: skey(t.name)))
        object.__setattr__(self, "transitions", trans)
        object.__setattr__(self, "m0", Multiset(m0))
        object.__setattr__(self, "mf", Multiset(mf))
        self._validate()

    def _validate(self):
        seen = set()
        for t in self.transitions:
            if not isinstance(t, Transition):
                raise InputError(f"not a Transition: {t!r}")
            if t.name in seen:
                raise InputError(f"duplicate transition name: {t.name!r}")
            seen.add(t.name)
            for m in (t.pre, t.post):
                if not isinstance(m, Multiset):
                    raise InputError(f"transition {t.name!r}: marking is not a Multiset")
                bad = m.support - self.places
                if bad:
                    raise InputError(f"transition {t.name!r} touches unknown places {bad!r}")
            if t.label is not None and t.label not in self.alphabet:
                raise InputError(f"transition {t.name!r} labeled with unknown letter {t.label!r}")
        for which, m in (("initial", self.m0), ("final", self.mf)):
            bad = m.support - self.places
            if bad:
                raise InputError(f"{which} marking uses unknown places {bad!r}")

    def transition(self, name) -> Transition:
        for t in self.transitions:
            if t.name == name:
                return t
        raise InputError(f"no transition named {name!r}")


def enabled(m: Multiset, t: Transition) -> bool:
    return t.pre <= m


def fire(m: Multiset, t: Transition) -> Multiset:
    """Fire `t` at `m`; raises DisabledTransition if `t` is not enabled."""
    if not enabled(m, t):
        raise DisabledTransition(f"transition {t.name!r} not enabled at {m!r}")
    return (m - t.pre) + t.post


def fire_sequence(net: LabeledPetriNet, m: Multiset, names: Iterable) -> Multiset:
    """Fire the named transitions in order, starting at `m`."""
    for name in names:
        m = fire(m, net.transition(name))
    return m


def _monus(m1: Multiset, m2: Multiset) -> Multiset:
    """Pointwise truncated difference (never underflows)."""
    return Multiset({k: m1[k] - m2[k] for k in m1 if m1[k] > m2[k]})


# ---------------------------------------------------------------------------
# Backward coverability
# ---------------------------------------------------------------------------


def coverable(net: LabeledPetriNet, target: Multiset) -> bool:
    """True iff some marking reachable from m0 dominates `target`.

    Backward fixpoint: the upward-closed set of markings that can cover the
    target is represented by the antichain of its minimal elements.  The
    predecessor basis of `m` under transition `t` is
    ``pre(t) + (m monus post(t))``.
    """
    target = Multiset(target)
    basis = [target]
    work = deque([target])
    while work:
        m = work.popleft()
        if m not in basis:
            continue  # subsumed since being queued
        for t in net.transitions:
            p = t.pre + _monus(m, t.post)
            if any(b <= p for b in basis):
                continue
            basis = [b for b in basis if not p <= b]
            basis.append(p)
            work.append(p)
    return any(b <= net.m0 for b in basis)


# ---------------------------------------------------------------------------
# Boundedness (Karp–Miller) and self-covering runs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SelfCoveringWitness:
    """A replayable run ``m0 --stem--> m1 --pump--> m2`` with ``m2 >= m1``.

    `stem` and `pump` are tuples of transition names; `pump` is nonempty.
    When `strict` is true, m2 dominates m1 strictly somewhere and the pump
    can be iterated to grow that coordinate without bound.
    """

    stem: Tuple
    pump: Tuple
    strict: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class OmegaMarking:
    """A marking whose counts live in N extended with omega (float('inf')).

    Omega coordinates absorb addition and subtraction; comparison treats
    omega as the top element.
    """

    counts: tuple

    OMEGA = float("inf")

    def __init__(self, items=None):
        if isinstance(items, OmegaMarking):
            object.__setattr__(self, "counts", items.counts)
            return
        d = dict(items or {})
        cleaned = {k: v for k, v in d.items() if v != 0}
        for k, v in cleaned.items():
            if v != OmegaMarking.OMEGA and (not isinstance(v, int) or v < 0):
                raise InputError(f"bad count for {k!r}: {v!r}")
        object.__setattr__(
            self, "counts", tuple(sorted(cleaned.items(), key=lambda kv: skey(kv[0])))
        )

    def __getitem__(self, key):
        for k, v in self.counts:
            if k == key:
                return v
        return 0

    def as_dict(self) -> dict:
        return dict(self.counts)

    def support(self) -> frozenset:
        return frozenset(k for k, _ in self.counts)

    def __add__(self, other) -> "OmegaMarking":
        d = self.as_dict()
        for k, v in _omega_items(other):
            d[k] = d.get(k, 0) + v
        return OmegaMarking(d)

    def __sub__(self, other) -> "OmegaMarking":
        d = self.as_dict()
        for k, v in _omega_items(other):
            cur = d.get(k, 0)
            if cur == OmegaMarking.OMEGA:
                continue  # omega absorbs subtraction
            if cur < v:
                raise MultisetUnderflow(f"omega marking underflow at {k!r}")
            d[k] = cur - v
        return OmegaMarking(d)

    def __le__(self, other) -> bool:
        other = OmegaMarking(other) if not isinstance(other, OmegaMarking) else other
        return all(v <= other[k] for k, v in self.counts)

    def covers(self, m: Multiset) -> bool:
        return all(self[k] >= v for k, v in m.items())

    def widen(self, smaller: "OmegaMarking") -> "OmegaMarking":
        """Set to omega every coordinate where self strictly exceeds `smaller`."""
        d = self.as_dict()
        for k in list(d):
            if d[k] > smaller[k]:
                d[k] = OmegaMarking.OMEGA
        return OmegaMarking(d)

    def has_omega(self) -> bool:
        return any(v == OmegaMarking.OMEGA for _, v in self.counts)

    def enabled(self, t: Transition) -> bool:
        return all(self[k] >= v for k, v in t.pre.items())

    def fire(self, t: Transition) -> "OmegaMarking":
        return (self - t.pre) + t.post


def _omega_items(m):
    if isinstance(m, OmegaMarking):
        return m.counts
    return tuple(Multiset(m).items())


def is_bounded(net: LabeledPetriNet, node_cap: int = 1_000_000):
    """Karp–Miller tree for `net`.

    Returns ``(True, None)`` when the reachability set is finite, or
    ``(False, witness)`` where the witness replays a run whose pump strictly
    increases some place and can be iterated forever.  The tree cuts a
    branch when its marking is dominated by an ancestor's (safe for the
    boundedness question by monotonicity); the first strict domination of an
    ancestor is the omega acquisition and stops the search.
    """
    root = Multiset(net.m0)
    # Each stack entry: (marking, path-of-names, ancestor chain as tuple of markings)
    stack = [(root, (), ())]
    expanded = 0
    while stack:
        m, path, ancestors = stack.pop()
        expanded += 1
        if expanded > node_cap:
            raise ResourceLimit("node_cap", node_cap, "Karp-Miller tree")
        for i, anc in enumerate(ancestors):
            # ancestors[i] sits at tree depth i, reached by path[:i]
            if anc <= m and anc != m:
                return False, SelfCoveringWitness(stem=path[:i], pump=path[i:], strict=True)
        if any(m <= anc for anc in ancestors):
            continue  # dominated: subtree adds nothing new to the boundedness question
        for t in reversed(net.transitions):
            if enabled(m, t):
                stack.append((fire(m, t), path + (t.name,), ancestors + (m,)))
    return True, None


def has_infinite_run(net: LabeledPetriNet, node_cap: int = 1_000_000):
    """True iff the net admits an infinite run, with a self-covering witness.

    A finite reachability tree without acceleration: when a node's marking
    dominates an ancestor's (equality allowed, connecting segment nonempty)
    the run is self-covering and unrolls to an infinite run; a branch is cut
    when its marking is dominated by (or equal to) an ancestor's, which by
    monotonicity cannot hide a witness.  Terminates by Dickson's lemma.
    """
    root = Multiset(net.m0)
    stack = [(root, (), ())]
    expanded = 0
    while stack:
        m, path, ancestors = stack.pop()
        expanded += 1
        if expanded > node_cap:
            raise ResourceLimit("node_cap", node_cap, "self-covering search tree")
        hit = None
        for i, anc in enumerate(ancestors):
            if anc <= m:
                hit = i
                break
        if hit is not None:
            return True, SelfCoveringWitness(
                stem=path[:hit], pump=path[hit:], strict=(ancestors[hit] != m)
            )
        # Any m <= ancestor here is strict (equality was reported above), so the
        # cut cannot hide a witness: replaying the lost suffix from the larger
        # ancestor preserves every dominating pair.
        if any(m <= anc for anc in ancestors):
            continue
        for t in reversed(net.transitions):
            if enabled(m, t):
                stack.append((fire(m, t), path + (t.name,), ancestors + (m,)))
    return False, None


# ---------------------------------------------------------------------------
# Language slice of a 1-bounded net
# ---------------------------------------------------------------------------


def reachable_markings(
    net: LabeledPetriNet, marking_cap: int = 200_000, require_1bounded: bool = False
):
    """All markings reachable from m0, with the labeled edge relation.

    Returns (markings: set, edges: set of (m, label-or-None, m')).  Raises
    ResourceLimit when more than `marking_cap` markings appear; with
    `require_1bounded`, raises InputError the moment any place holds two
    tokens (checked on every marking as it is discovered).
    """
    def check(m):
        if require_1bounded:
            bad = [p for p, v in m.items() if v > 1]
            if bad:
                raise InputError(
                    f"net is not 1-bounded: place(s) {bad!r} reach count 2 in {m!r}"
                )

    check(net.m0)
    seen = {net.m0}
    edges = set()
    work = deque([net.m0])
    while work:
        m = work.popleft()
        for t in net.transitions:
            if enabled(m, t):
                m2 = fire(m, t)
                edges.add((m, t.label, m2))
                if m2 not in seen:
                    check(m2)
                    seen.add(m2)
                    if len(seen) > marking_cap:
                        raise ResourceLimit("marking_cap", marking_cap, "net exploration")
                    work.append(m2)
    return seen, edges


def pn_language_upto(net: LabeledPetriNet, maxlen: int, marking_cap: int = 200_000) -> set:
    """Words of length <= maxlen labeling runs from m0 to exactly mf.

    The net must be 1-bounded; the exploration verifies this and raises
    InputError on the first marking that puts two tokens on a place.
    """
    markings, edges = reachable_markings(net, marking_cap, require_1bounded=True)
    # Group edges by source for the word search.
    out = {}
    for m, lab, m2 in edges:
        out.setdefault(m, []).append((lab, m2))
    for lst in out.values():
        lst.sort(key=lambda e: (skey(e[0]), skey(e[1])))
    words = set()
    seen = {(net.m0, ())}
    work = deque([(net.m0, ())])
    while work:
        m, w = work.popleft()
        if m == net.mf:
            words.add(w)
        for lab, m2 in out.get(m, ()):
            w2 = w if lab is None else w + (lab,)
            if len(w2) > maxlen:
                continue
            if (m2, w2) not in seen:
                seen.add((m2, w2))
                work.append((m2, w2))
    return words
