"""Finite multisets, configurations, and preruns.

A multiset over an alphabet maps letters to non-negative counts; it models
the bag of pending handler instances of an asynchronous program.  Zero
counts are never stored, so two multisets are equal iff they have the same
dict of positive counts.  Counts are plain Python ints (arbitrary
precision), so there is no overflow to detect.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Tuple, Union

from .errors import InputError, MultisetUnderflow


def _key(x):
    """Stable sort key for letters of any (possibly mixed) types."""
    return (type(x).__name__, repr(x))


class Multiset(Mapping):
    """Immutable multiset with elementwise sum, checked difference, and inclusion.

    Accepts a mapping letter -> count, an iterable of letters (counted), or
    nothing.  Lookup of an absent letter returns 0.
    """

    __slots__ = ("_counts", "_hash")

    def __init__(self, items: Union[Mapping, Iterable, None] = None):
        counts = {}
        if items is None:
            pass
        elif isinstance(items, Multiset):
            counts = dict(items._counts)
        elif isinstance(items, Mapping):
            for k, v in items.items():
                if not isinstance(v, int):
                    raise InputError(f"multiset count for {k!r} must be an int, got {type(v).__name__}")
                if v < 0:
                    raise InputError(f"multiset count for {k!r} must be non-negative, got {v}")
                if v > 0:
                    counts[k] = counts.get(k, 0) + v
        else:
            for k in items:
                counts[k] = counts.get(k, 0) + 1
        object.__setattr__(self, "_counts", counts)
        object.__setattr__(self, "_hash", None)

    # -- Mapping interface ------------------------------------------------

    def __getitem__(self, key) -> int:
        return self._counts.get(key, 0)

    def __iter__(self) -> Iterator:
        return iter(sorted(self._counts, key=_key))

    def __len__(self) -> int:
        return len(self._counts)

    def __contains__(self, key) -> bool:
        return key in self._counts

    # -- algebra -----------------------------------------------------------

    def __add__(self, other: "Multiset") -> "Multiset":
        counts = dict(self._counts)
        for k, v in other._counts.items():
            counts[k] = counts.get(k, 0) + v
        return Multiset(counts)

    def __sub__(self, other: "Multiset") -> "Multiset":
        """Multiset difference; raises MultisetUnderflow if other is not included."""
        counts = dict(self._counts)
        for k, v in other._counts.items():
            have = counts.get(k, 0)
            if v > have:
                raise MultisetUnderflow(f"cannot remove {v} x {k!r}: only {have} present")
            if v == have:
                counts.pop(k, None)
            else:
                counts[k] = have - v
        return Multiset(counts)

    def __le__(self, other: "Multiset") -> bool:
        return all(v <= other._counts.get(k, 0) for k, v in self._counts.items())

    def __lt__(self, other: "Multiset") -> bool:
        return self <= other and self._counts != other._counts

    def __eq__(self, other) -> bool:
        if not isinstance(other, Multiset):
            return NotImplemented
        return self._counts == other._counts

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = hash(frozenset(self._counts.items()))
            object.__setattr__(self, "_hash", h)
        return h

    # -- helpers -----------------------------------------------------------

    @property
    def card(self) -> int:
        """Total number of elements counted with multiplicity."""
        return sum(self._counts.values())

    @property
    def support(self) -> frozenset:
        """The set of letters with positive count."""
        return frozenset(self._counts)

    def add(self, letter, n: int = 1) -> "Multiset":
        return self + Multiset({letter: n})

    def remove(self, letter, n: int = 1) -> "Multiset":
        return self - Multiset({letter: n})

    def restrict(self, alphabet: Iterable) -> "Multiset":
        keep = set(alphabet)
        return Multiset({k: v for k, v in self._counts.items() if k in keep})

    def to_json(self) -> dict:
        return {k: v for k, v in sorted(self._counts.items(), key=lambda kv: _key(kv[0]))}

    @classmethod
    def from_json(cls, data) -> "Multiset":
        if not isinstance(data, dict):
            raise InputError(f"multiset JSON must be an object, got {type(data).__name__}")
        return cls(data)

    def __repr__(self) -> str:
        inner = ", ".join(f"{k!r}: {v}" for k, v in sorted(self._counts.items(), key=lambda kv: _key(kv[0])))
        return f"Multiset({{{inner}}})"


EMPTY = Multiset()


def parikh(word: Sequence, alphabet: Optional[Iterable] = None) -> Multiset:
    """Parikh image of a word: letter counts, restricted to `alphabet` if given.

    Letters outside the alphabet are dropped, not rejected; this is the
    projection used when handler words carry bookkeeping letters that do not
    correspond to posted tasks.
    """
    if alphabet is None:
        return Multiset(word)
    keep = set(alphabet)
    return Multiset([a for a in word if a in keep])


def is_subword(u: Sequence, w: Sequence) -> bool:
    """True iff u can be obtained from w by deleting letters (scattered subword)."""
    it = iter(w)
    return all(any(a == b for b in it) for a in u)


def subwords_of(w: Sequence, maxlen: Optional[int] = None) -> set:
    """All scattered subwords of w as tuples, optionally only those of bounded length."""
    out = {()}
    for a in w:
        new = set()
        for u in out:
            if maxlen is None or len(u) < maxlen:
                new.add(u + (a,))
        out |= new
    return out


@dataclass(frozen=True)
class Configuration:
    """A state of an asynchronous program: global state plus pending-task bag."""

    state: object
    buffer: Multiset

    def to_json(self) -> dict:
        return {"state": self.state, "buffer": self.buffer.to_json()}

    def __repr__(self) -> str:
        return f"Configuration({self.state!r}, {self.buffer!r})"


@dataclass(frozen=True)
class Prerun:
    """An alternating sequence c0 -s1-> c1 -s2-> ... of configurations and letters.

    A prerun only promises the shape; `is_run` records that every step was
    validated against the program semantics (each step removes one instance
    of its letter and adds the Parikh image of a handler word).
    """

    configs: Tuple[Configuration, ...]
    letters: Tuple[object, ...]
    is_run: bool = False

    def __post_init__(self):
        if len(self.configs) != len(self.letters) + 1:
            raise InputError(
                f"prerun needs one more configuration than letters: "
                f"{len(self.configs)} configs, {len(self.letters)} letters"
            )

    def __len__(self) -> int:
        return len(self.letters)

    def __getitem__(self, i: int) -> Configuration:
        return self.configs[i]

    def steps(self):
        for i, a in enumerate(self.letters):
            yield self.configs[i], a, self.configs[i + 1]

    def to_json(self) -> dict:
        return {
            "configs": [c.to_json() for c in self.configs],
            "letters": list(self.letters),
            "is_run": self.is_run,
        }


def prerun_leq(rho: Prerun, tau: Prerun) -> bool:
    """Pointwise order on preruns of equal length.

    rho <= tau iff they have the same length, the same states and letters in
    the same positions, and rho's buffers are included in tau's pointwise.
    """
    if len(rho) != len(tau):
        return False
    if rho.letters != tau.letters:
        return False
    for c, d in zip(rho.configs, tau.configs):
        if c.state != d.state or not (c.buffer <= d.buffer):
            return False
    return True
