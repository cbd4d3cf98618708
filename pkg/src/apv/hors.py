"""Higher-order recursion schemes over simple types.

A scheme rewrites a start nonterminal into an infinite tree over a ranked
terminal alphabet.  This module provides:

  * simple types with order and arity,
  * scheme construction and type checking (`validate`),
  * arity normalization so that terminals become a binary branch symbol,
    a nullary end symbol, and unary letters (`normalize_arities`),
  * the branch-to-choice transformation turning the language of root-to-leaf
    paths of a deterministic scheme into the word language of a
    nondeterministic word scheme (`path_to_word_scheme`),
  * bounded enumeration of resolved tree paths (`enumerate_paths`) and of
    generated words (`enumerate_words`).

Terms are applicative: a term is either a bare symbol (a ``str``) or a spine
tuple ``(head, arg1, ..., argn)`` whose head is a symbol name and whose
arguments are terms.  Application is kept flattened, so the head of a tuple
is always a ``str``.
"""

from dataclasses import dataclass
from collections import deque
from typing import Dict, FrozenSet, Iterable, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

from .errors import InputError, ResourceLimit

Term = Union[str, tuple]

__all__ = [
    "SimpleType",
    "GROUND",
    "Rule",
    "Scheme",
    "WordScheme",
    "ValidationReport",
    "WordEnumeration",
    "validate",
    "normalize_arities",
    "path_to_word_scheme",
    "enumerate_paths",
    "enumerate_words",
    "term_head",
    "term_args",
    "make_term",
]


# ---------------------------------------------------------------------------
# Simple types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimpleType:
    """A simple type: the ground type or an arrow between two simple types.

    The ground type is ``SimpleType()``; an arrow is
    ``SimpleType(argument, result)``.  Order and arity follow the usual
    inductive definitions: the ground type has order and arity 0, and an
    arrow ``A -> B`` has order ``max(order(A) + 1, order(B))`` and arity
    ``arity(B) + 1``.
    """

    argument: Optional["SimpleType"] = None
    result: Optional["SimpleType"] = None

    def __post_init__(self) -> None:
        if (self.argument is None) != (self.result is None):
            raise InputError("arrow types need both an argument and a result")

    @property
    def is_ground(self) -> bool:
        return self.argument is None

    @property
    def order(self) -> int:
        if self.is_ground:
            return 0
        return max(self.argument.order + 1, self.result.order)

    @property
    def arity(self) -> int:
        if self.is_ground:
            return 0
        return self.result.arity + 1

    def argument_types(self) -> Tuple["SimpleType", ...]:
        """The list ``[A1, ..., An]`` such that self = A1 -> ... -> An -> o."""
        out = []
        t = self
        while not t.is_ground:
            out.append(t.argument)
            t = t.result
        return tuple(out)

    @staticmethod
    def function(arguments: Sequence["SimpleType"]) -> "SimpleType":
        """Build ``A1 -> ... -> An -> o`` from the argument list."""
        t = GROUND
        for a in reversed(tuple(arguments)):
            t = SimpleType(a, t)
        return t

    @staticmethod
    def parse(text: str) -> "SimpleType":
        """Parse ``"o"``, ``"o -> o"``, ``"(o -> o) -> o -> o"`` and the like."""
        tokens = text.replace("(", " ( ").replace(")", " ) ").replace("->", " -> ").split()
        pos = 0

        def atom() -> SimpleType:
            nonlocal pos
            if pos >= len(tokens):
                raise InputError(f"truncated type expression: {text!r}")
            tok = tokens[pos]
            if tok == "o":
                pos += 1
                return GROUND
            if tok == "(":
                pos += 1
                inner = arrow()
                if pos >= len(tokens) or tokens[pos] != ")":
                    raise InputError(f"unbalanced parenthesis in type: {text!r}")
                pos += 1
                return inner
            raise InputError(f"unexpected token {tok!r} in type: {text!r}")

        def arrow() -> SimpleType:
            nonlocal pos
            left = atom()
            if pos < len(tokens) and tokens[pos] == "->":
                pos += 1
                return SimpleType(left, arrow())
            return left

        result = arrow()
        if pos != len(tokens):
            raise InputError(f"trailing tokens in type: {text!r}")
        return result

    def __str__(self) -> str:
        if self.is_ground:
            return "o"
        left = str(self.argument)
        if not self.argument.is_ground:
            left = f"({left})"
        return f"{left} -> {self.result}"


GROUND = SimpleType()


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


def term_head(t: Term) -> str:
    return t if isinstance(t, str) else t[0]


def term_args(t: Term) -> tuple:
    return () if isinstance(t, str) else t[1:]


def make_term(head: str, args: Sequence[Term] = ()) -> Term:
    if not isinstance(head, str):
        raise InputError(f"term head must be a symbol name, got {head!r}")
    args = tuple(args)
    return head if not args else (head,) + args


def _apply(t: Term, extra: tuple) -> Term:
    """Extend an application spine with further arguments."""
    if not extra:
        return t
    return (term_head(t),) + term_args(t) + extra


def _substitute(t: Term, env: Dict[str, Term]) -> Term:
    head = term_head(t)
    args = tuple(_substitute(a, env) for a in term_args(t))
    if head in env:
        return _apply(env[head], args)
    return make_term(head, args)


def _term_size(t: Term, cap: Optional[int] = None) -> int:
    """Node count of a term; with ``cap``, stops counting just above it."""
    size = 0
    stack = [t]
    while stack:
        u = stack.pop()
        size += 1
        if cap is not None and size > cap:
            return size
        stack.extend(term_args(u))
    return size


# ---------------------------------------------------------------------------
# Schemes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Rule:
    """One rewrite rule ``head p1 ... pn -> body``."""

    head: str
    params: Tuple[str, ...]
    body: Term

    def __post_init__(self) -> None:
        if len(set(self.params)) != len(self.params):
            raise InputError(f"rule for {self.head!r} repeats a parameter name")


class Scheme:
    """A higher-order recursion scheme.

    ``terminals`` maps terminal names to arities, ``nonterminals`` maps
    nonterminal names to simple types, ``rules`` is the rewrite system, and
    ``start`` names the ground-typed start nonterminal.
    """

    def __init__(
        self,
        terminals: Mapping[str, int],
        nonterminals: Mapping[str, SimpleType],
        rules: Iterable[Rule],
        start: str,
    ) -> None:
        self.terminals: Dict[str, int] = dict(terminals)
        self.nonterminals: Dict[str, SimpleType] = dict(nonterminals)
        self.rules: Tuple[Rule, ...] = tuple(rules)
        self.start = start
        clash = set(self.terminals) & set(self.nonterminals)
        if clash:
            raise InputError(f"names used as both terminal and nonterminal: {sorted(clash)}")
        for name, arity in self.terminals.items():
            if not isinstance(arity, int) or arity < 0:
                raise InputError(f"terminal {name!r} has invalid arity {arity!r}")
        for rule in self.rules:
            if rule.head not in self.nonterminals:
                raise InputError(f"rule head {rule.head!r} is not a nonterminal")
        if start not in self.nonterminals:
            raise InputError(f"start symbol {start!r} is not a nonterminal")
        self._rules_by_head: Dict[str, Tuple[Rule, ...]] = {}
        for rule in self.rules:
            self._rules_by_head.setdefault(rule.head, ())
            self._rules_by_head[rule.head] += (rule,)

    def rules_for(self, nonterminal: str) -> Tuple[Rule, ...]:
        return self._rules_by_head.get(nonterminal, ())

    @property
    def deterministic(self) -> bool:
        """True when every nonterminal has exactly one rule."""
        return all(len(self.rules_for(n)) == 1 for n in self.nonterminals)

    @property
    def order(self) -> int:
        return max((t.order for t in self.nonterminals.values()), default=0)

    @property
    def unary_letters(self) -> FrozenSet[str]:
        return frozenset(n for n, a in self.terminals.items() if a == 1)

    def is_normalized(self) -> bool:
        """True when terminals are at most one binary branch symbol, at most
        one nullary end symbol, and otherwise unary letters."""
        binary = [n for n, a in self.terminals.items() if a == 2]
        nullary = [n for n, a in self.terminals.items() if a == 0]
        oversized = [n for n, a in self.terminals.items() if a > 2]
        return not oversized and len(binary) <= 1 and len(nullary) <= 1

    def branch_symbol(self) -> Optional[str]:
        """The unique binary terminal of a normalized scheme, if any."""
        binary = sorted(n for n, a in self.terminals.items() if a == 2)
        return binary[0] if len(binary) == 1 else None

    def end_symbol(self) -> Optional[str]:
        """The unique nullary terminal of a normalized scheme, if any."""
        nullary = sorted(n for n, a in self.terminals.items() if a == 0)
        return nullary[0] if len(nullary) == 1 else None

    def _key(self):
        return (
            tuple(sorted(self.terminals.items())),
            tuple(sorted((n, str(t)) for n, t in self.nonterminals.items())),
            self.rules,
            self.start,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scheme):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        return (
            f"{type(self).__name__}(start={self.start!r}, "
            f"|terminals|={len(self.terminals)}, |rules|={len(self.rules)})"
        )


class WordScheme(Scheme):
    """A scheme whose terminals are exactly one nullary end symbol plus unary
    letters, so every generated tree is a chain reading a finite word."""

    def __init__(self, terminals, nonterminals, rules, start) -> None:
        super().__init__(terminals, nonterminals, rules, start)
        nullary = [n for n, a in self.terminals.items() if a == 0]
        bad = [n for n, a in self.terminals.items() if a > 1]
        if len(nullary) != 1 or bad:
            raise InputError(
                "a word scheme needs exactly one nullary terminal and otherwise "
                f"unary terminals; got nullary={sorted(nullary)}, arity>1={sorted(bad)}"
            )


# ---------------------------------------------------------------------------
# Type checking
# ---------------------------------------------------------------------------


def _symbol_type(scheme: Scheme, env: Mapping[str, SimpleType], name: str) -> SimpleType:
    if name in env:
        return env[name]
    if name in scheme.nonterminals:
        return scheme.nonterminals[name]
    if name in scheme.terminals:
        return SimpleType.function([GROUND] * scheme.terminals[name])
    raise InputError(f"unknown symbol {name!r}")


def _type_of(scheme: Scheme, env: Mapping[str, SimpleType], t: Term, where: str) -> SimpleType:
    head = term_head(t)
    try:
        current = _symbol_type(scheme, env, head)
    except InputError as exc:
        raise InputError(f"{where}: {exc}") from None
    for arg in term_args(t):
        if current.is_ground:
            raise InputError(f"{where}: {head!r} is applied to too many arguments")
        arg_type = _type_of(scheme, env, arg, where)
        if arg_type != current.argument:
            raise InputError(
                f"{where}: argument of {head!r} has type {arg_type}, expected {current.argument}"
            )
        current = current.result
    return current


class ValidationReport(NamedTuple):
    """Outcome of type checking a scheme."""

    order: int
    deterministic: bool
    warnings: Tuple[str, ...]


def _check_typing(scheme: Scheme) -> None:
    """Type-check every rule; raise InputError naming the offending rule."""
    start_type = scheme.nonterminals[scheme.start]
    if start_type != GROUND:
        raise InputError(f"start symbol {scheme.start!r} must have the ground type, got {start_type}")
    for index, rule in enumerate(scheme.rules):
        where = f"rule {index} for {rule.head!r}"
        head_type = scheme.nonterminals[rule.head]
        arg_types = head_type.argument_types()
        if len(rule.params) != len(arg_types):
            raise InputError(
                f"{where}: left side must be fully applied; "
                f"{rule.head!r} has arity {len(arg_types)} but {len(rule.params)} parameters"
            )
        shadow = (set(rule.params) & set(scheme.terminals)) | (set(rule.params) & set(scheme.nonterminals))
        if shadow:
            raise InputError(f"{where}: parameters shadow scheme symbols: {sorted(shadow)}")
        env = dict(zip(rule.params, arg_types))
        body_type = _type_of(scheme, env, rule.body, where)
        if body_type != GROUND:
            raise InputError(f"{where}: body has type {body_type}, expected o")


_PROBE_ROUNDS = 20
_PROBE_NODE_CAP = 50_000


def validate(scheme: Scheme) -> ValidationReport:
    """Type-check a scheme and report its order and determinism.

    Unresolvability of the generated tree is not decided here; a bounded
    expansion probe only emits a warning when the unresolved frontier stops
    advancing, which suggests some position never produces a terminal.
    """
    _check_typing(scheme)
    warnings = []
    for name in sorted(scheme.nonterminals):
        if not scheme.rules_for(name):
            warnings.append(f"nonterminal {name!r} has no rules; it can never resolve")
    if scheme.deterministic:
        warning = _frontier_probe(scheme)
        if warning:
            warnings.append(warning)
    return ValidationReport(order=scheme.order, deterministic=scheme.deterministic, warnings=tuple(warnings))


def _frontier_probe(scheme: Scheme) -> Optional[str]:
    """Expand a deterministic scheme a fixed number of rounds and compare how
    deep the shallowest unresolved node sits; no progress suggests the scheme
    leaves part of its tree permanently unresolved."""
    t: Term = scheme.start
    depth_mid = depth_end = None
    try:
        for round_no in range(1, _PROBE_ROUNDS + 1):
            t, changed = _rewrite_outermost(scheme, t, _PROBE_NODE_CAP)
            if not changed:
                break
            if round_no == _PROBE_ROUNDS // 2:
                depth_mid = _min_unresolved_depth(scheme, t)
            if round_no == _PROBE_ROUNDS:
                depth_end = _min_unresolved_depth(scheme, t)
    except (ResourceLimit, RecursionError):
        return None  # too large to probe; stay silent
    if depth_end is not None and depth_mid is not None and depth_end <= depth_mid:
        return (
            f"unresolved frontier did not advance between expansion rounds "
            f"{_PROBE_ROUNDS // 2} and {_PROBE_ROUNDS}; the scheme may leave part "
            "of its tree permanently unresolved"
        )
    return None


# ---------------------------------------------------------------------------
# Rewriting
# ---------------------------------------------------------------------------


def _rewrite_outermost(scheme: Scheme, t: Term, node_cap: int) -> Tuple[Term, bool]:
    """One expansion round: rewrite every outermost redex, left to right.

    A redex is a fully applied nonterminal; rewriting one does not look for
    further redexes inside the freshly substituted body this round.  Returns
    the new term and whether anything changed.
    """
    budget = [node_cap]
    changed = [False]

    def walk(u: Term) -> Term:
        budget[0] -= 1
        if budget[0] < 0:
            raise ResourceLimit("node_cap", node_cap, "expansion round grew too large")
        head = term_head(u)
        args = term_args(u)
        rules = scheme.rules_for(head) if head in scheme.nonterminals else ()
        if rules and len(args) == scheme.nonterminals[head].arity:
            rule = rules[0]
            changed[0] = True
            return _substitute(rule.body, dict(zip(rule.params, args)))
        if not args:
            return u
        return make_term(head, tuple(walk(a) for a in args))

    return walk(t), changed[0]


def _min_unresolved_depth(scheme: Scheme, t: Term) -> Optional[int]:
    """Depth of the shallowest subterm that is not yet terminal-headed."""
    best = [None]

    def walk(u: Term, depth: int) -> None:
        if best[0] is not None and depth >= best[0]:
            return
        head = term_head(u)
        if head not in scheme.terminals:
            best[0] = depth
            return
        for a in term_args(u):
            walk(a, depth + 1)

    walk(t, 0)
    return best[0]


def _assert_ground(scheme: Scheme, t: Term) -> None:
    """Every expansion step must keep the sentential form at the ground type."""
    ty = _type_of(scheme, {}, t, "sentential form")
    if ty != GROUND:
        raise InputError(f"sentential form drifted to type {ty}; expected o")


# ---------------------------------------------------------------------------
# Arity normalization
# ---------------------------------------------------------------------------


def _fresh(base: str, taken) -> str:
    if base not in taken:
        return base
    n = 2
    while f"{base}{n}" in taken:
        n += 1
    return f"{base}{n}"


def _rename_symbol(t: Term, old: str, new: str) -> Term:
    head = term_head(t)
    args = tuple(_rename_symbol(a, old, new) for a in term_args(t))
    return make_term(new if head == old else head, args)


def normalize_arities(scheme: Scheme) -> Scheme:
    """Rewrite the terminal alphabet to one binary branch symbol, one nullary
    end symbol, and unary letters, preserving the path language.

    Terminals of arity at least three (and extra binaries) become
    nonterminals that expand to right-nested chains of the branch symbol;
    extra nullary terminals are replaced by the end symbol.
    """
    if scheme.is_normalized():
        return scheme

    terminals = dict(scheme.terminals)
    nonterminals = dict(scheme.nonterminals)
    rules = list(scheme.rules)
    taken = set(terminals) | set(nonterminals)

    wide = sorted(n for n, a in terminals.items() if a > 2)
    binaries = sorted(n for n, a in terminals.items() if a == 2)
    nullaries = sorted(n for n, a in terminals.items() if a == 0)

    # Pick the branch symbol: the unique binary if only chains for wider
    # terminals are needed, otherwise a fresh binary terminal.
    if len(binaries) == 1:
        branch = binaries[0]
        demote = []
    else:
        branch = "br" if ("br" in binaries) else None
        demote = [b for b in binaries if b != branch]
        if branch is None and (binaries or wide):
            branch = _fresh("br", taken)
            taken.add(branch)
            terminals[branch] = 2

    # Pick the end symbol and fold extra nullary terminals into it.
    end = None
    if nullaries:
        end = "e" if "e" in nullaries else nullaries[0]
        for other in nullaries:
            if other == end:
                continue
            del terminals[other]
            rules = [Rule(r.head, r.params, _rename_symbol(r.body, other, end)) for r in rules]

    # Wide terminals (and surplus binaries) become chain nonterminals.
    for name in wide + demote:
        arity = terminals.pop(name)
        params = tuple(f"x{i + 1}" for i in range(arity))
        chain: Term = params[-1]
        for p in reversed(params[:-1]):
            chain = make_term(branch, (p, chain))
        nonterminals[name] = SimpleType.function([GROUND] * arity)
        rules.append(Rule(name, params, chain))

    return Scheme(terminals, nonterminals, rules, scheme.start)


# ---------------------------------------------------------------------------
# Branch-to-choice transformation
# ---------------------------------------------------------------------------


def path_to_word_scheme(scheme: Scheme) -> WordScheme:
    """Turn a deterministic normalized scheme into a word scheme whose word
    language equals the scheme's path language.

    The binary branch terminal is replaced by a fresh nonterminal with the
    two projection rules, so each tree branch becomes a nondeterministic
    choice; unary letters and the end symbol are kept.  The added
    nonterminal has order 1, so the scheme order is unchanged (or raised to
    1 for order-0 input).
    """
    if not scheme.is_normalized():
        raise InputError("path_to_word_scheme needs a normalized scheme; call normalize_arities first")
    if not scheme.deterministic:
        raise InputError("path_to_word_scheme needs a deterministic scheme")
    _check_typing(scheme)

    branch = scheme.branch_symbol()
    terminals = {n: a for n, a in scheme.terminals.items() if a <= 1}
    nonterminals = dict(scheme.nonterminals)
    rules = list(scheme.rules)
    taken = set(scheme.terminals) | set(scheme.nonterminals)

    if scheme.end_symbol() is None:
        terminals[_fresh("e", taken)] = 0

    if branch is not None:
        choice = _fresh("B", taken)
        nonterminals[choice] = SimpleType.parse("o -> o -> o")
        rules = [Rule(r.head, r.params, _rename_symbol(r.body, branch, choice)) for r in rules]
        rules.append(Rule(choice, ("x", "y"), "x"))
        rules.append(Rule(choice, ("x", "y"), "y"))

    return WordScheme(terminals, nonterminals, rules, scheme.start)


# ---------------------------------------------------------------------------
# Bounded path enumeration
# ---------------------------------------------------------------------------


def enumerate_paths(scheme: Scheme, depth: int, *, node_cap: int = 500_000) -> FrozenSet[Tuple[str, ...]]:
    """Words read along fully resolved root-to-leaf paths after ``depth``
    expansion rounds of a deterministic scheme.

    Each round rewrites every outermost redex; unresolved subtrees are
    treated as holes through which no path is counted.  Only paths ending at
    a nullary terminal contribute, projected to the unary letters.  The
    result under-approximates the full path language but every returned word
    is exact.  Terminals of any arity are accepted: labels other than unary
    letters simply vanish under the projection.
    """
    if not scheme.deterministic:
        raise InputError("path enumeration needs a deterministic scheme")
    _check_typing(scheme)

    t: Term = scheme.start
    try:
        for _ in range(depth):
            t, changed = _rewrite_outermost(scheme, t, node_cap)
            _assert_ground(scheme, t)
            if not changed:
                break
    except RecursionError:
        raise ResourceLimit("term_depth", depth, "expansion nested too deeply") from None
    return frozenset(_resolved_paths(scheme, t))


def _resolved_paths(scheme: Scheme, t: Term) -> FrozenSet[Tuple[str, ...]]:
    """Projections onto unary letters of complete paths in the resolved part."""

    def walk(u: Term) -> FrozenSet[Tuple[str, ...]]:
        head = term_head(u)
        if head not in scheme.terminals:
            return frozenset()  # unresolved hole: no complete path through here
        args = term_args(u)
        if not args:
            return frozenset({()})
        suffixes = frozenset().union(*(walk(a) for a in args))
        if scheme.terminals[head] == 1:
            return frozenset((head,) + s for s in suffixes)
        return suffixes

    return walk(t)


# ---------------------------------------------------------------------------
# Bounded word enumeration
# ---------------------------------------------------------------------------


class WordEnumeration(NamedTuple):
    """Result of a bounded word search: the words found and whether the
    search space was exhausted (making the slice up to ``maxlen`` exact)."""

    words: FrozenSet[Tuple[str, ...]]
    exhausted: bool


def _split_chain(scheme: Scheme, t: Term) -> Tuple[Tuple[str, ...], Term]:
    """Peel the longest prefix of unary terminals off a ground sentential form."""
    prefix = []
    while True:
        head = term_head(t)
        if head in scheme.terminals and scheme.terminals[head] == 1:
            prefix.append(head)
            (t,) = term_args(t)
        else:
            return tuple(prefix), t


def enumerate_words(
    word_scheme: Scheme,
    maxlen: int,
    budget: int = 20_000,
    *,
    term_cap: int = 4_000,
) -> WordEnumeration:
    """Breadth-first nondeterministic rewriting of a word scheme, collecting
    every fully resolved word of length at most ``maxlen``.

    Rewriting always expands the topmost nonterminal, branching over its
    rules; forms whose emitted prefix already exceeds ``maxlen`` are dropped,
    which cannot lose in-slice words because the prefix only ever grows.
    ``exhausted`` is True when the search emptied its frontier within
    ``budget`` expansions without dropping any form for size reasons; the
    returned slice is then exactly the word language cut at ``maxlen``.
    """
    nullary = [n for n, a in word_scheme.terminals.items() if a == 0]
    oversized = [n for n, a in word_scheme.terminals.items() if a > 1]
    if len(nullary) != 1 or oversized:
        raise InputError(
            "word enumeration needs a word scheme: exactly one nullary terminal "
            f"and unary letters; got nullary={sorted(nullary)}, arity>1={sorted(oversized)}"
        )
    _check_typing(word_scheme)
    end = nullary[0]

    words = set()
    exhausted = True
    start: Term = word_scheme.start
    queue = deque([start])
    seen = {start}
    expansions = 0

    while queue:
        if expansions >= budget:
            exhausted = False
            break
        expansions += 1
        t = queue.popleft()
        prefix, core = _split_chain(word_scheme, t)
        if term_head(core) == end:
            if len(prefix) <= maxlen:
                words.add(prefix)
            continue
        if len(prefix) > maxlen:
            continue
        head = term_head(core)
        args = term_args(core)
        # Typing guarantees the core of a ground chain is a fully applied
        # nonterminal once unary letters are peeled off.
        rules = word_scheme.rules_for(head)
        for rule in rules:
            try:
                new_core = _substitute(rule.body, dict(zip(rule.params, args)))
            except RecursionError:
                raise ResourceLimit("term_depth", term_cap, "substitution nested too deeply") from None
            new_term: Term = new_core
            for letter in reversed(prefix):
                new_term = make_term(letter, (new_term,))
            if new_term in seen:
                continue
            if _term_size(new_core, term_cap) > term_cap:
                exhausted = False
                continue
            seen.add(new_term)
            queue.append(new_term)

    return WordEnumeration(frozenset(words), exhausted)
