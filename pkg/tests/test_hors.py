"""Tests for higher-order recursion schemes.

The central fixture is the order-2 scheme whose root-to-leaf paths read the
language {c^n d^n f^n | n >= 0}; its transformed word scheme must generate
exactly the same words.  Differential tests compare bounded path enumeration
against bounded word enumeration on randomly generated schemes.
"""

import pytest

from apv.errors import InputError
from apv.hors import (
    GROUND,
    Rule,
    Scheme,
    SimpleType,
    WordScheme,
    enumerate_paths,
    enumerate_words,
    normalize_arities,
    path_to_word_scheme,
    validate,
)
from corpus import enumerable_random_schemes

ty = SimpleType.parse


def triple_letter_scheme():
    """Deterministic order-2 scheme whose path language is {c^n d^n f^n}."""
    return Scheme(
        terminals={"br": 2, "e": 0, "c": 1, "d": 1, "f": 1},
        nonterminals={
            "S": GROUND,
            "F": ty("(o -> o) -> o -> o"),
            "H": ty("(o -> o) -> o -> o"),
            "I": ty("o -> o"),
        },
        rules=[
            Rule("S", (), ("F", "I", "e")),
            Rule("I", ("x",), "x"),
            Rule("F", ("G", "x"), ("br", ("F", ("H", "G"), ("f", "x")), ("G", "x"))),
            Rule("H", ("G", "x"), ("c", ("G", ("d", "x")))),
        ],
        start="S",
    )


def is_triple(word):
    n, r = divmod(len(word), 3)
    return r == 0 and word == ("c",) * n + ("d",) * n + ("f",) * n


class TestSimpleTypes:
    def test_ground(self):
        assert GROUND.is_ground
        assert GROUND.order == 0
        assert GROUND.arity == 0

    def test_orders_and_arities(self):
        unary = ty("o -> o")
        assert (unary.order, unary.arity) == (1, 1)
        binary = ty("o -> o -> o")
        assert (binary.order, binary.arity) == (1, 2)
        second = ty("(o -> o) -> o -> o")
        assert (second.order, second.arity) == (2, 2)
        assert second.argument_types() == (unary, GROUND)

    def test_parse_render_round_trip(self):
        for text in ["o", "o -> o", "(o -> o) -> o -> o", "((o -> o) -> o) -> o"]:
            parsed = ty(text)
            assert ty(str(parsed)) == parsed
        assert str(ty("o -> (o -> o)")) == "o -> o -> o"  # right association

    def test_parse_errors(self):
        for bad in ["", "o ->", "(o -> o", "o o", "x"]:
            with pytest.raises(InputError):
                ty(bad)

    def test_function_builder(self):
        assert SimpleType.function([GROUND, GROUND]) == ty("o -> o -> o")
        assert SimpleType.function([]) == GROUND


class TestValidate:
    def test_triple_letter_scheme_report(self):
        report = validate(triple_letter_scheme())
        assert report.order == 2
        assert report.deterministic
        assert report.warnings == ()

    def test_body_must_be_ground(self):
        # Body `c` alone has type o -> o.
        with pytest.raises(InputError, match="type"):
            validate(Scheme({"c": 1, "e": 0}, {"S": GROUND}, [Rule("S", (), "c")], "S"))

    def test_left_side_fully_applied(self):
        bad = Scheme(
            {"e": 0},
            {"S": GROUND, "N": ty("o -> o")},
            [Rule("S", (), ("N", "e")), Rule("N", (), "e")],
            "S",
        )
        with pytest.raises(InputError, match="fully applied"):
            validate(bad)

    def test_too_many_arguments(self):
        with pytest.raises(InputError, match="too many"):
            validate(Scheme({"e": 0}, {"S": GROUND}, [Rule("S", (), ("e", "e"))], "S"))

    def test_unknown_symbol(self):
        with pytest.raises(InputError, match="unknown"):
            validate(Scheme({"e": 0}, {"S": GROUND}, [Rule("S", (), "ghost")], "S"))

    def test_argument_type_mismatch(self):
        bad = Scheme(
            {"e": 0, "c": 1},
            {"S": GROUND, "F": ty("(o -> o) -> o")},
            [Rule("S", (), ("F", "e")), Rule("F", ("G",), ("G", "e"))],
            "S",
        )
        with pytest.raises(InputError, match="expected"):
            validate(bad)

    def test_two_rules_allowed_but_flagged(self):
        scheme = Scheme(
            {"e": 0, "c": 1},
            {"S": GROUND},
            [Rule("S", (), "e"), Rule("S", (), ("c", "e"))],
            "S",
        )
        report = validate(scheme)
        assert not report.deterministic

    def test_unresolving_nonterminal_warns(self):
        looping = Scheme(
            {"e": 0},
            {"S": GROUND, "A": ty("o -> o")},
            [Rule("S", (), ("A", "e")), Rule("A", ("x",), ("A", "x"))],
            "S",
        )
        report = validate(looping)
        assert any("unresolved" in w for w in report.warnings)

    def test_missing_rules_warn(self):
        silent = Scheme({"e": 0}, {"S": GROUND, "A": ty("o -> o")}, [Rule("S", (), "e")], "S")
        report = validate(silent)
        assert any("no rules" in w for w in report.warnings)

    def test_start_must_be_ground(self):
        with pytest.raises(InputError, match="ground"):
            validate(Scheme({"e": 0}, {"S": ty("o -> o")}, [Rule("S", ("x",), "x")], "S"))


class TestEnumeratePaths:
    def test_depth_zero_is_empty(self):
        assert enumerate_paths(triple_letter_scheme(), 0) == frozenset()

    def test_trivial_end_rule(self):
        scheme = Scheme({"e": 0}, {"S": GROUND}, [Rule("S", (), "e")], "S")
        assert enumerate_paths(scheme, 1) == {()}

    def test_triple_letter_growth(self):
        scheme = triple_letter_scheme()
        shallow = enumerate_paths(scheme, 5)
        assert shallow == {(), ("c", "d", "f")}
        deeper = enumerate_paths(scheme, 12)
        assert deeper >= {(), ("c", "d", "f"), ("c", "c", "d", "d", "f", "f")}
        assert all(is_triple(w) for w in deeper)

    def test_monotone_in_depth(self):
        scheme = triple_letter_scheme()
        previous = frozenset()
        for depth in range(0, 14, 2):
            current = enumerate_paths(scheme, depth)
            assert previous <= current
            previous = current

    def test_requires_deterministic(self):
        nondet = Scheme(
            {"e": 0, "c": 1},
            {"S": GROUND},
            [Rule("S", (), "e"), Rule("S", (), ("c", "e"))],
            "S",
        )
        with pytest.raises(InputError, match="deterministic"):
            enumerate_paths(nondet, 4)

    def test_branchless_scheme_single_path(self):
        chain = Scheme(
            {"e": 0, "c": 1},
            {"S": GROUND},
            [Rule("S", (), ("c", ("c", "e")))],
            "S",
        )
        assert enumerate_paths(chain, 2) == {("c", "c")}


class TestNormalizeArities:
    def test_wide_terminal_becomes_chain(self):
        wide = Scheme(
            {"g": 3, "e": 0, "a": 1},
            {"S": GROUND},
            [Rule("S", (), ("g", ("a", "e"), "e", ("a", ("a", "e"))))],
            "S",
        )
        norm = normalize_arities(wide)
        assert norm.is_normalized()
        assert sorted(norm.terminals.items()) == [("a", 1), ("br", 2), ("e", 0)]
        assert "g" in norm.nonterminals

    def test_path_slices_preserved(self):
        wide = Scheme(
            {"g": 3, "e": 0, "a": 1, "b": 1},
            {"S": GROUND, "N": ty("o -> o")},
            [
                Rule("S", (), ("g", ("a", "e"), ("N", "e"), ("b", ("a", "e")))),
                Rule("N", ("x",), ("b", "x")),
            ],
            "S",
        )
        norm = normalize_arities(wide)
        before = {w for w in enumerate_paths(wide, 10) if len(w) <= 6}
        after = {w for w in enumerate_paths(norm, 14) if len(w) <= 6}
        assert before == after
        assert before == {("a",), ("b",), ("b", "a")}

    def test_extra_nullaries_fold_into_end(self):
        scheme = Scheme(
            {"e": 0, "nil": 0, "a": 1},
            {"S": GROUND},
            [Rule("S", (), ("a", "nil"))],
            "S",
        )
        norm = normalize_arities(scheme)
        assert norm.is_normalized()
        assert "nil" not in norm.terminals
        assert enumerate_paths(norm, 3) == {("a",)}

    def test_already_normalized_unchanged(self):
        scheme = triple_letter_scheme()
        assert normalize_arities(scheme) is scheme

    def test_preserves_determinism(self):
        wide = Scheme(
            {"g": 4, "e": 0},
            {"S": GROUND},
            [Rule("S", (), ("g", "e", "e", "e", "e"))],
            "S",
        )
        norm = normalize_arities(wide)
        assert norm.deterministic
        assert validate(norm).warnings == ()


class TestPathToWordScheme:
    def test_produces_word_scheme_of_same_order(self):
        scheme = triple_letter_scheme()
        word_scheme = path_to_word_scheme(scheme)
        assert isinstance(word_scheme, WordScheme)
        assert word_scheme.order == scheme.order == 2
        assert not word_scheme.deterministic

    def test_branch_symbol_gone(self):
        word_scheme = path_to_word_scheme(triple_letter_scheme())
        assert "br" not in word_scheme.terminals
        assert sorted(word_scheme.terminals.items()) == [
            ("c", 1),
            ("d", 1),
            ("e", 0),
            ("f", 1),
        ]

    def test_requires_normalized(self):
        wide = Scheme(
            {"g": 3, "e": 0},
            {"S": GROUND},
            [Rule("S", (), ("g", "e", "e", "e"))],
            "S",
        )
        with pytest.raises(InputError, match="normalize"):
            path_to_word_scheme(wide)

    def test_requires_deterministic(self):
        nondet = Scheme(
            {"e": 0, "c": 1},
            {"S": GROUND},
            [Rule("S", (), "e"), Rule("S", (), ("c", "e"))],
            "S",
        )
        with pytest.raises(InputError, match="deterministic"):
            path_to_word_scheme(nondet)

    def test_body_e_only_gives_empty_word(self):
        scheme = Scheme({"e": 0}, {"S": GROUND}, [Rule("S", (), "e")], "S")
        result = enumerate_words(path_to_word_scheme(scheme), 4)
        assert result.words == {()}
        assert result.exhausted


class TestEnumerateWords:
    def test_triple_letter_slice_at_nine(self):
        word_scheme = path_to_word_scheme(triple_letter_scheme())
        result = enumerate_words(word_scheme, 9)
        expected = {
            (),
            ("c", "d", "f"),
            ("c", "c", "d", "d", "f", "f"),
            ("c", "c", "c", "d", "d", "d", "f", "f", "f"),
        }
        assert result.words == expected
        # The word scheme keeps growing unresolved forms, so the frontier
        # cannot be exhausted within any finite budget.
        assert not result.exhausted

    def test_longer_slice_adds_next_word(self):
        word_scheme = path_to_word_scheme(triple_letter_scheme())
        result = enumerate_words(word_scheme, 12, 60_000)
        assert ("c",) * 4 + ("d",) * 4 + ("f",) * 4 in result.words
        assert all(is_triple(w) for w in result.words)

    def test_choice_only_scheme(self):
        word_scheme = WordScheme(
            {"e": 0},
            {"S": GROUND, "B": ty("o -> o -> o")},
            [
                Rule("S", (), ("B", "e", "e")),
                Rule("B", ("x", "y"), "x"),
                Rule("B", ("x", "y"), "y"),
            ],
            "S",
        )
        result = enumerate_words(word_scheme, 5)
        assert result.words == {()}
        assert result.exhausted

    def test_rejects_non_word_shape(self):
        with pytest.raises(InputError, match="word scheme"):
            enumerate_words(triple_letter_scheme(), 5)

    def test_word_scheme_constructor_rejects_binary(self):
        with pytest.raises(InputError, match="word scheme"):
            WordScheme({"br": 2, "e": 0}, {"S": GROUND}, [Rule("S", (), "e")], "S")

    def test_budget_exhaustion_is_flagged_not_fatal(self):
        word_scheme = path_to_word_scheme(triple_letter_scheme())
        result = enumerate_words(word_scheme, 9, budget=50)
        assert not result.exhausted
        assert all(is_triple(w) for w in result.words)

    def test_results_deterministic(self):
        word_scheme = path_to_word_scheme(triple_letter_scheme())
        first = enumerate_words(word_scheme, 9, 5_000)
        second = enumerate_words(word_scheme, 9, 5_000)
        assert first == second


class TestPathWordAgreement:
    """Differential evidence that branch-to-choice preserves the language."""

    def test_twenty_random_schemes_agree_on_exhausted_slice(self):
        pairs = enumerable_random_schemes(20260816, 20, maxlen=6)
        for scheme, words in pairs:
            assert scheme.order <= 2
            assert len(scheme.rules) <= 4
            sliced = None
            for depth in (8, 14, 22, 34, 50):
                paths = enumerate_paths(scheme, depth)
                sliced = frozenset(w for w in paths if len(w) <= 6)
                if sliced == words:
                    break
            assert sliced == words, f"path/word mismatch: {sorted(sliced)} vs {sorted(words)}"

    def test_normalized_random_schemes_stay_normalized(self):
        pairs = enumerable_random_schemes(77, 5, maxlen=5)
        for scheme, _ in pairs:
            assert scheme.is_normalized()
            assert normalize_arities(scheme) is scheme
