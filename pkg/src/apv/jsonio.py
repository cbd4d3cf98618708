"""JSON file formats for every object the command line reads or writes.

All documents are plain JSON.  Loaders validate shape and report problems
with JSON-pointer locations (``/contexts/3/language``); serializers emit
canonical documents (sorted keys, sorted state lists, two-space indent) so
identical inputs produce byte-identical outputs.

Formats:

* NFA      ``{states, alphabet, initial, finals, transitions: [{from, label, to}]}``
           with ``""`` as the epsilon label.
* PDA      ``{states, input_alphabet, stack_alphabet, initial, final,
           edges: [{from, input: {kind: "word"|"nfa", ...},
           stack: {op: "push"|"pop"|"none", symbol?}, to}]}``.
* Petri net ``{alphabet, places, transitions: [{name, in, out, label}],
           initial, final}`` with ``""`` for silent labels.
* Recursion scheme ``{terminals: [{name, arity}], nonterminals: [{name, type}],
           rules: [{head, params, body}], start}``; terms are symbol strings
           or application arrays (nested arrays are flattened).
* Program  ``{states, alphabet, initial, initial_buffer,
           contexts: [{from, handler, to, language}]}``.  A language is an
           inline object ``{kind: "finite"|"nfa"|"pda"|"hors", ...}`` or a
           reference ``{ref: "relative/path.json", ...}``; referenced kinds
           are detected from file content.  Scheme-backed languages enter as
           a bounded word-enumeration slice and mark the load as an
           under-approximation (sound for FAILS findings only).
* Program with internal actions ``{states, alphabet, internal_alphabet,
           handlers: {name: language}, router: [{from, letter, to}],
           initial, initial_buffer}``; loading compiles it away into a pure
           program.
"""

import json
import os
from typing import Dict, List, NamedTuple, Optional, Tuple

from .automata import Nfa, nfa_word, skey
from .errors import InputError
from .hors import GROUND, Rule, Scheme, SimpleType, WordScheme, enumerate_words, normalize_arities, path_to_word_scheme, term_args, term_head, validate
from .multiset import Configuration, Multiset
from .pda import Pda, SimplePda, simple_to_pda
from .petrinet import LabeledPetriNet, Transition
from .reductions import compile_internal
from .semantics import APWithInternal, AsyncProgram

__all__ = [
    "LoadedProgram",
    "detect_kind",
    "load_ap",
    "load_ap_doc",
    "load_configuration_doc",
    "load_document",
    "load_language_file",
    "load_nfa_doc",
    "load_pda_doc",
    "load_pn_doc",
    "load_scheme_doc",
    "ap_to_doc",
    "configuration_to_doc",
    "nfa_to_doc",
    "pda_to_doc",
    "pn_to_doc",
    "scheme_to_doc",
    "dumps_canonical",
    "save_document",
]


# ---------------------------------------------------------------------------
# Pointer-tracked accessors
# ---------------------------------------------------------------------------


def _at(ptr: str, key) -> str:
    return f"{ptr}/{key}"


def _req(doc: dict, key: str, ptr: str):
    if not isinstance(doc, dict):
        raise InputError(f"{ptr or '/'}: expected an object")
    if key not in doc:
        raise InputError(f"{ptr or '/'}: missing key {key!r}")
    return doc[key]


def _as_list(value, ptr: str) -> list:
    if not isinstance(value, list):
        raise InputError(f"{ptr}: expected an array")
    return value


def _as_str(value, ptr: str) -> str:
    if not isinstance(value, str):
        raise InputError(f"{ptr}: expected a string")
    return value


def _as_name(value, ptr: str) -> str:
    """States, letters, and symbols are strings in every file format."""
    if isinstance(value, str):
        return value
    raise InputError(f"{ptr}: expected a name string, got {type(value).__name__}")


def _name_list(value, ptr: str) -> List[str]:
    return [_as_name(v, _at(ptr, i)) for i, v in enumerate(_as_list(value, ptr))]


def _as_int(value, ptr: str, minimum: Optional[int] = None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise InputError(f"{ptr}: expected an integer")
    if minimum is not None and value < minimum:
        raise InputError(f"{ptr}: expected an integer >= {minimum}")
    return value


def _load_multiset(value, ptr: str) -> Multiset:
    if not isinstance(value, dict):
        raise InputError(f"{ptr}: expected an object mapping letters to counts")
    counts = {}
    for letter, count in value.items():
        counts[letter] = _as_int(count, _at(ptr, letter), minimum=0)
    return Multiset(counts)


def _load_word(value, ptr: str) -> Tuple[str, ...]:
    return tuple(_name_list(value, ptr))


# ---------------------------------------------------------------------------
# Canonical naming for machine-generated states and letters
# ---------------------------------------------------------------------------


def _stringify(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if value is None:
        return "None"
    if isinstance(value, tuple):
        return "(" + ",".join(_stringify(v) for v in value) + ")"
    if isinstance(value, (set, frozenset)):
        return "{" + ",".join(sorted(_stringify(v) for v in value)) + "}"
    return repr(value)


def _name_map(values, fallback_prefix: str) -> Dict:
    """Deterministic injective value -> string map; loaded (string-named)
    objects map to themselves, constructed ones get readable renderings."""
    ordered = sorted(values, key=skey)
    out = {v: _stringify(v) for v in ordered}
    if len(set(out.values())) != len(out):
        out = {v: f"{fallback_prefix}{i}" for i, v in enumerate(ordered)}
    return out


# ---------------------------------------------------------------------------
# NFA
# ---------------------------------------------------------------------------


def load_nfa_doc(doc: dict, ptr: str = "") -> Nfa:
    states = _name_list(_req(doc, "states", ptr), _at(ptr, "states"))
    alphabet = _name_list(_req(doc, "alphabet", ptr), _at(ptr, "alphabet"))
    initial = _as_name(_req(doc, "initial", ptr), _at(ptr, "initial"))
    finals = _name_list(_req(doc, "finals", ptr), _at(ptr, "finals"))
    transitions = set()
    tlist = _as_list(_req(doc, "transitions", ptr), _at(ptr, "transitions"))
    for i, t in enumerate(tlist):
        tp = _at(_at(ptr, "transitions"), i)
        src = _as_name(_req(t, "from", tp), _at(tp, "from"))
        dst = _as_name(_req(t, "to", tp), _at(tp, "to"))
        label = _as_str(_req(t, "label", tp), _at(tp, "label"))
        transitions.add((src, label if label else None, dst))
    try:
        return Nfa(
            states=frozenset(states),
            alphabet=frozenset(alphabet),
            transitions=frozenset(transitions),
            initial=initial,
            finals=frozenset(finals),
        )
    except InputError as exc:
        raise InputError(f"{ptr or '/'}: {exc}") from None


def nfa_to_doc(nfa: Nfa) -> dict:
    names = _name_map(nfa.states, "q")
    return {
        "states": sorted(names.values()),
        "alphabet": sorted(nfa.alphabet, key=skey),
        "initial": names[nfa.initial],
        "finals": sorted(names[f] for f in nfa.finals),
        "transitions": [
            {"from": names[p], "label": "" if a is None else a, "to": names[q]}
            for (p, a, q) in sorted(
                nfa.transitions, key=lambda t: (skey(t[0]), skey(t[1] or ""), skey(t[2]))
            )
        ],
    }


# ---------------------------------------------------------------------------
# PDA
# ---------------------------------------------------------------------------


def load_pda_doc(doc: dict, ptr: str = "") -> Pda:
    states = _name_list(_req(doc, "states", ptr), _at(ptr, "states"))
    input_alphabet = _name_list(_req(doc, "input_alphabet", ptr), _at(ptr, "input_alphabet"))
    stack_alphabet = _name_list(_req(doc, "stack_alphabet", ptr), _at(ptr, "stack_alphabet"))
    initial = _as_name(_req(doc, "initial", ptr), _at(ptr, "initial"))
    finals_val = doc.get("final", doc.get("finals"))
    if finals_val is None:
        raise InputError(f"{ptr or '/'}: missing key 'final'")
    finals = _name_list(finals_val, _at(ptr, "final"))
    edges = set()
    elist = _as_list(_req(doc, "edges", ptr), _at(ptr, "edges"))
    for i, e in enumerate(elist):
        ep = _at(_at(ptr, "edges"), i)
        src = _as_name(_req(e, "from", ep), _at(ep, "from"))
        dst = _as_name(_req(e, "to", ep), _at(ep, "to"))
        label = _load_pda_input(_req(e, "input", ep), _at(ep, "input"))
        op = _load_stack_op(_req(e, "stack", ep), _at(ep, "stack"))
        edges.add((src, label, op, dst))
    try:
        return Pda(
            states=frozenset(states),
            input_alphabet=frozenset(input_alphabet),
            stack_alphabet=frozenset(stack_alphabet),
            edges=frozenset(edges),
            initial=initial,
            finals=frozenset(finals),
        )
    except InputError as exc:
        raise InputError(f"{ptr or '/'}: {exc}") from None


def _load_pda_input(value, ptr: str) -> Nfa:
    kind = _as_str(_req(value, "kind", ptr), _at(ptr, "kind"))
    if kind == "word":
        word = _load_word(_req(value, "word", ptr), _at(ptr, "word"))
        return nfa_word(word)
    if kind == "nfa":
        return load_nfa_doc(_req(value, "nfa", ptr), _at(ptr, "nfa"))
    raise InputError(f"{_at(ptr, 'kind')}: expected 'word' or 'nfa', got {kind!r}")


def _load_stack_op(value, ptr: str):
    op = _as_str(_req(value, "op", ptr), _at(ptr, "op"))
    if op == "none":
        return None
    if op in ("push", "pop"):
        symbol = _as_name(_req(value, "symbol", ptr), _at(ptr, "symbol"))
        return (op, symbol)
    raise InputError(f"{_at(ptr, 'op')}: expected 'push', 'pop', or 'none', got {op!r}")


def pda_to_doc(pda) -> dict:
    if isinstance(pda, SimplePda):
        pda = simple_to_pda(pda)
    names = _name_map(pda.states, "q")
    edges = []
    for (p, label, op, q) in pda.edges:
        edges.append(
            {
                "from": names[p],
                "input": {"kind": "nfa", "nfa": nfa_to_doc(label)},
                "stack": (
                    {"op": "none"} if op is None else {"op": op[0], "symbol": op[1]}
                ),
                "to": names[q],
            }
        )
    edges.sort(key=lambda e: json.dumps(e, sort_keys=True))
    return {
        "states": sorted(names.values()),
        "input_alphabet": sorted(pda.input_alphabet, key=skey),
        "stack_alphabet": sorted(pda.stack_alphabet, key=skey),
        "initial": names[pda.initial],
        "final": sorted(names[f] for f in pda.finals),
        "edges": edges,
    }


# ---------------------------------------------------------------------------
# Labeled Petri nets
# ---------------------------------------------------------------------------


def load_pn_doc(doc: dict, ptr: str = "") -> LabeledPetriNet:
    alphabet = _name_list(_req(doc, "alphabet", ptr), _at(ptr, "alphabet"))
    places = _name_list(_req(doc, "places", ptr), _at(ptr, "places"))
    transitions = []
    tlist = _as_list(_req(doc, "transitions", ptr), _at(ptr, "transitions"))
    for i, t in enumerate(tlist):
        tp = _at(_at(ptr, "transitions"), i)
        name = _as_name(_req(t, "name", tp), _at(tp, "name"))
        pre = _load_multiset(_req(t, "in", tp), _at(tp, "in"))
        post = _load_multiset(_req(t, "out", tp), _at(tp, "out"))
        label = _as_str(_req(t, "label", tp), _at(tp, "label"))
        transitions.append(Transition(name, pre, post, label if label else None))
    initial = _load_multiset(_req(doc, "initial", ptr), _at(ptr, "initial"))
    final = _load_multiset(_req(doc, "final", ptr), _at(ptr, "final"))
    try:
        return LabeledPetriNet(frozenset(alphabet), frozenset(places), tuple(transitions), initial, final)
    except InputError as exc:
        raise InputError(f"{ptr or '/'}: {exc}") from None


def _marking_doc(m: Multiset, names: Dict) -> dict:
    return {names[p]: n for p, n in sorted(m.items(), key=lambda kv: skey(kv[0]))}


def pn_to_doc(net: LabeledPetriNet) -> dict:
    places = _name_map(net.places, "p")
    tnames = _name_map([t.name for t in net.transitions], "t")
    return {
        "alphabet": sorted(net.alphabet, key=skey),
        "places": sorted(places.values()),
        "transitions": [
            {
                "name": tnames[t.name],
                "in": _marking_doc(t.pre, places),
                "out": _marking_doc(t.post, places),
                "label": t.label if t.label is not None else "",
            }
            for t in net.transitions
        ],
        "initial": _marking_doc(net.m0, places),
        "final": _marking_doc(net.mf, places),
    }


# ---------------------------------------------------------------------------
# Recursion schemes
# ---------------------------------------------------------------------------


def _load_term(value, ptr: str):
    if isinstance(value, str):
        return value
    if isinstance(value, list):
        if not value:
            raise InputError(f"{ptr}: empty application")
        parts = [_load_term(v, _at(ptr, i)) for i, v in enumerate(value)]
        head, rest = parts[0], parts[1:]
        return (term_head(head),) + term_args(head) + tuple(rest)
    raise InputError(f"{ptr}: a term is a symbol string or an application array")


def _term_to_doc(t):
    args = term_args(t)
    if not args:
        return term_head(t)
    return [term_head(t)] + [_term_to_doc(a) for a in args]


def load_scheme_doc(doc: dict, ptr: str = "") -> Scheme:
    terminals = {}
    tlist = _as_list(_req(doc, "terminals", ptr), _at(ptr, "terminals"))
    for i, t in enumerate(tlist):
        tp = _at(_at(ptr, "terminals"), i)
        name = _as_name(_req(t, "name", tp), _at(tp, "name"))
        terminals[name] = _as_int(_req(t, "arity", tp), _at(tp, "arity"), minimum=0)
    nonterminals = {}
    nlist = _as_list(_req(doc, "nonterminals", ptr), _at(ptr, "nonterminals"))
    for i, n in enumerate(nlist):
        np = _at(_at(ptr, "nonterminals"), i)
        name = _as_name(_req(n, "name", np), _at(np, "name"))
        text = _as_str(_req(n, "type", np), _at(np, "type"))
        try:
            nonterminals[name] = SimpleType.parse(text)
        except InputError as exc:
            raise InputError(f"{_at(np, 'type')}: {exc}") from None
    rules = []
    rlist = _as_list(_req(doc, "rules", ptr), _at(ptr, "rules"))
    for i, r in enumerate(rlist):
        rp = _at(_at(ptr, "rules"), i)
        head = _as_name(_req(r, "head", rp), _at(rp, "head"))
        params = tuple(_name_list(_req(r, "params", rp), _at(rp, "params")))
        body = _load_term(_req(r, "body", rp), _at(rp, "body"))
        rules.append(Rule(head, params, body))
    start = _as_name(_req(doc, "start", ptr), _at(ptr, "start"))
    try:
        scheme = Scheme(terminals, nonterminals, rules, start)
    except InputError as exc:
        raise InputError(f"{ptr or '/'}: {exc}") from None
    nullary = [n for n, a in scheme.terminals.items() if a == 0]
    if len(nullary) == 1 and all(a <= 1 for a in scheme.terminals.values()):
        return WordScheme(terminals, nonterminals, rules, start)
    return scheme


def scheme_to_doc(scheme: Scheme) -> dict:
    return {
        "terminals": [
            {"name": n, "arity": a} for n, a in sorted(scheme.terminals.items())
        ],
        "nonterminals": [
            {"name": n, "type": str(t)} for n, t in sorted(scheme.nonterminals.items())
        ],
        "rules": [
            {"head": r.head, "params": list(r.params), "body": _term_to_doc(r.body)}
            for r in scheme.rules
        ],
        "start": scheme.start,
    }


# ---------------------------------------------------------------------------
# Asynchronous programs
# ---------------------------------------------------------------------------


class LoadedProgram(NamedTuple):
    """A loaded program plus load-time facts the caller must surface.

    ``underapproximate`` is True when any handler language was admitted as a
    bounded enumeration slice of a recursion scheme: runs found in the
    program are genuine, but absence claims (HOLDS verdicts) do not transfer
    to the original program.
    """

    program: AsyncProgram
    underapproximate: bool
    notes: Tuple[str, ...]


def _load_language(value, base_dir: str, ptr: str):
    """Returns (language, underapproximate, notes)."""
    if not isinstance(value, dict):
        raise InputError(f"{ptr}: expected a language object")
    if "ref" in value:
        rel = _as_str(value["ref"], _at(ptr, "ref"))
        path = os.path.join(base_dir, rel)
        if not os.path.exists(path):
            raise InputError(f"{_at(ptr, 'ref')}: referenced file not found: {rel}")
        doc = _read_json(path)
        kind = detect_kind(doc)
        if kind == "nfa":
            return load_nfa_doc(doc, _at(ptr, "ref")), False, ()
        if kind == "pda":
            return load_pda_doc(doc, _at(ptr, "ref")), False, ()
        if kind == "scheme":
            scheme = load_scheme_doc(doc, _at(ptr, "ref"))
            return _scheme_slice_language(scheme, value, ptr)
        raise InputError(f"{_at(ptr, 'ref')}: file {rel} does not hold a language (detected {kind})")
    kind = _as_str(_req(value, "kind", ptr), _at(ptr, "kind"))
    if kind == "finite":
        words = _as_list(_req(value, "words", ptr), _at(ptr, "words"))
        return (
            frozenset(_load_word(w, _at(_at(ptr, "words"), i)) for i, w in enumerate(words)),
            False,
            (),
        )
    if kind == "nfa":
        return load_nfa_doc(_req(value, "nfa", ptr), _at(ptr, "nfa")), False, ()
    if kind == "pda":
        return load_pda_doc(_req(value, "pda", ptr), _at(ptr, "pda")), False, ()
    if kind == "hors":
        scheme = load_scheme_doc(_req(value, "hors", ptr), _at(ptr, "hors"))
        return _scheme_slice_language(scheme, value, ptr)
    raise InputError(f"{_at(ptr, 'kind')}: expected 'finite', 'nfa', 'pda', or 'hors', got {kind!r}")


def _scheme_slice_language(scheme: Scheme, value: dict, ptr: str):
    """Admit a recursion scheme as a handler language via a bounded word
    slice; the result under-approximates, so only FAILS findings transfer."""
    raw_maxlen = value.get("max_len", value.get("maxlen", 8))
    maxlen = _as_int(raw_maxlen, _at(ptr, "max_len"), minimum=0)
    budget = _as_int(value.get("budget", 20_000), _at(ptr, "budget"), minimum=1)
    nullary = [n for n, a in scheme.terminals.items() if a == 0]
    word_shaped = len(nullary) == 1 and all(a <= 1 for a in scheme.terminals.values())
    if not word_shaped:
        validate(scheme)
        scheme = path_to_word_scheme(normalize_arities(scheme))
    result = enumerate_words(scheme, maxlen, budget)
    note = (
        f"{ptr}: scheme admitted as a finite slice (max_len={maxlen}, "
        f"exhausted={result.exhausted}); verdicts that assert absence of runs "
        "do not transfer to the unbounded scheme language"
    )
    exact = result.exhausted
    return frozenset(result.words), not exact, (note,)


def load_ap_doc(doc: dict, base_dir: str = ".", ptr: str = "") -> LoadedProgram:
    if "internal_alphabet" in doc:
        return _load_internal_ap_doc(doc, base_dir, ptr)
    states = _name_list(_req(doc, "states", ptr), _at(ptr, "states"))
    alphabet = _name_list(_req(doc, "alphabet", ptr), _at(ptr, "alphabet"))
    initial = _as_name(_req(doc, "initial", ptr), _at(ptr, "initial"))
    buffer = _load_multiset(_req(doc, "initial_buffer", ptr), _at(ptr, "initial_buffer"))
    languages = {}
    under = False
    notes: Tuple[str, ...] = ()
    clist = _as_list(_req(doc, "contexts", ptr), _at(ptr, "contexts"))
    for i, c in enumerate(clist):
        cp = _at(_at(ptr, "contexts"), i)
        src = _as_name(_req(c, "from", cp), _at(cp, "from"))
        handler = _as_name(_req(c, "handler", cp), _at(cp, "handler"))
        dst = _as_name(_req(c, "to", cp), _at(cp, "to"))
        if src not in states or dst not in states:
            raise InputError(f"{cp}: context uses unknown state")
        if handler not in alphabet:
            raise InputError(f"{_at(cp, 'handler')}: unknown handler {handler!r}")
        if (src, handler, dst) in languages:
            raise InputError(f"{cp}: duplicate context ({src}, {handler}, {dst})")
        lang, lang_under, lang_notes = _load_language(
            _req(c, "language", cp), base_dir, _at(cp, "language")
        )
        languages[(src, handler, dst)] = lang
        under = under or lang_under
        notes += lang_notes
    try:
        program = AsyncProgram(
            states=states,
            alphabet=alphabet,
            languages=languages,
            initial=initial,
            initial_buffer=buffer,
        )
    except InputError as exc:
        raise InputError(f"{ptr or '/'}: {exc}") from None
    return LoadedProgram(program, under, notes)


def _load_internal_ap_doc(doc: dict, base_dir: str, ptr: str) -> LoadedProgram:
    states = _name_list(_req(doc, "states", ptr), _at(ptr, "states"))
    alphabet = _name_list(_req(doc, "alphabet", ptr), _at(ptr, "alphabet"))
    internal = _name_list(_req(doc, "internal_alphabet", ptr), _at(ptr, "internal_alphabet"))
    initial = _as_name(_req(doc, "initial", ptr), _at(ptr, "initial"))
    buffer = _load_multiset(_req(doc, "initial_buffer", ptr), _at(ptr, "initial_buffer"))
    handlers = _req(doc, "handlers", ptr)
    if not isinstance(handlers, dict):
        raise InputError(f"{_at(ptr, 'handlers')}: expected an object mapping handlers to languages")
    languages = {}
    under = False
    notes: Tuple[str, ...] = ()
    for sigma, value in handlers.items():
        lang, lang_under, lang_notes = _load_language(value, base_dir, _at(_at(ptr, "handlers"), sigma))
        languages[sigma] = lang
        under = under or lang_under
        notes += lang_notes
    router = {}
    rlist = _as_list(_req(doc, "router", ptr), _at(ptr, "router"))
    for i, r in enumerate(rlist):
        rp = _at(_at(ptr, "router"), i)
        src = _as_name(_req(r, "from", rp), _at(rp, "from"))
        letter = _as_name(_req(r, "letter", rp), _at(rp, "letter"))
        dst = _as_name(_req(r, "to", rp), _at(rp, "to"))
        if (src, letter) in router and router[(src, letter)] != dst:
            raise InputError(f"{rp}: router is not deterministic at ({src}, {letter})")
        router[(src, letter)] = dst
    try:
        pi = APWithInternal(
            states=states,
            alphabet=alphabet,
            internal_alphabet=internal,
            languages=languages,
            router=router,
            initial=initial,
            initial_buffer=buffer,
        )
        program = compile_internal(pi)
    except InputError as exc:
        raise InputError(f"{ptr or '/'}: {exc}") from None
    notes += ("internal actions compiled into per-context languages",)
    return LoadedProgram(program, under, notes)


def _language_to_doc(lang) -> dict:
    if isinstance(lang, (set, frozenset)):
        return {"kind": "finite", "words": sorted([list(w) for w in lang])}
    if isinstance(lang, Nfa):
        return {"kind": "nfa", "nfa": nfa_to_doc(lang)}
    if isinstance(lang, (Pda, SimplePda)):
        return {"kind": "pda", "pda": pda_to_doc(lang)}
    raise InputError(f"cannot serialize language of type {type(lang).__name__}")


def ap_to_doc(program: AsyncProgram) -> dict:
    state_names = _name_map(program.states, "d")
    letter_names = _name_map(program.alphabet, "a")

    def rename_lang(lang):
        if isinstance(lang, (set, frozenset)):
            return frozenset(tuple(letter_names[x] for x in w) for w in lang)
        if isinstance(lang, Nfa):
            return Nfa(
                states=lang.states,
                alphabet=frozenset(letter_names[x] for x in lang.alphabet),
                transitions=frozenset(
                    (p, letter_names[a] if a is not None else None, q)
                    for (p, a, q) in lang.transitions
                ),
                initial=lang.initial,
                finals=lang.finals,
            )
        if isinstance(lang, (Pda, SimplePda)):
            if isinstance(lang, SimplePda):
                lang = simple_to_pda(lang)
            return Pda(
                states=lang.states,
                input_alphabet=frozenset(letter_names[x] for x in lang.input_alphabet),
                stack_alphabet=lang.stack_alphabet,
                edges=frozenset((p, rename_lang(nfa), op, q) for (p, nfa, op, q) in lang.edges),
                initial=lang.initial,
                finals=lang.finals,
            )
        raise InputError(f"cannot serialize language of type {type(lang).__name__}")

    contexts = []
    for (src, handler, dst), lang in program.languages.items():
        contexts.append(
            {
                "from": state_names[src],
                "handler": letter_names[handler],
                "to": state_names[dst],
                "language": _language_to_doc(rename_lang(lang)),
            }
        )
    contexts.sort(key=lambda c: (c["from"], c["handler"], c["to"]))
    return {
        "states": sorted(state_names.values()),
        "alphabet": sorted(letter_names.values()),
        "initial": state_names[program.initial],
        "initial_buffer": {
            letter_names[s]: n
            for s, n in sorted(program.initial_buffer.items(), key=lambda kv: skey(kv[0]))
        },
        "contexts": contexts,
    }


def configuration_to_doc(config: Configuration, program: Optional[AsyncProgram] = None) -> dict:
    """A configuration document, renamed consistently with ``ap_to_doc`` of
    the program it belongs to."""
    if program is None:
        return {"state": _stringify(config.state), "buffer": {
            _stringify(s): n for s, n in sorted(config.buffer.items(), key=lambda kv: skey(kv[0]))
        }}
    state_names = _name_map(program.states, "d")
    letter_names = _name_map(program.alphabet, "a")
    return {
        "state": state_names[config.state],
        "buffer": {
            letter_names[s]: n
            for s, n in sorted(config.buffer.items(), key=lambda kv: skey(kv[0]))
        },
    }


def load_configuration_doc(doc: dict, ptr: str = "") -> Configuration:
    state = _as_name(_req(doc, "state", ptr), _at(ptr, "state"))
    buffer = _load_multiset(_req(doc, "buffer", ptr), _at(ptr, "buffer"))
    return Configuration(state, buffer)


# ---------------------------------------------------------------------------
# File-level helpers
# ---------------------------------------------------------------------------


def _read_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from None


def detect_kind(doc) -> str:
    """Classify a document by its characteristic keys."""
    if not isinstance(doc, dict):
        raise InputError("/: expected a JSON object")
    if "stack_alphabet" in doc:
        return "pda"
    if "places" in doc:
        return "pn"
    if "terminals" in doc and "rules" in doc:
        return "scheme"
    if "internal_alphabet" in doc or "contexts" in doc:
        return "ap"
    if "transitions" in doc and "finals" in doc:
        return "nfa"
    if "kind" in doc or "words" in doc:
        return "language"
    raise InputError("/: unrecognized document shape")


def load_document(path: str):
    """Load any known document type; returns (kind, loaded object)."""
    doc = _read_json(path)
    kind = detect_kind(doc)
    base = os.path.dirname(os.path.abspath(path))
    if kind == "pda":
        return kind, load_pda_doc(doc)
    if kind == "pn":
        return kind, load_pn_doc(doc)
    if kind == "scheme":
        return kind, load_scheme_doc(doc)
    if kind == "ap":
        return kind, load_ap_doc(doc, base)
    if kind == "nfa":
        return kind, load_nfa_doc(doc)
    lang, under, notes = _load_language(doc, base, "")
    return "language", (lang, under, notes)


def load_ap(path: str) -> AsyncProgram:
    """Load a program file; programs with internal actions come back compiled."""
    doc = _read_json(path)
    if detect_kind(doc) != "ap":
        raise InputError(f"{path}: not a program file")
    return load_ap_doc(doc, os.path.dirname(os.path.abspath(path))).program


def load_language_file(path: str):
    """Load a handler-language file (NFA, PDA, finite words, or scheme slice);
    returns (language, underapproximate, notes)."""
    doc = _read_json(path)
    kind = detect_kind(doc)
    base = os.path.dirname(os.path.abspath(path))
    if kind == "nfa":
        return load_nfa_doc(doc), False, ()
    if kind == "pda":
        return load_pda_doc(doc), False, ()
    if kind == "scheme":
        return _scheme_slice_language(load_scheme_doc(doc), {}, "")
    if kind == "language":
        return _load_language(doc, base, "")
    raise InputError(f"{path}: not a language file (detected {kind})")


def dumps_canonical(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def save_document(doc, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(doc))
