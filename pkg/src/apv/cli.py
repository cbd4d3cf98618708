"""Command-line front end.

Subcommands:

* ``apv check PROPERTY INPUT`` — run one analysis and print a JSON verdict.
* ``apv downclosure PDA -o NFA [--emit-pn PN]`` — subword-closure automaton
  (and optionally the bounded-stack Petri net) of a pushdown language.
* ``apv simulate AP --steps N --seed S`` — replay one pseudo-random run.
* ``apv gadget NAME IN -o OUT`` — property-to-property program constructions.
* ``apv hors CMD IN`` — recursion-scheme checks, transformations, and
  bounded enumerations.

Exit codes: 0 = a verdict or output was produced (UNKNOWN included),
1 = malformed input, 2 = a resource cap was exceeded before any verdict.
All outputs are canonical JSON, byte-identical across repeated runs.
"""

import argparse
import json
import os
import sys
from typing import Optional

from . import analysis
from .analysis import (
    HOLDS,
    UNKNOWN,
    check_boundedness,
    check_boundedness_enumerative,
    check_config_reachability,
    check_fair_nontermination,
    check_fair_starvation,
    check_safety,
    check_safety_enumerative,
    check_termination,
    check_termination_enumerative,
    z_intersection,
)
from .automata import Nfa, nfa_downclosure
from .downclosure import downclosure_nfa, pda_to_bounded_pn
from .errors import ApvError, InputError, ResourceLimit
from .hors import enumerate_paths, enumerate_words, normalize_arities, path_to_word_scheme, validate
from .jsonio import (
    ap_to_doc,
    configuration_to_doc,
    detect_kind,
    dumps_canonical,
    load_ap_doc,
    load_configuration_doc,
    load_language_file,
    load_nfa_doc,
    load_pda_doc,
    load_scheme_doc,
    nfa_to_doc,
    pda_to_doc,
    pn_to_doc,
    save_document,
    scheme_to_doc,
    _read_json,
)
from .pda import nfa_to_pda
from .reductions import (
    GadgetOutput,
    emptiness_to_safety,
    emptiness_to_termination,
    fairnt_to_starvation,
    reach_to_fairnt,
    starvation_to_reach,
    zint_to_reach,
)
from .semantics import simulate_run

_CHECK_PROPERTIES = (
    "safety",
    "termination",
    "boundedness",
    "reach",
    "fair-nontermination",
    "fair-starvation",
    "z-intersection",
)

_GADGETS = (
    "emptiness-to-safety",
    "emptiness-to-termination",
    "reach-to-fairnt",
    "fairnt-to-starvation",
    "starvation-to-reach",
    "zint-to-reach",
    "compile-internal",
)


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 1), not resource failures."""

    def error(self, message):
        raise InputError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="apv", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="run one analysis and print a JSON verdict")
    check.add_argument("property", choices=_CHECK_PROPERTIES)
    check.add_argument("input", help="program file (language file for z-intersection)")
    check.add_argument("--target", help="state name (safety) or configuration JSON/file (reach)")
    check.add_argument("--max-configs", type=int, default=None, help="bounded-exploration cap")
    check.add_argument("--word-bound", type=int, default=None, help="handler-word length bound")
    check.add_argument("--node-cap", type=int, default=None, help="coverability-tree node cap")
    check.add_argument("--mode", choices=("direct", "enumerative"), default="direct")
    check.add_argument("--jobs", type=int, default=1, help="reserved; subchecks run sequentially")
    check.add_argument("-o", "--output", help="also write the verdict to this file")

    down = sub.add_parser("downclosure", help="subword closure of a pushdown language")
    down.add_argument("input", help="PDA file (an NFA file is converted first)")
    down.add_argument("-o", "--output", required=True, help="output NFA file")
    down.add_argument("--emit-pn", help="also write the bounded-stack Petri net here")

    sim = sub.add_parser("simulate", help="replay one pseudo-random run as JSON lines")
    sim.add_argument("input", help="program file")
    sim.add_argument("--steps", type=int, default=20)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--word-bound", type=int, default=4)

    gadget = sub.add_parser("gadget", help="property-to-property constructions")
    gadget.add_argument("name", choices=_GADGETS)
    gadget.add_argument("input", help="language or program file, depending on the gadget")
    gadget.add_argument("-o", "--output", required=True)
    gadget.add_argument("--gamma", help="comma-separated handler letters (starvation-to-reach)")
    gadget.add_argument("--tau", help="the handler that starves (starvation-to-reach)")
    gadget.add_argument("--target", help="configuration JSON or file (reach-to-fairnt)")

    hors = sub.add_parser("hors", help="recursion-scheme operations")
    hors.add_argument("operation", choices=("validate", "normalize", "to-word-scheme", "enumerate"))
    hors.add_argument("input", help="scheme file")
    hors.add_argument("--mode", choices=("path", "word"), default="word", help="enumerate: what to enumerate")
    hors.add_argument("--depth", type=int, default=12, help="enumerate --mode path: expansion rounds")
    hors.add_argument("--max-len", type=int, default=8, help="enumerate --mode word: longest word")
    hors.add_argument("--budget", type=int, default=20_000, help="enumerate --mode word: rewrite budget")
    hors.add_argument("-o", "--output", help="write the result document here as well")

    return parser


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def _env_max_configs() -> Optional[int]:
    raw = os.environ.get("APV_MAX_CONFIGS")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"APV_MAX_CONFIGS must be an integer, got {raw!r}") from None


def _parse_target_config(raw: str):
    if raw.lstrip().startswith("{"):
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise InputError(f"--target: not valid JSON ({exc})") from None
        return load_configuration_doc(doc, "--target")
    if os.path.exists(raw):
        return load_configuration_doc(_read_json(raw), "--target")
    raise InputError(
        "--target for reach must be a configuration: inline JSON like "
        '\'{"state": "d", "buffer": {"s": 1}}\' or a path to such a file'
    )


def _explore_kwargs(args, defaults_node_cap=False) -> dict:
    kwargs = {}
    max_configs = args.max_configs if args.max_configs is not None else _env_max_configs()
    if max_configs is not None:
        kwargs["max_configs"] = max_configs
    if args.word_bound is not None:
        kwargs["wordlen"] = args.word_bound
    if args.node_cap is not None:
        kwargs["node_cap"] = args.node_cap
    return kwargs


def _run_check(args) -> int:
    prop = args.property
    notes = []
    underapprox = False

    if prop == "z-intersection":
        lang, underapprox, load_notes = load_language_file(args.input)
        notes.extend(load_notes)
        kwargs = _explore_kwargs(args)
        if args.mode == "enumerative":
            raise InputError("z-intersection has no enumerative mode")
        verdict = z_intersection(lang, **kwargs)
        program = None
    else:
        doc = _read_json(args.input)
        if detect_kind(doc) != "ap":
            raise InputError(f"{args.input}: not a program file")
        loaded = load_ap_doc(doc, os.path.dirname(os.path.abspath(args.input)))
        program = loaded.program
        underapprox = loaded.underapproximate
        notes.extend(loaded.notes)
        verdict = _dispatch_program_check(prop, program, args)

    if underapprox and verdict.outcome == HOLDS:
        verdict = analysis.Verdict(
            UNKNOWN,
            verdict.note,
            witness=None,
            bounds=dict(verdict.bounds),
        )
        notes.append(
            "a handler language is an under-approximating slice, so the HOLDS "
            "finding was demoted to UNKNOWN; FAILS witnesses remain sound"
        )

    doc = verdict.to_json()
    doc["stats"] = _stats(args, program)
    doc["notes"] = notes
    text = dumps_canonical(doc)
    sys.stdout.write(text)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


def _dispatch_program_check(prop: str, program, args):
    mode = args.mode
    kwargs = _explore_kwargs(args)
    node_only = {k: v for k, v in kwargs.items() if k == "node_cap"}

    if prop == "safety":
        if not args.target:
            raise InputError("check safety requires --target STATE")
        if args.target not in program.states:
            raise InputError(f"--target: unknown state {args.target!r}")
        if mode == "enumerative":
            enum_kwargs = {k: v for k, v in kwargs.items() if k in ("max_configs", "wordlen")}
            return check_safety_enumerative(program, args.target, **enum_kwargs)
        return check_safety(program, args.target, **node_only)

    if prop == "termination":
        if mode == "enumerative":
            enum_kwargs = {k: v for k, v in kwargs.items() if k in ("max_configs", "wordlen")}
            return check_termination_enumerative(program, **enum_kwargs)
        return check_termination(program, **node_only)

    if prop == "boundedness":
        if mode == "enumerative":
            return check_boundedness_enumerative(program, **node_only)
        return check_boundedness(program, **node_only)

    if mode == "enumerative":
        raise InputError(f"{prop} has no enumerative mode")

    if prop == "reach":
        if not args.target:
            raise InputError("check reach requires --target CONFIGURATION")
        target = _parse_target_config(args.target)
        if target.state not in program.states:
            raise InputError(f"--target: unknown state {target.state!r}")
        extra = target.buffer.support - program.alphabet
        if extra:
            raise InputError(f"--target: buffer uses unknown handlers {sorted(extra)}")
        return check_config_reachability(program, target, **kwargs)

    if prop == "fair-nontermination":
        return check_fair_nontermination(program, **kwargs)

    if prop == "fair-starvation":
        return check_fair_starvation(program, **kwargs)

    raise InputError(f"unknown property {prop!r}")


def _stats(args, program) -> dict:
    stats = {
        "property": args.property,
        "mode": args.mode,
        "max_configs": args.max_configs if args.max_configs is not None else _env_max_configs(),
        "word_bound": args.word_bound,
        "node_cap": args.node_cap,
    }
    if program is not None:
        stats["states"] = len(program.states)
        stats["handlers"] = len(program.alphabet)
        stats["contexts"] = len(program.languages)
    return stats


# ---------------------------------------------------------------------------
# downclosure / simulate
# ---------------------------------------------------------------------------


def _load_pda_like(path: str):
    doc = _read_json(path)
    kind = detect_kind(doc)
    if kind == "pda":
        return load_pda_doc(doc)
    if kind == "nfa":
        return nfa_to_pda(load_nfa_doc(doc))
    raise InputError(f"{path}: expected a PDA (or NFA) file, detected {kind}")


def _run_downclosure(args) -> int:
    pda = _load_pda_like(args.input)
    closure = downclosure_nfa(pda)
    save_document(nfa_to_doc(closure), args.output)
    if args.emit_pn:
        net = pda_to_bounded_pn(pda)
        save_document(pn_to_doc(net), args.emit_pn)
    return 0


def _run_simulate(args) -> int:
    doc = _read_json(args.input)
    if detect_kind(doc) != "ap":
        raise InputError(f"{args.input}: not a program file")
    loaded = load_ap_doc(doc, os.path.dirname(os.path.abspath(args.input)))
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get("APV_SEED", "0"))
    records = simulate_run(loaded.program, args.steps, seed, args.word_bound)
    for record in records:
        sys.stdout.write(json.dumps(record, sort_keys=True) + "\n")
    return 0


# ---------------------------------------------------------------------------
# gadget
# ---------------------------------------------------------------------------


def _jsonable(value):
    if isinstance(value, dict):
        return {_jsonable_key(k): _jsonable(v) for k, v in sorted(value.items(), key=lambda kv: str(kv[0]))}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted((_jsonable(v) for v in value), key=str)
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return repr(value)


def _jsonable_key(key) -> str:
    return key if isinstance(key, str) else repr(key)


def _gadget_doc(result) -> dict:
    if isinstance(result, GadgetOutput):
        program = result.program
        target = result.target
        doc = {
            "program": ap_to_doc(program),
            "target": configuration_to_doc(target, program) if target is not None else None,
            "letter_maps": _jsonable(dict(result.letter_maps)),
            "info": _jsonable(dict(result.info)),
        }
        return doc
    return {"program": ap_to_doc(result), "target": None, "letter_maps": {}, "info": {}}


def _run_gadget(args) -> int:
    name = args.name
    if name in ("emptiness-to-safety", "emptiness-to-termination", "zint-to-reach"):
        lang, _, _ = load_language_file(args.input)
        if name == "emptiness-to-safety":
            result = emptiness_to_safety(lang)
        elif name == "emptiness-to-termination":
            result = emptiness_to_termination(lang)
        else:
            result = zint_to_reach(lang)
    else:
        doc = _read_json(args.input)
        if detect_kind(doc) != "ap":
            raise InputError(f"{args.input}: not a program file")
        loaded = load_ap_doc(doc, os.path.dirname(os.path.abspath(args.input)))
        program = loaded.program
        if name == "compile-internal":
            if "internal_alphabet" not in doc:
                raise InputError(f"{args.input}: no internal actions to compile")
            save_document(ap_to_doc(program), args.output)
            return 0
        if name == "reach-to-fairnt":
            if not args.target:
                raise InputError("reach-to-fairnt requires --target CONFIGURATION")
            target = _parse_target_config(args.target)
            result = reach_to_fairnt(program, target)
        elif name == "fairnt-to-starvation":
            result = fairnt_to_starvation(program)
        elif name == "starvation-to-reach":
            if not args.gamma or not args.tau:
                raise InputError("starvation-to-reach requires --gamma LETTERS and --tau LETTER")
            gamma = frozenset(x.strip() for x in args.gamma.split(",") if x.strip())
            extra = gamma - program.alphabet
            if extra:
                raise InputError(f"--gamma: unknown handlers {sorted(extra)}")
            if args.tau not in gamma:
                raise InputError("--tau must be one of the --gamma letters")
            result = starvation_to_reach(program, gamma, args.tau)
        else:
            raise InputError(f"unknown gadget {name!r}")
    save_document(_gadget_doc(result), args.output)
    return 0


# ---------------------------------------------------------------------------
# hors
# ---------------------------------------------------------------------------


def _run_hors(args) -> int:
    doc = _read_json(args.input)
    if detect_kind(doc) != "scheme":
        raise InputError(f"{args.input}: not a recursion-scheme file")
    scheme = load_scheme_doc(doc)

    if args.operation == "validate":
        report = validate(scheme)
        out = {
            "order": report.order,
            "deterministic": report.deterministic,
            "warnings": list(report.warnings),
        }
    elif args.operation == "normalize":
        out = scheme_to_doc(normalize_arities(scheme))
    elif args.operation == "to-word-scheme":
        out = scheme_to_doc(path_to_word_scheme(scheme))
    else:  # enumerate
        if args.mode == "path":
            words = enumerate_paths(scheme, args.depth)
            out = {
                "mode": "path",
                "depth": args.depth,
                "words": [list(w) for w in sorted(words, key=lambda w: (len(w), w))],
            }
        else:
            result = enumerate_words(scheme, args.max_len, args.budget)
            out = {
                "mode": "word",
                "max_len": args.max_len,
                "budget": args.budget,
                "exhausted": result.exhausted,
                "words": [list(w) for w in sorted(result.words, key=lambda w: (len(w), w))],
            }

    text = dumps_canonical(out)
    sys.stdout.write(text)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "check":
            return _run_check(args)
        if args.command == "downclosure":
            return _run_downclosure(args)
        if args.command == "simulate":
            return _run_simulate(args)
        if args.command == "gadget":
            return _run_gadget(args)
        if args.command == "hors":
            return _run_hors(args)
        raise InputError(f"unknown command {args.command!r}")
    except ResourceLimit as exc:
        sys.stderr.write(f"resource failure: {exc}\n")
        return 2
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except ApvError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
