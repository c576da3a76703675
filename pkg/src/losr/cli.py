"""Command line entry points: generate, train, parse, evaluate, simulate, serve."""

from __future__ import annotations

import argparse
import json
import sys

from . import gss
from .chunker import ChunkError
from .corpus import (
    EVAL_MODES,
    PROFILES,
    cross_validate,
    generate_corpus,
    load_artifacts,
    load_treebank,
    run_command,
    save_artifacts,
    save_treebank,
    train_artifacts,
)
from .gss import EXHAUSTIVE, NoParseError, PRUNED
from .lexicon import OovError
from .planner import PlannerError, execute_sequence
from .postprocess import (
    FIRST,
    RANDOM,
    SCORED,
    AllParsesRejectedError,
    AnaphoraError,
    NoUniqueParseError,
)
from .trees import LosrParseError, MalformedNodeError, deserialize, serialize
from .world import WorldError, dumps_scene, loads_scene


class CliError(Exception):
    """A failure with a machine-readable code, printed as `code: message`."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _fail_code(exc: Exception) -> str:
    if isinstance(exc, OovError):
        return "oov"
    if isinstance(exc, (NoParseError, ChunkError)):
        return "no-parse"
    if isinstance(exc, NoUniqueParseError):
        return "ambiguous"
    if isinstance(exc, (AllParsesRejectedError, AnaphoraError)):
        return "all-rejected"
    if isinstance(exc, PlannerError):
        return exc.code
    if isinstance(exc, WorldError):
        return exc.code
    if isinstance(exc, (LosrParseError, MalformedNodeError)):
        return "bad-losr"
    return "error"


def _load_scene_file(path: str):
    try:
        with open(path, encoding="utf-8") as handle:
            return loads_scene(handle.read())
    except OSError as exc:
        raise CliError("io", f"cannot read scene {path}: {exc}")
    except ValueError as exc:
        raise CliError("bad-scene", f"{path}: {exc}")


def _cmd_generate(args) -> int:
    records = generate_corpus(args.count, args.profile, args.seed)
    save_treebank(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _cmd_train(args) -> int:
    records = load_treebank(args.treebank)
    artifacts = train_artifacts(records)
    save_artifacts(artifacts, args.out)
    print(f"trained on {len(records)} records -> {args.out}")
    print(f"  lexicon entries: {len(artifacts.lexicon.counts)}")
    print(f"  grammar productions: {len(artifacts.grammar.productions)}")
    print(f"  ellipsis rules: {len(artifacts.ellipsis.rules)}")
    return 0


def _cmd_parse(args) -> int:
    artifacts = load_artifacts(args.model)
    world = _load_scene_file(args.scene)
    selection = {"scored": SCORED, "first": FIRST, "random": RANDOM}[args.selection]
    mode = PRUNED if args.mode == "pruned" else EXHAUSTIVE
    try:
        result = run_command(artifacts, world, args.sentence, mode=mode,
                             selection=selection, seed=args.seed)
    except (OovError, NoParseError, ChunkError, AllParsesRejectedError,
            NoUniqueParseError, AnaphoraError) as exc:
        raise CliError(_fail_code(exc), str(exc))

    if args.dump_gss:
        print(gss.dump(result.forest.state))
        print()
    if args.json:
        from .service import command_payload

        print(json.dumps(command_payload(args.sentence, result, world), indent=2))
        return 0

    chosen = result.selection.chosen
    print("tokens: " + " ".join(result.tokens))
    print("chunks: " + "  ".join(f"{c.phrase}/{c.feature}" for c in result.chunks))
    verified = [p for p in result.selection.parses if p.verified]
    print(f"forest: {len(result.forest.trees)} parses, {len(verified)} verified")
    for parse in verified:
        marker = "*" if parse is chosen else " "
        print(f"  {marker} {parse.score:.6g}  {parse.tree.text}")
    if chosen.tie:
        print("note: top score is tied; smallest serialization chosen")
    print(serialize(chosen.tree, pretty=True))
    from .service import grounding_entries

    for entry in grounding_entries(chosen.tree, world):
        path = ".".join(str(i) for i in entry["path"])
        print(f"  [{path}] " + json.dumps(entry["candidates"]))
    print(dumps_scene(result.world_after))
    return 0


def _cmd_evaluate(args) -> int:
    records = load_treebank(args.treebank)
    modes = args.modes.split(",") if args.modes else list(EVAL_MODES)
    for mode in modes:
        if mode not in EVAL_MODES:
            raise CliError("usage", f"unknown mode {mode!r}; choose from {', '.join(EVAL_MODES)}")
    report = cross_validate(records, folds=args.folds, seed=args.seed, modes=modes,
                            collect_timing=args.timing_csv is not None)
    text = report.table_text()
    if args.report:
        with open(args.report, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    print(text)
    if args.timing_csv:
        with open(args.timing_csv, "w", encoding="utf-8") as handle:
            handle.write(report.timing_csv() + "\n")
    return 0


def _cmd_simulate(args) -> int:
    world = _load_scene_file(args.scene)
    try:
        with open(args.script, encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise CliError("io", f"cannot read script {args.script}: {exc}")
    for number, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            world = execute_sequence(deserialize(line), world)
        except (LosrParseError, MalformedNodeError, PlannerError, WorldError) as exc:
            raise CliError(_fail_code(exc), f"{args.script}:{number}: {exc}")
        if args.trace:
            print(f"# line {number}")
            print(dumps_scene(world))
    print(dumps_scene(world))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    artifacts = load_artifacts(args.model)
    scene = _load_scene_file(args.scene) if args.scene else None
    app = create_app(artifacts, scene, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="losr",
        description="Spatial command parsing: treebank generation, training, "
                    "parsing, evaluation and an interactive scene service.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic treebank")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--profile", choices=sorted(PROFILES), default="standard")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("train", help="train chunker, lexicon, grammar and ellipsis rules")
    p.add_argument("--treebank", required=True)
    p.add_argument("--out", required=True, help="artifact directory")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("parse", help="parse one sentence against a scene")
    p.add_argument("--model", required=True, help="artifact directory from `train`")
    p.add_argument("--scene", required=True)
    p.add_argument("--sentence", required=True)
    p.add_argument("--mode", choices=("pruned", "exhaustive"), default="pruned")
    p.add_argument("--selection", choices=("scored", "first", "random"), default="scored")
    p.add_argument("--seed", type=int, default=0, help="seed for --selection random")
    p.add_argument("--dump-gss", action="store_true", help="print the parser stack graph")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("evaluate", help="cross-validate a treebank")
    p.add_argument("--treebank", required=True)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--modes", default=None, help="comma-separated subset of: " + ",".join(EVAL_MODES))
    p.add_argument("--report", default=None, help="also write the table here")
    p.add_argument("--timing-csv", default=None)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("simulate", help="apply a script of LOSR commands to a scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--script", required=True, help="one LOSR tree per line, # comments")
    p.add_argument("--trace", action="store_true", help="print the scene after every line")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--model", required=True)
    p.add_argument("--scene", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static", default=None, help="directory of console assets to serve at /")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
