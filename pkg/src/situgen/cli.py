"""Command line entry point: ``situgen <command> ...``.

Exit codes: 0 success, 1 unreadable input or bad configuration, 2 a check
failed (gradient tolerance exceeded, fidelity violations found).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import align, evalkit
from .dataset import SplitSpec, emit_jsonl, fidelity_check, read_jsonl, split, stats
from .errors import SitugenError
from .ingest import ingest_directory
from .pipeline import DEFAULT_SITUATIONS, RunManifest, load_scenes, run_generate
from .render import render_svg
from .scene import load_scene, serialize_scene, scene_from_dict
from .situated import build_situated_graph, sample_situation, situation_rng
from .taskgen.client import ClientConfig
from .tasks import TASK_ORDER, PromptStyle, TaskKind

logger = logging.getLogger("situgen")

EXIT_OK, EXIT_INPUT, EXIT_CHECK = 0, 1, 2
GRAD_TOLERANCE = 1e-5


def _emit(args, payload: dict, text: str):
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _task_map(pairs, cast):
    out = {}
    for item in pairs or []:
        key, _, value = item.partition("=")
        if not value:
            raise ValueError(f"expected TASK=VALUE, got {item!r}")
        out[TaskKind(key)] = cast(value)
    return out


# -- commands -----------------------------------------------------------------------

def cmd_ingest(args) -> int:
    doc = ingest_directory(args.scan_dir, args.objects, args.relationships)
    data = serialize_scene(scene_from_dict(doc))
    if args.output:
        Path(args.output).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))
    return EXIT_OK


def _manifest(args) -> RunManifest:
    if args.manifest:
        doc = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        return RunManifest.from_dict(doc)
    if not args.scenes or not args.out:
        raise ValueError("generate needs --manifest or both --scenes and --out")
    situations = dict(DEFAULT_SITUATIONS)
    situations.update(_task_map(args.situations, int))
    client = None
    if args.mode == "online":
        if not args.endpoint:
            raise ValueError("online mode needs --endpoint")
        client = ClientConfig(args.endpoint, model=args.model, api_key_env=args.api_key_env,
                              max_in_flight=args.max_in_flight, audit_path=args.audit)
    fractions = _task_map(args.test_fraction, float)
    spec = SplitSpec(seed=args.split_seed) if not fractions else SplitSpec(
        {**SplitSpec().test_fractions, **fractions}, args.split_seed)
    return RunManifest(args.scenes, args.out, args.seed, tuple(args.tasks or TASK_ORDER),
                       situations, PromptStyle(args.style), args.mode, spec, args.workers, client)


def cmd_generate(args) -> int:
    manifest = _manifest(args)
    result = run_generate(manifest, stop_after=args.stop_after)
    payload = dict(result.__dict__, output_dir=str(manifest.output_dir))
    _emit(args, payload,
          f"{result.examples} examples (train {result.train}, test {result.test}) "
          f"written to {manifest.output_dir}; {result.warnings} warnings")
    return EXIT_OK


def cmd_validate(args) -> int:
    examples = read_jsonl(args.dataset)
    scenes = {s.id: s for s in load_scenes(args.scenes)}
    violations = []
    graphs = {}
    for i, ex in enumerate(examples):
        if ex.scene_id not in scenes:
            violations.append({"line": i + 1, "kind": "UnknownScene", "detail": ex.scene_id})
            continue
        key = (ex.scene_id, ex.situation.digest)
        if key not in graphs:
            graphs[key] = build_situated_graph(scenes[ex.scene_id], ex.situation)
        report = fidelity_check(ex, graphs[key])
        for v in report.violations:
            violations.append({"line": i + 1, "kind": v.kind, "detail": v.detail})
    payload = {"examples": len(examples), "violations": violations}
    lines = [f"{len(examples)} examples, {len(violations)} violations"]
    lines += [f"  line {v['line']}: {v['kind']}: {v['detail']}" for v in violations[:50]]
    _emit(args, payload, "\n".join(lines))
    return EXIT_CHECK if violations else EXIT_OK


def cmd_split(args) -> int:
    examples = read_jsonl(args.dataset)
    fractions = _task_map(args.test_fraction, float)
    spec = SplitSpec({**SplitSpec().test_fractions, **fractions}, args.seed)
    train, test = split(examples, spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    emit_jsonl(train, out / "train.jsonl")
    emit_jsonl(test, out / "test.jsonl")
    _emit(args, {"train": len(train), "test": len(test)}, f"train {len(train)}, test {len(test)}")
    return EXIT_OK


def cmd_stats(args) -> int:
    report = stats(read_jsonl(args.dataset)).to_dict()
    lines = [f"total: {report['total']}"]
    lines += [f"  {k}: {v}" for k, v in report["per_task"].items()]
    lines.append("answer length: " + ", ".join(f"{k}={v}" for k, v in
                                               report["answer_length_histogram"].items()))
    lines.append("direction words: " + ", ".join(f"{k}={v}" for k, v in
                                                 report["direction_words"].items()))
    _emit(args, report, "\n".join(lines))
    return EXIT_OK


def cmd_render(args) -> int:
    scene = load_scene(Path(args.scene))
    situation = None
    if args.seed is not None:
        situation = sample_situation(scene, situation_rng(args.seed, scene.id, 0))
    data = render_svg(scene, situation)
    if args.output:
        Path(args.output).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))
    return EXIT_OK


def cmd_eval(args) -> int:
    records = evalkit.load_predictions(args.predictions)
    report = evalkit.evaluate_records(records, args.prefix, args.beta)
    dist = report["direction_distribution"]
    lines = [f"records: {report['count']}"]
    for name in ("exact_match", "bleu4", "rouge_l"):
        value = report[name]
        lines.append(f"{name}: {'n/a' if value is None else f'{value:.4f}'}")
    for name, value in report["external"].items():
        lines.append(f"{name} (external): {value:.4f}")
    if dist["undefined"]:
        lines.append(f"direction distribution: no questions starting with {args.prefix!r}")
    else:
        lines.append(f"direction distribution over {dist['total']} questions:")
        lines += [f"  {k}: {dist['counts'][k]} ({dist['fractions'][k]:.2%})"
                  for k in evalkit.DIRECTION_CLASSES]
    _emit(args, report, "\n".join(lines))
    return EXIT_OK


def cmd_align_check(args) -> int:
    o, f, w, params = align.random_instance(args.seed, args.k, args.d, args.hidden)
    err = align.alignment_grad_check(o, f, w, params, args.epsilon)
    ok = err < args.tolerance
    _emit(args, {"seed": args.seed, "max_relative_error": err, "tolerance": args.tolerance,
                 "passed": ok},
          f"max relative error {err:.3e} ({'ok' if ok else 'FAILED'}, tolerance {args.tolerance:g})")
    return EXIT_OK if ok else EXIT_CHECK


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="situgen",
                                description="Situated 3D scene QA dataset tools.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", parents=[common], help="convert a 3RScan scan to scene JSON")
    s.add_argument("scan_dir")
    s.add_argument("--objects", help="3DSSG objects.json")
    s.add_argument("--relationships", help="3DSSG relationships.json")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("generate", parents=[common], help="generate a dataset")
    s.add_argument("--manifest", help="JSON run manifest (overrides the flags below)")
    s.add_argument("--scenes", help="directory of scene JSON files")
    s.add_argument("--out", help="output directory")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mode", choices=("offline", "online"), default="offline")
    s.add_argument("--tasks", nargs="+", choices=[t.value for t in TaskKind])
    s.add_argument("--situations", nargs="+", metavar="TASK=N",
                   help="situations per scene, e.g. attr_rel=10")
    s.add_argument("--style", choices=[x.value for x in PromptStyle], default="spa")
    s.add_argument("--workers", type=int, default=4)
    s.add_argument("--endpoint", help="chat-completions URL (online mode)")
    s.add_argument("--model", default="gpt-4o")
    s.add_argument("--api-key-env", default="OPENAI_API_KEY")
    s.add_argument("--max-in-flight", type=int, default=4)
    s.add_argument("--audit", help="append one JSON line per LLM call here")
    s.add_argument("--test-fraction", nargs="+", metavar="TASK=F")
    s.add_argument("--split-seed", type=int, default=0)
    s.add_argument("--stop-after", type=int, help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("validate", parents=[common], help="re-run the fidelity audit")
    s.add_argument("dataset")
    s.add_argument("--scenes", required=True)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("split", parents=[common], help="scene-stratified train/test split")
    s.add_argument("dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--test-fraction", nargs="+", metavar="TASK=F")
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("stats", parents=[common], help="dataset statistics")
    s.add_argument("dataset")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("render", parents=[common], help="bird's-eye SVG of a scene")
    s.add_argument("scene")
    s.add_argument("--seed", type=int, help="sample and draw one situation")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("eval", parents=[common], help="score a prediction file")
    s.add_argument("predictions")
    s.add_argument("--prefix", default=evalkit.DEFAULT_DIRECTION_PREFIX)
    s.add_argument("--beta", type=float, default=evalkit.ROUGE_BETA)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("align-check", parents=[common], help="finite-difference gradient check")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--d", type=int, default=4)
    s.add_argument("--hidden", type=int, default=8)
    s.add_argument("--epsilon", type=float, default=1e-5)
    s.add_argument("--tolerance", type=float, default=GRAD_TOLERANCE)
    s.set_defaults(func=cmd_align_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    console = logging.StreamHandler()
    console.setLevel(logging.WARNING - 10 * min(args.verbose, 2))
    console.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    logger.addHandler(console)
    try:
        return args.func(args)
    except (OSError, SitugenError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"situgen {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        logger.removeHandler(console)


if __name__ == "__main__":
    sys.exit(main())
