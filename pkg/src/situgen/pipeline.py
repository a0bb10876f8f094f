"""Batch generation: scenes x tasks x situations -> audited, deduplicated, split JSONL.

Every unit of work is one (scene, task, situation index). Its randomness comes
from :func:`situation_rng`, so results do not depend on worker scheduling.
Finished units are appended to ``progress.jsonl`` together with their
examples; a rerun skips them, and the final files are assembled from that
ledger in a fixed order. That is what makes interrupted and uninterrupted
runs byte-identical.
"""

from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .dataset import (DatasetExample, SplitSpec, dedup, emit_jsonl, split, stats,
                      with_fidelity)
from .errors import AuthError, ClientError, InsufficientScenes, SitugenError
from .scene import Scene, load_scene
from .situated import (GraphConfig, SituationConfig, build_situated_graph, sample_situation,
                       situation_rng)
from .taskgen.client import ClientConfig, CompletionClient
from .taskgen.offline import OfflineConfig, offline_generate
from .taskgen.parse import parse_caption, parse_qa
from .taskgen.prompts import render_prompt
from .tasks import TASK_ORDER, PromptStyle, TaskKind

logger = logging.getLogger(__name__)

# Around 10 situations per scene for the QA-heavy tasks, around 5 for the others.
DEFAULT_SITUATIONS = {
    TaskKind.CAPTIONING: 5,
    TaskKind.ATTR_REL: 10,
    TaskKind.AFFORDANCE: 10,
    TaskKind.PLANNING: 5,
}
# A full-scale run over all annotated scenes targets roughly this many examples.
FULL_SCALE_TARGET = 133_000

LEDGER_NAME = "progress.jsonl"
LOG_NAME = "generate.log"


class RunInterrupted(SitugenError):
    """Raised by the ``stop_after`` kill-point used to exercise resumption."""


@dataclass
class RunManifest:
    scene_dir: str
    output_dir: str
    seed: int = 0
    tasks: tuple = TASK_ORDER
    situations_per_scene: dict = field(default_factory=lambda: dict(DEFAULT_SITUATIONS))
    style: PromptStyle = PromptStyle.SPA
    mode: str = "offline"
    split: SplitSpec = field(default_factory=SplitSpec)
    workers: int = 4
    client: ClientConfig | None = None
    keep_failed: bool = False

    def __post_init__(self):
        self.tasks = tuple(TaskKind(t) for t in self.tasks)
        self.situations_per_scene = {TaskKind(k): int(v) for k, v in self.situations_per_scene.items()}
        for t in self.tasks:
            self.situations_per_scene.setdefault(t, DEFAULT_SITUATIONS[t])
            if self.situations_per_scene[t] < 1:
                raise ValueError(f"situations per scene for {t.value} must be >= 1")
        self.style = PromptStyle(self.style)
        if self.mode not in ("offline", "online"):
            raise ValueError(f"mode must be 'offline' or 'online', got {self.mode!r}")
        if self.mode == "online" and self.client is None:
            raise ValueError("online mode needs a client configuration")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "RunManifest":
        doc = dict(doc)
        if "split" in doc and isinstance(doc["split"], dict):
            sp = doc["split"]
            fractions = {TaskKind(k): float(v) for k, v in sp.get("test_fractions", {}).items()}
            doc["split"] = SplitSpec(fractions, int(sp.get("seed", 0))) if fractions \
                else SplitSpec(seed=int(sp.get("seed", 0)))
        if isinstance(doc.get("client"), dict):
            doc["client"] = ClientConfig(**doc["client"])
        return cls(**doc)


@dataclass
class RunResult:
    examples: int
    train: int | None
    test: int | None
    units_done: int
    units_skipped: int
    warnings: int
    rejected: int


class ProgressLedger:
    """Append-only JSONL keyed by (scene, task, situation index); one writer lock."""

    def __init__(self, path: Path, stop_after: int | None = None):
        self.path = path
        self._lock = threading.Lock()
        self._stop_after = stop_after
        self._written = 0
        self.records: dict[tuple, dict] = {}
        if path.exists():
            lines = path.read_text(encoding="utf-8").splitlines()
            for i, line in enumerate(lines):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    # a crash mid-write leaves at most one torn trailing line
                    logger.warning("ignoring unreadable ledger line %d", i + 1)
                    continue
                self.records[(rec["scene_id"], rec["task"], rec["index"])] = rec
        self._fh = open(path, "a", encoding="utf-8", newline="\n")

    def done(self, key) -> bool:
        return key in self.records

    def append(self, rec: dict):
        with self._lock:
            if self._stop_after is not None and self._written >= self._stop_after:
                raise RunInterrupted("kill-point reached")
            self._fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
            self._fh.flush()
            self.records[(rec["scene_id"], rec["task"], rec["index"])] = rec
            self._written += 1

    def close(self):
        self._fh.close()


def load_scenes(scene_dir) -> list[Scene]:
    paths = sorted(Path(scene_dir).glob("*.json"))
    scenes = [load_scene(p) for p in paths]
    ids = [s.id for s in scenes]
    if len(set(ids)) != len(ids):
        raise SitugenError(f"duplicate scene ids in {scene_dir}")
    return sorted(scenes, key=lambda s: s.id)


class _Generator:
    def __init__(self, manifest: RunManifest, ledger: ProgressLedger,
                 client: CompletionClient | None):
        self.m = manifest
        self.ledger = ledger
        self.client = client
        self.warnings = 0
        self.rejected = 0
        self._count_lock = threading.Lock()

    def _warn(self, msg, *args):
        logger.warning(msg, *args)
        with self._count_lock:
            self.warnings += 1

    def _examples(self, scene, task, graph, rng) -> list[DatasetExample]:
        if self.m.mode == "offline":
            return offline_generate(task, graph, rng, OfflineConfig())
        bundle = render_prompt(task, graph, self.m.style)
        text = self.client.complete(bundle)
        provenance = f"llm:{self.client.cfg.model}"
        sit = graph.situation
        if task is TaskKind.CAPTIONING:
            caption = parse_caption(text)
            if not caption:
                return []
            return [DatasetExample(graph.scene_id, sit, task, "", caption,
                                   tuple(r.object_id for r in graph.records()), provenance)]
        pairs, rejected = parse_qa(text, task, scene)
        for frag in rejected:
            logger.info("rejected fragment (%s): %.80r", frag.reason, frag.text)
        with self._count_lock:
            self.rejected += len(rejected)
        return [DatasetExample(graph.scene_id, sit, task, p.question, p.answer, p.target_ids,
                               provenance) for p in pairs]

    def run_scene(self, scene: Scene):
        for task in self.m.tasks:
            for index in range(self.m.situations_per_scene[task]):
                key = (scene.id, task.value, index)
                if self.ledger.done(key):
                    continue
                rng = situation_rng(self.m.seed, scene.id, index, task.value)
                rec = {"scene_id": scene.id, "task": task.value, "index": index}
                try:
                    situation = sample_situation(scene, rng, SituationConfig())
                except SitugenError as exc:
                    self._warn("scene %s: no situation (%s)", scene.id, exc)
                    rec["skipped"] = str(exc)
                    self.ledger.append(rec)
                    continue
                graph = build_situated_graph(scene, situation, GraphConfig())
                try:
                    examples = self._examples(scene, task, graph, rng)
                except AuthError:
                    raise
                except ClientError as exc:
                    # not recorded in the ledger, so a rerun retries this unit
                    self._warn("%s/%s/%d: completion failed: %s", scene.id, task.value, index, exc)
                    continue
                rec["examples"] = [with_fidelity(ex, graph).to_dict() for ex in examples]
                self.ledger.append(rec)


def _assemble(manifest: RunManifest, scenes, ledger: ProgressLedger):
    out = []
    for scene in scenes:
        for task in manifest.tasks:
            for index in range(manifest.situations_per_scene[task]):
                rec = ledger.records.get((scene.id, task.value, index))
                if rec:
                    out.extend(DatasetExample.from_dict(d) for d in rec.get("examples", []))
    return out


def run_generate(manifest: RunManifest, stop_after: int | None = None) -> RunResult:
    out_dir = Path(manifest.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out_dir / LOG_NAME, encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("situgen")
    root.addHandler(handler)
    prev_level = root.level
    if root.level == logging.NOTSET or root.level > logging.INFO:
        root.setLevel(logging.INFO)
    try:
        return _run(manifest, out_dir, stop_after)
    finally:
        root.removeHandler(handler)
        root.setLevel(prev_level)
        handler.close()


def _run(manifest: RunManifest, out_dir: Path, stop_after):
    scenes = load_scenes(manifest.scene_dir)
    logger.info("generate: %d scenes, mode=%s, seed=%d", len(scenes), manifest.mode, manifest.seed)
    ledger = ProgressLedger(out_dir / LEDGER_NAME, stop_after)
    skipped_before = len(ledger.records)
    client = CompletionClient(manifest.client) if manifest.mode == "online" else None
    gen = _Generator(manifest, ledger, client)
    try:
        with ThreadPoolExecutor(max_workers=manifest.workers) as pool:
            futures = [pool.submit(gen.run_scene, s) for s in scenes]
            errors = []
            for f in futures:
                try:
                    f.result()
                except Exception as exc:  # collect, then re-raise the first
                    errors.append(exc)
            if errors:
                raise errors[0]
    finally:
        ledger.close()

    examples = dedup(_assemble(manifest, scenes, ledger))
    kept, failed = [], []
    for ex in examples:
        ok = manifest.keep_failed or ex.fidelity is None or ex.fidelity.passed
        (kept if ok else failed).append(ex)
    if failed:
        gen._warn("%d examples failed the fidelity audit", len(failed))
    emit_jsonl(kept, out_dir / "dataset.jsonl")
    emit_jsonl(failed, out_dir / "rejected.jsonl")
    train = test = None
    try:
        tr, te = split(kept, manifest.split)
        emit_jsonl(tr, out_dir / "train.jsonl")
        emit_jsonl(te, out_dir / "test.jsonl")
        train, test = len(tr), len(te)
    except InsufficientScenes as exc:
        gen._warn("split skipped: %s", exc)
    report = stats(kept)
    (out_dir / "stats.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n",
                                        encoding="utf-8")
    units = sum(manifest.situations_per_scene[t] for t in manifest.tasks) * len(scenes)
    logger.info("generate: %d examples, %d warnings", len(kept), gen.warnings)
    return RunResult(len(kept), train, test, units, skipped_before, gen.warnings, gen.rejected)
