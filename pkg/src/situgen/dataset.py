"""Dataset examples: fidelity audit, dedup, scene-stratified split, JSONL emission, stats.

JSONL schema, one object per line with keys in this order::

    scene_id, task,
    situation {description, stand, quaternion, pivot_id, referent_id, yaw, referent_direction},
    question, answer, target_ids, provenance,
    fidelity {passed, violations: [{kind, detail}]} | null
"""

from __future__ import annotations

import json
import random
import re
from collections import Counter, OrderedDict, defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable

from .errors import GraphMismatch, InsufficientScenes
from .fidelity import FidelityReport, Violation, audit_text
from .situated import SituatedSceneGraph, Situation
from .tasks import TaskKind

OFFLINE_PROVENANCE = "offline-template"

# Train/test counts per task in the reference release.
REFERENCE_SPLITS = {
    TaskKind.CAPTIONING: (8367, 1350),
    TaskKind.ATTR_REL: (61254, 8168),
    TaskKind.AFFORDANCE: (35070, 5017),
    TaskKind.PLANNING: (19434, 2819),
}
# Headline per-task example counts for a full-scale run (approximate).
FULL_SCALE_TASK_TARGETS = {
    TaskKind.CAPTIONING: 10_000,
    TaskKind.ATTR_REL: 62_000,
    TaskKind.AFFORDANCE: 40_000,
    TaskKind.PLANNING: 21_000,
}
DEFAULT_TEST_FRACTIONS = {t: test / (train + test) for t, (train, test) in REFERENCE_SPLITS.items()}


@dataclass(frozen=True)
class DatasetExample:
    scene_id: str
    situation: Situation
    task: TaskKind
    question: str
    answer: str
    target_ids: tuple[str, ...] = ()
    provenance: str = OFFLINE_PROVENANCE
    fidelity: FidelityReport | None = None

    def __post_init__(self):
        object.__setattr__(self, "target_ids", tuple(self.target_ids))
        if not self.answer.strip():
            raise ValueError("answer must be nonempty")
        if self.task is TaskKind.CAPTIONING and self.question:
            raise ValueError("captioning examples carry no question")

    @property
    def key(self) -> tuple:
        return (self.scene_id, self.situation.digest, self.question, self.answer)

    def to_dict(self) -> dict:
        return OrderedDict([
            ("scene_id", self.scene_id),
            ("task", self.task.value),
            ("situation", self.situation.to_dict()),
            ("question", self.question),
            ("answer", self.answer),
            ("target_ids", list(self.target_ids)),
            ("provenance", self.provenance),
            ("fidelity", None if self.fidelity is None else self.fidelity.to_dict()),
        ])

    @classmethod
    def from_dict(cls, doc: dict) -> "DatasetExample":
        return cls(doc["scene_id"], Situation.from_dict(doc["situation"]), TaskKind(doc["task"]),
                   doc["question"], doc["answer"], tuple(doc["target_ids"]), doc["provenance"],
                   FidelityReport.from_dict(doc.get("fidelity")))


def fidelity_check(example: DatasetExample, graph: SituatedSceneGraph) -> FidelityReport:
    if example.scene_id != graph.scene_id or example.situation.digest != graph.situation.digest:
        raise GraphMismatch(
            f"graph for {graph.scene_id}/{graph.situation.digest} does not match example "
            f"{example.scene_id}/{example.situation.digest}")
    valid_ids = {r.object_id for r in graph.records()} | {graph.situation.pivot_id}
    return audit_text(example.question, example.answer, example.target_ids, graph, valid_ids)


def with_fidelity(example: DatasetExample, graph: SituatedSceneGraph) -> DatasetExample:
    return replace(example, fidelity=fidelity_check(example, graph))


def dedup(examples: Iterable[DatasetExample]) -> list[DatasetExample]:
    seen = set()
    out = []
    for ex in examples:
        if ex.key in seen:
            continue
        seen.add(ex.key)
        out.append(ex)
    return out


@dataclass(frozen=True)
class SplitSpec:
    test_fractions: dict = field(default_factory=lambda: dict(DEFAULT_TEST_FRACTIONS))
    seed: int = 0

    def __post_init__(self):
        for task, frac in self.test_fractions.items():
            if not 0.0 < frac < 1.0:
                raise ValueError(f"test fraction for {task} must lie in (0, 1), got {frac}")


def _split_cost(counts, totals, targets) -> float:
    cost = 0.0
    for t, total in totals.items():
        share = counts[t] / total
        cost += (share - targets[t]) ** 2
        if counts[t] == 0 or counts[t] == total:
            cost += 1.0  # every task needs scenes on both sides
    return cost


def _split_scenes(sizes: dict[str, Counter], targets: dict, rng: random.Random) -> set[str]:
    """One test-scene set whose per-task example shares track ``targets`` jointly.

    Greedy pass over the scenes in seeded order, then single-scene toggles
    until no toggle lowers the squared share error.
    """
    scenes = sorted(sizes)
    rng.shuffle(scenes)
    totals = Counter()
    for per_task in sizes.values():
        totals.update(per_task)
    counts = Counter({t: 0 for t in totals})
    test: set[str] = set()

    def toggled(sid):
        sign = -1 if sid in test else 1
        trial = Counter(counts)
        for t, n in sizes[sid].items():
            trial[t] += sign * n
        return trial

    def gain(sid):
        return _split_cost(counts, totals, targets) - _split_cost(toggled(sid), totals, targets)

    for sid in scenes:
        trial = toggled(sid)
        # greedy without the both-sides penalty so early scenes are not forced in
        if sum((trial[t] / totals[t] - targets[t]) ** 2 for t in totals) < \
                sum((counts[t] / totals[t] - targets[t]) ** 2 for t in totals):
            test.add(sid)
            counts = trial
    for _ in range(4 * len(scenes)):
        best = max(scenes, key=lambda sid: (gain(sid), sid))
        if gain(best) <= 1e-15:
            break
        counts = toggled(best)
        test ^= {best}
    return test


def split(examples: Iterable[DatasetExample], spec: SplitSpec = SplitSpec()):
    """Scene-level split: every example of a scene lands on the same side, for all tasks."""
    examples = list(examples)
    sizes: dict[str, Counter] = defaultdict(Counter)
    scenes_per_task = defaultdict(set)
    for ex in examples:
        sizes[ex.scene_id][ex.task] += 1
        scenes_per_task[ex.task].add(ex.scene_id)
    for task in sorted(scenes_per_task, key=lambda t: t.value):
        if len(scenes_per_task[task]) < 2:
            raise InsufficientScenes(
                f"task {task.value} has examples from {len(scenes_per_task[task])} scene(s)")
    targets = {t: spec.test_fractions.get(t, DEFAULT_TEST_FRACTIONS[t]) for t in scenes_per_task}
    rng = random.Random(f"split:{spec.seed}")
    test_scenes = _split_scenes(dict(sizes), targets, rng)
    train = [ex for ex in examples if ex.scene_id not in test_scenes]
    test = [ex for ex in examples if ex.scene_id in test_scenes]
    return train, test


# -- emission ---------------------------------------------------------------------

def example_line(example: DatasetExample) -> str:
    return json.dumps(example.to_dict(), ensure_ascii=False) + "\n"


def emit_jsonl(examples: Iterable[DatasetExample], sink) -> int:
    """Write one JSON object per line to a path or text stream; returns the line count.

    A path sink is flushed and closed before returning.
    """
    if isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__"):
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            return emit_jsonl(examples, fh)
    n = 0
    for ex in examples:
        sink.write(example_line(ex))
        n += 1
    sink.flush()
    return n


def read_jsonl(source) -> list[DatasetExample]:
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, encoding="utf-8") as fh:
            return read_jsonl(fh)
    return [DatasetExample.from_dict(json.loads(line)) for line in source if line.strip()]


# -- statistics ---------------------------------------------------------------------

ANSWER_LENGTH_BINS = ((1, 1), (2, 5), (6, 10), (11, 20), (21, 50), (51, None))
_DIRECTION_WORDS = {
    "left": re.compile(r"\bleft\b", re.I),
    "right": re.compile(r"\bright\b", re.I),
    "front": re.compile(r"\b(?:front|ahead)\b", re.I),
    "back": re.compile(r"\b(?:behind|back|backwards?)\b", re.I),
}


def _bin_name(lo, hi) -> str:
    if hi is None:
        return f"{lo}+"
    return str(lo) if lo == hi else f"{lo}-{hi}"


@dataclass
class StatsReport:
    total: int
    per_task: dict
    situations_per_scene: dict
    answer_length_histogram: dict
    direction_words: dict
    fidelity_passed: int = 0
    fidelity_failed: int = 0
    fidelity_pending: int = 0

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "per_task": self.per_task,
            "situations_per_scene": self.situations_per_scene,
            "answer_length_histogram": self.answer_length_histogram,
            "direction_words": self.direction_words,
            "fidelity": {"passed": self.fidelity_passed, "failed": self.fidelity_failed,
                         "pending": self.fidelity_pending},
        }


def stats(examples: Iterable[DatasetExample]) -> StatsReport:
    examples = list(examples)
    per_task = {t.value: 0 for t in TaskKind}
    situations = defaultdict(set)
    hist = {_bin_name(lo, hi): 0 for lo, hi in ANSWER_LENGTH_BINS}
    words = {w: 0 for w in _DIRECTION_WORDS}
    passed = failed = pending = 0
    for ex in examples:
        per_task[ex.task.value] += 1
        situations[ex.scene_id].add(ex.situation.digest)
        n = len(ex.answer.split())
        for lo, hi in ANSWER_LENGTH_BINS:
            if n >= lo and (hi is None or n <= hi):
                hist[_bin_name(lo, hi)] += 1
                break
        for w, pattern in _DIRECTION_WORDS.items():
            words[w] += len(pattern.findall(ex.answer))
        if ex.fidelity is None:
            pending += 1
        elif ex.fidelity.passed:
            passed += 1
        else:
            failed += 1
    return StatsReport(len(examples), per_task,
                       {sid: len(d) for sid, d in sorted(situations.items())},
                       hist, words, passed, failed, pending)


def task_proportions(counts: dict) -> dict:
    total = sum(counts.values())
    return {k: (v / total if total else 0.0) for k, v in counts.items()}


__all__ = [
    "DatasetExample", "FidelityReport", "Violation", "SplitSpec", "StatsReport",
    "REFERENCE_SPLITS", "FULL_SCALE_TASK_TARGETS", "DEFAULT_TEST_FRACTIONS", "OFFLINE_PROVENANCE",
    "dedup", "emit_jsonl", "example_line", "fidelity_check", "read_jsonl", "split", "stats",
    "task_proportions", "with_fidelity",
]
