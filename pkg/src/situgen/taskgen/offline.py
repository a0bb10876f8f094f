"""Deterministic template generator standing in for the LLM.

Answers are computed from the situated graph, so every example passes the
fidelity audit by construction. The wording is deliberately stiff.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..dataset import OFFLINE_PROVENANCE, DatasetExample
from ..geometry import DirectionBin
from ..situated import SituatedObjectRecord, SituatedSceneGraph, object_phrase
from ..tasks import TaskKind

DIRECTION_PHRASE = {
    DirectionBin.FRONT: "in front of you",
    DirectionBin.RIGHT: "on your right",
    DirectionBin.BACK: "behind you",
    DirectionBin.LEFT: "on your left",
}
CAPTION_ORDER = (DirectionBin.FRONT, DirectionBin.RIGHT, DirectionBin.BACK, DirectionBin.LEFT)

# Per-situation example counts; with 5/10/10/5 situations per scene these
# match the reference task proportions.
DEFAULT_PER_SITUATION = {
    TaskKind.CAPTIONING: 1,
    TaskKind.ATTR_REL: 3,
    TaskKind.AFFORDANCE: 2,
    TaskKind.PLANNING: 2,
}


@dataclass(frozen=True)
class OfflineConfig:
    per_situation: dict = field(default_factory=lambda: dict(DEFAULT_PER_SITUATION))
    min_distance_gap: float = 0.05


def plural(label: str) -> str:
    if label.endswith(("s", "sh", "ch", "x", "z")):
        return label + "es"
    if label.endswith("y") and len(label) > 1 and label[-2] not in "aeiou":
        return label[:-1] + "ies"
    return label + "s"


def _article(phrase: str) -> str:
    return ("an " if phrase[:1].lower() in "aeiou" else "a ") + phrase


def _join(items: list[str]) -> str:
    if len(items) <= 1:
        return "".join(items)
    return ", ".join(items[:-1]) + " and " + items[-1]


def _phrase(r: SituatedObjectRecord) -> str:
    return object_phrase(r.label, r.attributes)


class _Facts:
    def __init__(self, graph: SituatedSceneGraph):
        self.graph = graph
        self.records = list(graph.records())
        self.pivot_label = graph.pivot_label.lower()
        self.by_label: dict[str, list[SituatedObjectRecord]] = {}
        for r in self.records:
            self.by_label.setdefault(r.label.lower(), []).append(r)

    def unique(self, r: SituatedObjectRecord) -> bool:
        key = r.label.lower()
        return len(self.by_label[key]) == 1 and key != self.pivot_label

    def labels_of(self, ids) -> list[str]:
        lookup = {r.object_id: r for r in self.records}
        return [lookup[i].label for i in ids if i in lookup]


def _example(graph, task, question, answer, target_ids) -> DatasetExample:
    return DatasetExample(graph.scene_id, graph.situation, task, question, answer,
                          tuple(target_ids), OFFLINE_PROVENANCE)


def _interleave(pools: list[list], rng: random.Random, n: int) -> list:
    pools = [list(p) for p in pools if p]
    for p in pools:
        rng.shuffle(p)
    rng.shuffle(pools)
    out = []
    while len(out) < n and any(pools):
        for p in pools:
            if p and len(out) < n:
                out.append(p.pop())
    return out


# -- attributes and relations -------------------------------------------------------

def _attr_rel(graph, facts: _Facts, rng, n, cfg: OfflineConfig):
    counts, where, colors, compare = [], [], [], []
    for key, recs in sorted(facts.by_label.items()):
        label = recs[0].label
        for b in DirectionBin:
            if key == facts.pivot_label and b is DirectionBin.FRONT:
                continue
            ids = [r.object_id for r in recs if r.direction is b]
            if not ids and rng.random() < 0.75:
                continue  # keep a few empty-bucket questions
            answer = str(len(ids)) if ids else "none"
            counts.append((f"How many {plural(label)} are {DIRECTION_PHRASE[b]}?", answer, ids))
    for r in facts.records:
        if facts.unique(r):
            where.append((f"Where is the {r.label}?",
                          DIRECTION_PHRASE[r.direction].capitalize() + ".", [r.object_id]))
        color = r.attributes.get("color")
        same = [o for o in facts.by_label[r.label.lower()] if o.direction is r.direction]
        if color and len(same) == 1 and not (r.label.lower() == facts.pivot_label
                                             and r.direction is DirectionBin.FRONT):
            colors.append((f"What color is the {r.label} {DIRECTION_PHRASE[r.direction]}?",
                           f"{color.capitalize()}.", [r.object_id]))
    uniques = [r for r in facts.records if facts.unique(r)]
    for i, a in enumerate(uniques):
        for b in uniques[i + 1:]:
            if abs(a.distance - b.distance) < cfg.min_distance_gap:
                continue
            first, second = (a, b) if rng.random() < 0.5 else (b, a)
            closer = a if a.distance < b.distance else b
            compare.append((f"Which is closer to you, the {first.label} or the {second.label}?",
                            f"The {closer.label}.", [first.object_id, second.object_id]))
    picked = _interleave([counts, where, colors, compare], rng, n)
    return [_example(graph, TaskKind.ATTR_REL, q, a, ids) for q, a, ids in picked]


# -- affordance -----------------------------------------------------------------------

def _passby_sentence(facts: _Facts, r: SituatedObjectRecord, lead: str) -> str:
    labels = facts.labels_of(r.passby)
    if not labels:
        return ""
    return f" {lead} " + _join([f"the {lab}" for lab in labels]) + " on the way."


def _affordance(graph, facts: _Facts, rng, n, cfg):
    nearest: dict[str, SituatedObjectRecord] = {}
    for r in facts.records:  # records come bucket by bucket; pick global nearest
        for aff in r.affordances:
            best = nearest.get(aff)
            if best is None or (r.distance, r.object_id) < (best.distance, best.object_id):
                nearest[aff] = r
    use = []
    for aff, r in sorted(nearest.items()):
        answer = (f"The {_phrase(r)} {DIRECTION_PHRASE[r.direction]}."
                  + _passby_sentence(facts, r, "You will pass by"))
        use.append((f"Where should you go for {aff}?", answer, [r.object_id]))
    paths = []
    for r in facts.records:
        if facts.unique(r) and r.label.lower() not in {lab.lower() for lab in facts.labels_of(r.passby)}:
            labels = facts.labels_of(r.passby)
            answer = ("The " + _join([f"{lab}" for lab in labels]) + "." if labels
                      else "Nothing is in the way.")
            paths.append((f"If you walk to the {r.label}, what will you pass by?", answer,
                          [r.object_id]))
    picked = _interleave([use, paths], rng, n)
    return [_example(graph, TaskKind.AFFORDANCE, q, a, ids) for q, a, ids in picked]


# -- planning -------------------------------------------------------------------------

def first_turn(angle: float) -> str:
    if angle < 10.0 or angle > 350.0:
        return "Go straight ahead"
    side = "right" if angle < 180.0 else "left"
    offset = angle if angle < 180.0 else 360.0 - angle
    if offset < 45.0:
        return f"Turn slightly to your {side}"
    if offset > 135.0:
        return f"Turn around to your {side}"
    return f"Turn to your {side}"


def second_turn(delta: float) -> str:
    """Turn instruction from the angle delta between the two targets."""
    if delta < 10.0 or delta > 350.0:
        return "continue straight ahead"
    side = "right" if delta < 180.0 else "left"
    offset = delta if delta < 180.0 else 360.0 - delta
    if offset < 45.0:
        return f"turn slightly to your {side}"
    if offset > 135.0:
        return f"turn around to your {side}"
    return f"turn to your {side}"


def _planning(graph, facts: _Facts, rng, n, cfg):
    usable = [r for r in facts.records if r.affordances]
    pairs = []
    for a in usable:
        for b in usable:
            if a.object_id == b.object_id or a.label == b.label:
                continue
            pairs.append((a, b))
    rng.shuffle(pairs)
    out = []
    for a, b in pairs[:n]:
        aff_a = rng.choice(a.affordances)
        aff_b = rng.choice(b.affordances)
        delta = (b.angle - a.angle) % 360.0
        question = (f"I want to find something for {aff_a} and then something for {aff_b}. "
                    "How should I proceed?")
        answer = (f"{first_turn(a.angle)} and head towards the {_phrase(a)} "
                  f"{DIRECTION_PHRASE[a.direction]}."
                  + _passby_sentence(facts, a, "You may pass")
                  + f" Then {second_turn(delta)} and head towards the {_phrase(b)}.")
        out.append(_example(graph, TaskKind.PLANNING, question, answer, [a.object_id, b.object_id]))
    return out


# -- captioning -----------------------------------------------------------------------

def caption_text(graph: SituatedSceneGraph) -> str:
    sentences = []
    for b in CAPTION_ORDER:
        recs = sorted(graph.buckets[b], key=lambda r: (r.angle, r.object_id))
        lead = DIRECTION_PHRASE[b][0].upper() + DIRECTION_PHRASE[b][1:]
        if not recs:
            sentences.append(f"{lead}, there are no objects.")
            continue
        verb = "is" if len(recs) == 1 else "are"
        sentences.append(f"{lead}, there {verb} " + _join([_article(_phrase(r)) for r in recs]) + ".")
    return " ".join(sentences)


def _captioning(graph, facts, rng, n, cfg):
    return [_example(graph, TaskKind.CAPTIONING, "", caption_text(graph),
                     [r.object_id for r in facts.records])][:n]


_BUILDERS = {
    TaskKind.CAPTIONING: _captioning,
    TaskKind.ATTR_REL: _attr_rel,
    TaskKind.AFFORDANCE: _affordance,
    TaskKind.PLANNING: _planning,
}


def offline_generate(task: TaskKind, graph: SituatedSceneGraph, rng: random.Random,
                     config: OfflineConfig = OfflineConfig()) -> list[DatasetExample]:
    n = config.per_situation.get(task, DEFAULT_PER_SITUATION[task])
    return _BUILDERS[task](graph, _Facts(graph), rng, n, config)
