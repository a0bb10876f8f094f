"""Spatial mutation injection for the fidelity audit.

A mutation counts as injected only when the graph itself says the mutated
text is false, so the detection rate measures the checker, not the mutator.
"""

import random
import re
from dataclasses import replace

from situgen.geometry import DirectionBin

PHRASES = {
    DirectionBin.LEFT: "on your left",
    DirectionBin.RIGHT: "on your right",
    DirectionBin.FRONT: "in front of you",
    DirectionBin.BACK: "behind you",
}
_PHRASE_RE = re.compile("|".join(f"(?P<{b.name}>{re.escape(p)})" for b, p in PHRASES.items()),
                        re.IGNORECASE)
NUMBER_WORDS = {"none": 0, "no": 0, "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4,
                "five": 5}


def _labels_in(text, labels):
    found = set()
    for label in labels:
        forms = [label, label + "s", label + "es"] + ([label[:-1] + "ies"] if label.endswith("y") else [])
        if re.search(r"\b(?:" + "|".join(map(re.escape, forms)) + r")\b", text, re.IGNORECASE):
            found.add(label)
    # a multiword label swallows its head noun ("trash can" vs "can")
    return {l for l in found if not any(l != m and re.search(rf"\b{re.escape(l)}\b", m) for m in found)}


def _sentence_at(text, pos):
    start = max(text.rfind(".", 0, pos), text.rfind("?", 0, pos)) + 1
    ends = [i for i in (text.find(".", pos), text.find("?", pos)) if i >= 0]
    return text[start:min(ends) if ends else len(text)]


def _directions(graph, label):
    found = {r.direction for r in graph.records() if r.label.lower() == label}
    if label == graph.pivot_label.lower():
        found.add(DirectionBin.FRONT)  # the agent faces the pivot
    return found


def _answer_count(answer):
    answer = answer.strip().rstrip(".").lower()
    return int(answer) if answer.isdigit() else NUMBER_WORDS.get(answer)


def _allowed_counts(graph, label, direction):
    truth = sum(1 for r in graph.buckets[direction] if r.label.lower() == label)
    allowed = {truth}
    if label == graph.pivot_label.lower() and direction is DirectionBin.FRONT:
        allowed.add(truth + 1)  # the pivot itself stands in front
    return allowed


def direction_mutation(example, graph, rng: random.Random):
    """Swap one egocentric direction phrase for a direction that makes the sentence false."""
    labels = sorted({r.label.lower() for r in graph.records()})
    spots = []
    for field in ("question", "answer"):
        text = getattr(example, field)
        for m in _PHRASE_RE.finditer(text):
            spots.append((field, m))
    if not spots:
        return None
    field, m = rng.choice(spots)
    text = getattr(example, field)
    old = next(b for b in DirectionBin if m.group(b.name))
    grounding = _labels_in(_sentence_at(text, m.start()), labels)
    if not grounding and field == "answer":
        grounding = _labels_in(example.question, labels)
    if not grounding:
        return None
    if field == "question" and re.match(r"\s*how many\b", text, re.IGNORECASE):
        # a count question claims nothing by itself; it is false when the count changes
        if len(grounding) != 1:
            return None
        label = next(iter(grounding))
        claimed = _answer_count(example.answer)
        false_dirs = [b for b in DirectionBin if b is not old
                      and claimed not in _allowed_counts(graph, label, b)]
    else:
        false_dirs = [b for b in DirectionBin
                      if b is not old and any(b not in _directions(graph, l) for l in grounding)]
    if not false_dirs:
        return None
    new = rng.choice(false_dirs)
    phrase = PHRASES[new]
    if m.group(0)[0].isupper():
        phrase = phrase[0].upper() + phrase[1:]
    mutated = text[:m.start()] + phrase + text[m.end():]
    return replace(example, **{field: mutated}, fidelity=None)


def count_mutation(example, graph, rng: random.Random):
    """Replace the numeric answer of a directional how-many question with a wrong count."""
    qm = re.match(r"how many (?P<noun>[a-z ]+?) (?:is|are) (?P<dir>.+?)\?$", example.question,
                  re.IGNORECASE)
    if not qm:
        return None
    dm = _PHRASE_RE.fullmatch(qm.group("dir"))
    labels = _labels_in(qm.group("noun"), sorted({r.label.lower() for r in graph.records()}))
    if not dm or len(labels) != 1:
        return None
    label = labels.pop()
    direction = next(b for b in DirectionBin if dm.group(b.name))
    allowed = _allowed_counts(graph, label, direction)
    current = _answer_count(example.answer)
    if current is None:
        return None
    wrong = [v for v in (current - 1, current + 1, current + 2) if v >= 0 and v not in allowed]
    return replace(example, answer=str(rng.choice(wrong)), fidelity=None)
