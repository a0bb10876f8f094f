"""Rule-based spatial-fidelity audit of generated text against a situated graph.

The checker is sound, not complete: it only flags claims it can ground in the
graph and says nothing about text it cannot parse. Recognized claims:

* ``<label> [is|are|that is] <direction>`` ("the table on your left") and
  ``<Direction>, there is/are <list>`` (caption sentences): each named label
  must have an instance in that direction bucket.
* ``How many <label>s ... <direction>?`` with a numeric answer: the number
  must equal the bucket count.
* ``Which is closer/farther ..., the X or the Y?`` / ``Is the X closer to you
  than the Y?``: the answer must agree with graph distances when X and Y are
  unique labels.
* Target ids must exist in the scene.

Direction lexicon (case-insensitive): left, right, front / in front / ahead,
behind / back / backward(s). Bare ``to the left`` forms count only when they
are not followed by ``of``; object-relative phrases such as ``behind the
table`` are ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

from .geometry import DirectionBin

UNKNOWN_OBJECT = "UnknownObject"
DIRECTION_MISMATCH = "DirectionMismatch"
COUNT_MISMATCH = "CountMismatch"
DISTANCE_COMPARATOR_MISMATCH = "DistanceComparatorMismatch"
VIOLATION_KINDS = (UNKNOWN_OBJECT, DIRECTION_MISMATCH, COUNT_MISMATCH, DISTANCE_COMPARATOR_MISMATCH)

_SELF = r"(?:you|me)\b"
_DIR_PATTERNS = {
    DirectionBin.LEFT: (
        rf"(?:on|to|at)\s+(?:your|my)\s+left(?:\s+side)?\b|(?:on|to)\s+the\s+left\b(?!\s+of\b)"
        rf"|left\s+of\s+{_SELF}"),
    DirectionBin.RIGHT: (
        rf"(?:on|to|at)\s+(?:your|my)\s+right(?:\s+side)?\b|(?:on|to)\s+the\s+right\b(?!\s+of\b)"
        rf"|right\s+of\s+{_SELF}"),
    DirectionBin.FRONT: (
        rf"in\s+front\s+of\s+{_SELF}|in\s+front\b(?!\s+of\b)|ahead\s+of\s+{_SELF}"
        rf"|ahead\b(?!\s+of\b)|(?:on|to|at)\s+(?:your|my)\s+front\b"),
    DirectionBin.BACK: (
        rf"behind\s+{_SELF}|behind\b(?!\s+(?:the|a|an|it|this|that|them|him|her)\b)"
        rf"|(?:on|to|at)\s+(?:your|my)\s+back(?:side|wards?)?\b"
        rf"|(?:on|to)\s+the\s+back(?:wards?)?\b(?!\s+of\b)"),
}
DIRECTION_RE = "|".join(f"(?P<{b.name}>{p})" for b, p in _DIR_PATTERNS.items())
_DIR_ONLY = re.compile(DIRECTION_RE, re.IGNORECASE)

_NUMBER_WORDS = {w: i for i, w in enumerate(
    "zero one two three four five six seven eight nine ten eleven twelve thirteen fourteen "
    "fifteen sixteen seventeen eighteen nineteen twenty".split())}
_NUMBER_WORDS.update({"no": 0, "none": 0, "nothing": 0})

_YES_NO_START = re.compile(
    r"^\s*(?:is|are|do|does|did|can|could|will|would|should|has|have|was|were|which)\b", re.I)
_QUALIFIER_WORDS = re.compile(r"\b(?:that|which|who|with|without|except|other|besides)\b", re.I)


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str


@dataclass(frozen=True)
class FidelityReport:
    passed: bool
    violations: tuple[Violation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "violations", tuple(self.violations))
        if self.passed != (not self.violations):
            raise ValueError("passed must equal 'no violations'")

    @classmethod
    def of(cls, violations) -> "FidelityReport":
        violations = tuple(violations)
        return cls(not violations, violations)

    def to_dict(self) -> dict:
        return {"passed": self.passed,
                "violations": [{"kind": v.kind, "detail": v.detail} for v in self.violations]}

    @classmethod
    def from_dict(cls, doc) -> "FidelityReport | None":
        if doc is None:
            return None
        return cls(doc["passed"], tuple(Violation(v["kind"], v["detail"]) for v in doc["violations"]))


def plural_forms(label: str) -> list[str]:
    forms = [label, label + "s", label + "es"]
    if label.endswith("y"):
        forms.append(label[:-1] + "ies")
    return forms


@lru_cache(maxsize=256)
def _label_regex(labels: tuple[str, ...]) -> re.Pattern:
    alts = []
    for label in labels:
        for form in plural_forms(label):
            alts.append((form, label))
    alts.sort(key=lambda a: -len(a[0]))
    body = "|".join(re.escape(f) for f, _ in alts)
    return re.compile(rf"\b(?:{body})\b", re.IGNORECASE)


class _GraphFacts:
    def __init__(self, graph):
        self.graph = graph
        self.pivot_label = graph.pivot_label.lower()
        self.by_label: dict[str, list] = {}
        for r in graph.records():
            self.by_label.setdefault(r.label.lower(), []).append(r)
        labels = set(self.by_label)
        if self.pivot_label:
            labels.add(self.pivot_label)
        self.labels = tuple(sorted(labels))
        self.form_to_label = {}
        for label in self.labels:
            for form in plural_forms(label):
                self.form_to_label.setdefault(form, label)
        self.label_re = _label_regex(self.labels) if self.labels else None

    def canonical(self, word: str) -> str:
        return self.form_to_label[word.lower()]

    def directions_of(self, label: str) -> set:
        dirs = {r.direction for r in self.by_label.get(label, ())}
        if label == self.pivot_label:
            dirs.add(DirectionBin.FRONT)
        return dirs

    def count(self, label: str, direction: DirectionBin) -> int:
        return sum(1 for r in self.by_label.get(label, ()) if r.direction is direction)

    def unique_distance(self, label: str):
        recs = self.by_label.get(label, ())
        if len(recs) != 1 or label == self.pivot_label:
            return None
        return recs[0].distance

    def find_labels(self, text: str) -> list[tuple[str, int, int]]:
        if self.label_re is None:
            return []
        return [(self.canonical(m.group(0)), m.start(), m.end()) for m in self.label_re.finditer(text)]


def _direction_of(match: re.Match) -> DirectionBin:
    for b in DirectionBin:
        if match.group(b.name):
            return b
    raise AssertionError("unreachable")


def _parse_count(answer: str):
    m = re.match(r"\s*(?:there\s+(?:is|are)\s+)?(\d+|[a-z]+)\b", answer, re.IGNORECASE)
    if not m:
        return None
    word = m.group(1).lower()
    if word.isdigit():
        return int(word)
    return _NUMBER_WORDS.get(word)


def direction_claims(text: str, facts: _GraphFacts) -> list[tuple[str, DirectionBin, str]]:
    """(label, direction, snippet) triples asserted by ``text``."""
    if facts.label_re is None:
        return []
    claims = []
    link = r"(?:\s+(?:that|which)\s+(?:is|are))?(?:\s+(?:is|are)(?:\s+located)?)?"
    for m in facts.label_re.finditer(text):
        tail = text[m.end():]
        dm = re.match(rf"{link}\s+(?:{DIRECTION_RE})", tail, re.IGNORECASE)
        if dm:
            claims.append((facts.canonical(m.group(0)), _direction_of(dm),
                           text[m.start():m.end() + dm.end()]))
    sentence_re = re.compile(rf"(?:{DIRECTION_RE})\s*,\s*there\s+(?:is|are)\s+(?P<list>[^.;]+)",
                             re.IGNORECASE)
    for sm in sentence_re.finditer(text):
        direction = _direction_of(sm)
        for label, _, _ in facts.find_labels(sm.group("list")):
            claims.append((label, direction, sm.group(0)))
    return claims


def _check_directions(text: str, facts: _GraphFacts, out: list):
    for label, direction, snippet in direction_claims(text, facts):
        if direction not in facts.directions_of(label):
            where = sorted(d.value for d in facts.directions_of(label)) or ["nowhere"]
            out.append(Violation(DIRECTION_MISMATCH,
                                 f"{snippet!r}: no {label} in {direction.value}, found in {', '.join(where)}"))


def _check_where_is(question: str, answer: str, facts: _GraphFacts, out: list):
    qm = re.match(r"\s*where\s+(?:is|are)\s+the\s+(?P<obj>[^?]+)\?\s*$", question, re.IGNORECASE)
    if not qm:
        return
    found = facts.find_labels(qm.group("obj"))
    if len(found) != 1 or found[0][1] != 0 and qm.group("obj")[:found[0][1]].strip():
        return
    am = re.match(rf"\s*(?:it\s+is\s+|they\s+are\s+)?(?:{DIRECTION_RE})", answer, re.IGNORECASE)
    if am:
        label, direction = found[0][0], _direction_of(am)
        if direction not in facts.directions_of(label):
            out.append(Violation(DIRECTION_MISMATCH,
                                 f"where is the {label}: answered {direction.value}"))


def _check_count(question: str, answer: str, facts: _GraphFacts, out: list):
    qm = re.search(rf"how\s+many\s+(?P<mid>.*?)(?:{DIRECTION_RE})", question, re.IGNORECASE)
    if not qm:
        return
    mid = qm.group("mid")
    found = facts.find_labels(mid)
    if not found:
        return
    label, start, end = found[0]
    if re.sub(r"^\s*(?:the\s+)?", "", mid[:start], flags=re.I).strip():
        return  # qualified ("white chairs"); count not derivable from the graph
    if _QUALIFIER_WORDS.search(mid[end:]):
        return
    claimed = _parse_count(answer)
    if claimed is None:
        return
    direction = _direction_of(qm)
    expected = facts.count(label, direction)
    allowed = {expected}
    if label == facts.pivot_label and direction is DirectionBin.FRONT:
        allowed.add(expected + 1)
    if claimed not in allowed:
        out.append(Violation(COUNT_MISMATCH,
                             f"how many {label} {direction.value}: answered {claimed}, expected {expected}"))


_WHICH_RE = re.compile(
    r"which\s+(?:one\s+)?is\s+(?P<cmp>closer|nearer|farther|further)\b[^,?]*?,?\s*"
    r"(?P<a>the\s+[^?]+?)\s+or\s+(?P<b>the\s+[^?]+?)\s*\?", re.IGNORECASE)
_IS_THAN_RE = re.compile(
    r"^\s*is\s+(?P<a>the\s+.+?)\s+(?P<cmp>closer|nearer|farther|further)\b.*?\bthan\s+"
    r"(?P<b>the\s+[^?]+?)\s*\?", re.IGNORECASE)
_FAR_OR_RE = re.compile(
    r"^\s*is\s+(?P<a>the\s+.+?)\s+(?P<cmp>far|close|near)\w*\s+(?:from|to)\s+(?:you|me)\s+or\s+"
    r"(?P<b>the\s+.+?)\s+(?:far|close|near)\w*\s+(?:from|to)\s+(?:you|me)\s*\?", re.IGNORECASE)


def _single_label(segment: str, facts: _GraphFacts):
    found = facts.find_labels(segment)
    if len({f[0] for f in found}) != 1:
        return None
    return found[0][0]


def _check_comparative(question: str, answer: str, facts: _GraphFacts, out: list):
    for pattern, mode in ((_WHICH_RE, "which"), (_FAR_OR_RE, "which"), (_IS_THAN_RE, "yesno")):
        qm = pattern.search(question)
        if qm:
            break
    else:
        return
    a, b = _single_label(qm.group("a"), facts), _single_label(qm.group("b"), facts)
    if a is None or b is None or a == b:
        return
    da, db = facts.unique_distance(a), facts.unique_distance(b)
    if da is None or db is None or da == db:
        return
    closer_wanted = qm.group("cmp").lower() in ("closer", "nearer", "close", "near")
    truth = a if (da < db) == closer_wanted else b
    if mode == "which":
        named = {label for label, _, _ in facts.find_labels(answer)} & {a, b}
        if len(named) != 1:
            return
        claimed = named.pop()
        if claimed != truth:
            out.append(Violation(DISTANCE_COMPARATOR_MISMATCH,
                                 f"answered {claimed}, but {truth} is {qm.group('cmp').lower()}"))
    else:
        ym = re.match(r"\s*(yes|no)\b", answer, re.IGNORECASE)
        if not ym:
            return
        claimed_true = ym.group(1).lower() == "yes"
        if claimed_true != (truth == a):
            out.append(Violation(DISTANCE_COMPARATOR_MISMATCH,
                                 f"answered {ym.group(1)}, but the {truth} is {qm.group('cmp').lower()}"))


def audit_text(question: str, answer: str, target_ids, graph, valid_ids) -> FidelityReport:
    facts = _GraphFacts(graph)
    out: list[Violation] = []
    for oid in target_ids:
        if oid not in valid_ids:
            out.append(Violation(UNKNOWN_OBJECT, f"target id {oid!r} is not in the scene"))
    _check_directions(answer, facts, out)
    is_count = bool(re.search(r"\bhow\s+many\b|\b(?:is|are)\s+there\b", question, re.IGNORECASE))
    if question and not is_count and not _YES_NO_START.match(question):
        _check_directions(question, facts, out)
    if question:
        _check_where_is(question, answer, facts, out)
        _check_count(question, answer, facts, out)
        _check_comparative(question, answer, facts, out)
    return FidelityReport.of(out)
