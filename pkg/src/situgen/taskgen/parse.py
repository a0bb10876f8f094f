"""Parsing ``Q: ... T: ... A: ...`` responses into question-answer pairs.

Markers are recognized case-insensitively in their short (``Q:``, ``T:``,
``A:``) and long (``Question:``, ``Answer:``) forms, optionally preceded by
list numbering (``3.``). Nothing is silently dropped: every fragment that
does not yield a valid pair comes back as a :class:`RejectedFragment`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..scene import Scene
from ..tasks import TaskKind

_MARKER_RE = re.compile(
    r"(?:(?<=\s)|^)(?:\d+\.\s*)?(?P<tag>Question|Answer|Q|T|A)\s*:", re.IGNORECASE)
_TAG = {"question": "Q", "answer": "A", "q": "Q", "t": "T", "a": "A"}
_ID_SPLIT_RE = re.compile(r"[,\s]+")

OPTIONAL_TARGET_TASKS = frozenset({TaskKind.AFFORDANCE, TaskKind.PLANNING})


@dataclass(frozen=True)
class QAPair:
    question: str
    target_ids: tuple[str, ...]
    answer: str

    def __post_init__(self):
        object.__setattr__(self, "target_ids", tuple(self.target_ids))
        if not self.question.strip() or not self.answer.strip():
            raise ValueError("question and answer must be nonempty")


@dataclass(frozen=True)
class RejectedFragment:
    text: str
    reason: str


def _tokenize(text: str):
    marks = list(_MARKER_RE.finditer(text))
    lead = text[:marks[0].start()] if marks else text
    tokens = []
    for i, m in enumerate(marks):
        end = marks[i + 1].start() if i + 1 < len(marks) else len(text)
        tokens.append((_TAG[m.group("tag").lower()], text[m.end():end].strip(), text[m.start():end]))
    return lead, tokens


def parse_qa(response: str, task: TaskKind, scene: Scene | None = None):
    """Return ``(pairs, rejected)``; a total function."""
    pairs: list[QAPair] = []
    rejected: list[RejectedFragment] = []
    lead, tokens = _tokenize(response or "")
    if lead.strip():
        rejected.append(RejectedFragment(lead.strip(), "text outside any Q/T/A group"))

    groups = []
    for tag, value, raw in tokens:
        if tag == "Q" or not groups:
            groups.append([])
        groups[-1].append((tag, value, raw))

    t_optional = task in OPTIONAL_TARGET_TASKS
    for group in groups:
        raw = "".join(r for _, _, r in group).strip()
        tags = [t for t, _, _ in group]
        fields = {t: v for t, v, _ in group}
        if tags[0] != "Q":
            rejected.append(RejectedFragment(raw, f"fragment starts with {tags[0]}: instead of Q:"))
            continue
        if len(tags) != len(set(tags)):
            rejected.append(RejectedFragment(raw, "repeated marker within one pair"))
            continue
        if "A" not in fields:
            rejected.append(RejectedFragment(raw, "missing A: answer"))
            continue
        if "T" in fields and tags.index("T") > tags.index("A"):
            rejected.append(RejectedFragment(raw, "T: must precede A:"))
            continue
        if "T" not in fields and not t_optional:
            rejected.append(RejectedFragment(raw, "missing T: target ids"))
            continue
        question, answer = fields["Q"], fields["A"]
        if not question or not answer:
            rejected.append(RejectedFragment(raw, "empty question or answer"))
            continue
        ids = tuple(i for i in _ID_SPLIT_RE.split(fields.get("T", "")) if i)
        if scene is not None:
            unknown = [i for i in ids if i not in scene.by_id]
            if unknown:
                rejected.append(RejectedFragment(raw, f"unknown target ids {unknown}"))
                continue
        pairs.append(QAPair(question, ids, answer))
    return pairs, rejected


def format_qa(pairs) -> str:
    """Inverse of :func:`parse_qa` for well-formed pairs."""
    lines = []
    for p in pairs:
        if p.target_ids:
            lines.append(f"Q: {p.question} T: {', '.join(p.target_ids)} A: {p.answer}")
        else:
            lines.append(f"Q: {p.question} A: {p.answer}")
    return "\n".join(lines)


def parse_caption(response: str) -> str:
    return " ".join((response or "").split())
