"""Exact match, BLEU-4, ROUGE-L and the "which direction" bias audit.

Tokenization is frozen: lowercase, then split on anything that is not a
letter or digit. BLEU is unsmoothed.
"""

from __future__ import annotations

import json
import math
import re
import string
from collections import Counter
from dataclasses import dataclass, field

from .errors import ParseError

DIRECTION_CLASSES = ("left", "right", "forward", "backward", "other")
DEFAULT_DIRECTION_PREFIX = "which direction"
ROUGE_BETA = 1.2

_TOKEN_RE = re.compile(r"[^\W_]+")
_ARTICLES_RE = re.compile(r"\b(?:a|an|the)\b")
_PUNCT = str.maketrans("", "", string.punctuation)
_DIRECTION_KEYWORDS = {
    "left": "left",
    "right": "right",
    "forward": "forward", "front": "forward", "ahead": "forward", "straight": "forward",
    "backward": "backward", "backwards": "backward", "back": "backward", "behind": "backward",
}


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def normalize(text: str) -> str:
    text = text.lower().translate(_PUNCT)
    text = _ARTICLES_RE.sub(" ", text)
    return " ".join(text.split())


def exact_match(pred: str, ref: str) -> int:
    """1 iff the normalized strings agree. Numerals are not canonicalized ("two" != "2")."""
    return int(normalize(pred) == normalize(ref))


def _ngrams(tokens, n) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu4(pred: list[str], ref: list[str], max_order: int = 4) -> float:
    """Sentence BLEU with uniform weights, clipped counts and brevity penalty.

    Any zero n-gram precision makes the score 0. When either side is shorter
    than ``max_order`` tokens, only the orders both sides can form are used,
    so a short sentence still scores 1 against itself.
    """
    if not pred or not ref:
        return 0.0
    order = min(max_order, len(pred), len(ref))
    log_sum = 0.0
    for n in range(1, order + 1):
        p_counts = _ngrams(pred, n)
        r_counts = _ngrams(ref, n)
        matched = sum(min(c, r_counts[g]) for g, c in p_counts.items())
        if matched == 0:
            return 0.0
        log_sum += math.log(matched / sum(p_counts.values()))
    bp = 1.0 if len(pred) > len(ref) else math.exp(1.0 - len(ref) / len(pred))
    return min(1.0, bp * math.exp(log_sum / order))


def lcs_length(a: list, b: list) -> int:
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(pred: list[str], ref: list[str], beta: float = ROUGE_BETA) -> float:
    """LCS F-measure ``(1 + b^2) P R / (R + b^2 P)``; beta > 1 weights recall."""
    if not pred or not ref:
        return 0.0
    lcs = lcs_length(pred, ref)
    if lcs == 0:
        return 0.0
    p = lcs / len(pred)
    r = lcs / len(ref)
    b2 = beta * beta
    return (1 + b2) * p * r / (r + b2 * p)


@dataclass(frozen=True)
class PredictionRecord:
    key: str
    question: str
    prediction: str
    reference: str
    external_scores: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> "PredictionRecord":
        try:
            return cls(str(doc["key"]), str(doc.get("question", "")), str(doc["prediction"]),
                       str(doc["reference"]), dict(doc.get("external_scores") or {}))
        except (KeyError, TypeError) as exc:
            raise ParseError(f"prediction record missing field: {exc}") from None


@dataclass
class DirectionDistribution:
    counts: dict
    fractions: dict | None  # None when no question matched (fractions undefined)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def undefined(self) -> bool:
        return self.fractions is None

    def to_dict(self) -> dict:
        return {"counts": dict(self.counts), "fractions": self.fractions,
                "total": self.total, "undefined": self.undefined}


def first_direction(text: str) -> str:
    for tok in tokenize(text):
        cls = _DIRECTION_KEYWORDS.get(tok)
        if cls:
            return cls
    return "other"


def direction_distribution(records, prefix: str = DEFAULT_DIRECTION_PREFIX) -> DirectionDistribution:
    """Classify the first direction keyword of each prediction whose question starts with ``prefix``."""
    prefix = prefix.lower()
    counts = {c: 0 for c in DIRECTION_CLASSES}
    for rec in records:
        if rec.question.strip().lower().startswith(prefix):
            counts[first_direction(rec.prediction)] += 1
    total = sum(counts.values())
    fractions = {c: n / total for c, n in counts.items()} if total else None
    return DirectionDistribution(counts, fractions)


def load_predictions(source) -> list[PredictionRecord]:
    """Read a prediction JSONL file (path or text stream); keys must be unique."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, encoding="utf-8") as fh:
            return load_predictions(fh)
    records, seen = [], set()
    for lineno, line in enumerate(source, 1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {lineno}: {exc.msg}") from None
        rec = PredictionRecord.from_dict(doc)
        if rec.key in seen:
            raise ParseError(f"line {lineno}: duplicate key {rec.key!r}")
        seen.add(rec.key)
        records.append(rec)
    return records


def evaluate_records(records, prefix: str = DEFAULT_DIRECTION_PREFIX,
                     beta: float = ROUGE_BETA) -> dict:
    """Aggregate report; external score columns are averaged and merged as given."""
    records = list(records)
    n = len(records)
    em = bleu = rouge = 0.0
    external: dict[str, list[float]] = {}
    for rec in records:
        p, r = tokenize(rec.prediction), tokenize(rec.reference)
        em += exact_match(rec.prediction, rec.reference)
        bleu += bleu4(p, r)
        rouge += rouge_l(p, r, beta)
        for name, value in rec.external_scores.items():
            external.setdefault(name, []).append(float(value))
    mean = (lambda x: x / n) if n else (lambda x: None)
    return {
        "count": n,
        "exact_match": mean(em),
        "bleu4": mean(bleu),
        "rouge_l": mean(rouge),
        "external": {k: math.fsum(v) / len(v) for k, v in sorted(external.items())},
        "direction_distribution": direction_distribution(records, prefix).to_dict(),
    }
