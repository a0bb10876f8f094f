"""Prompt rendering. Instruction texts live in ``prompts/*.txt``; code only substitutes."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from ..situated import SituatedSceneGraph, graph_to_json, object_phrase
from ..tasks import PromptStyle, TaskKind

_TASK_FILES = {
    TaskKind.CAPTIONING: "captioning.txt",
    TaskKind.ATTR_REL: "attr_rel.txt",
    TaskKind.AFFORDANCE: "affordance.txt",
    TaskKind.PLANNING: "planning.txt",
}


@dataclass(frozen=True)
class PromptBundle:
    task: TaskKind
    style: PromptStyle
    system_text: str
    user_text: str
    scene_id: str
    situation_digest: str


@lru_cache(maxsize=None)
def load_prompt_text(name: str) -> str:
    return resources.files(__package__).joinpath("prompts", name).read_text(encoding="utf-8")


def task_instruction(task: TaskKind) -> str:
    return load_prompt_text(_TASK_FILES[task]).strip()


def _coord(v) -> str:
    return "[" + ", ".join(f"{x:.2f}" for x in v) + "]"


def _pivot_name(graph: SituatedSceneGraph) -> str:
    return object_phrase(graph.situation.pivot_id, graph.pivot_attributes)


def coordinate_graph(graph: SituatedSceneGraph) -> dict:
    """Scene graph with raw object coordinates in place of angles and distances."""
    out = {}
    for r in sorted(graph.records(), key=lambda r: r.object_id):
        out[r.object_id] = {
            "coordinate": [round(v, 2) for v in r.center],
            "affordances": list(r.affordances),
            "attributes": dict(sorted(r.attributes.items())),
            "relations": list(r.relations),
        }
    return out


def _spa_context(graph: SituatedSceneGraph) -> str:
    preamble = load_prompt_text("spa_preamble.txt").strip().replace("{pivot}", _pivot_name(graph))
    return f"{preamble}\n\nScene graph:\n{graph_to_json(graph).decode('utf-8')}"


def _cord_context(graph: SituatedSceneGraph) -> str:
    sit = graph.situation
    preamble = load_prompt_text("cord_preamble.txt").strip()
    for key, value in (("{pivot}", _pivot_name(graph)),
                       ("{stand}", _coord(sit.stand)),
                       ("{pivot_id}", sit.pivot_id),
                       ("{pivot_center}", _coord(graph.pivot_center))):
        preamble = preamble.replace(key, value)
    scene_json = json.dumps(coordinate_graph(graph), ensure_ascii=False)
    return f"{preamble}\n\nScene graph:\n{scene_json}"


def render_prompt(task: TaskKind, graph: SituatedSceneGraph,
                  style: PromptStyle = PromptStyle.SPA) -> PromptBundle:
    if style is PromptStyle.SPA:
        context = _spa_context(graph)
    else:
        context = _cord_context(graph)
    user = (f"{context}\n\nSituation: {graph.situation.description}\n\n"
            f"{task_instruction(task)}\n")
    return PromptBundle(task, style, load_prompt_text("system.txt").strip(), user,
                        graph.scene_id, graph.situation.digest)
