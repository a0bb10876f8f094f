"""Situated 3D scene QA dataset construction, alignment numerics and evaluation."""

from .errors import SitugenError
from .geometry import KERNEL_BACKEND, DirectionBin, classify_direction, rotation_angle
from .scene import Object3D, Obb3D, Scene, load_scene
from .situated import (Situation, SituatedSceneGraph, build_situated_graph, sample_situation,
                       situation_at)
from .tasks import PromptStyle, TaskKind

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND", "DirectionBin", "Obb3D", "Object3D", "PromptStyle", "Scene",
    "SituatedSceneGraph", "Situation", "SitugenError", "TaskKind", "build_situated_graph",
    "classify_direction", "load_scene", "rotation_angle", "sample_situation", "situation_at",
]
