import enum


class TaskKind(enum.Enum):
    CAPTIONING = "captioning"
    ATTR_REL = "attr_rel"
    AFFORDANCE = "affordance"
    PLANNING = "planning"


class PromptStyle(enum.Enum):
    SPA = "spa"  # precomputed angles and distances
    CORD = "cord"  # raw coordinates plus calculation instructions


TASK_ORDER = tuple(TaskKind)
