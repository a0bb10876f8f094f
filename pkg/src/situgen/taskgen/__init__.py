"""Prompt rendering, LLM completion, response parsing and an offline generator."""

from ..tasks import PromptStyle, TaskKind
from .client import AuditRecord, ClientConfig, CompletionClient, complete
from .offline import OfflineConfig, offline_generate
from .parse import QAPair, RejectedFragment, format_qa, parse_caption, parse_qa
from .prompts import PromptBundle, load_prompt_text, render_prompt

__all__ = [
    "AuditRecord", "ClientConfig", "CompletionClient", "OfflineConfig", "PromptBundle",
    "PromptStyle", "QAPair", "RejectedFragment", "TaskKind", "complete", "format_qa",
    "load_prompt_text", "offline_generate", "parse_caption", "parse_qa", "render_prompt",
]
