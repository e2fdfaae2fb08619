"""Safe penalty-based feedback for robot navigation among obstacles."""

from ._core import (
    Document,
    Error,
    blend_weight,
    spf_filter,
    spf_filter_multi,
    transition,
)

__all__ = [
    "Document",
    "Error",
    "blend_weight",
    "load",
    "spf_filter",
    "spf_filter_multi",
    "transition",
]


def load(path, overrides=()):
    """Read a run document, applying ``key.path=value`` overrides in order."""
    return Document.from_file(str(path), list(overrides))
