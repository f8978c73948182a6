"""Operator review: persisted projects and the local HTTP service."""

from avanon.review.project import (
    Conflict,
    InvalidInput,
    NeedsConfirm,
    ProjectInputs,
    ReviewError,
    ReviewProject,
    UnknownResource,
    replay_plan_bytes,
)

__all__ = [
    "Conflict",
    "InvalidInput",
    "NeedsConfirm",
    "ProjectInputs",
    "ReviewError",
    "ReviewProject",
    "UnknownResource",
    "replay_plan_bytes",
]
