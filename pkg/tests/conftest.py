from __future__ import annotations

import numpy as np
import pytest

from avanon.model import Embedding


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260815)


def face(vec) -> Embedding:
    """Pad a short vector with zeros up to the face embedding dimension."""
    vec = list(float(v) for v in vec)
    return Embedding(tuple(vec + [0.0] * (512 - len(vec))), kind="face")


def voice(vec) -> Embedding:
    return Embedding(tuple(float(v) for v in vec), kind="voice")
