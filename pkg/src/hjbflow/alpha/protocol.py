from __future__ import annotations

from typing import Protocol

from hjbflow.core.market import FloatArray


class AlphaEvaluator(Protocol):
    def evaluate(self, phi: FloatArray) -> tuple[FloatArray, FloatArray]: ...
