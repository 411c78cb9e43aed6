from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Union

from pydantic import BaseModel, Field


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class RunManifest(BaseModel):
    """Record of one CLI run: resolved configuration, inputs, timings and warnings."""

    subcommand: str
    version: str
    config: dict[str, Any]
    input_digests: dict[str, str] = Field(default_factory=dict, alias="input-digests")
    stage_seconds: dict[str, float] = Field(default_factory=dict, alias="stage-seconds")
    warnings: list[str] = Field(default_factory=list)
    outputs: list[str] = Field(default_factory=list)
    diagnostics: dict[str, Any] = Field(default_factory=dict)
    created_at: datetime = Field(default_factory=_utcnow, alias="created-at")

    model_config = {
        "populate_by_name": True,
        "extra": "forbid",
    }

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls.model_validate_json(text)

    def write(self, path: Union[str, Path]) -> Path:
        out = Path(path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(self.to_json() + "\n", encoding="utf-8")
        return out

    def without_volatile(self) -> dict[str, Any]:
        """Everything except timestamps and timings, for run-to-run comparison."""
        data = self.model_dump(by_alias=True)
        data.pop("created-at", None)
        data.pop("stage-seconds", None)
        diagnostics = dict(data.get("diagnostics", {}))
        diagnostics.pop("wall_time", None)
        data["diagnostics"] = diagnostics
        return data
