from __future__ import annotations

from pathlib import Path
from typing import Any

import yaml


def read_yaml_text(text: str) -> dict[str, Any]:
    data = yaml.safe_load(text)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError("run configuration must be a mapping at the top level")
    return data


def read_yaml(path: str) -> dict[str, Any]:
    return read_yaml_text(Path(path).read_text(encoding="utf-8"))
