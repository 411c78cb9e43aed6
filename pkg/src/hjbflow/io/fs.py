from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Union

ALPHA_FILENAME = "alpha.csv"
PIECES_FILENAME = "pieces.csv"
BREAKPOINTS_FILENAME = "breakpoints.json"
PHI_FILENAME = "phi.csv"
STRATEGY_FILENAME = "strategy.csv"
PROFILE_FILENAME = "profile.csv"
WAVE_HEADER_FILENAME = "wave.json"
G_TABLE_FILENAME = "g_table.csv"
EOC_CSV_FILENAME = "eoc.csv"
EOC_TEXT_FILENAME = "eoc.txt"
MANIFEST_FILENAME = "manifest.json"

_CHUNK = 1 << 16


def sha3_digest(path: Union[str, Path]) -> str:
    """Hex SHA3-256 of a file's bytes."""
    h = hashlib.sha3_256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(_CHUNK), b""):
            h.update(chunk)
    return h.hexdigest()


def ensure_dir(path: Union[str, Path]) -> Path:
    """Create `path` as a directory if needed. A file at that path is an error."""
    p = Path(path)
    if p.exists() and not p.is_dir():
        raise FileExistsError(f"{p} exists and is not a directory")
    p.mkdir(parents=True, exist_ok=True)
    return p
