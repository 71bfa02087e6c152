"""Machine-readable report emission with atomic writes."""

from __future__ import annotations

import json
from pathlib import Path


def atomic_write_json(path, doc: dict) -> None:
    """Serialize to a temp file and rename, so failures leave no partial report."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    tmp.replace(path)


def emit(doc: dict, out_path) -> list[str]:
    """Write the report if a path was given, otherwise print it; returns paths."""
    if out_path is None:
        print(json.dumps(doc, indent=2, sort_keys=True))
        return []
    atomic_write_json(out_path, doc)
    return [str(out_path)]
