import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

import pandas as pd
from pydantic import BaseModel

from app.core.config import settings
from app.core.errors import LabError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.15g"


def _as_dict(row: BaseModel | dict) -> dict[str, Any]:
    return row.model_dump() if isinstance(row, BaseModel) else dict(row)


def _flatten(record: dict[str, Any]) -> dict[str, Any]:
    """Nested values go into CSV cells as compact JSON."""
    return {
        key: json.dumps(value, sort_keys=True, separators=(",", ":")) if isinstance(value, (list, dict, tuple)) else value
        for key, value in record.items()
    }


def header_line(tool: str) -> str:
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return f"# {settings.PROJECT_NAME} {settings.PROJECT_VERSION} {tool} generated {stamp}"


def render_report(rows: Iterable[BaseModel | dict], fmt: str = "csv", header: bool = True, tool: str = "") -> str:
    records = [_as_dict(row) for row in rows]
    if fmt == "csv":
        frame = pd.DataFrame([_flatten(r) for r in records])
        body = frame.to_csv(index=False, lineterminator="\n", float_format=FLOAT_FORMAT)
        return f"{header_line(tool)}\n{body}" if header else body
    if fmt == "json":
        payload: dict[str, Any] = {"tool": tool, "rows": records}
        if header:
            payload["generated"] = header_line(tool)[2:]
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    raise LabError(f"Unknown report format {fmt!r}")


def write_report(
    rows: Iterable[BaseModel | dict],
    out: Path | None = None,
    fmt: str = "csv",
    header: bool = True,
    tool: str = "",
) -> str:
    """Render rows and write them to `out` (UTF-8) or to stdout."""
    text = render_report(rows, fmt, header, tool)
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
        logger.info(f"Wrote {tool} report to {out}")
    return text
