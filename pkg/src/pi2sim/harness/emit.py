"""CSV/JSON result files and their parsers."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

from ..errors import RejectedInputError

__all__ = ["SCHEMAS", "emit", "render", "parse_csv", "parse_json", "parse"]

SCHEMAS = {
    "papr": (("papr_db", float), ("exceedance", float), ("samples", int)),
    "bler": (("snr_db", float), ("port", int), ("errors", int), ("trials", int), ("rate", float)),
    "chanest": (("snr_db", float), ("port", int), ("mse", float)),
    "golden": (
        ("table", str),
        ("index", int),
        ("expected_re", float),
        ("expected_im", float),
        ("got_re", float),
        ("got_im", float),
        ("abs_err", float),
    ),
}


def _fmt(v) -> str:
    # repr round-trips floats exactly
    return repr(float(v)) if isinstance(v, float) else str(v)


def render(kind: str, records: list[dict], meta: dict, fmt: str = "csv") -> str:
    if not records:
        raise RejectedInputError("refusing to emit an empty result set")
    cols = [c for c, _ in SCHEMAS[kind]]
    if fmt == "json":
        body = {"kind": kind, "meta": meta, "records": [{c: r[c] for c in cols} for r in records]}
        return json.dumps(body, indent=1, sort_keys=False) + "\n"
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        w.writerow([_fmt(r[c]) for c in cols])
    return buf.getvalue()


def emit(kind: str, records: list[dict], path, fmt: str = "csv", meta: dict | None = None) -> Path:
    """Write results atomically; nothing is left behind on failure."""
    text = render(kind, records, dict(meta or {}), fmt)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


def parse_csv(text: str, kind: str) -> tuple[dict, list[dict]]:
    meta, lines = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k] = v
        elif line:
            lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    types = dict(SCHEMAS[kind])
    if header != [c for c, _ in SCHEMAS[kind]]:
        raise ValueError(f"unexpected header {header} for {kind}")
    return meta, [{c: types[c](v) for c, v in zip(header, row)} for row in reader]


def parse_json(text: str) -> tuple[dict, list[dict]]:
    body = json.loads(text)
    return body["meta"], body["records"]


def parse(path, kind: str) -> tuple[dict, list[dict]]:
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        return parse_json(text)
    return parse_csv(text, kind)
