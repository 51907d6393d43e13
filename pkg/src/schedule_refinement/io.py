"""Schedule and gradient-norm file formats.

Schedule CSV: header ``step,multiplier``, steps ``1..T``, multipliers written
with ``repr`` (shortest round-trip decimal). Norm logs: CSV ``step,norm`` with
an optional ``kind`` column, or JSON lines ``{"step": int, "norm": float}``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError
from .refinement import NORM_KINDS, GradientNormLog
from .schedule_core import Schedule


def format_schedule_csv(schedule: Schedule) -> str:
    lines = ["step,multiplier"]
    lines += [f"{t},{float(v)!r}" for t, v in enumerate(schedule.values, start=1)]
    return "\n".join(lines) + "\n"


def write_schedule_csv(schedule: Schedule, path: str | Path) -> None:
    Path(path).write_text(format_schedule_csv(schedule))


def _float(token: str, what: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"{what} {token!r} is not a number", lineno) from None
    if math.isnan(value):
        raise ParseError(f"{what} is NaN", lineno)
    return value


def _int(token: str, what: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"{what} {token!r} is not an integer", lineno) from None


def _check_steps(steps: list[int], lineno: int):
    if steps[-1] < 1:
        raise ParseError("steps must be positive", lineno)
    if len(steps) > 1 and steps[-1] <= steps[-2]:
        raise ParseError("steps not strictly increasing", lineno)


def parse_schedule_csv(text: str) -> Schedule:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["step", "multiplier"]:
        raise ParseError("expected header 'step,multiplier'", 1)
    steps, values = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", lineno)
        steps.append(_int(row[0].strip(), "step", lineno))
        if steps[-1] != len(steps):
            raise ParseError(f"expected step {len(steps)}, got {steps[-1]}", lineno)
        v = _float(row[1].strip(), "multiplier", lineno)
        if v < 0 or math.isinf(v):
            raise ParseError("multiplier must be finite and non-negative", lineno)
        values.append(v)
    if not values:
        raise ParseError("schedule file has no rows")
    return Schedule(np.array(values))


def read_schedule_csv(path: str | Path) -> Schedule:
    return parse_schedule_csv(Path(path).read_text())


def _norm_value(token, lineno: int) -> float:
    value = token if isinstance(token, float) else _float(str(token), "norm", lineno)
    if math.isnan(value):
        raise ParseError("norm is NaN", lineno)
    if value < 0:
        raise ParseError("norm is negative", lineno)
    if math.isinf(value):
        raise ParseError("norm is infinite", lineno)
    return value


def _log(steps, norms, kinds, kind: str | None) -> GradientNormLog:
    if not norms:
        raise ParseError("norm log has no records")
    found = set(kinds) - {None}
    if len(found) > 1:
        raise ParseError(f"mixed norm kinds in one log: {sorted(found)}")
    chosen = kind or (found.pop() if found else "l2")
    if chosen not in NORM_KINDS:
        raise ParseError(f"unknown norm kind {chosen!r}")
    return GradientNormLog(np.array(steps), np.array(norms), chosen)


def parse_norms_csv(text: str, kind: str | None = None) -> GradientNormLog:
    reader = csv.reader(io.StringIO(text))
    header = [h.strip() for h in (next(reader, None) or [])]
    if header not in (["step", "norm"], ["step", "norm", "kind"]):
        raise ParseError("expected header 'step,norm' or 'step,norm,kind'", 1)
    steps, norms, kinds = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
        steps.append(_int(row[0].strip(), "step", lineno))
        _check_steps(steps, lineno)
        norms.append(_norm_value(row[1].strip(), lineno))
        kinds.append(row[2].strip() if len(row) == 3 else None)
    return _log(steps, norms, kinds, kind)


def parse_norms_jsonl(text: str, kind: str | None = None) -> GradientNormLog:
    steps, norms, kinds = [], [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", lineno) from None
        if not isinstance(rec, dict) or "step" not in rec or "norm" not in rec:
            raise ParseError("record needs 'step' and 'norm'", lineno)
        if not isinstance(rec["step"], int) or isinstance(rec["step"], bool):
            raise ParseError("step is not an integer", lineno)
        steps.append(rec["step"])
        _check_steps(steps, lineno)
        if isinstance(rec["norm"], bool) or not isinstance(rec["norm"], (int, float, str)):
            raise ParseError("norm is not a number", lineno)
        norms.append(_norm_value(float(rec["norm"]) if not isinstance(rec["norm"], str) else rec["norm"], lineno))
        kinds.append(rec.get("kind"))
    return _log(steps, norms, kinds, kind)


def read_norms(path: str | Path, kind: str | None = None) -> GradientNormLog:
    """Read a norm log; ``.jsonl``/``.json`` files are JSON lines, anything else CSV."""
    path = Path(path)
    text = path.read_text()
    if path.suffix in (".jsonl", ".json", ".ndjson"):
        return parse_norms_jsonl(text, kind)
    return parse_norms_csv(text, kind)


def format_norms_csv(log: GradientNormLog) -> str:
    lines = ["step,norm,kind"]
    lines += [f"{int(s)},{float(n)!r},{log.kind}" for s, n in zip(log.steps, log.norms)]
    return "\n".join(lines) + "\n"


def write_norms_csv(log: GradientNormLog, path: str | Path) -> None:
    Path(path).write_text(format_norms_csv(log))
