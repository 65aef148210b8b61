"""JSON documents for models, signals and reports.

Model document::

    {"schema_version": "1.0", "label": "rc", "n": 1, "m": 2, "p": 2,
     "A": [[-1.0]], "B": [[1.0, 1.0]], "C": [[1.0], [1.0]],
     "D": [[0.0, 0.0], [0.0, 1.0]]}

``n``, ``m`` and ``p`` are optional when every matrix is non-empty.
Floats are written with ``repr`` so a load/save round trip is exact.

Signal document: ``values`` is a table with one row per sample and one
column per channel, timed by either ``dt`` or explicit ``times``.
"""

from __future__ import annotations

import json
import math
import sys as _sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DocumentError
from .model import StateSpaceModel

__all__ = [
    "SCHEMA_VERSION", "SignalDocument", "parse_model", "load_model",
    "model_to_dict", "dump_model", "save_model", "parse_signal", "load_signal",
    "normalize_report", "dump_report", "save_report",
]

SCHEMA_VERSION = "1.0"
REPORT_DIGITS = 10
REPORT_FLUSH = 1e-12


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"{path}: cannot read ({exc.strerror or exc})") from exc


def _parse_json(text: str, source: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise DocumentError(f"{source}: top level must be an object")
    return doc


def _number(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise DocumentError(f"{where}: expected a number, got {json.dumps(x)}")
    if not math.isfinite(x):
        raise DocumentError(f"{where}: non-finite value")
    return float(x)


def _matrix(doc, key, source, cols=None):
    if key not in doc:
        raise DocumentError(f"{source}: missing field {key!r}")
    raw = doc[key]
    if not isinstance(raw, list) or any(not isinstance(r, list) for r in raw):
        raise DocumentError(f"{source}: field {key!r} must be a list of rows")
    if not raw:
        return np.zeros((0, cols or 0))
    width = len(raw[0])
    for i, row in enumerate(raw):
        if len(row) != width:
            raise DocumentError(
                f"{source}: field {key!r} row {i} has {len(row)} entries, expected {width}")
    M = np.array([[_number(x, f"{source}: field {key!r} row {i}") for x in row]
                  for i, row in enumerate(raw)], dtype=float)
    return M.reshape(len(raw), width)


def _dim(doc, key, source):
    if key not in doc:
        return None
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise DocumentError(f"{source}: field {key!r} must be a nonnegative integer")
    return v


def parse_model(text: str, source: str = "<model>") -> StateSpaceModel:
    """Build a model from document text; errors name the offending field."""
    doc = _parse_json(text, source)
    version = doc.get("schema_version")
    if version is None:
        raise DocumentError(f"{source}: missing field 'schema_version'")
    if str(version).split(".")[0] != SCHEMA_VERSION.split(".")[0]:
        raise DocumentError(f"{source}: unsupported schema_version {version!r}")
    n, m, p = (_dim(doc, k, source) for k in ("n", "m", "p"))
    A = _matrix(doc, "A", source, n)
    n = A.shape[0] if n is None else n
    B = _matrix(doc, "B", source, m)
    m = B.shape[1] if m is None else m
    C = _matrix(doc, "C", source, n)
    p = C.shape[0] if p is None else p
    D = _matrix(doc, "D", source, m)
    if m == 0 and D.shape[0] == 0 and p:
        D = np.zeros((p, 0))
    label = doc.get("label")
    if label is not None and not isinstance(label, str):
        raise DocumentError(f"{source}: field 'label' must be a string")
    for key, M, shape in (("A", A, (n, n)), ("B", B, (n, m)),
                          ("C", C, (p, n)), ("D", D, (p, m))):
        if M.shape != shape:
            raise DocumentError(
                f"{source}: field {key!r} has shape {M.shape[0]}x{M.shape[1]}, "
                f"expected {shape[0]}x{shape[1]}")
    try:
        return StateSpaceModel(A, B, C, D, label)
    except ValueError as exc:
        raise DocumentError(f"{source}: {exc}") from None


def load_model(path) -> StateSpaceModel:
    return parse_model(_read(path), str(path))


def model_to_dict(sys: StateSpaceModel) -> dict:
    doc = {"schema_version": SCHEMA_VERSION, "n": sys.n, "m": sys.m, "p": sys.p}
    if sys.label is not None:
        doc["label"] = sys.label
    for key in "ABCD":
        doc[key] = [[float(x) for x in row] for row in getattr(sys, key)]
    return doc


def dump_model(sys: StateSpaceModel) -> str:
    """Model document text; ``parse_model(dump_model(s))`` reproduces ``s`` exactly.

    Each matrix row sits on its own line so golden files diff cleanly.
    """
    doc = model_to_dict(sys)
    lines = []
    for key, value in doc.items():
        if key in "ABCD" and value:
            rows = ",\n".join("    " + json.dumps(row) for row in value)
            lines.append(f'  "{key}": [\n{rows}\n  ]')
        else:
            lines.append(f"  {json.dumps(key)}: {json.dumps(value)}")
    return "{\n" + ",\n".join(lines) + "\n}\n"


def save_model(sys: StateSpaceModel, path) -> None:
    _write(dump_model(sys), path)


@dataclass(frozen=True, eq=False)
class SignalDocument:
    """Sampled input: ``values`` is ``(K, channels)``; ``dt`` is set when
    the samples are uniformly spaced."""

    times: np.ndarray
    values: np.ndarray
    dt: float | None


def parse_signal(text: str, source: str = "<signal>") -> SignalDocument:
    doc = _parse_json(text, source)
    channels = _dim(doc, "channels", source)
    values = _matrix(doc, "values", source, channels)
    if channels is not None and values.shape[1] != channels:
        raise DocumentError(
            f"{source}: field 'values' has {values.shape[1]} columns, channels is {channels}")
    k = values.shape[0]
    if k == 0:
        raise DocumentError(f"{source}: field 'values' is empty")
    if "dt" in doc:
        dt = _number(doc["dt"], f"{source}: field 'dt'")
        if dt <= 0:
            raise DocumentError(f"{source}: field 'dt' must be positive")
        t0 = _number(doc.get("t0", 0.0), f"{source}: field 't0'")
        return SignalDocument(t0 + dt * np.arange(k), values, dt)
    if "times" not in doc:
        raise DocumentError(f"{source}: missing field 'dt' (or 'times')")
    raw = doc["times"]
    if not isinstance(raw, list):
        raise DocumentError(f"{source}: field 'times' must be a list")
    times = np.array([_number(x, f"{source}: field 'times'") for x in raw])
    if len(times) != k:
        raise DocumentError(f"{source}: field 'times' has {len(times)} entries, values has {k} rows")
    steps = np.diff(times)
    if np.any(steps <= 0):
        raise DocumentError(f"{source}: field 'times' must be strictly increasing")
    dt = None
    if k > 1 and np.max(np.abs(steps - steps.mean())) <= 1e-9 * steps.mean():
        dt = float((times[-1] - times[0]) / (k - 1))
    return SignalDocument(times, values, dt)


def load_signal(path) -> SignalDocument:
    return parse_signal(_read(path), str(path))


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if abs(x) < REPORT_FLUSH:
            return 0.0
        return float(f"{x:.{REPORT_DIGITS}g}")
    if isinstance(x, complex):
        return str(x)
    return x


def normalize_report(report) -> dict:
    """Report as plain JSON data with floats rounded for stable output.

    Floats keep ``REPORT_DIGITS`` significant digits and values below
    ``REPORT_FLUSH`` in magnitude become ``0.0``, so output does not
    depend on last-bit differences between linear algebra backends.
    """
    if hasattr(report, "to_dict"):
        report = report.to_dict()
    return _clean(report)


def dump_report(report) -> str:
    return json.dumps(normalize_report(report), indent=2, sort_keys=True) + "\n"


def _write(text, path):
    if path is None or str(path) == "-":
        _sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"{path}: cannot write ({exc.strerror or exc})") from exc


def save_report(report, path=None) -> None:
    """Write the normalized report to ``path`` (stdout for ``None`` or ``-``)."""
    _write(dump_report(report), path)
