"""Per-iteration records, trace persistence, and run summaries."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from typing import Optional

from .errors import InvalidInputError, TraceParseError

CSV_HEADER = "k,fval,gap,gnorm,alpha,beta,step_norm,dist"


@dataclass
class IterationRecord:
    """Measurements at one iterate: objective value, optimality gap,
    gradient norm, the step coefficients applied at that iterate, the
    incoming step length, and distance to the solution set when an
    oracle exists."""

    k: int
    fval: float
    gap: float
    gnorm: float
    alpha: float
    beta: float
    step_norm: float
    dist: Optional[float] = None


@dataclass
class Trace:
    records: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.records:
            raise InvalidInputError("a trace needs at least one record")
        ks = [r.k for r in self.records]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise InvalidInputError("record iteration numbers must strictly increase")

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]


def _fmt(value) -> str:
    # 17 significant digits round-trip any double exactly.
    return f"{float(value):.17g}"


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-write-")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_csv(trace, path) -> None:
    """Write a trace as CSV with LF endings plus a JSON meta sidecar.

    Both files land via temp-file rename, so a crash cannot leave a
    partially written trace at the destination.
    """
    lines = [CSV_HEADER]
    for r in trace.records:
        dist = "" if r.dist is None else _fmt(r.dist)
        lines.append(",".join([
            str(int(r.k)), _fmt(r.fval), _fmt(r.gap), _fmt(r.gnorm),
            _fmt(r.alpha), _fmt(r.beta), _fmt(r.step_norm), dist,
        ]))
    _atomic_write(path, "\n".join(lines) + "\n")
    meta_text = json.dumps(trace.meta, indent=2, sort_keys=True) + "\n"
    _atomic_write(str(path) + ".meta.json", meta_text)


def read_csv(path) -> Trace:
    """Read a trace written by :func:`write_csv`; the meta sidecar is
    loaded when present."""
    with open(path, "r", newline="") as handle:
        lines = handle.read().split("\n")
    if not lines or lines[0] != CSV_HEADER:
        raise TraceParseError(f"bad header in {path!s}: expected '{CSV_HEADER}'", line=1)
    records = []
    for n, line in enumerate(lines[1:], start=2):
        if line == "":
            continue
        parts = line.split(",")
        if len(parts) != 8:
            raise TraceParseError(f"expected 8 fields, got {len(parts)}", line=n)
        try:
            records.append(IterationRecord(
                k=int(parts[0]), fval=float(parts[1]), gap=float(parts[2]),
                gnorm=float(parts[3]), alpha=float(parts[4]), beta=float(parts[5]),
                step_norm=float(parts[6]),
                dist=None if parts[7] == "" else float(parts[7]),
            ))
        except ValueError as exc:
            raise TraceParseError(str(exc), line=n) from exc
    meta = {}
    meta_path = str(path) + ".meta.json"
    if os.path.exists(meta_path):
        with open(meta_path) as handle:
            meta = json.load(handle)
    return Trace(records=records, meta=meta)


def summarize(trace) -> dict:
    """Aggregate a run: final gap and distance, iteration count, the
    momentum coefficient range, and fitted convergence rates when the
    trace has enough positive distances to fit."""
    from . import certify  # deferred: certify consumes traces

    last = trace.records[-1]
    betas = [r.beta for r in trace.records]
    summary = {
        "iterations": last.k,
        "final_gap": last.gap,
        "final_dist": last.dist,
        "min_beta": min(betas),
        "max_beta": max(betas),
        "linear_rate": None,
        "power_rate": None,
    }
    for model, key, name in (("linear", "linear_rate", "rho"),
                             ("power", "power_rate", "exponent")):
        try:
            value, residual = certify.fit_rate_from_trace(trace, model)
        except InvalidInputError:
            continue
        summary[key] = {name: value, "residual": residual}
    return summary
