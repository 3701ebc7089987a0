"""Byte-stable CSV and key=value serialization of results."""
from __future__ import annotations

import io
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .cindex import IndexReport
from .pfsolve import Snapshot
from .sweep import SensitivityReport, SweepReport

FORMATS = ("csv", "structured-text")
SWEEP_COLUMNS = ("lambda", "converged", "c_min", "c_argmin_bus", "bolognani_ok", "sigma_min")


class EmptyReportError(ValueError):
    pass


def fmt(value) -> str:
    """Six significant digits, ``inf``/``nan`` spelled out, booleans lowercase."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        out = f"{float(value):.6g}"
        return "0" if out == "-0" else out
    return str(value)


def _csv(header, rows) -> bytes:
    buf = io.StringIO(newline="")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue().encode()


def _kv(pairs) -> bytes:
    return "".join(f"{k}={fmt(v)}\n" for k, v in pairs).encode()


def snapshot_records(snap: Snapshot) -> list[tuple]:
    return [
        (b, v.real, v.imag, abs(v), np.degrees(np.angle(v)), s.real, s.imag)
        for b, v, s in zip(snap.bus_ids, snap.V, snap.S)
    ]


def emit_report(report, format: str = "csv") -> bytes:
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}")
    if isinstance(report, SweepReport):
        if not report.rows:
            raise EmptyReportError("sweep report has no rows")
        if format == "csv":
            return _csv(SWEEP_COLUMNS, [
                (r.loading, r.converged, r.c_min, r.c_argmin_bus, r.bolognani_ok, r.sigma_min)
                for r in report.rows
            ])
        return _kv(report.summary().items())
    if isinstance(report, IndexReport):
        if format == "csv":
            return _csv(
                ("bus", "v_mag", "denominator", "c_index", "kessel_margin"),
                [tuple(r.values()) for r in report.records()],
            )
        flagged = [b for b, c in sorted(zip(report.bus_ids, report.C), key=lambda t: t[1]) if c <= 1.0]
        return _kv([
            ("c_min", report.C_min),
            ("c_argmin_bus", report.argmin_bus),
            ("condition_triggered", report.condition_triggered),
            ("offending_buses", " ".join(str(b) for b in flagged)),
            ("bolognani_lhs", report.bolognani_lhs),
            ("bolognani_rhs", report.bolognani_rhs),
            ("bolognani_satisfied", report.bolognani_satisfied),
        ])
    if isinstance(report, Snapshot):
        if format == "csv":
            return _csv(("bus", "v_re", "v_im", "v_mag", "v_ang_deg", "s_p", "s_q"), snapshot_records(report))
        return _kv([
            ("converged", report.converged),
            ("loading", report.loading),
            ("iterations", report.iterations),
            ("residual", report.residual),
            ("v_min", float(np.min(np.abs(report.V))) if report.V.size else None),
        ])
    if isinstance(report, SensitivityReport):
        if format == "csv":
            return _csv(("bus", "c_before", "c_after", "delta"),
                        zip(report.bus_ids, report.C_before, report.C_after, report.delta))
        d = report.delta
        return _kv([
            ("buses", len(report.bus_ids)),
            ("all_decreased", bool(np.all(d < 0))),
            ("max_delta", float(np.max(d)) if d.size else None),
        ])
    raise TypeError(f"cannot serialize {type(report).__name__}")


def emit_matrix(F: np.ndarray, bus_ids) -> bytes:
    """Dense row-major CSV with a header row of bus ids."""
    return _csv([str(b) for b in bus_ids], F.tolist())


def write_atomic(path, data: bytes) -> None:
    """Write ``data`` to ``path`` without leaving a partial file on failure."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
