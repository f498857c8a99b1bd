"""Sensor log container and its CSV on-disk format.

A log is a uniformly sampled record of command, chamber pressure, piston
reading and source pressure. On disk: UTF-8, LF line endings, optional
``# key=value`` metadata lines, then a ``t,cmd,p,piston,src_p`` header and
one row per sample. Floats are written with ``repr`` so a write/read/write
cycle is byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

COLUMNS = ("t", "cmd", "p", "piston", "src_p")
HEADER = ",".join(COLUMNS)

#: Permitted wobble between consecutive time steps (s).
DT_TOLERANCE = 1e-9


@dataclass
class SensorLog:
    """Uniform time series of one identification or validation recording.

    ``meta`` carries free-form strings; conventional keys are ``cylinder``,
    ``valve``, ``piston_units`` (m or raw), and ``campaign``.
    """

    t: np.ndarray
    cmd: np.ndarray
    p: np.ndarray
    piston: np.ndarray
    src_p: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arrays = [np.ascontiguousarray(a, dtype=float) for a in
                  (self.t, self.cmd, self.p, self.piston, self.src_p)]
        self.t, self.cmd, self.p, self.piston, self.src_p = arrays
        n = len(self.t)
        if n < 2:
            raise DataError("log needs at least two samples")
        if any(len(a) != n for a in arrays[1:]):
            raise DataError("log columns must share one length")
        for name, a in zip(COLUMNS, arrays):
            if not np.all(np.isfinite(a)):
                raise DataError(f"log column {name!r} contains non-finite values")
        steps = np.diff(self.t)
        if np.any(steps <= 0):
            raise DataError("log times must be strictly increasing")
        dt = steps[0]
        if np.max(np.abs(steps - dt)) > DT_TOLERANCE:
            raise DataError(f"log not uniformly sampled: dt jitter exceeds "
                            f"{DT_TOLERANCE} s")
        if np.any(self.p <= 0):
            raise DataError("log pressures must be strictly positive")

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def sample_hz(self) -> float:
        return 1.0 / self.dt

    def __len__(self) -> int:
        return len(self.t)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])


def write_log(log: SensorLog, path) -> None:
    """Write a log; values round-trip exactly through :func:`read_log`."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key in sorted(log.meta):
            fh.write(f"# {key}={log.meta[key]}\n")
        fh.write(HEADER + "\n")
        for row in zip(log.t, log.cmd, log.p, log.piston, log.src_p):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_log(path) -> SensorLog:
    """Parse a log file; malformed rows are reported with their position."""
    meta = {}
    rows = []
    header_seen = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            if line.startswith("#"):
                if header_seen:
                    raise DataError(f"{path}: metadata after header "
                                    f"(line {lineno})")
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    meta[key.strip()] = value.strip()
                continue
            if not header_seen:
                if line != HEADER:
                    raise DataError(f"{path}: expected header {HEADER!r}, got "
                                    f"{line!r} (line {lineno})")
                header_seen = True
                continue
            parts = line.split(",")
            row_no = len(rows) + 1
            if len(parts) != len(COLUMNS):
                raise DataError(f"{path}: row {row_no} (line {lineno}) has "
                                f"{len(parts)} fields, expected {len(COLUMNS)}")
            try:
                values = [float(v) for v in parts]
            except ValueError as exc:
                raise DataError(f"{path}: row {row_no} (line {lineno}): "
                                f"{exc}") from exc
            for name, v in zip(COLUMNS, values):
                if not math.isfinite(v):
                    raise DataError(f"{path}: row {row_no} (line {lineno}): "
                                    f"non-finite value in column {name!r}")
            rows.append(values)
    if not header_seen:
        raise DataError(f"{path}: missing header row {HEADER!r}")
    if len(rows) < 2:
        raise DataError(f"{path}: needs at least two data rows")
    data = np.asarray(rows, dtype=float)
    try:
        return SensorLog(t=data[:, 0], cmd=data[:, 1], p=data[:, 2],
                         piston=data[:, 3], src_p=data[:, 4], meta=meta)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from exc
