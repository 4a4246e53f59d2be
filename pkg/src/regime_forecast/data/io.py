"""Reading and writing ``timestamp,flow`` CSV files."""

from __future__ import annotations

import csv
import io
import json
import logging
from datetime import datetime
from pathlib import Path

import numpy as np

from ..errors import DataError
from .series import STEP, SeriesBundle

log = logging.getLogger(__name__)

MAX_FILLED_GAP = 3  # missing intervals interpolated; longer gaps split the series


def _parse_time(text: str, lineno: int) -> np.datetime64:
    try:
        stamp = datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    except ValueError:
        raise DataError(f"line {lineno}: cannot parse timestamp {text!r}") from None
    # offsets are dropped: regimes are labelled by local wall-clock hour
    return np.datetime64(stamp.replace(tzinfo=None), "s")


def read_rows(path):
    raw = Path(path).read_bytes().decode("utf-8-sig")
    reader = csv.reader(io.StringIO(raw, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{path}: file is empty") from None
    if [h.strip().lower() for h in header] != ["timestamp", "flow"]:
        raise DataError(f"{path}: expected header 'timestamp,flow', got {','.join(header)!r}")
    times, flows, lines = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise DataError(f"line {lineno}: expected 2 fields, got {len(row)}")
        t = _parse_time(row[0], lineno)
        try:
            v = float(row[1])
        except ValueError:
            raise DataError(f"line {lineno}: flow value {row[1]!r} is not numeric") from None
        if not np.isfinite(v):
            raise DataError(f"line {lineno}: flow value {row[1]!r} is not finite")
        times.append(t)
        flows.append(v)
        lines.append(lineno)
    if not times:
        raise DataError(f"{path}: no data rows")
    return np.array(times, dtype="datetime64[s]"), np.array(flows), np.array(lines)


def load_flow_csv(path) -> SeriesBundle:
    """Parse a 5-minute flow file, repairing short gaps.

    Duplicate timestamps keep their first row. Gaps of up to three missing
    intervals are filled by linear interpolation; a longer gap splits the
    series and only the longest contiguous segment is kept. What was done is
    recorded in ``bundle.report``.
    """
    times, flows, lines = read_rows(path)
    rows_read = int(times.size)
    steps = np.diff(times)
    if np.any(steps < np.timedelta64(0, "s")):
        i = int(np.flatnonzero(steps < np.timedelta64(0, "s"))[0])
        raise DataError(f"line {lines[i + 1]}: timestamps are not monotone ({times[i]} then {times[i + 1]})")
    keep = np.concatenate([[True], steps > np.timedelta64(0, "s")])
    duplicates = int((~keep).sum())
    times, flows = times[keep], flows[keep]
    steps = np.diff(times)
    if np.any(steps % STEP != np.timedelta64(0, "s")):
        i = int(np.flatnonzero(steps % STEP != np.timedelta64(0, "s"))[0])
        raise DataError(f"timestamps {times[i]} and {times[i + 1]} are not on a 5-minute grid")
    gap = (steps // STEP).astype(int) - 1

    # contiguous segments separated by gaps that are too long to fill
    breaks = np.flatnonzero(gap > MAX_FILLED_GAP)
    bounds = np.concatenate([[0], breaks + 1, [times.size]])
    seg_lengths = np.diff(bounds)
    best = int(np.argmax(seg_lengths))
    lo, hi = int(bounds[best]), int(bounds[best + 1])
    segments_dropped = int(seg_lengths.size - 1)
    rows_dropped = int(times.size - (hi - lo))
    times, flows = times[lo:hi], flows[lo:hi]

    grid = np.arange(times[0], times[-1] + STEP, STEP).astype("datetime64[s]")
    filled = np.interp(grid.astype(np.int64), times.astype(np.int64), flows)
    interpolated = grid[~np.isin(grid, times)]
    report = {
        "rows_read": rows_read,
        "duplicates_dropped": duplicates,
        "gaps_interpolated": int((gap[lo:hi - 1] > 0).sum()) if hi - lo > 1 else 0,
        "points_interpolated": int(interpolated.size),
        "interpolated_timestamps": [str(t) for t in interpolated],
        "segments_dropped": segments_dropped,
        "rows_dropped": rows_dropped,
        "rows_kept": int(grid.size),
    }
    if segments_dropped:
        log.warning("%s: %d segment(s) separated by long gaps dropped (%d rows)", path, segments_dropped, rows_dropped)
    if grid.size < 2:
        raise DataError(f"{path}: fewer than two usable rows after gap handling")
    return SeriesBundle(grid, filled, report=report)


def write_report(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def format_time(t) -> str:
    return str(np.datetime64(t, "s"))


def write_flow_csv(path, timestamps, flow) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "flow"])
        for t, v in zip(timestamps, flow):
            w.writerow([format_time(t), repr(float(v))])
