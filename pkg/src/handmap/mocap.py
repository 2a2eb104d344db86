"""Motion-capture marker parsing, gap filling, and hand-frame estimation.

The on-disk format is a tab-separated export: key/value header lines
(``FREQUENCY`` in Hz and ``MARKER_NAMES``), then one data row per frame
holding the timestamp in seconds followed by X/Y/Z columns per marker in
millimeters. Empty cells or exact ``0,0,0`` triplets mark occlusions.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateFrame, MalformedHeader, MissingHandMarkers,
                     NonMonotoneTimestamps, RowArityMismatch, UnknownMarkerLabel)
from .hand_model import FingerId
from .se3 import Transform, frame_from_two_vectors
from .validation import as_vector3

HAND_LABELS = ("hand_front", "hand_left", "hand_right")
FINGER_LABELS = tuple(f"{finger.name}_{part}"
                      for finger in FingerId for part in ("mid", "tip"))
MARKER_LABELS = HAND_LABELS + FINGER_LABELS  # 13 labels
_LABEL_SET = frozenset(MARKER_LABELS)

MM_PER_M = 1000.0


def finger_marker_labels(finger: FingerId) -> tuple[str, str]:
    finger = FingerId(finger)
    return (f"{finger.name}_mid", f"{finger.name}_tip")


@dataclass(frozen=True)
class MarkerFrame:
    """Timestamped labeled marker positions; absent labels are occluded."""

    timestamp: float
    markers: dict

    def __post_init__(self):
        clean = {}
        for label, position in self.markers.items():
            if label not in _LABEL_SET:
                raise UnknownMarkerLabel(f"unknown marker label {label!r}")
            if position is None:
                continue
            pos = as_vector3(position, f"marker {label!r}")
            pos.flags.writeable = False
            clean[label] = pos
        object.__setattr__(self, "markers", clean)
        object.__setattr__(self, "timestamp", float(self.timestamp))

    def get(self, label: str):
        """Position in meters, or None when occluded."""
        if label not in _LABEL_SET:
            raise UnknownMarkerLabel(f"unknown marker label {label!r}")
        return self.markers.get(label)

    def has(self, *labels: str) -> bool:
        return all(label in self.markers for label in labels)


@dataclass(frozen=True)
class MarkerSequence:
    frames: tuple
    nominal_rate: float

    def __post_init__(self):
        frames = tuple(self.frames)
        times = [f.timestamp for f in frames]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise NonMonotoneTimestamps("timestamps must be strictly increasing")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "nominal_rate", float(self.nominal_rate))

    def __len__(self) -> int:
        return len(self.frames)


def _split_row(line: str) -> list[str]:
    return line.rstrip("\r\n").split("\t")


def parse_mocap_tsv(stream, rejects: list | None = None,
                    label_map: dict | None = None) -> MarkerSequence:
    """Parse a marker export into a MarkerSequence (meters, absent = occluded).

    Header errors always raise. Structural problems in data rows raise too,
    unless ``rejects`` is given, in which case offending rows are skipped and
    reported there as ``(line_number, reason)`` so that
    ``len(frames) + len(rejects)`` equals the number of data rows read.

    ``label_map`` renames foreign marker labels to the canonical set before
    validation (e.g. ``{"RWRA": "hand_right"}`` adapts another vendor's
    naming).
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    label_map = label_map or {}

    frequency = None
    names = None
    line_no = 0
    for line in stream:
        line_no += 1
        if line.strip() == "":
            continue
        cells = _split_row(line)
        key = cells[0].strip().upper()
        if key == "FREQUENCY":
            try:
                frequency = float(cells[1])
            except (IndexError, ValueError):
                raise MalformedHeader(f"line {line_no}: FREQUENCY needs a numeric value")
            if frequency <= 0:
                raise MalformedHeader(f"line {line_no}: FREQUENCY must be positive")
        elif key == "MARKER_NAMES":
            names = [label_map.get(c.strip(), c.strip())
                     for c in cells[1:] if c.strip()]
            for name in names:
                if name not in _LABEL_SET:
                    raise UnknownMarkerLabel(f"line {line_no}: unknown marker label {name!r}")
            if len(set(names)) != len(names):
                raise MalformedHeader(f"line {line_no}: duplicate marker names")
            break
        else:
            raise MalformedHeader(f"line {line_no}: unexpected header key {cells[0]!r}")
    if frequency is None:
        raise MalformedHeader("missing FREQUENCY header")
    if not names:
        raise MalformedHeader("missing MARKER_NAMES header")

    expected_cells = 1 + 3 * len(names)
    frames = []
    last_time = None
    for line in stream:
        line_no += 1
        if line.strip() == "":
            continue
        cells = _split_row(line)
        try:
            if len(cells) != expected_cells:
                raise RowArityMismatch(
                    f"line {line_no}: expected {expected_cells} cells, got {len(cells)}")
            try:
                timestamp = float(cells[0])
            except ValueError:
                raise RowArityMismatch(f"line {line_no}: bad timestamp {cells[0]!r}")
            if last_time is not None and timestamp <= last_time:
                raise NonMonotoneTimestamps(
                    f"line {line_no}: timestamp {timestamp!r} not after {last_time!r}")
            markers = {}
            for i, name in enumerate(names):
                triplet = cells[1 + 3 * i: 4 + 3 * i]
                if all(c.strip() == "" for c in triplet):
                    continue
                try:
                    xyz = [float(c) for c in triplet]
                except ValueError:
                    raise RowArityMismatch(
                        f"line {line_no}: non-numeric coordinate for {name!r}")
                if xyz == [0.0, 0.0, 0.0]:
                    continue  # vendor occlusion convention
                markers[name] = np.array(xyz) / MM_PER_M
        except (RowArityMismatch, NonMonotoneTimestamps) as exc:
            if rejects is None:
                raise
            rejects.append((line_no, str(exc)))
            continue
        last_time = timestamp
        frames.append(MarkerFrame(timestamp=timestamp, markers=markers))
    return MarkerSequence(frames=tuple(frames), nominal_rate=frequency)


def write_mocap_tsv(seq: MarkerSequence, stream=None) -> str:
    """Emit the same tab-separated format ``parse_mocap_tsv`` reads."""
    own = stream is None
    if own:
        stream = io.StringIO()
    stream.write(f"FREQUENCY\t{seq.nominal_rate!r}\n")
    stream.write("MARKER_NAMES\t" + "\t".join(MARKER_LABELS) + "\n")
    for frame in seq.frames:
        cells = [repr(frame.timestamp)]
        for name in MARKER_LABELS:
            pos = frame.markers.get(name)
            if pos is None:
                cells.extend(("", "", ""))
            else:
                cells.extend(repr(float(v) * MM_PER_M) for v in pos)
        stream.write("\t".join(cells) + "\n")
    return stream.getvalue() if own else ""


def fill_gaps(seq: MarkerSequence, max_gap: int = 10) -> MarkerSequence:
    """Linearly interpolate occlusion gaps of at most ``max_gap`` frames.

    Leading, trailing, and longer gaps are left absent. Idempotent.
    """
    n = len(seq.frames)
    filled = [dict(f.markers) for f in seq.frames]
    times = np.array([f.timestamp for f in seq.frames])
    for label in MARKER_LABELS:
        present = [i for i in range(n) if label in seq.frames[i].markers]
        for a, b in zip(present, present[1:]):
            gap = b - a - 1
            if gap == 0 or gap > max_gap:
                continue
            pa = seq.frames[a].markers[label]
            pb = seq.frames[b].markers[label]
            for i in range(a + 1, b):
                w = (times[i] - times[a]) / (times[b] - times[a])
                filled[i][label] = (1.0 - w) * pa + w * pb
    frames = tuple(MarkerFrame(timestamp=f.timestamp, markers=markers)
                   for f, markers in zip(seq.frames, filled))
    return MarkerSequence(frames=frames, nominal_rate=seq.nominal_rate)


def estimate_hand_frame(frame: MarkerFrame) -> Transform:
    """World pose of the hand frame from the three back-of-hand markers.

    Approach vector runs from the right to the front marker; the orientation
    vector is the normal of the marker plane; the origin is the centroid.
    """
    missing = [label for label in HAND_LABELS if label not in frame.markers]
    if missing:
        raise MissingHandMarkers(f"hand markers absent: {', '.join(missing)}")
    front = frame.markers["hand_front"]
    left = frame.markers["hand_left"]
    right = frame.markers["hand_right"]
    approach = front - right
    normal = np.cross(left - right, front - right)
    if np.linalg.norm(normal) < 1e-12:
        raise DegenerateFrame("hand markers are collinear")
    origin = (front + left + right) / 3.0
    return frame_from_two_vectors(approach, normal, origin)
