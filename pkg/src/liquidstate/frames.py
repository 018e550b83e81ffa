"""Pressure-frame data model, posture taxonomy, phase normalization and CSV I/O."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

ROWS, COLS = 19, 10
SEAT_SHAPE = (9, 9)
BACKREST_SHAPE = (10, 9)
ADC_MAX = 1023
N_CELLS = ROWS * COLS

FILE_HEADER = f"# pressure-frames v1 p={ROWS} q={COLS}"

# LC/RC: left/right leg crossed; LA/RA: left/right ankle on the opposite knee.
POSTURE_NAMES = (
    "upright",
    "leaning right",
    "leaning left",
    "leaning forward",
    "leaning back",
    "LC seated upright",
    "RC seated upright",
    "LC leaning back",
    "RC leaning back",
    "LA seated upright",
    "RA seated upright",
    "LA leaning back",
    "RA leaning back",
    "sitting on the leading edge",
    "slouching back down",
)
N_CLASSES = len(POSTURE_NAMES)


class FrameFormatError(ValueError):
    """Raised for malformed frame files; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, order=True)
class PostureLabel:
    id: int
    name: str

    def __post_init__(self):
        if not 0 <= self.id < N_CLASSES or POSTURE_NAMES[self.id] != self.name:
            raise ValueError(f"invalid posture label ({self.id}, {self.name!r})")

    @classmethod
    def from_id(cls, id: int) -> "PostureLabel":
        return POSTURES[int(id)]

    @classmethod
    def from_name(cls, name: str) -> "PostureLabel":
        try:
            return POSTURES[POSTURE_NAMES.index(name)]
        except ValueError:
            raise ValueError(f"unknown posture name {name!r}") from None

    def __str__(self) -> str:
        return self.name


POSTURES = tuple(PostureLabel(i, name) for i, name in enumerate(POSTURE_NAMES))


def _readonly(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class PressureFrame:
    """One labeled 19x10 matrix of 10-bit sensor counts."""

    values: np.ndarray
    subject_id: int
    label: PostureLabel

    def __post_init__(self):
        values = np.array(self.values, dtype=np.int64)
        if values.shape != (ROWS, COLS):
            raise ValueError(f"frame must have shape {(ROWS, COLS)}, got {values.shape}")
        if values.min() < 0 or values.max() > ADC_MAX:
            raise ValueError(f"frame values must lie in [0, {ADC_MAX}]")
        if int(self.subject_id) < 1:
            raise ValueError(f"subject_id must be >= 1, got {self.subject_id}")
        if not isinstance(self.label, PostureLabel):
            raise TypeError("label must be a PostureLabel")
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "subject_id", int(self.subject_id))

    def __eq__(self, other):
        if not isinstance(other, PressureFrame):
            return NotImplemented
        return (
            self.subject_id == other.subject_id
            and self.label == other.label
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PhaseFrame:
    phases: np.ndarray

    def __post_init__(self):
        phases = np.array(self.phases, dtype=np.float64)
        if phases.ndim != 2:
            raise ValueError("phase frame must be two-dimensional")
        if phases.min(initial=0.0) < 0.0 or phases.max(initial=0.0) > math.pi:
            raise ValueError("phases must lie in [0, pi]")
        object.__setattr__(self, "phases", _readonly(phases))

    @property
    def shape(self) -> tuple[int, int]:
        return self.phases.shape


def assemble_frame(seat, backrest) -> np.ndarray:
    """Stack the backrest (10x9) above the seat (9x9) into a zero-padded 19x10 matrix.

    Column 9 carries no sensor and stays zero.
    """
    seat = np.asarray(seat)
    backrest = np.asarray(backrest)
    if seat.shape != SEAT_SHAPE:
        raise ValueError(f"seat sheet must be {SEAT_SHAPE}, got {seat.shape}")
    if backrest.shape != BACKREST_SHAPE:
        raise ValueError(f"backrest sheet must be {BACKREST_SHAPE}, got {backrest.shape}")
    for name, sheet in (("seat", seat), ("backrest", backrest)):
        if sheet.size and (sheet.min() < 0 or sheet.max() > ADC_MAX):
            raise ValueError(f"{name} values must lie in [0, {ADC_MAX}]")
    out = np.zeros((ROWS, COLS), dtype=np.int64)
    out[: BACKREST_SHAPE[0], : BACKREST_SHAPE[1]] = backrest
    out[BACKREST_SHAPE[0] :, : SEAT_SHAPE[1]] = seat
    return out


def normalize_to_phase(frame: PressureFrame | np.ndarray, mode: str = "fixed_range") -> PhaseFrame:
    values = frame.values if isinstance(frame, PressureFrame) else np.asarray(frame)
    values = values.astype(np.float64)
    if mode == "fixed_range":
        phases = values / ADC_MAX * math.pi
    elif mode == "per_frame_minmax":
        lo, hi = values.min(), values.max()
        if hi == lo:
            phases = np.zeros_like(values)
        else:
            phases = (values - lo) / (hi - lo) * math.pi
    else:
        raise ValueError(f"unknown normalization mode {mode!r}")
    return PhaseFrame(np.clip(phases, 0.0, math.pi))


def stack_values(frames: Sequence[PressureFrame]) -> np.ndarray:
    """(B, 19, 10) integer array of frame values."""
    if not frames:
        return np.zeros((0, ROWS, COLS), dtype=np.int64)
    return np.stack([f.values for f in frames])


def label_ids(frames: Sequence[PressureFrame]) -> np.ndarray:
    return np.array([f.label.id for f in frames], dtype=np.int64)


def subject_ids(frames: Sequence[PressureFrame]) -> np.ndarray:
    return np.array([f.subject_id for f in frames], dtype=np.int64)


def save_frames(frames: Iterable[PressureFrame], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(FILE_HEADER + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        for frame in frames:
            writer.writerow([frame.subject_id, frame.label.name, *frame.values.ravel().tolist()])


def load_frames(path) -> list[PressureFrame]:
    frames = []
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if header != FILE_HEADER:
            raise FrameFormatError(f"expected header {FILE_HEADER!r}, got {header!r}", line=1)
        for lineno, row in enumerate(csv.reader(fh), start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2 + N_CELLS:
                raise FrameFormatError(f"expected {2 + N_CELLS} fields, got {len(row)}", line=lineno)
            try:
                subject = int(row[0])
                values = np.array([int(v) for v in row[2:]], dtype=np.int64)
            except ValueError as exc:
                raise FrameFormatError(f"non-integer field ({exc})", line=lineno) from None
            if subject < 1:
                raise FrameFormatError(f"subject id must be >= 1, got {subject}", line=lineno)
            if values.min() < 0 or values.max() > ADC_MAX:
                bad = values[(values < 0) | (values > ADC_MAX)][0]
                raise FrameFormatError(f"value {bad} outside [0, {ADC_MAX}]", line=lineno)
            try:
                label = PostureLabel.from_name(row[1])
            except ValueError as exc:
                raise FrameFormatError(str(exc), line=lineno) from None
            frames.append(PressureFrame(values.reshape(ROWS, COLS), subject, label))
    return frames


@dataclass
class Manifest:
    """JSON sidecar listing frame files, subjects and per-class counts."""

    files: list[str]
    subjects: list[int]
    class_counts: dict[str, int]
    extra: dict = field(default_factory=dict)

    @classmethod
    def describe(cls, frames: Sequence[PressureFrame], files: list[str], **extra) -> "Manifest":
        counts = {name: 0 for name in POSTURE_NAMES}
        for f in frames:
            counts[f.label.name] += 1
        subjects = sorted({f.subject_id for f in frames})
        return cls(files=list(files), subjects=subjects, class_counts=counts, extra=extra)

    def to_json(self) -> str:
        doc = {
            "version": 1,
            "files": self.files,
            "subjects": self.subjects,
            "class_counts": self.class_counts,
            **self.extra,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "Manifest":
        doc = json.loads(Path(path).read_text())
        if doc.get("version") != 1:
            raise ValueError(f"unsupported manifest version {doc.get('version')!r}")
        extra = {k: v for k, v in doc.items() if k not in {"version", "files", "subjects", "class_counts"}}
        return cls(doc["files"], doc["subjects"], doc["class_counts"], extra)
