"""Synthetic pressure maps: Gaussian-blob body templates for the 15 postures.

Template geometry lives in ``posture_templates.json``. A subject profile
scales, shifts and blurs the templates; every frame adds Gaussian ADC noise
and small per-frame jitter, then clips to the 10-bit range.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Sequence

import numpy as np

from liquidstate.frames import (
    ADC_MAX,
    BACKREST_SHAPE,
    N_CLASSES,
    POSTURES,
    SEAT_SHAPE,
    Manifest,
    PostureLabel,
    PressureFrame,
    assemble_frame,
)

SHEETS = {"seat": SEAT_SHAPE, "back": BACKREST_SHAPE}
PEAK_RANGE = (691.0, 1023.0)


@dataclass(frozen=True)
class Blob:
    center: tuple[float, float]
    sd: tuple[float, float]
    amp: float

    def evaluate(self, shape, shift=(0.0, 0.0), sd_scale=1.0) -> np.ndarray:
        rows, cols = np.indices(shape, dtype=np.float64)
        dr = (rows - self.center[0] - shift[0]) / (self.sd[0] * sd_scale)
        dc = (cols - self.center[1] - shift[1]) / (self.sd[1] * sd_scale)
        return self.amp * np.exp(-0.5 * (dr * dr + dc * dc))


@dataclass(frozen=True)
class PostureTemplate:
    name: str
    seat: tuple[Blob, ...]
    back: tuple[Blob, ...]

    def sheet(self, which: str, shift=(0.0, 0.0), sd_scale=1.0, jitter=None) -> np.ndarray:
        out = np.zeros(SHEETS[which])
        for k, blob in enumerate(getattr(self, which)):
            s = shift if jitter is None else (shift[0] + jitter[k, 0], shift[1] + jitter[k, 1])
            out += blob.evaluate(SHEETS[which], s, sd_scale)
        return out


@lru_cache(maxsize=None)
def _template_doc(path: str | None = None) -> dict:
    if path is None:
        text = resources.files("liquidstate").joinpath("posture_templates.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return json.loads(text)


def load_templates(path: str | None = None) -> tuple[dict[str, PostureTemplate], float]:
    """Templates keyed by posture name plus the kyphosis blend factor."""
    doc = _template_doc(path)
    templates = {}
    for label in POSTURES:
        entry = doc["postures"][label.name]
        blobs = {
            which: tuple(Blob(tuple(b["center"]), tuple(b["sd"]), float(b["amp"])) for b in entry[which])
            for which in SHEETS
        }
        templates[label.name] = PostureTemplate(label.name, blobs["seat"], blobs["back"])
    return templates, float(doc["kyphosis_blend"])


@dataclass(frozen=True)
class SubjectProfile:
    subject_id: int
    weight_scale: float = 1000.0  # peak pressure in ADC counts
    seat_shift: tuple[float, float] = (0.0, 0.0)
    noise_sd: float = 20.0
    kyphosis: bool = False
    size_scale: float = 1.0  # blob spread multiplier
    jitter_sd: float = 0.25  # per-frame blob displacement, cells
    amp_jitter: float = 0.05  # per-frame relative amplitude noise

    def __post_init__(self):
        if self.subject_id < 1:
            raise ValueError("subject_id must be >= 1")
        if self.weight_scale < 0 or self.noise_sd < 0 or self.size_scale <= 0:
            raise ValueError("weight_scale and noise_sd must be >= 0, size_scale > 0")
        if max(abs(s) for s in self.seat_shift) > 1.5:
            raise ValueError("seat_shift beyond 1.5 cells would push blobs off the sheet")


def _kyphotic_back(templates) -> np.ndarray:
    upright = templates["upright"].sheet("back")
    reclined = templates["leaning back"].sheet("back")
    return 0.5 * (upright + reclined)


def render_posture(profile: SubjectProfile, label: PostureLabel, seed=0,
                   templates: dict[str, PostureTemplate] | None = None,
                   kyphosis_blend: float | None = None) -> PressureFrame:
    """One noisy frame of ``label`` for ``profile``; deterministic given ``seed``."""
    if templates is None:
        templates, default_blend = load_templates()
        kyphosis_blend = default_blend if kyphosis_blend is None else kyphosis_blend
    rng = np.random.default_rng(seed)
    tpl = templates[label.name]
    n_blobs = max(len(tpl.seat), len(tpl.back), 1)
    jitter = rng.normal(0.0, profile.jitter_sd, size=(2, n_blobs, 2))
    gain = 1.0 + rng.normal(0.0, profile.amp_jitter, size=2)

    seat = tpl.sheet("seat", profile.seat_shift, profile.size_scale, jitter[0]) * gain[0]
    back = tpl.sheet("back", (0.0, profile.seat_shift[1]), profile.size_scale, jitter[1]) * gain[1]
    if profile.kyphosis and tpl.back:
        # rounded spine: backrest contact looks alike whether upright or reclined
        back = (1.0 - kyphosis_blend) * back + kyphosis_blend * _kyphotic_back(templates)

    seat = profile.weight_scale * seat + rng.normal(0.0, 1.0, size=SEAT_SHAPE) * profile.noise_sd
    back = profile.weight_scale * back + rng.normal(0.0, 1.0, size=BACKREST_SHAPE) * profile.noise_sd
    seat = np.clip(np.rint(seat), 0, ADC_MAX).astype(np.int64)
    back = np.clip(np.rint(back), 0, ADC_MAX).astype(np.int64)
    return PressureFrame(assemble_frame(seat, back), profile.subject_id, label)


def template_mass(label: PostureLabel, templates=None) -> dict[str, float]:
    """Analytic total pressure per sheet for an unshifted, unit-scale template.

    Each blob integrates to ``amp * 2 * pi * sd_r * sd_c`` over the plane.
    """
    if templates is None:
        templates, _ = load_templates()
    tpl = templates[label.name]
    return {
        which: sum(b.amp * 2.0 * np.pi * b.sd[0] * b.sd[1] for b in getattr(tpl, which))
        for which in SHEETS
    }


def make_profiles(n_subjects: int = 19, seed: int = 42, noise_sd: float = 20.0,
                  kyphosis_subject: int | None = None) -> list[SubjectProfile]:
    """Subject population with peak pressures inside ``PEAK_RANGE``.

    Exactly one subject (the last unless ``kyphosis_subject`` is given) has kyphosis.
    """
    if n_subjects < 1:
        raise ValueError("n_subjects must be positive")
    kyphosis_subject = n_subjects if kyphosis_subject is None else kyphosis_subject
    if not 1 <= kyphosis_subject <= n_subjects:
        raise ValueError(f"kyphosis subject {kyphosis_subject} not among 1..{n_subjects}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB0D1]))
    profiles = []
    for sid in range(1, n_subjects + 1):
        peak = float(np.clip(PEAK_RANGE[1] - rng.exponential(35.0), *PEAK_RANGE))
        shift = tuple(float(s) for s in np.clip(rng.normal(0.0, 0.35, size=2), -0.8, 0.8))
        size = float(np.clip(rng.normal(1.0, 0.07), 0.85, 1.15))
        profiles.append(SubjectProfile(sid, peak, shift, noise_sd, sid == kyphosis_subject, size))
    return profiles


def generate_dataset(n_subjects: int = 19, frames_per_posture_per_subject: int = 21, seed: int = 42,
                     noise_sd: float = 20.0, kyphosis_subject: int | None = None,
                     profiles: Sequence[SubjectProfile] | None = None,
                     ) -> tuple[list[PressureFrame], Manifest]:
    if frames_per_posture_per_subject < 1:
        raise ValueError("frames_per_posture_per_subject must be positive")
    if profiles is None:
        profiles = make_profiles(n_subjects, seed, noise_sd, kyphosis_subject)
    templates, blend = load_templates()
    frames = []
    for prof in profiles:
        for label in POSTURES:
            for k in range(frames_per_posture_per_subject):
                ss = np.random.SeedSequence([seed, prof.subject_id, label.id, k])
                frames.append(render_posture(prof, label, ss, templates, blend))
    manifest = Manifest.describe(
        frames,
        files=[],
        generator={
            "n_subjects": len(profiles),
            "frames_per_posture_per_subject": frames_per_posture_per_subject,
            "seed": seed,
            "noise_sd": noise_sd,
            "kyphosis_subjects": [p.subject_id for p in profiles if p.kyphosis],
        },
    )
    return frames, manifest


def class_mean_frames(frames: Sequence[PressureFrame]) -> np.ndarray:
    """(15, 19, 10) per-class mean of the given frames (NaN for absent classes)."""
    out = np.full((N_CLASSES,) + frames[0].values.shape, np.nan)
    for c in range(N_CLASSES):
        members = [f.values for f in frames if f.label.id == c]
        if members:
            out[c] = np.mean(members, axis=0)
    return out
