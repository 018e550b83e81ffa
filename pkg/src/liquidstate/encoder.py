"""Cosine-rank latency encoding of phase maps into sparse binary spike matrices.

Each cell of a phase map in [0, pi] drives ``n`` input neurons. Channel ``i``
evaluates ``0.5 * A * (cos(x + pi * i / n) + 1)``, clips it to ``[0, A - 1]``
and truncates to an integer time bin; a bin of 0 emits no spike. The result is
a ``(p * q * n, A)`` matrix with one row per input neuron and one column per
1 ms time bin, so every row carries at most one spike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from liquidstate.frames import PhaseFrame


@dataclass(frozen=True)
class EncodingConfig:
    A: int = 30  # amplitude == number of 1 ms bins
    n: int = 2  # coding number (cosine channels per cell)

    def __post_init__(self):
        if int(self.A) != self.A or self.A < 2:
            raise ValueError(f"amplitude A must be an integer >= 2, got {self.A}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"coding number n must be an integer >= 1, got {self.n}")

    def n_inputs(self, p: int = 19, q: int = 10) -> int:
        return p * q * self.n


@dataclass(frozen=True, eq=False)
class EncodedSpikes:
    bits: np.ndarray
    bin_duration: float = 1.0  # ms

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 2:
            raise ValueError("spike matrix must be two-dimensional")
        if bits.size and bits.max() > 1:
            raise ValueError("spike matrix must be binary")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    @property
    def n_inputs(self) -> int:
        return self.bits.shape[0]

    @property
    def n_bins(self) -> int:
        return self.bits.shape[1]

    def __eq__(self, other):
        if not isinstance(other, EncodedSpikes):
            return NotImplemented
        return self.bin_duration == other.bin_duration and np.array_equal(self.bits, other.bits)

    __hash__ = None


def _bins(x: np.ndarray, i: int, cfg: EncodingConfig) -> np.ndarray:
    y = 0.5 * cfg.A * (np.cos(x + math.pi * i / cfg.n) + 1.0)
    # rounding first keeps exact-integer bins (e.g. cos(3 pi / 2)) from truncating one low
    return np.trunc(np.clip(np.round(y, 9), 0, cfg.A - 1)).astype(np.int64)


def spike_time(x: float, i: int, cfg: EncodingConfig = EncodingConfig()) -> int | None:
    """Time bin of channel ``i`` for phase ``x``, or None when the channel stays silent."""
    if not 0.0 <= x <= math.pi:
        raise ValueError(f"phase {x} outside [0, pi]")
    if not 0 <= i < cfg.n:
        raise ValueError(f"channel {i} outside [0, {cfg.n})")
    b = int(_bins(np.asarray(x, dtype=np.float64), i, cfg))
    return None if b == 0 else b


def spike_bins(phases: np.ndarray, cfg: EncodingConfig) -> np.ndarray:
    """Spike bin per input neuron, -1 where silent.

    ``phases`` has shape (..., p, q); the result has shape (..., p * q * n) with
    neuron ``(j * q + k) * n + i`` for cell (j, k), channel i.
    """
    phases = np.asarray(phases, dtype=np.float64)
    if phases.size and (phases.min() < 0.0 or phases.max() > math.pi):
        raise ValueError("phases must lie in [0, pi]")
    flat = phases.reshape(*phases.shape[:-2], -1)
    out = np.stack([_bins(flat, i, cfg) for i in range(cfg.n)], axis=-1)
    out[out == 0] = -1
    return out.reshape(*flat.shape[:-1], -1)


def bins_to_bits(bins: np.ndarray, A: int) -> np.ndarray:
    """Expand per-neuron bins (-1 = silent) into a binary (..., R, A) matrix."""
    bins = np.asarray(bins)
    bits = np.zeros(bins.shape + (A,), dtype=np.uint8)
    fired = bins >= 0
    idx = np.nonzero(fired)
    bits[idx + (bins[fired],)] = 1
    return bits


def encode(frame: PhaseFrame | np.ndarray, cfg: EncodingConfig = EncodingConfig()) -> EncodedSpikes:
    phases = frame.phases if isinstance(frame, PhaseFrame) else np.asarray(frame, dtype=np.float64)
    if phases.ndim != 2:
        raise ValueError("encode expects a single (p, q) phase map")
    return EncodedSpikes(bins_to_bits(spike_bins(phases, cfg), cfg.A))


def encode_batch(phases: np.ndarray, cfg: EncodingConfig) -> np.ndarray:
    """Encode a (B, p, q) stack of phase maps into a (B, p*q*n, A) uint8 array."""
    return bins_to_bits(spike_bins(phases, cfg), cfg.A)


def binarize_raw(values: np.ndarray, A: int = 30) -> np.ndarray:
    """Feed un-encoded frames to spiking inputs: any non-zero cell fires once in bin 0.

    ``values`` has shape (..., p, q); the result is (..., p * q, A).
    """
    values = np.asarray(values)
    flat = values.reshape(*values.shape[:-2], -1)
    bits = np.zeros(flat.shape + (A,), dtype=np.uint8)
    bits[..., 0] = flat > 0
    return bits
