"""Spike-train to velocity decoding.

Two readouts, both segmented by onsets (trigger activations that found
nonzero gain, i.e. the passage of a new edge):

- COUNT: spikes within a fixed window after each onset, scaled linearly.
- ISI: the interval between the first two spikes after each onset,
  recovered from an exponentially decaying spike trace and inverted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .tde import TdeOutput


class DecodeMode(Enum):
    COUNT = "count"
    ISI = "isi"


# (alpha, bias) per scaling rule; see DecodeConfig.coefficients.
_COUNT_SCALES = {"wide": (0.1, 0.0), "narrow": (0.001, 0.024)}
_ISI_SCALES = {"wide": (1.0, 0.0), "narrow": (0.015, 0.024)}


@dataclass(frozen=True)
class DecodeConfig:
    """Decoder mode, segmentation window, and velocity scaling.

    scale names a preset: "wide" maps one spike (or the minimal ISI) to the
    minimal discernible velocity 0.1 px/ts and saturates at 1.0; "narrow"
    resolves 0.001 px/ts per spike above a 0.024 px/ts bias; "custom" uses
    the explicit (alpha, bias). Decoded value: bias + alpha*count, or
    bias + alpha/ISI. A zero count (or sentinel ISI, fewer than two spikes)
    decodes to exactly 0.
    """

    mode: DecodeMode = DecodeMode.COUNT
    count_window: int = 10
    scale: str = "wide"
    alpha: float | None = None
    bias: float | None = None
    trace_tau: float = 5.0
    isi_sentinel: float = 1.0e6

    def __post_init__(self):
        if self.count_window < 1:
            raise ValueError("count_window must be >= 1")
        if self.trace_tau <= 0:
            raise ValueError("trace_tau must be positive")
        if self.isi_sentinel < 1.0e3:
            raise ValueError("isi_sentinel must be >= 1e3")
        if self.scale not in ("wide", "narrow", "custom"):
            raise ValueError("scale must be wide, narrow, or custom")
        if self.scale == "custom" and (self.alpha is None or self.bias is None):
            raise ValueError("custom scale requires alpha and bias")

    def coefficients(self) -> tuple[float, float]:
        """(alpha, bias) for the active mode and scale."""
        if self.scale == "custom":
            return float(self.alpha), float(self.bias)
        table = _COUNT_SCALES if self.mode is DecodeMode.COUNT else _ISI_SCALES
        return table[self.scale]


@dataclass(frozen=True)
class VelocityEstimate:
    onset_t: int
    value: float


def scale_count(count: int | np.ndarray, cfg: DecodeConfig):
    """Map a spike count to px/timestep; zero count maps to zero."""
    alpha, bias = cfg.coefficients()
    arr = np.asarray(count, dtype=float)
    out = np.where(arr >= 1, bias + alpha * arr, 0.0)
    return float(out) if out.ndim == 0 else out


def scale_isi(isi: float, cfg: DecodeConfig) -> float:
    """Map an inter-spike interval to px/timestep; sentinel maps to zero."""
    alpha, bias = cfg.coefficients()
    if isi >= cfg.isi_sentinel:
        return 0.0
    return bias + alpha / isi


def isi_from_trace(trace_value: float, x0: float, tau: float) -> float:
    """Invert the exponential spike trace: elapsed time plus one timestep.

    A trace at x0 * exp(-t/tau) decayed for t steps since the last spike;
    reading it one step before the next spike gives ISI = t + 1.
    """
    if trace_value <= 0 or trace_value > x0:
        raise ValueError("trace value must be in (0, x0]")
    return tau * math.log(x0 / trace_value) + 1.0


def spike_trace(spikes: np.ndarray, tau: float, x0: float = 1.0) -> np.ndarray:
    """Exponentially decaying trace of a binary spike train.

    The trace is set to x0 at each spike timestep and multiplied by
    exp(-1/tau) per step otherwise. Accepts [T] or [T, N].
    """
    decay = math.exp(-1.0 / tau)
    out = np.zeros(spikes.shape, dtype=float)
    z = np.zeros(spikes.shape[1:], dtype=float)
    fired = spikes.astype(bool)
    for t in range(spikes.shape[0]):
        z = np.where(fired[t], x0, z * decay)
        out[t] = z
    return out


def _window_counts(spikes: np.ndarray, window: int) -> np.ndarray:
    """counts[t] = spikes in [t, t+window), per column; [T] or [T, N]."""
    T = spikes.shape[0]
    csum = np.zeros((T + 1,) + spikes.shape[1:], dtype=np.int64)
    np.cumsum(spikes, axis=0, out=csum[1:])
    end = np.minimum(np.arange(T) + window, T)
    return csum[end] - csum[:T]


def count_estimate_timeline(spikes: np.ndarray, onsets: np.ndarray,
                            cfg: DecodeConfig) -> np.ndarray:
    """Per-timestep COUNT-decoded velocity, nonzero only at onsets."""
    counts = _window_counts(spikes, cfg.count_window)
    return np.where(onsets.astype(bool), scale_count(counts, cfg), 0.0)


def isi_estimate_timeline(spikes: np.ndarray, onsets: np.ndarray,
                          cfg: DecodeConfig) -> np.ndarray:
    """Per-timestep ISI-decoded velocity, nonzero only at onsets.

    Each onset opens a segment that runs to the next onset (or the end);
    the ISI is measured between the first two spikes inside the segment via
    the trace readout, and decodes to 0 when fewer than two spikes occur.
    """
    single = spikes.ndim == 1
    sp = spikes[:, None] if single else spikes
    on = onsets[:, None] if single else onsets
    T, N = sp.shape
    trace = spike_trace(sp, cfg.trace_tau)
    out = np.zeros((T, N))
    for col in range(N):
        onset_ts = np.flatnonzero(on[:, col])
        spike_ts = np.flatnonzero(sp[:, col])
        for i, t0 in enumerate(onset_ts):
            t_end = onset_ts[i + 1] if i + 1 < len(onset_ts) else T
            seg = spike_ts[(spike_ts >= t0) & (spike_ts < t_end)]
            if len(seg) >= 2:
                t2 = int(seg[1])
                isi = isi_from_trace(trace[t2 - 1, col], 1.0, cfg.trace_tau)
            else:
                isi = cfg.isi_sentinel
            out[t0, col] = scale_isi(isi, cfg)
    return out[:, 0] if single else out


def _estimates_from_timeline(timeline: np.ndarray, onsets: np.ndarray) -> list[VelocityEstimate]:
    return [VelocityEstimate(onset_t=int(t), value=float(timeline[t]))
            for t in np.flatnonzero(onsets)]


def decode_spike_count(out: TdeOutput, cfg: DecodeConfig) -> list[VelocityEstimate]:
    """One estimate per onset: spikes within the window, scaled."""
    if cfg.mode is not DecodeMode.COUNT:
        raise ValueError("decode_spike_count requires COUNT mode")
    timeline = count_estimate_timeline(out.spikes, out.onsets, cfg)
    return _estimates_from_timeline(timeline, out.onsets)


def decode_isi(out: TdeOutput, cfg: DecodeConfig) -> list[VelocityEstimate]:
    """One estimate per onset from the inverted first inter-spike interval."""
    if cfg.mode is not DecodeMode.ISI:
        raise ValueError("decode_isi requires ISI mode")
    timeline = isi_estimate_timeline(out.spikes, out.onsets, cfg)
    return _estimates_from_timeline(timeline, out.onsets)
