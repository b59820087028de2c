"""Discrete-time dynamics of the 2-point and 3-point time-difference encoders.

A detector holds three scalar compartments: a gain g set by the facilitator
and decaying over time, a synaptic current I fed by trigger-gated gain, and
a leaky membrane V that spikes at threshold. The 3-point variant adds an
inhibitor that zeroes the gain.

Per-timestep update order:
  1. the gain decays: g <- g * d_g;
  2. the trigger reads the decayed gain: impulse = g * trig (an onset is a
     trigger arriving while g > 0);
  3. the facilitator overwrites: g <- w_fac on fac; the inhibitor then
     zeroes: g <- 0 on inh (3-point only), so simultaneous fac+inh leaves
     no gain;
  4. current integrates the impulse and is clamped: I <- min(I*d_I +
     impulse, w_fac); voltage integrates the current: V <- V*d_V + I,
     spiking (hard reset to 0) when V >= theta.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


def sigmoid(p: float) -> float:
    return 1.0 / (1.0 + np.exp(-p))


def logit(d: float) -> float:
    if not 0.0 < d < 1.0:
        raise ValueError("decay must be in (0, 1)")
    return float(np.log(d / (1.0 - d)))


class TdeKind(Enum):
    TDE2 = "tde2"  # facilitator + trigger
    TDE3 = "tde3"  # + inhibitor


@dataclass(frozen=True)
class TdeParams:
    """Trainable detector parameters.

    Decays are stored raw (p_g, p_i, p_v) and squashed through a sigmoid so
    any real value maps to a valid decay in (0, 1). theta is fixed at 1.0;
    its scale is absorbed by w_fac.
    """

    w_fac: float
    p_g: float
    p_i: float
    p_v: float
    theta: float = 1.0

    def __post_init__(self):
        if self.w_fac <= 0:
            raise ValueError("w_fac must be positive")

    @property
    def d_g(self) -> float:
        return sigmoid(self.p_g)

    @property
    def d_i(self) -> float:
        return sigmoid(self.p_i)

    @property
    def d_v(self) -> float:
        return sigmoid(self.p_v)

    @classmethod
    def from_decays(cls, w_fac: float, d_g: float, d_i: float, d_v: float,
                    theta: float = 1.0) -> "TdeParams":
        return cls(w_fac=w_fac, p_g=logit(d_g), p_i=logit(d_i), p_v=logit(d_v), theta=theta)

    @classmethod
    def from_time_constants(cls, w_fac: float, tau_g: float, tau_i: float, tau_v: float,
                            theta: float = 1.0) -> "TdeParams":
        """Decays d = exp(-1/tau) for time constants in timesteps."""
        return cls.from_decays(w_fac, *(float(np.exp(-1.0 / t)) for t in (tau_g, tau_i, tau_v)),
                               theta=theta)


@dataclass(frozen=True)
class TdeState:
    g: float = 0.0
    I: float = 0.0
    V: float = 0.0


@dataclass(frozen=True)
class TdeOutput:
    """Spike train plus onset markers and optional compartment traces."""

    spikes: np.ndarray
    onsets: np.ndarray
    current_trace: np.ndarray | None = None
    voltage_trace: np.ndarray | None = None


def tde_step(state: TdeState, fac: int, trig: int, inh: int,
             params: TdeParams, kind: TdeKind) -> tuple[TdeState, int, int]:
    """One timestep; returns (new state, spike, onset)."""
    g = state.g * params.d_g
    impulse = g * trig
    onset = 1 if (trig and g > 0.0) else 0
    if fac:
        g = params.w_fac
    if kind is TdeKind.TDE3 and inh:
        g = 0.0
    current = min(state.I * params.d_i + impulse, params.w_fac)
    voltage = state.V * params.d_v + current
    spike = 1 if voltage >= params.theta else 0
    if spike:
        voltage = 0.0
    return TdeState(g=g, I=current, V=voltage), spike, onset


def tde_run(fac_seq, trig_seq, inh_seq, params: TdeParams, kind: TdeKind,
            record_traces: bool = False) -> TdeOutput:
    """Fold tde_step over equal-length binary input sequences from rest."""
    fac_seq = np.asarray(fac_seq)
    trig_seq = np.asarray(trig_seq)
    inh_seq = np.asarray(inh_seq)
    if not (len(fac_seq) == len(trig_seq) == len(inh_seq)):
        raise ValueError("input sequences must have equal length")
    n = len(fac_seq)
    spikes = np.zeros(n, dtype=np.uint8)
    onsets = np.zeros(n, dtype=np.uint8)
    current = np.zeros(n) if record_traces else None
    voltage = np.zeros(n) if record_traces else None
    state = TdeState()
    for t in range(n):
        state, spikes[t], onsets[t] = tde_step(
            state, int(fac_seq[t]), int(trig_seq[t]), int(inh_seq[t]), params, kind)
        if record_traces:
            current[t] = state.I
            voltage[t] = state.V
    return TdeOutput(spikes=spikes, onsets=onsets, current_trace=current, voltage_trace=voltage)


def tde_run_batch(fac: np.ndarray, trig: np.ndarray, inh: np.ndarray,
                  params: TdeParams, kind: TdeKind) -> tuple[np.ndarray, np.ndarray]:
    """Run N independent detectors over [T, N] binary inputs from rest.

    Returns (spikes, onsets) as [T, N] uint8. Detectors share parameters but
    no state; results match per-detector tde_run exactly.
    """
    if not (fac.shape == trig.shape == inh.shape) or fac.ndim != 2:
        raise ValueError("inputs must be [T, N] arrays of equal shape")
    T, N = fac.shape
    fac_b = fac.astype(bool)
    trig_b = trig.astype(bool)
    inh_b = inh.astype(bool)
    g = np.zeros(N)
    current = np.zeros(N)
    voltage = np.zeros(N)
    spikes = np.zeros((T, N), dtype=np.uint8)
    onsets = np.zeros((T, N), dtype=np.uint8)
    d_g, d_i, d_v = params.d_g, params.d_i, params.d_v
    for t in range(T):
        g *= d_g
        impulse = np.where(trig_b[t], g, 0.0)
        onsets[t] = trig_b[t] & (g > 0.0)
        g[fac_b[t]] = params.w_fac
        if kind is TdeKind.TDE3:
            g[inh_b[t]] = 0.0
        current = np.minimum(current * d_i + impulse, params.w_fac)
        voltage = voltage * d_v + current
        fired = voltage >= params.theta
        spikes[t] = fired
        voltage[fired] = 0.0
    return spikes, onsets
