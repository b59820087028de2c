"""Evaluation metrics: direction selectivity, angular/endpoint errors,
correlation, relative error, and spike budgets."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, fields

import numpy as np

from .flownet import FlowField


@dataclass(frozen=True)
class MetricsReport:
    """Flat bundle of evaluation results; None marks a missing value."""

    dsi: float | None = None
    mean_aae_deg: float | None = None
    std_aae_deg: float | None = None
    mean_aee: float | None = None
    std_aee: float | None = None
    mean_raee: float | None = None
    std_raee: float | None = None
    pearson_r: float | None = None
    mean_relative_error: float | None = None
    total_spikes: int | None = None
    fraction_spikes_pd: float | None = None

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name} = {'missing' if value is None else repr(value)}")
        return "\n".join(lines) + "\n"

    def to_csv_row(self) -> str:
        return ",".join(
            "" if getattr(self, f.name) is None else repr(getattr(self, f.name))
            for f in fields(self)
        )

    @staticmethod
    def csv_header() -> str:
        return ",".join(f.name for f in fields(MetricsReport))


def dsi(spikes_by_direction) -> float | None:
    """Preferred-direction spike share: PD / (PD + ND + OD1 + OD2).

    Takes the four counts ordered (PD, ND, OD1, OD2); returns None when no
    spikes were emitted at all.
    """
    counts = [float(c) for c in spikes_by_direction]
    if len(counts) != 4:
        raise ValueError("expected counts for (PD, ND, OD1, OD2)")
    if any(c < 0 for c in counts):
        raise ValueError("spike counts must be non-negative")
    total = sum(counts)
    if total == 0:
        return None
    return counts[0] / total


def _paired_vectors(flow: FlowField, gt: FlowField) -> tuple[np.ndarray, np.ndarray]:
    if flow.v.shape != gt.v.shape:
        raise ValueError("flow fields must have matching dimensions")
    mask = flow.valid & gt.valid
    return flow.v[mask], gt.v[mask]


def aae(flow: FlowField, gt: FlowField) -> tuple[float, float] | None:
    """Average angular error in degrees (mean, std).

    Angles come from arccos of the normalized dot product, clamped to
    [-1, 1] against floating error. Zero-velocity entries on either side
    are not counted.
    """
    v, u = _paired_vectors(flow, gt)
    nv = np.linalg.norm(v, axis=1)
    nu = np.linalg.norm(u, axis=1)
    keep = (nv > 0) & (nu > 0)
    if not keep.any():
        return None
    cosang = np.clip(np.sum(v[keep] * u[keep], axis=1) / (nv[keep] * nu[keep]), -1.0, 1.0)
    angles = np.degrees(np.arccos(cosang))
    return float(angles.mean()), float(angles.std())


def aee_raee(flow: FlowField, gt: FlowField) -> tuple[float, float, float, float]:
    """Endpoint error and its ground-truth-relative form.

    Returns (mean AEE, std AEE, mean rAEE, std rAEE); rAEE averages only
    over entries with nonzero ground-truth magnitude.
    """
    v, u = _paired_vectors(flow, gt)
    err = np.linalg.norm(v - u, axis=1)
    nu = np.linalg.norm(u, axis=1)
    rel = err[nu > 0] / nu[nu > 0]
    mean_rel = float(rel.mean()) if rel.size else 0.0
    std_rel = float(rel.std()) if rel.size else 0.0
    if err.size == 0:
        return 0.0, 0.0, mean_rel, std_rel
    return float(err.mean()), float(err.std()), mean_rel, std_rel


def pearson(a, b) -> float | None:
    """Product-moment correlation; None when either side has no variance."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be 1-D arrays of equal length")
    if a.size < 2:
        raise ValueError("need at least 2 samples")
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt((da * da).sum() * (db * db).sum())
    if denom == 0:
        return None
    return float((da * db).sum() / denom)


def relative_error(est, truth) -> float:
    """Mean |est - truth| / truth; zero-truth entries excluded with a warning."""
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if est.shape != truth.shape:
        raise ValueError("shapes must match")
    keep = truth > 0
    if not keep.all():
        warnings.warn("relative_error: excluding zero-truth entries", stacklevel=2)
    if not keep.any():
        raise ValueError("no positive-truth entries")
    return float(np.mean(np.abs(est[keep] - truth[keep]) / truth[keep]))
