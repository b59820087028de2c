"""Spatio-temporal correlation filter.

Rejects uncorrelated (noise) occupancies: a cell survives only if enough
distinct 8-neighbor pixels were active within a trailing window of bins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .events import BinnedEvents


@dataclass(frozen=True)
class StcfConfig:
    """n_required distinct active 8-neighbors within `window` trailing bins.

    n_required = 0 disables filtering. The neighborhood is the 8-connected
    ring of the 3x3 patch; border pixels use the truncated ring.
    """

    n_required: int = 0
    window: int = 1

    def __post_init__(self):
        if not 0 <= self.n_required <= 8:
            raise ValueError("n_required must be in [0, 8]")
        if self.window < 1:
            raise ValueError("window must be >= 1")


def _filter_channel(occ: np.ndarray, cfg: StcfConfig) -> np.ndarray:
    """Filter one [T, H, W] binary channel."""
    active = occ.astype(bool)
    # support[t] = pixel active anywhere in bins [t-window+1, t]
    support = active.copy()
    for k in range(1, cfg.window):
        support[k:] |= active[:-k]
    T, H, W = occ.shape
    padded = np.zeros((T, H + 2, W + 2), dtype=np.uint8)
    padded[:, 1:-1, 1:-1] = support
    neighbors = np.zeros((T, H, W), dtype=np.uint8)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            neighbors += padded[:, 1 + dy:H + 1 + dy, 1 + dx:W + 1 + dx]
    return np.where(active & (neighbors >= cfg.n_required), 1, 0).astype(np.uint8)


def stcf_filter(binned: BinnedEvents, cfg: StcfConfig) -> BinnedEvents:
    """Apply the correlation filter per channel; never creates occupancy."""
    if cfg.n_required == 0:
        return binned
    if binned.pooled:
        data = _filter_channel(binned.data, cfg)
    else:
        data = np.stack(
            [_filter_channel(binned.data[:, c], cfg) for c in range(binned.data.shape[1])],
            axis=1,
        )
    return BinnedEvents(dt=binned.dt, data=data, pooled=binned.pooled)
