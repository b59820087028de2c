"""Detector grids over a pixel array and 2D optical flow assembly.

Four direction channels of detectors tile the sensor, with input spacing
growing toward the periphery (wider spacing encodes proportionally higher
velocities). Per-direction velocity estimates combine by opponent
subtraction into (vx, vy); IMU rotation rates provide ground-truth flow.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .decode import DecodeConfig, DecodeMode, count_estimate_timeline, isi_estimate_timeline
from .events import BinnedEvents, DataError
from .tde import TdeKind, TdeParams, tde_run_batch

#: Direction channel -> (unit axis step dx, dy) toward the preferred side.
DIRECTION_STEPS = {"L-R": (1, 0), "R-L": (-1, 0), "T-B": (0, 1), "B-T": (0, -1)}

#: Input spacings of the default eccentric layout, center outward.
DEFAULT_BAND_SPACINGS = (1, 2, 3, 4, 6, 8)

PX_PER_DEG = 4.25  # pixel displacement per degree of camera rotation


@dataclass(frozen=True)
class DetectorGrid:
    """Per-pixel detector bank: four directions, shared params.

    spacing_map[y, x] gives the tap spacing s; a detector samples inhibitor
    / facilitator / trigger at offsets (-s, 0, +s) along its axis, trigger
    downstream of preferred motion. Detectors with any tap outside the
    sensor are disabled.
    """

    width: int
    height: int
    spacing_map: np.ndarray
    params: TdeParams
    kind: TdeKind

    def __post_init__(self):
        if self.spacing_map.shape != (self.height, self.width):
            raise ValueError("spacing_map must be [height, width]")
        self.spacing_map.setflags(write=False)


@dataclass(frozen=True)
class FlowField:
    """Per-bin, per-pixel flow vectors in px/s with a validity mask."""

    v: np.ndarray  # [T, H, W, 2] = (vx, vy)
    valid: np.ndarray  # [T, H, W] bool
    dt: float

    def __post_init__(self):
        if self.v.ndim != 4 or self.v.shape[3] != 2 or self.v.shape[:3] != self.valid.shape:
            raise ValueError("flow must be [T, H, W, 2] with matching [T, H, W] mask")
        self.v.setflags(write=False)
        self.valid.setflags(write=False)


@dataclass(frozen=True)
class ImuSample:
    """Rotation rates in deg/s: x = pitch, y = yaw, z = roll."""

    t: float
    x: float
    y: float
    z: float


def build_retina(width: int, height: int, band_spacings=DEFAULT_BAND_SPACINGS,
                 params: TdeParams | None = None, kind: TdeKind = TdeKind.TDE3) -> DetectorGrid:
    """Partition the field into equal-radial-extent annuli of spacings.

    Annulus k (of len(band_spacings), measured from the image center out to
    the farthest pixel) uses band_spacings[k]; spacing therefore grows with
    eccentricity.
    """
    bands = [int(b) for b in band_spacings]
    if not bands:
        raise ValueError("band_spacings must be non-empty")
    if any(b2 <= b1 for b1, b2 in zip(bands, bands[1:])):
        raise ValueError("band_spacings must be strictly increasing")
    if bands[0] < 1:
        raise ValueError("spacings must be >= 1 px")
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
    yy, xx = np.mgrid[0:height, 0:width]
    radius = np.hypot(xx - cx, yy - cy)
    r_max = radius.max()
    if r_max == 0:
        idx = np.zeros((height, width), dtype=np.int64)
    else:
        idx = np.minimum((radius / r_max * len(bands)).astype(np.int64), len(bands) - 1)
    spacing_map = np.asarray(bands, dtype=np.int64)[idx]
    if params is None:
        params = TdeParams.from_time_constants(w_fac=5.0, tau_g=5.0, tau_i=5.0, tau_v=5.0)
    return DetectorGrid(width=width, height=height, spacing_map=spacing_map,
                        params=params, kind=kind)


def _shifted(occ: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """out[t, y, x] = occ[t, y+dy, x+dx], zero outside the sensor."""
    T, H, W = occ.shape
    out = np.zeros_like(occ)
    ys = slice(max(0, -dy), min(H, H - dy))
    xs = slice(max(0, -dx), min(W, W - dx))
    out[:, ys, xs] = occ[:, max(0, dy):H + min(0, dy), max(0, dx):W + min(0, dx)]
    return out


def run_flow(binned: BinnedEvents, grid: DetectorGrid,
             decode: DecodeConfig) -> tuple[FlowField, dict]:
    """Run the grid on pooled bins and assemble opponent-subtracted flow.

    Each detector's decoded velocity (px/timestep) is multiplied by its tap
    spacing (a spacing-s detector encodes s-times-higher velocities) and
    divided by the bin width to give px/s. vx = v(L-R) - v(R-L), vy =
    v(T-B) - v(B-T). Returns the flow field and spike statistics (total and
    per-direction counts over enabled detectors).
    """
    if not binned.pooled:
        raise ValueError("run_flow requires polarity-pooled bins")
    occ = binned.data
    T, H, W = occ.shape
    if (H, W) != (grid.height, grid.width):
        raise ValueError("grid size does not match binned sensor size")
    smap = grid.spacing_map
    estimates = {name: np.zeros((T, H, W)) for name in DIRECTION_STEPS}
    any_onset = np.zeros((T, H, W), dtype=bool)
    spike_counts = {name: 0 for name in DIRECTION_STEPS}
    yy, xx = np.mgrid[0:H, 0:W]
    for name, (dx, dy) in DIRECTION_STEPS.items():
        for s in np.unique(smap):
            s = int(s)
            trig_y, trig_x = yy + dy * s, xx + dx * s
            inh_y, inh_x = yy - dy * s, xx - dx * s
            enabled = (
                (smap == s)
                & (trig_x >= 0) & (trig_x < W) & (trig_y >= 0) & (trig_y < H)
                & (inh_x >= 0) & (inh_x < W) & (inh_y >= 0) & (inh_y < H)
            )
            if not enabled.any():
                continue
            flat = enabled.ravel()
            fac = occ.reshape(T, -1)[:, flat]
            trig = _shifted(occ, dy * s, dx * s).reshape(T, -1)[:, flat]
            inh = _shifted(occ, -dy * s, -dx * s).reshape(T, -1)[:, flat]
            spikes, onsets = tde_run_batch(fac, trig, inh, grid.params, grid.kind)
            spike_counts[name] += int(spikes.sum())
            if decode.mode is DecodeMode.COUNT:
                est = count_estimate_timeline(spikes, onsets, decode)
            else:
                est = isi_estimate_timeline(spikes, onsets, decode)
            estimates[name].reshape(T, -1)[:, flat] = est * s / binned.dt
            any_onset.reshape(T, -1)[:, flat] |= onsets.astype(bool)
    v = np.stack(
        [estimates["L-R"] - estimates["R-L"], estimates["T-B"] - estimates["B-T"]],
        axis=-1,
    )
    field = FlowField(v=v, valid=any_onset, dt=binned.dt)
    stats = {"total_spikes": int(sum(spike_counts.values())),
             "per_direction": spike_counts}
    return field, stats


def load_imu(path: str | os.PathLike, columns: tuple[int, int, int, int] = (0, 1, 2, 3),
             units: str = "deg") -> list[ImuSample]:
    """Read IMU samples from a text file with configurable column indices.

    columns gives the indices of (t, x-rate, y-rate, z-rate); units is
    "deg" or "rad" per second (rad converts to deg).
    """
    if units not in ("deg", "rad"):
        raise ValueError("units must be 'deg' or 'rad'")
    factor = 1.0 if units == "deg" else 180.0 / np.pi
    samples: list[ImuSample] = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                vals = [float(parts[c]) for c in columns]
            except (IndexError, ValueError):
                raise DataError(f"{path}: line {lineno}: cannot read columns {columns}") from None
            if not all(np.isfinite(v) for v in vals):
                raise DataError(f"{path}: line {lineno}: non-finite value")
            samples.append(ImuSample(t=vals[0], x=vals[1] * factor, y=vals[2] * factor,
                                     z=vals[3] * factor))
    return samples


def imu_ground_truth(samples, width: int, height: int, dt: float,
                     e0: tuple[float, float], k: float = PX_PER_DEG,
                     n_bins: int | None = None) -> FlowField:
    """Rotational ground-truth flow from gyro rates.

    Per bin, rates average over the bin and integrate to angles; yaw and
    pitch translate pixels by k px/deg, roll rotates them about e0:
    e' = R(e - e0 + T) + e0, flow = (e' - e)/dt in px/s.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    times = np.array([s.t for s in samples])
    rates = np.array([[s.x, s.y, s.z] for s in samples])
    if n_bins is None:
        if times.size == 0:
            raise DataError("no IMU samples")
        n_bins = max(int(np.floor(times.max() / dt + 1e-9)), 1)
    bin_idx = np.floor(times / dt + 1e-9).astype(np.int64)
    uncovered = [b for b in range(n_bins) if not np.any(bin_idx == b)]
    if uncovered:
        raise DataError(f"IMU samples do not cover bins {uncovered}")

    xs = np.arange(width, dtype=float)
    ys = np.arange(height, dtype=float)
    ex, ey = np.meshgrid(xs, ys)
    rel_x = ex - e0[0]
    rel_y = ey - e0[1]
    v = np.zeros((n_bins, height, width, 2))
    for b in range(n_bins):
        mean_x, mean_y, mean_z = rates[bin_idx == b].mean(axis=0)
        shift_x = k * mean_y * dt  # yaw -> horizontal displacement
        shift_y = k * mean_x * dt  # pitch -> vertical displacement
        phi = np.deg2rad(mean_z * dt)  # roll
        px = rel_x + shift_x
        py = rel_y + shift_y
        new_x = np.cos(phi) * px - np.sin(phi) * py + e0[0]
        new_y = np.sin(phi) * px + np.cos(phi) * py + e0[1]
        v[b, :, :, 0] = (new_x - ex) / dt
        v[b, :, :, 1] = (new_y - ey) / dt
    return FlowField(v=v, valid=np.ones((n_bins, height, width), dtype=bool), dt=float(dt))


def save_flow_csv(field: FlowField, path: str | os.PathLike) -> None:
    """Write valid cells as `bin,x,y,vx,vy` rows."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("bin,x,y,vx,vy\n")
        for b, y, x in zip(*np.nonzero(field.valid)):
            vx, vy = (float(c) for c in field.v[b, y, x])
            fh.write(f"{b},{x},{y},{vx!r},{vy!r}\n")


def save_flow_binary(field: FlowField, path: str | os.PathLike) -> None:
    T, H, W, _ = field.v.shape
    with open(path, "wb") as fh:
        fh.write(f"{T} {H} {W} {float(field.dt)!r}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(field.v, dtype=np.float32).tobytes())
        fh.write(np.ascontiguousarray(field.valid, dtype=np.uint8).tobytes())


def load_flow_binary(path: str | os.PathLike) -> FlowField:
    with open(path, "rb") as fh:
        header = fh.readline().split()
        if len(header) != 4:
            raise DataError(f"{path}: bad header")
        T, H, W = (int(v) for v in header[:3])
        dt = float(header[3])
        v = np.frombuffer(fh.read(T * H * W * 2 * 4), dtype=np.float32)
        valid = np.frombuffer(fh.read(T * H * W), dtype=np.uint8)
    if v.size != T * H * W * 2 or valid.size != T * H * W:
        raise DataError(f"{path}: truncated flow file")
    return FlowField(v=v.reshape(T, H, W, 2).astype(np.float64),
                     valid=valid.reshape(T, H, W).astype(bool), dt=dt)
