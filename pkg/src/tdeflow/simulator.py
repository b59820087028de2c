"""Synthetic stimuli and event-camera emulation.

Generates moving-edge and bar-texture frame sequences, converts them to
events by log-intensity thresholding against a per-pixel reference, and
injects Poisson background-activity noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .events import EventStream

# Grey levels used by the generators. Background for edge stimuli is dark;
# textures sit on the mid grey so grey bars blend in.
INTENSITY_DARK = 50.0
INTENSITY_GREY = 100.0
INTENSITY_BRIGHT = 200.0

#: Velocities (px/timestep) the bar-texture protocol is defined over.
TEXTURE_VELOCITIES = (0.1, 0.2, 0.33, 0.5, 1.0)

DIRECTIONS = ("L-R", "R-L", "T-B", "B-T")


@dataclass(frozen=True)
class SimulatorConfig:
    """Event-camera emulation parameters.

    contrast_threshold: log-intensity step that triggers an event (applied
        as +/- threshold). timestep: seconds per frame. noise_rate: Hz per
        pixel of background activity added by `inject_noise` callers.
    """

    contrast_threshold: float = 0.15
    timestep: float = 0.01
    noise_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.contrast_threshold <= 0:
            raise ValueError("contrast_threshold must be positive")
        if self.timestep <= 0:
            raise ValueError("timestep must be positive")
        if self.noise_rate < 0:
            raise ValueError("noise_rate must be non-negative")


@dataclass(frozen=True)
class Stimulus:
    """Frame sequence plus ground truth.

    frames: [T, H, W] positive intensities. velocity_truth: per-frame true
    velocity (px/timestep), zero except at frames where an edge arrives at
    the reference location. meta fields describe the generator call.
    """

    frames: np.ndarray
    velocity_truth: np.ndarray
    direction: str
    velocity: float
    spacing: float = 0.0
    bar_values: np.ndarray | None = None  # texture bar intensities, in order

    def __post_init__(self):
        if self.frames.ndim != 3:
            raise ValueError("frames must be [T, H, W]")
        if np.any(self.frames <= 0):
            raise ValueError("intensities must be positive")
        if len(self.velocity_truth) != len(self.frames):
            raise ValueError("velocity_truth length must equal frame count")
        if np.any(self.velocity_truth < 0):
            raise ValueError("velocity_truth must be non-negative")
        self.frames.setflags(write=False)
        self.velocity_truth.setflags(write=False)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


def reference_column(width: int) -> int:
    """Trigger-tap column of the centered detector; where truth is marked."""
    return width // 2 + 1


def _crossing_frame(position0: float, velocity: float, target: float) -> int:
    """First integer frame t with position0 + velocity * t >= target."""
    return int(np.ceil((target - position0) / velocity - 1e-12))


def gen_edge_stimulus(
    velocity: float,
    n_edges: int,
    spacing: float,
    width: int,
    height: int,
    seed: int,
    tail: int = 12,
) -> Stimulus:
    """Dark-to-bright vertical edges translating left-to-right.

    Edge j trails the first by j*spacing pixels. A pixel switches state once
    the edge position passes its center (sub-pixel motion renders as
    thresholded occupancy). The run starts with every edge left of the
    sensor and ends `tail` frames after the last edge exits.

    velocity_truth marks the frame each edge first occupies the reference
    column (the centered detector's trigger tap).
    """
    if velocity <= 0:
        raise ValueError("velocity must be positive")
    if n_edges < 1:
        raise ValueError("n_edges must be >= 1")
    if n_edges > 1 and spacing < 1:
        raise ValueError("spacing must be >= 1 px for multi-edge stimuli")
    if width < 3:
        raise ValueError("width must fit a 3-tap detector")
    rng = np.random.default_rng(seed)
    start = float(rng.random()) - 1.0  # fractional offset, fully off-sensor
    last_start = start - (n_edges - 1) * spacing
    n_frames = _crossing_frame(last_start, velocity, width) + 1 + tail

    t = np.arange(n_frames)[:, None]  # [T, 1]
    cols = np.arange(width)[None, :]  # [1, W]
    passed = np.zeros((n_frames, width), dtype=np.int64)
    for j in range(n_edges):
        pos = start - j * spacing + velocity * t  # [T, 1]
        passed += pos >= cols
    profile = np.where(passed % 2 == 1, INTENSITY_BRIGHT, INTENSITY_DARK)
    frames = np.broadcast_to(profile[:, None, :], (n_frames, height, width)).copy()

    truth = np.zeros(n_frames)
    ref = reference_column(width)
    for j in range(n_edges):
        arrival = _crossing_frame(start - j * spacing, velocity, ref)
        if 0 <= arrival < n_frames:
            truth[arrival] = velocity
    return Stimulus(frames=frames, velocity_truth=truth, direction="L-R",
                    velocity=float(velocity), spacing=float(spacing if n_edges > 1 else 0.0))


def gen_texture_stimulus(
    grey_fraction: float,
    direction: str,
    velocity: float,
    seed: int,
    bar_width: int = 2,
    length: int = 80,
    width: int = 3,
    height: int = 3,
    tail: int = 10,
) -> Stimulus:
    """Bar texture translating across a small viewport.

    The texture is `length` px of white/grey/black bars along the motion
    axis (bars orthogonal to motion), on a mid-grey background, moving in
    one of the four cardinal directions at a protocol velocity. Bar colors
    are drawn per seed: grey with probability grey_fraction, otherwise
    white or black equiprobably.
    """
    if not 0.0 <= grey_fraction <= 0.8:
        raise ValueError("grey_fraction must be in [0, 0.8]")
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    if not any(abs(velocity - v) < 1e-9 for v in TEXTURE_VELOCITIES):
        raise ValueError(f"velocity must be one of {TEXTURE_VELOCITIES}")
    if bar_width < 1 or length < 1:
        raise ValueError("bar_width and length must be >= 1")

    rng = np.random.default_rng(seed)
    n_bars = int(np.ceil(length / bar_width))
    colors = np.where(
        rng.random(n_bars) < grey_fraction,
        INTENSITY_GREY,
        np.where(rng.integers(0, 2, n_bars) == 1, INTENSITY_BRIGHT, INTENSITY_DARK),
    )

    horizontal = direction in ("L-R", "R-L")
    extent = width if horizontal else height  # sensor size along motion axis
    off = float(rng.random())
    n_frames = int(np.ceil((extent + length + 1) / velocity)) + tail

    t = np.arange(n_frames)[:, None]
    coord = np.arange(extent)[None, :]
    if direction in ("L-R", "T-B"):
        head = (off - 1.0) + velocity * t  # leading texture edge, increasing
        xi = head - coord  # depth into the texture at each pixel
    else:
        head = (extent - off) - velocity * t  # decreasing
        xi = coord - head
    inside = (xi >= 0) & (xi < length)
    bar_idx = np.clip((xi // bar_width).astype(np.int64), 0, n_bars - 1)
    profile = np.where(inside, colors[bar_idx], INTENSITY_GREY)

    if horizontal:
        frames = np.broadcast_to(profile[:, None, :], (n_frames, height, width)).copy()
    else:
        frames = np.broadcast_to(profile[:, :, None], (n_frames, extent, width)).copy()

    # Truth marks color transitions (including texture<->background edges)
    # crossing the center pixel along the motion axis.
    transitions = []
    if abs(colors[0] - INTENSITY_GREY) > 0:
        transitions.append(0.0)
    for k in range(1, n_bars):
        if colors[k] != colors[k - 1]:
            transitions.append(k * bar_width)
    if abs(colors[-1] - INTENSITY_GREY) > 0:
        transitions.append(float(length))
    center = extent // 2
    truth = np.zeros(n_frames)
    for xi_t in transitions:
        # frame where texture depth xi at the center pixel reaches xi_t
        if direction in ("L-R", "T-B"):
            arrival = _crossing_frame(off - 1.0 - center - xi_t, velocity, 0.0)
        else:
            arrival = _crossing_frame(center - (extent - off) - xi_t, velocity, 0.0)
        if 0 <= arrival < n_frames:
            truth[arrival] = velocity
    return Stimulus(frames=frames, velocity_truth=truth, direction=direction,
                    velocity=float(velocity), spacing=float(bar_width),
                    bar_values=colors.astype(float))


def emit_events(stimulus: Stimulus, cfg: SimulatorConfig) -> EventStream:
    """Convert frames to events by thresholded log-intensity change.

    Per pixel, a reference r holds ln(I) at the last event (initialized from
    frame 0). A frame with ln(I) - r >= threshold emits ON, <= -threshold
    emits OFF; either resets r to the current ln(I). At most one event per
    pixel per frame; the event time is frame_index * timestep.
    """
    frames = stimulus.frames
    if np.any(frames <= 0):
        raise ValueError("intensities must be positive")
    log_i = np.log(frames)
    ref = log_i[0].copy()
    thr = cfg.contrast_threshold
    n_frames, height, width = frames.shape

    ts: list[np.ndarray] = []
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    ps: list[np.ndarray] = []
    for f in range(1, n_frames):
        diff = log_i[f] - ref
        on = diff >= thr
        off = diff <= -thr
        fired = on | off
        if fired.any():
            yy, xx = np.nonzero(fired)
            ts.append(np.full(yy.size, f * cfg.timestep))
            xs.append(xx)
            ys.append(yy)
            ps.append(on[yy, xx].astype(np.int8))
            ref[fired] = log_i[f][fired]
    if ts:
        t = np.concatenate(ts)
        x = np.concatenate(xs)
        y = np.concatenate(ys)
        p = np.concatenate(ps)
    else:
        t = x = y = p = np.array([])
    return EventStream(t, x, y, p, width, height, duration=n_frames * cfg.timestep)


def inject_noise(stream: EventStream, rate: float, seed: int) -> EventStream:
    """Merge homogeneous Poisson background activity into a stream.

    Each pixel receives events at `rate` Hz over the stream duration, with
    uniform polarity; the result is re-sorted with signal events intact.
    """
    if rate < 0:
        raise ValueError("rate must be non-negative")
    if rate == 0 or stream.duration == 0:
        return stream
    rng = np.random.default_rng(seed)
    n_px = stream.width * stream.height
    counts = rng.poisson(rate * stream.duration, n_px)
    total = int(counts.sum())
    pix = np.repeat(np.arange(n_px), counts)
    noise = EventStream(
        rng.random(total) * stream.duration,
        pix % stream.width,
        pix // stream.width,
        rng.integers(0, 2, total),
        stream.width,
        stream.height,
        duration=stream.duration,
    )
    return stream.merge(noise)
