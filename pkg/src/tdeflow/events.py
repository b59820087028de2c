"""Event data model, text-file ingestion, and temporal binning.

Events are timestamped pixel polarity changes from an event camera (or the
simulator). The rest of the pipeline consumes them as binary occupancy bins:
one cell per (timestep, pixel), optionally split by polarity.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

# Slack added when mapping float times onto bin indices; well above the
# accumulated representation error of t/dt for any realistic stream, well
# below one bin.
_BIN_EPS = 1e-9


class DataError(ValueError):
    """Raised when file contents or stream data violate the format contract."""


class Polarity(IntEnum):
    OFF = 0
    ON = 1


@dataclass(frozen=True)
class Event:
    """A single polarity change at pixel (x, y), time t in seconds."""

    t: float
    x: int
    y: int
    polarity: int


class EventStream:
    """Immutable, time-sorted sequence of events with sensor geometry.

    Args:
        t, x, y, p: per-event arrays (seconds, column, row, polarity 0/1).
        width, height: sensor dimensions in pixels.
        duration: recording length in seconds; defaults to the last event
            time. Must be >= the last event time.

    Unsorted input is sorted stably by time.
    """

    def __init__(self, t, x, y, p, width: int, height: int, duration: float | None = None):
        t = np.asarray(t, dtype=np.float64)
        x = np.asarray(x, dtype=np.int32)
        y = np.asarray(y, dtype=np.int32)
        p = np.asarray(p, dtype=np.int8)
        if not (t.shape == x.shape == y.shape == p.shape) or t.ndim != 1:
            raise ValueError("t, x, y, p must be 1-D arrays of equal length")
        if width <= 0 or height <= 0:
            raise ValueError("sensor dimensions must be positive")
        if t.size:
            if not np.all(np.isfinite(t)) or t.min() < 0:
                raise DataError("event times must be finite and non-negative")
            bad = (x < 0) | (x >= width) | (y < 0) | (y >= height)
            if bad.any():
                i = int(np.argmax(bad))
                raise DataError(
                    f"event {i} at ({int(x[i])}, {int(y[i])}) outside {width}x{height} sensor"
                )
            if not np.isin(p, (0, 1)).all():
                raise DataError("polarity must be 0 or 1")
            order = np.argsort(t, kind="stable")
            t, x, y, p = t[order], x[order], y[order], p[order]
        max_t = float(t[-1]) if t.size else 0.0
        if duration is None:
            duration = max_t
        if duration < max_t:
            raise DataError("duration must cover the last event time")
        for a in (t, x, y, p):
            a.setflags(write=False)
        self._t, self._x, self._y, self._p = t, x, y, p
        self.width = int(width)
        self.height = int(height)
        self.duration = float(duration)

    @property
    def t(self) -> np.ndarray:
        return self._t

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def y(self) -> np.ndarray:
        return self._y

    @property
    def p(self) -> np.ndarray:
        return self._p

    def __len__(self) -> int:
        return self._t.size

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i: int) -> Event:
        return Event(float(self._t[i]), int(self._x[i]), int(self._y[i]),
                     Polarity(int(self._p[i])))

    def merge(self, other: "EventStream") -> "EventStream":
        """Union of two streams over the same sensor, re-sorted by time."""
        if (other.width, other.height) != (self.width, self.height):
            raise ValueError("cannot merge streams with different sensor sizes")
        return EventStream(
            np.concatenate([self._t, other._t]),
            np.concatenate([self._x, other._x]),
            np.concatenate([self._y, other._y]),
            np.concatenate([self._p, other._p]),
            self.width,
            self.height,
            duration=max(self.duration, other.duration),
        )


def load_events(path: str | os.PathLike, width: int, height: int) -> EventStream:
    """Parse a whitespace-separated `t x y p` text file into an EventStream.

    Args:
        path: event file; one event per line, `t` in seconds, `p` in {0, 1}.
            Blank lines and `#` comments are skipped.
        width, height: sensor dimensions used for bounds checking.

    Raises:
        DataError: on a malformed line or out-of-bounds pixel, naming the
            offending 1-based line number.
    """
    ts: list[float] = []
    xs: list[int] = []
    ys: list[int] = []
    ps: list[int] = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4:
                raise DataError(f"{path}: line {lineno}: expected 4 fields, got {len(parts)}")
            try:
                t = float(parts[0])
                x = int(parts[1])
                y = int(parts[2])
                p = int(parts[3])
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: {exc}") from None
            if not (0 <= x < width) or not (0 <= y < height):
                raise DataError(
                    f"{path}: line {lineno}: pixel ({x}, {y}) outside {width}x{height} sensor"
                )
            if p not in (0, 1):
                raise DataError(f"{path}: line {lineno}: polarity must be 0 or 1, got {p}")
            if t < 0:
                raise DataError(f"{path}: line {lineno}: negative timestamp {t}")
            ts.append(t)
            xs.append(x)
            ys.append(y)
            ps.append(p)
    return EventStream(ts, xs, ys, ps, width, height)


@dataclass(frozen=True)
class BinnedEvents:
    """Binary occupancy bins: [T, H, W] when pooled, [T, 2, H, W] otherwise.

    In the unpooled layout the channel index equals the polarity value
    (0 = OFF, 1 = ON).
    """

    dt: float
    data: np.ndarray
    pooled: bool

    def __post_init__(self):
        self.data.setflags(write=False)

    @property
    def n_bins(self) -> int:
        return self.data.shape[0]

    def save(self, path: str | os.PathLike) -> None:
        """Write pooled bins as flat binary with a `T H W dt` header line."""
        if not self.pooled:
            raise ValueError("binary export is defined for pooled bins only")
        T, H, W = self.data.shape
        with open(path, "wb") as fh:
            fh.write(f"{T} {H} {W} {float(self.dt)!r}\n".encode("ascii"))
            fh.write(np.ascontiguousarray(self.data, dtype=np.uint8).tobytes())

    @staticmethod
    def load(path: str | os.PathLike) -> "BinnedEvents":
        with open(path, "rb") as fh:
            header = fh.readline().split()
            if len(header) != 4:
                raise DataError(f"{path}: bad header")
            T, H, W = (int(v) for v in header[:3])
            dt = float(header[3])
            raw = fh.read()
        data = np.frombuffer(raw, dtype=np.uint8)
        if data.size != T * H * W:
            raise DataError(f"{path}: expected {T * H * W} cells, got {data.size}")
        return BinnedEvents(dt=dt, data=data.reshape(T, H, W).copy(), pooled=True)


def bin_events(stream: EventStream, dt: float, pool_polarity: bool = True) -> BinnedEvents:
    """Slice a stream into fixed-width time bins of binary pixel occupancy.

    An event at time t lands in bin floor(t/dt); multiple events in the same
    pixel-bin collapse to a single occupancy. With pool_polarity, ON and OFF
    merge into one channel.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    idx = np.floor(stream.t / dt + _BIN_EPS).astype(np.int64) if len(stream) else np.array([], dtype=np.int64)
    n_bins = int(np.ceil(stream.duration / dt - _BIN_EPS)) if stream.duration > 0 else 0
    if idx.size:
        n_bins = max(n_bins, int(idx.max()) + 1)
    n_bins = max(n_bins, 1)
    if pool_polarity:
        data = np.zeros((n_bins, stream.height, stream.width), dtype=np.uint8)
        data[idx, stream.y, stream.x] = 1
    else:
        data = np.zeros((n_bins, 2, stream.height, stream.width), dtype=np.uint8)
        data[idx, stream.p, stream.y, stream.x] = 1
    return BinnedEvents(dt=float(dt), data=data, pooled=pool_polarity)
