"""Supervised optimization of detector parameters by backpropagation
through the unrolled dynamics with a surrogate spike gradient.

The forward pipeline (stimulus -> events -> correlation filter -> detector
-> decoder) runs in torch with the hard spike threshold replaced, in the
backward pass only, by a fast-sigmoid surrogate. The correlation filter's
neighbor count is discrete and is instead tuned by periodic integer sweeps
on a held batch.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import torch

from .decode import DecodeConfig, DecodeMode, count_estimate_timeline, isi_estimate_timeline
from .events import bin_events
from .metrics import pearson, relative_error
from .simulator import SimulatorConfig, emit_events, gen_edge_stimulus, inject_noise
from .stcf import StcfConfig, stcf_filter
from .tde import TdeKind, TdeParams

#: Velocity sets (px/timestep) for the two encoding ranges.
WIDE_VELOCITIES = (0.1, 0.2, 0.33, 0.5, 1.0)
NARROW_VELOCITIES = tuple(1.0 / u for u in range(39, 24, -1))

#: Edge spacings (px) for the multi-edge robustness task.
EDGE_SPACINGS = (3, 4, 5, 7, 10)


class TrainDivergence(RuntimeError):
    """Raised when the loss turns non-finite during training."""


@dataclass(frozen=True)
class TrainConfig:
    """Optimization and stimulus-generation settings.

    Stimuli are regenerated de novo every epoch: batch_size single- or
    multi-edge sequences with velocities (and spacings) drawn uniformly
    from the configured sets, optionally corrupted by background noise.
    """

    epochs: int = 300
    batch_size: int = 100
    learning_rate: float = 1.0e-2
    reg_lambda: float = 1.0e-3
    surrogate_beta: float = 10.0
    inference_mode: DecodeMode = DecodeMode.COUNT
    velocities: tuple = WIDE_VELOCITIES
    n_edges: int = 1
    spacings: tuple = EDGE_SPACINGS
    noise_rate: float = 0.0
    seed: int = 0
    stcf_search_period: int = 25
    # decoding
    scale: str = "wide"
    count_window: int = 10
    trace_tau_init: float = 5.0
    # detector / sensor
    kind: TdeKind = TdeKind.TDE3
    theta: float = 1.0
    sensor_width: int = 6
    sensor_height: int = 3
    tail: int = 12
    timestep: float = 0.01
    contrast_threshold: float = 0.15
    stcf_window: int = 1
    # initialization: high-activity start (large amplitude, slow decays)
    # so the first batches spike freely; slow-velocity tasks start at the
    # longer timescale their delays imply
    init_w_fac: float = 5.0
    init_p_g: float = 3.0
    init_p_i: float = 3.0
    init_p_v: float = 3.0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")

    def decode_config(self, trace_tau: float | None = None) -> DecodeConfig:
        return DecodeConfig(mode=self.inference_mode, count_window=self.count_window,
                            scale=self.scale,
                            trace_tau=self.trace_tau_init if trace_tau is None else trace_tau)


@dataclass
class TrainHistory:
    """Per-epoch traces plus the final state."""

    loss: list = field(default_factory=list)
    pearson_r: list = field(default_factory=list)
    mean_spikes: list = field(default_factory=list)
    fta: list | None = None
    degenerate: list = field(default_factory=list)
    params: TdeParams | None = None
    stcf: StcfConfig | None = None
    trace_tau: float = 5.0
    kind: TdeKind = TdeKind.TDE3

    def save_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("epoch,loss,pearson_r,mean_spikes,fta,degenerate\n")
            for e in range(len(self.loss)):
                r = self.pearson_r[e]
                f = self.fta[e] if self.fta is not None else ""
                fh.write(f"{e},{self.loss[e]!r},{'' if r is None else repr(r)},"
                         f"{self.mean_spikes[e]!r},{'' if f == '' else repr(f)},"
                         f"{int(self.degenerate[e])}\n")


def surrogate_grad(u, beta: float):
    """Fast-sigmoid surrogate derivative of the spike threshold: 1/(beta|u|+1)^2."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    u = np.asarray(u, dtype=float)
    out = 1.0 / (beta * np.abs(u) + 1.0) ** 2
    return float(out) if out.ndim == 0 else out


class _SpikeFn(torch.autograd.Function):
    """Heaviside spike with fast-sigmoid surrogate in the backward pass."""

    @staticmethod
    def forward(ctx, u, beta):
        ctx.save_for_backward(u)
        ctx.beta = beta
        return (u >= 0).to(u.dtype)

    @staticmethod
    def backward(ctx, grad_output):
        (u,) = ctx.saved_tensors
        return grad_output / (ctx.beta * u.abs() + 1.0) ** 2, None


def run_tde_torch(fac, trig, inh, w_fac, p_g, p_i, p_v, kind: TdeKind,
                  beta: float = 10.0, theta: float = 1.0,
                  relaxed: bool = False):
    """Differentiable unroll of the detector over [B, T] inputs.

    Matches the inference dynamics exactly in the forward pass: the
    facilitator overwrite becomes g*(1-fac) + w_fac*fac and the inhibitor
    reset g*(1-inh), both exact for binary inputs and differentiable in
    the parameters. With relaxed=True the spike is a sigmoid of (V-theta)
    in both passes (smooth everywhere, for gradient checking).

    Returns (spikes [B, T], onsets [B, T] bool); onsets are bookkeeping
    (trigger arriving on positive gain) and carry no gradient.
    """
    B, T = fac.shape
    d_g = torch.sigmoid(p_g)
    d_i = torch.sigmoid(p_i)
    d_v = torch.sigmoid(p_v)
    g = fac.new_zeros(B)
    current = fac.new_zeros(B)
    voltage = fac.new_zeros(B)
    spikes = []
    onsets = []
    for t in range(T):
        g = g * d_g
        impulse = g * trig[:, t]
        onsets.append((trig[:, t] > 0) & (g.detach() > 0))
        g = g * (1 - fac[:, t]) + w_fac * fac[:, t]
        if kind is TdeKind.TDE3:
            g = g * (1 - inh[:, t])
        current = torch.minimum(current * d_i + impulse, w_fac)
        voltage = voltage * d_v + current
        if relaxed:
            s = torch.sigmoid(beta * (voltage - theta))
        else:
            s = _SpikeFn.apply(voltage - theta, beta)
        voltage = voltage * (1 - s)
        spikes.append(s)
    return torch.stack(spikes, dim=1), torch.stack(onsets, dim=1)


def _count_timeline_torch(spikes, onsets, window: int, alpha: float, bias: float):
    """COUNT decode over [B, T]: per onset, spikes in [t, t+window), scaled."""
    B, T = spikes.shape
    csum = torch.cat([spikes.new_zeros(B, 1), spikes.cumsum(dim=1)], dim=1)
    end = torch.clamp(torch.arange(T) + window, max=T)
    counts = csum[:, end] - csum[:, :T]
    vals = bias + alpha * counts
    gate = onsets & (counts.detach() >= 0.5)
    # Hard zero for empty windows, but let their gradient through so a
    # velocity whose spikes were pruned away can recover.
    return torch.where(gate, vals, vals - vals.detach())


def _isi_timeline_torch(spikes, onsets, tau, alpha: float, bias: float,
                        sentinel: float, x0: float = 1.0):
    """ISI decode over [B, T] via the differentiable spike-trace readout."""
    B, T = spikes.shape
    lam = torch.exp(-1.0 / tau)
    z = spikes.new_zeros(B)
    zs = []
    for t in range(T):
        s = spikes[:, t]
        z = (1 - s) * z * lam + s * x0
        zs.append(z)
    trace = torch.stack(zs, dim=1)
    hard = spikes.detach() >= 0.5
    est = spikes.new_zeros(B, T)
    for b in range(B):
        onset_ts = torch.nonzero(onsets[b]).flatten()
        spike_ts = torch.nonzero(hard[b]).flatten()
        for i in range(len(onset_ts)):
            t0 = int(onset_ts[i])
            t_end = int(onset_ts[i + 1]) if i + 1 < len(onset_ts) else T
            seg = spike_ts[(spike_ts >= t0) & (spike_ts < t_end)]
            if len(seg) < 2:
                continue
            t2 = int(seg[1])
            isi = tau * torch.log(x0 / trace[b, t2 - 1]) + 1.0
            if not torch.isfinite(isi) or isi.detach().item() >= sentinel:
                continue
            est[b, t0] = bias + alpha / isi
    return est


def loss_l1_normalized(estimates, truths):
    """Mean |est/max(est) - truth/max(truth)| over samples.

    An all-zero side falls back to dividing by 1 (the training loop flags
    such batches as degenerate). Returns a tensor when given tensors, a
    float otherwise.
    """
    tensor_in = torch.is_tensor(estimates)
    est = torch.as_tensor(estimates, dtype=torch.float64).reshape(-1)
    tru = torch.as_tensor(truths, dtype=torch.float64).reshape(-1)
    if est.shape != tru.shape:
        raise ValueError("estimates and truths must have equal length")
    max_e = est.max() if est.numel() and est.detach().max().item() > 0 else est.new_ones(())
    max_t = tru.max() if tru.numel() and tru.detach().max().item() > 0 else tru.new_ones(())
    loss = (est / max_e - tru / max_t).abs().mean()
    return loss if tensor_in else float(loss)


def loss_regularizer(spike_counts, lam: float):
    """Sparsity penalty: lam * mean(count^2)."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    tensor_in = torch.is_tensor(spike_counts)
    counts = torch.as_tensor(spike_counts, dtype=torch.float64)
    out = lam * (counts ** 2).mean()
    return out if tensor_in else float(out)


def fta(estimates_timeline, truth_timeline) -> float:
    """Fraction of estimate mass lying on the stimulus.

    An estimate counts as stimulus-caused when its timestep falls within
    +/-1 of a nonzero truth timestep. Returns 1.0 for an all-zero estimate
    timeline. Accepts [T] or [B, T] (tolerance applied along time).
    """
    est = np.atleast_2d(np.asarray(estimates_timeline, dtype=float))
    tru = np.atleast_2d(np.asarray(truth_timeline, dtype=float))
    if est.shape != tru.shape:
        raise ValueError("timelines must have equal shape")
    caused = tru > 0
    widened = caused.copy()
    widened[:, 1:] |= caused[:, :-1]
    widened[:, :-1] |= caused[:, 1:]
    total = est.sum()
    if total == 0:
        return 1.0
    return float(est[widened].sum() / total)


# --------------------------------------------------------------------------
# Batch generation (shared by the torch training path and numpy evaluation)

@dataclass
class EdgeBatch:
    """Tap sequences and ground truth for a batch of edge stimuli.

    fac/trig/inh: [B, T] uint8 inputs of the centered detector (taps at
    columns c-1, c, c+1 of the middle row, c = width//2), zero-padded to
    the longest stimulus. truth: [B, T] per-timestep true velocity.
    arrivals: [B, n_edges] frame of each edge at the trigger tap.
    """

    fac: np.ndarray
    trig: np.ndarray
    inh: np.ndarray
    truth: np.ndarray
    arrivals: np.ndarray
    velocities: np.ndarray


def _gen_samples(rng: np.random.Generator, cfg: TrainConfig) -> list:
    """Generate raw (pre-filter) binned stimuli for one batch."""
    sim = SimulatorConfig(contrast_threshold=cfg.contrast_threshold,
                          timestep=cfg.timestep)
    samples = []
    for _ in range(cfg.batch_size):
        v = float(cfg.velocities[rng.integers(len(cfg.velocities))])
        spacing = float(cfg.spacings[rng.integers(len(cfg.spacings))]) if cfg.n_edges > 1 else 0.0
        stim = gen_edge_stimulus(v, cfg.n_edges, spacing, cfg.sensor_width,
                                 cfg.sensor_height, int(rng.integers(2 ** 31)), tail=cfg.tail)
        stream = emit_events(stim, sim)
        stream = inject_noise(stream, cfg.noise_rate, int(rng.integers(2 ** 31)))
        binned = bin_events(stream, cfg.timestep, pool_polarity=True)
        arrivals = np.flatnonzero(stim.velocity_truth)
        if len(arrivals) != cfg.n_edges:
            raise RuntimeError("edge arrivals must be distinct frames")
        samples.append((binned, stim.velocity_truth, arrivals, v))
    return samples


def _assemble_batch(samples, stcf_cfg: StcfConfig, cfg: TrainConfig) -> EdgeBatch:
    """Filter, extract detector taps, and pad a sample list into arrays."""
    B = len(samples)
    T = max(s[0].n_bins for s in samples)
    fac = np.zeros((B, T), dtype=np.uint8)
    trig = np.zeros((B, T), dtype=np.uint8)
    inh = np.zeros((B, T), dtype=np.uint8)
    truth = np.zeros((B, T))
    arrivals = np.zeros((B, cfg.n_edges), dtype=np.int64)
    vels = np.zeros(B)
    row = cfg.sensor_height // 2
    col = cfg.sensor_width // 2
    for b, (binned, tru, arr, v) in enumerate(samples):
        occ = stcf_filter(binned, stcf_cfg).data
        n = occ.shape[0]
        fac[b, :n] = occ[:, row, col]
        trig[b, :n] = occ[:, row, col + 1]
        inh[b, :n] = occ[:, row, col - 1]
        truth[b, :n] = tru
        arrivals[b] = arr
        vels[b] = v
    return EdgeBatch(fac=fac, trig=trig, inh=inh, truth=truth,
                     arrivals=arrivals, velocities=vels)


def _forward_loss(batch: EdgeBatch, w_fac, p_g, p_i, p_v, tau, cfg: TrainConfig,
                  alpha: float, bias: float, sentinel: float, with_reg: bool = True):
    """Forward pass and total loss for one assembled batch."""
    fac = torch.from_numpy(batch.fac.astype(np.float64))
    trig = torch.from_numpy(batch.trig.astype(np.float64))
    inh = torch.from_numpy(batch.inh.astype(np.float64))
    spikes, onsets = run_tde_torch(fac, trig, inh, w_fac, p_g, p_i, p_v,
                                   cfg.kind, beta=cfg.surrogate_beta, theta=cfg.theta)
    if cfg.inference_mode is DecodeMode.COUNT:
        timeline = _count_timeline_torch(spikes, onsets, cfg.count_window, alpha, bias)
    else:
        timeline = _isi_timeline_torch(spikes, onsets, tau, alpha, bias, sentinel)
    if cfg.noise_rate > 0:
        est_v = timeline.reshape(-1)
        tru_v = torch.from_numpy(batch.truth).reshape(-1)
    else:
        idx = torch.from_numpy(batch.arrivals)
        est_v = timeline.gather(1, idx).reshape(-1)
        tru_v = torch.from_numpy(
            np.repeat(batch.velocities, batch.arrivals.shape[1]))
    counts = spikes.sum(dim=1)
    loss = loss_l1_normalized(est_v, tru_v)
    if with_reg:
        loss = loss + loss_regularizer(counts, cfg.reg_lambda)
    return loss, est_v, tru_v, counts, timeline


def _sweep_stcf(held, w_fac, p_g, p_i, p_v, tau, cfg: TrainConfig,
                alpha: float, bias: float, sentinel: float) -> StcfConfig:
    """Best-of integer sweep of the neighbor requirement on a held batch.

    Candidates are judged by the velocity-fit term alone; ties resolve to
    the smallest n. A filter that silences the detector cannot encode
    velocity no matter how low its loss scores (silence beats a
    half-trained fit, and adopting it kills every gradient, freezing
    learning), so silenced candidates compete only when every candidate
    is silenced. Under per-arrival targets "silenced" means no response
    at any arrival; under per-timestep timeline targets stray noise
    spikes keep an otherwise signal-erasing filter technically nonzero,
    so there the bar is a response at at least half the truth arrivals.
    """
    best = None  # (unresponsive, loss, n)
    with torch.no_grad():
        for n in range(9):
            trial = StcfConfig(n_required=n, window=cfg.stcf_window)
            tb = _assemble_batch(held, trial, cfg)
            tl, est_v, tru_v, *_ = _forward_loss(tb, w_fac, p_g, p_i, p_v, tau, cfg,
                                                 alpha, bias, sentinel, with_reg=False)
            at_truth = est_v.detach()[tru_v > 0]
            hit = float((at_truth != 0).double().mean()) if at_truth.numel() else 0.0
            unresponsive = hit < 0.5 if cfg.noise_rate > 0 else hit == 0.0
            key = (unresponsive, float(tl))
            if best is None or key < (best[0], best[1] - 1.0e-12):
                best = (*key, n)
    return StcfConfig(n_required=best[2], window=cfg.stcf_window)


def train_tde(cfg: TrainConfig) -> tuple[TdeParams, StcfConfig, TrainHistory]:
    """Optimize detector parameters on regenerated stimulus batches.

    Gradient steps update {w_fac, p_g, p_i, p_v} (and the trace tau in ISI
    mode) under the normalized-L1 velocity loss plus the spike-count
    regularizer; the correlation-filter neighbor requirement is updated by
    a best-of integer sweep on a held batch every stcf_search_period
    epochs. Raises TrainDivergence if the loss turns NaN.
    """
    torch.manual_seed(cfg.seed)
    w_fac = torch.tensor(float(cfg.init_w_fac), dtype=torch.float64, requires_grad=True)
    p_g = torch.tensor(float(cfg.init_p_g), dtype=torch.float64, requires_grad=True)
    p_i = torch.tensor(float(cfg.init_p_i), dtype=torch.float64, requires_grad=True)
    p_v = torch.tensor(float(cfg.init_p_v), dtype=torch.float64, requires_grad=True)
    tau = torch.tensor(float(cfg.trace_tau_init), dtype=torch.float64, requires_grad=True)
    trainable = [w_fac, p_g, p_i, p_v]
    if cfg.inference_mode is DecodeMode.ISI:
        trainable.append(tau)
    opt = torch.optim.Adam(trainable, lr=cfg.learning_rate)

    ref_cfg = cfg.decode_config()
    alpha, bias = ref_cfg.coefficients()
    sentinel = ref_cfg.isi_sentinel
    stcf_cfg = StcfConfig(n_required=0, window=cfg.stcf_window)
    held = _gen_samples(np.random.default_rng([cfg.seed, 999]), cfg) if cfg.epochs else None

    history = TrainHistory(fta=[] if cfg.noise_rate > 0 else None, kind=cfg.kind)
    for epoch in range(cfg.epochs):
        rng = np.random.default_rng([cfg.seed, 1000 + epoch])
        batch = _assemble_batch(_gen_samples(rng, cfg), stcf_cfg, cfg)
        loss, est_v, tru_v, counts, timeline = _forward_loss(
            batch, w_fac, p_g, p_i, p_v, tau, cfg, alpha, bias, sentinel)
        if not torch.isfinite(loss):
            raise TrainDivergence(
                f"loss diverged at epoch {epoch}: w_fac={w_fac.item()!r} "
                f"p_g={p_g.item()!r} p_i={p_i.item()!r} p_v={p_v.item()!r}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        with torch.no_grad():
            w_fac.clamp_(min=1.0e-2)  # keep the gain amplitude positive

        est_np = est_v.detach().numpy()
        tru_np = tru_v.detach().numpy()
        history.loss.append(loss.item())
        history.pearson_r.append(pearson(est_np, tru_np) if est_np.size >= 2 else None)
        history.mean_spikes.append(float(counts.detach().mean()))
        history.degenerate.append(bool(est_np.max() == 0) if est_np.size else True)
        if cfg.noise_rate > 0:
            history.fta.append(fta(timeline.detach().numpy(), batch.truth))

        if cfg.stcf_search_period > 0 and (epoch + 1) % cfg.stcf_search_period == 0:
            stcf_cfg = _sweep_stcf(held, w_fac, p_g, p_i, p_v, tau, cfg,
                                   alpha, bias, sentinel)

    params = TdeParams(w_fac=w_fac.item(), p_g=p_g.item(), p_i=p_i.item(),
                       p_v=p_v.item(), theta=cfg.theta)
    history.params = params
    history.stcf = stcf_cfg
    history.trace_tau = tau.item()
    return params, stcf_cfg, history


def evaluate_edge_task(params: TdeParams, stcf_cfg: StcfConfig, decode_cfg: DecodeConfig,
                       cfg: TrainConfig, n_per_velocity: int = 20,
                       seed: int = 12345) -> dict:
    """Inference on a fresh test set; per-edge estimates at truth frames.

    Runs the numpy pipeline with the given parameters over n_per_velocity
    stimuli per configured velocity. Returns per-edge estimate/truth
    arrays, the pooled fraction-of-true-activity, correlation, and (for
    positive truths) the mean relative error.
    """
    from .tde import tde_run_batch

    rng = np.random.default_rng(seed)
    eval_cfg_samples = []
    for v in cfg.velocities:
        for _ in range(n_per_velocity):
            sim = SimulatorConfig(contrast_threshold=cfg.contrast_threshold,
                                  timestep=cfg.timestep)
            spacing = float(cfg.spacings[rng.integers(len(cfg.spacings))]) if cfg.n_edges > 1 else 0.0
            stim = gen_edge_stimulus(float(v), cfg.n_edges, spacing, cfg.sensor_width,
                                     cfg.sensor_height, int(rng.integers(2 ** 31)),
                                     tail=cfg.tail)
            stream = emit_events(stim, sim)
            stream = inject_noise(stream, cfg.noise_rate, int(rng.integers(2 ** 31)))
            binned = bin_events(stream, cfg.timestep, pool_polarity=True)
            arrivals = np.flatnonzero(stim.velocity_truth)
            eval_cfg_samples.append((binned, stim.velocity_truth, arrivals, float(v)))
    batch = _assemble_batch(eval_cfg_samples, stcf_cfg,
                            _replace_batchsize(cfg, len(eval_cfg_samples)))
    spikes, onsets = tde_run_batch(batch.fac.T, batch.trig.T, batch.inh.T,
                                   params, cfg.kind)
    if decode_cfg.mode is DecodeMode.COUNT:
        timeline = count_estimate_timeline(spikes, onsets, decode_cfg)
    else:
        timeline = isi_estimate_timeline(spikes, onsets, decode_cfg)
    timeline = timeline.T  # [B, T]
    est = timeline[np.arange(len(eval_cfg_samples))[:, None], batch.arrivals].reshape(-1)
    truth = np.repeat(batch.velocities, cfg.n_edges)
    out = {
        "est": est,
        "truth": truth,
        "pearson_r": pearson(est, truth),
        "fta": fta(timeline, batch.truth),
        "total_spikes": int(spikes.sum()),
        "mean_spikes": float(spikes.sum() / len(eval_cfg_samples)),
        "relative_error": relative_error(est, truth) if est.max() > 0 else None,
    }
    return out


def _replace_batchsize(cfg: TrainConfig, n: int) -> TrainConfig:
    from dataclasses import replace
    return replace(cfg, batch_size=n)


# --------------------------------------------------------------------------
# Parameter serialization

_PARAMS_VERSION = 1


def save_params(path: str | os.PathLike, params: TdeParams, stcf_cfg: StcfConfig,
                trace_tau: float = 5.0, kind: TdeKind = TdeKind.TDE3) -> None:
    """Write trained parameters as a versioned name = value text file."""
    lines = [
        f"version = {_PARAMS_VERSION}",
        f"kind = {kind.value}",
        f"w_fac = {float(params.w_fac)!r}",
        f"p_g = {float(params.p_g)!r}",
        f"p_i = {float(params.p_i)!r}",
        f"p_v = {float(params.p_v)!r}",
        f"theta = {float(params.theta)!r}",
        f"trace_tau = {float(trace_tau)!r}",
        f"stcf_n = {stcf_cfg.n_required}",
        f"stcf_window = {stcf_cfg.window}",
    ]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_params(path: str | os.PathLike) -> tuple[TdeParams, StcfConfig, dict]:
    """Read a parameters file; returns (params, stcf config, extras).

    extras carries 'kind' (TdeKind) and 'trace_tau'.
    """
    values: dict[str, str] = {}
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    if values.get("version") != str(_PARAMS_VERSION):
        raise ValueError(f"{path}: unsupported params version {values.get('version')}")
    params = TdeParams(w_fac=float(values["w_fac"]), p_g=float(values["p_g"]),
                       p_i=float(values["p_i"]), p_v=float(values["p_v"]),
                       theta=float(values["theta"]))
    stcf_cfg = StcfConfig(n_required=int(values["stcf_n"]), window=int(values["stcf_window"]))
    extras = {"kind": TdeKind(values["kind"]), "trace_tau": float(values["trace_tau"])}
    return params, stcf_cfg, extras
