"""Command-line orchestration: simulate / train / dsi / flow / render.

Every subcommand is deterministic given its flags and seed. Exit codes:
0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np
from PIL import Image

from .decode import DecodeConfig, DecodeMode
from .events import BinnedEvents, DataError, EventStream, bin_events, load_events
from .flownet import (DEFAULT_BAND_SPACINGS, FlowField, build_retina, imu_ground_truth,
                      load_flow_binary, load_imu, run_flow, save_flow_binary, save_flow_csv)
from .metrics import MetricsReport, aae, aee_raee, dsi, pearson
from .simulator import (DIRECTIONS, SimulatorConfig, TEXTURE_VELOCITIES, emit_events,
                        gen_edge_stimulus, gen_texture_stimulus, inject_noise)
from .stcf import StcfConfig, stcf_filter
from .tde import TdeKind, TdeParams, logit, tde_run
from .train import (EDGE_SPACINGS, NARROW_VELOCITIES, TrainConfig, TrainDivergence,
                    WIDE_VELOCITIES, load_params, save_params, train_tde)

OUT_DIR_ENV = "TDEFLOW_OUT"

# 10-fold parameter ranges swept by the direction-selectivity protocol.
DSI_W_FAC_RANGE = (2.0, 20.0)
DSI_TAU_RANGE = (2.0, 20.0)


# --------------------------------------------------------------------------
# Direction-selectivity protocol

def dsi_protocol(rounds: int = 40, stimuli_per_round: int = 200, seed: int = 0,
                 bar_width: int = 3) -> dict:
    """Random-parameter texture sweep of both detector variants.

    Each round draws detector parameters log-uniformly over a 10-fold
    range (w_fac and the three decay time constants), then runs a
    left-right-tuned TDE-2 and TDE-3 over random bar textures moving in
    the four cardinal directions. Spikes accumulate per direction; the
    round's DSI is the preferred-direction share. Textures use whole
    >= 3 px bars so null-direction motion always reaches the inhibitor a
    full timestep ahead of the next trigger; a partial trailing bar would
    put both in one bin and let a spike through.

    Returns {"tde2": [rounds], "tde3": [rounds]} of per-round DSI values.
    """
    sim = SimulatorConfig()
    length = -(-80 // bar_width) * bar_width  # whole bars only
    out = {"tde2": np.zeros(rounds), "tde3": np.zeros(rounds)}
    for rnd in range(rounds):
        rng = np.random.default_rng([seed, rnd])
        w_fac = float(10 ** rng.uniform(*np.log10(DSI_W_FAC_RANGE)))
        taus = 10 ** rng.uniform(*np.log10(DSI_TAU_RANGE), size=3)
        params = TdeParams.from_time_constants(w_fac, *map(float, taus))
        counts = {k: {d: 0 for d in DIRECTIONS} for k in ("tde2", "tde3")}
        for _ in range(stimuli_per_round):
            direction = DIRECTIONS[rng.integers(len(DIRECTIONS))]
            velocity = TEXTURE_VELOCITIES[rng.integers(len(TEXTURE_VELOCITIES))]
            grey = float(rng.uniform(0.0, 0.8))
            stim = gen_texture_stimulus(grey, direction, velocity,
                                        int(rng.integers(2 ** 31)), bar_width=bar_width,
                                        length=length)
            occ = bin_events(emit_events(stim, sim), sim.timestep).data
            fac, trig, inh = occ[:, 1, 1], occ[:, 1, 2], occ[:, 1, 0]
            for kind in (TdeKind.TDE2, TdeKind.TDE3):
                res = tde_run(fac, trig, inh, params, kind)
                counts[kind.value][direction] += int(res.spikes.sum())
        for kind in ("tde2", "tde3"):
            c = counts[kind]
            value = dsi((c["L-R"], c["R-L"], c["T-B"], c["B-T"]))
            out[kind][rnd] = np.nan if value is None else value
    return out


# --------------------------------------------------------------------------
# Flow rendering

def render_flow_png(flow: FlowField, bin_index: int, v_max: float, path) -> None:
    """Color-code one flow bin: hue = direction (rightward = red, CCW
    positive), brightness = clamped magnitude; zero flow is black."""
    if not 0 <= bin_index < flow.v.shape[0]:
        raise ValueError(f"bin {bin_index} out of range [0, {flow.v.shape[0]})")
    if v_max <= 0:
        raise ValueError("v_max must be positive")
    v = flow.v[bin_index]
    angle = np.arctan2(v[:, :, 1], v[:, :, 0])
    hue = (np.mod(angle, 2 * np.pi) / (2 * np.pi) * 255.0).astype(np.uint8)
    mag = np.hypot(v[:, :, 0], v[:, :, 1])
    value = (np.minimum(mag / v_max, 1.0) * 255.0).astype(np.uint8)
    hsv = np.stack([hue, np.full_like(hue, 255), value], axis=-1)
    Image.fromarray(hsv, mode="HSV").convert("RGB").save(path, format="PNG")


# --------------------------------------------------------------------------
# Subcommand implementations

def _out_dir(args) -> str:
    d = args.out_dir or os.environ.get(OUT_DIR_ENV, ".")
    os.makedirs(d, exist_ok=True)
    return d


def _write_events(stream: EventStream, path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for i in range(len(stream)):
            fh.write(f"{float(stream.t[i])!r} {stream.x[i]} {stream.y[i]} {stream.p[i]}\n")


def _cmd_simulate(args) -> int:
    sim = SimulatorConfig(contrast_threshold=args.threshold, timestep=args.timestep)
    if args.stimulus == "edge":
        stim = gen_edge_stimulus(args.velocity, args.n_edges, args.spacing,
                                 args.width, args.height, args.seed, tail=args.tail)
    else:
        stim = gen_texture_stimulus(args.grey_fraction, args.direction, args.velocity,
                                    args.seed, bar_width=args.bar_width,
                                    width=args.width, height=args.height)
    stream = emit_events(stim, sim)
    stream = inject_noise(stream, args.noise_rate, args.seed + 1)
    out = _out_dir(args)
    _write_events(stream, os.path.join(out, "events.txt"))
    with open(os.path.join(out, "truth.csv"), "w", encoding="ascii") as fh:
        fh.write("timestep,velocity\n")
        for t, v in enumerate(stim.velocity_truth):
            fh.write(f"{t},{float(v)!r}\n")
    print(f"wrote {len(stream)} events over {stim.n_frames} frames to {out}")
    return 0


# The narrow preset starts the decays at the task's own timescales (current
# decay ~ count window, gate decay reaching across 25-40 step delays) and
# turns the count regularizer off: slow edges are told apart by one-spike
# count differences that a count penalty would compress away.
TASK_PRESETS = {
    "wide": dict(velocities=WIDE_VELOCITIES, n_edges=1, scale="wide",
                 count_window=12, tail=12, epochs=500),
    "narrow": dict(velocities=NARROW_VELOCITIES, n_edges=1, scale="narrow",
                   count_window=40, tail=160, reg_lambda=0.0, learning_rate=1.0e-3,
                   init_w_fac=10.4, init_p_g=logit(0.900), init_p_i=logit(0.980),
                   init_p_v=logit(0.895)),
    "spatial": dict(velocities=WIDE_VELOCITIES, n_edges=2, spacings=EDGE_SPACINGS,
                    scale="wide", count_window=10, tail=12, epochs=500),
}


def _cmd_train(args) -> int:
    task = dict(TASK_PRESETS[args.task])
    lr = task.pop("learning_rate", 1.0e-2)
    reg = task.pop("reg_lambda", 1.0e-3)
    epochs = task.pop("epochs", 300)
    cfg = TrainConfig(epochs=epochs if args.epochs is None else args.epochs,
                      batch_size=args.batch_size,
                      learning_rate=lr if args.lr is None else args.lr,
                      reg_lambda=reg if args.reg_lambda is None else args.reg_lambda,
                      inference_mode=DecodeMode(args.mode), noise_rate=args.noise_rate,
                      seed=args.seed, kind=TdeKind(args.kind), **task)
    params, stcf_cfg, history = train_tde(cfg)
    out = _out_dir(args)
    save_params(os.path.join(out, "params.txt"), params, stcf_cfg,
                trace_tau=history.trace_tau, kind=cfg.kind)
    history.save_csv(os.path.join(out, "history.csv"))
    final_r = history.pearson_r[-1] if history.pearson_r else None
    print(f"trained {args.task}/{args.mode} for {cfg.epochs} epochs: "
          f"loss {history.loss[-1]:.4f}, r {'n/a' if final_r is None else f'{final_r:.3f}'}, "
          f"stcf n={stcf_cfg.n_required}")
    return 0


def _cmd_dsi(args) -> int:
    result = dsi_protocol(rounds=args.rounds, stimuli_per_round=args.stimuli,
                          seed=args.seed, bar_width=args.bar_width)
    out = _out_dir(args)
    with open(os.path.join(out, "dsi.csv"), "w", encoding="ascii") as fh:
        fh.write("round,kind,dsi\n")
        for kind in ("tde2", "tde3"):
            for rnd, val in enumerate(result[kind]):
                fh.write(f"{rnd},{kind},{float(val)!r}\n")
    for kind in ("tde2", "tde3"):
        vals = result[kind]
        print(f"{kind}: mean DSI {np.nanmean(vals):.4f} +/- {np.nanstd(vals):.4f} "
              f"(min {np.nanmin(vals):.4f})")
    return 0


def _parse_int_list(text: str) -> tuple:
    return tuple(int(v) for v in text.split(","))


def _cmd_flow(args) -> int:
    params, stcf_cfg, extras = load_params(args.params)
    stream = load_events(args.events, args.width, args.height)
    binned = bin_events(stream, args.dt, pool_polarity=True)
    binned = stcf_filter(binned, stcf_cfg)
    grid = build_retina(args.width, args.height, _parse_int_list(args.spacings),
                        params=params, kind=extras["kind"])
    decode_cfg = DecodeConfig(mode=DecodeMode(args.mode), count_window=args.count_window,
                              scale=args.scale, trace_tau=extras["trace_tau"])
    field, stats = run_flow(binned, grid, decode_cfg)
    out = _out_dir(args)
    save_flow_binary(field, os.path.join(out, "flow.bin"))
    save_flow_csv(field, os.path.join(out, "flow.csv"))

    per_dir = stats["per_direction"]
    frac_pd = (max(per_dir.values()) / stats["total_spikes"]) if stats["total_spikes"] else None
    report_fields = dict(total_spikes=stats["total_spikes"], fraction_spikes_pd=frac_pd)
    if args.imu:
        samples = load_imu(args.imu, columns=tuple(_parse_int_list(args.imu_columns)),
                           units=args.imu_units)
        center = tuple(float(v) for v in args.imu_center.split(","))
        gt = imu_ground_truth(samples, args.width, args.height, args.dt, center,
                              n_bins=field.v.shape[0])
        ang = aae(field, gt)
        ep = aee_raee(field, gt)
        mask = field.valid & gt.valid
        est_mag = np.linalg.norm(field.v[mask], axis=1)
        gt_mag = np.linalg.norm(gt.v[mask], axis=1)
        r = pearson(est_mag, gt_mag) if est_mag.size >= 2 else None
        report_fields.update(
            mean_aae_deg=None if ang is None else ang[0],
            std_aae_deg=None if ang is None else ang[1],
            mean_aee=ep[0], std_aee=ep[1], mean_raee=ep[2], std_raee=ep[3],
            pearson_r=r)
    report = MetricsReport(**report_fields)
    with open(os.path.join(out, "metrics.txt"), "w", encoding="ascii") as fh:
        fh.write(report.to_text())
    print(report.to_text(), end="")
    return 0


def _cmd_render(args) -> int:
    field = load_flow_binary(args.flow)
    out = _out_dir(args)
    path = os.path.join(out, f"flow_bin{args.bin:04d}.png")
    render_flow_png(field, args.bin, args.vmax, path)
    print(f"wrote {path}")
    return 0


# --------------------------------------------------------------------------
# Parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tdeflow",
                                     description="Time-difference-encoder motion pipelines")
    parser.add_argument("--config", help="key = value defaults file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a stimulus and write events + truth")
    p.add_argument("--stimulus", choices=("edge", "texture"), default="edge")
    p.add_argument("--velocity", type=float, default=0.5)
    p.add_argument("--n-edges", type=int, default=1)
    p.add_argument("--spacing", type=float, default=3.0)
    p.add_argument("--width", type=int, default=6)
    p.add_argument("--height", type=int, default=3)
    p.add_argument("--direction", choices=DIRECTIONS, default="L-R")
    p.add_argument("--grey-fraction", type=float, default=0.3)
    p.add_argument("--bar-width", type=int, default=2)
    p.add_argument("--tail", type=int, default=12)
    p.add_argument("--noise-rate", type=float, default=0.0)
    p.add_argument("--timestep", type=float, default=0.01)
    p.add_argument("--threshold", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("train", help="train detector parameters on synthetic stimuli")
    p.add_argument("--task", choices=tuple(TASK_PRESETS), default="wide")
    p.add_argument("--mode", choices=("count", "isi"), default="count")
    p.add_argument("--epochs", type=int, default=None, help="default set per task")
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--lr", type=float, default=None, help="default set per task")
    p.add_argument("--reg-lambda", type=float, default=None, help="default set per task")
    p.add_argument("--noise-rate", type=float, default=0.0)
    p.add_argument("--kind", choices=("tde2", "tde3"), default="tde3")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("dsi", help="random-parameter direction-selectivity sweep")
    p.add_argument("--rounds", type=int, default=40)
    p.add_argument("--stimuli", type=int, default=200)
    p.add_argument("--bar-width", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir")
    p.set_defaults(func=_cmd_dsi)

    p = sub.add_parser("flow", help="run a detector grid over an event file")
    p.add_argument("--events", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--spacings", default=",".join(str(s) for s in DEFAULT_BAND_SPACINGS))
    p.add_argument("--mode", choices=("count", "isi"), default="count")
    p.add_argument("--scale", choices=("wide", "narrow"), default="wide")
    p.add_argument("--count-window", type=int, default=5)
    p.add_argument("--imu")
    p.add_argument("--imu-columns", default="0,1,2,3")
    p.add_argument("--imu-units", choices=("deg", "rad"), default="deg")
    p.add_argument("--imu-center", default="120,90")
    p.add_argument("--out-dir")
    p.set_defaults(func=_cmd_flow)

    p = sub.add_parser("render", help="color-code one bin of a flow file as PNG")
    p.add_argument("--flow", required=True)
    p.add_argument("--bin", type=int, default=0)
    p.add_argument("--vmax", type=float, required=True)
    p.add_argument("--out-dir")
    p.set_defaults(func=_cmd_render)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Read `key = value` lines and fold them in as parser defaults."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise ValueError("--config requires a path")
    path = argv[idx + 1]
    overrides = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise DataError(f"{path}: line {lineno}: expected key = value")
            overrides[key.strip().replace("-", "_")] = val.strip()
    for subparser in parser._subparsers._group_actions[0].choices.values():  # noqa: SLF001
        applicable = {}
        for act in subparser._actions:  # noqa: SLF001
            if act.dest in overrides:
                raw = overrides[act.dest]
                applicable[act.dest] = act.type(raw) if callable(act.type) else raw
        if applicable:
            subparser.set_defaults(**applicable)
    return argv


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    except (OSError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (TrainDivergence, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
