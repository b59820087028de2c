"""Event-based motion detection with 2- and 3-point time-difference encoders."""

from .decode import (DecodeConfig, DecodeMode, VelocityEstimate, decode_isi,
                     decode_spike_count, isi_from_trace, scale_count, scale_isi,
                     spike_trace)
from .events import (BinnedEvents, DataError, Event, EventStream, Polarity,
                     bin_events, load_events)
from .flownet import (DetectorGrid, FlowField, ImuSample, build_retina,
                      imu_ground_truth, load_imu, run_flow)
from .metrics import MetricsReport, aae, aee_raee, dsi, pearson, relative_error
from .simulator import (SimulatorConfig, Stimulus, emit_events, gen_edge_stimulus,
                        gen_texture_stimulus, inject_noise)
from .stcf import StcfConfig, stcf_filter
from .tde import TdeKind, TdeOutput, TdeParams, TdeState, tde_run, tde_run_batch, tde_step
from .train import (TrainConfig, TrainDivergence, TrainHistory, evaluate_edge_task,
                    load_params, save_params, train_tde)

__version__ = "0.1.0"

__all__ = [
    "BinnedEvents", "DataError", "DecodeConfig", "DecodeMode", "DetectorGrid",
    "Event", "EventStream", "FlowField", "ImuSample", "MetricsReport", "Polarity",
    "SimulatorConfig", "StcfConfig", "Stimulus", "TdeKind", "TdeOutput", "TdeParams",
    "TdeState", "TrainConfig", "TrainDivergence", "TrainHistory", "aae", "aee_raee",
    "bin_events", "build_retina", "decode_isi", "decode_spike_count", "dsi",
    "emit_events", "evaluate_edge_task", "gen_edge_stimulus", "gen_texture_stimulus",
    "imu_ground_truth", "inject_noise", "isi_from_trace", "load_events", "load_imu",
    "load_params", "pearson", "relative_error", "run_flow", "save_params",
    "scale_count", "scale_isi", "spike_trace", "stcf_filter", "tde_run",
    "tde_run_batch", "tde_step", "train_tde",
]
