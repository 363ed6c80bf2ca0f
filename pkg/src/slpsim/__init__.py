"""Symbol-level precoding schemes and benchmarks for the multiuser MISO downlink."""

from .channel import (
    ChannelRealization,
    RankDeficientChannel,
    channel_rng,
    lift_real,
    lift_vector,
    pseudo_inverse,
    sample_channel,
    unlift_vector,
)
from .constellation import (
    Constellation,
    build_psk,
    dpcir_contains,
    dpcir_matrix,
    ml_detect,
)
from .harness import (
    ACCURACY_SINR_DB,
    AccuracyRecord,
    ConfigError,
    ScenarioConfig,
    SerRecord,
    SweepRecord,
    THREADS_ENV_VAR,
    TimingRecord,
    qpsk_ser_closed_form,
    resolve_workers,
    run_accuracy,
    run_power_sweep,
    run_ser,
    run_timing,
    timing_ratio,
)
from .nnls import NnlsProblem, NnlsSolution, nnls_oracle, nnls_solve
from .precoders import (
    CF_SLP,
    KktResiduals,
    OPT_SLP,
    PrecodeResult,
    SCHEMES,
    SlotProblem,
    ZFBF,
    active_set_accuracy,
    build_slot,
    cf_slp,
    opt_slp,
    optimal_inactive_mask,
    predicted_inactive_mask,
    receive_points,
    verify_kkt,
    zfbf,
)

__version__ = "0.1.0"

__all__ = [
    "ACCURACY_SINR_DB",
    "AccuracyRecord",
    "CF_SLP",
    "ChannelRealization",
    "ConfigError",
    "Constellation",
    "KktResiduals",
    "NnlsProblem",
    "NnlsSolution",
    "OPT_SLP",
    "PrecodeResult",
    "RankDeficientChannel",
    "SCHEMES",
    "ScenarioConfig",
    "SerRecord",
    "SlotProblem",
    "SweepRecord",
    "THREADS_ENV_VAR",
    "TimingRecord",
    "ZFBF",
    "active_set_accuracy",
    "build_psk",
    "build_slot",
    "cf_slp",
    "channel_rng",
    "dpcir_contains",
    "dpcir_matrix",
    "lift_real",
    "lift_vector",
    "ml_detect",
    "nnls_oracle",
    "nnls_solve",
    "opt_slp",
    "optimal_inactive_mask",
    "predicted_inactive_mask",
    "pseudo_inverse",
    "qpsk_ser_closed_form",
    "receive_points",
    "resolve_workers",
    "run_accuracy",
    "run_power_sweep",
    "run_ser",
    "run_timing",
    "sample_channel",
    "timing_ratio",
    "unlift_vector",
    "verify_kkt",
    "zfbf",
]
