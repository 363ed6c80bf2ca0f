"""Monte-Carlo benchmark harness.

Runs the three schemes over many channel realizations and symbol slots and
aggregates transmit power, support-prediction accuracy, per-slot timing
and symbol error rates.  Randomness is organized per channel realization:
realization c of a run with seed s draws everything it needs (channel
entries, symbol indices, receive noise) from a counter-based stream keyed
on (s, c), so results are bit-reproducible and independent of how
realizations are distributed over workers.  Worker partials are merged in
realization order for the same reason.

All schemes inside one run consume identical channel and symbol streams,
so scheme comparisons are paired.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .channel import channel_rng, sample_channel
from .constellation import Constellation, build_psk
from .nnls import NnlsProblem, nnls_solve
from .precoders import (
    CF_SLP,
    OPT_SLP,
    SCHEMES,
    ZFBF,
    active_set_accuracy,
    build_slot,
    cf_slp,
    opt_slp,
    optimal_inactive_mask,
    predicted_inactive_mask,
    receive_points,
    zfbf,
    _SIGN_ZERO_TOL,
)

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "SweepRecord",
    "AccuracyRecord",
    "TimingRecord",
    "SerRecord",
    "run_power_sweep",
    "run_accuracy",
    "run_timing",
    "run_ser",
    "timing_ratio",
    "qpsk_ser_closed_form",
    "resolve_workers",
]

THREADS_ENV_VAR = "SLP_THREADS"

# single-slot estimates below this are batched 100 slots per timer read
_TIMER_RESOLUTION_FLOOR = 10e-6
_TIMER_BATCH = 100
_TIMING_WARMUP = 20


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the offending key."""


_CONFIG_ALIASES = {"M": "modulation_order", "grid": "sinr_grid_db"}


@dataclass(frozen=True)
class ScenarioConfig:
    """One benchmark scenario.

    Attributes:
        K: number of users.
        N: number of transmit antennas (N >= K).
        modulation_order: PSK order M.
        sinr_grid_db: SINR thresholds swept, in dB.
        sigma: per-user noise standard deviation; scalar broadcasts to K.
        n_channels: channel realizations per run.
        n_slots: symbol slots per realization.
        seed: base seed of the per-realization random streams.
        schemes: which schemes run.
    """

    K: int = 2
    N: int = 2
    modulation_order: int = 4
    sinr_grid_db: tuple[float, ...] = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0)
    sigma: tuple[float, ...] | float = 1.0
    n_channels: int = 200
    n_slots: int = 50
    seed: int = 12345
    schemes: tuple[str, ...] = SCHEMES

    def __post_init__(self):
        def fail(key, msg):
            raise ConfigError(f"config key '{key}': {msg}")

        for key in ("K", "N", "modulation_order", "n_channels", "n_slots", "seed"):
            value = getattr(self, key)
            if not isinstance(value, int) or isinstance(value, bool):
                fail(key, f"expected an integer, got {value!r}")
        if self.K < 1:
            fail("K", "need at least one user")
        if self.N < self.K:
            fail("N", f"need at least as many antennas as users (K={self.K})")
        if self.modulation_order < 4:
            fail("modulation_order", "PSK order must be at least 4")
        if self.n_channels < 1:
            fail("n_channels", "need at least one channel realization")
        if self.n_slots < 1:
            fail("n_slots", "need at least one slot")
        if self.seed < 0:
            fail("seed", "seed must be non-negative")

        try:
            grid = tuple(float(x) for x in np.atleast_1d(np.asarray(self.sinr_grid_db, dtype=float)))
        except (TypeError, ValueError):
            fail("sinr_grid_db", f"expected numbers, got {self.sinr_grid_db!r}")
        if not grid:
            fail("sinr_grid_db", "grid must be non-empty")
        object.__setattr__(self, "sinr_grid_db", grid)

        try:
            sig = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        except (TypeError, ValueError):
            fail("sigma", f"expected numbers, got {self.sigma!r}")
        if sig.shape[0] == 1:
            sig = np.repeat(sig, self.K)
        if sig.shape[0] != self.K:
            fail("sigma", f"expected a scalar or {self.K} values, got {sig.shape[0]}")
        if not np.isfinite(sig).all() or (sig <= 0).any():
            fail("sigma", "values must be positive and finite")
        object.__setattr__(self, "sigma", tuple(float(x) for x in sig))

        schemes = tuple(self.schemes) if not isinstance(self.schemes, str) else (self.schemes,)
        unknown = [s for s in schemes if s not in SCHEMES]
        if unknown:
            fail("schemes", f"unknown scheme {unknown[0]!r}, valid: {', '.join(SCHEMES)}")
        if not schemes:
            fail("schemes", "need at least one scheme")
        # canonical order, duplicates dropped
        object.__setattr__(self, "schemes", tuple(s for s in SCHEMES if s in schemes))

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        """Build a config from JSON-style keys; aliases M and grid accepted."""
        fields = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in data.items():
            name = _CONFIG_ALIASES.get(key, key)
            if name not in fields:
                raise ConfigError(f"unknown config key '{key}'")
            if name in kwargs:
                raise ConfigError(f"config key '{key}' duplicates '{name}'")
            if isinstance(value, list):
                value = tuple(value)
            kwargs[name] = value
        return cls(**kwargs)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["sinr_grid_db"] = list(self.sinr_grid_db)
        out["sigma"] = list(self.sigma)
        out["schemes"] = list(self.schemes)
        return out

    def config_sha256(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    @property
    def sigma_vec(self) -> np.ndarray:
        return np.asarray(self.sigma, dtype=float)

    @property
    def gammas(self) -> np.ndarray:
        """Linear SINR thresholds; the only dB-to-linear conversion point."""
        return 10.0 ** (np.asarray(self.sinr_grid_db, dtype=float) / 10.0)


@dataclass(frozen=True)
class SweepRecord:
    """Aggregate of one (scheme, SINR grid point) cell of a power sweep."""

    scheme: str
    K: int
    N: int
    M: int
    sinr_db: float
    mean_power_dbw: float
    mean_ms_per_slot: float
    median_ms_per_slot: float
    accuracy_mean: float | None
    n_samples: int
    seed: int


@dataclass(frozen=True)
class AccuracyRecord:
    """Mean support-prediction accuracy of one scenario at one threshold."""

    K: int
    N: int
    M: int
    sinr_db: float
    accuracy_mean: float
    n_samples: int
    seed: int


@dataclass(frozen=True)
class TimingRecord:
    """Per-slot wall-clock statistics of one scheme's timed span."""

    scheme: str
    K: int
    N: int
    M: int
    median_ms_per_slot: float
    mean_ms_per_slot: float
    n_samples: int
    batch_size: int
    seed: int


@dataclass(frozen=True)
class SerRecord:
    """Symbol error rate of one scheme at one noise level."""

    scheme: str
    K: int
    N: int
    M: int
    snr_db: float
    ser: float
    n_symbols: int
    n_errors: int
    stderr: float
    oracle_ser: float | None
    seed: int


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit argument, else SLP_THREADS, else 1."""
    if workers is not None:
        if int(workers) < 1:
            raise ConfigError(f"worker count must be at least 1, got {workers}")
        return int(workers)
    env = os.environ.get(THREADS_ENV_VAR)
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"config key '{THREADS_ENV_VAR}': expected an integer, got {env!r}")
        if value < 1:
            raise ConfigError(f"config key '{THREADS_ENV_VAR}': must be at least 1, got {env!r}")
        return value
    return 1


def _map_channels(fn, n_channels: int, workers: int):
    """Apply fn to every channel index, results in index order regardless of workers."""
    indices = range(n_channels)
    if workers <= 1:
        return [fn(c) for c in indices]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, n_channels // (4 * workers))
        return list(pool.map(fn, indices, chunksize=chunk))


_RUNNERS = {ZFBF: zfbf, CF_SLP: cf_slp, OPT_SLP: opt_slp}


def _sweep_channel(cfg: ScenarioConfig, channel_index: int):
    """Per-realization partial sums of the power sweep.

    Returns (power_sum, elapsed, accuracy_sum) with shapes
    (grid, schemes), (grid, schemes, n_slots) and (grid,); accuracy_sum is
    None unless both CF_SLP and OPT_SLP run.
    """
    const = build_psk(cfg.modulation_order)
    rng = channel_rng(cfg.seed, channel_index)
    ch = sample_channel(cfg.K, cfg.N, rng)
    gammas = cfg.gammas
    schemes = cfg.schemes
    track_accuracy = CF_SLP in schemes and OPT_SLP in schemes

    power_sum = np.zeros((gammas.size, len(schemes)))
    elapsed = np.zeros((gammas.size, len(schemes), cfg.n_slots))
    acc_sum = np.zeros(gammas.size) if track_accuracy else None
    for s in range(cfg.n_slots):
        idx = rng.integers(0, cfg.modulation_order, size=cfg.K)
        for gi, gamma in enumerate(gammas):
            slot = build_slot(ch, const, idx, cfg.sigma_vec, gamma)
            opt_delta = None
            for si, scheme in enumerate(schemes):
                result = _RUNNERS[scheme](slot)
                power_sum[gi, si] += result.power
                elapsed[gi, si, s] = result.elapsed
                if scheme == OPT_SLP:
                    opt_delta = result.delta
            if track_accuracy:
                acc_sum[gi] += active_set_accuracy(
                    predicted_inactive_mask(slot.power_lin),
                    optimal_inactive_mask(opt_delta, slot.power_lin),
                )
    return power_sum, elapsed, acc_sum


def run_power_sweep(cfg: ScenarioConfig, workers: int | None = None) -> list[SweepRecord]:
    """Mean transmit power (and companions) per scheme over the SINR grid.

    Returns one record per (grid point, scheme), grid-major, schemes in
    canonical order.  accuracy_mean is filled on CF_SLP records when
    OPT_SLP also ran, None otherwise.
    """
    n_workers = resolve_workers(workers)
    partials = _map_channels(partial(_sweep_channel, cfg), cfg.n_channels, n_workers)

    schemes = cfg.schemes
    n_samples = cfg.n_channels * cfg.n_slots
    power_sum = np.zeros((len(cfg.sinr_grid_db), len(schemes)))
    acc_sum = np.zeros(len(cfg.sinr_grid_db))
    track_accuracy = CF_SLP in schemes and OPT_SLP in schemes
    elapsed_parts = []
    # merge in channel order so float sums never depend on scheduling
    for p_power, p_elapsed, p_acc in partials:
        power_sum += p_power
        elapsed_parts.append(p_elapsed)
        if track_accuracy:
            acc_sum += p_acc
    elapsed = np.concatenate(elapsed_parts, axis=2)

    records = []
    for gi, sinr_db in enumerate(cfg.sinr_grid_db):
        for si, scheme in enumerate(schemes):
            accuracy = None
            if track_accuracy and scheme == CF_SLP:
                accuracy = float(acc_sum[gi] / n_samples)
            records.append(
                SweepRecord(
                    scheme=scheme,
                    K=cfg.K,
                    N=cfg.N,
                    M=cfg.modulation_order,
                    sinr_db=float(sinr_db),
                    mean_power_dbw=float(10.0 * np.log10(power_sum[gi, si] / n_samples)),
                    mean_ms_per_slot=float(elapsed[gi, si].mean() * 1e3),
                    median_ms_per_slot=float(np.median(elapsed[gi, si]) * 1e3),
                    accuracy_mean=accuracy,
                    n_samples=n_samples,
                    seed=cfg.seed,
                )
            )
    return records


ACCURACY_SINR_DB = 3.0


def run_accuracy(cfg: ScenarioConfig, workers: int | None = None) -> AccuracyRecord:
    """Mean support-prediction accuracy of the scenario at 3 dB.

    The closed-form support prediction is compared against the optimal
    support on every slot; the threshold is pinned at 3 dB (the prediction
    is scale-invariant, so the choice is presentational).
    """
    probe = dataclasses.replace(cfg, sinr_grid_db=(ACCURACY_SINR_DB,), schemes=(CF_SLP, OPT_SLP))
    records = run_power_sweep(probe, workers)
    cf_record = next(r for r in records if r.scheme == CF_SLP)
    return AccuracyRecord(
        K=cfg.K,
        N=cfg.N,
        M=cfg.modulation_order,
        sinr_db=ACCURACY_SINR_DB,
        accuracy_mean=cf_record.accuracy_mean,
        n_samples=cf_record.n_samples,
        seed=cfg.seed,
    )


def _cf_timing_span(h_pinv: np.ndarray, const: Constellation, idx: np.ndarray, scale2: np.ndarray) -> np.ndarray:
    """The closed-form scheme's per-slot work, given only the pseudo-inverse.

    Rebuilds the power quadratic and linear coefficient from scratch,
    punctures to the predicted support and solves the reduced system; the
    channel pseudo-inverse is the only precomputed channel quantity (it is
    symbol independent, as is the constellation geometry).
    """
    k = idx.shape[0]
    gram = h_pinv.T @ h_pinv
    ainv = np.zeros((2 * k, 2 * k))
    ar = np.arange(k)
    ainv.reshape(k, 2, k, 2)[ar, :, ar, :] = const.dpcir_inv[idx]
    q = ainv.T @ (gram @ ainv)
    t = scale2 * const.points[idx].reshape(2 * k)
    v = ainv.T @ (gram @ t)
    mask = v < -_SIGN_ZERO_TOL
    delta = np.zeros(2 * k)
    if mask.any():
        ii = np.flatnonzero(mask)
        sub = q[np.ix_(ii, ii)]
        trial = cho_solve(cho_factor(sub, check_finite=False), -v[ii], check_finite=False)
        delta[ii] = np.maximum(trial, 0.0)
    return delta


def _measure_span(span, items, warmup: int) -> tuple[np.ndarray, int]:
    """Wall-clock samples of span over prepared items, warm-up excluded.

    When a single invocation is under the timer resolution floor, items
    are batched 100 per timer read and each sample is a batch mean.
    """
    for item in items[: min(warmup, len(items))]:
        span(item)
    probe_t0 = time.perf_counter_ns()
    span(items[0])
    batch = _TIMER_BATCH if time.perf_counter_ns() - probe_t0 < _TIMER_RESOLUTION_FLOOR * 1e9 else 1
    samples = []
    if batch == 1:
        for item in items:
            t0 = time.perf_counter_ns()
            span(item)
            samples.append(time.perf_counter_ns() - t0)
    else:
        for start in range(0, len(items), batch):
            chunk = items[start : start + batch]
            t0 = time.perf_counter_ns()
            for item in chunk:
                span(item)
            samples.append((time.perf_counter_ns() - t0) / len(chunk))
    return np.asarray(samples, dtype=float) / 1e9, batch


def run_timing(cfg: ScenarioConfig) -> list[TimingRecord]:
    """Median and mean per-slot wall time of every scheme's timed span.

    Spans per scheme: ZFBF times only the precoding matrix-vector product;
    CF_SLP times the full build of the power quadratic and linear
    coefficient, the puncture and the reduced solve; OPT_SLP times the
    NNLS solve.  Channel pseudo-inverses and problem assembly outside the
    spans are precomputed.  Always runs serially.
    """
    const = build_psk(cfg.modulation_order)
    scale2 = np.repeat(cfg.sigma_vec * np.sqrt(cfg.gammas[0]), 2)
    prepared = []
    for c in range(cfg.n_channels):
        rng = channel_rng(cfg.seed, c)
        ch = sample_channel(cfg.K, cfg.N, rng)
        for _ in range(cfg.n_slots):
            idx = rng.integers(0, cfg.modulation_order, size=cfg.K)
            slot = build_slot(ch, const, idx, cfg.sigma_vec, cfg.gammas[0])
            problem = NnlsProblem(c=slot.slack_map, d=-slot.u_zf)
            prepared.append((ch.h_pinv, idx, slot.scaled_target, problem))

    spans = {
        ZFBF: lambda item: item[0] @ item[2],
        CF_SLP: lambda item: _cf_timing_span(item[0], const, item[1], scale2),
        OPT_SLP: lambda item: nnls_solve(item[3]),
    }
    records = []
    for scheme in cfg.schemes:
        samples, batch = _measure_span(spans[scheme], prepared, _TIMING_WARMUP)
        records.append(
            TimingRecord(
                scheme=scheme,
                K=cfg.K,
                N=cfg.N,
                M=cfg.modulation_order,
                median_ms_per_slot=float(np.median(samples) * 1e3),
                mean_ms_per_slot=float(samples.mean() * 1e3),
                n_samples=len(prepared),
                batch_size=batch,
                seed=cfg.seed,
            )
        )
    return records


def timing_ratio(records: list[TimingRecord]) -> float | None:
    """Median-time ratio OPT_SLP / CF_SLP, None unless both are present."""
    by_scheme = {r.scheme: r for r in records}
    if OPT_SLP not in by_scheme or CF_SLP not in by_scheme:
        return None
    return by_scheme[OPT_SLP].median_ms_per_slot / by_scheme[CF_SLP].median_ms_per_slot


def qpsk_ser_closed_form(gamma_linear: float) -> float:
    """Single-user QPSK symbol error rate at SNR gamma (linear).

    With symbol energy gamma * sigma^2 and complex noise variance sigma^2
    the per-axis error probability is p = Q(sqrt(gamma)) and the symbol
    error rate 2p - p^2.
    """
    p = 0.5 * math.erfc(math.sqrt(gamma_linear) / math.sqrt(2.0))
    return 2.0 * p - p * p


def _ser_channel(cfg: ScenarioConfig, snr_db: tuple, noise_std: tuple, channel_index: int):
    """Per-realization symbol error counts, shape (levels, schemes)."""
    const = build_psk(cfg.modulation_order)
    rng = channel_rng(cfg.seed, channel_index)
    ch = sample_channel(cfg.K, cfg.N, rng)
    gammas = 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    noise = np.asarray(noise_std, dtype=float)
    schemes = cfg.schemes
    n_levels = gammas.size

    idx_all = rng.integers(0, cfg.modulation_order, size=(cfg.n_slots, cfg.K))
    # one bulk draw keeps the stream identical whatever the scheme subset;
    # all schemes share the same noise (paired comparison)
    z_all = rng.standard_normal(size=(cfg.n_slots, n_levels, cfg.K, 2))
    z_all *= noise[None, None, :, None] / np.sqrt(2.0)

    rx = np.empty((cfg.n_slots, n_levels, len(schemes), cfg.K, 2))
    for s in range(cfg.n_slots):
        for li, gamma in enumerate(gammas):
            slot = build_slot(ch, const, idx_all[s], cfg.sigma_vec, gamma)
            for si, scheme in enumerate(schemes):
                rx[s, li, si] = receive_points(slot, _RUNNERS[scheme](slot).u)
    rx += z_all[:, :, None, :, :]

    # per-user detection against the scaled constellation
    scale = cfg.sigma_vec[None, :] * np.sqrt(gammas)[:, None]  # (levels, K)
    ref = scale[:, :, None, None] * const.points[None, None, :, :]  # (levels, K, M, 2)
    diff = rx[:, :, :, :, None, :] - ref[None, :, None, :, :, :]
    detected = np.argmin(np.einsum("slukmx,slukmx->slukm", diff, diff), axis=-1)
    errors = detected != idx_all[:, None, None, :]
    return errors.sum(axis=(0, 3))  # (levels, schemes)


def run_ser(
    cfg: ScenarioConfig,
    snr_db=None,
    noise_std=None,
    workers: int | None = None,
) -> list[SerRecord]:
    """Paired symbol-error-rate measurement over noise levels.

    Every scheme sees the same channels, symbols and noise draws.  Each
    level uses its SNR both as the precoders' SINR threshold and as the
    receiver's scaling, with receive noise of standard deviation
    `noise_std` (defaults to the configured sigma; pass 0 for a noise-free
    sanity run).  For QPSK the closed-form single-user SER at the level's
    SNR is attached to every record as `oracle_ser`.
    """
    levels = tuple(float(x) for x in (cfg.sinr_grid_db if snr_db is None else np.atleast_1d(snr_db)))
    if noise_std is None:
        noise = cfg.sigma
    else:
        arr = np.atleast_1d(np.asarray(noise_std, dtype=float))
        noise = tuple(float(x) for x in (np.repeat(arr, cfg.K) if arr.shape[0] == 1 else arr))
        if len(noise) != cfg.K:
            raise ConfigError(f"config key 'noise_std': expected a scalar or {cfg.K} values")

    n_workers = resolve_workers(workers)
    fn = partial(_ser_channel, cfg, levels, noise)
    partials = _map_channels(fn, cfg.n_channels, n_workers)
    errors = np.zeros((len(levels), len(cfg.schemes)), dtype=np.int64)
    for p in partials:
        errors += p

    n_symbols = cfg.n_channels * cfg.n_slots * cfg.K
    records = []
    for li, level in enumerate(levels):
        gamma = 10.0 ** (level / 10.0)
        oracle = qpsk_ser_closed_form(gamma) if cfg.modulation_order == 4 else None
        for si, scheme in enumerate(cfg.schemes):
            ser = errors[li, si] / n_symbols
            records.append(
                SerRecord(
                    scheme=scheme,
                    K=cfg.K,
                    N=cfg.N,
                    M=cfg.modulation_order,
                    snr_db=level,
                    ser=float(ser),
                    n_symbols=n_symbols,
                    n_errors=int(errors[li, si]),
                    stderr=float(np.sqrt(ser * (1.0 - ser) / n_symbols)),
                    oracle_ser=oracle,
                    seed=cfg.seed,
                )
            )
    return records
