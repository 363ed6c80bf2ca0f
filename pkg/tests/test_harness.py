"""Scenario configuration and the Monte-Carlo runners."""

import dataclasses

import numpy as np
import pytest

from slpsim.channel import channel_rng, sample_channel
from slpsim.constellation import build_psk
from slpsim.harness import (
    ACCURACY_SINR_DB,
    ConfigError,
    ScenarioConfig,
    THREADS_ENV_VAR,
    _cf_timing_span,
    qpsk_ser_closed_form,
    resolve_workers,
    run_accuracy,
    run_power_sweep,
    run_ser,
    run_timing,
    timing_ratio,
)
from slpsim.precoders import CF_SLP, OPT_SLP, ZFBF, build_slot, cf_slp


def small_config(**overrides):
    base = dict(K=2, N=2, n_channels=4, n_slots=5, sinr_grid_db=(0.0, 6.0))
    base.update(overrides)
    return ScenarioConfig(**base)


# -- configuration ---------------------------------------------------------

def test_defaults():
    cfg = ScenarioConfig()
    assert (cfg.K, cfg.N, cfg.modulation_order) == (2, 2, 4)
    assert cfg.sinr_grid_db == (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0)
    assert cfg.schemes == (ZFBF, CF_SLP, OPT_SLP)
    assert cfg.seed == 12345


def test_from_dict_aliases_and_roundtrip():
    cfg = ScenarioConfig.from_dict({"K": 3, "N": 4, "M": 8, "grid": [0, 3]})
    assert cfg.modulation_order == 8
    assert cfg.sinr_grid_db == (0.0, 3.0)
    again = ScenarioConfig.from_dict(cfg.to_dict())
    assert again == cfg
    assert again.config_sha256() == cfg.config_sha256()


def test_from_dict_rejects_unknown_and_conflicting_keys():
    with pytest.raises(ConfigError, match="grdi"):
        ScenarioConfig.from_dict({"grdi": [0, 3]})
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"M": 4, "modulation_order": 8})


def test_validation_messages_name_the_key():
    cases = [
        ({"K": 0}, "K"),
        ({"K": 4, "N": 2}, "K"),
        ({"M": 3}, "modulation_order"),
        ({"n_channels": 0}, "n_channels"),
        ({"n_slots": -1}, "n_slots"),
        ({"sinr_grid_db": []}, "sinr_grid_db"),
        ({"sigma": (1.0, 2.0, 3.0)}, "sigma"),
        ({"sigma": -0.5}, "sigma"),
        ({"schemes": ["ZFBF", "MRT"]}, "scheme"),
        ({"seed": -1}, "seed"),
    ]
    for data, needle in cases:
        with pytest.raises(ConfigError, match=needle):
            ScenarioConfig.from_dict(data)


def test_scheme_canonical_order():
    cfg = ScenarioConfig.from_dict({"schemes": ["OPT_SLP", "ZFBF", "OPT_SLP"]})
    assert cfg.schemes == (ZFBF, OPT_SLP)


def test_sigma_broadcast():
    assert ScenarioConfig(K=3, N=3, sigma=2.0).sigma_vec.tolist() == [2.0, 2.0, 2.0]
    assert ScenarioConfig(K=2, N=2, sigma=(1.0, 3.0)).sigma_vec.tolist() == [1.0, 3.0]


def test_sha_tracks_content():
    a = ScenarioConfig(K=2, N=2)
    b = ScenarioConfig(K=2, N=3)
    assert a.config_sha256() != b.config_sha256()
    assert len(a.config_sha256()) == 64


def test_resolve_workers(monkeypatch):
    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
    assert resolve_workers(None) == 1
    assert resolve_workers(3) == 3
    monkeypatch.setenv(THREADS_ENV_VAR, "2")
    assert resolve_workers(None) == 2
    assert resolve_workers(5) == 5
    monkeypatch.setenv(THREADS_ENV_VAR, "zero")
    with pytest.raises(ConfigError, match=THREADS_ENV_VAR):
        resolve_workers(None)
    monkeypatch.setenv(THREADS_ENV_VAR, "0")
    with pytest.raises(ConfigError, match=THREADS_ENV_VAR):
        resolve_workers(None)
    with pytest.raises(ConfigError):
        resolve_workers(-2)


# -- power sweep -----------------------------------------------------------

def test_sweep_record_layout():
    cfg = small_config()
    records = run_power_sweep(cfg)
    assert [(r.sinr_db, r.scheme) for r in records] == [
        (g, s) for g in (0.0, 6.0) for s in (ZFBF, CF_SLP, OPT_SLP)
    ]
    for r in records:
        assert (r.K, r.N, r.M, r.seed) == (2, 2, 4, cfg.seed)
        assert r.n_samples == 20
        assert np.isfinite(r.mean_power_dbw)
        assert r.mean_ms_per_slot > 0.0
        assert r.accuracy_mean is None or r.scheme == CF_SLP
    cf_rows = [r for r in records if r.scheme == CF_SLP]
    assert all(0.0 <= r.accuracy_mean <= 1.0 for r in cf_rows)


def test_sweep_deterministic():
    cfg = small_config(n_channels=6)
    a = run_power_sweep(cfg)
    b = run_power_sweep(cfg)
    for ra, rb in zip(a, b):
        assert ra.mean_power_dbw == rb.mean_power_dbw
        assert ra.accuracy_mean == rb.accuracy_mean


def test_sweep_pool_matches_serial(monkeypatch):
    cfg = small_config(n_channels=6)
    serial = run_power_sweep(cfg, workers=1)
    pooled = run_power_sweep(cfg, workers=2)
    monkeypatch.setenv(THREADS_ENV_VAR, "2")
    env_pooled = run_power_sweep(cfg)
    for rs, rp, re in zip(serial, pooled, env_pooled):
        assert rs.mean_power_dbw == rp.mean_power_dbw == re.mean_power_dbw
        assert rs.accuracy_mean == rp.accuracy_mean == re.accuracy_mean


def test_sweep_threshold_shift_is_exact():
    # all three schemes scale with the threshold, so the two grid points
    # differ by exactly the grid spacing in dB
    records = run_power_sweep(small_config(n_channels=8))
    by = {(r.scheme, r.sinr_db): r.mean_power_dbw for r in records}
    for s in (ZFBF, CF_SLP, OPT_SLP):
        assert by[(s, 6.0)] - by[(s, 0.0)] == pytest.approx(6.0, abs=1e-9)


def test_sweep_mean_ordering():
    records = run_power_sweep(small_config(n_channels=10))
    by = {(r.scheme, r.sinr_db): r.mean_power_dbw for r in records}
    for g in (0.0, 6.0):
        assert by[(OPT_SLP, g)] <= by[(CF_SLP, g)] + 1e-9
        assert by[(OPT_SLP, g)] <= by[(ZFBF, g)] + 1e-9


def test_sweep_scheme_subset():
    records = run_power_sweep(small_config(schemes=("ZFBF",)))
    assert [r.scheme for r in records] == [ZFBF, ZFBF]
    assert all(r.accuracy_mean is None for r in records)


# -- accuracy --------------------------------------------------------------

def test_accuracy_record():
    cfg = small_config(n_channels=10)
    rec = run_accuracy(cfg)
    assert rec.sinr_db == ACCURACY_SINR_DB == 3.0
    assert rec.n_samples == 50
    assert 0.0 <= rec.accuracy_mean <= 1.0
    assert (rec.K, rec.N, rec.M, rec.seed) == (2, 2, 4, cfg.seed)
    assert run_accuracy(cfg).accuracy_mean == rec.accuracy_mean


# -- timing ----------------------------------------------------------------

def test_timing_records_and_ratio():
    cfg = small_config(n_channels=3, n_slots=20)
    records = run_timing(cfg)
    assert [r.scheme for r in records] == [ZFBF, CF_SLP, OPT_SLP]
    for r in records:
        assert r.median_ms_per_slot > 0.0
        assert r.mean_ms_per_slot > 0.0
        assert r.n_samples == 60
        assert r.batch_size >= 1
    ratio = timing_ratio(records)
    assert ratio is not None and ratio > 0.0
    assert timing_ratio([r for r in records if r.scheme == ZFBF]) is None


def test_timing_kernel_matches_library_path():
    # the lean timing kernel must produce the same slack vector as the
    # instrumented solver
    rng = channel_rng(301, 0)
    for order in (4, 8):
        const = build_psk(order)
        for _ in range(60):
            k = int(rng.integers(2, 6))
            ch = sample_channel(k, k, rng)
            idx = rng.integers(0, order, size=k)
            gamma = float(rng.uniform(0.5, 6.0))
            slot = build_slot(ch, const, idx, gamma=gamma)
            scale2 = np.repeat(np.sqrt(gamma) * np.ones(k), 2)
            delta = _cf_timing_span(ch.h_pinv, const, idx, scale2)
            expect = cf_slp(slot).delta
            assert np.max(np.abs(delta - expect)) <= 1e-9 * (1.0 + np.abs(expect).max())


# -- symbol error rate -----------------------------------------------------

def test_ser_closed_form_frozen():
    assert qpsk_ser_closed_form(1.0) == pytest.approx(0.29213901826285904, rel=1e-15)
    assert qpsk_ser_closed_form(4.0) == pytest.approx(0.044982695392698877, rel=1e-15)
    assert qpsk_ser_closed_form(1e9) < 1e-12


def test_ser_noise_free_is_error_free():
    cfg = small_config(n_channels=6, n_slots=10)
    records = run_ser(cfg, snr_db=(3.0,), noise_std=0.0)
    assert [r.scheme for r in records] == [ZFBF, CF_SLP, OPT_SLP]
    for r in records:
        assert r.ser == 0.0
        assert r.n_errors == 0
        assert r.n_symbols == 120


def test_ser_records_and_oracle_column():
    cfg = small_config(n_channels=5, n_slots=8)
    records = run_ser(cfg)
    assert [(r.snr_db, r.scheme) for r in records] == [
        (g, s) for g in (0.0, 6.0) for s in (ZFBF, CF_SLP, OPT_SLP)
    ]
    for r in records:
        assert 0.0 <= r.ser <= 1.0
        assert r.n_errors == round(r.ser * r.n_symbols)
        expect_se = np.sqrt(max(r.ser * (1 - r.ser), 1.0 / r.n_symbols) / r.n_symbols)
        assert r.stderr == pytest.approx(expect_se, rel=1e-9)
        assert r.oracle_ser == pytest.approx(qpsk_ser_closed_form(10 ** (r.snr_db / 10)))
    epsk = run_ser(small_config(modulation_order=8, n_channels=3, n_slots=4))
    assert all(r.oracle_ser is None for r in epsk)


def test_ser_zero_forcing_tracks_oracle():
    cfg = ScenarioConfig(K=2, N=2, n_channels=40, n_slots=50)
    records = run_ser(cfg, snr_db=(2.0,))
    zf = next(r for r in records if r.scheme == ZFBF)
    assert abs(zf.ser - zf.oracle_ser) <= 3.0 * zf.stderr


def test_ser_deterministic_and_pool_equivalent():
    cfg = small_config(n_channels=6, n_slots=6)
    a = run_ser(cfg, snr_db=(4.0,))
    b = run_ser(cfg, snr_db=(4.0,))
    c = run_ser(cfg, snr_db=(4.0,), workers=2)
    assert [r.ser for r in a] == [r.ser for r in b] == [r.ser for r in c]


def test_config_is_frozen():
    cfg = small_config()
    with pytest.raises(dataclasses.FrozenInstanceError):
        cfg.K = 4
