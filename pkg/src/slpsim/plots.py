"""Figure rendering for the CLI report path.

Every renderer takes the records a run produced and writes one PNG next to
the delimited output.  Figures are a convenience view of the same numbers;
the CSV/JSON stays the regression artifact.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import AccuracyRecord, SerRecord, SweepRecord, TimingRecord

__all__ = [
    "save_power_figure",
    "save_accuracy_figure",
    "save_timing_figure",
    "save_ser_figure",
]

_STYLE = {
    "ZFBF": dict(color="tab:blue", marker="s"),
    "CF_SLP": dict(color="tab:orange", marker="o"),
    "OPT_SLP": dict(color="tab:green", marker="^"),
}


def _dims_label(records) -> str:
    r = records[0]
    return f"{r.K}x{r.N}, {r.M}-PSK"


def save_power_figure(records: list[SweepRecord], path) -> None:
    """Mean transmit power against the SINR threshold, one line per scheme."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    schemes = sorted({r.scheme for r in records}, key=list(_STYLE).index)
    for scheme in schemes:
        points = sorted((r.sinr_db, r.mean_power_dbw) for r in records if r.scheme == scheme)
        ax.plot(*zip(*points), label=scheme, **_STYLE[scheme])
    ax.set_xlabel("SINR threshold (dB)")
    ax.set_ylabel("Mean transmit power (dBW)")
    ax.set_title(f"Power sweep, {_dims_label(records)}")
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_accuracy_figure(records: list[AccuracyRecord], path) -> None:
    """Support-prediction accuracy per scenario dimension."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    labels = [f"{r.K}x{r.N}\n{r.M}-PSK" for r in records]
    ax.bar(range(len(records)), [r.accuracy_mean for r in records], color="tab:orange", width=0.5)
    ax.set_xticks(range(len(records)), labels)
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("Mean support-prediction accuracy")
    ax.set_title(f"Accuracy at {records[0].sinr_db:g} dB")
    ax.grid(True, axis="y", alpha=0.4)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_timing_figure(records: list[TimingRecord], path) -> None:
    """Median per-slot span time per scheme, log scale."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    schemes = [r.scheme for r in records]
    medians = [r.median_ms_per_slot for r in records]
    ax.bar(schemes, medians, color=[_STYLE[s]["color"] for s in schemes], width=0.5)
    ax.set_yscale("log")
    ax.set_ylabel("Median time per slot (ms)")
    ax.set_title(f"Per-slot timing, {_dims_label(records)}")
    ax.grid(True, axis="y", alpha=0.4, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_ser_figure(records: list[SerRecord], path) -> None:
    """Symbol error rate against SNR, one line per scheme, log scale."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    schemes = sorted({r.scheme for r in records}, key=list(_STYLE).index)
    for scheme in schemes:
        points = sorted((r.snr_db, r.ser) for r in records if r.scheme == scheme)
        ax.semilogy(*zip(*points), label=scheme, **_STYLE[scheme])
    oracle = sorted({(r.snr_db, r.oracle_ser) for r in records if r.oracle_ser is not None})
    if oracle:
        ax.semilogy(*zip(*oracle), "k--", label="single-user closed form")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("Symbol error rate")
    ax.set_title(f"SER, {_dims_label(records)}")
    ax.grid(True, alpha=0.4, which="both")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
