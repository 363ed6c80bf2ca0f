"""Command line front end.

Subcommands map one-to-one onto the harness entry points:

  power-sweep   mean transmit power per scheme across an SINR grid
  accuracy      support-prediction accuracy of the closed-form scheme
  timing        per-slot precoding time for all three schemes
  ser           symbol error rate under additive receiver noise
  verify        randomized self-checks of the solver and precoders

Every run is driven by a ScenarioConfig assembled from an optional JSON
file plus repeatable --set key=value overrides.  Reports are written
atomically, and CSV output carries a `# config_sha256=` comment line so a
result file can be traced back to the configuration that produced it.
Unless --no-figures is given, a PNG rendering of the report is saved next
to the --out file.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .checks import run_checks
from .harness import (
    ConfigError,
    ScenarioConfig,
    THREADS_ENV_VAR,
    run_accuracy,
    run_power_sweep,
    run_ser,
    run_timing,
    timing_ratio,
)
from .plots import (
    save_accuracy_figure,
    save_power_figure,
    save_ser_figure,
    save_timing_figure,
)

__all__ = ["main"]

# Column orders are part of the output contract; the power-sweep header in
# particular is pinned and append-only.
_SWEEP_COLUMNS = (
    "scheme", "K", "N", "M", "sinr_db",
    "mean_power_dbw", "mean_ms_per_slot", "n_samples", "seed",
)
_ACCURACY_COLUMNS = ("K", "N", "M", "sinr_db", "accuracy_mean", "n_samples", "seed")
_TIMING_COLUMNS = (
    "scheme", "K", "N", "M",
    "median_ms_per_slot", "mean_ms_per_slot", "n_samples", "batch_size", "seed",
)
_SER_COLUMNS = (
    "scheme", "K", "N", "M", "snr_db",
    "ser", "n_symbols", "n_errors", "stderr", "oracle_ser", "seed",
)


def _parse_value(raw: str):
    """Interpret an override value: JSON when it parses, comma lists, else text."""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        pass
    if "," in raw:
        return [_parse_value(part) for part in raw.split(",")]
    return raw


def _parse_override(item: str):
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"override '{item}' is not of the form key=value")
    return key, _parse_value(raw)


def _build_config(args) -> ScenarioConfig:
    data: dict = {}
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"config file {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {args.config}: expected a JSON object")
        data.update(loaded)
    for item in args.set or []:
        key, value = _parse_override(item)
        data[key] = value
    return ScenarioConfig.from_dict(data)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def _json_default(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _render_csv(records, columns, metadata: dict) -> str:
    buf = io.StringIO()
    for key, value in metadata.items():
        cell = _format_cell(value)
        buf.write(f"# {key}={cell if cell else 'NA'}\r\n")
    writer = csv.writer(buf)
    writer.writerow(columns)
    for record in records:
        writer.writerow(_format_cell(getattr(record, name)) for name in columns)
    return buf.getvalue()


def _render_json(command: str, cfg: ScenarioConfig, records, metadata: dict) -> str:
    payload = {
        "command": command,
        "config": cfg.to_dict(),
        "config_sha256": cfg.config_sha256(),
        "metadata": metadata,
        "records": [dataclasses.asdict(record) for record in records],
    }
    return json.dumps(payload, indent=2, default=_json_default) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    # Stage in the destination directory so os.replace stays a rename.
    fd, tmp_name = tempfile.mkstemp(dir=str(path.parent) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.chmod(tmp_name, 0o644)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


_FIGURES = {
    "power-sweep": save_power_figure,
    "accuracy": save_accuracy_figure,
    "timing": save_timing_figure,
    "ser": save_ser_figure,
}


def _emit(command: str, cfg: ScenarioConfig, records, extra_metadata: dict, args) -> None:
    metadata = {"config_sha256": cfg.config_sha256(), **extra_metadata}
    if args.format == "json":
        text = _render_json(command, cfg, records, metadata)
    else:
        columns = {
            "power-sweep": _SWEEP_COLUMNS,
            "accuracy": _ACCURACY_COLUMNS,
            "timing": _TIMING_COLUMNS,
            "ser": _SER_COLUMNS,
        }[command]
        text = _render_csv(records, columns, metadata)
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    _atomic_write(out, text)
    if records and not args.no_figures:
        _FIGURES[command](records, out.with_suffix(".png"))


def _cmd_power_sweep(args) -> int:
    cfg = _build_config(args)
    records = run_power_sweep(cfg, workers=args.workers)
    _emit("power-sweep", cfg, records, {}, args)
    return 0


def _cmd_accuracy(args) -> int:
    cfg = _build_config(args)
    record = run_accuracy(cfg, workers=args.workers)
    _emit("accuracy", cfg, [record], {}, args)
    return 0


def _cmd_timing(args) -> int:
    cfg = _build_config(args)
    records = run_timing(cfg)
    ratio = timing_ratio(records)
    _emit("timing", cfg, records, {"opt_cf_ratio": ratio}, args)
    return 0


def _cmd_ser(args) -> int:
    cfg = _build_config(args)
    records = run_ser(cfg, workers=args.workers)
    _emit("ser", cfg, records, {}, args)
    return 0


def _cmd_verify(args) -> int:
    cfg = _build_config(args)
    results = run_checks(cfg)
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail}")
    return 0 if all(res.passed for res in results) else 1


def _add_common(sub, workers: bool = True, report: bool = True) -> None:
    sub.add_argument("--config", metavar="FILE", help="JSON file with scenario settings")
    sub.add_argument(
        "--set", action="append", metavar="KEY=VALUE",
        help="override one scenario setting; repeatable",
    )
    if report:
        sub.add_argument("--out", metavar="FILE", help="report destination; stdout when omitted")
        sub.add_argument("--format", choices=("csv", "json"), default="csv")
        sub.add_argument(
            "--no-figures", action="store_true",
            help="skip the PNG rendered next to --out",
        )
    if workers:
        sub.add_argument(
            "--workers", type=int, metavar="W",
            help=f"worker process count; falls back to ${THREADS_ENV_VAR}, then 1",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slpsim",
        description="Monte-Carlo benchmarks for symbol-level downlink precoding.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("power-sweep", help="mean transmit power across an SINR grid")
    _add_common(sub)
    sub.set_defaults(handler=_cmd_power_sweep)

    sub = subs.add_parser("accuracy", help="support-prediction accuracy of the closed form")
    _add_common(sub)
    sub.set_defaults(handler=_cmd_accuracy)

    sub = subs.add_parser("timing", help="per-slot precoding time per scheme")
    _add_common(sub, workers=False)
    sub.set_defaults(handler=_cmd_timing)

    sub = subs.add_parser("ser", help="symbol error rate under receiver noise")
    _add_common(sub)
    sub.set_defaults(handler=_cmd_ser)

    sub = subs.add_parser("verify", help="randomized self-checks")
    _add_common(sub, workers=False, report=False)
    sub.set_defaults(handler=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
