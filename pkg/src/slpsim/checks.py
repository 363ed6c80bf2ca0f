"""Randomized invariant suite behind the verify subcommand.

Each check draws fresh problems from the configured seed, tests one
mathematical property of the implementation and reports a pass/fail line.
The suite is a smoke-level counterpart of the full test suite, cheap
enough to run ad hoc against any scenario configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import channel_rng, sample_channel
from .constellation import build_psk, ml_detect
from .harness import ScenarioConfig
from .nnls import NnlsProblem, nnls_oracle, nnls_solve
from .precoders import build_slot, cf_slp, opt_slp, zfbf

__all__ = ["CheckResult", "run_checks"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_slots(cfg: ScenarioConfig, count: int, gamma: float):
    const = build_psk(cfg.modulation_order)
    rng = channel_rng(cfg.seed, 0xC0FFEE)
    per_channel = 10
    made = 0
    while made < count:
        ch = sample_channel(cfg.K, cfg.N, rng)
        for _ in range(min(per_channel, count - made)):
            idx = rng.integers(0, cfg.modulation_order, size=cfg.K)
            yield build_slot(ch, const, idx, cfg.sigma_vec, gamma)
            made += 1


def _check_oracle_agreement(cfg: ScenarioConfig) -> CheckResult:
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 7))
        m = n + int(rng.integers(0, 5))
        p = NnlsProblem(c=rng.standard_normal((m, n)), d=rng.standard_normal(m))
        worst = max(worst, float(np.abs(nnls_solve(p).delta - nnls_oracle(p).delta).max()))
    return CheckResult(
        "nnls-oracle-agreement",
        worst <= 1e-8,
        f"max solution deviation {worst:.2e} over 200 instances",
    )


def _check_kkt(cfg: ScenarioConfig) -> CheckResult:
    worst = 0.0
    for slot in _random_slots(cfg, 300, 2.0):
        result = opt_slp(slot)
        scale = 1.0 + float(np.linalg.norm(slot.power_lin))
        kkt = result.kkt
        worst = max(worst, max(kkt.dual_feasibility, kkt.complementarity, kkt.primal_feasibility) / scale)
    return CheckResult(
        "kkt-certificates",
        worst <= 1e-8,
        f"max scaled residual {worst:.2e} over 300 slots",
    )


def _check_zf_equivalence(cfg: ScenarioConfig) -> CheckResult:
    checked = 0
    worst = 0.0
    for slot in _random_slots(cfg, 600, 2.0):
        result = opt_slp(slot)
        if slot.power_lin.min() >= 0.0:
            checked += 1
            worst = max(worst, float(np.abs(result.delta).max()), float(np.abs(result.u - slot.u_zf).max()))
        if result.delta.max(initial=0.0) == 0.0 and slot.power_lin.min() < -1e-8:
            return CheckResult(
                "zero-slack-equivalence",
                False,
                "zero slack returned despite a negative linear coefficient",
            )
    return CheckResult(
        "zero-slack-equivalence",
        worst <= 1e-8,
        f"{checked} non-negative-coefficient slots matched zero-forcing, worst deviation {worst:.2e}",
    )


def _check_power_ordering(cfg: ScenarioConfig) -> CheckResult:
    for slot in _random_slots(cfg, 300, 2.0):
        rz, rc, ro = zfbf(slot), cf_slp(slot), opt_slp(slot)
        # The closed form may clip itself above zero-forcing on a badly
        # conditioned slot; only the exact solver is guaranteed cheapest.
        if not (ro.power <= rc.power + 1e-8 and ro.power <= rz.power + 1e-8):
            return CheckResult(
                "power-ordering",
                False,
                f"ordering violated: zf={rz.power:.6g} cf={rc.power:.6g} opt={ro.power:.6g}",
            )
        if max(rc.ci_residual, ro.ci_residual, rz.ci_residual) > 1e-8:
            return CheckResult("power-ordering", False, "stacked constraint violated")
        if min(rc.delta.min(), ro.delta.min()) < 0.0:
            return CheckResult("power-ordering", False, "negative slack entry")
    return CheckResult("power-ordering", True, "exact solver cheapest on 300 slots")


def _check_noise_free_detection(cfg: ScenarioConfig) -> CheckResult:
    const = build_psk(cfg.modulation_order)
    wrong = 0
    total = 0
    for slot in _random_slots(cfg, 200, 2.0):
        for result in (cf_slp(slot), opt_slp(slot)):
            rx = (slot.channel.h_lift @ result.u).reshape(cfg.K, 2)
            scale = slot.sigma * np.sqrt(slot.gamma)
            for k in range(cfg.K):
                total += 1
                if ml_detect(const, rx[k] / scale[k]) != slot.symbol_idx[k]:
                    wrong += 1
    return CheckResult(
        "noise-free-detection",
        wrong == 0,
        f"{wrong}/{total} noise-free receive points detected wrongly",
    )


def _check_slack_decomposition(cfg: ScenarioConfig) -> CheckResult:
    worst = 0.0
    for slot in _random_slots(cfg, 200, 2.0):
        for result in (cf_slp(slot), opt_slp(slot)):
            lhs = slot.channel.h_lift @ (result.u - slot.u_zf)
            rhs = slot.dpcir_block_inv @ result.delta
            worst = max(worst, float(np.abs(lhs - rhs).max()))
    return CheckResult(
        "slack-decomposition",
        worst <= 1e-8,
        f"max decomposition residual {worst:.2e} over 200 slots",
    )


_CHECKS = (
    _check_oracle_agreement,
    _check_kkt,
    _check_zf_equivalence,
    _check_power_ordering,
    _check_noise_free_detection,
    _check_slack_decomposition,
)


def run_checks(cfg: ScenarioConfig) -> list[CheckResult]:
    """Run every invariant check against the given scenario."""
    return [check(cfg) for check in _CHECKS]
