"""Per-slot precoder constructions and their optimality certificates.

For one symbol slot the transmit vector u (lifted to real coordinates)
must place every user's noise-free receive point inside the DPCIR of its
intended symbol, scaled by sigma_k * sqrt(gamma_k).  With A the block
diagonal of the per-point DPCIR normal matrices and t the stacked scaled
symbol coordinates, the constraint set is exactly

    H u = t + A^{-1} delta,    delta >= 0,

and the least-norm transmit vector for a given slack is

    u = u_zf + S delta,        S = H^+ A^{-1},

where u_zf = H^+ t is the zero-forcing solution.  Transmit power is then
the strictly convex quadratic

    ||u||^2 = ||u_zf||^2 + 2 power_lin . delta + delta . power_quad delta,

with power_quad = S^T S and power_lin = S^T u_zf.  The optimal scheme
minimizes it over delta >= 0 by NNLS; the closed-form scheme predicts the
positive support of delta from the signs of power_lin and solves one
reduced linear system on it; zero-forcing keeps delta = 0.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .channel import ChannelRealization
from .constellation import Constellation
from .nnls import NnlsProblem, nnls_solve

__all__ = [
    "ZFBF",
    "CF_SLP",
    "OPT_SLP",
    "SCHEMES",
    "SlotProblem",
    "PrecodeResult",
    "KktResiduals",
    "build_slot",
    "zfbf",
    "cf_slp",
    "opt_slp",
    "verify_kkt",
    "predicted_inactive_mask",
    "optimal_inactive_mask",
    "active_set_accuracy",
    "receive_points",
]

ZFBF = "ZFBF"
CF_SLP = "CF_SLP"
OPT_SLP = "OPT_SLP"
SCHEMES = (ZFBF, CF_SLP, OPT_SLP)

# entries of power_lin within this of zero count as non-negative, so the
# corresponding slack stays at the bound
_SIGN_ZERO_TOL = 1e-12
# slack entries above 1e-7 * (1 + ||power_lin||) count as positive when the
# optimal support is extracted
_ACTIVE_TOL_COEFF = 1e-7


@dataclass(frozen=True)
class SlotProblem:
    """One symbol slot, fully assembled for precoding.

    Attributes:
        channel: the channel realization.
        constellation: the PSK constellation in use.
        symbol_idx: (K,) intended constellation index per user.
        sigma: (K,) per-user noise standard deviations.
        gamma: (K,) per-user SINR thresholds, linear scale.
        dpcir_block: (2K, 2K) block diagonal of the users' DPCIR normals.
        dpcir_block_inv: (2K, 2K) its blockwise inverse.
        point_stack: (2K,) stacked symbol coordinates.
        scaled_target: (2K,) point_stack scaled per user by
            sigma_k * sqrt(gamma_k).
        u_zf: (2N,) zero-forcing transmit vector.
        slack_map: (2N, 2K) least-norm map from slack to transmit
            adjustment.
        power_quad: (2K, 2K) Gram matrix of slack_map.
        power_lin: (2K,) linear power coefficient slack_map^T u_zf.
    """

    channel: ChannelRealization
    constellation: Constellation
    symbol_idx: np.ndarray
    sigma: np.ndarray
    gamma: np.ndarray
    dpcir_block: np.ndarray
    dpcir_block_inv: np.ndarray
    point_stack: np.ndarray
    scaled_target: np.ndarray
    u_zf: np.ndarray
    slack_map: np.ndarray
    power_quad: np.ndarray
    power_lin: np.ndarray

    @property
    def n_users(self) -> int:
        return self.symbol_idx.shape[0]


@dataclass(frozen=True)
class KktResiduals:
    """Residual triple of the slack QP optimality system.

    With psi = power_quad delta + power_lin:
        dual_feasibility: max(0, -min psi)
        complementarity: max |psi_l * delta_l|
        primal_feasibility: max(0, -min delta)
    """

    dual_feasibility: float
    complementarity: float
    primal_feasibility: float
    tol: float = 0.0

    @property
    def passed(self) -> bool:
        return max(self.dual_feasibility, self.complementarity, self.primal_feasibility) <= self.tol


@dataclass(frozen=True)
class PrecodeResult:
    """Output of one scheme on one slot.

    Attributes:
        scheme: ZFBF, CF_SLP or OPT_SLP.
        u: (2N,) lifted transmit vector.
        delta: (2K,) slack vector placing the receive points.
        power: ||u||^2.
        ci_residual: max-norm violation of H u = t + A^{-1} delta.
        kkt: residuals of the slack QP optimality system at delta.
        elapsed: seconds spent in the scheme's own per-slot computation.
        solver_status: "converged", or "iteration-cap" passed through from
            the NNLS solver.
    """

    scheme: str
    u: np.ndarray
    delta: np.ndarray
    power: float
    ci_residual: float
    kkt: KktResiduals
    elapsed: float
    solver_status: str = "converged"


def build_slot(
    channel: ChannelRealization,
    constellation: Constellation,
    symbol_idx: np.ndarray,
    sigma=1.0,
    gamma=1.0,
) -> SlotProblem:
    """Assemble the per-slot data shared by every scheme.

    Args:
        channel: channel realization for K users.
        constellation: PSK constellation.
        symbol_idx: (K,) intended constellation index per user.
        sigma: per-user noise standard deviation, scalar or length K.
        gamma: per-user SINR threshold (linear), scalar or length K.
    """
    k = channel.n_users
    idx = np.asarray(symbol_idx, dtype=int)
    if idx.shape != (k,):
        raise ValueError(f"expected {k} symbol indices, got shape {idx.shape}")
    if idx.min() < 0 or idx.max() >= constellation.order:
        raise ValueError("symbol index out of range")
    sigma_v = _per_user(sigma, k, "sigma")
    gamma_v = _per_user(gamma, k, "gamma")

    blocks = constellation.dpcir[idx]
    blocks_inv = constellation.dpcir_inv[idx]
    dpcir_block = _block_diag(blocks)
    dpcir_block_inv = _block_diag(blocks_inv)

    point_stack = constellation.points[idx].reshape(2 * k)
    scale = np.repeat(sigma_v * np.sqrt(gamma_v), 2)
    scaled_target = scale * point_stack

    u_zf = channel.h_pinv @ scaled_target
    slack_map = _slack_map(channel.h_pinv, blocks_inv)
    power_quad = slack_map.T @ slack_map
    power_lin = slack_map.T @ u_zf

    return SlotProblem(
        channel=channel,
        constellation=constellation,
        symbol_idx=idx,
        sigma=sigma_v,
        gamma=gamma_v,
        dpcir_block=dpcir_block,
        dpcir_block_inv=dpcir_block_inv,
        point_stack=point_stack,
        scaled_target=scaled_target,
        u_zf=u_zf,
        slack_map=slack_map,
        power_quad=power_quad,
        power_lin=power_lin,
    )


def _per_user(value, k: int, name: str) -> np.ndarray:
    out = np.broadcast_to(np.asarray(value, dtype=float), (k,)).copy()
    if not np.isfinite(out).all() or (out <= 0).any():
        raise ValueError(f"{name} must be positive and finite")
    return out


def _block_diag(blocks: np.ndarray) -> np.ndarray:
    """(K, 2, 2) stack -> (2K, 2K) block diagonal."""
    k = blocks.shape[0]
    out = np.zeros((2 * k, 2 * k))
    view = out.reshape(k, 2, k, 2)
    ar = np.arange(k)
    view[ar, :, ar, :] = blocks
    return out


def _slack_map(h_pinv: np.ndarray, blocks_inv: np.ndarray) -> np.ndarray:
    """H^+ A^{-1} using the block structure of A^{-1}."""
    two_n, two_k = h_pinv.shape
    hp = h_pinv.reshape(two_n, two_k // 2, 2)
    return np.einsum("nki,kij->nkj", hp, blocks_inv).reshape(two_n, two_k)


def zfbf(slot: SlotProblem) -> PrecodeResult:
    """Zero-forcing: pin every receive point to its scaled symbol."""
    t0 = time.perf_counter()
    u = slot.channel.h_pinv @ slot.scaled_target
    elapsed = time.perf_counter() - t0
    delta = np.zeros(2 * slot.n_users)
    return _package(ZFBF, slot, u, delta, elapsed)


def cf_slp(slot: SlotProblem) -> PrecodeResult:
    """Closed-form scheme: sign-guided support, one reduced solve.

    The slack support is predicted as the set of negative entries of
    power_lin.  On an empty prediction the output coincides with
    zero-forcing; otherwise the unconstrained minimizer on the predicted
    support is computed through a Cholesky solve and clipped at zero
    elementwise.
    """
    t0 = time.perf_counter()
    mask = predicted_inactive_mask(slot.power_lin)
    delta = np.zeros(2 * slot.n_users)
    if mask.any():
        idx = np.flatnonzero(mask)
        sub = slot.power_quad[np.ix_(idx, idx)]
        trial = cho_solve(cho_factor(sub, check_finite=False), -slot.power_lin[idx], check_finite=False)
        delta[idx] = np.maximum(trial, 0.0)
    u = slot.u_zf + slot.slack_map @ delta
    elapsed = time.perf_counter() - t0
    return _package(CF_SLP, slot, u, delta, elapsed)


def opt_slp(slot: SlotProblem) -> PrecodeResult:
    """Optimal scheme: exact slack QP solved as NNLS."""
    problem = NnlsProblem(c=slot.slack_map, d=-slot.u_zf)
    t0 = time.perf_counter()
    solution = nnls_solve(problem)
    elapsed = time.perf_counter() - t0
    u = slot.u_zf + slot.slack_map @ solution.delta
    return _package(OPT_SLP, slot, u, solution.delta, elapsed, solution.status)


def _package(
    scheme: str,
    slot: SlotProblem,
    u: np.ndarray,
    delta: np.ndarray,
    elapsed: float,
    solver_status: str = "converged",
) -> PrecodeResult:
    residual = slot.channel.h_lift @ u - slot.scaled_target - slot.dpcir_block_inv @ delta
    return PrecodeResult(
        scheme=scheme,
        u=u,
        delta=delta,
        power=float(u @ u),
        ci_residual=float(np.abs(residual).max()),
        kkt=verify_kkt(slot, delta),
        elapsed=elapsed,
        solver_status=solver_status,
    )


def verify_kkt(slot: SlotProblem, delta: np.ndarray, tol: float = 0.0) -> KktResiduals:
    """Residuals of the slack QP optimality system at `delta`.

    All three residuals vanish exactly at the optimal slack; `tol` is
    carried into the result so callers can ask `passed`.
    """
    psi = slot.power_quad @ delta + slot.power_lin
    return KktResiduals(
        dual_feasibility=float(max(0.0, -psi.min())),
        complementarity=float(np.abs(psi * delta).max()),
        primal_feasibility=float(max(0.0, -np.asarray(delta).min())),
        tol=tol,
    )


def predicted_inactive_mask(power_lin: np.ndarray) -> np.ndarray:
    """Support predicted by the closed-form scheme: power_lin < 0.

    Entries within 1e-12 of zero count as non-negative, so boundary slacks
    stay at the bound.
    """
    return power_lin < -_SIGN_ZERO_TOL


def optimal_inactive_mask(delta: np.ndarray, power_lin: np.ndarray) -> np.ndarray:
    """Support of an optimal slack: entries above 1e-7 * (1 + ||power_lin||)."""
    threshold = _ACTIVE_TOL_COEFF * (1.0 + float(np.linalg.norm(power_lin)))
    return np.asarray(delta) > threshold


def active_set_accuracy(predicted: np.ndarray, optimal: np.ndarray) -> float:
    """Fraction of slack entries whose support membership was predicted right."""
    predicted = np.asarray(predicted, dtype=bool)
    optimal = np.asarray(optimal, dtype=bool)
    if predicted.shape != optimal.shape:
        raise ValueError("support masks differ in shape")
    return float(np.mean(predicted == optimal))


def receive_points(slot: SlotProblem, u: np.ndarray) -> np.ndarray:
    """(K, 2) noise-free receive points of transmit vector `u`."""
    return (slot.channel.h_lift @ u).reshape(slot.n_users, 2)
