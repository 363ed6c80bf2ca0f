"""Active-set solver for strictly convex non-negative least squares.

Solves min_x ||C x - d||^2 subject to x >= 0 for a matrix C with full
column rank, with the classic Lawson-Hanson active-set iteration (Lawson &
Hanson, "Solving Least Squares Problems", 1974).  The restricted
subproblems are solved through the reduced normal equations with a
Cholesky factorization of the restricted C^T C, refactorized from scratch
on every active-set change; the problems this package feeds in have at
most a few dozen variables, so up/downdating machinery would buy nothing.

A brute-force oracle that enumerates every active pattern is provided for
cross-checking the solver on small instances.  The two routes share no
iteration logic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = ["NnlsProblem", "NnlsSolution", "nnls_solve", "nnls_oracle"]

_ORACLE_MAX_VARS = 12


@dataclass(frozen=True)
class NnlsProblem:
    """A non-negative least-squares instance min ||c x - d||^2, x >= 0.

    Attributes:
        c: (m, n) matrix with full column rank (requires m >= n).
        d: (m,) target vector.
        tol: dual-feasibility tolerance; the returned gradient satisfies
            dual >= -tol elementwise.  Defaults to 1e-9 * (1 + ||d||^2).
        max_iter: outer-iteration cap, defaults to 10 * n.
    """

    c: np.ndarray
    d: np.ndarray
    tol: float = field(default=-1.0)
    max_iter: int = field(default=-1)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        d = np.asarray(self.d, dtype=float)
        if c.ndim != 2 or d.ndim != 1 or c.shape[0] != d.shape[0]:
            raise ValueError(f"shape mismatch: c is {c.shape}, d is {d.shape}")
        if c.shape[0] < c.shape[1]:
            raise ValueError(f"c must have full column rank, got shape {c.shape}")
        if not (np.isfinite(c).all() and np.isfinite(d).all()):
            raise ValueError("non-finite entries in problem data")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        if self.tol < 0:
            object.__setattr__(self, "tol", 1e-9 * (1.0 + float(d @ d)))
        if self.max_iter < 0:
            object.__setattr__(self, "max_iter", 10 * c.shape[1])


@dataclass(frozen=True)
class NnlsSolution:
    """Solution certificate of an NNLS instance.

    Attributes:
        delta: (n,) minimizer; entries held at the bound are exact zeros.
        dual: (n,) gradient 2 C^T (C delta - d) at the minimizer.
        objective: ||C delta - d||^2.
        iterations: outer iterations spent (pattern count for the oracle).
        status: "converged" or "iteration-cap".
        objective_history: starting objective followed by the objective
            after each outer iteration, only populated when the solver is
            asked to track it.
    """

    delta: np.ndarray
    dual: np.ndarray
    objective: float
    iterations: int
    status: str
    objective_history: tuple[float, ...] = ()


def nnls_solve(problem: NnlsProblem, track_objective: bool = False) -> NnlsSolution:
    """Solve an NNLS instance with the Lawson-Hanson active-set iteration.

    Args:
        problem: the instance; strict convexity (full column rank) is
            assumed and makes the minimizer unique.
        track_objective: record the objective after every outer iteration
            in the returned solution (costs one matrix-vector per step).

    Returns:
        NnlsSolution; status is "iteration-cap" if the cap was hit before
        dual feasibility was reached, the best iterate found so far is
        returned in that case.
    """
    c, d = problem.c, problem.d
    n = c.shape[1]
    ctc = c.T @ c
    ctd = c.T @ d
    # dual = -2 w stays >= -tol once every zero entry has w <= tol/2
    w_stop = 0.5 * problem.tol

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    history: list[float] = [float(d @ d)] if track_objective else []
    iterations = 0
    status = "converged"
    while True:
        w = ctd - ctc @ x
        candidates = ~passive
        if not candidates.any() or np.max(w[candidates]) <= w_stop:
            break
        if iterations >= problem.max_iter:
            status = "iteration-cap"
            break
        iterations += 1
        # entering variable: most negative gradient among the bound ones,
        # argmax scans in order so ties resolve to the lowest index
        w_masked = np.where(candidates, w, -np.inf)
        passive[int(np.argmax(w_masked))] = True
        while True:
            z = _restricted_solve(ctc, ctd, passive)
            z_p = z[passive]
            if z_p.size == 0 or z_p.min() > 0.0:
                x = z
                break
            # backtrack along x -> z until the first passive entry hits zero
            blocking = passive & (z <= 0.0)
            ratios = x[blocking] / (x[blocking] - z[blocking])
            alpha = float(ratios.min())
            x = x + alpha * (z - x)
            x[~passive] = 0.0
            drop = passive & (x <= _drop_tol(x))
            if not drop.any():
                # numerical guard: force out the lowest-index blocker
                drop_idx = np.flatnonzero(blocking)[int(np.argmin(ratios))]
                drop = np.zeros(n, dtype=bool)
                drop[drop_idx] = True
            x[drop] = 0.0
            passive &= ~drop
        if track_objective:
            r = c @ x - d
            history.append(float(r @ r))

    r = c @ x - d
    dual = 2.0 * (c.T @ r)
    return NnlsSolution(
        delta=x,
        dual=dual,
        objective=float(r @ r),
        iterations=iterations,
        status=status,
        objective_history=tuple(history),
    )


def _restricted_solve(ctc: np.ndarray, ctd: np.ndarray, passive: np.ndarray) -> np.ndarray:
    """Unconstrained minimizer over the passive coordinates, zeros elsewhere."""
    z = np.zeros(ctc.shape[0])
    idx = np.flatnonzero(passive)
    if idx.size:
        sub = ctc[np.ix_(idx, idx)]
        # data was validated finite when the problem was built
        z[idx] = cho_solve(cho_factor(sub, check_finite=False), ctd[idx], check_finite=False)
    return z


def _drop_tol(x: np.ndarray) -> float:
    return 1e-12 * (1.0 + float(np.max(x, initial=0.0)))


def nnls_oracle(problem: NnlsProblem) -> NnlsSolution:
    """Certify an NNLS instance by enumerating every active pattern.

    Every subset of variables is tried as the passive (positive) set; the
    restricted normal equations are solved, infeasible candidates are
    discarded and the feasible candidate with the smallest objective wins.
    Intended as an independent cross-check of nnls_solve on small
    instances; cost grows as 2^n.

    Raises:
        ValueError: more than 12 variables.
    """
    c, d = problem.c, problem.d
    n = c.shape[1]
    if n > _ORACLE_MAX_VARS:
        raise ValueError(f"oracle enumerates 2^n patterns, refusing n={n} > {_ORACLE_MAX_VARS}")
    ctc = c.T @ c
    ctd = c.T @ d
    primal_tol = 1e-12 * (1.0 + float(np.abs(ctd).max(initial=0.0)))
    dual_tol = 0.5 * problem.tol

    best: tuple[float, np.ndarray] | None = None
    best_loose: tuple[float, np.ndarray] | None = None
    for pattern in range(1 << n):
        mask = np.array([(pattern >> j) & 1 for j in range(n)], dtype=bool)
        x = np.zeros(n)
        idx = np.flatnonzero(mask)
        if idx.size:
            sub = ctc[np.ix_(idx, idx)]
            try:
                x[idx] = np.linalg.solve(sub, ctd[idx])
            except np.linalg.LinAlgError:
                continue
        if x.min(initial=0.0) < -primal_tol:
            continue
        r = c @ x - d
        obj = float(r @ r)
        if best_loose is None or obj < best_loose[0]:
            best_loose = (obj, x)
        w = ctd - ctc @ x
        if np.max(w[~mask], initial=-np.inf) > dual_tol:
            continue
        if best is None or obj < best[0]:
            best = (obj, x)
    if best is None:
        # tolerance corner: fall back to the best primal-feasible candidate
        best = best_loose
    assert best is not None  # the empty pattern is always primal feasible
    obj, x = best
    dual = 2.0 * (c.T @ (c @ x - d))
    return NnlsSolution(
        delta=x,
        dual=dual,
        objective=obj,
        iterations=1 << n,
        status="converged",
    )
