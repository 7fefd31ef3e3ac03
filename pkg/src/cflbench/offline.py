"""Offline reference solutions.

The hindsight problem is a linear program: box variables per step, auxiliary
variables for the movement magnitudes (including the forced returns to the
origin at both ends), and one covering constraint on total utilization.
scipy's HiGHS backend solves it exactly for the sizes this package works at.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .core import (
    DomainError,
    Instance,
    NumericError,
    Trajectory,
    make_trajectory,
)

__all__ = [
    "OfflineSolution",
    "AdviceConfig",
    "solve_opt",
    "solve_worst",
    "make_advice",
]


@dataclass(frozen=True)
class OfflineSolution:
    """Hindsight trajectory with its exact cost and solver metadata."""

    decisions: np.ndarray
    objective: float
    trajectory: Trajectory
    solver_stats: dict


@dataclass(frozen=True)
class AdviceConfig:
    """Advice quality dial: xi = 0 reproduces the hindsight optimum, xi = 1
    the cost-maximizing feasible plan."""

    xi: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.xi <= 1.0:
            raise DomainError(f"xi={self.xi} outside [0, 1]")


def _movement_rows(T: int, d: int):
    """Constraint rows encoding s_t >= |x_t - x_{t-1}| with zero boundary
    decisions, as two inequalities per movement variable."""
    n_x = T * d
    n_s = (T + 1) * d
    rows = []
    cols = []
    vals = []
    r = 0
    for t in range(T + 1):
        for i in range(d):
            s_col = n_x + t * d + i
            cur = t * d + i          # x_{t+1} in 1-based step terms
            prev = (t - 1) * d + i
            # x_t - x_{t-1} - s_t <= 0
            if t < T:
                rows.append(r); cols.append(cur); vals.append(1.0)
            if t > 0:
                rows.append(r); cols.append(prev); vals.append(-1.0)
            rows.append(r); cols.append(s_col); vals.append(-1.0)
            r += 1
            # x_{t-1} - x_t - s_t <= 0
            if t < T:
                rows.append(r); cols.append(cur); vals.append(-1.0)
            if t > 0:
                rows.append(r); cols.append(prev); vals.append(1.0)
            rows.append(r); cols.append(s_col); vals.append(-1.0)
            r += 1
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(r, n_x + n_s))
    return A, np.zeros(r)


def _extract(instance: Instance, res, stage: str) -> OfflineSolution:
    if not res.success:
        raise NumericError(f"{stage} LP failed: {res.message}")
    T, d = instance.T, instance.d
    xs = np.clip(res.x[: T * d].reshape(T, d), 0.0, 1.0)
    traj = make_trajectory(instance, xs)
    stats = {
        "status": int(res.status),
        "message": str(res.message),
        "iterations": int(getattr(res, "nit", -1)),
        "stage": stage,
    }
    return OfflineSolution(
        decisions=xs,
        objective=traj.total_cost,
        trajectory=traj,
        solver_stats=stats,
    )


def solve_opt(instance: Instance) -> OfflineSolution:
    """Hindsight-optimal trajectory: minimal hitting + switching cost subject
    to the covering constraint."""
    T, d = instance.T, instance.d
    n_x, n_s = T * d, (T + 1) * d
    cost = np.concatenate([
        instance.costs.ravel(),
        np.tile(instance.w_weights, T + 1),
    ])
    A_move, b_move = _movement_rows(T, d)
    cover = sparse.csr_matrix(
        (np.tile(-instance.c_weights, T),
         (np.zeros(n_x, dtype=int), np.arange(n_x))),
        shape=(1, n_x + n_s),
    )
    A = sparse.vstack([A_move, cover], format="csr")
    b = np.concatenate([b_move, [-1.0]])
    bounds = [(0.0, 1.0)] * n_x + [(0.0, None)] * n_s
    res = linprog(cost, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    sol = _extract(instance, res, "opt")
    lp_val = float(res.fun)
    if abs(lp_val - sol.objective) > 1e-7 * max(1.0, abs(sol.objective)):
        raise NumericError(
            f"LP value {lp_val} disagrees with trajectory cost {sol.objective}"
        )
    if sol.trajectory.final_utilization < 1.0 - 1e-9:
        raise NumericError("optimal trajectory failed the covering constraint")
    return sol


def solve_worst(instance: Instance) -> OfflineSolution:
    """Cost-maximizing feasible plan, the anti-advice.

    Maximizes hitting cost over plans using exactly the required
    utilization, then, among those, prefers support that alternates
    dimension parity across consecutive steps so the plan also switches
    expensively.  The reported objective is the returned trajectory's full
    cost.
    """
    T, d = instance.T, instance.d
    n_x = T * d
    hit = instance.costs.ravel()
    cover = sparse.csr_matrix(
        (np.tile(instance.c_weights, T),
         (np.zeros(n_x, dtype=int), np.arange(n_x))),
        shape=(1, n_x),
    )
    bounds = [(0.0, 1.0)] * n_x
    res = linprog(-hit, A_eq=cover, b_eq=[1.0], bounds=bounds, method="highs")
    if not res.success:
        raise NumericError(f"worst-case LP failed: {res.message}")
    h_star = float(hit @ res.x)

    parity = np.array(
        [1.0 if (t + i) % 2 == 0 else -1.0 for t in range(T) for i in range(d)]
    )
    keep = sparse.csr_matrix(
        (-hit, (np.zeros(n_x, dtype=int), np.arange(n_x))), shape=(1, n_x)
    )
    res2 = linprog(
        -parity,
        A_ub=keep,
        b_ub=[-(h_star - 1e-9 * max(1.0, abs(h_star)))],
        A_eq=cover,
        b_eq=[1.0],
        bounds=bounds,
        method="highs",
    )
    final = res2 if res2.success else res
    xs = np.clip(final.x.reshape(T, d), 0.0, 1.0)
    traj = make_trajectory(instance, xs)
    stats = {
        "status": int(final.status),
        "message": str(final.message),
        "iterations": int(getattr(final, "nit", -1)),
        "stage": "worst",
        "hitting_optimum": h_star,
    }
    return OfflineSolution(
        decisions=xs, objective=traj.total_cost, trajectory=traj, solver_stats=stats
    )


def make_advice(
    instance: Instance,
    config: AdviceConfig,
    opt: Optional[OfflineSolution] = None,
    worst: Optional[OfflineSolution] = None,
) -> np.ndarray:
    """Advice of tunable quality: pointwise mix of the hindsight optimum and
    the cost-maximizing plan.  Precomputed solutions can be passed in when
    sweeping xi over one instance."""
    opt = opt or solve_opt(instance)
    worst = worst if worst is not None else (
        solve_worst(instance) if config.xi > 0.0 else opt
    )
    return (1.0 - config.xi) * opt.decisions + config.xi * worst.decisions
