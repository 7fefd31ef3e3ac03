"""Per-step pseudo-cost subproblems.

Every online decision in this package reduces to one of two single-step
problems over the box [0, 1]^d with a budget-rate cap on c(x):

* unconstrained: minimize hitting + switching minus the threshold credit
  for the utilization the step adds;
* constrained: the same objective with a consistency-slack constraint that
  ties the step to an advice trajectory.

Both solvers are exact up to the requested tolerance and fully
deterministic.  A brute-force grid oracle is included for cross-checking
in low dimension.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import FEAS_TOL, DimensionMismatch, DomainError, constraint_value, weighted_l1
from .thresholds import ThresholdParams, phi_eps_integral, phi_integral

__all__ = [
    "StepContext",
    "ConsistencyContext",
    "pseudo_cost_objective",
    "minimize_pseudo_cost",
    "consistency_slack",
    "minimize_pseudo_cost_constrained",
    "grid_oracle",
]

# Slack allowed when classifying a decision as satisfying the consistency
# constraint; matches the post-hoc check used by the advice-following runner.
SLACK_TOL = 1e-9

_GOLDEN_ITERS = 70
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class StepContext:
    """Everything a single-step solve needs to know.

    ``z`` is the utilization already priced by the threshold (the lower
    integration limit) and ``cap`` bounds the utilization this step may
    add.  ``z + cap`` never exceeds 1: the threshold is only defined on
    the unit interval.
    """

    f_t: np.ndarray
    x_prev: np.ndarray
    z: float
    cap: float
    c_weights: np.ndarray
    w_weights: np.ndarray
    params: ThresholdParams

    def __post_init__(self) -> None:
        for name in ("f_t", "x_prev", "c_weights", "w_weights"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 1:
                raise DimensionMismatch(f"{name} must be one-dimensional")
            object.__setattr__(self, name, arr)
        d = self.f_t.shape[0]
        for name in ("x_prev", "c_weights", "w_weights"):
            if getattr(self, name).shape[0] != d:
                raise DimensionMismatch(f"{name} length != f_t length {d}")
        object.__setattr__(self, "z", float(self.z))
        object.__setattr__(self, "cap", float(self.cap))
        if not 0.0 <= self.z <= 1.0 + FEAS_TOL:
            raise DomainError(f"z={self.z} outside [0, 1]")
        if self.cap < -FEAS_TOL:
            raise DomainError(f"cap={self.cap} negative")
        if self.z + self.cap > 1.0 + 1e-9:
            raise DomainError(f"z + cap = {self.z + self.cap} exceeds 1")
        if np.any(self.c_weights <= 0.0):
            raise DomainError("c_weights must be strictly positive")

    @property
    def d(self) -> int:
        return self.f_t.shape[0]


@dataclass(frozen=True)
class ConsistencyContext:
    """State of the advice-following run entering the current step.

    ``adv_cost`` includes the advice's hitting and switching through the
    current step; ``clip_cost_so_far`` stops at the previous step.  ``a_t``
    is the advice decision for the current step and ``advice_utilization``
    the advice's cumulative utilization including ``a_t``.
    """

    a_t: np.ndarray
    adv_cost: float
    clip_cost_so_far: float
    advice_utilization: float
    z_prev: float
    epsilon: float

    def __post_init__(self) -> None:
        arr = np.asarray(self.a_t, dtype=float)
        if arr.ndim != 1:
            raise DimensionMismatch("a_t must be one-dimensional")
        object.__setattr__(self, "a_t", arr)
        object.__setattr__(self, "adv_cost", float(self.adv_cost))
        object.__setattr__(self, "clip_cost_so_far", float(self.clip_cost_so_far))
        object.__setattr__(self, "advice_utilization", float(self.advice_utilization))
        object.__setattr__(self, "z_prev", float(self.z_prev))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if self.epsilon <= 0.0:
            raise DomainError("epsilon must be positive")


def _credit(ctx: StepContext, z0: float, z1: float) -> float:
    """Threshold integral over [z0, z1], using the augmented threshold when
    the context's params carry one."""
    p = ctx.params
    if p.gamma_eps is not None:
        return float(phi_eps_integral(z0, z1, p))
    return float(phi_integral(z0, z1, p))


def _marginal_rate(ctx: StepContext) -> float:
    """Rate parameter of the active threshold (alpha or gamma_eps)."""
    p = ctx.params
    return p.alpha if p.gamma_eps is None else p.gamma_eps


def _effective_cap(ctx: StepContext) -> float:
    # c(x) <= 1 always; cap can only tighten it.
    return max(0.0, min(1.0, ctx.cap))


def pseudo_cost_objective(x: np.ndarray, ctx: StepContext) -> float:
    """Hitting + switching minus the threshold credit of the added utilization.

    ``x`` must lie in the box with c(x) <= min(1, cap), up to FEAS_TOL.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != ctx.f_t.shape:
        raise DimensionMismatch("x length != context dimension")
    if np.any(x < -FEAS_TOL) or np.any(x > 1.0 + FEAS_TOL):
        raise DomainError("x outside the unit box")
    y = constraint_value(x, ctx.c_weights)
    if y > _effective_cap(ctx) + 1e-9:
        raise DomainError(f"c(x)={y} exceeds cap {_effective_cap(ctx)}")
    hit = float(ctx.f_t @ x)
    switch = weighted_l1(x - ctx.x_prev, ctx.w_weights)
    return hit + switch - _credit(ctx, ctx.z, min(1.0, ctx.z + y))


def _segments(
    ctx: StepContext,
    nu: float = 0.0,
    a: Optional[np.ndarray] = None,
) -> list[tuple[float, int, float, float]]:
    """Per-coordinate linear pieces of the separable movement cost, sorted by
    marginal cost per unit of utilization.

    With ``nu == 0`` the cost is f.x + ||x - x_prev||_w; with ``nu > 0`` and
    advice ``a`` it is (1+nu)(f.x + ||x - x_prev||_w) + nu ||x - a||_w.
    Each entry is (rate, coordinate, lo, hi): raising x_i from lo to hi costs
    rate * c_i per unit of utilization.  Within a coordinate the pieces are
    convex (nondecreasing rates), and the sort is stable on
    (rate, coordinate, lo) so fills are deterministic.
    """
    f, w, c, xp = ctx.f_t, ctx.w_weights, ctx.c_weights, ctx.x_prev
    segs: list[tuple[float, int, float, float]] = []
    for i in range(ctx.d):
        if nu > 0.0 and a is not None:
            points = sorted({0.0, min(1.0, max(0.0, xp[i])), min(1.0, max(0.0, a[i])), 1.0})
        else:
            points = sorted({0.0, min(1.0, max(0.0, xp[i])), 1.0})
        for lo, hi in zip(points[:-1], points[1:]):
            if hi - lo <= 0.0:
                continue
            mid = 0.5 * (lo + hi)
            slope = f[i] + w[i] * math.copysign(1.0, mid - xp[i])
            if nu > 0.0 and a is not None:
                slope = (1.0 + nu) * slope + nu * w[i] * math.copysign(1.0, mid - a[i])
            segs.append((slope / c[i], i, lo, hi))
    segs.sort(key=lambda s: (s[0], s[1], s[2]))
    return segs


def _fill(segs, c: np.ndarray, d: int, y: float) -> np.ndarray:
    """Cheapest x with c(x) == y, filling sorted segments greedily."""
    x = np.zeros(d)
    remaining = y
    for rate, i, lo, hi in segs:
        if remaining <= 1e-15:
            break
        room = c[i] * (hi - lo)
        take = min(room, remaining)
        x[i] = lo + take / c[i]
        remaining -= take
    return x


def _movement_cost(ctx: StepContext, x: np.ndarray) -> float:
    return float(ctx.f_t @ x) + weighted_l1(x - ctx.x_prev, ctx.w_weights)


def minimize_pseudo_cost(ctx: StepContext, tol: float = 1e-7) -> np.ndarray:
    """Exact minimizer of the pseudo-cost over {x in [0,1]^d : c(x) <= cap}.

    The movement cost at fixed added utilization y is piecewise linear in y
    (greedy segment fill), and on each linear piece the objective's
    y-derivative is rate - phi(z + y), which has an explicit root.  The
    global minimum is therefore attained at a segment boundary, an interior
    stationary point, or an endpoint; all are enumerated.

    Ties are broken toward smaller added utilization, then lexicographically
    smaller x (the greedy fill is itself deterministic).
    """
    p = ctx.params
    cap = _effective_cap(ctx)
    y_max = min(cap, float(np.sum(ctx.c_weights)), max(0.0, 1.0 - ctx.z))
    if y_max <= 1e-15:
        return np.zeros(ctx.d)

    segs = _segments(ctx)
    rate = _marginal_rate(ctx)
    U, beta = p.U, p.beta
    dcoef = U / rate - U + 2.0 * beta  # exponential coefficient of the threshold

    candidates = [0.0, y_max]
    y_cum = 0.0
    for seg_rate, i, lo, hi in segs:
        span = ctx.c_weights[i] * (hi - lo)
        y0, y1 = y_cum, min(y_cum + span, y_max)
        y_cum += span
        if y0 >= y_max:
            break
        candidates.append(y0)
        if y1 > y0:
            candidates.append(y1)
        # Interior stationary point: phi(z + y) == seg_rate.  dcoef < 0 off
        # the degenerate L == U case, where phi is constant and boundaries
        # already cover the minimum.
        if dcoef < 0.0 and seg_rate < U - beta:
            zstar = rate * math.log((seg_rate - U + beta) / dcoef)
            ystar = zstar - ctx.z
            if y0 < ystar < y1:
                candidates.append(ystar)

    best_obj = math.inf
    best_y = 0.0
    best_x = np.zeros(ctx.d)
    for y in candidates:
        y = min(max(y, 0.0), y_max)
        x = _fill(segs, ctx.c_weights, ctx.d, y)
        obj = _movement_cost(ctx, x) - _credit(ctx, ctx.z, min(1.0, ctx.z + y))
        if obj < best_obj - 1e-15 or (abs(obj - best_obj) <= 1e-15 and y < best_y):
            best_obj, best_y, best_x = obj, y, x

    x = np.clip(best_x, 0.0, 1.0)
    total = constraint_value(x, ctx.c_weights)
    if total > cap and total > 0.0:
        x = x * (cap / total)
    return x


def fill_to_utilization(ctx: StepContext, y: float) -> np.ndarray:
    """Cheapest decision adding exactly ``y`` utilization (capped at what the
    box and the step cap allow).

    Chooses coordinates greedily by marginal movement cost per unit of
    utilization, the same ordering the pseudo-cost solvers use.  At a fixed
    utilization the threshold credit is a constant, so this is the exact
    minimizer of the pseudo-cost over {x : c(x) == y}.
    """
    if y < -FEAS_TOL:
        raise DomainError(f"target utilization {y} is negative")
    y_max = min(_effective_cap(ctx), float(np.sum(ctx.c_weights)))
    y = min(max(0.0, y), y_max)
    if y <= 1e-15:
        return np.zeros(ctx.d)
    x = np.clip(_fill(_segments(ctx), ctx.c_weights, ctx.d, y), 0.0, 1.0)
    total = constraint_value(x, ctx.c_weights)
    if total > 0.0 and abs(total - y) > 1e-12:
        x = np.clip(x * (y / total), 0.0, 1.0)
    return x


def consistency_slack(x: np.ndarray, ctx: StepContext, cc: ConsistencyContext) -> float:
    """Margin of the advice-consistency constraint at decision x.

    Nonnegative slack means choosing x keeps the run's worst-case completion
    within (1 + epsilon) of the advice's worst-case completion, assuming both
    finish at the cheapest possible rate L except where the advice has
    already over-covered (the max term charges the difference at U - L).
    """
    x = np.asarray(x, dtype=float)
    L, U = ctx.params.L, ctx.params.U
    a = cc.a_t
    w = ctx.w_weights
    y = constraint_value(x, ctx.c_weights)
    adv_norm = weighted_l1(a, w)
    budget = (1.0 + cc.epsilon) * (
        cc.adv_cost + adv_norm + (1.0 - cc.advice_utilization) * L
    )
    z_new = cc.z_prev + y
    spent = (
        cc.clip_cost_so_far
        + float(ctx.f_t @ x)
        + weighted_l1(x - ctx.x_prev, w)
        + weighted_l1(x - a, w)
        + adv_norm
        + (1.0 - z_new) * L
        + max(cc.advice_utilization - z_new, 0.0) * (U - L)
    )
    return budget - spent


def _constraint_lhs(ctx: StepContext, cc: ConsistencyContext, x: np.ndarray) -> float:
    """The x-dependent part of the consistency constraint, to be kept <= the
    utilization-dependent budget computed in _constraint_budget."""
    return (
        float(ctx.f_t @ x)
        + weighted_l1(x - ctx.x_prev, ctx.w_weights)
        + weighted_l1(x - cc.a_t, ctx.w_weights)
    )


def _constraint_budget(ctx: StepContext, cc: ConsistencyContext, y: float) -> float:
    L, U = ctx.params.L, ctx.params.U
    adv_norm = weighted_l1(cc.a_t, ctx.w_weights)
    z_new = cc.z_prev + y
    return (
        (1.0 + cc.epsilon) * (cc.adv_cost + adv_norm + (1.0 - cc.advice_utilization) * L)
        - cc.clip_cost_so_far
        - adv_norm
        - (1.0 - z_new) * L
        - max(cc.advice_utilization - z_new, 0.0) * (U - L)
    )


def _min_lhs_at(ctx: StepContext, cc: ConsistencyContext, y: float) -> tuple[float, np.ndarray]:
    """Minimum of the constraint's x-part at fixed added utilization y."""
    segs = _segments(ctx, nu=1e12, a=cc.a_t)
    x = _fill(segs, ctx.c_weights, ctx.d, y)
    return _constraint_lhs(ctx, cc, x), x


def _value_at(
    ctx: StepContext,
    cc: ConsistencyContext,
    y: float,
    nu_hint: list[float],
) -> tuple[float, Optional[np.ndarray]]:
    """Constrained movement-cost minimum at fixed added utilization y.

    Solves min f.x + ||x - x_prev||_w over {c(x) = y, box} subject to
    lhs(x) <= budget(y) by sweeping the Lagrange multiplier nu of the
    constraint: for each nu the relaxed problem is separable and solved by
    the greedy fill.  The bracketing solutions are then combined linearly
    to land on the constraint boundary (lhs is convex along the segment and
    c(.) is linear, so the combination stays utilization-exact).
    """
    budget = _constraint_budget(ctx, cc, y)
    plain = _segments(ctx)
    x_h = _fill(plain, ctx.c_weights, ctx.d, y)
    if _constraint_lhs(ctx, cc, x_h) <= budget + 1e-12:
        return _movement_cost(ctx, x_h), x_h

    lhs_min, x_g = _min_lhs_at(ctx, cc, y)
    if lhs_min > budget + 1e-12:
        return math.inf, None

    # Bracket nu: x(0) violates, x(nu_hi) satisfies.
    nu_lo, x_lo = 0.0, x_h
    nu_hi = max(nu_hint[0] / 4.0, 1.0)
    x_hi = None
    for _ in range(80):
        xc = _fill(_segments(ctx, nu=nu_hi, a=cc.a_t), ctx.c_weights, ctx.d, y)
        if _constraint_lhs(ctx, cc, xc) <= budget:
            x_hi = xc
            break
        nu_lo, x_lo = nu_hi, xc
        if nu_hi >= 1e12:
            # The relaxed fill has converged to the min-lhs solution well
            # before this point; growing nu further only risks overflow.
            break
        nu_hi *= 4.0
    if x_hi is None:
        x_hi = x_g
    for _ in range(60):
        if nu_hi - nu_lo <= 1e-10 * (1.0 + nu_hi):
            break
        nu_mid = 0.5 * (nu_lo + nu_hi)
        xc = _fill(_segments(ctx, nu=nu_mid, a=cc.a_t), ctx.c_weights, ctx.d, y)
        if _constraint_lhs(ctx, cc, xc) <= budget:
            nu_hi, x_hi = nu_mid, xc
        else:
            nu_lo, x_lo = nu_mid, xc
    nu_hint[0] = min(max(nu_hi, 1.0), 1e12)

    # Interpolate between the infeasible and feasible greedy solutions to sit
    # on the boundary; keep the feasible side.
    lam_lo, lam_hi = 0.0, 1.0  # weight on x_hi
    x_best = x_hi
    for _ in range(60):
        lam = 0.5 * (lam_lo + lam_hi)
        xc = (1.0 - lam) * x_lo + lam * x_hi
        if _constraint_lhs(ctx, cc, xc) <= budget:
            lam_hi, x_best = lam, xc
        else:
            lam_lo = lam
    return _movement_cost(ctx, x_best), x_best


def _truncated_advice(ctx: StepContext, cc: ConsistencyContext) -> np.ndarray:
    x = np.clip(cc.a_t, 0.0, 1.0)
    cap = _effective_cap(ctx)
    total = constraint_value(x, ctx.c_weights)
    if total > cap and total > 0.0:
        x = x * (cap / total)
    return x


def _subgradient_rescue(
    ctx: StepContext,
    cc: ConsistencyContext,
    starts: list[np.ndarray],
) -> Optional[np.ndarray]:
    """Projected subgradient descent on an exact-penalty objective; used only
    when the structured search fails to produce nonnegative slack."""
    from .thresholds import phi, phi_eps

    p = ctx.params
    mu = 1e3 * max(1.0, p.U)
    cap = _effective_cap(ctx)
    c, w, f, a = ctx.c_weights, ctx.w_weights, ctx.f_t, cc.a_t
    best: Optional[np.ndarray] = None
    best_obj = math.inf
    for x0 in starts:
        x = np.clip(np.asarray(x0, dtype=float), 0.0, 1.0)
        total = constraint_value(x, c)
        if total > cap and total > 0.0:
            x = x * (cap / total)
        for k in range(1, 501):
            y = constraint_value(x, c)
            zy = min(1.0, ctx.z + y)
            thr = phi_eps(zy, p) if p.gamma_eps is not None else phi(zy, p)
            g = f + w * np.sign(x - ctx.x_prev) - thr * c
            if consistency_slack(x, ctx, cc) < 0.0:
                g = g + mu * (
                    f
                    + w * np.sign(x - ctx.x_prev)
                    + w * np.sign(x - a)
                    - p.L * c
                    - (p.U - p.L) * c * float(cc.advice_utilization - cc.z_prev - y > 0.0)
                )
            x = np.clip(x - (0.05 / math.sqrt(k)) * g / max(1.0, float(np.max(np.abs(g)))), 0.0, 1.0)
            total = constraint_value(x, c)
            if total > cap and total > 0.0:
                x = x * (cap / total)
            if consistency_slack(x, ctx, cc) >= -SLACK_TOL:
                obj = pseudo_cost_objective(x, ctx)
                if obj < best_obj:
                    best_obj, best = obj, x.copy()
    return best


def minimize_pseudo_cost_constrained(
    ctx: StepContext,
    cc: ConsistencyContext,
    tol: float = 1e-7,
) -> np.ndarray:
    """Minimize the pseudo-cost subject to the advice-consistency constraint.

    The feasible utilization levels form an interval (the budget is concave
    in y while the minimal constraint cost is convex), so the solver brackets
    that interval by bisection and runs a golden-section search over it with
    the per-level constrained solve of _value_at.

    If the feasible set is certifiably empty the advice decision itself,
    truncated to the step's cap, is returned and the event is flagged with a
    warning; the caller decides how to account for it.
    """
    x_free = minimize_pseudo_cost(ctx, tol)
    if consistency_slack(x_free, ctx, cc) >= 0.0:
        return x_free

    cap = _effective_cap(ctx)
    y_max = min(cap, float(np.sum(ctx.c_weights)), max(0.0, 1.0 - ctx.z))

    def feas_margin(y: float) -> float:
        return _constraint_budget(ctx, cc, y) - _min_lhs_at(ctx, cc, y)[0]

    # Locate any feasible utilization level.
    probes = [
        min(max(constraint_value(cc.a_t, ctx.c_weights), 0.0), y_max),
        min(constraint_value(x_free, ctx.c_weights), y_max),
        0.0,
        y_max,
    ] + [y_max * k / 32.0 for k in range(1, 32)]
    y_seed = None
    for y in probes:
        if feas_margin(y) >= -1e-12:
            y_seed = y
            break
    if y_seed is None:
        warnings.warn(
            "consistency constraint infeasible at every utilization level; "
            "returning truncated advice",
            RuntimeWarning,
            stacklevel=2,
        )
        return _truncated_advice(ctx, cc)

    # Feasible set is an interval around y_seed; bisect for its edges.
    lo, hi = 0.0, y_seed
    if feas_margin(0.0) >= -1e-12:
        y_lo = 0.0
    else:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if feas_margin(mid) >= -1e-12:
                hi = mid
            else:
                lo = mid
        y_lo = hi
    lo, hi = y_seed, y_max
    if feas_margin(y_max) >= -1e-12:
        y_hi = y_max
    else:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if feas_margin(mid) >= -1e-12:
                lo = mid
            else:
                hi = mid
        y_hi = lo

    nu_hint = [1.0]

    def total_at(y: float) -> tuple[float, Optional[np.ndarray]]:
        move, x = _value_at(ctx, cc, y, nu_hint)
        if x is None:
            return math.inf, None
        return move - _credit(ctx, ctx.z, min(1.0, ctx.z + y)), x

    a_gs, b_gs = y_lo, y_hi
    c_gs = b_gs - _INV_PHI * (b_gs - a_gs)
    d_gs = a_gs + _INV_PHI * (b_gs - a_gs)
    fc, _ = total_at(c_gs)
    fd, _ = total_at(d_gs)
    for _ in range(_GOLDEN_ITERS):
        if b_gs - a_gs <= 1e-12:
            break
        if fc <= fd:
            b_gs, d_gs, fd = d_gs, c_gs, fc
            c_gs = b_gs - _INV_PHI * (b_gs - a_gs)
            fc, _ = total_at(c_gs)
        else:
            a_gs, c_gs, fc = c_gs, d_gs, fd
            d_gs = a_gs + _INV_PHI * (b_gs - a_gs)
            fd, _ = total_at(d_gs)

    # The budget has a kink where the advice's over-coverage term vanishes;
    # include it alongside the interval edges and the search result.
    finalists = [y_lo, y_hi, 0.5 * (a_gs + b_gs)]
    y_kink = cc.advice_utilization - cc.z_prev
    if y_lo < y_kink < y_hi:
        finalists.append(y_kink)
    best_obj = math.inf
    best_x: Optional[np.ndarray] = None
    for y in finalists:
        obj, x = total_at(min(max(y, y_lo), y_hi))
        if x is not None and obj < best_obj:
            best_obj, best_x = obj, x

    if best_x is None or consistency_slack(best_x, ctx, cc) < -SLACK_TOL:
        starts = [x for x in (best_x, x_free, _truncated_advice(ctx, cc)) if x is not None]
        starts.append(np.zeros(ctx.d))
        rescued = _subgradient_rescue(ctx, cc, starts)
        if rescued is not None:
            best_x = rescued
        elif best_x is None:
            warnings.warn(
                "constrained step solve failed to certify a feasible decision; "
                "returning truncated advice",
                RuntimeWarning,
                stacklevel=2,
            )
            return _truncated_advice(ctx, cc)

    x = np.clip(best_x, 0.0, 1.0)
    total = constraint_value(x, ctx.c_weights)
    if total > cap and total > 0.0:
        x = x * (cap / total)
    return x


def grid_oracle(
    ctx: StepContext,
    cc: Optional[ConsistencyContext] = None,
    grid_n: int = 200,
) -> np.ndarray:
    """Brute-force reference minimizer on a uniform grid, d <= 3 only.

    Enumerates grid_n levels per coordinate, masks out decisions violating
    the cap (and the consistency constraint when ``cc`` is given), and
    returns the best surviving grid point.  Intended purely as a test
    oracle for the structured solvers.
    """
    if ctx.d > 3:
        raise DomainError("grid oracle is limited to d <= 3")
    if grid_n < 2:
        raise DomainError("grid_n must be at least 2")
    levels = np.linspace(0.0, 1.0, grid_n)
    cap = _effective_cap(ctx)
    p = ctx.params

    best_obj = math.inf
    best_first: Optional[float] = None
    best_rest: Optional[np.ndarray] = None
    # Chunk over the leading coordinate so the d == 3 case stays in memory.
    # The trailing coordinates' contributions (utilization, hitting cost,
    # movement toward x_prev and toward the advice) only depend on the chunk
    # through the scalar ``first``, so they are precomputed once.
    if ctx.d > 1:
        mesh = np.meshgrid(*([levels] * (ctx.d - 1)), indexing="ij")
        rest = np.stack([m.ravel() for m in mesh], axis=1)
    else:
        rest = np.zeros((1, 0))
    rest_util = rest @ ctx.c_weights[1:]
    rest_hit = rest @ ctx.f_t[1:]
    rest_move = np.abs(rest - ctx.x_prev[1:]) @ ctx.w_weights[1:]
    if cc is not None:
        rest_amove = np.abs(rest - cc.a_t[1:]) @ ctx.w_weights[1:]
        adv_norm = weighted_l1(cc.a_t, ctx.w_weights)
        budget = (1.0 + cc.epsilon) * (
            cc.adv_cost + adv_norm + (1.0 - cc.advice_utilization) * p.L
        )
    for first in levels:
        util = rest_util + first * ctx.c_weights[0]
        hit = rest_hit + first * ctx.f_t[0]
        move = rest_move + abs(first - ctx.x_prev[0]) * ctx.w_weights[0]
        mask = util <= cap + FEAS_TOL
        if cc is not None:
            z_new = cc.z_prev + util
            spent = (
                cc.clip_cost_so_far
                + hit
                + move
                + rest_amove
                + abs(first - cc.a_t[0]) * ctx.w_weights[0]
                + adv_norm
                + (1.0 - z_new) * p.L
                + np.maximum(cc.advice_utilization - z_new, 0.0) * (p.U - p.L)
            )
            mask &= budget - spent >= -SLACK_TOL
        if not np.any(mask):
            continue
        util_m = util[mask]
        if p.gamma_eps is not None:
            credit = phi_eps_integral(ctx.z, np.minimum(1.0, ctx.z + util_m), p)
        else:
            credit = phi_integral(ctx.z, np.minimum(1.0, ctx.z + util_m), p)
        obj = hit[mask] + move[mask] - credit
        k = int(np.argmin(obj))
        if obj[k] < best_obj:
            best_obj = float(obj[k])
            best_first = first
            best_rest = rest[np.flatnonzero(mask)[k]].copy()
    if best_first is None:
        raise DomainError("no feasible grid point")
    return np.concatenate([[best_first], best_rest])
