"""Online players for the constrained purchasing problem.

The threshold-based robust player, its advice-following variant, the
convex-combination baseline, and three simple heuristics.  Each advice-free
algorithm is available both as a one-shot runner over a full instance and
as an incremental player that consumes one price vector at a time, which
is what the adaptive adversary drives.

All players honor the compulsory trade: once waiting any longer could
leave the demand unfinishable even at maximal purchase rates, they switch
to a greedy filling controller regardless of prices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    FEAS_TOL,
    DimensionMismatch,
    DomainError,
    InfeasibleError,
    Instance,
    Trajectory,
    compulsory_start,
    constraint_value,
    make_trajectory,
    weighted_l1,
)
from .subproblem import (
    ConsistencyContext,
    StepContext,
    fill_to_utilization,
    minimize_pseudo_cost,
    minimize_pseudo_cost_constrained,
)
from .thresholds import ThresholdParams, make_threshold_params

__all__ = [
    "Alg1State",
    "ClipState",
    "BaselineConfig",
    "compulsory_controller",
    "run_alg1",
    "run_clip",
    "run_baseline",
    "run_agnostic",
    "run_move_to_minimizer",
    "run_simple_threshold",
    "make_player",
    "ADVICE_FREE_ALGORITHMS",
]


@dataclass
class Alg1State:
    """Mutable per-run state of the threshold player."""

    t: int = 1
    z: float = 0.0
    x_prev: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass
class ClipState:
    """Mutable per-run state of the advice-following player.

    ``p`` is the pseudo-utilization that prices the threshold credit; it
    never exceeds the true utilization ``z``.
    """

    t: int = 1
    z: float = 0.0
    p: float = 0.0
    x_prev: np.ndarray = field(default_factory=lambda: np.zeros(0))
    advice_utilization: float = 0.0
    clip_cost: float = 0.0
    adv_cost: float = 0.0


@dataclass(frozen=True)
class BaselineConfig:
    """Mixing weight of the advice in the convex-combination baseline."""

    epsilon: float
    lam: float

    @staticmethod
    def from_epsilon(alpha: float, epsilon: float) -> "BaselineConfig":
        if epsilon <= 0.0:
            raise DomainError("epsilon must be positive")
        if alpha <= 1.0:
            return BaselineConfig(epsilon=epsilon, lam=0.0)
        lam = max(0.0, (alpha - 1.0 - epsilon) / (alpha - 1.0))
        return BaselineConfig(epsilon=epsilon, lam=lam)


def _fire(t: int, z: float, T: int, c_weights: np.ndarray) -> bool:
    # Same predicate as core.compulsory_start, shape-level arguments.
    return bool(np.all((T - (t + 1)) * c_weights < 1.0 - z))


def _controller_decision(z: float, t: int, T: int, c_weights: np.ndarray) -> np.ndarray:
    """Greedy filling decision for the compulsory trade.

    Fills the cheapest-to-fill dimension (largest c weight, lowest index on
    ties) whenever the remaining steps at that rate still cover the residual
    demand; otherwise fills every dimension at maximal rate.  Raises when
    even maximal filling cannot finish in the steps left.
    """
    d = c_weights.shape[0]
    r = 1.0 - z
    if r <= FEAS_TOL:
        return np.zeros(d)
    steps_left = T - t + 1
    if steps_left <= 0:
        raise InfeasibleError("no steps left to finish the demand")
    k = int(np.argmax(c_weights))
    x = np.zeros(d)
    if steps_left * c_weights[k] >= r - FEAS_TOL:
        x[k] = min(1.0, r / c_weights[k])
        return x
    # Single-dimension filling cannot finish: spread across dimensions.
    budget = min(1.0, r)
    order = np.lexsort((np.arange(d), -c_weights))
    for i in order:
        take = min(1.0, budget / c_weights[i])
        x[i] = take
        budget -= take * c_weights[i]
        if budget <= FEAS_TOL:
            break
    if t == T and constraint_value(x, c_weights) < r - FEAS_TOL:
        raise InfeasibleError("demand unfinishable even at maximal purchase rate")
    return x


def compulsory_controller(state, instance: Instance, t: int) -> np.ndarray:
    """Decision of the compulsory-trade controller at step t.

    ``state`` is anything carrying the current utilization as attribute
    ``z`` (Alg1State, ClipState) or a bare float.
    """
    z = float(getattr(state, "z", state))
    if not 1 <= t <= instance.T:
        raise DomainError(f"step {t} outside 1..{instance.T}")
    return _controller_decision(z, t, instance.T, instance.c_weights)


class _PlayerBase:
    """Incremental online player: decide() consumes price vectors in step
    order and must be called exactly T times."""

    def __init__(self, d: int, T: int, L: float, U: float,
                 c_weights: np.ndarray, w_weights: np.ndarray) -> None:
        self.d = d
        self.T = T
        self.L = L
        self.U = U
        self.c_weights = np.asarray(c_weights, dtype=float)
        self.w_weights = np.asarray(w_weights, dtype=float)
        self.t = 1
        self.z = 0.0

    def _advance(self, x: np.ndarray) -> np.ndarray:
        self.z += constraint_value(x, self.c_weights)
        self.t += 1
        return x

    def decide(self, f_t: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class _Alg1Player(_PlayerBase):
    def __init__(self, d, T, L, U, c_weights, w_weights,
                 params: Optional[ThresholdParams] = None) -> None:
        super().__init__(d, T, L, U, c_weights, w_weights)
        beta = float(np.max(self.w_weights / self.c_weights))
        self.params = params or make_threshold_params(L, U, beta)
        self.x_prev = np.zeros(d)

    def decide(self, f_t: np.ndarray) -> np.ndarray:
        f_t = np.asarray(f_t, dtype=float)
        if self.z >= 1.0 - FEAS_TOL:
            x = np.zeros(self.d)
        else:
            ctx = StepContext(
                f_t=f_t,
                x_prev=self.x_prev,
                z=self.z,
                cap=1.0 - self.z,
                c_weights=self.c_weights,
                w_weights=self.w_weights,
                params=self.params,
            )
            if _fire(self.t, self.z, self.T, self.c_weights):
                # Forced filling on the compulsory controller's schedule, but
                # picking the cheapest coordinates: the guarantee needs the
                # player to keep exploiting low prices inside the window.
                y = min(1.0 - self.z, 1.0, float(np.sum(self.c_weights)))
                x = fill_to_utilization(ctx, y)
            else:
                x = minimize_pseudo_cost(ctx)
        self.x_prev = x
        return self._advance(x)


class _AgnosticPlayer(_PlayerBase):
    """Buys the whole demand in the first step's cheapest dimension, then
    idles.  The purchase repeats while the demand stays uncovered, which
    only matters when one maxed-out decision cannot cover it; a compulsory
    guard keeps pathological instances feasible."""

    def __init__(self, d, T, L, U, c_weights, w_weights) -> None:
        super().__init__(d, T, L, U, c_weights, w_weights)
        self.k: Optional[int] = None

    def decide(self, f_t: np.ndarray) -> np.ndarray:
        f_t = np.asarray(f_t, dtype=float)
        x = np.zeros(self.d)
        if self.z < 1.0 - FEAS_TOL:
            if self.k is None:
                self.k = int(np.argmin(f_t))
            if _fire(self.t, self.z, self.T, self.c_weights):
                x = _controller_decision(self.z, self.t, self.T, self.c_weights)
            else:
                x[self.k] = min(1.0, (1.0 - self.z) / self.c_weights[self.k])
        return self._advance(x)


class _MoveToMinimizerPlayer(_PlayerBase):
    """Buys 1/T of the demand per step in that step's cheapest dimension,
    hopping dimensions as the minimizer moves."""

    def decide(self, f_t: np.ndarray) -> np.ndarray:
        f_t = np.asarray(f_t, dtype=float)
        x = np.zeros(self.d)
        if self.z < 1.0 - FEAS_TOL:
            k = int(np.argmin(f_t))
            if self.t == self.T:
                x[k] = min(1.0, (1.0 - self.z) / self.c_weights[k])
            else:
                x[k] = min(1.0, 1.0 / (self.T * self.c_weights[k]))
        return self._advance(x)


class _SimpleThresholdPlayer(_PlayerBase):
    """Buys everything the first time a price drops to sqrt(U * L), falling
    back to the compulsory trade if none ever does."""

    def __init__(self, d, T, L, U, c_weights, w_weights) -> None:
        super().__init__(d, T, L, U, c_weights, w_weights)
        self.psi = math.sqrt(U * L)

    def decide(self, f_t: np.ndarray) -> np.ndarray:
        f_t = np.asarray(f_t, dtype=float)
        x = np.zeros(self.d)
        if self.z < 1.0 - FEAS_TOL:
            if _fire(self.t, self.z, self.T, self.c_weights):
                x = _controller_decision(self.z, self.t, self.T, self.c_weights)
            else:
                hits = np.nonzero(f_t <= self.psi)[0]
                if hits.size:
                    k = int(hits[0])
                    x[k] = min(1.0, (1.0 - self.z) / self.c_weights[k])
        return self._advance(x)


_PLAYERS = {
    "alg1": _Alg1Player,
    "agnostic": _AgnosticPlayer,
    "move_to_minimizer": _MoveToMinimizerPlayer,
    "simple_threshold": _SimpleThresholdPlayer,
}

ADVICE_FREE_ALGORITHMS = tuple(_PLAYERS)


def make_player(name: str, d: int, T: int, L: float, U: float,
                c_weights: np.ndarray, w_weights: np.ndarray, **kwargs):
    """Instantiate an advice-free incremental player by name."""
    try:
        cls = _PLAYERS[name]
    except KeyError:
        raise DomainError(
            f"unknown algorithm {name!r}; choose from {sorted(_PLAYERS)}"
        ) from None
    return cls(d, T, L, U, np.asarray(c_weights, dtype=float),
               np.asarray(w_weights, dtype=float), **kwargs)


def _drive(player: _PlayerBase, instance: Instance) -> Trajectory:
    xs = [player.decide(instance.costs[t]) for t in range(instance.T)]
    if player.z < 1.0 - 1e-9:
        raise InfeasibleError(f"run finished with utilization {player.z} < 1")
    return make_trajectory(instance, np.asarray(xs))


def run_alg1(instance: Instance, params: Optional[ThresholdParams] = None) -> Trajectory:
    """Run the threshold player over a full instance."""
    player = _Alg1Player(instance.d, instance.T, instance.L, instance.U,
                         instance.c_weights, instance.w_weights, params=params)
    return _drive(player, instance)


def run_agnostic(instance: Instance) -> Trajectory:
    player = _AgnosticPlayer(instance.d, instance.T, instance.L, instance.U,
                             instance.c_weights, instance.w_weights)
    return _drive(player, instance)


def run_move_to_minimizer(instance: Instance) -> Trajectory:
    player = _MoveToMinimizerPlayer(instance.d, instance.T, instance.L, instance.U,
                                    instance.c_weights, instance.w_weights)
    return _drive(player, instance)


def run_simple_threshold(instance: Instance) -> Trajectory:
    player = _SimpleThresholdPlayer(instance.d, instance.T, instance.L, instance.U,
                                    instance.c_weights, instance.w_weights)
    return _drive(player, instance)


def _check_advice(instance: Instance, advice: np.ndarray) -> np.ndarray:
    advice = np.asarray(advice, dtype=float)
    if advice.shape != (instance.T, instance.d):
        raise DimensionMismatch(
            f"advice shape {advice.shape} != {(instance.T, instance.d)}"
        )
    if np.any(advice < -FEAS_TOL) or np.any(advice > 1.0 + FEAS_TOL):
        raise DomainError("advice leaves the unit box")
    total = float(np.sum(advice @ instance.c_weights))
    if total < 1.0 - 1e-9:
        raise InfeasibleError(f"advice covers only {total} of the demand")
    return np.clip(advice, 0.0, 1.0)


# Compulsory-trade policy for the advice-following player: "follow" tracks
# the advice's own remaining plan and only tops up what must be forced,
# "fill" forces the remaining demand on the controller's schedule into the
# cheapest coordinates (mirroring the advice-free player), "controller"
# fills greedily ignoring both prices and advice.  Following the advice is
# what keeps the window within the consistency budget: the advice already
# paid for its own schedule, so tracking it costs at most that again.
_CLIP_COMPULSORY = "follow"


def _top_up(x: np.ndarray, amount: float, c_weights: np.ndarray) -> np.ndarray:
    """Raise x by ``amount`` of utilization, largest c weight first."""
    x = x.copy()
    order = np.lexsort((np.arange(x.shape[0]), -c_weights))
    for i in order:
        if amount <= FEAS_TOL:
            break
        take = min(1.0 - x[i], amount / c_weights[i])
        x[i] += take
        amount -= take * c_weights[i]
    return x


def run_clip(
    instance: Instance,
    advice: np.ndarray,
    epsilon: float,
    params: Optional[ThresholdParams] = None,
) -> Trajectory:
    """Run the advice-following player.

    Decisions minimize the augmented-threshold pseudo-cost subject to the
    consistency constraint that keeps the run's worst-case completion within
    (1 + epsilon) of the advice's.  The threshold credit is priced at the
    pseudo-utilization p, advanced each step by the smaller of the actual
    and the unconstrained-minimizer purchase.

    epsilon may exceed the robust optimum alpha - 1; the augmented threshold
    is then the robust one and the consistency constraint simply never
    tightens below that behavior.
    """
    if epsilon <= 0.0:
        raise DomainError("epsilon must be positive")
    advice = _check_advice(instance, advice)
    beta = instance.beta
    if params is None or params.gamma_eps is None:
        alpha = make_threshold_params(instance.L, instance.U, beta).alpha
        if alpha <= 1.0 + 1e-12:
            # Degenerate flat-price case: the threshold is constant and the
            # augmented rate has no room to move.
            params = make_threshold_params(instance.L, instance.U, beta)
        else:
            eps_thr = min(epsilon, alpha - 1.0)
            params = make_threshold_params(instance.L, instance.U, beta, epsilon=eps_thr)

    st = ClipState(x_prev=np.zeros(instance.d))
    a_prev = np.zeros(instance.d)
    xs = []
    follow_ratio: Optional[float] = None
    for t in range(1, instance.T + 1):
        f_t = instance.costs[t - 1]
        a_t = advice[t - 1]
        st.advice_utilization += constraint_value(a_t, instance.c_weights)
        st.adv_cost += float(f_t @ a_t) + weighted_l1(a_t - a_prev, instance.w_weights)

        if st.z >= 1.0 - FEAS_TOL:
            x = np.zeros(instance.d)
        elif _fire(t, st.z, instance.T, instance.c_weights):
            if _CLIP_COMPULSORY == "controller":
                x = _controller_decision(st.z, t, instance.T, instance.c_weights)
            elif _CLIP_COMPULSORY == "fill":
                # Same forced schedule as the advice-free player: maximal
                # amounts, cheapest coordinates, consistency ignored (its
                # terms pre-charged the window at these rates already).
                ctx = StepContext(
                    f_t=f_t,
                    x_prev=st.x_prev,
                    z=st.p,
                    cap=1.0 - st.z,
                    c_weights=instance.c_weights,
                    w_weights=instance.w_weights,
                    params=params,
                )
                y = min(1.0 - st.z, 1.0, float(np.sum(instance.c_weights)))
                x = fill_to_utilization(ctx, y)
            else:
                # Track the advice's remaining plan, scaled to this run's
                # residual demand, and force only what can no longer wait.
                if follow_ratio is None:
                    adv_rest = float(np.sum(advice[t - 1:] @ instance.c_weights))
                    need = 1.0 - st.z
                    follow_ratio = min(1.0, need / adv_rest) if adv_rest > FEAS_TOL else 0.0
                x = np.clip(a_t * follow_ratio, 0.0, 1.0)
                max_later = (instance.T - t) * float(np.max(instance.c_weights))
                shortfall = (1.0 - st.z - constraint_value(x, instance.c_weights)) - max_later
                if shortfall > FEAS_TOL:
                    x = _top_up(x, shortfall, instance.c_weights)
        else:
            ctx = StepContext(
                f_t=f_t,
                x_prev=st.x_prev,
                z=st.p,
                cap=1.0 - st.z,
                c_weights=instance.c_weights,
                w_weights=instance.w_weights,
                params=params,
            )
            cc = ConsistencyContext(
                a_t=a_t,
                adv_cost=st.adv_cost,
                clip_cost_so_far=st.clip_cost,
                advice_utilization=st.advice_utilization,
                z_prev=st.z,
                epsilon=epsilon,
            )
            x = minimize_pseudo_cost_constrained(ctx, cc)
            x_bar = minimize_pseudo_cost(ctx)
            st.p += min(
                constraint_value(x_bar, instance.c_weights),
                constraint_value(x, instance.c_weights),
            )

        st.clip_cost += float(f_t @ x) + weighted_l1(x - st.x_prev, instance.w_weights)
        st.z += constraint_value(x, instance.c_weights)
        st.p = min(st.p, st.z)
        st.x_prev = x
        a_prev = a_t
        st.t = t + 1
        xs.append(x)

    if st.z < 1.0 - 1e-9:
        raise InfeasibleError(f"run finished with utilization {st.z} < 1")
    return make_trajectory(instance, np.asarray(xs))


def run_baseline(instance: Instance, advice: np.ndarray, epsilon: float) -> Trajectory:
    """Convex combination of the advice and the threshold player's run.

    The advice weight decreases linearly in epsilon and hits zero at the
    robust optimum alpha - 1 (values beyond that degenerate to the pure
    threshold run).
    """
    advice = _check_advice(instance, advice)
    alpha = make_threshold_params(instance.L, instance.U, instance.beta).alpha
    cfg = BaselineConfig.from_epsilon(alpha, epsilon)
    robust = run_alg1(instance)
    xs = cfg.lam * advice + (1.0 - cfg.lam) * robust.decisions
    return make_trajectory(instance, xs)
