"""Rolling-horizon booking model: states, feasible actions, transition,
stage cost, and exact value iteration at toy scale.

The state couples the day's waiting requests per priority class with the
remaining capacity of the next H days.  Booking an appointment consumes
capacity; each day the window rolls left and the newly visible day enters
with the full daily capacity.  The exact solver exists as an oracle for
small instances; realistic instances go through the fluid relaxation.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import SizeLimitError

ACTION_ENUM_LIMIT = 1_000_000
STATE_SPACE_LIMIT = 100_000


@dataclass(frozen=True)
class CostParams:
    late: np.ndarray     # (I, H): booking class i at offset h+1 costs late[i, h]
    reject: np.ndarray   # (I,): turning away a class-i request

    def __post_init__(self):
        late = np.asarray(self.late, dtype=float)
        reject = np.asarray(self.reject, dtype=float)
        if late.ndim != 2 or reject.ndim != 1 or late.shape[0] != reject.shape[0]:
            raise ValueError("late costs must be I x H and reject costs length I")
        if (late < 0).any() or (reject < 0).any():
            raise ValueError("costs must be nonnegative")
        for i, row in enumerate(late):
            if (np.diff(row) < 0).any():
                warnings.warn(
                    f"late costs for class {i + 1} are not monotone in the day offset")
        object.__setattr__(self, "late", late)
        object.__setattr__(self, "reject", reject)
        late.setflags(write=False)
        reject.setflags(write=False)


@dataclass(frozen=True)
class MdpConfig:
    i_classes: int
    horizon: int
    capacity: int
    d_max: np.ndarray
    arrival_rates: np.ndarray
    costs: CostParams
    discount: float = 0.95
    seed: int | None = None

    def __post_init__(self):
        if self.i_classes < 1 or self.horizon < 1 or self.capacity < 0:
            raise ValueError("need at least one class, one day, and capacity >= 0")
        d_max = np.asarray(self.d_max, dtype=int)
        rates = np.asarray(self.arrival_rates, dtype=float)
        if d_max.shape != (self.i_classes,) or rates.shape != (self.i_classes,):
            raise ValueError("d_max and arrival_rates must have one entry per class")
        if (d_max < 0).any() or (rates < 0).any():
            raise ValueError("d_max and arrival_rates must be nonnegative")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError("discount must lie in [0, 1)")
        if self.costs.late.shape != (self.i_classes, self.horizon):
            raise ValueError("late cost matrix must be I x H")
        object.__setattr__(self, "d_max", d_max)
        object.__setattr__(self, "arrival_rates", rates)
        d_max.setflags(write=False)
        rates.setflags(write=False)

    @classmethod
    def from_dict(cls, raw: dict) -> "MdpConfig":
        known = {"classes", "horizon", "capacity", "d_max", "arrival_rates",
                 "late_costs", "reject_costs", "discount", "seed"}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown mdp config keys: {sorted(unknown)}")
        costs = CostParams(late=np.asarray(raw["late_costs"], dtype=float),
                           reject=np.asarray(raw["reject_costs"], dtype=float))
        return cls(i_classes=int(raw["classes"]), horizon=int(raw["horizon"]),
                   capacity=int(raw["capacity"]),
                   d_max=np.asarray(raw["d_max"], dtype=int),
                   arrival_rates=np.asarray(raw["arrival_rates"], dtype=float),
                   costs=costs, discount=float(raw.get("discount", 0.95)),
                   seed=raw.get("seed"))

    @property
    def priority_order(self) -> list[int]:
        """Class indices from highest to lowest priority (largest reject cost
        first; ties broken toward the lower class index)."""
        return sorted(range(self.i_classes),
                      key=lambda i: (-self.costs.reject[i], i))


@dataclass(frozen=True)
class MdpState:
    x: np.ndarray   # waiting requests per class
    y: np.ndarray   # free spots for each of the next H days; y[-1] == G

    @staticmethod
    def validate(state: "MdpState", config: MdpConfig) -> None:
        x = np.asarray(state.x, dtype=int)
        y = np.asarray(state.y, dtype=int)
        if x.shape != (config.i_classes,) or y.shape != (config.horizon,):
            raise ValueError("state dimensions do not match the model")
        if (x < 0).any() or (x > config.d_max).any():
            raise ValueError("waiting requests out of [0, d_max]")
        if (y < 0).any() or (y > config.capacity).any():
            raise ValueError("capacities out of [0, G]")
        if y[-1] != config.capacity:
            raise ValueError("the newest day must carry full capacity")

    def is_time_ordered(self) -> bool:
        """Whether free capacity is nondecreasing toward later days.  Freshly
        rolled calendars start this way, but feasible bookings concentrated on
        late days can break it, so it is a diagnostic rather than an invariant."""
        return bool((np.diff(np.asarray(self.y)) >= 0).all())


def action_is_feasible(state: MdpState, action: np.ndarray, config: MdpConfig) -> bool:
    a = np.asarray(action, dtype=int)
    if a.shape != (config.i_classes, config.horizon) or (a < 0).any():
        return False
    if (a.sum(axis=0) > np.asarray(state.y)).any():
        return False
    return not (a.sum(axis=1) > np.asarray(state.x)).any()


def _count_column_vectors(caps: np.ndarray, budget: int) -> int:
    """Number of nonnegative integer vectors v with v_i <= caps_i and sum <= budget."""
    poly = np.zeros(budget + 1, dtype=float)
    poly[0] = 1.0
    for cap in caps:
        new = np.zeros_like(poly)
        width = min(int(cap), budget)
        csum = np.concatenate([[0.0], np.cumsum(poly)])
        for s in range(budget + 1):
            lo = max(0, s - width)
            new[s] = csum[s + 1] - csum[lo]
        poly = new
    return int(round(poly.sum()))


def count_actions_bound(state: MdpState, config: MdpConfig) -> int:
    """Upper bound on the feasible-action count: per-day counts multiplied,
    ignoring the row-budget coupling between days (which only removes actions)."""
    x = np.asarray(state.x, dtype=int)
    bound = 1
    for cap in np.asarray(state.y, dtype=int):
        bound *= _count_column_vectors(x, min(int(cap), int(x.sum())))
        if bound > 10 * ACTION_ENUM_LIMIT:
            return bound
    return bound


def _column_choices(x_rem: tuple[int, ...], cap: int):
    """All per-day booking vectors within the class budgets and the day cap."""
    def rec(i: int, left: int):
        if i == len(x_rem):
            yield ()
            return
        for v in range(min(x_rem[i], left) + 1):
            for rest in rec(i + 1, left - v):
                yield (v,) + rest
    yield from rec(0, cap)


def enumerate_actions(state: MdpState, config: MdpConfig) -> list[np.ndarray]:
    """Complete, duplicate-free enumeration of feasible booking matrices.

    Refuses instances whose action-count bound exceeds ``ACTION_ENUM_LIMIT``;
    such instances should be handled through the fluid relaxation instead.
    """
    MdpState.validate(state, config)
    bound = count_actions_bound(state, config)
    if bound > ACTION_ENUM_LIMIT:
        raise SizeLimitError(
            f"feasible-action bound {bound} exceeds {ACTION_ENUM_LIMIT}; "
            "use the fluid solver for instances of this size")
    x0 = tuple(int(v) for v in state.x)
    caps = [int(v) for v in state.y]
    actions: list[np.ndarray] = []

    def rec(h: int, x_rem: tuple[int, ...], cols: list[tuple[int, ...]]):
        if h == config.horizon:
            actions.append(np.array(cols, dtype=int).T.copy())
            return
        for v in _column_choices(x_rem, caps[h]):
            rec(h + 1, tuple(r - c for r, c in zip(x_rem, v)), cols + [v])

    rec(0, x0, [])
    return actions


def stage_cost(state: MdpState, action: np.ndarray, config: MdpConfig) -> float:
    """Booking penalties plus rejection penalties for everyone left unbooked."""
    a = np.asarray(action, dtype=int)
    if not action_is_feasible(state, a, config):
        raise ValueError("action is infeasible for this state")
    booked = a.sum(axis=1)
    late = float((config.costs.late * a).sum())
    rejected = np.asarray(state.x) - booked
    return late + float((config.costs.reject * rejected).sum())


def transition(state: MdpState, action: np.ndarray, arrivals: np.ndarray,
               config: MdpConfig) -> MdpState:
    """Roll the window one day: tomorrow's capacity is today's day-2 capacity
    minus what was just booked there, and the newly visible day is fresh."""
    a = np.asarray(action, dtype=int)
    if not action_is_feasible(state, a, config):
        raise ValueError("action is infeasible for this state")
    arrivals = np.asarray(arrivals, dtype=int)
    if (arrivals < 0).any() or (arrivals > config.d_max).any():
        raise ValueError("arrivals out of [0, d_max]")
    y = np.asarray(state.y, dtype=int)
    consumed = a.sum(axis=0)
    new_y = np.empty_like(y)
    new_y[:-1] = y[1:] - consumed[1:]
    new_y[-1] = config.capacity
    nxt = MdpState(x=arrivals.copy(), y=new_y)
    try:
        MdpState.validate(nxt, config)
    except ValueError as exc:
        raise RuntimeError(f"transition produced an invalid state: {exc}") from exc
    return nxt


def sample_arrivals(config: MdpConfig, rng) -> np.ndarray:
    """One day of independent Poisson arrivals, censored at d_max per class."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    draws = rng.poisson(config.arrival_rates)
    return np.minimum(draws, config.d_max).astype(int)


def truncated_poisson_pmf(rate: float, d_max: int) -> np.ndarray:
    """pmf over {0..d_max} with all mass above d_max lumped onto d_max."""
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    if rate == 0.0:
        pmf = np.zeros(d_max + 1)
        pmf[0] = 1.0
        return pmf
    ks = np.arange(d_max + 1)
    log_pmf = -rate + ks * math.log(rate) - np.array([math.lgamma(k + 1) for k in ks])
    pmf = np.exp(log_pmf)
    pmf[d_max] = max(1.0 - pmf[:d_max].sum(), 0.0)
    return pmf


@dataclass(frozen=True)
class ValueIterationResult:
    values: np.ndarray          # (n_x, n_y) expected discounted cost
    policy: dict                # (x_idx, y_idx) -> booking matrix
    x_states: tuple             # arrival vectors indexing axis 0
    y_states: tuple             # capacity vectors indexing axis 1
    iterations: int
    residual: float


def _state_spaces(config: MdpConfig):
    x_states = [np.array(v, dtype=int)
                for v in itertools.product(*(range(d + 1) for d in config.d_max))]
    free = [range(config.capacity + 1)] * (config.horizon - 1)
    y_states = [np.array(list(v) + [config.capacity], dtype=int)
                for v in itertools.product(*free)]
    return x_states, y_states


def value_iteration(config: MdpConfig, tol: float = 1e-8,
                    max_iter: int = 200_000) -> ValueIterationResult:
    """Exact fixed-point solve of the expected discounted cost.

    Only for toy instances: refuses when the state count exceeds
    ``STATE_SPACE_LIMIT``.  Arrival randomness only affects the request part
    of the state, so next-state values are aggregated per capacity vector
    before the minimization over actions.
    """
    x_states, y_states = _state_spaces(config)
    n_x, n_y = len(x_states), len(y_states)
    if n_x * n_y > STATE_SPACE_LIMIT:
        raise SizeLimitError(
            f"state space has {n_x * n_y} states (> {STATE_SPACE_LIMIT}); "
            "use the fluid solver for instances of this size")

    pmfs = [truncated_poisson_pmf(r, d) for r, d in zip(config.arrival_rates,
                                                        config.d_max)]
    joint_p = np.ones(n_x)
    for idx, xv in enumerate(x_states):
        for i, d in enumerate(xv):
            joint_p[idx] *= pmfs[i][d]

    y_index = {tuple(yv): j for j, yv in enumerate(y_states)}
    # per state: candidate (next capacity index, cheapest cost reaching it)
    per_state: list[tuple[np.ndarray, np.ndarray, dict]] = []
    for xv in x_states:
        for yv in y_states:
            state = MdpState(x=xv, y=yv)
            best_cost: dict[int, float] = {}
            best_action: dict[int, np.ndarray] = {}
            for a in enumerate_actions(state, config):
                consumed = a.sum(axis=0)
                ny = np.empty_like(yv)
                ny[:-1] = yv[1:] - consumed[1:]
                ny[-1] = config.capacity
                j = y_index[tuple(ny)]
                cost = stage_cost(state, a, config)
                if j not in best_cost or cost < best_cost[j] - 1e-15:
                    best_cost[j] = cost
                    best_action[j] = a
            targets = np.fromiter(best_cost.keys(), dtype=int)
            costs = np.fromiter((best_cost[j] for j in targets), dtype=float)
            per_state.append((targets, costs, best_action))

    values = np.zeros((n_x, n_y))
    residual = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        ev = joint_p @ values            # expected value per next capacity index
        new_flat = np.empty(n_x * n_y)
        for s, (targets, costs, _) in enumerate(per_state):
            new_flat[s] = (costs + config.discount * ev[targets]).min()
        new_values = new_flat.reshape(n_x, n_y)
        residual = float(np.abs(new_values - values).max())
        values = new_values
        if residual < tol:
            break

    ev = joint_p @ values
    policy = {}
    for s, (targets, costs, best_action) in enumerate(per_state):
        totals = costs + config.discount * ev[targets]
        j = int(targets[int(totals.argmin())])
        policy[(s // n_y, s % n_y)] = best_action[j]
    return ValueIterationResult(values=values, policy=policy,
                                x_states=tuple(map(tuple, x_states)),
                                y_states=tuple(map(tuple, y_states)),
                                iterations=iterations, residual=residual)


def greedy_policy_average_cost(config: MdpConfig, vi: ValueIterationResult) -> float:
    """Exact long-run average stage cost of the value-iteration policy,
    computed from the stationary distribution of the induced chain."""
    n_x, n_y = vi.values.shape
    n = n_x * n_y
    if n * n > 4_000_000:
        raise SizeLimitError("stationary analysis limited to small chains")
    pmfs = [truncated_poisson_pmf(r, d) for r, d in zip(config.arrival_rates,
                                                        config.d_max)]
    joint_p = np.ones(n_x)
    for idx, xv in enumerate(vi.x_states):
        for i, d in enumerate(xv):
            joint_p[idx] *= pmfs[i][d]

    trans = np.zeros((n, n))
    cost_vec = np.zeros(n)
    for (xi, yi), action in vi.policy.items():
        s = xi * n_y + yi
        state = MdpState(x=np.array(vi.x_states[xi]), y=np.array(vi.y_states[yi]))
        cost_vec[s] = stage_cost(state, action, config)
        consumed = action.sum(axis=0)
        ny = np.empty(config.horizon, dtype=int)
        ny[:-1] = np.array(vi.y_states[yi][1:]) - consumed[1:]
        ny[-1] = config.capacity
        yj = vi.y_states.index(tuple(ny))
        for xj in range(n_x):
            trans[s, xj * n_y + yj] += joint_p[xj]

    m = np.vstack([trans.T - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(m, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    return float(pi @ cost_vec)
