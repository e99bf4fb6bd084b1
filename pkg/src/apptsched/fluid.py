"""Fluid relaxation of the booking model and benchmark-policy extraction.

The stochastic model is replaced by deterministic flows: each day a demand
of lambda_i arrives per class and is either assigned a booking rate
u_i^h(t) into one of the next H days or turned away at the rejection cost.
Discretizing with one-day steps over a finite horizon T gives a linear
program whose stationary interior solution is averaged and rounded into an
integer per-class, per-day-offset quota table.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .mdp import MdpConfig
from .simplex import OPTIMAL, LinearProgram, LpSolution, solve


@dataclass(frozen=True)
class FluidProblem:
    config: MdpConfig
    t_steps: int = 28
    dt: float = 1.0
    beta: np.ndarray | None = None      # late costs, defaults to config
    gamma: np.ndarray | None = None     # reject costs, defaults to config
    lambda_t: np.ndarray | None = None  # (T, I) arrival schedule, default constant
    x0: np.ndarray | None = None        # demand at t=0, default lambda(0)*dt
    y0: np.ndarray | None = None        # initial calendar, default all G

    def __post_init__(self):
        cfg = self.config
        if self.t_steps < cfg.horizon:
            raise ValueError("discretization horizon must cover the booking window")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        beta = np.asarray(self.beta if self.beta is not None else cfg.costs.late,
                          dtype=float)
        gamma = np.asarray(self.gamma if self.gamma is not None else cfg.costs.reject,
                           dtype=float)
        if beta.shape != (cfg.i_classes, cfg.horizon) or gamma.shape != (cfg.i_classes,):
            raise ValueError("cost vectors do not match the model dimensions")
        if (beta < 0).any() or (gamma < 0).any():
            raise ValueError("costs must be nonnegative")
        if self.lambda_t is None:
            lam = np.tile(cfg.arrival_rates, (self.t_steps, 1)).astype(float)
        else:
            lam = np.asarray(self.lambda_t, dtype=float)
            if lam.shape != (self.t_steps, cfg.i_classes):
                raise ValueError("lambda_t must have shape (t_steps, classes)")
        if (lam < 0).any():
            raise ValueError("arrival rates must be nonnegative")
        x0 = np.asarray(self.x0, dtype=float) if self.x0 is not None else lam[0] * self.dt
        y0 = (np.asarray(self.y0, dtype=float) if self.y0 is not None
              else np.full(cfg.horizon, float(cfg.capacity)))
        if x0.shape != (cfg.i_classes,) or (x0 < 0).any():
            raise ValueError("x0 must be a nonnegative vector of length I")
        if y0.shape != (cfg.horizon,) or (y0 < 0).any() or (y0 > cfg.capacity).any():
            raise ValueError("y0 must lie in [0, G] per day")
        for name, val in (("beta", beta), ("gamma", gamma), ("lambda_t", lam),
                          ("x0", x0), ("y0", y0)):
            object.__setattr__(self, name, val)
            val.setflags(write=False)

    def demand(self, t: int) -> np.ndarray:
        return self.x0 if t == 0 else self.lambda_t[t] * self.dt


@dataclass(frozen=True)
class FluidSolution:
    u: np.ndarray          # (T, I, H) booking rates
    objective: float
    status: str
    lp_iterations: int = 0


@dataclass(frozen=True)
class BenchmarkPolicy:
    """Stationary quota table: quotas[i, h] appointments of class i may be
    booked h+1 days ahead at every decision epoch."""

    quotas: np.ndarray
    provenance: str = "fluid"

    def __post_init__(self):
        q = np.asarray(self.quotas, dtype=int)
        if q.ndim != 2:
            raise ValueError("quotas must be a class-by-day matrix")
        if (q < 0).any():
            raise ValueError("quotas must be nonnegative")
        if self.provenance not in ("fluid", "manual"):
            raise ValueError("provenance must be 'fluid' or 'manual'")
        object.__setattr__(self, "quotas", q)
        q.setflags(write=False)

    @property
    def n_classes(self) -> int:
        return self.quotas.shape[0]

    @property
    def horizon(self) -> int:
        return self.quotas.shape[1]

    def to_dict(self) -> dict:
        return {"quotas": self.quotas.tolist(), "provenance": self.provenance}

    @classmethod
    def from_dict(cls, raw: dict) -> "BenchmarkPolicy":
        return cls(quotas=np.asarray(raw["quotas"], dtype=int),
                   provenance=raw.get("provenance", "manual"))

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load_json(cls, path) -> "BenchmarkPolicy":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save_csv(self, path) -> None:
        """Quota table with one row per priority class, columns day 1..H."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["class", *(f"day {h + 1}" for h in range(self.horizon))])
            for i, row in enumerate(self.quotas):
                writer.writerow([i + 1, *map(int, row)])


def _u_index(t: int, i: int, h: int, i_classes: int, horizon: int) -> int:
    return (t * i_classes + i) * horizon + h


def build_fluid_lp(problem: FluidProblem) -> LinearProgram:
    """Forward-Euler discretization of the flow model as a linear program.

    Variables are the booking rates u_i^h(t) followed by the calendar states
    y_h(t).  Dynamics enter as equalities (roll left, subtract bookings,
    refill the last day), demand and capacity limits as inequalities, and the
    accumulated rejection cost of unbooked demand as an objective constant
    plus negative credits on booked units.
    """
    cfg = problem.config
    I, H, T = cfg.i_classes, cfg.horizon, problem.t_steps
    n_u = T * I * H
    n = n_u + T * H

    def u_at(t, i, h):
        return _u_index(t, i, h, I, H)

    def y_at(t, h):
        return n_u + t * H + h

    c = np.zeros(n)
    constant = 0.0
    for t in range(T):
        constant += float(problem.gamma @ problem.demand(t)) * problem.dt
        for i in range(I):
            for h in range(H):
                c[u_at(t, i, h)] = (problem.beta[i, h] - problem.gamma[i]) * problem.dt

    rows_eq = []
    rhs_eq = []
    for h in range(H):          # initial calendar
        row = np.zeros(n)
        row[y_at(0, h)] = 1.0
        rows_eq.append(row)
        rhs_eq.append(problem.y0[h])
    for t in range(T):          # no bookings onto days past the horizon:
        for h in range(H):      # capacity beyond day T is not modeled, so
            if t + h + 1 > T:   # letting flows land there would fake supply
                for i in range(I):
                    row = np.zeros(n)
                    row[u_at(t, i, h)] = 1.0
                    rows_eq.append(row)
                    rhs_eq.append(0.0)
    for t in range(T - 1):      # rolling dynamics
        for h in range(H - 1):
            row = np.zeros(n)
            row[y_at(t + 1, h)] = 1.0
            row[y_at(t, h + 1)] = -1.0
            for i in range(I):
                row[u_at(t, i, h + 1)] = 1.0
            rows_eq.append(row)
            rhs_eq.append(0.0)
        row = np.zeros(n)
        row[y_at(t + 1, H - 1)] = 1.0
        rows_eq.append(row)
        rhs_eq.append(float(cfg.capacity))

    rows_ub = []
    rhs_ub = []
    for t in range(T):
        for h in range(H):      # bookings cannot exceed the day's free spots
            row = np.zeros(n)
            for i in range(I):
                row[u_at(t, i, h)] = 1.0
            row[y_at(t, h)] = -1.0
            rows_ub.append(row)
            rhs_ub.append(0.0)
        demand = problem.demand(t)
        for i in range(I):      # bookings cannot exceed the day's demand
            row = np.zeros(n)
            for h in range(H):
                row[u_at(t, i, h)] = 1.0
            rows_ub.append(row)
            rhs_ub.append(float(demand[i]))

    names = tuple(f"u_t{t}_c{i}_d{h + 1}" for t in range(T)
                  for i in range(I) for h in range(H))
    names += tuple(f"y_t{t}_d{h + 1}" for t in range(T) for h in range(H))
    return LinearProgram(c=c, a_ub=np.array(rows_ub), b_ub=np.array(rhs_ub),
                         a_eq=np.array(rows_eq), b_eq=np.array(rhs_eq),
                         constant=constant, names=names)


def solve_fluid(problem: FluidProblem, resolve_ties: bool = True) -> FluidSolution:
    """Solve the discretized flow problem.

    Cost tables with repeated values (the study instance prices some later
    offsets like day one) leave the minimum-cost booking placement
    non-unique.  With ``resolve_ties`` a second stage re-optimizes among the
    cost-optimal solutions for the smallest total waiting, so bookings land
    on the earliest day whenever that is free of extra cost.
    """
    lp = build_fluid_lp(problem)
    sol: LpSolution = solve(lp)
    cfg = problem.config
    I, H, T = cfg.i_classes, cfg.horizon, problem.t_steps
    n_u = T * I * H
    if sol.status != OPTIMAL:
        return FluidSolution(u=np.zeros((T, I, H)), objective=float("nan"),
                             status=sol.status, lp_iterations=sol.iterations)
    iterations = sol.iterations
    if resolve_ties:
        slack = 1e-7 * max(1.0, abs(sol.objective))
        cost_cap = float(lp.c @ sol.x) + slack
        waiting = np.zeros(lp.n_vars)
        for t in range(T):
            for i in range(I):
                for h in range(H):
                    waiting[_u_index(t, i, h, I, H)] = h + 1
        tie_lp = LinearProgram(
            c=waiting,
            a_ub=np.vstack([lp.a_ub, lp.c[None, :]]),
            b_ub=np.concatenate([lp.b_ub, [cost_cap]]),
            a_eq=lp.a_eq, b_eq=lp.b_eq, names=lp.names)
        tie_sol = solve(tie_lp)
        if tie_sol.status == OPTIMAL:
            sol = tie_sol
            iterations += tie_sol.iterations
    u = sol.x[:n_u].reshape(T, I, H)
    return FluidSolution(u=u, objective=fluid_cost(problem, u), status=OPTIMAL,
                         lp_iterations=iterations)


def fluid_cost(problem: FluidProblem, u: np.ndarray) -> float:
    """Re-evaluate the discretized objective for a given control tensor."""
    total = 0.0
    for t in range(problem.t_steps):
        booked = u[t].sum(axis=1)
        total += float(problem.beta.ravel() @ u[t].ravel()) * problem.dt
        total += float(problem.gamma @ (problem.demand(t) - booked)) * problem.dt
    return total


def calendar_trajectory(problem: FluidProblem, u: np.ndarray) -> np.ndarray:
    """Reconstruct y(t) implied by a control tensor."""
    cfg = problem.config
    y = np.zeros((problem.t_steps, cfg.horizon))
    y[0] = problem.y0
    for t in range(problem.t_steps - 1):
        consumed = u[t].sum(axis=0)
        y[t + 1, :-1] = y[t, 1:] - consumed[1:]
        y[t + 1, -1] = cfg.capacity
    return y


def max_constraint_violation(problem: FluidProblem, u: np.ndarray) -> float:
    """Largest violation of the feasible-set constraints along the horizon."""
    y = calendar_trajectory(problem, u)
    worst = float((-u).max(initial=0.0))
    worst = max(worst, float((-y).max(initial=0.0)))
    for t in range(problem.t_steps):
        worst = max(worst, float((u[t].sum(axis=0) - y[t]).max()))
        worst = max(worst, float((u[t].sum(axis=1) - problem.demand(t)).max()))
    return worst


def extract_policy(solution: FluidSolution, problem: FluidProblem) -> BenchmarkPolicy:
    """Average the booking rates over the interior window and round to an
    integer quota table.

    The window t in [H, T-H] discards the fill-up and drain transients at
    both ends of the horizon.  Rounding floors every rate, then hands each
    class floor(sum of its fractional parts) extra units to its earliest
    day offsets, serving higher-priority classes first and never pushing a
    day column past the daily capacity.
    """
    if solution.status != OPTIMAL:
        raise ValueError(f"cannot extract a policy from a {solution.status} solution")
    cfg = problem.config
    H, T = cfg.horizon, problem.t_steps
    if T < 2 * H:
        raise ValueError("empty interior window: need t_steps >= 2 * horizon")
    window = solution.u[H:T - H + 1]
    ubar = window.mean(axis=0)
    floors = np.floor(ubar + 1e-9).astype(int)
    fracs = np.maximum(ubar - floors, 0.0)
    quotas = floors.copy()
    for i in cfg.priority_order:
        extra = int(np.floor(fracs[i].sum() + 1e-9))
        h = 0
        placed = 0
        attempts = 0
        while placed < extra and attempts < extra * H + H:
            if quotas[:, h % H].sum() < cfg.capacity:
                quotas[i, h % H] += 1
                placed += 1
            h += 1
            attempts += 1
    return BenchmarkPolicy(quotas=quotas, provenance="fluid")


def policy_demand_feasible(policy: BenchmarkPolicy, rates: np.ndarray) -> bool:
    """Whether each class's quota row stays within its expected daily demand."""
    return bool((policy.quotas.sum(axis=1) <= np.ceil(np.asarray(rates))).all())
