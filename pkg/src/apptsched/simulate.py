"""Monte-Carlo evaluation of quota policies under Poisson request arrivals.

Each simulated day draws the arrivals, books them against the policy's
quota table subject to the remaining calendar capacity, applies the two
day-one adjustment rules (spare next-day capacity is offered to additional
higher-priority requests; a next-day shortfall hits lower-priority bookings
first, which falls out of processing classes in priority order), rejects
whoever is left, then rolls the booking window forward one day.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .fluid import BenchmarkPolicy
from .mdp import MdpConfig


@dataclass(frozen=True)
class SimConfig:
    mdp: MdpConfig
    policy: BenchmarkPolicy
    days: int
    replications: int = 1
    seed: int = 0
    warmup: int = 0

    def __post_init__(self):
        if not 0 <= self.warmup < self.days:
            raise ValueError("need days > warmup >= 0")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if self.policy.quotas.shape != (self.mdp.i_classes, self.mdp.horizon):
            raise ValueError("policy dimensions do not match the model")


@dataclass(frozen=True)
class SimulationReport:
    per_class: tuple          # one dict per class
    utilization: float
    per_replication: tuple    # one dict per replication
    total_cost: float
    days_measured: int

    def to_dict(self) -> dict:
        return {
            "per_class": list(self.per_class),
            "utilization": self.utilization,
            "per_replication": list(self.per_replication),
            "total_cost": self.total_cost,
            "days_measured": self.days_measured,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _draw_arrival_streams(config: SimConfig) -> list[np.ndarray]:
    """One (days, I) arrival array per replication, derived deterministically
    from the master seed so streams can be shared across policies."""
    streams = []
    for child in np.random.SeedSequence(config.seed).spawn(config.replications):
        rng = np.random.default_rng(child)
        draws = rng.poisson(config.mdp.arrival_rates, size=(config.days,
                                                            config.mdp.i_classes))
        streams.append(np.minimum(draws, config.mdp.d_max).astype(int))
    return streams


def _simulate_stream(mdp: MdpConfig, policy: BenchmarkPolicy,
                     arrivals: np.ndarray, warmup: int, trace: list | None = None):
    """Run one replication; returns per-class tallies and the realized cost."""
    I, H, G = mdp.i_classes, mdp.horizon, mdp.capacity
    order = mdp.priority_order
    overflow_classes = order[:-1] if I > 1 else []
    y = np.full(H, G, dtype=int)
    booked_by_offset = np.zeros((I, H), dtype=np.int64)
    rejected = np.zeros(I, dtype=np.int64)
    cost = 0.0
    occupancy = 0
    days_measured = 0
    for t in range(arrivals.shape[0]):
        x_rem = arrivals[t].copy()
        booked = np.zeros((I, H), dtype=int)
        for h in range(H):
            room = y[h]
            for i in order:
                take = min(policy.quotas[i, h], x_rem[i], room)
                if take > 0:
                    booked[i, h] += take
                    x_rem[i] -= take
                    room -= take
        # spare day-1 capacity goes to extra higher-priority requests
        room = y[0] - booked[:, 0].sum()
        for i in overflow_classes:
            take = min(x_rem[i], room)
            if take > 0:
                booked[i, 0] += take
                x_rem[i] -= take
                room -= take
        day_cost = float((mdp.costs.late * booked).sum()
                         + (mdp.costs.reject * x_rem).sum())
        cost_today = t >= warmup
        if cost_today:
            booked_by_offset += booked
            rejected += x_rem
            cost += day_cost
            occupancy += G - (y[0] - booked[:, 0].sum())
            days_measured += 1
        if trace is not None:
            trace.append((t, arrivals[t].copy(), booked, x_rem.copy()))
        consumed = booked.sum(axis=0)
        if (consumed > y).any():
            raise RuntimeError("booked past the remaining capacity")
        y[:-1] = y[1:] - consumed[1:]
        y[-1] = G
    return booked_by_offset, rejected, cost, occupancy, days_measured


def _aggregate(mdp: MdpConfig, tallies: list, master_seed: int) -> SimulationReport:
    I, H, G = mdp.i_classes, mdp.horizon, mdp.capacity
    booked = np.zeros((I, H), dtype=np.int64)
    rejected = np.zeros(I, dtype=np.int64)
    total_cost = 0.0
    occupancy = 0
    days = 0
    per_replication = []
    for rep, (b, r, c, occ, d) in enumerate(tallies):
        booked += b
        rejected += r
        total_cost += c
        occupancy += occ
        days += d
        per_replication.append({"replication": rep,
                                "seed": [master_seed, rep],
                                "cost": c, "booked": int(b.sum()),
                                "rejected": int(r.sum())})
    per_class = []
    offsets = np.arange(1, H + 1)
    for i in range(I):
        row = booked[i]
        n_booked = int(row.sum())
        if n_booked:
            mean_wait = float((row * offsets).sum() / n_booked)
            cum = np.cumsum(row)
            p50 = int(offsets[np.searchsorted(cum, 0.5 * n_booked)])
            p90 = int(offsets[np.searchsorted(cum, 0.9 * n_booked)])
        else:
            mean_wait, p50, p90 = 0.0, 0, 0
        class_cost = float((mdp.costs.late[i] * row).sum()
                           + mdp.costs.reject[i] * rejected[i])
        per_class.append({
            "class": i + 1,
            "booked": n_booked,
            "booked_by_offset": row.tolist(),
            "rejected": int(rejected[i]),
            "mean_wait_days": mean_wait,
            "p50_wait_days": p50,
            "p90_wait_days": p90,
            "cost": class_cost,
        })
    utilization = float(occupancy / (G * days)) if G > 0 and days > 0 else 0.0
    return SimulationReport(per_class=tuple(per_class), utilization=utilization,
                            per_replication=tuple(per_replication),
                            total_cost=total_cost, days_measured=days)


def run_simulation(config: SimConfig, trace: list | None = None) -> SimulationReport:
    streams = _draw_arrival_streams(config)
    tallies = [_simulate_stream(config.mdp, config.policy, arr, config.warmup, trace)
               for arr in streams]
    return _aggregate(config.mdp, tallies, config.seed)


def compare_policies(config: SimConfig, policies: list[tuple[str, BenchmarkPolicy]]):
    """Evaluate several policies on identical arrival streams.

    Returns per-policy reports plus paired per-replication cost differences
    against the first policy, with their standard errors.
    """
    if len(policies) < 2:
        raise ValueError("need at least two policies to compare")
    for _, pol in policies:
        if pol.quotas.shape != (config.mdp.i_classes, config.mdp.horizon):
            raise ValueError("policy dimensions do not match the model")
    streams = _draw_arrival_streams(config)
    reports = {}
    rep_costs = {}
    for name, pol in policies:
        tallies = [_simulate_stream(config.mdp, pol, arr, config.warmup)
                   for arr in streams]
        reports[name] = _aggregate(config.mdp, tallies, config.seed)
        rep_costs[name] = np.array([t[2] for t in tallies])
    base_name = policies[0][0]
    base = rep_costs[base_name]
    differences = {}
    for name, _ in policies[1:]:
        diff = rep_costs[name] - base
        se = float(diff.std(ddof=1) / np.sqrt(len(diff))) if len(diff) > 1 else 0.0
        differences[name] = {"mean_cost_difference": float(diff.mean()),
                             "standard_error": se,
                             "versus": base_name}
    return {"reports": {k: v.to_dict() for k, v in reports.items()},
            "paired_differences": differences}


def all_reject_policy(mdp: MdpConfig) -> BenchmarkPolicy:
    """Degenerate baseline: never book anyone."""
    return BenchmarkPolicy(quotas=np.zeros((mdp.i_classes, mdp.horizon), dtype=int),
                           provenance="manual")


def earliest_slot_policy(mdp: MdpConfig) -> BenchmarkPolicy:
    """First-come earliest-slot baseline: quotas never bind, only capacity."""
    return BenchmarkPolicy(quotas=np.full((mdp.i_classes, mdp.horizon),
                                          mdp.capacity, dtype=int),
                           provenance="manual")
