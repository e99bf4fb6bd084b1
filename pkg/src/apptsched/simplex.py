"""Dense two-phase revised simplex for small/medium linear programs.

Problems are stated as

    minimize    c @ x + constant
    subject to  a_ub @ x <= b_ub
                a_eq @ x == b_eq
                x >= 0

Pricing is Dantzig's rule with index tie-breaks; after a long run of
degenerate pivots the solver switches to Bland's rule, which guarantees
termination.  The basis inverse is maintained with product-form updates and
refactorized periodically to keep roundoff in check.  All choices are
deterministic, so repeated solves of the same instance give identical bases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_TOL = 1e-9
_REFACTOR_EVERY = 64
_BLAND_AFTER = 600        # degenerate pivots before switching rules

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    c: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    constant: float = 0.0
    names: tuple = ()

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        n = c.shape[0]
        a_ub = np.asarray(self.a_ub, dtype=float).reshape(-1, n)
        a_eq = np.asarray(self.a_eq, dtype=float).reshape(-1, n)
        b_ub = np.atleast_1d(np.asarray(self.b_ub, dtype=float))
        b_eq = np.atleast_1d(np.asarray(self.b_eq, dtype=float))
        if b_ub.shape[0] != a_ub.shape[0] or b_eq.shape[0] != a_eq.shape[0]:
            raise ValueError("constraint matrix/vector shapes disagree")
        for name, val in (("c", c), ("a_ub", a_ub), ("b_ub", b_ub),
                          ("a_eq", a_eq), ("b_eq", b_eq)):
            if not np.all(np.isfinite(val)):
                raise ValueError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, val)
            val.setflags(write=False)

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class LpSolution:
    status: str
    x: np.ndarray | None
    objective: float | None
    iterations: int = 0


class _Tableau:
    """Standard-form problem min c@z, A z = b (b >= 0), z >= 0 with a
    revised-simplex engine over an explicit basis inverse."""

    def __init__(self, a: np.ndarray, b: np.ndarray, basis: np.ndarray):
        self.a = a
        self.b = b.copy()
        self.basis = basis.copy()
        self.m, self.n = a.shape
        self.iterations = 0
        self._refactor()

    def _refactor(self):
        self.b_inv = np.linalg.inv(self.a[:, self.basis])

    def basic_solution(self) -> np.ndarray:
        z = np.zeros(self.n)
        z[self.basis] = self.b_inv @ self.b
        return z

    def run(self, costs: np.ndarray, allowed: np.ndarray) -> str:
        """Minimize costs over columns flagged in ``allowed`` (basic columns
        always stay eligible).  Returns OPTIMAL or UNBOUNDED."""
        stalled = 0
        last_obj = np.inf
        while True:
            xb = self.b_inv @ self.b
            obj = float(costs[self.basis] @ xb)
            if obj < last_obj - 1e-12:
                stalled = 0
            else:
                stalled += 1
            last_obj = obj
            use_bland = stalled > _BLAND_AFTER

            y = costs[self.basis] @ self.b_inv
            reduced = costs - y @ self.a
            candidates = np.flatnonzero(allowed & (reduced < -_TOL))
            if candidates.size == 0:
                return OPTIMAL
            if use_bland:
                enter = int(candidates[0])
            else:
                enter = int(candidates[np.argmin(reduced[candidates])])

            direction = self.b_inv @ self.a[:, enter]
            positive = np.flatnonzero(direction > _TOL)
            if positive.size == 0:
                return UNBOUNDED
            ratios = xb[positive] / direction[positive]
            best = ratios.min()
            ties = positive[ratios <= best + _TOL]
            # Bland-style leaving choice: smallest basic variable index
            leave_row = int(ties[np.argmin(self.basis[ties])])
            self.pivot(leave_row, enter, direction)

    def pivot(self, row: int, enter: int, direction: np.ndarray | None = None):
        if direction is None:
            direction = self.b_inv @ self.a[:, enter]
        eta = -direction / direction[row]
        eta[row] = 1.0 / direction[row]
        piv_row = self.b_inv[row].copy()
        self.b_inv += np.outer(eta, piv_row)
        self.b_inv[row] = eta[row] * piv_row
        self.basis[row] = enter
        self.iterations += 1
        if self.iterations % _REFACTOR_EVERY == 0:
            self._refactor()

    def drop_rows(self, rows: list[int]):
        keep = np.setdiff1d(np.arange(self.m), rows)
        self.a = self.a[keep]
        self.b = self.b[keep]
        self.basis = np.delete(self.basis, rows)
        self.m = self.a.shape[0]
        if self.m:
            self._refactor()


def solve(lp: LinearProgram) -> LpSolution:
    """Two-phase simplex solve of a LinearProgram."""
    n = lp.n_vars
    mu, me = lp.a_ub.shape[0], lp.a_eq.shape[0]
    m = mu + me
    if m == 0:
        # only nonnegativity: bounded iff no negative cost coefficient
        if (lp.c < -_TOL).any():
            return LpSolution(UNBOUNDED, None, None)
        return LpSolution(OPTIMAL, np.zeros(n), lp.constant)

    a = np.zeros((m, n + mu))
    b = np.concatenate([lp.b_ub, lp.b_eq])
    a[:mu, :n] = lp.a_ub
    a[mu:, :n] = lp.a_eq
    a[:mu, n:n + mu] = np.eye(mu)
    # flip rows with negative rhs so b >= 0 (slack turns into a surplus)
    neg = b < 0
    a[neg] *= -1.0
    b[neg] *= -1.0

    # initial basis: usable slacks where available, artificials elsewhere
    needs_artificial = [i for i in range(m) if i >= mu or neg[i]]
    n_art = len(needs_artificial)
    full = np.hstack([a, np.zeros((m, n_art))])
    basis = np.empty(m, dtype=int)
    for i in range(mu):
        basis[i] = n + i
    for k, i in enumerate(needs_artificial):
        col = n + mu + k
        full[i, col] = 1.0
        basis[i] = col
    tab = _Tableau(full, b, basis)
    total_cols = full.shape[1]
    art_start = n + mu

    if n_art:
        phase1 = np.zeros(total_cols)
        phase1[art_start:] = 1.0
        allowed = np.ones(total_cols, dtype=bool)
        status = tab.run(phase1, allowed)
        if status == UNBOUNDED:
            raise RuntimeError("phase 1 cannot be unbounded")
        xb = tab.b_inv @ tab.b
        if float(phase1[tab.basis] @ xb) > 1e-7:
            return LpSolution(INFEASIBLE, None, None, tab.iterations)
        _evict_artificials(tab, art_start)

    costs = np.zeros(tab.a.shape[1])
    costs[:n] = lp.c
    allowed = np.ones(tab.a.shape[1], dtype=bool)
    allowed[art_start:] = False
    status = tab.run(costs, allowed)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, None, None, tab.iterations)
    z = tab.basic_solution()
    x = np.maximum(z[:n], 0.0)
    return LpSolution(OPTIMAL, x, float(lp.c @ x) + lp.constant, tab.iterations)


def _evict_artificials(tab: _Tableau, art_start: int):
    """Pivot zero-valued artificials out of the basis; rows where no real
    column can replace them are linearly dependent and get dropped."""
    redundant: list[int] = []
    for row in range(tab.m):
        if tab.basis[row] < art_start:
            continue
        tab_row = tab.b_inv[row] @ tab.a[:, :art_start]
        pivots = np.flatnonzero(np.abs(tab_row) > 1e-7)
        if pivots.size:
            tab.pivot(row, int(pivots[0]))
        else:
            redundant.append(row)
    if redundant:
        tab.drop_rows(redundant)


def lp_text(lp: LinearProgram) -> str:
    """Dump in the conventional text LP format for cross-checks with other
    solvers.  Variables are named from lp.names or x0..x{n-1}."""
    names = list(lp.names) if lp.names else [f"x{j}" for j in range(lp.n_vars)]

    def terms(row):
        parts = []
        for j, coef in enumerate(row):
            if coef == 0:
                continue
            sign = "-" if coef < 0 else "+"
            parts.append(f"{sign} {abs(coef):.12g} {names[j]}")
        if not parts:
            return "0 " + names[0]
        joined = " ".join(parts)
        return joined[2:] if joined.startswith("+ ") else joined

    lines = ["Minimize", f" obj: {terms(lp.c)}", "Subject To"]
    for k, (row, rhs) in enumerate(zip(lp.a_ub, lp.b_ub)):
        lines.append(f" ub{k}: {terms(row)} <= {rhs:.12g}")
    for k, (row, rhs) in enumerate(zip(lp.a_eq, lp.b_eq)):
        lines.append(f" eq{k}: {terms(row)} = {rhs:.12g}")
    lines.append("Bounds")
    lines.extend(f" 0 <= {name}" for name in names)
    lines.append("End")
    return "\n".join(lines) + "\n"
