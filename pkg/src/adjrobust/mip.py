"""Branch and bound for LPs with binary variables.

Search order is a depth-first dive until the first incumbent, then
best-bound.  Branching picks the most fractional binary (lowest index
on ties) and explores the child matching the rounded relaxation value
first.  A rounding heuristic (fix every binary to its rounded value,
re-solve the LP) runs while no incumbent exists.  Everything is
deterministic; the reported bound is monotone in the incumbent's
favor and stays honest when the node limit cuts the search short.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .lp import LinearProgram, LpSolution, solve_lp

INT_TOL = 1e-6


class MipError(Exception):
    pass


@dataclass(frozen=True)
class MixedBinaryProgram:
    lp: LinearProgram
    binary_vars: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "binary_vars",
                           tuple(int(j) for j in self.binary_vars))
        n = self.lp.num_vars
        for j in self.binary_vars:
            if not 0 <= j < n:
                raise MipError(f"binary index {j} out of range for {n} columns")
        if len(set(self.binary_vars)) != len(self.binary_vars):
            raise MipError("duplicate binary indices")


@dataclass
class MipSolution:
    status: str                      # optimal | node_limit | infeasible | unbounded
    x: np.ndarray | None
    objective: float | None
    bound: float
    gap: float
    nodes: int
    relaxation: LpSolution | None = field(default=None, repr=False)


def _fractionality(x, binaries):
    f = x[binaries]
    return np.minimum(f - np.floor(f), np.ceil(f) - f)


def solve_mip(prob: MixedBinaryProgram, mip_tol: float = 1e-6,
              node_limit: int | None = 1_000_000) -> MipSolution:
    """Solve max/min c.x over the LP's rows with the given columns binary.

    `mip_tol` is the absolute optimality gap at which nodes are pruned
    against the incumbent, so the returned objective is within mip_tol
    of the true optimum.  With `node_limit` set, the search stops after
    that many LP relaxations and reports the surviving bound and gap.
    """
    lp = prob.lp
    binaries = np.asarray(prob.binary_vars, dtype=np.intp)
    sgn = 1.0 if lp.sense == "max" else -1.0

    lower = lp.lower.copy()
    upper = lp.upper.copy()
    # binaries live in {0,1}; intersect with any caller bounds
    lower[binaries] = np.maximum(lower[binaries], 0.0)
    upper[binaries] = np.minimum(upper[binaries], 1.0)

    nodes = 0
    incumbent_x = None
    incumbent_val = None          # in sgn-units (larger is better)
    best_bound = np.inf           # in sgn-units, monotone nonincreasing
    root_relax: LpSolution | None = None

    stack: list[tuple[np.ndarray, np.ndarray]] = [(lower, upper)]
    heap: list = []               # (-bound, tiebreak, lo, up)
    tie = 0

    def current_bound(processing: float | None = None) -> float:
        vals = []
        if incumbent_val is not None:
            vals.append(incumbent_val)
        if processing is not None:
            vals.append(processing)
        vals.extend(-h[0] for h in heap)
        if stack:
            vals.append(best_bound)  # dive nodes inherit the running bound
        return max(vals) if vals else -np.inf

    def finish(status: str, processing: float | None = None) -> MipSolution:
        bound = min(best_bound, current_bound(processing))
        if incumbent_val is not None:
            bound = max(bound, incumbent_val)  # never report bound < incumbent
            gap = bound - incumbent_val
            return MipSolution(status, incumbent_x, sgn * incumbent_val,
                               sgn * bound, gap, nodes, root_relax)
        return MipSolution(status, None, None, sgn * bound, np.inf, nodes,
                           root_relax)

    def accept(x: np.ndarray, objective: float) -> None:
        nonlocal incumbent_x, incumbent_val
        val = sgn * objective
        if incumbent_val is None or val > incumbent_val:
            xr = x.copy()
            xr[binaries] = np.round(xr[binaries])
            incumbent_x, incumbent_val = xr, val

    while stack or heap:
        if incumbent_val is None and stack:
            lo, up = stack.pop()
        elif stack:
            # first incumbent just landed: migrate dive leftovers
            for lo, up in stack:
                heapq.heappush(heap, (-best_bound, tie, lo, up))
                tie += 1
            stack.clear()
            continue
        else:
            negb, _, lo, up = heapq.heappop(heap)
            if incumbent_val is not None and -negb <= incumbent_val + mip_tol:
                continue

        if node_limit is not None and nodes >= node_limit:
            return finish("node_limit")
        nodes += 1
        sol = solve_lp(lp.with_bounds(lo, up))
        if sol.status == "infeasible":
            continue
        if sol.status == "unbounded":
            return MipSolution("unbounded", None, None, sgn * np.inf, np.inf,
                               nodes, root_relax)
        val = sgn * sol.objective
        if root_relax is None:
            root_relax = sol
            best_bound = val
        best_bound = min(best_bound, current_bound(val))

        if incumbent_val is not None and val <= incumbent_val + mip_tol:
            continue

        frac = _fractionality(sol.x, binaries)
        if frac.size == 0 or frac.max() <= INT_TOL:
            accept(sol.x, sol.objective)
            continue

        if incumbent_val is None:
            _try_rounding(lp, lo, up, binaries, sol.x, accept)

        # most fractional binary, lowest index on ties
        j_local = int(np.argmax(frac))
        j = int(binaries[j_local])
        pref = float(np.round(sol.x[j]))
        children = []
        for value in (pref, 1.0 - pref):
            clo, cup = lo.copy(), up.copy()
            clo[j] = cup[j] = value
            children.append((clo, cup))
        if incumbent_val is None:
            # LIFO: push the preferred child last so it pops first
            stack.append(children[1])
            stack.append(children[0])
        else:
            for child in children:
                heapq.heappush(heap, (-val, tie, child[0], child[1]))
                tie += 1

    # exhausted: every feasible leaf produced an incumbent
    return finish("optimal" if incumbent_val is not None else "infeasible")


def _try_rounding(lp, lo, up, binaries, x, accept):
    clo, cup = lo.copy(), up.copy()
    rounded = np.round(x[binaries])
    clo[binaries] = cup[binaries] = rounded
    sol = solve_lp(lp.with_bounds(clo, cup))
    if sol.status == "optimal":
        accept(sol.x, sol.objective)
