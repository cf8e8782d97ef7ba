"""ESPPRC pricing for VRPTW via resource-constrained labeling.

Routes run from the start depot 0 to the returning depot n+1, visiting
each customer at most once, respecting vehicle capacity and time windows.
Service times are folded into the travel-time matrix, so start of service
propagates as s_j = max(ready_j, s_i + t'_ij). A route prices favourably
when its travel cost minus the duals of its customers is negative.

Labels carry (vertex, reduced cost, time, load, visited bitset) and are
pruned by the standard dominance rule: at the same vertex, A dominates B
when cost/time/load are all <= and A's visited set is a subset of B's.
Dominance preserves the optimal route; the k-best list is best-effort
beyond the optimum (candidates are near-optimal columns, not a certified
k-best enumeration). Time-window infeasible arcs are removed up front.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .columns import Column
from .errors import DimensionMismatch
from .instances import VrptwInstance

RC_TOL = 1e-9


@dataclass(frozen=True)
class Route:
    vertex_sequence: tuple      # 0, customers..., n+1
    total_cost: float
    load: float
    start_times: tuple          # start of service per visited vertex

    @property
    def customers(self) -> tuple:
        return self.vertex_sequence[1:-1]

    def validate(self, instance: VrptwInstance):
        seq = self.vertex_sequence
        assert seq[0] == 0 and seq[-1] == instance.n_customers + 1
        inner = seq[1:-1]
        assert len(set(inner)) == len(inner), "route must be elementary"
        assert self.load <= instance.vehicle_capacity + 1e-9
        windows = instance.time_windows_full
        t = instance.effective_time_matrix
        for pos, v in enumerate(seq):
            a, b = windows[v]
            s = self.start_times[pos]
            assert a - 1e-9 <= s <= b + 1e-9
            if pos:
                u = seq[pos - 1]
                assert s >= self.start_times[pos - 1] + t[u][v] - 1e-9


class _Label:
    __slots__ = ("vertex", "rcost", "time", "load", "visited", "prev")

    def __init__(self, vertex, rcost, time, load, visited, prev=None):
        self.vertex = vertex
        self.rcost = rcost
        self.time = time
        self.load = load
        self.visited = visited
        self.prev = prev

    def dominates(self, other) -> bool:
        return (
            self.rcost <= other.rcost + 1e-12
            and self.time <= other.time + 1e-12
            and self.load <= other.load + 1e-12
            and (self.visited & ~other.visited) == 0
        )


def price(instance: VrptwInstance, duals, k: int = 10, gap: float = 0.15,
          use_dominance: bool = True):
    """Up to k distinct feasible elementary routes with negative reduced
    cost, sorted ascending; same gap semantics as the knapsack pricer."""
    duals = np.asarray(duals, dtype=float).reshape(-1)
    n = instance.n_customers
    if duals.shape[0] != n:
        raise DimensionMismatch(f"{duals.shape[0]} duals for {n} customers")
    sink = n + 1
    cost = instance.cost_matrix
    t = instance.effective_time_matrix
    windows = instance.time_windows_full
    ready = [w[0] for w in windows]
    due = [w[1] for w in windows]
    demands = instance.demands
    capacity = instance.vehicle_capacity

    # arc (i, j) is usable only if leaving i at its earliest start can still
    # open j's window
    arcs = [[] for _ in range(sink + 1)]
    for i in range(n + 1):
        targets = list(range(1, n + 1)) + [sink]
        for j in targets:
            if j == i or (i == 0 and j == sink):
                continue
            if ready[i] + t[i][j] <= due[j] + 1e-9:
                arcs[i].append(j)

    labels = [[] for _ in range(sink + 1)]
    root = _Label(0, 0.0, ready[0], 0.0, 0)
    queue = [root]
    labels[0].append(root)
    completed = []
    while queue:
        lab = queue.pop()
        i = lab.vertex
        for j in arcs[i]:
            if j != sink and lab.visited >> (j - 1) & 1:
                continue
            s_j = max(ready[j], lab.time + t[i][j])
            if s_j > due[j] + 1e-9:
                continue
            load = lab.load + (demands[j] if j != sink else 0.0)
            if load > capacity + 1e-9:
                continue
            rcost = lab.rcost + cost[i][j] - (duals[j - 1] if j != sink else 0.0)
            visited = lab.visited | (1 << (j - 1)) if j != sink else lab.visited
            new = _Label(j, rcost, s_j, load, visited, prev=lab)
            if j == sink:
                completed.append(new)
                continue
            if use_dominance:
                bucket = labels[j]
                if any(old.dominates(new) for old in bucket):
                    continue
                bucket[:] = [old for old in bucket if not new.dominates(old)]
                bucket.append(new)
            else:
                labels[j].append(new)
            queue.append(new)

    routes = []
    for lab in completed:
        if lab.rcost >= -RC_TOL:
            continue
        routes.append((lab.rcost, _reconstruct(lab, instance)))
    if not routes:
        return []
    routes.sort(key=lambda item: (item[0], item[1].vertex_sequence))
    best_rc = routes[0][0]
    cutoff = best_rc * (1.0 - gap)
    kept = []
    seen = set()
    for rc, route in routes:
        if rc > cutoff + RC_TOL:
            break
        if route.vertex_sequence in seen:
            continue
        seen.add(route.vertex_sequence)
        kept.append((route, rc))
        if len(kept) == k:
            break
    return kept


def _reconstruct(label: _Label, instance: VrptwInstance) -> Route:
    seq, times = [], []
    lab = label
    while lab is not None:
        seq.append(lab.vertex)
        times.append(lab.time)
        lab = lab.prev
    seq.reverse()
    times.reverse()
    total = sum(instance.cost_matrix[u][v] for u, v in zip(seq, seq[1:]))
    return Route(tuple(seq), float(total), float(label.load), tuple(times))


def route_column(route: Route, n_customers: Optional[int] = None,
                 column_id: int = -1) -> Column:
    """Set-covering column of a route: cost = travel cost, 0/1 coefficient
    per customer row."""
    if n_customers is None:
        n_customers = max(route.customers, default=0)
    coeffs = np.zeros(n_customers)
    for v in route.customers:
        coeffs[v - 1] = 1.0
    return Column(cost=route.total_cost, coeffs=coeffs, id=column_id,
                  problem_feature=route.total_cost, source=route)
