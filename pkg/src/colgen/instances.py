"""Instance data model, generators and parsers for CSP and VRPTW.

Two text formats are supported next to a native JSON format:

* CSP text: line 1 = number of item types m, line 2 = roll length n,
  then m lines "weight demand".
* VRPTW text (Solomon layout): name line, a VEHICLE section with
  (count, capacity), then a CUSTOMER table with columns
  (id, x, y, demand, ready, due, service). Row id 0 is the depot.

The returning depot is not stored: an instance keeps vertices 0..n
(depot + n customers) and mirrors vertex 0 as vertex n+1 inside the
derived travel matrices. Travel cost equals travel time: the Euclidean
distance truncated to one decimal.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidCount, InvalidRange, ParseError

DEFAULT_DEMAND_RANGE = (1, 50)


def default_weight_range(roll_length: int) -> tuple:
    return (math.ceil(0.1 * roll_length), math.ceil(0.8 * roll_length))


@dataclass(frozen=True)
class CspInstance:
    roll_length: int
    item_weights: tuple
    item_demands: tuple

    def __post_init__(self):
        object.__setattr__(self, "item_weights", tuple(int(w) for w in self.item_weights))
        object.__setattr__(self, "item_demands", tuple(int(d) for d in self.item_demands))
        if self.n_item_types < 1:
            raise InvalidRange("instance needs at least one item type")
        if len(self.item_weights) != len(self.item_demands):
            raise InvalidRange("weights and demands must have equal length")
        if any(w < 1 or w > self.roll_length for w in self.item_weights):
            raise InvalidRange("every item weight must lie in [1, roll_length]")
        if any(d < 1 for d in self.item_demands):
            raise InvalidRange("all demands must be >= 1")

    @property
    def n_item_types(self) -> int:
        return len(self.item_weights)

    @property
    def difficulty_key(self) -> int:
        return self.roll_length


@dataclass(frozen=True)
class VrptwInstance:
    n_customers: int
    coordinates: tuple          # (x, y) per vertex 0..n, depot first
    demands: tuple              # demand per vertex 0..n, depot 0
    time_windows: tuple         # (ready, due) per vertex 0..n
    service_times: tuple        # per vertex 0..n, depot 0
    vehicle_capacity: float
    cost_matrix: np.ndarray = field(init=False, compare=False, repr=False)
    time_matrix: np.ndarray = field(init=False, compare=False, repr=False)
    effective_time_matrix: np.ndarray = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        n = self.n_customers
        object.__setattr__(self, "coordinates", tuple((float(x), float(y)) for x, y in self.coordinates))
        object.__setattr__(self, "demands", tuple(float(d) for d in self.demands))
        object.__setattr__(self, "time_windows", tuple((float(a), float(b)) for a, b in self.time_windows))
        object.__setattr__(self, "service_times", tuple(float(s) for s in self.service_times))
        if n < 1:
            raise InvalidRange("instance needs at least one customer")
        for name, seq in (("coordinates", self.coordinates), ("demands", self.demands),
                          ("time_windows", self.time_windows), ("service_times", self.service_times)):
            if len(seq) != n + 1:
                raise InvalidRange(f"{name} must cover depot plus {n} customers")
        for a, b in self.time_windows:
            if a > b:
                raise InvalidRange("time window with ready > due")
        if any(d > self.vehicle_capacity for d in self.demands):
            raise InvalidRange("customer demand exceeds vehicle capacity")
        cost = _travel_matrix(self.coordinates)
        object.__setattr__(self, "cost_matrix", cost)
        times = cost.copy()
        times.setflags(write=False)
        object.__setattr__(self, "time_matrix", times)
        eff = cost.copy()
        for i in range(n + 1):
            eff[i, :] += self.service_times[i]
        eff.setflags(write=False)
        object.__setattr__(self, "effective_time_matrix", eff)

    @property
    def n_vertices(self) -> int:
        """Vertex count of the routing graph, both depot copies included."""
        return self.n_customers + 2

    @property
    def time_windows_full(self) -> tuple:
        """Windows for vertices 0..n+1 (returning depot mirrors the depot)."""
        return self.time_windows + (self.time_windows[0],)

    @property
    def difficulty_key(self) -> int:
        return self.n_customers


def euclidean_truncated(p, q) -> float:
    """Euclidean distance truncated to one decimal (Solomon convention)."""
    d = math.hypot(p[0] - q[0], p[1] - q[1])
    return math.floor(d * 10.0 + 1e-9) / 10.0


def _travel_matrix(coords) -> np.ndarray:
    # vertices 0..n plus the returning depot n+1 (a copy of vertex 0)
    pts = list(coords) + [coords[0]]
    size = len(pts)
    mat = np.zeros((size, size))
    for i in range(size):
        for j in range(size):
            if i != j:
                mat[i, j] = euclidean_truncated(pts[i], pts[j])
    mat.setflags(write=False)
    return mat


# -- generators ---------------------------------------------------------------


def generate_csp(seed: int, roll_length: int, n_item_types: int,
                 weight_range: Optional[tuple] = None,
                 demand_range: tuple = DEFAULT_DEMAND_RANGE) -> CspInstance:
    """Random CSP instance; deterministic for a fixed seed."""
    if weight_range is None:
        weight_range = default_weight_range(roll_length)
    lo, hi = weight_range
    if not (1 <= lo <= hi <= roll_length):
        raise InvalidRange(f"weight range {weight_range} not within [1, {roll_length}]")
    dlo, dhi = demand_range
    if not (1 <= dlo <= dhi):
        raise InvalidRange(f"demand range {demand_range} is empty or below 1")
    if n_item_types < 1:
        raise InvalidRange("need at least one item type")
    rng = np.random.default_rng(seed)
    weights = rng.integers(lo, hi + 1, size=n_item_types)
    demands = rng.integers(dlo, dhi + 1, size=n_item_types)
    return CspInstance(roll_length, tuple(weights.tolist()), tuple(demands.tolist()))


def generate_vrptw(seed: int, n_customers: int, vehicle_capacity: float = 200.0,
                   coord_range: float = 60.0, horizon: float = 500.0) -> VrptwInstance:
    """Synthetic Solomon-style instance with guaranteed-reachable customers."""
    if n_customers < 1:
        raise InvalidRange("need at least one customer")
    rng = np.random.default_rng(seed)
    depot = (coord_range / 2.0, coord_range / 2.0)
    coords = [depot]
    for _ in range(n_customers):
        coords.append((float(rng.integers(0, coord_range + 1)),
                       float(rng.integers(0, coord_range + 1))))
    demands = [0.0] + [float(rng.integers(1, max(2, int(vehicle_capacity // 4))))
                       for _ in range(n_customers)]
    service = [0.0] + [10.0] * n_customers
    windows = [(0.0, horizon)]
    for i in range(1, n_customers + 1):
        t_out = euclidean_truncated(depot, coords[i])
        latest_start = horizon - t_out - service[i]
        ready = float(rng.uniform(t_out, max(t_out, 0.6 * latest_start)))
        width = float(rng.uniform(30.0, 120.0))
        due = min(ready + width, latest_start)
        ready = min(ready, due)
        windows.append((round(ready, 1), round(due, 1)))
    return VrptwInstance(n_customers, tuple(coords), tuple(demands),
                         tuple(windows), tuple(service), vehicle_capacity)


def truncate_solomon(instance: VrptwInstance, n: Optional[int] = None,
                     seed: Optional[int] = None) -> VrptwInstance:
    """Keep the depot plus the first n customers; matrices are re-derived.

    When n is omitted it is sampled uniformly from 5..16 using the seed.
    """
    if n is None:
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 17))
        n = min(n, instance.n_customers)
    if n < 1 or n > instance.n_customers:
        raise InvalidCount(f"cannot keep {n} of {instance.n_customers} customers")
    if n == instance.n_customers:
        return instance
    keep = n + 1
    return VrptwInstance(
        n_customers=n,
        coordinates=instance.coordinates[:keep],
        demands=instance.demands[:keep],
        time_windows=instance.time_windows[:keep],
        service_times=instance.service_times[:keep],
        vehicle_capacity=instance.vehicle_capacity,
    )


# -- dataset splits -----------------------------------------------------------


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple
    validation: tuple
    test: tuple

    def __post_init__(self):
        ids = [id(x) for part in (self.train, self.validation, self.test) for x in part]
        if len(ids) != len(set(ids)):
            raise InvalidRange("dataset splits must be disjoint")


def split_dataset(instances: Sequence, seed: int = 0,
                  fractions: tuple = (0.8, 0.1, 0.1)) -> DatasetSplit:
    """Shuffle deterministically and split; each part sorted by difficulty."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise InvalidRange("split fractions must sum to 1")
    order = list(instances)
    rng = np.random.default_rng(seed)
    rng.shuffle(order)
    n = len(order)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    parts = (order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:])
    key = lambda inst: inst.difficulty_key
    return DatasetSplit(*(tuple(sorted(p, key=key)) for p in parts))


# -- CSP text format ----------------------------------------------------------


def parse_csp_text(text: str) -> CspInstance:
    lines = text.splitlines()
    rows = [(i + 1, ln.strip()) for i, ln in enumerate(lines) if ln.strip()]
    if len(rows) < 2:
        raise ParseError("expected item-type count and roll length", line=len(lines))
    try:
        m = int(rows[0][1])
    except ValueError:
        raise ParseError(f"bad item-type count {rows[0][1]!r}", line=rows[0][0])
    try:
        n = int(rows[1][1])
    except ValueError:
        raise ParseError(f"bad roll length {rows[1][1]!r}", line=rows[1][0])
    if len(rows) < 2 + m:
        raise ParseError(f"expected {m} item lines, found {len(rows) - 2}",
                         line=rows[-1][0])
    weights, demands = [], []
    for lineno, ln in rows[2:2 + m]:
        parts = ln.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'weight demand', got {ln!r}", line=lineno)
        try:
            weights.append(int(parts[0]))
            demands.append(int(parts[1]))
        except ValueError:
            raise ParseError(f"non-integer item data {ln!r}", line=lineno)
    try:
        return CspInstance(n, tuple(weights), tuple(demands))
    except InvalidRange as exc:
        raise ParseError(str(exc)) from exc


def serialize_csp_text(instance: CspInstance) -> str:
    lines = [str(instance.n_item_types), str(instance.roll_length)]
    lines += [f"{w} {d}" for w, d in zip(instance.item_weights, instance.item_demands)]
    return "\n".join(lines) + "\n"


parse_bpplib = parse_csp_text


# -- Solomon text format -------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(int(x)) if float(x).is_integer() else repr(float(x))


def parse_solomon(text: str) -> VrptwInstance:
    lines = text.splitlines()
    capacity = None
    rows = []
    section = None
    header_seen = False
    for lineno, raw in enumerate(lines, start=1):
        ln = raw.strip()
        if not ln:
            continue
        upper = ln.upper()
        if upper.startswith("VEHICLE"):
            section = "vehicle"
            continue
        if upper.startswith("CUSTOMER"):
            section = "customer"
            header_seen = False
            continue
        if section == "vehicle":
            parts = ln.split()
            if parts[0].upper() == "NUMBER":
                continue
            if len(parts) >= 2:
                try:
                    capacity = float(parts[1])
                except ValueError:
                    raise ParseError(f"bad vehicle line {ln!r}", line=lineno)
                section = None
        elif section == "customer":
            parts = ln.split()
            if not header_seen and not parts[0][0].isdigit():
                header_seen = True
                continue
            if len(parts) < 7:
                raise ParseError(f"customer row needs 7 fields, got {len(parts)}",
                                 line=lineno)
            try:
                rows.append(tuple(float(p) for p in parts[:7]))
            except ValueError:
                raise ParseError(f"non-numeric customer row {ln!r}", line=lineno)
    if capacity is None:
        raise ParseError("no VEHICLE capacity found")
    if len(rows) < 2:
        raise ParseError("need a depot row and at least one customer")
    rows.sort(key=lambda r: r[0])
    coords = tuple((r[1], r[2]) for r in rows)
    demands = tuple(r[3] for r in rows)
    windows = tuple((r[4], r[5]) for r in rows)
    service = tuple(r[6] for r in rows)
    try:
        return VrptwInstance(len(rows) - 1, coords, demands, windows, service, capacity)
    except InvalidRange as exc:
        raise ParseError(str(exc)) from exc


def serialize_solomon(instance: VrptwInstance, name: str = "INSTANCE") -> str:
    out = [name, "", "VEHICLE", "NUMBER     CAPACITY",
           f"  25         {_fmt(instance.vehicle_capacity)}", "", "CUSTOMER",
           "CUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE TIME"]
    for i in range(instance.n_customers + 1):
        x, y = instance.coordinates[i]
        a, b = instance.time_windows[i]
        out.append("    ".join([
            str(i), _fmt(x), _fmt(y), _fmt(instance.demands[i]),
            _fmt(a), _fmt(b), _fmt(instance.service_times[i]),
        ]))
    return "\n".join(out) + "\n"


# -- native JSON format ---------------------------------------------------------


def to_json(instance) -> str:
    if isinstance(instance, CspInstance):
        payload = {
            "problem": "csp",
            "roll_length": instance.roll_length,
            "item_weights": list(instance.item_weights),
            "item_demands": list(instance.item_demands),
        }
    elif isinstance(instance, VrptwInstance):
        payload = {
            "problem": "vrptw",
            "n_customers": instance.n_customers,
            "coordinates": [list(p) for p in instance.coordinates],
            "demands": list(instance.demands),
            "time_windows": [list(w) for w in instance.time_windows],
            "service_times": list(instance.service_times),
            "vehicle_capacity": instance.vehicle_capacity,
        }
    else:
        raise TypeError(f"unsupported instance type {type(instance).__name__}")
    return json.dumps(payload, indent=2)


def from_json(text: str):
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", line=exc.lineno) from exc
    kind = payload.get("problem")
    try:
        if kind == "csp":
            return CspInstance(payload["roll_length"],
                               tuple(payload["item_weights"]),
                               tuple(payload["item_demands"]))
        if kind == "vrptw":
            return VrptwInstance(payload["n_customers"],
                                 tuple(tuple(p) for p in payload["coordinates"]),
                                 tuple(payload["demands"]),
                                 tuple(tuple(w) for w in payload["time_windows"]),
                                 tuple(payload["service_times"]),
                                 payload["vehicle_capacity"])
    except (KeyError, InvalidRange) as exc:
        raise ParseError(f"bad instance payload: {exc}") from exc
    raise ParseError(f"unknown problem kind {kind!r}")


def load_instance(path) -> object:
    """Load an instance from a file path, dispatching on extension."""
    from pathlib import Path

    p = Path(path)
    text = p.read_text()
    suffix = p.suffix.lower()
    if suffix == ".json":
        return from_json(text)
    if suffix in (".bpp", ".csp"):
        return parse_csp_text(text)
    if suffix in (".sol", ".vrp", ".txt"):
        # .txt is ambiguous; Solomon files carry a VEHICLE section
        if "VEHICLE" in text.upper():
            return parse_solomon(text)
        return parse_csp_text(text)
    raise ParseError(f"cannot infer instance format from suffix {suffix!r}")
