"""Synthetic optimisation workloads standing in for quantum jobs.

Two kinds of small instance are generated deterministically from a seed:

* ``KNAPSACK`` -- 0/1 knapsack, maximise value under a weight capacity.
  A solution is a 0/1 tuple, one entry per item.
* ``ROUTE_OPT`` -- symmetric closed-tour routing, minimise tour length.
  A solution is a permutation of the city indices.

Instances are capped at 12 decision elements so the verifier can always
recompute the optimum itself. Knapsack optima come from exhaustive subset
enumeration; route optima from Held-Karp dynamic programming, which is exact
and avoids walking all ``(n-1)!/2`` tours at n = 12.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Mapping, Union

import numpy as np

MIN_SIZE = 4
MAX_SIZE = 12


class TaskKind(str, Enum):
    ROUTE_OPT = "ROUTE_OPT"
    KNAPSACK = "KNAPSACK"


# Qubit-hours credited per task, by kind and size. Mirrored in docs/qh_schedule.md.
DEFAULT_QH_SCHEDULE: dict[TaskKind, dict[int, int]] = {
    TaskKind.KNAPSACK: {4: 1, 5: 1, 6: 2, 7: 2, 8: 3, 9: 4, 10: 5, 11: 6, 12: 8},
    TaskKind.ROUTE_OPT: {4: 1, 5: 2, 6: 3, 7: 4, 8: 6, 9: 8, 10: 10, 11: 13, 12: 16},
}

QHSchedule = Mapping[TaskKind, Mapping[int, int]]


class TaskError(ValueError):
    pass


def qh_for(kind: TaskKind, size: int, schedule: QHSchedule | None = None) -> int:
    schedule = DEFAULT_QH_SCHEDULE if schedule is None else schedule
    try:
        return int(schedule[TaskKind(kind)][int(size)])
    except KeyError:
        raise TaskError(f"no QH schedule entry for {TaskKind(kind).value} size {size}") from None


def schedule_to_json(schedule: QHSchedule) -> dict:
    return {k.value: {str(s): int(v) for s, v in sorted(sizes.items())} for k, sizes in sorted(schedule.items(), key=lambda kv: kv[0].value)}


def schedule_from_json(data: Mapping) -> dict[TaskKind, dict[int, int]]:
    out = {}
    for kind, sizes in data.items():
        table = {int(s): int(v) for s, v in sizes.items()}
        if any(v < 1 for v in table.values()):
            raise TaskError(f"QH schedule values must be >= 1 ({kind})")
        out[TaskKind(kind)] = table
    return out


@dataclass(frozen=True)
class KnapsackInstance:
    weights: tuple[int, ...]
    values: tuple[int, ...]
    capacity: int

    @property
    def size(self) -> int:
        return len(self.weights)

    def to_json(self) -> dict:
        return {"weights": list(self.weights), "values": list(self.values), "capacity": self.capacity}


@dataclass(frozen=True)
class RouteInstance:
    distances: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return len(self.distances)

    def to_json(self) -> dict:
        return {"distances": [list(r) for r in self.distances]}


Instance = Union[KnapsackInstance, RouteInstance]


@dataclass(frozen=True)
class SyntheticTask:
    task_id: str
    kind: TaskKind
    size: int
    instance: Instance
    qh_value: int
    rng_seed: int

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "kind": self.kind.value,
            "size": self.size,
            "instance": self.instance.to_json(),
            "qh_value": self.qh_value,
            "rng_seed": self.rng_seed,
        }


@dataclass(frozen=True)
class TaskResult:
    task_id: str
    solution: tuple[int, ...]
    claimed_objective: int


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def _task_rng(seed: int, kind: TaskKind, size: int) -> np.random.Generator:
    key = hashlib.sha256(f"qrt-task|{int(seed)}|{kind.value}|{size}".encode()).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(key[:16], "big")))


def _gen_knapsack(rng: np.random.Generator, size: int) -> KnapsackInstance:
    weights = [int(w) for w in rng.integers(1, 31, size=size)]
    values = [int(v) for v in rng.integers(1, 61, size=size)]
    total = sum(weights)
    # every item fits alone, and taking every item never fits
    capacity = max(max(weights), total // 2)
    if capacity >= total:
        capacity = total - 1
        weights = [min(w, capacity) for w in weights]
    return KnapsackInstance(tuple(weights), tuple(values), capacity)


def _gen_route(rng: np.random.Generator, size: int) -> RouteInstance:
    pts = rng.integers(0, 100, size=(size, 2))
    diff = pts[:, None, :] - pts[None, :, :]
    d = np.rint(np.sqrt((diff**2).sum(axis=-1))).astype(np.int64)
    d = d + 1 - np.eye(size, dtype=np.int64)  # strictly positive off-diagonal
    return RouteInstance(tuple(tuple(int(x) for x in row) for row in d))


def generate_task(
    seed: int, kind: TaskKind | str, size: int, schedule: QHSchedule | None = None
) -> SyntheticTask:
    """Build a task deterministically from ``(seed, kind, size)``."""
    kind = TaskKind(kind)
    if isinstance(size, bool) or not isinstance(size, (int, np.integer)):
        raise TaskError(f"size must be an integer, got {size!r}")
    size = int(size)
    if not MIN_SIZE <= size <= MAX_SIZE:
        raise TaskError(f"size must be in [{MIN_SIZE}, {MAX_SIZE}], got {size}")
    rng = _task_rng(seed, kind, size)
    instance = _gen_knapsack(rng, size) if kind is TaskKind.KNAPSACK else _gen_route(rng, size)
    body = {"kind": kind.value, "size": size, "seed": int(seed), "instance": instance.to_json()}
    task_id = hashlib.sha256(canonical_json(body)).hexdigest()[:24]
    return SyntheticTask(task_id, kind, size, instance, qh_for(kind, size, schedule), int(seed))


# -- feasibility and objectives -------------------------------------------


def is_feasible(task: SyntheticTask, solution) -> bool:
    n = task.size
    try:
        sol = tuple(int(x) for x in solution)
    except (TypeError, ValueError):
        return False
    if task.kind is TaskKind.KNAPSACK:
        inst = task.instance
        if len(sol) != n or any(x not in (0, 1) for x in sol):
            return False
        return sum(w for w, x in zip(inst.weights, sol) if x) <= inst.capacity
    return len(sol) == n and sorted(sol) == list(range(n))


def objective(task: SyntheticTask, solution) -> int:
    """Knapsack value or closed-tour length. Caller checks feasibility first."""
    sol = tuple(int(x) for x in solution)
    if task.kind is TaskKind.KNAPSACK:
        return sum(v for v, x in zip(task.instance.values, sol) if x)
    d = task.instance.distances
    return sum(d[sol[i]][sol[(i + 1) % len(sol)]] for i in range(len(sol)))


def better(task: SyntheticTask, a: int, b: int) -> bool:
    """True if objective ``a`` strictly beats ``b`` for this task's sense."""
    return a > b if task.kind is TaskKind.KNAPSACK else a < b


# -- exact solvers --------------------------------------------------------


def _solve_knapsack(inst: KnapsackInstance) -> tuple[tuple[int, ...], int]:
    n = inst.size
    masks = np.arange(1 << n, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(n)) & 1
    weight = bits @ np.asarray(inst.weights, dtype=np.int64)
    value = bits @ np.asarray(inst.values, dtype=np.int64)
    value = np.where(weight <= inst.capacity, value, -1)
    best = int(np.argmax(value))  # lowest mask among ties
    return tuple(int(b) for b in bits[best]), int(value[best])


def _solve_route(inst: RouteInstance) -> tuple[tuple[int, ...], int]:
    n = inst.size
    d = np.asarray(inst.distances, dtype=np.int64)
    m = n - 1  # city 0 is the fixed start; cities 1..n-1 map to bits 0..m-1
    full = 1 << m
    inf = np.iinfo(np.int64).max // 4
    cost = np.full((full, m), inf, dtype=np.int64)
    parent = np.full((full, m), -1, dtype=np.int64)
    for j in range(m):
        cost[1 << j, j] = d[0, j + 1]
    sub = d[1:, 1:]
    ks = np.arange(m)
    # masks only grow, so ascending order finalises every predecessor first
    for mask in range(1, full):
        cand = cost[mask][:, None] + sub  # cand[j, k]: end at j, then go to k
        js = np.argmin(cand, axis=0)
        best = cand[js, ks]
        for k in ks[((mask >> ks) & 1) == 0]:
            nxt = mask | (1 << int(k))
            if best[k] < cost[nxt, k]:
                cost[nxt, k] = best[k]
                parent[nxt, k] = js[k]
    closing = cost[full - 1] + d[1:, 0]
    last = int(np.argmin(closing))
    best = int(closing[last])
    tour = []
    mask, j = full - 1, last
    while j >= 0:
        tour.append(j + 1)
        prev = int(parent[mask, j])
        mask &= ~(1 << j)
        j = prev
    tour.append(0)
    tour.reverse()
    return tuple(tour), best


@lru_cache(maxsize=4096)
def optimum(task: SyntheticTask) -> tuple[tuple[int, ...], int]:
    """Optimal ``(solution, objective)`` for ``task``; cached per task."""
    if task.kind is TaskKind.KNAPSACK:
        return _solve_knapsack(task.instance)
    return _solve_route(task.instance)


def solve_task(task: SyntheticTask) -> TaskResult:
    """Honest solver: returns an optimal solution with its true objective."""
    solution, value = optimum(task)
    return TaskResult(task.task_id, solution, value)
