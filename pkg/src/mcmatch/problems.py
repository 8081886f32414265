"""Utility oracles that encode assignment problems as bipartite matchings.

Scheduling, colouring and knapsack instances use ``n = m * K`` right vertices
split into ``K`` blocks of ``m``; the block of right vertex ``u`` (0-based) is
``u // m``. For CNF formulas there are two blocks: right vertices below ``m``
stand for bit 0, the rest for bit 1. Permuting right vertices within a block
never changes the utility.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .core import Instance, Matching, check_matching, enumerate_matchings

KINDS = ("scheduling", "colouring", "knapsack", "cnf", "table")


class ProblemFormatError(ValueError):
    """Malformed problem description; the message names the offending field."""


def _field(data: Mapping[str, Any], key: str, kind: str):
    if not isinstance(data, Mapping):
        raise ProblemFormatError(f"{kind}: top level must be a JSON object")
    if key not in data:
        raise ProblemFormatError(f"{kind}: missing field '{key}'")
    return data[key]


def _matrix(rows, name: str, n_rows: int, n_cols: int) -> tuple[tuple[float, ...], ...]:
    try:
        out = tuple(tuple(float(x) for x in row) for row in rows)
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"field '{name}' must be a matrix of numbers") from exc
    if len(out) != n_rows or any(len(r) != n_cols for r in out):
        raise ProblemFormatError(f"field '{name}' must be {n_rows}x{n_cols}")
    return out


@dataclass(frozen=True)
class JobSchedulingSpec:
    """m jobs on K machines; utility is the negative make-span."""

    service: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if not self.service or not self.service[0]:
            raise ProblemFormatError("scheduling: need at least one job and one machine")
        K = len(self.service[0])
        if any(len(r) != K for r in self.service):
            raise ProblemFormatError("scheduling: 'service' rows differ in length")
        if any(s < 0 or not math.isfinite(s) for r in self.service for s in r):
            raise ProblemFormatError("scheduling: service times must be finite and >= 0")

    @property
    def m(self) -> int:
        return len(self.service)

    @property
    def K(self) -> int:
        return len(self.service[0])

    @property
    def u_max(self) -> float:
        return 0.0

    @property
    def u_min(self) -> float:
        return -float(sum(map(sum, self.service)))

    def machines(self, assign: Matching) -> list[int]:
        return [u // self.m for u in assign]

    def evaluate(self, assign: Matching) -> float:
        load = [0.0] * self.K
        for i, u in enumerate(assign):
            j = u // self.m
            load[j] += self.service[i][j]
        return -max(load)

    def instance(self) -> Instance:
        return Instance(self.m, self.m * self.K, self)

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "JobSchedulingSpec":
        m = int(_field(data, "jobs", "scheduling"))
        K = int(_field(data, "machines", "scheduling"))
        return cls(_matrix(_field(data, "service", "scheduling"), "service", m, K))

    def to_json(self) -> dict:
        return {"jobs": self.m, "machines": self.K, "service": [list(r) for r in self.service]}


@dataclass(frozen=True)
class GraphColouringSpec:
    """Vertices 0..m-1 coloured by the block of their right partner."""

    m: int
    edges: tuple[tuple[int, int], ...]
    K: int
    c: float = 1.0

    def __post_init__(self):
        if self.m < 1 or self.K < 1:
            raise ProblemFormatError("colouring: need at least one vertex and one colour")
        if not self.c > 0:
            raise ProblemFormatError("colouring: 'c' must be positive")
        for i, j in self.edges:
            if i == j:
                raise ProblemFormatError(f"colouring: self-loop on vertex {i}")
            if not (0 <= i < self.m and 0 <= j < self.m):
                raise ProblemFormatError(f"colouring: edge ({i}, {j}) out of range")

    @property
    def u_max(self) -> float:
        return self.c

    @property
    def u_min(self) -> float:
        return -self.c

    def colours(self, assign: Matching) -> list[int]:
        return [u // self.m for u in assign]

    def evaluate(self, assign: Matching) -> float:
        m = self.m
        for i, j in self.edges:
            if assign[i] // m == assign[j] // m:
                return -self.c
        return self.c

    def instance(self) -> Instance:
        return Instance(self.m, self.m * self.K, self)

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "GraphColouringSpec":
        raw = _field(data, "edges", "colouring")
        try:
            edges = tuple((int(a), int(b)) for a, b in raw)
        except (TypeError, ValueError) as exc:
            raise ProblemFormatError("colouring: 'edges' must be a list of [i, j] pairs") from exc
        K = int(_field(data, "colors", "colouring"))
        m = data.get("vertices")
        if m is None:
            m = 1 + max((max(e) for e in edges), default=0)
        return cls(int(m), edges, K, float(data.get("c", 1.0)))

    def to_json(self) -> dict:
        return {"vertices": self.m, "edges": [list(e) for e in self.edges],
                "colors": self.K, "c": self.c}


@dataclass(frozen=True)
class KnapsackSpec:
    """Multiple knapsack; infeasible assignments score ``-kappa``."""

    volumes: tuple[float, ...]
    capacities: tuple[float, ...]
    rewards: tuple[tuple[float, ...], ...]
    kappa: float

    def __post_init__(self):
        m, K = len(self.volumes), len(self.capacities)
        if m < 1 or K < 1:
            raise ProblemFormatError("knapsack: need at least one item and one knapsack")
        if len(self.rewards) != m or any(len(r) != K for r in self.rewards):
            raise ProblemFormatError(f"knapsack: 'rewards' must be {m}x{K}")
        if any(v <= 0 for v in self.volumes) or any(c <= 0 for c in self.capacities):
            raise ProblemFormatError("knapsack: volumes and capacities must be positive")
        if any(r <= 0 for row in self.rewards for r in row):
            raise ProblemFormatError("knapsack: rewards must be positive")
        # infeasible matchings must never tie with or beat a feasible one
        if not self.kappa > self.total_reward:
            raise ProblemFormatError(
                f"knapsack: 'kappa' must exceed the total reward {self.total_reward}")

    @property
    def m(self) -> int:
        return len(self.volumes)

    @property
    def K(self) -> int:
        return len(self.capacities)

    @property
    def total_reward(self) -> float:
        return float(sum(map(sum, self.rewards)))

    @property
    def u_max(self) -> float:
        return self.total_reward

    @property
    def u_min(self) -> float:
        return -self.kappa

    def evaluate(self, assign: Matching) -> float:
        m = self.m
        load = [0.0] * self.K
        reward = 0.0
        for i, u in enumerate(assign):
            j = u // m
            load[j] += self.volumes[i]
            reward += self.rewards[i][j]
        if any(l > c for l, c in zip(load, self.capacities)):
            return -self.kappa
        return reward

    def instance(self) -> Instance:
        return Instance(self.m, self.m * self.K, self)

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "KnapsackSpec":
        try:
            volumes = tuple(float(v) for v in _field(data, "volumes", "knapsack"))
            caps = tuple(float(c) for c in _field(data, "capacities", "knapsack"))
            kappa = float(_field(data, "kappa", "knapsack"))
        except (TypeError, ValueError) as exc:
            raise ProblemFormatError(f"knapsack: {exc}") from exc
        rewards = _matrix(_field(data, "rewards", "knapsack"), "rewards", len(volumes), len(caps))
        return cls(volumes, caps, rewards, kappa)

    def to_json(self) -> dict:
        return {"volumes": list(self.volumes), "capacities": list(self.capacities),
                "rewards": [list(r) for r in self.rewards], "kappa": self.kappa}


Literal = tuple[int, bool]  # (0-based variable, True for a positive literal)


@dataclass(frozen=True)
class CnfSpec:
    """3-CNF formula; utility is 1 when the decoded assignment satisfies it."""

    m: int
    clauses: tuple[tuple[Literal, Literal, Literal], ...]

    def __post_init__(self):
        if self.m < 1:
            raise ProblemFormatError("cnf: need at least one variable")
        for k, clause in enumerate(self.clauses):
            if len(clause) != 3:
                raise ProblemFormatError(f"cnf: clause {k} has {len(clause)} literals, need 3")
            for v, _ in clause:
                if not 0 <= v < self.m:
                    raise ProblemFormatError(f"cnf: clause {k} uses variable {v + 1} > {self.m}")

    u_max = 1.0
    u_min = 0.0

    @classmethod
    def from_signed(cls, m: int, clauses: Sequence[Sequence[int]]) -> "CnfSpec":
        """Build from DIMACS-style signed 1-based literals."""
        out = []
        for k, clause in enumerate(clauses):
            lits = []
            for lit in clause:
                lit = int(lit)
                if lit == 0:
                    raise ProblemFormatError(f"cnf: clause {k} contains literal 0")
                lits.append((abs(lit) - 1, lit > 0))
            out.append(tuple(lits))
        return cls(int(m), tuple(out))

    def bits(self, assign: Matching) -> tuple[int, ...]:
        m = self.m
        return tuple(int(u >= m) for u in assign)

    def satisfied(self, bits: Sequence[int]) -> bool:
        return all(any(bool(bits[v]) == pos for v, pos in c) for c in self.clauses)

    def evaluate(self, assign: Matching) -> float:
        return 1.0 if self.satisfied(self.bits(assign)) else 0.0

    def instance(self) -> Instance:
        return Instance(self.m, 2 * self.m, self)

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "CnfSpec":
        m = _field(data, "vars", "cnf")
        clauses = _field(data, "clauses", "cnf")
        try:
            return cls.from_signed(int(m), [[int(x) for x in c] for c in clauses])
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ProblemFormatError):
                raise
            raise ProblemFormatError(f"cnf: {exc}") from exc

    def to_json(self) -> dict:
        return {"vars": self.m,
                "clauses": [[(v + 1) if pos else -(v + 1) for v, pos in c] for c in self.clauses]}


@dataclass(frozen=True)
class TableUtility:
    """Explicit utility per matching, for pinning arbitrary landscapes."""

    m: int
    n: int
    table: Mapping[Matching, float]
    default: float | None = None

    def __post_init__(self):
        for a in self.table:
            check_matching(a, self.m, self.n)
        if self.default is None and len(self.table) != math.perm(self.n, self.m):
            raise ProblemFormatError(
                "table: every matching needs an entry unless 'default' is given")

    @classmethod
    def from_values(cls, m: int, n: int, values: Sequence[float]) -> "TableUtility":
        """Utilities listed in lexicographic order of matchings."""
        states = list(itertools.permutations(range(n), m))
        if len(values) != len(states):
            raise ProblemFormatError(f"table: expected {len(states)} values, got {len(values)}")
        return cls(m, n, dict(zip(states, map(float, values))))

    def _values(self) -> list[float]:
        vals = list(self.table.values())
        if self.default is not None and len(self.table) < math.perm(self.n, self.m):
            vals.append(self.default)
        return vals

    @property
    def u_max(self) -> float:
        return max(self._values())

    @property
    def u_min(self) -> float:
        return min(self._values())

    def evaluate(self, assign: Matching) -> float:
        try:
            return self.table[assign]
        except KeyError:
            if self.default is None:
                raise
            return self.default

    def instance(self) -> Instance:
        return Instance(self.m, self.n, self)

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "TableUtility":
        m = int(_field(data, "m", "table"))
        n = int(_field(data, "n", "table"))
        if "values" in data:
            return cls.from_values(m, n, data["values"])
        table = {}
        for k, entry in enumerate(_field(data, "entries", "table")):
            try:
                key = check_matching(entry["assign"], m, n)
                table[key] = float(entry["utility"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ProblemFormatError(f"table: bad entry {k}: {exc}") from exc
        default = data.get("default")
        return cls(m, n, table, None if default is None else float(default))

    def to_json(self) -> dict:
        out = {"m": self.m, "n": self.n,
               "entries": [{"assign": list(a), "utility": u} for a, u in self.table.items()]}
        if self.default is not None:
            out["default"] = self.default
        return out


_LOADERS = {
    "scheduling": JobSchedulingSpec,
    "colouring": GraphColouringSpec,
    "knapsack": KnapsackSpec,
    "cnf": CnfSpec,
    "table": TableUtility,
}


def load_problem(data: Mapping[str, Any], kind: str):
    """Parse a problem description of the given kind into its problem object."""
    if kind == "coloring":
        kind = "colouring"
    try:
        loader = _LOADERS[kind]
    except KeyError:
        raise ProblemFormatError(f"unknown problem kind {kind!r}; expected one of {KINDS}")
    try:
        return loader.from_json(data)
    except ProblemFormatError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ProblemFormatError(f"{kind}: {exc}") from exc


def scheduling_utility(spec: JobSchedulingSpec, assign: Matching) -> float:
    return spec.evaluate(assign)


def colouring_utility(spec: GraphColouringSpec, assign: Matching) -> float:
    return spec.evaluate(assign)


def knapsack_utility(spec: KnapsackSpec, assign: Matching) -> float:
    return spec.evaluate(assign)


def sat_utility(spec: CnfSpec, assign: Matching) -> float:
    return spec.evaluate(assign)


def _sat_over_bits(spec: CnfSpec, bits: np.ndarray) -> np.ndarray:
    ok = np.ones(len(bits), dtype=bool)
    for clause in spec.clauses:
        hit = np.zeros(len(bits), dtype=bool)
        for v, pos in clause:
            hit |= bits[:, v] == pos
        ok &= hit
    return ok


def assignment_coverage_check(spec: CnfSpec, enum_limit: int = 1_000_000) -> bool:
    """Check that the matching encoding captures the formula exactly.

    Every assignment in {0,1}^m must be realised by some perfect matching of
    the (m, 2m) instance, and the best utility over matchings must be 1 exactly
    when the formula is satisfiable. Matchings are enumerated outright when
    there are at most ``enum_limit`` of them; above that the maximum is taken
    over the realised assignments.
    """
    m = spec.m
    if m > 8:
        raise ValueError("coverage check is limited to m <= 8 variables")
    all_bits = list(itertools.product((0, 1), repeat=m))
    for bits in all_bits:
        witness = tuple(i + m * b for i, b in enumerate(bits))
        check_matching(witness, m, 2 * m)
        if spec.bits(witness) != bits:
            return False
    satisfiable = any(spec.satisfied(b) for b in all_bits)
    if math.perm(2 * m, m) <= enum_limit:
        arr = np.array(enumerate_matchings(spec.instance(), enum_limit), dtype=np.int64)
        best = float(_sat_over_bits(spec, arr >= m).any())
    else:
        best = max(spec.evaluate(tuple(i + m * b for i, b in enumerate(bits)))
                   for bits in all_bits)
    return (best == 1.0) == satisfiable
