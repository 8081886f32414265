"""Domain types for complete bipartite matching under a global utility.

A matching is stored as a tuple ``assign`` of length ``m`` where ``assign[i]``
is the right vertex matched to left vertex ``i``. Right vertices missing from
the tuple are unmatched.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence, runtime_checkable

import numpy as np

Matching = tuple[int, ...]

DEFAULT_ENUMERATION_CAP = 500_000


class CapExceeded(Exception):
    """Raised when an exhaustive computation would exceed its size cap."""

    def __init__(self, what: str, size: int, cap: int):
        self.what = what
        self.size = size
        self.cap = cap
        super().__init__(f"{what}: size {size} exceeds cap {cap}")


class InvalidMatching(ValueError):
    pass


@runtime_checkable
class UtilityOracle(Protocol):
    """Anything that scores a perfect matching.

    ``u_max`` and ``u_min`` may be loose bounds; they only enter the
    utility-range factor used by the bound checks.
    """

    u_max: float
    u_min: float

    def evaluate(self, assign: Matching) -> float: ...


@dataclass(frozen=True)
class FunctionUtility:
    """Wrap a plain callable together with its utility bounds."""

    func: Callable[[Matching], float]
    u_max: float
    u_min: float

    def evaluate(self, assign: Matching) -> float:
        return float(self.func(assign))


@dataclass(frozen=True)
class Instance:
    m: int
    n: int
    utility: UtilityOracle

    def __post_init__(self):
        if not (isinstance(self.m, int) and isinstance(self.n, int)):
            raise TypeError("m and n must be integers")
        if not 1 <= self.m <= self.n:
            raise ValueError(f"need 1 <= m <= n, got m={self.m}, n={self.n}")
        if not self.utility.u_min <= self.utility.u_max:
            raise ValueError("utility bounds inverted: u_min > u_max")

    @property
    def n_states(self) -> int:
        return falling_factorial(self.n, self.m)

    @property
    def utility_range(self) -> float:
        return float(self.utility.u_max - self.utility.u_min)

    def evaluate(self, assign: Matching) -> float:
        return float(self.utility.evaluate(assign))


@dataclass(frozen=True)
class GibbsParams:
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ValueError(f"beta must be finite and >= 0, got {self.beta}")


def as_beta(params: GibbsParams | float) -> float:
    if isinstance(params, GibbsParams):
        return float(params.beta)
    return GibbsParams(float(params)).beta


def falling_factorial(n: int, m: int) -> int:
    """n * (n-1) * ... * (n-m+1), the number of perfect matchings."""
    return math.perm(n, m)


def check_matching(assign: Sequence[int], m: int, n: int) -> Matching:
    """Validate ``assign`` as a perfect matching of an (m, n) instance."""
    assign = tuple(int(z) for z in assign)
    if len(assign) != m:
        raise InvalidMatching(f"expected {m} entries, got {len(assign)}")
    for i, z in enumerate(assign):
        if not 0 <= z < n:
            raise InvalidMatching(f"left vertex {i} matched to {z}, outside 0..{n - 1}")
    if len(set(assign)) != m:
        raise InvalidMatching(f"right vertex used twice in {list(assign)}")
    return assign


def enumerate_matchings(inst: Instance, cap: int = DEFAULT_ENUMERATION_CAP) -> list[Matching]:
    """All perfect matchings of ``inst`` in lexicographic order of ``assign``."""
    count = falling_factorial(inst.n, inst.m)
    if count > cap:
        raise CapExceeded("matching enumeration", count, cap)
    return list(itertools.permutations(range(inst.n), inst.m))


def state_index(states: Sequence[Matching]) -> dict[Matching, int]:
    return {s: i for i, s in enumerate(states)}


def utility_vector(inst: Instance, states: Sequence[Matching]) -> np.ndarray:
    return np.array([inst.evaluate(s) for s in states], dtype=float)


def gibbs_weights(utilities: np.ndarray, beta: float) -> np.ndarray:
    """Normalised exp(beta * U), computed with max-subtraction."""
    logits = beta * np.asarray(utilities, dtype=float)
    logits -= logits.max()
    w = np.exp(logits)
    return w / w.sum()


def gibbs_distribution(inst: Instance, params: GibbsParams | float,
                       cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Gibbs probabilities over ``enumerate_matchings(inst)`` order."""
    beta = as_beta(params)
    states = enumerate_matchings(inst, cap)
    return gibbs_weights(utility_vector(inst, states), beta)


def alpha(inst: Instance, params: GibbsParams | float) -> float:
    """exp(beta * (U_max - U_min)) from the oracle's reported bounds."""
    return math.exp(as_beta(params) * inst.utility_range)
