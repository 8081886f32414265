"""Metropolis chain over perfect matchings.

Each step draws a left vertex ``y`` and a right vertex ``z`` uniformly and
independently. If ``(y, z)`` is already matched nothing changes; if ``z`` is
free, ``y`` is rematched to ``z`` (a *move*); otherwise ``y`` and the current
partner of ``z`` exchange right vertices (a *swap*). The candidate is accepted
with probability ``min(1, exp(beta * dU))``.

Randomness comes from :class:`ChainRng`, a thin layer over the raw 64-bit
output of numpy's PCG64 bit generator. Only ``random_raw`` is used, so the
stream of draws for a given seed does not depend on numpy's higher level
sampling routines.
"""
from __future__ import annotations

import csv
import enum
import math
import os
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .core import GibbsParams, Instance, InvalidMatching, Matching, check_matching

DEBUG_CHECKS = bool(os.environ.get("MCMATCH_DEBUG"))

_TWO64 = 1 << 64


class ChainRng:
    """Seedable draw source for the chain.

    Raw 64-bit words are pulled from ``numpy.random.PCG64(seed)`` in blocks of
    ``CHUNK``. Derived draws:

    * ``below(k)``: rejection sampling, ``x % k`` for ``x < 2**64 - 2**64 % k``
    * ``uniform()``: ``(x >> 11) * 2**-53``, a double in [0, 1)
    * ``coin()``: the top bit of ``x``
    """

    CHUNK = 1024

    def __init__(self, seed: int):
        if not 0 <= int(seed) < _TWO64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self._bitgen = np.random.PCG64(self.seed)
        self._buf: list[int] = []
        self._pos = 0

    def raw(self) -> int:
        if self._pos == len(self._buf):
            self._buf = self._bitgen.random_raw(self.CHUNK).tolist()
            self._pos = 0
        x = self._buf[self._pos]
        self._pos += 1
        return x

    def below(self, k: int) -> int:
        limit = _TWO64 - _TWO64 % k
        while True:
            x = self.raw()
            if x < limit:
                return x % k

    def uniform(self) -> float:
        return (self.raw() >> 11) * 2.0**-53

    def coin(self) -> bool:
        return bool(self.raw() >> 63)


class ProposalKind(str, enum.Enum):
    STAY = "stay"
    MOVE = "move"
    SWAP = "swap"


@dataclass(frozen=True)
class Proposal:
    kind: ProposalKind
    y: int
    z: int
    candidate: Matching
    # only set for swaps: the left vertex currently holding z, and y's old partner
    y1: int | None = None
    z1: int | None = None


def classify(assign: Matching, y: int, z: int) -> Proposal:
    """Neighbour of ``assign`` implied by the draw ``(y, z)``."""
    z1 = assign[y]
    if z1 == z:
        return Proposal(ProposalKind.STAY, y, z, assign)
    try:
        y1 = assign.index(z)
    except ValueError:
        cand = assign[:y] + (z,) + assign[y + 1:]
        return Proposal(ProposalKind.MOVE, y, z, cand)
    cand = list(assign)
    cand[y] = z
    cand[y1] = z1
    return Proposal(ProposalKind.SWAP, y, z, tuple(cand), y1=y1, z1=z1)


@dataclass(frozen=True)
class ChainConfig:
    params: GibbsParams
    steps: int
    seed: int = 0
    lazy: bool = False
    # optional piecewise-constant beta, entries (first_step, beta)
    schedule: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if not 0 <= self.seed < _TWO64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        starts = [s for s, _ in self.schedule]
        if starts != sorted(starts):
            raise ValueError("beta schedule must be sorted by step")
        for _, b in self.schedule:
            GibbsParams(b)

    def beta_at(self, step: int) -> float:
        """Inverse temperature in force for step number ``step`` (1-based)."""
        beta = self.params.beta
        for start, b in self.schedule:
            if start > step:
                break
            beta = b
        return beta


@dataclass
class ChainState:
    current: Matching
    current_utility: float
    best: Matching
    best_utility: float
    step: int = 0
    accepted: bool = False  # outcome of the most recent step
    n_accepted: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.n_accepted / self.step if self.step else 0.0

    @classmethod
    def start(cls, inst: Instance, assign: Sequence[int]) -> "ChainState":
        assign = check_matching(assign, inst.m, inst.n)
        u = inst.evaluate(assign)
        return cls(assign, u, assign, u)


class TraceRow(NamedTuple):
    step: int
    current_utility: float
    best_utility: float
    accepted: bool


def propose(state: ChainState, inst: Instance, rng: ChainRng) -> Proposal:
    y, z = divmod(rng.below(inst.m * inst.n), inst.n)
    return classify(state.current, y, z)


def step(state: ChainState, inst: Instance, cfg: ChainConfig, rng: ChainRng,
         beta: float | None = None) -> ChainState:
    """Advance ``state`` by one transition in place and return it.

    ``state.accepted`` is true only when a move or swap was adopted; lazy
    holds and stay draws leave it false.
    """
    state.step += 1
    state.accepted = False
    if cfg.lazy and rng.coin():
        return state
    prop = propose(state, inst, rng)
    if prop.kind is ProposalKind.STAY:
        return state
    if beta is None:
        beta = cfg.beta_at(state.step)
    u_new = inst.evaluate(prop.candidate)
    log_ratio = beta * (u_new - state.current_utility)
    if log_ratio < 0:
        u = rng.uniform()
        if u > 0 and math.log(u) >= log_ratio:
            return state
    state.current = prop.candidate
    state.current_utility = u_new
    state.accepted = True
    state.n_accepted += 1
    if u_new > state.best_utility:
        state.best = prop.candidate
        state.best_utility = u_new
    if DEBUG_CHECKS:
        try:
            check_matching(state.current, inst.m, inst.n)
        except InvalidMatching as exc:  # pragma: no cover - guards a bug
            raise AssertionError(f"chain left the matching space: {exc}") from exc
    return state


def random_matching(inst: Instance, rng: ChainRng) -> Matching:
    """Uniform perfect matching by sequential sampling without replacement."""
    free = list(range(inst.n))
    return tuple(free.pop(rng.below(len(free))) for _ in range(inst.m))


def run(inst: Instance, cfg: ChainConfig, initial: Sequence[int] | None = None,
        stride: int = 1, stop_at: float | None = None,
        ) -> tuple[ChainState, list[TraceRow]]:
    """Run the chain for ``cfg.steps`` steps.

    ``initial=None`` draws a uniform starting matching from the chain's own
    stream. A trace row is kept for every step whose number is a multiple of
    ``stride``. With ``stop_at`` the run ends early once the best utility
    reaches that value.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    rng = ChainRng(cfg.seed)
    if initial is None:
        initial = random_matching(inst, rng)
    state = ChainState.start(inst, initial)
    trace: list[TraceRow] = []
    if stop_at is not None and state.best_utility >= stop_at:
        return state, trace
    fixed_beta = None if cfg.schedule else cfg.params.beta
    for _ in range(cfg.steps):
        step(state, inst, cfg, rng, fixed_beta)
        if state.step % stride == 0:
            trace.append(TraceRow(state.step, state.current_utility,
                                  state.best_utility, state.accepted))
        if stop_at is not None and state.best_utility >= stop_at:
            break
    return state, trace


def write_trace_csv(trace: Iterable[TraceRow], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["step", "current_utility", "best_utility", "accepted"])
    for r in trace:
        w.writerow([r.step, repr(float(r.current_utility)),
                    repr(float(r.best_utility)), int(r.accepted)])
