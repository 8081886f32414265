"""Canonical paths between perfect matchings and their edge congestion.

Left vertices are resolved in ascending index order. At step ``k`` left
vertex ``k`` is rematched to its partner in the target matching, either by a
move (target partner free) or by a swap with the left vertex currently holding
it. The order is fixed, which is what makes the path unique.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .core import (
    DEFAULT_ENUMERATION_CAP,
    CapExceeded,
    Instance,
    Matching,
    check_matching,
    enumerate_matchings,
)

# pairs scale as |N|^2; this bounds the census work independently of the
# enumeration cap
DEFAULT_CENSUS_CAP = 2000


@dataclass(frozen=True)
class CanonicalPath:
    states: tuple[Matching, ...]

    @property
    def source(self) -> Matching:
        return self.states[0]

    @property
    def target(self) -> Matching:
        return self.states[-1]

    def transitions(self) -> Iterator[tuple[Matching, Matching]]:
        """Consecutive pairs that actually change the matching."""
        for a, b in zip(self.states, self.states[1:]):
            if a != b:
                yield a, b

    def to_json(self) -> list[list[int]]:
        return [list(s) for s in self.states]


def canonical_path(inst: Instance, source: Sequence[int], target: Sequence[int]) -> CanonicalPath:
    cur = list(check_matching(source, inst.m, inst.n))
    tgt = check_matching(target, inst.m, inst.n)
    states = [tuple(cur)]
    for k in range(inst.m):
        z, z_new = cur[k], tgt[k]
        if z != z_new:
            try:
                y_other = cur.index(z_new)
            except ValueError:
                y_other = None
            cur[k] = z_new
            if y_other is not None:
                cur[y_other] = z
        states.append(tuple(cur))
    return CanonicalPath(tuple(states))


@dataclass
class Census:
    """Congestion of every transition used by some canonical path.

    ``counts[(i, j)]`` is the number of ordered pairs whose path uses the
    transition from ``states[i]`` to ``states[j]``. ``load[(i, j)]`` holds the
    summed ``pi[I] * pi[F]`` over those pairs when a distribution was given.
    """

    states: list[Matching]
    counts: dict[tuple[int, int], int]
    load: dict[tuple[int, int], float] = field(default_factory=dict)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def max_congestion(self) -> int:
        return max(self.counts.values(), default=0)

    def by_matching(self) -> dict[tuple[Matching, Matching], int]:
        return {(self.states[i], self.states[j]): c for (i, j), c in self.counts.items()}


def _lex_codes(arr: np.ndarray, n: int) -> np.ndarray:
    # base-n code with assign[0] most significant, so lexicographic order of
    # matchings is increasing code order
    m = arr.shape[-1]
    weights = n ** np.arange(m - 1, -1, -1, dtype=np.int64)
    return arr.astype(np.int64) @ weights


def congestion_census(inst: Instance, pi: np.ndarray | None = None, *,
                      method: str = "vectorized",
                      cap: int = DEFAULT_CENSUS_CAP,
                      block: int = 64) -> Census:
    """Count, for every transition, the ordered pairs routed through it.

    ``method="paths"`` builds each canonical path with :func:`canonical_path`;
    ``method="vectorized"`` runs the same construction on blocks of pairs at
    once with numpy. Self-loop steps are not counted.
    """
    if inst.n_states > cap:
        raise CapExceeded("congestion census", inst.n_states, cap)
    states = enumerate_matchings(inst, DEFAULT_ENUMERATION_CAP)
    if pi is not None:
        pi = np.asarray(pi, dtype=float)
        if pi.shape != (len(states),):
            raise ValueError("pi must have one entry per state")
    if method == "paths":
        return _census_paths(inst, states, pi)
    if method == "vectorized":
        return _census_vectorized(inst, states, pi, block)
    raise ValueError(f"unknown census method {method!r}")


def _census_paths(inst, states, pi) -> Census:
    index = {s: i for i, s in enumerate(states)}
    counts: Counter = Counter()
    load: dict[tuple[int, int], float] = {}
    for a, src in enumerate(states):
        for b, dst in enumerate(states):
            for u, v in canonical_path(inst, src, dst).transitions():
                e = (index[u], index[v])
                counts[e] += 1
                if pi is not None:
                    load[e] = load.get(e, 0.0) + pi[a] * pi[b]
    return Census(states, dict(counts), load)


def _census_vectorized(inst, states, pi, block) -> Census:
    n, m = inst.n, inst.m
    S = np.array(states, dtype=np.int64).reshape(len(states), m)
    N = len(states)
    codes = _lex_codes(S, n)
    # dense accumulators over edge keys i * N + j; N is capped so N^2 stays small
    count_acc = np.zeros(N * N, dtype=np.int64)
    load_acc = np.zeros(N * N) if pi is not None else None
    for lo in range(0, N, block):
        hi = min(lo + block, N)
        src_idx = np.repeat(np.arange(lo, hi), N)
        dst_idx = np.tile(np.arange(N), hi - lo)
        cur = S[src_idx].copy()
        tgt = S[dst_idx]
        w = pi[src_idx] * pi[dst_idx] if pi is not None else None
        keys, wts = [], []
        for k in range(m):
            rows = np.nonzero(cur[:, k] != tgt[:, k])[0]
            if rows.size == 0:
                continue
            before = np.searchsorted(codes, _lex_codes(cur[rows], n))
            z = cur[rows, k]
            z_new = tgt[rows, k]
            hit = cur[rows] == z_new[:, None]
            has_holder = hit.any(axis=1)
            holder = hit.argmax(axis=1)
            cur[rows, k] = z_new
            sw = rows[has_holder]
            cur[sw, holder[has_holder]] = z[has_holder]
            after = np.searchsorted(codes, _lex_codes(cur[rows], n))
            keys.append(before * N + after)
            if w is not None:
                wts.append(w[rows])
        if not keys:
            continue
        allk = np.concatenate(keys)
        count_acc += np.bincount(allk, minlength=N * N)
        if w is not None:
            load_acc += np.bincount(allk, weights=np.concatenate(wts), minlength=N * N)
    nz = np.nonzero(count_acc)[0]
    edges = list(zip((nz // N).tolist(), (nz % N).tolist()))
    counts = dict(zip(edges, count_acc[nz].tolist()))
    load = dict(zip(edges, load_acc[nz].tolist())) if load_acc is not None else {}
    return Census(list(states), counts, load)
