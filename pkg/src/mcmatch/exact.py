"""Exact analysis of the matching chain on small instances.

The transition matrix is assembled by enumerating all ``m * n`` draws of the
sampler from every state, so it describes the implemented chain rather than
an idealised one. Everything else (stationarity, total variation curve,
conductance, spectral gap, bound checks) is computed from that matrix.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .canonical import Census, congestion_census
from .core import (
    CapExceeded,
    GibbsParams,
    Instance,
    Matching,
    as_beta,
    enumerate_matchings,
    gibbs_weights,
    utility_vector,
)
from .sampler import ProposalKind, classify

DEFAULT_EXACT_CAP = 5040
DEFAULT_CUT_CAP = 22
BOUND_TOL = 1e-12


class NoConvergence(RuntimeError):
    pass


class BoundViolated(AssertionError):
    """A bound check failed. ``report`` holds every measured quantity."""

    def __init__(self, failed: list[str], report: "DiagnosticsReport"):
        self.failed = failed
        self.report = report
        super().__init__("bound violated: " + ", ".join(failed))


@dataclass(frozen=True)
class ExactChain:
    inst: Instance
    beta: float
    lazy: bool
    states: list[Matching]
    utilities: np.ndarray
    P: np.ndarray
    pi: np.ndarray

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def min_proposal_prob(self) -> float:
        """Smallest proposal probability of any non-trivial transition."""
        m, n = self.inst.m, self.inst.n
        # moves exist only when some right vertex is free
        q = 1.0 / (m * n) if n > m else 2.0 / (m * n)
        return q / 2 if self.lazy else q

    def flows(self) -> np.ndarray:
        """Edge weights w[i, j] = pi[i] * P[i, j]."""
        return self.pi[:, None] * self.P


def build_exact_chain(inst: Instance, params: GibbsParams | float, lazy: bool = False,
                      cap: int = DEFAULT_EXACT_CAP) -> ExactChain:
    beta = as_beta(params)
    if inst.n_states > cap:
        raise CapExceeded("exact transition matrix", inst.n_states, cap)
    states = enumerate_matchings(inst)
    index = {s: i for i, s in enumerate(states)}
    U = utility_vector(inst, states)
    N = len(states)
    m, n = inst.m, inst.n
    q = 1.0 / (m * n)
    P = np.zeros((N, N))
    for i, s in enumerate(states):
        for y in range(m):
            for z in range(n):
                prop = classify(s, y, z)
                if prop.kind is ProposalKind.STAY:
                    continue
                j = index[prop.candidate]
                P[i, j] += q * math.exp(min(0.0, beta * (U[j] - U[i])))
    if lazy:
        P *= 0.5
    P[np.diag_indices(N)] = 0.0
    P[np.diag_indices(N)] = 1.0 - P.sum(axis=1)
    return ExactChain(inst, beta, lazy, states, U, P, gibbs_weights(U, beta))


def verify_detailed_balance(chain: ExactChain) -> float:
    W = chain.flows()
    return float(np.abs(W - W.T).max())


def stationary_residual(chain: ExactChain, v: np.ndarray | None = None) -> float:
    v = chain.pi if v is None else v
    return float(np.abs(v @ chain.P - v).max())


def is_irreducible(chain: ExactChain) -> bool:
    from scipy.sparse.csgraph import connected_components
    n_comp, _ = connected_components(chain.P > 0, directed=True, connection="strong")
    return n_comp == 1


def is_aperiodic(chain: ExactChain) -> bool:
    """Period of an irreducible chain via BFS levels of the support digraph."""
    A = chain.P > 0
    N = chain.n_states
    level = np.full(N, -1)
    level[0] = 0
    frontier = [0]
    g = 0
    while frontier:
        nxt = []
        for i in frontier:
            for j in np.nonzero(A[i])[0]:
                if level[j] < 0:
                    level[j] = level[i] + 1
                    nxt.append(j)
        frontier = nxt
    if (level < 0).any():
        return False
    for i, j in zip(*np.nonzero(A)):
        g = math.gcd(g, int(level[i] + 1 - level[j]))
    return g == 1


def stationary_distribution(chain: ExactChain, tol: float = 1e-13,
                            max_iter: int = 1_000_000) -> np.ndarray:
    """Left fixed vector of P by power iteration from uniform."""
    N = chain.n_states
    v = np.full(N, 1.0 / N)
    for _ in range(max_iter):
        w = v @ chain.P
        w /= w.sum()
        if np.abs(w - v).max() < tol:
            return w
        v = w
    raise NoConvergence(f"power iteration did not reach {tol} in {max_iter} steps")


def _tv(Pt: np.ndarray, pi: np.ndarray) -> float:
    return float(0.5 * np.abs(Pt - pi).sum(axis=1).max())


def _check_rows(Pt: np.ndarray, t: int) -> None:
    err = np.abs(Pt.sum(axis=1) - 1.0).max()
    if err > 1e-10:
        raise NoConvergence(f"row sums of P^{t} drifted by {err:.3e}")


def tv_distance_curve(chain: ExactChain, t_max: int) -> np.ndarray:
    """Worst-start total variation distance d(t) for t = 0..t_max."""
    Pt = np.eye(chain.n_states)
    out = [_tv(Pt, chain.pi)]
    for t in range(1, t_max + 1):
        Pt = Pt @ chain.P
        if t % 64 == 0:
            _check_rows(Pt, t)
        out.append(_tv(Pt, chain.pi))
    return np.array(out)


def mixing_curve(chain: ExactChain, eps: float, t_cap: int = 1_000_000) -> np.ndarray:
    """d(0), d(1), ... up to and including the first value <= eps."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    Pt = np.eye(chain.n_states)
    out = [_tv(Pt, chain.pi)]
    t = 0
    while out[-1] > eps:
        t += 1
        if t > t_cap:
            raise NoConvergence(f"d(t) still above {eps} after {t_cap} steps")
        Pt = Pt @ chain.P
        if t % 64 == 0:
            _check_rows(Pt, t)
        out.append(_tv(Pt, chain.pi))
    return np.array(out)


def mixing_time(chain: ExactChain, eps: float, t_cap: int = 1_000_000) -> int:
    return len(mixing_curve(chain, eps, t_cap)) - 1


def conductance_exhaustive(chain: ExactChain, cap: int = DEFAULT_CUT_CAP,
                           chunk: int = 1 << 15) -> tuple[float, list[int]]:
    """Minimum of Q(S, S^c) / pi(S) over all cuts with 0 < pi(S) <= 1/2.

    Subsets are scanned in blocks of bitmasks with matrix products. A single
    state chain has no admissible cut; it is reported as conductance 1.
    """
    N = chain.n_states
    if N > cap:
        raise CapExceeded("conductance subset scan", N, cap)
    pi = chain.pi
    W = chain.flows()
    best, best_mask = math.inf, 0
    bit = np.arange(N, dtype=np.int64)
    total = 1 << N
    for lo in range(1, total - 1, chunk):
        masks = np.arange(lo, min(lo + chunk, total - 1), dtype=np.int64)
        X = ((masks[:, None] >> bit) & 1).astype(float)
        piS = X @ pi
        Q = ((X @ W) * (1.0 - X)).sum(axis=1)
        ok = piS <= 0.5 + BOUND_TOL
        if not ok.any():
            continue
        ratio = np.where(ok, Q / np.where(ok, piS, 1.0), np.inf)
        k = int(ratio.argmin())
        if ratio[k] < best:
            best, best_mask = float(ratio[k]), int(masks[k])
    if best_mask == 0:
        return 1.0, []
    return best, [i for i in range(N) if best_mask >> i & 1]


def spectral_gap(chain: ExactChain) -> float:
    """1 - lambda_2 of the reversible chain, from the symmetrised matrix."""
    if chain.n_states < 2:
        return 1.0
    d = np.sqrt(chain.pi)
    A = d[:, None] * chain.P / d[None, :]
    ev = np.linalg.eigvalsh(0.5 * (A + A.T))
    return float(1.0 - ev[-2])


def theorem_phi_bound(m: int, n: int, alpha: float) -> float:
    return 1.0 / (4.0 * alpha**3 * m * n)


def theorem_tau_bound(m: int, n: int, alpha: float, beta_range: float, eps: float) -> float:
    # proof version: beta*(U_max - U_min) enters with a plus sign
    return 32.0 * m**2 * n**2 * alpha**6 * (beta_range + m * math.log(n) + math.log(1 / eps))


def conductance_tau_bound(phi: float, pi_min: float, eps: float) -> float:
    return 2.0 / phi**2 * (math.log(1 / pi_min) + math.log(1 / eps))


@dataclass
class DiagnosticsReport:
    phi: float
    phi_bound: float
    tau_eps: int
    tau_bound: float
    alpha: float
    congestion_max: int
    balance_residual: float
    stationary_residual: float
    lazy: bool
    beta: float
    m: int
    n: int
    n_states: int
    eps: float
    phi_bound_implemented: float = 0.0
    tau_bound_conductance: float = 0.0
    spectral_gap: float = 0.0
    congestion_load_ratio: float = 0.0
    congestion_load_ratio_implemented: float = 0.0
    argmin_cut: list[int] = field(default_factory=list)
    checks: dict[str, bool | None] = field(default_factory=dict)

    @property
    def failed(self) -> list[str]:
        return [k for k in ASSERTED_CHECKS if self.checks.get(k) is False]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DiagnosticsReport":
        return cls(**json.loads(text))


# the checks whose failure raises BoundViolated; the rest are informational
ASSERTED_CHECKS = (
    "conductance_bound",
    "congestion_count",
    "congestion_load_bound",
    "mixing_conductance",
    "mixing_theorem",
)


def diagnose(chain: ExactChain, eps: float, census: Census | None = None,
             cut_cap: int = DEFAULT_CUT_CAP) -> DiagnosticsReport:
    """Measure everything and evaluate every check without raising."""
    inst = chain.inst
    m, n, N = inst.m, inst.n, chain.n_states
    beta_range = chain.beta * inst.utility_range
    a = math.exp(beta_range)

    phi, cut = conductance_exhaustive(chain, cap=cut_cap)
    curve = mixing_curve(chain, eps)
    tau = len(curve) - 1
    gap = spectral_gap(chain)
    pi_min = float(chain.pi.min())

    if census is None:
        census = congestion_census(inst, chain.pi)
    W = chain.flows()
    b_stated = 2.0 * m * n * a**3
    b_impl = a**3 / chain.min_proposal_prob
    ratio_stated = ratio_impl = 0.0
    for (i, j), load in census.load.items():
        ratio_stated = max(ratio_stated, load / (b_stated * W[i, j]))
        ratio_impl = max(ratio_impl, load / (b_impl * W[i, j]))

    phi_bound = theorem_phi_bound(m, n, a)
    phi_impl = chain.min_proposal_prob / (2.0 * a**3)
    tau_thm = theorem_tau_bound(m, n, a, beta_range, eps)
    tau_cond = conductance_tau_bound(phi, pi_min, eps)

    checks: dict[str, bool | None] = {
        "stationary": stationary_residual(chain) <= 1e-12,
        "detailed_balance": verify_detailed_balance(chain) <= 1e-12,
        "conductance_bound": phi >= phi_bound - BOUND_TOL,
        "conductance_implemented": phi >= phi_impl - BOUND_TOL,
        "conductance_bound_half": phi >= 0.5 * phi_bound - BOUND_TOL,
        "congestion_count": census.max_congestion < N,
        "congestion_load_bound": ratio_stated <= 1.0 + BOUND_TOL,
        "congestion_load_implemented": ratio_impl <= 1.0 + BOUND_TOL,
        "tv_monotone": bool(np.all(np.diff(curve) <= BOUND_TOL)),
        "cheeger": None,
        "mixing_conductance": None,
        "mixing_theorem": None,
    }
    if N >= 2:
        checks["cheeger"] = (phi**2 / 2 <= gap + 1e-9) and (gap <= 2 * phi + 1e-9)
    if chain.lazy:
        checks["mixing_conductance"] = tau <= tau_cond
        checks["mixing_theorem"] = tau <= tau_thm
    checks = {k: None if v is None else bool(v) for k, v in checks.items()}

    return DiagnosticsReport(
        phi=phi, phi_bound=phi_bound, tau_eps=tau, tau_bound=tau_thm, alpha=a,
        congestion_max=census.max_congestion,
        balance_residual=verify_detailed_balance(chain),
        stationary_residual=stationary_residual(chain),
        lazy=chain.lazy, beta=chain.beta, m=m, n=n, n_states=N, eps=eps,
        phi_bound_implemented=phi_impl, tau_bound_conductance=tau_cond,
        spectral_gap=gap, congestion_load_ratio=float(ratio_stated),
        congestion_load_ratio_implemented=float(ratio_impl),
        argmin_cut=cut, checks=checks,
    )


def verify_bounds(chain: ExactChain, eps: float, census: Census | None = None,
                  cut_cap: int = DEFAULT_CUT_CAP) -> DiagnosticsReport:
    """Like :func:`diagnose` but raise :class:`BoundViolated` on failure.

    The mixing-time checks only apply to lazy chains; for a non-lazy chain
    they are left as ``None`` and not asserted.
    """
    report = diagnose(chain, eps, census, cut_cap)
    if report.failed:
        raise BoundViolated(report.failed, report)
    return report
