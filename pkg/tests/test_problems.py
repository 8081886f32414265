import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcmatch.core import enumerate_matchings
from mcmatch.problems import (
    CnfSpec,
    GraphColouringSpec,
    JobSchedulingSpec,
    KnapsackSpec,
    ProblemFormatError,
    TableUtility,
    assignment_coverage_check,
    colouring_utility,
    knapsack_utility,
    load_problem,
    sat_utility,
    scheduling_utility,
)
from oracles import (
    colouring_optimum,
    knapsack_optimum,
    random_3cnf,
    sat_bruteforce,
    schedule_optimum,
)


def best_over_matchings(spec):
    inst = spec.instance()
    return max(inst.evaluate(s) for s in enumerate_matchings(inst))


# scheduling

def test_scheduling_single():
    spec = JobSchedulingSpec(((5.0,),))
    assert scheduling_utility(spec, (0,)) == -5


def test_scheduling_examples():
    spec = JobSchedulingSpec(((1.0, 10.0), (10.0, 1.0)))
    assert spec.instance().n == 4
    assert scheduling_utility(spec, (0, 2)) == -1  # job0 -> machine0, job1 -> machine1
    assert scheduling_utility(spec, (0, 1)) == -11  # both on machine 0
    assert best_over_matchings(spec) == -1 == schedule_optimum(spec.service)


def test_scheduling_range():
    spec = JobSchedulingSpec(((1.0, 2.0), (3.0, 4.0)))
    assert (spec.u_min, spec.u_max) == (-10.0, 0.0)
    assert all(spec.u_min <= spec.evaluate(s) <= 0 for s in enumerate_matchings(spec.instance()))


def test_scheduling_zero_service():
    spec = JobSchedulingSpec(((0.0, 0.0), (0.0, 0.0)))
    assert best_over_matchings(spec) == 0


# colouring

def test_colouring_single_vertex():
    spec = GraphColouringSpec(1, (), 1)
    assert colouring_utility(spec, (0,)) == 1.0


def test_colouring_path_graph():
    spec = GraphColouringSpec(2, ((0, 1),), 2)
    for s in enumerate_matchings(spec.instance()):
        split = s[0] // 2 != s[1] // 2
        assert colouring_utility(spec, s) == (1.0 if split else -1.0)


def test_colouring_triangle_two_colours():
    spec = GraphColouringSpec(3, ((0, 1), (1, 2), (0, 2)), 2, c=2.5)
    vals = {spec.evaluate(s) for s in enumerate_matchings(spec.instance())}
    assert len(enumerate_matchings(spec.instance())) == 120
    assert vals == {-2.5}
    assert colouring_optimum(3, spec.edges, 2, 2.5) == -2.5


def test_colouring_rejects_self_loop():
    with pytest.raises(ProblemFormatError):
        GraphColouringSpec(2, ((1, 1),), 2)


# knapsack

def test_knapsack_single():
    spec = KnapsackSpec((1.0,), (2.0,), ((3.0,),), 4.0)
    assert knapsack_utility(spec, (0,)) == 3.0


def test_knapsack_examples():
    spec = KnapsackSpec((3.0, 3.0), (4.0, 4.0), ((1.0, 1.0), (1.0, 1.0)), 5.0)
    assert knapsack_utility(spec, (0, 1)) == -5.0  # both in knapsack 0
    assert knapsack_utility(spec, (2, 3)) == -5.0
    assert knapsack_utility(spec, (0, 2)) == 2.0
    assert best_over_matchings(spec) == 2.0


def test_knapsack_kappa_must_dominate():
    with pytest.raises(ProblemFormatError):
        KnapsackSpec((1.0,), (2.0,), ((3.0,),), 3.0)


# cnf

def test_sat_single_literal():
    spec = CnfSpec.from_signed(1, [[1, 1, 1]])
    assert sat_utility(spec, (1,)) == 1.0
    assert sat_utility(spec, (0,)) == 0.0


def test_sat_two_clauses():
    spec = CnfSpec.from_signed(3, [[1, 2, 3], [-1, -2, -3]])
    m = 3

    def lift(bits):
        return tuple(i + m * b for i, b in enumerate(bits))

    assert sat_utility(spec, lift((1, 0, 0))) == 1.0
    assert sat_utility(spec, lift((1, 1, 1))) == 0.0


def test_sat_unsatisfiable_all_sign_patterns():
    clauses = [[s1 * 1, s2 * 2, s3 * 3] for s1, s2, s3 in itertools.product((1, -1), repeat=3)]
    spec = CnfSpec.from_signed(3, clauses)
    assert len(spec.clauses) == 8
    assert best_over_matchings(spec) == 0.0
    assert not sat_bruteforce(3, clauses)
    assert assignment_coverage_check(spec)


def test_coverage_small():
    assert assignment_coverage_check(CnfSpec.from_signed(1, [[1, 1, 1]]))
    spec = CnfSpec.from_signed(2, [[1, 2, 2]])
    assert spec.bits((2, 3)) == (1, 1)
    assert assignment_coverage_check(spec)


def test_coverage_limit():
    with pytest.raises(ValueError):
        assignment_coverage_check(CnfSpec(9, ()))


def test_cnf_rejects_bad_clauses():
    with pytest.raises(ProblemFormatError):
        CnfSpec.from_signed(2, [[1, 2]])
    with pytest.raises(ProblemFormatError):
        CnfSpec.from_signed(2, [[1, 2, 3]])
    with pytest.raises(ProblemFormatError):
        CnfSpec.from_signed(2, [[1, 0, 2]])


@pytest.mark.parametrize("seed", range(8))
def test_sat_matches_bruteforce_random(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 5))
    clauses = random_3cnf(rng, m, int(rng.integers(1, 10)))
    spec = CnfSpec.from_signed(m, clauses)
    assert (best_over_matchings(spec) == 1.0) == sat_bruteforce(m, clauses)


# block invariance and adapters against brute force

@settings(max_examples=50, deadline=None)
@given(data=st.data())
def test_within_block_permutation_invariance(data):
    m = data.draw(st.integers(1, 3))
    K = data.draw(st.integers(1, 3))
    service = data.draw(st.lists(st.lists(st.integers(0, 9), min_size=K, max_size=K),
                                 min_size=m, max_size=m))
    spec = JobSchedulingSpec(tuple(tuple(map(float, r)) for r in service))
    s = data.draw(st.permutations(range(m * K)).map(lambda p: tuple(p[:m])))
    # relabel right vertices by a permutation within each block
    perm = {}
    for j in range(K):
        block = list(range(j * m, (j + 1) * m))
        for u, v in zip(block, data.draw(st.permutations(block))):
            perm[u] = v
    t = tuple(perm[u] for u in s)
    assert spec.evaluate(s) == spec.evaluate(t)
    assert spec.machines(s) == spec.machines(t)


@pytest.mark.parametrize("seed", range(6))
def test_adapters_argmax_random(seed):
    rng = np.random.default_rng(100 + seed)
    m, K = [(2, 2), (3, 2), (2, 3)][seed % 3]
    service = rng.integers(0, 10, size=(m, K)).astype(float)
    sched = JobSchedulingSpec(tuple(map(tuple, service)))
    assert best_over_matchings(sched) == schedule_optimum(sched.service)

    edges = tuple((i, j) for i in range(m) for j in range(i + 1, m) if rng.random() < 0.6)
    col = GraphColouringSpec(m, edges, K)
    assert best_over_matchings(col) == colouring_optimum(m, edges, K)

    vols = tuple(rng.integers(1, 5, size=m).astype(float))
    caps = tuple(rng.integers(2, 7, size=K).astype(float))
    rew = tuple(map(tuple, rng.integers(1, 6, size=(m, K)).astype(float)))
    kap = float(np.sum(rew)) + 1
    knap = KnapsackSpec(vols, caps, rew, kap)
    assert best_over_matchings(knap) == knapsack_optimum(vols, caps, rew, kap)


# JSON

@pytest.mark.parametrize("kind,data", [
    ("scheduling", {"jobs": 2, "machines": 2, "service": [[1, 10], [10, 1]]}),
    ("colouring", {"edges": [[0, 1], [1, 2]], "colors": 2, "c": 1}),
    ("knapsack", {"volumes": [3, 3], "capacities": [4, 4], "rewards": [[1, 1], [1, 1]], "kappa": 5}),
    ("cnf", {"vars": 3, "clauses": [[1, -2, 3], [-1, 2, -3]]}),
    ("table", {"m": 2, "n": 3, "values": [0, 1, 3, 2, 0, 1]}),
])
def test_json_roundtrip(kind, data):
    obj = load_problem(data, kind)
    again = load_problem(obj.to_json(), kind)
    assert again == obj
    inst_a, inst_b = obj.instance(), again.instance()
    assert [inst_a.evaluate(s) for s in enumerate_matchings(inst_a)] == \
           [inst_b.evaluate(s) for s in enumerate_matchings(inst_b)]


def test_coloring_alias_and_vertex_count():
    obj = load_problem({"edges": [[0, 1]], "colors": 2, "vertices": 4}, "coloring")
    assert obj.m == 4 and obj.instance().n == 8


@pytest.mark.parametrize("kind,data", [
    ("scheduling", {"jobs": 2, "machines": 2, "service": [[1, 10]]}),
    ("scheduling", {"jobs": 1, "machines": 1, "service": [[-1]]}),
    ("colouring", {"edges": [[0, 1]]}),
    ("knapsack", {"volumes": [1], "capacities": [1], "rewards": [[1]], "kappa": 0.5}),
    ("cnf", {"vars": 2, "clauses": [[1, 2]]}),
    ("table", {"m": 2, "n": 3, "values": [0, 1]}),
    ("table", {"m": 2, "n": 2, "entries": [{"assign": [0, 0], "utility": 1}], "default": 0}),
    ("nonsense", {}),
])
def test_malformed_inputs(kind, data):
    with pytest.raises(ValueError):
        load_problem(data, kind)


def test_table_default_fills_missing():
    t = TableUtility.from_json({"m": 2, "n": 3, "entries": [{"assign": [2, 0], "utility": 4}],
                                "default": -1})
    assert t.evaluate((2, 0)) == 4 and t.evaluate((0, 1)) == -1
    assert (t.u_min, t.u_max) == (-1, 4)
