"""Robustness certifier: examples, brute-force oracle equivalence, monotonicity."""

import itertools
import random

import pytest

from mwmsr import (
    CertifierScaleError,
    graph_from_edges,
    is_rs_robust_wrt,
    is_strongly_robust,
    max_independent_paths,
    z_set,
)

# -- Independent oracle: re-derives everything from scratch ----------------------


def oracle_paths(n, edges, j, i, l):
    out = {}
    for a, b in edges:
        out.setdefault(a, []).append(b)
    found = []

    def rec(path):
        if len(path) - 1 > l:
            return
        if path[-1] == i:
            found.append(tuple(path))
            return
        for w in out.get(path[-1], []):
            if w not in path:
                rec(path + [w])

    rec([j])
    return found


def oracle_has_r_independent(n, edges, i, sources, F, r, l, universe=None):
    universe = universe if universe is not None else set(range(1, n + 1))
    paths = []
    for j in sorted(sources):
        for p in oracle_paths(n, edges, j, i, l):
            if set(p) <= universe and not (set(p[1:-1]) & set(F)):
                paths.append(p)
    if r == 0:
        return True
    for combo in itertools.combinations(paths, r):
        node_sets = [set(p) - {i} for p in combo]
        if all(
            not (node_sets[a] & node_sets[b])
            for a in range(r)
            for b in range(a + 1, r)
        ):
            return True
    return False


def oracle_rs_robust(n, edges, r, s, l, F, universe=None):
    universe = sorted(universe if universe is not None else range(1, n + 1))
    uni = set(universe)

    def zcount(va):
        return {
            i
            for i in va
            if oracle_has_r_independent(n, edges, i, uni - va, F, r, l, uni)
        }

    nodes = list(universe)
    for size1 in range(1, len(nodes)):
        for v1 in itertools.combinations(nodes, size1):
            rest = [v for v in nodes if v not in v1]
            for size2 in range(1, len(rest) + 1):
                for v2 in itertools.combinations(rest, size2):
                    z1 = zcount(set(v1))
                    z2 = zcount(set(v2))
                    if z1 == set(v1) or z2 == set(v2):
                        continue
                    if len(z1) + len(z2) >= s:
                        continue
                    return False
    return True


def oracle_strongly_robust(n, edges, r, l, f):
    nodes = range(1, n + 1)
    for size in range(0, f + 1):
        for F in itertools.combinations(nodes, size):
            remaining = set(nodes) - set(F)
            if not remaining:
                continue
            if not oracle_rs_robust(n, edges, r, 1, l, set(), universe=remaining):
                return False
    return True


# -- Fixed examples ---------------------------------------------------------------


def k_n(n):
    return graph_from_edges(n, [(a, b) for a in range(1, n + 1) for b in range(1, n + 1) if a != b])


class TestMaxIndependentPaths:
    def test_k3_two_direct(self):
        assert max_independent_paths(k_n(3), 1, {2, 3}, set(), 1) == 2

    def test_shared_source_counts_once(self):
        g = graph_from_edges(3, [(2, 3), (3, 1), (2, 1)])
        assert max_independent_paths(g, 1, {2}, set(), 2) == 1

    def test_fault_interior_excluded(self):
        g = graph_from_edges(3, [(2, 3), (3, 1), (2, 1)])
        assert max_independent_paths(g, 1, {2}, {3}, 2) == 1
        # removing the direct edge leaves only the blocked relay route
        g2 = graph_from_edges(3, [(2, 3), (3, 1)])
        assert max_independent_paths(g2, 1, {2}, {3}, 2) == 0

    def test_source_may_be_fault_node(self):
        g = graph_from_edges(2, [(1, 2)])
        assert max_independent_paths(g, 2, {1}, {1}, 1) == 1

    def test_destination_not_a_source(self):
        with pytest.raises(ValueError):
            max_independent_paths(k_n(3), 1, {1, 2}, set(), 1)

    def test_monotone_in_fault_set_and_hops(self):
        rng = random.Random(3)
        for _ in range(30):
            n = rng.randint(3, 6)
            edges = [
                (a, b)
                for a in range(1, n + 1)
                for b in range(1, n + 1)
                if a != b and rng.random() < 0.45
            ]
            g = graph_from_edges(n, edges)
            i = rng.randint(1, n)
            sources = set(rng.sample([v for v in g.nodes() if v != i], k=min(3, n - 1)))
            F = set(rng.sample(range(1, n + 1), k=rng.randint(0, n - 1)))
            l = rng.randint(1, 3)
            base = max_independent_paths(g, i, sources, F, l)
            assert max_independent_paths(g, i, sources, F | {rng.randint(1, n)}, l) <= base
            assert max_independent_paths(g, i, sources, F, l + 1) >= base


class TestZSet:
    def test_k4_three_sources(self):
        assert z_set(k_n(4), {1}, set(), 3, 1) == {1}

    def test_whole_vertex_set_has_no_sources(self):
        assert z_set(k_n(4), {1, 2, 3, 4}, set(), 1, 1) == set()

    def test_fault_nodes_count_as_sources(self):
        assert z_set(k_n(4), {1, 2}, {3}, 2, 1) == {1, 2}

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            z_set(k_n(3), set(), set(), 1, 1)


class TestRsRobust:
    def test_single_edge_pair_conditions(self):
        # Node 2 sees node 1 from outside every set containing it, so the
        # lone witness candidate ({1},{2}) is rescued by conditions 2 and 3;
        # the hand oracle agrees the property holds.
        g = graph_from_edges(2, [(1, 2)])
        cert = is_rs_robust_wrt(g, 1, 1, 1, set())
        assert cert.holds
        assert oracle_rs_robust(2, [(1, 2)], 1, 1, 1, set())

    def test_isolated_pair_fails(self):
        g = graph_from_edges(2, [])
        cert = is_rs_robust_wrt(g, 1, 1, 1, set())
        assert not cert.holds
        assert cert.v1 == (1,) and cert.v2 == (2,)

    def test_k3_holds(self):
        assert is_rs_robust_wrt(k_n(3), 1, 1, 1, set()).holds

    def test_r_exceeding_indegree_fails(self):
        assert not is_rs_robust_wrt(k_n(3), 3, 1, 1, set()).holds

    def test_oracle_equivalence_small_graphs(self):
        rng = random.Random(17)
        for _ in range(40):
            n = rng.randint(2, 5)
            edges = [
                (a, b)
                for a in range(1, n + 1)
                for b in range(1, n + 1)
                if a != b and rng.random() < 0.5
            ]
            g = graph_from_edges(n, edges)
            r = rng.randint(1, 2)
            s = rng.randint(1, 2)
            l = rng.randint(1, 2)
            F = set(rng.sample(range(1, n + 1), k=rng.randint(0, 1)))
            got = is_rs_robust_wrt(g, r, s, l, F).holds
            want = oracle_rs_robust(n, edges, r, s, l, F)
            assert got == want, (n, sorted(edges), r, s, l, F)


class TestStronglyRobust:
    def test_k5_under_one_fault(self):
        assert is_strongly_robust(k_n(5), 2, 1, 1, "f-total").holds

    def test_directed_cycle_fails(self):
        g = graph_from_edges(3, [(1, 2), (2, 3), (3, 1)])
        assert not is_strongly_robust(g, 2, 2, 0, "f-total").holds

    def test_oracle_equivalence(self):
        rng = random.Random(23)
        for _ in range(15):
            n = rng.randint(3, 5)
            edges = [
                (a, b)
                for a in range(1, n + 1)
                for b in range(1, n + 1)
                if a != b and rng.random() < 0.55
            ]
            g = graph_from_edges(n, edges)
            r = rng.randint(1, 2)
            l = rng.randint(1, 2)
            f = rng.randint(0, 1)
            got = is_strongly_robust(g, r, l, f, "f-total").holds
            want = oracle_strongly_robust(n, edges, r, l, f)
            assert got == want, (n, sorted(edges), r, l, f)

    def test_monotone_in_hops(self):
        rng = random.Random(29)
        candidates = [k_n(5), k_n(6)]
        surrogate = [
            (1, 3), (1, 4), (2, 1), (2, 4), (2, 5), (2, 6), (3, 1), (3, 2), (3, 4),
            (3, 5), (4, 2), (4, 6), (5, 1), (5, 2), (5, 3), (5, 6), (6, 3), (6, 5),
        ]
        candidates.append(graph_from_edges(6, surrogate))
        for _ in range(15):
            n = rng.randint(5, 6)
            edges = [
                (a, b)
                for a in range(1, n + 1)
                for b in range(1, n + 1)
                if a != b and rng.random() < 0.75
            ]
            candidates.append(graph_from_edges(n, edges))
        checked = 0
        for g in candidates:
            if is_strongly_robust(g, 2, 1, 1, "f-total").holds:
                checked += 1
                assert is_strongly_robust(g, 2, 2, 1, "f-total").holds
        assert checked >= 3

    def test_f_local_degree_necessary_condition(self):
        # Certified (f+1)-strong robustness under the f-local model needs
        # one-hop in-degrees of at least 2f + 1.
        rng = random.Random(31)
        candidates = [k_n(5), k_n(6)]
        for _ in range(20):
            n = rng.randint(5, 6)
            edges = [
                (a, b)
                for a in range(1, n + 1)
                for b in range(1, n + 1)
                if a != b and rng.random() < 0.8
            ]
            candidates.append(graph_from_edges(n, edges))
        found = 0
        f = 1
        for g in candidates:
            if is_strongly_robust(g, f + 1, 1, f, "f-local").holds:
                found += 1
                min_indeg = min(len(g.in_adj[i]) for i in g.nodes())
                assert min_indeg >= 2 * f + 1
        assert found >= 2

    def test_f_local_stricter_than_f_total(self):
        rng = random.Random(37)
        for _ in range(20):
            n = rng.randint(4, 6)
            edges = [
                (a, b)
                for a in range(1, n + 1)
                for b in range(1, n + 1)
                if a != b and rng.random() < 0.55
            ]
            g = graph_from_edges(n, edges)
            if is_strongly_robust(g, 2, 2, 1, "f-local").holds:
                assert is_strongly_robust(g, 2, 2, 1, "f-total").holds

    def test_witness_is_deterministic_and_concrete(self):
        g = graph_from_edges(3, [(1, 2), (2, 3), (3, 1)])
        c1 = is_strongly_robust(g, 2, 1, 0, "f-total")
        c2 = is_strongly_robust(g, 2, 1, 0, "f-total")
        assert not c1.holds
        assert (c1.fault_set, c1.v1, c1.v2) == (c2.fault_set, c2.v1, c2.v2)
        assert c1.v1 and c1.v2 and not (set(c1.v1) & set(c1.v2))

    def test_scale_cap(self):
        g = graph_from_edges(16, [(1, 2)])
        with pytest.raises(CertifierScaleError):
            is_strongly_robust(g, 1, 1, 0, "f-total")
