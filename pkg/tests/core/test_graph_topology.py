import itertools

import numpy as np
import pytest
from pydantic import ValidationError

from core.graph_topology import (
    Topology,
    TopologySchedule,
    laplacian,
    leader_reachable,
    spanning_tree_exists,
    unreachable_nodes,
)
from core.verify_suite import (
    REFERENCE_EDGES,
    REFERENCE_LAPLACIAN,
    brute_leader_reachable,
    brute_spanning_tree,
    check_graph_oracles,
)


def test_reference_laplacian(sec4_topology):
    L = laplacian(sec4_topology)
    np.testing.assert_array_equal(L, REFERENCE_LAPLACIAN)
    np.testing.assert_allclose(L.sum(axis=1), 0.0)


def test_reference_graph_reachability(sec4_topology):
    assert leader_reachable(sec4_topology)
    assert unreachable_nodes(sec4_topology) == []
    # arms 1, 3, 5, 7 hear nobody and arm 6 only hears 5
    assert not spanning_tree_exists(sec4_topology)


def test_neighbors_and_edges(sec4_topology):
    assert sec4_topology.neighbors(1) == [0, 2]
    assert sec4_topology.neighbors(5) == [4]
    assert sec4_topology.neighbors(0) == []
    assert sorted((s, r) for s, r, _ in sec4_topology.edges()) == sorted(REFERENCE_EDGES)


def test_unpinned_is_unreachable(sec4_topology):
    unpinned = Topology(adjacency=sec4_topology.adjacency, pinning=(0.0,) * 7)
    assert not leader_reachable(unpinned)
    assert unreachable_nodes(unpinned) == [1, 2, 3, 4, 5, 6, 7]


def test_fully_pinned_without_edges():
    topology = Topology.from_edges(4, [], [1, 1, 1, 1])
    assert leader_reachable(topology)


def test_broken_pinning_isolates_the_lower_cluster(sec4_topology):
    broken = Topology(adjacency=sec4_topology.adjacency, pinning=(1, 0, 1, 0, 0, 0, 0))
    assert not leader_reachable(broken)
    assert unreachable_nodes(broken) == [5, 6, 7]


def test_spanning_tree_cases():
    assert spanning_tree_exists(Topology.from_edges(3, [(1, 2, 1.0), (2, 3, 1.0)]))
    assert not spanning_tree_exists(Topology.from_edges(2, []))
    assert spanning_tree_exists(Topology.from_edges(1, []))
    ring = Topology.from_edges(4, [(1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 1, 1.0)])
    assert spanning_tree_exists(ring)
    # two roots feeding one node
    assert not spanning_tree_exists(Topology.from_edges(3, [(1, 3, 1.0), (2, 3, 1.0)]))


def test_weights_are_kept():
    topology = Topology.from_edges(2, [(1, 2, 0.5)], [2.0, 0.0])
    assert topology.adjacency_array[1, 0] == 0.5
    np.testing.assert_array_equal(laplacian(topology), [[0, 0], [-0.5, 0.5]])
    assert topology.pinning_array.tolist() == [2.0, 0.0]


@pytest.mark.parametrize("adjacency, pinning, message", [
    (((0.0, 1.0), (1.0, 0.0)), (0.0,), "pinning has 1 entries"),
    (((1.0, 0.0), (0.0, 0.0)), (0.0, 0.0), "self loops"),
    (((0.0, -1.0), (0.0, 0.0)), (0.0, 0.0), ">= 0"),
    (((0.0, 1.0),), (0.0,), "square"),
])
def test_topology_validation(adjacency, pinning, message):
    with pytest.raises(ValidationError, match=message):
        Topology(adjacency=adjacency, pinning=pinning)


def test_brute_force_agrees_on_small_graphs():
    for n in (1, 2, 3):
        slots = [(i, j) for i in range(n) for j in range(n) if i != j]
        for bits in itertools.product((0.0, 1.0), repeat=len(slots)):
            A = np.zeros((n, n))
            for (i, j), b in zip(slots, bits):
                A[i, j] = b
            adjacency = tuple(map(tuple, A))
            assert spanning_tree_exists(Topology(adjacency=adjacency, pinning=(0.0,) * n)) == brute_spanning_tree(A)
            for b in itertools.product((0.0, 1.0), repeat=n):
                topology = Topology(adjacency=adjacency, pinning=b)
                assert leader_reachable(topology) == brute_leader_reachable(A, np.array(b))


@pytest.mark.slow
def test_graph_oracles_exhaustive_four_nodes():
    result = check_graph_oracles(max_nodes=4, leader_max_nodes=4)
    assert result.passed, result.detail


class TestSchedule:
    @pytest.fixture
    def schedule(self, sec4_topology):
        mirror = Topology.from_edges(7, [(2, 1, 1.0), (4, 3, 1.0), (4, 5, 1.0), (7, 6, 1.0)],
                                     [0, 1, 0, 1, 0, 0, 1])
        return TopologySchedule(starts=(0.0, 2.0, 4.0), topologies=(sec4_topology, mirror, sec4_topology))

    def test_right_continuous_lookup(self, schedule, sec4_topology):
        assert schedule.segment_index(0.0) == 0
        assert schedule.segment_index(1.999) == 0
        assert schedule.segment_index(2.0) == 1
        assert schedule.segment_index(4.0) == 2
        assert schedule.segment_index(100.0) == 2
        assert schedule.at(4.5) == sec4_topology

    def test_before_first_start_uses_first_segment(self, schedule):
        assert schedule.segment_index(-1.0) == 0

    def test_reachability_per_segment(self, schedule):
        assert schedule.reachability() == [True, True, True]
        assert not schedule.is_static
        assert schedule.n == 7

    def test_constant(self, sec4_topology):
        schedule = TopologySchedule.constant(sec4_topology, t0=1.0)
        assert schedule.is_static
        assert schedule.at(0.0) == sec4_topology

    def test_rejects_unsorted_starts(self, sec4_topology):
        with pytest.raises(ValidationError, match="strictly increasing"):
            TopologySchedule(starts=(0.0, 0.0), topologies=(sec4_topology, sec4_topology))

    def test_rejects_mixed_sizes(self, sec4_topology):
        with pytest.raises(ValidationError, match="same node count"):
            TopologySchedule(starts=(0.0, 1.0), topologies=(sec4_topology, Topology.from_edges(2, [])))
