"""
Weighted interaction digraphs between follower arms.

Convention: adjacency[i][j] = eps_ij > 0 means node i receives (reads) the state of
node j. A scenario edge "from j to i" therefore fills row i, column j, and the
Laplacian row i collects what node i listens to.
"""

import bisect
import logging
from typing import Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr, model_validator

from utils.model_utils import CachedArraysModel

logger = logging.getLogger(f"dcea.{__name__}")

LEADER_NODE = "leader"


class Topology(CachedArraysModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    adjacency: Tuple[Tuple[float, ...], ...]
    pinning: Tuple[float, ...]

    _A: np.ndarray = PrivateAttr()
    _b: np.ndarray = PrivateAttr()

    @model_validator(mode="after")
    def _check_weights(self) -> "Topology":
        n = len(self.adjacency)
        if any(len(row) != n for row in self.adjacency):
            raise ValueError("adjacency must be square")
        if len(self.pinning) != n:
            raise ValueError(f"pinning has {len(self.pinning)} entries for {n} nodes")
        A = np.asarray(self.adjacency, dtype=float).reshape(n, n)
        if np.any(A < 0) or any(b < 0 for b in self.pinning):
            raise ValueError("weights must be >= 0")
        if np.any(np.diag(A) != 0):
            raise ValueError("self loops are not allowed (eps_ii must be 0)")
        self._A = A
        self._b = np.asarray(self.pinning, dtype=float)
        return self

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int, float]],
                   pinning: Optional[Sequence[float]] = None) -> "Topology":
        """Edges are (source, receiver, weight) with 1-based node labels."""
        A = np.zeros((n, n))
        for source, receiver, weight in edges:
            A[receiver - 1, source - 1] = weight
        b = tuple(float(v) for v in (pinning if pinning is not None else [0.0] * n))
        return cls(adjacency=tuple(tuple(float(v) for v in row) for row in A), pinning=b)

    @property
    def n(self) -> int:
        return len(self.pinning)

    @property
    def adjacency_array(self) -> np.ndarray:
        return self._A

    @property
    def pinning_array(self) -> np.ndarray:
        return self._b

    def neighbors(self, i: int) -> List[int]:
        """0-based indices of the nodes that node i reads."""
        return [int(j) for j in np.flatnonzero(self._A[i] > 0)]

    def edges(self) -> List[Tuple[int, int, float]]:
        rows, cols = np.nonzero(self._A)
        return [(int(j) + 1, int(i) + 1, float(self._A[i, j])) for i, j in zip(rows, cols)]

    def to_digraph(self, with_leader: bool = False) -> nx.DiGraph:
        """Information-flow digraph: an arc j -> i for every eps_ij > 0."""
        G = nx.DiGraph()
        G.add_nodes_from(range(self.n))
        rows, cols = np.nonzero(self._A)
        G.add_edges_from(zip(cols.tolist(), rows.tolist()))
        if with_leader:
            G.add_node(LEADER_NODE)
            G.add_edges_from((LEADER_NODE, int(i)) for i in np.flatnonzero(self._b > 0))
        return G


def laplacian(topology: Topology) -> np.ndarray:
    A = topology.adjacency_array
    return np.diag(A.sum(axis=1)) - A


def leader_reachable(topology: Topology) -> bool:
    """Assumption A1: the leader has a directed path to every follower."""
    G = topology.to_digraph(with_leader=True)
    return len(nx.descendants(G, LEADER_NODE)) == topology.n


def spanning_tree_exists(topology: Topology) -> bool:
    G = topology.to_digraph()
    if topology.n == 0:
        return False
    # candidate roots are the nodes of the first strongly connected component in topological order
    condensed = nx.condensation(G)
    sources = [c for c in condensed.nodes if condensed.in_degree(c) == 0]
    if len(sources) != 1:
        return False
    root = next(iter(condensed.nodes[sources[0]]["members"]))
    return len(nx.descendants(G, root)) == topology.n - 1


def unreachable_nodes(topology: Topology) -> List[int]:
    """1-based labels of the followers the leader cannot reach."""
    G = topology.to_digraph(with_leader=True)
    reached = nx.descendants(G, LEADER_NODE)
    return [i + 1 for i in range(topology.n) if i not in reached]


class TopologySchedule(BaseModel):
    """Piecewise-constant topology; segment k is in force on [start_k, start_{k+1})."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    starts: Tuple[float, ...]
    topologies: Tuple[Topology, ...]

    @model_validator(mode="after")
    def _check_segments(self) -> "TopologySchedule":
        if not self.starts or len(self.starts) != len(self.topologies):
            raise ValueError("a schedule needs one start time per topology and at least one segment")
        if any(b <= a for a, b in zip(self.starts, self.starts[1:])):
            raise ValueError("segment start times must be strictly increasing")
        sizes = {t.n for t in self.topologies}
        if len(sizes) != 1:
            raise ValueError(f"all segments must have the same node count, got {sorted(sizes)}")
        return self

    @classmethod
    def constant(cls, topology: Topology, t0: float = 0.0) -> "TopologySchedule":
        return cls(starts=(t0,), topologies=(topology,))

    @property
    def n(self) -> int:
        return self.topologies[0].n

    def segment_index(self, t: float) -> int:
        return max(bisect.bisect_right(self.starts, t) - 1, 0)

    def at(self, t: float) -> Topology:
        return self.topologies[self.segment_index(t)]

    @property
    def is_static(self) -> bool:
        return len(self.topologies) == 1

    def reachability(self) -> List[bool]:
        return [leader_reachable(t) for t in self.topologies]
