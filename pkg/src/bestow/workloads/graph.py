"""Shortest paths over a graph whose nodes are spread across actors.

Nodes are passive objects assigned round-robin to partition actors.  Edges
that cross partitions are bestowed references; the search runs inside the
partition owning the source and reads local nodes synchronously.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple, Union

from ..runtime import ActorRef, ActorSystem, BestowedRef, TransferPolicy

Graph = Dict[int, List[Tuple[int, int]]]  # node -> [(neighbour, weight)]


@dataclass
class GraphNode:
    id: int
    edges: List[Tuple[int, int]] = field(default_factory=list)  # (neighbour id, weight)


@dataclass
class Partition:
    index: int
    nodes: Dict[int, GraphNode] = field(default_factory=dict)


def random_graph(n: int, seed: int, *, extra_edges: int = 100, max_weight: int = 20) -> Graph:
    """A directed graph in which every node is reachable from node 0."""
    rng = random.Random(seed)
    graph: Graph = {v: [] for v in range(n)}
    order = list(range(1, n))
    rng.shuffle(order)
    reached = [0]
    for v in order:
        graph[rng.choice(reached)].append((v, rng.randint(0, max_weight)))
        reached.append(v)
    for _ in range(extra_edges):
        a, b = rng.randrange(n), rng.randrange(n)
        if a != b:
            graph[a].append((b, rng.randint(0, max_weight)))
    return graph


def sequential_dijkstra(graph: Graph, source: int) -> Dict[int, float]:
    dist: Dict[int, float] = {v: math.inf for v in graph}
    dist[source] = 0
    heap = [(0, source)]
    done: Set[int] = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in graph[u]:
            if d + w < dist[v]:
                dist[v] = d + w
                heapq.heappush(heap, (dist[v], v))
    return dist


class DistributedGraph:
    def __init__(
        self,
        system: ActorSystem,
        graph: Graph,
        partitions: int = 4,
        *,
        transferable: Optional[Iterable[int]] = None,
    ):
        """Spread ``graph`` over ``partitions`` actors.

        ``transferable`` names the nodes whose ownership may move (all of them
        when None); the rest are bestowed without transfer.
        """
        for edges in graph.values():
            for _, w in edges:
                if w < 0:
                    raise ValueError("edge weights must be non-negative")
        self.system = system
        movable = set(graph) if transferable is None else set(transferable)
        self.partitions: List[ActorRef] = [system.spawn(Partition(i), f"partition{i}") for i in range(partitions)]
        self.owner_of = {v: v % partitions for v in graph}
        self.refs: Dict[int, BestowedRef] = {}
        for i, part in enumerate(self.partitions):
            mine = [v for v in sorted(graph) if self.owner_of[v] == i]

            def build(st: Partition, mine=mine) -> Dict[int, BestowedRef]:
                out = {}
                for v in mine:
                    node = GraphNode(v, list(graph[v]))
                    st.nodes[v] = node
                    out[v] = system.bestow(node, transferable=v in movable)
                return out

            self.refs.update(part.send(build).get())

    def shortest_paths(self, source: int) -> Dict[int, float]:
        system = self.system
        refs = self.refs

        def edges_of(me: int, v: int) -> List[Tuple[int, int]]:
            ref = refs[v]
            owner = ref.cell.owner if ref.cell is not None else ref.owner_ref.id
            if owner == me:
                return list(system.local(ref).edges)
            # remote edge: delegated, or pulled over when the owner is idle and the policy allows it
            return system.send_bestowed(ref, lambda node: list(node.edges)).get()

        def search(_st: Partition) -> Dict[int, float]:
            me = system.current_actor().id
            dist: Dict[int, float] = {v: math.inf for v in refs}
            dist[source] = 0
            heap = [(0, source)]
            visited: Set[int] = set()
            while heap:
                d, src = heapq.heappop(heap)
                if src in visited:
                    continue
                visited.add(src)
                for n, w in edges_of(me, src):
                    if n in visited:
                        continue
                    if d + w < dist[n]:
                        dist[n] = d + w
                        heapq.heappush(heap, (dist[n], n))
            return dist

        return self.partitions[self.owner_of[source]].send(search).get()


def distributed_shortest_path(
    graph: Graph,
    source: int,
    *,
    partitions: int = 4,
    policy: Union[TransferPolicy, str] = TransferPolicy.NEVER,
    system: Optional[ActorSystem] = None,
    transferable: Optional[Iterable[int]] = None,
) -> Tuple[Dict[int, float], dict]:
    """Distances from ``source`` plus the runtime statistics of the run."""
    own = system is None
    system = system or ActorSystem(transfer_policy=policy)
    try:
        system.set_transfer_policy(policy)
        dg = DistributedGraph(system, graph, partitions, transferable=transferable)
        dist = dg.shortest_paths(source)
        return dist, system.run_until_quiescent().to_dict()
    finally:
        if own:
            system.shutdown()
