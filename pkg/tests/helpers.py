"""Shared test utilities: independent oracles and state-construction harnesses."""

from __future__ import annotations

import numpy as np

from streetflock import engine
from streetflock.graph import DiscretizedGraph, RawStreetNetwork, discretize
from streetflock.visited import make_tracker


def brute_force_clusters(occupancy, graph) -> list[frozenset[int]]:
    """Exhaustive connected components of the occupied-node induced subgraph.

    Pure-Python BFS, independent of the production cluster path.
    """
    occupied = {int(v) for v in np.flatnonzero(occupancy > 0)}
    seen: set[int] = set()
    clusters: list[frozenset[int]] = []
    for start in sorted(occupied):
        if start in seen:
            continue
        frontier = [start]
        component = set()
        while frontier:
            v = frontier.pop()
            if v in component:
                continue
            component.add(v)
            for w in graph.neighbors(v).tolist():
                if w in occupied and w not in component:
                    frontier.append(w)
        seen |= component
        clusters.append(frozenset(component))
    return clusters


def make_state(graph: DiscretizedGraph, prev, curr, seed: int = 0) -> engine.SimState:
    """Build a consistent mid-run state from explicit (prev, curr) pairs.

    Flux and occupancy are derived from the moves; walkers with prev == curr
    count as t=0 sentinels and contribute no flux.
    """
    prev = np.asarray(prev, dtype=np.int64)
    curr = np.asarray(curr, dtype=np.int64)
    flux = np.zeros(graph.num_directed_links, dtype=np.int64)
    moved = False
    for p, c in zip(prev.tolist(), curr.tolist()):
        if p != c:
            flux[graph.edge_id(p, c)] += 1
            moved = True
    visited = make_tracker(curr.shape[0], graph.num_nodes)
    visited.add(prev)
    visited.add(curr)
    return engine.SimState(
        graph=graph,
        t=1 if moved else 0,
        prev=prev,
        curr=curr,
        occupancy=np.bincount(curr, minlength=graph.num_nodes),
        flux=flux,
        visited=visited,
        rng=np.random.default_rng(seed),
        seed=seed,
    )


def star_graph(leaves: int = 4) -> DiscretizedGraph:
    """Star with the hub at node 0 and leaves 1..leaves."""
    nodes = [(i, float(i), 0.0) for i in range(leaves + 1)]
    edges = [(0, i, 10.0) for i in range(1, leaves + 1)]
    return discretize(RawStreetNetwork(nodes, edges), delta=10.0)


def triangle_pendant_graph() -> DiscretizedGraph:
    """Non-bipartite 4-node graph: triangle 0-1-2 plus pendant 3 on node 0."""
    nodes = [(0, 0.0, 0.0), (1, 1.0, 0.0), (2, 0.5, 1.0), (3, -1.0, 0.0)]
    edges = [(0, 1, 10.0), (1, 2, 10.0), (2, 0, 10.0), (0, 3, 10.0)]
    return discretize(RawStreetNetwork(nodes, edges), delta=10.0)


def trajectory_mobility(trajectories: list[list[int]]) -> float:
    """Mobility recomputed from full trajectories (independent of the tracker)."""
    return float(np.mean([len(set(t)) for t in trajectories]))
