"""Extract a city street network from OpenStreetMap and export it as an edge list.

The export format is the simulator's raw graph text format::

    N <count>
    node <id> <x> <y>
    E <count>
    edge <u> <v> <length_m>

Extraction flags (documented rather than guessed): OSMnx
``graph_from_place(place, network_type="drive")`` with every other setting
left at its default (simplification on, no intersection consolidation), then
collapsed to an undirected graph. osmnx is an optional dependency imported
only inside :func:`extract`.
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx


@dataclass(slots=True)
class CityRequest:
    place: str
    output_path: str

    def __post_init__(self) -> None:
        if not self.place.strip():
            raise ValueError("place must be non-empty")


def _geometry_signature(data: dict) -> object:
    """Identical signatures mark geometrically identical parallel edges.

    Coordinate sequences are canonicalized so a street and its reciprocal
    twin (reversed geometry) compare equal; edges without a geometry are
    straight lines between their endpoints and therefore all identical.
    """
    geometry = data.get("geometry")
    if geometry is not None:
        try:
            points = tuple((round(x, 7), round(y, 7)) for x, y in geometry.coords)
            return min(points, points[::-1])
        except (AttributeError, TypeError):
            pass
    return "straight"


def collapse_to_undirected(graph: nx.Graph) -> list[tuple[int, int, float]]:
    """One undirected edge per street.

    Reciprocal directed twins and geometrically identical parallels collapse
    to a single edge keeping the minimum length; parallels with distinct
    geometry survive as true parallel streets.
    """
    grouped: dict[tuple[int, int], dict[object, float]] = {}
    if graph.is_multigraph():
        edge_iter = ((u, v, d) for u, v, _k, d in graph.edges(keys=True, data=True))
    else:
        edge_iter = graph.edges(data=True)
    for u, v, data in edge_iter:
        if u == v:
            continue
        pair = (u, v) if u <= v else (v, u)
        length = float(data["length"])
        signature = _geometry_signature(data)
        bucket = grouped.setdefault(pair, {})
        bucket[signature] = min(length, bucket.get(signature, length))
    edges = []
    for (u, v), bucket in sorted(grouped.items()):
        for length in sorted(bucket.values()):
            edges.append((u, v, length))
    return edges


def export_graph(graph: nx.Graph, path: str) -> tuple[int, int]:
    """Write the simulator's raw format; returns (node count, edge count).

    Nodes need ``x``/``y`` attributes and edges a positive ``length``.
    """
    edges = collapse_to_undirected(graph)
    used: set[int] = set()
    for u, v, _ in edges:
        used.add(u)
        used.add(v)
    nodes = sorted(used)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"N {len(nodes)}\n")
        for node in nodes:
            data = graph.nodes[node]
            fh.write(f"node {node} {float(data['x'])!r} {float(data['y'])!r}\n")
        fh.write(f"E {len(edges)}\n")
        for u, v, length in edges:
            fh.write(f"edge {u} {v} {length!r}\n")
    return len(nodes), len(edges)


def extract(request: CityRequest) -> tuple[int, int]:
    """Download the street network of a place and export it.

    Requires the optional osmnx dependency and network access.
    """
    try:
        import osmnx as ox
    except ImportError as exc:
        raise RuntimeError(
            "osmnx is required for live extraction; install streetflock-tools[osm]"
        ) from exc

    graph = ox.graph_from_place(request.place, network_type="drive")
    n, m = export_graph(graph, request.output_path)
    mean_degree = 2 * m / n if n else 0.0
    lengths = [length for _, _, length in collapse_to_undirected(graph)]
    mean_length = sum(lengths) / len(lengths) if lengths else 0.0
    print(f"place: {request.place}")
    print(f"nodes = {n}")
    print(f"links = {m}")
    print(f"mean degree = {mean_degree:.3g}")
    print(f"mean street length = {mean_length:.4g} m")
    print(f"wrote {request.output_path}")
    return n, m
