"""Street-network substrates: raw edge lists, delta-discretization, synthetic graphs.

File formats (text, UTF-8, ``#`` starts a comment anywhere on a line):

Raw network::

    N <count>
    node <id> <x> <y>
    E <count>
    edge <u> <v> <length_m>

Discretized cache: a ``delta <value>`` line first, then the same shape with
dense 0..N-1 node ids and per-link slice lengths (Euclidean between endpoint
coordinates, informational only), then one provenance line per node::

    prov <node> <orig_edge_index> <position>

``orig_edge_index`` is -1 for surviving original intersections, in which case
``position`` holds the original node id; interior nodes carry the index of the
raw edge they subdivide and their 1-based position along it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import GraphParseError, GraphReferenceError

logger = logging.getLogger(__name__)

DEFAULT_DELTA = 10.0  # meters


@dataclass(slots=True)
class RawStreetNetwork:
    """Intersections with coordinates plus street segments with lengths.

    Undirected; parallel edges are allowed. Node ids are opaque integers.
    """

    nodes: list[tuple[int, float, float]]
    edges: list[tuple[int, int, float]]

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def validate(self) -> None:
        ids = set()
        for nid, _, _ in self.nodes:
            if nid in ids:
                raise ValueError(f"duplicate node id {nid}")
            ids.add(nid)
        for u, v, length in self.edges:
            if u not in ids or v not in ids:
                raise ValueError(f"edge ({u}, {v}) references an unknown node")
            if not length > 0.0:
                raise ValueError(f"edge ({u}, {v}) has non-positive length {length}")


@dataclass(eq=False)
class DiscretizedGraph:
    """Compact symmetric adjacency over delta-spaced nodes.

    ``indices`` holds each node's neighbors sorted ascending; the position of
    an entry in ``indices`` is the dense id of that directed link, so every
    undirected link owns two directed ids. Immutable after construction.
    """

    indptr: np.ndarray  # int64, shape (N+1,)
    indices: np.ndarray  # int32, shape (2M,), sorted within each node
    coords: np.ndarray  # float64, shape (N, 2)
    prov_edge: np.ndarray  # int64; -1 for original nodes
    prov_pos: np.ndarray  # int64; interior position, or original id when prov_edge == -1
    delta: float | None = None
    dropped_nodes: int = 0
    dropped_links: int = 0
    _rev: np.ndarray | None = field(default=None, repr=False)
    _pads: tuple[np.ndarray, np.ndarray, np.ndarray] | None = field(default=None, repr=False)
    _degrees: np.ndarray | None = field(default=None, repr=False)
    _link_src: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        for arr in (self.indptr, self.indices, self.coords, self.prov_edge, self.prov_pos):
            arr.setflags(write=False)

    @property
    def num_nodes(self) -> int:
        return self.indptr.shape[0] - 1

    @property
    def num_links(self) -> int:
        """Undirected link count M."""
        return self.indices.shape[0] // 2

    @property
    def num_directed_links(self) -> int:
        return self.indices.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        if self._degrees is None:
            self._degrees = np.diff(self.indptr)
            self._degrees.setflags(write=False)
        return self._degrees

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max())

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def edge_id(self, u: int, v: int) -> int:
        """Dense id of directed link u->v; KeyError if absent."""
        lo, hi = self.indptr[u], self.indptr[u + 1]
        pos = lo + np.searchsorted(self.indices[lo:hi], v)
        if pos >= hi or self.indices[pos] != v:
            raise KeyError(f"no link {u}->{v}")
        return int(pos)

    def link_endpoints(self, eid: int) -> tuple[int, int]:
        u = int(np.searchsorted(self.indptr, eid, side="right") - 1)
        return u, int(self.indices[eid])

    @property
    def link_src(self) -> np.ndarray:
        """Source node of each directed link id."""
        if self._link_src is None:
            self._link_src = np.repeat(
                np.arange(self.num_nodes, dtype=np.int32), self.degrees
            )
            self._link_src.setflags(write=False)
        return self._link_src

    @property
    def reverse_link_ids(self) -> np.ndarray:
        """For each directed link id e = (u->v), the id of (v->u)."""
        if self._rev is None:
            src = self.link_src
            # slots sorted by (dst, src) pair up elementwise with CSR (src, dst) order
            rev = np.lexsort((src, self.indices)).astype(np.int64)
            if not (
                np.array_equal(self.indices[rev], src)
                and np.array_equal(src[rev], self.indices)
            ):
                raise ValueError("adjacency is not symmetric")
            self._rev = rev
            self._rev.setflags(write=False)
        return self._rev

    def padded(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Degree-padded views used by the vectorized stepper.

        Returns (neighbors, link ids, reverse link ids), each shaped
        (N, max_degree) with the first deg(v) slots of row v valid and the
        rest zero-filled; validity is slot < deg(v).
        """
        if self._pads is None:
            deg = self.degrees
            n, width = self.num_nodes, self.max_degree
            row = self.link_src
            col = np.arange(self.num_directed_links) - self.indptr[row]
            pad_nodes = np.zeros((n, width), dtype=np.int32)
            pad_eids = np.zeros((n, width), dtype=np.int64)
            pad_reids = np.zeros((n, width), dtype=np.int64)
            pad_nodes[row, col] = self.indices
            pad_eids[row, col] = np.arange(self.num_directed_links)
            pad_reids[row, col] = self.reverse_link_ids
            for arr in (pad_nodes, pad_eids, pad_reids):
                arr.setflags(write=False)
            self._pads = (pad_nodes, pad_eids, pad_reids)
        return self._pads

    def equals(self, other: "DiscretizedGraph") -> bool:
        return (
            np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.coords, other.coords)
            and np.array_equal(self.prov_edge, other.prov_edge)
            and np.array_equal(self.prov_pos, other.prov_pos)
            and (self.delta == other.delta)
        )

    def validate(self) -> None:
        """Check structural invariants: symmetry, no loops, connectivity."""
        if self.num_nodes < 1 or self.num_directed_links < 2:
            raise ValueError("graph must have at least one link")
        src = self.link_src
        if np.any(src == self.indices):
            raise ValueError("self-loop present")
        if self.degrees.min() < 1:
            raise ValueError("isolated node present")
        _ = self.reverse_link_ids  # raises if asymmetric
        n_comp, _ = connected_components(self._to_sparse(), directed=False)
        if n_comp != 1:
            raise ValueError(f"graph has {n_comp} components, expected 1")

    def _to_sparse(self) -> csr_matrix:
        n = self.num_nodes
        data = np.ones(self.num_directed_links, dtype=np.int8)
        return csr_matrix((data, self.indices, self.indptr), shape=(n, n))


def _from_undirected_pairs(
    num_nodes: int,
    pair_u: np.ndarray,
    pair_v: np.ndarray,
    coords: np.ndarray,
    prov_edge: np.ndarray,
    prov_pos: np.ndarray,
    delta: float | None,
    dropped_nodes: int = 0,
    dropped_links: int = 0,
) -> DiscretizedGraph:
    """Canonical CSR construction; pairs must be loop-free and deduplicated."""
    src = np.concatenate([pair_u, pair_v])
    dst = np.concatenate([pair_v, pair_u])
    order = np.lexsort((dst, src))
    indices = dst[order].astype(np.int32)
    indptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=num_nodes), out=indptr[1:])
    return DiscretizedGraph(
        indptr=indptr,
        indices=indices,
        coords=np.asarray(coords, dtype=np.float64),
        prov_edge=np.asarray(prov_edge, dtype=np.int64),
        prov_pos=np.asarray(prov_pos, dtype=np.int64),
        delta=delta,
        dropped_nodes=dropped_nodes,
        dropped_links=dropped_links,
    )


# ---------------------------------------------------------------------------
# raw file parsing

def _meaningful_lines(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if text:
                yield line_no, text


def load_raw(path: str) -> RawStreetNetwork:
    """Parse a raw street-network file; duplicate node ids are rejected."""
    lines = _meaningful_lines(path)

    def next_line(expect: str):
        try:
            return next(lines)
        except StopIteration:
            raise GraphParseError(path, 0, f"unexpected end of file, expected {expect}") from None

    line_no, text = next_line("'N <count>'")
    parts = text.split()
    if len(parts) != 2 or parts[0] != "N":
        raise GraphParseError(path, line_no, f"expected 'N <count>', got {text!r}")
    try:
        n_nodes = int(parts[1])
    except ValueError:
        raise GraphParseError(path, line_no, f"bad node count {parts[1]!r}") from None

    nodes: list[tuple[int, float, float]] = []
    seen: set[int] = set()
    for _ in range(n_nodes):
        line_no, text = next_line("a 'node' line")
        parts = text.split()
        if len(parts) != 4 or parts[0] != "node":
            raise GraphParseError(path, line_no, f"expected 'node <id> <x> <y>', got {text!r}")
        try:
            nid, x, y = int(parts[1]), float(parts[2]), float(parts[3])
        except ValueError:
            raise GraphParseError(path, line_no, f"bad node fields in {text!r}") from None
        if nid in seen:
            raise GraphParseError(path, line_no, f"duplicate node id {nid}")
        seen.add(nid)
        nodes.append((nid, x, y))

    line_no, text = next_line("'E <count>'")
    parts = text.split()
    if len(parts) != 2 or parts[0] != "E":
        raise GraphParseError(path, line_no, f"expected 'E <count>', got {text!r}")
    try:
        n_edges = int(parts[1])
    except ValueError:
        raise GraphParseError(path, line_no, f"bad edge count {parts[1]!r}") from None

    edges: list[tuple[int, int, float]] = []
    for _ in range(n_edges):
        line_no, text = next_line("an 'edge' line")
        parts = text.split()
        if len(parts) != 4 or parts[0] != "edge":
            raise GraphParseError(path, line_no, f"expected 'edge <u> <v> <length>', got {text!r}")
        try:
            u, v, length = int(parts[1]), int(parts[2]), float(parts[3])
        except ValueError:
            raise GraphParseError(path, line_no, f"bad edge fields in {text!r}") from None
        if u not in seen:
            raise GraphReferenceError(path, line_no, f"edge endpoint {u} is not a declared node")
        if v not in seen:
            raise GraphReferenceError(path, line_no, f"edge endpoint {v} is not a declared node")
        if not length > 0.0:
            raise GraphParseError(path, line_no, f"edge length must be > 0, got {length}")
        edges.append((u, v, length))

    for line_no, text in lines:
        raise GraphParseError(path, line_no, f"trailing content {text!r}")
    return RawStreetNetwork(nodes=nodes, edges=edges)


# ---------------------------------------------------------------------------
# discretization

def num_pieces(length: float, delta: float) -> int:
    """k = ceil(L/delta); the epsilon absorbs float noise on exact multiples."""
    return max(1, math.ceil(length / delta - 1e-12))


def discretize(raw: RawStreetNetwork, delta: float = DEFAULT_DELTA) -> DiscretizedGraph:
    """Split every raw edge of length L into ceil(L/delta) links.

    Self-loops are dropped, parallel edges that both collapse to a single
    link are deduplicated, and only the largest connected component is kept;
    interior node coordinates interpolate linearly between the endpoints.
    """
    if delta <= 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    if raw.num_nodes == 0:
        raise ValueError("empty network")
    raw.validate()

    id_map = {nid: i for i, (nid, _, _) in enumerate(raw.nodes)}
    coords: list[tuple[float, float]] = [(x, y) for _, x, y in raw.nodes]
    prov_edge: list[int] = [-1] * raw.num_nodes
    prov_pos: list[int] = [nid for nid, _, _ in raw.nodes]

    pair_u: list[int] = []
    pair_v: list[int] = []
    seen_single: set[tuple[int, int]] = set()
    for e_index, (u_id, v_id, length) in enumerate(raw.edges):
        u, v = id_map[u_id], id_map[v_id]
        if u == v:
            continue  # a move must change node
        k = num_pieces(length, delta)
        if k == 1:
            key = (u, v) if u < v else (v, u)
            if key in seen_single:
                continue
            seen_single.add(key)
            pair_u.append(u)
            pair_v.append(v)
            continue
        x0, y0 = coords[u]
        x1, y1 = coords[v]
        chain = [u]
        for i in range(1, k):
            t = i / k
            coords.append((x0 + t * (x1 - x0), y0 + t * (y1 - y0)))
            prov_edge.append(e_index)
            prov_pos.append(i)
            chain.append(len(coords) - 1)
        chain.append(v)
        pair_u.extend(chain[:-1])
        pair_v.extend(chain[1:])

    if not pair_u:
        raise ValueError("network has no usable links (all components trivial)")

    total_nodes = len(coords)
    pu = np.asarray(pair_u, dtype=np.int64)
    pv = np.asarray(pair_v, dtype=np.int64)

    adj = csr_matrix(
        (np.ones(2 * pu.size, dtype=np.int8),
         (np.concatenate([pu, pv]), np.concatenate([pv, pu]))),
        shape=(total_nodes, total_nodes),
    )
    n_comp, labels = connected_components(adj, directed=False)
    keep_label = int(np.argmax(np.bincount(labels)))
    keep = labels == keep_label
    remap = np.full(total_nodes, -1, dtype=np.int64)
    remap[keep] = np.arange(int(keep.sum()))

    edge_keep = keep[pu]  # symmetric links: either endpoint decides
    dropped_nodes = int(total_nodes - keep.sum())
    dropped_links = int(pu.size - edge_keep.sum())
    if dropped_nodes or dropped_links:
        logger.info(
            "discretize: kept largest of %d components, dropped %d nodes and %d links",
            n_comp, dropped_nodes, dropped_links,
        )

    graph = _from_undirected_pairs(
        num_nodes=int(keep.sum()),
        pair_u=remap[pu[edge_keep]],
        pair_v=remap[pv[edge_keep]],
        coords=np.asarray(coords, dtype=np.float64)[keep],
        prov_edge=np.asarray(prov_edge, dtype=np.int64)[keep],
        prov_pos=np.asarray(prov_pos, dtype=np.int64)[keep],
        delta=float(delta),
        dropped_nodes=dropped_nodes,
        dropped_links=dropped_links,
    )
    return graph


# ---------------------------------------------------------------------------
# synthetic substrates

def make_line(n: int) -> DiscretizedGraph:
    """Path graph on n nodes."""
    if n < 2:
        raise ValueError(f"line needs n >= 2, got {n}")
    idx = np.arange(n - 1, dtype=np.int64)
    coords = np.column_stack([np.arange(n, dtype=np.float64), np.zeros(n)])
    return _from_undirected_pairs(
        n, idx, idx + 1, coords,
        prov_edge=np.full(n, -1), prov_pos=np.arange(n), delta=None,
    )


def make_cycle(n: int) -> DiscretizedGraph:
    if n < 3:
        raise ValueError(f"cycle needs n >= 3, got {n}")
    idx = np.arange(n, dtype=np.int64)
    angles = 2.0 * np.pi * idx / n
    coords = np.column_stack([np.cos(angles), np.sin(angles)])
    return _from_undirected_pairs(
        n, idx, (idx + 1) % n, coords,
        prov_edge=np.full(n, -1), prov_pos=idx.copy(), delta=None,
    )


def make_grid(w: int, h: int) -> DiscretizedGraph:
    """w*h four-neighbor lattice."""
    if w < 2 or h < 2:
        raise ValueError(f"grid needs w, h >= 2, got {w}x{h}")
    n = w * h
    ys, xs = np.divmod(np.arange(n, dtype=np.int64), w)
    horiz = np.flatnonzero(xs < w - 1)
    vert = np.flatnonzero(ys < h - 1)
    pair_u = np.concatenate([horiz, vert])
    pair_v = np.concatenate([horiz + 1, vert + w])
    coords = np.column_stack([xs.astype(np.float64), ys.astype(np.float64)])
    return _from_undirected_pairs(
        n, pair_u, pair_v, coords,
        prov_edge=np.full(n, -1), prov_pos=np.arange(n), delta=None,
    )


# ---------------------------------------------------------------------------
# discretized cache

def write_cache(graph: DiscretizedGraph, path: str) -> None:
    """Write a discretized graph in the cache text format (see module docs)."""
    src = graph.link_src
    fwd = src < graph.indices  # each undirected link once
    us, vs = src[fwd], graph.indices[fwd]
    slice_len = np.hypot(
        graph.coords[us, 0] - graph.coords[vs, 0],
        graph.coords[us, 1] - graph.coords[vs, 1],
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"delta {float(graph.delta or 0.0)!r}\n")
        fh.write(f"N {graph.num_nodes}\n")
        for i, (x, y) in enumerate(graph.coords.tolist()):
            fh.write(f"node {i} {x!r} {y!r}\n")
        fh.write(f"E {us.size}\n")
        for u, v, sl in zip(us.tolist(), vs.tolist(), slice_len.tolist()):
            fh.write(f"edge {u} {v} {sl!r}\n")
        for i in range(graph.num_nodes):
            fh.write(f"prov {i} {graph.prov_edge[i]} {graph.prov_pos[i]}\n")


def load_cache(path: str) -> DiscretizedGraph:
    """Load a cache file; the result is bit-identical to re-discretizing."""
    lines = _meaningful_lines(path)

    def next_line(expect: str):
        try:
            return next(lines)
        except StopIteration:
            raise GraphParseError(path, 0, f"unexpected end of file, expected {expect}") from None

    line_no, text = next_line("'delta <value>'")
    parts = text.split()
    if len(parts) != 2 or parts[0] != "delta":
        raise GraphParseError(path, line_no, f"expected 'delta <value>', got {text!r}")
    delta = float(parts[1])

    line_no, text = next_line("'N <count>'")
    parts = text.split()
    if len(parts) != 2 or parts[0] != "N":
        raise GraphParseError(path, line_no, f"expected 'N <count>', got {text!r}")
    n = int(parts[1])
    coords = np.empty((n, 2), dtype=np.float64)
    for i in range(n):
        line_no, text = next_line("a 'node' line")
        parts = text.split()
        if len(parts) != 4 or parts[0] != "node" or int(parts[1]) != i:
            raise GraphParseError(path, line_no, f"expected 'node {i} <x> <y>', got {text!r}")
        coords[i, 0] = float(parts[2])
        coords[i, 1] = float(parts[3])

    line_no, text = next_line("'E <count>'")
    parts = text.split()
    if len(parts) != 2 or parts[0] != "E":
        raise GraphParseError(path, line_no, f"expected 'E <count>', got {text!r}")
    m = int(parts[1])
    pair_u = np.empty(m, dtype=np.int64)
    pair_v = np.empty(m, dtype=np.int64)
    for i in range(m):
        line_no, text = next_line("an 'edge' line")
        parts = text.split()
        if len(parts) != 4 or parts[0] != "edge":
            raise GraphParseError(path, line_no, f"expected 'edge <u> <v> <length>', got {text!r}")
        u, v = int(parts[1]), int(parts[2])
        if not (0 <= u < n and 0 <= v < n):
            raise GraphReferenceError(path, line_no, f"edge endpoint out of range in {text!r}")
        pair_u[i] = u
        pair_v[i] = v

    prov_edge = np.empty(n, dtype=np.int64)
    prov_pos = np.empty(n, dtype=np.int64)
    for i in range(n):
        line_no, text = next_line("a 'prov' line")
        parts = text.split()
        if len(parts) != 4 or parts[0] != "prov" or int(parts[1]) != i:
            raise GraphParseError(path, line_no, f"expected 'prov {i} ...', got {text!r}")
        prov_edge[i] = int(parts[2])
        prov_pos[i] = int(parts[3])

    for line_no, text in lines:
        raise GraphParseError(path, line_no, f"trailing content {text!r}")
    return _from_undirected_pairs(
        n, pair_u, pair_v, coords, prov_edge, prov_pos,
        delta=delta if delta > 0 else None,
    )


def detect_format(path: str) -> str:
    """'cache' if the first meaningful line is a delta header, else 'raw'."""
    for _, text in _meaningful_lines(path):
        return "cache" if text.split()[0] == "delta" else "raw"
    raise GraphParseError(path, 0, "empty graph file")


def load_graph(path: str, delta: float = DEFAULT_DELTA) -> DiscretizedGraph:
    """Load either format, discretizing raw input with the given delta."""
    if detect_format(path) == "cache":
        return load_cache(path)
    return discretize(load_raw(path), delta)
