"""Gathering, mobility and sprawling scores over occupancy snapshots.

A cluster is a maximal connected set of occupied nodes. The scores are
rho = walkers / clusters, mu = mean distinct nodes visited per walker and
sigma = occupied nodes / clusters; all pure functions of a state snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

CSV_HEADER = "t,rho,mu,sigma,groups,clusters,max_group,max_cluster_walkers"


@dataclass(slots=True)
class Cluster:
    nodes: np.ndarray  # ascending node ids
    walkers: int


def find_clusters(occupancy: np.ndarray, graph) -> list[Cluster]:
    """Partition the occupied nodes into maximal connected clusters."""
    occupied = np.flatnonzero(occupancy > 0)
    if occupied.size == 0:
        return []
    n = graph.num_nodes
    mask = np.zeros(n, dtype=bool)
    mask[occupied] = True
    compress = np.full(n, -1, dtype=np.int64)
    compress[occupied] = np.arange(occupied.size)

    src = graph.link_src
    dst = graph.indices
    keep = mask[src] & mask[dst]
    sub = csr_matrix(
        (np.ones(int(keep.sum()), dtype=np.int8),
         (compress[src[keep]], compress[dst[keep]])),
        shape=(occupied.size, occupied.size),
    )
    n_clusters, labels = connected_components(sub, directed=False)
    walker_totals = np.bincount(labels, weights=occupancy[occupied], minlength=n_clusters)
    order = np.argsort(labels, kind="stable")
    bounds = np.cumsum(np.bincount(labels, minlength=n_clusters))[:-1]
    return [
        Cluster(nodes=np.sort(part), walkers=int(walker_totals[label]))
        for label, part in enumerate(np.split(occupied[order], bounds))
    ]


def gathering(clusters: list[Cluster], num_walkers: int) -> float:
    """rho: average walkers per cluster."""
    if num_walkers <= 0:
        raise ValueError("gathering is undefined without walkers")
    if not clusters:
        raise ValueError("gathering needs at least one cluster")
    return num_walkers / len(clusters)


def sprawling(clusters: list[Cluster]) -> float:
    """sigma: average occupied nodes per cluster."""
    if not clusters:
        raise ValueError("sprawling needs at least one cluster")
    occupied = sum(c.nodes.size for c in clusters)
    return occupied / len(clusters)


def mobility(visited) -> float:
    """mu: mean distinct nodes visited; accepts a tracker, counts, or sets."""
    counts = getattr(visited, "counts", None)
    if counts is None:
        if isinstance(visited, np.ndarray):
            counts = visited
        else:
            counts = np.array([len(s) for s in visited], dtype=np.int64)
    return float(np.mean(counts))


@dataclass(slots=True)
class MetricsRecord:
    t: int
    rho: float
    mu: float
    sigma: float
    groups: int
    clusters: int
    max_group: int
    max_cluster_walkers: int


def sample(state) -> MetricsRecord:
    """One metrics row from a simulation state."""
    clusters = find_clusters(state.occupancy, state.graph)
    num_walkers = state.num_walkers
    groups = int(np.count_nonzero(state.occupancy))
    return MetricsRecord(
        t=state.t,
        rho=gathering(clusters, num_walkers),
        mu=mobility(state.visited),
        sigma=sprawling(clusters),
        groups=groups,
        clusters=len(clusters),
        max_group=int(state.occupancy.max()),
        max_cluster_walkers=max(c.walkers for c in clusters),
    )


@dataclass(slots=True)
class MetricsSeries:
    """Recorded rows of one run, in time order."""

    num_walkers: int
    records: list[MetricsRecord] = field(default_factory=list)

    def append(self, record: MetricsRecord) -> None:
        if self.records and record.t <= self.records[-1].t:
            raise ValueError("records must advance in time")
        self.records.append(record)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def at(self, t: int) -> MetricsRecord:
        for r in self.records:
            if r.t == t:
                return r
        raise KeyError(f"no record at t={t}")

    @property
    def final(self) -> MetricsRecord:
        return self.records[-1]

    def to_csv(self, path: str, header_lines: list[str] | None = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in header_lines or []:
                fh.write(f"# {line}\n")
            fh.write(CSV_HEADER + "\n")
            for r in self.records:
                fh.write(
                    f"{r.t},{r.rho:.6g},{r.mu:.6g},{r.sigma:.6g},"
                    f"{r.groups},{r.clusters},{r.max_group},{r.max_cluster_walkers}\n"
                )

    @classmethod
    def from_csv(cls, path: str, num_walkers: int = 0) -> "MetricsSeries":
        series = cls(num_walkers=num_walkers)
        with open(path, "r", encoding="utf-8") as fh:
            rows = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
        if not rows or rows[0] != CSV_HEADER:
            raise ValueError(f"{path}: unexpected metrics CSV header")
        for row in rows[1:]:
            f = row.split(",")
            series.append(MetricsRecord(
                t=int(f[0]), rho=float(f[1]), mu=float(f[2]), sigma=float(f[3]),
                groups=int(f[4]), clusters=int(f[5]),
                max_group=int(f[6]), max_cluster_walkers=int(f[7]),
            ))
        return series
