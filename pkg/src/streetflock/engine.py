"""Walker state and synchronous stepping under tactics and the collective baseline.

Every walker decision reads only time-t observables (occupancy, last-step
flux, its own previous node); all moves then commit simultaneously. A tactic
draws one criterion per walker per step and turns its candidate scores into
move probabilities through a logit rule with intensity beta; beta = math.inf
selects the argmax mode (uniform choice among criterion maximizers).

Reproducibility: one PCG64 stream per run. A tactic step consumes exactly two
uniforms per walker (criterion draw, then move draw) in walker-index order; a
baseline step consumes one uniform per occupied node in ascending node order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import metrics as metrics_mod
from .errors import ConfigError, ContractViolationError
from .graph import DiscretizedGraph
from .visited import make_tracker

CRITERIA = ("random", "propulsion", "attraction", "follow", "alignment")
ARGMAX = math.inf
BASELINE = "baseline"

_BEST_WEIGHTS = {"attraction": 0.1, "follow": 0.1, "alignment": 0.8}


@dataclass(frozen=True)
class TacticSpec:
    """Criterion weights plus choice intensity.

    ``alpha`` follows the order of ``CRITERIA``; ``beta`` is a non-negative
    real or ``ARGMAX`` (math.inf).
    """

    alpha: tuple[float, ...]
    beta: float = ARGMAX

    def __post_init__(self) -> None:
        if len(self.alpha) != len(CRITERIA):
            raise ConfigError(f"alpha must have {len(CRITERIA)} weights")
        if any(a < 0 for a in self.alpha):
            raise ConfigError(f"negative criterion weight in {self.alpha}")
        if abs(sum(self.alpha) - 1.0) > 1e-9:
            raise ConfigError(f"criterion weights must sum to 1, got {sum(self.alpha)!r}")
        if math.isnan(self.beta) or self.beta < 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")

    @property
    def is_argmax(self) -> bool:
        return math.isinf(self.beta)

    @classmethod
    def from_weights(cls, weights: dict[str, float], beta: float = ARGMAX) -> "TacticSpec":
        unknown = set(weights) - set(CRITERIA)
        if unknown:
            raise ConfigError(f"unknown criteria {sorted(unknown)}")
        return cls(tuple(float(weights.get(c, 0.0)) for c in CRITERIA), beta)

    @classmethod
    def strict(cls, criterion: str, beta: float = ARGMAX) -> "TacticSpec":
        if criterion not in CRITERIA:
            raise ConfigError(f"unknown criterion {criterion!r}")
        return cls.from_weights({criterion: 1.0}, beta)

    @classmethod
    def best(cls, beta: float = ARGMAX) -> "TacticSpec":
        """The best-performing mixture: follow 0.1, alignment 0.8, attraction 0.1."""
        return cls.from_weights(_BEST_WEIGHTS, beta)

    @classmethod
    def from_name(cls, name: str, beta: float = ARGMAX) -> "TacticSpec":
        if name == "best":
            return cls.best(beta)
        return cls.strict(name, beta)


@dataclass(eq=False)
class SimState:
    """Mutable per-run walker state; confined to one logical thread."""

    graph: DiscretizedGraph
    t: int
    prev: np.ndarray  # int64 (W,); equals curr at t=0 (sentinel)
    curr: np.ndarray  # int64 (W,)
    occupancy: np.ndarray  # int64 (N,)
    flux: np.ndarray  # int64 (2M,); walkers that crossed each directed link last step
    visited: object
    rng: np.random.Generator
    seed: int | None = None

    @property
    def num_walkers(self) -> int:
        return self.curr.shape[0]


def init(graph: DiscretizedGraph, num_walkers: int, seed: int,
         positions: np.ndarray | None = None) -> SimState:
    """Place walkers independently and uniformly at random (collisions allowed).

    ``positions`` overrides the random placement with explicit start nodes;
    the random stream is unaffected by the override being present or not
    beyond skipping the placement draw.
    """
    if num_walkers < 1:
        raise ConfigError(f"num_walkers must be >= 1, got {num_walkers}")
    rng = np.random.default_rng(seed)
    n = graph.num_nodes
    if positions is None:
        curr = rng.integers(0, n, size=num_walkers, dtype=np.int64)
    else:
        curr = np.asarray(positions, dtype=np.int64).copy()
        if curr.shape != (num_walkers,) or curr.min() < 0 or curr.max() >= n:
            raise ConfigError("positions must be valid node ids, one per walker")
    visited = make_tracker(num_walkers, n)
    visited.add(curr)
    return SimState(
        graph=graph,
        t=0,
        prev=curr.copy(),
        curr=curr,
        occupancy=np.bincount(curr, minlength=n),
        flux=np.zeros(graph.num_directed_links, dtype=np.int64),
        visited=visited,
        rng=rng,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# criteria and walking rules (scalar contract surface)

def criterion_value(kind: str, u: int, v: int, w: int, state: SimState) -> float:
    """Score of candidate w for a walker at v that came from u."""
    graph = state.graph
    neighbors = graph.neighbors(v)
    if w not in neighbors:
        raise ContractViolationError(f"{w} is not a neighbor of {v}")
    if kind == "random":
        return 1.0
    if kind == "propulsion":
        return 0.0 if w == u else 1.0
    if kind == "attraction":
        return float(state.occupancy[w])
    if kind == "follow":
        return float(state.flux[graph.edge_id(v, w)])
    if kind == "alignment":
        return float(state.flux[graph.edge_id(v, w)] - state.flux[graph.edge_id(w, v)])
    raise ConfigError(f"unknown criterion {kind!r}")


def _logit(values: np.ndarray, beta: float) -> np.ndarray:
    """Max-shifted softmax of beta*values; argmax mode is uniform over ties."""
    if math.isinf(beta):
        top = values == values.max()
        return top / top.sum()
    shifted = beta * values
    shifted -= shifted.max()
    p = np.exp(shifted)
    return p / p.sum()


def rule_probabilities(kind: str, u: int, v: int, state: SimState, beta: float) -> np.ndarray:
    """Move distribution over N(v) (adjacency order) for one criterion."""
    if math.isnan(beta) or beta < 0:
        raise ConfigError(f"beta must be >= 0, got {beta}")
    values = np.array(
        [criterion_value(kind, u, v, int(w), state) for w in state.graph.neighbors(v)]
    )
    return _logit(values, beta)


def tactic_probabilities(u: int, v: int, state: SimState, tactic: TacticSpec) -> np.ndarray:
    """Explicitly mixed move distribution: sum of alpha_C times each rule."""
    out = np.zeros(state.graph.neighbors(v).shape[0])
    for weight, kind in zip(tactic.alpha, CRITERIA):
        if weight > 0.0:
            out += weight * rule_probabilities(kind, u, v, state, tactic.beta)
    return out


# ---------------------------------------------------------------------------
# vectorized stepping

def _criterion_matrix(c: int, state: SimState, rows: np.ndarray, v: np.ndarray,
                      cand: np.ndarray, eids: np.ndarray, reids: np.ndarray) -> np.ndarray:
    if c == 0:  # random
        return np.ones(cand.shape)
    if c == 1:  # propulsion
        return (cand != state.prev[rows, None]).astype(np.float64)
    if c == 2:  # attraction
        return state.occupancy[cand].astype(np.float64)
    if c == 3:  # follow
        return state.flux[eids].astype(np.float64)
    return (state.flux[eids] - state.flux[reids]).astype(np.float64)  # alignment


def _select_slots(values: np.ndarray, deg: np.ndarray, beta: float, u: np.ndarray) -> np.ndarray:
    """Pick one valid slot per row; valid slots are the first deg entries."""
    width = values.shape[1]
    valid = np.arange(width)[None, :] < deg[:, None]
    if math.isinf(beta):
        masked = np.where(valid, values, -np.inf)
        ties = masked == masked.max(axis=1, keepdims=True)
        k = ties.sum(axis=1)
        pick = np.minimum((u * k).astype(np.int64), k - 1)
        ranks = np.cumsum(ties, axis=1)
        return np.argmax((ranks == (pick + 1)[:, None]) & ties, axis=1)
    logits = np.where(valid, beta * values, -np.inf)
    p = np.exp(logits - logits.max(axis=1, keepdims=True))
    p /= p.sum(axis=1, keepdims=True)
    slot = (np.cumsum(p, axis=1) < u[:, None]).sum(axis=1)
    return np.minimum(slot, deg - 1)


def choose_moves(state: SimState, tactic: TacticSpec) -> tuple[np.ndarray, np.ndarray]:
    """Sample every walker's next node from time-t observables, without committing.

    Returns (target nodes, directed link ids). Consumes two uniforms per
    walker: the criterion draw, then the move draw.
    """
    graph = state.graph
    pad_nodes, pad_eids, pad_reids = graph.padded()
    degrees = graph.degrees
    num = state.num_walkers
    u_crit = state.rng.random(num)
    u_move = state.rng.random(num)
    crit = np.searchsorted(np.cumsum(tactic.alpha), u_crit, side="right")
    np.clip(crit, 0, len(CRITERIA) - 1, out=crit)

    targets = np.empty(num, dtype=np.int64)
    eids = np.empty(num, dtype=np.int64)
    for c in range(len(CRITERIA)):
        rows = np.flatnonzero(crit == c)
        if rows.size == 0:
            continue
        v = state.curr[rows]
        cand = pad_nodes[v]
        ce = pad_eids[v]
        values = _criterion_matrix(c, state, rows, v, cand, ce, pad_reids[v])
        slot = _select_slots(values, degrees[v], tactic.beta, u_move[rows])
        take = np.arange(rows.size)
        targets[rows] = cand[take, slot]
        eids[rows] = ce[take, slot]
    return targets, eids


def _commit(state: SimState, targets: np.ndarray, eids: np.ndarray) -> None:
    graph = state.graph
    state.prev = state.curr
    state.curr = targets
    state.occupancy = np.bincount(targets, minlength=graph.num_nodes)
    state.flux = np.bincount(eids, minlength=graph.num_directed_links)
    state.visited.add(targets)
    state.t += 1


def step_tactic(state: SimState, tactic: TacticSpec) -> SimState:
    """Advance one synchronous step under a tactic; returns the same state."""
    targets, eids = choose_moves(state, tactic)
    _commit(state, targets, eids)
    return state


def step_baseline(state: SimState) -> SimState:
    """Collective-decision reference: each occupied node's walkers move together
    to one uniformly drawn neighbor."""
    graph = state.graph
    pad_nodes, pad_eids, _ = graph.padded()
    degrees = graph.degrees
    occupied = np.flatnonzero(state.occupancy > 0)
    u = state.rng.random(occupied.size)
    deg = degrees[occupied]
    slot = np.minimum((u * deg).astype(np.int64), deg - 1)
    node_target = np.zeros(graph.num_nodes, dtype=np.int64)
    node_eid = np.zeros(graph.num_nodes, dtype=np.int64)
    node_target[occupied] = pad_nodes[occupied, slot]
    node_eid[occupied] = pad_eids[occupied, slot]
    _commit(state, node_target[state.curr], node_eid[state.curr])
    return state


# ---------------------------------------------------------------------------
# full runs

@dataclass(slots=True)
class RunResult:
    series: metrics_mod.MetricsSeries
    snapshots: dict[int, np.ndarray]
    state: SimState


def _normalize_policy(policy) -> TacticSpec | str:
    if policy == BASELINE:
        return BASELINE
    if isinstance(policy, TacticSpec):
        return policy
    if isinstance(policy, str):
        return TacticSpec.from_name(policy)
    raise ConfigError(f"policy must be a TacticSpec, a tactic name, or {BASELINE!r}")


def run(
    graph: DiscretizedGraph,
    policy,
    num_walkers: int,
    steps: int,
    seed: int,
    schedule: dict[int, object] | None = None,
    metrics_stride: int = 1,
    snapshot_stride: int = 0,
    positions: np.ndarray | None = None,
) -> RunResult:
    """Run ``steps`` synchronous steps and record metrics.

    ``policy`` is a TacticSpec, a tactic name, or ``BASELINE``. ``schedule``
    maps a step index s in [1, steps] to an override policy used for the
    single transition that produces the state at time t=s. Metrics are
    recorded at t=0, every ``metrics_stride`` steps and at the final step;
    occupancy snapshots likewise when ``snapshot_stride`` > 0.
    """
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")
    if metrics_stride < 1:
        raise ConfigError(f"metrics_stride must be >= 1, got {metrics_stride}")
    policy = _normalize_policy(policy)
    plan: dict[int, TacticSpec | str] = {}
    for s, override in (schedule or {}).items():
        if not 1 <= s <= steps:
            raise ConfigError(f"schedule step {s} outside [1, {steps}]")
        plan[s] = _normalize_policy(override)

    state = init(graph, num_walkers, seed, positions=positions)
    series = metrics_mod.MetricsSeries(num_walkers=num_walkers)
    series.append(metrics_mod.sample(state))
    snapshots: dict[int, np.ndarray] = {}
    if snapshot_stride > 0:
        snapshots[0] = state.occupancy.copy()
    for s in range(1, steps + 1):
        active = plan.get(s, policy)
        if active == BASELINE:
            step_baseline(state)
        else:
            step_tactic(state, active)
        if s % metrics_stride == 0 or s == steps:
            series.append(metrics_mod.sample(state))
        if snapshot_stride > 0 and (s % snapshot_stride == 0 or s == steps):
            snapshots[s] = state.occupancy.copy()
    return RunResult(series=series, snapshots=snapshots, state=state)


def check_invariants(state: SimState) -> None:
    """Raise if conservation or adjacency contracts are broken (test hook)."""
    num = state.num_walkers
    if int(state.occupancy.sum()) != num:
        raise ContractViolationError("occupancy does not sum to walker count")
    flux_total = int(state.flux.sum())
    if state.t == 0:
        if flux_total != 0:
            raise ContractViolationError("flux must be zero at t=0")
    elif flux_total != num:
        raise ContractViolationError("flux does not sum to walker count")
    if state.t > 0:
        graph = state.graph
        pad_nodes, _, _ = graph.padded()
        ok = (pad_nodes[state.curr] == state.prev[:, None]) & (
            np.arange(graph.max_degree)[None, :] < graph.degrees[state.curr][:, None]
        )
        if not ok.any(axis=1).all():
            raise ContractViolationError("prev is not adjacent to curr")
