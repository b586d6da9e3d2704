"""Landscape metrics over a built nearest-better forest.

Following parent links from any node gives its evolutionary path, ending at a
root. The path distance is the longest hop along it, read as the largest jump
a search must make to climb from the start to the summit. Optima are nodes
that are both fit and isolated (large NBD); deceptive candidates are isolated
nodes close to the global optimum.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union

import numpy as np

from .core import NbnGraph, SampleSet, row_distances
from .errors import ConfigurationError, DimensionMismatchError, NbnError

__all__ = [
    "EvolutionaryPath",
    "evolutionary_path",
    "path_distance",
    "root_of",
    "path_maxima",
    "set_distance",
    "OptimaReport",
    "normalized_fitness",
    "identify_optima",
    "deception_filter",
    "mean_fitness_delta",
]


@dataclass(frozen=True)
class EvolutionaryPath:
    """Node ids from a start solution to its summit and the hop lengths between them.

    ``jump`` marks a final hop from a lower root to the best root; that hop
    is not a nearest-better link.
    """

    nodes: tuple
    edge_distances: tuple
    jump: bool = False

    def __len__(self):
        return len(self.nodes)


def evolutionary_path(graph: NbnGraph, x: int) -> EvolutionaryPath:
    parent, nbd = graph.parent, graph.nbd
    x = int(x)
    if not 0 <= x < len(graph):
        raise NbnError(f"node {x} is not in the graph")
    nodes, hops = [x], []
    while parent[x] >= 0:
        hops.append(float(nbd[x]))
        x = int(parent[x])
        nodes.append(x)
        if len(nodes) > len(graph):
            raise NbnError("cycle in nearest-better links")
    return EvolutionaryPath(tuple(nodes), tuple(hops))


def path_distance(path: EvolutionaryPath) -> float:
    """Largest hop; 0 for a single-node path."""
    return max(path.edge_distances, default=0.0)


def _pointer_jump(graph: NbnGraph):
    parent = graph.parent
    anc = parent.copy()
    hop = np.where(parent >= 0, graph.nbd, 0.0)
    top = np.flatnonzero(anc < 0)
    anc[top] = top
    # each round doubles the covered path length
    while True:
        nxt = anc[anc]
        hop = np.maximum(hop, hop[anc])
        if np.array_equal(nxt, anc):
            return anc, hop
        anc = nxt


def root_of(graph: NbnGraph) -> np.ndarray:
    """Root id reached from every node."""
    return _pointer_jump(graph)[0]


def path_maxima(graph: NbnGraph) -> np.ndarray:
    """Path distance of every node's own evolutionary path."""
    return _pointer_jump(graph)[1]


def _top_roots(graph: NbnGraph) -> np.ndarray:
    roots = graph.roots
    f = graph.fitness[roots]
    return roots[f == f.max()]


def set_distance(graph: NbnGraph, T: Iterable[int]) -> tuple[float, EvolutionaryPath]:
    """Smallest path distance from any member of ``T`` to the best root.

    Paths that end at a lower root are extended by a jump to the nearest
    best-fitness root. Ties go to the lower start id.
    """
    T = np.unique(np.fromiter((int(t) for t in T), dtype=np.int64))
    if len(T) == 0:
        raise NbnError("empty solution set")
    if T[0] < 0 or T[-1] >= len(graph):
        raise NbnError("solution id out of range")
    roots, pmax = _pointer_jump(graph)
    tops = _top_roots(graph)
    samples = graph.samples
    metric = samples.problem.metric
    # jump lengths from every lower root involved to its nearest top root
    ends = np.unique(roots[T])
    target = {}
    for r in ends:
        if graph.fitness[r] == graph.fitness[tops[0]]:
            target[int(r)] = (int(r), 0.0)
            continue
        d = row_distances(metric, samples.values[tops],
                          np.broadcast_to(samples.values[r], (len(tops), samples.D)))
        k = int(np.argmin(d))
        target[int(r)] = (int(tops[k]), float(d[k]))
    total = np.array([max(pmax[t], target[int(roots[t])][1]) for t in T])
    best = int(T[int(np.argmin(total))])
    path = evolutionary_path(graph, best)
    goal, jump = target[path.nodes[-1]]
    if goal != path.nodes[-1]:
        path = EvolutionaryPath(path.nodes + (goal,), path.edge_distances + (jump,), True)
    return float(total.min()), path


@dataclass(frozen=True)
class OptimaReport:
    optima_ids: np.ndarray
    theta: float
    vartheta: float
    global_optimum_id: int
    normalize: Optional[str] = None
    extra: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.optima_ids)


Normalizer = Union[None, str, Callable[[np.ndarray], np.ndarray]]


def normalized_fitness(samples: SampleSet, normalize: Normalizer = None,
                       reference: Optional[float] = None, scale: float = 1.0) -> np.ndarray:
    """Fitness on the scale the threshold ``theta`` is expressed in.

    ``"ratio"`` divides by the reference (default: best fitness in the set)
    and multiplies by ``scale``. For negated tour lengths that is
    ``best length / length``, 1 at the best.
    """
    f = samples.fitness
    if normalize is None:
        return f
    if callable(normalize):
        return np.asarray(normalize(f), dtype=float)
    if normalize != "ratio":
        raise ConfigurationError(f"unknown normalisation {normalize!r}")
    ref = float(f.max()) if reference is None else float(reference)
    if ref == 0:
        raise ConfigurationError("ratio normalisation needs a non-zero reference")
    if ref < 0:
        if np.any(f >= 0):
            raise ConfigurationError("mixed-sign fitness cannot use a length ratio")
        return scale * ref / f
    return scale * f / ref


def identify_optima(graph: NbnGraph, theta: float, vartheta: float, *,
                    normalize: Normalizer = None,
                    reference: Optional[float] = None, scale: float = 1.0) -> OptimaReport:
    """Nodes with fitness at least ``theta`` and NBD at least ``vartheta`` (roots always pass the NBD test)."""
    f = normalized_fitness(graph.samples, normalize, reference, scale)
    mask = (f >= theta) & (graph.nbd >= vartheta)
    label = normalize if isinstance(normalize, str) or normalize is None else "custom"
    return OptimaReport(np.flatnonzero(mask), float(theta), float(vartheta),
                        int(np.argmax(graph.fitness)), label)


def deception_filter(graph: NbnGraph, o: int, nbd_min: float = 10, dist_max: float = 17) -> set:
    """Isolated nodes near ``o``: NBD at least ``nbd_min`` and distance to ``o`` at most ``dist_max``.

    ``o`` itself is excluded.
    """
    samples = graph.samples
    cand = np.flatnonzero(graph.nbd >= nbd_min)
    cand = cand[cand != o]
    if len(cand) == 0:
        return set()
    d = row_distances(samples.problem.metric, samples.values[cand],
                      np.broadcast_to(samples.values[o], (len(cand), samples.D)))
    return set(cand[d <= dist_max].tolist())


def mean_fitness_delta(S_o: SampleSet, S_n: SampleSet) -> float:
    """Mean fitness of ``S_o`` minus mean fitness of ``S_n``; both must have the same size."""
    if len(S_o) != len(S_n):
        raise DimensionMismatchError(
            f"sample sets differ in size ({len(S_o)} vs {len(S_n)})")
    if len(S_o) == 0:
        raise NbnError("empty sample sets")
    return float(S_o.fitness.mean() - S_n.fitness.mean())
