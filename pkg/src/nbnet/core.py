"""Domain types, distance metrics and the neighborhood predicate.

Two metrics are supported:

* ``hamming`` for bit strings, counted in flipped bits.
* ``edge`` for symmetric tours. ``dice_distance`` returns the Dice
  dissimilarity of the undirected edge sets in ``[0, 1]``; the builder and
  the analysis code work in *edge units*, ``D * dice``, which is the number
  of edges of one tour missing from the other.

Tours are 1-based permutations of the cities ``1..D`` listed in visiting
order.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DegenerateTourError, DimensionMismatchError, NbnError

__all__ = [
    "Solution",
    "VariableDomain",
    "SampleSet",
    "BetaTable",
    "NbnGraph",
    "hamming_distance",
    "edge_set",
    "dice_distance",
    "edge_distance",
    "distance",
    "neighborhood",
    "successors",
    "row_distances",
]


@dataclass(frozen=True)
class Solution:
    """One assignment vector. ``fitness`` follows the maximization convention."""

    values: np.ndarray
    fitness: float = float("nan")
    id: Optional[int] = None

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class VariableDomain:
    index: int
    values: frozenset

    def __post_init__(self):
        if not self.values:
            raise NbnError(f"domain {self.index} is empty")


def _as_array(x) -> np.ndarray:
    if isinstance(x, Solution):
        x = x.values
    return np.asarray(x)


def hamming_distance(a, b) -> int:
    """Number of positions where two bit strings differ."""
    a, b = _as_array(a), _as_array(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"length {a.size} vs {b.size}")
    return int(np.count_nonzero(a != b))


def edge_set(tour) -> set:
    """Undirected edges of the closed tour, each as a sorted city pair."""
    t = [int(c) for c in _as_array(tour)]
    if len(t) < 3:
        raise DegenerateTourError(f"a tour needs at least 3 cities, got {len(t)}")
    edges = set()
    for i, a in enumerate(t):
        b = t[(i + 1) % len(t)]
        edges.add((a, b) if a < b else (b, a))
    return edges


def dice_distance(a, b) -> float:
    """Dice dissimilarity ``1 - 2|M(a) & M(b)| / (|M(a)| + |M(b)|)``."""
    a, b = _as_array(a), _as_array(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"tour sizes {a.size} vs {b.size}")
    ma, mb = edge_set(a), edge_set(b)
    return 1.0 - 2.0 * len(ma & mb) / (len(ma) + len(mb))


def edge_distance(a, b) -> int:
    """Edges of ``a`` not shared with ``b``; equals ``D * dice_distance``."""
    a, b = _as_array(a), _as_array(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"tour sizes {a.size} vs {b.size}")
    ma = edge_set(a)
    return len(ma) - len(ma & edge_set(b))


def successors(tours: np.ndarray) -> np.ndarray:
    """Successor encoding: ``out[r, c-1]`` is the city visited after city ``c``.

    This is the variable-per-city representation used for division; the
    value set of variable ``c`` is every city except ``c`` itself.
    """
    tours = np.atleast_2d(np.asarray(tours))
    n, d = tours.shape
    out = np.empty((n, d), dtype=np.int32)
    rows = np.arange(n)[:, None]
    out[rows, tours - 1] = np.roll(tours, -1, axis=1)
    return out


def predecessors(tours: np.ndarray) -> np.ndarray:
    tours = np.atleast_2d(np.asarray(tours))
    n, d = tours.shape
    out = np.empty((n, d), dtype=np.int32)
    rows = np.arange(n)[:, None]
    out[rows, tours - 1] = np.roll(tours, 1, axis=1)
    return out


def row_distances(metric: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise distances between two equally shaped stacks of solutions."""
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"{a.shape} vs {b.shape}")
    if metric == "hamming":
        return np.count_nonzero(a != b, axis=1).astype(np.float64)
    sa = successors(a)
    sb, pb = successors(b), predecessors(b)
    shared = np.count_nonzero((sa == sb) | (sa == pb), axis=1)
    return (a.shape[1] - shared).astype(np.float64)


def distance(problem, a, b) -> float:
    """Distance in the problem's native units (bits, or edges for tours)."""
    if problem.metric == "hamming":
        return float(hamming_distance(a, b))
    return float(edge_distance(a, b))


class SampleSet:
    """Immutable, deduplicated, indexed collection of evaluated solutions.

    Build one with :meth:`from_values`; the constructor trusts its inputs.
    """

    def __init__(self, problem, values: np.ndarray, fitness: np.ndarray):
        values = np.ascontiguousarray(values, dtype=problem.value_dtype)
        fitness = np.ascontiguousarray(fitness, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != problem.D:
            raise DimensionMismatchError(
                f"expected rows of length {problem.D}, got shape {values.shape}")
        if len(fitness) != len(values):
            raise DimensionMismatchError("fitness and values differ in length")
        values.flags.writeable = False
        fitness.flags.writeable = False
        self.problem = problem
        self.values = values
        self.fitness = fitness
        self._index = None
        self._codes = None
        self._fingerprint = None
        self._encoded = None

    @classmethod
    def from_values(cls, problem, values, *, validate: bool = True) -> "SampleSet":
        """Validate, deduplicate (first occurrence wins) and evaluate."""
        values = np.asarray(values, dtype=problem.value_dtype)
        if values.ndim == 1:
            values = values.reshape(0 if values.size == 0 else 1, -1)
        if values.size == 0:
            values = values.reshape(0, problem.D)
        if validate:
            problem.validate_batch(values)
        keep = unique_rows(problem.canonical(values))
        values = values[keep]
        return cls(problem, values, problem.evaluate_batch(values))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i) -> Solution:
        i = int(i)
        return Solution(self.values[i], float(self.fitness[i]), i)

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def D(self) -> int:
        return self.problem.D

    def index_of(self, values) -> Optional[int]:
        """Id of the stored solution equivalent to ``values``, if any."""
        if self._index is None:
            canon = np.ascontiguousarray(self.problem.canonical(self.values))
            self._index = {row.tobytes(): i for i, row in enumerate(canon)}
        key = np.ascontiguousarray(
            self.problem.canonical(np.asarray(values, dtype=self.problem.value_dtype)[None, :]))
        return self._index.get(key[0].tobytes())

    def extend(self, values) -> tuple["SampleSet", np.ndarray]:
        """Union with extra solutions.

        Returns the new set and, for every input row, the id it maps to in it.
        Existing ids are preserved.
        """
        values = np.asarray(values, dtype=self.problem.value_dtype).reshape(-1, self.D)
        self.problem.validate_batch(values)
        both = np.concatenate([self.values, values])
        canon = np.ascontiguousarray(self.problem.canonical(both))
        keep, inverse = unique_rows(canon, return_inverse=True)
        merged = SampleSet(self.problem, both[keep],
                           np.concatenate([self.fitness, self.problem.evaluate_batch(both[keep[keep >= len(self)]])]))
        return merged, inverse[len(self):]

    @property
    def codes(self) -> np.ndarray:
        """Per-variable values used for division (successor form for tours)."""
        if self._codes is None:
            self._codes = self.problem.encode(self.values)
            self._codes.flags.writeable = False
        return self._codes

    @property
    def fingerprint(self) -> str:
        if self._fingerprint is None:
            h = hashlib.sha256(self.problem.fingerprint.encode())
            h.update(self.values.tobytes())
            self._fingerprint = h.hexdigest()
        return self._fingerprint

    def subset(self, ids) -> "SampleSet":
        ids = np.asarray(ids, dtype=np.int64)
        return SampleSet(self.problem, self.values[ids], self.fitness[ids])


def unique_rows(rows: np.ndarray, return_inverse: bool = False):
    """Indices of first occurrences of each distinct row, in input order."""
    rows = np.ascontiguousarray(rows)
    if len(rows) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return (empty, empty) if return_inverse else empty
    view = rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).ravel()
    _, first, inv = np.unique(view, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    keep = first[order]
    if not return_inverse:
        return keep
    # np.unique labels are sorted by key; relabel by first occurrence
    relabel = np.empty_like(order)
    relabel[order] = np.arange(len(order))
    return keep, relabel[inv.ravel()]


@dataclass
class BetaTable:
    """Nearest-better record per solution: parent id (-1 for none) and distance."""

    parent: np.ndarray
    distance: np.ndarray
    key: Optional[str] = None

    @classmethod
    def empty(cls, n: int, key: Optional[str] = None) -> "BetaTable":
        return cls(np.full(n, -1, dtype=np.int64), np.full(n, np.inf), key)

    def __len__(self):
        return len(self.parent)

    def copy(self) -> "BetaTable":
        return BetaTable(self.parent.copy(), self.distance.copy(), self.key)


@dataclass(frozen=True)
class NbnGraph:
    """Nearest-better forest over a sample set.

    ``nbd`` is the nearest-better distance with ``inf`` for roots.
    """

    samples: SampleSet
    beta: BetaTable
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.beta) != len(self.samples):
            raise DimensionMismatchError("beta table does not match the sample set")

    def __len__(self):
        return len(self.samples)

    @property
    def parent(self) -> np.ndarray:
        return self.beta.parent

    @property
    def nbd(self) -> np.ndarray:
        return self.beta.distance

    @property
    def fitness(self) -> np.ndarray:
        return self.samples.fitness

    @property
    def roots(self) -> np.ndarray:
        return np.flatnonzero(self.beta.parent < 0)

    @property
    def edges(self) -> np.ndarray:
        child = np.flatnonzero(self.beta.parent >= 0)
        return np.stack([child, self.beta.parent[child]], axis=1)

    def check(self) -> None:
        """Raise if any forest invariant is violated."""
        check_forest(self.samples, self.beta)


def check_forest(samples: SampleSet, beta: BetaTable) -> None:
    parent, dist = beta.parent, beta.distance
    n = len(samples)
    if len(parent) != n:
        raise NbnError("beta table size mismatch")
    child = np.flatnonzero(parent >= 0)
    if np.any(parent >= n):
        raise NbnError("parent id out of range")
    if np.any(np.isfinite(dist[parent < 0])):
        raise NbnError("root with a finite distance")
    f = samples.fitness
    bad = child[f[parent[child]] <= f[child]]
    if len(bad):
        raise NbnError(f"edge not strictly fitness-improving at node {bad[0]}")
    true = row_distances(samples.problem.metric, samples.values[child],
                         samples.values[parent[child]])
    wrong = child[true != dist[child]]
    if len(wrong):
        raise NbnError(f"stored distance differs from the metric at node {wrong[0]}")
    # strict improvement already rules out cycles; walk anyway as a guard
    cur = np.arange(n)
    for _ in range(n + 1):
        nxt = np.where(parent[cur] >= 0, parent[cur], cur)
        if np.array_equal(nxt, cur):
            return
        cur = nxt
    raise NbnError("cycle detected")


def neighborhood(x, samples: SampleSet, r: float) -> set:
    """Ids ``y`` with ``distance(x, y) < r``, excluding ``x`` itself."""
    if isinstance(x, Solution) and x.id is not None:
        self_id = x.id
    else:
        self_id = samples.index_of(_as_array(x))
    xs = np.broadcast_to(_as_array(x), samples.values.shape)
    d = row_distances(samples.problem.metric, samples.values, xs)
    ids = set(np.flatnonzero(d < r).tolist())
    ids.discard(self_id)
    return ids


def as_ids(ids: Iterable[int] | Sequence[int]) -> np.ndarray:
    return np.unique(np.asarray(list(ids), dtype=np.int64))
