"""Nearest-better construction.

* :func:`cnbsi` is the exact ``O(N^2 D)`` traversal.
* :func:`cnbsd` is one division round: split by a random unused variable,
  recurse, then resolve the best solutions of the subsets against each other.
* :func:`cnbsrp` repeats independent division rounds and min-merges them.

All builders break distance ties towards the lower parent id, so results are
independent of merge order and thread count.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .core import BetaTable, NbnGraph, SampleSet, Solution
from .errors import ConfigurationError, NbnError

log = logging.getLogger(__name__)

__all__ = [
    "ProjectionPlan",
    "cnbsi",
    "partition_by_domain",
    "cnbsd",
    "cnbsd_local",
    "merge_beta",
    "required_projections",
    "cnbsrp",
    "build_graph",
]

DEFAULT_N_MIN = 20


@dataclass
class ProjectionPlan:
    """Unused variable indices for one round, the leaf size and the round seed."""

    remaining_domains: np.ndarray
    n_min: int = DEFAULT_N_MIN
    seed: int = 0

    def __post_init__(self):
        self.remaining_domains = np.asarray(self.remaining_domains, dtype=np.int64)
        if self.n_min < 2:
            raise ConfigurationError("n_min must be at least 2")

    @classmethod
    def full(cls, D: int, n_min: int = DEFAULT_N_MIN, seed: int = 0) -> "ProjectionPlan":
        return cls(np.arange(D), n_min, seed)


@dataclass
class _Encoded:
    metric: int
    codes: np.ndarray
    packed: np.ndarray
    succ: np.ndarray
    pred: np.ndarray
    vmax: int


_DUMMY_I = np.zeros((1, 1), dtype=np.int32)
_DUMMY_U = np.zeros((1, 1), dtype=np.uint64)


def _encode(samples: SampleSet) -> _Encoded:
    cached = getattr(samples, "_encoded", None)
    if cached is not None:
        return cached
    codes = np.ascontiguousarray(samples.codes, dtype=np.int32)
    if samples.problem.metric == "hamming":
        bits = np.packbits(samples.values.astype(np.uint8), axis=1, bitorder="little")
        pad = (-bits.shape[1]) % 8
        if pad:
            bits = np.pad(bits, ((0, 0), (0, pad)))
        packed = np.ascontiguousarray(bits).view(np.uint64)
        enc = _Encoded(0, codes, packed, _DUMMY_I, _DUMMY_I, 1)
    else:
        from .core import predecessors

        succ = codes
        pred = np.ascontiguousarray(predecessors(samples.values))
        enc = _Encoded(1, codes, _DUMMY_U, succ, pred, samples.D)
    samples._encoded = enc
    return enc


def cnbsi(samples: SampleSet, ids=None, threads: int = 1) -> BetaTable:
    """Exact nearest-better table; ``ids`` restricts the search to a subset."""
    enc = _encode(samples)
    n = len(samples)
    table = BetaTable.empty(n, samples.fingerprint)
    if ids is None:
        members = np.arange(n, dtype=np.int64)
    else:
        members = np.unique(np.asarray(ids, dtype=np.int64))
    fit = samples.fitness
    # descending fitness, ascending id inside ties
    order = members[np.lexsort((members, -fit[members]))]
    threads = max(1, int(threads))
    if threads == 1 or len(order) < 1000:
        _kernels.cnbsi_sorted(order, 0, len(order), fit, table.parent, table.distance,
                              enc.metric, enc.packed, enc.succ, enc.pred)
        return table
    # work per position grows linearly; split into equal-work chunks
    m = len(order)
    cuts = [int(m * math.sqrt(i / threads)) for i in range(threads + 1)]
    cuts[-1] = m
    with ThreadPoolExecutor(threads) as pool:
        futures = [pool.submit(_kernels.cnbsi_sorted, order, cuts[i], cuts[i + 1], fit,
                               table.parent, table.distance, enc.metric, enc.packed,
                               enc.succ, enc.pred) for i in range(threads)]
        for fut in futures:
            fut.result()
    return table


def partition_by_domain(samples: SampleSet, ids, k: int) -> list[np.ndarray]:
    """Group ``ids`` by the value of variable ``k`` (ascending value order)."""
    ids = np.asarray(ids, dtype=np.int64)
    vals = samples.codes[ids, k]
    order = np.argsort(vals, kind="stable")
    ids, vals = ids[order], vals[order]
    cuts = np.flatnonzero(np.diff(vals)) + 1
    return np.split(ids, cuts)


def _run_round(samples, enc, ids, plan: ProjectionPlan, center_codes):
    n = len(samples)
    parent = np.full(n, -1, dtype=np.int64)
    dist = np.full(n, np.inf)
    level_max = np.zeros(len(plan.remaining_domains) + 2, dtype=np.int64)
    use_center = center_codes is not None
    center = center_codes if use_center else np.zeros(max(samples.D, 1), dtype=np.int32)
    roots = _kernels.cnbsd_round(enc.codes, enc.packed, enc.succ, enc.pred, enc.metric,
                                 samples.fitness, ids, plan.remaining_domains, plan.n_min,
                                 np.uint64(plan.seed), center, use_center, enc.vmax,
                                 parent, dist, level_max)
    return BetaTable(parent, dist, samples.fingerprint), roots, level_max


def _center_codes(samples: SampleSet, center) -> np.ndarray:
    values = center.values if isinstance(center, Solution) else np.asarray(center)
    values = np.asarray(values, dtype=samples.problem.value_dtype).reshape(1, -1)
    return np.ascontiguousarray(samples.problem.encode(values)[0], dtype=np.int32)


def cnbsd(samples: SampleSet, plan: ProjectionPlan, ids=None, *, center=None,
          stats: Optional[dict] = None) -> tuple[BetaTable, int]:
    """One division round over ``ids`` (default: all).

    Returns the table (entries outside ``ids`` stay roots) and the best id,
    ties going to the lower id. ``stats['level_max']`` receives the largest
    subset size seen at each recursion depth.
    """
    enc = _encode(samples)
    ids = np.arange(len(samples), dtype=np.int64) if ids is None else np.asarray(ids, dtype=np.int64)
    if len(ids) == 0:
        raise NbnError("cannot divide an empty set")
    cc = None if center is None else _center_codes(samples, center)
    table, roots, level_max = _run_round(samples, enc, ids, plan, cc)
    if stats is not None:
        stats["level_max"] = level_max
    return table, int(roots.min())


def cnbsd_local(samples: SampleSet, plan: ProjectionPlan, center, ids=None, *,
                stats: Optional[dict] = None) -> tuple[BetaTable, int]:
    """Division round that keeps re-splitting the subset sharing the centre's value."""
    return cnbsd(samples, plan, ids, center=center, stats=stats)


def merge_beta(accumulated: BetaTable, incoming: BetaTable) -> BetaTable:
    """Per node keep the shorter edge; equal lengths keep the lower parent id."""
    if len(accumulated) != len(incoming) or (
            accumulated.key and incoming.key and accumulated.key != incoming.key):
        raise NbnError("beta tables belong to different sample sets")
    da, di = accumulated.distance, incoming.distance
    pa, pi = accumulated.parent, incoming.parent
    take = (di < da) | ((di == da) & (pi >= 0) & ((pa < 0) | (pi < pa)))
    return BetaTable(np.where(take, pi, pa), np.where(take, di, da),
                     accumulated.key or incoming.key)


def required_projections(N: int, epsilon: float) -> int:
    """``ceil(ln N / epsilon^2) + 1`` rounds."""
    if not 0 < epsilon < 1:
        raise ConfigurationError(f"epsilon must lie in (0, 1), got {epsilon}")
    if N < 2:
        raise ConfigurationError("N must be at least 2")
    x = math.log(N) / epsilon ** 2
    # absorb float noise such as (1/sqrt(2))**2 != 0.5
    return math.ceil(x - 1e-9 * max(1.0, x)) + 1


def round_seeds(seed: int, L: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(L, dtype=np.uint64)


def cnbsrp(samples: SampleSet, L: Optional[int] = None, n_min: int = DEFAULT_N_MIN,
           seed: int = 0, *, epsilon: Optional[float] = None, threads: int = 1,
           center=None, stats: Optional[dict] = None) -> BetaTable:
    """Min-merge of ``L`` independent division rounds.

    ``L`` defaults to :func:`required_projections` for ``epsilon``. With a
    ``center`` every round uses the local re-splitting variant.
    """
    if L is None:
        if epsilon is None:
            raise ConfigurationError("give either L or epsilon")
        L = required_projections(max(len(samples), 2), epsilon)
    if L < 1:
        raise ConfigurationError("L must be at least 1")
    if n_min < 2:
        raise ConfigurationError("n_min must be at least 2")
    enc = _encode(samples)
    ids = np.arange(len(samples), dtype=np.int64)
    cc = None if center is None else _center_codes(samples, center)
    seeds = round_seeds(seed, L)
    full = np.arange(samples.D, dtype=np.int64)
    level_max = np.zeros(samples.D + 2, dtype=np.int64)

    def one(s):
        return _run_round(samples, enc, ids, ProjectionPlan(full, n_min, int(s)), cc)

    acc = BetaTable.empty(len(samples), samples.fingerprint)
    threads = max(1, int(threads))
    with ThreadPoolExecutor(threads) as pool:
        for start in range(0, L, threads):
            for table, _, lm in pool.map(one, seeds[start:start + threads]):
                acc = merge_beta(acc, table)
                np.maximum(level_max, lm, out=level_max)
    if stats is not None:
        stats["L"] = L
        stats["level_max"] = level_max
    log.debug("cnbsrp: N=%d L=%d n_min=%d", len(samples), L, n_min)
    return acc


def build_graph(samples: SampleSet, algo: str = "cnbsrp", *, L: Optional[int] = None,
                epsilon: Optional[float] = 0.3, n_min: int = DEFAULT_N_MIN, seed: int = 0,
                threads: int = 1, center=None) -> NbnGraph:
    if len(samples) < 2:
        raise NbnError("need at least two solutions")
    if algo == "cnbsi":
        beta = cnbsi(samples, threads=threads)
        meta = {"algo": "cnbsi"}
    elif algo == "cnbsrp":
        st = {}
        beta = cnbsrp(samples, L, n_min, seed, epsilon=None if L else epsilon,
                      threads=threads, center=center, stats=st)
        meta = {"algo": "cnbsrp", "L": st["L"], "n_min": n_min, "seed": seed,
                "local": center is not None}
    else:
        raise ConfigurationError(f"unknown algorithm {algo!r}")
    return NbnGraph(samples, beta, meta)
