"""Global and local (radius-``K`` ball) sampling of sample sets.

Local binary sampling draws a flip count ``j`` and flips ``j`` distinct
random bits of the centre. ``strategy="uniform-j"`` draws ``j`` uniformly
from ``0..K``; ``strategy="ball"`` weights ``j`` by ``C(D, j)`` so the
samples are uniform over the ball.

Local tour sampling runs random 2-opt walks from the centre, rejecting any
move that would leave the ball, restarting from the centre for every sample.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .core import SampleSet, Solution, row_distances, unique_rows
from .errors import ConfigurationError

log = logging.getLogger(__name__)

MAX_RETRIES = 50

__all__ = ["SamplerConfig", "sample_global", "sample_local", "sample", "ball_size"]


@dataclass
class SamplerConfig:
    mode: str = "global"
    N: int = 1000
    center: Optional[np.ndarray] = None
    K: Optional[int] = None
    seed: int = 0
    strategy: str = "uniform-j"

    def __post_init__(self):
        if self.mode not in ("global", "local"):
            raise ConfigurationError(f"unknown sampling mode {self.mode!r}")
        if self.N < 2:
            raise ConfigurationError("N must be at least 2")
        if self.mode == "local":
            if self.center is None:
                raise ConfigurationError("local sampling needs a centre")
            if self.K is None or self.K < 1:
                raise ConfigurationError("local sampling needs K >= 1")


def sample(problem, config: SamplerConfig) -> SampleSet:
    if config.mode == "global":
        return sample_global(problem, config.N, config.seed)
    return sample_local(problem, config.center, config.K, config.N, config.seed,
                        strategy=config.strategy)


def _cap(N: int, space: int, what: str) -> int:
    if N > space:
        warnings.warn(f"requested {N} samples but the {what} holds only {space}; capping",
                      stacklevel=3)
        return int(space)
    return N


def _collect(problem, N: int, draw, extra=None) -> SampleSet:
    """Draw batches until ``N`` distinct solutions exist or retries run out."""
    parts = [] if extra is None else [extra]
    have = 0 if extra is None else 1
    attempts = 0
    values = None
    while have < N and attempts < MAX_RETRIES:
        need = N - have
        parts.append(draw(max(need + need // 8, 16)))
        values = np.concatenate(parts)
        canon = np.ascontiguousarray(problem.canonical(values))
        keep = unique_rows(canon)
        values = values[keep]
        parts = [values]
        have = len(values)
        attempts += 1
    if values is None:
        values = np.concatenate(parts)
    if have < N:
        warnings.warn(f"only {have} distinct solutions after {MAX_RETRIES} retries; capping",
                      stacklevel=3)
    return SampleSet(problem, values[:N], problem.evaluate_batch(values[:N]))


def sample_global(problem, N: int, seed: int = 0) -> SampleSet:
    """Uniform bit strings or uniform random tours, deduplicated."""
    if N < 2:
        raise ConfigurationError("N must be at least 2")
    N = _cap(N, problem.search_space_size, "search space")
    rng = np.random.default_rng(seed)
    D = problem.D
    if problem.metric == "hamming":
        def draw(m):
            return rng.integers(0, 2, size=(m, D), dtype=np.int8)
    else:
        base = np.arange(1, D + 1, dtype=np.int32)

        def draw(m):
            return rng.permuted(np.broadcast_to(base, (m, D)), axis=1)
    return _collect(problem, N, draw)


def ball_size(problem, K: int) -> int:
    """Number of solutions within distance ``K`` of any fixed centre (binary only)."""
    D = problem.D
    return sum(math.comb(D, j) for j in range(0, min(K, D) + 1))


def _flip_counts(rng, m, K, D, strategy):
    K = min(K, D)
    if strategy == "uniform-j":
        return rng.integers(0, K + 1, size=m)
    if strategy == "ball":
        j = np.arange(K + 1)
        logw = gammaln(D + 1) - gammaln(j + 1) - gammaln(D - j + 1)
        w = np.exp(logw - logw.max())
        return rng.choice(K + 1, size=m, p=w / w.sum())
    raise ConfigurationError(f"unknown local strategy {strategy!r}")


def sample_local(problem, center, K: int, N: int, seed: int = 0, *,
                 strategy: str = "uniform-j") -> SampleSet:
    """``N`` solutions within distance ``K`` of ``center``; the centre is always included.

    ``K`` counts flipped bits, or unshared edges for tours.
    """
    if N < 1:
        raise ConfigurationError("N must be positive")
    if K < 0:
        raise ConfigurationError("K must be non-negative")
    c = center.values if isinstance(center, Solution) else center
    c = np.asarray(c, dtype=problem.value_dtype).reshape(1, -1)
    problem.validate_batch(c)
    rng = np.random.default_rng(seed)
    D = problem.D
    if K == 0:
        return SampleSet(problem, c, problem.evaluate_batch(c))
    if problem.metric == "hamming":
        N = _cap(N, ball_size(problem, K), f"radius-{K} ball")

        def draw(m):
            j = _flip_counts(rng, m, K, D, strategy)
            ranks = np.argsort(rng.random((m, D)), axis=1).argsort(axis=1)
            flip = ranks < j[:, None]
            return np.where(flip, 1 - c, c).astype(np.int8)
    else:
        if strategy not in ("uniform-j", "ball"):
            raise ConfigurationError(f"unknown local strategy {strategy!r}")
        centre0 = (c[0] - 1).astype(np.int32)
        max_moves = max(1, math.ceil(K / 2))

        def draw(m):
            out = np.empty((m, D), dtype=np.int32)
            s = int(rng.integers(0, 2 ** 63, dtype=np.int64))
            _kernels.tsp_local_walks(centre0, int(K), m, max_moves, np.uint64(s), out)
            return out + 1
    ss = _collect(problem, N, draw, extra=c)
    d = row_distances(problem.metric, ss.values, np.broadcast_to(c, ss.values.shape))
    if np.any(d > K):
        raise AssertionError("local sample escaped its ball")  # generator bug guard
    return ss
