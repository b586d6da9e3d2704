"""Transition-probability model of a (1+1) evolution strategy.

With an isotropic Gaussian mutation of step size ``r`` the density of moving
from ``x`` to ``y`` is ``(2 pi r)^(-D/2) exp(-d(x, y)^2 / (2 r))``, and the
elitist selection keeps ``y`` only if it is strictly better. The most likely
transition from ``x`` is therefore its nearest strictly better solution, which
makes :func:`argmax_transition` an independent check of the nearest-better
builders. Densities are diagnostics only; they are not normalised over the
discrete search space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import BetaTable, NbnGraph, SampleSet, row_distances
from .errors import ConfigurationError

__all__ = [
    "TransitionModel",
    "log_mutation_prob",
    "mutation_prob",
    "selection_prob",
    "transition_scores",
    "argmax_transition",
    "argmax_table",
    "severed_network",
]


@dataclass(frozen=True)
class TransitionModel:
    r: float
    D: int

    def __post_init__(self):
        if not self.r > 0:
            raise ConfigurationError(f"step size r must be positive, got {self.r}")
        if self.D < 1:
            raise ConfigurationError("D must be positive")


def _pair_distance(samples: SampleSet, a: int, b) -> np.ndarray:
    b = np.atleast_1d(np.asarray(b, dtype=np.int64))
    va = np.broadcast_to(samples.values[a], (len(b), samples.D))
    return row_distances(samples.problem.metric, va, samples.values[b])


def log_mutation_prob(model: TransitionModel, d) -> np.ndarray | float:
    """Log density for distance(s) ``d``."""
    d = np.asarray(d, dtype=float)
    out = -0.5 * model.D * math.log(2 * math.pi * model.r) - d * d / (2 * model.r)
    return float(out) if out.ndim == 0 else out


def mutation_prob(model: TransitionModel, samples: SampleSet, a: int, b: int) -> float:
    """Mutation density between solutions ``a`` and ``b`` of ``samples``.

    Underflows to 0.0 for large ``D``; use :func:`log_mutation_prob` to rank.
    """
    return math.exp(log_mutation_prob(model, _pair_distance(samples, a, b)[0]))


def selection_prob(samples: SampleSet, a: int, b: int) -> int:
    """1 if ``a`` replaces ``b`` (strictly better), else 0."""
    return int(samples.fitness[a] > samples.fitness[b])


def transition_scores(model: TransitionModel, samples: SampleSet, x: int) -> np.ndarray:
    """Log transition score from ``x`` to every solution; ``-inf`` where selection rejects."""
    ids = np.arange(len(samples))
    logp = log_mutation_prob(model, _pair_distance(samples, x, ids))
    return np.where(samples.fitness > samples.fitness[x], logp, -np.inf)


def argmax_transition(x: int, samples: SampleSet, model: TransitionModel) -> Optional[int]:
    """Most likely transition target of ``x``; ``None`` if nothing is strictly better."""
    scores = transition_scores(model, samples, x)
    best = int(np.argmax(scores))  # first maximum is the lowest id
    if scores[best] == -np.inf:
        return None
    return best


def argmax_table(samples: SampleSet, model: TransitionModel) -> np.ndarray:
    """:func:`argmax_transition` for every solution, ``-1`` for none."""
    return np.array([(-1 if (p := argmax_transition(i, samples, model)) is None else p)
                     for i in range(len(samples))], dtype=np.int64)


def severed_network(graph: NbnGraph, r: float) -> BetaTable:
    """Drop edges longer than ``r``; the cut nodes become roots."""
    keep = graph.nbd <= r
    return BetaTable(np.where(keep, graph.parent, -1), np.where(keep, graph.nbd, np.inf),
                     graph.beta.key)
