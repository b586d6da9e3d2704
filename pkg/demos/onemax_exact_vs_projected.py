"""Approximate versus exact nearest-better forests on OneMax.

Samples 2000 distinct 32-bit strings, builds the forest exactly and by
random-projection division, then compares the two edge by edge.

    python3 demos/onemax_exact_vs_projected.py
"""
import time

import numpy as np

from nbnet import (OneMax, TransitionModel, build_graph, identify_optima, required_projections,
                   sample_global)
from nbnet.transition import argmax_table

S = sample_global(OneMax(32), 2000, seed=0)
print(f"{len(S)} samples, fitness {S.fitness.min():.0f}..{S.fitness.max():.0f}")

t = time.perf_counter()
exact = build_graph(S, "cnbsi")
t_exact = time.perf_counter() - t

L = required_projections(len(S), 0.3)
t = time.perf_counter()
approx = build_graph(S, epsilon=0.3, seed=1)
t_approx = time.perf_counter() - t
print(f"exact search {t_exact:.2f}s, {L} projection rounds {t_approx:.2f}s")

# approximate edges can only be longer than the exact ones
longer = approx.nbd > exact.nbd
print(f"nodes with a longer edge than exact: {longer.mean():.2%}")
print(f"same parent: {np.mean(approx.parent == exact.parent):.2%}")

# the nearest better solution is also the most likely (1+1)-ES move
model = TransitionModel(1.0, S.D)
agree = np.mean(argmax_table(S.subset(np.arange(300)), model) == build_graph(S.subset(np.arange(300)), "cnbsi").parent)
print(f"argmax-transition agreement on 300 nodes: {agree:.2%}")

roots = exact.roots
print(f"roots: {len(roots)} (all share the top fitness {S.fitness[roots].max():.0f})")
top = identify_optima(exact, S.fitness.max() - 1, 2)
print(f"nodes within 1 of the best fitness and isolated by NBD >= 2: {len(top)}")
