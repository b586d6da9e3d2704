"""How W-Model layers change the count of isolated fit solutions.

Neutrality (mu) collapses bit blocks into votes, producing plateaus where
many solutions share the top fitness. Epistasis (upsilon) mixes bits inside
blocks. Counts use fitness within 90% of the best sampled value and NBD of at
least 20 (roots always qualify).

    python3 demos/wmodel_feature_sweep.py [N]
"""
import sys
import time

import numpy as np

from nbnet import WModel, WModelParams, build_graph, identify_optima, sample_local

N = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
center = np.random.default_rng(0).integers(0, 2, 120).astype(np.int8)

print(f"{'mu':>3} {'ups':>4} {'gamma':>5} {'K':>4} {'roots':>6} {'optima':>7} {'time':>6}")
for mu, ups, gamma, K in [(0, 0, 0, 120), (12, 0, 0, 120), (48, 0, 0, 120),
                          (0, 0, 0, 7), (0, 14, 0, 7), (0, 0, 3000, 30), (0, 0, 6000, 30)]:
    p = WModel(WModelParams(120, gamma, mu, ups))
    t = time.perf_counter()
    S = sample_local(p, center, K, N, seed=1)
    g = build_graph(S, epsilon=0.3, center=center)
    opt = identify_optima(g, 9, 20, normalize="ratio", scale=10)
    print(f"{mu:>3} {ups:>4} {gamma:>5} {K:>4} {len(g.roots):>6} {len(opt):>7} {time.perf_counter() - t:>5.1f}s")
