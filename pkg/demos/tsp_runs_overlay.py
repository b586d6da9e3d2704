"""Overlaying optimizer runs on a TSP landscape and exporting the result.

A random uniform Euclidean instance is sampled around a 2-opt local optimum.
Ten first-improvement 2-opt runs are written as a trajectory file, merged into
the sample set, and each run's distance to the best sampled tour is reported.
CSV and DOT exports land in the output directory.

    python3 demos/tsp_runs_overlay.py [outdir]
"""
import sys
from pathlib import Path

import numpy as np

from nbnet import (build_graph, deception_filter, export_graph, generate_rue, identify_optima,
                   ingest_trajectories, layout_2d, sample_local, set_distance)

out = Path(sys.argv[1] if len(sys.argv) > 1 else "tsp_demo_out")
out.mkdir(exist_ok=True)
rng = np.random.default_rng(0)
p = generate_rue(60, 7)


def two_opt(tour, rng, max_moves=200):
    """First-improvement 2-opt from ``tour``, returning every accepted tour."""
    t = tour.copy()
    trace = [t.copy()]
    for _ in range(max_moves):
        improved = False
        for i, j in rng.permutation([(i, j) for i in range(1, 59) for j in range(i + 1, 60)]):
            cand = t.copy()
            cand[i:j + 1] = cand[i:j + 1][::-1]
            if p.evaluate(cand) > p.evaluate(t):
                t = cand
                trace.append(t.copy())
                improved = True
                break
        if not improved:
            break
    return trace


center = two_opt(rng.permutation(60) + 1, rng)[-1]
S = sample_local(p, center, 20, 5000, seed=1)
print(f"sampled {len(S)} tours within 20 unshared edges of a 2-opt optimum ({-p.evaluate(center):.0f})")

lines = []
for run in range(10):
    start = S.values[rng.integers(len(S))]
    for it, tour in enumerate(two_opt(start, rng, max_moves=30)):
        lines.append(f"{run} {it} " + " ".join(map(str, tour)) + f" | {p.evaluate(tour)}")
traj = out / "runs.txt"
traj.write_text("\n".join(lines) + "\n")

ov = ingest_trajectories(traj, p, base=S)
print(f"{len(ov.samples) - len(S)} new tours from {len(ov.records)} trajectory records")
g = build_graph(ov.samples, epsilon=0.3, seed=0, center=center)

opt = identify_optima(g, 9.9, 8, normalize="ratio", scale=10)
o = opt.global_optimum_id
# 5000 tours spread over a radius-20 ball leave most nodes far from any better
# tour, so the isolation threshold is set near the sampling radius
dec = deception_filter(g, o, nbd_min=16, dist_max=20)
print(f"best sampled length {-g.fitness[o]:.0f}; {len(opt)} optima, {len(dec)} deceptive candidates")
for run in ov.run_ids:
    d, path = set_distance(g, ov.run_nodes(run))
    print(f"  run {run}: path distance to best {d:.0f} edges over {len(path) - 1} hops")

(out / "graph.csv").write_bytes(export_graph(g, "csv", optima=opt.optima_ids, deceptive=dec,
                                             labels=ov.labels, layout=layout_2d(g)))
(out / "graph.dot").write_bytes(export_graph(g, "dot", optima=opt.optima_ids, deceptive=dec))
print(f"wrote {out / 'graph.csv'} and {out / 'graph.dot'}")
