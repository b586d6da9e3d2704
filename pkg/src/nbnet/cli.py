"""Command line entry point: ``nbnet {sample,build,analyze,verify,export}``.

Exit codes: 0 success, 1 usage error, 2 data error. Every run writes a
reproducibility header (version, build id, parameters) to stderr.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import deception_filter, identify_optima, set_distance
from .builder import build_graph, cnbsi, required_projections
from .core import check_forest, row_distances
from .errors import NbnError
from .io import (export_graph, ingest_trajectories, layout_2d, load_graph, load_sampleset,
                 persist_sampleset, save_graph)
from .problems import OneMax, WModel, WModelParams, generate_rue, read_tsplib
from .sampling import sample_global, sample_local
from .transition import TransitionModel, argmax_transition

log = logging.getLogger("nbnet")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_id() -> str:
    """Hash of the package sources, stable across runs of the same code."""
    h = hashlib.sha256()
    for p in sorted(Path(__file__).parent.glob("*.py")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()[:12]


def _header(args) -> None:
    params = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    sys.stderr.write(f"# nbnet {__version__} build {build_id()} {args.command} "
                     f"{json.dumps(params, sort_keys=True, default=str)}\n")


def _make_problem(args):
    if args.problem == "onemax":
        return OneMax(args.bits)
    if args.problem == "wmodel":
        return WModel(WModelParams(args.bits, args.wmodel_gamma, args.wmodel_mu,
                                   args.wmodel_upsilon))
    if args.tsplib:
        return read_tsplib(args.tsplib)
    if args.rue_d:
        return generate_rue(args.rue_d, args.rue_seed)
    raise UsageError("tsp needs --tsplib or --rue-d")


def parse_solution(problem, text: str, seed: int = 0) -> np.ndarray:
    """``random``, a path to a file, ``0110...`` for bits or a comma/space separated list."""
    if text == "random":
        rng = np.random.default_rng(seed)
        if problem.metric == "hamming":
            return rng.integers(0, 2, problem.D).astype(problem.value_dtype)
        return (rng.permutation(problem.D) + 1).astype(problem.value_dtype)
    if Path(text).is_file():
        text = Path(text).read_text()
    text = text.strip()
    if problem.metric == "hamming" and set(text) <= {"0", "1"}:
        vals = [int(c) for c in text]
    else:
        try:
            vals = [int(t) for t in text.replace(",", " ").split()]
        except ValueError:
            raise UsageError(f"cannot parse solution {text[:40]!r}") from None
    vals = np.asarray(vals, dtype=problem.value_dtype)
    problem.validate(vals)
    return vals


def cmd_sample(args) -> int:
    problem = _make_problem(args)
    if args.local_center is not None:
        if args.k is None:
            raise UsageError("--local-center needs --k")
        center = parse_solution(problem, args.local_center, args.seed)
        S = sample_local(problem, center, args.k, args.n, args.seed, strategy=args.strategy)
        meta = {"mode": "local", "center": center.tolist(), "K": args.k}
    else:
        S = sample_global(problem, args.n, args.seed)
        meta = {"mode": "global"}
    persist_sampleset(args.out, S, meta=meta)
    print(json.dumps({"samples": len(S), "out": args.out, **{k: v for k, v in meta.items()
                                                           if k != "center"}}))
    return 0


def _load_pair(args):
    S, meta = load_sampleset(args.samples, with_meta=True)
    G = load_graph(args.graph, S) if getattr(args, "graph", None) else None
    return S, meta, G


def cmd_build(args) -> int:
    S, meta = load_sampleset(args.samples, with_meta=True)
    if args.trajectories:
        if not args.merged_out:
            raise UsageError("--trajectories needs --merged-out for the merged sample set")
        S = ingest_trajectories(args.trajectories, S.problem, base=S).samples
        persist_sampleset(args.merged_out, S, meta=meta)
    center = None
    if args.local:
        if meta.get("mode") != "local":
            raise UsageError("--local needs a sample set drawn with --local-center")
        center = np.asarray(meta["center"], dtype=S.problem.value_dtype)
    L = args.rounds
    if args.algo == "cnbsrp" and L is None:
        L = required_projections(max(len(S), 2), args.epsilon)
    G = build_graph(S, args.algo, L=L, n_min=args.nm, seed=args.seed, threads=args.threads,
                    center=center)
    save_graph(args.out, G)
    print(json.dumps({"nodes": len(G), "roots": int(len(G.roots)), "L": G.meta.get("L"),
                      "out": args.out}))
    return 0


def _analysis(args, S, G):
    report = {"nodes": len(G), "roots": G.roots.tolist()}
    norm = None if args.normalize == "none" else args.normalize
    opt = identify_optima(G, args.theta, args.vartheta, normalize=norm,
                          reference=args.reference, scale=args.scale)
    o = opt.global_optimum_id
    report.update(theta=args.theta, vartheta=args.vartheta, normalize=args.normalize,
                  optima=opt.optima_ids.tolist(), optima_count=len(opt),
                  global_optimum=o, global_fitness=float(G.fitness[o]))
    dec = sorted(deception_filter(G, o, args.deception_nbd_min, args.deception_dist_max))
    report.update(deception_nbd_min=args.deception_nbd_min,
                  deception_dist_max=args.deception_dist_max, deceptive=dec)
    labels = None
    if args.trajectories:
        ov = ingest_trajectories(args.trajectories, S.problem, base=S)
        if len(ov.samples) != len(S):
            raise NbnError("trajectory solutions are missing from the graph; "
                           "build with --trajectories first")
        labels = ov.labels
        runs = {}
        for run in ov.run_ids:
            d, path = set_distance(G, ov.run_nodes(run))
            runs[str(run)] = {"distance": d, "path": list(path.nodes), "jump": path.jump}
        report["runs"] = runs
        if runs:
            ds = [r["distance"] for r in runs.values()]
            report["run_distance_min"] = min(ds)
            report["run_distance_max"] = max(ds)
    return report, labels


def _add_analysis_flags(p):
    p.add_argument("--theta", type=float, default=-np.inf)
    p.add_argument("--vartheta", type=float, default=0.0)
    p.add_argument("--normalize", choices=["none", "ratio"], default="none",
                   help="scale of --theta: raw fitness or ratio to --reference")
    p.add_argument("--reference", type=float, default=None,
                   help="best-known fitness for --normalize ratio (default: best in set)")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--deception-nbd-min", type=float, default=10.0)
    p.add_argument("--deception-dist-max", type=float, default=17.0)
    p.add_argument("--trajectories")


def cmd_analyze(args) -> int:
    S, _, G = _load_pair(args)
    report, _ = _analysis(args, S, G)
    text = json.dumps(report, sort_keys=True)
    if args.report:
        Path(args.report).write_text(text + "\n")
    print(json.dumps({k: report[k] for k in ("nodes", "optima_count", "global_optimum")}
                     | {"deceptive": len(report["deceptive"])}))
    return 0


def cmd_verify(args) -> int:
    S, _, G = _load_pair(args)
    try:
        check_forest(S, G.beta)
        sound = True
    except NbnError as exc:
        log.error("forest check failed: %s", exc)
        sound = False
    n = len(S)
    rng = np.random.default_rng(args.seed)
    ids = np.arange(n) if n <= args.sample_cap else np.sort(rng.choice(n, args.sample_cap, replace=False))
    result = {"checked": int(len(ids)), "sound": sound, "oracle": args.oracle}
    if args.oracle == "cnbsi":
        if n <= args.sample_cap:
            exact = cnbsi(S).distance
        else:
            exact = np.full(n, np.inf)
            for i in ids:
                better = np.flatnonzero(S.fitness > S.fitness[i])
                if len(better):
                    exact[i] = row_distances(S.problem.metric, S.values[better],
                                             np.broadcast_to(S.values[i], (len(better), S.D))).min()
        worse = G.nbd[ids] > exact[ids]
        result["error_rate"] = float(worse.mean())
    else:
        model = TransitionModel(args.r, S.D)
        agree = 0
        for i in ids:
            a = argmax_transition(int(i), S, model)
            agree += (-1 if a is None else a) == G.parent[i]
        result["agreement"] = agree / len(ids)
    print(json.dumps(result, sort_keys=True))
    return 0 if sound else 2


def cmd_export(args) -> int:
    S, _, G = _load_pair(args)
    optima, deceptive, labels = (), (), None
    if args.report:
        rep = json.loads(Path(args.report).read_text())
        optima, deceptive = rep.get("optima", []), rep.get("deceptive", [])
    if args.trajectories:
        ov = ingest_trajectories(args.trajectories, S.problem, base=S)
        if len(ov.samples) != len(S):
            raise NbnError("trajectory solutions are missing from the graph")
        labels = ov.labels
    layout = layout_2d(G) if args.layout else None
    blob = export_graph(G, args.format, optima=optima, deceptive=deceptive, labels=labels,
                        layout=layout)
    if args.out:
        Path(args.out).write_bytes(blob)
    else:
        sys.stdout.buffer.write(blob)
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nbnet", description="Nearest-better network construction and analysis.")
    ap.add_argument("--version", action="version", version=f"nbnet {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="draw a sample set")
    p.add_argument("--problem", choices=["onemax", "wmodel", "tsp"], required=True)
    p.add_argument("--bits", type=int, default=120, help="bit-string length")
    p.add_argument("--wmodel-gamma", type=int, default=0)
    p.add_argument("--wmodel-mu", type=int, default=0)
    p.add_argument("--wmodel-upsilon", type=int, default=0)
    p.add_argument("--tsplib")
    p.add_argument("--rue-d", type=int)
    p.add_argument("--rue-seed", type=int, default=1)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--local-center", help="'random', a file, or the solution itself")
    p.add_argument("--k", type=int)
    p.add_argument("--strategy", choices=["uniform-j", "ball"], default="uniform-j")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("build", help="build the nearest-better graph")
    p.add_argument("--samples", required=True)
    p.add_argument("--algo", choices=["cnbsi", "cnbsrp"], default="cnbsrp")
    p.add_argument("--epsilon", type=float, default=0.3)
    p.add_argument("--rounds", type=int, help="override the number of rounds L")
    p.add_argument("--nm", type=int, default=20, help="leaf size")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--local", action="store_true", help="re-split around the sampling centre")
    p.add_argument("--trajectories")
    p.add_argument("--merged-out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("analyze", help="optima, deception and trajectory metrics")
    p.add_argument("--samples", required=True)
    p.add_argument("--graph", required=True)
    _add_analysis_flags(p)
    p.add_argument("--report")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="check a graph against an exact oracle")
    p.add_argument("--samples", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--oracle", choices=["cnbsi", "argmax-transition"], default="cnbsi")
    p.add_argument("--sample-cap", type=int, default=2000)
    p.add_argument("--r", type=float, default=1.0, help="mutation step size")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export", help="write the graph as csv, jsonl or dot")
    p.add_argument("--samples", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--format", choices=["csv", "jsonl", "dot"], default="csv")
    p.add_argument("--layout", action="store_true", help="add layout coordinates")
    p.add_argument("--report", help="analysis report supplying optimum/deceptive flags")
    p.add_argument("--trajectories")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    _header(args)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"nbnet: error: {exc}\n")
        return 1
    except (NbnError, OSError) as exc:
        sys.stderr.write(f"nbnet: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
