"""File formats: sample-set container, graph archives, trajectories and exports.

Sample-set container (little endian)::

    8 bytes   magic b"NBNSMPL\\0"
    u32       format version
    u32       header length H
    H bytes   UTF-8 JSON header (problem descriptor and hash, N, D, dtype)
    N*D       values in the header's dtype
    N*8       fitness as float64
    32 bytes  SHA-256 of everything above

Trajectory files hold one record per line::

    run_id iteration v1 v2 ... vD [| fitness]

Blank lines and lines starting with ``#`` are ignored.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .core import BetaTable, NbnGraph, SampleSet
from .errors import FormatError, ParseError, ProblemMismatchError, ValidationError
from .problems import problem_from_descriptor

log = logging.getLogger(__name__)

MAGIC = b"NBNSMPL\0"
VERSION = 1

__all__ = [
    "persist_sampleset",
    "load_sampleset",
    "save_graph",
    "load_graph",
    "TrajectoryRecord",
    "TrajectoryOverlay",
    "parse_trajectories",
    "ingest_trajectories",
    "export_graph",
    "LayoutPoint",
    "layout_2d",
]


def persist_sampleset(path, samples: SampleSet, meta: Optional[dict] = None) -> None:
    """Write ``samples``; ``meta`` is free-form JSON stored in the header."""
    problem = samples.problem
    header = {
        "problem": problem.descriptor(),
        "problem_hash": problem.fingerprint,
        "N": len(samples),
        "D": samples.D,
        "dtype": np.dtype(problem.value_dtype).str,
        "meta": meta or {},
    }
    hbytes = json.dumps(header, sort_keys=True).encode()
    body = b"".join([
        MAGIC,
        struct.pack("<II", VERSION, len(hbytes)),
        hbytes,
        np.ascontiguousarray(samples.values).astype(np.dtype(problem.value_dtype).newbyteorder("<")).tobytes(),
        samples.fitness.astype("<f8").tobytes(),
    ])
    Path(path).write_bytes(body + hashlib.sha256(body).digest())


def load_sampleset(path, problem=None, *, with_meta: bool = False):
    """Read a container; with ``problem`` given its hash must match the stored one.

    With ``with_meta`` returns ``(samples, meta)``.
    """
    blob = Path(path).read_bytes()
    if len(blob) < len(MAGIC) + 8 + 32 or blob[:len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: not a sample-set container")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise FormatError(f"{path}: checksum mismatch, file is corrupt")
    version, hlen = struct.unpack_from("<II", body, len(MAGIC))
    if version != VERSION:
        raise FormatError(f"{path}: unsupported container version {version}")
    off = len(MAGIC) + 8
    try:
        header = json.loads(body[off:off + hlen])
        N, D = int(header["N"]), int(header["D"])
        dtype = np.dtype(header["dtype"])
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: bad header ({exc})") from None
    off += hlen
    if len(body) != off + N * D * dtype.itemsize + N * 8:
        raise FormatError(f"{path}: payload size does not match the header")
    if problem is None:
        try:
            problem = problem_from_descriptor(header["problem"])
        except (KeyError, TypeError) as exc:
            raise FormatError(f"{path}: bad problem descriptor ({exc})") from None
    if problem.fingerprint != header["problem_hash"]:
        raise ProblemMismatchError(
            f"{path} was written for a different problem ({header['problem'].get('kind')})")
    values = np.frombuffer(body, dtype=dtype, count=N * D, offset=off).reshape(N, D)
    fitness = np.frombuffer(body, dtype="<f8", count=N, offset=off + N * D * dtype.itemsize)
    S = SampleSet(problem, values.astype(problem.value_dtype), fitness.astype(np.float64))
    return (S, header.get("meta", {})) if with_meta else S


def save_graph(path, graph: NbnGraph) -> None:
    with open(path, "wb") as fh:
        np.savez(fh, parent=graph.parent, distance=graph.nbd,
                 key=np.array(graph.beta.key or ""),
                 meta=np.array(json.dumps(graph.meta, sort_keys=True)))


def load_graph(path, samples: SampleSet) -> NbnGraph:
    """Load an archive written by :func:`save_graph` and bind it to ``samples``."""
    try:
        with np.load(path, allow_pickle=False) as z:
            parent, dist = z["parent"], z["distance"]
            key, meta = str(z["key"]), json.loads(str(z["meta"]))
    except (OSError, KeyError, ValueError) as exc:
        raise FormatError(f"{path}: not a graph archive ({exc})") from None
    if key and key != samples.fingerprint:
        raise ProblemMismatchError(f"{path} was built over a different sample set")
    if len(parent) != len(samples):
        raise FormatError(f"{path}: {len(parent)} nodes but {len(samples)} samples")
    return NbnGraph(samples, BetaTable(parent.astype(np.int64), dist.astype(np.float64), key),
                    meta)


@dataclass(frozen=True)
class TrajectoryRecord:
    run_id: int
    iteration: int
    values: tuple
    fitness: Optional[float] = None


@dataclass
class TrajectoryOverlay:
    """Trajectory solutions merged into a sample set.

    ``node_of[i]`` is the node id of ``records[i]``; ``labels[node]`` lists
    every ``(run_id, iteration)`` that visited the node.
    """

    samples: SampleSet
    records: list
    node_of: np.ndarray
    labels: dict = field(default_factory=dict)

    @property
    def run_ids(self) -> list:
        return sorted({r.run_id for r in self.records})

    def run_nodes(self, run_id: int) -> np.ndarray:
        return np.unique(np.array([n for r, n in zip(self.records, self.node_of)
                                   if r.run_id == run_id], dtype=np.int64))


def parse_trajectories(lines: Iterable[str], D: Optional[int] = None) -> list[TrajectoryRecord]:
    records = []
    for no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fit = None
        if "|" in line:
            line, _, tail = line.partition("|")
            try:
                fit = float(tail)
            except ValueError:
                raise ParseError(f"bad fitness {tail.strip()!r}", no) from None
        parts = line.split()
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise ParseError("expected integers: run_id iteration values...", no) from None
        if len(nums) < 3:
            raise ParseError("expected run_id, iteration and at least one value", no)
        if D is not None and len(nums) - 2 != D:
            raise ParseError(f"expected {D} values, got {len(nums) - 2}", no)
        records.append(TrajectoryRecord(nums[0], nums[1], tuple(nums[2:]), fit))
    return records


def ingest_trajectories(path, problem, base: Optional[SampleSet] = None) -> TrajectoryOverlay:
    """Merge trajectory solutions into ``base`` (or a fresh set) keeping run labels.

    Existing node ids of ``base`` are preserved; new solutions are appended.
    """
    with open(path, "r", encoding="utf-8") as fh:
        records = parse_trajectories(fh, problem.D)
    if base is None:
        base = SampleSet(problem, np.zeros((0, problem.D), problem.value_dtype), np.zeros(0))
    if not records:
        warnings.warn(f"{path}: no trajectory records", stacklevel=2)
        return TrajectoryOverlay(base, [], np.zeros(0, dtype=np.int64), {})
    values = np.array([r.values for r in records], dtype=problem.value_dtype)
    for i, row in enumerate(values):
        try:
            problem.validate(row)
        except ValidationError as exc:
            raise ValidationError(f"record {i + 1} (run {records[i].run_id}): {exc}") from None
    merged, node_of = base.extend(values)
    mismatched = [r for r, n in zip(records, node_of)
                  if r.fitness is not None and not math.isclose(r.fitness, merged.fitness[n],
                                                               rel_tol=1e-9, abs_tol=1e-9)]
    if mismatched:
        warnings.warn(f"{len(mismatched)} recorded fitness values differ from evaluation; "
                      "evaluated values are used", stacklevel=2)
    labels: dict = {}
    for r, n in zip(records, node_of):
        labels.setdefault(int(n), []).append((r.run_id, r.iteration))
    return TrajectoryOverlay(merged, records, np.asarray(node_of, dtype=np.int64), labels)


def _num(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def _runs(labels, i) -> list:
    if not labels or i not in labels:
        return []
    return sorted({r for r, _ in labels[i]})


def export_graph(graph: NbnGraph, fmt: str = "csv", *, optima=(), deceptive=(),
                 labels: Optional[dict] = None, layout: Optional[list] = None) -> bytes:
    """One record per node (or the forest as DOT) as UTF-8 bytes.

    ``labels`` maps node ids to ``(run_id, iteration)`` pairs, as produced by
    :func:`ingest_trajectories`. ``layout`` adds coordinates from :func:`layout_2d`.
    """
    n = len(graph)
    opt = np.zeros(n, bool)
    opt[np.asarray(list(optima), dtype=np.int64)] = True
    dec = np.zeros(n, bool)
    dec[np.asarray(list(deceptive), dtype=np.int64)] = True
    parent, nbd, fit = graph.parent, graph.nbd, graph.fitness
    pts = {p.id: p for p in layout} if layout else None
    out = []
    if fmt == "csv":
        head = ["id", "fitness", "nbd", "parent", "optimum", "deceptive", "runs"]
        if pts:
            head += ["x", "z", "height"]
        out.append(",".join(head))
        for i in range(n):
            row = [str(i), _num(fit[i]), "" if parent[i] < 0 else _num(nbd[i]),
                   "" if parent[i] < 0 else str(parent[i]), str(int(opt[i])), str(int(dec[i])),
                   ";".join(map(str, _runs(labels, i)))]
            if pts:
                p = pts[i]
                row += [_num(p.x), _num(p.z), _num(p.height)]
            out.append(",".join(row))
    elif fmt == "jsonl":
        for i in range(n):
            rec = {"id": i, "fitness": float(fit[i]),
                   "nbd": None if parent[i] < 0 else float(nbd[i]),
                   "parent": None if parent[i] < 0 else int(parent[i]),
                   "optimum": bool(opt[i]), "deceptive": bool(dec[i]),
                   "runs": _runs(labels, i)}
            if pts:
                p = pts[i]
                rec.update(x=p.x, z=p.z, height=p.height)
            out.append(json.dumps(rec, sort_keys=True))
    elif fmt == "dot":
        out.append("digraph nbn {")
        for i in range(n):
            attrs = [f'fitness="{_num(fit[i])}"']
            if opt[i]:
                attrs.append("optimum=1")
            if dec[i]:
                attrs.append("deceptive=1")
            out.append(f"  {i} [{' '.join(attrs)}];")
        for i in np.flatnonzero(parent >= 0):
            out.append(f'  {i} -> {parent[i]} [nbd="{_num(nbd[i])}"];')
        out.append("}")
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    return ("\n".join(out) + "\n").encode()


@dataclass(frozen=True)
class LayoutPoint:
    """Node coordinates: ``(x, z)`` is the top view, ``(x, height)`` the side view."""

    id: int
    x: float
    z: float
    height: float
    parent: int


def layout_2d(graph: NbnGraph) -> list[LayoutPoint]:
    """Deterministic radial tree layout, one disc per root.

    Inside a tree, children are ordered by descending subtree size (ties by
    id) and every node sits at the angular centre of the leaves below it,
    at a radius equal to its depth. Discs are placed left to right in root
    order, so separate basins never overlap.
    """
    n = len(graph)
    parent = graph.parent
    fit = graph.fitness
    # parents are strictly fitter, so ascending fitness visits children first
    order = np.lexsort((np.arange(n), fit))
    size = np.ones(n, dtype=np.int64)
    for i in order:
        if parent[i] >= 0:
            size[parent[i]] += size[i]
    kids: dict = {}
    for i in np.lexsort((np.arange(n), -size)):
        if parent[i] >= 0:
            kids.setdefault(int(parent[i]), []).append(int(i))
    depth = np.zeros(n, dtype=np.int64)
    angle = np.zeros(n)
    cx = np.zeros(n)
    offset = 0.0
    for root in graph.roots:
        # leaf slots by pre-order walk, then centre internal nodes over their leaves
        slots = {}
        post = []
        stack = [(int(root), 0)]
        leaves = 0
        while stack:
            v, d = stack.pop()
            depth[v] = d
            post.append(v)
            ch = kids.get(v)
            if ch:
                stack.extend((c, d + 1) for c in reversed(ch))
            else:
                slots[v] = (leaves, leaves)
                leaves += 1
        for v in reversed(post):
            ch = kids.get(v)
            if ch:
                slots[v] = (slots[ch[0]][0], slots[ch[-1]][1])
        radius = float(depth[post].max())
        for v in post:
            lo, hi = slots[v]
            angle[v] = 2 * math.pi * ((lo + hi) / 2 + 0.5) / leaves
            cx[v] = offset + radius
        offset += 2 * radius + 1.0
    x = cx + depth * np.cos(angle)
    z = depth * np.sin(angle)
    return [LayoutPoint(i, float(x[i]), float(z[i]), float(fit[i]), int(parent[i]))
            for i in range(n)]
