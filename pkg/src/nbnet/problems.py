"""Evaluatable problems: OneMax, the tunable W-Model and symmetric TSP.

All fitness values are maximized. TSP fitness is the negated tour length.

W-Model layer order
-------------------
A candidate bit string ``x`` of length ``n_bits`` is evaluated as::

    y = neutrality(x, mu)        # majority vote over blocks of mu bits
    z = epistasis(y, upsilon)    # bijective block mixing, block size upsilon
    t = len(z) - ones(z)         # distance to the all-ones target
    fitness = len(z) - ruggedness(t, gamma)

``neutrality`` keeps ``n_bits // mu`` bits; a block votes 1 when at least
half of its bits are 1. Inside an epistasis block of size ``h`` output bit
``i < h - 1`` is the XOR of every input bit except bit ``i + 1`` and the last
output is the XOR of the whole block, which is a bijection for every ``h``. The
ruggedness permutation fixes 0 (the optimum stays optimal); its total
variation over ``0..q`` equals ``q + gamma``, running from the identity at
``gamma = 0`` to the alternating order ``0, q, 1, q-1, ...`` at
``gamma = q(q-1)/2``. ``mu``, ``upsilon`` and ``gamma`` of 0 switch the
corresponding layer off (``mu = 1`` and ``upsilon = 1`` are identities too).
"""
from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .core import VariableDomain, successors
from .errors import ConfigurationError, ParseError, ValidationError

__all__ = [
    "OneMax",
    "WModel",
    "WModelParams",
    "BinaryFunction",
    "TspInstance",
    "evaluate",
    "wmodel_evaluate",
    "parse_tsplib",
    "read_tsplib",
    "generate_rue",
    "problem_from_descriptor",
]


class BinaryProblem:
    """Shared plumbing for bit-string problems."""

    kind = "binary"
    metric = "hamming"
    value_dtype = np.int8

    def __init__(self, D: int):
        if D < 1:
            raise ConfigurationError("D must be at least 1")
        self.D = int(D)

    @cached_property
    def domains(self) -> list[VariableDomain]:
        return [VariableDomain(i, frozenset((0, 1))) for i in range(self.D)]

    @property
    def search_space_size(self) -> int:
        return 2 ** self.D

    def validate_batch(self, values: np.ndarray) -> None:
        values = np.asarray(values)
        if values.ndim != 2 or values.shape[1] != self.D:
            raise ValidationError(f"expected {self.D} bits per solution, got shape {values.shape}")
        if values.size and not np.isin(values, (0, 1)).all():
            raise ValidationError("bit strings may only contain 0 and 1")

    def validate(self, values) -> None:
        self.validate_batch(np.asarray(values).reshape(1, -1))

    def canonical(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=np.int8)

    def encode(self, values: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(values, dtype=np.int32)

    def evaluate(self, values) -> float:
        values = np.asarray(values)
        self.validate(values)
        return float(self.evaluate_batch(values.reshape(1, -1))[0])

    def descriptor(self) -> dict:
        raise NotImplementedError

    @cached_property
    def fingerprint(self) -> str:
        blob = json.dumps(self.descriptor(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def __repr__(self):
        return f"{type(self).__name__}({self.descriptor()})"


class OneMax(BinaryProblem):
    kind = "onemax"

    def evaluate_batch(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values).sum(axis=1).astype(np.float64)

    def descriptor(self) -> dict:
        return {"kind": "onemax", "D": self.D}


@dataclass(frozen=True)
class WModelParams:
    n_bits: int = 120
    gamma: int = 0
    mu: int = 0
    upsilon: int = 0

    @property
    def reduced_length(self) -> int:
        return self.n_bits // self.mu if self.mu > 1 else self.n_bits

    @property
    def max_gamma(self) -> int:
        q = self.reduced_length
        return q * (q - 1) // 2

    def check(self) -> None:
        if self.n_bits < 1:
            raise ConfigurationError("n_bits must be positive")
        if not 0 <= self.mu <= self.n_bits:
            raise ConfigurationError(f"mu={self.mu} outside [0, {self.n_bits}]")
        q = self.reduced_length
        if not 0 <= self.upsilon <= q:
            raise ConfigurationError(f"upsilon={self.upsilon} outside [0, {q}]")
        if not 0 <= self.gamma <= self.max_gamma:
            raise ConfigurationError(f"gamma={self.gamma} outside [0, {self.max_gamma}]")


def neutrality(bits: np.ndarray, mu: int) -> np.ndarray:
    """Majority vote over consecutive blocks of ``mu`` bits (ties vote 1)."""
    bits = np.atleast_2d(bits)
    if mu <= 1:
        return bits
    n = bits.shape[1] // mu
    blocks = bits[:, : n * mu].reshape(len(bits), n, mu).sum(axis=2)
    return (2 * blocks >= mu).astype(np.int8)


def _epistasis_matrix(h: int) -> np.ndarray:
    # invertible over GF(2) for every h >= 2
    m = np.ones((h, h), dtype=np.int8)
    for i in range(h - 1):
        m[i, i + 1] = 0
    return m


def epistasis(bits: np.ndarray, upsilon: int) -> np.ndarray:
    """Bijective blockwise XOR mixing over blocks of ``upsilon`` bits (last block may be shorter)."""
    bits = np.atleast_2d(bits)
    if upsilon <= 1:
        return bits
    out = np.empty_like(bits)
    n = bits.shape[1]
    for start in range(0, n, upsilon):
        h = min(upsilon, n - start)
        block = bits[:, start:start + h].astype(np.int32)
        if h == 1:
            out[:, start] = block[:, 0]
            continue
        out[:, start:start + h] = (block @ _epistasis_matrix(h).T.astype(np.int32)) & 1
    return out


def ruggedness_permutation(gamma: int, q: int) -> np.ndarray:
    """Permutation ``r`` of ``0..q`` with ``r[0] = 0`` and total variation ``q + gamma``.

    A zig-zag prefix ``0, q, 1, q-1, ...`` is followed by a tail over the
    unused contiguous value range; the tail's shape fine-tunes the variation
    so every integer ``gamma`` in ``[0, q(q-1)/2]`` is reachable.
    """
    if not 0 <= gamma <= q * (q - 1) // 2:
        raise ConfigurationError(f"gamma={gamma} outside [0, {q * (q - 1) // 2}]")
    target = q + gamma
    prefix = [0]
    lo, hi = 1, q  # unused values
    high_turn = True  # the next zig-zag element comes from the top
    tv = 0
    while True:
        last = prefix[-1]
        s = hi - lo + 1
        if s <= 0:
            break
        # tail variation spans [s, 2s - 1] relative to the current prefix
        if tv + s <= target <= tv + 2 * s - 1:
            extra = target - tv - s
            if high_turn:  # last is below the range
                if extra == s - 1:
                    tail = list(range(hi, lo - 1, -1))
                else:
                    c = hi - extra
                    tail = list(range(lo, c)) + list(range(hi, c - 1, -1))
            else:  # last is above the range
                if extra == s - 1:
                    tail = list(range(lo, hi + 1))
                else:
                    c = lo + extra
                    tail = list(range(hi, c, -1)) + list(range(lo, c + 1))
            prefix.extend(tail)
            break
        nxt = hi if high_turn else lo
        tv += abs(nxt - last)
        prefix.append(nxt)
        if high_turn:
            hi -= 1
        else:
            lo += 1
        high_turn = not high_turn
    r = np.asarray(prefix, dtype=np.int64)
    assert len(r) == q + 1
    return r


class WModel(BinaryProblem):
    kind = "wmodel"

    def __init__(self, params: WModelParams):
        params.check()
        super().__init__(params.n_bits)
        self.params = params
        self._rug = ruggedness_permutation(params.gamma, params.reduced_length)

    def evaluate_batch(self, values: np.ndarray) -> np.ndarray:
        p = self.params
        z = epistasis(neutrality(np.asarray(values, dtype=np.int8), p.mu), p.upsilon)
        q = z.shape[1]
        t = q - z.sum(axis=1)
        return (q - self._rug[t]).astype(np.float64)

    @property
    def max_fitness(self) -> float:
        return float(self.params.reduced_length)

    def descriptor(self) -> dict:
        p = self.params
        return {"kind": "wmodel", "n_bits": p.n_bits, "gamma": p.gamma,
                "mu": p.mu, "upsilon": p.upsilon}


def wmodel_evaluate(params: WModelParams, bits) -> float:
    bits = np.asarray(bits)
    if bits.shape != (params.n_bits,):
        raise ValidationError(f"expected {params.n_bits} bits, got shape {bits.shape}")
    return WModel(params).evaluate(bits)


class BinaryFunction(BinaryProblem):
    """Bit-string problem backed by a user callable over a batch of rows."""

    kind = "function"

    def __init__(self, D: int, fn: Callable[[np.ndarray], np.ndarray], name: str = "custom"):
        super().__init__(D)
        self.fn = fn
        self.name = name

    def evaluate_batch(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values)
        if len(values) == 0:
            return np.zeros(0)
        return np.asarray(self.fn(values), dtype=np.float64).reshape(len(values))

    def descriptor(self) -> dict:
        return {"kind": "function", "D": self.D, "name": self.name}


class TspInstance:
    """Symmetric Euclidean TSP with TSPLIB ``EUC_2D`` (nearest integer) distances."""

    kind = "tsp"
    metric = "edge"
    value_dtype = np.int32

    def __init__(self, coords, name: str = "tsp"):
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ConfigurationError("coords must have shape (D, 2)")
        if len(coords) < 3:
            raise ConfigurationError("a TSP instance needs at least 3 cities")
        self.coords = coords
        self.coords.flags.writeable = False
        self.name = name
        self.D = len(coords)

    @cached_property
    def dist(self) -> np.ndarray:
        diff = self.coords[:, None, :] - self.coords[None, :, :]
        return np.floor(np.sqrt((diff ** 2).sum(axis=2)) + 0.5).astype(np.int64)

    @cached_property
    def domains(self) -> list[VariableDomain]:
        cities = range(1, self.D + 1)
        return [VariableDomain(i, frozenset(c for c in cities if c != i + 1))
                for i in range(self.D)]

    @property
    def search_space_size(self) -> int:
        return math.factorial(self.D - 1) // 2

    def validate_batch(self, values: np.ndarray) -> None:
        values = np.asarray(values)
        if values.ndim != 2 or values.shape[1] != self.D:
            raise ValidationError(f"expected tours of {self.D} cities, got shape {values.shape}")
        if values.size and not (np.sort(values, axis=1) == np.arange(1, self.D + 1)).all():
            raise ValidationError("tour is not a permutation of 1..D")

    def validate(self, values) -> None:
        self.validate_batch(np.asarray(values).reshape(1, -1))

    def canonical(self, values: np.ndarray) -> np.ndarray:
        """Rotate to start at city 1 and orient so the second city is the smaller neighbour."""
        t = np.atleast_2d(np.asarray(values, dtype=np.int32))
        if len(t) == 0:
            return t
        start = np.argmax(t == 1, axis=1)
        idx = (np.arange(self.D)[None, :] + start[:, None]) % self.D
        rot = np.take_along_axis(t, idx, axis=1)
        flip = rot[:, 1] > rot[:, -1]
        rot[flip, 1:] = rot[flip, 1:][:, ::-1]
        return rot

    def encode(self, values: np.ndarray) -> np.ndarray:
        return successors(values)

    def tour_lengths(self, tours: np.ndarray) -> np.ndarray:
        t = np.atleast_2d(tours) - 1
        return self.dist[t, np.roll(t, -1, axis=1)].sum(axis=1)

    def evaluate_batch(self, values: np.ndarray) -> np.ndarray:
        if len(values) == 0:
            return np.zeros(0)
        return -self.tour_lengths(values).astype(np.float64)

    def evaluate(self, values) -> float:
        self.validate(values)
        return float(self.evaluate_batch(np.asarray(values).reshape(1, -1))[0])

    def descriptor(self) -> dict:
        return {"kind": "tsp", "name": self.name, "coords": self.coords.tolist()}

    @cached_property
    def fingerprint(self) -> str:
        blob = json.dumps(self.descriptor(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def __repr__(self):
        return f"TspInstance(name={self.name!r}, D={self.D})"


def evaluate(problem, values) -> float:
    return problem.evaluate(values)


_HEADER = re.compile(r"^\s*([A-Z_]+)\s*:\s*(.*?)\s*$")


def parse_tsplib(text) -> TspInstance:
    """Parse the ``EUC_2D`` subset of TSPLIB.

    Accepts ``str`` or ``bytes``. Errors carry the 1-based line number.
    """
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8", errors="replace")
    lines = text.splitlines()
    header = {}
    coords = {}
    in_coords = False
    coord_line = None
    for no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        if in_coords:
            parts = line.split()
            if len(parts) == 3 and not _HEADER.match(line):
                try:
                    node = int(parts[0])
                    coords[node] = (float(parts[1]), float(parts[2]))
                except ValueError:
                    raise ParseError(f"malformed coordinate line {line!r}", no) from None
                continue
            if not parts[0].isupper():
                raise ParseError(f"malformed coordinate line {line!r}", no)
            in_coords = False
        if line == "NODE_COORD_SECTION":
            in_coords = True
            coord_line = no
            continue
        if line.endswith("_SECTION"):
            raise ParseError(f"unsupported section {line}", no)
        m = _HEADER.match(line)
        if not m:
            raise ParseError(f"cannot parse header line {line!r}", no)
        header[m.group(1)] = (m.group(2), no)

    def field(name):
        if name not in header:
            raise ParseError(f"missing {name}")
        return header[name]

    kind, no = field("TYPE")
    if kind.split()[0] != "TSP":
        raise ParseError(f"unsupported TYPE {kind}", no)
    ewt, no = field("EDGE_WEIGHT_TYPE")
    if ewt != "EUC_2D":
        raise ParseError(f"unsupported EDGE_WEIGHT_TYPE {ewt}", no)
    dim, no = field("DIMENSION")
    try:
        D = int(dim)
    except ValueError:
        raise ParseError(f"bad DIMENSION {dim!r}", no) from None
    if coord_line is None:
        raise ParseError("missing NODE_COORD_SECTION")
    if len(coords) != D or sorted(coords) != list(range(1, D + 1)):
        raise ParseError(f"DIMENSION is {D} but {len(coords)} coordinates were read", coord_line)
    name = header.get("NAME", ("tsp", 0))[0]
    return TspInstance(np.array([coords[i] for i in range(1, D + 1)]), name=name)


def read_tsplib(path) -> TspInstance:
    with open(path, "rb") as fh:
        return parse_tsplib(fh.read())


def generate_rue(D: int, seed: int, extent: int = 1_000_000, name: Optional[str] = None) -> TspInstance:
    """Uniform random Euclidean instance with integer coordinates in ``[0, extent]``."""
    if D < 3:
        raise ConfigurationError("a TSP instance needs at least 3 cities")
    rng = np.random.default_rng(seed)
    coords = np.rint(rng.uniform(0, extent, size=(D, 2)))
    return TspInstance(coords, name=name or f"rue{D}-{seed}")


def problem_from_descriptor(desc: dict):
    kind = desc.get("kind")
    if kind == "onemax":
        return OneMax(desc["D"])
    if kind == "wmodel":
        return WModel(WModelParams(desc["n_bits"], desc["gamma"], desc["mu"], desc["upsilon"]))
    if kind == "tsp":
        return TspInstance(desc["coords"], name=desc.get("name", "tsp"))
    raise ConfigurationError(f"cannot rebuild problem of kind {kind!r}")
