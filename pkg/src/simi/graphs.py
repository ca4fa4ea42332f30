"""Infinite graph families with canonical vertex keys.

Nothing is ever materialised globally: adjacency, distances and encodings are
computed from the keys themselves.

Vertex keys
-----------
Lattice(d)         tuple of ``d`` ints
Line               int
RegularTree(d)     tuple of symbols; the first in ``0..d-1``, later ones in
                   ``0..d-2``; the root is ``()``
DecoratedTree(n)   ``(path, k)`` with ``path`` a key of the 3-regular tree and
                   ``k`` in ``0..n`` the clique index
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Any, ClassVar

import numpy as np

from .keyed import derive, derive_np


class GraphError(ValueError):
    """Invalid vertex key or graph parameters."""


@dataclass(frozen=True)
class GraphSpec:
    family: ClassVar[str] = ""

    @property
    def max_degree(self) -> int:
        raise NotImplementedError

    def origin(self) -> Any:
        raise NotImplementedError

    def validate(self, v) -> None:
        raise NotImplementedError

    def neighbors(self, v) -> list:
        raise NotImplementedError

    def neighbor(self, v, j: int):
        """The ``j``-th entry of ``neighbors(v)`` without building the list."""
        return self.neighbors(v)[j]

    def degree(self, v) -> int:
        return len(self.neighbors(v))

    def distance(self, u, v) -> int:
        raise NotImplementedError

    def radius(self, v) -> int:
        """Distance from the origin (unvalidated fast path)."""
        raise NotImplementedError

    def encode(self, v) -> bytes:
        raise NotImplementedError

    def decode(self, data: bytes):
        raise NotImplementedError

    def fingerprint(self, v) -> int:
        """64-bit identity hash of ``v``; keys all per-vertex randomness."""
        raise NotImplementedError

    def fingerprint_cached(self, v, cache: dict) -> int:
        """Same value as :meth:`fingerprint`; tree families reuse ``cache``
        (path -> tree fingerprint) so deep paths cost O(1) amortised."""
        return self.fingerprint(v)

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"family": self.family, **self.params()}

    def __str__(self) -> str:
        args = ",".join(str(x) for x in self.params().values())
        return f"{self.family}({args})"


def _sortable(x: int) -> bytes:
    return struct.pack(">Q", (x + (1 << 63)) & ((1 << 64) - 1))


def _unsortable(b: bytes) -> int:
    return struct.unpack(">Q", b)[0] - (1 << 63)


@dataclass(frozen=True)
class Lattice(GraphSpec):
    d: int = 2
    family: ClassVar[str] = "lattice"

    def __post_init__(self):
        if self.d < 1:
            raise GraphError(f"lattice dimension must be >= 1, got {self.d}")

    @property
    def max_degree(self) -> int:
        return 2 * self.d

    def origin(self):
        return (0,) * self.d

    def validate(self, v) -> None:
        if not (isinstance(v, tuple) and len(v) == self.d and all(isinstance(c, int) for c in v)):
            raise GraphError(f"{v!r} is not a vertex of Z^{self.d}")

    def neighbors(self, v):
        self.validate(v)
        out = []
        for i in range(self.d):
            for s in (1, -1):
                w = list(v)
                w[i] += s
                out.append(tuple(w))
        return out

    def neighbor(self, v, j):
        w = list(v)
        w[j >> 1] += -1 if j & 1 else 1
        return tuple(w)

    def degree(self, v):
        return 2 * self.d

    def distance(self, u, v):
        self.validate(u)
        self.validate(v)
        return sum(abs(a - b) for a, b in zip(u, v))

    def radius(self, v):
        return sum(map(abs, v))

    def encode(self, v):
        return b"".join(_sortable(c) for c in v)

    def decode(self, data):
        if len(data) != 8 * self.d:
            raise GraphError("bad lattice encoding")
        return tuple(_unsortable(data[8 * i : 8 * i + 8]) for i in range(self.d))

    def fingerprint(self, v):
        h = derive(0x1A77, self.d)
        for c in v:
            h = derive(h, c)
        return h

    def fingerprints(self, coords: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`fingerprint` for an ``(m, d)`` integer array."""
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, self.d)
        h = np.full(coords.shape[0], derive(0x1A77, self.d), dtype=np.uint64)
        for i in range(self.d):
            h = derive_np(h, coords[:, i])
        return h

    def params(self):
        return {"d": self.d}


@dataclass(frozen=True)
class Line(GraphSpec):
    family: ClassVar[str] = "line"

    @property
    def max_degree(self):
        return 2

    def origin(self):
        return 0

    def validate(self, v):
        if not isinstance(v, int) or isinstance(v, bool):
            raise GraphError(f"{v!r} is not a vertex of Z")

    def neighbors(self, v):
        self.validate(v)
        return [v + 1, v - 1]

    def neighbor(self, v, j):
        return v - 1 if j else v + 1

    def degree(self, v):
        return 2

    def distance(self, u, v):
        self.validate(u)
        self.validate(v)
        return abs(u - v)

    def radius(self, v):
        return abs(v)

    def encode(self, v):
        return _sortable(v)

    def decode(self, data):
        if len(data) != 8:
            raise GraphError("bad line encoding")
        return _unsortable(data)

    def fingerprint(self, v):
        return derive(0x11E, v)


def _tree_validate(d: int, v) -> None:
    if not isinstance(v, tuple):
        raise GraphError(f"{v!r} is not a tree path")
    for i, s in enumerate(v):
        top = d if i == 0 else d - 1
        if not isinstance(s, int) or not 0 <= s < top:
            raise GraphError(f"invalid symbol {s!r} at depth {i} in {v!r}")


def _tree_neighbors(d: int, v: tuple) -> list:
    if not v:
        return [(s,) for s in range(d)]
    return [v[:-1]] + [v + (s,) for s in range(d - 1)]


def _tree_neighbor(d: int, v: tuple, j: int) -> tuple:
    if not v:
        return (j,)
    return v[:-1] if j == 0 else v + (j - 1,)


def _tree_distance(u: tuple, v: tuple) -> int:
    k = 0
    for a, b in zip(u, v):
        if a != b:
            break
        k += 1
    return len(u) + len(v) - 2 * k


def _tree_fingerprint(root: int, v: tuple) -> int:
    h = root
    for s in v:
        h = derive(h, s)
    return h


def _tree_fingerprint_cached(root: int, v: tuple, cache: dict) -> int:
    h = cache.get(v)
    if h is not None:
        return h
    missing = []
    w = v
    while w and w not in cache:
        missing.append(w)
        w = w[:-1]
    h = cache[w] if w else root
    for w in reversed(missing):
        h = derive(h, w[-1])
        cache[w] = h
    return h


def _path_bytes(v: tuple) -> bytes:
    return b"".join(struct.pack(">I", s) for s in v)


def _path_from(data: bytes) -> tuple:
    if len(data) % 4:
        raise GraphError("bad tree encoding")
    return tuple(struct.unpack(">I", data[i : i + 4])[0] for i in range(0, len(data), 4))


@dataclass(frozen=True)
class RegularTree(GraphSpec):
    d: int = 3
    family: ClassVar[str] = "tree"

    def __post_init__(self):
        if self.d < 3:
            raise GraphError(f"regular tree degree must be >= 3, got {self.d}")

    @property
    def max_degree(self):
        return self.d

    @property
    def root_fingerprint(self) -> int:
        return derive(0x7EE, self.d)

    def origin(self):
        return ()

    def validate(self, v):
        _tree_validate(self.d, v)

    def neighbors(self, v):
        self.validate(v)
        return _tree_neighbors(self.d, v)

    def neighbor(self, v, j):
        return _tree_neighbor(self.d, v, j)

    def degree(self, v):
        return self.d

    def distance(self, u, v):
        self.validate(u)
        self.validate(v)
        return _tree_distance(u, v)

    def radius(self, v):
        return len(v)

    def encode(self, v):
        return _path_bytes(v)

    def decode(self, data):
        v = _path_from(data)
        self.validate(v)
        return v

    def fingerprint(self, v):
        return _tree_fingerprint(self.root_fingerprint, v)

    def fingerprint_cached(self, v, cache):
        return _tree_fingerprint_cached(self.root_fingerprint, v, cache)

    def params(self):
        return {"d": self.d}


@dataclass(frozen=True)
class DecoratedTree(GraphSpec):
    """3-regular tree with a complete graph on ``n + 1`` vertices glued at
    every tree vertex; the tree vertex itself is clique index 0."""

    n: int = 1
    family: ClassVar[str] = "decorated"

    def __post_init__(self):
        if self.n < 1:
            raise GraphError(f"clique size parameter must be >= 1, got {self.n}")

    @property
    def max_degree(self):
        return 3 + self.n

    @property
    def root_fingerprint(self) -> int:
        return derive(0xDEC, self.n)

    def origin(self):
        return ((), 0)

    def validate(self, v):
        if not (isinstance(v, tuple) and len(v) == 2):
            raise GraphError(f"{v!r} is not a decorated-tree vertex")
        path, k = v
        _tree_validate(3, path)
        if not isinstance(k, int) or not 0 <= k <= self.n:
            raise GraphError(f"clique index {k!r} outside 0..{self.n}")

    def neighbors(self, v):
        self.validate(v)
        path, k = v
        if k == 0:
            return [(w, 0) for w in _tree_neighbors(3, path)] + [(path, i) for i in range(1, self.n + 1)]
        return [(path, i) for i in range(self.n + 1) if i != k]

    def neighbor(self, v, j):
        path, k = v
        if k == 0:
            tree_deg = 3
            if j < tree_deg:
                return (_tree_neighbor(3, path, j), 0)
            return (path, j - tree_deg + 1)
        return (path, j if j < k else j + 1)

    def degree(self, v):
        return 3 + self.n if v[1] == 0 else self.n

    def distance(self, u, v):
        self.validate(u)
        self.validate(v)
        (pu, ku), (pv, kv) = u, v
        if pu == pv:
            return 0 if ku == kv else 1
        return _tree_distance(pu, pv) + (ku != 0) + (kv != 0)

    def radius(self, v):
        return len(v[0]) + (v[1] != 0)

    def encode(self, v):
        return struct.pack(">I", v[1]) + _path_bytes(v[0])

    def decode(self, data):
        if len(data) < 4:
            raise GraphError("bad decorated encoding")
        v = (_path_from(data[4:]), struct.unpack(">I", data[:4])[0])
        self.validate(v)
        return v

    def fingerprint(self, v):
        return derive(_tree_fingerprint(self.root_fingerprint, v[0]), v[1])

    def fingerprint_cached(self, v, cache):
        return derive(_tree_fingerprint_cached(self.root_fingerprint, v[0], cache), v[1])

    def params(self):
        return {"n": self.n}


FAMILIES = {cls.family: cls for cls in (Lattice, Line, RegularTree, DecoratedTree)}


def graph_from_dict(data: dict) -> GraphSpec:
    data = dict(data)
    family = data.pop("family", None)
    if family not in FAMILIES:
        raise GraphError(f"unknown graph family {family!r}")
    try:
        return FAMILIES[family](**data)
    except TypeError as exc:
        raise GraphError(f"bad parameters for {family}: {exc}") from None


def neighbors(spec: GraphSpec, v) -> list:
    return spec.neighbors(v)


def graph_distance(spec: GraphSpec, u, v) -> int:
    """Exact graph distance (all supported families have closed forms)."""
    return spec.distance(u, v)
