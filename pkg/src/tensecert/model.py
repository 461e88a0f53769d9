"""Tensegrity frameworks: representation, parsing, validation and centering.

Node indices are 0-based in memory and 1-based in every file and report.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np


class FrameworkError(ValueError):
    """Raised for malformed framework input."""

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location


class MemberKind(str, enum.Enum):
    BAR = "bar"
    CABLE = "cable"
    STRUT = "strut"


@dataclass(frozen=True)
class Edge:
    i: int
    j: int
    kind: MemberKind

    @property
    def pair(self) -> tuple[int, int]:
        return (self.i, self.j)

    def label(self) -> str:
        return f"{{{self.i + 1},{self.j + 1}}}"


@dataclass(frozen=True, eq=False)
class TensegrityFramework:
    """A tensegrity graph with a configuration matrix ``P`` (n x r).

    ``offset`` is the translation removed by :func:`center_configuration`, so
    the original coordinates are ``P + offset``.
    """

    P: np.ndarray
    edges: tuple[Edge, ...]
    offset: np.ndarray | None = None
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        if P.ndim != 2:
            raise FrameworkError("configuration must be a 2-d array")
        P.setflags(write=False)
        object.__setattr__(self, "P", P)
        off = np.zeros(P.shape[1]) if self.offset is None else np.array(self.offset, dtype=float)
        off.setflags(write=False)
        object.__setattr__(self, "offset", off)
        edges = tuple(sorted((_canonical(e) for e in self.edges), key=lambda e: e.pair))
        index = {}
        for e in edges:
            if e.i == e.j:
                raise FrameworkError(f"self-loop at node {e.i + 1}")
            if not (0 <= e.i < P.shape[0] and 0 <= e.j < P.shape[0]):
                raise FrameworkError(f"edge {e.label()} references a node out of range 1..{P.shape[0]}")
            if e.pair in index:
                raise FrameworkError(f"duplicate edge {e.label()}")
            index[e.pair] = len(index)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "_index", index)

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def r(self) -> int:
        return self.P.shape[1]

    @property
    def rbar(self) -> int:
        """Dimension of the Gale space, ``n - r - 1``."""
        return self.n - self.r - 1

    @property
    def original_P(self) -> np.ndarray:
        return self.P + self.offset

    def edge_index(self, i: int, j: int) -> int | None:
        return self._index.get((min(i, j), max(i, j)))

    def edges_of_kind(self, kind: MemberKind) -> list[int]:
        return [k for k, e in enumerate(self.edges) if e.kind is kind]

    @property
    def is_bar_framework(self) -> bool:
        return all(e.kind is MemberKind.BAR for e in self.edges)

    def missing_edges(self) -> list[tuple[int, int]]:
        """Non-adjacent node pairs ``(i, j)`` with ``i < j``."""
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n) if (i, j) not in self._index]

    def neighbors(self, i: int) -> list[int]:
        return sorted(e.j if e.i == i else e.i for e in self.edges if i in e.pair)

    def with_kind(self, i: int, j: int, kind: MemberKind) -> "TensegrityFramework":
        """Copy with the member between ``i`` and ``j`` (0-based) relabelled."""
        k = self.edge_index(i, j)
        if k is None:
            raise FrameworkError(f"no edge {{{i + 1},{j + 1}}}")
        edges = list(self.edges)
        edges[k] = Edge(edges[k].i, edges[k].j, MemberKind(kind))
        return TensegrityFramework(self.P, tuple(edges), self.offset)

    def with_configuration(self, P) -> "TensegrityFramework":
        return TensegrityFramework(P, self.edges)

    def __iter__(self) -> Iterator[Edge]:
        return iter(self.edges)

    def to_dict(self, original: bool = True) -> dict:
        P = self.original_P if original else self.P
        return {
            "dimension": self.r,
            "nodes": [[float(v) for v in row] for row in P],
            "edges": [{"i": e.i + 1, "j": e.j + 1, "kind": e.kind.value} for e in self.edges],
        }


def _canonical(e: Edge) -> Edge:
    kind = MemberKind(e.kind)
    return Edge(min(e.i, e.j), max(e.i, e.j), kind) if (e.i > e.j or kind is not e.kind) else e


_TOP_KEYS = {"dimension", "nodes", "edges"}
_EDGE_KEYS = {"i", "j", "kind"}


def parse_framework(text: str) -> TensegrityFramework:
    """Parse the JSON framework format; coordinates are kept as given."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FrameworkError(f"syntax error: {exc.msg}", f"line {exc.lineno}, column {exc.colno}") from None
    return framework_from_dict(doc)


def framework_from_dict(doc) -> TensegrityFramework:
    if not isinstance(doc, dict):
        raise FrameworkError("top level must be a JSON object")
    for key in doc:
        if key not in _TOP_KEYS:
            raise FrameworkError(f"unknown key {key!r}")
    for key in sorted(_TOP_KEYS):
        if key not in doc:
            raise FrameworkError(f"missing key {key!r}")
    r = doc["dimension"]
    if not isinstance(r, int) or isinstance(r, bool) or r < 1:
        raise FrameworkError("dimension must be a positive integer")
    nodes = doc["nodes"]
    if not isinstance(nodes, list) or not nodes:
        raise FrameworkError("nodes must be a non-empty list")
    for k, row in enumerate(nodes):
        loc = f"nodes[{k}]"
        if not isinstance(row, list) or not all(_is_number(v) for v in row):
            raise FrameworkError("node coordinates must be a list of numbers", loc)
        if len(row) != r:
            raise FrameworkError(f"dimension mismatch: node {k + 1} has {len(row)} coordinates, expected {r}", loc)
    P = np.array(nodes, dtype=float)
    if not np.all(np.isfinite(P)):
        raise FrameworkError("node coordinates must be finite")
    raw = doc["edges"]
    if not isinstance(raw, list):
        raise FrameworkError("edges must be a list")
    n = len(nodes)
    edges = []
    seen = set()
    for k, item in enumerate(raw):
        loc = f"edges[{k}]"
        if not isinstance(item, dict):
            raise FrameworkError("edge must be an object", loc)
        for key in item:
            if key not in _EDGE_KEYS:
                raise FrameworkError(f"unknown key {key!r}", loc)
        if set(item) != _EDGE_KEYS:
            raise FrameworkError("edge needs keys 'i', 'j' and 'kind'", loc)
        i, j = item["i"], item["j"]
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (i, j)):
            raise FrameworkError("edge endpoints must be integers", loc)
        if not (1 <= i <= n and 1 <= j <= n):
            raise FrameworkError(f"node index out of range 1..{n}", loc)
        if i == j:
            raise FrameworkError(f"self-loop at node {i}", loc)
        try:
            kind = MemberKind(item["kind"])
        except ValueError:
            raise FrameworkError(f"unknown member kind {item['kind']!r}", loc) from None
        pair = (min(i, j), max(i, j))
        if pair in seen:
            raise FrameworkError(f"duplicate edge {{{pair[0]},{pair[1]}}}", loc)
        seen.add(pair)
        edges.append(Edge(pair[0] - 1, pair[1] - 1, kind))
    return TensegrityFramework(P, tuple(edges))


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def serialize_framework(fw: TensegrityFramework) -> str:
    return json.dumps(fw.to_dict(), indent=2)


def load_framework(path) -> TensegrityFramework:
    with open(path, encoding="utf-8") as fh:
        return parse_framework(fh.read())


def center_configuration(fw: TensegrityFramework) -> TensegrityFramework:
    """Translate so the centroid sits at the origin; the shift is kept in ``offset``."""
    c = fw.P.mean(axis=0)
    return TensegrityFramework(fw.P - c, fw.edges, fw.offset + c)


def affine_dimension(P, rtol: float = 1e-9) -> int:
    """Dimension of the affine hull of the rows of ``P``."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape[0] <= 1:
        return 0
    s = np.linalg.svd(P - P.mean(axis=0), compute_uv=False)
    scale = max(np.abs(P).max(), 1.0)
    return int(np.sum(s > max(rtol * scale, 1e-12)))


@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning"
    code: str
    message: str
    location: str | None = None


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "error"]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def raise_for_errors(self) -> None:
        if self.errors:
            raise FrameworkError("; ".join(f.message for f in self.errors))


def is_connected(fw: TensegrityFramework) -> bool:
    seen = {0}
    stack = [0]
    adj = {i: [] for i in range(fw.n)}
    for e in fw.edges:
        adj[e.i].append(e.j)
        adj[e.j].append(e.i)
    while stack:
        for j in adj[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == fw.n


def validate(fw: TensegrityFramework, rtol: float = 1e-9) -> ValidationReport:
    report = ValidationReport()
    if not is_connected(fw):
        report.findings.append(Finding("error", "disconnected", "graph is disconnected"))
    dim = affine_dimension(fw.P, rtol)
    if dim != fw.r:
        report.findings.append(
            Finding("error", "affine-dimension", f"affine dimension {dim} ≠ r={fw.r}")
        )
    if fw.n < fw.r + 2:
        report.findings.append(
            Finding("error", "too-few-nodes", f"n={fw.n} < r+2={fw.r + 2}; certification needs n ≥ r+2")
        )
    scale = max(np.abs(fw.P).max(), 1.0)
    for i in range(fw.n):
        for j in range(i + 1, fw.n):
            if np.linalg.norm(fw.P[i] - fw.P[j]) <= rtol * scale:
                report.findings.append(
                    Finding("warning", "coincident-points", f"nodes {i + 1} and {j + 1} coincide", f"node {i + 1}")
                )
    return report
