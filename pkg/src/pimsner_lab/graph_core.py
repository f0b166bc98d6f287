"""Finite directed graphs, 0/1 transition matrices and Perron-Frobenius data.

Conventions follow the bimodule structure ``(a f b)(g) = a(r(g)) f(g) b(s(g))``:
the adjacency entry ``A[v, w]`` counts edges with range ``v`` and source ``w``,
and a path ``g_1 g_2 ... g_l`` is composable when ``s(g_i) = r(g_{i+1})``.

Paths are stored as tuples ``(v, g_1, ..., g_l)`` of internal indices where
``v`` is the range vertex of the path. The empty path at ``v`` is ``(v,)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path as FilePath
from typing import Any, Sequence

import numpy as np
import sympy


class ValidationError(ValueError):
    """Raised when graph or matrix input violates a structural invariant."""


class PreconditionError(RuntimeError):
    """A mathematical precondition (primitivity, Assumption 1, ...) is not met."""


@dataclass(frozen=True)
class Edge:
    id: Any
    r: int
    s: int


@dataclass(frozen=True)
class Graph:
    """A validated finite directed graph.

    ``vertices`` holds the user-facing vertex labels, ``edges`` the edges sorted
    by id; ``r`` and ``s`` of each :class:`Edge` are vertex indices.
    """

    vertices: tuple
    edges: tuple[Edge, ...]
    name: str = "graph"

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def adjacency(self) -> np.ndarray:
        m = np.zeros((self.n_vertices, self.n_vertices), dtype=object)
        m[:] = 0
        for e in self.edges:
            m[e.r, e.s] += 1
        return m

    def adjacency_int(self) -> list[list[int]]:
        return [[int(x) for x in row] for row in self.adjacency]

    def edges_into(self, v: int) -> list[int]:
        return [i for i, e in enumerate(self.edges) if e.r == v]

    def edges_out_of(self, v: int) -> list[int]:
        return [i for i, e in enumerate(self.edges) if e.s == v]


@dataclass(frozen=True)
class SFTMatrix:
    """0/1 transition matrix of a one-sided subshift; symbols are ``1..N``."""

    entries: tuple[tuple[int, ...], ...]
    name: str = "sft"

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def alphabet(self) -> tuple[int, ...]:
        return tuple(range(1, self.size + 1))

    def allowed(self, a: int, b: int) -> bool:
        return self.entries[a - 1][b - 1] == 1

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)


@dataclass(frozen=True)
class PerronData:
    eigenvalue: Any
    vector: tuple
    exact: bool
    normalization: str = "min entry = 1"
    tolerance: float = 0.0
    notes: str = ""


# -- construction and validation ----------------------------------------------

def _sort_key(x):
    return (0, x, "") if isinstance(x, (int, np.integer)) else (1, 0, str(x))


def graph_from_edges(vertices: Sequence, edges: Sequence[dict], name: str = "graph") -> Graph:
    vertices = list(vertices)
    index = {v: i for i, v in enumerate(vertices)}
    if len(index) != len(vertices):
        raise ValidationError("duplicate vertex labels")
    seen = set()
    built = []
    for raw in edges:
        try:
            eid, r, s = raw["id"], raw["r"], raw["s"]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"edge record missing field: {exc}") from None
        if r not in index or s not in index:
            raise ValidationError(f"dangling edge endpoint on edge {eid!r}")
        if eid in seen:
            raise ValidationError(f"duplicate edge id {eid!r}")
        seen.add(eid)
        built.append(Edge(eid, index[r], index[s]))
    built.sort(key=lambda e: _sort_key(e.id))
    return validate(Graph(tuple(vertices), tuple(built), name))


def graph_from_adjacency(matrix: Sequence[Sequence[int]], name: str = "graph") -> Graph:
    """Edge-count adjacency: ``matrix[v][w]`` edges with range v, source w."""
    m = _square_int_matrix(matrix)
    n = len(m)
    edges = []
    eid = 1
    for v in range(n):
        for w in range(n):
            if m[v][w] < 0:
                raise ValidationError("adjacency entries must be nonnegative")
            for _ in range(m[v][w]):
                edges.append({"id": eid, "r": v, "s": w})
                eid += 1
    return graph_from_edges(list(range(n)), edges, name)


def sft_from_matrix(matrix: Sequence[Sequence[int]], name: str = "sft") -> SFTMatrix:
    m = _square_int_matrix(matrix)
    if any(x not in (0, 1) for row in m for x in row):
        raise ValidationError("SFT matrix entries must be 0 or 1")
    return validate(SFTMatrix(tuple(tuple(row) for row in m), name))


def _square_int_matrix(matrix) -> list[list[int]]:
    rows = [list(r) for r in matrix]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise ValidationError("non-square matrix")
    try:
        return [[int(x) for x in r] for r in rows]
    except (TypeError, ValueError):
        raise ValidationError("matrix entries must be integers") from None


def validate(obj):
    """Check the structural invariants of a :class:`Graph` or :class:`SFTMatrix`."""
    if isinstance(obj, Graph):
        if not obj.edges:
            raise ValidationError("isolated vertices: graph has no edges")
        touched = {e.r for e in obj.edges} | {e.s for e in obj.edges}
        lonely = [obj.vertices[v] for v in range(obj.n_vertices) if v not in touched]
        if lonely:
            raise ValidationError(f"isolated vertices: {lonely}")
        return obj
    if isinstance(obj, SFTMatrix):
        a = obj.as_array()
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError("non-square matrix")
        if (a.sum(axis=1) == 0).any():
            raise ValidationError("zero row in SFT matrix (stranded symbol)")
        if (a.sum(axis=0) == 0).any():
            raise ValidationError("zero column in SFT matrix (stranded symbol)")
        return obj
    raise TypeError(f"cannot validate {type(obj).__name__}")


def load_input(path: str | FilePath, kind: str = "graph"):
    """Read the JSON input format; ``kind`` selects graph or sft interpretation."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc}") from None
    name = FilePath(path).stem
    return parse_input(data, kind, name)


def parse_input(data: dict, kind: str = "graph", name: str = "input"):
    if not isinstance(data, dict):
        raise ValidationError("top-level JSON value must be an object")
    if kind == "sft":
        if "matrix" not in data:
            raise ValidationError("sft input needs a 'matrix' field")
        return sft_from_matrix(data["matrix"], name)
    if "matrix" in data:
        return graph_from_adjacency(data["matrix"], name)
    if "vertices" in data and "edges" in data:
        return graph_from_edges(data["vertices"], data["edges"], name)
    raise ValidationError("graph input needs 'matrix' or 'vertices'+'edges'")


# -- builtin examples ----------------------------------------------------------

def cuntz_graph(n: int) -> Graph:
    """One vertex with ``n`` loops; its graph algebra is O_n."""
    return graph_from_edges([0], [{"id": i, "r": 0, "s": 0} for i in range(1, n + 1)], f"O{n}")


def fibonacci_graph() -> Graph:
    return graph_from_adjacency([[1, 1], [1, 0]], "fibonacci")


def cycle_graph(n: int = 3) -> Graph:
    """Directed n-cycle with r(g_x) = x, s(g_x) = x+1; the SMEB test case."""
    return graph_from_edges(
        list(range(n)), [{"id": x + 1, "r": x, "s": (x + 1) % n} for x in range(n)], f"cycle{n}"
    )


def full_shift(n: int) -> SFTMatrix:
    return sft_from_matrix([[1] * n for _ in range(n)], f"full{n}")


def golden_mean() -> SFTMatrix:
    return sft_from_matrix([[1, 1], [1, 0]], "golden")


# -- paths and words -----------------------------------------------------------

def path_source(g: Graph, p: tuple) -> int:
    return g.edges[p[-1]].s if len(p) > 1 else p[0]


def enumerate_paths(g: Graph, length: int) -> list[tuple]:
    """All composable paths of the given length, lexicographic in edge order.

    Length 0 gives one empty path per vertex.
    """
    if length < 0:
        raise ValueError("path length must be nonnegative")
    if length == 0:
        return [(v,) for v in range(g.n_vertices)]
    paths = [(e.r, i) for i, e in enumerate(g.edges)]
    for _ in range(length - 1):
        paths = [p + (i,) for p in paths for i in range(len(g.edges)) if g.edges[i].r == g.edges[p[-1]].s]
    return sorted(paths, key=lambda p: p[1:])


def enumerate_words(m: SFTMatrix, length: int) -> list[tuple]:
    """Admissible words of the given length in lexicographic order."""
    if length < 0:
        raise ValueError("word length must be nonnegative")
    words: list[tuple] = [()]
    for _ in range(length):
        words = [w + (b,) for w in words for b in m.alphabet if not w or m.allowed(w[-1], b)]
    return words


def path_label(g: Graph, p: tuple) -> list:
    return [g.edges[i].id for i in p[1:]]


# -- primitivity and Perron-Frobenius -----------------------------------------

def is_primitive(m) -> bool:
    """True iff some power up to the Wielandt bound ``(n-1)^2 + 1`` is positive."""
    if isinstance(m, Graph):
        m = m.adjacency
    elif isinstance(m, SFTMatrix):
        m = m.as_array()
    a = (np.asarray(m, dtype=object) != 0).astype(np.int64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError("non-square matrix")
    n = a.shape[0]
    power = a.copy()
    for _ in range((n - 1) ** 2 + 1):
        if (power > 0).all():
            return True
        power = ((power @ a) > 0).astype(np.int64)
    return False


def row_sums(m, power: int) -> list[int]:
    """Row sums of ``m**power`` in exact integer arithmetic."""
    a = sympy.Matrix(m)
    return [int(x) for x in (a**power) * sympy.ones(a.shape[0], 1)]


def constant_row_degree(g: Graph):
    """Common row sum of the adjacency matrix, or None when rows differ."""
    sums = {sum(row) for row in g.adjacency_int()}
    return sums.pop() if len(sums) == 1 else None


def perron_data(g: Graph, mode: str = "exact", tol: float = 1e-12) -> PerronData:
    """Perron eigenvalue and positive right eigenvector of the adjacency matrix.

    Exact mode returns rationals when the Perron root is rational and otherwise
    falls back to floating point (recorded in ``notes``).
    """
    adj = g.adjacency_int()
    if not is_primitive(adj):
        raise PreconditionError("Perron limit not guaranteed; Assumption 1 unverified")
    if mode == "exact":
        a = sympy.Matrix(adj)
        lam = sympy.Symbol("lam")
        roots = sympy.Poly(a.charpoly(lam).as_expr(), lam).ground_roots()
        rational = [r for r in roots if r.is_rational and r > 0]
        if rational:
            top = max(rational)
            approx_top = max(abs(complex(r)) for r in sympy.Poly(a.charpoly(lam).as_expr(), lam).nroots())
            if abs(float(top) - approx_top) < 1e-9:
                null = (a - top * sympy.eye(a.shape[0])).nullspace()
                h = null[0]
                h = h / min(abs(x) for x in h)
                h = [Fraction(int(sympy.fraction(x)[0]), int(sympy.fraction(x)[1])) for x in h]
                if h[0] < 0:
                    h = [-x for x in h]
                return PerronData(Fraction(int(top)), tuple(h), True)
        note = "Perron root irrational; floating point fallback"
    elif mode == "float":
        note = ""
    else:
        raise ValueError(f"unknown mode {mode!r}")
    a = np.array(adj, dtype=float)
    w, v = np.linalg.eig(a)
    i = int(np.argmax(w.real))
    lam_f = float(w[i].real)
    h = np.abs(v[:, i].real)
    h = h / h.min()
    return PerronData(lam_f, tuple(float(x) for x in h), False, tolerance=tol, notes=note)


def power_iteration(adj, iterations: int = 2000, tol: float = 1e-14) -> tuple[float, np.ndarray]:
    """Independent Perron estimate used as a test oracle."""
    a = np.array(adj, dtype=float)
    h = np.ones(a.shape[0])
    lam = 0.0
    for _ in range(iterations):
        nxt = a @ h
        new_lam = nxt.max() / h.max()
        nxt = nxt / nxt.min()
        if np.abs(nxt - h).max() < tol and abs(new_lam - lam) < tol:
            h, lam = nxt, new_lam
            break
        h, lam = nxt, new_lam
    return float(lam), h


@dataclass
class AssumptionOneCertificate:
    """How the ratio limit defining q is known to exist."""

    method: str  # "cuntz-krieger" | "regular" | "perron"
    eigenvalue: Any = 1
    vector: tuple = field(default_factory=tuple)
    exact: bool = True


def certify_assumption_one(g: Graph, mode: str = "exact") -> AssumptionOneCertificate:
    """Regular graphs give exact limits directly; otherwise require primitivity."""
    d = constant_row_degree(g)
    if d is not None and d > 0:
        return AssumptionOneCertificate("regular", Fraction(d), tuple(Fraction(1) for _ in g.vertices), True)
    pd = perron_data(g, mode)
    return AssumptionOneCertificate("perron", pd.eigenvalue, pd.vector, pd.exact)
