"""Coefficient algebras, the bimodule E and its tensor powers.

Two backends share one interface:

* :class:`GraphBimodule` -- ``A = C(G^0)`` and ``E`` spanned by the edges.
  Paths are tuples ``(v, g_1, ..., g_l)`` (see :mod:`graph_core`).
* :class:`ShiftBimodule` -- ``A = C(Omega_A)`` for a 0/1 matrix, with
  locally constant functions indexed by admissible words of a fixed depth.
  Paths are plain words; the word ``w`` stands for the indicator of its
  cylinder, viewed in ``E^{(x)|w|}``.

Both expose the combinatorics of generator products ``S_mu S_nu^*`` that
:mod:`xi_module` builds on: :meth:`star_middle` rewrites ``S_nu^* S_alpha``,
:meth:`concat` composes paths and :meth:`extensions` implements the Cuntz
relation used to refine symbols to a common length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable

import numpy as np

from .graph_core import (
    Graph,
    PreconditionError,
    SFTMatrix,
    ValidationError,
    certify_assumption_one,
    enumerate_paths,
    enumerate_words,
    path_source,
    row_sums,
    validate,
)

DEFAULT_TOL = 1e-9


def conj(x):
    return x.conjugate() if hasattr(x, "conjugate") else x


def is_zero(x, tol: float = 0.0) -> bool:
    if isinstance(x, (int, Fraction)):
        return x == 0
    return abs(x) <= tol


# -- coefficient algebra --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AlgElement:
    """An element of the coefficient algebra, stored densely over ``backend.points(depth)``."""

    backend: Any
    depth: int
    values: tuple

    def refine(self, depth: int) -> "AlgElement":
        if depth == self.depth:
            return self
        if depth < self.depth:
            raise ValueError("cannot coarsen an algebra element")
        return self.backend.refine_values(self, depth)

    def _aligned(self, other: "AlgElement"):
        if other.backend is not self.backend:
            raise ValueError("algebra elements from different backends")
        d = max(self.depth, other.depth)
        return self.refine(d), other.refine(d), d

    def _zip(self, other, op) -> "AlgElement":
        if not isinstance(other, AlgElement):
            return AlgElement(self.backend, self.depth, tuple(op(a, other) for a in self.values))
        a, b, d = self._aligned(other)
        return AlgElement(self.backend, d, tuple(op(x, y) for x, y in zip(a.values, b.values)))

    def __add__(self, other):
        return self._zip(other, lambda x, y: x + y)

    def __sub__(self, other):
        return self._zip(other, lambda x, y: x - y)

    def __mul__(self, other):
        return self._zip(other, lambda x, y: x * y)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def conj(self) -> "AlgElement":
        return AlgElement(self.backend, self.depth, tuple(conj(x) for x in self.values))

    def inverse(self) -> "AlgElement":
        if any(is_zero(x) for x in self.values):
            raise ZeroDivisionError("algebra element is not invertible")
        return AlgElement(self.backend, self.depth, tuple(1 / x for x in self.values))

    def at(self, point) -> Any:
        """Value at a vertex (graph) or at any word at least ``depth`` long (shift)."""
        return self.backend.evaluate(self, point)

    def max_abs(self) -> float:
        return max((abs(complex(x)) for x in self.values), default=0.0)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(is_zero(x, tol) for x in self.values)

    def equals(self, other, tol: float = 0.0) -> bool:
        return (self - other).is_zero(tol)

    def is_positive(self, tol: float = 0.0) -> bool:
        return all(complex(x).real >= -tol and abs(complex(x).imag) <= tol for x in self.values)

    def as_dict(self) -> dict:
        return dict(zip(self.backend.points(self.depth), self.values))

    def __repr__(self) -> str:
        return f"AlgElement(depth={self.depth}, {self.as_dict()})"


# -- backends ------------------------------------------------------------------

class _Backend:
    kind = "abstract"

    def __init__(self, exact: bool = True, tol: float = DEFAULT_TOL):
        self.exact = exact
        self.tol = tol
        self._cache: dict = {}

    def scalar(self, x):
        if self.exact and isinstance(x, (int, Fraction)):
            return Fraction(x)
        return float(x) if not isinstance(x, complex) else x

    @property
    def zero_tol(self) -> float:
        return 0.0 if self.exact else self.tol

    def const(self, c) -> AlgElement:
        return AlgElement(self, 0, tuple(self.scalar(c) for _ in self.points(0)))

    def one(self) -> AlgElement:
        return self.const(1)

    def zero(self) -> AlgElement:
        return self.const(0)

    def paths(self, length: int) -> list:
        key = ("paths", length)
        if key not in self._cache:
            self._cache[key] = self._paths(length)
        return self._cache[key]

    def path_index(self, length: int) -> dict:
        key = ("pindex", length)
        if key not in self._cache:
            self._cache[key] = {p: i for i, p in enumerate(self.paths(length))}
        return self._cache[key]


class GraphBimodule(_Backend):
    """The bimodule of a finite graph over ``C(G^0)``."""

    kind = "graph"

    def __init__(self, graph: Graph, exact: bool = True, tol: float = DEFAULT_TOL):
        super().__init__(exact, tol)
        self.graph = validate(graph)
        self.name = graph.name
        self._cert = None

    # algebra
    def points(self, depth: int = 0) -> list:
        return list(range(self.graph.n_vertices))

    def refine_values(self, a: AlgElement, depth: int) -> AlgElement:
        return AlgElement(self, depth, a.values)

    def evaluate(self, a: AlgElement, point) -> Any:
        return a.values[point]

    def delta(self, v: int, c=1) -> AlgElement:
        return AlgElement(self, 0, tuple(self.scalar(c if w == v else 0) for w in self.points()))

    # paths
    def _paths(self, length: int) -> list:
        return enumerate_paths(self.graph, length)

    @staticmethod
    def length(p: tuple) -> int:
        return len(p) - 1

    def empty(self, p: tuple) -> tuple:
        """The empty path at the source of ``p``."""
        return (self.source(p),)

    def source(self, p: tuple) -> int:
        return path_source(self.graph, p)

    @staticmethod
    def range_(p: tuple) -> int:
        return p[0]

    def concat(self, p: tuple, x: tuple):
        if self.source(p) != x[0]:
            return None
        return p + x[1:]

    def split(self, p: tuple, i: int) -> tuple[tuple, tuple]:
        head = p[: i + 1]
        return head, (self.source(head),) + p[i + 1 :]

    def star_middle(self, nu: tuple, alpha: tuple) -> list:
        """``S_nu^* S_alpha`` as a list of ``(coef, x, y)`` meaning ``coef S_x S_y^*``."""
        if nu[0] != alpha[0]:
            return []
        ln, la = len(nu) - 1, len(alpha) - 1
        if ln <= la:
            if alpha[1 : ln + 1] != nu[1:]:
                return []
            eta = (self.source(nu),) + alpha[ln + 1 :]
            return [(1, eta, self.empty(eta))]
        if nu[1 : la + 1] != alpha[1:]:
            return []
        eta = (self.source(alpha),) + nu[la + 1 :]
        return [(1, self.empty(eta), eta)]

    def valid_symbol(self, mu: tuple, nu: tuple) -> bool:
        return self.source(mu) == self.source(nu)

    def extensions(self, mu: tuple, nu: tuple) -> list:
        v = self.source(mu)
        into = self.graph.edges_into(v)
        if not into:
            raise ValidationError(f"vertex {self.graph.vertices[v]} receives no edge; symbol cannot be refined")
        return [(mu + (g,), nu + (g,)) for g in into]

    def sandwich(self, mu: tuple, a: AlgElement, nu: tuple) -> list:
        """``S_mu a S_nu^*`` as ``[(coef, mu', nu')]``."""
        c = a.values[self.source(mu)]
        return [(c, mu, nu)] if not is_zero(c) else []

    def right_act_symbol(self, mu: tuple, nu: tuple, a: AlgElement) -> list:
        c = a.values[nu[0]]
        return [(c, mu, nu)] if not is_zero(c) else []

    def symbol_points(self, mu: tuple, nu: tuple, depth: int) -> list:
        return [nu[0]]

    def localization_points(self, depth: int) -> list:
        return self.points()

    # Perron data and q
    @property
    def zero_tol(self) -> float:
        try:
            self.certificate
        except PreconditionError:
            pass
        return 0.0 if self.exact else self.tol

    @property
    def certificate(self):
        if self._cert is None:
            self._cert = certify_assumption_one(self.graph, "exact" if self.exact else "float")
            if not self._cert.exact:
                self.exact = False
        return self._cert

    def q_scalar(self, p: tuple):
        cert = self.certificate
        lam, h = cert.eigenvalue, cert.vector
        return self.scalar(h[self.source(p)] / (lam ** self.length(p) * h[p[0]]))

    def phi_monomial(self, mu: tuple, nu: tuple) -> AlgElement:
        if mu != nu:
            return self.zero()
        return self.delta(mu[0], self.q_scalar(mu))

    def left_inner_basis(self, p: tuple, x: tuple) -> AlgElement:
        """``_A(e_p | e_x)`` for basis paths."""
        return self.delta(p[0]) if p == x else self.zero()

    def right_inner_basis(self, p: tuple, x: tuple) -> AlgElement:
        return self.delta(self.source(p)) if p == x else self.zero()

    def beta_exact(self, length: int) -> AlgElement:
        return AlgElement(self, 0, tuple(self.scalar(x) for x in row_sums(self.graph.adjacency_int(), length)))

    def label(self, p: tuple) -> str:
        if len(p) == 1:
            return f"@{self.graph.vertices[p[0]]}"
        return ".".join(str(self.graph.edges[g].id) for g in p[1:])


class ShiftBimodule(_Backend):
    """The Cuntz-Krieger bimodule over ``C(Omega_A)`` for a 0/1 matrix."""

    kind = "sft"

    def __init__(self, matrix: SFTMatrix, exact: bool = True, tol: float = DEFAULT_TOL):
        super().__init__(exact, tol)
        self.matrix = validate(matrix)
        self.name = matrix.name
        self.alphabet = matrix.alphabet

    # algebra
    def points(self, depth: int = 0) -> list:
        return self.paths(depth)

    def refine_values(self, a: AlgElement, depth: int) -> AlgElement:
        idx = self.path_index(a.depth)
        return AlgElement(self, depth, tuple(a.values[idx[w[: a.depth]]] for w in self.points(depth)))

    def evaluate(self, a: AlgElement, point) -> Any:
        return a.values[self.path_index(a.depth)[tuple(point)[: a.depth]]]

    def cylinder(self, w: tuple, c=1) -> AlgElement:
        w = tuple(w)
        return AlgElement(self, len(w), tuple(self.scalar(c if x == w else 0) for x in self.points(len(w))))

    def transfer(self, f: AlgElement, power: int = 1) -> AlgElement:
        """``L^power f (z) = sum over admissible u, |u| = power, of f(u z)``."""
        f = f.refine(max(f.depth, power + 1))
        out_depth = f.depth - power
        vals = dict.fromkeys(self.points(out_depth), 0)
        for w, x in zip(self.points(f.depth), f.values):
            vals[w[power:]] += x
        return AlgElement(self, out_depth, tuple(self.scalar(0) + vals[z] for z in self.points(out_depth)))

    # paths
    def _paths(self, length: int) -> list:
        return enumerate_words(self.matrix, length)

    @staticmethod
    def length(p: tuple) -> int:
        return len(p)

    def empty(self, p: tuple) -> tuple:
        return ()

    def concat(self, p: tuple, x: tuple):
        if p and x and not self.matrix.allowed(p[-1], x[0]):
            return None
        return p + x

    @staticmethod
    def split(p: tuple, i: int) -> tuple[tuple, tuple]:
        return p[:i], p[i:]

    def star_middle(self, nu: tuple, alpha: tuple) -> list:
        if not nu:
            return [(1, alpha, ())]
        if not alpha:
            return [(1, (), nu)]
        k = min(len(nu), len(alpha))
        if nu[:k] != alpha[:k]:
            return []
        if len(nu) < len(alpha):
            return [(1, alpha[len(nu) :], ())]
        if len(nu) > len(alpha):
            return [(1, (), nu[len(alpha) :])]
        return [(1, (t,), (t,)) for t in self.alphabet if self.matrix.allowed(nu[-1], t)]

    def valid_symbol(self, mu: tuple, nu: tuple) -> bool:
        if not mu or not nu:
            return True
        return any(self.matrix.allowed(mu[-1], t) and self.matrix.allowed(nu[-1], t) for t in self.alphabet)

    def extensions(self, mu: tuple, nu: tuple) -> list:
        ok = self.matrix.allowed
        return [
            (mu + (t,), nu + (t,))
            for t in self.alphabet
            if (not mu or ok(mu[-1], t)) and (not nu or ok(nu[-1], t))
        ]

    def sandwich(self, mu: tuple, a: AlgElement, nu: tuple) -> list:
        if a.depth == 0:
            c = a.values[0]
            return [(c, mu, nu)] if not is_zero(c) else []
        out = []
        for w, c in zip(self.points(a.depth), a.values):
            if is_zero(c):
                continue
            m, n = self.concat(mu, w), self.concat(nu, w)
            if m is not None and n is not None:
                out.append((c, m, n))
        return out

    def right_act_symbol(self, mu: tuple, nu: tuple, a: AlgElement) -> list:
        todo, out = [(mu, nu)], []
        while todo:
            m, n = todo.pop()
            if len(n) < a.depth:
                todo.extend(self.extensions(m, n))
                continue
            c = self.evaluate(a, n)
            if not is_zero(c):
                out.append((c, m, n))
        return sorted(out, key=lambda t: (t[1], t[2]))

    def symbol_points(self, mu: tuple, nu: tuple, depth: int) -> list:
        """Localization points (words of length ``depth``) where ``W_{mu,nu}`` can be nonzero."""
        ok = self.matrix.allowed
        return [
            x for x in self.points(depth)
            if x[: len(nu)] == nu and (not mu or len(x) <= len(nu) or ok(mu[-1], x[len(nu)]))
        ]

    def localization_points(self, depth: int) -> list:
        return self.points(depth)

    # q is the identity for Cuntz-Krieger algebras
    def q_scalar(self, p: tuple):
        return self.scalar(1)

    def phi_monomial(self, mu: tuple, nu: tuple) -> AlgElement:
        if mu != nu:
            return self.zero()
        return self.cylinder(mu) if mu else self.one()

    def left_inner_basis(self, p: tuple, x: tuple) -> AlgElement:
        return self.cylinder(p) if p == x else self.zero()

    def right_inner_basis(self, p: tuple, x: tuple) -> AlgElement:
        if p != x:
            return self.zero()
        return self.transfer(self.cylinder(p), len(p)) if p else self.one()

    def beta_exact(self, length: int) -> AlgElement:
        # the cylinders of a fixed length partition Omega_A
        return self.one()

    @staticmethod
    def label(p: tuple) -> str:
        return "".join(map(str, p)) if p else "()"


def make_backend(obj, exact: bool = True, tol: float = DEFAULT_TOL):
    if isinstance(obj, _Backend):
        return obj
    if isinstance(obj, Graph):
        return GraphBimodule(obj, exact, tol)
    if isinstance(obj, SFTMatrix):
        return ShiftBimodule(obj, exact, tol)
    raise TypeError(f"no bimodule backend for {type(obj).__name__}")


# -- elements of E^{(x)l} ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PathVector:
    """An element of ``E^{(x)degree}``.

    Graph backend: coefficients on paths of length ``degree``. Shift backend:
    a locally constant function, coefficients on words of length ``depth``.
    """

    backend: Any
    degree: int
    coeffs: dict
    depth: int = -1

    def __post_init__(self):
        if self.depth < 0:
            object.__setattr__(self, "depth", self.degree if self.backend.kind == "graph" else 0)
        object.__setattr__(self, "coeffs", {p: c for p, c in self.coeffs.items() if not is_zero(c)})

    def refine(self, depth: int) -> "PathVector":
        if self.backend.kind == "graph" or depth <= self.depth:
            return self
        out = {}
        for w in self.backend.paths(depth):
            c = self.coeffs.get(w[: self.depth])
            if c is not None:
                out[w] = c
        return PathVector(self.backend, self.degree, out, depth)

    def _aligned(self, other: "PathVector"):
        if other.degree != self.degree:
            raise ValueError(f"degree mismatch: {self.degree} vs {other.degree}")
        d = max(self.depth, other.depth)
        return self.refine(d), other.refine(d), d

    def __add__(self, other: "PathVector") -> "PathVector":
        a, b, d = self._aligned(other)
        out = dict(a.coeffs)
        for p, c in b.coeffs.items():
            out[p] = out.get(p, 0) + c
        return PathVector(self.backend, self.degree, out, d)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c) -> "PathVector":
        return PathVector(self.backend, self.degree, {p: c * x for p, x in self.coeffs.items()}, self.depth)

    def equals(self, other: "PathVector", tol: float = 0.0) -> bool:
        diff = self - other
        return all(is_zero(c, tol) for c in diff.coeffs.values())

    def norm(self) -> float:
        return math.sqrt(right_inner(self, self).max_abs())


def basis_vector(backend, p: tuple, c=1) -> PathVector:
    n = backend.length(p)
    return PathVector(backend, n, {p: backend.scalar(c)}, n)


def constant_vector(backend, degree: int, c=1) -> PathVector:
    """The constant function ``c`` in ``E^{(x)degree} = C(Omega_A)`` (shift backend)."""
    if backend.kind != "sft":
        raise ValueError("constant vectors exist only for the shift backend")
    return PathVector(backend, degree, {(): backend.scalar(c)}, 0)


def left_act(a: AlgElement, x: PathVector) -> PathVector:
    b = x.backend
    if b.kind == "graph":
        return PathVector(b, x.degree, {p: a.values[p[0]] * c for p, c in x.coeffs.items()})
    y = x.refine(a.depth)
    return PathVector(b, x.degree, {w: b.evaluate(a, w) * c for w, c in y.coeffs.items()}, y.depth)


def right_act(x: PathVector, a: AlgElement) -> PathVector:
    b = x.backend
    if b.kind == "graph":
        return PathVector(b, x.degree, {p: c * a.values[b.source(p)] for p, c in x.coeffs.items()})
    y = x.refine(x.degree + a.depth)
    return PathVector(b, x.degree, {w: c * b.evaluate(a, w[x.degree :]) for w, c in y.coeffs.items()}, y.depth)


def tensor(x: PathVector, y: PathVector) -> PathVector:
    b = x.backend
    out: dict = {}
    if b.kind == "graph":
        for p, c in x.coeffs.items():
            for q, d in y.coeffs.items():
                pq = b.concat(p, q)
                if pq is not None:
                    out[pq] = out.get(pq, 0) + c * d
        return PathVector(b, x.degree + y.degree, out)
    depth = max(x.depth, x.degree + y.depth)
    xr = x.refine(depth)
    for w, c in xr.coeffs.items():
        d = y.coeffs.get(w[x.degree : x.degree + y.depth])
        if d is not None:
            out[w] = c * d
    return PathVector(b, x.degree + y.degree, out, depth)


def _as_function(x: PathVector, y: PathVector, f: Callable) -> AlgElement:
    xa, ya, d = x._aligned(y)
    b = x.backend
    vals = tuple(b.scalar(0) + f(xa.coeffs.get(w, 0), ya.coeffs.get(w, 0)) for w in b.points(d))
    return AlgElement(b, d, vals)


def right_inner(x: PathVector, y: PathVector) -> AlgElement:
    """``(x|y)_A``: conjugate linear in ``x``."""
    b = x.backend
    if x.degree != y.degree:
        raise ValueError(f"degree mismatch: {x.degree} vs {y.degree}")
    if b.kind == "graph":
        vals = [b.scalar(0)] * len(b.points())
        for p, c in x.coeffs.items():
            d = y.coeffs.get(p)
            if d is not None:
                vals[b.source(p)] += conj(c) * d
        return AlgElement(b, 0, tuple(vals))
    return b.transfer(_as_function(x, y, lambda s, t: conj(s) * t), x.degree)


def left_inner(x: PathVector, y: PathVector) -> AlgElement:
    """``_A(x|y)``: conjugate linear in ``y``."""
    b = x.backend
    if x.degree != y.degree:
        raise ValueError(f"degree mismatch: {x.degree} vs {y.degree}")
    if b.kind == "graph":
        vals = [b.scalar(0)] * len(b.points())
        for p, c in x.coeffs.items():
            d = y.coeffs.get(p)
            if d is not None:
                vals[p[0]] += c * conj(d)
        return AlgElement(b, 0, tuple(vals))
    return _as_function(x, y, lambda s, t: s * conj(t))


def theta(x: PathVector, y: PathVector, side: str = "right") -> Callable[[PathVector], PathVector]:
    """Rank-one operator: ``z -> x (y|z)_A`` (right) or ``z -> _A(z|y) x`` (left)."""
    if side == "right":
        return lambda z: right_act(x, right_inner(y, z))
    return lambda z: left_act(left_inner(z, y), x)


# -- frames -----------------------------------------------------------------------

ROTATION = ((Fraction(3, 5), Fraction(4, 5)), (Fraction(-4, 5), Fraction(3, 5)))


@dataclass(frozen=True)
class Frame:
    side: str
    vectors: tuple
    name: str = "canonical"

    @property
    def degree(self) -> int:
        return self.vectors[0].degree


def _embedded_rotation(size: int, rotation=ROTATION):
    u = [[Fraction(int(i == j)) for j in range(size)] for i in range(size)]
    if size >= 2:
        for i in range(2):
            for j in range(2):
                u[i][j] = rotation[i][j]
    return u


def degree_one_frame(backend, side: str = "right", rotated: bool = False) -> Frame:
    b = backend
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if b.kind == "graph":
        groups: dict = {}
        for p in b.paths(1):
            e = b.graph.edges[p[1]]
            groups.setdefault((e.r, e.s), []).append(p)
        vecs = []
        for members in groups.values():
            u = _embedded_rotation(len(members)) if rotated else _embedded_rotation(len(members), ((1, 0), (0, 1)))
            for row in u:
                vecs.append(PathVector(b, 1, {p: b.scalar(c) for p, c in zip(members, row)}))
        return Frame(side, tuple(vecs), "rotated" if rotated else "canonical")
    if not rotated:
        if side == "left":
            return Frame(side, (constant_vector(b, 1),), "canonical")
        return Frame(side, tuple(basis_vector(b, (t,)) for t in b.alphabet), "canonical")
    u = _embedded_rotation(len(b.alphabet))
    vecs = tuple(
        PathVector(b, 1, {(t,): b.scalar(c) for t, c in zip(b.alphabet, row)}, 1) for row in u
    )
    return Frame(side, vecs, "rotated")


def frame_power(frame: Frame, length: int, backend=None) -> Frame:
    """All tensor products of ``length`` members of a degree-one frame."""
    b = backend or frame.vectors[0].backend
    if length == 0:
        if b.kind == "graph":
            vecs = tuple(basis_vector(b, (v,)) for v in b.points())
        else:
            vecs = (PathVector(b, 0, {(): b.scalar(1)}, 0),)
        return Frame(frame.side, vecs, frame.name)
    vecs = list(frame.vectors)
    for _ in range(length - 1):
        vecs = [tensor(x, y) for x in vecs for y in frame.vectors]
        vecs = [v for v in vecs if v.coeffs]
    return Frame(frame.side, tuple(vecs), frame.name)


def canonical_frame(backend, length: int, side: str = "right") -> Frame:
    return frame_power(degree_one_frame(backend, side), length, backend)


def rotated_frame(backend, length: int, side: str = "right") -> Frame:
    return frame_power(degree_one_frame(backend, side, rotated=True), length, backend)


def frame_reconstruct(frame: Frame, x: PathVector) -> PathVector:
    """``sum_rho e_rho (e_rho|x)_A`` (right) or ``sum_rho _A(x|f_rho) f_rho`` (left)."""
    total = PathVector(x.backend, x.degree, {}, x.depth)
    for e in frame.vectors:
        total = total + theta(e, e, frame.side)(x)
    return total


# -- Phi_l, e^{beta_l} and q_l ----------------------------------------------------

def phi_ell(T, length: int, backend=None, frame: Frame | None = None) -> AlgElement:
    """``Phi_l(T) = sum_rho _A(T e_rho | e_rho)`` over a right frame.

    ``T`` is either a matrix indexed by ``backend.paths(length)`` (acting on the
    path basis) or a callable on :class:`PathVector`.
    """
    if callable(T):
        if frame is None:
            frame = canonical_frame(backend, length, "right")
        b = frame.vectors[0].backend
        total = b.zero()
        for e in frame.vectors:
            total = total + left_inner(T(e), e)
        return total
    b = backend
    paths = b.paths(length)
    m = np.asarray(T, dtype=object)
    if m.shape != (len(paths), len(paths)):
        raise ValueError(f"dimension mismatch: expected {len(paths)}x{len(paths)}, got {m.shape}")
    total = b.zero()
    for i, p in enumerate(paths):
        if not is_zero(m[i, i]):
            total = total + b.left_inner_basis(p, p) * b.scalar(m[i, i])
    return total


def identity_matrix(backend, length: int) -> np.ndarray:
    n = len(backend.paths(length))
    m = np.zeros((n, n), dtype=object)
    m[:] = backend.scalar(0)
    for i in range(n):
        m[i, i] = backend.scalar(1)
    return m


def beta_exp(backend, length: int) -> AlgElement:
    """``e^{beta_l} = Phi_l(Id)``."""
    return phi_ell(identity_matrix(backend, length), length, backend)


@dataclass(frozen=True)
class QOperator:
    """The diagonal operator ``q_l`` on the path basis of ``E^{(x)l}``."""

    backend: Any
    degree: int
    diag: dict

    def apply(self, x: PathVector) -> PathVector:
        if x.degree != self.degree:
            raise ValueError("degree mismatch")
        if self.backend.kind == "sft":
            return x
        return PathVector(x.backend, x.degree, {p: self.diag[p] * c for p, c in x.coeffs.items()})

    def matrix(self) -> np.ndarray:
        paths = self.backend.paths(self.degree)
        m = identity_matrix(self.backend, self.degree)
        for i, p in enumerate(paths):
            m[i, i] = self.diag[p]
        return m


def q_op(backend, length: int) -> QOperator:
    """Closed form of the ratio limit ``lim e^{-beta_n} nu e^{beta_{n-l}}``."""
    return QOperator(backend, length, {p: backend.q_scalar(p) for p in backend.paths(length)})


@dataclass
class CheckReport:
    passed: bool
    checks: list = field(default_factory=list)  # (name, ok, witness)
    tolerance: float = 0.0

    def add(self, name: str, ok: bool, witness: Any = None):
        self.checks.append((name, bool(ok), witness))
        self.passed = self.passed and bool(ok)

    def failures(self) -> list:
        return [c for c in self.checks if not c[1]]


def verify_q_properties(backend, l_max: int) -> CheckReport:
    b = backend
    tol = b.zero_tol
    rep = CheckReport(True, tolerance=tol)
    qs = {l: q_op(b, l) for l in range(l_max + 1)}
    for l, q in qs.items():
        bad = [p for p, c in q.diag.items() if not complex(c).real > 0]
        rep.add(f"positive q_{l}", not bad, bad[:1] or None)
        phi = phi_ell(q.apply, l, b)
        rep.add(f"Phi_{l}(q_{l}) = 1", phi.equals(b.one(), tol), None if phi.equals(b.one(), tol) else phi)
    for l in range(l_max + 1):
        for m in range(l_max + 1 - l):
            bad = None
            for p in b.paths(l):
                for r in b.paths(m):
                    x, y = basis_vector(b, p), basis_vector(b, r)
                    xy = tensor(x, y)
                    if not xy.coeffs:
                        continue
                    if not qs[l + m].apply(xy).equals(tensor(qs[l].apply(x), qs[m].apply(y)), tol):
                        bad = (p, r)
                        break
                if bad:
                    break
            rep.add(f"multiplicative q_{l + m} on {l}+{m}", bad is None, bad)
    for l, q in qs.items():
        bad = None
        for p in b.paths(l):
            for r in b.paths(l):
                x, y = basis_vector(b, p), basis_vector(b, r)
                ok = right_inner(q.apply(x), y).equals(right_inner(x, q.apply(y)), tol)
                ok = ok and left_inner(q.apply(x), y).equals(left_inner(x, q.apply(y)), tol)
                if not ok:
                    bad = (p, r)
                    break
            if bad:
                break
        rep.add(f"two-sided adjointable q_{l}", bad is None, bad)
        bad = None
        for a in _point_indicators(b):
            for p in b.paths(l):
                x = basis_vector(b, p)
                lhs = q.apply(right_act(left_act(a, x), a))
                rhs = right_act(left_act(a, q.apply(x)), a)
                if not lhs.equals(rhs, tol):
                    bad = p
                    break
            if bad:
                break
        rep.add(f"bimodule map q_{l}", bad is None, bad)
    return rep


def _point_indicators(b) -> list:
    if b.kind == "graph":
        return [b.delta(v) for v in b.points()]
    return [b.cylinder((t,)) for t in b.alphabet]


@dataclass
class QDecomposition:
    degree: int
    projection: dict  # diagonal of P_l on the path basis
    central: AlgElement | None
    success: bool
    certificate: tuple | None = None
    notes: str = ""


def decompose_q(backend, length: int) -> QDecomposition:
    """Try to write ``q_l = c_l P_l`` with ``c_l`` acting by left multiplication."""
    b = backend
    tol = b.zero_tol
    q = q_op(b, length)
    if b.kind == "sft":
        proj = {p: b.scalar(1) for p in q.diag}
        c = b.one()
    else:
        by_range: dict = {}
        for p, val in q.diag.items():
            first = by_range.setdefault(p[0], (p, val))
            if not is_zero(val - first[1], tol):
                msg = f"q differs on paths sharing range {b.graph.vertices[p[0]]}: {first[1]} vs {val}"
                return QDecomposition(length, {}, None, False, (first[0], p), msg)
        vals = [by_range[v][1] if v in by_range else b.scalar(1) for v in b.points()]
        c = AlgElement(b, 0, tuple(vals))
        proj = {p: val / c.values[p[0]] for p, val in q.diag.items()}
    if not all(is_zero(x, tol) or is_zero(x - 1, tol) for x in proj.values()):
        return QDecomposition(length, proj, c, False, None, "quotient q/c is not a projection")
    phi_p = phi_ell(lambda x: PathVector(b, length, {p: proj[p] * v for p, v in x.coeffs.items()})
                    if b.kind == "graph" else x, length, b)
    try:
        ok = c.equals(phi_p.inverse(), tol)
    except ZeroDivisionError:
        ok = False
    if not ok:
        return QDecomposition(length, proj, c, False, None, "c_l differs from Phi_l(P_l)^{-1}")
    return QDecomposition(length, proj, c, True)


def require_decomposition(backend, l_max: int) -> None:
    for l in range(l_max + 1):
        dec = decompose_q(backend, l)
        if not dec.success:
            raise PreconditionError(f"Assumption 2 decomposition unavailable at degree {l}: {dec.notes}")
        if any(not is_zero(x - 1, backend.zero_tol) for x in dec.projection.values()):
            raise PreconditionError("only P_l = Id decompositions are supported")


@dataclass
class ConvergenceReport:
    deviations: list  # (n, deviation)
    rate: float | None
    passed: bool
    notes: str = ""


def verify_assumption_one(nu: PathVector, n_max: int = 30, tol: float = DEFAULT_TOL) -> ConvergenceReport:
    """Tabulate ``||e^{-beta_n} nu e^{beta_{n-l}} - q_l nu||`` for ``n = l..n_max``."""
    b = nu.backend
    l = nu.degree
    if b.kind == "graph":
        b.certificate  # raises when Assumption 1 cannot be certified
    target = q_op(b, l).apply(nu)
    devs = []
    for n in range(l, n_max + 1):
        approx = right_act(left_act(b.beta_exact(n).inverse(), nu), b.beta_exact(n - l))
        diff = approx - target
        devs.append((n, float(math.sqrt(right_inner(diff, diff).max_abs()))))
    values = [d for _, d in devs]
    tail = values[len(values) // 2 :]
    monotone = all(y <= x * (1 + 1e-12) + 1e-15 for x, y in zip(tail, tail[1:]))
    passed = monotone and values[-1] < tol
    ratios = [y / x for x, y in zip(values, values[1:]) if x > 1e-13 and y > 1e-13]
    rate = float(np.median(ratios[len(ratios) // 2 :])) if ratios else None
    notes = "" if passed else "deviations do not decrease below tolerance"
    return ConvergenceReport(devs, rate, passed, notes)
