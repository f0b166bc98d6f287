"""The right module Xi_A spanned by the symbols ``W_{mu,nu} = S_mu S_nu^*``.

An :class:`XiVector` is a finite scalar combination of symbols. Products are
normalized with the Toeplitz relations supplied by the backend, and the inner
product is ``(x|y)_A = Phi_infty(x^* y)`` with ``Phi_infty`` in closed form.

Symbols of degree ``n`` are linearly dependent only through the Cuntz
relation ``W_{mu,nu} = sum_t W_{mu t, nu t}``. Refining every symbol of degree
``n`` until its longer side has length ``d`` therefore gives coordinates in
the basis of :func:`canonical_basis`, and equality of vectors is decided on
those coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable

from .bimodule import (
    AlgElement,
    Frame,
    PathVector,
    beta_exp,
    canonical_frame,
    conj,
    decompose_q,
    degree_one_frame,
    frame_power,
    is_zero,
    make_backend,
    require_decomposition,
)

Symbol = tuple  # (mu, nu)


class TruncationError(ValueError):
    """An operation would leave the declared depth window."""


@dataclass(frozen=True, eq=False)
class XiVector:
    backend: Any
    coeffs: dict

    def __post_init__(self):
        tol = 0.0 if self.backend.exact else 1e-15
        object.__setattr__(self, "coeffs", {s: c for s, c in self.coeffs.items() if not is_zero(c, tol)})

    def __add__(self, other: "XiVector") -> "XiVector":
        out = dict(self.coeffs)
        for s, c in other.coeffs.items():
            out[s] = out.get(s, 0) + c
        return XiVector(self.backend, out)

    def __sub__(self, other: "XiVector") -> "XiVector":
        return self + other.scale(-1)

    def scale(self, c) -> "XiVector":
        return XiVector(self.backend, {s: c * x for s, x in self.coeffs.items()})

    def __mul__(self, other: "XiVector") -> "XiVector":
        return multiply(self, other)

    @property
    def depth(self) -> int:
        b = self.backend
        return max((max(b.length(m), b.length(n)) for m, n in self.coeffs), default=0)

    def degrees(self) -> set:
        b = self.backend
        return {b.length(m) - b.length(n) for m, n in self.coeffs}

    def is_zero(self, tol: float | None = None) -> bool:
        return xi_equal(self, zero(self.backend), tol)

    def __repr__(self) -> str:
        b = self.backend
        terms = [f"{c}*W[{b.label(m)},{b.label(n)}]" for (m, n), c in sorted(self.coeffs.items())]
        return "XiVector(" + " + ".join(terms) + ")"


def zero(backend) -> XiVector:
    return XiVector(backend, {})


def symbol(backend, mu: tuple, nu: tuple, c=1) -> XiVector:
    if not backend.valid_symbol(mu, nu):
        return zero(backend)
    return XiVector(backend, {(tuple(mu), tuple(nu)): backend.scalar(c)})


def unit(backend) -> XiVector:
    """The class of ``1``: one empty symbol per vertex, or the empty word."""
    if backend.kind == "graph":
        return XiVector(backend, {((v,), (v,)): backend.scalar(1) for v in backend.points()})
    return symbol(backend, (), ())


def degree(backend, s: Symbol) -> int:
    return backend.length(s[0]) - backend.length(s[1])


# -- generators and products -------------------------------------------------------

def creation(x: PathVector) -> XiVector:
    """``S_x`` for a path vector ``x``."""
    b = x.backend
    if b.kind == "graph":
        return XiVector(b, {(p, b.empty(p)): c for p, c in x.coeffs.items()})
    y = x.refine(x.degree)
    return XiVector(b, {(w, w[x.degree :]): c for w, c in y.coeffs.items()})


def adjoint(x: XiVector) -> XiVector:
    return XiVector(x.backend, {(n, m): conj(c) for (m, n), c in x.coeffs.items()})


def symbol_product(backend, s: Symbol, t: Symbol) -> list:
    """``S_mu S_nu^* S_alpha S_beta^*`` as ``[(coef, symbol)]``."""
    (mu, nu), (alpha, beta) = s, t
    out = []
    for c, x, y in backend.star_middle(nu, alpha):
        m = backend.concat(mu, x)
        n = backend.concat(beta, y)
        if m is None or n is None or not backend.valid_symbol(m, n):
            continue
        out.append((c, (m, n)))
    return out


def multiply(x: XiVector, y: XiVector) -> XiVector:
    b = x.backend
    out: dict = {}
    for s, c in x.coeffs.items():
        for t, d in y.coeffs.items():
            for e, u in symbol_product(b, s, t):
                out[u] = out.get(u, 0) + c * d * e
    return XiVector(b, out)


def right_action(x: XiVector, a: AlgElement) -> XiVector:
    b = x.backend
    out: dict = {}
    for (m, n), c in x.coeffs.items():
        for e, mm, nn in b.right_act_symbol(m, n, a):
            out[(mm, nn)] = out.get((mm, nn), 0) + c * e
    return XiVector(b, out)


def left_multiply(gen: XiVector, x: XiVector, max_depth: int | None = None) -> XiVector:
    """The module action of ``O_E`` on ``Xi_A``; raises rather than truncating silently."""
    out = multiply(gen, x)
    if max_depth is not None and out.depth > max_depth:
        raise TruncationError(f"result depth {out.depth} exceeds window depth {max_depth}")
    return out


# -- Phi_infty and the inner product ------------------------------------------------

def phi_infty(x: XiVector) -> AlgElement:
    """``Phi_infty(S_mu S_nu^*) = delta_{mu,nu} _A(mu | q mu)``; zero off degree 0."""
    b = x.backend
    total = b.zero()
    for (m, n), c in x.coeffs.items():
        if m == n:
            total = total + b.phi_monomial(m, n) * c
    return total


def phi_by_traces(backend, mu: tuple, nu: tuple, length: int) -> AlgElement:
    """``e^{-beta_l} Phi_l(S_mu S_nu^*)`` computed as a frame trace on ``E^{(x)l}`` (graph backend).

    The normalized traces converge to ``Phi_infty``; for one-vertex graphs they
    are constant once ``l >= max(|mu|, |nu|)``.
    """
    b = backend
    if b.kind != "graph":
        raise ValueError("frame traces of monomials are implemented for graphs only")
    if b.length(mu) != b.length(nu):
        return b.zero()
    if length < b.length(nu):
        raise ValueError("trace length must be at least |nu|")
    k = b.length(nu)
    # S_mu S_nu^* permutes path basis vectors, so only its fixed paths contribute
    total = b.zero()
    for p in b.paths(length):
        if p[0] == nu[0] and p[1 : k + 1] == nu[1:] and mu + p[k + 1 :] == p:
            total = total + b.left_inner_basis(p, p)
    return total * _beta_inverse(b, length)


def _beta_inverse(b, length: int) -> AlgElement:
    key = ("beta-inverse", length)
    if key not in b._cache:
        b._cache[key] = beta_exp(b, length).inverse()
    return b._cache[key]


def xi_inner(x: XiVector, y: XiVector) -> AlgElement:
    if x.backend is not y.backend:
        raise ValueError("vectors from different backends")
    return phi_infty(multiply(adjoint(x), y))


def grade_project(x: XiVector, n: int) -> XiVector:
    b = x.backend
    return XiVector(b, {s: c for s, c in x.coeffs.items() if degree(b, s) == n})


# -- canonical coordinates ------------------------------------------------------------

def refine_symbol(backend, s: Symbol, target: int) -> list:
    """Expand ``s`` by the Cuntz relation until its longer side has length ``target``."""
    m, n = s
    gap = target - max(backend.length(m), backend.length(n))
    if gap < 0:
        raise TruncationError(f"symbol longer than target length {target}")
    layer = [(m, n)]
    for _ in range(gap):
        layer = [t for u in layer for t in backend.extensions(*u) if backend.valid_symbol(*t)]
    return layer


def canonical(x: XiVector, d: int | None = None) -> dict:
    """Coordinates of ``x`` in the canonical bases of depth ``d``."""
    b = x.backend
    d = x.depth if d is None else d
    out: dict = {}
    for s, c in x.coeffs.items():
        for t in refine_symbol(b, s, d):
            out[t] = out.get(t, 0) + c
    tol = 0.0 if b.exact else 1e-12
    return {s: c for s, c in out.items() if not is_zero(c, tol)}


def xi_equal(x: XiVector, y: XiVector, tol: float | None = None) -> bool:
    b = x.backend
    tol = b.zero_tol if tol is None else tol
    diff = canonical(x - y, max(x.depth, y.depth))
    return all(is_zero(c, tol) for c in diff.values())


def canonical_basis(backend, n: int, d: int) -> list:
    """Nonzero symbols of degree ``n`` whose longer side has length exactly ``d``."""
    if abs(n) > d:
        return []
    lm, ln = (d, d - n) if n >= 0 else (d + n, d)
    key = ("cbasis", n, d)
    cache = backend._cache
    if key not in cache:
        cache[key] = [
            (m, v)
            for m in backend.paths(lm)
            for v in backend.paths(ln)
            if backend.valid_symbol(m, v)
        ]
    return cache[key]


def window_symbols(backend, d: int) -> list:
    """All nonzero symbols with ``|mu|, |nu| <= d`` (a spanning set of the window)."""
    out = []
    for lm in range(d + 1):
        for ln in range(d + 1):
            out.extend((m, v) for m in backend.paths(lm) for v in backend.paths(ln) if backend.valid_symbol(m, v))
    return out


def symbol_weight(backend, s: Symbol) -> AlgElement:
    """``(W|W)_A`` of a single symbol."""
    w = XiVector(backend, {s: backend.scalar(1)})
    return xi_inner(w, w)


# -- Q_{n,k} and P_{n,k} ----------------------------------------------------------------

def _check_decomposition(backend, l_max: int) -> None:
    done = backend._cache.get("q-decomposed", -1)
    if l_max > done:
        require_decomposition(backend, l_max)
        backend._cache["q-decomposed"] = l_max


def _q_symbol(backend, s: Symbol, n: int, k: int) -> list:
    m, v = s
    lm, ln = backend.length(m), backend.length(v)
    if lm - ln != n:
        return []
    if k >= ln:
        return [(1, s)]
    m_head, m_tail = backend.split(m, n + k)
    v_head, v_tail = backend.split(v, k)
    if m_tail != v_tail:
        return []
    if backend.kind == "graph":
        a = backend.delta(m_tail[0], backend.q_scalar(v_tail))
    else:
        a = backend.cylinder(m_tail) if m_tail else backend.one()
    return [(c, (mm, vv)) for c, mm, vv in backend.sandwich(m_head, a, v_head) if backend.valid_symbol(mm, vv)]


def apply_Qnk(x: XiVector, n: int, k: int) -> XiVector:
    """Closed formula for ``Q_{n,k}``; never lengthens ``nu``."""
    b = x.backend
    if k < 0 or n + k < 0:
        raise ValueError(f"Q_{{{n},{k}}} needs k >= max(0, -n)")
    _check_decomposition(b, x.depth)
    out: dict = {}
    for s, c in x.coeffs.items():
        for e, t in _q_symbol(b, s, n, k):
            out[t] = out.get(t, 0) + c * e
    return XiVector(b, out)


def k_floor(n: int) -> int:
    return max(0, -n)


def apply_Pnk(x: XiVector, n: int, k: int) -> XiVector:
    f = k_floor(n)
    if k < f:
        raise ValueError(f"P_{{{n},{k}}} undefined: k must be at least {f}")
    if k == f:
        return apply_Qnk(x, n, k)
    return apply_Qnk(x, n, k) - apply_Qnk(x, n, k - 1)


def qnk_rank_one_sum(
    x: XiVector, n: int, k: int, right: Frame | None = None, left: Frame | None = None
) -> XiVector:
    """``sum Theta_{xi, xi} x`` with ``xi = W_{e_rho, c_k^{-1/2} f_sigma}`` over the given frames.

    ``right`` and ``left`` are degree-one frames; their tensor powers supply
    the ``e_rho`` (length ``n+k``) and ``f_sigma`` (length ``k``). Written as
    ``W_{e,f} c_k^{-1} (W_{e,f}|x)_A`` so exact arithmetic stays exact.
    """
    b = x.backend
    if k < 0 or n + k < 0:
        raise ValueError(f"Q_{{{n},{k}}} needs k >= max(0, -n)")
    _check_decomposition(b, max(x.depth, n + k))
    right = right or degree_one_frame(b, "right")
    left = left or degree_one_frame(b, "left")
    es = frame_power(right, n + k, b).vectors
    fs = frame_power(left, k, b).vectors
    c_inv = decompose_q(b, k).central.inverse()
    total = zero(b)
    for e in es:
        se = creation(e)
        for f in fs:
            xi = multiply(se, adjoint(creation(f)))
            if not xi.coeffs:
                continue
            total = total + right_action(xi, c_inv * xi_inner(xi, x))
    return total


def hnk_basis(backend, n: int, k: int, d: int) -> list:
    """A spanning set of ``P_{n,k} Xi`` inside the depth-``d`` window."""
    b = backend
    f = k_floor(n)
    if k < f:
        raise ValueError(f"k must be at least {f}")
    if b.kind == "graph" and b.graph.n_vertices == 1 and k > f:
        # N W_{mu i, nu j} - delta_ij W_{mu, nu} with |mu| = n+k-1, |nu| = k-1
        big_n = b.scalar(len(b.graph.edges))
        out = []
        for m in b.paths(n + k - 1):
            for v in b.paths(k - 1):
                for i in b.paths(1):
                    for j in b.paths(1):
                        w = symbol(b, b.concat(m, i), b.concat(v, j), big_n)
                        if i == j:
                            w = w - symbol(b, m, v)
                        out.append(w)
        return out
    if b.kind == "graph" and b.graph.n_vertices == 1:
        return [symbol(b, m, v) for m in b.paths(n + k) for v in b.paths(k)]
    images = [apply_Pnk(symbol(b, *s), n, k) for s in canonical_basis(b, n, d)]
    return [v for v in images if v.coeffs]


def exact_rank(vectors: Iterable[XiVector], d: int) -> int:
    """Rank of a family by elimination on canonical coordinates (exact on rational backends)."""
    vectors = list(vectors)
    if not vectors:
        return 0
    tol = vectors[0].backend.zero_tol
    rows = [canonical(v, d) for v in vectors]
    rows = [r for r in rows if r]
    rank = 0
    pivots: dict = {}
    for r in rows:
        r = dict(r)
        while r:
            key = min(r)
            if key not in pivots:
                pivots[key] = r
                rank += 1
                break
            p = pivots[key]
            factor = r[key] / p[key]
            for kk, vv in p.items():
                r[kk] = r.get(kk, 0) - factor * vv
            r = {kk: vv for kk, vv in r.items() if not is_zero(vv, tol)}
    return rank


def kappa_of_symbol(backend, s: Symbol) -> int | None:
    """For the shift backend every symbol lies in a single ``H_{n,k}``; return that ``k``."""
    if backend.kind != "sft":
        return None
    m, v = s
    common = 0
    while common < min(len(m), len(v)) and m[len(m) - 1 - common] == v[len(v) - 1 - common]:
        common += 1
    return len(v) - common


def to_json(x: XiVector) -> list:
    from fractions import Fraction

    b = x.backend
    out = []
    for (m, v), c in sorted(x.coeffs.items()):
        coeff = {"num": c.numerator, "den": c.denominator} if isinstance(c, Fraction) else float(c)
        out.append({"mu": _ids(b, m), "nu": _ids(b, v), "coeff": coeff})
    return out


def _ids(b, p: tuple) -> list:
    if b.kind == "graph":
        return [b.graph.edges[g].id for g in p[1:]]
    return list(p)
