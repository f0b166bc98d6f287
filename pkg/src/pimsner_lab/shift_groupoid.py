"""The shift-tail groupoid ``R_A``, its depth function and cylinder-pair functions.

Points of ``Omega_A`` are finite prefixes followed by a tail that is either
periodic or a named *generic* tail. Generic tails are assumed aperiodic, and
two different generic tails are never compared, so every equality of shifted
points is decided symbolically or reported as :class:`Undecided`.

A cylinder pair ``(alpha, beta)`` stands for the compact open set
``Z(alpha, beta) = {(alpha z, |alpha| - |beta|, beta z)}``; its indicator is the
groupoid picture of ``S_alpha S_beta^*``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from .bimodule import ShiftBimodule, conj, is_zero, make_backend
from .graph_core import SFTMatrix, enumerate_words
from .xi_module import (
    XiVector,
    apply_Pnk,
    k_floor,
    xi_equal,
)


class Undecided(ValueError):
    """The finite representation does not determine the answer."""


# -- points ---------------------------------------------------------------------

@dataclass(frozen=True)
class WordWithTail:
    prefix: tuple
    tail_kind: str = "generic"  # "generic" | "periodic"
    tail: Any = "z"

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        if self.tail_kind == "periodic":
            object.__setattr__(self, "tail", tuple(self.tail))
            if not self.tail:
                raise ValueError("periodic tail needs a nonempty period")
        elif self.tail_kind != "generic":
            raise ValueError(f"unknown tail kind {self.tail_kind!r}")

    @classmethod
    def periodic(cls, period, prefix=()) -> "WordWithTail":
        return cls(tuple(prefix), "periodic", tuple(period))

    @classmethod
    def generic(cls, prefix, name: str = "z") -> "WordWithTail":
        return cls(tuple(prefix), "generic", name)

    def letters(self, count: int) -> tuple:
        if count <= len(self.prefix):
            return self.prefix[:count]
        if self.tail_kind == "generic":
            raise Undecided(f"prefix {self.prefix} too short to read {count} letters")
        extra = count - len(self.prefix)
        reps = -(-extra // len(self.tail))
        return self.prefix + (self.tail * reps)[:extra]

    def shift(self, j: int) -> "WordWithTail":
        if j <= len(self.prefix):
            return WordWithTail(self.prefix[j:], self.tail_kind, self.tail)
        if self.tail_kind == "generic":
            raise Undecided("cannot shift past the prefix into a generic tail")
        r = (j - len(self.prefix)) % len(self.tail)
        return WordWithTail((), "periodic", self.tail[r:] + self.tail[:r])

    def prepend(self, word) -> "WordWithTail":
        return WordWithTail(tuple(word) + self.prefix, self.tail_kind, self.tail)

    def is_admissible(self, m: SFTMatrix) -> bool:
        seq = self.prefix + (self.tail * 2 if self.tail_kind == "periodic" else ())
        return all(m.allowed(a, b) for a, b in zip(seq, seq[1:]))

    def __str__(self) -> str:
        head = "".join(map(str, self.prefix))
        if self.tail_kind == "periodic":
            return f"{head}({''.join(map(str, self.tail))})^inf"
        return f"{head}{self.tail}"


def _tail_offset(x: WordWithTail, j: int):
    """``sigma^j x`` for a generic tail as ``(remaining prefix, offset into the tail)``."""
    if j <= len(x.prefix):
        return x.prefix[j:], 0
    return (), j - len(x.prefix)


def shifted_equal(x: WordWithTail, a: int, y: WordWithTail, b: int) -> bool:
    """Decide ``sigma^a x == sigma^b y``."""
    if x.tail_kind == "periodic" and y.tail_kind == "periodic":
        u, v = x.shift(a), y.shift(b)
        span = max(len(u.prefix), len(v.prefix)) + math.lcm(len(u.tail), len(v.tail))
        return u.letters(span) == v.letters(span)
    if x.tail_kind != y.tail_kind:
        return False  # generic tails are aperiodic
    if x.tail != y.tail:
        raise Undecided(f"generic tails {x.tail!r} and {y.tail!r} cannot be compared")
    (pu, ou), (pv, ov) = _tail_offset(x, a), _tail_offset(y, b)
    if ou or ov:
        return ou == ov and not pu and not pv
    # u z = v z forces a periodic z unless |u| = |v|
    return pu == pv


@dataclass(frozen=True)
class GroupoidPoint:
    x: WordWithTail
    n: int
    y: WordWithTail


def kappa_A_eval(p: GroupoidPoint, search: int | None = None) -> int:
    """Least ``k >= max(0,-n)`` with ``sigma^{n+k} x = sigma^k y``."""
    f = k_floor(p.n)
    if search is None:
        span = len(p.x.prefix) + len(p.y.prefix) + abs(p.n)
        for w in (p.x, p.y):
            if w.tail_kind == "periodic":
                span += len(w.tail)
        search = span + 1
    for k in range(f, f + search + 1):
        if shifted_equal(p.x, p.n + k, p.y, k):
            return k
    raise ValueError(f"({p.x}, {p.n}, {p.y}) is not in the groupoid")


# -- cylinder-pair functions ------------------------------------------------------------

@dataclass(frozen=True)
class CylinderPairFunction:
    n: int
    k: int
    alpha: tuple
    beta: tuple
    depth: int

    def to_json(self) -> dict:
        return {
            "n": self.n, "k": self.k, "depth": self.depth,
            "alpha": "".join(map(str, self.alpha)), "beta": "".join(map(str, self.beta)),
        }


def _compatible(m: SFTMatrix, *words) -> list:
    """Letters ``t`` that may follow every nonempty word given."""
    return [t for t in m.alphabet if all(not w or m.allowed(w[-1], t) for w in words)]


def _extend(m: SFTMatrix, alpha: tuple, beta: tuple, length: int) -> list:
    layer = [(alpha, beta)]
    for _ in range(length):
        layer = [(a + (t,), b + (t,)) for a, b in layer for t in _compatible(m, a, b)]
    return layer


def basis_Rnk(m: SFTMatrix, n: int, k: int, depth: int) -> list:
    """Depth-``depth`` cylinder basis of ``C(R_A^{n,k})``."""
    f = k_floor(n)
    if k < f:
        raise ValueError(f"k must be at least {f}")
    if depth < k or depth < n + k:
        raise ValueError(f"depth {depth} too small for (n,k)=({n},{k})")
    out = []
    for a in enumerate_words(m, n + k):
        for b in enumerate_words(m, k):
            if k > f and a[-1] == b[-1]:
                continue
            if a and b and not _compatible(m, a, b):
                continue
            grow = depth - max(len(a), len(b))
            for aa, bb in _extend(m, a, b, grow):
                out.append(CylinderPairFunction(n, k, aa, bb, depth))
    return sorted(out, key=lambda c: (c.alpha, c.beta))


@dataclass(frozen=True, eq=False)
class GroupoidFunction:
    """A finite combination of cylinder-pair indicators ``1_{Z(alpha, beta)}``."""

    matrix: SFTMatrix
    coeffs: dict

    def __post_init__(self):
        object.__setattr__(self, "coeffs", {s: c for s, c in self.coeffs.items() if not is_zero(c, 1e-15)})

    def __add__(self, other):
        out = dict(self.coeffs)
        for s, c in other.coeffs.items():
            out[s] = out.get(s, 0) + c
        return GroupoidFunction(self.matrix, out)

    def scale(self, c):
        return GroupoidFunction(self.matrix, {s: c * v for s, v in self.coeffs.items()})


def indicator(m: SFTMatrix, alpha, beta, c=1) -> GroupoidFunction:
    return GroupoidFunction(m, {(tuple(alpha), tuple(beta)): c})


def from_basis(m: SFTMatrix, elems) -> list:
    return [indicator(m, e.alpha, e.beta) for e in elems]


def contains(m: SFTMatrix, alpha: tuple, beta: tuple, p: GroupoidPoint) -> bool:
    """Is ``p`` in ``Z(alpha, beta)``?"""
    if p.n != len(alpha) - len(beta):
        return False
    if p.x.letters(len(alpha)) != alpha or p.y.letters(len(beta)) != beta:
        return False
    return shifted_equal(p.x, len(alpha), p.y, len(beta))


def evaluate(f: GroupoidFunction, p: GroupoidPoint):
    return sum((c for (a, b), c in f.coeffs.items() if contains(f.matrix, a, b, p)), 0)


def _compose_pairs(m: SFTMatrix, s: tuple, t: tuple) -> list:
    """``1_{Z(mu,nu)} * 1_{Z(alpha,beta)}`` by matching ``nu z = alpha w``."""
    (mu, nu), (alpha, beta) = s, t
    ok = m.allowed
    if len(nu) >= len(alpha):
        # nu = alpha u: (mu z, nu z)(alpha u z, beta u z)
        if nu[: len(alpha)] != alpha:
            return []
        u = nu[len(alpha):]
        if u and beta and not ok(beta[-1], u[0]):
            return []
        left, right, middle = mu, beta + u, nu
    else:
        # alpha = nu u: (mu u w, nu u w)(alpha w, beta w)
        if alpha[: len(nu)] != nu:
            return []
        u = alpha[len(nu):]
        if mu and not ok(mu[-1], u[0]):
            return []
        left, right, middle = mu + u, beta, alpha
    # z must continue the left word, the right word and the shared middle word
    return [(left + (t_,), right + (t_,)) for t_ in _compatible(m, left, right, middle)]


def convolve(f: GroupoidFunction, g: GroupoidFunction) -> GroupoidFunction:
    """``(f*g)(x,n,y) = sum over (x,l,z) of f(x,l,z) g(z,n-l,y)`` on cylinder indicators."""
    if f.matrix != g.matrix:
        raise ValueError("functions on different groupoids")
    out: dict = {}
    for s, c in f.coeffs.items():
        for t, d in g.coeffs.items():
            for pair in _compose_pairs(f.matrix, s, t):
                out[pair] = out.get(pair, 0) + c * d
    return GroupoidFunction(f.matrix, out)


def involution(f: GroupoidFunction) -> GroupoidFunction:
    return GroupoidFunction(f.matrix, {(b, a): conj(c) for (a, b), c in f.coeffs.items()})


def phi_infty_groupoid(f: GroupoidFunction, backend: ShiftBimodule | None = None):
    """Restriction to the unit space, evaluated on depth-``m`` cylinders with a generic tail."""
    b = backend or make_backend(f.matrix)
    depth = max((max(len(a), len(c)) for a, c in f.coeffs), default=0)
    vals = []
    for w in b.points(depth):
        x = WordWithTail.generic(w)
        vals.append(b.scalar(0) + evaluate(f, GroupoidPoint(x, 0, x)))
    from .bimodule import AlgElement

    return AlgElement(b, depth, tuple(vals))


def to_xi(backend, f: GroupoidFunction) -> XiVector:
    """The identification ``1_{Z(mu,nu)} <-> W_{mu,nu}``."""
    return XiVector(backend, {s: backend.scalar(c) for s, c in f.coeffs.items() if backend.valid_symbol(*s)})


# -- comparison with the Xi picture --------------------------------------------------------

@dataclass
class ComparisonReport:
    passed: bool
    window: tuple
    depth: int
    checked: int = 0
    failures: list = field(default_factory=list)

    def summary(self) -> str:
        n_min, n_max, k_max = self.window
        if self.passed:
            return f"all checks passed (window n in [{n_min},{n_max}], k <= {k_max}, depth {self.depth}; {self.checked} checks)"
        return f"{len(self.failures)} failures, first: {self.failures[0]}"


def compare_models(m: SFTMatrix, n_min: int = -2, n_max: int = 2, k_max: int = 2, depth: int = 4) -> ComparisonReport:
    """``P_{n,k}`` fixes ``C(R^{n,k})``, kills the other cells and ``kappa`` acts by ``kappa_A``."""
    from .operators import depth_kore_op, window_cells

    b = make_backend(m)
    cells = window_cells(n_min, n_max, k_max)
    bases = {c: basis_Rnk(m, c[0], c[1], depth) for c in cells}
    rep = ComparisonReport(True, (n_min, n_max, k_max), depth)

    def fail(msg):
        rep.passed = False
        rep.failures.append(msg)

    for (n, k), elems in bases.items():
        for e in elems:
            w = to_xi(b, indicator(m, e.alpha, e.beta))
            for other in cells:
                img = apply_Pnk(w, *other)
                ok = xi_equal(img, w) if other == (n, k) else not img.coeffs or xi_equal(img, XiVector(b, {}))
                rep.checked += 1
                if not ok:
                    fail(("P", other, e.to_json()))
            rep.checked += 1
            if not xi_equal(depth_kore_op(w), w.scale(b.scalar(k))):
                fail(("kappa operator", e.to_json()))
            x = WordWithTail.generic(e.alpha)
            y = WordWithTail.generic(e.beta)
            rep.checked += 1
            if kappa_A_eval(GroupoidPoint(x, n, y)) != k:
                fail(("kappa_A", e.to_json()))
    return rep


# -- localization -------------------------------------------------------------------------

@dataclass(frozen=True)
class FiberElement:
    n: int
    k: int
    alpha: tuple
    beta: tuple
    source: WordWithTail  # the point x' with (x', n, x) in the fiber


def localize_at_point(m: SFTMatrix, x: WordWithTail, n_min: int, n_max: int, k_max: int, depth: int) -> list:
    """Cylinder-pair basis elements whose support meets ``{(x', n, x)}``."""
    from .operators import window_cells

    out = []
    for n, k in window_cells(n_min, n_max, k_max):
        if depth < k or depth < n + k:
            continue
        for e in basis_Rnk(m, n, k, depth):
            head = x.letters(len(e.beta) + 1)
            if head[: len(e.beta)] != e.beta:
                continue
            if e.alpha and not m.allowed(e.alpha[-1], head[-1]):
                continue
            out.append(FiberElement(n, k, e.alpha, e.beta, x.shift(len(e.beta)).prepend(e.alpha)))
    return out


def fiber_spectrum(fiber: list, psi) -> list:
    counts: dict = {}
    for el in fiber:
        v = psi(el.n, el.k)
        counts[v] = counts.get(v, 0) + 1
    return sorted(counts.items(), key=lambda t: (abs(t[0]), t[0]))
