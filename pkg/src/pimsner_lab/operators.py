"""Number operator, depth-kore operator and the Dirac-type operator ``D = psi(c, kappa)``.

Spectral functions of ``(c, kappa)`` are applied by telescoping over the
nested projections ``Q_{n,k}``::

    sum_k f(n,k) P_{n,k} x = f(n,K) x + sum_{k<K} (f(n,k) - f(n,k+1)) Q_{n,k} x

where ``K`` is the longest ``nu`` occurring in the degree-``n`` part of ``x``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from .bimodule import basis_vector, is_zero
from .xi_module import (
    XiVector,
    apply_Pnk,
    apply_Qnk,
    canonical,
    canonical_basis,
    creation,
    degree,
    grade_project,
    k_floor,
    multiply,
    symbol,
    xi_equal,
)


# -- psi --------------------------------------------------------------------------

@dataclass(frozen=True)
class PsiFunction:
    name: str
    rule: Callable[[int, int], Any]

    def __call__(self, n: int, k: int):
        if k < k_floor(n):
            raise ValueError(f"psi({n},{k}) undefined: k < max(0, -n)")
        return self.rule(n, k)


def _default(n: int, k: int):
    return n if k == 0 else -(k + abs(n))


def _variant_a(n: int, k: int):
    return n if k == 0 else -Fraction(k + n + 2 * abs(n), 2)


def _variant_b(n: int, k: int):
    return n if k == 0 else -Fraction(k + abs(n), 2)


PSI = {
    "default": PsiFunction("default", _default),
    "variant-a": PsiFunction("variant-a", _variant_a),
    "variant-b": PsiFunction("variant-b", _variant_b),
}


def get_psi(name: str) -> PsiFunction:
    try:
        return PSI[name.replace("_", "-")]
    except KeyError:
        raise ValueError(f"unknown psi {name!r}; choose from {sorted(PSI)}") from None


def window_cells(n_min: int, n_max: int, k_max: int) -> list:
    return [(n, k) for n in range(n_min, n_max + 1) for k in range(k_floor(n), k_max + 1)]


# -- operators on Xi ---------------------------------------------------------------------

def apply_spectral(x: XiVector, f: Callable[[int, int], Any]) -> XiVector:
    b = x.backend
    out = XiVector(b, {})
    for n in sorted(x.degrees()):
        part = grade_project(x, n)
        big_k = max(b.length(v) for _, v in part.coeffs)
        out = out + part.scale(b.scalar(f(n, big_k)))
        for k in range(k_floor(n), big_k):
            step = f(n, k) - f(n, k + 1)
            if step:
                out = out + apply_Qnk(part, n, k).scale(b.scalar(step))
    return out


def number_op(x: XiVector) -> XiVector:
    return apply_spectral(x, lambda n, k: n)


def depth_kore_op(x: XiVector) -> XiVector:
    return apply_spectral(x, lambda n, k: k)


def dirac_apply(x: XiVector, psi: PsiFunction | str = "default") -> XiVector:
    psi = get_psi(psi) if isinstance(psi, str) else psi
    return apply_spectral(x, psi)


def dirac_by_projections(x: XiVector, psi: PsiFunction) -> XiVector:
    """``sum psi(n,k) P_{n,k} x`` summed cell by cell; the slow reference for :func:`dirac_apply`."""
    b = x.backend
    out = XiVector(b, {})
    for n in sorted(x.degrees()):
        part = grade_project(x, n)
        big_k = max(b.length(v) for _, v in part.coeffs)
        for k in range(k_floor(n), big_k + 1):
            out = out + apply_Pnk(part, n, k).scale(b.scalar(psi(n, k)))
    return out


# -- psi validation -------------------------------------------------------------------------

@dataclass
class PsiReport:
    name: str
    passed: bool
    lipschitz_n: dict  # l -> C_l
    offset_k: dict  # j -> C_j
    proper: bool
    counterexamples: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def _lipschitz_n(psi, w: int, l: int):
    best, arg = 0, None
    for n in range(-w, w - l + 1):
        for k in range(max(k_floor(n), k_floor(n + l)), w + 1):
            d = abs(psi(n + l, k) - psi(n, k))
            if d > best:
                best, arg = d, (n, k)
    return best, arg


def _offset_k(psi, w: int, j: int):
    best, arg = 0, None
    for n in range(-w, 1):
        f = k_floor(n)
        d = abs(psi(n, f) - psi(n, f + j))
        if d > best:
            best, arg = d, (n, f + j)
    return best, arg


def _small_cells(psi, w: int, bound) -> set:
    return {(n, k) for n, k in window_cells(-w, w, w) if abs(psi(n, k)) <= bound}


def validate_psi(psi: PsiFunction, window: int = 8, l_max: int = 3) -> PsiReport:
    """Certify the two Lipschitz-type conditions on ``psi`` and properness.

    A constant counts as bounded when doubling the window leaves it unchanged.
    The second condition is read as a bound on ``|psi(n,-n) - psi(n,-n+j)|`` in
    terms of the offset ``j`` from the floor ``k = max(0,-n)``. Properness (finite
    level sets, needed for a compact resolvent) is checked the same way.
    """
    rep = PsiReport(psi.name, True, {}, {}, True)
    for n, k in window_cells(-window, window, window):
        v = psi(n, k)
        if not isinstance(v, (int, Fraction)):
            rep.passed = False
            rep.counterexamples.append(("non-rational value", (n, k), v))
            break
    for l in range(1, l_max + 1):
        c1, _ = _lipschitz_n(psi, window, l)
        c2, arg = _lipschitz_n(psi, 2 * window, l)
        rep.lipschitz_n[l] = c2
        if c2 != c1:
            rep.passed = False
            rep.counterexamples.append((f"condition 1 unbounded for l={l}", arg, c2))
    for j in range(1, l_max + 1):
        c1, _ = _offset_k(psi, window, j)
        c2, arg = _offset_k(psi, 2 * window, j)
        rep.offset_k[j] = c2
        if c2 != c1:
            rep.passed = False
            rep.counterexamples.append((f"condition 2 unbounded for j={j}", arg, c2))
    bound = 2
    small, big = _small_cells(psi, window, bound), _small_cells(psi, 2 * window, bound)
    if big != small:
        rep.proper = rep.passed = False
        witness = sorted(big - small, key=lambda c: (abs(c[0]), c))[:3]
        rep.counterexamples.append((f"condition 2: level set |psi| <= {bound} grows with the window", witness, None))
    return rep


# -- spectral decomposition ----------------------------------------------------------------

def _threads() -> int:
    try:
        return max(1, int(os.environ.get("PIMSNER_LAB_THREADS", "1")))
    except ValueError:
        return 1


def q_trace(backend, n: int, k: int, d: int):
    """Trace of ``Q_{n,k}`` on the degree-``n`` part of the depth-``d`` window."""
    total = 0
    for s in canonical_basis(backend, n, d):
        img = canonical(apply_Qnk(XiVector(backend, {s: backend.scalar(1)}), n, k), d)
        total += img.get(s, 0)
    return total


def cell_rank(backend, n: int, k: int, d: int) -> int:
    f = k_floor(n)
    hi = q_trace(backend, n, k, d)
    lo = q_trace(backend, n, k - 1, d) if k > f else 0
    r = hi - lo
    rounded = round(float(r))
    if abs(float(r) - rounded) > 1e-6:
        raise ArithmeticError(f"non-integral trace {r} for P_{{{n},{k}}}")
    return rounded


@dataclass
class SpectralCell:
    n: int
    k: int
    rank: int
    psi: Any
    complete: bool  # the whole of H_{n,k} lies inside the window


@dataclass
class SpectralDecomposition:
    backend: Any
    depth: int
    psi: PsiFunction
    cells: list

    def rank(self, n: int, k: int) -> int:
        for c in self.cells:
            if (c.n, c.k) == (n, k):
                return c.rank
        raise KeyError((n, k))

    def ordered(self) -> list:
        return sorted(self.cells, key=lambda c: (abs(c.psi), c.n, c.k))


def spectral_decomposition(
    backend, psi: PsiFunction | str = "default", depth: int = 3,
    n_min: int | None = None, n_max: int | None = None, k_max: int | None = None,
) -> SpectralDecomposition:
    psi = get_psi(psi) if isinstance(psi, str) else psi
    n_min = -depth if n_min is None else n_min
    n_max = depth if n_max is None else n_max
    k_max = depth if k_max is None else k_max
    cells = [(n, k) for n, k in window_cells(max(n_min, -depth), min(n_max, depth), k_max) if k <= depth]

    def build(cell):
        n, k = cell
        return SpectralCell(n, k, cell_rank(backend, n, k, depth), psi(n, k), n + k <= depth and k <= depth)

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        out = list(pool.map(build, cells))
    return SpectralDecomposition(backend, depth, psi, out)


def resolvent_spectrum(dec: SpectralDecomposition) -> list:
    """Eigenvalues of ``D`` with multiplicities, ordered by ``(|lambda|, lambda)``."""
    mult: dict = {}
    for c in dec.cells:
        if c.rank:
            mult[c.psi] = mult.get(c.psi, 0) + c.rank
    return sorted(mult.items(), key=lambda t: (abs(t[0]), t[0]))


def positive_projection_is_fock(dec: SpectralDecomposition, spanning: list | None = None) -> bool:
    """``chi_{[0,inf)}(D) = sum_{n>=0} P_{n,0}``, on cells and (optionally) on vectors."""
    pos = {(c.n, c.k) for c in dec.cells if c.rank and c.psi >= 0}
    fock = {(c.n, c.k) for c in dec.cells if c.rank and c.k == 0 and c.n >= 0}
    if pos != fock:
        return False
    for x in spanning or []:
        b = x.backend
        lhs, rhs = XiVector(b, {}), XiVector(b, {})
        for n in x.degrees():
            part = grade_project(x, n)
            big_k = max(b.length(v) for _, v in part.coeffs)
            for k in range(k_floor(n), big_k + 1):
                if dec.psi(n, k) >= 0:
                    lhs = lhs + apply_Pnk(part, n, k)
            if n >= 0:
                rhs = rhs + apply_Pnk(part, n, 0)
        if not xi_equal(lhs, rhs):
            return False
    return True


# -- commutators ----------------------------------------------------------------------------

def weight_at(backend, s, point) -> float:
    """``(W_s|W_s)_A`` evaluated at a localization point."""
    m, v = s
    if backend.kind == "graph":
        return float(backend.q_scalar(v)) if v[0] == point else 0.0
    if point[: len(v)] != v:
        return 0.0
    if m and not backend.matrix.allowed(m[-1], point[len(v)]):
        return 0.0
    return 1.0


@dataclass
class CommutatorResult:
    generator: str
    depth: int
    norm: float
    bound: float
    rank_deficiency: int = 0
    engine: str = "generic"


def _localized_norm(backend, columns: dict, n: int, d: int) -> float:
    """Largest localized norm of the block mapping degree ``n`` (depth ``d``) to ``n+1`` (depth ``d+1``)."""
    dom = canonical_basis(backend, n, d)
    cod = canonical_basis(backend, n + 1, d + 1)
    if not dom or not cod:
        return 0.0
    points = backend.localization_points(d + 2 if backend.kind == "sft" else 0)
    best = 0.0
    for p in points:
        ds = [s for s in dom if weight_at(backend, s, p) > 0]
        cs = [t for t in cod if weight_at(backend, t, p) > 0]
        if not ds or not cs:
            continue
        ci = {t: i for i, t in enumerate(cs)}
        m = np.zeros((len(cs), len(ds)))
        for j, s in enumerate(ds):
            ws = math.sqrt(weight_at(backend, s, p))
            for t, c in columns[s].items():
                i = ci.get(t)
                if i is not None:
                    m[i, j] = float(c) * math.sqrt(weight_at(backend, t, p)) / ws
        best = max(best, float(np.linalg.norm(m, 2)))
    return best


def commutator_norm_generic(backend, gen: tuple, psi: PsiFunction | str, d: int) -> CommutatorResult:
    """``||[D, S_gen]||`` restricted to the depth-``d`` window, as a map into depth ``d+1``."""
    psi = get_psi(psi) if isinstance(psi, str) else psi
    s_gen = creation(basis_vector(backend, gen))
    best = 0.0
    for n in range(-d, d + 1):
        cols = {}
        for s in canonical_basis(backend, n, d):
            x = XiVector(backend, {s: backend.scalar(1)})
            y = dirac_apply(multiply(s_gen, x), psi) - multiply(s_gen, dirac_apply(x, psi))
            cols[s] = canonical(y, d + 1) if y.coeffs else {}
        best = max(best, _localized_norm(backend, cols, n, d))
    return CommutatorResult(backend.label(gen), d, best, 2.0 * backend.length(gen))


def commutator_norm(backend, gen: tuple, psi: PsiFunction | str = "default", d: int = 3,
                    engine: str = "auto") -> CommutatorResult:
    """Truncated ``||[D, S_gen]||``; the tensor kernel handles one-vertex graphs at large depth."""
    psi = get_psi(psi) if isinstance(psi, str) else psi
    one_vertex = backend.kind == "graph" and backend.graph.n_vertices == 1
    if engine == "kernel" or (engine == "auto" and one_vertex and d >= 5):
        if not one_vertex:
            raise ValueError("the tensor kernel handles one-vertex graphs only")
        from .cuntz_kernel import cuntz_commutator_norm

        norm = cuntz_commutator_norm(len(backend.graph.edges), gen[1], psi, d)
        return CommutatorResult(backend.label(gen), d, norm, 2.0 * backend.length(gen), engine="kernel")
    return commutator_norm_generic(backend, gen, psi, d)


def is_nondecreasing_then_constant(values: list, tol: float = 1e-8) -> bool:
    if any(b < a - tol for a, b in zip(values, values[1:])):
        return False
    return len(values) < 2 or abs(values[-1] - values[-2]) <= tol


# -- theta-summability shadow ---------------------------------------------------------------

def cuntz_cell_rank(big_n: int, n: int, k: int) -> int:
    """``dim H_{n,k}`` for O_N."""
    f = k_floor(n)
    if k < f:
        return 0
    if k == f:
        return big_n ** abs(n)
    return big_n ** (n + 2 * k - 2) * (big_n**2 - 1)


@dataclass
class ThetaRow:
    shell: int
    rank: int
    shell_sum: float
    ratio: float | None
    partial_sum: float
    p_partial_sum: float


def theta_trace(psi: PsiFunction | str, t: float, shells: int = 8, big_n: int = 2, p: float = 1.0) -> list:
    """Shell partial sums of ``Tr exp(-t D^2)`` for O_N, shell ``s = k + |n|``."""
    psi = get_psi(psi) if isinstance(psi, str) else psi
    rows, partial, p_partial, prev = [], 0.0, 0.0, None
    for s in range(shells + 1):
        cells = [(n, k) for n in range(-s, s + 1) for k in [s - abs(n)] if k >= k_floor(n)]
        rank = sum(cuntz_cell_rank(big_n, n, k) for n, k in cells)
        shell = sum(cuntz_cell_rank(big_n, n, k) * math.exp(-t * float(psi(n, k)) ** 2) for n, k in cells)
        p_shell = sum(cuntz_cell_rank(big_n, n, k) * (1 + float(psi(n, k)) ** 2) ** (-p / 2) for n, k in cells)
        partial += shell
        p_partial += p_shell
        ratio = shell / prev if prev else None
        rows.append(ThetaRow(s, rank, shell, ratio, partial, p_partial))
        prev = shell
    return rows


def theta_converges(rows: list) -> bool:
    return all(r.ratio is None or r.ratio < 1 for r in rows)
