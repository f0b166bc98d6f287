"""Acceptance suite: one check per criterion, each reported as a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal summary) or
directly with ``python3 tests/test_acceptance.py``.
"""

import math
import time
from fractions import Fraction

import pytest
import sympy

from pimsner_lab import graph_core as gc
from pimsner_lab.bimodule import beta_exp, degree_one_frame, make_backend
from pimsner_lab.ktheory import AbelianGroup, determinant, one_minus, pimsner_K0, pimsner_K1
from pimsner_lab.operators import (
    commutator_norm,
    cuntz_cell_rank,
    dirac_apply,
    get_psi,
    is_nondecreasing_then_constant,
    number_op,
    positive_projection_is_fock,
    spectral_decomposition,
    theta_converges,
    theta_trace,
)
from pimsner_lab.shift_groupoid import compare_models
from pimsner_lab.xi_module import (
    XiVector,
    apply_Pnk,
    apply_Qnk,
    exact_rank,
    hnk_basis,
    k_floor,
    phi_by_traces,
    phi_infty,
    qnk_rank_one_sum,
    symbol,
    window_symbols,
    xi_equal,
    xi_inner,
)


def _spanning(b, d):
    return [XiVector(b, {s: b.scalar(1)}) for s in window_symbols(b, d)]


def _degree(b, x):
    (mu, nu), = x.coeffs
    return b.length(mu) - b.length(nu)


def check_kms():
    start = time.perf_counter()
    checked = 0
    for big_n in (2, 3):
        b = make_backend(gc.cuntz_graph(big_n))
        paths = [p for length in range(5) for p in b.paths(length)]
        for mu in paths:
            for nu in paths:
                expected = Fraction(1, big_n ** b.length(mu)) if mu == nu else 0
                value = phi_infty(symbol(b, mu, nu))
                if not value.equals(b.const(expected)):
                    return False, f"O{big_n}: Phi({mu}, {nu}) = {value.values}"
                checked += 1
    elapsed = time.perf_counter() - start
    # second route: normalized frame traces, diagonal pairs only
    for big_n in (2, 3):
        b = make_backend(gc.cuntz_graph(big_n))
        for length in range(5):
            for mu in b.paths(length):
                if not phi_by_traces(b, mu, mu, 4).equals(b.const(Fraction(1, big_n**length))):
                    return False, f"O{big_n}: frame trace differs at {mu}"
    return elapsed < 5, f"{checked} pairs exact in {elapsed:.2f} s; frame traces agree"


def check_indices():
    cases = [("O2", gc.cuntz_graph(2), 2), ("O3", gc.cuntz_graph(3), 3),
             ("golden", gc.golden_mean(), 1), ("full2", gc.full_shift(2), 1)]
    for name, obj, base in cases:
        b = make_backend(obj)
        for length in range(7):
            if not beta_exp(b, length).equals(b.const(base**length)):
                return False, f"{name} at length {length}"
    return True, "lengths 0..6 on O2, O3, golden mean, full 2-shift"


def check_projectors():
    checked = 0
    for name, obj in (("O2", gc.cuntz_graph(2)), ("golden", gc.golden_mean())):
        b = make_backend(obj)
        by_degree: dict = {}
        for x in _spanning(b, 3):
            by_degree.setdefault(_degree(b, x), []).append(x)
        for n, xs in by_degree.items():
            ks = range(k_floor(n), 4)
            images = [{k: apply_Pnk(x, n, k) for k in ks} for x in xs]
            for x, img in zip(xs, images):
                total = XiVector(b, {})
                for k, y in img.items():
                    total = total + y
                    if not xi_equal(apply_Pnk(y, n, k), y):
                        return False, f"{name}: P_({n},{k}) not idempotent"
                    if any(not apply_Pnk(y, n, j).is_zero() for j in ks if j != k):
                        return False, f"{name}: P_({n},{k}) not orthogonal"
                    checked += 1
                if not xi_equal(total, x):
                    return False, f"{name}: sum over k differs from the identity in degree {n}"
            for k in ks:
                for i, x in enumerate(xs):
                    for j, y in enumerate(xs):
                        if not xi_inner(images[i][k], y).equals(xi_inner(x, images[j][k])):
                            return False, f"{name}: P_({n},{k}) not self-adjoint"
    return True, f"{checked} projections exact at depth 3 on O2 and golden mean"


def check_oracle():
    checked = 0
    for name, obj in (("O2", gc.cuntz_graph(2)), ("golden", gc.golden_mean())):
        b = make_backend(obj)
        xs = _spanning(b, 3)
        for rotated in (False, True):
            right = degree_one_frame(b, "right", rotated)
            left = degree_one_frame(b, "left", rotated)
            for x in xs:
                n = _degree(b, x)
                for k in range(k_floor(n), 4):
                    if not xi_equal(apply_Qnk(x, n, k), qnk_rank_one_sum(x, n, k, right, left)):
                        return False, f"{name}: mismatch at {x.coeffs} (n={n}, k={k}, rotated={rotated})"
                    checked += 1
    return True, f"{checked} comparisons, canonical and rotated frames"


def check_models():
    start = time.perf_counter()
    checked = 0
    for name, obj in (("golden", gc.golden_mean()), ("full2", gc.full_shift(2))):
        rep = compare_models(obj, -2, 2, 2, 4)
        if not rep.passed:
            return False, f"{name}: {rep.summary()}"
        checked += rep.checked
    elapsed = time.perf_counter() - start
    return elapsed < 60, f"{checked} checks in {elapsed:.1f} s"


def check_commutators():
    cases = []
    o2 = make_backend(gc.cuntz_graph(2))
    cases += [("O2", o2, g) for g in o2.paths(1)]
    golden = make_backend(gc.golden_mean())
    cases += [("golden", golden, g) for g in ((1,), (2,))]
    finals = []
    for name, b, gen in cases:
        results = [commutator_norm(b, gen, "default", d) for d in range(3, 7)]
        norms = [r.norm for r in results]
        if not is_nondecreasing_then_constant(norms):
            return False, f"{name} {gen}: norms {norms}"
        if any(r.norm > r.bound + 1e-8 or r.bound > 2 for r in results):
            return False, f"{name} {gen}: bound exceeded"
        finals.append(norms[-1])
    return True, "final norms " + ", ".join(f"{v:.6f}" for v in finals)


def check_spectral_data():
    o2 = make_backend(gc.cuntz_graph(2))
    dec = spectral_decomposition(o2, "default", 4, 0, 4, 0)
    fock = [dec.rank(n, 0) for n in range(5)]
    if fock != [2**n for n in range(5)]:
        return False, f"Fock ranks {fock}"
    vecs = hnk_basis(o2, 1, 1, 2)
    gram = sympy.Matrix([[xi_inner(x, y).values[0] for y in vecs] for x in vecs])
    ranks = (exact_rank(vecs, 2), gram.rank())
    if ranks != (6, 6):
        return False, f"rank H_(1,1) = {ranks}"
    dec = spectral_decomposition(o2, "default", 3)
    if not positive_projection_is_fock(dec, _spanning(o2, 2)):
        return False, "positive spectral projection differs from the Fock projection"
    return True, "Fock ranks 1 2 4 8 16; rank H_(1,1) = 6; chi_[0,inf)(D) = Q"


def check_ktheory():
    start = time.perf_counter()
    for big_n in range(2, 7):
        a = gc.full_shift(big_n)
        k1 = pimsner_K1(a)
        expected = AbelianGroup(0, (big_n - 1,) if big_n > 2 else ())
        if k1 != expected or abs(determinant(one_minus(a))) != k1.order:
            return False, f"full {big_n}-shift: K1 = {k1}"
    golden = gc.golden_mean()
    if not pimsner_K1(golden).is_trivial or abs(determinant(one_minus(golden))) != 1:
        return False, f"golden mean: K1 = {pimsner_K1(golden)}"
    if not all(pimsner_K0(gc.full_shift(n)).is_trivial for n in range(2, 7)):
        return False, "K0 of a full shift is not trivial"
    elapsed = time.perf_counter() - start
    return elapsed < 1, f"Z/(N-1) for N = 2..6, golden mean trivial, in {elapsed * 1000:.0f} ms"


def check_smeb():
    b = make_backend(gc.cycle_graph(3))
    xs = _spanning(b, 3)
    for x in xs:
        n = _degree(b, x)
        for k in range(k_floor(n), 4):
            if k != max(0, -n) and not apply_Pnk(x, n, k).is_zero():
                return False, f"P_({n},{k}) nonzero on {x.coeffs}"
    for name in ("variant-a", "variant-b"):
        psi = get_psi(name)
        if any(not xi_equal(dirac_apply(x, psi), number_op(x)) for x in xs):
            return False, f"D differs from the number operator for {name}"
    return True, f"{len(xs)} spanning vectors on the 3-cycle; D = c for variants a and b"


def check_theta():
    o2 = make_backend(gc.cuntz_graph(2))
    dec = spectral_decomposition(o2, "default", 4)
    cells = [c for c in dec.cells if c.complete and c.k + abs(c.n) <= 4]
    wrong = [(c.n, c.k) for c in cells if c.rank != cuntz_cell_rank(2, c.n, c.k)]
    if wrong:
        return False, f"extrapolated ranks differ at {wrong}"
    rows = theta_trace("default", 2.0, shells=8, big_n=2)
    ratios = [r.ratio for r in rows if r.ratio is not None]
    if not theta_converges(rows) or not all(math.isfinite(r) for r in ratios):
        return False, f"ratios {ratios}"
    return True, f"{len(cells)} cell ranks validated; max shell ratio {max(ratios):.4f}"


CRITERIA = [
    (1, "KMS expectation", check_kms),
    (2, "Jones-Watatani indices", check_indices),
    (3, "projector algebra", check_projectors),
    (4, "oracle equivalence", check_oracle),
    (5, "model comparison", check_models),
    (6, "commutator boundedness", check_commutators),
    (7, "spectral data", check_spectral_data),
    (8, "K-theory", check_ktheory),
    (9, "SMEB degeneracy", check_smeb),
    (10, "theta-summability shadow", check_theta),
]


def run_criterion(number, name, check):
    ok, detail = check()
    return ok, f"criterion {number} {'PASS' if ok else 'FAIL'}: {name} ({detail})"


@pytest.mark.parametrize("number, name, check", CRITERIA, ids=[f"criterion-{c[0]}" for c in CRITERIA])
def test_criterion(number, name, check, acceptance_lines):
    ok, line = run_criterion(number, name, check)
    acceptance_lines.append(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    raise SystemExit(0 if all(ok for ok, _ in results) else 1)
