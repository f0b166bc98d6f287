import itertools

import pytest

from pimsner_lab import graph_core as gc
from pimsner_lab.bimodule import make_backend
from pimsner_lab.operators import PSI
from pimsner_lab.shift_groupoid import (
    GroupoidPoint,
    Undecided,
    WordWithTail,
    basis_Rnk,
    compare_models,
    contains,
    convolve,
    evaluate,
    fiber_spectrum,
    indicator,
    involution,
    kappa_A_eval,
    localize_at_point,
    phi_infty_groupoid,
    shifted_equal,
    to_xi,
)
from pimsner_lab.xi_module import adjoint, multiply, phi_infty, window_symbols, xi_equal


@pytest.fixture(scope="module")
def golden():
    return gc.golden_mean()


def test_kappa_example():
    # full 2-shift points
    z = WordWithTail.generic
    assert kappa_A_eval(GroupoidPoint(z((1, 2)), 0, z((2, 2)))) == 1
    assert kappa_A_eval(GroupoidPoint(z((1, 2)), 0, z((1, 2)))) == 0
    assert kappa_A_eval(GroupoidPoint(z((2, 1, 2)), 1, z((1, 2)))) == 0
    assert kappa_A_eval(GroupoidPoint(z((1,)), -1, z((2, 1)))) == 1


def test_kappa_periodic_points():
    x = WordWithTail.periodic((1, 2))
    # sigma^2 x = x, so (x, 2, x) has kappa 0 and (x, 0, sigma^2 x) too
    assert kappa_A_eval(GroupoidPoint(x, 2, x)) == 0
    assert kappa_A_eval(GroupoidPoint(x, -2, x)) == 2
    with pytest.raises(ValueError, match="not in the groupoid"):
        kappa_A_eval(GroupoidPoint(x, 1, x))


def test_generic_tails_are_aperiodic():
    x = WordWithTail.generic((1,))
    assert not shifted_equal(x, 1, x, 0)
    assert shifted_equal(x, 1, x.prepend((2,)), 2)
    with pytest.raises(Undecided):
        shifted_equal(x, 0, WordWithTail.generic((1,), "w"), 0)
    with pytest.raises(Undecided):
        x.letters(3)


def test_word_helpers(golden):
    x = WordWithTail.periodic((1, 2), prefix=(2,))
    assert x.letters(5) == (2, 1, 2, 1, 2)
    assert x.shift(2).letters(3) == (2, 1, 2)
    assert x.is_admissible(golden)
    assert not WordWithTail.periodic((2,)).is_admissible(golden)
    assert str(x) == "2(12)^inf"


@pytest.mark.parametrize("n, k, depth, count", [(1, 0, 1, 2), (0, 0, 4, 8)])
def test_basis_sizes(n, k, depth, count):
    m = gc.full_shift(2) if (n, k, depth) == (1, 0, 1) else gc.golden_mean()
    assert len(basis_Rnk(m, n, k, depth)) == count


def test_basis_elements_have_the_right_kappa(golden):
    pairs = {(e.alpha, e.beta) for e in basis_Rnk(golden, 0, 1, 2)}
    assert pairs == {((1, 1), (2, 1)), ((2, 1), (1, 1))}
    for n, k in [(0, 1), (1, 1), (-1, 2), (2, 0)]:
        for e in basis_Rnk(golden, n, k, 4):
            x, y = WordWithTail.generic(e.alpha), WordWithTail.generic(e.beta)
            assert kappa_A_eval(GroupoidPoint(x, n, y)) == k


def test_cylinder_membership(golden):
    p = GroupoidPoint(WordWithTail.generic((1, 1, 2)), 0, WordWithTail.generic((2, 1, 2)))
    assert contains(golden, (1,), (2,), p)
    assert contains(golden, (1, 1), (2, 1), p)
    assert not contains(golden, (1, 2), (2, 1), p)
    assert not contains(golden, (1, 1), (2,), p)  # wrong lag
    f = indicator(golden, (1,), (2,), 3) + indicator(golden, (1, 1), (2, 1), 4)
    assert evaluate(f, p) == 7


@pytest.mark.parametrize("m", [gc.golden_mean(), gc.full_shift(2)])
def test_convolution_matches_toeplitz_product(m):
    b = make_backend(m)
    syms = window_symbols(b, 2)
    for s, t in itertools.product(syms, repeat=2):
        f, g = indicator(m, *s), indicator(m, *t)
        lhs = to_xi(b, convolve(f, g))
        rhs = multiply(to_xi(b, f), to_xi(b, g))
        assert xi_equal(lhs, rhs), (s, t)


def test_involution_is_the_adjoint(golden):
    b = make_backend(golden)
    for s in window_symbols(b, 2):
        f = indicator(golden, *s, 3)
        assert xi_equal(to_xi(b, involution(f)), adjoint(to_xi(b, f)))


def test_unit_space_restriction_is_phi_infty(golden):
    b = make_backend(golden)
    for s, t in itertools.product(window_symbols(b, 2), repeat=2):
        f = convolve(indicator(golden, *s), indicator(golden, *t))
        lhs = phi_infty_groupoid(f, b)
        rhs = phi_infty(to_xi(b, f))
        assert lhs.equals(rhs)


@pytest.mark.parametrize("m", [gc.golden_mean(), gc.full_shift(2)])
def test_compare_models_small_window(m):
    rep = compare_models(m, -1, 1, 1, 3)
    assert rep.passed, rep.failures[:3]
    assert rep.summary().startswith("all checks passed (window")


def test_localization_at_a_periodic_point(golden):
    x = WordWithTail.periodic((1, 2))
    fiber = localize_at_point(golden, x, -1, 1, 1, 3)
    # (0, 1) would need a neighbour starting with the forbidden word 22
    assert sorted((e.n, e.k) for e in fiber) == [(-1, 1), (0, 0), (1, 0), (1, 0)]
    for e in fiber:
        assert kappa_A_eval(GroupoidPoint(e.source, e.n, x)) == e.k
    spectrum = dict(fiber_spectrum(fiber, PSI["default"]))
    assert spectrum == {0: 1, 1: 2, -2: 1}
