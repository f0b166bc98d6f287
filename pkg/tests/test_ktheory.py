import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.matrices.normalforms import invariant_factors as sympy_invariant_factors

from pimsner_lab import graph_core as gc
from pimsner_lab.ktheory import (
    AbelianGroup,
    cokernel,
    determinant,
    graph_K_groups,
    invariant_factors,
    is_smith_form,
    matmul,
    one_minus,
    pimsner_K0,
    pimsner_K1,
    smith_normal_form,
)

int_matrices = st.tuples(st.integers(1, 5), st.integers(1, 5)).flatmap(
    lambda rc: st.lists(
        st.lists(st.integers(-40, 40), min_size=rc[1], max_size=rc[1]), min_size=rc[0], max_size=rc[0]
    )
)


@settings(max_examples=150, deadline=None)
@given(int_matrices)
def test_smith_form_properties(m):
    u, s, v = smith_normal_form(m)
    assert matmul(matmul(u, m), v) == s
    assert is_smith_form(s)
    assert abs(determinant(u)) == 1
    assert abs(determinant(v)) == 1


@settings(max_examples=100, deadline=None)
@given(int_matrices)
def test_invariant_factors_match_sympy(m):
    ours = [d for d in invariant_factors(m) if d]
    theirs = [abs(int(d)) for d in sympy_invariant_factors(sympy.Matrix(m), domain=sympy.ZZ) if d]
    assert ours == theirs


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5).flatmap(
    lambda n: st.lists(st.lists(st.integers(-9, 9), min_size=n, max_size=n), min_size=n, max_size=n)))
def test_determinant_matches_sympy_and_cokernel_order(m):
    det = determinant(m)
    assert det == int(sympy.Matrix(m).det())
    group = cokernel(m)
    if det:
        assert group.free_rank == 0 and group.order == abs(det)
    else:
        assert group.free_rank > 0


def test_big_entries_stay_exact():
    m = [[10**30 + 1, 7], [3, 10**25]]
    u, s, v = smith_normal_form(m)
    assert matmul(matmul(u, m), v) == s
    assert s[0][0] * s[1][1] == abs(determinant(m))


@pytest.mark.parametrize("n", range(2, 7))
def test_full_shift_K1_is_cyclic_of_order_n_minus_1(n):
    k1 = pimsner_K1(gc.full_shift(n))
    expected = AbelianGroup(0, (n - 1,) if n > 2 else ())
    assert k1 == expected
    assert k1.order == n - 1 == abs(determinant(one_minus(gc.full_shift(n))))
    assert pimsner_K0(gc.full_shift(n)).is_trivial


def test_golden_mean_is_trivial():
    assert pimsner_K1(gc.golden_mean()).is_trivial
    assert pimsner_K0(gc.golden_mean()).is_trivial


def test_permutation_matrix_has_free_groups():
    flip = gc.sft_from_matrix([[0, 1], [1, 0]])
    assert pimsner_K1(flip) == AbelianGroup(1, ())
    assert pimsner_K0(flip) == AbelianGroup(1, ())


def test_group_rendering():
    assert str(AbelianGroup(0, (3,))) == "Z/3"
    assert str(AbelianGroup(0, ())) == "0"
    assert str(AbelianGroup(1, (2,))) == "Z + Z/2"
    assert AbelianGroup(2, (2, 6)).to_json() == {"free_rank": 2, "torsion": [2, 6]}


def test_graph_matrices_with_multiple_edges():
    k0, k1 = graph_K_groups(gc.cuntz_graph(4).adjacency_int())
    assert str(k1) == "Z/3" and k0.is_trivial
