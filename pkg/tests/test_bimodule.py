import random
from fractions import Fraction

import pytest

from pimsner_lab import graph_core as gc
from pimsner_lab.bimodule import (
    PathVector,
    beta_exp,
    basis_vector,
    canonical_frame,
    decompose_q,
    frame_reconstruct,
    left_act,
    left_inner,
    make_backend,
    phi_ell,
    q_op,
    require_decomposition,
    right_act,
    right_inner,
    rotated_frame,
    tensor,
    theta,
    verify_assumption_one,
    verify_q_properties,
)
from pimsner_lab.graph_core import PreconditionError

BACKENDS = {
    "O2": lambda: make_backend(gc.cuntz_graph(2)),
    "O3": lambda: make_backend(gc.cuntz_graph(3)),
    "cycle3": lambda: make_backend(gc.cycle_graph(3)),
    "golden": lambda: make_backend(gc.golden_mean()),
    "full2": lambda: make_backend(gc.full_shift(2)),
}


def random_vector(b, degree, rng, extra=1):
    depth = degree if b.kind == "graph" else degree + extra
    keys = b.paths(depth)
    coeffs = {k: Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for k in keys if rng.random() < 0.7}
    return PathVector(b, degree, coeffs, depth)


def random_element(b, rng, depth=1):
    a = b.const(0).refine(depth) if b.kind == "sft" else b.zero()
    vals = tuple(Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in a.values)
    return type(a)(b, a.depth, vals)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_inner_products_are_module_maps(name):
    b = BACKENDS[name]()
    rng = random.Random(7)
    for degree in range(3):
        for _ in range(5):
            x, y = random_vector(b, degree, rng), random_vector(b, degree, rng)
            a = random_element(b, rng)
            assert right_inner(x, right_act(y, a)).equals(right_inner(x, y) * a)
            assert left_inner(left_act(a, x), y).equals(a * left_inner(x, y))
            assert right_inner(x, x).is_positive()
            assert left_inner(x, x).is_positive()
            assert right_inner(x, y).equals(right_inner(y, x).conj())


@pytest.mark.parametrize("name", sorted(BACKENDS))
@pytest.mark.parametrize("side", ["right", "left"])
@pytest.mark.parametrize("make_frame", [canonical_frame, rotated_frame])
def test_frames_reconstruct_vectors(name, side, make_frame):
    b = BACKENDS[name]()
    rng = random.Random(11)
    for length in range(4):
        frame = make_frame(b, length, side)
        for _ in range(3):
            x = random_vector(b, length, rng)
            assert frame_reconstruct(frame, x).equals(x)


def test_rotated_frame_is_not_the_canonical_one():
    b = BACKENDS["O2"]()
    assert {tuple(sorted(v.coeffs.items())) for v in rotated_frame(b, 1).vectors} != {
        tuple(sorted(v.coeffs.items())) for v in canonical_frame(b, 1).vectors
    }


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_phi_ell_is_frame_independent(name):
    b = BACKENDS[name]()
    for length in range(4):
        q = q_op(b, length)
        canon = phi_ell(q.apply, length, b, canonical_frame(b, length))
        rot = phi_ell(q.apply, length, b, rotated_frame(b, length))
        assert canon.equals(rot)
        # T = theta_{x,y} has Phi_l(T) = _A(x|y)
        x, y = basis_vector(b, b.paths(length)[0]), basis_vector(b, b.paths(length)[-1])
        assert phi_ell(theta(x, y), length, b, rotated_frame(b, length)).equals(left_inner(x, y))


@pytest.mark.parametrize("big_n", [2, 3])
def test_jones_watatani_index_cuntz(big_n):
    b = make_backend(gc.cuntz_graph(big_n))
    for length in range(7):
        assert beta_exp(b, length).equals(b.const(big_n**length))


@pytest.mark.parametrize("m", [gc.golden_mean(), gc.full_shift(2), gc.full_shift(3)])
def test_jones_watatani_index_shift(m):
    b = make_backend(m)
    for length in range(7):
        assert beta_exp(b, length).equals(b.one())


def test_index_of_a_graph_counts_paths_by_range():
    g = gc.fibonacci_graph()
    b = make_backend(g)
    for length in range(6):
        assert list(beta_exp(b, length).values) == gc.row_sums(g.adjacency_int(), length)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_q_properties(name):
    rep = verify_q_properties(BACKENDS[name](), 3)
    assert rep.passed, rep.failures()


def test_q_properties_fibonacci_float():
    b = make_backend(gc.fibonacci_graph())
    rep = verify_q_properties(b, 3)
    assert rep.passed and not b.exact and rep.tolerance > 0


def test_decomposition_cuntz():
    b = BACKENDS["O2"]()
    for length in range(5):
        dec = decompose_q(b, length)
        assert dec.success
        assert dec.central.equals(b.const(Fraction(1, 2**length)))
        assert all(x == 1 for x in dec.projection.values())


def test_decomposition_shift_and_cycle():
    for name in ("golden", "full2", "cycle3"):
        b = BACKENDS[name]()
        for length in range(4):
            dec = decompose_q(b, length)
            assert dec.success and dec.central.equals(b.one())
        require_decomposition(b, 3)


def test_decomposition_fails_on_fibonacci_with_certificate():
    b = make_backend(gc.fibonacci_graph())
    assert decompose_q(b, 0).success
    dec = decompose_q(b, 1)
    assert not dec.success
    p, r = dec.certificate
    assert p[0] == r[0]  # two paths with the same range but different q
    assert b.q_scalar(p) != pytest.approx(b.q_scalar(r))
    with pytest.raises(PreconditionError, match="Assumption 2"):
        require_decomposition(b, 2)


def test_q_matches_perron_data():
    g = gc.fibonacci_graph()
    b = make_backend(g)
    pd = gc.perron_data(g, "float")
    for p in b.paths(2):
        expected = pd.vector[gc.path_source(g, p)] / (pd.eigenvalue**2 * pd.vector[p[0]])
        assert b.q_scalar(p) == pytest.approx(expected, rel=1e-12)


def test_assumption_one_cuntz_exact():
    b = BACKENDS["O2"]()
    rep = verify_assumption_one(basis_vector(b, b.paths(2)[1]), n_max=12)
    assert rep.passed and all(d == 0 for _, d in rep.deviations)


def test_assumption_one_fibonacci_rate():
    b = make_backend(gc.fibonacci_graph())
    lam = (1 + 5**0.5) / 2
    rep = verify_assumption_one(basis_vector(b, b.paths(1)[0]), n_max=30)
    assert rep.passed
    assert rep.rate == pytest.approx(lam**-2, rel=1e-4)


def test_assumption_one_refuses_non_primitive_non_regular():
    g = gc.graph_from_adjacency([[1, 1], [0, 1]])
    b = make_backend(g)
    with pytest.raises(PreconditionError):
        verify_assumption_one(basis_vector(b, b.paths(1)[0]))


def test_tensor_is_associative_and_inner_products_multiply():
    b = BACKENDS["golden"]()
    rng = random.Random(3)
    x, y, z = (random_vector(b, 1, rng) for _ in range(3))
    assert tensor(tensor(x, y), z).equals(tensor(x, tensor(y, z)))
    # (x1 (x) y1 | x2 (x) y2) = (y1 | (x1|x2) y2)
    x2, y2 = random_vector(b, 1, rng), random_vector(b, 1, rng)
    lhs = right_inner(tensor(x, y), tensor(x2, y2))
    rhs = right_inner(y, left_act(right_inner(x, x2), y2))
    assert lhs.equals(rhs)
