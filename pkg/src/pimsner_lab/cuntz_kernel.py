"""Dense tensor kernel for ``[D, S_e]`` on O_N at larger depths.

The degree-``n`` part of the depth-``D`` window has canonical basis
``W_{mu,nu}`` with ``(|mu|, |nu|) = (a, b)`` equal to ``(D, D-n)`` for ``n >= 0``
and ``(D+n, D)`` otherwise, all of weight ``N^{-b}``. A vector is an array of
shape ``(N^a, N^b)`` in orthonormal coordinates; words are read base ``N`` with
the first letter most significant, matching :func:`graph_core.enumerate_paths`.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse.linalg import LinearOperator, svds

from .xi_module import k_floor


def block_shape(n: int, depth: int) -> tuple[int, int]:
    return (depth, depth - n) if n >= 0 else (depth + n, depth)


def _exponents(x: np.ndarray, big_n: int) -> tuple[int, int]:
    a = round(np.log(x.shape[0]) / np.log(big_n)) if x.shape[0] > 1 else 0
    b = round(np.log(x.shape[1]) / np.log(big_n)) if x.shape[1] > 1 else 0
    return a, b


def apply_q(x: np.ndarray, n: int, k: int, big_n: int) -> np.ndarray:
    a, b = _exponents(x, big_n)
    if k >= b:
        return x
    j = b - k
    r = a - j
    t = x.reshape(big_n**r, big_n**j, big_n**k, big_n**j)
    tr = np.einsum("ajbj->ab", t)
    eye = np.eye(big_n**j)
    return (np.einsum("ab,jl->ajbl", tr, eye) / big_n**j).reshape(x.shape)


def apply_dirac(x: np.ndarray, n: int, psi, big_n: int) -> np.ndarray:
    _, b = _exponents(x, big_n)
    out = float(psi(n, b)) * x
    for k in range(k_floor(n), b):
        step = float(psi(n, k) - psi(n, k + 1))
        if step:
            out = out + step * apply_q(x, n, k, big_n)
    return out


def refine(x: np.ndarray, big_n: int) -> np.ndarray:
    """Cuntz-relation refinement by one letter; an isometry in orthonormal coordinates."""
    y = np.einsum("mn,tu->mtnu", x, np.eye(big_n)) / np.sqrt(big_n)
    return y.reshape(x.shape[0] * big_n, x.shape[1] * big_n)


def refine_adjoint(y: np.ndarray, big_n: int) -> np.ndarray:
    m, n = y.shape[0] // big_n, y.shape[1] // big_n
    return np.einsum("mtnt->mn", y.reshape(m, big_n, n, big_n)) / np.sqrt(big_n)


def apply_creation(x: np.ndarray, n: int, e: int, big_n: int) -> np.ndarray:
    """``S_e`` from degree ``n`` at depth ``D`` to degree ``n+1`` at depth ``D+1``."""
    rows = x.shape[0]
    y = np.zeros((rows * big_n, x.shape[1]))
    y[e * rows : (e + 1) * rows] = x
    return y if n >= 0 else refine(y, big_n)


def apply_annihilation(y: np.ndarray, n: int, e: int, big_n: int) -> np.ndarray:
    """Adjoint of :func:`apply_creation` (``n`` is the source degree)."""
    if n < 0:
        y = refine_adjoint(y, big_n)
    rows = y.shape[0] // big_n
    return y[e * rows : (e + 1) * rows]


def commutator_block(big_n: int, e: int, psi, n: int, depth: int) -> LinearOperator:
    a, b = block_shape(n, depth)
    a2, b2 = block_shape(n + 1, depth + 1)
    shape_in, shape_out = (big_n**a, big_n**b), (big_n**a2, big_n**b2)

    def matvec(v):
        x = np.asarray(v, dtype=float).reshape(shape_in)
        y = apply_dirac(apply_creation(x, n, e, big_n), n + 1, psi, big_n)
        y = y - apply_creation(apply_dirac(x, n, psi, big_n), n, e, big_n)
        return y.ravel()

    def rmatvec(v):
        y = np.asarray(v, dtype=float).reshape(shape_out)
        x = apply_annihilation(apply_dirac(y, n + 1, psi, big_n), n, e, big_n)
        x = x - apply_dirac(apply_annihilation(y, n, e, big_n), n, psi, big_n)
        return x.ravel()

    size_out, size_in = int(np.prod(shape_out)), int(np.prod(shape_in))
    return LinearOperator((size_out, size_in), matvec=matvec, rmatvec=rmatvec, dtype=float)


def _largest_singular_value(op: LinearOperator) -> float:
    m, n = op.shape
    if min(m, n) <= 256:
        dense = np.column_stack([op.matvec(col) for col in np.eye(n)])
        return float(np.linalg.norm(dense, 2))
    return float(svds(op, k=1, return_singular_vectors=False, tol=1e-12)[0])


def cuntz_commutator_norm(big_n: int, e: int, psi, depth: int) -> float:
    """``||[D, S_e]||`` restricted to the depth window of O_N."""
    return max(
        _largest_singular_value(commutator_block(big_n, e, psi, n, depth))
        for n in range(-depth, depth + 1)
    )
