"""Integer Smith normal form and the Pimsner K-groups of Cuntz-Krieger algebras."""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph_core import SFTMatrix, validate

IntMatrix = list[list[int]]


@dataclass(frozen=True)
class AbelianGroup:
    free_rank: int
    torsion: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if any(d < 2 for d in self.torsion):
            raise ValueError("invariant factors must be >= 2")
        if any(b % a for a, b in zip(self.torsion, self.torsion[1:])):
            raise ValueError("invariant factors must form a divisibility chain")

    @property
    def is_trivial(self) -> bool:
        return self.free_rank == 0 and not self.torsion

    @property
    def order(self):
        """Group order, or None when infinite."""
        if self.free_rank:
            return None
        out = 1
        for d in self.torsion:
            out *= d
        return out

    def __str__(self) -> str:
        parts = ["Z"] * self.free_rank + [f"Z/{d}" for d in self.torsion]
        return " + ".join(parts) if parts else "0"

    def to_json(self) -> dict:
        return {"free_rank": self.free_rank, "torsion": list(self.torsion)}


def identity(n: int) -> IntMatrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    if not a or not b:
        return [[0] * (len(b[0]) if b else 0) for _ in a]
    return [[sum(x * y for x, y in zip(row, col)) for col in zip(*b)] for row in a]


def determinant(m: IntMatrix) -> int:
    """Exact determinant by fraction-free Bareiss elimination."""
    n = len(m)
    a = [row[:] for row in m]
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[-1][-1] if n else 1


def smith_normal_form(m: IntMatrix) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Return ``(U, S, V)`` with ``S = U M V`` diagonal and ``U``, ``V`` unimodular.

    Pivots are chosen by minimal absolute value to keep entries small.
    """
    rows = len(m)
    cols = len(m[0]) if rows else 0
    s = [list(map(int, r)) for r in m]
    u = identity(rows)
    v = identity(cols)

    def swap_rows(i, j):
        s[i], s[j] = s[j], s[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for r in s:
            r[i], r[j] = r[j], r[i]
        for r in v:
            r[i], r[j] = r[j], r[i]

    def add_row(src, dst, c):  # row_dst += c * row_src
        s[dst] = [x + c * y for x, y in zip(s[dst], s[src])]
        u[dst] = [x + c * y for x, y in zip(u[dst], u[src])]

    def add_col(src, dst, c):
        for r in s:
            r[dst] += c * r[src]
        for r in v:
            r[dst] += c * r[src]

    t = 0
    while t < min(rows, cols):
        nonzero = [(abs(s[i][j]), i, j) for i in range(t, rows) for j in range(t, cols) if s[i][j]]
        if not nonzero:
            break
        _, i, j = min(nonzero)
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            done = True
            for i in range(t + 1, rows):
                if s[i][t]:
                    q = s[i][t] // s[t][t]
                    add_row(t, i, -q)
                    if s[i][t]:
                        done = False
            for j in range(t + 1, cols):
                if s[t][j]:
                    q = s[t][j] // s[t][t]
                    add_col(t, j, -q)
                    if s[t][j]:
                        done = False
            if not done:
                _, i, j = min(
                    [(abs(s[i][t]), i, t) for i in range(t, rows) if s[i][t]]
                    + [(abs(s[t][j]), t, j) for j in range(t, cols) if s[t][j]]
                )
                swap_rows(t, i)
                swap_cols(t, j)
                continue
            # divisibility: fold any offending entry of the remaining block into row t
            bad = next(
                ((i, j) for i in range(t + 1, rows) for j in range(t + 1, cols) if s[i][j] % s[t][t]),
                None,
            )
            if bad is None:
                break
            add_row(bad[0], t, 1)
        if s[t][t] < 0:
            s[t] = [-x for x in s[t]]
            u[t] = [-x for x in u[t]]
        t += 1
    return u, s, v


def invariant_factors(m: IntMatrix) -> list[int]:
    _, s, _ = smith_normal_form(m)
    return [s[i][i] for i in range(min(len(s), len(s[0]) if s else 0))]


def is_smith_form(s: IntMatrix) -> bool:
    rows, cols = len(s), len(s[0]) if s else 0
    for i in range(rows):
        for j in range(cols):
            if i != j and s[i][j]:
                return False
    diag = [s[i][i] for i in range(min(rows, cols))]
    if any(d < 0 for d in diag):
        return False
    for a, b in zip(diag, diag[1:]):
        if a == 0 and b != 0:
            return False
        if a and b % a:
            return False
    return True


def cokernel(m: IntMatrix) -> AbelianGroup:
    """Z^rows / M Z^cols."""
    rows = len(m)
    diag = invariant_factors(m)
    nonzero = [d for d in diag if d]
    return AbelianGroup(rows - len(nonzero), tuple(d for d in nonzero if d > 1))


def kernel_rank(m: IntMatrix) -> int:
    cols = len(m[0]) if m else 0
    return cols - sum(1 for d in invariant_factors(m) if d)


def one_minus(a: SFTMatrix | IntMatrix) -> IntMatrix:
    rows = a.entries if isinstance(a, SFTMatrix) else a
    n = len(rows)
    return [[int(i == j) - int(rows[i][j]) for j in range(n)] for i in range(n)]


def pimsner_K1(a: SFTMatrix) -> AbelianGroup:
    """K^1(O_A) = Z^N / (1 - A) Z^N."""
    return cokernel(one_minus(validate(a)))


def pimsner_K0(a: SFTMatrix) -> AbelianGroup:
    """K^0(O_A) = ker(1 - A), a free abelian group."""
    return AbelianGroup(kernel_rank(one_minus(validate(a))))


def graph_K_groups(adjacency: IntMatrix) -> tuple[AbelianGroup, AbelianGroup]:
    """``(K^0, K^1)`` for an edge-count vertex matrix with no sources."""
    m = one_minus(adjacency)
    return AbelianGroup(kernel_rank(m)), cokernel(m)
