"""Exact LLL reduction of small integer lattices.

Bases are stored as lists of column vectors (the generators). All Gram-Schmidt
data is kept in Fractions, which is fine for dimension <= 5 even with entries
of several hundred bits.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class IntLattice:
    basis: tuple[tuple[int, ...], ...]  # columns

    @property
    def dim(self) -> int:
        return len(self.basis)

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence[int]]) -> "IntLattice":
        return cls(tuple(tuple(int(x) for x in c) for c in cols))

    @classmethod
    def from_matrix(cls, rows: Sequence[Sequence[int]]) -> "IntLattice":
        """Columns of the given row-major matrix."""
        n = len(rows[0])
        return cls(tuple(tuple(int(r[j]) for r in rows) for j in range(n)))

    def matrix(self) -> list[list[int]]:
        return [[c[i] for c in self.basis] for i in range(len(self.basis[0]))]

    def determinant(self) -> int:
        return _det([list(r) for r in self.matrix()])


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def _det(m: list[list[int]]) -> int:
    # Bareiss, exact on integers
    n = len(m)
    if any(len(r) != n for r in m):
        raise LatticeError("basis matrix is not square")
    m = [r[:] for r in m]
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            sw = next((i for i in range(k + 1, n) if m[i][k]), None)
            if sw is None:
                return 0
            m[k], m[sw] = m[sw], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[-1][-1]


def gram_schmidt(basis: Sequence[Sequence[int]]):
    """Return (mu, B) with B[i] = |b_i*|^2 as Fractions."""
    n = len(basis)
    star: list[list[Fraction]] = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    B = [Fraction(0)] * n
    for i in range(n):
        v = [Fraction(x) for x in basis[i]]
        for j in range(i):
            mu[i][j] = _dot(basis[i], star[j]) / B[j]
            v = [a - mu[i][j] * b for a, b in zip(v, star[j])]
        star.append(v)
        B[i] = _dot(v, v)
        if B[i] == 0:
            raise LatticeError("basis vectors are linearly dependent")
    return mu, B


def lll_reduce(L: IntLattice, delta: Fraction = Fraction(3, 4)) -> IntLattice:
    delta = Fraction(delta)
    if not Fraction(1, 4) < delta < 1:
        raise LatticeError("delta must lie in (1/4, 1)")
    b = [list(c) for c in L.basis]
    n = len(b)
    mu, B = gram_schmidt(b)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = round(mu[k][j])
            if q:
                b[k] = [x - q * y for x, y in zip(b[k], b[j])]
                for i in range(j):
                    mu[k][i] -= q * mu[j][i]
                mu[k][j] -= q
        if B[k] >= (delta - mu[k][k - 1] ** 2) * B[k - 1]:
            k += 1
            continue
        # swap b[k-1], b[k] and update the Gram-Schmidt data
        b[k - 1], b[k] = b[k], b[k - 1]
        m = mu[k][k - 1]
        Bk = B[k] + m * m * B[k - 1]
        mu[k][k - 1] = m * B[k - 1] / Bk
        B[k] = B[k - 1] * B[k] / Bk
        B[k - 1] = Bk
        for j in range(k - 1):
            mu[k - 1][j], mu[k][j] = mu[k][j], mu[k - 1][j]
        for i in range(k + 1, n):
            t = mu[i][k]
            mu[i][k] = mu[i][k - 1] - m * t
            mu[i][k - 1] = t + mu[k][k - 1] * mu[i][k]
        k = max(k - 1, 1)
    return IntLattice.from_columns(b)


def is_lll_reduced(L: IntLattice, delta: Fraction = Fraction(3, 4)) -> bool:
    mu, B = gram_schmidt(L.basis)
    n = L.dim
    for i in range(n):
        for j in range(i):
            if abs(mu[i][j]) > Fraction(1, 2):
                return False
    return all(B[k] >= (delta - mu[k][k - 1] ** 2) * B[k - 1] for k in range(1, n))


def shortest_vector_lower_bound(L: IntLattice, t: int | None = None, check: bool = True):
    """2^(-t/2) |b_0| for a reduced basis living in dimension t + 1.

    Returned as an mpmath real. `t` defaults to dim - 1.
    """
    if check and not is_lll_reduced(L):
        raise LatticeError("basis is not LLL-reduced")
    if t is None:
        t = L.dim - 1
    b0 = L.basis[0]
    return mpmath.sqrt(_dot(b0, b0)) * mpmath.mpf(2) ** (-mpmath.mpf(t) / 2)


def squared_norm(v: Sequence[int]) -> int:
    return _dot(v, v)


def same_lattice(a: IntLattice, b: IntLattice) -> bool:
    """True when the two bases differ by a unimodular transformation."""
    da, db = a.determinant(), b.determinant()
    if da == 0 or abs(da) != abs(db):
        return False
    # every column of b must be an integer combination of a's columns
    ma = [[Fraction(x) for x in row] for row in a.matrix()]
    n = len(ma)
    for col in b.basis:
        sol = _solve_frac(ma, [Fraction(x) for x in col])
        if any(s.denominator != 1 for s in sol):
            return False
    return True


def _solve_frac(m, rhs):
    n = len(m)
    aug = [row[:] + [rhs[i]] for i, row in enumerate(m)]
    for c in range(n):
        piv = next(i for i in range(c, n) if aug[i][c] != 0)
        aug[c], aug[piv] = aug[piv], aug[c]
        for i in range(n):
            if i != c and aug[i][c]:
                f = aug[i][c] / aug[c][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[c])]
    return [aug[i][n] / aug[i][i] for i in range(n)]
