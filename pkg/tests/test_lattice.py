import itertools
import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from picard3.lattice import (IntLattice, LatticeError, gram_schmidt, is_lll_reduced, lll_reduce,
                             same_lattice, shortest_vector_lower_bound, squared_norm)


def test_identity_is_fixed():
    L = IntLattice.from_columns([(1, 0, 0), (0, 1, 0), (0, 0, 1)])
    assert lll_reduce(L) == L


def test_unimodular_plane():
    L = IntLattice.from_columns([(1, 0), (10, 1)])
    R = lll_reduce(L)
    assert squared_norm(R.basis[0]) <= 2
    assert same_lattice(L, R)


def _unimodular(seed):
    rng = __import__("random").Random(seed)
    U = [[1 if i == j else 0 for j in range(3)] for i in range(3)]
    for _ in range(12):
        i, j = rng.sample(range(3), 2)
        k = rng.randint(-5, 5)
        for r in range(3):
            U[r][i] += k * U[r][j]
    return U


@pytest.mark.parametrize("seed", range(5))
def test_diag_times_unimodular(seed):
    D = [[1, 0, 0], [0, 2, 0], [0, 0, 3]]
    U = _unimodular(seed)
    M = [[sum(D[i][k] * U[k][j] for k in range(3)) for j in range(3)] for i in range(3)]
    L = IntLattice.from_matrix(M)
    R = lll_reduce(L)
    mu, B = gram_schmidt(R.basis)
    for k in range(1, 3):
        assert B[k] >= (Fraction(3, 4) - mu[k][k - 1] ** 2) * B[k - 1]
    assert all(abs(mu[i][j]) <= Fraction(1, 2) for i in range(3) for j in range(i))
    assert same_lattice(L, R)
    assert abs(R.determinant()) == 6


def test_lower_bound_examples():
    with mpmath.workprec(128):
        b = shortest_vector_lower_bound(IntLattice.from_columns([(1, 0), (0, 1)]))
        assert abs(b - 2 ** -0.5) < 1e-15
        b = shortest_vector_lower_bound(IntLattice.from_columns([(5, 0, 0), (0, 5, 0), (0, 0, 5)]))
        assert abs(b - 2.5) < 1e-15


def test_lower_bound_requires_reduced_basis():
    with pytest.raises(LatticeError):
        shortest_vector_lower_bound(IntLattice.from_columns([(1, 0), (10, 1)]))


def test_dependent_columns_rejected():
    with pytest.raises(LatticeError):
        lll_reduce(IntLattice.from_columns([(1, 2), (2, 4)]))


def test_lower_bound_in_small_box():
    L = lll_reduce(IntLattice.from_columns([(7, 3, 1), (2, 9, 4), (5, 1, 8)]))
    bound = shortest_vector_lower_bound(L)
    for coef in itertools.product(range(-3, 4), repeat=3):
        if any(coef):
            v = [sum(c * b[i] for c, b in zip(coef, L.basis)) for i in range(3)]
            assert math.sqrt(squared_norm(v)) >= float(bound) - 1e-12


matrices = st.lists(st.lists(st.integers(-30, 30), min_size=3, max_size=3), min_size=3, max_size=3)


@pytest.mark.property
@settings(max_examples=60, deadline=None)
@given(matrices)
def test_reduction_keeps_lattice(rows):
    L = IntLattice.from_matrix(rows)
    if L.determinant() == 0:
        return
    R = lll_reduce(L)
    assert is_lll_reduced(R)
    assert same_lattice(L, R)
    assert abs(R.determinant()) == abs(L.determinant())
