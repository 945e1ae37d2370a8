import random

import mpmath
import pytest

from picard3.nf_core import LABELS, NFElem, get_field, is_s_unit
from picard3.sunit_solver import (ExponentVector, SUnitError, SUnitSolution, brute_force,
                                  close_under_cycles, compute_c3, cycle, exponents_of,
                                  extremal_index, height_H, load_group, place_logs,
                                  sieve_solve, solution_extremal_index)

EXPECTED = {"K0": 0, "K1": 4, "K2": 72, "K3": 0, "L3": 25}


# ---------------------------------------------------------------- groups

@pytest.mark.parametrize("label", LABELS)
def test_group_generators(label):
    g = load_group(label)
    f = get_field(label)
    assert g.t == f.r1 + f.r2
    assert all(is_s_unit(x) for x in g.gens)
    for h in range(1, f.num_places):
        from picard3.nf_core import embed
        vals = [embed(r, h)[0] for r in g.free_gens]
        assert any(abs(v.imag) > 1e-30 or v.real < 0 for v in vals)


def test_k1_generators():
    g = load_group("K1")
    th = get_field("K1").gen()
    assert g.rho0 == -th
    assert g.free_gens == (2 * th + 1,)


# ---------------------------------------------------------------- exponents

def test_height_examples():
    assert height_H(ExponentVector(1, (0,))) == 0
    assert height_H(ExponentVector(0, (-3,))) == 3
    assert height_H(ExponentVector(5, (2, -7, 1))) == 7


@pytest.mark.parametrize("label", LABELS)
def test_exponent_roundtrip(label):
    g = load_group(label)
    rng = random.Random(7)
    for _ in range(10):
        v = ExponentVector(rng.randrange(g.w), tuple(rng.randint(-5, 5) for _ in range(g.t)))
        assert exponents_of(g, v.value(g)) == v
    assert exponents_of(g, NFElem.from_int(label, 2)) is None


def test_extremal_index_examples():
    g = load_group("K1")
    three = exponents_of(g, NFElem.from_int("K1", 3))
    third = exponents_of(g, NFElem.from_rational("K1", 1 / __import__("fractions").Fraction(3)))
    assert extremal_index(g, three) == 0
    assert extremal_index(g, third) == 1
    for a0 in range(g.w):
        assert extremal_index(g, ExponentVector(a0, (0,))) == g.t


def test_extremal_index_root_of_unity_every_field():
    for label in LABELS:
        g = load_group(label)
        assert extremal_index(g, ExponentVector(1, (0,) * g.t)) == g.t


# ---------------------------------------------------------------- c3

@pytest.mark.parametrize("label", ["K1", "K2", "L3"])
def test_c3_bracket(label):
    c3 = compute_c3(load_group(label))
    assert 0.1 < c3 < 0.3


@pytest.mark.parametrize("label", ["K1", "K2", "K3", "L3"])
def test_c3_decay(label):
    """The smallest place value of tau is at most exp(-c3 H(tau))."""
    g = load_group(label)
    c3 = compute_c3(g)
    rng = random.Random(11)
    for _ in range(100):
        H = rng.randint(1, 30)
        a = [rng.randint(-H, H) for _ in range(g.t)]
        a[rng.randrange(g.t)] = H * rng.choice((1, -1))
        v = ExponentVector(rng.randrange(g.w), tuple(a))
        with mpmath.workprec(128):
            assert min(place_logs(g, v)) <= -c3 * H + 1e-20


# ---------------------------------------------------------------- solutions

def test_cycle_of_sixth_roots():
    g = load_group("K1")
    th = get_field("K1").gen()
    z6 = -th  # a primitive sixth root of unity
    s = SUnitSolution.make(exponents_of(g, z6), exponents_of(g, z6.inverse()))
    assert s.verify(g)
    assert cycle(g, s) == {s}


def test_cycle_rejects_non_solution():
    g = load_group("K1")
    bogus = SUnitSolution.make(ExponentVector(0, (1,)), ExponentVector(0, (1,)))
    with pytest.raises(SUnitError):
        cycle(g, bogus)


def test_solution_counts(solutions):
    assert {k: len(v) for k, v in solutions.items()} == EXPECTED


def test_k1_contains_sixth_roots(solutions):
    g = load_group("K1")
    th = get_field("K1").gen()
    z6 = -th
    s = SUnitSolution.make(exponents_of(g, z6), exponents_of(g, z6.inverse()))
    assert s in solutions["K1"]


@pytest.mark.parametrize("label", ["K1", "K2", "L3"])
def test_solutions_exact_and_closed(solutions, label):
    g = load_group(label)
    sols = set(solutions[label])
    one = get_field(label).one()
    for s in sols:
        assert s.tau0.value(g) + s.tau1.value(g) == one
        assert SUnitSolution.make(s.tau1, s.tau0) == s
    assert close_under_cycles(g, sols) == sols


@pytest.mark.property
@pytest.mark.parametrize("label", ["K1", "K2", "L3"])
def test_cycle_closure_and_infinite_place(solutions, label):
    g = load_group(label)
    sols = set(solutions[label])
    for s in sols:
        c = cycle(g, s)
        assert c <= sols
        assert set().union(*(cycle(g, m) for m in c)) == c
        assert any(solution_extremal_index(g, m) != 0 for m in c)


@pytest.mark.property
@pytest.mark.parametrize("label", ["K1", "K2", "L3"])
def test_extremal_index_symmetry_detects_torsion(solutions, label):
    g = load_group(label)
    vecs = {s.tau0 for s in solutions[label]} | {s.tau1 for s in solutions[label]}
    vecs |= {ExponentVector(0, tuple(1 if i == j else 0 for i in range(g.t))) for j in range(g.t)}
    vecs |= {ExponentVector(a0, (0,) * g.t) for a0 in range(g.w)}
    for v in vecs:
        same = extremal_index(g, v) == extremal_index(g, v.inv(g.w))
        assert same == (height_H(v) == 0)


@pytest.mark.parametrize("label", ["K1", "K2", "L3"])
def test_galois_stability(solutions, label):
    g = load_group(label)
    f = get_field(label)
    sols = set(solutions[label])
    for s in sols:
        x, y = s.tau0.value(g), s.tau1.value(g)
        for sigma in range(len(f.automorphisms)):
            img = SUnitSolution.make(exponents_of(g, x.apply(sigma)), exponents_of(g, y.apply(sigma)))
            assert img in sols


def test_brute_force_k1_matches(solutions):
    g = load_group("K1")
    box = brute_force(g, 5)
    assert box == {s for s in solutions["K1"] if s.height() <= 5}
    assert box <= sieve_solve(g, 5)


def test_sieve_bound_must_be_positive():
    with pytest.raises(SUnitError):
        sieve_solve(load_group("K1"), 0)
