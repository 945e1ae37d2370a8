from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from picard3.nf_core import (LABELS, FieldError, NFElem, elem, embed, get_field, is_s_unit,
                             log_abs_at_place, min_poly_mod3_is_linear_power, nf_arith, norm,
                             ord_at_3, places, s_norm)
from picard3.sunit_solver import load_group


def th(label):
    return get_field(label).gen()


# ---------------------------------------------------------------- field data

def test_min_polys():
    expect = {"K0": (-1, 1), "K1": (1, 1, 1), "K2": (1, -3, 0, 1), "K3": (-3, 0, 0, 1),
              "L3": (3, 0, 0, 0, 0, 0, 1)}
    for label, mp in expect.items():
        f = get_field(label)
        assert f.min_poly == mp
        assert f.degree == f.r1 + 2 * f.r2


@pytest.mark.parametrize("label", LABELS)
def test_totally_ramified_at_3(label):
    assert min_poly_mod3_is_linear_power(label)


def test_place_order():
    kinds = [p.kind for p in places("L3")]
    assert kinds == ["finite", "complex", "complex", "complex"]
    assert [p.kind for p in places("K2")] == ["finite", "real", "real", "real"]


# ---------------------------------------------------------------- arithmetic

def test_arith_examples():
    assert nf_arith(th("K1"), th("K1"), "mul").coords == (-1, -1)
    t3 = th("L3") ** 3
    assert nf_arith(t3, t3, "mul").coords == (-3, 0, 0, 0, 0, 0)
    t = th("K2")
    assert nf_arith(t, t * t - 3, "mul").coords == (-1, 0, 0)


def test_arith_errors():
    with pytest.raises(FieldError):
        nf_arith(th("K1"), th("K2"), "add")
    with pytest.raises(ZeroDivisionError):
        nf_arith(th("K1"), th("K1") * 0, "div")


def test_norm_examples():
    assert norm(th("K1")) == 1
    assert norm(th("K3")) == 3
    # 2t + 1 squares to -3 in K1, so its norm is (2t+1)(2t'+1) = 3
    assert norm(2 * th("K1") + 1) == 3


def test_ord_at_3_examples():
    assert ord_at_3(NFElem.from_int("K1", 3)) == 2
    assert ord_at_3(2 * th("K1") + 1) == 1
    assert ord_at_3(th("L3")) == 1
    with pytest.raises(ValueError):
        ord_at_3(th("K1") * 0)


def test_s_unit_examples():
    assert is_s_unit(th("K1"))
    assert not is_s_unit(NFElem.from_int("K1", 2))
    assert is_s_unit(2 * th("K1") + 1)
    assert not is_s_unit(th("K1") * 0)


def test_s_norm_examples():
    assert s_norm(NFElem.from_int("K0", 3)) == 1
    assert s_norm(NFElem.from_int("K0", 2)) == 2
    assert s_norm(2 * th("K1") + 1) == 1


@mpmath.workprec(288)
def test_embed_examples():
    z, rad = embed(th("K1"), 1)
    assert abs(z - mpmath.mpc(-0.5, mpmath.sqrt(3) / 2)) < 1e-70
    assert rad < mpmath.mpf(2) ** -200
    z, _ = embed(th("K3"), 1)
    assert abs(z - mpmath.cbrt(3)) < 1e-70
    for p in (1, 2, 3):
        z, _ = embed(th("K2"), p)
        assert z.imag == 0
    with pytest.raises(FieldError):
        embed(th("K1"), 0)


@pytest.mark.parametrize("label", LABELS)
@mpmath.workprec(288)
def test_embeddings_are_roots(label):
    f = get_field(label)
    for p in range(1, f.num_places):
        z, rad = embed(f.gen(), p)
        val = mpmath.polyval(list(reversed(f.min_poly)), z)
        assert abs(val) < 1e-60


# ---------------------------------------------------------------- properties

def elems(label, lo=-6, hi=6):
    n = get_field(label).degree
    return st.lists(st.integers(lo, hi), min_size=n, max_size=n).map(
        lambda cs: NFElem.from_coords(label, cs)).filter(lambda a: not a.is_zero())


def s_units(label):
    g = load_group(label)
    return st.tuples(st.integers(0, g.w - 1),
                     st.lists(st.integers(-4, 4), min_size=g.t, max_size=g.t)).map(
        lambda e: _unit(g, e))


def _unit(g, e):
    x = g.rho0 ** e[0]
    for r, k in zip(g.free_gens, e[1]):
        x = x * (r ** k if k >= 0 else r.inverse() ** (-k))
    return x


labels = st.sampled_from(LABELS)


@pytest.mark.property
@settings(max_examples=60, deadline=None)
@given(st.data())
def test_norm_multiplicative(data):
    label = data.draw(labels)
    a, b = data.draw(elems(label)), data.draw(elems(label))
    assert norm(a * b) == norm(a) * norm(b)
    assert norm(a / b) == norm(a) / norm(b)


@pytest.mark.property
@settings(max_examples=60, deadline=None)
@given(st.data())
def test_ord_additive(data):
    label = data.draw(labels)
    a, b = data.draw(elems(label)), data.draw(elems(label))
    assert ord_at_3(a * b) == ord_at_3(a) + ord_at_3(b)


@pytest.mark.property
@settings(max_examples=40, deadline=None)
@given(st.data())
def test_product_formula(data):
    """The log absolute values of an S-unit over all places of S sum to zero."""
    label = data.draw(labels)
    u = data.draw(s_units(label))
    f = get_field(label)
    with mpmath.workprec(256):
        total = sum(log_abs_at_place(u, p, 256) for p in range(f.num_places))
        assert abs(total) < mpmath.mpf(10) ** -50


@pytest.mark.property
@settings(max_examples=40, deadline=None)
@given(st.data())
def test_norm_matches_embeddings(data):
    """|N(a)| is the product of |a| over infinite places, complex ones squared."""
    label = data.draw(labels)
    a = data.draw(elems(label))
    f = get_field(label)
    with mpmath.workprec(256):
        prod = mpmath.mpf(1)
        for p in range(1, f.num_places):
            z, _ = embed(a, p)
            prod *= abs(z) ** (2 if f.place_kind(p) == "complex" else 1)
        n = abs(norm(a))
        assert abs(prod - mpmath.mpf(n.numerator) / n.denominator) < mpmath.mpf(10) ** -50 * (1 + prod)


@pytest.mark.property
@settings(max_examples=40, deadline=None)
@given(st.data())
def test_s_unit_inverse(data):
    label = data.draw(labels)
    u = data.draw(s_units(label))
    assert is_s_unit(u) and is_s_unit(u.inverse())
    assert s_norm(u) == 1


@pytest.mark.property
@settings(max_examples=40, deadline=None)
@given(st.data())
def test_embed_respects_products(data):
    label = data.draw(st.sampled_from(("K1", "K2", "K3", "L3")))
    a, b = data.draw(elems(label)), data.draw(elems(label))
    f = get_field(label)
    for p in range(1, f.num_places):
        za, ra = embed(a, p)
        zb, rb = embed(b, p)
        zab, rab = embed(a * b, p)
        with mpmath.workprec(288):
            err = abs(zab - za * zb)
            assert err <= rab + ra * abs(zb) + rb * abs(za) + ra * rb + mpmath.mpf(2) ** -240


def test_elem_roundtrip():
    a = elem("K2", [Fraction(1, 3), 2, -1])
    assert a.coords == (Fraction(1, 3), 2, -1)
