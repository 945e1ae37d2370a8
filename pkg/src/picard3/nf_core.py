"""Exact arithmetic in the five fixed number fields unramified outside 3.

Elements are stored in the power basis 1, t, ..., t^(n-1) of the defining
root t, as an integer numerator vector over one positive common denominator.
S is the set of places above 3 and infinity; place 0 is the unique prime
above 3, places 1..r1 are real and the remaining r2 places are complex.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import mpmath

DATA_DIR = Path(__file__).parent / "data"
LABELS = ("K0", "K1", "K2", "K3", "L3")
DEFAULT_PREC = 256


class FieldError(ValueError):
    pass


@dataclass(frozen=True)
class FieldSpec:
    label: str
    degree: int
    min_poly: tuple[int, ...]  # low to high, monic
    r1: int
    r2: int
    w: int
    roots: tuple[str, ...]  # one stored root per infinite place, place order
    conjugate_roots: tuple[str, ...]  # all n complex roots (place roots first)
    automorphisms: tuple[tuple[str, ...], ...]  # images of t, as coordinates

    @property
    def t(self) -> int:
        return self.r1 + self.r2

    @property
    def num_places(self) -> int:
        return 1 + self.r1 + self.r2

    def place_kind(self, index: int) -> str:
        if index == 0:
            return "finite"
        if 1 <= index <= self.r1:
            return "real"
        if index < self.num_places:
            return "complex"
        raise FieldError(f"no place {index} in {self.label}")

    def one(self) -> "NFElem":
        return NFElem.from_int(self.label, 1)

    def gen(self) -> "NFElem":
        if self.degree == 1:
            return NFElem.from_int(self.label, 1)
        return NFElem(self.label, tuple(1 if k == 1 else 0 for k in range(self.degree)), 1)


@dataclass(frozen=True)
class PlaceIndex:
    index: int
    kind: str


def places(label: str) -> list[PlaceIndex]:
    f = get_field(label)
    return [PlaceIndex(i, f.place_kind(i)) for i in range(f.num_places)]


@lru_cache(maxsize=None)
def _field_table() -> dict:
    with open(DATA_DIR / "fields.json") as fh:
        return json.load(fh)


@lru_cache(maxsize=None)
def get_field(label: str) -> FieldSpec:
    table = _field_table()
    if label not in table:
        raise FieldError(f"unknown field {label!r}")
    rec = table[label]
    f = FieldSpec(
        label=label,
        degree=rec["degree"],
        min_poly=tuple(rec["min_poly"]),
        r1=rec["r1"],
        r2=rec["r2"],
        w=rec["w"],
        roots=tuple(rec["roots"]),
        conjugate_roots=tuple(rec["conjugate_roots"]),
        automorphisms=tuple(tuple(a) for a in rec["automorphisms"]),
    )
    if f.degree != f.r1 + 2 * f.r2 or len(f.min_poly) != f.degree + 1 or f.min_poly[-1] != 1:
        raise FieldError(f"inconsistent record for {label}")
    return f


@lru_cache(maxsize=None)
def _reduction_rows(label: str) -> tuple[tuple[int, ...], ...]:
    """Coordinates of t^k for n <= k <= 2n-2, as integer vectors."""
    f = get_field(label)
    n = f.degree
    m = f.min_poly
    cur = [-c for c in m[:n]]  # t^n
    rows = [tuple(cur)]
    for _ in range(n, 2 * n - 2):
        top = cur[-1]
        nxt = [0] + cur[:-1]
        for i in range(n):
            nxt[i] -= top * m[i]
        cur = nxt
        rows.append(tuple(cur))
    return tuple(rows)


def _normalize(num: Sequence[int], den: int) -> tuple[tuple[int, ...], int]:
    if den == 0:
        raise ZeroDivisionError("zero denominator")
    if den < 0:
        num = [-x for x in num]
        den = -den
    g = den
    for x in num:
        if x:
            g = math.gcd(g, x)
            if g == 1:
                break
    if g != 1:
        num = [x // g for x in num]
        den //= g
    return tuple(num), den


class NFElem:
    """Element of one of the fixed fields."""

    __slots__ = ("field", "num", "den", "_hash")

    def __init__(self, field: str, num: Sequence[int], den: int = 1, _normal: bool = False):
        self.field = field
        if _normal:
            self.num, self.den = tuple(num), den
        else:
            self.num, self.den = _normalize(num, den)
        self._hash = None

    # construction
    @classmethod
    def from_int(cls, field: str, value: int) -> "NFElem":
        n = get_field(field).degree
        return cls(field, (value,) + (0,) * (n - 1), 1, _normal=True)

    @classmethod
    def from_rational(cls, field: str, value) -> "NFElem":
        q = Fraction(value)
        n = get_field(field).degree
        return cls(field, (q.numerator,) + (0,) * (n - 1), q.denominator, _normal=True)

    @classmethod
    def from_coords(cls, field: str, coords: Iterable) -> "NFElem":
        qs = [Fraction(c) for c in coords]
        if len(qs) != get_field(field).degree:
            raise FieldError("coordinate vector has wrong length")
        den = 1
        for q in qs:
            den = den * q.denominator // math.gcd(den, q.denominator)
        return cls(field, [q.numerator * (den // q.denominator) for q in qs], den)

    @property
    def coords(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(x, self.den) for x in self.num)

    def is_zero(self) -> bool:
        return not any(self.num)

    def is_rational(self) -> bool:
        return not any(self.num[1:])

    def rational(self) -> Fraction:
        if not self.is_rational():
            raise FieldError("element is not rational")
        return Fraction(self.num[0], self.den)

    # arithmetic
    def _coerce(self, other) -> "NFElem":
        if isinstance(other, NFElem):
            if other.field != self.field:
                raise FieldError(f"field mismatch {self.field} vs {other.field}")
            return other
        if isinstance(other, (int, Fraction)):
            return NFElem.from_rational(self.field, other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self.den == o.den:
            return NFElem(self.field, [a + b for a, b in zip(self.num, o.num)], self.den)
        return NFElem(self.field, [a * o.den + b * self.den for a, b in zip(self.num, o.num)],
                      self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return NFElem(self.field, [-a for a in self.num], self.den, _normal=True)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            q = Fraction(other)
            return NFElem(self.field, [a * q.numerator for a in self.num], self.den * q.denominator)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return NFElem(self.field, _mul_int(self.field, self.num, o.num), self.den * o.den)

    __rmul__ = __mul__

    def inverse(self) -> "NFElem":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        n = len(self.num)
        if n == 1 or not any(self.num[1:]):
            return NFElem(self.field, (self.den,) + (0,) * (n - 1), self.num[0])
        mat = _mult_matrix(self.field, self.num)
        rhs = [Fraction(0)] * n
        rhs[0] = Fraction(self.den)
        sol = _solve(mat, rhs)
        return NFElem.from_coords(self.field, sol)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            q = Fraction(other)
            if q == 0:
                raise ZeroDivisionError("division by zero")
            return NFElem(self.field, [a * q.denominator for a in self.num], self.den * q.numerator)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        result = NFElem.from_int(self.field, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = NFElem.from_rational(self.field, other)
        if not isinstance(other, NFElem):
            return NotImplemented
        return self.field == other.field and self.den == other.den and self.num == other.num

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.field, self.num, self.den))
        return self._hash

    def __repr__(self):
        cs = ", ".join(str(c) for c in self.coords)
        return f"NFElem({self.field}, [{cs}])"

    def apply(self, sigma: int) -> "NFElem":
        """Image under the field automorphism with the given index."""
        f = get_field(self.field)
        img = NFElem.from_coords(self.field, [Fraction(c) for c in f.automorphisms[sigma]])
        acc = NFElem.from_int(self.field, 0)
        for c in reversed(self.num):
            acc = acc * img + c
        return acc / self.den


def _mul_int(label: str, a: Sequence[int], b: Sequence[int]) -> list[int]:
    n = len(a)
    if n == 1:
        return [a[0] * b[0]]
    prod = [0] * (2 * n - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    prod[i + j] += x * y
    rows = _reduction_rows(label)
    out = prod[:n]
    for k in range(n, 2 * n - 1):
        c = prod[k]
        if c:
            row = rows[k - n]
            for i in range(n):
                out[i] += c * row[i]
    return out


def _mult_matrix(label: str, num: Sequence[int]) -> list[list[Fraction]]:
    """Matrix of multiplication by the element with numerator num (columns = images of basis)."""
    n = len(num)
    cols = []
    for k in range(n):
        e = [0] * n
        e[k] = 1
        cols.append(_mul_int(label, num, e))
    return [[Fraction(cols[j][i]) for j in range(n)] for i in range(n)]


def _solve(mat: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    n = len(mat)
    a = [row[:] + [rhs[i]] for i, row in enumerate(mat)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        for r in range(n):
            if r != col and a[r][col] != 0:
                fac = a[r][col] * inv
                for c in range(col, n + 1):
                    a[r][c] -= fac * a[col][c]
    return [a[i][n] / a[i][i] for i in range(n)]


def bareiss_det(mat: list[list[int]]) -> int:
    """Determinant of an integer matrix by fraction-free elimination."""
    n = len(mat)
    if n == 0:
        return 1
    a = [row[:] for row in mat]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def resultant(f: Sequence[int], g: Sequence[int]) -> int:
    """Resultant of integer polynomials given low to high (Sylvester determinant)."""
    f = list(f)
    g = list(g)
    while len(g) > 1 and g[-1] == 0:
        g.pop()
    while len(f) > 1 and f[-1] == 0:
        f.pop()
    m, n = len(f) - 1, len(g) - 1
    if m == 0:
        return f[0] ** n
    if n == 0:
        return g[0] ** m
    size = m + n
    rows = []
    fh = f[::-1]
    gh = g[::-1]
    for i in range(n):
        rows.append([0] * i + fh + [0] * (size - m - 1 - i))
    for i in range(m):
        rows.append([0] * i + gh + [0] * (size - n - 1 - i))
    return bareiss_det(rows)


# ---------------------------------------------------------------- invariants

def norm(a: NFElem) -> Fraction:
    """Field norm, computed exactly as Res(min_poly, a(x)) / den^n."""
    f = get_field(a.field)
    if a.is_zero():
        return Fraction(0)
    r = resultant(f.min_poly, a.num)
    return Fraction(r, a.den ** f.degree)


def v3(q) -> int:
    q = Fraction(q)
    if q == 0:
        raise ValueError("v3 of zero")
    v = 0
    n, d = q.numerator, q.denominator
    while n % 3 == 0:
        n //= 3
        v += 1
    while d % 3 == 0:
        d //= 3
        v -= 1
    return v


def ord_at_3(a: NFElem) -> int:
    """Valuation at the unique prime above 3 (residue degree 1)."""
    if a.is_zero():
        raise ValueError("ord_at_3 of zero")
    return v3(norm(a))


def charpoly(a: NFElem) -> list[Fraction]:
    """Characteristic polynomial of multiplication by a, low to high, monic."""
    n = get_field(a.field).degree
    m = _mult_matrix(a.field, a.num)
    m = [[x / a.den for x in row] for row in m]
    # Faddeev-LeVerrier
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    mk = [[Fraction(0)] * n for _ in range(n)]
    for k in range(1, n + 1):
        if k == 1:
            mk = [row[:] for row in m]
        else:
            prev = [row[:] for row in mk]
            for i in range(n):
                prev[i][i] += coeffs[n - k + 1]
            mk = [[sum(m[i][l] * prev[l][j] for l in range(n)) for j in range(n)] for i in range(n)]
        tr = sum(mk[i][i] for i in range(n))
        coeffs[n - k] = -tr / k
    return coeffs


def _is_3_integral(q: Fraction) -> bool:
    d = q.denominator
    while d % 3 == 0:
        d //= 3
    return d == 1


def is_s_integer(a: NFElem) -> bool:
    """True when a is integral at every prime not above 3.

    The test is on the characteristic polynomial, which does not depend on
    the index of Z[t] in the maximal order.
    """
    if all(_is_3_integral(Fraction(x, a.den)) for x in a.num):
        return True
    return all(_is_3_integral(c) for c in charpoly(a))


def is_3_power_up_to_sign(q: Fraction) -> bool:
    if q == 0:
        return False
    n, d = abs(q.numerator), q.denominator
    while n % 3 == 0:
        n //= 3
    while d % 3 == 0:
        d //= 3
    return n == 1 and d == 1


def is_s_unit(a: NFElem) -> bool:
    if a.is_zero():
        return False
    if not is_3_power_up_to_sign(norm(a)):
        return False
    return is_s_integer(a) and is_s_integer(a.inverse())


def s_norm(a: NFElem) -> float:
    """|a O_S|_S: the prime-to-3 part of |N(a)|, to the power 1/n."""
    if a.is_zero():
        raise ValueError("s_norm of zero")
    q = abs(norm(a))
    k = v3(q)
    rest = q / Fraction(3) ** k
    n = get_field(a.field).degree
    val = float(rest) ** (1.0 / n)
    r = round(val)
    if r ** n == rest:
        return float(r)
    return val


# ---------------------------------------------------------------- embeddings

@lru_cache(maxsize=None)
def _root_at(label: str, which: str, index: int, prec: int) -> mpmath.mpc:
    """Stored root refined by Newton's method to the requested precision."""
    f = get_field(label)
    src = f.roots if which == "place" else f.conjugate_roots
    with mpmath.workprec(prec + 32):
        z = mpmath.mpmathify(src[index])
        if prec + 32 > 300:
            coeffs = list(f.min_poly)
            deriv = [k * coeffs[k] for k in range(1, len(coeffs))]
            for _ in range(40):
                fz = mpmath.polyval(coeffs[::-1], z)
                dz = mpmath.polyval(deriv[::-1], z)
                step = fz / dz
                z -= step
                if abs(step) < mpmath.mpf(2) ** (-(prec + 40)):
                    break
        return z


def _horner(a: NFElem, z, prec: int):
    with mpmath.workprec(prec + 32):
        acc = mpmath.mpc(0)
        for c in reversed(a.num):
            acc = acc * z + c
        return acc / a.den


def embed(a: NFElem, place: int, precision_bits: int = DEFAULT_PREC):
    """Image of a at an infinite place, with an absolute error bound.

    Returns (value, radius). The radius bounds the error from the stored
    root and the working-precision evaluation.
    """
    f = get_field(a.field)
    if place == 0:
        raise FieldError("place 0 is finite")
    if not 1 <= place < f.num_places:
        raise FieldError(f"no infinite place {place} in {a.field}")
    z = _root_at(a.field, "place", place - 1, precision_bits)
    with mpmath.workprec(precision_bits + 32):
        val = _horner(a, z, precision_bits)
        absz = abs(z) + 1
        size = sum(abs(c) * absz ** k for k, c in enumerate(a.num)) / a.den
        rad = size * len(a.num) ** 2 * mpmath.mpf(2) ** (-precision_bits)
        if f.place_kind(place) == "real":
            val = mpmath.mpc(val.real, 0)
    return val, rad


def embed_all(a: NFElem, precision_bits: int = DEFAULT_PREC) -> list:
    """Images of a under all n complex embeddings (place roots come first)."""
    f = get_field(a.field)
    return [_horner(a, _root_at(a.field, "all", i, precision_bits), precision_bits)
            for i in range(f.degree)]


def abs_at_place(a: NFElem, place: int, precision_bits: int = DEFAULT_PREC):
    """|a|_p with complex places squared and |a|_p0 = 3^(-ord)."""
    f = get_field(a.field)
    if place == 0:
        return mpmath.mpf(3) ** (-ord_at_3(a))
    val, _ = embed(a, place, precision_bits)
    with mpmath.workprec(precision_bits + 32):
        r = abs(val)
        return r * r if f.place_kind(place) == "complex" else r


def log_abs_at_place(a: NFElem, place: int, precision_bits: int = DEFAULT_PREC):
    with mpmath.workprec(precision_bits + 32):
        if place == 0:
            return -ord_at_3(a) * mpmath.log(3)
        return mpmath.log(abs_at_place(a, place, precision_bits))


def min_poly_mod3_is_linear_power(label: str) -> bool:
    """True when min_poly is congruent to (x - c)^n modulo 3."""
    f = get_field(label)
    n = f.degree
    for c in range(3):
        expected = [math.comb(n, k) * (-c) ** (n - k) for k in range(n + 1)]
        if all((a - b) % 3 == 0 for a, b in zip(f.min_poly, expected)):
            return True
    return False


def elem(label: str, coords: Iterable) -> NFElem:
    return NFElem.from_coords(label, coords)


def nf_arith(a: NFElem, b: NFElem, op: str) -> NFElem:
    if a.field != b.field:
        raise FieldError("field mismatch")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if b.is_zero():
            raise ZeroDivisionError("division by zero")
        return a / b
    raise ValueError(f"unknown op {op!r}")


# ------------------------------------------------------- recovery from numerics

@lru_cache(maxsize=None)
def _real_embedding_inverse(label: str, prec: int):
    """Inverse of the real n x n matrix sending coordinates to the real and
    imaginary parts of the place embeddings."""
    f = get_field(label)
    n = f.degree
    with mpmath.workprec(prec + 32):
        rows = []
        for i in range(f.t):
            z = _root_at(label, "place", i, prec)
            powers = [z ** k for k in range(n)]
            rows.append([mpmath.re(p) for p in powers])
            if f.place_kind(i + 1) == "complex":
                rows.append([mpmath.im(p) for p in powers])
        return mpmath.matrix(rows) ** -1


def from_place_values(label: str, values, prec: int = DEFAULT_PREC, max_den: int = 10 ** 40):
    """Exact element whose place embeddings approximate the given values.

    Returns None when the coordinates are not recognisably rational. The
    caller must verify the result exactly.
    """
    f = get_field(label)
    inv = _real_embedding_inverse(label, prec)
    with mpmath.workprec(prec + 32):
        vec = []
        for i, v in enumerate(values):
            v = mpmath.mpmathify(v)
            vec.append(mpmath.re(v))
            if f.place_kind(i + 1) == "complex":
                vec.append(mpmath.im(v))
        coords = inv * mpmath.matrix(vec)
        out = []
        tol = mpmath.mpf(2) ** (-(prec // 2))
        for k in range(f.degree):
            c = coords[k]
            q = Fraction(mpmath.nstr(c, prec // 3, strip_zeros=False)).limit_denominator(max_den)
            if abs(c - mpmath.mpf(q.numerator) / q.denominator) > tol * (1 + abs(c)):
                return None
            out.append(q)
    return NFElem.from_coords(label, out)


def kth_roots(u: NFElem, k: int, prec: int = DEFAULT_PREC) -> list[NFElem]:
    """All b in the field of u with b^k = u (verified exactly)."""
    import itertools
    f = get_field(u.field)
    if u.is_zero():
        return [u]
    if f.degree == 1:
        q = u.rational()
        sign = 1 if q > 0 else -1
        num = _int_root(abs(q.numerator), k)
        den = _int_root(q.denominator, k)
        if num is None or den is None:
            return []
        cands = [Fraction(num, den)]
        if k % 2 == 0:
            if sign < 0:
                return []
            cands.append(-cands[0])
        elif sign < 0:
            cands = [-cands[0]]
        return [NFElem.from_rational(u.field, c) for c in cands]
    with mpmath.workprec(prec + 32):
        choices = []
        for i in range(f.t):
            val, _ = embed(u, i + 1, prec)
            r = abs(val) ** (mpmath.mpf(1) / k)
            a = mpmath.arg(val) / k
            opts = []
            for j in range(k):
                z = r * mpmath.expj(a + 2 * mpmath.pi * j / k)
                if f.place_kind(i + 1) == "real":
                    if abs(mpmath.im(z)) > mpmath.mpf(10) ** -20 * (1 + r):
                        continue
                    z = mpmath.mpc(mpmath.re(z), 0)
                opts.append(z)
            choices.append(opts)
    found = []
    for combo in itertools.product(*choices):
        b = from_place_values(u.field, combo, prec)
        if b is not None and b ** k == u and b not in found:
            found.append(b)
    return found


def _int_root(n: int, k: int):
    if n < 0:
        return None
    r = round(n ** (1.0 / k)) if n < 2 ** 1000 else int(mpmath.nint(mpmath.root(n, k)))
    for c in (r - 1, r, r + 1):
        if c >= 0 and c ** k == n:
            return c
    # big integers: integer Newton iteration
    lo, hi = 0, 1 << (n.bit_length() // k + 2)
    while lo < hi:
        mid = (lo + hi) // 2
        if mid ** k < n:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo ** k == n else None
