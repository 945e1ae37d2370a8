"""Complete solution of tau0 + tau1 = 1 in S-units, S = {3, infinity}.

Pipeline per field: Baker-Wustholz bound C0, LLL reduction to C0', then an
exhaustive search of the exponent box H <= C0' filtered by power-residue
characters at split primes, with exact verification of every survivor and
closure under cycles.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable

import mpmath
import numpy as np
import sympy

from . import lattice
from .nf_core import (DATA_DIR, NFElem, embed, get_field, is_3_power_up_to_sign, is_s_unit,
                      kth_roots, norm, ord_at_3)

PREC = 256


class SUnitError(ValueError):
    pass


# ------------------------------------------------------------------ groups

@dataclass(frozen=True)
class SUnitGroupSpec:
    field: str
    rho0: NFElem
    free_gens: tuple[NFElem, ...]

    @property
    def t(self) -> int:
        return len(self.free_gens)

    @property
    def w(self) -> int:
        return get_field(self.field).w

    @property
    def gens(self) -> tuple[NFElem, ...]:
        return (self.rho0,) + self.free_gens


@lru_cache(maxsize=None)
def load_group(label: str, validate: bool = True) -> SUnitGroupSpec:
    with open(DATA_DIR / "sunit_groups.json") as fh:
        rec = json.load(fh)[label]
    g = SUnitGroupSpec(
        field=label,
        rho0=NFElem.from_coords(label, [Fraction(c) for c in rec["rho0"]]),
        free_gens=tuple(NFElem.from_coords(label, [Fraction(c) for c in v]) for v in rec["free"]),
    )
    if validate:
        validate_group(g)
    return g


def torsion_order(u: NFElem, limit: int = 12) -> int | None:
    one = get_field(u.field).one()
    x = u
    for k in range(1, limit + 1):
        if x == one:
            return k
        x = x * u
    return None


def log_matrix(g: SUnitGroupSpec, prec: int = PREC):
    """Rows are the places 0..t, columns the free generators."""
    f = get_field(g.field)
    return [[_log_place(r, i, prec) for r in g.free_gens] for i in range(f.num_places)]


def _log_place(a: NFElem, i: int, prec: int):
    f = get_field(a.field)
    with mpmath.workprec(prec + 32):
        if i == 0:
            return -ord_at_3(a) * mpmath.log(3)
        v = abs(embed(a, i, prec)[0])
        return (2 if f.place_kind(i) == "complex" else 1) * mpmath.log(v)


def validate_group(g: SUnitGroupSpec, saturation_primes=(2, 3)) -> None:
    f = get_field(g.field)
    if g.t != f.t:
        raise SUnitError(f"{g.field}: rank {g.t}, expected {f.t}")
    for r in g.gens:
        if not is_s_unit(r):
            raise SUnitError(f"{g.field}: generator {r} is not an S-unit")
    if torsion_order(g.rho0, f.w) != f.w:
        raise SUnitError(f"{g.field}: rho0 does not have order {f.w}")
    with mpmath.workprec(PREC):
        m = mpmath.matrix(log_matrix(g)[: g.t])
        if abs(mpmath.det(m)) < mpmath.mpf(10) ** -20:
            raise SUnitError(f"{g.field}: generators are dependent")
    for h in range(1, f.num_places):
        vals = [embed(r, h)[0] for r in g.free_gens]
        if all(abs(mpmath.im(v)) < 1e-30 and mpmath.re(v) > 0 for v in vals):
            raise SUnitError(f"{g.field}: all generators positive real at place {h}")
    for p in saturation_primes:
        bad = p_saturation_witness(g, p)
        if bad is not None:
            raise SUnitError(f"{g.field}: exponent vector {bad} gives a {p}-th power")


def p_saturation_witness(g: SUnitGroupSpec, p: int):
    """An exponent vector whose product is a p-th power, or None.

    When p does not divide w the torsion exponent is irrelevant (every root of
    unity is then a p-th power of one), so it is held at zero.
    """
    a0_range = range(p) if g.w % p == 0 else range(1)
    for a0 in a0_range:
        for a in itertools.product(range(p), repeat=g.t):
            if a0 == 0 and not any(a):
                continue
            u = ExponentVector(a0, a).value(g)
            if kth_roots(u, p):
                return (a0,) + tuple(a)
    return None


# --------------------------------------------------------- exponent vectors

@dataclass(frozen=True, order=True)
class ExponentVector:
    a0: int
    a: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(int(x) for x in self.a))

    def normalized(self, w: int) -> "ExponentVector":
        return ExponentVector(self.a0 % w, self.a)

    def value(self, g: SUnitGroupSpec) -> NFElem:
        x = g.rho0 ** (self.a0 % g.w)
        for r, e in zip(g.free_gens, self.a):
            if e:
                x = x * _gen_power(g.field, r, e)
        return x

    def mul(self, other: "ExponentVector", w: int) -> "ExponentVector":
        return ExponentVector((self.a0 + other.a0) % w, tuple(x + y for x, y in zip(self.a, other.a)))

    def inv(self, w: int) -> "ExponentVector":
        return ExponentVector((-self.a0) % w, tuple(-x for x in self.a))

    def neg(self, w: int) -> "ExponentVector":
        return ExponentVector((self.a0 + w // 2) % w, self.a)

    def to_json(self):
        return [self.a0, list(self.a)]

    @classmethod
    def from_json(cls, obj):
        return cls(obj[0], tuple(obj[1]))


@lru_cache(maxsize=4096)
def _gen_power(label: str, r: NFElem, e: int) -> NFElem:
    if e < 0:
        return _gen_power(label, r, -e).inverse()
    if e == 1:
        return r
    half = _gen_power(label, r, e // 2)
    sq = half * half
    return sq * r if e % 2 else sq


def height_H(v: ExponentVector) -> int:
    return max((abs(x) for x in v.a), default=0)


def place_logs(g: SUnitGroupSpec, v: ExponentVector, prec: int = PREC):
    """log |tau|_p for every place p of S, from the generator log table."""
    tab = _log_table(g, prec)
    with mpmath.workprec(prec + 32):
        return [sum((e * row[j] for j, e in enumerate(v.a)), mpmath.mpf(0)) for row in tab]


@lru_cache(maxsize=None)
def _log_table(g: SUnitGroupSpec, prec: int):
    return log_matrix(g, prec)


def extremal_index(g: SUnitGroupSpec, v: ExponentVector, prec: int = PREC) -> int:
    """Largest place index attaining the minimal absolute value."""
    logs = place_logs(g, v, prec)
    tol = mpmath.mpf(2) ** (-(prec // 2))
    m = min(logs)
    return max(i for i, x in enumerate(logs) if x - m <= tol)


def exponents_of(g: SUnitGroupSpec, u: NFElem, prec: int = PREC) -> ExponentVector | None:
    """Exponent vector of u in the basis of g, or None if u is not in the group."""
    if not is_s_unit(u):
        return None
    t = g.t
    tab = _log_table(g, prec)
    with mpmath.workprec(prec + 32):
        m = mpmath.matrix([tab[i] for i in range(t)])
        rhs = mpmath.matrix([_log_place(u, i, prec) for i in range(t)])
        sol = mpmath.lu_solve(m, rhs)
        a = [int(mpmath.nint(x)) for x in sol]
        if any(abs(x - y) > 1e-20 for x, y in zip(sol, a)):
            return None
    rest = u
    for r, e in zip(g.free_gens, a):
        if e:
            rest = rest / _gen_power(g.field, r, e)
    x = get_field(g.field).one()
    for a0 in range(g.w):
        if x == rest:
            return ExponentVector(a0, tuple(a))
        x = x * g.rho0
    return None


# ---------------------------------------------------------------- solutions

@dataclass(frozen=True, order=True)
class SUnitSolution:
    """Unordered pair, stored with tau0 <= tau1 lexicographically."""
    tau0: ExponentVector
    tau1: ExponentVector

    @classmethod
    def make(cls, x: ExponentVector, y: ExponentVector) -> "SUnitSolution":
        return cls(*sorted((x, y)))

    def height(self) -> int:
        return max(height_H(self.tau0), height_H(self.tau1))

    def verify(self, g: SUnitGroupSpec) -> bool:
        return self.tau0.value(g) + self.tau1.value(g) == get_field(g.field).one()

    def to_json(self):
        return [self.tau0.to_json(), self.tau1.to_json()]

    @classmethod
    def from_json(cls, obj):
        return cls.make(ExponentVector.from_json(obj[0]), ExponentVector.from_json(obj[1]))


def solution_extremal_index(g: SUnitGroupSpec, s: SUnitSolution) -> int:
    h0, h1 = height_H(s.tau0), height_H(s.tau1)
    e0, e1 = extremal_index(g, s.tau0), extremal_index(g, s.tau1)
    if h0 != h1:
        return e0 if h0 > h1 else e1
    return max(e0, e1)


def cycle(g: SUnitGroupSpec, s: SUnitSolution, verify: bool = True) -> set[SUnitSolution]:
    w = g.w
    x, y = s.tau0, s.tau1
    xi, yi = x.inv(w), y.inv(w)
    s1 = SUnitSolution.make(xi, xi.mul(y, w).neg(w))
    s2 = SUnitSolution.make(x.mul(yi, w).neg(w), yi)
    out = {s, s1, s2}
    if verify:
        for m in out:
            if not m.verify(g):
                raise SUnitError(f"cycle member {m} is not a solution")
    return out


def close_under_cycles(g: SUnitGroupSpec, sols: Iterable[SUnitSolution]) -> set[SUnitSolution]:
    out: set[SUnitSolution] = set()
    todo = list(sols)
    while todo:
        s = todo.pop()
        if s in out:
            continue
        out.add(s)
        todo.extend(cycle(g, s) - out)
    return out


# ---------------------------------------------------------------- bounds

@dataclass
class PlaceReduction:
    place: int
    C: int
    doublings: int
    C1: float
    S_L: float
    T_L: float
    bound: int


@dataclass
class BoundReport:
    field: str
    c3: float
    c11: list[float]
    c12: list[float]
    c13: list[float]
    c14p: list[float]
    c15p: list[float]
    C11: float
    C15: float
    C0: float
    rounds: list[list[PlaceReduction]] = field(default_factory=list)
    C0p: int | None = None

    @property
    def C(self):
        return self.rounds[0][-1].C if self.rounds else None

    @property
    def C1(self):
        return self.rounds[0][-1].C1 if self.rounds else None

    @property
    def first_round_bound(self) -> int | None:
        if not self.rounds:
            return None
        return max([math.floor(self.C11)] + [p.bound for p in self.rounds[0]])

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, d):
        d = dict(d)
        d["rounds"] = [[PlaceReduction(**p) for p in r] for r in d.get("rounds", [])]
        return cls(**d)


def compute_c3(g: SUnitGroupSpec, prec: int = PREC):
    """c3 = 1/(t N) with N the largest row-sum norm of the inverse of a
    t x t minor of the place-by-generator log matrix."""
    t = g.t
    tab = log_matrix(g, prec)
    best = None
    with mpmath.workprec(prec):
        for rows in itertools.combinations(range(t + 1), t):
            m = mpmath.matrix([tab[i] for i in rows])
            if abs(mpmath.det(m)) < mpmath.mpf(10) ** -30:
                continue
            mi = m ** -1
            nrm = max(sum(abs(mi[i, j]) for j in range(t)) for i in range(t))
            best = nrm if best is None else max(best, nrm)
        if best is None:
            raise SUnitError("log matrix is rank deficient")
        return 1 / (t * best)


def baker_constant(t: int, n: int):
    return (18 * math.factorial(t + 2) * (t + 1) ** (t + 2) * mpmath.mpf(32 * n) ** (t + 3)
            * mpmath.log(2 * (t + 1) * n))


def weil_height(a: NFElem, prec: int = PREC):
    """Unnormalized logarithmic height: sum over places of log max(1, |a|^n_p)."""
    f = get_field(a.field)
    with mpmath.workprec(prec + 32):
        s = max(0, -ord_at_3(a)) * mpmath.log(3)
        for i in range(1, f.num_places):
            s += max(mpmath.mpf(0), _log_place(a, i, prec))
        return s


def modified_height(a: NFElem, place: int, prec: int = PREC):
    n = get_field(a.field).degree
    with mpmath.workprec(prec + 32):
        lg = abs(mpmath.log(embed(a, place, prec)[0]))
        return max(weil_height(a, prec), lg, mpmath.mpf(1)) / n


def baker_bound(g: SUnitGroupSpec, prec: int = PREC) -> BoundReport:
    f = get_field(g.field)
    t, n, w = g.t, f.degree, g.w
    c3 = compute_c3(g, prec)
    c11, c12, c13, c14, c15 = [], [], [], [], []
    with mpmath.workprec(prec):
        big_c = baker_constant(t + 1, n)
        h_zeta = max(2 * mpmath.pi / w, 1) / n
        for h in range(1, t + 1):
            cx = f.place_kind(h) == "complex"
            a11 = (2 if cx else 1) * mpmath.log(4) / c3
            a13 = c3 / 2 if cx else c3
            a14 = big_c / n * h_zeta
            for r in g.free_gens:
                a14 *= modified_height(r, h, prec)
            a15 = 2 / a13 * (mpmath.log(2) + a14 * mpmath.log(w * (t + 2) * a14 / (2 * a13)))
            c11.append(a11)
            c12.append(mpmath.mpf(2))
            c13.append(a13)
            c14.append(a14)
            c15.append(a15)
        C11, C15 = max(c11), max(c15)
    fl = lambda xs: [float(x) for x in xs]
    return BoundReport(field=g.field, c3=float(c3), c11=fl(c11), c12=fl(c12), c13=fl(c13),
                       c14p=fl(c14), c15p=fl(c15), C11=float(C11), C15=float(C15),
                       C0=float(max(C11, C15)))


def _kappas(g: SUnitGroupSpec, h: int, prec: int):
    with mpmath.workprec(prec):
        ks = [mpmath.log(embed(r, h, prec)[0]) for r in g.free_gens]
    order = list(range(g.t))
    # the last kappa must have nonzero real part
    j = max(i for i in order if abs(mpmath.re(ks[i])) > 1e-30)
    order.remove(j)
    order.append(j)
    return [ks[i] for i in order]


def reduction_matrix(g: SUnitGroupSpec, h: int, C: int, prec: int):
    """Integer basis matrix (rows) of the reduction lattice at place h.

    Complex places use the (t+1)-dimensional lattice with the Re and Im rows
    and the torsion column. At a real place the imaginary parts are 0 or pi
    and cancel exactly against the torsion column, so the lattice is taken in
    dimension t with the single row [C log|rho_j|]."""
    t, w = g.t, g.w
    ks = _kappas(g, h, prec)
    real = get_field(g.field).place_kind(h) == "real"
    with mpmath.workprec(prec):
        re_row = [int(mpmath.nint(C * mpmath.re(k))) for k in ks]
        im_row = [int(mpmath.nint(C * mpmath.im(k))) for k in ks]
        tors = int(mpmath.nint(C * 2 * mpmath.pi / w))
    if real:
        rows = [[1 if j == i else 0 for j in range(t)] for i in range(t - 1)]
        rows.append(re_row)
        return rows
    rows = [[1 if j == i else 0 for j in range(t + 1)] for i in range(t - 1)]
    rows.append(re_row + [0])
    rows.append(im_row + [tors])
    return rows


def reduce_place(g: SUnitGroupSpec, h: int, C0, c12, c13, max_doublings: int = 25) -> PlaceReduction:
    t, w = g.t, g.w
    real = get_field(g.field).place_kind(h) == "real"
    C0 = mpmath.mpf(C0)
    if real:
        dim = t
        C = int(mpmath.nint(C0 ** t))
        T_L = t * C0 / 2
    else:
        dim = t + 1
        C = int(mpmath.nint(C0 ** (mpmath.mpf(t + 1) / 2)))
        T_L = (w + 2 + mpmath.sqrt(2)) * t * C0 / 2
    C = max(C, 2)
    for k in range(max_doublings + 1):
        prec = max(PREC, int(mpmath.log(C, 2)) + 128)
        mat = reduction_matrix(g, h, C, prec)
        red = lattice.lll_reduce(lattice.IntLattice.from_matrix(mat))
        with mpmath.workprec(prec):
            C1 = lattice.shortest_vector_lower_bound(red, dim - 1, check=False)
            if C1 ** 2 > T_L ** 2 + (t - 1) * C0 ** 2:
                S_L = mpmath.sqrt(C1 ** 2 - (t - 1) * C0 ** 2)
                b = (mpmath.log(C * c12) - mpmath.log(S_L - T_L)) / c13
                return PlaceReduction(h, C, k, float(C1), float(S_L), float(T_L),
                                      max(0, int(mpmath.floor(b))))
        C *= 2
    raise SUnitError(f"{g.field}: no lattice constant found at place {h}")


def reduce_bound(g: SUnitGroupSpec, report: BoundReport, max_rounds: int = 8,
                 max_doublings: int = 25) -> BoundReport:
    """Repeated lattice reduction, starting from C0, until the bound stops
    decreasing. Each round is a valid bound given the previous one."""
    bound = mpmath.mpf(report.C0)
    floor11 = math.floor(report.C11)
    report.rounds = []
    for _ in range(max_rounds):
        per = [reduce_place(g, h, bound, report.c12[h - 1], report.c13[h - 1], max_doublings)
               for h in range(1, g.t + 1)]
        report.rounds.append(per)
        new = max([floor11] + [p.bound for p in per])
        if new >= bound:
            break
        bound = mpmath.mpf(new)
    report.C0p = int(min(bound, max([floor11] + [p.bound for p in report.rounds[-1]])))
    return report


# ---------------------------------------------------------------- sieve

@dataclass
class SieveConfig:
    ell: int = 7
    extra_rows: int = 8
    ell2: int = 5
    extra_rows2: int = 6


@dataclass
class _Ideal:
    q: int
    r: int
    dlogs: np.ndarray  # discrete logs of the generators, (t+1,)
    table: np.ndarray  # e -> character of 1 - g^e, 255 when it vanishes


def split_ideals(label: str, count: int, ell: int, skip: Iterable[int] = ()):
    """Degree-one primes (q, t - r) with q = 1 mod ell, q prime to the
    discriminant of the defining polynomial."""
    f = get_field(label)
    disc = int(sympy.discriminant(sympy.Poly(list(reversed(f.min_poly)), sympy.Symbol("x"))))
    out = []
    q = 3
    while len(out) < count:
        q = int(sympy.nextprime(q))
        if (q - 1) % ell or disc % q == 0 or q in skip:
            continue
        for r in range(q):
            if sum(c * pow(r, k, q) for k, c in enumerate(f.min_poly)) % q == 0:
                out.append((q, r))
    return out[:count] if len(out) > count else out


def _reduce_mod(a: NFElem, q: int, r: int) -> int:
    return sum(c * pow(r, k, q) for k, c in enumerate(a.num)) * pow(a.den, -1, q) % q


def _build_ideal(g: SUnitGroupSpec, q: int, r: int, ell: int) -> _Ideal:
    gen = int(sympy.primitive_root(q))
    dl = np.zeros(q, dtype=np.int64)
    x = 1
    for e in range(q - 1):
        dl[x] = e
        x = x * gen % q
    dlogs = np.array([dl[_reduce_mod(r0, q, r)] for r0 in g.gens], dtype=np.int64)
    table = np.empty(q - 1, dtype=np.int16)
    x = 1
    for e in range(q - 1):
        y = (1 - x) % q
        table[e] = 255 if y == 0 else dl[y] % ell
        x = x * gen % q
    return _Ideal(q, r, dlogs, table)


def _dependencies(rows: list[list[int]], ell: int):
    """Greedy pivot rows over F_ell, and every other row written as a
    combination of the pivots: returns (pivots, [(k, {i: coef})])."""
    basis: list[tuple[list[int], list[int], int]] = []  # echelon row, combination, pivot column
    pivots, deps = [], []
    n = len(rows)
    for idx, row in enumerate(rows):
        v = [x % ell for x in row]
        c = [0] * n
        c[idx] = 1
        for bv, bc, col in basis:
            if v[col]:
                f = v[col]
                v = [(a - f * b) % ell for a, b in zip(v, bv)]
                c = [(a - f * b) % ell for a, b in zip(c, bc)]
        nz = next((j for j, x in enumerate(v) if x), None)
        if nz is None:
            deps.append((idx, {i: (-c[i]) % ell for i in range(n) if i != idx and c[i]}))
            continue
        inv = pow(v[nz], -1, ell)
        v = [a * inv % ell for a in v]
        c = [a * inv % ell for a in c]
        basis.append((v, c, nz))
        pivots.append(idx)
    return pivots, deps


class _Filter:
    """Power-residue test for one ell: the characters of 1 - tau0 at the chosen
    ideals must satisfy every linear relation that the generators' characters
    satisfy, because 1 - tau0 is itself a product of generators."""

    def __init__(self, g: SUnitGroupSpec, ell: int, extra: int):
        self.ell = ell
        rank_target = g.t + 1
        ids = [_build_ideal(g, q, r, ell) for q, r in split_ideals(g.field, rank_target + extra + 4, ell)]
        rows = [[int(d) % ell for d in q.dlogs] for q in ids]
        pivots, deps = _dependencies(rows, ell)
        self.ideals = ids
        self.pivots = pivots
        self.deps = deps[:extra] if len(deps) > extra else deps

    def residues(self, ideal: _Ideal, vecs: np.ndarray) -> np.ndarray:
        m = ideal.q - 1
        e = (vecs @ (ideal.dlogs % m)) % m
        return ideal.table[e]

    def survivors(self, vecs: np.ndarray) -> np.ndarray:
        """Boolean mask over the rows of vecs (columns a0, a1..at)."""
        ell = self.ell
        chars = {}
        mask = np.ones(len(vecs), dtype=bool)
        for i in self.pivots:
            c = self.residues(self.ideals[i], vecs)
            mask &= c != 255
            chars[i] = c
        idx = np.nonzero(mask)[0]
        for k, comb in self.deps:
            if not len(idx):
                break
            pred = np.zeros(len(idx), dtype=np.int64)
            for i, coef in comb.items():
                if i not in chars:
                    chars[i] = self.residues(self.ideals[i], vecs)
                pred += coef * chars[i][idx]
            ck = self.residues(self.ideals[k], vecs[idx])
            keep = (ck != 255) & ((pred - ck) % ell == 0)
            idx = idx[keep]
        out = np.zeros(len(vecs), dtype=bool)
        out[idx] = True
        return out


def _box_chunks(t: int, w: int, bound: int):
    """Yield (outer exponents, inner grid) covering 0 <= a0 < w, |a_j| <= bound.

    The inner grid holds the last min(t, 2) free exponents; the outer part is
    the torsion exponent followed by the remaining free exponents."""
    k = min(t, 2)
    rng = np.arange(-bound, bound + 1, dtype=np.int64)
    grid = np.stack(np.meshgrid(*([rng] * k), indexing="ij"), axis=-1).reshape(-1, k)
    outer_ranges = [range(w)] + [range(-bound, bound + 1)] * (t - k)
    for outer in itertools.product(*outer_ranges):
        yield outer, grid


def sieve_candidates(g: SUnitGroupSpec, bound: int, config: SieveConfig | None = None):
    """Exponent vectors tau0 in the box whose 1 - tau0 passes every
    power-residue test. A superset of the true first coordinates."""
    config = config or SieveConfig()
    filters = [_Filter(g, config.ell, config.extra_rows)]
    if config.ell2:
        filters.append(_Filter(g, config.ell2, config.extra_rows2))
    t, w = g.t, g.w
    k = min(t, 2)
    out = []
    for outer, grid in _box_chunks(t, w, bound):
        vecs = np.empty((len(grid), t + 1), dtype=np.int64)
        vecs[:, : t + 1 - k] = outer
        vecs[:, t + 1 - k:] = grid
        for flt in filters:
            vecs = vecs[flt.survivors(vecs)]
            if not len(vecs):
                break
        out.extend(ExponentVector(int(v[0]), tuple(int(x) for x in v[1:])) for v in vecs)
    return out


def lcm_primes(label: str, bound: int, cap: int = 40):
    """Primes q splitting completely in the field with lcm(q - 1) > 2 bound."""
    f = get_field(label)
    x = sympy.Symbol("x")
    poly = sympy.Poly(list(reversed(f.min_poly)), x)
    disc = int(sympy.discriminant(poly))
    out, m, q = [], 1, 3
    while m <= 2 * bound and len(out) < cap:
        q = int(sympy.nextprime(q))
        if disc % q == 0:
            continue
        facs = sympy.factor_list(poly, modulus=q)[1]
        if all(fc.degree() == 1 for fc, _ in facs) and sum(e for _, e in facs) == f.degree:
            out.append(q)
            m = math.lcm(m, q - 1)
    return out, m


def check_candidate(g: SUnitGroupSpec, v: ExponentVector) -> SUnitSolution | None:
    tau0 = v.value(g)
    tau1 = 1 - tau0
    if tau1.is_zero() or not is_3_power_up_to_sign(norm(tau1)):
        return None
    e = exponents_of(g, tau1)
    if e is None:
        return None
    s = SUnitSolution.make(v.normalized(g.w), e)
    return s if s.verify(g) else None


def sieve_solve(g: SUnitGroupSpec, bound: int, config: SieveConfig | None = None) -> set[SUnitSolution]:
    if bound < 1:
        raise SUnitError("bound must be at least 1")
    found = set()
    for v in sieve_candidates(g, bound, config):
        s = check_candidate(g, v)
        if s is not None:
            found.add(s)
    return close_under_cycles(g, found)


def brute_force(g: SUnitGroupSpec, bound: int) -> set[SUnitSolution]:
    """All solutions with H(s) <= bound by exact evaluation of the whole box."""
    found = set()
    ranges = [range(g.w)] + [range(-bound, bound + 1)] * g.t
    for ex in itertools.product(*ranges):
        v = ExponentVector(ex[0], ex[1:])
        s = check_candidate(g, v)
        if s is not None and s.height() <= bound:
            found.add(s)
    return found


# ---------------------------------------------------------------- pipeline

@dataclass
class SolveResult:
    field: str
    solutions: list[SUnitSolution]
    report: BoundReport
    search_bound: int
    primes: list[int]

    def to_json(self):
        return {"field": self.field, "search_bound": self.search_bound, "primes": self.primes,
                "report": self.report.to_json(),
                "solutions": [s.to_json() for s in self.solutions]}

    @classmethod
    def from_json(cls, d):
        return cls(d["field"], [SUnitSolution.from_json(s) for s in d["solutions"]],
                   BoundReport.from_json(d["report"]), d["search_bound"], d["primes"])


def solve_all(label: str, cache_dir: Path | str | None = None, search_bound: int | None = None,
              config: SieveConfig | None = None, refresh: bool = False) -> SolveResult:
    """Bound, reduce, sieve and close under cycles. Results are cached as JSON
    when cache_dir is given."""
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"sunit_{label}.json"
        if path.exists() and not refresh:
            res = SolveResult.from_json(json.loads(path.read_text()))
            if search_bound is None or res.search_bound == search_bound:
                return res
    g = load_group(label)
    report = reduce_bound(g, baker_bound(g))
    bound = report.C0p if search_bound is None else search_bound
    sols = sieve_solve(g, bound, config)
    for s in sols:
        if not s.verify(g):
            raise SUnitError(f"unverified solution {s}")
    primes, _ = lcm_primes(label, bound)
    res = SolveResult(label, sorted(sols), report, bound, primes)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(res.to_json(), indent=1, sort_keys=True) + "\n")
    return res


def solution_values(label: str, sols: Iterable[SUnitSolution]) -> list[tuple[NFElem, NFElem]]:
    g = load_group(label)
    return [(s.tau0.value(g), s.tau1.value(g)) for s in sols]
