"""Picard curves y^3 = f(x) over Q with good reduction away from 3.

A curve is built from an O_S^0 class of quartic forms F together with a
twist alpha in {1, 3, 9}: y^3 = alpha F(x, 1). Every curve is stored with an
integral monic model chosen by a fixed normalisation, and isomorphism over Q
is decided by matching quartic roots (an upper triangular change of x) plus a
cube condition on the scaling of y.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Iterable, Sequence

from .forms_engine import (BinaryForm, FieldSystem, FormError, SYSTEMS, _taylor_scale,
                           discriminant, equivalence_witnesses, field_system_of, monic_part,
                           os0_classes, os0_normal_form_scaled,
                           quartic_from_monic, v3)
from .sunit_solver import SUnitSolution

TWISTS = (1, 3, 9)


def _is_cube(q: Fraction) -> bool:
    q = Fraction(q)
    if q == 0:
        return True
    return all(_icbrt(abs(x)) ** 3 == abs(x) for x in (q.numerator, q.denominator))


def _icbrt(n: int) -> int:
    r = round(n ** (1 / 3)) if n < 2 ** 900 else int(math.exp(math.log(n) / 3))
    while r ** 3 > n:
        r -= 1
    while (r + 1) ** 3 <= n:
        r += 1
    return r


def _cbrt(q: Fraction) -> Fraction:
    s = -1 if q < 0 else 1
    return s * Fraction(_icbrt(abs(q.numerator)), _icbrt(q.denominator))


def model_discriminant(model: Sequence[int]) -> Fraction:
    a3, a2, a1, a0 = model
    return discriminant(BinaryForm((1, a3, a2, a1, a0)))


def integral_model(f: Sequence[Fraction], twist: int) -> tuple[int, int, int, int]:
    """Integral monic model of y^3 = twist * f(x) for monic f over Z[1/3].

    Models are g = u^-4 f(u x + r) with u = +-3^j and 3 * j + k = 0 mod 3
    where twist = 3^k (the y-scaling must be rational). Pick the largest j
    admitting an integral g (smallest 3-adic discriminant), then the shift
    minimising max |a_i|, then the lexicographically largest tuple.
    """
    k = v3(Fraction(twist))
    n = len(f) - 1
    f3 = f[n - 1]
    D = discriminant(quartic_from_monic(f))
    j = math.floor(Fraction(v3(D), 12))
    while (j + k) % 3:
        j -= 1
    for _ in range(12):
        best = None
        for sign in (1, -1):
            u = sign * Fraction(3) ** j
            for g3 in range(4):
                r = (u * g3 - f3) / 4
                g = _taylor_scale(f, u, r)
                if not all(c.denominator == 1 for c in g):
                    continue
                for shift in range(-8, 9):
                    h = _taylor_scale(g, Fraction(1), Fraction(shift))
                    model = tuple(int(c) for c in reversed(h[:n]))
                    key = (max(abs(c) for c in model), tuple(-c for c in model))
                    if best is None or key < best[0]:
                        best = (key, model)
        if best is not None:
            return best[1]
        j -= 3
    raise FormError("no integral model found")


@dataclass(frozen=True)
class PicardCurve:
    """y^3 = twist * quartic(x, 1), with an integral model y^3 = x^4 + a3 x^3 + ... + a0."""
    quartic: BinaryForm
    twist: int
    model: tuple[int, int, int, int]

    @classmethod
    def from_quartic(cls, F: BinaryForm, twist: int = 1) -> "PicardCurve":
        # F(x, 1) = lc f(x) and f(u x + r) = u^4 h(x), so the curve is
        # y^3 = (twist lc u^4) h(x); only the 3-part mod cubes matters
        key, u, _ = os0_normal_form_scaled(F)
        k = (v3(Fraction(twist)) + v3(F.coeffs[0]) + 4 * v3(u)) % 3
        return cls(quartic_from_monic(key), 3 ** k, integral_model(list(key), 3 ** k))

    @classmethod
    def from_model(cls, model: Sequence[int]) -> "PicardCurve":
        model = tuple(int(x) for x in model)
        return cls(BinaryForm((1,) + model), 1, model)

    @property
    def model_form(self) -> BinaryForm:
        return BinaryForm((1,) + self.model)

    def discriminant(self) -> Fraction:
        return model_discriminant(self.model)

    def good_reduction_outside_3(self) -> bool:
        D = self.discriminant()
        return D != 0 and all(_strip(x) == 1 for x in (D.numerator, D.denominator))

    def __str__(self):
        terms = ["x^4"]
        for c, mono in zip(self.model, ("x^3", "x^2", "x", "")):
            if c:
                mag = abs(c)
                body = mono if mag == 1 and mono else f"{mag}{mono}"
                terms.append(("- " if c < 0 else "+ ") + body)
        return "y^3 = " + " ".join(terms)

    def to_json(self):
        return {"model": list(self.model), "twist": self.twist, "quartic": self.quartic.to_json()}


def _strip(n: int) -> int:
    n = abs(n)
    while n and n % 3 == 0:
        n //= 3
    return n


@dataclass(frozen=True)
class IsoWitness:
    """x1 = (a x2 + b) / d and y1 = y2 / xi map the second model onto the first."""
    a: Fraction
    b: Fraction
    d: Fraction
    xi: Fraction

    def matrix(self):
        """The projective change of coordinates on (x : y : z)."""
        return ((self.a, 0, self.b), (0, self.d / self.xi, 0), (0, 0, self.d))


def _iso_witnesses(c1: PicardCurve, c2: PicardCurve):
    F, G = c1.model_form, c2.model_form
    try:
        fs = field_system_of(F)
        if field_system_of(G).name != fs.name:
            return  # different splitting data, never isomorphic
    except FormError:
        return
    closure = fs.closure
    for wit in equivalence_witnesses(F, G, "OS0", closure):
        (a, b), (_, d) = wit.U
        scale = wit.lam * d ** 4
        if _is_cube(scale):
            yield IsoWitness(a, b, d, _cbrt(scale))


def is_isomorphic_q(c1: PicardCurve, c2: PicardCurve) -> IsoWitness | None:
    """A witness of a Q-isomorphism between the two models, or None."""
    D1, D2 = c1.discriminant(), c2.discriminant()
    if _strip(D1.numerator) != _strip(D2.numerator) or (D1 > 0) != (D2 > 0):
        return None
    if (v3(D1) - v3(D2)) % 36:
        return None
    for w in _iso_witnesses(c1, c2):
        return w
    return None


def verify_witness(c1: PicardCurve, c2: PicardCurve, w: IsoWitness) -> bool:
    """Check that x1 = (a x + b)/d, y1 = y/xi carries y1^3 = f1(x1) onto
    y^3 = f2(x), i.e. xi^3 f1((a x + b)/d) = f2(x) identically."""
    f1 = [Fraction(1)] + [Fraction(x) for x in c1.model]  # high to low
    f2 = [Fraction(1)] + [Fraction(x) for x in c2.model]
    lin = [w.b / w.d, w.a / w.d]  # low to high
    acc = [Fraction(0)]
    for c in f1:  # Horner in the substituted variable
        acc = _poly_mul(acc, lin)
        acc[0] += c
    acc = [w.xi ** 3 * c for c in acc] + [Fraction(0)] * 5
    return acc[:5] == list(reversed(f2)) and not any(acc[5:])


def _poly_mul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, x in enumerate(p):
        for j, y in enumerate(q):
            out[i + j] += x * y
    return out


@dataclass
class TwistBlock:
    system: FieldSystem
    quartic: BinaryForm
    curves: list[PicardCurve] = field(default_factory=list)

    def to_json(self):
        return {"system": self.system.name, "quartic": self.quartic.to_json(),
                "curves": [c.to_json() for c in self.curves]}


def curve_from_pair(F: BinaryForm, twist: int = 1) -> PicardCurve:
    """The curve y^3 = twist * F(x, 1) for the cofactor F of a pair (ZF, Z)."""
    if F.degree != 4:
        raise FormError("expected a quartic cofactor")
    return PicardCurve.from_quartic(F, twist)


def twist_block(fs: FieldSystem, F: BinaryForm) -> TwistBlock:
    block = TwistBlock(fs, F)
    for a in TWISTS:
        block.curves.append(curve_from_pair(F, a))
    return block


def blocks_for_system(fs: FieldSystem, sols: Sequence[SUnitSolution]) -> list[TwistBlock]:
    if fs.name == "K0,K0,K0,K0":
        return []  # no rational solutions, so no admissible quartics
    return [twist_block(fs, F) for F in os0_classes(fs, sols).classes]


def enumerate_all(solutions: dict[str, Sequence[SUnitSolution]]) -> list[TwistBlock]:
    """All twist blocks, given the S-unit solutions keyed by closure label."""
    out = []
    for fs in SYSTEMS.values():
        out.extend(blocks_for_system(fs, solutions.get(fs.closure, [])))
    return out


# ------------------------------------------------------------- golden tables

def load_golden() -> dict[str, list[list[tuple[int, int, int, int]]]]:
    text = resources.files("picard3").joinpath("data/golden_tables.json").read_text()
    raw = json.loads(text)
    return {k: [[tuple(m) for m in blk] for blk in v] for k, v in raw.items()}


@dataclass
class MatchReport:
    matched: int
    missing_from_golden: list[str]
    missing_from_computed: list[str]
    block_mismatches: list[str]
    exact_matches: int = 0

    @property
    def ok(self) -> bool:
        return not (self.missing_from_golden or self.missing_from_computed or self.block_mismatches)


def match_golden(blocks: Sequence[TwistBlock], golden: dict | None = None) -> MatchReport:
    """Bidirectional isomorphism matching of computed curves and table models.

    The matching must be perfect: each computed curve is isomorphic to exactly
    one table row and no row is claimed twice. Computed blocks must also map
    onto table blocks."""
    golden = golden or load_golden()
    table = [(sysname, bi, PicardCurve.from_model(m))
             for sysname, blks in golden.items() for bi, blk in enumerate(blks) for m in blk]
    computed = [(b.system.name, bi, c) for bi, b in enumerate(blocks) for c in b.curves]
    claimed: dict[int, str] = {}
    missing_g, mism = [], []
    block_map: dict = {}
    for sysname, bi, c in computed:
        hits = [k for k, (_, _, tc) in enumerate(table) if is_isomorphic_q(c, tc)]
        if not hits:
            missing_g.append(str(c))
            continue
        if len(hits) > 1:
            mism.append(f"{c} matches {len(hits)} table rows")
        k = hits[0]
        if k in claimed:
            mism.append(f"table row {table[k][2]} matched by {claimed[k]} and {c}")
        claimed[k] = str(c)
        tsys, tbi, _ = table[k]
        if tsys != sysname:
            mism.append(f"{c} computed under {sysname} but tabulated under {tsys}")
        prev = block_map.setdefault(bi, (tsys, tbi))
        if prev != (tsys, tbi):
            mism.append(f"computed block {bi} spreads over table blocks {prev} and {(tsys, tbi)}")
    missing_c = [str(tc) for k, (_, _, tc) in enumerate(table) if k not in claimed]
    models = {c.model for _, _, c in computed}
    exact = sum(1 for _, _, tc in table if tc.model in models)
    return MatchReport(len(claimed), missing_g, missing_c, mism, exact)


def check_simple_family(blocks: Sequence[TwistBlock], powers: Iterable[int] = range(9)) -> dict[int, bool]:
    """Whether y^3 = x^4 + 3^s x occurs among the computed curves."""
    curves = [c for b in blocks for c in b.curves]
    out = {}
    for s in powers:
        target = PicardCurve.from_model((0, 0, 3 ** s, 0))
        out[s] = any(is_isomorphic_q(target, c) for c in curves)
    return out
