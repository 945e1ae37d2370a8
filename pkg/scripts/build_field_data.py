"""Regenerate src/picard3/data/fields.json.

Roots are computed with mpmath at 320 bits and written with 90 digits.
Automorphisms are given by the image of the generator in the power basis and
are checked exactly against the minimal polynomial.
"""
import json
from fractions import Fraction
from pathlib import Path

import mpmath
import sympy

OUT = Path(__file__).resolve().parents[1] / "src" / "picard3" / "data" / "fields.json"

x = sympy.symbols("x")

FIELDS = {
    "K0": dict(min_poly=[-1, 1], r1=1, r2=0, w=2, auts=["x"]),
    "K1": dict(min_poly=[1, 1, 1], r1=0, r2=1, w=6, auts=["x", "-1 - x"]),
    "K2": dict(min_poly=[1, -3, 0, 1], r1=3, r2=0, w=2, auts=["x", "x**2 - 2", "-x**2 - x + 2"]),
    "K3": dict(min_poly=[-3, 0, 0, 1], r1=1, r2=1, w=2, auts=["x"]),
    # x -> zeta6^k x with zeta6 = (1 + x^3)/2
    "L3": dict(min_poly=[3, 0, 0, 0, 0, 0, 1], r1=0, r2=3, w=6,
               auts=[f"x*((1 + x**3)/2)**{k}" for k in range(6)]),
}


def ordered_roots(coeffs):
    with mpmath.workprec(320):
        roots = mpmath.polyroots(coeffs[::-1], maxsteps=400, extraprec=600)
        real = sorted([r for r in roots if abs(mpmath.im(r)) < mpmath.mpf(10) ** -60],
                      key=lambda r: mpmath.re(r))
        upper = sorted([r for r in roots if mpmath.im(r) > mpmath.mpf(10) ** -60],
                       key=lambda r: mpmath.arg(r))
        real = [mpmath.mpc(mpmath.re(r), 0) for r in real]
        place = real + upper
        everything = place + [mpmath.conj(r) for r in upper]
        fmt = lambda z: mpmath.nstr(z, 90) if mpmath.im(z) != 0 else mpmath.nstr(mpmath.re(z), 90)
        return [fmt(r) for r in place], [fmt(r) for r in everything]


def main():
    table = {}
    for label, rec in FIELDS.items():
        mp = sympy.Poly(list(reversed(rec["min_poly"])), x)
        n = mp.degree()
        auts = []
        for expr in rec["auts"]:
            img = sympy.Poly(sympy.sympify(expr), x).rem(mp) if n > 1 else sympy.Poly(1, x)
            assert mp.compose(img).rem(mp).is_zero, (label, expr)
            cs = [Fraction(str(c)) for c in reversed(img.all_coeffs())]
            cs += [Fraction(0)] * (n - len(cs))
            auts.append([str(c) for c in cs])
        place, allr = ordered_roots(rec["min_poly"])
        assert len(place) == rec["r1"] + rec["r2"]
        table[label] = dict(degree=n, min_poly=rec["min_poly"], r1=rec["r1"], r2=rec["r2"],
                            w=rec["w"], roots=place, conjugate_roots=allr, automorphisms=auts)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(table, indent=1, sort_keys=True) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
