"""Regenerate src/picard3/data/sunit_groups.json.

Generators are written as power-basis coordinates. Before writing, each list
is checked for S-unit membership and for p-saturation using power-residue
characters at split primes, for every p below 50. A rank deficit at p means
some product of generators is a p-th power and the basis has index divisible
by p.
"""
import json
from fractions import Fraction
from pathlib import Path

import sympy

from picard3.nf_core import NFElem, get_field, is_s_unit

OUT = Path(__file__).resolve().parents[1] / "src" / "picard3" / "data" / "sunit_groups.json"


def generators():
    out = {}
    out["K0"] = [[-1], [[-3]]]
    out["K1"] = [[0, -1], [[1, 2]]]
    out["K2"] = [[-1, 0, 0], [[-1, -1, 0], [0, 1, 0], [-1, 1, 0]]]
    out["K3"] = [[-1, 0, 0], [[0, 1, 0], [2, 0, -1]]]
    # zeta6, theta, and a unit eta with its image under theta -> zeta6*theta.
    # eta^3 = zeta6 * e * e'^2 for e = 2 - theta^4; using e and e' directly
    # gives a basis of index 3.
    h = Fraction(1, 2)
    eta = NFElem.from_coords("L3", [-h, 1, -1, h, 0, 0])
    out["L3"] = [[h, 0, 0, h, 0, 0],
                 [[0, 1, 0, 0, 0, 0], list(eta.coords), list(eta.apply(1).coords)]]
    return out


def split_ideals(label, p, count):
    f = get_field(label)
    res, q = [], 5
    while len(res) < count:
        q = sympy.nextprime(q)
        if (q - 1) % p:
            continue
        for r in range(q):
            if sum(c * pow(r, k, q) for k, c in enumerate(f.min_poly)) % q == 0:
                res.append((q, r))
    return res


def character(a, q, r, p):
    v = sum(c * pow(r, k, q) for k, c in enumerate(a.num)) * pow(a.den, -1, q) % q
    return sympy.discrete_log(q, v, sympy.primitive_root(q)) % p


def rank_mod(rows, p):
    m = [[x % p for x in row] for row in rows]
    rank = 0
    for c in range(len(m[0])):
        piv = next((i for i in range(rank, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = pow(m[rank][c], -1, p)
        m[rank] = [x * inv % p for x in m[rank]]
        for i in range(len(m)):
            if i != rank and m[i][c]:
                m[i] = [(x - m[i][c] * y) % p for x, y in zip(m[i], m[rank])]
        rank += 1
    return rank


def main():
    table = {}
    for label, (rho0, free) in generators().items():
        f = get_field(label)
        gens = [NFElem.from_coords(label, rho0)] + [NFElem.from_coords(label, g) for g in free]
        assert all(is_s_unit(g) for g in gens), label
        for p in sympy.primerange(2, 50):
            rows = [[character(g, q, r, p) for g in gens] for q, r in split_ideals(label, p, 16)]
            expect = len(gens) if f.w % p == 0 else len(gens) - 1
            got = rank_mod(rows, p) if f.w % p == 0 else rank_mod([row[1:] for row in rows], p)
            assert got == expect, (label, p, got, expect)
        table[label] = dict(rho0=[str(Fraction(c)) for c in gens[0].coords],
                            free=[[str(Fraction(c)) for c in g.coords] for g in gens[1:]])
        print(label, "ok")
    OUT.write_text(json.dumps(table, indent=1, sort_keys=True) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
