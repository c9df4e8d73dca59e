import random
from fractions import Fraction

import pytest

from h2fg import (
    Series,
    ScaledSeries,
    compose,
    newton_polygon,
    reversion,
    series_inverse,
    weierstrass_divide,
    weierstrass_prepare,
)
from h2fg.power_series import INF


def test_compose_examples(base2):
    R = base2
    g = Series(R, [0, 1, 1], 3)
    assert [c.c[0] for c in compose(Series(R, [0, 1], INF), g).coeffs] == [0, 1, 1]
    h = compose(Series(R, [0, 0, 1], INF), g)
    assert h.order == 3
    assert [c.c[0] for c in h.coeffs] == [0, 0, 1, 2]
    with pytest.raises(ValueError):
        compose(g, Series(R, [1, 1], INF))


def test_compose_associativity(base2):
    rng = random.Random(2)
    for _ in range(10):
        f = Series(base2, [base2.random(rng) for _ in range(6)], INF)
        g = Series(base2, [base2.zero] + [base2.random(rng) for _ in range(5)], INF)
        h = Series(base2, [base2.zero] + [base2.random(rng) for _ in range(5)], INF)
        lhs = compose(compose(f, g, cap=10), h, cap=10)
        rhs = compose(f, compose(g, h, cap=10), cap=10)
        d = lhs - rhs
        assert all(base2.val(d.coeff(i)) >= 30 for i in range(11))


def _lagrange_inversion(coeffs, order):
    """Exact-rational reversion oracle: g_n = [w^(n-1)] (w / f(w))^n / n."""
    from fractions import Fraction

    def mul(a, b):
        out = [Fraction(0)] * (order + 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    if i + j <= order:
                        out[i + j] += ai * bj
        return out

    # w / f(w) as a power series (f = w + higher)
    tail = [Fraction(c) for c in coeffs[1:]]  # f/w, constant 1
    inv = [Fraction(0)] * (order + 1)
    inv[0] = Fraction(1)
    for i in range(1, order + 1):
        acc = Fraction(0)
        for j in range(1, i + 1):
            if j < len(tail):
                acc += tail[j] * inv[i - j]
        inv[i] = -acc
    out = [Fraction(0), Fraction(1)]
    power = inv
    for n in range(1, order + 1):
        if n >= 2:
            power = mul(power, inv)
        if n >= len(out):
            out.append(power[n - 1] / n)
        elif n == 1:
            out[1] = power[0]
    return out


def test_reversion_catalan(base2):
    r = reversion(Series(base2, [0, 1, 1], INF), cap=4)
    want = _lagrange_inversion([0, 1, 1], 4)
    assert want == [0, 1, -1, 2, -5]
    for i, w in enumerate(want):
        assert r.coeff(i) == base2.el(int(w))


def test_reversion_random_vs_lagrange(base2):
    rng = random.Random(4)
    for _ in range(5):
        ints = [0, 1] + [rng.randrange(-4, 5) for _ in range(5)]
        r = reversion(Series(base2, ints, INF), cap=6)
        want = _lagrange_inversion(ints, 6)
        for i, w in enumerate(want):
            den = w.denominator
            assert den == 1
            assert r.coeff(i) == base2.el(int(w))


def test_reversion_roundtrip_both_sides(base2):
    rng = random.Random(5)
    f = Series(base2, [base2.zero, base2.random_unit(rng)]
               + [base2.random(rng) for _ in range(6)], INF)
    r = reversion(f, cap=8)
    for a, b in ((f, r), (r, f)):
        d = compose(a, b, cap=8) - Series(base2, [0, 1], INF)
        assert all(base2.val(d.coeff(i)) >= 28 for i in range(9))


def test_reversion_non_unit_linear(base2):
    with pytest.raises(ValueError):
        reversion(Series(base2, [0, 2], INF), cap=4)
    r = reversion(ScaledSeries.of(Series(base2, [0, 2], INF)), cap=4)
    n = r.normalized()
    assert n.shift == 1 and n.ser.coeff(1) == base2.one  # X/p


def test_series_inverse(base2):
    rng = random.Random(6)
    u = Series(base2, [base2.random_unit(rng)]
               + [base2.random(rng) for _ in range(7)], INF)
    v = series_inverse(u, 8)
    d = u.mul_cap(v, 8) - Series(base2, [1], INF)
    assert all(base2.val(d.coeff(i)) >= 28 for i in range(9))


def test_weierstrass_divide_examples(base2):
    R = base2
    fd = Series(R, [0, 2, 0, 0, 1], INF)
    q, r = weierstrass_divide(fd, fd)
    assert [c.c[0] for c in q.coeffs] == [1] and r.is_zero()
    q, r = weierstrass_divide(Series(R, [0, 0, 0, 0, 1], INF), fd)
    assert [c.c[0] for c in q.coeffs] == [1]
    assert r.coeff(1) == R.el(-2) and r.coeff(0).is_zero()
    q, r = weierstrass_divide(Series(R, [0, 0, 0, 0, 0, 1], INF), fd)
    assert [c.c[0] for c in q.coeffs] == [0, 1]
    assert r.coeff(2) == R.el(-2)


def test_weierstrass_divide_identity_random(base2):
    rng = random.Random(8)
    fd = Series(base2, [0, 2, 0, 0, 1], INF)
    for _ in range(25):
        g = Series(base2, [base2.random(rng) for _ in range(rng.randrange(1, 12))], INF)
        q, r = weierstrass_divide(g, fd)
        back = q * fd + r
        d = back - g
        assert r.degree() < 4
        assert all(base2.val(d.coeff(i)) >= 30 for i in range(len(g.coeffs)))


def test_weierstrass_prepare_examples(base2, G2):
    R = base2
    dist, unit = weierstrass_prepare(Series(R, [0, 2, 0, 0, 1], INF))
    assert [c.c[0] for c in dist.coeffs] == [0, 2, 0, 0, 1]
    assert [c.c[0] for c in unit.coeffs] == [1]
    dist, unit = weierstrass_prepare(Series(R, [2, 1], INF))
    assert [c.c[0] for c in dist.coeffs] == [2, 1]
    # [4] for the reference group: distinguished of degree 16, reconstructs
    p4 = G2.pn_series(2)
    dist, unit = weierstrass_prepare(p4)
    assert dist.degree() == 16
    ring = p4.ring
    for i in range(16):
        assert ring.val(dist.coeff(i)) >= 1
    back = dist.mul_cap(unit, p4.degree())
    d = back - p4
    assert all(ring.val(d.coeff(i)) >= 30 for i in range(p4.degree() + 1))


def test_weierstrass_prepare_uniqueness(base2):
    rng = random.Random(10)
    for _ in range(20):
        d = rng.randrange(0, 4)
        coeffs = [base2.random(rng) * 2 for _ in range(d)]
        coeffs.append(base2.random_unit(rng))
        coeffs += [base2.random(rng) for _ in range(3)]
        f = Series(base2, coeffs, 24, 32)
        d1, u1 = weierstrass_prepare(f)
        d2, u2 = weierstrass_prepare(d1.mul_cap(u1, 24))
        diff = d1 - d2
        thr = min(d1.prec, d2.prec)  # truncated input limits re-preparation
        assert thr >= 5
        assert all(base2.val(diff.coeff(i)) >= thr for i in range(d1.degree() + 1))


def test_weierstrass_degree_invisible(base2):
    f = Series(base2, [2, 4, 6], INF)
    with pytest.raises(ValueError):
        weierstrass_prepare(f)


def _hull_oracle_points(pts):
    verts = []
    for i, vi in pts:
        below = False
        for a, va in pts:
            for b, vb in pts:
                if a < i < b:
                    if vi * (b - a) > (vb - va) * (i - a) + va * (b - a):
                        below = True
        if not below:
            verts.append((i, vi))
    out = []
    for pt in verts:
        while len(out) >= 2:
            (x1, y1), (x2, y2) = out[-2], out[-1]
            if (y2 - y1) * (pt[0] - x2) >= (pt[1] - y2) * (x2 - x1):
                out.pop()
            else:
                break
        out.append(pt)
    return out


def test_newton_polygon_examples(base2):
    poly = newton_polygon(Series(base2, [0, 2, 0, 0, 1], INF), start=1)
    assert poly.vertices == [(1, Fraction(1)), (4, Fraction(0))]
    assert poly.slopes == [Fraction(-1, 3)]
    poly = newton_polygon(Series(base2, [0, 0, 1], INF), start=1)
    assert poly.vertices == [(2, Fraction(0))]
    with pytest.raises(ValueError):
        newton_polygon(Series(base2, [], INF))


def test_newton_polygon_vs_oracle(base2):
    rng = random.Random(12)
    for _ in range(100):
        deg = rng.randrange(1, 9)
        s = Series(base2, [base2.el(rng.randrange(base2.mod))
                           for _ in range(deg + 1)], INF)
        if s.is_zero():
            continue
        got = newton_polygon(s)
        pts = [(i, base2.val(c).q) for i, c in enumerate(s.coeffs)
               if base2.val(c).certified]
        assert got.vertices == _hull_oracle_points(pts)


def test_slope_root_duality_level_one(G2, L1):
    # roots of E_1 in K_1 are the nonzero p-torsion: all valuation 1/3,
    # matching the single polygon slope -1/3 with multiplicity 3
    poly = newton_polygon(L1.eisenstein)
    assert poly.slopes == [Fraction(-1, 3)]
    assert poly.vertices[0][0] == 0 and poly.vertices[-1][0] == 3
    tower = L1.ring
    pts = L1.points()
    roots = [x for idx, x in pts.items() if any(idx)]
    for r in roots:
        assert tower.val(r) == Fraction(1, 3)
        assert tower.val(L1.eisenstein.eval(r)) >= L1.point_prec


def test_mul_precision_rules(base2):
    a = Series(base2, [1, 1], 3)
    b = Series(base2, [0, 1], INF)
    prod = a * b
    assert prod.order == 4  # X-multiple extends the certified order
    c = Series(base2, [1, 1], 3, prec=9)
    assert (a * c).prec == 9
