import random
from fractions import Fraction

import pytest
import sympy

from h2fg import (
    HenselConditionError,
    NotEisensteinError,
    Scaled,
    adjoin_eisenstein,
    hensel_root,
    make_unramified,
    valuation,
)
from h2fg.ring_tower import irreducible_modulus


def test_modulus_scan_matches_brute_force():
    # independent oracle: first monic lift (by digit value) with no root
    # and no quadratic factor over F_p
    def brute(p, f):
        def reducible(c):
            poly = c + [1]
            # root test
            for x in range(p):
                acc = 0
                for a in reversed(poly):
                    acc = (acc * x + a) % p
                if acc == 0:
                    return True
            if f == 4:  # quadratic-quadratic splits, not needed here
                raise NotImplementedError
            return False

        for v in range(p**f):
            c, w = [], v
            for _ in range(f):
                c.append(w % p)
                w //= p
            if f == 1 or not reducible(c):
                return tuple(c)

    assert irreducible_modulus(2, 1) == (0,)
    assert irreducible_modulus(2, 2) == (1, 1) == brute(2, 2)
    assert irreducible_modulus(3, 2) == (1, 0) == brute(3, 2)
    assert irreducible_modulus(5, 2) == brute(5, 2)


def test_make_unramified_examples():
    R = make_unramified(2, 1, 8)
    assert R.mod == 2**8 and R.modulus == (0,)
    R = make_unramified(2, 2, 32)
    assert R.modulus == (1, 1)
    with pytest.raises(ValueError):
        make_unramified(4, 2, 8)


def test_ring_axioms_randomized(base2):
    rng = random.Random(0)
    for _ in range(200):
        x, y, w = (base2.random(rng) for _ in range(3))
        assert (x + y) + w == x + (y + w)
        assert x * (y + w) == x * y + x * w
        assert x * y == y * x


def test_units_and_inverse(base2):
    rng = random.Random(1)
    for _ in range(50):
        x = base2.random_unit(rng)
        assert base2.inv(x) * x == base2.one
    assert not base2.is_unit(base2.el(2))


def test_teichmuller(base2):
    seen = set()
    for r in base2.residues(1):
        t = base2.teichmuller(r)
        assert t**base2.q == t
        seen.add(t.c)
    assert len(seen) == base2.q
    w = base2.teichmuller(base2.el([0, 1]))
    assert w**3 == base2.one


def test_adjoin_eisenstein_examples(base2):
    T = adjoin_eisenstein(base2, [2, 0, 0, 1])
    assert T.e == 3 and valuation(T.z) == Fraction(1, 3)
    R3 = make_unramified(3, 2, 24)
    T3 = adjoin_eisenstein(R3, [3, 0, 0, 0, 0, 0, 0, 0, 1])
    assert T3.e == 8 and valuation(T3.z) == Fraction(1, 8)
    with pytest.raises(NotEisensteinError) as err:
        adjoin_eisenstein(base2, [-1, 1])
    assert err.value.index == 0


def _int_matrix_val(T, x):
    """Oracle: valuation via the integer determinant of multiplication on
    the full Z-lattice basis x^a z^i (dimension e*f)."""
    base = T.base
    e, f, p = T.e, base.f, base.p
    dim = e * f
    cols = []
    for i in range(e):
        for a in range(f):
            v = T.el([0] * i + [base.el([0] * a + [1] + [0] * (f - 1 - a))])
            prod = x * v
            col = []
            for zc in prod.c:
                col.extend(int(c) for c in zc.c)
            cols.append(col)
    M = sympy.Matrix(dim, dim, lambda r, c: cols[c][r])
    det = int(M.det())
    if det == 0:
        return None
    v = 0
    while det % p == 0:
        det //= p
        v += 1
    # val_p(det) = (e f) val_p(x): one factor per Q_p-embedding
    return Fraction(v, dim)


def test_valuation_examples_and_resultant_oracle(base2):
    T = adjoin_eisenstein(base2, [2, 0, 0, 1])
    assert valuation(base2.el(2)) == 1
    assert valuation(T.z) == Fraction(1, 3)
    x = T.z**2 + 2
    assert valuation(x) == Fraction(2, 3)
    # exact integer resultant oracle for the same element
    Z = sympy.symbols("Z")
    res = sympy.resultant(Z**3 + 2, Z**2 + 2, Z)
    assert res == 12
    v = 0
    r = int(res)
    while r % 2 == 0:
        r //= 2
        v += 1
    assert Fraction(v, 3) == Fraction(2, 3)


def test_valuation_matrix_oracle_random(base2):
    T = adjoin_eisenstein(base2, [2, 0, 0, 1])
    rng = random.Random(7)
    for _ in range(12):
        x = T.random(rng)
        got = T.val(x)
        want = _int_matrix_val(T, x)
        if want is not None and want < 20:
            assert got.certified and got.q == want


def test_valuation_multiplicative_and_unit_criterion(base2):
    T = adjoin_eisenstein(base2, [2, 0, 0, 1])
    rng = random.Random(9)
    for _ in range(40):
        x, y = T.random(rng), T.random(rng)
        vx, vy, vxy = T.val(x), T.val(y), T.val(x * y)
        if vx.certified and vy.certified and vx.q + vy.q < 20:
            assert vxy.certified and vxy.q == vx.q + vy.q
        if vx.certified:
            assert T.is_unit(x) == (vx.q == 0)


def test_base_embedding_valuation_consistency(base2):
    T = adjoin_eisenstein(base2, [2, 0, 0, 1])
    rng = random.Random(11)
    for _ in range(30):
        a = base2.random(rng)
        assert T.val(T.embed(a)).q == base2.val(a).q


def test_scaled_normalization(base2):
    x = Scaled(base2.el(24), 3)
    n = x.normalized()
    assert n.shift == 0 and n.num == base2.el(3)
    assert x.val() == n.val() == 0 + valuation(base2.el(3)).q
    y = Scaled(base2.el(4), 1)
    assert y.val() == 1
    assert not Scaled(base2.el(1), 1).is_integral()


def test_tower_inversion(base2):
    T = adjoin_eisenstein(base2, [2, 0, 0, 1])
    rng = random.Random(3)
    for _ in range(20):
        x = T.random(rng)
        v = T.val(x)
        if not v.certified or v.q > 3:
            continue
        inv = T.inv(x)
        prod = (Scaled(x, 0) * inv).normalized()
        assert prod.shift == 0
        assert T.val(prod.num - T.one) >= T.N - 2 * int(v.q) - 2


def test_hensel_root_examples():
    R = make_unramified(2, 1, 20)
    # square root of 1 + 8u, congruent to 1 mod 4
    u = R.el(5)
    target = R.one + R.el(8) * u
    root = hensel_root(R, [target, R.zero, -R.one], R.one)
    assert root * root == target
    assert (root.c[0] - 1) % 4 == 0
    # X + 1 at seed -1
    root = hensel_root(R, [R.one, R.one], R.el(-1))
    assert root == R.el(-1)
    # X^2 + 1 violates the condition at 1
    with pytest.raises(HenselConditionError):
        hensel_root(R, [R.one, R.zero, R.one], R.one)
