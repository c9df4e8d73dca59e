"""Arithmetic in unramified p-adic base rings and single Eisenstein extensions.

The base ring is O_K/p^N where K is the unramified extension of Q_p of
residue degree f.  Elements are tuples of f integers in [0, p^N): the
coefficients of the canonical degree-<f representative with respect to a
fixed monic modulus.  The modulus is the deterministic smallest-coefficient
lift of an irreducible residue polynomial (see `irreducible_modulus`), so
serialized values are reproducible across runs and machines.

A tower O_K[Z]/(E(Z)) for E Eisenstein of degree e is totally ramified;
its elements are tuples of e base elements.  Because the valuations of the
basis monomials 1, z, ..., z^(e-1) are pairwise distinct modulo 1, the
valuation of a tower element is the minimum over its monomial terms, which
agrees with the norm/resultant formula val(Res(E, lift(x)))/e.

Valuations are exact rationals normalized by val(p) = 1; elements that are
indistinguishable from 0 at working precision get an "at least" marker
instead of a number.

All ring and element objects are immutable after construction; every
operation is pure, so values can be shared freely between threads.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from ._kernels import conv_flat, slot_bytes_for


class NotEisensteinError(ValueError):
    """Raised when a purported Eisenstein polynomial fails the test.

    `index` is the offending coefficient index.
    """

    def __init__(self, index: int, message: str):
        super().__init__(message)
        self.index = index


class HenselConditionError(ValueError):
    """Seed does not satisfy val(P(x0)) > 2 val(P'(x0))."""


class IntegralityError(ArithmeticError):
    """A value that is integral by theory failed to clear its denominator."""


class PrecisionError(ArithmeticError):
    """Requested certification exceeds what the working precision supports."""


# ---------------------------------------------------------------------------
# valuations


class Valuation:
    """An exact rational valuation, or a certified lower bound.

    `exact(q)` means val = q on the nose; `at_least(q)` marks an element
    indistinguishable from 0 at the current precision (val >= q is all that
    can be certified).
    """

    __slots__ = ("q", "certified")

    def __init__(self, q, certified: bool):
        self.q = Fraction(q)
        self.certified = certified

    @classmethod
    def exact(cls, q) -> "Valuation":
        return cls(q, True)

    @classmethod
    def at_least(cls, q) -> "Valuation":
        return cls(q, False)

    def __repr__(self):
        return str(self.q) if self.certified else f">={self.q}"

    def __eq__(self, other):
        if isinstance(other, Valuation):
            return self.certified == other.certified and self.q == other.q
        if isinstance(other, (int, Fraction)):
            return self.certified and self.q == Fraction(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.q, self.certified))

    def __ge__(self, bound) -> bool:
        # True whether exact or merely bounded: both certify val >= bound.
        return self.q >= Fraction(bound)

    def __lt__(self, bound) -> bool:
        return self.certified and self.q < Fraction(bound)

    def __add__(self, other: "Valuation") -> "Valuation":
        # valuation of a product; exact only when both factors are.
        return Valuation(self.q + other.q, self.certified and other.certified)

    def shifted(self, k: int) -> "Valuation":
        return Valuation(self.q - k, self.certified)

    @staticmethod
    def minimum(vals) -> "Valuation":
        """Valuation of a sum whose terms have pairwise distinct valuations.

        Falls back to a bound when the minimum is itself uncertified.
        """
        best = None
        for v in vals:
            if best is None or v.q < best.q:
                best = v
        return best


# ---------------------------------------------------------------------------
# F_p[x] helpers for modulus selection and residue-field inverses


def _fp_trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _fp_mul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _fp_trim(out)


def _fp_mod(a, m, p):
    a = list(a)
    dm = len(m) - 1
    inv_lead = pow(m[-1], -1, p)
    while len(a) - 1 >= dm and a:
        if a[-1] == 0:
            a.pop()
            continue
        c = a[-1] * inv_lead % p
        off = len(a) - 1 - dm
        for i, mi in enumerate(m):
            a[off + i] = (a[off + i] - c * mi) % p
        a.pop()
    return _fp_trim(a)


def _fp_powmod(a, k, m, p):
    r = [1]
    a = _fp_mod(a, m, p)
    while k:
        if k & 1:
            r = _fp_mod(_fp_mul(r, a, p), m, p)
        a = _fp_mod(_fp_mul(a, a, p), m, p)
        k >>= 1
    return r


def _fp_gcd(a, b, p):
    a, b = list(a), list(b)
    while b:
        a, b = b, _fp_mod(a, b, p)
    return a


def _fp_irreducible(m, p) -> bool:
    """Rabin test for a monic polynomial over F_p."""
    f = len(m) - 1
    if f == 1:
        return True
    x = [0, 1]
    xq = _fp_powmod(x, p**f, m, p)
    if _fp_trim([(xq[i] if i < len(xq) else 0) - (x[i] if i < len(x) else 0)
                 for i in range(max(len(xq), len(x)))]) != []:
        return False
    for ell in _prime_divisors(f):
        xd = _fp_powmod(x, p ** (f // ell), m, p)
        diff = [((xd[i] if i < len(xd) else 0) - (x[i] if i < len(x) else 0)) % p
                for i in range(max(len(xd), len(x)))]
        g = _fp_gcd(m, _fp_trim(diff), p)
        if len(g) - 1 > 0:
            return False
    return True


def _prime_divisors(n):
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
        if q * q > n:
            return True
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def irreducible_modulus(p: int, f: int) -> tuple[int, ...]:
    """Non-leading coefficients of the fixed degree-f modulus for (p, f).

    Scans monic lifts X^f + c_{f-1}X^{f-1} + ... + c_0 with digits c_i in
    [0, p) by increasing value of c_0 + c_1 p + ... and returns the first
    irreducible one.  For f = 1 this is the polynomial X.
    """
    for v in range(p**f):
        c, w = [], v
        for _ in range(f):
            c.append(w % p)
            w //= p
        if _fp_irreducible(c + [1], p):
            return tuple(c)
    raise AssertionError("no irreducible polynomial found")  # unreachable


# ---------------------------------------------------------------------------
# base ring


class BaseElt:
    """Element of an UnramifiedBase: tuple of f canonical coefficients."""

    __slots__ = ("ring", "c")

    def __init__(self, ring, c):
        self.ring = ring
        self.c = c

    def __add__(self, other):
        if not isinstance(other, (BaseElt, int)):
            return NotImplemented
        other = self.ring.el(other)
        m = self.ring.mod
        return BaseElt(self.ring, tuple((a + b) % m for a, b in zip(self.c, other.c)))

    __radd__ = __add__

    def __neg__(self):
        m = self.ring.mod
        return BaseElt(self.ring, tuple((-a) % m for a in self.c))

    def __sub__(self, other):
        if not isinstance(other, (BaseElt, int)):
            return NotImplemented
        return self + (-self.ring.el(other))

    def __rsub__(self, other):
        return self.ring.el(other) - self

    def __mul__(self, other):
        if isinstance(other, int):
            m = self.ring.mod
            return BaseElt(self.ring, tuple(a * other % m for a in self.c))
        if not isinstance(other, BaseElt):
            return NotImplemented
        other = self.ring.el(other)
        return self.ring._mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        r = self.ring.one
        b = self
        while k:
            if k & 1:
                r = r * b
            b = b * b
            k >>= 1
        return r

    def __eq__(self, other):
        if isinstance(other, (BaseElt, int)):
            return self.c == self.ring.el(other).c
        return NotImplemented

    def __hash__(self):
        return hash(self.c)

    def __repr__(self):
        return f"Zq{self.c}"

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.c)


class UnramifiedBase:
    """O_K/p^N with K unramified of residue degree f over Q_p.

    The residue field has q = p^f elements.  `e` is 1: the base ring is
    its own (trivial) Eisenstein tower, which lets series code treat both
    uniformly.
    """

    def __init__(self, p: int, f: int, N: int, modulus: tuple[int, ...] | None = None):
        if not _is_prime(p):
            raise ValueError(f"p = {p} is not prime")
        if f < 1 or N < 1:
            raise ValueError("f and N must be positive")
        self.p = p
        self.f = f
        self.N = N
        self.q = p**f
        self.e = 1
        self.mod = p**N
        if modulus is None:
            modulus = irreducible_modulus(p, f)
        else:
            modulus = tuple(int(c) % self.mod for c in modulus)
            if len(modulus) != f:
                raise ValueError("modulus must list the f non-leading coefficients")
            if not _fp_irreducible([c % p for c in modulus] + [1], p):
                raise ValueError("modulus is reducible mod p")
        self.modulus = modulus
        self.key = ("zq", p, f, N, tuple(c % p for c in modulus))
        self.zero = BaseElt(self, (0,) * f)
        self.one = BaseElt(self, (1,) + (0,) * (f - 1))
        # x^(f+k) mod modulus for k = 0..f-2, as coefficient tuples
        self._xpow = self._build_xpow()
        self._teich_cache: dict[tuple, BaseElt] = {}

    def __repr__(self):
        return f"Zq(p={self.p}, f={self.f}, N={self.N})"

    def _build_xpow(self):
        rows = []
        cur = tuple((-c) % self.mod for c in self.modulus)  # x^f
        rows.append(cur)
        for _ in range(self.f - 2):
            shifted = (0,) + cur[:-1]
            top = cur[-1]
            cur = tuple((shifted[i] + top * rows[0][i]) % self.mod for i in range(self.f))
            rows.append(cur)
        return rows

    def el(self, v) -> BaseElt:
        if isinstance(v, BaseElt):
            if v.ring.key != self.key:
                if v.ring.key[:3] == self.key[:3]:
                    return BaseElt(self, tuple(a % self.mod for a in v.c))
                raise TypeError("element of a different ring")
            return v
        if isinstance(v, int):
            return BaseElt(self, (v % self.mod,) + (0,) * (self.f - 1))
        c = tuple(int(a) % self.mod for a in v)
        if len(c) != self.f:
            raise ValueError(f"need {self.f} coefficients")
        return BaseElt(self, c)

    def _mul(self, a: BaseElt, b: BaseElt) -> BaseElt:
        f, m = self.f, self.mod
        if f == 1:
            return BaseElt(self, (a.c[0] * b.c[0] % m,))
        raw = [0] * (2 * f - 1)
        for i, ai in enumerate(a.c):
            if ai:
                for j, bj in enumerate(b.c):
                    raw[i + j] += ai * bj
        return BaseElt(self, self.reduce_flat(raw))

    def reduce_flat(self, raw: list[int]) -> tuple[int, ...]:
        """Fold a length-(2f-1) convolution row to a canonical coefficient tuple."""
        f, m = self.f, self.mod
        out = list(raw[:f]) + [0] * (f - len(raw[:f]))
        for k in range(f, len(raw)):
            v = raw[k]
            if v:
                row = self._xpow[k - f]
                for i in range(f):
                    out[i] += v * row[i]
        return tuple(v % m for v in out)

    def val(self, x: BaseElt) -> Valuation:
        best = None
        for a in x.c:
            if a:
                v = 0
                while a % self.p == 0:
                    a //= self.p
                    v += 1
                if best is None or v < best:
                    best = v
        if best is None:
            return Valuation.at_least(self.N)
        return Valuation.exact(best)

    def is_unit(self, x: BaseElt) -> bool:
        return any(a % self.p for a in x.c)

    def inv(self, x: BaseElt) -> BaseElt:
        """Inverse of a unit, by residue-field inversion and Newton lifting."""
        if not self.is_unit(x):
            raise ZeroDivisionError("not a unit at this precision")
        p = self.p
        mbar = [c % p for c in self.modulus] + [1]
        s = _fp_invmod([c % p for c in x.c], mbar, p)
        y = self.el(s + [0] * (self.f - len(s)))
        two = self.el(2)
        for _ in range(self.N.bit_length() + 2):
            err = x * y
            if err == self.one:
                return y
            y = y * (two - err)
        raise AssertionError("Newton inversion failed to converge")

    def random(self, rng) -> BaseElt:
        return BaseElt(self, tuple(rng.randrange(self.mod) for _ in range(self.f)))

    def random_unit(self, rng) -> BaseElt:
        while True:
            x = self.random(rng)
            if self.is_unit(x):
                return x

    def residues(self, n: int = 1):
        """All canonical representatives of O_K/p^n, as elements."""
        box = range(self.p**n)
        for c in itertools.product(box, repeat=self.f):
            yield self.el(c)

    def teichmuller(self, x: BaseElt) -> BaseElt:
        """The Teichmuller representative with the same residue as x."""
        rkey = tuple(a % self.p for a in x.c)
        hit = self._teich_cache.get(rkey)
        if hit is not None:
            return hit
        t = self.el(rkey)
        for _ in range(self.N + 2):
            nxt = t**self.q
            if nxt == t:
                break
            t = nxt
        self._teich_cache[rkey] = t
        return t

    def at_precision(self, M: int) -> "UnramifiedBase":
        return UnramifiedBase(self.p, self.f, M, tuple(c % self.p for c in self.modulus))

    def div_exact_p(self, x: BaseElt, k: int) -> BaseElt:
        """Representative division by p^k; requires exact divisibility.

        The result is only guaranteed modulo p^(N-k): callers must account
        for the k digits of lost absolute precision.
        """
        d = self.p**k
        if any(a % d for a in x.c):
            raise IntegralityError(f"representative not divisible by p^{k}")
        return BaseElt(self, tuple(a // d for a in x.c))

    def serialize(self, x: BaseElt) -> list[str]:
        """Base-p digit strings (least significant first), one per coefficient."""
        out = []
        for a in x.c:
            digits = []
            for _ in range(self.N):
                digits.append(str(a % self.p))
                a //= self.p
            out.append("".join(digits))
        return out


def _fp_divmod(a, b, p):
    a = list(a)
    db = len(b) - 1
    inv_lead = pow(b[-1], -1, p)
    q = [0] * max(len(a) - db, 0)
    while len(a) - 1 >= db and a:
        if a[-1] == 0:
            a.pop()
            continue
        c = a[-1] * inv_lead % p
        off = len(a) - 1 - db
        q[off] = c
        for i, bi in enumerate(b):
            a[off + i] = (a[off + i] - c * bi) % p
        a.pop()
    return _fp_trim(q), _fp_trim(a)


def _fp_sub(a, b, p):
    n = max(len(a), len(b))
    return _fp_trim([((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % p
                     for i in range(n)])


def _fp_invmod(a, m, p):
    r0, r1 = list(m), _fp_mod(a, m, p)
    s0, s1 = [], [1]
    while len(r1) > 1:
        q, r = _fp_divmod(r0, r1, p)
        r0, r1 = r1, r
        s0, s1 = s1, _fp_sub(s0, _fp_mul(q, s1, p), p)
    if not r1:
        raise ZeroDivisionError("not invertible in the residue field")
    c_inv = pow(r1[0], -1, p)
    return [v * c_inv % p for v in s1]


# ---------------------------------------------------------------------------
# Eisenstein towers


class TowerElt:
    """Element of an EisensteinTower: tuple of e base-ring coefficients of z."""

    __slots__ = ("ring", "c")

    def __init__(self, ring, c):
        self.ring = ring
        self.c = c

    def __add__(self, other):
        other = self.ring.el(other)
        return TowerElt(self.ring, tuple(a + b for a, b in zip(self.c, other.c)))

    __radd__ = __add__

    def __neg__(self):
        return TowerElt(self.ring, tuple(-a for a in self.c))

    def __sub__(self, other):
        return self + (-self.ring.el(other))

    def __rsub__(self, other):
        return self.ring.el(other) - self

    def __mul__(self, other):
        if isinstance(other, int):
            return TowerElt(self.ring, tuple(a * other for a in self.c))
        if isinstance(other, BaseElt):
            return TowerElt(self.ring, tuple(a * other for a in self.c))
        other = self.ring.el(other)
        return self.ring._mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        r = self.ring.one
        b = self
        while k:
            if k & 1:
                r = r * b
            b = b * b
            k >>= 1
        return r

    def __eq__(self, other):
        if isinstance(other, (TowerElt, BaseElt, int)):
            return self.c == self.ring.el(other).c
        return NotImplemented

    def __hash__(self):
        return hash(tuple(a.c for a in self.c))

    def __repr__(self):
        return f"Tw{tuple(a.c for a in self.c)}"

    def is_zero(self) -> bool:
        return all(a.is_zero() for a in self.c)


class EisensteinTower:
    """O_K[Z]/(E(Z), p^N) for an Eisenstein polynomial E of degree e.

    The class z of Z is a uniformizer with val(z) = 1/e.  Construction
    rejects non-Eisenstein input, reporting the first violated coefficient
    index.
    """

    def __init__(self, base: UnramifiedBase, E):
        self.base = base
        self.p = base.p
        self.N = base.N
        self.mod = base.mod
        coeffs = [base.el(c) for c in E]
        if len(coeffs) < 2 or coeffs[-1] != base.one:
            raise ValueError("E must be monic of degree >= 1")
        e = len(coeffs) - 1
        v0 = base.val(coeffs[0])
        if not (v0.certified and v0.q == 1):
            raise NotEisensteinError(0, f"constant term has valuation {v0}, need exactly 1")
        for i in range(1, e):
            if not base.val(coeffs[i]) >= 1:
                raise NotEisensteinError(i, f"coefficient {i} has valuation < 1")
        self.E = tuple(coeffs)
        self.e = e
        self.key = ("tower", base.key, tuple(tuple(c.c) for c in coeffs))
        self.zero = TowerElt(self, (base.zero,) * e)
        self.one = TowerElt(self, (base.one,) + (base.zero,) * (e - 1))
        self.z = self.el([0, 1] + [0] * (e - 2)) if e >= 2 else self.el([0])
        self._zpow = self._build_zpow()
        self._sf = 2 * base.f - 1
        self._slot_bytes = slot_bytes_for(self.mod - 1, 2 * e * base.f)
        self._w_inv_z = None

    def __repr__(self):
        return f"Tower(e={self.e} over {self.base!r})"

    def _build_zpow(self):
        # z^(e+k) mod E for k = 0..e-2, as tuples of base elements
        base = self.base
        rows = []
        cur = tuple(-c for c in self.E[:-1])  # z^e
        rows.append(cur)
        for _ in range(self.e - 2):
            top = cur[-1]
            shifted = (base.zero,) + cur[:-1]
            cur = tuple(shifted[i] + top * rows[0][i] for i in range(self.e))
            rows.append(cur)
        return rows

    def el(self, v) -> TowerElt:
        base = self.base
        if isinstance(v, TowerElt):
            if v.ring.key != self.key:
                raise TypeError("element of a different tower")
            return v
        if isinstance(v, (BaseElt, int)):
            return TowerElt(self, (base.el(v),) + (base.zero,) * (self.e - 1))
        coeffs = [base.el(a) for a in v]
        if len(coeffs) > self.e:
            coeffs = self.reduce_poly(coeffs)
        coeffs += [base.zero] * (self.e - len(coeffs))
        return TowerElt(self, tuple(coeffs))

    def reduce_poly(self, coeffs: list[BaseElt]) -> list[BaseElt]:
        """Reduce a z-polynomial of any degree modulo E (monic division)."""
        coeffs = list(coeffs)
        while len(coeffs) > self.e:
            top = coeffs.pop()
            if not top.is_zero():
                off = len(coeffs) - self.e
                for i in range(self.e):
                    coeffs[off + i] = coeffs[off + i] - top * self.E[i]
        coeffs += [self.base.zero] * (self.e - len(coeffs))
        return coeffs

    def _mul(self, a: TowerElt, b: TowerElt) -> TowerElt:
        base, e, sf = self.base, self.e, self._sf
        fa, fb = [], []
        for coeff in a.c:
            fa.extend(coeff.c)
            fa.extend([0] * (sf - base.f))
        for coeff in b.c:
            fb.extend(coeff.c)
            fb.extend([0] * (sf - base.f))
        raw = conv_flat(fa, fb, self._slot_bytes)
        raw.extend([0] * ((2 * e - 1) * sf - len(raw)))
        # fold x-degree overflow inside each z-slot, then z-degrees >= e
        cs = [base.reduce_flat(raw[k * sf:(k + 1) * sf]) for k in range(2 * e - 1)]
        out = [BaseElt(base, c) for c in cs[:e]]
        for k in range(e, 2 * e - 1):
            ck = BaseElt(base, cs[k])
            if not ck.is_zero():
                row = self._zpow[k - e]
                for i in range(e):
                    out[i] = out[i] + ck * row[i]
        return TowerElt(self, tuple(out))

    def val(self, x: TowerElt) -> Valuation:
        """Minimum of val(a_i) + i/e; exact because those values never collide."""
        best = None
        for i, a in enumerate(x.c):
            va = self.base.val(a)
            if va.certified:
                t = va.q + Fraction(i, self.e)
                if best is None or t < best:
                    best = t
        if best is None:
            return Valuation.at_least(self.N)
        return Valuation.exact(best)

    def is_unit(self, x: TowerElt) -> bool:
        v = self.val(x)
        return v.certified and v.q == 0

    def embed(self, a: BaseElt) -> TowerElt:
        return self.el(a)

    def residue(self, x: TowerElt) -> tuple[int, ...]:
        """Image in the residue field F_q (totally ramified: that of the base)."""
        return tuple(a % self.p for a in x.c[0].c)

    def random(self, rng) -> TowerElt:
        return TowerElt(self, tuple(self.base.random(rng) for _ in range(self.e)))

    def div_exact_p(self, x: TowerElt, k: int) -> TowerElt:
        """Coefficientwise representative division by p^k; loses k digits."""
        return TowerElt(self, tuple(self.base.div_exact_p(a, k) for a in x.c))

    def _newton_inv_unit(self, u: TowerElt) -> TowerElt:
        a0 = u.c[0]
        if not self.base.is_unit(a0):
            raise ZeroDivisionError("not a unit")
        y = self.el(self.base.inv(a0))
        two = self.el(2)
        # error valuation doubles each round from 1/e
        for _ in range((self.N * self.e).bit_length() + 2):
            err = u * y
            if err == self.one:
                return y
            y = y * (two - err)
        raise AssertionError("Newton inversion failed to converge")

    def inv(self, x: TowerElt) -> "Scaled":
        """Inverse as a Scaled value p^(-k) * integral.

        For val(x) = m/e the representative of the result is exact modulo
        p^(N - k) with k = ceil(m/e); the value is then known modulo
        p^(N - 2k).  Raises ZeroDivisionError on uncertified input.
        """
        v = self.val(x)
        if not v.certified:
            raise ZeroDivisionError("valuation not certified at this precision")
        m = int(v.q * self.e)
        j = (-m) % self.e
        k = (m + j) // self.e
        u = x * self.z**j if j else x
        w = self.div_exact_p(u, k) if k else u
        y = self._newton_inv_unit(w)
        num = y * self.z**j if j else y
        return Scaled(num, k)

    def serialize(self, x: TowerElt) -> list[list[str]]:
        return [self.base.serialize(a) for a in x.c]


def make_unramified(p: int, f: int, N: int) -> UnramifiedBase:
    """Base ring O_K/p^N with the documented deterministic modulus."""
    return UnramifiedBase(p, f, N)


def adjoin_eisenstein(base: UnramifiedBase, E) -> EisensteinTower:
    """Extend the base by one Eisenstein polynomial (full coefficient list, monic)."""
    return EisensteinTower(base, E)


def valuation(x) -> Valuation:
    """val_p of a base, tower, or scaled element, normalized by val_p(p) = 1."""
    if isinstance(x, Scaled):
        return x.val()
    return x.ring.val(x)


# ---------------------------------------------------------------------------
# scaled elements (bounded denominators)


class Scaled:
    """A ring element divided by a power of p: value p^(-shift) * num.

    The numerator is an exact representative mod p^N, so the value is known
    mod p^(N - shift): dividing by p consumes shift budget instead of
    silently dropping digits.  Immutable.
    """

    __slots__ = ("num", "shift")

    def __init__(self, num, shift: int = 0):
        if shift < 0:
            num = num * (num.ring.p ** (-shift))
            shift = 0
        self.num = num
        self.shift = shift

    @property
    def ring(self):
        return self.num.ring

    def __add__(self, other):
        other = _as_scaled(other, self.ring)
        s, t = self.shift, other.shift
        p = self.ring.p
        if s == t:
            return Scaled(self.num + other.num, s)
        if s < t:
            return Scaled(self.num * p ** (t - s) + other.num, t)
        return Scaled(self.num + other.num * p ** (s - t), s)

    __radd__ = __add__

    def __neg__(self):
        return Scaled(-self.num, self.shift)

    def __sub__(self, other):
        return self + (-_as_scaled(other, self.ring))

    def __rsub__(self, other):
        return _as_scaled(other, self.ring) - self

    def __mul__(self, other):
        if isinstance(other, int):
            return Scaled(self.num * other, self.shift)
        other = _as_scaled(other, self.ring)
        return Scaled(self.num * other.num, self.shift + other.shift)

    __rmul__ = __mul__

    def __repr__(self):
        return f"{self.num!r}/p^{self.shift}" if self.shift else repr(self.num)

    def val(self) -> Valuation:
        return self.ring.val(self.num).shifted(self.shift)

    def normalized(self) -> "Scaled":
        """Strip common p factors from the numerator; value and its precision unchanged."""
        k, num = self.shift, self.num
        ring = self.ring
        while k > 0:
            try:
                num = ring.div_exact_p(num, 1)
            except IntegralityError:
                break
            k -= 1
        return Scaled(num, k)

    def integral_part(self, context: str = "value"):
        """The numerator of the normalized form, requiring shift 0.

        Raises IntegralityError if a denominator remains: callers use this
        for values that are integral by theory, so failure is a bug signal.
        """
        n = self.normalized()
        if n.shift:
            raise IntegralityError(f"{context}: denominator p^{n.shift} did not clear")
        return n.num

    def is_integral(self) -> bool:
        return self.normalized().shift == 0


def _as_scaled(v, ring) -> Scaled:
    if isinstance(v, Scaled):
        return v
    if isinstance(v, (int, BaseElt, TowerElt)):
        return Scaled(ring.el(v), 0)
    raise TypeError(f"cannot coerce {type(v).__name__} to Scaled")


def eq_mod(x, y, k) -> bool:
    """True when val(x - y) >= k (marker bounds count as certified >=)."""
    if isinstance(x, Scaled) or isinstance(y, Scaled):
        ring = x.ring if isinstance(x, Scaled) else y.ring
        d = _as_scaled(x, ring) - _as_scaled(y, ring)
        return d.val() >= k
    return valuation(x - y) >= k


# ---------------------------------------------------------------------------
# Hensel lifting


def hensel_root(ring, P, x0, target: int | None = None):
    """Root of a polynomial P (coefficient list, low degree first) near x0.

    Requires the classical condition val(P(x0)) > 2 val(P'(x0)); callers
    that cannot meet it must supply a better seed, e.g. from a segmented
    digit search.  Returns the lifted root, exact to working precision up
    to the 2 val(P') digits lost inverting the derivative.
    """
    P = [ring.el(c) for c in P]
    dP = [P[i] * i for i in range(1, len(P))]
    x = ring.el(x0)
    fx = _poly_eval(P, x, ring)
    dfx = _poly_eval(dP, x, ring)
    vf, vdf = valuation(fx), valuation(dfx)
    if not vdf.certified:
        raise HenselConditionError("derivative vanishes at seed at this precision")
    if vf.certified and not vf.q > 2 * vdf.q:
        raise HenselConditionError(
            f"val(P(x0)) = {vf} not greater than 2 val(P'(x0)) = {2 * vdf.q}")
    if target is None:
        target = ring.N - 2 * int(vdf.q)
    for _ in range(ring.N.bit_length() + ring.e.bit_length() + 4):
        if valuation(fx) >= target + 2 * vdf.q:
            break
        step = (_inv_any(ring, dfx) * fx).normalized()
        if step.shift:
            raise HenselConditionError("correction failed to stay integral")
        x = x - step.num
        fx = _poly_eval(P, x, ring)
        dfx = _poly_eval(dP, x, ring)
    return x


def _poly_eval(P, x, ring):
    acc = ring.zero
    for c in reversed(P):
        acc = acc * x + c
    return acc


def _inv_any(ring, x) -> Scaled:
    if isinstance(ring, EisensteinTower):
        return ring.inv(x)
    v = ring.val(x)
    if not v.certified:
        raise ZeroDivisionError("valuation not certified")
    k = int(v.q)
    u = ring.div_exact_p(x, k) if k else x
    return Scaled(ring.inv(u), k)


# ---------------------------------------------------------------------------
# determinants over a commutative ring (division-free)


def det_ring(M, ring):
    """Determinant of a square matrix of ring elements.

    Memoized Laplace expansion over column subsets: O(n 2^n) ring
    operations, division-free, fine for the small certificate matrices
    this library produces.
    """
    n = len(M)
    dp = {0: ring.one}
    for k in range(1, n + 1):
        row = M[n - k]
        ndp = {}
        for cols in itertools.combinations(range(n), k):
            mask = 0
            for j in cols:
                mask |= 1 << j
            acc = ring.zero
            sign = 1
            for j in cols:
                term = row[j] * dp[mask ^ (1 << j)]
                acc = acc + term if sign > 0 else acc - term
                sign = -sign
            ndp[mask] = acc
        dp = ndp
    return dp[(1 << n) - 1]

