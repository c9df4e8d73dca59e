"""Truncated power series over the rings of `ring_tower`.

A Series stores coefficients (degree-indexed ring elements), a truncation
order, and an absolute coefficient precision: the represented object is
exact modulo (p^prec, X^(order+1)).  Exact polynomials use the sentinel
order INF.  A ScaledSeries is a Series divided by a power of p, so series
over the fraction field keep exact representatives and pay for divisions
with shift budget instead of silent digit loss.

Multiplication flattens both operands into byte-slot packed big integers
(Kronecker substitution, see `_kernels`) so the convolution runs inside
CPython's integer multiply; x- and z-overflow are folded back through the
ring's reduction tables afterwards.

Weierstrass preparation/division and Newton polygons (with exact rational
valuations) live here as well; they are the workhorses behind torsion
towers and the monomial-basis functionals built on top.
"""

from __future__ import annotations

import math
from fractions import Fraction

from ._kernels import conv_flat, slot_bytes_for
from .ring_tower import (
    BaseElt,
    IntegralityError,
    PrecisionError,
    Scaled,
    TowerElt,
    UnramifiedBase,
    _inv_any,
)

INF = 1 << 60


class Series:
    """Truncated univariate power series with integral coefficients."""

    __slots__ = ("ring", "coeffs", "order", "prec")

    def __init__(self, ring, coeffs, order=INF, prec=None):
        self.ring = ring
        cs = [ring.el(c) for c in coeffs]
        if order is not INF and len(cs) > order + 1:
            cs = cs[:order + 1]
        while cs and cs[-1].is_zero():
            cs.pop()
        self.coeffs = cs
        self.order = order
        self.prec = ring.N if prec is None else min(prec, ring.N)

    # -- accessors ---------------------------------------------------------

    def coeff(self, i: int):
        if i < len(self.coeffs):
            return self.coeffs[i]
        return self.ring.zero

    def degree(self) -> int:
        return len(self.coeffs) - 1

    def low_degree(self) -> int:
        """Index of the first stored nonzero coefficient (order+1 if none)."""
        for i, c in enumerate(self.coeffs):
            if not c.is_zero():
                return i
        return (self.order + 1) if self.order is not INF else INF

    def is_zero(self) -> bool:
        return not self.coeffs

    def truncate(self, order: int) -> "Series":
        return Series(self.ring, self.coeffs[:order + 1], min(self.order, order), self.prec)

    def with_prec(self, prec: int) -> "Series":
        return Series(self.ring, self.coeffs, self.order, min(self.prec, prec))

    def __repr__(self):
        o = "inf" if self.order is INF else self.order
        return f"Series(deg<= {self.degree()}, order={o}, prec={self.prec})"

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        other = _coerce_series(other, self.ring)
        n = max(len(self.coeffs), len(other.coeffs))
        cs = [self.coeff(i) + other.coeff(i) for i in range(n)]
        return Series(self.ring, cs, min(self.order, other.order),
                      min(self.prec, other.prec))

    def __neg__(self):
        return Series(self.ring, [-c for c in self.coeffs], self.order, self.prec)

    def __sub__(self, other):
        return self + (-_coerce_series(other, self.ring))

    def scale(self, a) -> "Series":
        return Series(self.ring, [c * a for c in self.coeffs], self.order, self.prec)

    def shift_x(self, k: int) -> "Series":
        order = self.order if self.order is INF else self.order + k
        return Series(self.ring, [self.ring.zero] * k + self.coeffs, order, self.prec)

    def __mul__(self, other):
        return self.mul_cap(other, None)

    def mul_cap(self, other, cap: int | None) -> "Series":
        other = _coerce_series(other, self.ring)
        la, lb = self.low_degree(), other.low_degree()
        if la is INF and self.order is INF:
            return Series(self.ring, [], INF, min(self.prec, other.prec))
        if lb is INF and other.order is INF:
            return Series(self.ring, [], INF, min(self.prec, other.prec))
        order = min(_tail_sum(self.order, lb), _tail_sum(other.order, la)) - 1
        if cap is not None:
            order = min(order, cap)
        cs = _mul_coeff_lists(self.ring, self.coeffs, other.coeffs,
                              None if order is INF else order)
        return Series(self.ring, cs, INF if order >= INF else order,
                      min(self.prec, other.prec))

    def pow_cap(self, k: int, cap: int | None) -> "Series":
        r = Series(self.ring, [1], INF, self.prec)
        b = self
        while k:
            if k & 1:
                r = r.mul_cap(b, cap)
            b = b.mul_cap(b, cap)
            k >>= 1
        return r

    def eval(self, x):
        """Horner evaluation of the stored polynomial part at a ring point.

        The dropped tail has valuation >= (order+1) * val(x); callers fold
        that into their certificates.
        """
        ring = x.ring
        acc = ring.zero
        for c in reversed(self.coeffs):
            acc = acc * x + ring.el(c)
        return acc

    def derivative(self) -> "Series":
        cs = [self.coeffs[i] * i for i in range(1, len(self.coeffs))]
        order = self.order if self.order is INF else max(self.order - 1, 0)
        return Series(self.ring, cs, order, self.prec)

    def map_ring(self, ring) -> "Series":
        return Series(ring, [ring.el(c) for c in self.coeffs], self.order,
                      min(self.prec, ring.N))

    def serialize(self) -> dict:
        """Ring descriptor plus base-p digit strings per coefficient."""
        ring = self.ring
        desc = {"p": ring.p, "N": ring.N}
        if isinstance(ring, UnramifiedBase):
            desc["f"] = ring.f
            desc["modulus"] = list(ring.modulus)
        else:
            desc["f"] = ring.base.f
            desc["modulus"] = list(ring.base.modulus)
            desc["eisenstein"] = [ring.base.serialize(c) for c in ring.E]
        return {
            "ring": desc,
            "order": None if self.order is INF else self.order,
            "prec": self.prec,
            "coeffs": [self.ring.serialize(c) for c in self.coeffs],
        }


def _tail_sum(order, low):
    if order is INF or low is INF:
        return INF
    return order + 1 + low


def _coerce_series(v, ring) -> Series:
    if isinstance(v, Series):
        if v.ring.key != ring.key:
            return v.map_ring(ring)
        return v
    if isinstance(v, (int, BaseElt, TowerElt)):
        return Series(ring, [v], INF)
    if isinstance(v, (list, tuple)):
        return Series(ring, v, INF)
    raise TypeError(f"cannot coerce {type(v).__name__} to Series")


def _mul_coeff_lists(ring, A, B, cap):
    """Coefficient lists product via packed convolution, folded and reduced."""
    if not A or not B:
        return []
    if cap is not None:
        A = A[:cap + 1]
        B = B[:cap + 1]
    la, lb = len(A), len(B)
    nout = la + lb - 1 if cap is None else min(la + lb - 1, cap + 1)
    if isinstance(ring, UnramifiedBase):
        sf = 2 * ring.f - 1
        fa = _flatten_base(A, ring, sf)
        fb = _flatten_base(B, ring, sf)
        sb = slot_bytes_for(ring.mod - 1, min(la, lb) * ring.f)
        raw = conv_flat(fa, fb, sb)
        raw.extend([0] * ((la + lb - 1) * sf - len(raw)))
        return [BaseElt(ring, ring.reduce_flat(raw[k * sf:(k + 1) * sf]))
                for k in range(nout)]
    if not hasattr(ring, "base"):
        # generic coefficient ring (e.g. the cyclotomic etale algebra):
        # schoolbook convolution through element arithmetic
        out = [ring.zero] * nout
        for i, ai in enumerate(A):
            if ai.is_zero():
                continue
            for j, bj in enumerate(B):
                if i + j < nout and not bj.is_zero():
                    out[i + j] = out[i + j] + ai * bj
        return out
    base = ring.base
    sf = 2 * base.f - 1
    se = 2 * ring.e - 1
    stride = sf * se
    fa = _flatten_tower(A, ring, sf, stride)
    fb = _flatten_tower(B, ring, sf, stride)
    sb = slot_bytes_for(ring.mod - 1, min(la, lb) * ring.e * base.f)
    raw = conv_flat(fa, fb, sb)
    raw.extend([0] * ((la + lb - 1) * stride - len(raw)))
    out = []
    for k in range(nout):
        chunk = raw[k * stride:(k + 1) * stride]
        zrow = [BaseElt(base, base.reduce_flat(chunk[t * sf:(t + 1) * sf]))
                for t in range(se)]
        out.append(TowerElt(ring, tuple(ring.reduce_poly(zrow))))
    return out


def _flatten_base(A, ring, sf):
    pad = sf - ring.f
    flat = []
    for c in A:
        flat.extend(c.c)
        flat.extend([0] * pad)
    return flat


def _flatten_tower(A, ring, sf, stride):
    base = ring.base
    padx = sf - base.f
    padz = stride - sf * ring.e
    flat = []
    for c in A:
        for a in c.c:
            flat.extend(a.c)
            flat.extend([0] * padx)
        flat.extend([0] * padz)
    return flat


# ---------------------------------------------------------------------------
# scaled series


class ScaledSeries:
    """p^(-shift) times an integral Series; known modulo p^(prec - shift)."""

    __slots__ = ("ser", "shift")

    def __init__(self, ser: Series, shift: int = 0):
        self.ser = ser
        self.shift = shift

    @classmethod
    def of(cls, v, ring=None) -> "ScaledSeries":
        if isinstance(v, ScaledSeries):
            return v
        if isinstance(v, Series):
            return cls(v, 0)
        return cls(_coerce_series(v, ring), 0)

    @property
    def ring(self):
        return self.ser.ring

    @property
    def order(self):
        return self.ser.order

    def value_prec(self) -> int:
        return self.ser.prec - self.shift

    def coeff(self, i: int) -> Scaled:
        return Scaled(self.ser.coeff(i), self.shift)

    def __add__(self, other):
        other = ScaledSeries.of(other, self.ring)
        s, t = self.shift, other.shift
        p = self.ring.p
        # precision lives on the value: aligning shifts must not charge it
        vp = min(self.value_prec(), other.value_prec())
        if s < t:
            a, b = self.ser.scale(p ** (t - s)), other.ser
            s = t
        elif t < s:
            a, b = self.ser, other.ser.scale(p ** (s - t))
        else:
            a, b = self.ser, other.ser
        tot = a + b
        return ScaledSeries(Series(tot.ring, tot.coeffs, tot.order,
                                   min(vp + s, tot.ring.N)), s)

    __radd__ = __add__

    def __neg__(self):
        return ScaledSeries(-self.ser, self.shift)

    def __sub__(self, other):
        return self + (-ScaledSeries.of(other, self.ring))

    def __mul__(self, other):
        if isinstance(other, int):
            return ScaledSeries(self.ser.scale(other), self.shift)
        if isinstance(other, Scaled):
            return ScaledSeries(self.ser.scale(other.num), self.shift + other.shift)
        other = ScaledSeries.of(other, self.ring)
        return ScaledSeries(self.ser * other.ser, self.shift + other.shift)

    __rmul__ = __mul__

    def mul_cap(self, other, cap):
        other = ScaledSeries.of(other, self.ring)
        return ScaledSeries(self.ser.mul_cap(other.ser, cap), self.shift + other.shift)

    def truncate(self, order: int) -> "ScaledSeries":
        return ScaledSeries(self.ser.truncate(order), self.shift)

    def normalized(self) -> "ScaledSeries":
        """Strip p factors common to every coefficient (bounded by shift)."""
        k = self.shift
        ser = self.ser
        while k > 0:
            try:
                cs = [ser.ring.div_exact_p(c, 1) for c in ser.coeffs]
            except IntegralityError:
                break
            ser = Series(ser.ring, cs, ser.order, ser.prec - 1)
            k -= 1
        return ScaledSeries(ser, k)

    def to_integral(self, context: str = "series") -> Series:
        n = self.normalized()
        if n.shift:
            raise IntegralityError(f"{context}: denominator p^{n.shift} did not clear")
        return n.ser

    def is_integral(self) -> bool:
        return self.normalized().shift == 0

    def __repr__(self):
        return f"ScaledSeries({self.ser!r}, shift={self.shift})"


# ---------------------------------------------------------------------------
# composition, inversion, reversion


def compose(f, g, cap: int | None = None):
    """f(g(X)) for series; requires g(0) = 0.

    Accepts Series or ScaledSeries; the result is scaled iff an input is.
    Exact modulo (p^min-prec, X^(order+1)) with the order worked out from
    both truncations.
    """
    scaled = isinstance(f, ScaledSeries) or isinstance(g, ScaledSeries)
    ring = (f.ring if isinstance(f, (Series, ScaledSeries)) else g.ring)
    fs = ScaledSeries.of(f, ring)
    gs = ScaledSeries.of(g, ring)
    if not gs.ser.coeff(0).is_zero():
        raise ValueError("composition needs g(0) = 0")
    lg = gs.ser.low_degree()
    order = min(_tail_sum(gs.order, 0) - 1, _tail_sum(fs.order, 0) * max(lg, 1) - 1)
    if cap is not None:
        order = min(order, cap)
    capn = None if order >= INF else order
    acc = ScaledSeries(Series(ring, [], INF, min(fs.ser.prec, gs.ser.prec)), 0)
    for c in reversed(list(fs.ser.coeffs)):
        acc = acc.mul_cap(gs, capn) + ScaledSeries(Series(ring, [c], INF, fs.ser.prec), fs.shift)
        # keep the accumulator's shift at its true denominator: letting it
        # grow once per Horner step would overflow the numerator modulus
        acc = acc.normalized()
    res = ScaledSeries(Series(ring, acc.ser.coeffs, INF if order >= INF else order,
                              acc.ser.prec), acc.shift).normalized()
    if scaled:
        return res
    return res.to_integral("composition of integral series")


def series_inverse(u, cap: int):
    """Multiplicative inverse of a series with invertible constant term."""
    scaled = isinstance(u, ScaledSeries)
    us = u if scaled else ScaledSeries.of(u)
    ring = us.ring
    c0 = us.coeff(0)
    v0 = c0.val()
    if not v0.certified:
        raise ZeroDivisionError("constant term valuation not certified")
    if not scaled and v0.q != 0:
        raise ZeroDivisionError("constant term is not a unit")
    inv0 = _inv_any(ring, c0.num)
    v = ScaledSeries(Series(ring, [inv0.num], INF), inv0.shift - c0.shift)
    known = 1
    while known <= cap:
        known = min(2 * known, cap + 1)
        uv = us.mul_cap(v, known - 1).normalized()
        v = (v * 2 - v.mul_cap(uv, known - 1)).normalized()
        # Newton owns the tail and self-corrects: keep the iterate an exact
        # polynomial and certify precision once at the end by substitution.
        v = ScaledSeries(Series(ring, v.ser.coeffs, INF), v.shift)
    resid = (us.mul_cap(v, cap) - ScaledSeries.of(Series(ring, [1]), ring)).normalized()
    rmin = _min_val(resid)
    prec = max(0, min(rmin, us.value_prec() - v.shift))
    order = min(cap, us.order)
    v = ScaledSeries(Series(ring, v.ser.coeffs[:cap + 1], order, prec + v.shift), v.shift)
    if scaled:
        return v
    return v.to_integral("inverse of a unit series")


def _min_val(fs: ScaledSeries) -> int:
    """Floor of the smallest certified coefficient valuation (N-shift if none)."""
    best = None
    for i in range(len(fs.ser.coeffs)):
        va = fs.coeff(i).val()
        if best is None or va.q < best:
            best = va.q
    if best is None:
        return fs.ring.N - fs.shift
    return math.floor(best)


def reversion(f, cap: int | None = None):
    """Compositional inverse: f(rev(X)) = X modulo (p^prec', X^(cap+1)).

    Over integral coefficients the linear term must be a unit; a non-unit
    linear term (e.g. pX + ...) is accepted for scaled input, where the
    inverse picks up bounded p-denominators.
    """
    scaled = isinstance(f, ScaledSeries)
    fs = f if scaled else ScaledSeries.of(f)
    ring = fs.ring
    if not fs.ser.coeff(0).is_zero():
        raise ValueError("reversion needs f(0) = 0")
    c1 = fs.coeff(1)
    v1 = c1.val()
    if not v1.certified:
        raise ZeroDivisionError("linear coefficient valuation not certified")
    if not scaled and v1.q != 0:
        raise ValueError("linear coefficient is not a unit; revert over scaled coefficients")
    if cap is None:
        cap = fs.order if fs.order is not INF else fs.ser.degree()
    inv1 = _inv_any(ring, c1.num)
    g = ScaledSeries(Series(ring, [ring.zero, inv1.num], INF),
                     inv1.shift - c1.shift)
    known = 1
    dinv_shift = 0
    while known < cap:
        known = min(2 * known, cap)
        fg = compose(fs, g, cap=known)
        err = fg - ScaledSeries(Series(ring, [0, 1], INF), 0)
        dfg = compose(_scaled_derivative(fs), g, cap=known)
        dinv = series_inverse(dfg, known)
        dinv_shift = dinv.shift
        corr = err.mul_cap(dinv, known)
        g = (g - corr).normalized()
        # iterate stays an exact polynomial; precision is certified once at
        # the end by substitution (Newton self-corrects round-off)
        g = ScaledSeries(Series(ring, g.ser.coeffs, INF), g.shift)
    resid = (compose(fs, g, cap=cap)
             - ScaledSeries(Series(ring, [0, 1], INF), 0)).normalized()
    rmin = _min_val(resid)
    prec = max(0, min(rmin, fs.value_prec()) - dinv_shift)
    order = min(cap, fs.order)
    g = ScaledSeries(Series(ring, g.ser.coeffs[:cap + 1], order, prec + g.shift),
                     g.shift)
    if scaled:
        return g
    return g.to_integral("reversion with unit linear term")


def _scaled_derivative(fs: ScaledSeries) -> ScaledSeries:
    return ScaledSeries(fs.ser.derivative(), fs.shift)


def integrate(fs, ring=None) -> ScaledSeries:
    """Formal antiderivative with zero constant term (divides by indices)."""
    fs = ScaledSeries.of(fs, ring)
    ring = fs.ring
    p = ring.p
    out = [ring.zero]
    extra = 0
    n = len(fs.ser.coeffs)
    # common denominator: lcm of p-parts of 1..n
    for i in range(1, n + 1):
        k, v = i, 0
        while k % p == 0:
            k //= p
            v += 1
        extra = max(extra, v)
    scale_all = p**extra
    for i, c in enumerate(fs.ser.coeffs):
        k, v = i + 1, 0
        while k % p == 0:
            k //= p
            v += 1
        unit_inv = _inv_any(ring, ring.el(k))
        out.append(c * (scale_all // p**v) * unit_inv.num)
    order = fs.order if fs.order is INF else fs.order + 1
    return ScaledSeries(Series(ring, out, order, fs.ser.prec), fs.shift + extra).normalized()


# ---------------------------------------------------------------------------
# Weierstrass preparation and division


def weierstrass_degree(f: Series) -> int:
    """Smallest index whose coefficient is a unit; error if none visible."""
    for i, c in enumerate(f.coeffs):
        v = f.ring.val(c)
        if v.certified and v.q == 0:
            return i
    raise ValueError("no unit coefficient up to the truncation order: "
                     "Weierstrass degree not visible at this precision")


def weierstrass_divide(g: Series, f: Series, d: int | None = None):
    """g = q*f + r with deg r < d, exact modulo (p^prec', X^(order+1)).

    For f a monic polynomial of degree d (the distinguished case) this is
    plain long division; a truncated dividend then limits the certified
    precision of the remainder, since reducing X^m past the truncation
    gains only floor(m/d) powers of p.  For a general f of Weierstrass
    degree d the iterative m-adic division is used: each pass pushes the
    degree->=d part of the remainder at least one p-digit deeper.
    """
    ring = g.ring
    if d is None:
        d = weierstrass_degree(f)
    prec = min(g.prec, f.prec)
    if f.order is INF and f.degree() == d and f.coeff(d) == ring.one:
        q, rem = _poly_divmod(g.coeffs, f.coeffs, ring)
        if g.order is not INF:
            prec = min(prec, (g.order + 1) // d)
        return (Series(ring, q, g.order, prec),
                Series(ring, rem[:d], INF, prec))
    order = min(g.order, f.order)
    cap = None if order >= INF else order
    work = cap if cap is not None else max(g.degree(), 1)
    high = Series(ring, f.coeffs[d:], INF if f.order is INF else f.order - d, f.prec)
    inv_high = series_inverse(high, work)
    inv_high = Series(ring, inv_high.coeffs, INF, inv_high.prec)
    fpoly = Series(ring, f.coeffs, INF, f.prec)
    # m-adic fixpoint on exact coefficient data: every pass pushes the
    # degree->=d part one p-digit deeper, so iterates stay polynomials and
    # the (order, prec) certificate is attached once at the end
    q = Series(ring, [], INF, prec)
    r = Series(ring, g.coeffs, INF, g.prec)
    for _ in range(prec + 2):
        tail = Series(ring, r.coeffs[d:], INF, r.prec)
        if tail.is_zero():
            break
        dq = tail.mul_cap(inv_high, None if cap is None else max(cap - d, 0))
        dq = Series(ring, dq.coeffs, INF, dq.prec)
        q = q + dq
        r = r - dq.mul_cap(fpoly, cap)
        r = Series(ring, r.coeffs, INF, r.prec)
    else:
        for c in r.coeffs[d:]:
            if not ring.val(c) >= prec:
                raise PrecisionError("Weierstrass division did not converge "
                                     "at working precision")
    if cap is not None:
        # a truncated dividend/divisor limits the remainder: folding X^m
        # past the truncation gains only floor(m/d) powers of p
        prec = min(prec, (cap + 1) // max(d, 1))
    rem = Series(ring, r.coeffs[:d], INF, prec)
    qc = q.coeffs if cap is None else q.coeffs[:cap - d + 1]
    return Series(ring, qc, INF if order >= INF else max(order - d, 0), prec), rem


def _poly_divmod(gc, fc, ring):
    """Long division by a monic polynomial, coefficient lists low-first."""
    d = len(fc) - 1
    r = list(gc)
    if len(r) <= d:
        return [], r + [ring.zero] * (d - len(r))
    q = [ring.zero] * (len(r) - d)
    for top in range(len(r) - 1, d - 1, -1):
        c = r[top]
        q[top - d] = c
        if not c.is_zero():
            for i in range(d):
                r[top - d + i] = r[top - d + i] - c * fc[i]
    return q, r[:d]


def weierstrass_prepare(f: Series):
    """Factor f = distinguished * unit over a complete local base ring.

    Returns (distinguished, unit) with the distinguished polynomial monic
    of the visible Weierstrass degree and non-leading coefficients of
    positive valuation; exact modulo (p^prec, X^(order+1)).
    """
    ring = f.ring
    d = weierstrass_degree(f)
    xd = Series(ring, [0] * d + [1], INF, f.prec)
    q, r = weierstrass_divide(xd, f, d)
    dist = xd - r
    for i in range(d):
        if not ring.val(dist.coeff(i)) >= Fraction(1):
            raise ArithmeticError("prepared factor is not distinguished; "
                                  "precision too low or input malformed")
    cap = f.order if f.order is not INF else max(f.degree(), d)
    unit = series_inverse(Series(ring, q.coeffs, q.order, q.prec), cap)
    return dist, unit


# ---------------------------------------------------------------------------
# Newton polygons


class NewtonPolygon:
    """Lower convex hull of (index, val(coefficient)) with exact rationals."""

    __slots__ = ("vertices", "slopes", "omitted")

    def __init__(self, vertices, slopes, omitted):
        self.vertices = vertices
        self.slopes = slopes
        self.omitted = omitted

    def __repr__(self):
        return f"NewtonPolygon(vertices={self.vertices}, slopes={self.slopes})"

    def breakpoints(self) -> list[int]:
        return [i for i, _ in self.vertices]

    def serialize(self):
        return {
            "vertices": [[i, [v.numerator, v.denominator]] for i, v in self.vertices],
            "slopes": [[s.numerator, s.denominator] for s in self.slopes],
            "omitted_indices": list(self.omitted),
        }


def newton_polygon(f, start: int = 0) -> NewtonPolygon:
    """Polygon of a Series (or coefficient list) from abscissa `start` on.

    Coefficients whose valuation is only bounded below at working precision
    are omitted from the hull and recorded in `omitted`.
    """
    if isinstance(f, ScaledSeries):
        pts, omitted = [], []
        for i in range(start, len(f.ser.coeffs)):
            v = f.coeff(i).val()
            if v.certified:
                pts.append((i, v.q))
            else:
                omitted.append(i)
    else:
        ring = f.ring
        pts, omitted = [], []
        for i in range(start, len(f.coeffs)):
            v = ring.val(f.coeffs[i])
            if v.certified:
                pts.append((i, v.q))
            else:
                omitted.append(i)
    if not pts:
        raise ValueError("zero series at this precision: no Newton polygon")
    hull = _lower_hull(pts)
    slopes = [Fraction(hull[k + 1][1] - hull[k][1], hull[k + 1][0] - hull[k][0])
              for k in range(len(hull) - 1)]
    return NewtonPolygon(hull, slopes, omitted)


def _lower_hull(pts):
    hull = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop x2 unless it turns strictly upward (collinear points are
            # not breakpoints; ties keep the leftmost endpoint)
            if (y2 - y1) * (pt[0] - x2) >= (pt[1] - y2) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


# ---------------------------------------------------------------------------
# bivariate series, truncated by total degree


class BiSeries:
    """Series in X, Y over a base ring, truncated by total degree.

    rows[j][i] holds the coefficient of X^i Y^j.  Used for the group law
    F(X, Y); symmetric storage is validated rather than assumed.
    """

    __slots__ = ("ring", "rows", "order", "prec")

    def __init__(self, ring, rows, order, prec=None):
        self.ring = ring
        self.rows = [[ring.el(c) for c in row] for row in rows]
        self.order = order
        self.prec = ring.N if prec is None else min(prec, ring.N)

    def coeff(self, i: int, j: int):
        if j < len(self.rows) and i < len(self.rows[j]):
            return self.rows[j][i]
        return self.ring.zero

    def is_symmetric(self) -> bool:
        for j in range(len(self.rows)):
            for i in range(j):
                if self.coeff(i, j) != self.coeff(j, i):
                    return False
        return True

    def __add__(self, other):
        order = min(self.order, other.order)
        rows = []
        for j in range(order + 1):
            rows.append([self.coeff(i, j) + other.coeff(i, j)
                         for i in range(order + 1 - j)])
        return BiSeries(self.ring, rows, order, min(self.prec, other.prec))

    def __sub__(self, other):
        neg = BiSeries(other.ring, [[-c for c in row] for row in other.rows],
                       other.order, other.prec)
        return self + neg

    def mul(self, other, cap: int | None = None) -> "BiSeries":
        ring = self.ring
        order = min(self.order, other.order)
        if cap is not None:
            order = min(order, cap)
        nx = order + 1
        sx = 2 * nx - 1
        sf = 2 * ring.f - 1
        stride = sx * sf
        fa = _flatten_bi(self, ring, nx, sf, stride)
        fb = _flatten_bi(other, ring, nx, sf, stride)
        sb = slot_bytes_for(ring.mod - 1, nx * nx * ring.f)
        raw = conv_flat(fa, fb, sb)
        raw.extend([0] * ((2 * nx - 1) * stride - len(raw)))
        rows = []
        for j in range(order + 1):
            row = []
            for i in range(order + 1 - j):
                off = (j * stride + i * sf)
                row.append(BaseElt(ring, ring.reduce_flat(raw[off:off + sf])))
            rows.append(row)
        return BiSeries(ring, rows, order, min(self.prec, other.prec))

    def eval(self, x, y):
        """Horner evaluation at ring points of positive valuation.

        The dropped tail has valuation at least (order+1) * min(val x, val y);
        callers combine that with `prec` for the value's certificate.
        """
        ring = x.ring
        acc = ring.zero
        for j in range(len(self.rows) - 1, -1, -1):
            inner = ring.zero
            row = self.rows[j]
            for i in range(len(row) - 1, -1, -1):
                inner = inner * x + row[i]
            acc = acc * y + inner
        return acc

    def map_ring(self, ring) -> "BiSeries":
        return BiSeries(ring, self.rows, self.order, min(self.prec, ring.N))


def _flatten_bi(b: BiSeries, ring, nx, sf, stride):
    flat = [0] * (nx * stride)
    for j, row in enumerate(b.rows[:nx]):
        off = j * stride
        for i, c in enumerate(row[:nx]):
            pos = off + i * sf
            flat[pos:pos + ring.f] = c.c
    return flat
