"""Finite-level functionals on the coordinate ring and their evaluations.

A level-n functional is an O_K-linear form on O_K[[X]] given by its values
on 1, X, ..., X^(q^n - 1) and declared to vanish on f_n(X) O_K[[X]], where
f_n is the distinguished part of [p^n].  Weierstrass division makes it
well-defined on every integral series and pushes values of high monomials
into pO_K (the integrality cascade).

The convolution product expands (X (+) Y)^k through the group law reduced
modulo (f_n(X), f_n(Y)); the truncation order of the stored group law
bounds the precision to which products are certified, and that certificate
travels with the structure constants instead of being assumed.

Evaluation maps: kappa_j pairs a functional with a level point composed
with [p^j].  The functional at index p^(2n-1) evaluates to a uniformizer
of the level tower, which drives both the greedy surjectivity digit
expansion and the finite-level injectivity certificate.
"""

from __future__ import annotations

from fractions import Fraction

from .dual_points import TatePoint
from .formal_group import FormalGroup, TorsionLevel
from .power_series import INF, Series, compose
from .ring_tower import (
    PrecisionError,
    Scaled,
    det_ring,
)


class Functional:
    """Element of the level-n functional module, by monomial values.

    `values[i]` is the value on X^i for i < q^n; the form vanishes on
    f_n O_K[[X]] by convention, which determines it on all of O_K[[X]].
    """

    __slots__ = ("level", "values")

    def __init__(self, level: TorsionLevel, values):
        ring = level.G.ring
        vals = tuple(ring.el(v) for v in values)
        qn = level.G.q ** level.n
        if len(vals) != qn:
            raise ValueError(f"need q^n = {qn} values")
        self.level = level
        self.values = vals

    def __repr__(self):
        return f"Functional(n={self.level.n}, nonzero={sum(1 for v in self.values if not v.is_zero())})"

    def __add__(self, other):
        self._check(other)
        return Functional(self.level, [a + b for a, b in zip(self.values, other.values)])

    def __sub__(self, other):
        self._check(other)
        return Functional(self.level, [a - b for a, b in zip(self.values, other.values)])

    def scale(self, a) -> "Functional":
        return Functional(self.level, [v * a for v in self.values])

    def _check(self, other):
        if not isinstance(other, Functional) or other.level is not self.level:
            raise TypeError("functionals must share a level object")

    def is_zero_mod(self, k: int) -> bool:
        ring = self.level.G.ring
        return all(ring.val(v) >= k for v in self.values)

    def __call__(self, series):
        return pairing(self, series)


def delta_functional(level: TorsionLevel, r: int) -> Functional:
    """w_r: X^i -> delta_(i r) on the monomial basis, 0 on f_n O[[X]]."""
    qn = level.G.q ** level.n
    ring = level.G.ring
    vals = [ring.zero] * qn
    vals[r] = ring.one
    return Functional(level, vals)


def coefficient_functional(level: TorsionLevel, r: int) -> Functional:
    """The coefficient-extraction form b_r on the level-n basis.

    Same monomial values as w_r; as elements of the completed module the
    two differ in how they extend (w_r kills f_n O[[X]]), which is exactly
    the convention Functional implements.
    """
    return delta_functional(level, r)


class CoeffSequence:
    """A completed-module element: explicit head plus a certified tail.

    Represents sum_i lambda_i b_i with lambda_0..lambda_M stored and
    lambda_i in p^B O_K for i > M; evaluations are certified modulo p^B.
    """

    __slots__ = ("ring", "lambdas", "tail_exp")

    def __init__(self, ring, lambdas, tail_exp: int):
        self.ring = ring
        self.lambdas = tuple(ring.el(v) for v in lambdas)
        self.tail_exp = tail_exp

    def __repr__(self):
        return f"CoeffSequence(head={len(self.lambdas)}, tail=p^{self.tail_exp})"

    def head_pairing(self, series: Series):
        acc = None
        for i, lam in enumerate(self.lambdas):
            term = lam * series.coeff(i)
            acc = term if acc is None else acc + term
        return acc if acc is not None else self.ring.zero


def pairing(u, a):
    """<u, a> for a functional or coefficient sequence against a series.

    For a Functional the series is Weierstrass-reduced modulo f_n first;
    coefficients may live in a tower over the base, and the result then
    lands in that tower.  For a CoeffSequence only the stored head is
    summed; the caller owns the p^B tail certificate.
    """
    if isinstance(u, CoeffSequence):
        if isinstance(a, TatePoint):
            a = a.tpoly
        return u.head_pairing(a)
    if isinstance(a, TatePoint):
        a = a.tpoly
    if not isinstance(a, Series):
        a = Series(u.level.G.ring, list(a), INF)
    reduced = u.level.reduce_series(a)
    ring = a.ring
    acc = ring.zero
    for v, c in zip(u.values, reduced):
        if not v.is_zero():
            acc = acc + c * v
    return acc


# ---------------------------------------------------------------------------
# the convolution product


class StructureLaw:
    """Powers of the group law reduced modulo (f_n(X), f_n(Y)).

    `mats[k][m][i]` is the coefficient of X^i Y^m in (X (+) Y)^k; `prec`
    is the precision the group-law truncation certifies for every entry.
    """

    def __init__(self, level: TorsionLevel):
        G = level.G
        ring = G.ring
        qn = G.q ** level.n
        F = G.F
        # stage 1: reduce the X variable row by row
        rowsX = []
        for j in range(len(F.rows)):
            rowsX.append(level.reduce_series(Series(ring, F.rows[j], INF, F.prec)))
        # stage 2: fold the Y variable through the same reduction rows
        R = [[ring.zero] * qn for _ in range(qn)]
        for j, row in enumerate(rowsX):
            yrow = level.reduce_exponent(j)
            for m in range(qn):
                ym = yrow[m]
                if not ym.is_zero():
                    target = R[m]
                    for i in range(qn):
                        if not row[i].is_zero():
                            target[i] = target[i] + row[i] * ym
        tail_gain = max(0, (F.order + 2 - qn) // qn)
        self.level = level
        self.qn = qn
        self.prec = min(F.prec, tail_gain, ring.N)
        one = [[ring.zero] * qn for _ in range(qn)]
        one[0][0] = ring.one
        self.mats = [one, R]

    def power(self, k: int):
        while len(self.mats) <= k:
            self.mats.append(self._mul(self.mats[-1], self.mats[1]))
        return self.mats[k]

    def _mul(self, A, B):
        level, qn = self.level, self.qn
        ring = level.G.ring
        big = [[ring.zero] * (2 * qn - 1) for _ in range(2 * qn - 1)]
        for m1 in range(qn):
            Arow = A[m1]
            for i1 in range(qn):
                a = Arow[i1]
                if a.is_zero():
                    continue
                for m2 in range(qn):
                    Brow = B[m2]
                    target = big[m1 + m2]
                    for i2 in range(qn):
                        b = Brow[i2]
                        if not b.is_zero():
                            target[i1 + i2] = target[i1 + i2] + a * b
        # fold X then Y overflow through the f_n reduction rows
        half = []
        for m in range(2 * qn - 1):
            row = big[m]
            out = list(row[:qn])
            for i in range(qn, 2 * qn - 1):
                c = row[i]
                if not c.is_zero():
                    red = level.reduce_exponent(i)
                    for s in range(qn):
                        out[s] = out[s] + c * red[s]
            half.append(out)
        R = [list(half[m]) for m in range(qn)]
        for m in range(qn, 2 * qn - 1):
            red = level.reduce_exponent(m)
            row = half[m]
            for s in range(qn):
                rs = red[s]
                if not rs.is_zero():
                    target = R[s]
                    for i in range(qn):
                        if not row[i].is_zero():
                            target[i] = target[i] + row[i] * rs
        return R


def structure_law(level: TorsionLevel) -> StructureLaw:
    law = getattr(level, "_structure_law", None)
    if law is None:
        law = StructureLaw(level)
        level._structure_law = law
    return law


def functional_product(u: Functional, v: Functional,
                       min_prec: int | None = None) -> Functional:
    """u * v through the structure constants of the group law.

    Both factors must live at a common level (embed the lower one first).
    Raises PrecisionError when the stored group-law truncation cannot
    certify the requested precision.
    """
    if u.level is not v.level:
        raise TypeError("embed functionals to a common level before multiplying")
    law = structure_law(u.level)
    if min_prec is not None and law.prec < min_prec:
        raise PrecisionError(
            f"group law truncated at order {u.level.G.F.order} certifies "
            f"products only mod p^{law.prec}, requested p^{min_prec}")
    ring = u.level.G.ring
    qn = law.qn
    out = []
    for k in range(qn):
        M = law.power(k)
        acc = ring.zero
        for m in range(qn):
            if v.values[m].is_zero():
                continue
            row = M[m]
            inner = ring.zero
            for i in range(qn):
                if not row[i].is_zero() and not u.values[i].is_zero():
                    inner = inner + row[i] * u.values[i]
            acc = acc + inner * v.values[m]
        out.append(acc)
    return Functional(u.level, out)


def sequence_product(G: FormalGroup, u: CoeffSequence, v: CoeffSequence) -> CoeffSequence:
    """Product in the completed module, by the raw structure constants.

    s_(k,n,m) is the X^n Y^m coefficient of the k-th power of the group
    law; powers of F vanish below total degree k, so finite heads multiply
    exactly (given the group law to total degree >= head sizes) and the
    tails only contribute at their certified bound.
    """
    du, dv = len(u.lambdas) - 1, len(v.lambdas) - 1
    need = max(du + dv, 0)
    if G.F.order < need:
        raise PrecisionError(
            f"group law truncated at {G.F.order} < {need}: "
            "sequence product not certified")
    ring = G.ring
    out = [ring.zero] * (need + 1)
    Fk = None
    for k in range(need + 1):
        if k == 0:
            s00 = u.lambdas[0] * v.lambdas[0] if u.lambdas and v.lambdas else ring.zero
            out[0] = s00
            continue
        Fk = G.F if k == 1 else Fk.mul(G.F, cap=need)
        for n in range(min(du, need) + 1):
            lam = u.lambdas[n]
            if lam.is_zero():
                continue
            for m in range(min(dv, need - 0) + 1):
                mu = v.lambdas[m]
                if not mu.is_zero():
                    s = Fk.coeff(n, m)
                    if not s.is_zero():
                        out[k] = out[k] + s * lam * mu
    tail = min(u.tail_exp, v.tail_exp)
    return CoeffSequence(ring, out, tail)


def embed_functional(u: Functional, level: TorsionLevel) -> Functional:
    """Include a lower-level functional into a deeper level.

    Values on the deeper basis come from reducing each monomial through
    the lower level's convention divisor, so evaluation on series is
    unchanged (the embedding-consistency invariant).
    """
    if level.n < u.level.n:
        raise ValueError("can only embed into a deeper level")
    if level.n == u.level.n:
        return Functional(level, u.values)
    qn = level.G.q ** level.n
    ring = level.G.ring
    out = []
    for k in range(qn):
        row = u.level.reduce_exponent(k)
        acc = ring.zero
        for i, c in enumerate(row):
            if not c.is_zero():
                acc = acc + c * u.values[i]
        out.append(acc)
    return Functional(level, out)


def shift_functional(u: Functional, j: int) -> Functional:
    """Precomposition with a(X) -> a([p^j] X), landing at level n - j."""
    n = u.level.n
    if j < 0 or j > n:
        raise ValueError("shift depth out of range")
    if j == 0:
        return u
    G = u.level.G
    lower = G.torsion_level(n - j, u.level.point_prec) if n - j >= 1 else None
    pj = G.pn_series(j)
    qn_low = G.q ** (n - j)
    ring = G.ring
    power = Series(ring, [1], INF)
    out = []
    for k in range(qn_low):
        reduced = u.level.reduce_series(power)
        acc = ring.zero
        for i, c in enumerate(reduced):
            if not c.is_zero():
                acc = acc + c * u.values[i]
        out.append(acc)
        if k + 1 < qn_low:
            power = power * pj
    if lower is None:
        raise ValueError("shift to level 0 yields the scalar u(1); use kappa")
    return Functional(lower, out)


# ---------------------------------------------------------------------------
# evaluation maps


def kappa(j: int, u, t: TatePoint):
    """kappa_j(u) = <u, t([p^j] X)> in the level tower.

    For a Functional the composed series is reduced modulo f_n; for a
    CoeffSequence the stored head is paired directly (tail certified by
    its p^B bound).
    """
    G = t.G
    if j == 0:
        series = t.tpoly
    else:
        pj = G.pn_series(j).map_ring(t.ring)
        series = compose(t.tpoly, pj)
    return pairing(u, series)


def kappa_prec(u, t: TatePoint, law_needed: bool = False) -> int:
    """Certified precision of kappa evaluations against this point."""
    out = t.prec
    if isinstance(u, CoeffSequence):
        out = min(out, u.tail_exp)
    return out


def uniformizer_functional(level: TorsionLevel) -> Functional:
    """The delta form at index p^(2n-1), whose kappa_0 value uniformizes.

    Its evaluation against a primitive level point has exact valuation
    1/(q^(n-1)(q-1)).
    """
    p = level.G.ring.p
    r = p ** (2 * level.n - 1)
    return delta_functional(level, r)


def verify_multiplicativity(t: TatePoint, pairs, rng, min_prec: int = 4) -> dict:
    """kappa_0(u v) = kappa_0(u) kappa_0(v) on random functional pairs."""
    level = t.level
    ring = level.G.ring
    law = structure_law(level)
    thresh = min(law.prec, t.prec, min_prec + 100)
    if thresh < min_prec:
        return {"status": "insufficient-precision", "certified": thresh}
    qn = law.qn
    worst = thresh
    for _ in range(pairs):
        u = Functional(level, [ring.random(rng) for _ in range(qn)])
        v = Functional(level, [ring.random(rng) for _ in range(qn)])
        lhs = kappa(0, functional_product(u, v), t)
        rhs = kappa(0, u, t) * kappa(0, v, t)
        d = t.ring.val(lhs - rhs)
        if not d >= thresh:
            return {"status": "fail", "observed": str(d), "threshold": thresh}
    return {"status": "pass", "pairs": pairs, "threshold": worst}


def verify_shift_compatibility(t: TatePoint, samples: int, rng,
                               j: int = 0) -> dict:
    """kappa_j(U(phi) u) = kappa_(j+1)(u) on random functionals.

    U(phi) is precomposition with [p]; at level n the check compares two
    evaluations inside the same tower, exact at the point's precision.
    """
    level = t.level
    ring = level.G.ring
    qn = level.G.q ** level.n
    thresh = t.prec
    for _ in range(samples):
        u = Functional(level, [ring.random(rng) for _ in range(qn)])
        uphi = _precompose_p(u)
        lhs = kappa(j, uphi, t)
        rhs = kappa(j + 1, u, t)
        d = t.ring.val(lhs - rhs)
        if not d >= thresh:
            return {"status": "fail", "observed": str(d), "threshold": thresh}
    return {"status": "pass", "samples": samples, "threshold": thresh}


def _precompose_p(u: Functional) -> Functional:
    """U(phi) at the same level: values on [p](X)^k reduced mod f_n."""
    G = u.level.G
    ring = G.ring
    qn = G.q ** u.level.n
    out = []
    power = Series(ring, [1], INF)
    for k in range(qn):
        reduced = u.level.reduce_series(power)
        acc = ring.zero
        for i, c in enumerate(reduced):
            if not c.is_zero():
                acc = acc + c * u.values[i]
        out.append(acc)
        if k + 1 < qn:
            power = power * G.mul_p
    return Functional(u.level, out)


def integrality_cascade(level: TorsionLevel, r: int, through: int) -> dict:
    """w_r(X^(q^n + j)) lies in pO_K for 0 <= j <= through."""
    qn = level.G.q ** level.n
    ring = level.G.ring
    w = delta_functional(level, r)
    for j in range(through + 1):
        row = level.reduce_exponent(qn + j)
        val = row[r]
        if not ring.val(val) >= 1:
            return {"status": "fail", "j": j, "observed": str(ring.val(val))}
    return {"status": "pass", "through": through}


# ---------------------------------------------------------------------------
# surjectivity digits


def surjectivity_digits(x, level: TorsionLevel, M: int, t: TatePoint) -> Functional:
    """A functional u with kappa_0(u) = x mod p^M, by greedy digit descent.

    Expands x in powers of the uniformizer kappa_0(w_(p^(2n-1))) with
    Teichmuller digits from the base ring; each step subtracts d pi^j and
    accumulates d w^j through the convolution product.  A missing digit
    signals a multiplicativity or precision bug and raises.
    """
    G = level.G
    ring = G.ring
    tower = level.ring
    e = level.e
    law = structure_law(level)
    if law.prec < M + 1:
        raise PrecisionError(
            f"structure constants certified mod p^{law.prec} < M+1 = {M + 1}; "
            "rebuild the group with a larger truncation order")
    if t.prec < M:
        raise PrecisionError(f"point precision {t.prec} below target {M}")
    w = uniformizer_functional(level)
    pi = kappa(0, w, t)
    vpi = tower.val(pi)
    if not (vpi.certified and vpi.q == Fraction(1, e)):
        raise PrecisionError(f"kappa_0(w) valuation {vpi}, expected 1/{e}")
    pi_inv = tower.inv(pi)
    x = tower.el(x)
    acc = None
    r = x
    pij = {0: tower.one}
    wpow = {0: delta_functional(level, 0)}
    jmax = e * M
    guard = 0
    while True:
        vr = tower.val(r)
        if vr >= M:
            break
        guard += 1
        if guard > jmax + 2:
            raise PrecisionError("digit descent failed to terminate")
        j = int(vr.q * e)
        if j >= jmax:
            break
        inv_j = _scaled_power(pi_inv, j)
        y = Scaled(r, 0) * inv_j
        digit = _residue_digit(tower, y)
        if digit.is_zero():
            raise PrecisionError("greedy digit vanished: residue logic bug")
        pj = _elt_power(pi, j, pij)
        r = r - digit * pj
        if not tower.val(r) >= Fraction(j + 1, e):
            raise PrecisionError("digit subtraction did not reduce the residual: "
                                 "multiplicativity or precision bug")
        wj = _functional_power(w, j, wpow)
        term = wj.scale(digit)
        acc = term if acc is None else acc + term
    if acc is None:
        acc = delta_functional(level, 0).scale(ring.zero)
    return acc


def _scaled_power(s: Scaled, j: int) -> Scaled:
    out = Scaled(s.num.ring.one, 0)
    b = s
    while j:
        if j & 1:
            out = out * b
        b = b * b
        j >>= 1
    return out


def _elt_power(x, j: int, cache: dict):
    if j not in cache:
        best = max(k for k in cache if k <= j)
        cur = cache[best]
        for k in range(best + 1, j + 1):
            cur = cur * x
            cache[k] = cur
    return cache[j]


def _functional_power(w: Functional, j: int, cache: dict) -> Functional:
    if j not in cache:
        best = max(k for k in cache if k <= j)
        cur = cache[best]
        for k in range(best + 1, j + 1):
            cur = functional_product(cur, w)
            cache[k] = cur
    return cache[j]


def _residue_digit(tower, y: Scaled):
    """Teichmuller representative of the residue of a val-0 scaled value."""
    yn = y.normalized()
    if yn.shift:
        raise PrecisionError("residue of a non-integral value requested")
    res = tower.residue(yn.num)
    return tower.base.teichmuller(tower.base.el(res))


# ---------------------------------------------------------------------------
# injectivity certificate


def injectivity_matrix(G: FormalGroup, n: int, points: list[TatePoint]) -> dict:
    """Full-rank certificate for u -> (kappa_j(u))_{j <= n} on level n.

    `points` supplies a primitive point for each level n, n-1, ..., 1 (any
    primitive choice per level certifies: different choices differ by a
    conjugation, which cannot create kernel).  Returns the determinant
    valuation L of the q^n x q^n evaluation matrix over O_K: functionals
    whose kappa values all vanish mod p^M are themselves zero mod
    p^(M - L).
    """
    if len(points) != n:
        raise ValueError("need one point per level n..1")
    level = points[0].level
    qn = G.q ** n
    rows = []
    prec = min(pt.prec for pt in points)
    for r in range(qn):
        w = delta_functional(level, r)
        row = []
        for j in range(n + 1):
            if j == n:
                row.append(w.values[0])  # evaluation against the trivial level-0 point
                continue
            u = shift_functional(w, j) if j else w
            val = kappa(0, u, points[j])
            row.extend(val.c)
        rows.append(row)
    if any(len(r) != qn for r in rows):
        raise AssertionError("coordinate count mismatch in evaluation matrix")
    det = det_ring(rows, G.ring)
    vdet = G.ring.val(det)
    if not vdet.certified:
        return {"status": "fail", "reason": "determinant uncertifiably singular",
                "prec": prec}
    L = int(vdet.q)
    return {"status": "pass", "size": qn, "det_val": L, "loss": L,
            "prec": prec, "kernel_bound": f"kappa=0 mod p^M => u=0 mod p^(M-{L})"}


def kernel_trial(G: FormalGroup, n: int, points: list[TatePoint], u: Functional,
                 M: int, loss: int) -> dict:
    """Check one functional against the certificate at precision M."""
    ring = G.ring
    in_kernel = True
    for j in range(n + 1):
        if j == n:
            v = Scaled(u.values[0], 0)
            ok = v.val() >= M
        else:
            uu = shift_functional(u, j) if j else u
            val = kappa(0, uu, points[j])
            ok = points[j].ring.val(val) >= M
        if not ok:
            in_kernel = False
            break
    if not in_kernel:
        return {"kernel": False}
    is_zero = u.is_zero_mod(max(M - loss, 0))
    return {"kernel": True, "forced_zero": is_zero}


# ---------------------------------------------------------------------------
# density truncation


def density_truncate(G: FormalGroup, u: CoeffSequence, k: int) -> tuple:
    """A level functional within p^k of a completed-module element.

    Follows the constructive density argument: pick n with [p^n] inside
    (X^d, p^k) for d the length of the explicit head, copy the head onto
    the level-n basis, and declare vanishing on f_n O[[X]].  Returns the
    functional with the chosen level.
    """
    if u.tail_exp < k:
        raise ValueError(f"tail bound p^{u.tail_exp} weaker than target p^{k}")
    d = len(u.lambdas)
    ring = G.ring
    n = 1
    while True:
        pn = G.pn_series(n)
        ok = all(ring.val(pn.coeff(i)) >= k for i in range(1, min(d, len(pn.coeffs))))
        if ok and len(pn.coeffs) >= 1:
            break
        n += 1
        if n > 8:
            raise PrecisionError("no usable level below depth 8: target too deep")
    level = G.torsion_level(n)
    qn = G.q**n
    vals = [u.lambdas[i] if i < d else ring.zero for i in range(qn)]
    return Functional(level, vals), n


def verify_density(G: FormalGroup, u: CoeffSequence, w: Functional, k: int,
                   samples: int, rng, tail_checks: int = 4) -> dict:
    """(w - u) evaluates into p^k O_K on integral series, sampled.

    Checks random integral polynomials against the explicit head and the
    monomials just past q^n, where w's value must sink into p^k by the
    induction of the density argument.
    """
    ring = G.ring
    qn = G.q ** w.level.n
    d = len(u.lambdas)
    for _ in range(samples):
        deg = rng.randrange(1, d)
        a = Series(ring, [ring.random(rng) for _ in range(deg + 1)], INF)
        got = pairing(w, a)
        want = u.head_pairing(a)
        if not ring.val(got - want) >= min(k, u.tail_exp):
            return {"status": "fail", "where": "random-series"}
    for j in range(tail_checks):
        mono = Series(ring, [0] * (qn + j) + [1], INF)
        got = pairing(w, mono)
        if not ring.val(got) >= k:
            return {"status": "fail", "where": f"monomial q^n+{j}",
                    "observed": str(ring.val(got))}
    return {"status": "pass", "samples": samples, "tail_checks": tail_checks}
