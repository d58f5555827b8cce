"""Certified long expansions by chunked interval arithmetic.

The input is an interval ``[x0, x1]`` with exact endpoints (degenerate for an
exact input).  Endpoints are kept exactly as ``num / den`` pairs over Z or
Z[lambda].  Digits are extracted from a small fixed-point enclosure of the
whole interval, ``working_bits`` wide, for as long as every point of the
interval provably shares them; the exact endpoints are then advanced once by
the product matrix of that chunk.  When the enclosure can no longer decide,
single exact steps on both endpoints take over, and a disagreement between
them means the input interval must be refined.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

from .cf_engines import CFKind, CFStep, in_fundamental_interval, step as exact_step
from .numerics import (
    DEFAULT_PRECISION_CAP,
    AdaptiveReal,
    AlgebraicReal,
    DomainError,
    UndecidableFloor,
    degree,
    lambda_enclosure,
    minimal_polynomial,
    zlam_enclose,
)

try:  # GMP integers make the O(size) endpoint updates much cheaper
    from gmpy2 import mpz as _big
except ImportError:  # pragma: no cover
    _big = int

WORKING_BITS = 512
_INV60 = 2.0 ** -60
# Z[lambda] endpoint updates are costlier, so longer chunks pay off
WORKING_BITS_ZLAM = 1024
# chunks stop once the enclosure is wider than 2^-POINT_SLACK so that
# reported orbit points stay accurate to roughly that many bits
POINT_SLACK = 80

# rough bits of input precision consumed per digit; refined at runtime
_BITS_PER_DIGIT = {"regular": 3.5, "alpha": 5.2, "rosen": 6.0}


@dataclass
class Expansion:
    kind: CFKind
    steps: List[CFStep]
    points: Optional[List[float]] = None
    terminated: bool = False
    input_bits: Optional[int] = None
    restarts: int = 0
    slow_steps: int = 0

    def __len__(self):
        return len(self.steps)


class _Divergence(Exception):
    def __init__(self, produced):
        self.produced = produced


# ---------------------------------------------------------------------------
# Z[lambda] helpers on coefficient lists


class _ZL:
    """Arithmetic on integer coefficient lists modulo the minimal polynomial."""

    def __init__(self, m):
        self.m = m
        self.f = minimal_polynomial(m)
        self.deg = len(self.f) - 1

    def mul(self, a, b):
        D = self.deg
        out = [0] * (2 * D - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        out[i + j] += x * y
        f = self.f
        for k in range(2 * D - 2, D - 1, -1):
            t = out[k]
            if t:
                s = k - D
                for i in range(D):
                    out[s + i] -= t * f[i]
        return out[:D]

    def times_lam(self, a):
        D = self.deg
        top = a[-1]
        out = [0] + list(a[:-1])
        if top:
            f = self.f
            for i in range(D):
                out[i] -= top * f[i]
        return out

    def add(self, a, b):
        return [x + y for x, y in zip(a, b)]

    def scal(self, c, a):
        return [c * x for x in a]

    def const(self, c):
        return [c] + [0] * (self.deg - 1)

    def is_zero(self, a):
        return not any(a)

    def to_alg(self, a):
        return AlgebraicReal(self.m, [int(x) for x in a])


# ---------------------------------------------------------------------------
# fixed-point kernels.  (lo, hi) are integers: the interval [lo, hi] / 2^P.


def _kernel_regular(lo, hi, P, budget, limit, pts):
    one = 1 << P
    two = one << P
    sh = P + 1 - 60
    out = []
    app = out.append
    while len(out) < budget:
        if lo <= 0 or hi - lo > limit:
            break
        rlo = two // hi
        rhi = -((-two) // lo)
        d = rlo >> P
        if (rhi >> P) != d:
            break
        base = d << P
        lo = rlo - base
        hi = rhi - base
        app((1, d))
        if pts is not None:
            pts.append(((lo + hi) >> sh) * _INV60)
    return out, lo, hi


def _kernel_alpha(lo, hi, P, budget, limit, pts, c_lo, c_hi):
    one = 1 << P
    two = one << P
    sh = P + 1 - 60
    out = []
    app = out.append
    while len(out) < budget:
        if hi - lo > limit:
            break
        if lo > 0:
            e = 1
            alo, ahi = lo, hi
        elif hi < 0:
            e = -1
            alo, ahi = -hi, -lo
        else:
            break
        rlo = two // ahi
        rhi = -((-two) // alo)
        d = (rlo + c_lo) >> P
        if ((rhi + c_hi) >> P) != d:
            break
        base = d << P
        lo = rlo - base
        hi = rhi - base
        app((e, d))
        if pts is not None:
            pts.append(((lo + hi) >> sh) * _INV60)
    return out, lo, hi


def _kernel_rosen(lo, hi, P, budget, limit, pts, L_lo, L_hi):
    one = 1 << P
    two = one << P
    half = one >> 1
    sh = P + 1 - 60
    out = []
    app = out.append
    while len(out) < budget:
        if hi - lo > limit:
            break
        if lo > 0:
            e = 1
            alo, ahi = lo, hi
        elif hi < 0:
            e = -1
            alo, ahi = -hi, -lo
        else:
            break
        rlo = two // ahi
        rhi = -((-two) // alo)
        tlo = (rlo << P) // L_hi
        thi = -((-(rhi << P)) // L_lo)
        r = (tlo + half) >> P
        if ((thi + half) >> P) != r:
            break
        lo = rlo - r * L_hi
        hi = rhi - r * L_lo
        app((e, r))
        if pts is not None:
            pts.append(((lo + hi) >> sh) * _INV60)
    return out, lo, hi


# ---------------------------------------------------------------------------


class _Engine:
    def __init__(self, kind: CFKind, field_m: int, P: int):
        self.kind = kind
        self.P = P
        self.limit = (1 << P) >> POINT_SLACK
        self.zl = _ZL(field_m) if degree(field_m) > 1 else None
        self.field_m = field_m
        if kind.variant == "alpha":
            c = (1 - kind.alpha) * (1 << P)
            self.c_lo = c.numerator // c.denominator
            self.c_hi = -((-c.numerator) // c.denominator)
            if kind.alpha == 1:
                self.c_lo = self.c_hi = 0
        if kind.variant == "rosen":
            self.L_lo, self.L_hi = lambda_enclosure(kind.m, P)
        self.alpha_frac = kind.alpha

    # enclosures ----------------------------------------------------------
    def enclose(self, n, d):
        P = self.P
        if self.zl is None:
            q, r = divmod(n << P, d)
            return int(q), int(q) + (1 if r else 0)
        m = self.field_m
        bits = max(abs(int(c)).bit_length() for c in list(n) + list(d))
        Q = P + bits + 64
        while True:
            nlo, nhi = zlam_enclose([int(c) for c in n], m, Q)
            dlo, dhi = zlam_enclose([int(c) for c in d], m, Q)
            if dlo > 0 or dhi < 0:
                cands = []
                for a in (nlo, nhi):
                    for b in (dlo, dhi):
                        cands.append(((a << P) // b, -((-(a << P)) // b)))
                lo = min(c[0] for c in cands)
                hi = max(c[1] for c in cands)
                if hi - lo <= 8 or Q > 8 * (P + bits) + 4096:
                    return lo, hi
            Q *= 2

    # chunk composition -----------------------------------------------------
    def chunk_matrix(self, steps):
        """Integer (or Z[lambda]) matrix K with (num', den') = K (num, den)."""
        if self.kind.variant != "rosen" or self.zl is None:
            k11, k12, k21, k22 = 1, 0, 0, 1
            for e, c in steps:
                k11, k12, k21, k22 = e * k21 - c * k11, e * k22 - c * k12, k11, k12
            return k11, k12, k21, k22
        zl = self.zl
        one, zero = zl.const(1), zl.const(0)
        k11, k12, k21, k22 = one, zero, zero, one
        for e, r in steps:
            l11, l12 = zl.times_lam(k11), zl.times_lam(k12)
            k11, k12, k21, k22 = (
                [e * a - r * b for a, b in zip(k21, l11)],
                [e * a - r * b for a, b in zip(k22, l12)],
                k11,
                k12,
            )
        return k11, k12, k21, k22

    def apply(self, K, n, d):
        k11, k12, k21, k22 = K
        zl = self.zl
        if zl is None:
            return k11 * n + k12 * d, k21 * n + k22 * d
        if isinstance(k11, int):
            return ([k11 * a + k12 * b for a, b in zip(n, d)],
                    [k21 * a + k22 * b for a, b in zip(n, d)])
        big = lambda t: [_big(x) for x in t]  # noqa: E731
        return (zl.add(zl.mul(big(k11), n), zl.mul(big(k12), d)),
                zl.add(zl.mul(big(k21), n), zl.mul(big(k22), d)))

    def kernel(self, lo, hi, budget, pts):
        v = self.kind.variant
        if v == "regular":
            return _kernel_regular(lo, hi, self.P, budget, self.limit, pts)
        if v == "alpha":
            return _kernel_alpha(lo, hi, self.P, budget, self.limit, pts, self.c_lo, self.c_hi)
        return _kernel_rosen(lo, hi, self.P, budget, self.limit, pts, self.L_lo, self.L_hi)

    # exact single steps -------------------------------------------------
    def is_zero(self, n):
        return (not any(n)) if self.zl is not None else n == 0

    def value(self, n, d):
        if self.zl is None:
            return Fraction(int(n), int(d))
        return self.zl.to_alg(n) / self.zl.to_alg(d)

    def exact_step(self, n, d):
        kind = self.kind
        if self.zl is None:
            an, ad = abs(n), abs(d)
            e = 1 if (n > 0) == (d > 0) else -1
            v = kind.variant
            if v == "regular":
                if e < 0:
                    raise DomainError("regular orbit left [0, 1)")
                c = ad // an
            elif v == "alpha":
                a, b = kind.alpha.numerator, kind.alpha.denominator
                c = (ad * b + (b - a) * an) // (b * an)
            else:  # Rosen with lambda = 1
                c = (2 * ad + an) // (2 * an)
            return (e, int(c)), (e * d - c * n, n)
        st, _ = exact_step(kind, self.value(n, d))
        e, c = st.epsilon, st.digit
        if kind.variant == "rosen":
            cn = self.zl.scal(c, self.zl.times_lam(n))
        else:
            cn = self.zl.scal(c, n)
        return (e, c), ([e * a - b for a, b in zip(d, cn)], list(n))

    def float_point(self, n, d):
        P, self.P = self.P, 64
        try:
            lo, hi = self.enclose(n, d)
        finally:
            self.P = P
        return (lo + hi) / 2.0 ** 65

    def width_below(self, e0, e1, bits):
        if self.zl is None:
            (n0, d0), (n1, d1) = e0, e1
            return (abs(n0 * d1 - n1 * d0) << bits) < abs(d0 * d1)
        diff = self.value(*e0) - self.value(*e1)
        lo, hi = diff.enclose(bits + 8)
        return max(abs(lo), abs(hi)) < (1 << 8)


def _as_ring(engine: _Engine, num, den):
    if engine.zl is None:
        return _big(num), _big(den)
    D = engine.zl.deg

    def lift(v):
        if isinstance(v, (list, tuple)):
            return [_big(c) for c in v] + [_big(0)] * (D - len(v))
        return [_big(v)] + [_big(0)] * (D - 1)
    return lift(num), lift(den)


def _same_point(engine, e0, e1):
    (a, b), (c, d) = e0, e1
    if engine.zl is None:
        return a * d == b * c
    zl = engine.zl
    return zl.mul(a, d) == zl.mul(c, b)


def _alg_to_pair(x: AlgebraicReal):
    den = 1
    for c in x.coeffs:
        den = den * c.denominator // __import__("math").gcd(den, c.denominator)
    return [c.numerator * (den // c.denominator) for c in x.coeffs], [den] + [0] * (len(x.coeffs) - 1)


def _run(engine: _Engine, e0, e1, n, pts, cap):
    """Advance both exact endpoints; returns (steps, terminated, slow_steps)."""
    same = e1 is None
    steps: List[CFStep] = []
    slow = 0
    while len(steps) < n:
        n0, d0 = e0
        if engine.is_zero(n0) and (same or engine.is_zero(e1[0])):
            return steps, True, slow
        if engine.is_zero(n0) or (not same and engine.is_zero(e1[0])):
            raise _Divergence(steps)
        lo, hi = engine.enclose(n0, d0)
        if not same:
            lo1, hi1 = engine.enclose(*e1)
            lo, hi = min(lo, lo1), max(hi, hi1)
        chunk, _, _ = engine.kernel(lo, hi, n - len(steps), pts)
        if chunk:
            K = engine.chunk_matrix(chunk)
            e0 = engine.apply(K, n0, d0)
            if not same:
                e1 = engine.apply(K, *e1)
            steps.extend(CFStep(a, b) for a, b in chunk)
            continue
        # fixed point enclosure undecided: exact steps on the endpoints
        st0, ne0 = engine.exact_step(n0, d0)
        if not same:
            st1, ne1 = engine.exact_step(*e1)
            if st1 != st0:
                if engine.width_below(e0, e1, cap):
                    raise UndecidableFloor(
                        f"digit {len(steps) + 1} undecidable: interval narrower than 2^-{cap} "
                        "straddles a cylinder boundary")
                raise _Divergence(steps)
            e1 = ne1
        e0 = ne0
        slow += 1
        steps.append(CFStep(*st0))
        if pts is not None:
            if engine.is_zero(e0[0]):
                pts.append(0.0)
            else:
                pts.append(engine.float_point(*e0))
    return steps, False, slow


def expand(kind: CFKind, x, n: int, *, points: bool = False,
           working_bits: int | None = None, cap: int | None = None) -> Expansion:
    """First ``n`` certified digits of ``x`` (fewer if the expansion is finite).

    ``x`` may be an int, Fraction, AlgebraicReal or AdaptiveReal.  With
    ``points=True`` the float values of the orbit points ``T^k x``, ``k >= 1``,
    are recorded alongside the digits.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if kind.variant == "rosen":
        field_m = kind.m
        if isinstance(x, AlgebraicReal) and x.m != kind.m:
            raise DomainError(f"Rosen engine for m={kind.m} got an element of Q(lambda_{x.m})")
    elif isinstance(x, AlgebraicReal) and not x.is_rational():
        field_m = x.m
    else:
        field_m = 3
    if working_bits is None:
        working_bits = WORKING_BITS if degree(field_m) <= 1 else WORKING_BITS_ZLAM
    if working_bits < 2 * POINT_SLACK:
        raise ValueError(f"working_bits must be at least {2 * POINT_SLACK}")
    engine = _Engine(kind, field_m, working_bits)
    if isinstance(x, AdaptiveReal):
        limit = x.cap if cap is None else cap
        return _expand_adaptive(engine, kind, x, n, points, limit)
    if isinstance(x, AlgebraicReal):
        if x.is_rational():
            v = x.rational_value()
            e0 = _as_ring(engine, v.numerator, v.denominator)
        else:
            e0 = _as_ring(engine, *_alg_to_pair(x))
    else:
        v = Fraction(x)
        e0 = _as_ring(engine, v.numerator, v.denominator)
    if not in_fundamental_interval(kind, x):
        raise DomainError(f"{x} is outside the fundamental interval of {kind}")
    pts = [] if points else None
    steps, term, slow = _run(engine, e0, None, n, pts, cap or DEFAULT_PRECISION_CAP)
    return Expansion(kind, steps, pts, term, None, 0, slow)


def _expand_adaptive(engine, kind, x: AdaptiveReal, n, points, cap):
    rate = _BITS_PER_DIGIT[kind.variant]
    prec = int(rate * n * 1.15) + 512
    prev: List[CFStep] = []
    restarts = 0
    while True:
        (a, b), (c, d) = x.endpoints(prec)
        e0 = _as_ring(engine, a, b)
        e1 = _as_ring(engine, c, d)
        if _same_point(engine, e0, e1):
            e1 = None
        pts = [] if points else None
        try:
            steps, term, slow = _run(engine, e0, e1, n, pts, cap)
        except _Divergence as div:
            got = len(div.produced)
            if div.produced[: len(prev)] != prev[: got]:
                raise RuntimeError("refined input changed certified digits") from None
            prev = div.produced
            restarts += 1
            grow = prec * n / max(got, 1) * 1.1 if got else 2 * prec
            prec = int(max(prec + 256, grow))
            continue
        if steps[: len(prev)] != prev:
            raise RuntimeError("refined input changed certified digits")
        return Expansion(kind, steps, pts, term, prec, restarts, slow)
