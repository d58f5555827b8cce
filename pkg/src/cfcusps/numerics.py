"""Exact arithmetic over Q and Q(lambda_m), with certified real decisions.

``lambda_m = 2 cos(pi/m)`` is handled through its integer minimal polynomial and
a refinable fixed-point enclosure of its (largest) real root.  Every sign or
floor decision loops refine-and-test; nothing is decided from a float.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Tuple, Union

DEFAULT_PRECISION_CAP = 4096

Rational = Union[int, Fraction]


class DomainError(ValueError):
    """Argument outside the domain of an operation (bad m, mixed fields...)."""


class UndecidableFloor(ArithmeticError):
    """Interval still straddles an integer at the configured precision cap."""


# ---------------------------------------------------------------------------
# integer polynomials, coefficient lists low -> high


def _poly_trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def _poly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _poly_divexact_monic(num, den):
    """Quotient of ``num`` by the monic ``den``; the division must be exact."""
    num = list(num)
    dn = len(den) - 1
    q = [0] * (len(num) - dn)
    for i in range(len(num) - 1, dn - 1, -1):
        c = num[i]
        if c:
            q[i - dn] = c
            for j in range(dn + 1):
                num[i - dn + j] -= c * den[j]
    if any(num[:dn]):
        raise ArithmeticError("inexact polynomial division")
    return q


@lru_cache(maxsize=None)
def cyclotomic(n: int) -> Tuple[int, ...]:
    """Coefficients of the n-th cyclotomic polynomial."""
    p = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            p = _poly_divexact_monic(p, cyclotomic(d))
    return tuple(p)


@lru_cache(maxsize=None)
def minimal_polynomial(m: int) -> Tuple[int, ...]:
    """Monic minimal polynomial of ``2 cos(pi/m)``, coefficients low -> high.

    The palindromic cyclotomic polynomial Phi_{2m}(z) is rewritten in the
    variable y = z + 1/z using z^j + z^-j = D_j(y), D_0 = 2, D_1 = y,
    D_j = y D_{j-1} - D_{j-2}.
    """
    if not isinstance(m, int) or m < 3:
        raise DomainError(f"Hecke index must be an integer >= 3, got {m!r}")
    phi = cyclotomic(2 * m)
    k = (len(phi) - 1) // 2
    dick = [[2], [0, 1]]
    for _ in range(2, k + 1):
        prev, prev2 = dick[-1], dick[-2]
        nxt = [0] + list(prev)
        for i, c in enumerate(prev2):
            nxt[i] -= c
        dick.append(nxt)
    out = [0] * (k + 1)
    out[0] += phi[k]
    for j in range(1, k + 1):
        for i, c in enumerate(dick[j]):
            out[i] += phi[k + j] * c
    return tuple(_poly_trim(out))


def degree(m: int) -> int:
    return len(minimal_polynomial(m)) - 1


def _horner_scaled(poly, x, q):
    """``poly(x / 2^q) * 2^(q * deg)`` as an exact integer."""
    acc = 0
    deg = len(poly) - 1
    for i in range(deg, -1, -1):
        acc = acc * x + poly[i] * (1 << (q * (deg - i)))
    return acc


# ---------------------------------------------------------------------------
# fixed-point enclosure of lambda_m

_LAMBDA_CACHE: dict = {}


def _lambda_floor(m: int, q: int) -> int:
    """``floor(lambda_m * 2^q)``, certified by exact sign tests."""
    f = minimal_polynomial(m)
    if len(f) == 2:
        # rational lambda (m = 3)
        return (-f[0]) << q
    df = [i * c for i, c in enumerate(f)][1:]
    cached = _LAMBDA_CACHE.get(m)
    if cached is not None and cached[0] >= q:
        return cached[1] >> (cached[0] - q)
    if q < 64:
        return _lambda_floor(m, 64) >> (64 - q)
    if cached is not None:
        prec, x = cached
    else:
        prec = 48
        x = int(2 * math.cos(math.pi / m) * (1 << prec))
    while prec < q:
        nprec = min(2 * prec, q)
        F = _horner_scaled(f, x, prec)
        G = _horner_scaled(df, x, prec)
        # x - f/f' at the new precision; F / G carries one factor 2^prec
        x = ((x * G - F) << (nprec - prec)) // G
        prec = nprec
    # Newton's iterate is close; fix the last unit by exact sign checks.
    # f < 0 just below the largest root and > 0 above it.
    while _horner_scaled(f, x, q) > 0:
        x -= 1
    while _horner_scaled(f, x + 1, q) <= 0:
        x += 1
    lam = 2 * math.cos(math.pi / m)
    second = 2 * math.cos(3 * math.pi / m)
    if not x / (1 << q) > (lam + second) / 2:
        raise ArithmeticError("lambda refinement left the isolating interval")
    _LAMBDA_CACHE[m] = (q, x)
    return x


def lambda_enclosure(m: int, q: int) -> Tuple[int, int]:
    """Integers ``lo <= lambda_m * 2^q <= hi`` with ``hi - lo <= 1``."""
    lo = _lambda_floor(m, q)
    if degree(m) == 1:
        return lo, lo
    return lo, lo + 1


_POWERS_CACHE: dict = {}


def lambda_power_enclosures(m: int, q: int):
    """Enclosures of ``lambda^i * 2^q`` for ``i < deg``, each of width <= 2."""
    key = m
    hit = _POWERS_CACHE.get(key)
    if hit is not None and hit[0] >= q:
        qq, pw = hit
        s = qq - q
        return [(lo >> s, -((-hi) >> s)) for lo, hi in pw]
    deg = degree(m)
    g = 8 + 2 * deg
    qg = q + g
    llo, lhi = lambda_enclosure(m, qg)
    out = [(1 << q, 1 << q)]
    plo, phi = 1 << qg, 1 << qg
    for i in range(1, deg):
        plo = (plo * llo) >> qg
        phi = -((-(phi * lhi)) >> qg)
        out.append((plo >> g, -((-phi) >> g)))
    _POWERS_CACHE[key] = (q, out)
    return out


def zlam_enclose(coeffs, m: int, q: int) -> Tuple[int, int]:
    """Enclose ``sum c_i lambda^i`` (integer ``c_i``) as ``[lo, hi] / 2^q``.

    The width is at most ``2 * sum |c_i|`` units of ``2^-q``.
    """
    if len(coeffs) == 1:
        v = coeffs[0] << q
        return v, v
    pw = lambda_power_enclosures(m, q)
    lo = hi = 0
    for c, (plo, phi) in zip(coeffs, pw):
        if c >= 0:
            lo += c * plo
            hi += c * phi
        else:
            lo += c * phi
            hi += c * plo
    return lo, hi


# ---------------------------------------------------------------------------
# Q(lambda_m)


def _fpoly_trim(p):
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def _fpoly_divmod(a, b):
    a = list(a)
    q = [Fraction(0)] * max(1, len(a) - len(b) + 1)
    lead = b[-1]
    while len(a) >= len(b) and any(a):
        c = a[-1] / lead
        s = len(a) - len(b)
        q[s] = c
        for j, y in enumerate(b):
            a[s + j] -= c * y
        a.pop()
        _fpoly_trim(a)
        if len(a) < len(b):
            break
    return _fpoly_trim(q), _fpoly_trim(a or [Fraction(0)])


def _fpoly_sub(a, b):
    n = max(len(a), len(b))
    out = [(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)]
    return _fpoly_trim(out)


def _fpoly_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


class AlgebraicReal:
    """Element of Q(lambda_m) as a coefficient vector modulo the minimal polynomial.

    Immutable.  Arithmetic with ``int`` and ``Fraction`` operands coerces them
    into the field; mixing two different ``m`` raises :class:`DomainError`.
    """

    __slots__ = ("m", "coeffs", "_hash")

    def __init__(self, m: int, coeffs):
        f = minimal_polynomial(m)
        deg = len(f) - 1
        cs = [Fraction(c) for c in coeffs]
        # reduce any higher powers of lambda
        while len(cs) > deg:
            top = cs.pop()
            if top:
                s = len(cs) - deg
                for i in range(deg):
                    cs[s + i] -= top * f[i]
        cs += [Fraction(0)] * (deg - len(cs))
        self.m = m
        self.coeffs = tuple(cs)
        self._hash = None

    # constructors -----------------------------------------------------------
    @classmethod
    def lam(cls, m: int) -> "AlgebraicReal":
        if degree(m) == 1:
            return cls(m, [-minimal_polynomial(m)[0]])
        return cls(m, [0, 1])

    @classmethod
    def from_rational(cls, m: int, r: Rational) -> "AlgebraicReal":
        return cls(m, [r])

    # helpers ----------------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, AlgebraicReal):
            if other.m != self.m:
                raise DomainError(f"mixed fields Q(lambda_{self.m}) and Q(lambda_{other.m})")
            return other
        if isinstance(other, (int, Fraction)):
            return AlgebraicReal(self.m, [other])
        return NotImplemented

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def is_integral(self) -> bool:
        """True when every coefficient is an integer (element of Z[lambda])."""
        return all(c.denominator == 1 for c in self.coeffs)

    def rational_value(self) -> Fraction:
        if not self.is_rational():
            raise ValueError("element is irrational")
        return self.coeffs[0]

    def int_coeffs(self) -> Tuple[int, ...]:
        if not self.is_integral():
            raise ValueError(f"{self} is not in Z[lambda]")
        return tuple(c.numerator for c in self.coeffs)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    # ring operations --------------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return AlgebraicReal(self.m, [a + b for a, b in zip(self.coeffs, o.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return AlgebraicReal(self.m, [-a for a in self.coeffs])

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return AlgebraicReal(self.m, [a - b for a, b in zip(self.coeffs, o.coeffs)])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return AlgebraicReal(self.m, [a * other for a in self.coeffs])
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return AlgebraicReal(self.m, _fpoly_mul(list(self.coeffs), list(o.coeffs)))

    __rmul__ = __mul__

    def inverse(self) -> "AlgebraicReal":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in Q(lambda)")
        if self.is_rational():
            return AlgebraicReal(self.m, [1 / self.coeffs[0]])
        # extended Euclid in Q[x] against the (irreducible) minimal polynomial
        f = [Fraction(c) for c in minimal_polynomial(self.m)]
        r0, r1 = f, _fpoly_trim(list(self.coeffs))
        s0, s1 = [Fraction(0)], [Fraction(1)]
        while len(r1) > 1 or r1[0] != 0:
            q, r = _fpoly_divmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, _fpoly_sub(s0, _fpoly_mul(q, s1))
        # r0 is a nonzero constant
        c = r0[0]
        return AlgebraicReal(self.m, [x / c for x in s0])

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return AlgebraicReal(self.m, [a / other for a in self.coeffs])
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = AlgebraicReal(self.m, [1])
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # real embedding ---------------------------------------------------------
    def enclose(self, prec: int) -> Tuple[int, int]:
        """Integers ``lo <= value * 2^prec <= hi``, ``hi - lo <= 2``."""
        den = 1
        for c in self.coeffs:
            den = den * c.denominator // math.gcd(den, c.denominator)
        nums = [c.numerator * (den // c.denominator) for c in self.coeffs]
        if not any(nums[1:]):
            v = Fraction(nums[0], den) * (1 << prec)
            return math.floor(v), math.ceil(v)
        total = sum(abs(c) for c in nums)
        q = prec + max(0, total.bit_length() - den.bit_length()) + 4
        lo, hi = zlam_enclose(nums, self.m, q)
        s = den << (q - prec)
        return lo // s, -((-hi) // s)

    def interval(self, prec: int) -> Tuple[Fraction, Fraction]:
        lo, hi = self.enclose(prec)
        return Fraction(lo, 1 << prec), Fraction(hi, 1 << prec)

    def sign(self) -> int:
        if self.is_rational():
            c = self.coeffs[0]
            return (c > 0) - (c < 0)
        prec = 64
        while True:
            lo, hi = self.enclose(prec)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            prec *= 2

    def __float__(self):
        lo, hi = self.enclose(64)
        return (lo + hi) / 2 ** 65

    # comparisons ------------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.coeffs[0] == other
        if isinstance(other, AlgebraicReal):
            return self.m == other.m and self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            if self.is_rational():
                self._hash = hash(self.coeffs[0])
            else:
                self._hash = hash((self.m, self.coeffs))
        return self._hash

    def __lt__(self, other):
        return compare(self, other) < 0

    def __le__(self, other):
        return compare(self, other) <= 0

    def __gt__(self, other):
        return compare(self, other) > 0

    def __ge__(self, other):
        return compare(self, other) >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __repr__(self):
        return f"AlgebraicReal(m={self.m}, {self})"

    def __str__(self):
        terms = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mono = "" if i == 0 else ("lam" if i == 1 else f"lam^{i}")
            if i == 0:
                terms.append(str(c))
            elif c == 1:
                terms.append(mono)
            elif c == -1:
                terms.append("-" + mono)
            else:
                terms.append(f"{c}*{mono}")
        return " + ".join(terms).replace("+ -", "- ") or "0"


def compare(v, w) -> int:
    """Exact trichotomy ``sign(v - w)`` for rationals and elements of Q(lambda)."""
    if isinstance(v, AlgebraicReal) or isinstance(w, AlgebraicReal):
        if isinstance(v, AlgebraicReal) and isinstance(w, AlgebraicReal) and v.m != w.m:
            raise DomainError("cannot compare elements of different fields")
        base = v if isinstance(v, AlgebraicReal) else w
        diff = base._coerce(v) - base._coerce(w)
        return diff.sign()
    d = Fraction(v) - Fraction(w)
    return (d > 0) - (d < 0)


# ---------------------------------------------------------------------------
# adaptive reals


class AdaptiveReal:
    """A real number known through nested rational intervals on demand.

    ``query(prec)`` must return ``(lo, hi)`` Fractions with the value in
    ``[lo, hi]`` and ``hi - lo <= 2^-prec``.  Subclasses that can produce
    endpoints cheaply as integer pairs override :meth:`endpoints`.
    """

    def __init__(self, query: Callable[[int], Tuple[Fraction, Fraction]],
                 cap: int = DEFAULT_PRECISION_CAP):
        self._query = query
        self.cap = cap

    def interval(self, prec: int) -> Tuple[Fraction, Fraction]:
        lo, hi = self._query(prec)
        lo, hi = Fraction(lo), Fraction(hi)
        if hi < lo or hi - lo > Fraction(1, 1 << prec):
            raise ValueError(f"query({prec}) returned an interval violating its width bound")
        return lo, hi

    def endpoints(self, prec: int):
        """``((n_lo, d_lo), (n_hi, d_hi))`` integer pairs for :meth:`interval`."""
        lo, hi = self.interval(prec)
        return (lo.numerator, lo.denominator), (hi.numerator, hi.denominator)

    @classmethod
    def exact(cls, value: Rational, cap: int = DEFAULT_PRECISION_CAP) -> "AdaptiveReal":
        v = Fraction(value)
        return cls(lambda prec: (v, v), cap=cap)

    @classmethod
    def from_algebraic(cls, value: AlgebraicReal, cap: int = DEFAULT_PRECISION_CAP):
        return cls(lambda prec: value.interval(prec + 2), cap=cap)

    def __float__(self):
        lo, hi = self.interval(64)
        return float((lo + hi) / 2)


class DyadicAdaptiveReal(AdaptiveReal):
    """AdaptiveReal given by ``offset + scale * 0.b1 b2 b3 ...`` for a bit source.

    ``bits(k)`` returns the integer formed by the first ``k`` bits; it must be
    prefix-consistent.  ``offset`` and ``scale`` are rationals.  With ``lam_m``
    the whole value is multiplied by ``lambda_m``; endpoint numerators are then
    coefficient tuples over Z[lambda].
    """

    def __init__(self, bits: Callable[[int], int], offset: Rational = 0, scale: Rational = 1,
                 cap: int = DEFAULT_PRECISION_CAP, lam_m: int | None = None):
        self.bits = bits
        self.offset = Fraction(offset)
        self.scale = Fraction(scale)
        self.lam_m = lam_m
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        super().__init__(self._dyadic_query, cap=cap)

    def _raw(self, prec):
        extra = max(0, math.ceil(math.log2(self.scale))) if self.scale > 1 else 0
        if self.lam_m is not None:
            extra += 2
        k = prec + extra
        return self.bits(k), k

    def _dyadic_query(self, prec):
        K, k = self._raw(prec)
        lo = self.offset + self.scale * Fraction(K, 1 << k)
        hi = self.offset + self.scale * Fraction(K + 1, 1 << k)
        if self.lam_m is None:
            return lo, hi
        q = prec + 4 + max(abs(lo), abs(hi), Fraction(1)).numerator.bit_length()
        L_lo, L_hi = lambda_enclosure(self.lam_m, q)
        cands = [a * Fraction(L, 1 << q) for a in (lo, hi) for L in (L_lo, L_hi)]
        return min(cands), max(cands)

    def endpoints(self, prec):
        m = self.lam_m
        if m is not None and degree(m) <= 1:
            m = None
        if m is None and self.lam_m is not None:
            return super().endpoints(prec)
        K, k = self._raw(prec)
        a, b = self.offset.numerator, self.offset.denominator
        c, d = self.scale.numerator, self.scale.denominator
        den = (b * d) << k
        n_lo = (a * d << k) + b * c * K
        n_hi = n_lo + b * c
        if m is None:
            return (n_lo, den), (n_hi, den)
        pad = [0] * (degree(m) - 2)
        return ((0, n_lo, *pad), den), ((0, n_hi, *pad), den)


def certified_floor(v, cap: int | None = None) -> int:
    """Floor of a rational, an element of Q(lambda) or an AdaptiveReal."""
    if isinstance(v, int):
        return v
    if isinstance(v, Fraction):
        return math.floor(v)
    if isinstance(v, AlgebraicReal):
        if v.is_rational():
            return math.floor(v.coeffs[0])
        prec = 64
        while True:
            lo, hi = v.enclose(prec)
            fl = lo >> prec
            if hi < (fl + 1) << prec:
                return fl
            prec *= 2
    if isinstance(v, AdaptiveReal):
        limit = v.cap if cap is None else cap
        prec = 32
        while True:
            lo, hi = v.interval(prec)
            fl = math.floor(lo)
            if hi < fl + 1:
                return fl
            if prec >= limit:
                raise UndecidableFloor(f"interval [{float(lo)}, {float(hi)}] straddles an "
                                       f"integer at {prec} bits")
            prec = min(2 * prec, limit)
    raise TypeError(f"unsupported value type {type(v).__name__}")
