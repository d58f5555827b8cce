"""Digit maps and approximant recurrences for regular, alpha- and Rosen fractions.

A single exact step works on ``int``/``Fraction``, on :class:`AlgebraicReal`
and on :class:`AdaptiveReal` inputs.  Long orbits of adaptive or huge exact
inputs should go through :func:`cfcusps.orbit.expand`, which produces the same
digits with chunked certified arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from .numerics import (
    AdaptiveReal,
    AlgebraicReal,
    DomainError,
    certified_floor,
    compare,
)


class ExpansionTerminated(Exception):
    """Raised when stepping the orbit point 0 (a finite expansion has ended)."""


@dataclass(frozen=True)
class CFKind:
    variant: str
    alpha: Fraction = Fraction(1)
    m: int = 3

    def __post_init__(self):
        if self.variant not in ("regular", "alpha", "rosen"):
            raise ValueError(f"unknown continued fraction kind {self.variant!r}")
        if self.variant == "alpha" and not (0 < self.alpha <= 1):
            raise ValueError("alpha must lie in (0, 1]")
        if self.variant == "rosen" and (not isinstance(self.m, int) or self.m < 3):
            raise DomainError("Rosen index m must be an integer >= 3")

    @classmethod
    def regular(cls) -> "CFKind":
        return cls("regular")

    @classmethod
    def alpha_cf(cls, alpha) -> "CFKind":
        return cls("alpha", alpha=Fraction(alpha))

    @classmethod
    def rosen(cls, m: int) -> "CFKind":
        return cls("rosen", m=m)

    @classmethod
    def parse(cls, text: str) -> "CFKind":
        """``regular``, ``alpha:1/2`` or ``rosen:5``."""
        name, _, arg = text.strip().partition(":")
        if name == "regular" and not arg:
            return cls.regular()
        if name == "alpha" and arg:
            return cls.alpha_cf(Fraction(arg))
        if name == "rosen" and arg:
            return cls.rosen(int(arg))
        raise ValueError(f"cannot parse continued fraction kind {text!r}")

    def __str__(self):
        if self.variant == "alpha":
            return f"alpha:{self.alpha}"
        if self.variant == "rosen":
            return f"rosen:{self.m}"
        return "regular"

    @property
    def group_m(self) -> int:
        """Hecke index of the group the approximants live in (3 = modular group)."""
        return self.m if self.variant == "rosen" else 3

    @property
    def signed(self) -> bool:
        return self.variant != "regular"

    def lam(self):
        if self.variant == "rosen":
            return AlgebraicReal.lam(self.m)
        return 1

    def digit_coefficient(self, digit: int):
        """The entry ``d`` (regular/alpha) or ``lambda * r`` (Rosen)."""
        if self.variant == "rosen":
            return AlgebraicReal.lam(self.m) * digit
        return digit

    def interval_bounds(self):
        """``(lo, hi)`` of the half-open fundamental interval."""
        if self.variant == "regular":
            return Fraction(0), Fraction(1)
        if self.variant == "alpha":
            return self.alpha - 1, self.alpha
        half = AlgebraicReal.lam(self.m) / 2
        return -half, half


class CFStep(NamedTuple):
    epsilon: int
    digit: int


@dataclass(frozen=True)
class ApproximantPair:
    p_prev: object
    p_cur: object
    q_prev: object
    q_cur: object
    n: int = 0

    @classmethod
    def initial(cls, kind: CFKind | None = None) -> "ApproximantPair":
        if kind is not None and kind.variant == "rosen":
            one = AlgebraicReal(kind.m, [1])
            zero = AlgebraicReal(kind.m, [0])
            return cls(one, zero, zero, one, 0)
        return cls(1, 0, 0, 1, 0)

    def determinant(self):
        return self.p_prev * self.q_cur - self.q_prev * self.p_cur


def in_fundamental_interval(kind: CFKind, x) -> bool:
    lo, hi = kind.interval_bounds()
    return compare(x, lo) >= 0 and compare(x, hi) < 0


def _check_value(kind: CFKind, x):
    if kind.variant == "rosen":
        if isinstance(x, (int, Fraction)):
            return AlgebraicReal(kind.m, [x])
        if isinstance(x, AlgebraicReal):
            if x.m != kind.m:
                raise DomainError(f"Rosen engine for m={kind.m} got an element of Q(lambda_{x.m})")
            return x
        raise TypeError(f"Rosen engine cannot step a {type(x).__name__}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, (Fraction, AlgebraicReal)):
        return x
    raise TypeError(f"cannot step a {type(x).__name__}")


def _sign(x) -> int:
    if isinstance(x, AlgebraicReal):
        return x.sign()
    return (x > 0) - (x < 0)


def _digit_from_abs_inverse(kind: CFKind, ax):
    """Digit from ``|1/x|`` for exact ``ax``."""
    if kind.variant == "regular":
        return certified_floor(ax)
    if kind.variant == "alpha":
        return certified_floor(ax + (1 - kind.alpha))
    lam = AlgebraicReal.lam(kind.m)
    return certified_floor(ax / lam + Fraction(1, 2))


def step(kind: CFKind, x):
    """One application of the digit map: returns ``(CFStep, T(x))``."""
    if isinstance(x, AdaptiveReal):
        return _adaptive_step(kind, x)
    x = _check_value(kind, x)
    if x == 0:
        raise ExpansionTerminated("orbit reached 0")
    if not in_fundamental_interval(kind, x):
        raise DomainError(f"{x} is outside the fundamental interval of {kind}")
    eps = _sign(x) if kind.signed else 1
    ax = (1 / x) if eps > 0 else (-1 / x)
    d = _digit_from_abs_inverse(kind, ax)
    nxt = ax - kind.digit_coefficient(d)
    return CFStep(eps, d), nxt


# AdaptiveReal stepping ------------------------------------------------------


class _MobiusImage(AdaptiveReal):
    """``|1/x| - c`` on a certified cylinder of the AdaptiveReal ``x``."""

    def __init__(self, base: AdaptiveReal, eps: int, coeff, kind: CFKind):
        self.base = base
        self.eps = eps
        self.coeff = coeff
        self.kind = kind
        super().__init__(self._query, cap=base.cap)

    def _image(self, t: Fraction):
        v = self.eps / t - self.coeff
        return v

    def _query(self, prec):
        p = prec + 8
        while True:
            lo, hi = self.base.interval(p)
            small = min(abs(lo), abs(hi))
            if small == 0:
                p *= 2
                continue
            a, b = self._image(lo), self._image(hi)
            if isinstance(a, AlgebraicReal):
                a_lo, a_hi = a.interval(prec + 2)
                b_lo, b_hi = b.interval(prec + 2)
                lo2, hi2 = min(a_lo, b_lo), max(a_hi, b_hi)
            else:
                lo2, hi2 = min(a, b), max(a, b)
            if hi2 - lo2 <= Fraction(1, 1 << prec):
                return lo2, hi2
            p += 8 + 2 * max(0, -math.floor(math.log2(small)))


def _adaptive_step(kind: CFKind, x: AdaptiveReal):
    prec = 32
    while True:
        lo, hi = x.interval(prec)
        if lo == hi == 0:
            raise ExpansionTerminated("orbit reached 0")
        if lo > 0 or (hi < 0 and kind.signed):
            eps = 1 if lo > 0 else -1
            a, b = (1 / lo, 1 / hi) if eps > 0 else (-1 / hi, -1 / lo)  # a >= b
            da = _digit_from_abs_inverse(kind, a if kind.variant != "rosen" else AlgebraicReal(kind.m, [a]))
            db = _digit_from_abs_inverse(kind, b if kind.variant != "rosen" else AlgebraicReal(kind.m, [b]))
            if da == db:
                coeff = kind.digit_coefficient(da)
                return CFStep(eps, da), _MobiusImage(x, eps, coeff, kind)
        if prec >= x.cap:
            raise _undecidable(lo, hi, prec)
        prec = min(2 * prec, x.cap)


def _undecidable(lo, hi, prec):
    from .numerics import UndecidableFloor

    return UndecidableFloor(f"digit undecidable on [{float(lo)}, {float(hi)}] at {prec} bits")


# approximants ----------------------------------------------------------------


def push_approximant(state: ApproximantPair, st: CFStep, kind: CFKind) -> ApproximantPair:
    """``p_n = c p_{n-1} + eps p_{n-2}`` and the same for ``q`` (``c = d`` or ``lambda r``)."""
    c = kind.digit_coefficient(st.digit)
    e = st.epsilon
    return ApproximantPair(
        state.p_cur,
        c * state.p_cur + e * state.p_prev,
        state.q_cur,
        c * state.q_cur + e * state.q_prev,
        state.n + 1,
    )


def approximants(steps: Sequence[CFStep], kind: CFKind):
    """All states ``n = 1 .. len(steps)``."""
    st = ApproximantPair.initial(kind)
    out = []
    for s in steps:
        st = push_approximant(st, s, kind)
        out.append(st)
    return out


def _mat_mul(A, B):
    (a, b), (c, d) = A
    (e, f), (g, h) = B
    return ((a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h))


def digit_matrix(st: CFStep, kind: CFKind):
    return ((0, st.epsilon), (1, kind.digit_coefficient(st.digit)))


def matrix_form(steps: Sequence[CFStep], kind: CFKind):
    """Product of the per-digit matrices; columns are (p_{n-1}, q_{n-1}), (p_n, q_n)."""
    if not steps:
        raise ValueError("matrix_form needs at least one step")
    M = digit_matrix(steps[0], kind)
    for s in steps[1:]:
        M = _mat_mul(M, digit_matrix(s, kind))
    return M


def evaluate(steps: Sequence[CFStep], kind: CFKind):
    """Bottom-up value of the finite continued fraction."""
    if not steps:
        raise ValueError("evaluate needs at least one step")
    zero = AlgebraicReal(kind.m, [0]) if kind.variant == "rosen" else Fraction(0)
    v = zero
    for s in reversed(steps):
        den = kind.digit_coefficient(s.digit) + v
        if den == 0:
            raise ZeroDivisionError("degenerate prefix: a tail evaluates to 0")
        v = s.epsilon / den if not isinstance(den, int) else Fraction(s.epsilon, den)
    return v


def planar_step(kind: CFKind, x, y):
    """Natural extension ``(x, y) -> (T x, 1/(c + eps y))``."""
    st, nx = step(kind, x)
    den = kind.digit_coefficient(st.digit) + st.epsilon * y
    if isinstance(den, float):
        return nx, 1.0 / den
    if isinstance(den, int):
        return nx, Fraction(1, den)
    return nx, 1 / den


def expansion_digits(kind: CFKind, x, n: int):
    """Up to ``n`` exact steps; stops early on a finite expansion."""
    out = []
    for _ in range(n):
        try:
            st, x = step(kind, x)
        except ExpansionTerminated:
            break
        out.append(st)
    return out
