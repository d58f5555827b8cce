"""Cross-section returns of the geodesic flow and the skew product on cosets.

A section point is ``(sigma, x, y)`` with component ``sigma`` in ``{-1, +1}``.
Each return emits the digit ``(eps, d)`` of ``x``, the return time
``-2 log|x|`` and a matrix ``M`` in the group; the coset coordinate moves by
``g -> g M^-1``.  Components flip exactly on ``eps = +1`` returns.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import List, Sequence, Tuple

from .cf_engines import (
    ApproximantPair,
    CFKind,
    CFStep,
    ExpansionTerminated,
    push_approximant,
    step,
)
from .numerics import AdaptiveReal, AlgebraicReal, DomainError
from .orbit import expand
from .subgroups import (
    CosetTable,
    CuspTable,
    build_coset_table,
    classify_fraction,
    conjugate_table,
    cusp_partition,
    invert_word,
    iota_transport,
)


@dataclass(frozen=True)
class SectionPoint:
    sigma: int
    x: object
    y: object = 0


@dataclass(frozen=True)
class ReturnEvent:
    step: CFStep
    m_word: tuple
    t: float


@dataclass(frozen=True)
class SkewState:
    point: SectionPoint
    label: int = 0
    elapsed: float = 0.0
    k: int = 0
    digits: Tuple[CFStep, ...] = ()

    @classmethod
    def start(cls, x, y=0) -> "SkewState":
        return cls(SectionPoint(-1, x, y))


# ---------------------------------------------------------------------------
# matrices


def arnoux_matrix(point: SectionPoint):
    """``A_{-1}(x, y) = ((1, y), (-x, 1 - xy))`` or ``A_{+1}(x, y) = ((x, 1 - xy), (-1, y))``."""
    x, y = point.x, point.y
    if point.sigma == -1:
        return ((1, y), (-x, 1 - x * y))
    if point.sigma == 1:
        return ((x, 1 - x * y), (-1, y))
    raise ValueError("sigma must be -1 or +1")


def zmap(x, y):
    den = 1 + x * y
    if den == 0:
        raise DomainError("zmap is singular where 1 + xy = 0")
    return x, y / den


def zmap_inverse(x, y):
    den = 1 - x * y
    if den == 0:
        raise DomainError("inverse zmap is singular where 1 - xy = 0")
    return x, y / den


def return_matrix(kind: CFKind, sigma: int, eps: int, d: int):
    """Exact return matrix for the cell ``(sigma, eps)`` and digit ``d``."""
    c = kind.digit_coefficient(d)
    if (sigma, eps) == (-1, 1):
        return ((1, c), (0, 1))
    if (sigma, eps) == (1, 1):
        return ((1, 0), (c, 1))
    if (sigma, eps) == (-1, -1):
        return ((0, 1), (-1, c))
    if (sigma, eps) == (1, -1):
        return ((c, -1), (1, 0))
    raise ValueError(f"bad cell sigma={sigma}, eps={eps}")


def _generator(gen: str, m: int):
    if gen == "S":
        return ((1, AlgebraicReal.lam(m) if m != 3 else 1), (0, 1))
    return ((0, -1), (1, 0))


def _mul(A, B):
    (a, b), (c, d) = A
    (e, f), (g, h) = B
    return ((a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h))


def word_matrix(word, m: int = 3):
    """Exact product of a word over ``S`` (translation by lambda_m) and ``I``."""
    M = ((1, 0), (0, 1))
    for g, e in word:
        G = _generator(g, m)
        if g == "S":
            lam = G[0][1]
            G = ((1, lam * e), (0, 1))
            M = _mul(M, G)
        else:
            for _ in range(e % 4):
                M = _mul(M, G)
    return M


def projectively_equal(A, B) -> bool:
    fa = [A[0][0], A[0][1], A[1][0], A[1][1]]
    fb = [B[0][0], B[0][1], B[1][0], B[1][1]]
    return all(a == b for a, b in zip(fa, fb)) or all(a == -b for a, b in zip(fa, fb))


def _raw_word(sigma, eps, d):
    if (sigma, eps) == (-1, 1):
        return (("S", d),)
    if (sigma, eps) == (1, 1):
        return (("I", 1), ("S", -d), ("I", 1))
    if (sigma, eps) == (-1, -1):
        return (("I", 1), ("S", -d))
    if (sigma, eps) == (1, -1):
        return (("S", d), ("I", 1))
    raise ValueError(f"bad cell sigma={sigma}, eps={eps}")


@lru_cache(maxsize=4096)
def _checked_word(variant, m, sigma, eps, d):
    kind = CFKind.rosen(m) if variant == "rosen" else CFKind.regular()
    w = _raw_word(sigma, eps, d)
    if not projectively_equal(word_matrix(w, kind.group_m), return_matrix(kind, sigma, eps, d)):
        raise AssertionError(f"generator word for cell ({sigma}, {eps}, {d}) does not multiply out")
    return w


def m_word(kind: CFKind, sigma: int, eps: int, d: int):
    """Word over ``S``, ``I`` equal (up to sign) to the return matrix."""
    if d < 1:
        raise ValueError("digits are positive")
    if kind.variant == "regular" and eps != 1:
        raise ValueError("regular returns have eps = +1")
    if d <= 64:
        return _checked_word("rosen" if kind.variant == "rosen" else "regular", kind.group_m, sigma, eps, d)
    return _raw_word(sigma, eps, d)


def verify_m_words(kind: CFKind, dmax: int = 50) -> int:
    """Exhaustive exact check of every cell for ``d <= dmax``; returns the number checked."""
    n = 0
    cells = [(-1, 1), (1, 1)] if kind.variant == "regular" else [(-1, 1), (1, 1), (-1, -1), (1, -1)]
    for d in range(1, dmax + 1):
        for s, e in cells:
            w = _raw_word(s, e, d)
            if not projectively_equal(word_matrix(w, kind.group_m), return_matrix(kind, s, e, d)):
                raise AssertionError(f"cell ({s}, {e}), d={d} fails for {kind}")
            n += 1
    return n


# ---------------------------------------------------------------------------
# single returns


def _abs_float(x) -> float:
    if isinstance(x, AdaptiveReal):
        return abs(float(x))
    return float(abs(x))


def return_step(kind: CFKind, point: SectionPoint):
    st, nx = step(kind, point.x)
    t = -2.0 * math.log(_abs_float(point.x))
    c = kind.digit_coefficient(st.digit)
    y = point.y
    if isinstance(y, float) or isinstance(nx, AdaptiveReal):
        ny = 1.0 / (float(c) + st.epsilon * float(y))
    else:
        den = c + st.epsilon * y
        ny = Fraction(1, den) if isinstance(den, int) else 1 / den
    sigma = -st.epsilon * point.sigma
    ev = ReturnEvent(st, m_word(kind, point.sigma, st.epsilon, st.digit), t)
    return ev, SectionPoint(sigma, nx, ny)


def skew_step(state: SkewState, kind: CFKind, table: CosetTable) -> SkewState:
    ev, pt = return_step(kind, state.point)
    label = table.apply(state.label, invert_word(ev.m_word))
    return SkewState(pt, label, state.elapsed + ev.t, state.k + 1, state.digits + (ev.step,))


def skew_orbit(x, kind: CFKind, table: CosetTable, n: int, y=0) -> List[SkewState]:
    """States ``0 .. n`` (fewer if the expansion terminates)."""
    st = SkewState.start(x, y)
    out = [st]
    for _ in range(n):
        try:
            st = skew_step(st, kind, table)
        except ExpansionTerminated:
            break
        out.append(st)
    return out


# ---------------------------------------------------------------------------
# fast label streams


def label_stream(steps: Sequence[CFStep], table: CosetTable, label: int = 0, sigma: int = -1):
    """Labels and components after every step; same result as repeated :func:`skew_step`."""
    pI = table.perm_I
    cyc_of, pos, cycles = table.cycle_of, table.cycle_pos, table.cycles
    labels = [0] * len(steps)
    sigmas = [0] * len(steps)
    for i, (e, d) in enumerate(steps):
        if sigma < 0:
            if e > 0:      # M = S^d
                c = cycles[cyc_of[label]]
                label = c[(pos[label] - d) % len(c)]
            else:          # M = I S^-d
                c = cycles[cyc_of[label]]
                label = pI[c[(pos[label] + d) % len(c)]]
        else:
            j = pI[label]
            c = cycles[cyc_of[j]]
            if e > 0:      # M = I S^-d I
                label = pI[c[(pos[j] + d) % len(c)]]
            else:          # M = S^d I
                label = c[(pos[j] - d) % len(c)]
        if e > 0:
            sigma = -sigma
        labels[i] = label
        sigmas[i] = sigma
    return labels, sigmas


# ---------------------------------------------------------------------------
# closed form


def closed_form_matrix(ap: ApproximantPair, sigma: int):
    if sigma == -1:
        return ((ap.q_cur, -ap.q_prev), (-ap.p_cur, ap.p_prev))
    return ((ap.q_prev, -ap.q_cur), (-ap.p_prev, ap.p_cur))


def closed_form_coset(digits: Sequence[CFStep], kind: CFKind, table: CosetTable) -> int:
    """Coset label after ``len(digits)`` returns computed from the approximants alone."""
    ap = ApproximantPair.initial(kind)
    sigma = -1
    for st in digits:
        ap = push_approximant(ap, st, kind)
        if st.epsilon > 0:
            sigma = -sigma
    if not digits:
        return 0
    return table.label_of_matrix(closed_form_matrix(ap, sigma))


def closed_form_labels(digits: Sequence[CFStep], kind: CFKind, table: CosetTable) -> List[int]:
    """:func:`closed_form_coset` for every prefix, in one pass."""
    ap = ApproximantPair.initial(kind)
    sigma = -1
    out = []
    for st in digits:
        ap = push_approximant(ap, st, kind)
        if st.epsilon > 0:
            sigma = -sigma
        out.append(table.label_of_matrix(closed_form_matrix(ap, sigma)))
    return out


# ---------------------------------------------------------------------------
# Psi


def psi_average(trajectory: Sequence[SkewState], cusp: int, tables: Tuple[CuspTable, CuspTable]):
    """``(Psi average, un-halved hit frequency)`` over the states of ``trajectory``."""
    if not trajectory:
        raise ValueError("empty trajectory")
    inf, zero = tables
    hits = 0
    for st in trajectory:
        if st.point.sigma == -1:
            hits += inf.class_of[st.label] == cusp
        else:
            hits += zero.class_of[st.label] == cusp
    freq = hits / len(trajectory)
    return freq / 2, freq


def psi_average_stream(labels, sigmas, cusp, tables):
    """:func:`psi_average` on the output of :func:`label_stream`."""
    if not labels:
        raise ValueError("empty trajectory")
    inf, zero = tables
    hits = sum((inf.class_of[l] if s < 0 else zero.class_of[l]) == cusp for l, s in zip(labels, sigmas))
    freq = hits / len(labels)
    return freq / 2, freq


# ---------------------------------------------------------------------------
# the iota twist


@dataclass
class TwistedRun:
    counts: List[int]                 # k = 1 .. steps
    counts_k0: List[int]              # k = 0 .. steps (p_0/q_0 = 0/1)
    steps: int
    terminated: bool
    assignments: List[int]
    digits: List[CFStep] = field(default_factory=list, repr=False)


class TwistContext:
    """Tables for ``H``, ``I H I`` and the transport between them."""

    def __init__(self, specH=None, tableH: CosetTable | None = None):
        self.tableH = tableH if tableH is not None else build_coset_table(specH)
        self.tableC = conjugate_table(self.tableH)
        self.transport = iota_transport(self.tableH, self.tableC)
        self.cuspsH = cusp_partition(self.tableH, "inf")
        self.cuspsH0 = cusp_partition(self.tableH, "0")
        cC = cusp_partition(self.tableC, "inf")
        cC0 = cusp_partition(self.tableC, "0")
        cm = self.transport.cusp_map
        self.by_inf = [cm[j] for j in cC.class_of]
        self.by_zero = [cm[j] for j in cC0.class_of]
        self.zero_cusp = classify_fraction(0, 1, self.tableH, self.cuspsH, completion=(-1, 0))

    @property
    def ncusps(self) -> int:
        return self.cuspsH.count


def twisted_assignments(steps: Sequence[CFStep], ctx: TwistContext) -> List[int]:
    """Cusp of ``H`` containing ``p_k/q_k`` for ``k = 1 ..`` from the skew product over ``I H I``."""
    labels, sigmas = label_stream(steps, ctx.tableC)
    bi, bz = ctx.by_inf, ctx.by_zero
    return [bi[l] if s < 0 else bz[l] for l, s in zip(labels, sigmas)]


def direct_assignments(steps: Sequence[CFStep], kind: CFKind, tableH: CosetTable,
                       cuspsH: CuspTable | None = None) -> List[int]:
    """Cusp of ``p_k/q_k`` by classifying the exact approximants directly."""
    cuspsH = cuspsH or cusp_partition(tableH, "inf")
    ap = ApproximantPair.initial(kind)
    out = []
    for st in steps:
        ap = push_approximant(ap, st, kind)
        out.append(classify_fraction(ap.p_cur, ap.q_cur, tableH, cuspsH, completion=(ap.p_prev, ap.q_prev)))
    return out


def iota_twisted_run(x, kind: CFKind, specH=None, N: int = 1000, *, ctx: TwistContext | None = None,
                     steps: Sequence[CFStep] | None = None) -> TwistedRun:
    """Per-cusp counts of the approximants of ``x`` (first ``N`` of them)."""
    if ctx is None:
        ctx = TwistContext(specH)
    if steps is None:
        exp = expand(kind, x, N)
        steps, terminated = exp.steps, exp.terminated
    else:
        steps = list(steps)[:N]
        terminated = len(steps) < N
    assign = twisted_assignments(steps, ctx)
    counts = [0] * ctx.ncusps
    for c in assign:
        counts[c] += 1
    k0 = list(counts)
    k0[ctx.zero_cusp] += 1
    return TwistedRun(counts, k0, len(steps), terminated, assign, list(steps))


# ---------------------------------------------------------------------------
# trajectory dump

DUMP_HEADER = ("k", "eps", "d", "sigma", "label", "cusp_inf", "cusp_zero", "t")


def trajectory_rows(x, kind: CFKind, table: CosetTable, n: int):
    """Rows of the per-return dump for the skew product over ``table``."""
    exp = expand(kind, x, n, points=True)
    labels, sigmas = label_stream(exp.steps, table)
    inf, zero = cusp_partition(table, "inf"), cusp_partition(table, "0")
    x0 = _abs_float(x)
    prev = [x0] + [abs(p) for p in exp.points]
    rows = []
    for i, st in enumerate(exp.steps):
        lab, sg = labels[i], sigmas[i]
        t = -2.0 * math.log(prev[i])
        rows.append((i + 1, st.epsilon, st.digit, sg, lab, inf.class_of[lab], zero.class_of[lab], t))
    return rows, exp.terminated


def write_trajectory(fh, rows):
    fh.write("\t".join(DUMP_HEADER) + "\n")
    for r in rows:
        fh.write("\t".join(str(v) if not isinstance(v, float) else repr(v) for v in r) + "\n")
