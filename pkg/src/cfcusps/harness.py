"""Seeded experiments: cusp distribution of approximants, measure checks, oracle suites."""
from __future__ import annotations

import csv
import io
import json
import math
import re
from array import array
from dataclasses import dataclass, asdict
from fractions import Fraction
from typing import Dict, List, Optional

import numpy as np

from .cf_engines import CFKind, CFStep, approximants, in_fundamental_interval
from .numerics import (
    AlgebraicReal,
    DyadicAdaptiveReal,
    UndecidableFloor,
    lambda_enclosure,
)
from .orbit import expand
from .skewprod import (
    TwistContext,
    closed_form_labels,
    direct_assignments,
    label_stream,
    twisted_assignments,
    verify_m_words,
)
from .subgroups import (
    build_coset_table,
    cusp_representative,
    parse_spec,
)

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# inputs


class BitStream:
    """Prefix-consistent random bits from a PCG64 stream (64 bits per word, big-endian)."""

    def __init__(self, *key: int):
        self._gen = np.random.PCG64(np.random.SeedSequence(list(key)))
        self._words: List[int] = []
        self._value = 0  # integer of all words so far

    def __call__(self, k: int) -> int:
        need = (k + 63) // 64
        if need > len(self._words):
            new = self._gen.random_raw(need - len(self._words))
            v = self._value
            for w in new.tolist():
                v = (v << 64) | w
                self._words.append(w)
            self._value = v
        return self._value >> (len(self._words) * 64 - k)


_TERM = re.compile(r"\s*([+-]?)\s*([0-9]+(?:/[0-9]+)?(?:\.[0-9]*)?)?\s*\*?\s*(lam(?:\^([0-9]+))?)?\s*")


def parse_value(text: str, kind: CFKind):
    """``2/5``, ``0.4`` or, for Rosen kinds, a polynomial in ``lam`` such as ``lam-1``."""
    s = text.strip().replace(" ", "")
    if not s:
        raise ValueError("empty value")
    if "lam" not in s:
        try:
            return Fraction(s)
        except ValueError:
            raise ValueError(f"cannot parse value {text!r}") from None
    if kind.variant != "rosen":
        raise ValueError("lam only makes sense for Rosen kinds")
    m = kind.m
    total = AlgebraicReal(m, [0])
    pos = 0
    while pos < len(s):
        mt = _TERM.match(s, pos)
        if not mt or mt.end() == pos or not (mt.group(2) or mt.group(3)):
            raise ValueError(f"cannot parse value {text!r}")
        sign = -1 if mt.group(1) == "-" else 1
        coef = Fraction(mt.group(2)) if mt.group(2) else Fraction(1)
        if mt.group(3):
            term = AlgebraicReal.lam(m) ** int(mt.group(4) or 1)
        else:
            term = AlgebraicReal(m, [1])
        total = total + term * (sign * coef)
        pos = mt.end()
        if pos < len(s) and s[pos] not in "+-":
            raise ValueError(f"cannot parse value {text!r}")
    return total


def sample_input(mode: str, seed: int, kind: CFKind, sample_id: int = 0, attempt: int = 0,
                 rational_bits: int = 64, value: Optional[str] = None):
    """Deterministic input for ``(mode, seed, sample_id, attempt)``.

    Modes: ``random-adaptive`` (uniform on the fundamental interval, bits on
    demand), ``random-rational`` (denominator of ``rational_bits`` bits) and
    ``explicit`` (``value`` parsed exactly).
    """
    if mode == "explicit":
        if value is None:
            raise ValueError("explicit input needs a value")
        x = parse_value(value, kind)
        if not in_fundamental_interval(kind, x):
            raise ValueError(f"{value} is outside the fundamental interval of {kind}")
        return x
    bits = BitStream(seed, sample_id, attempt)
    if mode == "random-adaptive":
        if kind.variant == "regular":
            return DyadicAdaptiveReal(bits)
        if kind.variant == "alpha":
            return DyadicAdaptiveReal(bits, offset=kind.alpha - 1)
        return DyadicAdaptiveReal(bits, offset=Fraction(-1, 2), lam_m=kind.m)
    if mode == "random-rational":
        b = rational_bits
        if b < 16:
            raise ValueError("random-rational needs at least 16 bits")
        g = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, sample_id, attempt])))
        q = (1 << (b - 1)) + _randbits(g, b - 1)
        p = _randbelow(g, q)
        u = Fraction(p, q)
        if kind.variant == "regular":
            return u
        if kind.variant == "alpha":
            return kind.alpha - 1 + u
        lo, _ = lambda_enclosure(kind.m, 64)
        return (2 * u - 1) * Fraction(lo, 1 << 65)
    raise ValueError(f"unknown input mode {mode!r}")


def _randbits(g, k):
    words = g.integers(0, 1 << 32, size=(k + 31) // 32, dtype=np.uint64).tolist()
    v = 0
    for w in words:
        v = (v << 32) | int(w)
    return v >> (len(words) * 32 - k) if k else 0


def _randbelow(g, n):
    k = n.bit_length()
    while True:
        r = _randbits(g, k)
        if r < n:
            return r


# ---------------------------------------------------------------------------
# configs


@dataclass
class ExperimentConfig:
    kind: CFKind
    spec: str
    N: int
    S: int
    seed: int = 0
    input_mode: str = "random-adaptive"
    rational_bits: int = 64
    value: Optional[str] = None
    output: Optional[str] = None
    fmt: str = "json"

    def __post_init__(self):
        if isinstance(self.kind, str):
            self.kind = CFKind.parse(self.kind)
        if self.N < 1 or self.S < 1:
            raise ValueError("N and S must be at least 1")
        if self.input_mode not in ("random-adaptive", "random-rational", "explicit"):
            raise ValueError(f"unknown input mode {self.input_mode!r}")
        if self.input_mode == "random-rational" and self.rational_bits < 16:
            raise ValueError("random-rational needs at least 16 bits")
        if self.fmt not in ("json", "csv"):
            raise ValueError("format must be json or csv")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def subgroup_spec(self):
        return parse_spec(self.spec, self.kind.group_m)

    def echo(self) -> dict:
        return {
            "kind": str(self.kind),
            "spec": self.spec,
            "N": self.N,
            "S": self.S,
            "seed": self.seed,
            "input_mode": self.input_mode,
            "rational_bits": self.rational_bits if self.input_mode == "random-rational" else None,
            "value": self.value,
        }


_CONFIG_KEYS = {"kind", "spec", "N", "S", "seed", "input", "rational_bits", "value", "output", "format"}


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or key not in _CONFIG_KEYS:
            raise ValueError(f"config line {n}: expected one of {sorted(_CONFIG_KEYS)} = value")
        out[key] = val
    return out


def config_from_mapping(d: dict) -> ExperimentConfig:
    if "spec" not in d or d["spec"] is None:
        raise ValueError("missing spec")
    return ExperimentConfig(
        kind=CFKind.parse(d.get("kind") or "regular"),
        spec=d["spec"],
        N=int(d.get("N") or 1000),
        S=int(d.get("S") or 1),
        seed=int(d.get("seed") or 0),
        input_mode=d.get("input") or "random-adaptive",
        rational_bits=int(d.get("rational_bits") or 64),
        value=d.get("value"),
        output=d.get("output"),
        fmt=d.get("format") or "json",
    )


# ---------------------------------------------------------------------------
# distribution runs


def _pack(steps) -> array:
    return array("q", (e * d for e, d in steps))


def _unpack(packed) -> List[CFStep]:
    return [CFStep(1 if v > 0 else -1, abs(v)) for v in packed]


def sample_stream(config: ExperimentConfig, sample_id: int, cache: Optional[dict] = None):
    """``(steps, terminated, resamples)`` for one sample, resampling undecidable inputs."""
    key = (str(config.kind), config.input_mode, config.rational_bits, config.value,
           config.seed, sample_id, config.N)
    if cache is not None and key in cache:
        packed, term, res = cache[key]
        return _unpack(packed), term, res
    attempt = 0
    while True:
        x = sample_input(config.input_mode, config.seed, config.kind, sample_id, attempt,
                         config.rational_bits, config.value)
        try:
            exp = expand(config.kind, x, config.N)
            break
        except UndecidableFloor:
            if config.input_mode == "explicit":
                raise
            attempt += 1
            if attempt > 100:
                raise
    if cache is not None:
        cache[key] = (_pack(exp.steps), exp.terminated, attempt)
    return exp.steps, exp.terminated, attempt


@dataclass
class DistributionReport:
    config: dict
    group: str
    index: int
    widths: List[int]
    cusps: List[dict]
    samples: List[dict]
    truncated_samples: int
    resampled: int
    total_steps: int
    seed: int
    schema_version: int = SCHEMA_VERSION

    def max_deviation(self) -> float:
        return max(c["deviation"] for c in self.cusps)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["id", "width", "expected", "count", "observed", "deviation", "count_k0", "observed_k0",
                "psi", "hit_frequency", "representative"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for c in self.cusps:
            w.writerow([c[k] for k in cols])
        return buf.getvalue()


def _group_name(m):
    return "modular" if m == 3 else f"hecke:{m}"


def run_distribution(config: ExperimentConfig, *, stream_cache: Optional[dict] = None,
                     ctx: Optional[TwistContext] = None) -> DistributionReport:
    """Pooled cusp frequencies of ``p_k/q_k``, ``1 <= k <= N``, over ``S`` samples.

    Counts come from the skew product over ``I H I`` carried over to the cusps
    of ``H``.  The ``k = 0`` convention (``p_0/q_0 = 0/1`` added) is reported
    alongside.  ``psi`` and ``hit_frequency`` are the skew-product averages
    over ``H`` itself, halved and un-halved.
    """
    spec = config.subgroup_spec()
    if ctx is None:
        ctx = TwistContext(spec)
    tH = ctx.tableH
    cinf, czero = ctx.cuspsH, ctx.cuspsH0
    nc = cinf.count
    pooled = [0] * nc
    pooled0 = [0] * nc
    hits = [0] * nc
    samples = []
    truncated = resampled = total = 0
    for i in range(config.S):
        steps, term, res = sample_stream(config, i, stream_cache)
        counts = [0] * nc
        for c in twisted_assignments(steps, ctx):
            counts[c] += 1
        labels, sigmas = label_stream(steps, tH)
        ci, cz = cinf.class_of, czero.class_of
        for l, s in zip(labels, sigmas):
            hits[ci[l] if s < 0 else cz[l]] += 1
        for j in range(nc):
            pooled[j] += counts[j]
            pooled0[j] += counts[j]
        pooled0[ctx.zero_cusp] += 1
        truncated += term
        resampled += res
        total += len(steps)
        samples.append({"id": i, "steps": len(steps), "terminated": bool(term), "resamples": res,
                        "counts": counts})
    cusps = []
    for j in range(nc):
        w = cinf.widths[j]
        exp_ = w / tH.index
        obs = pooled[j] / total if total else 0.0
        obs0 = pooled0[j] / (total + config.S)
        hf = hits[j] / total if total else 0.0
        cusps.append({
            "id": j, "width": w, "expected": exp_, "count": pooled[j], "observed": obs,
            "deviation": abs(obs - exp_), "count_k0": pooled0[j], "observed_k0": obs0,
            "psi": hf / 2, "hit_frequency": hf,
            "representative": cusp_representative(tH, j, cinf),
        })
    return DistributionReport(
        config=config.echo(), group=_group_name(config.kind.group_m), index=tH.index,
        widths=list(cinf.widths), cusps=cusps, samples=samples, truncated_samples=truncated,
        resampled=resampled, total_steps=total, seed=config.seed,
    )


def write_report(report: DistributionReport, path: str, fmt: str = "json"):
    text = report.to_json() if fmt == "json" else report.to_csv()
    with open(path, "w") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# measure checks


def gauss_bin_masses(bins: int) -> np.ndarray:
    edges = np.linspace(0.0, 1.0, bins + 1)
    return np.diff(np.log1p(edges)) / math.log(2)


def box_weight(x1: float = 0.5, y1: float = 0.5) -> float:
    """Normalized weight of ``[0, x1] x [0, y1]`` under ``dx dy / ((1 + xy)^2 log 2)``."""
    from scipy.integrate import dblquad

    val, _ = dblquad(lambda y, x: 1.0 / (1.0 + x * y) ** 2, 0.0, x1, 0.0, y1, epsabs=1e-13, epsrel=1e-13)
    return val / math.log(2)


def sample_natural_extension(n: int, rng: np.random.Generator):
    """``n`` points from the invariant measure of ``(x, y) -> (Tx, 1/(d + y))``."""
    x = np.exp2(rng.random(n)) - 1.0
    u = rng.random(n)
    y = u / (1.0 + x - u * x)
    return x, y


def push_natural_extension(x, y):
    with np.errstate(divide="ignore"):
        inv = 1.0 / x
    d = np.floor(inv)
    nx = inv - d
    ny = 1.0 / (d + y)
    bad = ~np.isfinite(nx) | (x <= 0)
    nx[bad] = 0.5
    ny[bad] = 0.5
    return nx, ny


def run_measure_check(kind: CFKind, N: int, seed: int, bins: int = 20, cloud: int = 10 ** 6,
                      pushes=(0, 1, 2, 5, 10), box=(0.5, 0.5)) -> dict:
    """Histogram of one orbit of length ``N`` against the invariant density, plus a box-mass check.

    For the regular kind the bins are compared to the Gauss measure (bin
    masses) and a point cloud from the planar invariant measure is pushed
    forward and compared with the box weight.  Other kinds only get the
    difference between the histograms of the two orbit halves.
    """
    rep = {"kind": str(kind), "N": N, "seed": seed, "bins": bins}
    if N <= 0:
        rep.update({"histogram": [], "max_bin_deviation": 0.0, "box": None})
        return rep
    x = sample_input("random-adaptive", seed, kind, 0)
    exp = expand(kind, x, N, points=True)
    pts = np.asarray(exp.points, dtype=float)
    lo, hi = (float(v) for v in kind.interval_bounds())
    counts, edges = np.histogram(pts, bins=bins, range=(lo, hi))
    freq = counts / max(len(pts), 1)
    rep["histogram"] = freq.tolist()
    rep["points"] = int(len(pts))
    if kind.variant == "regular" or (kind.variant == "alpha" and kind.alpha == 1):
        mass = gauss_bin_masses(bins)
        dev = np.abs(freq - mass)
        rep["expected"] = mass.tolist()
        rep["max_bin_deviation"] = float(dev.max())
        rep["max_density_deviation"] = float((dev * bins).max())
        w = box_weight(*box)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 1])))
        cx, cy = sample_natural_extension(cloud, rng)
        se = math.sqrt(w * (1 - w) / cloud)
        drift = []
        k = 0
        for target in sorted(pushes):
            while k < target:
                cx, cy = push_natural_extension(cx, cy)
                k += 1
            inside = float(np.mean((cx <= box[0]) & (cy <= box[1])))
            drift.append({"pushes": k, "mass": inside, "z": (inside - w) / se})
        rep["box"] = {"x1": box[0], "y1": box[1], "weight": w, "se": se, "cloud": cloud, "drift": drift,
                      "max_abs_z": max(abs(d["z"]) for d in drift)}
    else:
        half = len(pts) // 2
        a, _ = np.histogram(pts[:half], bins=bins, range=(lo, hi))
        b, _ = np.histogram(pts[half:], bins=bins, range=(lo, hi))
        rep["max_half_difference"] = float(np.abs(a / max(half, 1) - b / max(len(pts) - half, 1)).max())
        rep["box"] = None
    return rep


# ---------------------------------------------------------------------------
# oracle suites


def random_digit_string(kind: CFKind, rng: np.random.Generator, length: int) -> List[CFStep]:
    """Random (not necessarily admissible) digit string; the coset identities are algebraic."""
    out = []
    for _ in range(length):
        d = int(rng.geometric(0.3))
        e = 1 if kind.variant == "regular" else int(rng.choice([-1, 1]))
        out.append(CFStep(e, d))
    return out


def crosscheck_closed_form(kinds, specs, strings: int = 200, max_len: int = 30, seed: int = 0) -> dict:
    """Skew-product labels vs closed-form labels on random digit strings."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 5])))
    checked = failures = 0
    for kind in kinds:
        tables = [build_coset_table(parse_spec(s, kind.group_m)) for s in specs]
        for _ in range(strings):
            steps = random_digit_string(kind, rng, int(rng.integers(1, max_len + 1)))
            for t in tables:
                a, _ = label_stream(steps, t)
                b = closed_form_labels(steps, kind, t)
                checked += len(a)
                failures += sum(u != v for u, v in zip(a, b))
    return {"checked": checked, "failures": failures}


def crosscheck_twist(cases, trajectories: int = 5, N: int = 200, seed: int = 0) -> dict:
    """Twisted-run cusp assignments vs direct classification of exact approximants."""
    checked = failures = 0
    for kind, spec in cases:
        ctx = TwistContext(parse_spec(spec, kind.group_m))
        for i in range(trajectories):
            x = sample_input("random-adaptive", seed, kind, i)
            exp = expand(kind, x, N)
            a = twisted_assignments(exp.steps, ctx)
            b = direct_assignments(exp.steps, kind, ctx.tableH, ctx.cuspsH)
            checked += len(a)
            failures += sum(u != v for u, v in zip(a, b)) + abs(len(a) - len(b))
    return {"checked": checked, "failures": failures}


def crosscheck_determinants(kinds, trajectories: int = 5, N: int = 200, seed: int = 0) -> dict:
    checked = failures = 0
    for kind in kinds:
        for i in range(trajectories):
            x = sample_input("random-adaptive", seed, kind, i)
            for ap in approximants(expand(kind, x, N).steps, kind):
                det = ap.determinant()
                checked += 1
                failures += not (det == 1 or det == -1)
    return {"checked": checked, "failures": failures}


def crosscheck_words(kinds, dmax: int = 50) -> dict:
    checked = failures = 0
    for kind in kinds:
        try:
            checked += verify_m_words(kind, dmax)
        except AssertionError:
            failures += 1
    return {"checked": checked, "failures": failures}


def default_crosscheck(seed: int = 0, quick: bool = False) -> Dict[str, dict]:
    n = 40 if quick else 200
    traj = 2 if quick else 5
    reg, nicf = CFKind.regular(), CFKind.alpha_cf(Fraction(1, 2))
    rosen = [CFKind.rosen(m) for m in (3, 4, 5, 6)]
    return {
        "closed_form": crosscheck_closed_form([reg, nicf], ["mod:2", "mod:3", "gamma0:3"], n, 30, seed),
        "closed_form_rosen": crosscheck_closed_form(rosen[1:3], ["mod:2", "gamma0:2"], n // 4, 30, seed),
        "twist": crosscheck_twist(
            [(reg, "mod:2"), (reg, "gamma0:5"), (nicf, "mod:3"), (CFKind.rosen(5), "mod:2"),
             (CFKind.rosen(5), "gamma0:2")], traj, 150, seed),
        "determinant": crosscheck_determinants(
            [reg, nicf, CFKind.alpha_cf(Fraction(3, 10))] + rosen, traj, 150, seed),
        "words": crosscheck_words([reg, nicf] + rosen, 50),
    }
