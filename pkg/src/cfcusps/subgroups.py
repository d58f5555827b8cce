"""Finite-index subgroups of PSL(2,Z) and the Hecke groups through their coset actions.

A subgroup ``H`` is handled through the right action of the generators on
the cosets ``H\\G``.  ``S`` is the translation ``z -> z + lambda_m`` (``T`` for
the modular group) and ``I`` is ``z -> -1/z``.  Words are sequences of
syllables ``(gen, exp)`` read left to right as a product, so
``apply(label, w)`` is the label of ``H g w`` when ``label`` is that of ``H g``.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import os
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .numerics import AlgebraicReal, DomainError, certified_floor, minimal_polynomial

DEFAULT_INDEX_CAP = 10 ** 6
CACHE_ENV = "CFCUSPS_CACHE_DIR"
CACHE_VERSION = 1


# ---------------------------------------------------------------------------
# the ring Z[lambda_m] / (N)


class QuotientRing:
    """``Z[lambda_m]/(N)``: coefficient tuples mod N reduced by the minimal polynomial."""

    def __init__(self, m: int, modulus: int):
        if modulus < 1:
            raise ValueError("modulus must be positive")
        self.m = m
        self.N = modulus
        self.f = minimal_polynomial(m)
        self.deg = len(self.f) - 1
        self.zero = (0,) * self.deg
        self.one = ((1 % modulus),) + (0,) * (self.deg - 1)
        lam = [0] * self.deg
        if self.deg == 1:
            lam[0] = 1 % modulus
        else:
            lam[1] = 1
        self.lam = tuple(lam)

    def add(self, a, b):
        N = self.N
        return tuple((x + y) % N for x, y in zip(a, b))

    def neg(self, a):
        N = self.N
        return tuple((-x) % N for x in a)

    def sub(self, a, b):
        N = self.N
        return tuple((x - y) % N for x, y in zip(a, b))

    def mul(self, a, b):
        D, N = self.deg, self.N
        if D == 1:
            return ((a[0] * b[0]) % N,)
        out = [0] * (2 * D - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        f = self.f
        for k in range(2 * D - 2, D - 1, -1):
            t = out[k]
            if t:
                s = k - D
                for i in range(D):
                    out[s + i] -= t * f[i]
        return tuple(v % N for v in out[:D])

    def from_int(self, n: int):
        return ((n % self.N),) + (0,) * (self.deg - 1)

    def reduce(self, x):
        """Image of an integer, integral Fraction or integral AlgebraicReal."""
        if isinstance(x, AlgebraicReal):
            if x.m != self.m and not x.is_rational():
                raise DomainError(f"element of Q(lambda_{x.m}) reduced in a ring for m={self.m}")
            if x.is_rational():
                x = x.rational_value()
            else:
                cs = x.int_coeffs()
                return tuple(c % self.N for c in cs) + (0,) * (self.deg - len(cs))
        if isinstance(x, Fraction):
            if x.denominator != 1:
                raise DomainError(f"{x} is not integral")
            x = x.numerator
        if isinstance(x, int):
            return self.from_int(x)
        raise TypeError(f"cannot reduce {type(x).__name__}")

    def elements(self):
        for t in itertools.product(range(self.N), repeat=self.deg):
            yield tuple(t)

    def units(self):
        els = list(self.elements())
        one = self.one
        return [a for a in els if any(self.mul(a, b) == one for b in els)]

    def format(self, a) -> str:
        terms = []
        for i, c in enumerate(a):
            if not c:
                continue
            mono = "" if i == 0 else ("lam" if i == 1 else f"lam^{i}")
            if not mono:
                terms.append(str(c))
            else:
                terms.append(mono if c == 1 else f"{c}*{mono}")
        return "+".join(terms) if terms else "0"


def _mat_mul(R: QuotientRing, A, B):
    a, b, c, d = A
    e, f, g, h = B
    return (R.add(R.mul(a, e), R.mul(b, g)), R.add(R.mul(a, f), R.mul(b, h)),
            R.add(R.mul(c, e), R.mul(d, g)), R.add(R.mul(c, f), R.mul(d, h)))


def proj_key(R: QuotientRing, M) -> tuple:
    """Canonical representative of ``{M, -M}``: the smaller flattened entry tuple."""
    k = tuple(itertools.chain.from_iterable(M))
    nk = tuple(itertools.chain.from_iterable(R.neg(e) for e in M))
    return min(k, nk)


def generator_images(R: QuotientRing):
    S = (R.one, R.lam, R.zero, R.one)
    I = (R.zero, R.neg(R.one), R.one, R.zero)
    return S, I


# ---------------------------------------------------------------------------
# specs


@dataclass(frozen=True)
class CongruenceSpec:
    """Principal congruence subgroup of level ``modulus`` in the Hecke group ``G_m``.

    ``m = 3`` is PSL(2, Z).
    """
    m: int
    modulus: int

    def __post_init__(self):
        if self.m < 3:
            raise DomainError("Hecke index m must be >= 3")
        if self.modulus < 2:
            raise ValueError("congruence modulus must be at least 2")

    def canonical(self) -> dict:
        return {"type": "congruence", "m": self.m, "modulus": self.modulus}


@dataclass(frozen=True)
class PermutationSpec:
    """Subgroup given by its transitive right action on ``0 .. n-1``; point 0 is ``H``."""
    m: int
    perm_S: Tuple[int, ...]
    perm_I: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "perm_S", tuple(int(v) for v in self.perm_S))
        object.__setattr__(self, "perm_I", tuple(int(v) for v in self.perm_I))
        _validate_action(self.m, self.perm_S, self.perm_I)

    @property
    def degree(self) -> int:
        return len(self.perm_S)

    def canonical(self) -> dict:
        return {"type": "permutation", "m": self.m, "S": list(self.perm_S), "I": list(self.perm_I)}


def _validate_action(m, pS, pI):
    n = len(pS)
    if n == 0 or len(pI) != n:
        raise ValueError("permutations must be nonempty and of equal degree")
    for p in (pS, pI):
        if sorted(p) != list(range(n)):
            raise ValueError("generator images must be permutations of 0..n-1")
    if any(pI[pI[i]] != i for i in range(n)):
        raise ValueError("the image of I must be an involution")
    for i in range(n):
        j = i
        for _ in range(m):
            j = pI[pS[j]]
        if j != i:
            raise ValueError(f"(S I)^{m} does not act trivially")
    seen = {0}
    todo = [0]
    while todo:
        i = todo.pop()
        for j in (pS[i], pI[i]):
            if j not in seen:
                seen.add(j)
                todo.append(j)
    if len(seen) != n:
        raise ValueError("permutation action is not transitive")


def gamma0_spec(N: int, m: int = 3) -> PermutationSpec:
    """``Gamma_0(N)`` of ``G_m``: stabilizer of the line through ``(0, 1)`` in the row action.

    Rows ``(c, d)`` over ``Z[lambda]/(N)`` are taken up to unit multiples; the
    permutation action is read off from the orbit of ``(0, 1)``.
    """
    R = QuotientRing(m, N)
    units = R.units()

    def canon(v):
        return min((R.mul(u, v[0]), R.mul(u, v[1])) for u in units)

    S, I = generator_images(R)

    def act(v, M):
        c, d = v
        a, b, cc, dd = M
        return canon((R.add(R.mul(c, a), R.mul(d, cc)), R.add(R.mul(c, b), R.mul(d, dd))))

    start = canon((R.zero, R.one))
    index = {start: 0}
    order = [start]
    q = deque([start])
    while q:
        v = q.popleft()
        for M in (S, I):
            w = act(v, M)
            if w not in index:
                index[w] = len(order)
                order.append(w)
                q.append(w)
    pS = [index[act(v, S)] for v in order]
    pI = [index[act(v, I)] for v in order]
    return PermutationSpec(m, tuple(pS), tuple(pI))


def parse_spec(text: str, m: int = 3) -> CongruenceSpec | PermutationSpec:
    """``mod:N``, ``gamma0:N`` or ``perm:PATH`` (JSON with keys ``S`` and ``I``)."""
    kind, _, arg = text.strip().partition(":")
    if not arg:
        raise ValueError(f"cannot parse subgroup spec {text!r}")
    if kind == "mod":
        return CongruenceSpec(m, int(arg))
    if kind == "gamma0":
        return gamma0_spec(int(arg), m)
    if kind == "perm":
        with open(arg) as fh:
            data = json.load(fh)
        return PermutationSpec(int(data.get("m", m)), tuple(data["S"]), tuple(data["I"]))
    raise ValueError(f"cannot parse subgroup spec {text!r}")


def parse_group(text: str) -> int:
    """``modular`` -> 3, ``hecke:m`` -> m."""
    text = text.strip()
    if text == "modular":
        return 3
    name, _, arg = text.partition(":")
    if name == "hecke" and arg:
        m = int(arg)
        if m < 3:
            raise DomainError("Hecke index m must be >= 3")
        return m
    raise ValueError(f"cannot parse group {text!r}")


# ---------------------------------------------------------------------------
# words


def normalize_word(word) -> Tuple[Tuple[str, int], ...]:
    """Accepts syllables ``(gen, exp)`` or letters ``"S"``, ``"s"`` (= S^-1), ``"I"``."""
    out = []
    for item in word:
        if isinstance(item, str):
            if item == "S":
                g, e = "S", 1
            elif item in ("s", "S^-1", "S-"):
                g, e = "S", -1
            elif item == "I":
                g, e = "I", 1
            else:
                raise ValueError(f"unknown generator letter {item!r}")
        else:
            g, e = item
            if g not in ("S", "I"):
                raise ValueError(f"unknown generator {g!r}")
        if out and out[-1][0] == g:
            e += out[-1][1]
            out.pop()
        if g == "I":
            e %= 2
        if e:
            out.append((g, e))
    return tuple(out)


def invert_word(word) -> Tuple[Tuple[str, int], ...]:
    return tuple((g, -e if g == "S" else e) for g, e in reversed(normalize_word(word)))


# ---------------------------------------------------------------------------
# coset tables


class CosetTable:
    """Labels of ``H\\G`` with the right actions of ``S`` and ``I``."""

    def __init__(self, spec, m, perm_S, perm_I, parents, ring=None, keys=None):
        self.spec = spec
        self.m = m
        self.perm_S = list(perm_S)
        self.perm_I = list(perm_I)
        self.index = len(self.perm_S)
        self.parents = parents
        self.ring = ring
        self.keys = keys
        self.lookup = {k: i for i, k in enumerate(keys)} if keys is not None else None
        # cycles of S, for O(1) powers
        self.cycle_of = [-1] * self.index
        self.cycle_pos = [0] * self.index
        self.cycles: List[List[int]] = []
        for i in range(self.index):
            if self.cycle_of[i] >= 0:
                continue
            cyc = []
            j = i
            while self.cycle_of[j] < 0:
                self.cycle_of[j] = len(self.cycles)
                self.cycle_pos[j] = len(cyc)
                cyc.append(j)
                j = self.perm_S[j]
            self.cycles.append(cyc)
        self._words: Dict[int, tuple] = {}

    def __repr__(self):
        return f"CosetTable(m={self.m}, index={self.index})"

    def spow(self, label: int, k: int) -> int:
        cyc = self.cycles[self.cycle_of[label]]
        return cyc[(self.cycle_pos[label] + k) % len(cyc)]

    def apply(self, label: int, word) -> int:
        if not 0 <= label < self.index:
            raise IndexError(f"label {label} out of range for index {self.index}")
        pI = self.perm_I
        for g, e in normalize_word(word):
            if g == "S":
                label = self.spow(label, e)
            elif e % 2:
                label = pI[label]
        return label

    def word(self, label: int) -> Tuple[Tuple[str, int], ...]:
        """A word ``w`` with ``H w`` the coset of ``label``."""
        w = self._words.get(label)
        if w is None:
            letters = []
            j = label
            while j != 0:
                j, g = self.parents[j]
                letters.append(g)
            w = normalize_word(reversed(letters))
            self._words[label] = w
        return w

    def has_residues(self) -> bool:
        return self.lookup is not None

    def label_of_residue(self, M) -> int:
        key = proj_key(self.ring, M)
        try:
            return self.lookup[key]
        except KeyError:
            raise ValueError("matrix is not in the image of the group") from None

    def label_of_matrix(self, M) -> int:
        """Label of ``H M`` for a matrix ``((a, b), (c, d))`` of the group."""
        (a, b), (c, d) = M
        if self.lookup is not None:
            R = self.ring
            return self.label_of_residue((R.reduce(a), R.reduce(b), R.reduce(c), R.reduce(d)))
        word, _ = decompose(M, self.m)
        return self.apply(0, word)

    def residue(self, label: int):
        if self.keys is None:
            raise TypeError("permutation tables carry no residues")
        k = self.keys[label]
        D = self.ring.deg
        return tuple(k[i * D:(i + 1) * D] for i in range(4))

    def to_json(self) -> dict:
        d = {
            "version": CACHE_VERSION,
            "spec": self.spec.canonical(),
            "m": self.m,
            "S": self.perm_S,
            "I": self.perm_I,
            "parents": [list(p) if p is not None else None for p in self.parents],
        }
        if self.keys is not None:
            d["keys"] = [list(k) for k in self.keys]
        return d

    @classmethod
    def from_json(cls, spec, d: dict) -> "CosetTable":
        if d.get("version") != CACHE_VERSION or d.get("spec") != spec.canonical():
            raise ValueError("cache entry does not match the requested spec")
        parents = [tuple(p) if p is not None else None for p in d["parents"]]
        keys = [tuple(k) for k in d["keys"]] if "keys" in d else None
        ring = QuotientRing(spec.m, spec.modulus) if isinstance(spec, CongruenceSpec) else None
        return cls(spec, d["m"], d["S"], d["I"], parents, ring, keys)


def spec_hash(spec) -> str:
    text = json.dumps(spec.canonical(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _bfs_congruence(spec: CongruenceSpec, cap: int) -> CosetTable:
    R = QuotientRing(spec.m, spec.modulus)
    S, I = generator_images(R)
    ident = (R.one, R.zero, R.zero, R.one)
    k0 = proj_key(R, ident)
    lookup = {k0: 0}
    keys = [k0]
    mats = [ident]
    parents: list = [None]
    pS: list = [None]
    pI: list = [None]
    i = 0
    while i < len(mats):
        g = mats[i]
        for gen, M, perm in (("S", S, pS), ("I", I, pI)):
            h = _mat_mul(R, g, M)
            k = proj_key(R, h)
            j = lookup.get(k)
            if j is None:
                j = len(keys)
                if j >= cap:
                    raise OverflowError(f"coset enumeration exceeded the cap of {cap} labels")
                lookup[k] = j
                keys.append(k)
                mats.append(h)
                parents.append((i, gen))
                pS.append(None)
                pI.append(None)
            perm[i] = j
        i += 1
    return CosetTable(spec, spec.m, pS, pI, parents, R, keys)


def _bfs_parents(pS, pI):
    parents: list = [None] * len(pS)
    seen = {0}
    q = deque([0])
    while q:
        i = q.popleft()
        for gen, p in (("S", pS), ("I", pI)):
            j = p[i]
            if j not in seen:
                seen.add(j)
                parents[j] = (i, gen)
                q.append(j)
    return parents


def build_coset_table(spec, cap: int = DEFAULT_INDEX_CAP, cache_dir: Optional[str] = None) -> CosetTable:
    """Coset table of ``spec``; cached as JSON under ``cache_dir`` or ``$CFCUSPS_CACHE_DIR``."""
    cache_dir = cache_dir or os.environ.get(CACHE_ENV)
    path = None
    if cache_dir:
        path = os.path.join(cache_dir, f"cosets-{spec_hash(spec)}.json")
        if os.path.exists(path):
            with open(path) as fh:
                return CosetTable.from_json(spec, json.load(fh))
    if isinstance(spec, CongruenceSpec):
        table = _bfs_congruence(spec, cap)
    elif isinstance(spec, PermutationSpec):
        if spec.degree > cap:
            raise OverflowError(f"permutation degree exceeds the cap of {cap} labels")
        table = CosetTable(spec, spec.m, spec.perm_S, spec.perm_I, _bfs_parents(spec.perm_S, spec.perm_I))
    else:
        raise TypeError(f"not a subgroup spec: {spec!r}")
    if path:
        save_table(table, path)
    return table


def save_table(table: CosetTable, path: str):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(table.to_json(), fh, sort_keys=True, separators=(",", ":"))
    os.replace(tmp, path)


def coset_apply(table: CosetTable, label: int, word) -> int:
    return table.apply(label, word)


# ---------------------------------------------------------------------------
# cusps


@dataclass
class CuspTable:
    point: str                # "inf" or "0"
    class_of: List[int]       # label -> cusp id
    classes: List[List[int]]  # cusp id -> labels
    widths: List[int]

    @property
    def count(self) -> int:
        return len(self.classes)


def _normalize_point(p) -> str:
    if p in ("inf", "oo", "∞", float("inf")):
        return "inf"
    if p in ("0", 0):
        return "0"
    raise ValueError(f"cusp relation point must be inf or 0, got {p!r}")


def cusp_partition(table: CosetTable, p="inf") -> CuspTable:
    """Classes of the relation "sends p to the same H-cusp".

    Ids are those of the cusps of H: class ``j`` for ``0`` holds the labels
    whose coset carries ``0`` to the cusp that class ``j`` for ``inf`` carries
    ``inf`` to.
    """
    p = _normalize_point(p)
    n = table.index
    inf_id = [-1] * n
    order = sorted(range(len(table.cycles)), key=lambda c: min(table.cycles[c]))
    rank = {c: r for r, c in enumerate(order)}
    for lab in range(n):
        inf_id[lab] = rank[table.cycle_of[lab]]
    if p == "inf":
        classes = [sorted(table.cycles[c]) for c in order]
        return CuspTable("inf", inf_id, classes, [len(c) for c in classes])
    pI = table.perm_I
    zero_id = [inf_id[pI[lab]] for lab in range(n)]
    classes = [[] for _ in order]
    for lab in range(n):
        classes[zero_id[lab]].append(lab)
    return CuspTable("0", zero_id, classes, [len(c) for c in classes])


def cusp_representative(table: CosetTable, cusp_id: int, cusps: CuspTable) -> str:
    """Text for a representative cusp ``a/c`` of a ``inf`` class (residues mod N if known)."""
    lab = cusps.classes[cusp_id][0]
    if table.has_residues():
        a, _, c, _ = table.residue(lab)
        R = table.ring
        return f"{R.format(a)}/{R.format(c)} mod {R.N}"
    w = table.word(lab)
    if not w:
        return "inf"
    return "word " + " ".join(f"{g}^{e}" for g, e in w) + " . inf"


# ---------------------------------------------------------------------------
# conjugation by I


def conjugate_spec(spec):
    """Spec of ``I H I``."""
    if isinstance(spec, CongruenceSpec):
        return spec  # principal congruence subgroups are normal
    pS, pI = spec.perm_S, spec.perm_I
    # I H I g  <->  H I g : same action, base point moved to the coset H I
    base = pI[0]
    new = {base: 0}
    order = [base]
    q = deque([base])
    while q:
        i = q.popleft()
        for p in (pS, pI):
            j = p[i]
            if j not in new:
                new[j] = len(order)
                order.append(j)
                q.append(j)
    S2 = tuple(new[pS[i]] for i in order)
    I2 = tuple(new[pI[i]] for i in order)
    return PermutationSpec(spec.m, S2, I2)


def conjugate_table(tableH: CosetTable, cap: int = DEFAULT_INDEX_CAP) -> CosetTable:
    return build_coset_table(conjugate_spec(tableH.spec), cap=cap)


@dataclass
class IotaTransport:
    label_map: List[int]      # label of I H I g  ->  label of H I g
    cusp_map: List[int]       # cusp id of I H I  ->  cusp id of H


def iota_transport(tableH: CosetTable, tableC: CosetTable) -> IotaTransport:
    """Bijection of cusps of ``I H I`` onto cusps of ``H`` induced by ``p -> I p``."""
    if tableH.index != tableC.index or tableH.m != tableC.m:
        raise ValueError("tables are not of conjugate subgroups (index or group differ)")
    base = tableH.perm_I[0]
    label_map = [tableH.apply(base, tableC.word(c)) for c in range(tableC.index)]
    if sorted(label_map) != list(range(tableH.index)):
        raise ValueError("tables are not of conjugate subgroups")
    cH = cusp_partition(tableH, "inf")
    cC = cusp_partition(tableC, "inf")
    cusp_map = [-1] * cC.count
    for c in range(tableC.index):
        j, h = cC.class_of[c], cH.class_of[label_map[c]]
        if cusp_map[j] == -1:
            cusp_map[j] = h
        elif cusp_map[j] != h:
            raise ValueError("label map does not respect cusp classes")
    return IotaTransport(label_map, cusp_map)


# ---------------------------------------------------------------------------
# decomposition into generators and classification of cusps


def _nearest(a, c, m):
    """Nearest integer to ``a / (lambda c)``."""
    if m == 3:
        return certified_floor((2 * a + c) / (2 * c))
    return certified_floor(a / (AlgebraicReal.lam(m) * c) + Fraction(1, 2))


def _as_ring_elem(x, m):
    if isinstance(x, AlgebraicReal):
        if x.m != m and not x.is_rational():
            raise DomainError(f"element of Q(lambda_{x.m}) used with m={m}")
        if not x.is_rational():
            return x
        x = x.rational_value()
    if m == 3:
        return Fraction(x)
    return AlgebraicReal(m, [x])


def _left_reduce(a, c, m, max_steps, extra=None):
    """Euclid-like reduction ``(a, c) -> (+-1, 0)`` by left ``S^-k`` then ``I``.

    ``extra`` is a second column carried along.  Returns the shifts ``k``.
    """
    lam = 1 if m == 3 else AlgebraicReal.lam(m)
    ks = []
    while c != 0:
        k = _nearest(a, c, m)
        ks.append(k)
        a, c = -c, a - (k * lam) * c
        if extra is not None:
            b, d = extra
            extra = (-d, b - (k * lam) * d)
        if len(ks) > max_steps:
            raise ValueError("not coprime: reduction does not terminate")
    if not (a == 1 or a == -1):
        raise ValueError("not coprime")
    return ks, (1 if a == 1 else -1), extra


def _shift_word(ks):
    w = []
    for k in ks:
        w.append(("S", k))
        w.append(("I", 1))
    return normalize_word(w)


def reduce_column(a, c, m: int, max_steps: int = 100000):
    """Word ``w`` with ``w . inf = a/c`` (``w`` is a group element with first column ``+-(a, c)``).

    Raises ``ValueError("not coprime")`` if ``(a, c)`` is not the first column of
    a group element.
    """
    ks, sgn, _ = _left_reduce(_as_ring_elem(a, m), _as_ring_elem(c, m), m, max_steps)
    return _shift_word(ks), sgn


def decompose(M, m: int, max_steps: int = 100000):
    """``(w, n)`` with ``M = w S^n`` projectively."""
    (a, b), (c, d) = M
    e = lambda v: _as_ring_elem(v, m)  # noqa: E731
    ks, sgn, (x, y) = _left_reduce(e(a), e(c), m, max_steps, extra=(e(b), e(d)))
    if y != sgn:
        raise ValueError("matrix does not have determinant 1")
    t = x * sgn
    if m != 3:
        t = t / AlgebraicReal.lam(m)
        if not t.is_rational():
            raise ValueError("matrix is not in the group")
        t = t.rational_value()
    if Fraction(t).denominator != 1:
        raise ValueError("matrix is not in the group")
    n = int(t)
    return normalize_word(list(_shift_word(ks)) + [("S", n)]), n


def classify_fraction(p, q, table: CosetTable, cusps: Optional[CuspTable] = None, completion=None) -> int:
    """Cusp id of ``H`` containing ``p/q``.

    ``completion`` is a second column ``(r, s)`` with ``p s - r q = +-1``; with
    it and a congruence table the class is found by reduction and lookup,
    otherwise by decomposing the column into generators.
    """
    if cusps is None:
        cusps = cusp_partition(table, "inf")
    if completion is not None and table.has_residues():
        r, s = completion
        R = table.ring
        rp, rq, rr, rs = R.reduce(p), R.reduce(q), R.reduce(r), R.reduce(s)
        det = R.sub(R.mul(rp, rs), R.mul(rr, rq))
        if det == R.neg(R.one) and det != R.one:
            rr, rs = R.neg(rr), R.neg(rs)
        elif det != R.one:
            raise ValueError("not coprime: completion does not give determinant 1")
        return cusps.class_of[table.label_of_residue((rp, rr, rq, rs))]
    word, _ = reduce_column(p, q, table.m)
    return cusps.class_of[table.apply(0, word)]
