"""Complete contractions of the factor alphabet {g^-1, gbar^-1, R, Rperp, ho, Hg}.

A :class:`ContractionTerm` is a list of factors together with a perfect
matching on their slots. Every pair must join one slot of an inverse metric
(``g-1`` or ``gbar-1``) with one slot of a non-inverse factor of the same sort;
under this discipline an inverse metric is an edge between two lower slots,
which is how terms are canonicalized and enumerated.

For codimension 2, ``ho`` and ``Hg`` carry an implicit normal index that is not
part of the slot structure. It is contracted between consecutive ``ho``/``Hg``
factors of the canonical form (in the orthonormal normal frame).
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import EvaluationError, ExpressionSyntaxError, StructuralError
from .geometry import PointFrame

T, N = "T", "N"
MERGE_TOL = 1e-12


class FactorKind(enum.Enum):
    G_INV = ("g-1", (T, T), True, -2)
    GBAR_INV = ("gbar-1", (N, N), True, -2)
    R = ("R", (T, T, T, T), False, 2)
    RPERP = ("Rperp", (T, T, N, N), False, 2)
    HO = ("ho", (T, T), False, 1)
    HG = ("Hg", (T, T), False, 1)

    def __init__(self, text, sorts, inverse, weight):
        self.text = text
        self.sorts = sorts
        self.inverse = inverse
        self.factor_weight = weight

    @property
    def nslots(self) -> int:
        return len(self.sorts)

    @property
    def order(self) -> int:
        return _LAYOUT.index(self)

    @classmethod
    def from_text(cls, text: str) -> "FactorKind":
        for kind in cls:
            if kind.text == text:
                return kind
        raise KeyError(text)


_LAYOUT = [FactorKind.G_INV, FactorKind.GBAR_INV, FactorKind.R, FactorKind.RPERP, FactorKind.HO, FactorKind.HG]

# slot permutations that leave each factor unchanged without a sign
SYMMETRIES = {
    FactorKind.R: ((0, 1, 2, 3), (2, 3, 0, 1), (1, 0, 3, 2), (3, 2, 1, 0)),
    FactorKind.RPERP: ((0, 1, 2, 3), (1, 0, 3, 2)),
    FactorKind.HO: ((0, 1), (1, 0)),
    FactorKind.HG: ((0, 1), (1, 0)),
}


@dataclass(frozen=True)
class ContractionTerm:
    factors: tuple
    pairing: tuple  # sorted tuple of sorted (slot, slot) pairs

    def __post_init__(self):
        factors = tuple(self.factors)
        pairs = tuple(sorted(tuple(sorted(p)) for p in self.pairing))
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "pairing", pairs)
        owner = self.slot_owner
        nslots = len(owner)
        seen = set()
        for a, b in pairs:
            if a == b:
                raise StructuralError(f"slot {a} is paired with itself")
            for s in (a, b):
                if not 0 <= s < nslots:
                    raise StructuralError(f"slot {s} out of range (term has {nslots} slots)")
                if s in seen:
                    raise StructuralError(f"slot {s} is used by two pairs")
                seen.add(s)
            (fa, sa), (fb, sb) = owner[a], owner[b]
            ka, kb = factors[fa], factors[fb]
            if ka.sorts[sa] != kb.sorts[sb]:
                raise StructuralError(f"pair ({a},{b}) joins a tangent slot with a normal slot")
            if ka.inverse == kb.inverse:
                which = "inverse metrics" if ka.inverse else "non-inverse factors"
                raise StructuralError(f"pair ({a},{b}) joins two {which}; pairs must raise with an inverse metric")
        if len(seen) != nslots:
            missing = sorted(set(range(nslots)) - seen)
            raise StructuralError(f"slots {missing} are not contracted")

    @property
    def slot_owner(self) -> tuple[tuple[int, int], ...]:
        return tuple((i, s) for i, k in enumerate(self.factors) for s in range(k.nslots))

    def count(self, kind: FactorKind) -> int:
        return sum(1 for k in self.factors if k is kind)

    def __str__(self):
        return format_term(self)


def weight(term: ContractionTerm) -> int:
    """Scaling exponent under ``gbar -> t^2 gbar``."""
    return sum(k.factor_weight for k in term.factors)


# ---------------------------------------------------------------------------
# canonical form


def _lower_structure(term: ContractionTerm):
    """Non-inverse factor kinds and the edges the inverse metrics draw between their slots."""
    owner = term.slot_owner
    lower = [i for i, k in enumerate(term.factors) if not k.inverse]
    pos = {f: j for j, f in enumerate(lower)}
    partner = {}
    for a, b in term.pairing:
        partner[a] = b
        partner[b] = a
    edges = []
    start = 0
    for i, k in enumerate(term.factors):
        if k.inverse:
            ends = []
            for s in range(2):
                f, slot = owner[partner[start + s]]
                ends.append((pos[f], slot))
            edges.append(tuple(sorted(ends)))
        start += k.nslots
    return [term.factors[i] for i in lower], edges


def _candidates(kinds):
    """All relabelings: permutations within each kind and symmetry choices per factor."""
    groups = {}
    for j, k in enumerate(kinds):
        groups.setdefault(k, []).append(j)
    ordered = sorted(groups, key=lambda k: k.order)
    per_kind = []
    for k in ordered:
        idx = groups[k]
        opts = []
        for perm in itertools.permutations(idx):
            for syms in itertools.product(SYMMETRIES[k], repeat=len(idx)):
                opts.append((perm, syms))
        per_kind.append(opts)
    layout = [j for k in ordered for j in groups[k]]
    for combo in itertools.product(*per_kind):
        new_pos = {}
        sym_of = {}
        slot = 0
        for opts in combo:
            perm, syms = opts
            for old, sym in zip(perm, syms):
                new_pos[old] = slot
                sym_of[old] = sym
                slot += 1
        yield new_pos, sym_of, layout


@lru_cache(maxsize=65536)
def _canonical(term: ContractionTerm):
    kinds, edges = _lower_structure(term)
    best = None
    best_kinds = None
    for new_pos, sym_of, _ in _candidates(kinds):
        mapped = []
        for e in edges:
            ends = tuple(sorted((new_pos[f], sym_of[f][s]) for f, s in e))
            mapped.append(ends)
        key = tuple(sorted(mapped))
        if best is None or key < best:
            best = key
            best_kinds = [None] * len(kinds)
            for old, new in new_pos.items():
                best_kinds[new] = kinds[old]
    if best is None:  # no lower factors at all
        best, best_kinds = (), []
    return tuple(best_kinds), best


def canonical_key(term: ContractionTerm):
    """Hashable invariant: equal for terms that agree up to admissible relabeling."""
    return _canonical(term)


def _order_key(key):
    kinds, edges = key
    return (len(kinds), tuple(k.order for k in kinds), edges)


def _from_structure(kinds: Sequence[FactorKind], edges) -> ContractionTerm:
    """Rebuild a term: inverse metrics first (one per edge, in edge order), then ``kinds``."""
    sorts = []
    for e in edges:
        f, s = e[0]
        sorts.append(kinds[f].sorts[s])
    inv = [FactorKind.G_INV if s == T else FactorKind.GBAR_INV for s in sorts]
    order = sorted(range(len(edges)), key=lambda i: (inv[i].order, edges[i]))
    factors = [inv[i] for i in order] + list(kinds)
    base = []
    start = 2 * len(edges)
    for k in kinds:
        base.append(start)
        start += k.nslots
    pairing = []
    for slot0, i in enumerate(order):
        for s, (f, fs) in enumerate(edges[i]):
            pairing.append((2 * slot0 + s, base[f] + fs))
    return ContractionTerm(tuple(factors), tuple(pairing))


def canonical_form(term: ContractionTerm) -> ContractionTerm:
    kinds, edges = canonical_key(term)
    return _from_structure(kinds, list(edges))


# ---------------------------------------------------------------------------
# enumeration


def _matchings(items: list):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i, other in enumerate(rest):
        for m in _matchings(rest[:i] + rest[i + 1:]):
            yield [(first, other)] + m


def enumerate_terms(target_weight: int, m: int = 2, codim: int = 1) -> list[ContractionTerm]:
    """All canonical terms of the given weight, without duplicates.

    Weight is ``-(2 #R + 2 #Rperp + #ho + #Hg)`` under the pairing discipline,
    so positive targets give an empty list. The result does not depend on ``m``
    (identities that hold only in particular dimensions are not applied).
    """
    if codim not in (1, 2):
        raise ValueError("codim must be 1 or 2")
    if m < 1:
        raise ValueError("m must be positive")
    budget = -int(target_weight)
    if budget < 0:
        return []
    seen = {}
    max_rp = budget // 2 if codim == 2 else 0
    for n_r in range(budget // 2 + 1):
        for n_rp in range(max_rp + 1):
            rest = budget - 2 * n_r - 2 * n_rp
            if rest < 0:
                continue
            for n_ho in range(rest + 1):
                kinds = (
                    [FactorKind.R] * n_r + [FactorKind.RPERP] * n_rp
                    + [FactorKind.HO] * n_ho + [FactorKind.HG] * (rest - n_ho)
                )
                tslots = [(f, s) for f, k in enumerate(kinds) for s in range(k.nslots) if k.sorts[s] == T]
                nslots = [(f, s) for f, k in enumerate(kinds) for s in range(k.nslots) if k.sorts[s] == N]
                if len(tslots) % 2 or len(nslots) % 2:
                    continue
                for mt in _matchings(tslots):
                    for mn in _matchings(nslots):
                        edges = [tuple(sorted(e)) for e in mt + mn]
                        term = _from_structure(kinds, edges)
                        key = canonical_key(term)
                        if key not in seen:
                            seen[key] = _from_structure(list(key[0]), list(key[1]))
    return [seen[k] for k in sorted(seen, key=_order_key)]


# ---------------------------------------------------------------------------
# evaluation

_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def evaluate_term(term: ContractionTerm, frame: PointFrame) -> np.ndarray:
    """Numeric value of the contraction on ``frame`` (batched over frame points)."""
    term = canonical_form(term)
    codim = frame.codim
    uses_normal = any(N in k.sorts for k in term.factors)
    if uses_normal and codim < 2:
        raise EvaluationError("term has normal slots but the frame has codimension 1")
    hidden = [i for i, k in enumerate(term.factors) if k in (FactorKind.HO, FactorKind.HG)]
    if codim == 2 and len(hidden) % 2:
        raise EvaluationError("odd number of ho/Hg factors cannot contract their normal index")
    nslot = len(term.slot_owner)
    if nslot // 2 + len(hidden) // 2 > len(_LETTERS):
        raise EvaluationError("term too large to evaluate")

    letter = [None] * nslot
    for n_pair, (a, b) in enumerate(term.pairing):
        letter[a] = letter[b] = _LETTERS[n_pair]
    extra = iter(_LETTERS[len(term.pairing):])
    hidden_letter = {}
    if codim == 2:
        for i in range(0, len(hidden), 2):
            c = next(extra)
            hidden_letter[hidden[i]] = hidden_letter[hidden[i + 1]] = c

    ho = frame.ho
    hg = frame.H[..., :, None, None] * frame.g[..., None, :, :]
    eye = np.eye(codim)
    operands, subs = [], []
    start = 0
    for i, k in enumerate(term.factors):
        idx = "".join(letter[start:start + k.nslots])
        start += k.nslots
        if k is FactorKind.G_INV:
            arr = frame.ginv
        elif k is FactorKind.GBAR_INV:
            arr = eye
        elif k is FactorKind.R:
            arr = frame.R
        elif k is FactorKind.RPERP:
            arr = frame.Rperp
        else:
            arr = ho if k is FactorKind.HO else hg
            if codim == 1:
                arr = arr[..., 0, :, :]
            else:
                idx = hidden_letter[i] + idx
        operands.append(arr)
        subs.append(idx if arr is eye else "..." + idx)
    if not operands:
        return np.ones(frame.batch_shape)
    spec = ",".join(subs) + "->..."
    return np.einsum(spec, *operands, optimize="greedy")


# ---------------------------------------------------------------------------
# linear combinations


class ContractionSum:
    """Real linear combination of terms, merged by canonical form."""

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[tuple[float, ContractionTerm]] = ()):
        merged: dict = {}
        for coef, term in terms:
            key = canonical_key(term)
            merged[key] = merged.get(key, 0.0) + float(coef)
        self.terms = tuple(
            (c, _from_structure(list(k[0]), list(k[1])))
            for k, c in sorted(merged.items(), key=lambda kv: _order_key(kv[0]))
            if abs(c) > MERGE_TOL
        )

    @classmethod
    def of(cls, term: ContractionTerm, coef: float = 1.0) -> "ContractionSum":
        return cls([(coef, term)])

    def __add__(self, other):
        return ContractionSum(self.terms + _as_sum(other).terms)

    def __sub__(self, other):
        return self + (-1.0) * _as_sum(other)

    def __neg__(self):
        return (-1.0) * self

    def __mul__(self, c):
        return ContractionSum((c * a, t) for a, t in self.terms)

    __rmul__ = __mul__

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        if not isinstance(other, ContractionSum):
            return NotImplemented
        diff = self - other
        return len(diff) == 0

    def __hash__(self):
        return hash(tuple((round(c, 12), canonical_key(t)) for c, t in self.terms))

    def weights(self) -> set[int]:
        return {weight(t) for _, t in self.terms}

    def evaluate(self, frame: PointFrame) -> np.ndarray:
        total = np.zeros(frame.batch_shape)
        for c, t in self.terms:
            total = total + c * evaluate_term(t, frame)
        return total

    __call__ = evaluate

    def __str__(self):
        return format_sum(self)

    def __repr__(self):
        return f"ContractionSum({format_sum(self)!r})"


def _as_sum(x) -> ContractionSum:
    if isinstance(x, ContractionSum):
        return x
    if isinstance(x, ContractionTerm):
        return ContractionSum.of(x)
    raise TypeError(f"cannot combine ContractionSum with {type(x).__name__}")


# ---------------------------------------------------------------------------
# text syntax

_TOK = re.compile(
    r"\s*(?:(?P<factor>gbar-1|g-1|Rperp|R|ho|Hg)\s*\((?P<idx>[^)]*)\)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<op>[-+*/]))"
)


def _tokens(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if not text[pos:].strip():
            break
        m = _TOK.match(text, pos)
        if m is None:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExpressionSyntaxError(f"unexpected input {text[bad:bad + 8]!r}", bad, text)
        kind = "factor" if m.group("factor") else m.lastgroup
        start = m.start(kind)
        out.append((kind, m, start))
        pos = m.end()
    return out


def _term_from_factors(factors: list[tuple[str, list[str], int]], text: str) -> ContractionTerm:
    kinds = []
    where: dict[str, list[int]] = {}
    slot = 0
    for name, letters, pos in factors:
        kind = FactorKind.from_text(name)
        if len(letters) != kind.nslots:
            raise ExpressionSyntaxError(
                f"{name} takes {kind.nslots} indices, got {len(letters)}", pos, text
            )
        kinds.append(kind)
        for letter in letters:
            where.setdefault(letter, []).append(slot)
            slot += 1
    pairing = []
    for letter, slots in where.items():
        if len(slots) != 2:
            raise StructuralError(f"index {letter!r} appears {len(slots)} times; contractions need exactly 2")
        pairing.append(tuple(slots))
    return ContractionTerm(tuple(kinds), tuple(pairing))


def parse_term(text: str) -> ContractionTerm:
    """Parse ``"g-1(a,b) g-1(c,d) ho(a,c) ho(b,d)"``."""
    factors = []
    for kind, m, pos in _tokens(text):
        if kind != "factor":
            raise ExpressionSyntaxError(f"unexpected {m.group(0).strip()!r} in a term", pos, text)
        letters = [s.strip() for s in m.group("idx").split(",")] if m.group("idx").strip() else []
        for s in letters:
            if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", s):
                raise ExpressionSyntaxError(f"bad index name {s!r}", pos, text)
        factors.append((m.group("factor"), letters, pos))
    return _term_from_factors(factors, text)


def parse_sum(text: str) -> ContractionSum:
    """Parse a linear combination, e.g. ``"0.5*g-1(a,c) g-1(b,d) R(a,b,c,d) - ho(...)..."``.

    A bare number stands for the empty contraction (the constant 1).
    """
    toks = _tokens(text)
    if not toks:
        raise ExpressionSyntaxError("empty contraction sum", 0, text)
    terms = []
    i = 0
    sign = 1.0
    expect_term = True
    while i < len(toks):
        kind, m, pos = toks[i]
        if kind == "op" and m.group("op") in "+-" and expect_term:
            if m.group("op") == "-":
                sign = -sign
            i += 1
            continue
        if not expect_term:
            if kind == "op" and m.group("op") in "+-":
                expect_term = True
                sign = 1.0
                continue
            raise ExpressionSyntaxError(f"expected '+' or '-', found {m.group(0).strip()!r}", pos, text)
        coef = 1.0
        factors = []
        while i < len(toks):
            kind, m, pos = toks[i]
            if kind == "num":
                coef *= float(m.group("num"))
            elif kind == "op" and m.group("op") == "*":
                pass
            elif kind == "op" and m.group("op") == "/":
                if i + 1 >= len(toks) or toks[i + 1][0] != "num":
                    raise ExpressionSyntaxError("'/' must be followed by a number", pos, text)
                coef /= float(toks[i + 1][1].group("num"))
                i += 1
            elif kind == "factor":
                letters = [s.strip() for s in m.group("idx").split(",")] if m.group("idx").strip() else []
                for s in letters:
                    if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", s):
                        raise ExpressionSyntaxError(f"bad index name {s!r}", pos, text)
                factors.append((m.group("factor"), letters, pos))
            else:
                break
            i += 1
        terms.append((sign * coef, _term_from_factors(factors, text)))
        expect_term = False
    if expect_term:
        raise ExpressionSyntaxError("expected a term", len(text), text)
    return ContractionSum(terms)


def format_term(term: ContractionTerm) -> str:
    letter = {}
    names = iter(_LETTERS)
    for a, b in term.pairing:
        letter[a] = letter[b] = next(names)
    parts = []
    slot = 0
    for k in term.factors:
        idx = ",".join(letter[s] for s in range(slot, slot + k.nslots))
        parts.append(f"{k.text}({idx})")
        slot += k.nslots
    return " ".join(parts) if parts else "1"


def format_sum(total: ContractionSum) -> str:
    if not total.terms:
        return "0"
    out = []
    for n, (c, t) in enumerate(total.terms):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = format_term(t)
        if body == "1":
            text = repr(mag)
        else:
            text = body if mag == 1.0 else f"{mag!r}*{body}"
        if n == 0:
            out.append(("-" if c < 0 else "") + text)
        else:
            out.append(f" {sign} {text}")
    return "".join(out)


# ---------------------------------------------------------------------------
# named sums


def scalar_curvature_sum() -> ContractionSum:
    return parse_sum("g-1(a,c) g-1(b,d) R(a,b,c,d)")


def gauss_curvature_sum() -> ContractionSum:
    """``K`` for surfaces (half the scalar curvature)."""
    return 0.5 * scalar_curvature_sum()


def ho_norm_sq_sum() -> ContractionSum:
    return parse_sum("g-1(a,b) g-1(c,d) ho(a,c) ho(b,d)")


def mean_curvature_sq_sum(m: int = 2) -> ContractionSum:
    """``|H|^2`` as ``(1/m) |Hg|^2``."""
    return (1.0 / m) * parse_sum("g-1(a,b) g-1(c,d) Hg(a,c) Hg(b,d)")


def mean_trace_sum() -> ContractionSum:
    """``g^ij (Hg)_ij = m H`` (codimension 1)."""
    return parse_sum("g-1(a,b) Hg(a,b)")


def conformal_willmore_sum() -> ContractionSum:
    return 0.5 * ho_norm_sq_sum() + gauss_curvature_sum()


def normal_curvature_sq_sum() -> ContractionSum:
    """``|Rperp|^2``, the Rperp class of weight -4."""
    return parse_sum("g-1(a,c) g-1(b,d) gbar-1(p,r) gbar-1(q,s) Rperp(a,b,p,q) Rperp(c,d,r,s)")


# ---------------------------------------------------------------------------
# random frames and numeric identity testing


def _sym(rng, shape):
    a = rng.uniform(-1.0, 1.0, shape)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def random_frames(count: int, m: int = 2, codim: int = 1, rng=None, kind: str = "geometric") -> PointFrame:
    """A batch of frames with the correct symmetries.

    ``geometric``: ``R`` and ``Rperp`` follow from ``h`` by the flat-ambient
    Gauss and Ricci equations. ``generic``: ``R`` is an independent algebraic
    curvature tensor (sum of Kulkarni-Nomizu products) and ``Rperp`` an
    independent tensor antisymmetric in both pairs.
    """
    rng = np.random.default_rng(rng)
    b = (count,)
    g = np.eye(m) + 0.1 * _sym(rng, b + (m, m))
    ginv = np.linalg.inv(g)
    h = _sym(rng, b + (codim, m, m))
    H = np.einsum("nij,naij->na", ginv, h) / m
    ho = h - H[..., None, None] * g[:, None]
    if kind == "geometric":
        R = np.einsum("naik,najl->nijkl", h, h) - np.einsum("nail,najk->nijkl", h, h)
        if codim == 2:
            Rperp = np.einsum("naik,nkl,nbjl->nijab", h, ginv, h) - np.einsum("nbik,nkl,najl->nijab", h, ginv, h)
        else:
            Rperp = np.zeros(b + (m, m, 1, 1))
    elif kind == "generic":
        R = np.zeros(b + (m,) * 4)
        for _ in range(3):
            A, B = _sym(rng, b + (m, m)), _sym(rng, b + (m, m))
            R += kulkarni_nomizu(A, B)
        if codim == 2:
            A = rng.uniform(-1, 1, b + (m, m))
            A = A - np.swapaxes(A, -1, -2)
            eps = np.array([[0.0, 1.0], [-1.0, 0.0]])
            Rperp = A[..., :, :, None, None] * eps
        else:
            Rperp = np.zeros(b + (m, m, 1, 1))
    else:
        raise ValueError(f"unknown frame kind {kind!r}")
    return PointFrame(g=g, ginv=ginv, h=h, H=H, ho=ho, R=R, Rperp=Rperp, vol=np.sqrt(np.linalg.det(g)))


def random_frame(m: int = 2, codim: int = 1, rng=None, kind: str = "geometric") -> PointFrame:
    return random_frames(1, m, codim, rng, kind).take(0)


def kulkarni_nomizu(A, B):
    """``(A o B)_ijkl = A_ik B_jl + A_jl B_ik - A_il B_jk - A_jk B_il``."""
    e = np.einsum
    return (
        e("...ik,...jl->...ijkl", A, B) + e("...jl,...ik->...ijkl", A, B)
        - e("...il,...jk->...ijkl", A, B) - e("...jk,...il->...ijkl", A, B)
    )


def sums_equal_numeric(
    A: ContractionSum,
    B: ContractionSum,
    trials: int = 20,
    tol: float = 1e-9,
    *,
    m: int = 2,
    codim: int = 1,
    seed=0,
    kind: str = "geometric",
) -> bool:
    """Randomized identity test; ``False`` is certain, ``True`` is probabilistic."""
    frames = random_frames(int(trials), m, codim, np.random.default_rng(seed), kind)
    diff = _as_sum(A).evaluate(frames) - _as_sum(B).evaluate(frames)
    return bool(np.max(np.abs(diff)) < tol)
