"""Cut-and-paste classes of the quadric arrangement.

A :class:`MotiveClass` is a Laurent polynomial in the Lefschetz class ``L``
whose coefficients are integer polynomials in named abelian ``h^1`` symbols
(for the sunset only ``h1(Prym)`` occurs). Distinguished triangles are
shadowed by inclusion-exclusion; every application is logged in a
:class:`TriangleLedger` so the cone count of the construction stays visible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import DimensionTooSmall, MotiveError, UnknownDimension

PRYM = "h1(Prym)"

Monomial = tuple[str, ...]


@dataclass(frozen=True)
class ExoticTerm:
    symbol: str
    twist: int
    coeff: int
    dim: int | None


class MotiveClass:
    """Immutable element of ``Z[L, L^-1][h_1, h_2, ...]``."""

    __slots__ = ("_terms", "_dims")

    def __init__(self, terms: Mapping[tuple[Monomial, int], int] | None = None,
                 dims: Mapping[str, int | None] | None = None):
        clean: dict[tuple[Monomial, int], int] = {}
        for (mono, exp), c in (terms or {}).items():
            key = (tuple(sorted(mono)), int(exp))
            clean[key] = clean.get(key, 0) + int(c)
        self._terms = {k: v for k, v in sorted(clean.items()) if v != 0}
        used = {s for mono, _ in self._terms for s in mono}
        self._dims = {s: (dims or {}).get(s) for s in sorted(used)}

    # construction

    @classmethod
    def tate(cls, coeffs: Mapping[int, int] | Iterable[int]) -> "MotiveClass":
        if not isinstance(coeffs, Mapping):
            coeffs = dict(enumerate(coeffs))
        return cls({((), e): c for e, c in coeffs.items()})

    @classmethod
    def lefschetz(cls, power: int = 1) -> "MotiveClass":
        return cls({((), power): 1})

    @classmethod
    def exotic(cls, symbol: str, twist: int = 0, coeff: int = 1, dim: int | None = None) -> "MotiveClass":
        return cls({((symbol,), twist): coeff}, {symbol: dim})

    # inspection

    @property
    def terms(self) -> dict[tuple[Monomial, int], int]:
        return dict(self._terms)

    @property
    def dims(self) -> dict[str, int | None]:
        return dict(self._dims)

    def tate_part(self) -> dict[int, int]:
        return {e: c for (mono, e), c in self._terms.items() if not mono}

    def exotic_terms(self) -> list[ExoticTerm]:
        out = []
        for (mono, e), c in self._terms.items():
            if mono:
                dim = None
                if all(self._dims.get(s) is not None for s in mono):
                    dim = sum(self._dims[s] for s in mono)
                out.append(ExoticTerm("*".join(mono), e, c, dim))
        return out

    @property
    def is_tate(self) -> bool:
        return not any(mono for mono, _ in self._terms)

    def tate_coefficients(self) -> list[int]:
        """Dense coefficient list of the Tate part from lowest to highest power."""
        t = self.tate_part()
        if not t:
            return []
        lo, hi = min(t), max(t)
        return [t.get(e, 0) for e in range(lo, hi + 1)]

    def euler(self) -> int:
        """Euler characteristic: ``L -> 1`` and ``h1(A) -> -2 dim A``."""
        total = 0
        for (mono, _), c in self._terms.items():
            val = c
            for s in mono:
                d = self._dims.get(s)
                if d is None:
                    raise UnknownDimension(f"dimension of {s} is unknown")
                val *= -2 * d
            total += val
        return total

    # arithmetic

    def _merge_dims(self, other: "MotiveClass") -> dict:
        dims = dict(self._dims)
        for s, d in other._dims.items():
            if s in dims and dims[s] is not None and d is not None and dims[s] != d:
                raise MotiveError(f"conflicting dimensions for {s}: {dims[s]} vs {d}")
            if dims.get(s) is None:
                dims[s] = d
        return dims

    @staticmethod
    def _coerce(x) -> "MotiveClass":
        if isinstance(x, MotiveClass):
            return x
        if isinstance(x, int):
            return MotiveClass.tate({0: x})
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for k, v in other._terms.items():
            terms[k] = terms.get(k, 0) + v
        return MotiveClass(terms, self._merge_dims(other))

    __radd__ = __add__

    def __neg__(self):
        return MotiveClass({k: -v for k, v in self._terms.items()}, self._dims)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict = {}
        for (m1, e1), c1 in self._terms.items():
            for (m2, e2), c2 in other._terms.items():
                k = (tuple(sorted(m1 + m2)), e1 + e2)
                terms[k] = terms.get(k, 0) + c1 * c2
        return MotiveClass(terms, self._merge_dims(other))

    __rmul__ = __mul__

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        return f"MotiveClass({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for (mono, e), c in self._terms.items():
            base = "*".join(mono)
            lpow = "" if e == 0 else ("L" if e == 1 else f"L^{e}")
            body = "*".join(x for x in (base, lpow) if x)
            if not body:
                parts.append(str(c))
            elif c == 1:
                parts.append(body)
            elif c == -1:
                parts.append(f"-{body}")
            else:
                parts.append(f"{c}*{body}")
        return " + ".join(parts).replace("+ -", "- ")

    def to_dict(self) -> dict:
        try:
            chi = self.euler()
        except UnknownDimension:
            chi = None
        return {
            "tate": [[e, c] for e, c in sorted(self.tate_part().items())],
            "exotic": [
                {"symbol": t.symbol, "twist": t.twist, "coeff": t.coeff, "dim": t.dim}
                for t in self.exotic_terms()
            ],
            "euler": chi,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "MotiveClass":
        terms = {((), int(e)): int(c) for e, c in doc.get("tate", [])}
        dims = {}
        for t in doc.get("exotic", []):
            mono = tuple(t["symbol"].split("*"))
            terms[(mono, int(t["twist"]))] = terms.get((mono, int(t["twist"])), 0) + int(t["coeff"])
            if len(mono) == 1:
                dims[mono[0]] = t.get("dim")
        return cls(terms, dims)


# -- ledger ------------------------------------------------------------------------


@dataclass(frozen=True)
class Triangle:
    kind: str  # "MV" or "Gysin"
    slots: tuple[str, str, str]
    note: str = ""


@dataclass
class TriangleLedger:
    entries: list[Triangle] = field(default_factory=list)

    def record(self, kind: str, slots: tuple[str, str, str], note: str = "") -> None:
        if kind not in ("MV", "Gysin"):
            raise MotiveError(f"unknown triangle kind {kind!r}")
        self.entries.append(Triangle(kind, tuple(slots), note))

    @property
    def cone_count(self) -> int:
        return len(self.entries)

    def to_list(self) -> list[dict]:
        return [{"kind": t.kind, "slots": list(t.slots), "note": t.note} for t in self.entries]


# -- decomposition table -------------------------------------------------------------


def class_projective(N: int) -> MotiveClass:
    """``[P^N] = 1 + L + ... + L^N``."""
    if N < 0:
        raise MotiveError("projective dimension must be >= 0")
    return MotiveClass.tate([1] * (N + 1))


def class_odd_quadric(D: int) -> MotiveClass:
    """Smooth quadric hypersurface in ``P^{2D}`` (odd dimension ``2D - 1``)."""
    if D < 1:
        raise DimensionTooSmall("need D >= 1")
    return MotiveClass.tate([1] * (2 * D))


def class_two_quadrics(D: int) -> MotiveClass:
    """Smooth complete intersection of two quadrics in ``P^{2D}``."""
    if D < 2:
        raise DimensionTooSmall("two quadrics in P^2D form a complete intersection only for D >= 2")
    coeffs = {i: 1 for i in range(0, D - 1)}
    coeffs[D - 1] = 2 * D + 2
    coeffs.update({i: 1 for i in range(D, 2 * D - 1)})
    return MotiveClass.tate(coeffs)


def default_prym_dim(D: int) -> int | None:
    """Prym dimension when it is forced: for ``D = 2`` the discriminant is a
    smooth plane quintic (genus 6), so the Prym has dimension 5."""
    return 5 if D == 2 else None


def class_three_quadrics(D: int, prym_dim: int | None = None, twist: int | None = None) -> MotiveClass:
    """Smooth complete intersection of three quadrics in ``P^{2D}``.

    Tate part ``1 + ... + L^{2D-3}`` plus ``h1(Prym) * L^twist``; the twist
    defaults to ``D - 2`` (middle cohomology of a ``(2D-3)``-fold).
    """
    if D < 2:
        raise DimensionTooSmall("three quadrics in P^2D need D >= 2")
    t = D - 2 if twist is None else twist
    if prym_dim is None:
        prym_dim = default_prym_dim(D)
    return MotiveClass.tate([1] * (2 * D - 2)) + MotiveClass.exotic(PRYM, t, 1, prym_dim)


# -- scissor operations -------------------------------------------------------------


def union_class(quadrics: list[MotiveClass], pairs: list[MotiveClass] = (),
                triples: list[MotiveClass] = (), ledger: TriangleLedger | None = None) -> MotiveClass:
    """Inclusion-exclusion for a union of up to three closed sets."""
    k = len(quadrics)
    if k == 0 or k > 3:
        raise MotiveError("union_class handles one to three sets")
    if len(pairs) != k * (k - 1) // 2 or len(triples) != (1 if k == 3 else 0):
        raise MotiveError("pairs/triples do not match the number of sets")
    total = sum(quadrics, MotiveClass()) - sum(pairs, MotiveClass()) + sum(triples, MotiveClass())
    if ledger is not None:
        for i in range(k - 1):
            ledger.record("MV", ("X", "U+V", "U&V"), f"inclusion-exclusion step {i + 1} of {k - 1}")
    return total


def complement_class(ambient: MotiveClass, closed: MotiveClass,
                     ledger: TriangleLedger | None = None, label: str = "Z") -> MotiveClass:
    """``[X \\ Z] = [X] - [Z]``."""
    if ledger is not None:
        ledger.record("Gysin", (label, "X", f"X-{label}"))
    return ambient - closed


def dual_class(c: MotiveClass, ambient_dim: int) -> MotiveClass:
    """Poincare-type duality on classes of dimension ``ambient_dim``.

    ``L^k -> L^{N-k}``; a monomial of ``h`` first-cohomology symbols at twist
    ``t`` sits in degree ``2t + h`` and goes to twist ``N - t - h``. Shifts are
    not tracked at class level.
    """
    terms = {}
    for (mono, e), coeff in c.terms.items():
        terms[(mono, ambient_dim - e - len(mono))] = coeff
    return MotiveClass(terms, c.dims)


# -- the sunset pipeline -----------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    kind: str  # "NotMixedTate" | "TateType" | "Indeterminate"
    witness: str | None = None
    mass_condition_checked: bool = False
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "witness": self.witness,
            "mass_condition_checked": self.mass_condition_checked,
            "reason": self.reason,
        }


@dataclass
class PipelineResult:
    motive: MotiveClass
    ledger: TriangleLedger
    verdict: Verdict
    pieces: dict[str, MotiveClass]

    def to_dict(self) -> dict:
        return {
            "class": self.motive.to_dict(),
            "class_str": str(self.motive),
            "ledger": {"cone_count": self.ledger.cone_count, "triangles": self.ledger.to_list()},
            "verdict": self.verdict.to_dict(),
            "pieces": {k: str(v) for k, v in self.pieces.items()},
        }


def mass_condition(masses) -> bool:
    """``m3^2 != m1^2 + m2^2`` for masses in (loop, loop, tree) order."""
    m1, m2, m3 = (Fraction(str(m)) for m in masses)
    return m3 * m3 != m1 * m1 + m2 * m2


def verdict_for(motive: MotiveClass, masses) -> Verdict:
    exotic = [t for t in motive.exotic_terms() if t.coeff != 0]
    if not exotic:
        return Verdict("TateType", reason="no exotic summand survives")
    if not mass_condition(masses):
        return Verdict(
            "Indeterminate",
            mass_condition_checked=True,
            reason="m3^2 = m1^2 + m2^2 lies outside the range where Prym nontriviality is known",
        )
    return Verdict(
        "NotMixedTate",
        witness=exotic[0].symbol,
        mass_condition_checked=True,
        reason="odd cohomology of the triple intersection is carried by an abelian variety",
    )


def sunset_pipeline(D: int, masses, prym_dim: int | None = None, twist: int | None = None) -> PipelineResult:
    """Class of ``P^{2D}`` minus the three deformed sunset quadrics.

    Mirrors the triangle structure: three (combined) Gysin triangles and two
    Mayer-Vietoris triangles, five cones in total.
    """
    if D < 2:
        raise DimensionTooSmall(f"the sunset decomposition needs D >= 2, got D = {D}")
    if prym_dim is None:
        prym_dim = default_prym_dim(D)
    ledger = TriangleLedger()
    P = class_projective(2 * D)
    Q = class_odd_quadric(D)
    Q2 = class_two_quadrics(D)
    Q123 = class_three_quadrics(D, prym_dim, twist)

    # closed-cover additivity for Q1 u Q2 (class identity, no triangle)
    Q12_union = Q + Q - Q2
    U = P - Q12_union
    V = P - Q
    ledger.record("Gysin", ("Q1uQ2 + Q3", "P + P", "U + V"), "1st and 2nd Gysin triangles, summed")
    U13 = P - Q2
    U23 = P - Q2
    ledger.record("Gysin", ("Q13 + Q23", "P + P", "U13 + U23"), "3rd and 4th Gysin triangles, summed")
    P_minus_Q123 = complement_class(P, Q123, ledger, "Q123")
    # U13 n U23 = U u V and U13 u U23 = P - Q123
    U_or_V = U13 + U23 - P_minus_Q123
    ledger.record("MV", ("P-Q123", "U13 + U23", "UuV"))
    complement = U + V - U_or_V
    ledger.record("MV", ("UuV", "U + V", "P-Q"))
    if ledger.cone_count > 5:
        raise MotiveError(f"cone budget exceeded: {ledger.cone_count} > 5")

    pieces = {
        "P": P, "Q_i": Q, "Q_i&Q_j": Q2, "Q_1&Q_2&Q_3": Q123,
        "U": U, "V": V, "U13": U13, "U23": U23, "P-Q123": P_minus_Q123, "UuV": U_or_V,
    }
    return PipelineResult(complement, ledger, verdict_for(complement, masses), pieces)
