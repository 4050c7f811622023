"""Truncated Laurent series in ``(s - c)`` and the polar-part projection."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Mapping

from .errors import SeriesFormatError, TruncationExceeded
from .graph import parse_rational


def _num(x):
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float):
        return x
    if isinstance(x, str):
        try:
            return parse_rational(x)
        except Exception as exc:  # noqa: BLE001
            raise SeriesFormatError(f"bad coefficient {x!r}") from exc
    raise SeriesFormatError(f"unsupported coefficient type {type(x).__name__}")


def _min_order(*orders):
    known = [o for o in orders if o is not None]
    return min(known) if known else None


class LaurentSeries:
    """``sum_k a_k (s - c)^k`` known exactly below ``order``.

    ``order=None`` means the stored coefficients are the whole series.
    Coefficients are Fractions, or floats for numeric data. Instances are
    immutable.
    """

    __slots__ = ("center", "order", "_c")

    def __init__(self, coeffs: Mapping[int, object] | None = None, center=1, order: int | None = None):
        self.center = Fraction(center) if not isinstance(center, str) else parse_rational(center)
        self.order = order
        c = {}
        for k, v in (coeffs or {}).items():
            k = int(k)
            if order is not None and k >= order:
                continue
            v = _num(v)
            if v != 0:
                c[k] = v
        self._c = dict(sorted(c.items()))

    # constructors

    @classmethod
    def from_list(cls, coeffs, low: int = 0, center=1, order: int | None = None) -> "LaurentSeries":
        return cls({low + i: a for i, a in enumerate(coeffs)}, center, order)

    @classmethod
    def constant(cls, a, center=1, order: int | None = None) -> "LaurentSeries":
        return cls({0: a}, center, order)

    @classmethod
    def zero(cls, center=1) -> "LaurentSeries":
        return cls({}, center)

    @classmethod
    def one(cls, center=1) -> "LaurentSeries":
        return cls({0: 1}, center)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "LaurentSeries":
        """Parse ``{"center", "pole_order", "coeffs"[, "order"]}``; coeffs start at ``-pole_order``."""
        try:
            P = int(doc.get("pole_order", 0))
            coeffs = list(doc["coeffs"])
            center = doc.get("center", "1")
            order = doc.get("order")
        except (KeyError, TypeError, ValueError) as exc:
            raise SeriesFormatError(f"malformed series: {exc}") from exc
        if P < 0:
            raise SeriesFormatError("pole_order must be >= 0")
        if order is not None and int(order) < -P:
            raise SeriesFormatError("order below the first coefficient")
        s = cls.from_list(coeffs, -P, center, None if order is None else int(order))
        if P > 0 and coeffs and _num(coeffs[0]) == 0:
            raise SeriesFormatError("leading polar coefficient must be nonzero")
        return s

    # inspection

    @property
    def coeffs(self) -> dict[int, object]:
        return dict(self._c)

    @property
    def valuation(self) -> int | None:
        return next(iter(self._c), None)

    @property
    def pole_order(self) -> int:
        v = self.valuation
        return 0 if v is None or v >= 0 else -v

    @property
    def is_exact(self) -> bool:
        return self.order is None

    def coeff(self, k: int):
        if self.order is not None and k >= self.order:
            raise TruncationExceeded(f"coefficient of (s-c)^{k} is beyond truncation order {self.order}")
        return self._c.get(k, 0)

    def is_polar(self) -> bool:
        """Only negative powers, all of them known."""
        return (self.order is None or self.order >= 0) and all(k < 0 for k in self._c)

    def is_regular(self) -> bool:
        return all(k >= 0 for k in self._c)

    def value_at_center(self):
        if not self.is_regular():
            raise SeriesFormatError("series has a pole at its center")
        return self.coeff(0)

    def evaluate(self, s):
        """Evaluate the stored terms at ``s`` (truncated sum)."""
        x = s - self.center
        return sum(a * x ** k for k, a in self._c.items())

    def truncate(self, order: int) -> "LaurentSeries":
        return LaurentSeries(self._c, self.center, _min_order(order, self.order))

    # arithmetic

    def _check(self, other: "LaurentSeries") -> None:
        if self.center != other.center:
            raise SeriesFormatError(f"center mismatch: {self.center} vs {other.center}")

    def _lift(self, x) -> "LaurentSeries":
        if isinstance(x, LaurentSeries):
            self._check(x)
            return x
        if isinstance(x, (int, float, Fraction)):
            return LaurentSeries({0: x}, self.center)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        c = dict(self._c)
        for k, v in other._c.items():
            c[k] = c.get(k, 0) + v
        return LaurentSeries(c, self.center, _min_order(self.order, other.order))

    __radd__ = __add__

    def __neg__(self):
        return LaurentSeries({k: -v for k, v in self._c.items()}, self.center, self.order)

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        orders = []
        # a missing valuation means the known part is zero, so the product is
        # zero up to the other factor's reach
        vs, vo = self.valuation, other.valuation
        if self.order is not None:
            orders.append(self.order + (vo if vo is not None else (other.order if other.order is not None else 0)))
        if other.order is not None:
            orders.append(other.order + (vs if vs is not None else (self.order if self.order is not None else 0)))
        order = min(orders) if orders else None
        c: dict[int, object] = {}
        for i, a in self._c.items():
            for j, b in other._c.items():
                k = i + j
                if order is None or k < order:
                    c[k] = c.get(k, 0) + a * b
        return LaurentSeries(c, self.center, order)

    __rmul__ = __mul__

    def inverse(self, default_order: int = 8) -> "LaurentSeries":
        """Multiplicative inverse; an exact non-monomial input is truncated at ``default_order``."""
        v = self.valuation
        if v is None:
            raise ZeroDivisionError("inverse of zero series")
        a0 = self._c[v]
        if len(self._c) == 1 and self.order is None:
            return LaurentSeries({-v: 1 / a0 if isinstance(a0, float) else Fraction(1) / a0}, self.center)
        rel = (self.order - v) if self.order is not None else default_order
        order = -v + rel
        inv0 = 1 / a0 if isinstance(a0, float) else Fraction(1) / a0
        b = [inv0]
        for n in range(1, rel):
            acc = sum(self._c.get(v + i, 0) * b[n - i] for i in range(1, n + 1))
            b.append(-acc * inv0)
        return LaurentSeries({-v + n: bn for n, bn in enumerate(b)}, self.center, order)

    def __truediv__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = LaurentSeries.one(self.center)
        for _ in range(n):
            out = out * self
        return out

    # comparison

    def __eq__(self, other):
        if not isinstance(other, LaurentSeries):
            other = self._lift(other) if isinstance(other, (int, float, Fraction)) else None
            if other is None:
                return NotImplemented
        return self.center == other.center and self.order == other.order and self._c == other._c

    def __hash__(self):
        return hash((self.center, self.order, tuple(self._c.items())))

    def agrees_with(self, other: "LaurentSeries", tol: float = 0.0) -> bool:
        """Coefficientwise equality up to the common truncation order."""
        self._check(other)
        order = _min_order(self.order, other.order)
        keys = set(self._c) | set(other._c)
        for k in keys:
            if order is not None and k >= order:
                continue
            d = self._c.get(k, 0) - other._c.get(k, 0)
            if tol == 0.0 and d != 0:
                return False
            if tol and abs(d) > tol * max(1.0, abs(float(self._c.get(k, 0)))):
                return False
        return True

    def to_dict(self) -> dict:
        P = self.pole_order
        hi = max(self._c) if self._c else 0
        if self.order is not None:
            hi = self.order - 1
        coeffs = [_fmt(self._c.get(k, 0)) for k in range(-P, hi + 1)]
        out = {"center": _fmt(self.center), "pole_order": P, "coeffs": coeffs}
        if self.order is not None:
            out["order"] = self.order
        return out

    def __repr__(self):
        return f"LaurentSeries({self})"

    def __str__(self):
        if not self._c:
            body = "0"
        else:
            body = " + ".join(f"({_fmt(a)})*(s-{_fmt(self.center)})^{k}" for k, a in self._c.items())
        if self.order is not None:
            body += f" + O((s-{_fmt(self.center)})^{self.order})"
        return body


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else str(x)
    return str(x)


def rota_baxter_T(f: LaurentSeries) -> LaurentSeries:
    """Polar-part projection (minimal subtraction)."""
    if f.order is not None and f.order < 0:
        raise TruncationExceeded(f"polar part needs coefficients up to (s-c)^-1, series known below {f.order}")
    return LaurentSeries({k: a for k, a in f.coeffs.items() if k < 0}, f.center)


def regular_part(f: LaurentSeries) -> LaurentSeries:
    """``(1 - T) f``."""
    return LaurentSeries({k: a for k, a in f.coeffs.items() if k >= 0}, f.center, f.order)
