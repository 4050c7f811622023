"""Numerical periods of deformed quadric nets.

The integrand on the affine chart is ``eta(u) = C / prod_i q_i(1, u)^alpha``.
It converges on ``R^{LD}`` exactly when ``alpha > LD / (2n)``.

Monte Carlo draws come in fixed-size blocks. Each block is seeded from
``(seed, block index)``, so the result does not depend on how blocks are
spread over threads. Partial sums are combined with ``math.fsum``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._parallel import ordered_map
from .errors import DivergentExponent, IntegrationError, OutOfHalfPlane
from .quadrics import QuadricNet, no_real_points

SCHEMES = ("mc-cauchy", "grid")
BLOCK = 1 << 14


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


@dataclass(frozen=True)
class IntegrandSpec:
    """A positive-definite net, an exponent and a rational prefactor on one affine chart."""

    net: QuadricNet
    exponent: Fraction | float = Fraction(1)
    prefactor: Fraction = Fraction(1)
    chart: int = 0

    def __post_init__(self):
        if not 0 <= self.chart <= self.net.ambient_dim:
            raise IntegrationError(f"chart index {self.chart} out of range")
        for f in self.net.forms:
            if not no_real_points(f):
                raise IntegrationError(f"form {f.label or '?'} is not positive-definite; deform the net first")
        object.__setattr__(self, "prefactor", _frac(self.prefactor))
        if not isinstance(self.exponent, float):
            object.__setattr__(self, "exponent", _frac(self.exponent))
        mats = np.array([[[float(x) for x in row] for row in f.matrix.tolist()] for f in self.net.forms])
        object.__setattr__(self, "_mats", mats)

    @property
    def dim(self) -> int:
        return self.net.ambient_dim

    @property
    def threshold(self) -> Fraction:
        return Fraction(self.net.ambient_dim, 2 * self.net.n)

    def with_exponent(self, s) -> "IntegrandSpec":
        return IntegrandSpec(self.net, s, self.prefactor, self.chart)

    def log_q(self, u: np.ndarray) -> np.ndarray:
        """``log q_i`` at chart points ``u`` of shape ``(N, LD)``; result ``(N, n)``."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        full = np.insert(u, self.chart, 1.0, axis=1)
        q = np.einsum("na,iab,nb->ni", full, self._mats, full)
        return np.log(q)

    def log_eta(self, u: np.ndarray, exponent=None) -> np.ndarray:
        a = self.exponent if exponent is None else exponent
        a = float(a if isinstance(a, float) else _frac(a))
        return math.log(float(self.prefactor)) - a * self.log_q(u).sum(axis=1)


def eta_value(spec: IntegrandSpec, u: Sequence[float]) -> float:
    u = np.asarray(u, dtype=float)
    if u.shape != (spec.dim,):
        raise IntegrationError(f"expected a point with {spec.dim} coordinates, got shape {u.shape}")
    return float(np.exp(spec.log_eta(u[None, :])[0]))


def check_exponent(spec: IntegrandSpec, s, error=DivergentExponent) -> None:
    """Raise unless ``s > LD/(2n)`` (equivalently ``LD - 2 n s < 0``)."""
    s = _frac(s)
    if spec.dim - 2 * spec.net.n * s >= 0:
        raise error(s, spec.threshold)


@dataclass(frozen=True)
class IntegrationResult:
    value: float
    std_error: float
    samples: int
    seed: int
    scheme: str
    exponent: str = ""

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "std_error": self.std_error,
            "samples": self.samples,
            "seed": self.seed,
            "scheme": self.scheme,
            "exponent": self.exponent,
        }


# -- proposal ------------------------------------------------------------------------


def _width(spec: IntegrandSpec) -> float:
    logs = [0.5 * math.log(float(f.matrix[0, 0])) for f in spec.net.forms]
    return math.exp(sum(logs) / len(logs))


def _draw(spec: IntegrandSpec, n: int, seed: int, block: int) -> tuple[np.ndarray, np.ndarray]:
    """Points from a 50/50 mixture of product and spherical Cauchy, with log density."""
    d = spec.dim
    w = _width(spec)
    rng = np.random.default_rng(np.random.SeedSequence([seed, block]))
    pick = rng.random(n) < 0.5
    prod = w * np.tan(np.pi * (rng.random((n, d)) - 0.5))
    z = rng.standard_normal((n, d))
    g = np.abs(rng.standard_normal(n))
    sph = w * z / g[:, None]
    u = np.where(pick[:, None], prod, sph)
    r2 = (u / w) ** 2
    lp_prod = -d * math.log(math.pi * w) - np.log1p(r2).sum(axis=1)
    lp_sph = (
        math.lgamma((d + 1) / 2) - (d + 1) / 2 * math.log(math.pi) - d * math.log(w)
        - (d + 1) / 2 * np.log1p(r2.sum(axis=1))
    )
    lp = np.logaddexp(lp_prod, lp_sph) + math.log(0.5)
    return u, lp


def _blocks(samples: int) -> list[tuple[int, int]]:
    out = []
    start = 0
    b = 0
    while start < samples:
        n = min(BLOCK, samples - start)
        out.append((b, n))
        start += n
        b += 1
    return out


def _mc_moments(spec: IntegrandSpec, samples: int, seed: int, weight_fn, chunks: int | None = None):
    """Per-channel ``(sum w, sum w^2)`` over all blocks.

    ``weight_fn(u, log_p) -> (N, channels)`` array of importance weights.
    """
    if samples < 2:
        raise IntegrationError("need at least 2 samples")
    blocks = _blocks(samples)

    def run(block):
        b, n = block
        u, lp = _draw(spec, n, seed, b)
        w = weight_fn(u, lp)
        return [(math.fsum(w[:, c]), math.fsum(w[:, c] ** 2)) for c in range(w.shape[1])]

    if chunks is not None and chunks >= 1:
        groups = [blocks[i::chunks] for i in range(chunks)]
        parts = [p for grp in ordered_map(lambda g: [run(b) for b in g], groups) for p in grp]
    else:
        parts = ordered_map(run, blocks)
    channels = len(parts[0])
    out = []
    for c in range(channels):
        s1 = math.fsum(p[c][0] for p in parts)
        s2 = math.fsum(p[c][1] for p in parts)
        out.append((s1, s2))
    return out


def _stats(s1: float, s2: float, n: int) -> tuple[float, float]:
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / (n - 1)
    return mean, math.sqrt(var / n)


# -- grid ----------------------------------------------------------------------------


def _grid_sum(spec: IntegrandSpec, per_dim: int, channel_fn) -> np.ndarray:
    d = spec.dim
    w = _width(spec)
    t, wt = np.polynomial.legendre.leggauss(per_dim)
    x = w * np.tan(np.pi * t / 2)
    jac = wt * w * (np.pi / 2) / np.cos(np.pi * t / 2) ** 2
    total = None
    # stream over the leading coordinate to bound memory
    rest = np.array(np.meshgrid(*([x] * (d - 1)), indexing="ij")).reshape(d - 1, -1).T if d > 1 else np.zeros((1, 0))
    rest_j = np.prod(np.array(np.meshgrid(*([jac] * (d - 1)), indexing="ij")).reshape(d - 1, -1), axis=0) if d > 1 else np.ones(1)
    for x0, j0 in zip(x, jac):
        u = np.hstack([np.full((rest.shape[0], 1), x0), rest])
        vals = channel_fn(u) * (j0 * rest_j)[:, None]
        part = np.array([math.fsum(vals[:, c]) for c in range(vals.shape[1])])
        total = part if total is None else total + part
    return total


def _grid_points(samples: int, d: int) -> int:
    return min(256, max(4, int(round(samples ** (1.0 / d)))))


# -- public integration API ----------------------------------------------------------


def _integrate(spec, exponent, scheme, samples, seed, ks=(0,), chunks=None):
    if scheme not in SCHEMES:
        raise IntegrationError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    a = float(exponent if isinstance(exponent, float) else _frac(exponent))

    def channels(u, lp=None):
        lq = spec.log_q(u)
        L = lq.sum(axis=1)
        log_f = math.log(float(spec.prefactor)) - a * L
        base = np.exp(log_f - lp) if lp is not None else np.exp(log_f)
        cols = []
        for k in ks:
            cols.append(base if k == 0 else base * L ** k)
        return np.stack(cols, axis=1)

    if scheme == "mc-cauchy":
        mom = _mc_moments(spec, samples, seed, channels, chunks)
        return [_stats(s1, s2, samples) for s1, s2 in mom]
    per = _grid_points(samples, spec.dim)
    fine = _grid_sum(spec, per, channels)
    coarse = _grid_sum(spec, max(2, per // 2), channels)
    return [(float(f), float(abs(f - c))) for f, c in zip(fine, coarse)]


def integrate_eta(spec: IntegrandSpec, scheme: str = "mc-cauchy", samples: int = 100_000,
                  seed: int = 0, chunks: int | None = None) -> IntegrationResult:
    check_exponent(spec, spec.exponent)
    (value, err), = _integrate(spec, spec.exponent, scheme, samples, seed, chunks=chunks)
    return IntegrationResult(value, err, samples, seed, scheme, str(_frac(spec.exponent)))


def igusa_zeta(spec: IntegrandSpec, s, scheme: str = "mc-cauchy", samples: int = 100_000,
               seed: int = 0, chunks: int | None = None) -> IntegrationResult:
    """``I(s)`` for real ``s`` in the half-plane of convergence."""
    check_exponent(spec, s, OutOfHalfPlane)
    return integrate_eta(spec.with_exponent(s), scheme, samples, seed, chunks)


@dataclass(frozen=True)
class LaurentCoefficients:
    center: str
    terms: list[tuple[int, float, float]] = field(default_factory=list)

    def __getitem__(self, k: int) -> tuple[float, float]:
        for kk, v, e in self.terms:
            if kk == k:
                return v, e
        raise KeyError(k)

    def to_dict(self) -> dict:
        return {"center": self.center, "terms": [{"k": k, "value": v, "error": e} for k, v, e in self.terms]}


def laurent_coefficients(spec: IntegrandSpec, alpha, ks: Sequence[int] = (0, 1, 2),
                         samples: int = 100_000, seed: int = 0, scheme: str = "mc-cauchy",
                         chunks: int | None = None) -> LaurentCoefficients:
    """``gamma_k = ((-1)^k / k!) * integral of eta * log^k(prod q)``, expanded at ``alpha``."""
    if any(k < 0 for k in ks):
        raise IntegrationError("only k >= 0 is available inside the convergence half-plane")
    check_exponent(spec, alpha, OutOfHalfPlane)
    raw = _integrate(spec, alpha, scheme, samples, seed, tuple(ks), chunks)
    terms = []
    for k, (v, e) in zip(ks, raw):
        c = (-1) ** k / math.factorial(k)
        terms.append((k, c * v, abs(c) * e))
    return LaurentCoefficients(str(_frac(alpha)), terms)


def laurent_coefficient(spec: IntegrandSpec, alpha, k: int, samples: int = 100_000,
                        seed: int = 0, scheme: str = "mc-cauchy") -> tuple[float, float]:
    return laurent_coefficients(spec, alpha, (k,), samples, seed, scheme)[k]


def finite_difference(spec: IntegrandSpec, alpha, h, order: int, samples: int = 100_000,
                      seed: int = 0) -> tuple[float, float]:
    """Central difference of ``I(s)`` at ``alpha`` with common random numbers.

    ``order=1``: ``(I(a+h) - I(a-h)) / 2h``. ``order=2``: ``(I(a+h) - 2I(a) + I(a-h)) / h^2``.
    The error is the sample standard error of the per-point difference.
    """
    a, h = float(_frac(alpha)), float(_frac(h))
    for s in (alpha, _frac(alpha) - _frac(h)):
        check_exponent(spec, s, OutOfHalfPlane)
    if order == 1:
        coef = {a + h: 1 / (2 * h), a - h: -1 / (2 * h)}
    elif order == 2:
        coef = {a + h: 1 / h**2, a: -2 / h**2, a - h: 1 / h**2}
    else:
        raise IntegrationError("order must be 1 or 2")
    logC = math.log(float(spec.prefactor))

    def channel(u, lp):
        L = spec.log_q(u).sum(axis=1)
        w = sum(c * np.exp(logC - s * L - lp) for s, c in coef.items())
        return w[:, None]

    (s1, s2), = _mc_moments(spec, samples, seed, channel)
    return _stats(s1, s2, samples)


# -- oracles and tail behaviour ------------------------------------------------------


def closed_form_single_propagator(D: int, m, alpha) -> float:
    """``pi^{D/2} Gamma(alpha - D/2) / (Gamma(alpha) m^{2 alpha - D})``."""
    a = _frac(alpha)
    if a <= Fraction(D, 2):
        raise DivergentExponent(a, Fraction(D, 2))
    af, mf = float(a), float(_frac(m))
    return math.pi ** (D / 2) * math.gamma(af - D / 2) / (math.gamma(af) * mf ** (2 * af - D))


def tail_integral(spec: IntegrandSpec, R: float, directions: int = 256, nodes: int = 64, seed: int = 0) -> float:
    """``integral over |u| > R`` of eta, by radial quadrature along fixed random directions."""
    d = spec.dim
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x7A11]))
    theta = rng.standard_normal((directions, d))
    theta /= np.linalg.norm(theta, axis=1)[:, None]
    t, wt = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (t + 1)
    wt = 0.5 * wt
    r = R / t
    pts = (theta[:, None, :] * r[None, :, None]).reshape(-1, d)
    eta = np.exp(spec.log_eta(pts)).reshape(directions, nodes)
    radial = (eta * r ** (d - 1) * (R / t**2) * wt).sum(axis=1)
    area = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    return area * math.fsum(radial) / directions


def tail_exponent(spec: IntegrandSpec, radii: Sequence[float] | None = None, **kw) -> float:
    """Slope of ``log tail(R)`` against ``log R``; tends to ``LD - 2 n alpha``."""
    if radii is None:
        w = _width(spec)
        radii = [w * 10 ** (2 + 0.25 * i) for i in range(9)]
    logs = [math.log(tail_integral(spec, R, **kw)) for R in radii]
    slope, _ = np.polyfit(np.log(radii), logs, 1)
    return float(slope)
