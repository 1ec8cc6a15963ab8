"""Geometry of warped products over one-coordinate bases.

The spaces handled here are products base x fiber carrying the metric
``g = g_base + f(t)^2 g_fiber``, where the base metric reduces to a single
coordinate t (a circle, an interval with Neumann ends, or the latitude
coordinate of a round sphere) and the fiber is a homogeneous space with a
closed-form Laplace spectrum.  Everything in this module is exact
evaluation of closed forms; discretization lives in :mod:`warplab.sturm`
and :mod:`warplab.oracle`.
"""

from __future__ import annotations

import enum
import functools
import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, InvariantViolation

__all__ = [
    "BaseKind",
    "BaseSpec",
    "FiberKind",
    "FiberSpec",
    "FiberMode",
    "WarpFamily",
    "WarpSpec",
    "WarpedProduct",
    "MeanCurvature",
    "ComparisonConstants",
    "fiber_eigenvalue",
    "scalar_curvature",
    "mean_curvature_data",
    "comparison_constants",
]

# Below this, sin(t/a) is treated as an exact zero of the latitude weight
# and the regularized limit of (w'/w) f' is used instead.
_ENDPOINT_EPS = 1e-9


class BaseKind(enum.Enum):
    CIRCLE = "circle"
    INTERVAL = "interval"
    SPHERE = "sphere"


@dataclass(frozen=True)
class BaseSpec:
    """One-coordinate base manifold: length, weight density, curvature.

    The weight density w(t) turns the base Laplacian into
    ``(1/w) d/dt (w du/dt)``.  Circles and Neumann intervals have w == 1;
    the latitude reduction of a round m-sphere of radius a has
    ``w(t) = sin(t/a)**(m-1)`` on [0, pi*a], vanishing to first order in
    sin at both endpoints.
    """

    kind: BaseKind
    length: float
    dim: int = 1

    def __post_init__(self) -> None:
        if not self.length > 0:
            raise InvariantViolation(f"base length must be positive, got {self.length}")
        if self.kind is BaseKind.SPHERE:
            if self.dim < 2:
                raise InvariantViolation("sphere latitude base needs dim >= 2")
        elif self.dim != 1:
            raise InvariantViolation(f"{self.kind.value} base is one-dimensional")

    @classmethod
    def circle(cls, circumference: float) -> "BaseSpec":
        return cls(BaseKind.CIRCLE, circumference)

    @classmethod
    def interval(cls, length: float) -> "BaseSpec":
        return cls(BaseKind.INTERVAL, length)

    @classmethod
    def sphere_latitude(cls, dim: int, radius: float) -> "BaseSpec":
        return cls(BaseKind.SPHERE, math.pi * radius, dim)

    @property
    def periodic(self) -> bool:
        return self.kind is BaseKind.CIRCLE

    @property
    def radius(self) -> float:
        if self.kind is not BaseKind.SPHERE:
            raise ConfigurationError("radius is defined for sphere latitude bases only")
        return self.length / math.pi

    def weight(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind is BaseKind.SPHERE:
            return np.sin(t / self.radius) ** (self.dim - 1)
        return np.ones_like(t)

    def weight_dlog(self, t: np.ndarray) -> np.ndarray:
        """w'/w at interior points.  Diverges at sphere endpoints; callers on
        staggered grids never evaluate there (see ``WarpedProduct.warp_laplacian``
        for the regularized product with f')."""
        t = np.asarray(t, dtype=float)
        if self.kind is BaseKind.SPHERE:
            a = self.radius
            return ((self.dim - 1) / a) * (np.cos(t / a) / np.sin(t / a))
        return np.zeros_like(t)

    def scalar_curvature(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind is BaseKind.SPHERE:
            a = self.radius
            return np.full_like(t, self.dim * (self.dim - 1) / a**2)
        return np.zeros_like(t)


class FiberKind(enum.Enum):
    SPHERE = "sphere"
    TORUS = "torus"
    CIRCLE = "circle"


class FiberMode(NamedTuple):
    value: float
    multiplicity: int


def _comb(n: int, r: int) -> int:
    if r < 0 or n < 0 or r > n:
        return 0
    return math.comb(n, r)


@functools.lru_cache(maxsize=None)
def _torus_modes(lengths: tuple[float, ...], upto: int) -> tuple[FiberMode, ...]:
    """Distinct Laplace eigenvalues of a flat torus with the given side
    lengths, ascending, with lattice-point multiplicities."""
    dual = tuple((2.0 * math.pi / ell) ** 2 for ell in lengths)
    k_max = 4
    while True:
        values = sorted(
            sum(d * k * k for d, k in zip(dual, ks))
            for ks in itertools.product(range(-k_max, k_max + 1), repeat=len(lengths))
        )
        # Any lattice point outside the box has value >= min(dual)*(k_max+1)^2,
        # so modes strictly below that cutoff are complete.
        cutoff = min(dual) * (k_max + 1) ** 2
        grouped: list[list[float]] = []
        for v in values:
            if grouped and abs(v - grouped[-1][0]) <= 1e-9 * (1.0 + v):
                grouped[-1][1] += 1
            else:
                grouped.append([v, 1])
        complete = [FiberMode(v, int(m)) for v, m in grouped if v < cutoff * (1 - 1e-12)]
        if len(complete) > upto:
            return tuple(complete)
        k_max *= 2


@dataclass(frozen=True)
class FiberSpec:
    """Homogeneous fiber with a closed-form Laplace spectrum.

    Supported kinds: the unit round sphere S^p, a circle of given length,
    and a flat torus with given side lengths.  ``eigenvalue(k)`` walks the
    distinct spectrum of minus the Laplacian of the unit metric, ascending.
    """

    kind: FiberKind
    dim: int
    lengths: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise InvariantViolation("fiber dimension must be >= 1")
        if self.kind is FiberKind.SPHERE:
            if self.lengths:
                raise InvariantViolation("round sphere fibers take no lengths")
        elif self.kind is FiberKind.CIRCLE:
            if self.dim != 1 or len(self.lengths) != 1:
                raise InvariantViolation("circle fibers are one-dimensional with one length")
        elif len(self.lengths) != self.dim:
            raise InvariantViolation("flat torus needs one side length per dimension")
        if any(ell <= 0 for ell in self.lengths):
            raise InvariantViolation("fiber lengths must be positive")

    @classmethod
    def round_sphere(cls, dim: int) -> "FiberSpec":
        return cls(FiberKind.SPHERE, dim)

    @classmethod
    def circle(cls, length: float) -> "FiberSpec":
        return cls(FiberKind.CIRCLE, 1, (length,))

    @classmethod
    def flat_torus(cls, *lengths: float) -> "FiberSpec":
        return cls(FiberKind.TORUS, len(lengths), tuple(float(ell) for ell in lengths))

    @property
    def unit_curvature(self) -> float:
        """Scalar curvature of the unit-metric fiber (constant for all kinds)."""
        if self.kind is FiberKind.SPHERE:
            return float(self.dim * (self.dim - 1))
        return 0.0

    @property
    def unit_volume(self) -> float:
        if self.kind is FiberKind.SPHERE:
            p = self.dim
            return 2.0 * math.pi ** ((p + 1) / 2) / math.gamma((p + 1) / 2)
        return float(np.prod(self.lengths))

    def eigenvalue(self, k: int) -> FiberMode:
        if k < 0:
            raise ConfigurationError(f"fiber mode index must be >= 0, got {k}")
        if self.kind is FiberKind.SPHERE:
            p = self.dim
            mult = 1 if k == 0 else _comb(p + k, k) - _comb(p + k - 2, k - 2)
            return FiberMode(float(k * (k + p - 1)), mult)
        if self.kind is FiberKind.CIRCLE:
            ell = self.lengths[0]
            return FiberMode((2.0 * math.pi * k / ell) ** 2, 1 if k == 0 else 2)
        if self.kind is FiberKind.TORUS:
            return _torus_modes(self.lengths, k)[k]
        raise ConfigurationError(f"unsupported fiber kind: {self.kind}")


class WarpFamily(enum.Enum):
    CONSTANT = "constant"
    COSINE_BUMP = "cosine_bump"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class WarpSpec:
    """Positive warp profile f(t) on the base, with closed-form derivatives.

    ``cosine_bump`` uses f(t) = a + b*cos(2*pi*m*t/L) on circles and
    f(t) = a + b*cos(pi*m*t/L) on interval/latitude bases, so that f' = 0 at
    both endpoints of non-periodic bases.  ``tabulated`` holds uniform
    samples (wrapping on circles, reflecting evenly at interval ends, which
    enforces the endpoint f' = 0) and differentiates them with centered
    second-order differences; no splines.
    """

    family: WarpFamily
    a: float = 1.0
    b: float = 0.0
    frequency: int = 1
    samples: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.family is WarpFamily.TABULATED:
            if len(self.samples) < 8:
                raise InvariantViolation("tabulated warp needs at least 8 samples")
            if min(self.samples) <= 0:
                raise InvariantViolation("tabulated warp samples must be positive")
            return
        if not self.a > 0:
            raise InvariantViolation(f"warp amplitude must be positive, got {self.a}")
        if self.family is WarpFamily.COSINE_BUMP:
            if not abs(self.b) < self.a:
                raise InvariantViolation("cosine bump needs |b| < a for positivity")
            if self.frequency < 1:
                raise InvariantViolation("cosine bump frequency must be >= 1")

    @classmethod
    def constant(cls, a: float) -> "WarpSpec":
        return cls(WarpFamily.CONSTANT, a=a)

    @classmethod
    def cosine_bump(cls, a: float, b: float, frequency: int = 1) -> "WarpSpec":
        return cls(WarpFamily.COSINE_BUMP, a=a, b=b, frequency=frequency)

    @classmethod
    def tabulated(cls, samples) -> "WarpSpec":
        return cls(WarpFamily.TABULATED, samples=tuple(float(s) for s in samples))

    def _omega(self, base: BaseSpec) -> float:
        factor = 2.0 * math.pi if base.periodic else math.pi
        return factor * self.frequency / base.length

    def value(self, base: BaseSpec, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.family is WarpFamily.CONSTANT:
            return np.full_like(t, self.a)
        if self.family is WarpFamily.COSINE_BUMP:
            return self.a + self.b * np.cos(self._omega(base) * t)
        ts, fs, _, _ = _tabulated_arrays(self, base)
        return _interp(base, t, ts, fs)

    def deriv1(self, base: BaseSpec, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.family is WarpFamily.CONSTANT:
            return np.zeros_like(t)
        if self.family is WarpFamily.COSINE_BUMP:
            w = self._omega(base)
            return -self.b * w * np.sin(w * t)
        ts, _, d1, _ = _tabulated_arrays(self, base)
        return _interp(base, t, ts, d1)

    def deriv2(self, base: BaseSpec, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.family is WarpFamily.CONSTANT:
            return np.zeros_like(t)
        if self.family is WarpFamily.COSINE_BUMP:
            w = self._omega(base)
            return -self.b * w * w * np.cos(w * t)
        ts, _, _, d2 = _tabulated_arrays(self, base)
        return _interp(base, t, ts, d2)

    def critical_points(self, base: BaseSpec) -> np.ndarray:
        """Analytic zeros of f' for closed-form families (empty otherwise)."""
        if self.family is not WarpFamily.COSINE_BUMP:
            return np.empty(0)
        m, L = self.frequency, base.length
        if base.periodic:
            return np.arange(2 * m) * (L / (2 * m))
        return np.arange(m + 1) * (L / m)

    def min_value(self, base: BaseSpec) -> float:
        if self.family is WarpFamily.CONSTANT:
            return self.a
        if self.family is WarpFamily.COSINE_BUMP:
            return self.a - abs(self.b)
        return min(self.samples)

    def max_value(self, base: BaseSpec) -> float:
        if self.family is WarpFamily.CONSTANT:
            return self.a
        if self.family is WarpFamily.COSINE_BUMP:
            return self.a + abs(self.b)
        return max(self.samples)


def _interp(base: BaseSpec, t: np.ndarray, ts: np.ndarray, ys: np.ndarray) -> np.ndarray:
    if base.periodic:
        tm = np.mod(t, base.length)
        ts_ext = np.concatenate([ts, [base.length]])
        ys_ext = np.concatenate([ys, [ys[0]]])
        return np.interp(tm, ts_ext, ys_ext)
    return np.interp(t, ts, ys)


@functools.lru_cache(maxsize=None)
def _tabulated_arrays(warp: WarpSpec, base: BaseSpec):
    fs = np.asarray(warp.samples, dtype=float)
    n = fs.size
    if base.periodic:
        h = base.length / n
        ts = np.arange(n) * h
        left, right = np.roll(fs, 1), np.roll(fs, -1)
    else:
        h = base.length / (n - 1)
        ts = np.arange(n) * h
        # even reflection at both ends: matches the endpoint f' = 0 invariant
        left = np.concatenate([[fs[1]], fs[:-1]])
        right = np.concatenate([fs[1:], [fs[-2]]])
    d1 = (right - left) / (2.0 * h)
    d2 = (right - 2.0 * fs + left) / h**2
    return ts, fs, d1, d2


@dataclass(frozen=True)
class WarpedProduct:
    """A base, a fiber, and a warp profile, with derived coefficient fields.

    The total volume density in the base coordinate is
    ``rho(t) = w(t) * f(t)**p`` with p the fiber dimension; every reduced
    eigenproblem in the package is weighted by it.
    """

    base: BaseSpec
    fiber: FiberSpec
    warp: WarpSpec

    def __post_init__(self) -> None:
        if not self.warp.min_value(self.base) > 0:
            raise InvariantViolation("warp profile must be positive everywhere")

    @property
    def dim_total(self) -> int:
        return self.base.dim + self.fiber.dim

    def warp_value(self, t: np.ndarray) -> np.ndarray:
        return self.warp.value(self.base, t)

    def warp_d1(self, t: np.ndarray) -> np.ndarray:
        return self.warp.deriv1(self.base, t)

    def warp_d2(self, t: np.ndarray) -> np.ndarray:
        return self.warp.deriv2(self.base, t)

    def density(self, t: np.ndarray) -> np.ndarray:
        return self.base.weight(t) * self.warp_value(t) ** self.fiber.dim

    def warp_laplacian(self, t: np.ndarray) -> np.ndarray:
        """Base Laplacian of the warp, f'' + (w'/w) f'.

        At latitude endpoints (w -> 0) the product (w'/w) f' is replaced by
        its finite limit (dim-1) * f'', valid because f' vanishes there.
        """
        t = np.asarray(t, dtype=float)
        d2 = self.warp_d2(t)
        if self.base.kind is not BaseKind.SPHERE:
            return d2
        a = self.base.radius
        s = np.sin(t / a)
        safe = np.abs(s) > _ENDPOINT_EPS
        term = np.where(
            safe,
            ((self.base.dim - 1) / a)
            * (np.cos(t / a) / np.where(safe, s, 1.0))
            * self.warp_d1(t),
            (self.base.dim - 1) * d2,
        )
        return d2 + term


class MeanCurvature(NamedTuple):
    norm: np.ndarray
    divergence: np.ndarray


@dataclass(frozen=True)
class ComparisonConstants:
    """Grid-plus-critical-point extrema entering the eigenvalue comparisons.

    ``a0``/``a1`` are half the infimum/supremum of the mean-curvature
    divergence; ``lambda_bar_fiber`` is the largest first fiber eigenvalue
    over the base, mu_1 / (min f)^2; ``c_lambda1`` is the infimum of
    (p/2) Lap f / f + (3p/2) (f'/f)^2; ``c_perelman`` the infimum of
    2p Lap f / f + p(7-p) (f'/f)^2 + R0 / f^2, and ``c_perelman_split``
    the same with the curvature term minimized separately.
    """

    a0: float
    a1: float
    lambda_bar_fiber: float
    c_lambda1: float
    c_perelman: float
    c_perelman_split: float
    warp_min: float
    warp_max: float


def fiber_eigenvalue(fiber: FiberSpec, k: int) -> FiberMode:
    """k-th distinct eigenvalue of minus the unit-metric fiber Laplacian."""
    return fiber.eigenvalue(k)


def scalar_curvature(wp: WarpedProduct, t, mode: str = "standard") -> np.ndarray:
    """Scalar curvature of the warped product at base coordinate t.

    ``standard`` is the full warped-product formula
    R_B - 2p Lap f / f - p(p-1)(f'/f)^2 + R0/f^2;  ``paper`` drops the
    -2p Lap f / f term.  The two agree whenever f is constant, and the
    discrepancy is reported by the inequality harness rather than resolved.
    """
    t = np.asarray(t, dtype=float)
    f = wp.warp_value(t)
    if np.any(f <= 0):
        raise InvariantViolation("warp profile must be positive")
    p = wp.fiber.dim
    ratio2 = (wp.warp_d1(t) / f) ** 2
    out = wp.base.scalar_curvature(t) + wp.fiber.unit_curvature / f**2 - p * (p - 1) * ratio2
    if mode == "standard":
        return out - 2.0 * p * wp.warp_laplacian(t) / f
    if mode == "paper":
        return out
    raise ConfigurationError(f"unknown curvature mode: {mode!r}")


def mean_curvature_data(wp: WarpedProduct, t) -> MeanCurvature:
    """Pointwise mean-curvature data of the fibers.

    The fibers' mean-curvature field is N = -(p/f) grad f, so
    |N| = p |f'| / f, and its negative horizontal divergence is
    p * (Lap f / f - (f'/f)^2) = p * (log f)''-with-weight.
    """
    t = np.asarray(t, dtype=float)
    f = wp.warp_value(t)
    if np.any(f <= 0):
        raise InvariantViolation("warp profile must be positive")
    p = wp.fiber.dim
    d1 = wp.warp_d1(t)
    norm = p * np.abs(d1) / f
    divergence = p * (wp.warp_laplacian(t) / f - (d1 / f) ** 2)
    return MeanCurvature(norm, divergence)


def comparison_constants(wp: WarpedProduct, n: int = 512) -> ComparisonConstants:
    """Extrema over a staggered grid of n samples plus the analytic critical
    points of closed-form warp families."""
    if n < 64:
        raise ConfigurationError(f"comparison constants need grid resolution >= 64, got {n}")
    h = wp.base.length / n
    pts = (np.arange(n) + 0.5) * h
    crit = wp.warp.critical_points(wp.base)
    if crit.size:
        pts = np.concatenate([pts, crit])

    p = wp.fiber.dim
    f = wp.warp_value(pts)
    lap = wp.warp_laplacian(pts)
    ratio2 = (wp.warp_d1(pts) / f) ** 2

    div = p * (lap / f - ratio2)
    a0 = 0.5 * float(div.min())
    a1 = 0.5 * float(div.max())

    fmin = wp.warp.min_value(wp.base)
    fmax = wp.warp.max_value(wp.base)
    mu1 = wp.fiber.eigenvalue(1).value
    lambda_bar = mu1 / fmin**2

    c_l1 = float(((p / 2.0) * lap / f + (3.0 * p / 2.0) * ratio2).min())
    body = 2.0 * p * lap / f + p * (7.0 - p) * ratio2
    r0 = wp.fiber.unit_curvature
    c_per = float((body + r0 / f**2).min())
    c_split = float(body.min()) + float((r0 / f**2).min())

    return ComparisonConstants(a0, a1, lambda_bar, c_l1, c_per, c_split, fmin, fmax)
