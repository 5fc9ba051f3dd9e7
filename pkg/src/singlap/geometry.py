"""Conformal metrics on the punctured plane and their curvature.

A metric is ``g = exp(w(r, theta)) (dx^2 + dy^2)`` on the punctured ball of
radius ``R``. It is specified through a potential ``u`` plus a convention
flag saying whether ``w = u`` or ``w = 2u``; in both cases the Gaussian
curvature is ``K = -1/2 exp(-w) Lap(w)`` with the Euclidean Laplacian.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ArgumentError, ConditioningError, DomainError, EvaluationError, QuadratureError
from .quadrature import QuadratureSpec, integrate_periodic, integrate_polar

TWO_PI = 2.0 * math.pi
PROFILE_GRID = 4096
ANGULAR_FD_STEP = TWO_PI / 8192


def _fd2(func, x, h):
    """Fourth-order central second difference.

    Summed in an order that returns exactly 0.0 for constant ``func``.
    """
    return (16.0 * (func(x + h) + func(x - h)) - (func(x + 2 * h) + func(x - 2 * h)) - 30.0 * func(x)) / (12.0 * h * h)


def _fd1(func, x, h):
    return (8.0 * (func(x + h) - func(x - h)) - (func(x + 2 * h) - func(x - 2 * h))) / (12.0 * h)


class Smoothness(enum.Enum):
    C0 = "C0"
    C2 = "C2"


@dataclass(frozen=True)
class AngularProfile:
    """A 2*pi-periodic function of the direction angle.

    Used both for angular conformal factors and for per-direction distance
    scales. ``second_derivative`` is optional; without it the second
    derivative is taken by finite differences.
    """

    func: Callable
    second_derivative: Optional[Callable] = None
    smoothness: Smoothness = Smoothness.C2
    name: str = "profile"

    def __post_init__(self):
        grid = np.linspace(0.0, TWO_PI, PROFILE_GRID, endpoint=False)
        vals = self(grid)
        if not np.all(np.isfinite(vals)):
            raise EvaluationError(f"angular profile {self.name!r} is not finite on the sampling grid")
        if abs(float(self(0.0)) - float(self(TWO_PI))) > 1e-12:
            raise ArgumentError(f"angular profile {self.name!r} is not 2*pi-periodic")

    def __call__(self, theta):
        return np.asarray(self.func(np.asarray(theta, dtype=float)), dtype=float) * np.ones_like(theta, dtype=float)

    def dd(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.second_derivative is not None:
            return np.asarray(self.second_derivative(theta), dtype=float) * np.ones_like(theta)
        return _fd2(self, theta, ANGULAR_FD_STEP)

    def grid_values(self, n: int = PROFILE_GRID):
        return self(np.linspace(0.0, TWO_PI, n, endpoint=False))

    @classmethod
    def constant(cls, c: float) -> "AngularProfile":
        c = float(c)
        return cls(lambda th: np.full_like(th, c), lambda th: np.zeros_like(th), name=f"const({c:g})")


class Convention(enum.Enum):
    SINGLE_U = 1  # w = u,  K = -1/2 e^{-u} Lap u
    DOUBLE_U = 2  # w = 2u, K = -e^{-2u} Lap u

    @property
    def factor(self) -> int:
        return self.value


@dataclass(frozen=True)
class ConformalMetric2D:
    """``g = exp(w) * Euclidean`` on ``0 < r < radius``.

    ``u(r, theta)`` is the potential and ``w = convention.factor * u``. When
    ``angular_only`` is given the exponent is that profile, independent of
    ``r``, and ``u`` is ignored. ``laplacian_u`` and ``du_dr`` optionally
    supply closed forms; otherwise fourth-order finite differences are used.
    """

    u: Optional[Callable] = None
    convention: Convention = Convention.SINGLE_U
    radius: float = 1.0
    angular_only: Optional[AngularProfile] = None
    laplacian_u: Optional[Callable] = None
    du_dr: Optional[Callable] = None
    name: str = "custom"
    kappa_closed_form: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.u is None and self.angular_only is None:
            raise ArgumentError("metric needs either a potential u or an angular profile")
        if not self.radius > 0:
            raise ArgumentError(f"puncture radius must be positive, got {self.radius}")

    @classmethod
    def angular(cls, profile: AngularProfile, radius: float = 1.0, name: Optional[str] = None, **kw):
        return cls(angular_only=profile, radius=radius, name=name or profile.name, **kw)

    def _check_r(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise DomainError("metric quantities are undefined at or inside the puncture (r <= 0)")
        return r

    def exponent(self, r, theta):
        """``w(r, theta)``."""
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if self.angular_only is not None:
            return self.angular_only(theta) + 0.0 * r
        return self.convention.factor * np.asarray(self.u(r, theta), dtype=float)

    def volume_density(self, r, theta):
        """``dvol_g / dvol_euclidean = exp(w)`` (two dimensions)."""
        return np.exp(self.exponent(r, theta))

    def laplacian_exponent(self, r, theta):
        """Euclidean Laplacian of ``w``."""
        r = self._check_r(r)
        theta = np.asarray(theta, dtype=float)
        if self.angular_only is not None:
            return self.angular_only.dd(theta) / r**2
        if self.laplacian_u is not None:
            return self.convention.factor * np.asarray(self.laplacian_u(r, theta), dtype=float)
        h = r / 100.0
        w_r = lambda rr: self.exponent(rr, theta)
        w_t = lambda tt: self.exponent(r, tt)
        return _fd2(w_r, r, h) + _fd1(w_r, r, h) / r + _fd2(w_t, theta, ANGULAR_FD_STEP) / r**2

    def radial_derivative(self, r, theta):
        """``d w / d r``."""
        r = self._check_r(r)
        theta = np.asarray(theta, dtype=float)
        if self.angular_only is not None:
            return np.zeros(np.broadcast(r, theta).shape)
        if self.du_dr is not None:
            return self.convention.factor * np.asarray(self.du_dr(r, theta), dtype=float)
        return _fd1(lambda rr: self.exponent(rr, theta), r, r / 100.0)


def conformal_gaussian_curvature(metric: ConformalMetric2D, r, theta):
    """Gaussian curvature ``K = -1/2 exp(-w) Lap(w)``.

    Equivalent to ``-1/2 e^{-u} Lap u`` for ``SINGLE_U`` and ``-e^{-2u} Lap u``
    for ``DOUBLE_U``.
    """
    lap = metric.laplacian_exponent(r, theta)
    w = metric.exponent(r, theta)
    k = -0.5 * np.exp(-w) * lap
    if not np.all(np.isfinite(k)):
        raise EvaluationError(f"non-finite curvature for metric {metric.name!r}")
    return k if np.ndim(k) else float(k)


def _abs_curvature_rows(metric, radii, n_theta):
    theta = np.linspace(0.0, TWO_PI, n_theta, endpoint=False)
    return np.abs(conformal_gaussian_curvature(metric, radii[:, None], theta[None, :])).max(axis=1)


def curvature_function(metric: ConformalMetric2D, s: float, eps: float, n_theta: int = 512, n_r: int = 512) -> float:
    """``kappa(s) = sup |K|`` over the annulus ``s < r < eps`` (grid maximum)."""
    if not 0 < s < eps:
        raise ArgumentError(f"need 0 < s < eps, got s={s}, eps={eps}")
    if eps > metric.radius:
        raise ArgumentError(f"eps={eps} exceeds the metric radius {metric.radius}")
    if min(n_theta, n_r) < 64:
        raise ArgumentError("curvature grids need at least 64 points per axis")
    radii = np.geomspace(s, eps, n_r)
    return float(_abs_curvature_rows(metric, radii, n_theta).max())


@dataclass(frozen=True)
class CurvatureProfile:
    s_values: np.ndarray  # decreasing
    kappa_values: np.ndarray
    eps: float
    theta_grid_size: int
    r_grid_size: int

    def __post_init__(self):
        s = np.asarray(self.s_values, dtype=float)
        k = np.asarray(self.kappa_values, dtype=float)
        if s.shape != k.shape or s.ndim != 1:
            raise ArgumentError("s_values and kappa_values must be matching 1-D arrays")
        if np.any(np.diff(s) >= 0):
            raise ArgumentError("s_values must be strictly decreasing")
        object.__setattr__(self, "s_values", s)
        object.__setattr__(self, "kappa_values", k)


def curvature_profile(metric: ConformalMetric2D, s_min: float, eps: float, n_s: int = 40,
                      n_theta: int = 512, r_per_decade: int = 128, s_values=None) -> CurvatureProfile:
    """Tabulate ``kappa`` at ``n_s`` log-spaced radii in ``[s_min, eps)``.

    One shared log grid is used for all radii and the supremum is a running
    maximum from ``eps`` inwards, so the tabulated values are exactly
    monotone. Explicit ``s_values`` override ``s_min`` and ``n_s``.
    """
    if s_values is not None:
        s_values = np.sort(np.asarray(s_values, dtype=float))[::-1]
        s_min = float(s_values[-1])
        if s_values[0] >= eps:
            raise ArgumentError("all radii must lie below eps")
    if not 0 < s_min < eps:
        raise ArgumentError(f"need 0 < s_min < eps, got {s_min}, {eps}")
    if eps > metric.radius:
        raise ArgumentError(f"eps={eps} exceeds the metric radius {metric.radius}")
    if s_values is None:
        s_values = np.geomspace(s_min, eps, n_s + 1)[:-1][::-1]
    decades = math.log10(eps / s_min)
    fine = np.geomspace(s_min, eps, max(64, int(math.ceil(decades * r_per_decade))))
    radii = np.unique(np.concatenate([fine, s_values]))
    row_max = _abs_curvature_rows(metric, radii, n_theta)
    # kappa at radii[i] is the max over radii[i:], i.e. a reversed running max
    sup = np.maximum.accumulate(row_max[::-1])[::-1]
    kappa = sup[np.searchsorted(radii, s_values)]
    return CurvatureProfile(s_values, kappa, eps, n_theta, radii.size)


@dataclass(frozen=True)
class MomentClassification:
    finite: bool
    value: float  # int s*kappa(s) ds with extrapolated tail; inf when divergent
    divergence_exponent: float  # fitted alpha in kappa ~ A s^-alpha near 0

    def __str__(self):
        if self.finite:
            return f"FINITE({self.value:.6g})"
        return f"INFINITE(alpha={self.divergence_exponent:.4f})"


def _power_fit(s, kappa):
    x = np.log(s)
    y = np.log(kappa)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - float(np.sum(resid**2)) / ss_tot)
    return -float(slope), float(intercept), r2


def curvature_moment_classifier(profile: CurvatureProfile, tol: float = 0.05) -> MomentClassification:
    """Decide whether ``int_0^eps s kappa(s) ds`` is finite.

    Divergence is judged from a power-law fit on the smallest decade:
    ``alpha >= 2 - tol`` means the moment diverges at the origin.
    """
    s, k = profile.s_values, profile.kappa_values
    if s.size < 20:
        raise ArgumentError("moment classification needs at least 20 radii")
    if math.log10(s.max() / s.min()) < 3 - 1e-9:
        raise ArgumentError("moment classification needs radii spanning at least 3 decades")
    if np.any(~np.isfinite(k)):
        raise ConditioningError("non-finite curvature values")
    if np.any(k <= 0) and np.any(k > 1e15):
        raise ConditioningError("nonpositive kappa entries mixed with values above 1e15")
    if np.any(k < 0):
        raise ConditioningError("kappa must be nonnegative")

    order = np.argsort(s)
    s, k = s[order], k[order]
    small = (s <= 10 * s[0]) & (k > 0)
    if np.count_nonzero(small) >= 2:
        alpha, log_a, _ = _power_fit(s[small], k[small])
    else:
        alpha, log_a = 0.0, -np.inf
    if alpha >= 2 - tol:
        return MomentClassification(False, math.inf, alpha)
    # int s*kappa ds = int s^2 kappa d(log s)
    body = float(np.trapezoid(s**2 * k, np.log(s)))
    tail = math.exp(log_a) * s[0] ** (2 - alpha) / (2 - alpha) if np.isfinite(log_a) else 0.0
    return MomentClassification(True, body + tail, alpha)


def curvature_growth_exponent(profile: CurvatureProfile):
    """Fit ``kappa(s) ~ A s^-alpha`` over the whole profile.

    Returns ``(alpha, r_squared)``. Identically vanishing curvature is
    reported as ``(0.0, 1.0)``.
    """
    s, k = profile.s_values, profile.kappa_values
    if s.size < 5:
        raise ArgumentError("growth fit needs at least 5 radii")
    if np.all(k == 0):
        return 0.0, 1.0
    mask = k > 0
    if np.count_nonzero(mask) < 5:
        raise ArgumentError("growth fit needs at least 5 positive kappa values")
    alpha, _, r2 = _power_fit(s[mask], k[mask])
    return alpha, r2


@dataclass(frozen=True)
class Extendability:
    extends: bool
    oscillation: float

    def __str__(self):
        return "EXTENDS" if self.extends else f"DOES_NOT_EXTEND({self.oscillation:.6g})"


def extendability_check(profile: AngularProfile, tol: float = 1e-10) -> Extendability:
    """The metric extends across the puncture iff the angular factor is constant."""
    if not tol > 0:
        raise ArgumentError("tol must be positive")
    vals = profile.grid_values(PROFILE_GRID)
    osc = float(vals.max() - vals.min())
    return Extendability(osc <= tol, osc)


@dataclass(frozen=True)
class GaussBonnetTerms:
    area: float  # int_D K dA_g
    boundary: float  # int_{dD} k_g ds_g
    err_est: float
    r_cut: float
    omitted_bound: float

    @property
    def residual(self) -> float:
        return abs(self.area + self.boundary - TWO_PI)


def gauss_bonnet_terms(metric: ConformalMetric2D, r0: float, quad: QuadratureSpec = QuadratureSpec(n_theta=256, n_r=400),
                       tol: float = 1e-10) -> GaussBonnetTerms:
    """Both sides of Gauss-Bonnet on the disk of radius ``r0``.

    The curvature measure is integrated on ``(r_cut, r0)`` in ``log r``;
    ``r_cut`` is decreased until ``pi r_cut^2 max|K e^w|(r_cut)`` (doubled)
    is below ``tol``, which bounds the omitted mass whenever ``|K| dA_g``
    grows slower than ``1/r^2``.
    """
    if not 0 < r0 < metric.radius:
        raise ArgumentError(f"need 0 < r0 < {metric.radius}, got {r0}")
    theta_probe = np.linspace(0.0, TWO_PI, quad.n_theta, endpoint=False)

    def density(r, theta):
        return conformal_gaussian_curvature(metric, r, theta) * metric.volume_density(r, theta)

    r_cut = r0 * 1e-2
    while True:
        omitted = 2.0 * math.pi * r_cut**2 * float(np.abs(density(np.full_like(theta_probe, r_cut), theta_probe)).max())
        if omitted < tol:
            break
        r_cut /= 10.0
        if r_cut < 1e-150:
            raise QuadratureError(
                f"curvature measure of {metric.name!r} is not integrable at the puncture",
                estimate=omitted,
            )

    area, area_err = integrate_polar(lambda r, th: density(r, th) * r, r_cut, r0, quad, log_radial=True)

    def boundary_integrand(theta):
        r = np.full_like(theta, r0)
        w = metric.exponent(r, theta)
        k_g = np.exp(-0.5 * w) * (1.0 / r0 + 0.5 * metric.radial_derivative(r, theta))
        ds_g = np.exp(0.5 * w) * r0
        return k_g * ds_g

    boundary = float(integrate_periodic(boundary_integrand, quad.n_theta))
    boundary_fine = float(integrate_periodic(boundary_integrand, 2 * quad.n_theta))
    err = area_err + abs(boundary_fine - boundary) + omitted
    return GaussBonnetTerms(area, boundary, err, r_cut, omitted)


def gauss_bonnet_residual(metric: ConformalMetric2D, r0: float, quad: QuadratureSpec = QuadratureSpec(n_theta=256, n_r=400)) -> float:
    """``|int_D K dA_g + int_dD k_g ds_g - 2 pi|`` for the disk of radius ``r0``."""
    return gauss_bonnet_terms(metric, r0, quad).residual


# --- registry -------------------------------------------------------------

def _flat():
    return ConformalMetric2D(
        u=lambda r, th: np.zeros(np.broadcast(r, th).shape),
        laplacian_u=lambda r, th: np.zeros(np.broadcast(r, th).shape),
        du_dr=lambda r, th: np.zeros(np.broadcast(r, th).shape),
        radius=math.inf,
        name="flat",
        kappa_closed_form=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
    )


def _sy_log():
    # u = r^2 log r^2 with g = e^{2u}: C^1 but not C^2 at the origin.
    def kappa(s):
        # sup over s < r < e^-1 is attained at r = s
        s = np.asarray(s, dtype=float)
        return np.abs(8 * np.log(s) + 8) * np.exp(-4 * s**2 * np.log(s))

    return ConformalMetric2D(
        u=lambda r, th: 2 * r**2 * np.log(r) + 0.0 * th,
        convention=Convention.DOUBLE_U,
        laplacian_u=lambda r, th: 8 * np.log(r) + 8 + 0.0 * th,
        du_dr=lambda r, th: 4 * r * np.log(r) + 2 * r + 0.0 * th,
        radius=1.0,
        name="sy-log",
        kappa_closed_form=kappa,
    )


def angular_cos_profile():
    return AngularProfile(lambda th: 2 * np.cos(th), lambda th: -2 * np.cos(th), name="2cos")


def _angular_cos():
    return ConformalMetric2D.angular(
        angular_cos_profile(),
        radius=1.0,
        name="angular-cos",
        # |cos th| e^{-2 cos th} peaks at th = pi with value e^2
        kappa_closed_form=lambda s: math.e**2 / np.asarray(s, dtype=float) ** 2,
    )


def disk_a04_scale():
    return AngularProfile(lambda th: 1 + 0.4 * np.cos(th), lambda th: -0.4 * np.cos(th), name="a04")


def disk_a04_profile():
    def dd(th):
        a = 1 + 0.4 * np.cos(th)
        return 2 * (-0.4 * np.cos(th) * a - 0.16 * np.sin(th) ** 2) / a**2

    return AngularProfile(lambda th: 2 * np.log(1 + 0.4 * np.cos(th)), dd, name="2log(a04)")


def _disk_a04():
    return ConformalMetric2D.angular(disk_a04_profile(), radius=1.0, name="disk-a04")


METRICS = {
    "flat": _flat,
    "sy-log": _sy_log,
    "angular-cos": _angular_cos,
    "disk-a04": _disk_a04,
}


def get_metric(name: str) -> ConformalMetric2D:
    try:
        return METRICS[name]()
    except KeyError:
        raise ArgumentError(f"unknown metric {name!r}; choose from {sorted(METRICS)}") from None
