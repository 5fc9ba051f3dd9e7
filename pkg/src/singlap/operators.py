"""Graph Laplace operators evaluated at the puncture (the origin).

Continuous operators integrate

    (1 / t^{d/2+1}) int exp(-dist(0, y)^2 / t) (f(0) - f(y)) p(y) dvol_g(y)

in polar coordinates with the puncture carrying no mass. The discrete
operator is the empirical average of the same summand over samples.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import ArgumentError, DomainError, ModelError, SamplingError
from .geometry import PROFILE_GRID, AngularProfile, ConformalMetric2D
from .quadrature import (
    UNDERFLOW_EXPONENT,
    QuadratureSpec,
    TruncationPolicy,
    integrate_polar,
    truncation_radius,
)

FD_STEP = 1e-5


class Provenance(enum.Enum):
    CLOSED_FORM = "closed_form"
    FINITE_DIFFERENCE = "finite_difference"


def _fd_gradient(value, x, y, h=FD_STEP):
    gx = (value(x + h, y) - value(x - h, y)) / (2 * h)
    gy = (value(x, y + h) - value(x, y - h)) / (2 * h)
    return np.stack(np.broadcast_arrays(gx, gy), axis=-1)


def _fd_hessian(value, x, y, h=1e-4):
    f0 = value(x, y)
    hxx = (value(x + h, y) - 2 * f0 + value(x - h, y)) / h**2
    hyy = (value(x, y + h) - 2 * f0 + value(x, y - h)) / h**2
    hxy = (value(x + h, y + h) - value(x + h, y - h) - value(x - h, y + h) + value(x - h, y - h)) / (4 * h**2)
    hxx, hxy, hyy = np.broadcast_arrays(hxx, hxy, hyy)
    return np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)


@dataclass(frozen=True)
class ScalarField:
    """A function of Cartesian ``(x, y)`` with gradient and Hessian.

    ``gradient`` returns shape ``(..., 2)`` and ``hessian`` ``(..., 2, 2)``.
    """

    value: Callable
    gradient: Callable
    hessian: Callable
    provenance: Provenance = Provenance.CLOSED_FORM
    name: str = "field"

    def __call__(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return np.asarray(self.value(x, y), dtype=float) + 0.0 * x + 0.0 * y

    def polar(self, r, theta):
        return self(r * np.cos(theta), r * np.sin(theta))

    def grad_at(self, x=0.0, y=0.0):
        return np.asarray(self.gradient(np.asarray(x, float), np.asarray(y, float)), dtype=float)

    def hess_at(self, x=0.0, y=0.0):
        return np.asarray(self.hessian(np.asarray(x, float), np.asarray(y, float)), dtype=float)

    @classmethod
    def from_function(cls, value: Callable, name: str = "field") -> "ScalarField":
        """Wrap ``value`` with finite-difference derivatives."""
        return cls(
            value,
            lambda x, y: _fd_gradient(value, x, y),
            lambda x, y: _fd_hessian(value, x, y),
            Provenance.FINITE_DIFFERENCE,
            name,
        )

    @classmethod
    def quadratic(cls, c0=0.0, grad=(0.0, 0.0), hess=((0.0, 0.0), (0.0, 0.0)), name: str = "quadratic") -> "ScalarField":
        """``c0 + <grad, z> + 1/2 z^T hess z``."""
        g = np.asarray(grad, dtype=float)
        H = np.asarray(hess, dtype=float)
        if H.shape != (2, 2) or not np.allclose(H, H.T, rtol=0, atol=1e-12):
            raise ArgumentError("hess must be a symmetric 2x2 matrix")
        H = 0.5 * (H + H.T)

        def value(x, y):
            return c0 + g[0] * x + g[1] * y + 0.5 * (H[0, 0] * x * x + 2 * H[0, 1] * x * y + H[1, 1] * y * y)

        def gradient(x, y):
            gx = g[0] + H[0, 0] * x + H[0, 1] * y
            gy = g[1] + H[0, 1] * x + H[1, 1] * y
            return np.stack(np.broadcast_arrays(gx, gy), axis=-1)

        def hessian(x, y):
            shape = np.broadcast(x, y).shape
            return np.broadcast_to(H, shape + (2, 2)).copy()

        return cls(value, gradient, hessian, Provenance.CLOSED_FORM, name)

    @classmethod
    def constant(cls, c: float) -> "ScalarField":
        return cls.quadratic(c0=c, name=f"const({c:g})")


@dataclass(frozen=True)
class IntrinsicDistanceModel:
    """``d_g(0, (r, theta))^2 = L(theta)^2 r^2 + E(r, theta)``.

    ``error_bound = (C, delta)`` records ``|E| <= C r^(2+delta)``; the
    default remainder is zero (``delta = inf``).
    """

    L: AngularProfile
    error_bound: tuple = (0.0, math.inf)
    E: Optional[Callable] = None

    def __post_init__(self):
        if self.L_min <= 0:
            raise ModelError(f"distortion factor must be positive, min is {self.L_min}")

    @property
    def L_min(self) -> float:
        return float(self.L.grid_values(PROFILE_GRID).min())

    def sq_distance(self, r, theta):
        d2 = self.L(theta) ** 2 * r**2
        if self.E is not None:
            d2 = d2 + self.E(r, theta)
        return d2

    def check_remainder(self, r, theta) -> bool:
        if self.E is None:
            return True
        C, delta = self.error_bound
        bound = C * np.asarray(r, dtype=float) ** (2 + delta)
        return bool(np.all(np.abs(self.E(r, theta)) <= bound * (1 + 1e-12)))


class KernelFlavor(enum.Enum):
    INTRINSIC = "intrinsic"
    EXTRINSIC_PLANE = "extrinsic_plane"
    EXTRINSIC_CONE = "extrinsic_cone"


@dataclass(frozen=True)
class KernelSpec:
    flavor: KernelFlavor
    d: int = 2
    truncation: TruncationPolicy = field(default_factory=lambda: TruncationPolicy.multiple(10.0))
    model: Optional[IntrinsicDistanceModel] = None
    metric: Optional[ConformalMetric2D] = None  # volume form for EXTRINSIC_PLANE

    def __post_init__(self):
        if self.d < 1:
            raise ArgumentError("dimension must be >= 1")
        if self.flavor is KernelFlavor.INTRINSIC and self.model is None:
            raise ArgumentError("intrinsic kernel needs a distance model")
        if self.flavor is KernelFlavor.EXTRINSIC_PLANE and self.metric is None:
            raise ArgumentError("planar extrinsic kernel needs a metric")


@dataclass(frozen=True)
class LaplacianValue:
    t: float
    value: float
    quad_err: float = 0.0
    std_err: float = 0.0  # Monte-Carlo standard error (discrete operator)
    n: Optional[int] = None

    @property
    def scaled(self) -> float:
        return math.sqrt(self.t) * self.value


def _radial_cutoff(t, policy, domain_radius, sq_scale):
    """Upper radius of the kernel integral.

    ``sq_scale`` is a lower bound of ``dist^2 / r^2``; beyond the returned
    radius the kernel either is truncated or underflows to exactly zero.
    """
    underflow = math.sqrt(UNDERFLOW_EXPONENT * t / sq_scale)
    r_hi = min(domain_radius, truncation_radius(t, policy), underflow)
    if not math.isfinite(r_hi):
        raise ArgumentError("unbounded radial domain; choose a bandwidth-dependent truncation")
    return r_hi


def _check_t(t):
    if not (t > 0 and math.isfinite(t)):
        raise DomainError(f"bandwidth must be positive and finite, got {t}")


def continuous_intrinsic_laplacian(f: ScalarField, p: ScalarField, metric: ConformalMetric2D,
                                   model: IntrinsicDistanceModel, t: float,
                                   spec: QuadratureSpec = QuadratureSpec(),
                                   truncation: Optional[TruncationPolicy] = None) -> LaplacianValue:
    """Intrinsic-kernel graph Laplacian at the puncture.

    The kernel uses the model distance ``L(theta)^2 r^2 + E``; the measure is
    ``p exp(w) r dr dtheta``. ``truncation`` defaults to the metric radius
    (or ``10 sqrt(t)`` for an unbounded domain).
    """
    _check_t(t)
    if model.L_min <= 0:
        raise ModelError("distortion factor must be positive")
    if truncation is None:
        truncation = (TruncationPolicy.fixed(metric.radius) if math.isfinite(metric.radius)
                      else TruncationPolicy.multiple(10.0))
    sq_scale = model.L_min**2 if model.E is None else 0.25 * model.L_min**2
    r_hi = _radial_cutoff(t, truncation, metric.radius, sq_scale)
    f0 = float(f(0.0, 0.0))

    def integrand(r, th):
        x, y = r * np.cos(th), r * np.sin(th)
        kern = np.exp(-model.sq_distance(r, th) / t)
        return kern * (f0 - f(x, y)) * p(x, y) * metric.volume_density(r, th) * r

    value, err = integrate_polar(integrand, 0.0, r_hi, spec)
    return LaplacianValue(t, value / t**2, err / t**2)


def continuous_extrinsic_laplacian(f: ScalarField, p: ScalarField, geometry: KernelSpec, t: float,
                                   spec: QuadratureSpec = QuadratureSpec()) -> LaplacianValue:
    """Ambient-distance graph Laplacian at the puncture.

    ``EXTRINSIC_PLANE``: the punctured disk sits in the plane, ambient
    distance is ``r`` and the measure is ``exp(w) r dr dtheta``.
    ``EXTRINSIC_CONE``: the 45 degree cone ``z = sqrt(x^2 + y^2)`` in the chart
    ``(u, theta)``; ambient ``|y|^2 = 2 u^2``, measure ``sqrt(2) u du dtheta``.
    Fields are evaluated at the chart point ``(u cos theta, u sin theta)``,
    which determines the cone point uniquely.
    """
    _check_t(t)
    d = geometry.d
    f0 = float(f(0.0, 0.0))
    if geometry.flavor is KernelFlavor.EXTRINSIC_PLANE:
        metric = geometry.metric
        r_hi = _radial_cutoff(t, geometry.truncation, metric.radius, 1.0)

        def integrand(r, th):
            x, y = r * np.cos(th), r * np.sin(th)
            return np.exp(-r * r / t) * (f0 - f(x, y)) * p(x, y) * metric.volume_density(r, th) * r

    elif geometry.flavor is KernelFlavor.EXTRINSIC_CONE:
        r_hi = _radial_cutoff(t, geometry.truncation, math.inf, 2.0)
        sqrt2 = math.sqrt(2.0)

        def integrand(u, th):
            x, y = u * np.cos(th), u * np.sin(th)
            return np.exp(-2.0 * u * u / t) * (f0 - f(x, y)) * p(x, y) * sqrt2 * u

    else:
        raise ArgumentError("use continuous_intrinsic_laplacian for intrinsic kernels")

    value, err = integrate_polar(integrand, 0.0, r_hi, spec)
    norm = t ** (d / 2 + 1)
    return LaplacianValue(t, value / norm, err / norm)


@dataclass(frozen=True)
class SampleSet:
    r: np.ndarray
    theta: np.ndarray
    seed: int
    acceptance_rate: float

    @property
    def n(self) -> int:
        return int(self.r.size)

    @property
    def points(self):
        return np.column_stack([self.r, self.theta])

    @property
    def xy(self):
        return self.r * np.cos(self.theta), self.r * np.sin(self.theta)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator so streams do not depend on worker layout."""
    return np.random.Generator(np.random.Philox(int(seed) % 2**64))


def sample_density(metric: ConformalMetric2D, p: ScalarField, n: int, seed: int,
                   radius: Optional[float] = None, batch: int = 65536) -> SampleSet:
    """Draw ``n`` points with density proportional to ``p dvol_g``.

    Rejection sampling in ``(r, theta)`` against ``p exp(w) r`` with a uniform
    proposal on ``(0, R) x [0, 2 pi)``; the envelope is 1.1 times the target
    maximum over a 257 x 512 grid and any proposal above it is an error.
    """
    if n < 1:
        raise ArgumentError(f"need n >= 1 samples, got {n}")
    R = metric.radius if radius is None else float(radius)
    if not (0 < R < math.inf) or R > metric.radius:
        raise ArgumentError(f"sampling radius must be finite and within the metric domain, got {R}")

    def target(r, th):
        return p.polar(r, th) * metric.volume_density(r, th) * r

    rg = np.linspace(R / 256, R, 256)
    tg = np.linspace(0, 2 * np.pi, 512, endpoint=False)
    grid_vals = target(rg[:, None], tg[None, :])
    if np.any(grid_vals < 0):
        raise ArgumentError("density must be nonnegative")
    bound = 1.1 * float(grid_vals.max())
    if not bound > 0:
        raise SamplingError("target density vanishes on the sampling box")

    rng = make_rng(seed)
    rs, ths = [], []
    accepted = proposed = 0
    while accepted < n:
        r = R * (1.0 - rng.random(batch))  # (0, R]
        th = 2 * np.pi * rng.random(batch)
        u = rng.random(batch) * bound
        tv = target(r, th)
        if np.any(tv > bound):
            raise SamplingError("envelope violated: target exceeds the rejection bound")
        keep = u < tv
        rs.append(r[keep])
        ths.append(th[keep])
        accepted += int(keep.sum())
        proposed += batch
        if proposed >= 10 * batch and accepted / proposed < 1e-4:
            raise SamplingError(f"acceptance rate {accepted / proposed:.2e} below 1e-4")
    r_all = np.concatenate(rs)
    th_all = np.concatenate(ths)
    rate = accepted / proposed
    if rate < 1e-4:
        raise SamplingError(f"acceptance rate {rate:.2e} below 1e-4")
    return SampleSet(r_all[:n], th_all[:n], int(seed), rate)


AMBIENT = "ambient"


def discrete_graph_laplacian(f: ScalarField, samples: SampleSet, t: float, d: int = 2,
                             distance: Union[str, IntrinsicDistanceModel] = AMBIENT) -> LaplacianValue:
    """Empirical graph Laplacian ``1/(n t^{d/2+1}) sum k(0, X_j) (f(0) - f(X_j))``.

    ``std_err`` is the plug-in standard error of the mean summand.
    """
    _check_t(t)
    if samples.n == 0:
        raise ArgumentError("empty sample set")
    r, th = samples.r, samples.theta
    if isinstance(distance, IntrinsicDistanceModel):
        d2 = distance.sq_distance(r, th)
    elif distance == AMBIENT:
        d2 = r * r
    else:
        raise ArgumentError(f"unknown distance {distance!r}")
    x, y = samples.xy
    terms = np.exp(-d2 / t) * (float(f(0.0, 0.0)) - f(x, y)) / t ** (d / 2 + 1)
    se = float(terms.std(ddof=1) / math.sqrt(samples.n)) if samples.n > 1 else 0.0
    return LaplacianValue(t, float(terms.mean()), 0.0, se, samples.n)


def truncation_tail_bound(f_at_x: float, p_l1: float, fp_l1: float, t: float, eta: float, d: int = 2) -> float:
    """``(|f(x)| ||p||_1 + ||f p||_1) t^{-d/2-1} exp(-t^{2 eta - 1})``.

    Bounds the kernel mass beyond radius ``t**eta``.
    """
    if not 0 < t < 1:
        raise DomainError(f"tail bound needs 0 < t < 1, got {t}")
    if not 0 < eta < 0.5:
        raise DomainError(f"tail bound needs 0 < eta < 1/2, got {eta}")
    mass = abs(f_at_x) * p_l1 + fp_l1
    return mass * t ** (-d / 2 - 1) * math.exp(-(t ** (2 * eta - 1)))
