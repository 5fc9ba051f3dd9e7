"""Closed-form small-bandwidth predictions and empirical rate fits."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArgumentError, ModelError
from .geometry import AngularProfile
from .operators import LaplacianValue, ScalarField
from .quadrature import QuadratureSpec, gaussian_moment_ck, periodic_trapezoid


@dataclass(frozen=True)
class AsymptoticPrediction:
    """``L_t f(x) ~ leading_coeff * t^{-1/2} + constant_term``.

    ``leading_coeff`` is therefore also the predicted limit of
    ``sqrt(t) L_t f(x)``.
    """

    leading_coeff: float
    constant_term: float
    rate_exponent: float
    provenance: str
    nondegenerate: bool

    @property
    def scaled_limit(self) -> float:
        return self.leading_coeff


def interior_limit(f: ScalarField, p: ScalarField, d: int = 2) -> float:
    """``-(pi^{d/2}/2) (1/2 p Lap f + <grad p, grad f>)`` at the origin."""
    lap_f = float(np.trace(f.hess_at()))
    return -(math.pi ** (d / 2) / 2) * (0.5 * float(p(0.0, 0.0)) * lap_f + float(f.grad_at() @ p.grad_at()))


def _directions(n):
    theta, w = periodic_trapezoid(n)
    return theta, np.stack([np.cos(theta), np.sin(theta)]), w


def angular_moment(weight: AngularProfile, n_theta: int = 512) -> np.ndarray:
    """``int_0^{2pi} (cos, sin)(theta) weight(theta) dtheta``."""
    theta, dirs, w = _directions(n_theta)
    return (dirs * weight(theta)).sum(axis=1) * w


def _require_2d(d):
    if d != 2:
        raise NotImplementedError("sphere integrals are implemented for d = 2 only")


def _quadratic_form(H, dirs):
    return np.einsum("in,ij,jn->n", dirs, H, dirs)


def _degenerate(lead, scale):
    return abs(lead) <= 1e-12 * scale


def intrinsic_prediction(f: ScalarField, p: ScalarField, psi1: AngularProfile, L: AngularProfile,
                         d: int = 2, quad: QuadratureSpec = QuadratureSpec()) -> AsymptoticPrediction:
    """Two-term expansion of the intrinsic operator for an angular conformal change.

    ``b = int Theta e^{(d/2) psi1} L^{-(d+1)}`` drives the ``t^{-1/2}`` term
    and ``B0 = int Phi e^{(d/2) psi1} L^{-(d+2)}`` the constant, with
    ``Phi = 1/2 p Hess f(Theta, Theta) + <grad p, Theta><grad f, Theta>``.
    """
    _require_2d(d)
    theta, dirs, w = _directions(quad.n_theta)
    Lv = L(theta)
    if Lv.min() <= 0:
        raise ModelError("distortion factor must be positive")
    vol = np.exp(0.5 * d * psi1(theta))
    p0 = float(p(0.0, 0.0))
    gf, gp, H = f.grad_at(), p.grad_at(), f.hess_at()

    b = (dirs * vol * Lv ** -(d + 1)).sum(axis=1) * w
    phi = 0.5 * p0 * _quadratic_form(H, dirs) + (gp @ dirs) * (gf @ dirs)
    B0 = float((phi * vol * Lv ** -(d + 2)).sum() * w)

    cd = gaussian_moment_ck(d)
    lead = -cd * p0 * float(gf @ b)
    scale = cd * abs(p0) * float(np.linalg.norm(gf)) * float((vol * Lv ** -(d + 1)).sum() * w)
    degenerate = _degenerate(lead, scale)
    if degenerate:
        lead = 0.0
    return AsymptoticPrediction(
        lead,
        -gaussian_moment_ck(d + 1) * B0,
        0.0 if degenerate else -0.5,
        "intrinsic angular-conformal expansion",
        p0 != 0 and not degenerate,
    )


def extrinsic_prediction(f: ScalarField, p: ScalarField, psi1: AngularProfile, d: int = 2,
                         quad: QuadratureSpec = QuadratureSpec()) -> AsymptoticPrediction:
    """Expansion of the ambient-kernel operator for an angular conformal change.

    ``leading = -c_d p B_M f`` and ``constant = -c_{d+1} (p A_M f + r(p, f)_M)``.
    """
    _require_2d(d)
    theta, dirs, w = _directions(quad.n_theta)
    vol = np.exp(0.5 * d * psi1(theta))
    p0 = float(p(0.0, 0.0))
    gf, gp, H = f.grad_at(), p.grad_at(), f.hess_at()

    B = float(((gf @ dirs) * vol).sum() * w)
    A = 0.5 * float((_quadratic_form(H, dirs) * vol).sum() * w)
    rpf = float(((gf @ dirs) * (gp @ dirs) * vol).sum() * w)

    cd = gaussian_moment_ck(d)
    lead = -cd * p0 * B
    scale = cd * abs(p0) * float(np.linalg.norm(gf)) * float(vol.sum() * w)
    degenerate = _degenerate(lead, scale)
    if degenerate:
        lead = 0.0
    return AsymptoticPrediction(
        lead,
        -gaussian_moment_ck(d + 1) * (p0 * A + rpf),
        0.0 if degenerate else -0.5,
        "extrinsic angular-conformal expansion",
        p0 != 0 and not degenerate,
    )


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    t_window: tuple


def rate_fit(values: Sequence[LaplacianValue]) -> RateFit:
    """Least squares of ``log|value|`` against ``log t``.

    Values that vanish or sit below ten times their quadrature error are
    dropped; at least five must remain, spanning two decades of ``t``.
    """
    usable = []
    for v in values:
        if v.value == 0:
            warnings.warn(f"dropping zero value at t={v.t}", RuntimeWarning, stacklevel=2)
            continue
        if abs(v.value) <= 10 * v.quad_err:
            warnings.warn(f"dropping noise-dominated value at t={v.t}", RuntimeWarning, stacklevel=2)
            continue
        usable.append(v)
    ts = np.array([v.t for v in usable], dtype=float)
    if len(usable) < 5 or np.unique(ts).size < 5:
        raise ArgumentError(f"rate fit needs >= 5 usable values with distinct t, got {len(usable)}")
    if math.log10(ts.max() / ts.min()) < 2 - 1e-9:
        raise ArgumentError("rate fit needs t values spanning at least two decades")
    x = np.log(ts)
    y = np.log(np.abs([v.value for v in usable]))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - float(np.sum(resid**2)) / ss_tot))
    return RateFit(float(slope), float(intercept), r2, (float(ts.min()), float(ts.max())))
