import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from singlap.errors import ArgumentError, DomainError, ModelError
from singlap.geometry import AngularProfile, get_metric
from singlap.harness import CONE_VALUE, cone_field, counterexample_setup, mc_setup, table1_setup, volume
from singlap.operators import (
    IntrinsicDistanceModel,
    KernelFlavor,
    KernelSpec,
    LaplacianValue,
    SampleSet,
    ScalarField,
    continuous_extrinsic_laplacian,
    continuous_intrinsic_laplacian,
    discrete_graph_laplacian,
    sample_density,
    truncation_tail_bound,
)
from singlap.quadrature import QuadratureSpec, TruncationPolicy, integrate_polar

# scipy nested adaptive quadrature (epsrel 1e-13) of the disk-a04 intrinsic operator
TABLE1_ORACLE = {1e-1: 2.157188397832398, 1e-2: 7.538346157434636, 5e-4: 33.95518675439218}

FLAT_ONE = IntrinsicDistanceModel(AngularProfile.constant(1.0))
R2 = ScalarField.quadratic(0.0, (0.0, 0.0), ((2.0, 0.0), (0.0, 2.0)))
ONE = ScalarField.constant(1.0)
CONE = KernelSpec(KernelFlavor.EXTRINSIC_CONE)


# --- continuous intrinsic -------------------------------------------------

@pytest.mark.parametrize("t", sorted(TABLE1_ORACLE))
def test_table1_against_adaptive_oracle(t):
    f, p, metric, model = table1_setup()
    v = continuous_intrinsic_laplacian(f, p, metric, model, t)
    assert v.value == pytest.approx(TABLE1_ORACLE[t], rel=1e-10)


def test_table1_first_row_reference_value():
    f, p, metric, model = table1_setup()
    v = continuous_intrinsic_laplacian(f, p, metric, model, 1e-1)
    assert v.scaled == pytest.approx(0.682163, abs=2e-4)
    assert v.scaled == pytest.approx(0.682163, abs=1e-6)


@pytest.mark.parametrize("t", [1e-1, 1e-2, 1e-3, 1e-4])
def test_flat_interior_value(t):
    v = continuous_intrinsic_laplacian(R2, ONE, get_metric("flat"), FLAT_ONE, t)
    assert v.value == pytest.approx(-math.pi, rel=1e-10)


def test_intrinsic_rejects_bad_bandwidth():
    for t in (0.0, -1e-3, math.inf, math.nan):
        with pytest.raises(DomainError):
            continuous_intrinsic_laplacian(R2, ONE, get_metric("flat"), FLAT_ONE, t)


def test_model_rejects_nonpositive_distortion():
    with pytest.raises(ModelError):
        IntrinsicDistanceModel(AngularProfile(lambda th: np.cos(th)))


def test_model_remainder_check():
    m = IntrinsicDistanceModel(AngularProfile.constant(1.0), (1.0, 1.0), E=lambda r, th: 0.5 * r**3 + 0 * th)
    assert m.check_remainder(np.array([0.1, 0.5]), np.zeros(2))
    bad = IntrinsicDistanceModel(AngularProfile.constant(1.0), (0.1, 1.0), E=lambda r, th: r**3 + 0 * th)
    assert not bad.check_remainder(np.array([0.5]), np.zeros(1))


def test_intrinsic_with_remainder_term():
    # E = r^4 on the flat disk: compare with a 1-D radial oracle
    model = IntrinsicDistanceModel(AngularProfile.constant(1.0), (1.0, 2.0), E=lambda r, th: r**4 + 0 * th)
    t = 1e-2
    v = continuous_intrinsic_laplacian(R2, ONE, get_metric("flat"), model, t)
    exact = -2 * math.pi * integrate.quad(lambda r: math.exp(-(r * r + r**4) / t) * r**3, 0, 1, epsrel=1e-13)[0] / t**2
    assert v.value == pytest.approx(exact, rel=1e-9)


# --- continuous extrinsic -------------------------------------------------

@pytest.mark.parametrize("t", [1e-1, 1e-2, 1e-3, 1e-4])
def test_cone_value(t):
    v = continuous_extrinsic_laplacian(cone_field(), ONE, CONE, t)
    assert v.value == pytest.approx(CONE_VALUE, abs=1e-10)
    assert CONE_VALUE == pytest.approx(-1.1107207345, abs=1e-10)


def test_angular_cos_scaled_limit():
    f, p, metric, vol = counterexample_setup()
    # oracle: adaptive 1-D quadratures
    vol_q = 0.5 * integrate.quad(lambda th: math.exp(2 * math.cos(th)), 0, 2 * math.pi, epsrel=1e-13)[0]
    bm = integrate.quad(lambda th: math.cos(th) * math.exp(2 * math.cos(th)), 0, 2 * math.pi, epsrel=1e-13)[0]
    assert vol == pytest.approx(vol_q, rel=1e-12)
    assert vol == pytest.approx(math.pi * special.iv(0, 2), rel=1e-12)
    assert bm == pytest.approx(2 * math.pi * special.iv(1, 2), rel=1e-12)
    # c_2 = int_0^inf r^2 e^{-r^2} dr = sqrt(pi)/4
    limit = -(math.sqrt(math.pi) / 4) * bm / vol_q
    spec = KernelSpec(KernelFlavor.EXTRINSIC_PLANE, truncation=TruncationPolicy.fixed(1.0), metric=metric)
    for t in (1e-3, 1e-5):
        assert continuous_extrinsic_laplacian(f, p, spec, t).scaled == pytest.approx(limit, rel=1e-6)
    assert limit == pytest.approx(-0.618, abs=1e-3)


def test_flat_linear_field_vanishes():
    metric = get_metric("flat")
    spec = KernelSpec(KernelFlavor.EXTRINSIC_PLANE, metric=metric)
    f = ScalarField.quadratic(0.0, (1.3, -0.4))
    for t in (1e-1, 1e-3):
        assert abs(continuous_extrinsic_laplacian(f, ONE, spec, t).value) < 1e-10


def test_plane_kernel_needs_metric():
    with pytest.raises(ArgumentError):
        KernelSpec(KernelFlavor.EXTRINSIC_PLANE)
    with pytest.raises(ArgumentError):
        KernelSpec(KernelFlavor.INTRINSIC)


def test_extrinsic_rejects_intrinsic_flavor():
    spec = KernelSpec(KernelFlavor.INTRINSIC, model=FLAT_ONE)
    with pytest.raises(ArgumentError):
        continuous_extrinsic_laplacian(R2, ONE, spec, 1e-2)


def test_infinite_fixed_radius_rejected():
    with pytest.raises(ArgumentError):
        TruncationPolicy.fixed(math.inf)


def test_cone_default_truncation_is_bandwidth_multiple():
    # the unbounded cone is cut at 10 sqrt(t); the dropped Gaussian mass is below e^{-200}
    assert CONE.truncation == TruncationPolicy.multiple(10.0)


# --- operator invariants --------------------------------------------------

SWEEP = QuadratureSpec(128, 200)


def _all_operators(f, t):
    f1, p, metric, model = table1_setup()
    out = [
        continuous_intrinsic_laplacian(f, p, metric, model, t, SWEEP).value,
        continuous_extrinsic_laplacian(f, p, KernelSpec(KernelFlavor.EXTRINSIC_PLANE, metric=metric), t, SWEEP).value,
        continuous_extrinsic_laplacian(f, p, CONE, t, SWEEP).value,
    ]
    samples = sample_density(get_metric("angular-cos"), p, 500, seed=3)
    out.append(discrete_graph_laplacian(f, samples, t).value)
    out.append(discrete_graph_laplacian(f, samples, t, distance=model).value)
    return out


@settings(max_examples=10)
@given(st.floats(-100, 100), st.sampled_from([1e-1, 1e-2, 1e-3]))
def test_constant_field_gives_zero(c, t):
    assert all(v == 0.0 for v in _all_operators(ScalarField.constant(c), t))


quad_coeffs = st.tuples(*[st.floats(-3, 3)] * 5)


def _field(c):
    return ScalarField.quadratic(0.0, (c[0], c[1]), ((c[2], c[3]), (c[3], c[4])))


@settings(max_examples=10)
@given(quad_coeffs, quad_coeffs, st.floats(-2, 2), st.floats(-2, 2))
def test_linearity(c1, c2, alpha, beta):
    t = 1e-2
    f, g = _field(c1), _field(c2)
    h = ScalarField(lambda x, y: alpha * f(x, y) + beta * g(x, y),
                    lambda x, y: alpha * f.gradient(x, y) + beta * g.gradient(x, y),
                    lambda x, y: alpha * f.hessian(x, y) + beta * g.hessian(x, y))
    lf, lg, lh = _all_operators(f, t), _all_operators(g, t), _all_operators(h, t)
    scale = max(1.0, *(abs(v) for v in lf + lg))
    for a, b, c in zip(lf, lg, lh):
        assert c == pytest.approx(alpha * a + beta * b, abs=1e-10 * scale * (abs(alpha) + abs(beta) + 1))


@given(st.floats(1e-6, 1.0), st.floats(0.0, 10.0), st.floats(0, 2 * math.pi))
def test_kernel_weights_in_unit_interval(t, r, th):
    _, _, _, model = table1_setup()
    w = math.exp(-float(model.sq_distance(r, th)) / t)
    assert 0.0 <= w <= 1.0


@pytest.mark.parametrize("t", [1e-2, 1e-3, 1e-4])
def test_truncation_insensitivity(t):
    f, p, metric, model = table1_setup()
    a = continuous_intrinsic_laplacian(f, p, metric, model, t, truncation=TruncationPolicy.multiple(10.0)).value
    b = continuous_intrinsic_laplacian(f, p, metric, model, t, truncation=TruncationPolicy.power(0.45)).value
    quad = QuadratureSpec(512, 400)
    p_l1 = integrate_polar(lambda r, th: metric.volume_density(r, th) * r, 0, 1, quad)[0]
    fp_l1 = integrate_polar(lambda r, th: np.abs(f.polar(r, th)) * metric.volume_density(r, th) * r, 0, 1, quad)[0]
    bound = truncation_tail_bound(0.0, p_l1, fp_l1, t, 0.45)
    assert abs(a - b) < 10 * bound


# --- fields ---------------------------------------------------------------

def test_from_function_derivatives():
    fn = lambda x, y: np.sin(x) * np.exp(y) + x * y**2
    f = ScalarField.from_function(fn)
    x, y = 0.3, -0.2
    grad = np.array([math.cos(x) * math.exp(y) + y * y, math.sin(x) * math.exp(y) + 2 * x * y])
    hess = np.array([[-math.sin(x) * math.exp(y), math.cos(x) * math.exp(y) + 2 * y],
                     [math.cos(x) * math.exp(y) + 2 * y, math.sin(x) * math.exp(y) + 2 * x]])
    assert f.grad_at(x, y) == pytest.approx(grad, rel=1e-8)
    assert f.hess_at(x, y) == pytest.approx(hess, rel=1e-5, abs=1e-7)


@given(quad_coeffs, st.floats(-1, 1), st.floats(-1, 1))
def test_hessian_symmetric(c, x, y):
    for f in (_field(c), ScalarField.from_function(_field(c))):
        H = f.hess_at(x, y)
        assert H[0, 1] == pytest.approx(H[1, 0], abs=1e-6)


def test_quadratic_field_values():
    f = ScalarField.quadratic(1.0, (2.0, -1.0), ((1.0, 0.5), (0.5, -2.0)))
    x, y = 0.3, 0.7
    assert f(x, y) == pytest.approx(1 + 2 * x - y + 0.5 * (x * x + x * y - 2 * y * y))
    assert f.polar(1.0, 0.0) == pytest.approx(f(1.0, 0.0))


def test_scaled_property():
    v = LaplacianValue(0.04, 3.0)
    assert v.scaled == 0.2 * 3.0


# --- sampling -------------------------------------------------------------

def test_uniform_disk_mean_radius():
    disk, _, p = mc_setup()
    s = sample_density(disk, p, 200_000, seed=1)
    assert s.r.mean() == pytest.approx(2 / 3, abs=5 * (1 / math.sqrt(18)) / math.sqrt(s.n))
    assert np.all((s.r > 0) & (s.r <= 1.0))
    assert 0 < s.acceptance_rate <= 1


def test_angular_cos_theta_histogram():
    _, p, metric, _ = counterexample_setup()
    s = sample_density(metric, p, 100_000, seed=7)
    edges = np.linspace(0, 2 * np.pi, 33)
    observed, _ = np.histogram(s.theta, edges)
    # oracle: normalised 1-D quadrature of e^{2 cos theta}
    norm = 2 * math.pi * special.iv(0, 2)
    expected = np.array([integrate.quad(lambda th: math.exp(2 * math.cos(th)), a, b)[0] for a, b in zip(edges, edges[1:])]) / norm
    chi2, pval = stats.chisquare(observed, expected * s.n)
    assert pval > 1e-3


def test_sampling_reproducible():
    disk, _, p = mc_setup()
    a = sample_density(disk, p, 1000, seed=11)
    b = sample_density(disk, p, 1000, seed=11)
    c = sample_density(disk, p, 1000, seed=12)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)


def test_sampling_needs_positive_n():
    disk, _, p = mc_setup()
    with pytest.raises(ArgumentError):
        sample_density(disk, p, 0, seed=0)


def test_sampling_unbounded_domain_rejected():
    with pytest.raises(ArgumentError):
        sample_density(get_metric("flat"), ONE, 10, seed=0)


# --- discrete -------------------------------------------------------------

def test_discrete_single_point_equal_value():
    f = ScalarField.quadratic(1.0)
    s = SampleSet(np.array([0.3]), np.array([1.0]), 0, 1.0)
    assert discrete_graph_laplacian(f, s, 0.01).value == 0.0


def test_discrete_empty_sample_set():
    s = SampleSet(np.array([]), np.array([]), 0, 1.0)
    with pytest.raises(ArgumentError):
        discrete_graph_laplacian(R2, s, 0.01)


def test_discrete_matches_continuous():
    disk, f, p = mc_setup()
    t = 0.05
    spec = KernelSpec(KernelFlavor.EXTRINSIC_PLANE, truncation=TruncationPolicy.fixed(1.0), metric=disk)
    # p = 1/pi on the unit disk
    oracle = continuous_extrinsic_laplacian(f, p, spec, t).value
    v = discrete_graph_laplacian(f, sample_density(disk, p, 200_000, seed=42), t)
    assert abs(v.value - oracle) < 4 * v.std_err
    assert v.n == 200_000


def test_discrete_is_exact_sum():
    s = SampleSet(np.array([0.1, 0.2]), np.array([0.0, np.pi / 2]), 0, 1.0)
    t = 0.04
    expected = (math.exp(-0.01 / t) * -0.01 + math.exp(-0.04 / t) * -0.04) / 2 / t**2
    assert discrete_graph_laplacian(R2, s, t).value == pytest.approx(expected, rel=1e-14)


def test_discrete_unknown_distance():
    s = SampleSet(np.array([0.1]), np.array([0.0]), 0, 1.0)
    with pytest.raises(ArgumentError):
        discrete_graph_laplacian(R2, s, 0.1, distance="geodesic")


# --- tail bound -----------------------------------------------------------

def test_tail_bound_examples():
    assert truncation_tail_bound(1.0, 10.0, 0.0, 0.01, 0.4) == pytest.approx(1e5 * math.exp(-(0.01**-0.2)), rel=1e-14)
    assert truncation_tail_bound(1.0, 10.0, 0.0, 0.01, 0.4) == pytest.approx(8.1e3, rel=0.01)
    assert truncation_tail_bound(1.0, 4.0, 6.0, 1e-4, 0.4) == pytest.approx(1e9 * math.exp(-(10**0.8)), rel=1e-14)
    assert truncation_tail_bound(1.0, 4.0, 6.0, 1e-4, 0.4) == pytest.approx(1.8e6, rel=0.02)


def test_tail_bound_vanishes():
    ts = [1e-4, 1e-6, 1e-8, 1e-10]
    vals = [truncation_tail_bound(1.0, 1.0, 1.0, t, 0.4) for t in ts]
    # 2e20 * e^{-100}
    assert vals[-1] == pytest.approx(2e20 * math.exp(-100), rel=1e-12)
    assert all(b < a for a, b in zip(vals[1:], vals[2:]))


def test_tail_bound_eta_limit():
    t = 0.3
    assert truncation_tail_bound(2.0, 1.0, 1.0, t, 0.5 - 1e-12) == pytest.approx(3.0 * t**-2 * math.exp(-1), rel=1e-9)


@pytest.mark.parametrize("eta", [0.5, 0.7, 0.0])
def test_tail_bound_eta_domain(eta):
    with pytest.raises(DomainError):
        truncation_tail_bound(1.0, 1.0, 1.0, 0.01, eta)


def test_volume_helper():
    assert volume(get_metric("angular-cos")) == pytest.approx(math.pi * special.iv(0, 2), rel=1e-12)
