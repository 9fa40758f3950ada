import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levlab import hyperbolic as H
from levlab._common import ArgumentError, SupportError, bump_on
from levlab.euclid import EvenProfile

H2, H3, H4 = (H.HyperbolicModel(d) for d in (2, 3, 4))


def shell(model, a=0.5, b=1.5, T=2.0, n=1000):
    return H.BiinvariantFunction.sample(model, lambda t: bump_on(t, a, b), T, n, support=b)


@pytest.fixture(scope="module")
def h3_pair():
    f = shell(H3)
    return f, H.sft_forward(f)


# ------------------------------------------------------------ model constants

def test_model_constants():
    assert (H3.rho, H3.m_alpha, H3.dim_n, H3.alpha) == (1.0, 2, 2, 0.0)
    assert H2.rho == 0.5 and H2.alpha == -0.5
    assert H3.mehler_const == pytest.approx(0.5)
    assert H.HyperbolicModel.parse(" h4 ") == H4 and str(H4) == "H4"
    with pytest.raises(ArgumentError):
        H.HyperbolicModel.parse("R3")
    with pytest.raises(ArgumentError):
        H.HyperbolicModel(1)


def test_volume_density():
    t = np.array([0.0, 0.5, 2.0])
    np.testing.assert_allclose(H3.J(t), 4 * np.pi * np.sinh(t) ** 2, rtol=1e-15)
    np.testing.assert_allclose(H2.J(t), 2 * np.pi * np.sinh(t), rtol=1e-15)


def test_plancherel_density_closed_forms():
    lam = np.linspace(0.01, 30, 200)
    np.testing.assert_allclose(H.plancherel_density(H3, lam), lam**2 / (2 * np.pi**2),
                               rtol=1e-12)
    np.testing.assert_allclose(H.plancherel_density(H2, lam),
                               lam * np.tanh(np.pi * lam) / (2 * np.pi), rtol=1e-12)
    assert H.plancherel_density(H3, 0.0) == 0.0


def test_c_density_domain():
    assert H.c_density(H3, 2.0) == pytest.approx(4 / (2 * np.pi**2))
    with pytest.raises(ArgumentError):
        H.c_density(H3, 0.0)


# ------------------------------------------------------------ spherical functions

def test_phi_closed_form_d3():
    lam = np.linspace(0, 20, 81)[:, None]
    t = np.linspace(0.01, 5, 100)[None, :]
    a = H.phi_lambda(H3, lam, t, method="mehler")
    b = H.phi_lambda(H3, lam, t, method="closed")
    assert np.abs(a - b).max() < 1e-9


def test_phi_zero_d3():
    t = np.linspace(0.1, 4, 9)
    np.testing.assert_allclose(H.phi_lambda(H3, 0.0, t, method="mehler"), t / np.sinh(t),
                               rtol=1e-12)


@pytest.mark.parametrize("model", [H2, H3, H4])
def test_phi_at_i_rho_is_one(model):
    t = np.linspace(0, 3, 7)
    np.testing.assert_allclose(H.phi_lambda(model, 1j * model.rho, t).real, 1.0, atol=1e-11)


@pytest.mark.parametrize("model", [H2, H4])
def test_phi_mehler_matches_sphere_integral(model):
    lam = np.array([0.5, 4.0, 11.0])[:, None]
    t = np.array([0.3, 1.7, 3.1])[None, :]
    a = H.phi_lambda(model, lam, t, method="mehler")
    b = H.phi_lambda(model, lam, t, method="kintegral")
    assert np.abs(a - b).max() < 1e-10


def test_phi_at_origin():
    assert H.phi_lambda(H2, 7.0, 0.0) == pytest.approx(1.0)


def test_phi_method_check():
    with pytest.raises(ArgumentError):
        H.phi_lambda(H2, 1.0, 1.0, method="closed")


@given(st.sampled_from([2, 3, 4]), st.floats(0, 40), st.floats(0, 6))
def test_phi_bounded_by_phi_zero(d, lam, t):
    model = H.HyperbolicModel(d)
    phi = H.phi_lambda(model, lam, t)
    phi0 = H.phi_lambda(model, 0.0, t)
    assert abs(phi0.imag) < 1e-14
    assert abs(phi) <= phi0.real + 1e-12 and phi0.real <= 1 + 1e-12


@given(st.sampled_from([2, 3, 4]), st.floats(0, 2), st.floats(0, 5))
def test_phi_imaginary_growth(d, mu, t):
    model = H.HyperbolicModel(d)
    val = H.phi_lambda(model, 1j * mu, t)
    assert abs(val.imag) < 1e-12
    phi0 = H.phi_lambda(model, 0.0, t).real
    assert 0 < val.real <= math.exp(mu * t) * phi0 * (1 + 1e-10)


@given(st.sampled_from([2, 3, 4]), st.floats(0, 30), st.floats(0, 5))
def test_phi_even_in_lambda(d, lam, t):
    model = H.HyperbolicModel(d)
    assert H.phi_lambda(model, -lam, t) == pytest.approx(H.phi_lambda(model, lam, t),
                                                         abs=1e-13)


# ------------------------------------------------------------ transforms

@pytest.mark.parametrize("model", [H2, H3])
def test_round_trip_and_plancherel(model):
    f = shell(model)
    F = H.sft_forward(f)
    g = H.sft_inverse(F, f.t)
    assert np.abs(g.values - f.values).max() < 1e-8
    lhs, rhs = H.plancherel_sides(f, F)
    assert abs(lhs - rhs) / lhs < 1e-10


def test_round_trip_h4():
    f = shell(H4)
    g = H.sft_inverse(H.sft_forward(f), f.t)
    assert np.abs(g.values - f.values).max() < 1e-5


def test_direct_and_abel_forward_agree(h3_pair):
    f, F = h3_pair
    lam = np.array([0.0, 3.0, 17.0])
    a = H.sft_forward(f, lam, method="direct").values
    b = H.sft_forward(f, lam).values
    assert np.abs(a - b).max() < 1e-10 * np.abs(F.values).max()


def test_forward_at_zero_is_phi0_integral(h3_pair):
    f, F = h3_pair
    phi0 = H.phi_lambda(H3, 0.0, f.t)
    assert F.values[0].real == pytest.approx(H.radial_integral(H3, f.t, phi0 * f.values.real),
                                             rel=1e-12)


def test_tail_reporting(h3_pair):
    _, F = h3_pair
    assert "tail_ratio" in F.meta and "truncated" in F.meta
    assert F.step == pytest.approx(H.default_lambda_step(2.0, H3))


def test_zero_function():
    f = H.BiinvariantFunction(H3, np.linspace(0, 2, 201), np.zeros(201), support=1.0)
    F = H.sft_forward(f)
    assert np.all(F.values == 0)
    assert np.all(H.sft_inverse(F, f.t).values == 0)


def test_inverse_needs_uniform_grid():
    F = H.SpectralFunction(H3, np.array([0.0, 1.0, 3.0]), np.ones(3))
    with pytest.raises(ArgumentError):
        H.sft_inverse(F, np.linspace(0, 1, 5))


@settings(max_examples=8)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_forward_is_linear(a, b):
    u, v = shell(H3, n=400), shell(H3, 0.2, 1.0, n=400)
    lam = np.linspace(0, 30, 61)
    w = H.BiinvariantFunction(H3, u.t, a * u.values + b * v.values, support=1.5)
    lhs = H.sft_forward(w, lam).values
    rhs = a * H.sft_forward(u, lam).values + b * H.sft_forward(v, lam).values
    # quadrature panels follow each input's support hull, so equality holds
    # to discretisation accuracy rather than to rounding
    scale = (1 + abs(a) + abs(b)) * np.abs(rhs).max()
    assert np.abs(lhs - rhs).max() <= 1e-9 * scale


# ------------------------------------------------------------ heat

def test_heat_semigroup_exact():
    lam = np.linspace(0, 20, 401)
    a, b = H.heat_hat(H3, 0.3, lam), H.heat_hat(H3, 0.7, lam)
    ab = H.convolve_spectral(a, b).values
    assert np.abs(ab - H.heat_hat(H3, 1.0, lam).values).max() <= 1e-15


@pytest.mark.parametrize("model, t", [(H2, 0.1), (H2, 1.0), (H3, 0.1), (H3, 1.0)])
def test_heat_mass(model, t):
    h = H.heat_kernel(model, t)
    assert abs(H.radial_integral(model, h.t, h.values.real) - 1) < 1e-8


def test_heat_kernel_h3_closed_form():
    h = H.heat_kernel(H3, 1.0)
    tau = h.t[1:]
    exact = (4 * np.pi) ** -1.5 * tau / np.sinh(tau) * np.exp(-1 - tau**2 / 4)
    assert np.abs(h.values[1:].real - exact).max() < 1e-14


def test_heat_apply_equals_explicit_product(h3_pair):
    f, F = h3_pair
    a = H.heat_apply(f, 0.1)
    b = H.sft_inverse(H.convolve_spectral(F, H.heat_hat(H3, 0.1, F.lam)), f.t)
    np.testing.assert_array_equal(a.values, b.values)


def test_heat_arguments():
    with pytest.raises(ArgumentError):
        H.heat_hat(H3, 0.0, [0.0, 1.0])


def test_convolution_grid_mismatch(h3_pair):
    _, F = h3_pair
    with pytest.raises(ArgumentError):
        H.convolve_spectral(F, H.heat_hat(H3, 1.0, F.lam[:-1]))
    with pytest.raises(ArgumentError):
        H.convolve_spectral(F, H.heat_hat(H2, 1.0, F.lam))


def test_convolution_support_adds():
    f = H.BiinvariantFunction.sample(H3, lambda t: bump_on(t, 0.0, 1.0), 3.0, 1500, support=1.0)
    p = H.BiinvariantFunction.sample(H3, lambda t: bump_on(t, 0.0, 0.5), 3.0, 1500, support=0.5)
    F = H.sft_forward(f)
    c = H.sft_inverse(H.convolve_spectral(F, H.sft_forward(p, F.lam)), f.t)
    assert c.effective_support(1e-6) <= 1.5 + 2 * f.step


# ------------------------------------------------------------ Abel

@pytest.fixture(scope="module")
def abel_case():
    f = H.BiinvariantFunction.sample(H3, lambda t: bump_on(t, 0.0, 1.0), 3.0, 1500, support=1.0)
    return f, H.sft_forward(f), H.abel_forward(f)


def test_abel_intertwines(abel_case):
    f, F, g = abel_case
    err = np.abs(H.even_fourier(g, F.lam) - F.values).max() / np.abs(F.values).max()
    assert err < 1e-6


def test_abel_spectral_matches_direct(abel_case):
    f, _, g = abel_case
    assert np.abs(H.abel_forward(f, method="direct").values - g.values).max() < 1e-8


def test_abel_round_trips(abel_case):
    f, _, g = abel_case
    back = H.abel_inverse(g, H3, L=1.0)
    assert np.abs(back.values - f.values).max() < 1e-4
    assert np.abs(H.abel_forward(back).values - g.values).max() < 1e-4


def test_abel_is_even_and_supported(abel_case):
    _, _, g = abel_case
    np.testing.assert_array_equal(g.values, g.values[::-1])
    assert g.effective_support() <= 1.0 + g.step


def test_abel_needs_declared_support():
    f = H.BiinvariantFunction.sample(H3, lambda t: bump_on(t, 0.0, 1.0), 2.0, 400)
    with pytest.raises(SupportError):
        H.abel_forward(f)


def test_abel_inverse_rejects_wide_profile():
    s = np.linspace(0, 3, 601)
    g = EvenProfile.from_half(s, bump_on(s, -2.0, 2.0))
    with pytest.raises(SupportError):
        H.abel_inverse(g, H3, L=1.0)


# ------------------------------------------------------------ Paley-Wiener

def test_paley_wiener_constant_stable(abel_case):
    f, _, _ = abel_case
    report = H.paley_wiener_check(f, 1.0)
    assert report.stable and report.spread <= 0.10
    assert np.all(np.abs(report.values) <= report.fitted.max() * np.exp(report.mus) * (1 + 1e-12))


def test_imaginary_transform_at_zero_matches_real(abel_case):
    f, F, _ = abel_case
    assert H.spherical_transform_imag(f, [0.0])[0] == pytest.approx(F.values[0].real, rel=1e-10)
