import numpy as np
import pytest
from numpy.testing import assert_allclose

from deltaxrr import forward, model, xsf
from deltaxrr.errors import (
    ConfigError,
    DomainError,
    SamplingError,
    SingularityError,
)


@pytest.fixture(scope="module")
def si_mat(tables):
    return xsf.silicon(table=tables["si"])


@pytest.fixture(scope="module")
def bare_si(si_mat):
    return model.LayerStack([model.Layer(si_mat)])


def test_q_from_theta_pins():
    hc = 1239.841984
    assert_allclose(forward.q_from_theta(90.0, hc), 4.0 * np.pi, rtol=1e-12)
    assert_allclose(forward.q_from_theta(22.0, hc / 0.94),
                    5.007920518561e+00, rtol=1e-12)
    assert_allclose(forward.q_from_theta(10.0, 1324.0),
                    2.330245836200e+00, rtol=1e-12)
    with pytest.raises(DomainError):
        forward.q_from_theta(0.0, 1300.0)
    with pytest.raises(DomainError):
        forward.q_from_theta(91.0, 1300.0)


def test_curve_validation():
    q = np.linspace(1.0, 2.0, 5)
    r = np.full(5, 0.1)
    with pytest.raises(ConfigError):
        forward.ReflectivityCurve(q=q[:1], r=r[:1], energy_ev=1300.0)
    with pytest.raises(ConfigError):
        forward.ReflectivityCurve(q=q[::-1], r=r, energy_ev=1300.0)
    with pytest.raises(ConfigError):
        forward.ReflectivityCurve(q=q, r=r[:-1], energy_ev=1300.0)
    with pytest.raises(ConfigError):
        forward.ReflectivityCurve(q=q, r=-r, energy_ev=1300.0)
    with pytest.raises(ConfigError):
        forward.ReflectivityCurve(q=q, r=r, energy_ev=1300.0, sigma_r=-r)
    lam = xsf.CONSTANTS.wavelength_nm(1300.0)
    th = np.degrees(np.arcsin(q * lam / (4.0 * np.pi)))
    ok = forward.ReflectivityCurve(q=q, r=r, energy_ev=1300.0, theta_deg=th)
    assert ok.theta_deg is not None
    with pytest.raises(ConfigError):
        forward.ReflectivityCurve(q=q, r=r, energy_ev=1300.0,
                                  theta_deg=th + 0.5)


def test_scan_validation():
    e = np.array([1300.0, 1310.0, 1320.0])
    r = np.full(3, 0.5)
    with pytest.raises(ConfigError):
        forward.EnergyScan(theta_deg=10.0, energies_ev=e[::-1], r=r)
    with pytest.raises(ConfigError):
        forward.EnergyScan(theta_deg=10.0, energies_ev=e, r=r[:-1])
    with pytest.raises(DomainError):
        forward.EnergyScan(theta_deg=0.0, energies_ev=e, r=r)


def test_born_domain_guards(stack1, delta2):
    prof = model.discretize(stack1, delta2, energy_ev=1300.0)
    with pytest.raises(SingularityError):
        forward.born_reflectivity(prof, np.array([0.0, 2.0]))
    with pytest.raises(SamplingError):
        forward.born_reflectivity(prof, np.array([2.0, 400.0]))


def test_born_quadratic_in_sheet_density(stack1, tables):
    span = (-2.0, 30.0)
    q = np.linspace(1.5, 5.0, 301)
    mk = lambda n2d: model.DeltaLayerSpec.gaussian_fwhm(
        18.1, 0.9, n2d, tables["as"], tables["si"])
    p0 = model.discretize(stack1, None, energy_ev=1300.0, span=span)
    r0 = forward.born_reflectivity(p0, q)
    r1 = forward.born_reflectivity(
        model.discretize(stack1, mk(1.5), energy_ev=1300.0, span=span), q)
    r2 = forward.born_reflectivity(
        model.discretize(stack1, mk(3.0), energy_ev=1300.0, span=span), q)
    # R is exactly quadratic in N2D; the second difference isolates the
    # incoherent sheet term
    second = r2 - 2.0 * r1 + r0
    z = p0.z
    h = mk(1.5).shape_values(z - 18.1)
    big_h = np.trapezoid(h[None, :] * np.exp(-1j * np.outer(q, z)), z, axis=1)
    df = xsf.delta_f(tables["as"], tables["si"], 1300.0)
    g2 = (xsf.CONSTANTS.r0_nm * np.abs(df) * np.abs(big_h)) ** 2
    expect = 2.0 * (4.0 * np.pi) ** 2 / q ** 2 * 1.5 ** 2 * g2
    assert_allclose(second, expect, rtol=1e-9)
    # the quadratic term stays tiny for a dilute sheet
    assert np.max(np.abs(second) / r2) < 0.01


def test_born_grid_convergence(stack1, delta2):
    q = np.linspace(1.5, 5.0, 301)
    ra = forward.born_reflectivity(
        model.discretize(stack1, delta2, energy_ev=1300.0, dz_nm=0.01), q)
    rb = forward.born_reflectivity(
        model.discretize(stack1, delta2, energy_ev=1300.0, dz_nm=0.005), q)
    assert np.max(np.abs(ra - rb) / rb) < 1e-3


FRESNEL_PINS = [
    (0.5, 9.509980875562e-01),
    (2.0, 1.663341758781e-02),
    (10.0, 1.700171628071e-05),
    (30.0, 2.437889325405e-07),
]


def test_fresnel_pins_and_domain(si_mat):
    n_si = xsf.refractive_index(si_mat, 1300.0)
    for theta, want in FRESNEL_PINS:
        assert_allclose(forward.fresnel_reflectance(1.0, n_si, theta), want,
                        rtol=1e-9)
    with pytest.raises(DomainError):
        forward.fresnel_reflectance(1.0, n_si, 0.0)


def test_fresnel_total_external_reflection(si_mat):
    n2 = 1.0 - 2.462355887327e-04     # absorption-free silicon
    theta_c = np.degrees(np.arccos(n2))
    r = forward.fresnel_reflectance(1.0, n2, 0.5 * theta_c)
    assert abs(r - 1.0) < 1e-12


def test_fresnel_reciprocity():
    n2 = 0.9996
    th1 = 10.0
    th2 = np.degrees(np.arccos(np.cos(np.radians(th1)) / n2))
    r12 = forward.fresnel_reflectance(1.0, n2, th1)
    r21 = forward.fresnel_reflectance(n2, 1.0, th2)
    assert abs(r12 - r21) / r12 < 1e-12


def test_single_interface_matches_fresnel(bare_si, si_mat):
    n_si = xsf.refractive_index(si_mat, 1300.0)
    for theta, _ in FRESNEL_PINS:
        q = forward.q_from_theta(theta, 1300.0)
        r_dyn = forward.dynamical_reflectivity(bare_si, None, 1300.0,
                                               np.array([q]))
        r_fre = forward.fresnel_reflectance(1.0, n_si, theta)
        assert abs(r_dyn - r_fre) / r_fre < 1e-12


def test_roughness_attenuation_factor(si_mat):
    smooth = model.LayerStack([model.Layer(si_mat)])
    rough = model.LayerStack([model.Layer(si_mat, None, 0.1)])
    q = np.array([5.0])
    ratio = (forward.dynamical_reflectivity(rough, None, 1300.0, q)
             / forward.dynamical_reflectivity(smooth, None, 1300.0, q))
    # amplitude factor exp(-2 kz1 kz2 sigma^2) squares to ~exp(-Q^2 sigma^2)
    assert abs(float(ratio) - np.exp(-0.25)) < 1e-3


def test_dynamical_domain_guards(bare_si):
    with pytest.raises(SingularityError):
        forward.dynamical_reflectivity(bare_si, None, 1300.0,
                                       np.array([-1.0, 2.0]))
    lam = xsf.CONSTANTS.wavelength_nm(1300.0)
    with pytest.raises(DomainError):
        forward.dynamical_reflectivity(bare_si, None, 1300.0,
                                       np.array([2.0, 4.2 * np.pi / lam]))


def test_born_tracks_dynamical_above_edge(stack1, delta2):
    q = np.linspace(3.0, 5.0, 201)
    r_dyn = forward.dynamical_reflectivity(stack1, delta2, 1300.0, q)
    prof = model.discretize(stack1, delta2, energy_ev=1300.0)
    r_born = forward.born_reflectivity(prof, q)
    assert np.max(np.abs(r_born - r_dyn) / r_dyn) < 0.05


def test_energy_scan_is_smooth(stack1):
    energies = np.arange(1306.0, 1344.5, 0.5)
    scan = forward.simulate_energy_scan(stack1, None, 10.0, energies)
    rel = np.abs(np.diff(scan.r)) / scan.r[:-1]
    assert np.max(rel) < 0.01


def test_noise_validation_and_sigma(curve_1300):
    rng = np.random.default_rng(0)
    with pytest.raises(ConfigError):
        forward.add_counting_noise(curve_1300, 0.0, rng)
    noisy = forward.add_counting_noise(curve_1300, 1e10, rng)
    assert_allclose(noisy.sigma_r, np.sqrt(curve_1300.r / 1e10), rtol=1e-12)
    assert noisy.energy_ev == curve_1300.energy_ev


def test_noise_is_deterministic(curve_1300):
    a = forward.add_counting_noise(curve_1300, 1e10,
                                   np.random.default_rng(3))
    b = forward.add_counting_noise(curve_1300, 1e10,
                                   np.random.default_rng(3))
    assert np.array_equal(a.r, b.r)


def test_noise_small_at_high_flux(curve_1300):
    noisy = forward.add_counting_noise(curve_1300, 1e12,
                                       np.random.default_rng(3))
    strong = curve_1300.r >= 1e-2
    assert int(np.sum(strong)) == 3
    dev = np.abs(noisy.r[strong] - curve_1300.r[strong]) / curve_1300.r[strong]
    assert np.max(dev) < 1e-4


def test_noise_is_unbiased():
    n = 10000
    q = np.linspace(1.0, 2.0, n)
    r = np.full(n, 1e-2)
    curve = forward.ReflectivityCurve(q=q, r=r, energy_ev=1300.0)
    noisy = forward.add_counting_noise(curve, 1e8,
                                       np.random.default_rng(11))
    se = np.sqrt(1e-2 / 1e8) / np.sqrt(n)
    assert abs(np.mean(noisy.r) - 1e-2) / se < 3.0
