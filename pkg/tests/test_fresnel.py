"""Slab coefficients against a partial-wave series oracle, energy conservation,
knife-edge reference values.

The oracle sums the internal multiple-reflection series term by term
(front-face reflection + m round trips inside the slab) and must agree with
the closed-form layer expressions to near machine precision.
"""

import numpy as np
import pytest

from roomwave.fresnel import (
    C_LIGHT,
    EPS0,
    FSPL_CONST_DB,
    free_space_gain,
    free_space_gain_db,
    fresnel_nu,
    fresnel_slab_coefficients,
    knife_edge_loss_db,
    slab_amplitudes,
    slab_power_coefficients,
)
from roomwave.scene import Material


def series_slab_oracle(er, sigma, d, theta, f, terms=4000):
    """Partial-wave sum: R = r12 + sum of m-round-trip leakage, T likewise.

    Independent of the closed form under test; uses only the interface
    amplitudes and the geometric ray picture.
    """
    omega = 2 * np.pi * f
    k0 = omega / C_LIGHT
    eps = er - 1j * sigma / (omega * EPS0)
    kz1 = k0 * np.cos(theta)
    kz2 = k0 * np.sqrt(eps - np.sin(theta) ** 2)
    ph1 = np.exp(-1j * kz2 * d)
    ph2 = ph1 * ph1
    out = []
    for r in ((kz1 - kz2) / (kz1 + kz2),
              (eps * kz1 - kz2) / (eps * kz1 + kz2)):
        t_prod = 1.0 - r * r           # t12 * t21
        m = np.arange(terms)
        # back-face reflection is -r; each extra round trip multiplies by r^2*ph2
        R = r + np.sum(t_prod * (-r) * (r * r) ** m * ph2 ** (m + 1))
        T = np.sum(t_prod * (r * r) ** m * ph2 ** m) * ph1
        out.extend([R, T])
    return out  # [R_te, T_te, R_tm, T_tm]


def test_closed_form_matches_series_oracle():
    rng = np.random.default_rng(42)
    for _ in range(60):
        er = rng.uniform(1.0, 8.0)
        sigma = rng.choice([0.0, rng.uniform(0.0, 0.5)])
        d = rng.uniform(0.005, 0.4)
        theta = rng.uniform(0.0, 1.3)
        f = 5.92e9
        want = series_slab_oracle(er, sigma, d, theta, f)
        got = slab_amplitudes(er, sigma, d, theta, f)
        for g, w in zip(got, want):
            assert abs(g - w) < 1e-10 * max(1.0, abs(w))


def test_lossless_energy_conservation_per_polarization():
    rng = np.random.default_rng(7)
    n = 10_000
    er = rng.uniform(1.0, 8.0, n)
    d = rng.uniform(0.001, 0.5, n)
    theta = rng.uniform(0.0, np.pi / 2 - 1e-6, n)
    R_te, T_te, R_tm, T_tm = slab_amplitudes(er, 0.0, d, theta, 5.92e9)
    assert np.max(np.abs(np.abs(R_te) ** 2 + np.abs(T_te) ** 2 - 1.0)) < 1e-9
    assert np.max(np.abs(np.abs(R_tm) ** 2 + np.abs(T_tm) ** 2 - 1.0)) < 1e-9


def test_lossy_slab_absorbs():
    R, T = slab_power_coefficients(4.0, 0.1, 0.2, 0.3, 5.92e9)
    assert R + T < 1.0
    assert 0.0 <= R <= 1.0 and 0.0 <= T <= 1.0


def test_vacuum_slab_is_transparent():
    mat = Material("air-gap", "glass", 1.0, 0.0, 0.1)
    R, T = fresnel_slab_coefficients(mat, 0.4)
    assert R == pytest.approx(0.0, abs=1e-12)
    assert T == pytest.approx(1.0, abs=1e-12)


def test_metal_slab_blocks():
    mat = Material("steel", "metal", 1.0, 1e7, 0.05)
    R, T = fresnel_slab_coefficients(mat, 0.0)
    assert R >= 0.99
    assert T <= 1e-6


def test_te_tm_equal_power_at_normal_incidence():
    R_te, T_te, R_tm, T_tm = slab_amplitudes(5.0, 0.02, 0.1, 0.0, 5.92e9)
    assert abs(R_te) ** 2 == pytest.approx(abs(R_tm) ** 2, rel=1e-12)
    assert abs(T_te) ** 2 == pytest.approx(abs(T_tm) ** 2, rel=1e-12)


def test_brewster_angle_kills_tm_reflection():
    er = 4.0
    theta_b = np.arctan(np.sqrt(er))
    _, _, R_tm, _ = slab_amplitudes(er, 0.0, 0.13, theta_b, 5.92e9)
    assert abs(R_tm) < 1e-12


def test_thin_slab_limit_transparent():
    R, T = slab_power_coefficients(6.0, 0.05, 1e-9, 0.7, 5.92e9)
    assert R < 1e-6
    assert T > 1.0 - 1e-6


def test_angle_domain_errors():
    mat = Material("oak", "wood", 2.0, 0.05, 0.03)
    with pytest.raises(ValueError):
        fresnel_slab_coefficients(mat, np.pi / 2)
    with pytest.raises(ValueError):
        fresnel_slab_coefficients(mat, -0.1)


def test_grazing_angle_reflectance_approaches_one():
    R, T = slab_power_coefficients(3.0, 0.0, 0.1, np.pi / 2 - 1e-9, 5.92e9)
    assert R > 1.0 - 1e-6


# ---- knife edge -------------------------------------------------------------

def test_knife_edge_grazing_value():
    # J(0) = 6.9 + 20*log10(sqrt(1.01) - 0.1), hand-evaluated
    assert knife_edge_loss_db(0.0) == pytest.approx(6.0330, abs=1e-3)


def test_knife_edge_zero_below_cutoff():
    assert knife_edge_loss_db(-0.79) == 0.0
    assert knife_edge_loss_db(-5.0) == 0.0


def test_knife_edge_nearly_continuous_at_cutoff():
    assert abs(knife_edge_loss_db(-0.7799)) < 0.01


def test_knife_edge_monotone_in_nu():
    nu = np.linspace(-0.7, 6.0, 300)
    j = knife_edge_loss_db(nu)
    assert np.all(np.diff(j) > 0)


def test_fresnel_nu_hand_case():
    # h=1 m, d1=d2=10 m, lambda=0.05 m -> nu = sqrt(2*20/(0.05*100)) = sqrt(8)
    assert fresnel_nu(1.0, 10.0, 10.0, 0.05) == pytest.approx(np.sqrt(8.0), rel=1e-12)


def test_fresnel_nu_sign_follows_clearance():
    assert fresnel_nu(-1.0, 10.0, 10.0, 0.05) < 0


# ---- free-space constant -----------------------------------------------------

def test_free_space_db_reference_points():
    got1 = free_space_gain_db(1.0, 5.92e9)
    got2 = free_space_gain_db(2.0, 5.92e9)
    assert got1 == pytest.approx(-47.90, abs=5e-3)
    assert got2 == pytest.approx(-53.92, abs=5e-3)
    # doubling the distance costs exactly 20*log10(2)
    assert got1 - got2 == pytest.approx(20.0 * np.log10(2.0), abs=1e-9)


def test_free_space_gain_linear_matches_db():
    g = free_space_gain(3.7, 5.92e9)
    assert 10.0 * np.log10(g) == pytest.approx(free_space_gain_db(3.7, 5.92e9), abs=1e-12)


def test_fspl_constant_value():
    assert FSPL_CONST_DB == 147.55
