"""Interaction coefficient models: dielectric slab reflection/transmission and
single knife-edge diffraction, plus the free-space spreading constant.

Each solid object attenuates rays through a homogeneous slab of its material
(thickness = material thickness, internal multiple reflections included).
Fields follow the e^{-j k z} forward convention, so the vertical wavenumber
inside a lossy slab takes the principal square root with Im <= 0.

Power quantities only: phases are discarded by the incoherent path summation,
so TE and TM are computed separately and power-averaged.
"""

from __future__ import annotations

import numpy as np

C_LIGHT = 299792458.0           # m/s
EPS0 = 8.8541878128e-12         # F/m

# Free-space spreading constant in -20*log10(d*f) + FSPL_CONST_DB form.
# Kept as the single source of truth for both the tracer's spreading term and
# the FSPL baseline so the two agree exactly in free space.
FSPL_CONST_DB = 147.55
_FSPL_AMP = 10.0 ** (FSPL_CONST_DB / 20.0)      # ~ c / (4 pi)


def free_space_gain(length_m, frequency_hz):
    """Linear power gain of an unobstructed path of the given (unfolded) length."""
    return (_FSPL_AMP / (np.asarray(length_m, dtype=float) * frequency_hz)) ** 2


def free_space_gain_db(length_m, frequency_hz):
    return -20.0 * np.log10(np.asarray(length_m, dtype=float) * frequency_hz) + FSPL_CONST_DB


# ---- dielectric slab -------------------------------------------------------

def slab_amplitudes(rel_permittivity, conductivity, thickness_m,
                    incidence_angle, frequency_hz):
    """Complex reflection/transmission amplitudes of a slab in air.

    Broadcasts over array inputs. Returns (r_te, t_te, r_tm, t_tm) referenced
    to the incident field at the front face; |t|^2 is the power transmittance
    because entry and exit media are both air.
    """
    er = np.asarray(rel_permittivity, dtype=float)
    sig = np.asarray(conductivity, dtype=float)
    d = np.asarray(thickness_m, dtype=float)
    th = np.asarray(incidence_angle, dtype=float)

    omega = 2.0 * np.pi * frequency_hz
    k0 = omega / C_LIGHT
    eps_c = er - 1j * sig / (omega * EPS0)

    s2 = np.sin(th) ** 2
    kz1 = k0 * np.cos(th)
    # principal sqrt keeps Im <= 0 for Im(eps_c) <= 0: decaying forward wave
    kz2 = k0 * np.sqrt(eps_c - s2)

    delta = kz2 * d                 # one-way phase thickness, Im <= 0
    phase2 = np.exp(-2j * delta)    # |phase2| <= 1, underflows benignly for metal
    phase1 = np.exp(-1j * delta)

    def _layer(r, one_minus_r2):
        denom = 1.0 - r * r * phase2
        return (r * (1.0 - phase2) / denom, one_minus_r2 * phase1 / denom)

    r_te = (kz1 - kz2) / (kz1 + kz2)
    # 1 - r^2 in product form: avoids cancellation when |r| -> 1 (metal)
    r_te2c = 4.0 * kz1 * kz2 / (kz1 + kz2) ** 2
    R_te, T_te = _layer(r_te, r_te2c)

    r_tm = (eps_c * kz1 - kz2) / (eps_c * kz1 + kz2)
    r_tm2c = 4.0 * eps_c * kz1 * kz2 / (eps_c * kz1 + kz2) ** 2
    R_tm, T_tm = _layer(r_tm, r_tm2c)
    return R_te, T_te, R_tm, T_tm


def slab_power_coefficients(rel_permittivity, conductivity, thickness_m,
                            incidence_angle, frequency_hz):
    """(R_power, T_power): TE/TM power-averaged slab reflectance and transmittance."""
    R_te, T_te, R_tm, T_tm = slab_amplitudes(
        rel_permittivity, conductivity, thickness_m, incidence_angle, frequency_hz)
    R = 0.5 * (np.abs(R_te) ** 2 + np.abs(R_tm) ** 2)
    T = 0.5 * (np.abs(T_te) ** 2 + np.abs(T_tm) ** 2)
    return R, T


def fresnel_slab_coefficients(material, incidence_angle: float,
                              frequency_hz: float = 5.92e9):
    """Power reflectance/transmittance of one material slab at one angle.

    Raises ValueError outside 0 <= angle < pi/2.
    """
    if not (0.0 <= incidence_angle < np.pi / 2):
        raise ValueError(f"incidence angle {incidence_angle} outside [0, pi/2)")
    R, T = slab_power_coefficients(material.rel_permittivity, material.conductivity,
                                   material.thickness, incidence_angle, frequency_hz)
    return float(R), float(T)


# ---- knife-edge diffraction -------------------------------------------------

def fresnel_nu(clearance_m, d1_m, d2_m, wavelength_m):
    """Fresnel diffraction parameter; positive clearance = edge above the LoS line."""
    return clearance_m * np.sqrt(
        2.0 * (d1_m + d2_m) / (wavelength_m * d1_m * d2_m))


def knife_edge_loss_db(nu):
    """Single knife-edge attenuation J(nu) in dB (0 for nu <= -0.78).

    Standard approximation: J = 6.9 + 20*log10(sqrt((nu-0.1)^2 + 1) + nu - 0.1).
    """
    nu = np.asarray(nu, dtype=float)
    arg = np.sqrt((nu - 0.1) ** 2 + 1.0) + nu - 0.1
    j = 6.9 + 20.0 * np.log10(np.maximum(arg, 1e-300))
    out = np.where(nu > -0.78, j, 0.0)
    return float(out) if out.ndim == 0 else out
