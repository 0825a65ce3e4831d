"""Probe-induced Stark shifts of the Zeeman resonances, the magic
polarization angle, and the laser-noise pile-up ratio of the tensor
coupling.

The tensor light shift moves the m <-> m+1 resonance by an amount
proportional to [1 + 3 cos(2 alpha)] [2m + 1]; oppositely pumped
samples (outermost transitions m = 3 and m = -4) therefore shift by
equal and opposite amounts and cannot be overlapped with the light on,
unless the polarization sits at the magic angle or a compensating bias
field follows the optical pulse.

Angles are degrees at the API, radians internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import h as PLANCK
from scipy.constants import physical_constants

from .interface import CESIUM, AtomicConstants, coupling_coefficients

BOHR_MAGNETON = physical_constants["Bohr magneton"][0]

MAGIC_ANGLE_DEG = math.degrees(math.acos(-1.0 / 3.0)) / 2.0  # 54.7356...


@dataclass(frozen=True)
class StarkConfig:
    polarization_angle_deg: float   # between probe polarization and the mean spin
    photon_flux: float | np.ndarray  # photons/s, scalar or pulse-shaped series
    beam_area_cm2: float
    detuning_mhz: float
    f_quantum: int = 4
    m: int = 3                      # lower sublevel of the m <-> m+1 transition

    def __post_init__(self):
        if self.beam_area_cm2 <= 0:
            raise ValueError("beam_area_cm2 must be positive")
        if abs(self.m) > self.f_quantum:
            raise ValueError(f"|m| must not exceed F={self.f_quantum}")


def _tensor_prefactor(cfg: StarkConfig, constants: AtomicConstants) -> float:
    """gamma lambda^2 a2 / (A Delta) in SI, the scale of all tensor shifts."""
    _, _, a2 = coupling_coefficients(cfg.detuning_mhz, constants)
    area_m2 = cfg.beam_area_cm2 * 1e-4
    delta_ang = 2e6 * math.pi * cfg.detuning_mhz
    return constants.gamma * constants.wavelength**2 * a2 / (area_m2 * delta_ang)


def stark_line_shift(cfg: StarkConfig, constants: AtomicConstants = CESIUM):
    """Shift of the m <-> m+1 magnetic resonance in Hz.

    delta nu = gamma lambda^2 a2 / (64 pi^2 A Delta) * phi(t)
               * [1 + 3 cos(2 alpha)] * [2m + 1]

    Vanishes at the magic angle; antisymmetric under m -> -(m+1).
    Returns an array when the photon flux is a series.
    """
    if cfg.m + 1 > cfg.f_quantum:
        raise ValueError(
            f"m={cfg.m} does not label an m <-> m+1 transition within F={cfg.f_quantum}"
        )
    angular = math.radians(cfg.polarization_angle_deg)
    geometry = 1.0 + 3.0 * math.cos(2.0 * angular)
    flux = np.asarray(cfg.photon_flux, dtype=float)
    shift = (
        _tensor_prefactor(cfg, constants)
        / (64.0 * math.pi**2)
        * flux
        * geometry
        * (2 * cfg.m + 1)
    )
    return float(shift) if shift.ndim == 0 else shift


def stark_level_shift(cfg: StarkConfig, constants: AtomicConstants = CESIUM):
    """Energy shift of sublevel m in angular frequency units (rad/s).

    E_m/hbar = gamma lambda^2 a2 phi / (16 pi A Delta)
               * [ (1+3cos2a)/2 m^2 - (1+cos2a)/2 F(F+1) ]

    The finite difference over m reproduces :func:`stark_line_shift`
    times 2*pi; m and -m are degenerate.
    """
    angular = math.radians(cfg.polarization_angle_deg)
    cos2a = math.cos(2.0 * angular)
    f = cfg.f_quantum
    bracket = 0.5 * (1.0 + 3.0 * cos2a) * cfg.m**2 - 0.5 * (1.0 + cos2a) * f * (f + 1)
    flux = np.asarray(cfg.photon_flux, dtype=float)
    shift = _tensor_prefactor(cfg, constants) / (16.0 * math.pi) * flux * bracket
    return float(shift) if shift.ndim == 0 else shift


def laser_noise_ratio(
    f_quantum: int, a1: float, a2: float, noise_sy_over_sz: float = 1.0
) -> float:
    """Unwanted-to-wanted noise written onto the spins by the tensor term.

    4 (2F-1)^2 (a2/a1)^2 * Noise(S_y)/Noise(S_z); about 2% for F=4 at
    a2/a1 = 0.01 with shot-noise-limited polarization noise.
    """
    if a1 == 0:
        raise ValueError("a1 must be nonzero")
    if noise_sy_over_sz < 0:
        raise ValueError("noise ratio must be >= 0")
    return 4.0 * (2 * f_quantum - 1) ** 2 * (a2 / a1) ** 2 * noise_sy_over_sz


def compensation_bias_field(
    shift_hz: np.ndarray, g_f: float = CESIUM.g_f
) -> np.ndarray:
    """Bias-field pulse (tesla) whose Larmor shift cancels a resonance-shift series.

    Inverts Omega_L = g_F mu_B B / hbar sample by sample:
    delta B = h * delta nu / (g_F mu_B).
    """
    shifts = np.asarray(shift_hz, dtype=float)
    return shifts * PLANCK / (g_f * BOHR_MAGNETON)
