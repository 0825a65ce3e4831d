"""Noise and decay models: vacuum admixture, linewidth decomposition,
thermal spin noise, and the beam-crossing statistics of atomic motion.

Decay always targets the vacuum / coherent spin state, never a thermal
state; optically pumped atoms relax toward full polarization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import VACUUM_VAR, GaussianState


@dataclass(frozen=True)
class DecoherenceParams:
    beta: float   # atomic coherence retained between pulses
    zeta: float   # optical power transmission of the detection path

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if not 0.0 <= self.zeta <= 1.0:
            raise ValueError("zeta must lie in [0, 1]")


@dataclass(frozen=True)
class LinewidthModel:
    """Transverse decoherence rate decomposition, all coefficients FWHM Hz.

    a: dark offset; b: density term; c: power broadening; d: the
    density*power cross term attributed to light-induced collisions.
    Setting d = 0 recovers the ideal absorption-only model.
    """

    a: float
    b: float
    c: float
    d: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"coefficient {name} must be finite")


@dataclass(frozen=True)
class MotionGeometry:
    beam_area_cm2: float
    cell_area_cm2: float
    cell_length_cm: float
    rms_speed_cm_per_ms: float
    duration_ms: float

    def __post_init__(self):
        if not 0 < self.beam_area_cm2 <= self.cell_area_cm2:
            raise ValueError("need 0 < beam_area <= cell_area")
        for name in ("cell_length_cm", "rms_speed_cm_per_ms", "duration_ms"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def admix_vacuum(state: GaussianState, tag: str, retention: float) -> GaussianState:
    """Beam-splitter admixture of vacuum into one mode.

    Mean and cross-covariances scale by the retention beta; each
    quadrature variance goes to beta^2 Var + (1 - beta^2)/2.  beta = 1
    is the identity, beta = 0 resets the mode to vacuum and erases all
    correlations.
    """
    if not 0.0 <= retention <= 1.0:
        raise ValueError("retention must lie in [0, 1]")
    i = state.mode_index(tag)
    scale = np.ones(2 * state.n_modes)
    scale[2 * i : 2 * i + 2] = retention
    mean = state.mean * scale
    cov = state.cov * np.outer(scale, scale)
    extra = (1.0 - retention**2) * VACUUM_VAR
    cov = cov.copy()
    cov[2 * i, 2 * i] += extra
    cov[2 * i + 1, 2 * i + 1] += extra
    return GaussianState(state.modes, mean, cov)


def linewidth(model: LinewidthModel, density: float, power_mw: float) -> float:
    """Transverse FWHM linewidth (Hz) at the given density and probe power."""
    return model.a + model.b * density + model.c * power_mw + model.d * density * power_mw


def t2_from_linewidth(gamma_hz: float) -> float:
    """Transverse coherence time T2 in ms from an FWHM width in Hz."""
    if gamma_hz <= 0:
        raise ValueError("linewidth must be positive")
    return 1e3 / (math.pi * gamma_hz)


def linewidth_from_t2(t2_ms: float) -> float:
    if t2_ms <= 0:
        raise ValueError("T2 must be positive")
    return 1e3 / (math.pi * t2_ms)


# Per-atom transverse noise: 2 for the fully pumped state, 20/3 for the
# unpolarized F=4 state of which a 9/16 fraction remains in F=4.
CSS_NOISE_PER_ATOM = 2.0
THERMAL_NOISE_PER_ATOM = (20.0 / 3.0) * (9.0 / 16.0)


def thermal_noise_evolution(t: float, decay_rate: float) -> float:
    """Relative spin noise as pumping decays toward thermal equilibrium.

    Interpolates from 2 per atom (coherent spin state) to 15/4 per atom;
    the final/initial ratio is 15/8.  t and decay_rate in reciprocal
    units (e.g. ms and 1/ms).
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    decayed = math.exp(-decay_rate * t)
    return CSS_NOISE_PER_ATOM * decayed + THERMAL_NOISE_PER_ATOM * (1.0 - decayed)


def motion_statistics(
    geom: MotionGeometry, correction: float = 1.0
) -> tuple[float, float]:
    """Mean beam occupancy p and relative variance sigma^2 of the dwell fraction.

    p = A_beam/A_cell and sigma^2 = (A_cell - A_beam) L / (A_beam T v0),
    the independent-journeys estimate.  sigma^2 scales as 1/T.  Full
    numerical motion simulations put sigma^2 roughly four times lower;
    pass correction=0.25 to apply that factor (off by default since the
    simple model is an order-of-magnitude estimate).
    """
    p = geom.beam_area_cm2 / geom.cell_area_cm2
    sigma_sq = (
        (geom.cell_area_cm2 - geom.beam_area_cm2)
        * geom.cell_length_cm
        / (geom.beam_area_cm2 * geom.duration_ms * geom.rms_speed_cm_per_ms)
    )
    return p, correction * sigma_sq


def journey_model(geom: MotionGeometry) -> tuple[int, float]:
    """Discrete journey count and occupancy for the binomial walk model.

    n = round(T v0 / L), clamped to at least one journey; each journey is
    spent entirely inside the beam with probability p.
    """
    n = max(1, round(geom.duration_ms * geom.rms_speed_cm_per_ms / geom.cell_length_cm))
    p = geom.beam_area_cm2 / geom.cell_area_cm2
    return n, p


def motion_effective_beta(sigma_sq: float) -> float:
    """Decoherence equivalent of beam-crossing statistics: beta = 1/(1+sigma^2)."""
    if sigma_sq < 0:
        raise ValueError("sigma_sq must be >= 0")
    return 1.0 / (1.0 + sigma_sq)


def motion_css_variance(j: float, p: float, sigma_sq: float) -> float:
    """Projection-noise variance of the partially illuminated ensemble.

    Var(CSS) = (J/2) p^2 (1 + sigma^2); still a minimum uncertainty
    state for the motion-weighted spin operators.
    """
    if j < 0 or not 0 < p <= 1 or sigma_sq < 0:
        raise ValueError("need j >= 0, 0 < p <= 1, sigma_sq >= 0")
    return 0.5 * j * p**2 * (1.0 + sigma_sq)
