"""Magneto-optical resonance signal (MORS) synthesis and fitting, the
quadratic Zeeman ladder, and RF steering of the collective spin.

Angular frequencies are rad/s and durations seconds throughout this
module; scan grids and linewidths are ordinary frequencies in Hz
(FWHM), matching how the spectra are recorded.

NOTE on the Zeeman splitting: the printed splitting formula
2*Omega_L/omega_hfs is dimensionless as written.  The dimensionally
consistent quadratic reading 2*Omega_L^2/omega_hfs (about 2*pi*22.6 Hz
at a 322 kHz Larmor frequency) is the default here; the printed linear
form remains selectable for comparison.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import least_squares

from .interface import OMEGA_T_MIN

RF_AREA_MAX = 0.1          # omega_{c,s} * tau well below 1
ADIABATIC_DWELL_MIN = 5.0  # linewidth * dwell per scan point


@dataclass(frozen=True)
class MorsModel:
    """Sublevel populations and coherence parameters of one hyperfine manifold.

    F = 4 gives 9 sublevels and 8 adjacent coherences.  Populations are
    normalized to one; linewidths are per-coherence FWHM in Hz.  The
    coherence frequencies form a ladder around the Larmor frequency with
    adjacent spacing qz_splitting.
    """

    populations: np.ndarray
    linewidths_hz: np.ndarray
    larmor: float          # rad/s
    qz_splitting: float    # rad/s
    amplitude: float = 1.0
    f_quantum: int = 4
    ladder_sign: int = -1  # frequency decreases with m by default

    def __post_init__(self):
        pops = np.asarray(self.populations, dtype=float)
        widths = np.asarray(self.linewidths_hz, dtype=float)
        n_levels = 2 * self.f_quantum + 1
        if pops.shape != (n_levels,):
            raise ValueError(f"need {n_levels} populations for F={self.f_quantum}")
        if widths.shape != (n_levels - 1,):
            raise ValueError(f"need {n_levels - 1} linewidths for F={self.f_quantum}")
        if np.any(pops < 0):
            raise ValueError("populations must be >= 0")
        if abs(pops.sum() - 1.0) > 1e-9:
            raise ValueError(f"populations must sum to 1, got {pops.sum()!r}")
        if np.any(widths <= 0):
            raise ValueError("linewidths must be positive")
        if self.larmor <= 0:
            raise ValueError("larmor frequency must be positive")
        if self.ladder_sign not in (-1, 1):
            raise ValueError("ladder_sign must be +1 or -1")
        pops = pops.copy()
        widths = widths.copy()
        pops.setflags(write=False)
        widths.setflags(write=False)
        object.__setattr__(self, "populations", pops)
        object.__setattr__(self, "linewidths_hz", widths)

    @property
    def m_values(self) -> np.ndarray:
        """Lower sublevel m of each m <-> m+1 coherence."""
        return np.arange(-self.f_quantum, self.f_quantum)

    def coherence_frequencies(self) -> np.ndarray:
        """Ladder anchored symmetrically at the Larmor frequency (rad/s)."""
        return self.larmor + self.ladder_sign * (self.m_values + 0.5) * self.qz_splitting

    def with_(self, **kwargs) -> "MorsModel":
        return replace(self, **kwargs)


def fully_pumped_model(
    larmor: float, qz_splitting: float, linewidth_hz: float = 6.0, f_quantum: int = 4
) -> MorsModel:
    """All population in the stretched m = +F state; only one coherence survives."""
    pops = np.zeros(2 * f_quantum + 1)
    pops[-1] = 1.0
    return MorsModel(
        pops, np.full(2 * f_quantum, linewidth_hz), larmor, qz_splitting, f_quantum=f_quantum
    )


def qz_splitting(larmor: float, hyperfine: float, convention: str = "quadratic") -> float:
    """Frequency spacing of adjacent Zeeman coherences (rad/s).

    convention='quadratic' (default) uses 2*Omega_L^2/omega_hfs;
    convention='printed' keeps the linear form 2*Omega_L/omega_hfs.
    """
    if larmor < 0 or hyperfine <= 0:
        raise ValueError("need larmor >= 0 and hyperfine > 0")
    if convention == "quadratic":
        return 2.0 * larmor**2 / hyperfine
    if convention == "printed":
        return 2.0 * larmor / hyperfine
    raise ValueError(f"unknown convention {convention!r}")


def mors_response(model: MorsModel, scan_hz: np.ndarray) -> np.ndarray:
    """Complex demodulated response on the RF scan grid.

    Each adjacent coherence responds as a two-level system:
    [F(F+1) - m(m+1)] (pop_{m+1} - pop_m) / (i(Omega_m - Omega) - Gamma_m/2).
    The real part tracks the in-phase spin component, the imaginary part
    the quadrature one.
    """
    f = model.f_quantum
    omega = 2.0 * math.pi * np.asarray(scan_hz, dtype=float)
    m = model.m_values
    strength = (f * (f + 1) - m * (m + 1)).astype(float)
    diff = model.populations[1:] - model.populations[:-1]
    centers = model.coherence_frequencies()
    gamma_ang = 2.0 * math.pi * model.linewidths_hz
    denom = 1j * (centers[None, :] - omega[:, None]) - 0.5 * gamma_ang[None, :]
    return np.sum(strength * diff / denom, axis=1)


def mors_spectrum(
    model: MorsModel, scan_hz: np.ndarray, dwell_s: float | None = None
) -> np.ndarray:
    """Squared-modulus MORS signal over the scan grid (arbitrary units).

    The adiabatic-following form is only valid when the scan moves
    slowly compared to the coherence decay; when a dwell time per point
    is given, a warning is emitted if linewidth * dwell < 5.
    """
    if dwell_s is not None:
        min_width = float(np.min(model.linewidths_hz))
        if min_width * dwell_s < ADIABATIC_DWELL_MIN:
            warnings.warn(
                f"scan dwell {dwell_s:.3g} s is too fast for adiabatic following "
                f"(linewidth*dwell = {min_width * dwell_s:.2f} < {ADIABATIC_DWELL_MIN})",
                stacklevel=2,
            )
    return model.amplitude * np.abs(mors_response(model, scan_hz)) ** 2


@dataclass(frozen=True)
class MorsFitResult:
    model: MorsModel
    residual_rms: float
    success: bool
    message: str
    n_evaluations: int


def fit_mors(
    measured: np.ndarray,
    scan_hz: np.ndarray,
    initial: MorsModel,
    fit_larmor: bool = True,
    fit_amplitude: bool = False,
    max_evaluations: int = 20000,
) -> MorsFitResult:
    """Least-squares fit of populations, linewidths and the Larmor frequency.

    The spectrum sees populations only through adjacent differences, so
    absolute populations and the overall amplitude form an exact gauge
    pair (scale all differences by c, the amplitude by 1/c^2).  By
    default the amplitude is therefore treated as a calibrated input and
    the populations come out identifiable; pass fit_amplitude=True to
    free the scale instead, in which case only population differences up
    to a common factor are meaningful.

    Populations are constrained nonnegative during the fit and
    renormalized to one afterwards.  A flat signal returns the initial
    populations with zero amplitude rather than inventing structure.
    """
    y = np.asarray(measured, dtype=float)
    scan = np.asarray(scan_hz, dtype=float)
    if y.shape != scan.shape or y.ndim != 1:
        raise ValueError("measured signal and scan grid must be equal-length 1-d arrays")

    scale = float(np.max(np.abs(y)))
    if scale <= 0 or np.ptp(y) < 1e-12 * max(scale, 1.0):
        return MorsFitResult(
            model=initial.with_(amplitude=0.0),
            residual_rms=float(np.std(y)),
            success=False,
            message="flat signal: no population information",
            n_evaluations=0,
        )

    n_pop = initial.populations.size
    n_wid = initial.linewidths_hz.size

    def unpack(theta):
        pops = theta[:n_pop]
        widths = theta[n_pop : n_pop + n_wid]
        cursor = n_pop + n_wid
        if fit_amplitude:
            amp = theta[cursor]
            cursor += 1
        else:
            amp = initial.amplitude
        larmor = theta[cursor] if fit_larmor else initial.larmor
        return pops, widths, amp, larmor

    def residuals(theta):
        pops, widths, amp, larmor = unpack(theta)
        total = pops.sum()
        # with a free amplitude the population scale is pure gauge and is
        # absorbed exactly; with a calibrated amplitude only the
        # normalized populations enter
        amplitude = amp * total**2 if fit_amplitude else amp
        trial = MorsModel(
            pops / total,
            widths,
            larmor,
            initial.qz_splitting,
            amplitude=amplitude,
            f_quantum=initial.f_quantum,
            ladder_sign=initial.ladder_sign,
        )
        return mors_spectrum(trial, scan) - y

    theta0 = np.concatenate(
        [
            np.clip(initial.populations, 1e-6, None),
            initial.linewidths_hz,
            [max(initial.amplitude, 1e-12 * scale)] if fit_amplitude else [],
            [initial.larmor] if fit_larmor else [],
        ]
    )
    lower = np.concatenate(
        [
            np.zeros(n_pop),
            np.full(n_wid, 1e-6),
            [0.0] if fit_amplitude else [],
            [0.5 * initial.larmor] if fit_larmor else [],
        ]
    )
    upper = np.concatenate(
        [
            np.full(n_pop, np.inf),
            np.full(n_wid, np.inf),
            [np.inf] if fit_amplitude else [],
            [1.5 * initial.larmor] if fit_larmor else [],
        ]
    )
    result = least_squares(
        residuals,
        theta0,
        bounds=(lower, upper),
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=max_evaluations,
    )
    pops, widths, amp, larmor = unpack(result.x)
    total = pops.sum()
    fitted = MorsModel(
        pops / total,
        widths,
        larmor,
        initial.qz_splitting,
        amplitude=amp * total**2 if fit_amplitude else amp,
        f_quantum=initial.f_quantum,
        ladder_sign=initial.ladder_sign,
    )
    rms = float(np.sqrt(np.mean(result.fun**2)))
    converged = bool(result.status > 0) and rms < 0.05 * scale
    return MorsFitResult(
        model=fitted,
        residual_rms=rms,
        success=converged,
        message=result.message if converged else f"poor fit: residual rms {rms:.3g}",
        n_evaluations=int(result.nfev),
    )


@dataclass(frozen=True)
class RfPulse:
    """Resonant or near-resonant RF magnetic pulse.

    omega_c and omega_s are the cos/sin field amplitudes expressed as
    angular rates g_F mu_B B/hbar; validity needs the pulse area well
    below one radian and many Larmor cycles inside the pulse.
    """

    omega_c: float        # rad/s
    omega_s: float        # rad/s
    phase: float = 0.0
    drive_frequency: float = 0.0  # rad/s
    duration_s: float = 1e-3

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("duration must be positive")

    def validity_flags(self) -> dict:
        tau = self.duration_s
        area_ok = max(abs(self.omega_c), abs(self.omega_s)) * tau <= RF_AREA_MAX
        cycles_ok = self.drive_frequency * tau >= OMEGA_T_MIN
        return {"pulse_area_ok": area_ok, "many_cycles_ok": cycles_ok}

    def _warn_if_invalid(self) -> bool:
        flags = self.validity_flags()
        if not all(flags.values()):
            warnings.warn(f"RF pulse outside validity range: {flags}", stacklevel=3)
        return all(flags.values())


def rf_steer(
    spin_means: tuple[float, float], pulse: RfPulse, jx: float
) -> tuple[float, float]:
    """Resonant steering of the rotating-frame spin means (J'_y, J'_z).

    delta J'_y = -omega_s Jx tau / 2 and delta J'_z = -omega_c Jx tau / 2;
    Jx itself is conserved.  Assumes the drive sits on the Larmor
    resonance with zero phase.
    """
    pulse._warn_if_invalid()
    jy, jz = spin_means
    half_area = 0.5 * jx * pulse.duration_s
    return jy - pulse.omega_s * half_area, jz - pulse.omega_c * half_area


def rf_offresonant(
    spin_means: tuple[float, float],
    pulse: RfPulse,
    larmor: float,
    jx: float,
    samples_per_cycle: int = 128,
    max_samples: int = 20_000_000,
) -> tuple[float, float]:
    """General-drive steering by numerical integration of the torque equations.

    Integrates
      dJ'_y/dt = -[w_c cos(Wt+phi) + w_s sin(Wt+phi)] sin(W_L t) Jx
      dJ'_z/dt = -[w_c cos(Wt+phi) + w_s sin(Wt+phi)] cos(W_L t) Jx
    with Simpson quadrature.  On resonance with zero phase this reduces
    to :func:`rf_steer`; far off resonance the oscillatory overlap
    averages the net rotation away.
    """
    pulse._warn_if_invalid()
    tau = pulse.duration_s
    top = max(pulse.drive_frequency, larmor)
    n = max(4097, int(samples_per_cycle * top * tau / (2.0 * math.pi)))
    if n % 2 == 0:
        n += 1
    if n > max_samples:
        raise ValueError(
            f"integration grid of {n} samples exceeds the {max_samples} cap; "
            "lower samples_per_cycle or shorten the pulse"
        )
    t = np.linspace(0.0, tau, n)
    drive = pulse.omega_c * np.cos(pulse.drive_frequency * t + pulse.phase) + (
        pulse.omega_s * np.sin(pulse.drive_frequency * t + pulse.phase)
    )
    d_jy = -jx * simpson(drive * np.sin(larmor * t), x=t)
    d_jz = -jx * simpson(drive * np.cos(larmor * t), x=t)
    jy, jz = spin_means
    return jy + float(d_jy), jz + float(d_jz)


def feedback_pulse(
    outcome_displacement: tuple[float, float], jx: float, duration_s: float, larmor: float
) -> RfPulse:
    """RF amplitudes realizing a desired displacement of (J'_y, J'_z).

    Inverts the resonant steering relations; this is the channel through
    which measurement outcomes are fed back onto the spins.
    """
    if jx == 0:
        raise ValueError("jx must be nonzero to steer the spin")
    d_jy, d_jz = outcome_displacement
    return RfPulse(
        omega_c=-2.0 * d_jz / (jx * duration_s),
        omega_s=-2.0 * d_jy / (jx * duration_s),
        phase=0.0,
        drive_frequency=larmor,
        duration_s=duration_s,
    )
