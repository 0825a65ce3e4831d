"""Entanglement of two ensembles and the direct-mapping quantum memory.

Each protocol exists twice: as the closed-form expressions and as a
pipeline through the Gaussian engine.  The two routes agree to
floating-point accuracy and the tests hold them against each other.

Unit bookkeeping: the engine works in canonical units (vacuum variance
1/2 per quadrature).  Reported pulse variances follow the convention
where the shot-noise contribution of a measurement pair is 1; a pair
sum in canonical units is numerically identical to one channel
expressed in shot-noise units, and both match the printed theory
curves.  The inferred atomic variances behind the inseparability
criterion are canonical pair sums with the separability boundary at 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import gaussian as g
from .decoherence import admix_vacuum
from .interface import qnd_map

ENGINE_TOL = 1e-9


@dataclass(frozen=True)
class EntanglementReport:
    kappa_sq: float
    alpha_used: float
    cond_var_sum: float        # conditional pair variance, shot noise = 1
    first_pulse_var_sum: float  # 1 + kappa^2
    duan_sum: float            # Var(P_A1) + Var(P_A2), boundary at 1
    duan_margin: float         # 1 - duan_sum
    entangled: bool
    feedback_gain: float | None = None

    def to_dict(self) -> dict:
        d = {
            "kappa_sq": self.kappa_sq,
            "alpha_used": self.alpha_used,
            "cond_var_sum": self.cond_var_sum,
            "first_pulse_var_sum": self.first_pulse_var_sum,
            "duan_sum": self.duan_sum,
            "duan_margin": self.duan_margin,
            "entangled": self.entangled,
        }
        if self.feedback_gain is not None:
            d["feedback_gain"] = self.feedback_gain
        return d


def _validate_kappa_beta(kappa: float, beta: float) -> None:
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")


def conditional_variance_sum(kappa: float, beta: float = 1.0) -> float:
    """Pair conditional variance 1 + k^2 (1 + (1-b^2) k^2) / (1 + k^2)."""
    k2 = kappa**2
    return 1.0 + k2 * (1.0 + (1.0 - beta**2) * k2) / (1.0 + k2)


def duan_sum(kappa: float, beta: float = 1.0) -> float:
    """Inferred Var(P_A1) + Var(P_A2) after the entangling measurement."""
    k2 = kappa**2
    return (1.0 + (1.0 - beta**2) * k2) / (1.0 + k2)


def alpha_parameter(kappa: float, beta: float = 1.0) -> float:
    """Optimal weight of the first-pulse outcome: beta k^2 / (1 + k^2)."""
    k2 = kappa**2
    return beta * k2 / (1.0 + k2)


def _entangle_engine(kappa: float, beta: float) -> tuple[float, float, float]:
    """One decoupled channel through the engine: qnd, condition, decohere, qnd, condition.

    Returns (alpha, cond_var_sum, duan_sum) scaled to the pair convention.
    """
    modes = (g.atomic_mode(1, "A"), g.light_mode(1, "L1"), g.light_mode(2, "L2"))
    state = g.make_vacuum(modes)
    state = g.apply_symplectic(state, qnd_map(kappa, modes[0], modes[1]))
    state = admix_vacuum(state, "A", beta)
    state = g.apply_symplectic(state, qnd_map(kappa, modes[0], modes[2]))
    var_a1 = state.var("L1", "X")
    alpha = state.covariance("L2", "X", "L1", "X") / var_a1
    conditioned = g.homodyne_condition(state, "L1", "X", 0.0)
    cond_var = conditioned.var("L2", "X")
    duan = conditioned.var("A", "P")
    # pair sums: the two (atomic, light) channels are identical and decoupled
    return alpha, 2.0 * cond_var, 2.0 * duan


def entangle_conditional(
    kappa: float, beta: float = 1.0, mode: str = "closed_form"
) -> EntanglementReport:
    """Conditional two-mode squeezing by QND measurement of the light.

    mode selects the closed-form expressions or the Gaussian-engine
    pipeline; both populate the same report and agree to ~1e-12.
    """
    _validate_kappa_beta(kappa, beta)
    if mode == "closed_form":
        alpha = alpha_parameter(kappa, beta)
        cond = conditional_variance_sum(kappa, beta)
        duan = duan_sum(kappa, beta)
    elif mode in ("engine", "via_gaussian_engine"):
        alpha, cond, duan = _entangle_engine(kappa, beta)
    else:
        raise ValueError(f"unknown mode {mode!r}; use 'closed_form' or 'engine'")
    k2 = kappa**2
    return EntanglementReport(
        kappa_sq=k2,
        alpha_used=alpha,
        cond_var_sum=cond,
        first_pulse_var_sum=1.0 + k2,
        duan_sum=duan,
        duan_margin=1.0 - duan,
        entangled=bool(duan < 1.0),
    )


def optimal_feedback_gain(kappa: float, beta: float = 1.0) -> float:
    """Displacement of the atomic P per unit measured outcome that zeroes the mean.

    Equals alpha/kappa; with this gain the second-pulse variance reaches
    the conditional variance.
    """
    if kappa == 0:
        return 0.0
    return alpha_parameter(kappa, beta) / kappa


def second_pulse_variance_sum(kappa: float, beta: float, gain: float) -> float:
    """Pair variance of the verifying pulse after feedback with the given gain.

    Law of total variance over first-pulse outcomes:
    Var(A2) = 1/2 + k^2 [ 1/2 + g^2 (1+k^2)/2 - g beta k ] per channel.
    gain = 0 recovers the first-pulse variance 1 + k^2.
    """
    _validate_kappa_beta(kappa, beta)
    k2 = kappa**2
    var_pa = 0.5 + gain**2 * (1.0 + k2) / 2.0 - gain * beta * kappa
    return 2.0 * (0.5 + k2 * var_pa)


def _second_pulse_engine(kappa: float, beta: float, gain: float) -> float:
    """Unconditional-feedback pair variance via the ensemble feedback map."""
    modes = (g.atomic_mode(1, "A"), g.light_mode(1, "L1"), g.light_mode(2, "L2"))
    state = g.make_vacuum(modes)
    state = g.apply_symplectic(state, qnd_map(kappa, modes[0], modes[1]))
    state = admix_vacuum(state, "A", beta)
    state = g.measure_with_feedback(state, ("L1", "X"), [("A", "P", -gain)])
    state = g.apply_symplectic(state, qnd_map(kappa, modes[0], modes[2]))
    return 2.0 * state.var("L2", "X")


def entangle_unconditional(
    kappa: float, beta: float = 1.0, feedback_gain: float | None = None
) -> EntanglementReport:
    """Deterministic entanglement: feed the first-pulse outcome back to the atoms.

    With the optimal gain (default) the verifying-pulse variance equals
    the conditional variance of :func:`entangle_conditional` and the
    post-feedback mean is zero; the report's cond_var_sum holds the
    achieved second-pulse variance.
    """
    _validate_kappa_beta(kappa, beta)
    gain = optimal_feedback_gain(kappa, beta) if feedback_gain is None else feedback_gain
    second = second_pulse_variance_sum(kappa, beta, gain)
    k2 = kappa**2
    # inferred atomic pair variance behind the measured second pulse
    duan = (second - 1.0) / k2 if k2 > 0 else 1.0
    return EntanglementReport(
        kappa_sq=k2,
        alpha_used=gain * kappa if kappa > 0 else 0.0,
        cond_var_sum=second,
        first_pulse_var_sum=1.0 + k2,
        duan_sum=duan,
        duan_margin=1.0 - duan,
        entangled=bool(duan < 1.0),
        feedback_gain=gain,
    )


def minimize_conditional_variance(
    first: np.ndarray, second: np.ndarray
) -> tuple[float, float]:
    """Least-squares weight and conditional variance of paired pulse outcomes.

    alpha = Cov(second, first)/Var(first); the conditional variance uses
    the N-1 normalization of the experimental estimator.
    """
    a = np.asarray(first, dtype=float)
    b = np.asarray(second, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two equal-length series with at least two samples")
    da = a - a.mean()
    var_first = float(da @ da)
    if var_first == 0.0:
        raise ValueError("first-pulse series has zero variance")
    alpha = float(da @ (b - b.mean())) / var_first
    resid = b - alpha * a
    cond_var = float(np.sum(resid**2)) / (a.size - 1)
    return alpha, cond_var


@dataclass(frozen=True)
class MemoryReport:
    gain_ba: float   # back-action gain beta*kappa mapping P_L
    gain_f: float    # feedback gain g*sqrt(zeta) mapping X_L
    var_x_snu: float
    var_p_snu: float

    def fidelity(self, n0: float) -> float:
        return memory_fidelity(self.gain_ba, self.gain_f, self.var_x_snu, self.var_p_snu, n0)

    @staticmethod
    def classical_bound(n_bar: float) -> float:
        return classical_fidelity_bound(n_bar)

    def to_dict(self, n0_values: tuple[float, ...] = (2.0, 4.0)) -> dict:
        return {
            "gain_ba": self.gain_ba,
            "gain_f": self.gain_f,
            "var_x_snu": self.var_x_snu,
            "var_p_snu": self.var_p_snu,
            "fidelity": {str(n0): self.fidelity(n0) for n0 in n0_values},
            "classical_bound": {str(n0): self.classical_bound(n0) for n0 in n0_values},
        }


def memory_variances(
    gain_ba: float, gain_f: float, beta: float, zeta: float
) -> tuple[float, float]:
    """Stored-state variances in shot-noise units for a coherent input.

    Var(X) = 1 + g_BA^2,
    Var(P) = 1 + g_F^2/zeta + g_F^2 g_BA^2 / beta^2 - 2 g_F g_BA.
    """
    if not (0 < beta <= 1 and 0 < zeta <= 1):
        raise ValueError("beta and zeta must lie in (0, 1]")
    var_x = 1.0 + gain_ba**2
    var_p = (
        1.0
        + gain_f**2 / zeta
        + gain_f**2 * gain_ba**2 / beta**2
        - 2.0 * gain_f * gain_ba
    )
    return var_x, var_p


def memory_store(
    input_state: g.GaussianState,
    kappa: float,
    gain: float,
    beta: float = 1.0,
    zeta: float = 1.0,
) -> tuple[g.GaussianState, MemoryReport]:
    """Map a single light mode onto the atomic mode by QND + measure + feedback.

    The back-action writes P_L onto X_A with gain beta*kappa; measuring
    the transmitted X_L (after transmission zeta) and displacing P_A by
    -gain times the outcome writes -X_L onto P_A with gain g*sqrt(zeta).
    Atomic decoherence beta acts between the pulse and the feedback.
    Returns the unconditional stored atomic state and the gain/variance
    report.
    """
    if input_state.n_modes != 1 or input_state.modes[0].kind != "light":
        raise ValueError("input_state must be a single light mode")
    if not (0 < beta <= 1 and 0 < zeta <= 1):
        raise ValueError("beta and zeta must lie in (0, 1]")
    atom = g.atomic_mode(1, "Amem")
    light = input_state.modes[0]
    state = g.merge_states(g.make_vacuum((atom,)), input_state)
    state = g.apply_symplectic(state, qnd_map(kappa, atom, light))
    state = admix_vacuum(state, "Amem", beta)
    state = admix_vacuum(state, light.tag, math.sqrt(zeta))  # reflection losses
    stored = g.measure_with_feedback(state, (light.tag, "X"), [("Amem", "P", -gain)])
    report = MemoryReport(
        gain_ba=beta * kappa,
        gain_f=gain * math.sqrt(zeta),
        var_x_snu=g.to_snu(stored.var("Amem", "X")),
        var_p_snu=g.to_snu(stored.var("Amem", "P")),
    )
    return stored, report


def memory_fidelity(
    gain_ba: float, gain_f: float, var_x_snu: float, var_p_snu: float, n0: float
) -> float:
    """Average overlap with the ideal stored state over a coherent-input
    Gaussian distribution with mean photon number n0.

    F = 2 / sqrt((2 n0 (1-g_BA)^2 + 1 + sx)(2 n0 (1-g_F)^2 + 1 + sp)).
    """
    if n0 < 0:
        raise ValueError("n0 must be >= 0")
    if var_x_snu < 0 or var_p_snu < 0:
        raise ValueError("variances must be >= 0")
    fx = 2.0 * n0 * (1.0 - gain_ba) ** 2 + 1.0 + var_x_snu
    fp = 2.0 * n0 * (1.0 - gain_f) ** 2 + 1.0 + var_p_snu
    return 2.0 / math.sqrt(fx * fp)


def classical_fidelity_bound(n_bar: float) -> float:
    """Best classical fidelity (1 + n)/(1 + 2n); 1 for vacuum, 1/2 for flat input."""
    if n_bar < 0:
        raise ValueError("n_bar must be >= 0")
    return (1.0 + n_bar) / (1.0 + 2.0 * n_bar)


def memory_fidelity_at_gain(
    gain: float, kappa: float, beta: float, zeta: float, n0: float
) -> float:
    """Fidelity of the full chain as a function of the raw feedback gain."""
    gain_ba = beta * kappa
    gain_f = gain * math.sqrt(zeta)
    var_x, var_p = memory_variances(gain_ba, gain_f, beta, zeta)
    return memory_fidelity(gain_ba, gain_f, var_x, var_p, n0)


def optimal_memory_gain(
    kappa: float, beta: float, zeta: float, n0: float
) -> tuple[float, float]:
    """Feedback gain maximizing the storage fidelity, and that fidelity."""
    res = minimize_scalar(
        lambda gain: -memory_fidelity_at_gain(gain, kappa, beta, zeta, n0),
        bounds=(0.0, 3.0),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(res.x), float(-res.fun)


@dataclass(frozen=True)
class ReadoutStats:
    mean: float              # canonical units
    var_snu: float           # includes one unit of readout shot noise
    atomic_var_snu: float    # variance with the shot-noise unit removed
    rotated: bool


def memory_readout(
    atomic_state: g.GaussianState, kappa: float, rotate_pi_half: bool = False
) -> ReadoutStats:
    """Destructive verification: probe the stored atoms with a fresh pulse.

    The emitted X_L carries kappa times the atomic P (or the atomic X if
    a pi/2 rotation is applied first, which maps X -> P).  Subtracting
    the single shot-noise unit of the readout pulse recovers the atomic
    variance.
    """
    if atomic_state.n_modes != 1:
        raise ValueError("atomic_state must be a single mode")
    atom = atomic_state.modes[0]
    state = atomic_state
    if rotate_pi_half:
        state = g.apply_symplectic(state, g.rotation_map(math.pi / 2.0, atom))
    probe = g.light_mode(9, "Lread")
    state = g.merge_states(state, g.make_vacuum((probe,)))
    state = g.apply_symplectic(state, qnd_map(kappa, atom, probe))
    var_snu = g.to_snu(state.var("Lread", "X"))
    return ReadoutStats(
        mean=state.mean_of("Lread", "X"),
        var_snu=var_snu,
        atomic_var_snu=(var_snu - 1.0) / kappa**2 if kappa else float("nan"),
        rotated=rotate_pi_half,
    )
