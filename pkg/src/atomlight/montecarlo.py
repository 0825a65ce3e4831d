"""Stochastic trajectory sampling of the measurement protocols.

Outcomes are drawn from the exact pulse-integrated Gaussian model (no
time discretization).  Reproducibility contract: a counter-based
generator keyed by the seed supplies every run a fixed block of draws
addressed by run index, and worker threads only split the vectorized
per-run arithmetic over fixed-size chunks, so results are bit-identical
for any thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import protocols
from .gaussian import VACUUM_VAR

PROTOCOLS = ("entangle_conditional", "entangle_feedback", "memory")

_CHUNK_ROWS = 16384  # fixed so chunk boundaries never depend on thread count

# draws per run: entangle uses (p, x1, x2, v) per channel, memory uses
# the full latent list below
_N_DRAWS = {"entangle_conditional": 8, "entangle_feedback": 8, "memory": 11}


@dataclass(frozen=True)
class TrajectoryConfig:
    protocol: str
    n_runs: int
    seed: int
    kappa: float = 1.0
    beta: float = 1.0
    zeta: float = 1.0
    feedback_gain: float | None = None
    input_photon_number: float = 0.0  # memory only: Gaussian input distribution

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}; choose from {PROTOCOLS}")
        if self.n_runs < 2:
            raise ValueError("n_runs must be >= 2")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if not (0 <= self.beta <= 1 and 0 < self.zeta <= 1):
            raise ValueError("need beta in [0,1] and zeta in (0,1]")
        if self.input_photon_number < 0:
            raise ValueError("input_photon_number must be >= 0")

    def with_(self, **kwargs) -> "TrajectoryConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class TrajectoryStats:
    config: TrajectoryConfig
    columns: tuple[str, ...]
    outcomes: np.ndarray           # (n_runs, len(columns))
    estimates: dict
    stderrs: dict

    def outcome(self, name: str) -> np.ndarray:
        return self.outcomes[:, self.columns.index(name)]


def _draws(cfg: TrajectoryConfig) -> np.ndarray:
    """Standard-normal draw block; row i is the stream of run i."""
    bitgen = np.random.Philox(key=cfg.seed)
    return np.random.Generator(bitgen).standard_normal(
        (cfg.n_runs, _N_DRAWS[cfg.protocol])
    )


def _entangle_kernel(cfg: TrajectoryConfig, z: np.ndarray, out: np.ndarray) -> None:
    """Two decoupled channels: outcome columns (A1, B1, A2, B2)."""
    sigma = math.sqrt(VACUUM_VAR)
    kappa, beta = cfg.kappa, cfg.beta
    gain = cfg.feedback_gain if cfg.feedback_gain is not None else 0.0
    use_feedback = cfg.protocol == "entangle_feedback"
    for ch, col in ((0, 0), (1, 1)):
        p, x1, x2, v = (sigma * z[:, 4 * ch + j] for j in range(4))
        first = x1 + kappa * p
        p_ent = beta * p + math.sqrt(1.0 - beta**2) * v
        if use_feedback:
            p_ent = p_ent - gain * first
        second = x2 + kappa * p_ent
        out[:, col] = first
        out[:, col + 2] = second


def _memory_kernel(cfg: TrajectoryConfig, z: np.ndarray, out: np.ndarray) -> None:
    """Store a random coherent state, then read out both atomic quadratures.

    Outcome columns (dx, dp, read_x, read_p): input displacement and the
    two readout pulses (the read_x chain applies the pi/2 rotation).
    """
    sigma = math.sqrt(VACUUM_VAR)
    kappa, beta, zeta = cfg.kappa, cfg.beta, cfg.zeta
    gain = cfg.feedback_gain if cfg.feedback_gain is not None else 1.0
    disp_sigma = math.sqrt(cfg.input_photon_number)
    xa, pa, xl, pl, vxa, vpa, vxl, xr1, xr2 = (sigma * z[:, j] for j in range(9))
    dx = disp_sigma * z[:, 9]
    dp = disp_sigma * z[:, 10]

    x_light = dx + xl
    p_light = dp + pl
    x_atom = beta * (xa + kappa * p_light) + math.sqrt(1.0 - beta**2) * vxa
    measured = math.sqrt(zeta) * (x_light + kappa * pa) + math.sqrt(1.0 - zeta) * vxl
    p_atom = beta * pa + math.sqrt(1.0 - beta**2) * vpa - gain * measured

    out[:, 0] = dx
    out[:, 1] = dp
    out[:, 2] = xr1 + kappa * x_atom   # rotated readout exposes X_A
    out[:, 3] = xr2 + kappa * p_atom   # plain readout exposes P_A


def _run_kernel(cfg: TrajectoryConfig, n_threads: int) -> np.ndarray:
    z = _draws(cfg)
    kernel = _memory_kernel if cfg.protocol == "memory" else _entangle_kernel
    out = np.empty((cfg.n_runs, 4))
    chunks = range(0, cfg.n_runs, _CHUNK_ROWS)
    if n_threads <= 1:
        for start in chunks:
            stop = min(start + _CHUNK_ROWS, cfg.n_runs)
            kernel(cfg, z[start:stop], out[start:stop])
    else:
        def work(start: int) -> None:
            stop = min(start + _CHUNK_ROWS, cfg.n_runs)
            kernel(cfg, z[start:stop], out[start:stop])

        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            list(pool.map(work, chunks))
    return out


def _var(x: np.ndarray) -> float:
    return float(np.var(x, ddof=1))


def _var_se(var: float, n: int) -> float:
    return var * math.sqrt(2.0 / (n - 1))


def _entangle_estimates(cfg: TrajectoryConfig, out: np.ndarray) -> tuple[dict, dict]:
    n = cfg.n_runs
    a1, b1, a2, b2 = out.T
    first = np.concatenate([a1, b1])
    second = np.concatenate([a2, b2])
    alpha, _ = protocols.minimize_conditional_variance(first, second)
    # pair-sum estimator with the N-1 normalization over measurement cycles
    cond_var_sum = float(
        np.sum((a2 - alpha * a1) ** 2 + (b2 - alpha * b1) ** 2)
    ) / (n - 1)
    var_a1 = _var(a1)
    var_b1 = _var(b1)
    resid_var = 0.5 * cond_var_sum
    estimates = {
        "var_a1": var_a1,
        "var_b1": var_b1,
        "first_pulse_var_sum": var_a1 + var_b1,
        "alpha": alpha,
        "cond_var_sum": cond_var_sum,
        "second_pulse_var_sum": _var(a2) + _var(b2),
    }
    stderrs = {
        "var_a1": _var_se(var_a1, n),
        "var_b1": _var_se(var_b1, n),
        "first_pulse_var_sum": math.hypot(_var_se(var_a1, n), _var_se(var_b1, n)),
        "alpha": math.sqrt(resid_var / (2 * n * np.var(first))),
        "cond_var_sum": cond_var_sum * math.sqrt(2.0 / (2 * n - 1)),
        "second_pulse_var_sum": math.hypot(_var_se(_var(a2), n), _var_se(_var(b2), n)),
    }
    return estimates, stderrs


def _memory_estimates(cfg: TrajectoryConfig, out: np.ndarray) -> tuple[dict, dict]:
    n = cfg.n_runs
    dx, dp, read_x, read_p = out.T
    kappa = cfg.kappa
    if cfg.input_photon_number > 0:
        slope_x = float(np.cov(read_x, dp)[0, 1] / np.var(dp, ddof=1))
        slope_p = float(np.cov(read_p, dx)[0, 1] / np.var(dx, ddof=1))
        resid_x = read_x - slope_x * dp
        resid_p = read_p - slope_p * dx
    else:
        slope_x = slope_p = float("nan")
        resid_x, resid_p = read_x, read_p
    var_rx, var_rp = _var(resid_x), _var(resid_p)
    # one shot-noise unit belongs to the readout pulse itself
    var_x_snu = (2.0 * var_rx - 1.0) / kappa**2
    var_p_snu = (2.0 * var_rp - 1.0) / kappa**2
    estimates = {
        "gain_ba": slope_x / kappa,
        "gain_f": -slope_p / kappa,
        "var_x_snu": var_x_snu,
        "var_p_snu": var_p_snu,
    }
    se_scale = 2.0 / kappa**2
    stderrs = {
        "gain_ba": math.sqrt(var_rx / (n * np.var(dp, ddof=1))) / kappa
        if cfg.input_photon_number > 0
        else float("nan"),
        "gain_f": math.sqrt(var_rp / (n * np.var(dx, ddof=1))) / kappa
        if cfg.input_photon_number > 0
        else float("nan"),
        "var_x_snu": se_scale * _var_se(var_rx, n),
        "var_p_snu": se_scale * _var_se(var_rp, n),
    }
    return estimates, stderrs


def run_trajectories(cfg: TrajectoryConfig, n_threads: int = 1) -> TrajectoryStats:
    """Sample the protocol n_runs times and estimate the reported statistics.

    Deterministic for a fixed (config, seed) for any n_threads.
    """
    out = _run_kernel(cfg, n_threads)
    if cfg.protocol == "memory":
        columns = ("dx", "dp", "read_x", "read_p")
        estimates, stderrs = _memory_estimates(cfg, out)
    else:
        columns = ("A1", "B1", "A2", "B2")
        estimates, stderrs = _entangle_estimates(cfg, out)
    return TrajectoryStats(cfg, columns, out, estimates, stderrs)


def _closed_form_overlay(cfg: TrajectoryConfig) -> dict:
    if cfg.protocol == "memory":
        gain = cfg.feedback_gain if cfg.feedback_gain is not None else 1.0
        gain_ba = cfg.beta * cfg.kappa
        gain_f = gain * math.sqrt(cfg.zeta)
        var_x, var_p = protocols.memory_variances(gain_ba, gain_f, cfg.beta, cfg.zeta)
        return {
            "theory_gain_ba": gain_ba,
            "theory_gain_f": gain_f,
            "theory_var_x_snu": var_x,
            "theory_var_p_snu": var_p,
        }
    overlay = {
        "theory_first_pulse_var_sum": 1.0 + cfg.kappa**2,
        "theory_alpha": protocols.alpha_parameter(cfg.kappa, cfg.beta),
        "theory_cond_var_sum": protocols.conditional_variance_sum(cfg.kappa, cfg.beta),
    }
    if cfg.protocol == "entangle_feedback":
        gain = (
            cfg.feedback_gain
            if cfg.feedback_gain is not None
            else protocols.optimal_feedback_gain(cfg.kappa, cfg.beta)
        )
        overlay["theory_second_pulse_var_sum"] = protocols.second_pulse_variance_sum(
            cfg.kappa, cfg.beta, gain
        )
    return overlay


# sweepable config fields; kappa_sq is an alias handled via sqrt
_SWEEPABLE = ("kappa", "kappa_sq", "beta", "zeta", "feedback_gain", "input_photon_number")


def sweep(
    cfg: TrajectoryConfig, parameter: str, values, n_threads: int = 1
) -> list[dict]:
    """One estimator row per grid value, with closed-form overlay columns."""
    if parameter not in _SWEEPABLE:
        raise ValueError(f"unknown sweep parameter {parameter!r}; choose from {_SWEEPABLE}")
    rows = []
    for value in values:
        if parameter == "kappa_sq":
            point = cfg.with_(kappa=math.sqrt(value))
        else:
            point = cfg.with_(**{parameter: float(value)})
        stats = run_trajectories(point, n_threads)
        row = {parameter: float(value)}
        row.update(stats.estimates)
        row.update({f"{k}_se": v for k, v in stats.stderrs.items()})
        row.update(_closed_form_overlay(point))
        rows.append(row)
    return rows
