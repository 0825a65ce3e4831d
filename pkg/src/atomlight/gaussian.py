"""Gaussian states over labeled canonical modes.

States are value types: mean vector and covariance matrix in canonical
units where the vacuum variance of every quadrature is 1/2 and
[X, P] = i.  All operations return new states; arrays are frozen so a
state can be shared freely between threads.

Quadrature ordering is (X1, P1, X2, P2, ...) following the mode list.
A single conversion to shot-noise units (vacuum variance = 1) is
provided for the reporting layer; everything inside the engine stays in
canonical units to avoid factor-of-2 drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

VACUUM_VAR = 0.5
SYMMETRY_TOL = 1e-12
SYMPLECTIC_TOL = 1e-10
DEGENERATE_VAR_TOL = 1e-12


class NonSymplecticError(ValueError):
    """Raised when a map violates S Omega S^T = Omega."""


class DegenerateMeasurementError(ValueError):
    """Raised when a homodyne quadrature has (numerically) zero variance."""


def to_snu(var_canonical: float) -> float:
    """Convert a canonical-unit variance (vacuum 1/2) to shot-noise units (vacuum 1)."""
    return 2.0 * var_canonical


def from_snu(var_snu: float) -> float:
    return 0.5 * var_snu


@dataclass(frozen=True)
class ModeLabel:
    kind: str  # "atomic" | "light"
    index: int
    tag: str

    def __post_init__(self):
        if self.kind not in ("atomic", "light"):
            raise ValueError(f"mode kind must be 'atomic' or 'light', got {self.kind!r}")


def atomic_mode(index: int, tag: str | None = None) -> ModeLabel:
    return ModeLabel("atomic", index, tag if tag is not None else f"A{index}")


def light_mode(index: int, tag: str | None = None) -> ModeLabel:
    return ModeLabel("light", index, tag if tag is not None else f"L{index}")


def symplectic_form(n_modes: int) -> np.ndarray:
    """Canonical symplectic form for (X1,P1,...,Xn,Pn) ordering."""
    block = np.array([[0.0, 1.0], [-1.0, 0.0]])
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for i in range(n_modes):
        omega[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = block
    return omega


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of a covariance matrix; physical states have all >= 1/2."""
    n = cov.shape[0] // 2
    if n == 0:
        return np.zeros(0)
    eigs = np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ cov))
    return np.sort(eigs)[::2]  # each value appears twice


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


def _check_labels(modes: Sequence[ModeLabel]) -> None:
    tags = [m.tag for m in modes]
    if len(set(tags)) != len(tags):
        raise ValueError(f"duplicate mode tags: {tags}")
    keys = [(m.kind, m.index) for m in modes]
    if len(set(keys)) != len(keys):
        raise ValueError(f"duplicate (kind, index) pairs: {keys}")


@dataclass(frozen=True)
class GaussianState:
    modes: tuple[ModeLabel, ...]
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        modes = tuple(self.modes)
        _check_labels(modes)
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        n = len(modes)
        if mean.shape != (2 * n,) or cov.shape != (2 * n, 2 * n):
            raise ValueError(
                f"shape mismatch: {n} modes needs mean (2n,), cov (2n,2n); "
                f"got {mean.shape} and {cov.shape}"
            )
        if n:
            scale = max(1.0, float(np.max(np.abs(cov))))
            if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * scale:
                raise ValueError("covariance matrix is not symmetric")
            cov = 0.5 * (cov + cov.T)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "mean", _freeze(mean))
        object.__setattr__(self, "cov", _freeze(cov))

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def mode_index(self, tag: str) -> int:
        for i, m in enumerate(self.modes):
            if m.tag == tag:
                return i
        raise ValueError(f"unknown mode tag {tag!r}; have {[m.tag for m in self.modes]}")

    def quad_index(self, tag: str, axis: str) -> int:
        if axis not in ("X", "P"):
            raise ValueError(f"axis must be 'X' or 'P', got {axis!r}")
        return 2 * self.mode_index(tag) + (0 if axis == "X" else 1)

    def mean_of(self, tag: str, axis: str) -> float:
        return float(self.mean[self.quad_index(tag, axis)])

    def var(self, tag: str, axis: str) -> float:
        q = self.quad_index(tag, axis)
        return float(self.cov[q, q])

    def covariance(self, tag1: str, axis1: str, tag2: str, axis2: str) -> float:
        return float(self.cov[self.quad_index(tag1, axis1), self.quad_index(tag2, axis2)])

    def symplectic_eigenvalues(self) -> np.ndarray:
        return symplectic_eigenvalues(self.cov)

    def is_physical(self, tol: float = 1e-9) -> bool:
        if self.n_modes == 0:
            return True
        if np.min(self.symplectic_eigenvalues()) < VACUUM_VAR - tol:
            return False
        for m in self.modes:
            if self.var(m.tag, "X") * self.var(m.tag, "P") < 0.25 - tol:
                return False
        return True


@dataclass(frozen=True)
class SymplecticMap:
    """Linear phase-space map v -> S v + d over a list of mode pairs.

    ``modes`` labels which modes the rows act on; a map smaller than the
    state it is applied to is embedded by tag matching.
    """

    matrix: np.ndarray
    displacement: np.ndarray | None = None
    modes: tuple[ModeLabel, ...] | None = None

    def __post_init__(self):
        s = np.asarray(self.matrix, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
            raise ValueError(f"symplectic matrix must be 2n x 2n, got {s.shape}")
        d = self.displacement
        if d is not None:
            d = np.asarray(d, dtype=float).reshape(-1)
            if d.shape != (s.shape[0],):
                raise ValueError("displacement length must match matrix dimension")
            object.__setattr__(self, "displacement", _freeze(d))
        object.__setattr__(self, "matrix", _freeze(s))
        if self.modes is not None:
            object.__setattr__(self, "modes", tuple(self.modes))

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def check_symplectic(self, tol: float = SYMPLECTIC_TOL) -> None:
        omega = symplectic_form(self.n_modes)
        defect = self.matrix.T @ omega @ self.matrix - omega
        if np.max(np.abs(defect)) > tol:
            raise NonSymplecticError(
                f"map violates the symplectic condition (defect {np.max(np.abs(defect)):.3e})"
            )

    def inverse(self) -> "SymplecticMap":
        omega = symplectic_form(self.n_modes)
        s_inv = -omega @ self.matrix.T @ omega  # symplectic inverse, no linear solve
        d = self.displacement
        d_inv = None if d is None else -(s_inv @ d)
        return SymplecticMap(s_inv, d_inv, self.modes)


def identity_map(modes: Sequence[ModeLabel]) -> SymplecticMap:
    return SymplecticMap(np.eye(2 * len(modes)), None, tuple(modes))


def rotation_map(theta: float, mode: ModeLabel) -> SymplecticMap:
    """Phase-space rotation by theta in one mode's (X, P) plane."""
    c, s = np.cos(theta), np.sin(theta)
    return SymplecticMap(np.array([[c, -s], [s, c]]), None, (mode,))


def make_vacuum(modes: int | Sequence[ModeLabel]) -> GaussianState:
    """Vacuum / coherent-spin-state baseline: zero mean, cov = I/2."""
    if isinstance(modes, int):
        if modes < 1:
            raise ValueError("need at least one mode")
        labels = tuple(atomic_mode(i + 1) for i in range(modes))
    else:
        labels = tuple(modes)
        if not labels:
            raise ValueError("need at least one mode")
    n = len(labels)
    return GaussianState(labels, np.zeros(2 * n), VACUUM_VAR * np.eye(2 * n))


def merge_states(first: GaussianState, second: GaussianState) -> GaussianState:
    """Tensor product of two uncorrelated states (block-diagonal covariance)."""
    modes = first.modes + second.modes
    mean = np.concatenate([first.mean, second.mean])
    n1, n2 = 2 * first.n_modes, 2 * second.n_modes
    cov = np.zeros((n1 + n2, n1 + n2))
    cov[:n1, :n1] = first.cov
    cov[n1:, n1:] = second.cov
    return GaussianState(modes, mean, cov)


def _embed(smap: SymplecticMap, state: GaussianState) -> tuple[np.ndarray, np.ndarray]:
    """Expand a map acting on a subset of modes to the full state dimension."""
    dim = 2 * state.n_modes
    if smap.matrix.shape[0] == dim:
        s = smap.matrix
        d = smap.displacement if smap.displacement is not None else np.zeros(dim)
        return s, np.asarray(d)
    if smap.modes is None:
        raise ValueError(
            f"map dimension {smap.matrix.shape[0]} does not match state dimension {dim} "
            "and the map carries no mode labels to embed by"
        )
    idx = np.empty(2 * len(smap.modes), dtype=int)
    for k, m in enumerate(smap.modes):
        i = state.mode_index(m.tag)
        idx[2 * k], idx[2 * k + 1] = 2 * i, 2 * i + 1
    s = np.eye(dim)
    s[np.ix_(idx, idx)] = smap.matrix
    d = np.zeros(dim)
    if smap.displacement is not None:
        d[idx] = smap.displacement
    return s, d


def apply_symplectic(state: GaussianState, smap: SymplecticMap) -> GaussianState:
    """mean -> S mean + d, cov -> S cov S^T."""
    smap.check_symplectic()
    s, d = _embed(smap, state)
    mean = s @ state.mean + d
    cov = s @ state.cov @ s.T
    return GaussianState(state.modes, mean, 0.5 * (cov + cov.T))


def homodyne_condition(
    state: GaussianState, tag: str, axis: str, outcome: float
) -> GaussianState:
    """Condition the remaining modes on a homodyne outcome and drop the measured mode.

    Schur-complement update: the retained mean gains C (outcome - mu)/Var_m
    and the retained covariance loses C C^T / Var_m, where C is the
    cross-covariance with the measured quadrature.  The posterior
    covariance does not depend on the outcome.
    """
    q = state.quad_index(tag, axis)
    var_m = float(state.cov[q, q])
    if var_m < DEGENERATE_VAR_TOL:
        raise DegenerateMeasurementError(
            f"quadrature {tag}.{axis} has variance {var_m:.3e}; measurement is degenerate"
        )
    i = state.mode_index(tag)
    keep = [k for k in range(2 * state.n_modes) if k not in (2 * i, 2 * i + 1)]
    c = state.cov[keep, q]
    mean = state.mean[keep] + c * (outcome - state.mean[q]) / var_m
    cov = state.cov[np.ix_(keep, keep)] - np.outer(c, c) / var_m
    modes = tuple(m for k, m in enumerate(state.modes) if k != i)
    return GaussianState(modes, mean, 0.5 * (cov + cov.T))


def displace_feedback(
    state: GaussianState, tag: str, axis: str, amount: float
) -> GaussianState:
    """Shift the mean of one quadrature; covariance is untouched."""
    q = state.quad_index(tag, axis)
    mean = state.mean.copy()
    mean[q] += amount
    return GaussianState(state.modes, mean, state.cov)


def measure_with_feedback(
    state: GaussianState,
    measured: tuple[str, str],
    feedback: Iterable[tuple[str, str, float]] = (),
) -> GaussianState:
    """Ensemble state after measuring a quadrature and feeding the outcome back.

    Each (tag, axis, gain) target quadrature receives gain * outcome; the
    measured mode is then dropped.  Unlike :func:`homodyne_condition` this
    returns the *unconditional* Gaussian over the outcome distribution,
    which is the relevant object for feedback protocols run many times.
    """
    q = state.quad_index(measured[0], measured[1])
    i = state.mode_index(measured[0])
    keep = [k for k in range(2 * state.n_modes) if k not in (2 * i, 2 * i + 1)]
    m = np.zeros((len(keep), 2 * state.n_modes))
    for row, k in enumerate(keep):
        m[row, k] = 1.0
    for tag, axis, gain in feedback:
        target = state.quad_index(tag, axis)
        if target in (2 * i, 2 * i + 1):
            raise ValueError("feedback target cannot be the measured mode")
        m[keep.index(target), q] += gain
    mean = m @ state.mean
    cov = m @ state.cov @ m.T
    modes = tuple(lab for k, lab in enumerate(state.modes) if k != i)
    return GaussianState(modes, mean, 0.5 * (cov + cov.T))
