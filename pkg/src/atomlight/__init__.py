"""Gaussian-state simulator and calibration toolkit for the deterministic
QND atom-light interface: two-ensemble entanglement, direct-mapping
quantum memory, magneto-optical resonance spectroscopy, and probe-noise
diagnostics.
"""

from .gaussian import (
    GaussianState,
    ModeLabel,
    SymplecticMap,
    apply_symplectic,
    atomic_mode,
    displace_feedback,
    from_snu,
    homodyne_condition,
    light_mode,
    make_vacuum,
    merge_states,
    to_snu,
)
from .interface import (
    CESIUM,
    AtomicConstants,
    PhysicalParams,
    coupling_coefficients,
    faraday_angle_deg,
    kappa_squared,
    lockin_components,
    qnd_map,
)
from .decoherence import (
    DecoherenceParams,
    LinewidthModel,
    MotionGeometry,
    admix_vacuum,
    linewidth,
    motion_effective_beta,
    motion_statistics,
    t2_from_linewidth,
    thermal_noise_evolution,
)
from .protocols import (
    EntanglementReport,
    MemoryReport,
    classical_fidelity_bound,
    entangle_conditional,
    entangle_unconditional,
    memory_fidelity,
    memory_readout,
    memory_store,
    memory_variances,
    minimize_conditional_variance,
)
from .spectroscopy import (
    MorsModel,
    RfPulse,
    fit_mors,
    mors_spectrum,
    qz_splitting,
    rf_offresonant,
    rf_steer,
)
from .stark import (
    MAGIC_ANGLE_DEG,
    StarkConfig,
    compensation_bias_field,
    laser_noise_ratio,
    stark_level_shift,
    stark_line_shift,
)
from .montecarlo import TrajectoryConfig, TrajectoryStats, run_trajectories, sweep

__version__ = "0.1.0"
