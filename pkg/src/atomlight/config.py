"""Flat key-value experiment configuration (INI sections per module).

All physical keys carry unit suffixes (power_mW, duration_ms,
detuning_MHz, ...) so a config file documents its own units.  The
bundled paper_params.ini records the operating point used throughout
the tests, including the reconciled effective cell area.
"""

from __future__ import annotations

import configparser
import math
from importlib import resources
from pathlib import Path

import numpy as np

from .decoherence import LinewidthModel, MotionGeometry
from .interface import CESIUM, PhysicalParams
from .spectroscopy import MorsModel, qz_splitting


def _parser() -> configparser.ConfigParser:
    return configparser.ConfigParser(inline_comment_prefixes=("#", ";"))


def load_config(path: str | Path | None = None) -> configparser.ConfigParser:
    """Load an INI config; None loads the bundled paper-parameters file."""
    cp = _parser()
    if path is None:
        text = resources.files("atomlight.data").joinpath("paper_params.ini").read_text()
        cp.read_string(text)
    else:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        with open(path) as fh:
            cp.read_file(fh)
    return cp


def paper_params() -> configparser.ConfigParser:
    return load_config(None)


def physical_params(cp: configparser.ConfigParser, **overrides) -> PhysicalParams:
    sec = cp["interface"]
    kwargs = {
        "power_mw": sec.getfloat("power_mW"),
        "duration_ms": sec.getfloat("duration_ms"),
        "detuning_mhz": sec.getfloat("detuning_MHz"),
        "faraday_angle_deg": sec.getfloat("faraday_angle_deg", fallback=1.0),
        "cell_area_cm2": sec.getfloat("cell_area_cm2"),
        "sigma_sq": sec.getfloat("sigma_sq", fallback=0.0),
    }
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return PhysicalParams(**kwargs)


def motion_geometry(cp: configparser.ConfigParser, **overrides) -> MotionGeometry:
    sec = cp["motion"]
    kwargs = {
        "beam_area_cm2": sec.getfloat("beam_area_cm2"),
        "cell_area_cm2": sec.getfloat("cell_area_cm2"),
        "cell_length_cm": sec.getfloat("cell_length_cm"),
        "rms_speed_cm_per_ms": sec.getfloat("rms_speed_cm_per_ms"),
        "duration_ms": sec.getfloat("duration_ms"),
    }
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return MotionGeometry(**kwargs)


def linewidth_model(cp: configparser.ConfigParser) -> LinewidthModel:
    sec = cp["linewidth"]
    return LinewidthModel(
        a=sec.getfloat("a_hz"),
        b=sec.getfloat("b_hz_per_density"),
        c=sec.getfloat("c_hz_per_mw"),
        d=sec.getfloat("d_hz_per_density_mw", fallback=0.0),
    )


def mors_model(cp: configparser.ConfigParser, **overrides) -> MorsModel:
    sec = cp["mors"]
    larmor = 2.0 * math.pi * 1e3 * sec.getfloat("larmor_khz")
    populations = np.array(
        [float(tok) for tok in sec.get("populations").split(",")], dtype=float
    )
    populations = populations / populations.sum()
    linewidth = sec.getfloat("linewidth_hz")
    kwargs = {
        "populations": populations,
        "linewidths_hz": np.full(populations.size - 1, linewidth),
        "larmor": larmor,
        "qz_splitting": qz_splitting(larmor, CESIUM.hyperfine_splitting),
        "amplitude": sec.getfloat("amplitude", fallback=1.0),
    }
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return MorsModel(**kwargs)
