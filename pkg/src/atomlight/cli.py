"""Command-line front end.

Usage:
    atomlight entangle --kappa-sq 1 --beta 1 --closed-form
    atomlight entangle --sweep theta_F --grid 0:14:1 --runs 10000 --seed 7
    atomlight memory --gain-ba 0.836 --gain-f 0.797 --beta 0.61 --zeta 0.75 --n0 4
    atomlight memory --kappa 1.37 --gain-sweep 0:1.5:0.05 --beta 0.61 --zeta 0.75
    atomlight calibrate --theta-F-deg 1.0
    atomlight mors --scan 321600:322400:801 -o out
    atomlight mors --fit spectrum.csv
    atomlight stark --angle 54.7356

Every run writes a JSON report (schema in atomlight/data/report_schema.json)
plus CSV data files next to it.  Output directory: --outdir, else the
ATOMLIGHT_OUTDIR environment variable, else the working directory.
Exit codes: 0 success, 1 runtime failure, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import decoherence, interface, montecarlo, protocols, spectroscopy, stark

SCHEMA_VERSION = "1"

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    pass


def parse_grid(spec: str) -> np.ndarray:
    """start:stop:step, stop inclusive (within half a step)."""
    try:
        start, stop, step = (float(tok) for tok in spec.split(":"))
    except ValueError as exc:
        raise ConfigError(f"bad grid spec {spec!r}; expected start:stop:step") from exc
    if step <= 0 or stop < start:
        raise ConfigError(f"bad grid spec {spec!r}; need step > 0 and stop >= start")
    n = int(round((stop - start) / step)) + 1
    return start + step * np.arange(n)


def _outdir(args) -> Path:
    out = args.outdir or os.environ.get("ATOMLIGHT_OUTDIR") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_report(args, command: str, params: dict, results: dict, files: dict) -> Path:
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "params": params,
        "results": results,
        "files": {k: str(v) for k, v in files.items()},
    }
    path = _outdir(args) / f"{command}_report.json"
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_csv(args, name: str, header: list[str], rows) -> Path:
    path = _outdir(args) / name
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _json_safe(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


# ---------------------------------------------------------------- entangle


def cmd_entangle(args) -> int:
    files: dict = {}
    results: dict = {}
    params = {
        "kappa_sq": args.kappa_sq,
        "beta": args.beta,
        "mode": "closed_form" if args.closed_form else "monte_carlo",
        "feedback": args.feedback,
        "runs": args.runs,
        "seed": args.seed,
    }
    kappa = math.sqrt(args.kappa_sq)

    if args.sweep:
        rows = _entangle_sweep(args, kappa)
        header = list(rows[0].keys())
        csv_path = write_csv(
            args, "entangle_sweep.csv", header,
            ([_json_safe(r[k]) for k in header] for r in rows),
        )
        files["sweep_csv"] = csv_path.name
        results["sweep"] = {"parameter": args.sweep, "points": len(rows)}
        params["sweep"] = args.sweep
        params["grid"] = args.grid
    elif args.closed_form:
        if args.feedback:
            report = protocols.entangle_unconditional(kappa, args.beta, args.gain)
        else:
            report = protocols.entangle_conditional(kappa, args.beta, mode="closed_form")
        results.update(report.to_dict())
    else:
        cfg = montecarlo.TrajectoryConfig(
            protocol="entangle_feedback" if args.feedback else "entangle_conditional",
            n_runs=args.runs,
            seed=args.seed,
            kappa=kappa,
            beta=args.beta,
            feedback_gain=args.gain,
        )
        stats = montecarlo.run_trajectories(cfg, n_threads=args.threads)
        results["estimates"] = {k: _json_safe(v) for k, v in stats.estimates.items()}
        results["stderrs"] = {k: _json_safe(v) for k, v in stats.stderrs.items()}
        if args.dump_outcomes:
            path = write_csv(
                args, "entangle_outcomes.csv", list(stats.columns), stats.outcomes
            )
            files["outcomes_csv"] = path.name

    report_path = write_report(args, "entangle", params, results, files)
    _summarize("entangle", results)
    print(f"report: {report_path}")
    return EXIT_OK


def _entangle_sweep(args, kappa: float) -> list[dict]:
    grid = parse_grid(args.grid)
    base = montecarlo.TrajectoryConfig(
        protocol="entangle_feedback" if args.feedback else "entangle_conditional",
        n_runs=args.runs,
        seed=args.seed,
        kappa=kappa,
        beta=args.beta,
        feedback_gain=args.gain,
    )
    if args.sweep == "theta_F":
        # map the Faraday angle to kappa^2 through the calibration slope
        cp = cfgmod.load_config(args.config)
        pp = cfgmod.physical_params(cp, faraday_angle_deg=1.0)
        slope = interface.kappa_squared(pp)
        rows = []
        for theta in grid:
            kappa_sq = slope * theta
            point_rows = montecarlo.sweep(
                base, "kappa_sq", [kappa_sq] if kappa_sq > 0 else [1e-12],
                n_threads=args.threads,
            )
            row = {"theta_F_deg": float(theta)}
            row.update(point_rows[0])
            rows.append(row)
        return rows
    return montecarlo.sweep(base, args.sweep, grid, n_threads=args.threads)


# ------------------------------------------------------------------ memory


def cmd_memory(args) -> int:
    files: dict = {}
    results: dict = {}
    if args.gain_ba is not None and args.gain_f is not None:
        gain_ba, gain_f = args.gain_ba, args.gain_f
        kappa = gain_ba / args.beta
        gain = gain_f / math.sqrt(args.zeta)
    else:
        if args.kappa is None:
            raise ConfigError("memory needs either --kappa/--gain or --gain-ba/--gain-f")
        kappa = args.kappa
        gain = args.gain if args.gain is not None else 1.0
        gain_ba = args.beta * kappa
        gain_f = gain * math.sqrt(args.zeta)
    params = {
        "kappa": kappa,
        "gain": gain,
        "gain_ba": gain_ba,
        "gain_f": gain_f,
        "beta": args.beta,
        "zeta": args.zeta,
        "n0": args.n0,
        "runs": args.runs,
        "seed": args.seed,
    }

    if args.gain_sweep:
        grid = parse_grid(args.gain_sweep)
        rows = []
        for gval in grid:
            g_f = gval * math.sqrt(args.zeta)
            var_x, var_p = protocols.memory_variances(gain_ba, g_f, args.beta, args.zeta)
            rows.append(
                [gval, g_f, var_x, var_p,
                 protocols.memory_fidelity(gain_ba, g_f, var_x, var_p, args.n0)]
            )
        csv_path = write_csv(
            args, "memory_gain_sweep.csv",
            ["feedback_gain", "gain_f", "var_x_snu", "var_p_snu", "fidelity"],
            rows,
        )
        files["sweep_csv"] = csv_path.name
        results["sweep"] = {"parameter": "feedback_gain", "points": len(rows)}
        params["gain_sweep"] = args.gain_sweep
    elif args.monte_carlo:
        cfg = montecarlo.TrajectoryConfig(
            protocol="memory",
            n_runs=args.runs,
            seed=args.seed,
            kappa=kappa,
            beta=args.beta,
            zeta=args.zeta,
            feedback_gain=gain,
            input_photon_number=args.n0,
        )
        stats = montecarlo.run_trajectories(cfg, n_threads=args.threads)
        results["estimates"] = {k: _json_safe(v) for k, v in stats.estimates.items()}
        results["stderrs"] = {k: _json_safe(v) for k, v in stats.stderrs.items()}
        if args.dump_outcomes:
            path = write_csv(
                args, "memory_outcomes.csv", list(stats.columns), stats.outcomes
            )
            files["outcomes_csv"] = path.name
    else:
        var_x, var_p = protocols.memory_variances(gain_ba, gain_f, args.beta, args.zeta)
        report = protocols.MemoryReport(gain_ba, gain_f, var_x, var_p)
        results.update(report.to_dict(n0_values=(args.n0,) if args.n0 else (2.0, 4.0)))

    report_path = write_report(args, "memory", params, results, files)
    _summarize("memory", results)
    print(f"report: {report_path}")
    return EXIT_OK


# --------------------------------------------------------------- calibrate


def cmd_calibrate(args) -> int:
    cp = cfgmod.load_config(args.config)
    pp = cfgmod.physical_params(
        cp,
        power_mw=args.power_mW,
        duration_ms=args.duration_ms,
        detuning_mhz=args.detuning_MHz,
        faraday_angle_deg=args.theta_F_deg,
        cell_area_cm2=args.cell_area_cm2,
        sigma_sq=args.sigma_sq,
    )
    a0, a1, a2 = interface.coupling_coefficients(pp.detuning_mhz)
    kappa_sq = interface.kappa_squared(pp)
    geom = cfgmod.motion_geometry(cp)
    p, sigma_sq = decoherence.motion_statistics(geom)
    beta_motion = decoherence.motion_effective_beta(sigma_sq)
    results = {
        "a0": a0,
        "a1": a1,
        "a2": a2,
        "kappa_sq": kappa_sq,
        "kappa_sq_per_deg": kappa_sq / abs(pp.faraday_angle_deg)
        if pp.faraday_angle_deg
        else None,
        "motion": {
            "occupancy_p": p,
            "sigma_sq": sigma_sq,
            "beta_motion": beta_motion,
            "css_variance_per_spin": decoherence.motion_css_variance(1.0, p, sigma_sq),
        },
    }
    params = {
        "power_mW": pp.power_mw,
        "duration_ms": pp.duration_ms,
        "detuning_MHz": pp.detuning_mhz,
        "theta_F_deg": pp.faraday_angle_deg,
        "cell_area_cm2": pp.cell_area_cm2,
        "sigma_sq": pp.sigma_sq,
    }
    rows = [
        ["a0", a0], ["a1", a1], ["a2", a2], ["kappa_sq", kappa_sq],
        ["motion_p", p], ["motion_sigma_sq", sigma_sq], ["motion_beta", beta_motion],
    ]
    csv_path = write_csv(args, "calibration.csv", ["quantity", "value"], rows)
    report_path = write_report(
        args, "calibrate", params, results, {"table_csv": csv_path.name}
    )
    _summarize("calibrate", results)
    print(f"report: {report_path}")
    return EXIT_OK


# -------------------------------------------------------------------- mors


def cmd_mors(args) -> int:
    cp = cfgmod.load_config(args.config)
    model = cfgmod.mors_model(cp)
    if args.fully_pumped:
        model = spectroscopy.fully_pumped_model(
            model.larmor, model.qz_splitting, float(model.linewidths_hz[0])
        )
    files: dict = {}
    results: dict = {}
    params = {"fit": args.fit, "scan": args.scan, "fully_pumped": args.fully_pumped}

    if args.fit:
        scan, signal = _read_spectrum_csv(args.fit)
        fit = spectroscopy.fit_mors(signal, scan, model)
        results["fit"] = {
            "success": fit.success,
            "message": fit.message,
            "residual_rms": fit.residual_rms,
            "populations": [float(x) for x in fit.model.populations],
            "linewidths_hz": [float(x) for x in fit.model.linewidths_hz],
            "larmor_hz": fit.model.larmor / (2.0 * math.pi),
            "amplitude": fit.model.amplitude,
        }
        if not fit.success:
            print(f"mors fit failed: {fit.message}", file=sys.stderr)
    else:
        if args.scan:
            start, stop, n = args.scan.split(":")
            scan = np.linspace(float(start), float(stop), int(n))
        else:
            center = model.larmor / (2.0 * math.pi)
            scan = np.linspace(center - 400.0, center + 400.0, 1601)
        signal = spectroscopy.mors_spectrum(model, scan)
        csv_path = write_csv(
            args, "mors_spectrum.csv", ["frequency_Hz", "signal_au"],
            zip(scan, signal),
        )
        files["spectrum_csv"] = csv_path.name
        results["spectrum"] = {
            "points": int(scan.size),
            "peak_signal": float(np.max(signal)),
            "larmor_hz": model.larmor / (2.0 * math.pi),
            "qz_splitting_hz": model.qz_splitting / (2.0 * math.pi),
        }

    report_path = write_report(args, "mors", params, results, files)
    _summarize("mors", results)
    print(f"report: {report_path}")
    return EXIT_OK


def _read_spectrum_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    if not Path(path).exists():
        raise ConfigError(f"spectrum file not found: {path}")
    data = np.genfromtxt(path, delimiter=",", names=True)
    return np.asarray(data["frequency_Hz"]), np.asarray(data["signal_au"])


# ------------------------------------------------------------------- stark


def cmd_stark(args) -> int:
    cp = cfgmod.load_config(args.config)
    sec = cp["stark"]
    power_mw = args.power_mW if args.power_mW is not None else sec.getfloat("power_mW")
    beam = args.beam_area_cm2 if args.beam_area_cm2 is not None else sec.getfloat("beam_area_cm2")
    detuning = args.detuning_MHz if args.detuning_MHz is not None else sec.getfloat("detuning_MHz")
    flux = interface._photon_flux_per_s(power_mw, interface.CESIUM)

    rows = []
    for m in range(-4, 4):
        cfg = stark.StarkConfig(
            polarization_angle_deg=args.angle,
            photon_flux=flux,
            beam_area_cm2=beam,
            detuning_mhz=detuning,
            m=m,
        )
        rows.append([m, m + 1, stark.stark_line_shift(cfg)])
    csv_path = write_csv(
        args, "stark_shifts.csv", ["m_lower", "m_upper", "shift_Hz"], rows
    )
    files = {"shifts_csv": csv_path.name}

    shift_map = {r[0]: r[2] for r in rows}
    results = {
        "angle_deg": args.angle,
        "magic_angle_deg": stark.MAGIC_ANGLE_DEG,
        "max_abs_shift_hz": max(abs(r[2]) for r in rows),
        "outermost_pair_hz": {"m_3_4": shift_map[3], "m_-4_-3": shift_map[-4]},
        "laser_noise_ratio": stark.laser_noise_ratio(
            4, *interface.coupling_coefficients(detuning)[1:]
        ),
    }

    if args.compensate:
        data = np.genfromtxt(args.compensate, delimiter=",", names=True)
        names = data.dtype.names
        field = stark.compensation_bias_field(np.atleast_1d(data[names[1]]))
        comp_path = write_csv(
            args, "stark_compensation.csv", ["time_ms", "bias_field_T"],
            zip(np.atleast_1d(data[names[0]]), field),
        )
        files["compensation_csv"] = comp_path.name

    params = {
        "angle_deg": args.angle,
        "power_mW": power_mw,
        "beam_area_cm2": beam,
        "detuning_MHz": detuning,
    }
    report_path = write_report(args, "stark", params, results, files)
    _summarize("stark", results)
    print(f"report: {report_path}")
    return EXIT_OK


# ------------------------------------------------------------------ driver


def _summarize(command: str, results: dict) -> None:
    def fmt(v):
        return f"{v:.6g}" if isinstance(v, float) else v

    print(f"[{command}]")
    for key, value in results.items():
        if isinstance(value, dict):
            inner = ", ".join(f"{k}={fmt(v)}" for k, v in value.items())
            print(f"  {key}: {inner}")
        else:
            print(f"  {key}: {fmt(value)}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atomlight",
        description="Gaussian simulator and calibration toolkit for the QND atom-light interface",
    )
    parser.add_argument("--outdir", default=None, help="output directory (or $ATOMLIGHT_OUTDIR)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="INI config; default: bundled paper parameters")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, default=12345)

    p = sub.add_parser("entangle", help="two-ensemble entanglement protocol")
    common(p)
    p.add_argument("--kappa-sq", type=float, required=True, dest="kappa_sq")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--closed-form", action="store_true")
    p.add_argument("--monte-carlo", action="store_true")
    p.add_argument("--feedback", action="store_true", help="unconditional variant")
    p.add_argument("--gain", type=float, default=None, help="feedback gain; default optimal")
    p.add_argument("--runs", type=int, default=10000)
    p.add_argument("--sweep", choices=["kappa_sq", "beta", "feedback_gain", "theta_F"])
    p.add_argument("--grid", default=None, help="start:stop:step for --sweep")
    p.add_argument("--dump-outcomes", action="store_true")
    p.set_defaults(func=cmd_entangle)

    p = sub.add_parser("memory", help="direct-mapping quantum memory")
    common(p)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--gain", type=float, default=None)
    p.add_argument("--gain-ba", type=float, default=None, dest="gain_ba")
    p.add_argument("--gain-f", type=float, default=None, dest="gain_f")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--zeta", type=float, default=1.0)
    p.add_argument("--n0", type=float, default=4.0, help="mean photon number of the input distribution")
    p.add_argument("--gain-sweep", default=None, dest="gain_sweep", help="start:stop:step")
    p.add_argument("--monte-carlo", action="store_true")
    p.add_argument("--runs", type=int, default=10000)
    p.add_argument("--dump-outcomes", action="store_true")
    p.set_defaults(func=cmd_memory)

    p = sub.add_parser("calibrate", help="coupling constants, kappa^2 and motion statistics")
    common(p)
    p.add_argument("--power-mW", type=float, default=None, dest="power_mW")
    p.add_argument("--duration-ms", type=float, default=None, dest="duration_ms")
    p.add_argument("--detuning-MHz", type=float, default=None, dest="detuning_MHz")
    p.add_argument("--theta-F-deg", type=float, default=None, dest="theta_F_deg")
    p.add_argument("--cell-area-cm2", type=float, default=None, dest="cell_area_cm2")
    p.add_argument("--sigma-sq", type=float, default=None, dest="sigma_sq")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("mors", help="synthesize or fit magneto-optical resonance spectra")
    common(p)
    p.add_argument("--scan", default=None, help="start_Hz:stop_Hz:points")
    p.add_argument("--fit", default=None, help="two-column CSV (frequency_Hz, signal_au)")
    p.add_argument("--fully-pumped", action="store_true")
    p.set_defaults(func=cmd_mors)

    p = sub.add_parser("stark", help="probe-induced shifts of the Zeeman resonances")
    common(p)
    p.add_argument("--angle", type=float, required=True, help="polarization angle, degrees")
    p.add_argument("--power-mW", type=float, default=None, dest="power_mW")
    p.add_argument("--beam-area-cm2", type=float, default=None, dest="beam_area_cm2")
    p.add_argument("--detuning-MHz", type=float, default=None, dest="detuning_MHz")
    p.add_argument("--compensate", default=None, help="shift CSV to convert to a bias-field pulse")
    p.set_defaults(func=cmd_stark)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "sweep", None) and not getattr(args, "grid", None):
        parser.error("--sweep requires --grid")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
