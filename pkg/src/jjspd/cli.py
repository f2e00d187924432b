"""Command-line pipeline: derive -> rates -> simulate -> analyze -> fit.

Configuration comes from a JSON file; command-line flags override file
values, which override defaults (flag > file > default).  Every output file
carries the tool version, the seed and a digest of the effective
configuration in its header, and contains no timestamps, so a rerun with
identical inputs is byte-identical.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric error.
The default output directory can be set with the JJSPD_OUTDIR environment
variable.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, dataio, escape, fit, junction, optics, simulate
from .errors import ConfigError, DataError, JJSPDError, NumericError

_EXIT_CONFIG = 2
_EXIT_DATA = 3
_EXIT_NUMERIC = 4


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} not found")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc


def _outpath(args, config, default_name: str) -> Path:
    out = getattr(args, "out", None) or config.get("out")
    if out is None:
        outdir = config.get("output_dir") or os.environ.get("JJSPD_OUTDIR", ".")
        out = Path(outdir) / default_name
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _header_meta(config: dict, seed=None) -> dict:
    meta = {"tool": f"jjspd {__version__}", "config_digest": dataio.config_digest(config)}
    if seed is not None:
        meta["seed"] = seed
    return meta


def _junction_from_config(args, config) -> junction.JunctionParams:
    block = config.get("junction", {})
    device_file = getattr(args, "devices", None) or config.get("device_file")
    device_name = getattr(args, "device", None) or config.get("device")
    i_c_over = getattr(args, "i_c_ua", None) or block.get("i_c_ua")
    if device_file and device_name:
        devices = junction.load_devices(device_file)
        if device_name not in devices:
            raise ConfigError(
                f"device {device_name!r} not in {device_file} "
                f"(available: {', '.join(devices)})"
            )
        i_c = i_c_over * 1e-6 if i_c_over else None
        return junction.junction_from_device(devices[device_name], i_c=i_c)
    required = ("i_c_ua", "r_n_ohm", "c_jj_ff", "gap_mev", "t_base_k")
    missing = [k for k in required if k not in block]
    if missing:
        raise ConfigError(
            "junction block incomplete; give device_file+device or fields "
            + ", ".join(missing)
        )
    from scipy.constants import e as _e

    omega_p0, q0, e_j0 = junction.derive_plasma_and_quality(
        block["i_c_ua"] * 1e-6, block["c_jj_ff"] * 1e-15, block["r_n_ohm"]
    )
    return junction.JunctionParams(
        i_c=block["i_c_ua"] * 1e-6,
        r_n=block["r_n_ohm"],
        c_jj=block["c_jj_ff"] * 1e-15,
        e_j0=e_j0,
        omega_p0=omega_p0,
        q0=q0,
        gap=block["gap_mev"] * 1e-3 * _e,
        t_base=block["t_base_k"],
    )


def _light_from_config(config) -> escape.LightModelParams | None:
    block = config.get("light")
    if not block:
        return None
    try:
        return escape.LightModelParams(
            t_star=block["t_star_k"],
            dt1=block["dt1_ns"] * 1e-9,
            photon_rate=block.get("photon_rate_hz", 0.0),
            i_r0=(block["i_r0_ua"] * 1e-6) if "i_r0_ua" in block else None,
            retrap_temperature=block.get("retrap_temperature_k"),
        )
    except KeyError as exc:
        raise ConfigError(f"light block is missing field {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"invalid light block: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_derive(args) -> int:
    devices = junction.load_devices(args.devices)
    wanted = args.device or list(devices)
    sections = []
    for name in wanted:
        if name not in devices:
            raise ConfigError(f"device {name!r} not in {args.devices}")
        dev = devices[name]
        params = junction.junction_from_device(dev)
        sections.append(junction.format_report(dev, params))
    report = "\n\n".join(sections) + "\n"
    meta = _header_meta({"devices": str(args.devices), "device": wanted})
    header = "".join(f"# {k}: {v}\n" for k, v in meta.items())
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(header + report)
    else:
        sys.stdout.write(header + report)
    return 0


def cmd_rates(args) -> int:
    config = _load_config(args.config)
    jj = _junction_from_config(args, config)
    bias = config.get("bias", {})
    try:
        start = bias["start_ua"] * 1e-6
        stop = bias["stop_ua"] * 1e-6
    except KeyError as exc:
        raise ConfigError(f"bias block is missing field {exc}") from exc
    n = int(bias.get("points", 50))
    i_b = np.linspace(start, stop, n)
    gamma = i_b / jj.i_c
    curves = {
        "ta": {"i_b": i_b, "gamma": gamma,
               "rate": np.asarray(escape.rate_ta(gamma, jj.t_base, jj))},
        "mqt": {"i_b": i_b, "gamma": gamma,
                "rate": np.asarray(escape.rate_mqt(gamma, jj))},
        "dark": {"i_b": i_b, "gamma": gamma,
                 "rate": np.asarray(escape.rate_dark(gamma, jj))},
    }
    meta = _header_meta(config)
    light = _light_from_config(config)
    if light is not None:
        parts = escape.rate_light_breakdown(gamma, jj, light)
        curves["light"] = {"i_b": i_b, "gamma": gamma, "rate": parts["total"]}
        meta["photon_rate_hz_light"] = light.photon_rate
        meta["retrap_clamped_points"] = int(np.sum(parts["retrap_clamped"]))
    # rates of exactly zero cannot be stored in log-space fits; keep them,
    # the file format is plain numbers
    out = _outpath(args, config, "rates.csv")
    dataio.write_rate_curves(out, curves, meta)
    print(f"wrote {out}")
    return 0


def cmd_optics(args) -> int:
    config = _load_config(args.config)
    beam_cfg = config.get("beam", {})
    geom = optics.BeamGeometry(
        w0=beam_cfg.get("w0_um", 5.2) * 1e-6,
        wavelength=beam_cfg.get("wavelength_nm", 1550.0) * 1e-9,
        z=beam_cfg.get("z_mm", 25.4) * 1e-3,
    )
    e_photon = beam_cfg.get("photon_energy_ev", 0.80) * 1.602176634e-19
    p_laser = config.get("laser_power_pw", 100.0) * 1e-12
    flux = optics.photon_flux_density(geom, e_photon)
    rows: dict[str, float] = {
        "rayleigh_range_um": optics.rayleigh_range(geom) * 1e6,
        "beam_radius_mm": optics.beam_radius(geom) * 1e3,
        "center_intensity_pw_per_mm2": optics.center_intensity(geom, p_laser) * 1e6,
        "photon_flux_per_um2_s_at_power": flux * p_laser * 1e-12,
    }
    coupling = config.get("coupling")
    if coupling:
        try:
            a_eff = 2.0 * coupling["width_um"] * coupling["x_eff_um"] * 1e-12
            alpha = coupling["alpha_avg"]
        except KeyError as exc:
            raise ConfigError(f"coupling block is missing field {exc}") from exc
        rate = optics.absorbed_photon_rate(flux, a_eff, alpha, p_laser)
        rows["effective_area_um2"] = a_eff * 1e12
        rows["absorbed_photon_rate_hz"] = rate
    profile_path = config.get("absorption_profile")
    if profile_path:
        profile = optics.load_absorption_profile(profile_path)
        target = config.get("target_ratio")
        if target is not None:
            x_eff = optics.effective_length(profile, target)
            rows["effective_length_nm"] = x_eff * 1e9
            rows["alpha_avg_perp"] = optics.average_absorption(profile, x_eff)
    out = _outpath(args, config, "optics.csv")
    dataio.write_table(
        out,
        {"value": np.array(list(rows.values()))},
        {**_header_meta(config), "quantities": ",".join(rows)},
    )
    print(f"wrote {out}")
    return 0


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config.setdefault("protocol", {})
        config["seed"] = args.seed
    seed = int(config.get("seed", 0))
    jj = _junction_from_config(args, config)
    proto_cfg = config.get("protocol", {})
    mode = proto_cfg.get("mode")
    light = _light_from_config(config)
    meta = _header_meta(config, seed=seed)
    if mode == "cw":
        if light is None:
            raise ConfigError("cw simulation needs a light block")
        protocol = simulate.CWProtocol(
            i_b=_proto_field(proto_cfg, "i_b_ua") * 1e-6,
            duration=_proto_field(proto_cfg, "duration_s"),
            photon_rate=proto_cfg.get("photon_rate_hz", light.photon_rate),
            dead_time=proto_cfg.get("dead_time_s", 1e-3),
            seed=seed,
        )
        trace = simulate.simulate_cw(protocol, jj, light)
        out = _outpath(args, config, "trace.csv")
        dataio.write_event_trace(out, trace, meta)
    elif mode == "ramp":
        protocol = simulate.RampProtocol(
            ramp_rate=_proto_field(proto_cfg, "ramp_rate_ua_per_s") * 1e-6,
            i_start=_proto_field(proto_cfg, "i_start_ua") * 1e-6,
            i_stop=_proto_field(proto_cfg, "i_stop_ua") * 1e-6,
            n_trials=int(_proto_field(proto_cfg, "n_trials")),
            seed=seed,
        )
        use_light = light if proto_cfg.get("with_light", False) else None
        samples = simulate.simulate_ramp(protocol, jj, use_light, n_workers=args.threads)
        out = _outpath(args, config, "switching_currents.csv")
        dataio.write_samples(out, samples, meta={**meta, "ramp_rate_ua_per_s":
                                                 proto_cfg["ramp_rate_ua_per_s"]})
    elif mode == "pulse":
        if light is None:
            raise ConfigError("pulse simulation needs a light block")
        protocol = simulate.PulseProtocol(
            p_pulse=_proto_field(proto_cfg, "p_pulse_w"),
            t_pulse=_proto_field(proto_cfg, "t_pulse_s"),
            i_b=_proto_field(proto_cfg, "i_b_ua") * 1e-6,
            n_pulses=int(_proto_field(proto_cfg, "n_pulses")),
            rep_rate=proto_cfg.get("rep_rate_hz", 1.0),
            seed=seed,
        )
        result = simulate.simulate_pulse(
            protocol, jj, light, _proto_field(proto_cfg, "rate_per_power_hz_per_w")
        )
        out = _outpath(args, config, "pulse_outcomes.csv")
        dataio.write_table(
            out,
            {"switched": result.switched.astype(float)},
            {**meta, "n_pulse": result.n_pulse, "p_switch": result.p_switch,
             "stderr": result.stderr},
        )
    else:
        raise ConfigError("protocol.mode must be one of cw, ramp, pulse")
    print(f"wrote {out}")
    return 0


def cmd_analyze(args) -> int:
    config = _load_config(args.config)
    meta = _header_meta(config)
    if args.kind == "counts":
        times, kinds, trace_meta = dataio.read_event_trace(args.input)
        duration = float(trace_meta.get("duration_s", times[-1] if times.size else 0.0))
        trace = simulate.EventTrace(
            times=times, kinds=kinds, duration=duration,
            seed=int(trace_meta.get("seed", 0)),
        )
        counts = simulate.bin_counts(trace, args.bin_width)
        mu, var, pmf = analysis.poisson_fit(counts)
        ratio, (lo, hi), flag = analysis.variance_mean_test(counts)
        out = _outpath(args, config, "counts.csv")
        dataio.write_table(
            out,
            {"count": counts.astype(float)},
            {**meta, "bin_width_s": args.bin_width, "poisson_mean": mu,
             "variance": var, "variance_mean_ratio": ratio,
             "ratio_interval": f"[{lo:.4f},{hi:.4f}]", "dispersion": flag},
        )
    elif args.kind == "fd":
        samples, sample_meta = dataio.read_samples(args.input)
        ramp_rate = args.ramp_rate or float(
            sample_meta.get("ramp_rate_ua_per_s", 0.0)
        )
        if ramp_rate <= 0:
            raise ConfigError("fd analysis needs --ramp-rate (uA/s) or file metadata")
        i_vals, rates = analysis.fd_transform(samples, ramp_rate * 1e-6, n_bins=args.bins)
        out = _outpath(args, config, "fd_rates.csv")
        dataio.write_rate_curves(
            out, {"fd": {"i_b": i_vals, "rate": rates}}, meta
        )
    elif args.kind == "shape":
        samples, _ = dataio.read_samples(args.input)
        mean, std, skew = analysis.distribution_shape_stats(samples)
        out = _outpath(args, config, "shape.csv")
        dataio.write_table(
            out,
            {"value": np.array([mean * 1e6, std * 1e6, skew])},
            {**meta, "quantities": "mean_uA,std_uA,skewness"},
        )
    else:
        raise ConfigError("analyze kind must be counts, fd or shape")
    print(f"wrote {out}")
    return 0


def _read_light_datasets(path, curves, file_meta, channels) -> list[fit.RateData]:
    datasets = []
    for name in channels:
        if name not in curves:
            raise DataError(f"{path}: no channel {name!r}")
        c = curves[name]
        rate_key = f"photon_rate_hz_{name}"
        if rate_key not in file_meta:
            raise DataError(f"{path}: header misses {rate_key}")
        datasets.append(
            fit.RateData(
                i_b=c["i_b"], rate=c["rate"], counts=c.get("counts"),
                photon_rate=float(file_meta[rate_key]),
            )
        )
    return datasets


def _proto_field(proto_cfg: dict, key: str):
    if key not in proto_cfg:
        raise ConfigError(f"protocol block is missing field {key!r}")
    return proto_cfg[key]


def _write_fit_report(out: Path, result: fit.FitResult, config: dict, inputs: dict) -> None:
    report = {
        "tool": f"jjspd {__version__}",
        "config_digest": dataio.config_digest(config),
        "inputs": inputs,
        "parameters": result.values,
        "stderr": result.stderr,
        "bounds": {k: list(v) for k, v in result.bounds.items()},
        "residual_norm": result.residual_norm,
        "converged": result.converged,
        "iterations": result.n_iterations,
        "flags": list(result.flags),
        "meta": {k: str(v) for k, v in result.meta.items()},
    }
    out.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def cmd_fit(args) -> int:
    config = _load_config(args.config)
    data_path = Path(args.data)
    if not data_path.exists():
        raise DataError(f"rate data file {data_path} not found")
    inputs = {"data": str(data_path), "data_digest": dataio.config_digest(
        {"content": data_path.read_text()})}
    curves, file_meta = dataio.read_rate_curves(data_path)

    if args.kind == "dark":
        jj = _junction_from_config(args, config)
        if "dark" not in curves:
            raise DataError(f"{data_path}: no dark channel")
        c = curves["dark"]
        data = fit.RateData(i_b=c["i_b"], rate=c["rate"], counts=c.get("counts"))
        result = fit.fit_dark(data, jj)
        out = _outpath(args, config, "fit_dark.json")
        _write_fit_report(out, result, config, inputs)
    elif args.kind in ("light", "light-retrap"):
        if not args.dark_fit:
            raise DataError(
                "light fits need --dark-fit pointing at a dark-fit report "
                "(run `jjspd fit --kind dark` first)"
            )
        dark_path = Path(args.dark_fit)
        if not dark_path.exists():
            raise DataError(f"dark-fit artifact {dark_path} not found; "
                            "run `jjspd fit --kind dark` first")
        dark_report = json.loads(dark_path.read_text())
        jj = _junction_from_config(args, config)
        jj = junction.with_critical_current(jj, dark_report["parameters"]["i_c"])
        channels = args.channels or [c for c in curves if c.startswith("light")]
        if not channels:
            raise DataError(f"{data_path}: no light channels found")
        datasets = _read_light_datasets(data_path, curves, file_meta, channels)
        if args.kind == "light":
            result = fit.fit_light(datasets, jj)
        else:
            retrap_t = (config.get("light", {}) or {}).get("retrap_temperature_k")
            result = fit.fit_light_retrap(datasets, jj, retrap_temperature=retrap_t)
        inputs["dark_fit"] = str(dark_path)
        out = _outpath(args, config, f"fit_{args.kind.replace('-', '_')}.json")
        _write_fit_report(out, result, config, inputs)
    else:
        raise ConfigError("fit kind must be dark, light or light-retrap")
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jjspd",
        description="Josephson-junction single-photon detector toolkit",
    )
    parser.add_argument("--version", action="version", version=f"jjspd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="derive junction parameters from a device file")
    p.add_argument("--devices", required=True, help="device JSON file")
    p.add_argument("--device", action="append", help="device name (repeatable; default all)")
    p.add_argument("--out", help="report path (default stdout)")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("rates", help="evaluate model rate curves on a bias grid")
    p.add_argument("--config", required=True)
    p.add_argument("--devices")
    p.add_argument("--device")
    p.add_argument("--i-c-ua", type=float, dest="i_c_ua")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("optics", help="beam, flux and coupling quantities")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_optics)

    p = sub.add_parser("simulate", help="run a seeded Monte Carlo protocol")
    p.add_argument("--config", required=True)
    p.add_argument("--devices")
    p.add_argument("--device")
    p.add_argument("--i-c-ua", type=float, dest="i_c_ua")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--threads", type=int, default=1, help="worker cap for ramp trials")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="statistics on traces and samples")
    p.add_argument("--kind", required=True, choices=["counts", "fd", "shape"])
    p.add_argument("--input", required=True)
    p.add_argument("--config")
    p.add_argument("--bin-width", type=float, default=1.0, dest="bin_width")
    p.add_argument("--ramp-rate", type=float, dest="ramp_rate",
                   help="ramp rate in uA/s for the fd transform")
    p.add_argument("--bins", type=int, default=200)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit", help="parameter estimation from rate curves")
    p.add_argument("--kind", required=True,
                   choices=["dark", "light", "light-retrap"])
    p.add_argument("--data", required=True, help="rate-curve CSV")
    p.add_argument("--dark-fit", dest="dark_fit", help="dark-fit JSON artifact")
    p.add_argument("--channels", action="append",
                   help="light channel name (repeatable)")
    p.add_argument("--config")
    p.add_argument("--devices")
    p.add_argument("--device")
    p.add_argument("--i-c-ua", type=float, dest="i_c_ua")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return _EXIT_DATA
    except (NumericError, ValueError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC
    except JJSPDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
