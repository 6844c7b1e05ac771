"""Command line interface.

Subcommands:

* ``simulate``      forward-model one reflectivity curve or energy scan
* ``analyze``       single-energy inversion of a measured curve
* ``diff-analyze``  two-energy difference inversion (curves straddling the edge)
* ``fit-resonance`` sheet thickness from a fixed-angle energy scan
* ``synth-suite``   generate the built-in synthetic sample corpus

Exit codes (total mapping; no error path exits 0):

* 0  success
* 1  internal numerical failure (fit did not converge, ...)
* 2  bad arguments, config schema violation, malformed or truncated input,
     violated physical precondition (Q = 0, N2D = 0, window/coverage, ...)
* 3  environment problem: missing scattering-factor table, unwritable output
* 4  no buried-layer signal detected above the spectral floor
* 5  the two energies of a difference analysis do not straddle the edge
     (checked after both files parse, before any inversion runs)
* 6  measured resonant contrast outside the simulated band

The table directory resolves from ``--tables-dir``, then the
``DELTAXRR_TABLES`` environment variable, then the packaged tables.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, dataio, extract, forward, model, xsf
from .errors import (
    ConfigError,
    NoLayerError,
    OutputError,
    ResonanceBandError,
    ToolkitError,
)

DEFAULT_ENERGY_BELOW = 1300.0
DEFAULT_ENERGY_ABOVE = 1335.0

# synthetic corpus: four dopant sheets of varying depth plus one buried
# oxide control that carries no resonant signal
SUITE_SAMPLES = (
    {"name": "sample1", "kind": "sheet", "depth_nm": 16.8, "fwhm_nm": 0.8,
     "n2d_nm2": 2.0, "oxide_nm": 1.0, "roughness_nm": 0.1},
    {"name": "sample2", "kind": "sheet", "depth_nm": 17.9, "fwhm_nm": 0.6,
     "n2d_nm2": 2.77, "oxide_nm": 1.0, "roughness_nm": 0.1},
    {"name": "sample3", "kind": "sheet", "depth_nm": 32.0, "fwhm_nm": 1.4,
     "n2d_nm2": 2.0, "oxide_nm": 1.2, "roughness_nm": 0.15},
    {"name": "sample4", "kind": "sheet", "depth_nm": 77.0, "fwhm_nm": 1.2,
     "n2d_nm2": 1.5, "oxide_nm": 1.0, "roughness_nm": 0.1},
    {"name": "sample5", "kind": "buried_oxide", "depth_nm": 15.3,
     "buried_oxide_nm": 2.0, "oxide_nm": 1.0, "roughness_nm": 0.1},
)


def _tables(tables_dir):
    si = xsf.load_element("si", tables_dir)
    o = xsf.load_element("o", tables_dir)
    arsenic = xsf.load_element("as", tables_dir)
    return {"si": si, "o": o, "as": arsenic}


def _table_paths(tables_dir):
    directory = xsf.resolve_tables_dir(tables_dir)
    return {el: os.path.join(directory, el + ".nff")
            for el in ("si", "o", "as")}


def build_stack(tables, oxide_nm=1.0, roughness_nm=0.1):
    """Native oxide over a silicon substrate (oxide omitted when 0)."""
    silicon = xsf.Material("si", ((tables["si"], xsf.SI_NUMBER_DENSITY),))
    layers = []
    if oxide_nm > 0.0:
        silica = xsf.Material("sio2", ((tables["si"], xsf.SIO2_SI_NUMBER_DENSITY),
                                       (tables["o"], xsf.SIO2_O_NUMBER_DENSITY)))
        layers.append(model.Layer(silica, oxide_nm, roughness_nm))
    layers.append(model.Layer(silicon, None, roughness_nm))
    return model.LayerStack(tuple(layers))


def build_buried_oxide_stack(tables, cap_top_nm, oxide_nm=1.0,
                             buried_oxide_nm=2.0, roughness_nm=0.1):
    """Surface oxide, silicon cap, buried oxide slab, silicon substrate."""
    silicon = xsf.Material("si", ((tables["si"], xsf.SI_NUMBER_DENSITY),))
    silica = xsf.Material("sio2", ((tables["si"], xsf.SIO2_SI_NUMBER_DENSITY),
                                   (tables["o"], xsf.SIO2_O_NUMBER_DENSITY)))
    cap = cap_top_nm - oxide_nm
    return model.LayerStack((
        model.Layer(silica, oxide_nm, roughness_nm),
        model.Layer(silicon, cap, roughness_nm),
        model.Layer(silica, buried_oxide_nm, roughness_nm),
        model.Layer(silicon, None, roughness_nm),
    ))


def _build_delta(args, tables):
    if args.depth_nm is None:
        return None
    shapes = [args.fwhm_nm is not None, args.slab_nm is not None,
              bool(args.dirac)]
    if sum(shapes) != 1:
        raise ConfigError(
            "choose exactly one sheet shape: --fwhm-nm, --slab-nm, or --dirac")
    if args.fwhm_nm is not None:
        return model.DeltaLayerSpec.gaussian_fwhm(
            args.depth_nm, args.fwhm_nm, args.n2d, tables["as"], tables["si"])
    if args.slab_nm is not None:
        return model.DeltaLayerSpec.slab(
            args.depth_nm, args.slab_nm, args.n2d, tables["as"], tables["si"])
    return model.DeltaLayerSpec.dirac(
        args.depth_nm, args.n2d, tables["as"], tables["si"])


def _print_kv(key, value):
    if isinstance(value, float):
        value = "%.6g" % value
    print("%s: %s" % (key, value))


def _ci_text(ci):
    flags = []
    if not ci.lower_bounded:
        flags.append("open-below")
    if not ci.upper_bounded:
        flags.append("open-above")
    text = "[%.6g, %.6g]" % (ci.low, ci.high)
    if ci.upper_bound_only:
        flags.append("upper-bound-only")
    if flags:
        text += " (" + ", ".join(flags) + ")"
    return text


def _result_dict(analysis, energy_label):
    res = analysis.result
    return {
        "amplitude": res.amplitude,
        "depth_nm": res.depth_nm,
        "depth_ci_95": [res.depth_ci.low, res.depth_ci.high],
        "energy": energy_label,
        "fwhm_ci_95": [res.fwhm_ci.low, res.fwhm_ci.high],
        "fwhm_nm": res.fwhm_nm,
        "method": res.method,
        "phase_rad": res.phase_rad,
        "profile_peak_nm": analysis.profile.peak_nm,
        "profile_resolution_nm": analysis.profile.resolution_nm,
    }


def _write_json(path, payload):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise OutputError("cannot write %s: %s" % (path, exc))


def _manifest_for(args, inputs, config_snapshot):
    return dataio.build_manifest(
        command=[os.path.basename(sys.argv[0] or "deltaxrr")] + sys.argv[1:],
        inputs=inputs,
        config=config_snapshot,
        tables={el: p for el, p in _table_paths(args.tables_dir).items()
                if os.path.exists(p)},
        seed=getattr(args, "seed", None),
        version=__version__,
    )


def _merge_config(args):
    config = dataio.load_config(args.config)
    if getattr(args, "window", None):
        config["window"] = [float(args.window[0]), float(args.window[1])]
        if not config["window"][0] < config["window"][1]:
            raise ConfigError("--window must be increasing")
    if getattr(args, "cutoff_nm", None) is not None:
        config["cutoff_nm"] = float(args.cutoff_nm)
    if getattr(args, "seed", None) is not None:
        config["seed"] = int(args.seed)
    if getattr(args, "tables_dir", None):
        config["tables_dir"] = args.tables_dir
    if getattr(args, "solver", None):
        if args.solver != "lm":
            raise ConfigError("--solver must be 'lm'")
        config["solver"] = args.solver
    args.seed = config["seed"]
    if not getattr(args, "tables_dir", None):
        args.tables_dir = config["tables_dir"]
    return config


def cmd_simulate(args):
    config = _merge_config(args)
    tables = _tables(args.tables_dir)
    stack = build_stack(tables, args.oxide_nm, args.roughness_nm)
    delta = _build_delta(args, tables)

    if args.mode == "scan":
        energies = np.arange(args.e_min, args.e_max + 1e-9, args.e_step)
        if energies.size < 2:
            raise ConfigError("energy grid needs at least two points")
        scan = forward.simulate_energy_scan(stack, delta, args.theta_deg,
                                            energies)
        dataio.write_scan(args.output, scan,
                          extra_header={"engine": "dynamical"})
    else:
        if args.n_q < 2:
            raise ConfigError("Q grid needs at least two points")
        q = np.linspace(args.q_min, args.q_max, args.n_q)
        if args.engine == "born":
            profile = model.discretize(stack, delta, energy_ev=args.energy,
                                       q_max_nm=max(10.0, args.q_max))
            r = forward.born_reflectivity(profile, q)
        else:
            r = forward.dynamical_reflectivity(stack, delta, args.energy, q)
        curve = forward.ReflectivityCurve(q=q, r=r, energy_ev=args.energy)
        extra = {"engine": args.engine}
        if args.i0 is not None:
            rng = np.random.default_rng(args.seed)
            curve = forward.add_counting_noise(curve, args.i0, rng)
            extra["i0"] = "%g" % args.i0
            extra["seed"] = str(args.seed)
        dataio.write_curve(args.output, curve, extra_header=extra)

    manifest = _manifest_for(args, inputs=[], config_snapshot=config)
    dataio.write_manifest(args.output + ".manifest.json", manifest)
    _print_kv("wrote", args.output)
    return 0


def cmd_analyze(args):
    config = _merge_config(args)
    curve = dataio.read_curve(args.curve)
    window = tuple(config["window"])
    analysis = extract.analyze_single_energy(curve, window=window,
                                             cutoff_nm=config["cutoff_nm"],
                                             tables_dir=args.tables_dir)
    res = analysis.result

    _print_kv("method", res.method)
    _print_kv("depth_nm", res.depth_nm)
    _print_kv("depth_ci_95", _ci_text(res.depth_ci))
    _print_kv("fwhm_nm", res.fwhm_nm)
    _print_kv("fwhm_ci_95", _ci_text(res.fwhm_ci))
    _print_kv("amplitude", res.amplitude)
    _print_kv("phase_rad", res.phase_rad)
    _print_kv("profile_peak_nm", analysis.profile.peak_nm)
    _print_kv("profile_resolution_nm", analysis.profile.resolution_nm)

    payload = _result_dict(analysis, curve.energy_ev)
    try:
        tables = _tables(args.tables_dir)
        df = xsf.delta_f(tables["as"], tables["si"], curve.energy_ev)
        n2d = res.amplitude / (2.0 * xsf.CONSTANTS.r0_nm * abs(df))
        _print_kv("n2d_nm2_estimate", n2d)
        _print_kv("table_phase_rad", float(np.angle(df)))
        payload["n2d_nm2_estimate"] = n2d
        payload["table_phase_rad"] = float(np.angle(df))
    except (ConfigError, ToolkitError) as exc:
        if exc.exit_code == 3:
            raise
        _print_kv("n2d_nm2_estimate", "unavailable (%s)" % exc)

    if args.output:
        _write_json(args.output, payload)
        manifest = _manifest_for(args, inputs=[args.curve],
                                 config_snapshot=config)
        dataio.write_manifest(args.output + ".manifest.json", manifest)
    return 0


def cmd_diff_analyze(args):
    config = _merge_config(args)
    first = dataio.read_curve(args.curve_below)
    second = dataio.read_curve(args.curve_above)
    # energy check precedes every inversion step; malformed files have
    # already exited 2 by now
    extract.check_edge_straddle(min(first.energy_ev, second.energy_ev),
                                max(first.energy_ev, second.energy_ev))
    below, above = ((first, second)
                    if first.energy_ev < second.energy_ev else (second, first))
    window = tuple(config["window"])
    analysis = extract.analyze_difference(above, below, window=window,
                                          cutoff_nm=config["cutoff_nm"],
                                          tables_dir=args.tables_dir)
    res = analysis.result

    _print_kv("method", res.method)
    _print_kv("energies_ev", "%.6g %.6g" % (below.energy_ev, above.energy_ev))
    _print_kv("depth_nm", res.depth_nm)
    _print_kv("depth_ci_95", _ci_text(res.depth_ci))
    _print_kv("fwhm_nm", res.fwhm_nm)
    _print_kv("fwhm_ci_95", _ci_text(res.fwhm_ci))
    _print_kv("amplitude", res.amplitude)
    _print_kv("phase_rad", res.phase_rad)
    _print_kv("profile_peak_nm", analysis.profile.peak_nm)

    payload = _result_dict(analysis,
                           [below.energy_ev, above.energy_ev])
    try:
        tables = _tables(args.tables_dir)
        ddf = (xsf.delta_f(tables["as"], tables["si"], above.energy_ev)
               - xsf.delta_f(tables["as"], tables["si"], below.energy_ev))
        n2d = res.amplitude / (2.0 * xsf.CONSTANTS.r0_nm * abs(ddf))
        predicted = float(np.angle(ddf))
        _print_kv("n2d_nm2_estimate", n2d)
        _print_kv("table_phase_rad", predicted)
        _print_kv("phase_minus_table_rad",
                  extract._wrap_angle(res.phase_rad - predicted))
        payload["n2d_nm2_estimate"] = n2d
        payload["table_phase_rad"] = predicted
    except (ConfigError, ToolkitError) as exc:
        if exc.exit_code == 3:
            raise
        _print_kv("n2d_nm2_estimate", "unavailable (%s)" % exc)

    if args.output:
        _write_json(args.output, payload)
        manifest = _manifest_for(
            args, inputs=[args.curve_below, args.curve_above],
            config_snapshot=config)
        dataio.write_manifest(args.output + ".manifest.json", manifest)
    return 0


def cmd_fit_resonance(args):
    config = _merge_config(args)
    if not args.n2d > 0.0:
        raise ConfigError("--n2d must be positive to scale the simulation")
    if not args.depth_nm > 0.0:
        raise ConfigError("--depth-nm must be positive")
    scan = dataio.read_scan(args.scan)
    tables = _tables(args.tables_dir)
    stack = build_stack(tables, args.oxide_nm, args.roughness_nm)
    template = model.DeltaLayerSpec.slab(args.depth_nm, 1.0, args.n2d,
                                         tables["as"], tables["si"])
    if args.ratio_mode == "means":
        measured, measured_sigma = extract.resonant_contrast(scan,
                                                             mode="means")
    else:
        measured = extract.resonant_contrast(scan, mode="span")
        measured_sigma = 0.0
    theta = args.theta_deg if args.theta_deg is not None else scan.theta_deg
    inversion = extract.thickness_from_resonance(
        measured, measured_sigma, stack, template, theta_deg=theta)

    _print_kv("measured_ratio", measured)
    _print_kv("measured_sigma", measured_sigma)
    _print_kv("thickness_nm", inversion.thickness_nm)
    _print_kv("thickness_ci_95", _ci_text(inversion.ci))
    _print_kv("simulated_band", "[%.6g, %.6g]" % inversion.band)

    if args.output:
        payload = {
            "measured_ratio": measured,
            "measured_sigma": measured_sigma,
            "simulated_band": list(inversion.band),
            "thickness_ci_95": [inversion.ci.low, inversion.ci.high],
            "thickness_nm": inversion.thickness_nm,
        }
        _write_json(args.output, payload)
        manifest = _manifest_for(args, inputs=[args.scan],
                                 config_snapshot=config)
        dataio.write_manifest(args.output + ".manifest.json", manifest)
    return 0


def cmd_synth_suite(args):
    config = _merge_config(args)
    tables = _tables(args.tables_dir)
    try:
        os.makedirs(args.output_dir, exist_ok=True)
        probe = os.path.join(args.output_dir, ".write_probe")
        with open(probe, "w") as fh:
            fh.write("ok")
        os.remove(probe)
    except OSError as exc:
        raise OutputError("output directory not writable: %s" % exc)

    rng = np.random.default_rng(config["seed"])
    q = np.linspace(0.5, 5.5, 1001)
    energies = (DEFAULT_ENERGY_BELOW, DEFAULT_ENERGY_ABOVE)
    written = []
    truth = {}
    for sample in SUITE_SAMPLES:
        if sample["kind"] == "sheet":
            stack = build_stack(tables, sample["oxide_nm"],
                                sample["roughness_nm"])
            delta = model.DeltaLayerSpec.gaussian_fwhm(
                sample["depth_nm"], sample["fwhm_nm"], sample["n2d_nm2"],
                tables["as"], tables["si"])
        else:
            stack = build_buried_oxide_stack(
                tables, sample["depth_nm"], sample["oxide_nm"],
                sample["buried_oxide_nm"], sample["roughness_nm"])
            delta = None
        truth[sample["name"]] = {k: v for k, v in sample.items()}
        for energy in energies:
            r = forward.dynamical_reflectivity(stack, delta, energy, q)
            curve = forward.ReflectivityCurve(q=q, r=r, energy_ev=energy)
            extra = {"sample": sample["name"]}
            if args.i0 is not None:
                curve = forward.add_counting_noise(curve, args.i0, rng)
                extra["i0"] = "%g" % args.i0
                extra["seed"] = str(config["seed"])
            name = "%s_e%d.txt" % (sample["name"], int(round(energy)))
            path = os.path.join(args.output_dir, name)
            dataio.write_curve(path, curve, extra_header=extra)
            written.append(name)

    config_snapshot = dict(config)
    config_snapshot["suite_truth"] = truth
    config_snapshot["i0"] = args.i0
    manifest = _manifest_for(args, inputs=[], config_snapshot=config_snapshot)
    manifest["outputs"] = written
    dataio.write_manifest(os.path.join(args.output_dir, "manifest.json"),
                          manifest)
    _print_kv("wrote", "%d curves in %s" % (len(written), args.output_dir))
    return 0


def _add_common(parser):
    parser.add_argument("--tables-dir", default=None,
                        help="scattering factor table directory "
                             "(falls back to $DELTAXRR_TABLES, then the "
                             "packaged tables)")
    parser.add_argument("--config", default=None,
                        help="JSON analysis configuration")
    parser.add_argument("--seed", type=int, default=None,
                        help="random seed for counting noise")
    parser.add_argument("--solver", default=None,
                        help="least-squares backend (only 'lm')")


def _add_window(parser):
    parser.add_argument("--window", nargs=2, type=float, metavar=("QLO", "QHI"),
                        default=None, help="analysis window in Q (nm^-1)")
    parser.add_argument("--cutoff-nm", type=float, default=None,
                        help="frequency-split cutoff depth (default: half "
                             "the detected layer depth)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="deltaxrr",
        description="Specular X-ray reflectivity of buried dopant sheets: "
                    "forward simulation and inversion.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="forward-model a curve or scan")
    _add_common(p)
    p.add_argument("--mode", choices=("curve", "scan"), default="curve")
    p.add_argument("--engine", choices=("dynamical", "born"),
                   default="dynamical")
    p.add_argument("--energy", type=float, default=DEFAULT_ENERGY_BELOW,
                   help="photon energy for curve mode (eV)")
    p.add_argument("--q-min", type=float, default=0.5)
    p.add_argument("--q-max", type=float, default=5.5)
    p.add_argument("--n-q", type=int, default=1001)
    p.add_argument("--theta-deg", type=float, default=10.0,
                   help="grazing angle for scan mode")
    p.add_argument("--e-min", type=float, default=1306.0)
    p.add_argument("--e-max", type=float, default=1344.0)
    p.add_argument("--e-step", type=float, default=0.5)
    p.add_argument("--oxide-nm", type=float, default=1.0)
    p.add_argument("--roughness-nm", type=float, default=0.1)
    p.add_argument("--depth-nm", type=float, default=None,
                   help="sheet depth; omit for a host-only sample")
    p.add_argument("--n2d", type=float, default=0.0,
                   help="sheet areal density (nm^-2)")
    p.add_argument("--fwhm-nm", type=float, default=None,
                   help="Gaussian sheet FWHM")
    p.add_argument("--slab-nm", type=float, default=None,
                   help="uniform slab sheet width")
    p.add_argument("--dirac", action="store_true",
                   help="ideal zero-width sheet")
    p.add_argument("--i0", type=float, default=None,
                   help="incident photons per point; adds counting noise")
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="single-energy inversion")
    _add_common(p)
    _add_window(p)
    p.add_argument("curve")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("diff-analyze",
                       help="two-energy difference inversion")
    _add_common(p)
    _add_window(p)
    p.add_argument("curve_below")
    p.add_argument("curve_above")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_diff_analyze)

    p = sub.add_parser("fit-resonance",
                       help="sheet thickness from an edge energy scan")
    _add_common(p)
    p.add_argument("scan")
    p.add_argument("--n2d", type=float, required=True)
    p.add_argument("--depth-nm", type=float, required=True)
    p.add_argument("--oxide-nm", type=float, default=1.0)
    p.add_argument("--roughness-nm", type=float, default=0.1)
    p.add_argument("--theta-deg", type=float, default=None,
                   help="override the scan header angle")
    p.add_argument("--ratio-mode", choices=("span", "means"), default="span",
                   help="contrast definition: span of the edge feature "
                        "(simulated convention) or window means with "
                        "uncertainty (measured convention)")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_fit_resonance)

    p = sub.add_parser("synth-suite",
                       help="generate the synthetic sample corpus")
    _add_common(p)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--i0", type=float, default=1e10,
                   help="incident photons per point (counting noise)")
    p.set_defaults(func=cmd_synth_suite)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NoLayerError as exc:
        print("error: %s" % exc, file=sys.stderr)
        for key, value in sorted(exc.diagnostics.items()):
            print("  %s: %.6g" % (key, value), file=sys.stderr)
        return exc.exit_code
    except ResonanceBandError as exc:
        print("error: %s" % exc, file=sys.stderr)
        if exc.band is not None:
            print("  simulated band: [%.6g, %.6g]" % exc.band,
                  file=sys.stderr)
        return exc.exit_code
    except ToolkitError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
