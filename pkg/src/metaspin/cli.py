"""Command-line entry point: ``metaspin <command> [options]``."""
from __future__ import annotations

import argparse
import math
import shlex
import sys

import numpy as np

from . import __version__, decoherence, gprofile, metrics, qcore
from .output import csv_text, json_text, svg_line_plot, write_atomic

COMMANDS = ("evolve", "bell", "discord-decay", "platforms", "fit-g", "concurrence-stats",
            "compare-materials", "fixture")

_INITIAL = {"++": qcore.PP, "+-": qcore.PM, "-+": qcore.MP, "--": qcore.MM}


class CliError(Exception):
    pass


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json", "svg"), default="csv")
    p.add_argument("--config", metavar="PATH", help="key = value file of option defaults and preset overrides")
    p.add_argument("--legacy-c", action="store_true", help="use c = 3e8 m/s instead of the exact value")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metaspin", description=__doc__)
    parser.add_argument("--version", action="version", version=f"metaspin {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    common = _common()

    p = sub.add_parser("evolve", parents=[common], help="populations and concurrence versus time")
    p.add_argument("--g", type=float, help="coupling (rad/s)")
    p.add_argument("--omega0", type=float, default=0.0)
    p.add_argument("--omega1", type=float, default=0.0)
    p.add_argument("--t-max", type=float)
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--initial", choices=sorted(_INITIAL), default="+-")

    p = sub.add_parser("bell", parents=[common], help="Bell-condition time and state")
    p.add_argument("--g", type=float, help="coupling (rad/s)")
    p.add_argument("--omega0", type=float, default=0.0)
    p.add_argument("--omega1", type=float, default=0.0)

    p = sub.add_parser("discord-decay", parents=[common], help="discord and concurrence under depolarisation")
    p.add_argument("--preset", default="metasurface")
    p.add_argument("--gamma", type=float, help="override the preset decoherence rate (1/s)")
    p.add_argument("--t-max", type=float, help="default: 3 x the vanishing time")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--threshold", type=float, default=decoherence.SEPARABLE_PURITY)

    p = sub.add_parser("platforms", parents=[common], help="coherence and discord times per platform")
    p.add_argument("--platform", "--preset", dest="platform", action="append",
                   help="preset name (repeatable; default: metasurface, sfwm, spdc)")
    p.add_argument("--gamma", type=float, help="override gamma (single platform only)")
    p.add_argument("--threshold", type=float, default=decoherence.SEPARABLE_PURITY)

    p = sub.add_parser("fit-g", parents=[common], help="radial g(r) profile and Gaussian fit")
    _profile_options(p)

    p = sub.add_parser("concurrence-stats", parents=[common], help="concurrence across the aperture")
    _profile_options(p)
    p.add_argument("--aperture-r", type=float, help="default: whole profile")
    p.add_argument("--weighting", choices=("count", "power", "uniform"), default="count")

    p = sub.add_parser("compare-materials", parents=[common], help="rank materials by g(r) profile")
    p.add_argument("--input", action="append", metavar="NAME=PATH", help="repeat for each material")
    p.add_argument("--bin-width", type=float)
    p.add_argument("--max-radius", type=float)

    p = sub.add_parser("fixture", parents=[common], help="seeded synthetic Gaussian power map")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--extent", type=float, default=20e-6)
    p.add_argument("--width", type=float, default=2e-6)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--offset", type=float, default=0.0)
    p.add_argument("--center-x", type=float, default=0.0)
    p.add_argument("--center-y", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _profile_options(p):
    p.add_argument("--input", metavar="PATH", help="power map CSV (x,y,p)")
    p.add_argument("--bin-width", type=float, help="default: extent/64")
    p.add_argument("--max-radius", type=float)
    p.add_argument("--g-peak", type=float, help="physical peak coupling (rad/s); default: peak-unit")


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise CliError(f"--{name.replace('_', '-')} is required")


def _positive(args, *names):
    for name in names:
        v = getattr(args, name)
        if v is None or not (math.isfinite(v) and v > 0):
            raise CliError(f"--{name.replace('_', '-')} must be positive, got {v!r}")


def _speed_of_light(args):
    return decoherence.LEGACY_SPEED_OF_LIGHT if args.legacy_c else decoherence.SPEED_OF_LIGHT


def _header(args, argv, extra=()):
    shown = []
    skip = False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == "--out":
            skip = True
            continue
        if tok.startswith("--out="):
            continue
        shown.append(tok)
    lines = [f"metaspin {__version__}", f"command: metaspin {shlex.join(shown)}",
             f"c = {_speed_of_light(args):.9g} m/s"]
    if args.config:
        for key, value in args.config_values.items():
            lines.append(f"config: {key} = {value}")
    lines.extend(extra)
    return lines


def _emit(args, text):
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def _render(args, header, columns, rows, payload=None, plot=None):
    if args.format == "csv":
        return csv_text(header, columns, rows)
    if args.format == "json":
        if payload is None:
            payload = {"columns": list(columns), "rows": [list(r) for r in rows]}
        return json_text(header, payload)
    if plot is None:
        raise CliError(f"{args.command} has no SVG rendering")
    return plot(header)


def _load_map(path):
    if path is None:
        raise CliError("--input is required")
    try:
        return gprofile.load_power_map(path, min_samples=gprofile.MIN_PIPELINE_SAMPLES)
    except FileNotFoundError:
        raise CliError(f"input file not found: {path}") from None


def _profile_from_args(args):
    pmap = _load_map(args.input)
    prof = gprofile.radial_average(pmap, bin_width=args.bin_width, max_radius=args.max_radius)
    return pmap, prof


def _preset_overrides(args, name):
    prefix = name + "."
    return {k[len(prefix):]: v for k, v in args.config_values.items() if k.startswith(prefix)}


def _platform(args, name, gamma=None):
    overrides = _preset_overrides(args, name)
    if gamma is not None:
        overrides["gamma"] = gamma
    try:
        return decoherence.platform_from_preset(name, overrides, c=_speed_of_light(args))
    except KeyError as exc:
        raise CliError(exc.args[0]) from None


def _provenance(model):
    keys = ", ".join(f"{k}={v:.6g}" for k, v in model.source_params.items())
    return f"preset {model.name} ({model.kind}): {keys}"


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def run_evolve(args, argv):
    _require(args, "g", "t_max")
    _positive(args, "g", "t_max")
    if args.steps < 2:
        raise CliError("--steps must be >= 2")
    params = qcore.SystemParams(args.omega0, args.omega1, args.g)
    psi0 = _INITIAL[args.initial]
    ts = np.linspace(0.0, args.t_max, args.steps)
    rows = []
    for t in ts:
        psi = qcore.evolve_analytic(psi0, params, float(t))
        rows.append([float(t), *map(float, qcore.measurement_probabilities(psi)),
                     metrics.concurrence_pure(psi)])
    columns = ["t", "P++", "P+-", "P-+", "P--", "concurrence"]
    header = _header(args, argv, [f"initial state |{args.initial}>, t_bell = {qcore.bell_time(args.g):.11e} s"])

    def plot(h):
        cols = list(zip(*rows))
        series = [(name, cols[0], cols[i]) for i, name in enumerate(columns) if i > 0]
        return svg_line_plot(series, header_lines=h, title="Two-photon spin evolution",
                             xlabel="t (s)", ylabel="probability / concurrence",
                             vlines=[(qcore.bell_time(args.g), "g t = pi/4")])

    return _render(args, header, columns, rows, plot=plot)


def run_bell(args, argv):
    _require(args, "g")
    _positive(args, "g")
    params = qcore.SystemParams(args.omega0, args.omega1, args.g)
    t = qcore.bell_time(args.g)
    psi = qcore.evolve_analytic(qcore.PM, params, t)
    probs = qcore.measurement_probabilities(psi)
    rows = [["t_bell_s", t]]
    rows += [[f"P{lab}", float(p)] for lab, p in zip(qcore.BASIS_LABELS, probs)]
    rows += [[f"amp{lab}_re", float(a.real)] for lab, a in zip(qcore.BASIS_LABELS, psi)]
    rows += [[f"amp{lab}_im", float(a.imag)] for lab, a in zip(qcore.BASIS_LABELS, psi)]
    rows += [["concurrence", metrics.concurrence_pure(psi)],
             ["bell_fidelity", qcore.bell_fidelity(psi)]]
    header = _header(args, argv, ["initial state |+->, target (|+-> - i|-+>)/sqrt(2)"])
    payload = {k: v for k, v in rows}
    return _render(args, header, ["quantity", "value"], rows, payload=payload)


def run_discord_decay(args, argv):
    model = _platform(args, args.preset, args.gamma)
    if args.steps < 2:
        raise CliError("--steps must be >= 2")
    if args.grid < 32:
        raise CliError("--grid must be >= 32")
    t_star = model.vanishing_time(args.threshold)
    t_max = args.t_max if args.t_max is not None else 3 * model.vanishing_time()
    if not (math.isfinite(t_max) and t_max > 0):
        raise CliError(f"--t-max must be positive, got {t_max!r}")
    series = decoherence.discord_decay_series(model.gamma, t_max, args.steps, args.grid)
    rows = [[float(a), float(b), float(c), float(d)] for a, b, c, d in series.rows()]
    columns = ["t_s", "z", "discord_bits", "concurrence"]
    header = _header(args, argv, [_provenance(model), f"gamma = {model.gamma:.11e} 1/s",
                                  f"threshold z = {args.threshold:.11e} reached at t = {t_star:.11e} s"])

    def plot(h):
        return svg_line_plot([("discord (bits)", series.t, series.discord),
                              ("concurrence", series.t, series.concurrence),
                              ("purity z", series.t, series.z)],
                             header_lines=h, title=f"Discord decay: {model.name}",
                             xlabel="t (s)", ylabel="bits / dimensionless",
                             vlines=[(t_star, f"z = {args.threshold:.3g}")])

    return _render(args, header, columns, rows, plot=plot)


def run_platforms(args, argv):
    names = args.platform or list(decoherence.DEFAULT_PLATFORMS)
    if args.gamma is not None and len(names) != 1:
        raise CliError("--gamma needs exactly one --platform")
    models = [_platform(args, n, args.gamma) for n in names]
    try:
        times = [m.vanishing_time(args.threshold) for m in models]
    except ValueError as exc:
        raise CliError(str(exc)) from None
    order = sorted(range(len(models)), key=lambda i: (-times[i], models[i].name))
    rows = [[models[i].name, models[i].gamma, models[i].coherence_time, times[i], models[i].annotation]
            for i in order]
    columns = ["platform", "gamma_per_s", "coherence_time_s", "vanishing_time_s", "annotation"]
    header = _header(args, argv, [_provenance(m) for m in models]
                     + [f"vanishing threshold z = {args.threshold:.11e}"])
    payload = {"platforms": [dict(zip(columns, r), derived=models[i].derived)
                             for r, i in zip(rows, order)]}
    return _render(args, header, columns, rows, payload=payload)


def run_fit_g(args, argv):
    pmap, prof = _profile_from_args(args)
    g = gprofile.g_profile(prof, args.g_peak)
    fit = gprofile.fit_gaussian(g)
    cx, cy = gprofile.centroid(pmap)
    unit = "rad/s" if args.g_peak is not None else "peak-unit"
    header = _header(args, argv, [f"input {args.input}: {len(pmap)} samples",
                                  f"centroid = ({cx:.11e}, {cy:.11e}) m", f"g units: {unit}"])
    rows = [[float(r), float(m), float(s), int(n)] for r, m, s, n in zip(g.r, g.mean, g.std, g.count)]
    payload = {"fit": fit.as_dict(), "centroid": [cx, cy], "units": unit}

    def plot(h):
        rr = np.linspace(0.0, float(g.r.max()), 200)
        return svg_line_plot([("g(r)", g.r, g.mean), ("Gaussian fit", rr, fit(rr))], header_lines=h,
                             title="Radially averaged coupling profile", xlabel="r (m)", ylabel=f"g ({unit})")

    return _render(args, header, ["r", "mean", "std", "count"], rows, payload=payload, plot=plot)


def run_concurrence_stats(args, argv):
    pmap, prof = _profile_from_args(args)
    g = gprofile.g_profile(prof, args.g_peak)
    try:
        stats = gprofile.concurrence_statistics(g, args.aperture_r, args.weighting)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    header = _header(args, argv, [f"input {args.input}: {len(pmap)} samples",
                                  f"convention: {stats.convention}"])
    columns = ["mean", "std", "bins", "t_bell_s", "weighting"]
    rows = [[stats.mean, stats.std, stats.bins, stats.t_bell, stats.weighting]]
    payload = dict(zip(columns, rows[0]), convention=stats.convention,
                   per_bin={"r": g.r, "g": g.mean, "concurrence": gprofile.bin_concurrence(g)})
    return _render(args, header, columns, rows, payload=payload)


def run_compare_materials(args, argv):
    if not args.input or len(args.input) < 2:
        raise CliError("compare-materials needs at least two --input NAME=PATH")
    power = {}
    for item in args.input:
        name, sep, path = item.partition("=")
        if not sep or not name:
            raise CliError(f"--input expects NAME=PATH, got {item!r}")
        if name in power:
            raise CliError(f"duplicate material {name!r}")
        pmap = _load_map(path)
        power[name] = gprofile.radial_average(pmap, bin_width=args.bin_width, max_radius=args.max_radius)
    # one proportionality constant for all materials, so peaks stay comparable
    strongest = max(math.sqrt(float(p.mean.max())) for p in power.values())
    profiles = {name: gprofile.g_profile(p, math.sqrt(float(p.mean.max())) / strongest)
                for name, p in power.items()}
    report = gprofile.compare_materials(profiles)
    header = _header(args, argv, ["g = sqrt(P) scaled so the strongest material peaks at 1"])
    if args.format == "csv":
        text = report.to_csv()
        return "".join(f"# {h}\n" for h in header) + text
    payload = {"by_peak": report.by_peak, "by_residual": report.by_residual,
               "materials": [{"name": m.name, "peak_g": m.peak, "width_s": m.width,
                              "rms_residual": m.rms_residual, "relative_residual": m.relative_residual,
                              "fit": m.fit.as_dict()} for m in report.materials]}
    if args.format == "json":
        return json_text(header, payload)
    series = [(m.name, profiles[m.name].r, profiles[m.name].mean) for m in report.materials]
    return svg_line_plot(series, header_lines=header, title="g(r) by material", xlabel="r (m)",
                         ylabel="g (peak-unit)")


def run_fixture(args, argv):
    if args.format != "csv":
        raise CliError("fixture maps are written as CSV only")
    if args.n < 4:
        raise CliError("--n must be >= 4")
    _positive(args, "extent", "width", "amplitude")
    pmap = gprofile.synthetic_gaussian_map(args.n, args.extent, args.width, args.amplitude, args.offset,
                                           (args.center_x, args.center_y), args.noise, args.seed)
    header = "".join(f"# {h}\n" for h in _header(args, argv))
    return header + gprofile.format_power_map(pmap)


_RUNNERS = {
    "evolve": run_evolve, "bell": run_bell, "discord-decay": run_discord_decay,
    "platforms": run_platforms, "fit-g": run_fit_g, "concurrence-stats": run_concurrence_stats,
    "compare-materials": run_compare_materials, "fixture": run_fixture,
}


def _apply_config(parser, argv):
    """Reparse with ``--config`` values as option defaults; dotted keys are preset overrides."""
    args = parser.parse_args(argv)
    config = {}
    if args.command and getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                config = decoherence.parse_key_values(fh.read(), args.config)
        except OSError as exc:
            raise CliError(f"cannot read config: {exc}") from None
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        dests = {a.dest: a for a in subparser._actions}
        defaults = {}
        for key, value in config.items():
            if "." in key:
                continue
            dest = key.replace("-", "_")
            action = dests.get(dest)
            if action is None or dest in ("config", "out", "help"):
                raise CliError(f"config key {key!r} is not an option of {args.command}")
            if isinstance(action, argparse._StoreTrueAction):
                defaults[dest] = value.lower() in ("1", "true", "yes", "on")
            elif isinstance(action, argparse._AppendAction):
                defaults[dest] = [v.strip() for v in value.split(",") if v.strip()]
            else:
                try:
                    defaults[dest] = action.type(value) if action.type else value
                except ValueError:
                    raise CliError(f"config key {key!r}: invalid value {value!r}") from None
        subparser.set_defaults(**defaults)
        args = parser.parse_args(argv)
    args.config_values = config
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = None
    try:
        args = _apply_config(parser, argv)
        if not args.command:
            parser.print_help(sys.stderr)
            return 2
        text = _RUNNERS[args.command](args, argv)
        _emit(args, text)
    except (CliError, ValueError, gprofile.FitError, ArithmeticError) as exc:
        print(f"metaspin {getattr(args, 'command', '')}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
