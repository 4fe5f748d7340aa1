"""Command-line front end: ``sgcs-order {check-order,simulate,scenario,list-scenarios}``.

Exit codes
    0  success (ordering holds on the grid / scenario claims all pass)
    1  malformed configuration, unknown scenario or invalid parameters
    2  ordering violated at a probe, or a scenario claim failed
    3  ordering check inconclusive
    4  divergent interference tail (truncation impossible)

Every flag can also be set through an environment variable named
``SGCS_ORDER_<FLAG>`` (e.g. ``SGCS_ORDER_SEED``); command-line flags win.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from . import config as cfgmod
from .densities import PowerLawLoss, fading_transform, pathloss_transform
from .exceptions import DivergenceError, ScenarioParameterError, SgcsError, UnknownScenarioError
from .montecarlo import SURVIVAL_GRID_POINTS, sample_ci, survival_table
from .ordering import Status, check_monotone_diff, check_theorem1
from .scenarios import SCENARIOS, list_scenarios, resolve_params, run_scenario

ENV_PREFIX = "SGCS_ORDER_"
EXIT_OK, EXIT_CONFIG, EXIT_VIOLATED, EXIT_INCONCLUSIVE, EXIT_DIVERGENT = 0, 1, 2, 3, 4

log = logging.getLogger("sgcs_order")


def _env(name, cast=str):
    raw = os.environ.get(ENV_PREFIX + name.upper())
    if raw is None or raw == "":
        return None
    try:
        return cast(raw)
    except ValueError:
        raise cfgmod.ConfigError(f"${ENV_PREFIX}{name.upper()}", f"cannot parse {raw!r}") from None


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise ValueError("must be >= 1")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--seed", type=_u64, help="master seed (unsigned 64-bit)")
    common.add_argument("--samples", type=_positive_int, help="Monte Carlo sample count")
    common.add_argument("--threads", type=_positive_int, help="worker threads (default: all cores)")
    common.add_argument("--out", help="output directory (default: current directory)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(
        prog="sgcs-order", description="C/I stochastic ordering in shotgun cellular systems"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check-order", parents=[common], help="grid check of the ordering condition for two densities")
    sub.add_parser("simulate", parents=[common], help="sample C/I for one density and write CSV tables")
    sc = sub.add_parser(
        "scenario",
        parents=[common],
        help="run a canned experiment; extra --key value pairs override its parameters",
    )
    sc.add_argument("name")
    sub.add_parser("list-scenarios", help="print the available scenarios")
    return parser


def _parse_overrides(extra):
    """``--key value`` pairs (or ``--key=value``) into a parameter dict."""
    params = {}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--") or tok == "--":
            raise ScenarioParameterError(f"unexpected argument {tok!r}")
        key, sep, value = tok[2:].partition("=")
        if not sep:
            value = next(it, None)
            if value is None:
                raise ScenarioParameterError(f"missing value for --{key}")
        params[key.replace("-", "_")] = value
    return params


def _resolve_settings(args):
    """Merge config file, environment and flags into a resolved config."""
    path = args.config or _env("config")
    doc = cfgmod.load_file(path) if path else {}
    sim = dict(doc.get("simulation", {}))
    seed = args.seed if args.seed is not None else _env("seed", _u64)
    samples = args.samples if args.samples is not None else _env("samples", _positive_int)
    if seed is not None:
        sim["seed"] = seed
    if samples is not None:
        sim["n_samples"] = samples
    if sim:
        doc = {**doc, "simulation": sim}
    resolved = cfgmod.resolve(doc)
    out = args.out or _env("out") or resolved.get("output", {}).get("dir") or "."
    threads = args.threads or _env("threads", _positive_int) or os.cpu_count() or 1
    return resolved, Path(out), threads


def _header(resolved):
    seed = resolved["simulation"]["seed"]
    return f"# sgcs-order v{__version__} seed={seed} config-hash={cfgmod.config_hash(resolved)}"


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_survival(path, header, y, s):
    lines = [header] + [f"{a:.17g},{b:.17g}" for a, b in zip(y, s)]
    _write(path, "\n".join(lines) + "\n")


def _envelope(resolved, **body):
    return {
        "tool": "sgcs-order",
        "version": __version__,
        "seed": resolved["simulation"]["seed"],
        "config": cfgmod.without_output(resolved),
        "config_hash": cfgmod.config_hash(resolved),
        **body,
    }


def _ordering_inputs(resolved):
    """Densities as seen by a unit-exponent system after path loss and marks."""
    dens = cfgmod.densities_of(resolved)
    loss = cfgmod.build_pathloss(resolved["pathloss"])
    marks = cfgmod.build_marks(resolved["marks"])
    if not marks.is_unit:
        if not isinstance(loss, PowerLawLoss):
            raise cfgmod.ConfigError("config.marks", "marks with a dual-slope path loss are not supported")
        dens = [fading_transform(d, marks, loss.eps) for d in dens]
    if not isinstance(loss, PowerLawLoss):
        dens = [pathloss_transform(d, loss) for d in dens]
    return dens


def cmd_check_order(args):
    resolved, out, _ = _resolve_settings(args)
    if len(resolved.get("densities", [])) != 2:
        raise cfgmod.ConfigError("config.densities", "check-order needs exactly two densities")
    lam1, lam2 = _ordering_inputs(resolved)
    grid = cfgmod.probe_grid(resolved)
    fwd = check_theorem1(lam1, lam2, grid)
    rev = check_theorem1(lam2, lam1, grid)
    mono = check_monotone_diff(lam1, lam2, grid)
    if fwd.holds:
        direction = "density 1 =st density 2" if rev.holds else "density 1 <=st density 2"
    else:
        direction = None
    report = _envelope(
        resolved,
        command="check-order",
        status=fwd.status.value,
        direction=direction,
        theorem1=fwd.to_dict(),
        theorem1_reverse=rev.to_dict(),
        monotone_diff=mono.to_dict(),
    )
    _write(out / "resolved_config.json", cfgmod.dumps(cfgmod.without_output(resolved)))
    _write(out / "report.json", cfgmod.dumps(report))
    print(f"theorem1: {fwd.status.value}" + (f" ({direction})" if direction else ""))
    if fwd.status is Status.VIOLATED:
        print(f"witness: {fwd.witness}")
        return EXIT_VIOLATED
    if fwd.status is Status.INCONCLUSIVE:
        print(f"reason: {fwd.reason}")
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_simulate(args):
    resolved, out, threads = _resolve_settings(args)
    if len(resolved.get("densities", [])) != 1:
        raise cfgmod.ConfigError("config.densities", "simulate needs exactly one density")
    (d,) = cfgmod.densities_of(resolved)
    sim = cfgmod.sim_config(resolved)
    start = time.perf_counter()
    samples = sample_ci(d, sim, workers=threads)
    log.info("simulated %d samples in %.2fs", samples.count, time.perf_counter() - start)
    header = _header(resolved)
    y, s = survival_table(samples, SURVIVAL_GRID_POINTS)
    _write(out / "resolved_config.json", cfgmod.dumps(cfgmod.without_output(resolved)))
    _write(out / "samples.csv", header + "\n" + "".join(f"{v:.17g}\n" for v in samples.values))
    _write_survival(out / "survival.csv", header, y, s)
    report = _envelope(
        resolved,
        command="simulate",
        count=samples.count,
        resampled=samples.resampled,
        r_max=samples.r_max,
        fingerprint=samples.fingerprint,
    )
    _write(out / "report.json", cfgmod.dumps(report))
    print(f"wrote {samples.count} samples to {out / 'samples.csv'}")
    return EXIT_OK


def cmd_scenario(args, extra):
    if args.name not in SCENARIOS:
        print(f"unknown scenario {args.name!r}; available: {', '.join(SCENARIOS)}", file=sys.stderr)
        return EXIT_CONFIG
    resolved, out, threads = _resolve_settings(args)
    scen = resolved.get("scenario", {})
    if scen.get("name", args.name) != args.name:
        raise cfgmod.ConfigError("config.scenario.name", f"config is for {scen['name']!r}, not {args.name!r}")
    params = {**scen.get("params", {}), **_parse_overrides(extra)}
    # canonical parameter values go into the resolved config for round trips
    full = resolve_params(args.name, params)
    resolved = {**resolved, "scenario": {"name": args.name, "params": full}}
    report = run_scenario(
        args.name, full, cfgmod.sim_config(resolved), grid=cfgmod.probe_grid(resolved), workers=threads
    )
    for label, secs in report.runtimes.items():
        log.info("%s: %.2fs", label, secs)
    header = _header(resolved)
    body = report.to_dict()
    body.pop("tool")
    body.pop("version")
    body.pop("seed")
    _write(out / "resolved_config.json", cfgmod.dumps(cfgmod.without_output(resolved)))
    _write(out / "report.json", cfgmod.dumps(_envelope(resolved, command="scenario", **body)))
    y = report.survival["y"]
    for label in report.systems:
        _write_survival(out / f"survival_{label}.csv", header, y, report.survival[label])
    for claim in report.claims:
        mark = "PASS" if claim.passed else "FAIL"
        print(f"[{mark}] {claim.statement} (checker={claim.checker_agrees}, monte_carlo={claim.mc_agrees})")
    for note in report.notes:
        print(f"note: {note}")
    return EXIT_OK if report.passed else EXIT_VIOLATED


def cmd_list_scenarios(_args):
    for name, summary in list_scenarios().items():
        print(f"{name:20s} {summary}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    if extra and args.command != "scenario":
        parser.error(f"unrecognized arguments: {' '.join(extra)}")
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "check-order":
            return cmd_check_order(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "scenario":
            return cmd_scenario(args, extra)
        return cmd_list_scenarios(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENT
    except (cfgmod.ConfigError, ScenarioParameterError, UnknownScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SgcsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
