"""Command-line front end.

Subcommands: bem-region, bem-sim, gauss-bounds, gap-sweep, lattice-check,
scheme-sim, report.  Exit codes: 0 success, 1 validation/usage error
(malformed config errors name the JSON pointer of the offending field),
2 audited-identity failure (e.g. a bound identity or gap budget breach),
so sweeps can be scripted as falsification harnesses.

Primary outputs (JSON/CSV/figures) are bitwise reproducible for identical
argv and seed, for any DIRTYMAC_THREADS value; every artifact embeds its
run manifest.  Wall-clock duration goes to stderr only, keeping artifacts
byte-stable.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__, bitlevel, gaussian, lattices, scheme
from .channel import load_config, to_bit_levels
from .errors import ConfigError, InfeasibleRate, InvariantViolation
from .regions import region_vertices

SUBCOMMANDS = ("bem-region", "bem-sim", "gauss-bounds", "gap-sweep",
               "lattice-check", "scheme-sim", "report")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt(x) -> str:
    """CSV cell: 12 significant digits, '.' decimal, blank for missing."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".12g")


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv_text(manifest: dict, header: list[str], rows) -> str:
    lines = ["# manifest " + json.dumps(manifest, sort_keys=True)]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _manifest(subcommand: str, g=None, seed=None, trials=None,
              outputs=(), extra=None) -> dict:
    man = {"subcommand": subcommand, "version": __version__,
           "outputs": list(outputs)}
    if g is not None:
        man["config"] = {"K": g.K, "powers": list(g.powers),
                         "interference": list(g.interference),
                         "noise": g.noise,
                         "input_order": list(g.permutation)}
    if seed is not None:
        man["seed"] = seed
    if trials is not None:
        man["trials"] = trials
    if extra:
        man.update(extra)
    return man


def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError:
        raise _UsageError(f"{what} must be a comma-separated integer list")


def _parse_db_range(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise _UsageError("--db-range must look like start:stop:step")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise _UsageError("--db-range must contain numbers")
    if step <= 0 or stop < start:
        raise _UsageError("--db-range needs step > 0 and stop >= start")
    vals, v = [], start
    while v <= stop + 1e-9:
        vals.append(round(v, 9))
        v += step
    return vals


def _parse_alpha_overrides(items) -> dict[int, float]:
    overrides = {}
    for item in items or []:
        try:
            k, v = item.split(":")
            overrides[int(k)] = float(v)
        except ValueError:
            raise _UsageError("--alpha-override entries must look like k:value")
    return overrides


def build_parser() -> _Parser:
    parser = _Parser(prog="dirtymac", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand")

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="JSON channel config")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("bem-region", help="bit-level capacity region")
    common(p)
    p.add_argument("--vertices", action="store_true", help="include vertices")
    p.add_argument("--plot", default=None, help="render the region (K=2) to PNG")

    p = sub.add_parser("bem-sim", help="zero-error bit-level roundtrip")
    common(p)
    p.add_argument("--rates", required=True, help="comma-separated integer rates")
    p.add_argument("--trials", type=int, default=1000)

    p = sub.add_parser("gauss-bounds", help="Gaussian bounds and gap certificate")
    common(p)
    p.add_argument("--outer-variant", choices=gaussian.VARIANTS,
                   default="consistent")

    p = sub.add_parser("gap-sweep", help="gap certificate over a dB grid")
    common(p, config=False)
    p.add_argument("--k-values", default="2,3,4")
    p.add_argument("--db-range", default="0:60:10")
    p.add_argument("--outer-variant", choices=gaussian.VARIANTS,
                   default="consistent")
    p.add_argument("--plot", default=None, help="render gap profiles to PNG")

    p = sub.add_parser("lattice-check", help="lattice sanity statistics")
    common(p, config=False)
    p.add_argument("--family", choices=("scalar", "cubic", "hex"), required=True)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--trials", type=int, default=100_000)

    p = sub.add_parser("scheme-sim", help="layered modulo-lattice Monte Carlo")
    common(p)
    p.add_argument("--family", choices=("scalar", "cubic", "hex"), default="scalar")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--alpha-override", action="append", metavar="K:V")
    p.add_argument("--mi", action="store_true", help="estimate per-layer MI")
    p.add_argument("--csv", default=None, help="append-style per-layer CSV path")
    p.add_argument("--plot", default=None, help="render layer statistics to PNG")

    p = sub.add_parser("report", help="bounds + simulation bundle with figures")
    common(p, config=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--trials", type=int, default=200_000)
    return parser


def cmd_bem_region(args) -> int:
    g = load_config(args.config)
    p = to_bit_levels(g)
    region = bitlevel.capacity_region(p)
    outputs = [x for x in (args.out, args.plot) if x]
    manifest = _manifest("bem-region", g, outputs=outputs)
    verts = region_vertices(region) if (args.vertices or args.format == "csv"
                                        or args.plot) else None
    if args.plot:
        from . import plots
        if region.K != 2:
            raise ValueError("--plot supports two-user regions only")
        plots.save_region_figure([("capacity", region)], args.plot)
    if args.format == "csv":
        header = [f"r_{i + 1}" for i in range(region.K)]
        _emit(_csv_text(manifest, header, verts), args.out)
        return 0
    payload = {"manifest": manifest, "K": p.K,
               "signal_depths": list(p.signal_depths),
               "interference_depths": list(p.interference_depths),
               "word_size": p.word_size,
               "suffix_bounds": list(region.bounds)}
    if verts is not None and args.vertices:
        payload["vertices"] = [list(v) for v in verts]
    _emit(_dump_json(payload), args.out)
    return 0


def cmd_bem_sim(args) -> int:
    g = load_config(args.config)
    p = to_bit_levels(g)
    rates = _parse_int_list(args.rates, "--rates")
    errors = bitlevel.roundtrip_errors(p, rates, args.trials, args.seed)
    manifest = _manifest("bem-sim", g, seed=args.seed, trials=args.trials,
                         outputs=[x for x in (args.out,) if x])
    payload = {"manifest": manifest, "rates": rates,
               "trials": args.trials, "errors": errors}
    _emit(_dump_json(payload), args.out)
    return 0


def cmd_gauss_bounds(args) -> int:
    g = load_config(args.config)
    cert = gaussian.gap_certificate(g, args.outer_variant)
    manifest = _manifest("gauss-bounds", g,
                         outputs=[x for x in (args.out,) if x],
                         extra={"outer_variant": args.outer_variant})
    if args.format == "csv":
        header = ["k", "inner", "outer", "gap", "gap_bound"]
        rows = [(k + 1, cert.inner[k], cert.outer[k], cert.gaps[k],
                 cert.gap_bounds[k]) for k in range(cert.K)]
        _emit(_csv_text(manifest, header, rows), args.out)
        return 0
    payload = {"manifest": manifest, "inner": list(cert.inner),
               "outer": list(cert.outer), "gaps": list(cert.gaps),
               "certificate": cert.to_dict()}
    _emit(_dump_json(payload), args.out)
    return 0


def _sweep_rows(block):
    """CSV rows for one sweep block: one row per (grid point, k)."""
    rows, K = [], block.K
    # running max over zeta-xi columns k..K-1 gives the per-row max for suffix k
    suffix_max = block.zeta_minus_xi.copy()
    for c in range(K - 2, -1, -1):
        suffix_max[:, c] = np.maximum(suffix_max[:, c], suffix_max[:, c + 1])
    for r in range(block.gaps.shape[0]):
        for k in range(1, K + 1):
            zx = suffix_max[r, k] if k < K else None
            rows.append([K, k, *block.snr_db[r], *block.inr_db[r],
                         block.inner[r, k - 1], block.outer[r, k - 1],
                         block.gaps[r, k - 1], block.gap_bounds[k - 1], zx])
    return rows


def cmd_gap_sweep(args) -> int:
    k_values = _parse_int_list(args.k_values, "--k-values")
    db_values = _parse_db_range(args.db_range)
    result = gaussian.sweep(k_values, db_values, args.outer_variant)
    outputs = [x for x in (args.out, args.plot) if x]
    manifest = _manifest("gap-sweep", outputs=outputs,
                         extra={"k_values": sorted(set(k_values)),
                                "db_values": db_values,
                                "outer_variant": args.outer_variant})
    if args.out:
        kmax = max(b.K for b in result.blocks)
        header = (["K", "k"] + [f"snr_{i + 1}_db" for i in range(kmax)]
                  + [f"inr_{i + 1}_db" for i in range(kmax)]
                  + ["inner_k", "outer_k", "gap_k", "bound_k", "zeta_xi_max"])
        rows = []
        for block in result.blocks:
            pad = [None] * (kmax - block.K)
            for row in _sweep_rows(block):
                snr = row[2:2 + block.K] + pad
                inr = row[2 + block.K:2 + 2 * block.K] + pad
                rows.append(row[:2] + snr + inr + row[2 + 2 * block.K:])
        _emit(_csv_text(manifest, header, rows), args.out)
    if args.plot:
        from . import plots
        plots.save_sweep_figure(result.blocks, args.plot)
    violations = (result.summary["gap_sign_violations"]
                  + result.summary["gap_bound_violations"]
                  + result.summary["per_term_violations"])
    payload = {"manifest": manifest, "summary": result.summary}
    sys.stdout.write(_dump_json(payload))
    if violations:
        raise InvariantViolation(f"{violations} sweep violations; see summary")
    return 0


def cmd_lattice_check(args) -> int:
    lat = lattices.make_lattice(args.family, args.dim)
    sigma2_mc = lattices.second_moment_estimate(lat, args.trials, args.seed)
    violations, max_err = lattices.distributive_check(lat, args.trials, args.seed)
    manifest = _manifest("lattice-check", seed=args.seed, trials=args.trials,
                         outputs=[x for x in (args.out,) if x],
                         extra={"family": args.family, "dim": lat.dim})
    payload = {"manifest": manifest,
               "sigma2_analytic": lat.sigma2,
               "sigma2_mc": sigma2_mc,
               "G": lat.nsm,
               "nsm_floor": lattices.NSM_FLOOR,
               "distributive_violations": violations,
               "distributive_max_err": max_err}
    _emit(_dump_json(payload), args.out)
    return 0


def _scheme_csv_rows(report):
    rows = []
    for ls in report.layers:
        rows.append([ls.layer, ls.theta, ls.n_eff, ls.alpha, ls.var_pred,
                     ls.var_meas, ls.ks_stat, ls.max_abs_corr, ls.rate_cap,
                     ls.mi_est])
    return rows


def cmd_scheme_sim(args) -> int:
    g = load_config(args.config)
    overrides = _parse_alpha_overrides(args.alpha_override)
    report = scheme.simulate_scheme(g, family=args.family, dim=args.dim,
                                    trials=args.trials, seed=args.seed,
                                    alpha_overrides=overrides or None,
                                    estimate_mi=args.mi)
    outputs = [x for x in (args.out, args.csv, args.plot) if x]
    manifest = _manifest("scheme-sim", g, seed=args.seed, trials=args.trials,
                         outputs=outputs,
                         extra={"family": args.family,
                                "alpha_overrides": {str(k): v for k, v
                                                    in overrides.items()}})
    if args.csv:
        header = ["k", "theta", "n_eff", "alpha", "var_pred", "var_meas",
                  "ks_stat", "max_corr", "rate_cap", "mi_est"]
        _emit(_csv_text(manifest, header, _scheme_csv_rows(report)), args.csv)
    if args.plot:
        from . import plots
        plots.save_scheme_figure(report, args.plot)
    payload = {"manifest": manifest, "report": report.to_dict()}
    _emit(_dump_json(payload), args.out)
    return 0


def cmd_report(args) -> int:
    import os

    from . import plots

    g = load_config(args.config)
    os.makedirs(args.out_dir, exist_ok=True)
    paths = {name: os.path.join(args.out_dir, name) for name in
             ("bounds.json", "region_vertices.csv", "region.png",
              "scheme_layers.csv", "scheme.png", "caps.png")}
    p = to_bit_levels(g)
    region = bitlevel.capacity_region(p)
    cert = gaussian.gap_certificate(g)
    manifest = _manifest("report", g, seed=args.seed, trials=args.trials,
                         outputs=sorted(paths.values()))
    bounds_payload = {"manifest": manifest,
                      "bitlevel_suffix_bounds": list(region.bounds),
                      "gauss": cert.to_dict()}
    _emit(_dump_json(bounds_payload), paths["bounds.json"])
    verts = region_vertices(region)
    _emit(_csv_text(manifest, [f"r_{i + 1}" for i in range(region.K)], verts),
          paths["region_vertices.csv"])
    made = [paths["bounds.json"], paths["region_vertices.csv"]]
    if region.K == 2:
        plots.save_region_figure(
            [("bit-level capacity", region),
             ("gauss inner", gaussian.inner_bound(g)),
             ("gauss outer", gaussian.outer_bound(g))], paths["region.png"])
        made.append(paths["region.png"])
    report = scheme.simulate_scheme(g, trials=args.trials, seed=args.seed)
    _emit(_csv_text(manifest,
                    ["k", "theta", "n_eff", "alpha", "var_pred", "var_meas",
                     "ks_stat", "max_corr", "rate_cap", "mi_est"],
                    _scheme_csv_rows(report)), paths["scheme_layers.csv"])
    plots.save_scheme_figure(report, paths["scheme.png"])
    configs = scheme.build_layer_configs(g)
    plots.save_caps_figure(configs, list(gaussian.inner_bound(g).bounds),
                           paths["caps.png"])
    made.extend([paths["scheme_layers.csv"], paths["scheme.png"],
                 paths["caps.png"]])
    sys.stdout.write(_dump_json({"manifest": manifest, "artifacts": sorted(made)}))
    return 0


_HANDLERS = {
    "bem-region": cmd_bem_region,
    "bem-sim": cmd_bem_sim,
    "gauss-bounds": cmd_gauss_bounds,
    "gap-sweep": cmd_gap_sweep,
    "lattice-check": cmd_lattice_check,
    "scheme-sim": cmd_scheme_sim,
    "report": cmd_report,
}


def run(argv) -> int:
    """Dispatch one CLI invocation; returns the process exit code."""
    parser = build_parser()
    started = time.monotonic()
    try:
        args = parser.parse_args(argv)
        if args.subcommand is None:
            raise _UsageError(f"choose a subcommand: {', '.join(SUBCOMMANDS)}")
        code = _HANDLERS[args.subcommand](args)
    except SystemExit as exc:  # argparse --help / --version
        return 0 if exc.code in (0, None) else 1
    except _UsageError as exc:
        print(f"dirtymac: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"dirtymac: invariant violation: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, InfeasibleRate, ValueError, OSError) as exc:
        print(f"dirtymac: {exc}", file=sys.stderr)
        return 1
    print(f"# completed in {time.monotonic() - started:.2f}s", file=sys.stderr)
    return code


def main(argv=None) -> None:
    sys.exit(run(sys.argv[1:] if argv is None else argv))
