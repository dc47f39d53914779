"""``deftrace`` command line.

Exit status: 0 all checks pass, 2 a check failed (certificate written),
3 configuration error.

Examples::

    deftrace verify-identities --seed 1
    deftrace young --trials 500 --dims 2,3,4,5
    deftrace scan --target phi --grid 0:3:13,-2:2:13 --out results/
    deftrace scan --target upsilon --k-mode psd --grid=-1:2:13,-2:3:11
    deftrace search --p -2 --s -1
"""

import argparse
import json
import os
import sys
from dataclasses import asdict

import numpy as np

from . import _kernels
from .config import RunConfig, Tolerances
from .errors import ConfigError
from .identities import run_identity_suite
from .scanner import ScanConfig, counterexample_search, reverify_certificate, scan_region
from .variational import run_variational_suite
from .young import run_young_suite

EXIT_OK = 0
EXIT_FAIL = 2
EXIT_CONFIG = 3

YOUNG_P_GRID = (-1.0, -0.5, -0.1, 0.1, 0.5, 0.9, 1.1, 1.5, 2.0)

_DEFAULTS = {
    "verify-identities": {"trials": 1000, "dims": (2, 3, 4, 5)},
    "young": {"trials": 500, "dims": (2, 3, 4, 5)},
    "variational": {"trials": 50, "dims": (2, 3)},
    "scan": {"trials": 200, "dims": (2, 3, 4)},
    "search": {"trials": 1, "dims": (2,)},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _dims(text):
    try:
        dims = tuple(int(d) for d in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dims {text!r}") from None
    return dims


def _common(sub):
    sub.add_argument("--seed", type=int, default=0, help="global RNG seed (64-bit)")
    sub.add_argument("--trials", type=int, default=None, help="instances per check/cell")
    sub.add_argument("--dims", type=_dims, default=None, help="comma-separated matrix sizes")
    sub.add_argument("--out", default=None, help="output directory (default $DEFTRACE_OUT or ./deftrace-out)")
    for name in Tolerances.names():
        sub.add_argument(f"--tol.{name}", dest=f"tol_{name}", type=float, default=None,
                         metavar="X", help=f"override tolerance '{name}'")


def build_parser():
    parser = _Parser(prog="deftrace", description=__doc__.split("\n\n")[0])
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _common(subs.add_parser("verify-identities", help="deformed log/exp identities and the forms of phi"))
    _common(subs.add_parser("young", help="tracial Young inequalities"))
    _common(subs.add_parser("variational", help="variational formula and relative-entropy gap"))
    scan = subs.add_parser("scan", help="convexity/concavity region scan")
    _common(scan)
    scan.add_argument("--target", choices=("phi", "upsilon"), default="phi")
    scan.add_argument("--grid", default=None, help="pmin:pmax:points,qmin:qmax:points")
    scan.add_argument("--k-mode", choices=("zero", "psd"), default="zero", help="K for upsilon")
    scan.add_argument("--l-mode", choices=("signed", "zero"), default="signed", help="L for phi")
    scan.add_argument("--workers", type=int, default=1)
    search = subs.add_parser("search", help="negative-exponent counterexample search")
    _common(search)
    search.add_argument("--p", type=float, default=-2.0)
    search.add_argument("--s", type=float, default=-1.0)
    search.add_argument("--budget", type=int, default=1_000_000)
    search.add_argument("--l-mode", choices=("psd", "zero"), default="psd")
    return parser


def _config(args):
    defaults = _DEFAULTS[args.command]
    overrides = {n: getattr(args, f"tol_{n}") for n in Tolerances.names() if getattr(args, f"tol_{n}") is not None}
    return RunConfig(
        seed=args.seed,
        dims=args.dims or defaults["dims"],
        trials=args.trials if args.trials is not None else defaults["trials"],
        tolerances=Tolerances(**overrides),
        out_dir=args.out,
        grid=getattr(args, "grid", None),
        target=getattr(args, "target", "phi"),
    )


def _write(config, name, text):
    path = os.path.join(config.output_dir, name)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def _plain(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _dump(obj):
    return json.dumps(obj, indent=1, sort_keys=True, default=_plain) + "\n"


def cmd_verify_identities(config):
    report = run_identity_suite(config.trials, config.seed, config.tolerances, config.dims)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: trials={c.trials} "
              f"worst={c.worst_error:.3e} tol={c.tolerance:.1e}")
    _write(config, "identities.json", _dump(report.to_dict()))
    if report.passed:
        return EXIT_OK
    failure = report.first_failure()
    _write(config, "identities_failure.json", _dump(failure))
    print(json.dumps(failure, sort_keys=True, default=_plain))
    return EXIT_FAIL


def cmd_young(config):
    report = run_young_suite(config.trials, config.dims, YOUNG_P_GRID, config.seed, config.tolerances.young)
    _write(config, "young.csv", report.to_csv())
    print(f"{'PASS' if report.passed else 'FAIL'} young: {len(report.rows)} rows, "
          f"{len(report.violations)} violations")
    if report.passed:
        return EXIT_OK
    _write(config, "young_failure.json", _dump(report.violations[0]))
    print(json.dumps(report.violations[0], sort_keys=True, default=_plain))
    return EXIT_FAIL


def cmd_variational(config):
    tol = config.tolerances
    report = run_variational_suite(config.trials, config.seed, config.dims,
                                   crossing_tol=tol.variational, equality_tol=tol.equality,
                                   entropy_tol=tol.entropy, entropy_pairs=10 * config.trials)
    _write(config, "variational.csv", report.to_csv())
    print(f"{'PASS' if report.passed else 'FAIL'} variational: {len(report.rows)} optimisations, "
          f"{report.entropy_pairs} entropy pairs, min scaled gap {report.entropy_min_gap:.3e}")
    if report.passed:
        return EXIT_OK
    _write(config, "variational_failure.json", _dump(report.failures[0]))
    print(json.dumps(report.failures[0], sort_keys=True, default=_plain))
    return EXIT_FAIL


def cmd_scan(config, target="phi", k_mode="zero", l_mode="signed", workers=1):
    scfg = ScanConfig(trials=config.trials, dims=tuple(config.dims), rel_tol=config.tolerances.midpoint,
                      k_mode=k_mode, l_mode=l_mode, workers=workers)
    report = scan_region(config.grid_spec(), target, scfg, config.seed)
    stem = f"region_{target}" + (f"_k{k_mode}" if target == "upsilon" else "")
    _write(config, stem + ".csv", report.to_csv())
    _write(config, stem + ".txt", report.to_grid_text())
    _write(config, stem + ".dat", report.to_gnuplot())
    _write(config, stem + ".json", report.to_json() + "\n")
    for i, c in enumerate(report.cells):
        if c.certificate and (c.contradiction or c.verdict in ("neither", "indeterminate")):
            _write(config, os.path.join("certificates", f"{stem}_cell{i:04d}.json"), _dump(c.certificate))
    bad = report.contradictions
    inside = sum(1 for c in report.cells if c.expected)
    print(f"{'PASS' if not bad else 'FAIL'} scan {target}: {len(report.cells)} cells, "
          f"{inside} inside known regions, {len(bad)} contradictions")
    print(report.to_grid_text(), end="")
    if bad:
        print(json.dumps(bad[0].to_dict(), sort_keys=True, default=_plain))
        return EXIT_FAIL
    return EXIT_OK


def cmd_search(config, p=-2.0, s=-1.0, budget=1_000_000, l_mode="psd"):
    tol = config.tolerances
    res = counterexample_search(p, s, budget, config.seed, l_mode=l_mode,
                                threshold=tol.search, reverify_tol=tol.reverify)
    summary = {k: v for k, v in asdict(res).items() if k != "certificate"}
    summary["found"] = res.certificate is not None
    _write(config, "search.json", _dump(summary))
    if res.certificate is None:
        if res.rejected_reverify:
            print(f"FAIL search: {res.rejected_reverify} candidates did not re-verify")
            return EXIT_FAIL
        print(f"PASS search p={p} s={s}: no counterexample in {res.samples} samples")
        return EXIT_OK
    cert = json.loads(json.dumps(res.certificate))
    if not reverify_certificate(cert, tol.reverify):
        print("FAIL search: certificate does not re-verify after serialization")
        return EXIT_FAIL
    _write(config, "search_certificate.json", _dump(cert))
    print(f"PASS search p={p} s={s}: certificate at sample {cert['sample_index']} "
          f"(seed {cert['seed']}), defect {cert['defect']:.6e}")
    return EXIT_OK


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "budget", 1) <= 0 or getattr(args, "workers", 1) <= 0:
            raise ConfigError("budget and workers must be positive")
        config = _config(args)
        if args.command == "scan":
            config.grid_spec()
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"# deftrace {args.command} seed={config.seed} backend={_kernels.BACKEND}")
    if args.command == "verify-identities":
        return cmd_verify_identities(config)
    if args.command == "young":
        return cmd_young(config)
    if args.command == "variational":
        return cmd_variational(config)
    if args.command == "scan":
        return cmd_scan(config, args.target, args.k_mode, args.l_mode, args.workers)
    return cmd_search(config, args.p, args.s, args.budget, args.l_mode)


if __name__ == "__main__":
    sys.exit(main())
