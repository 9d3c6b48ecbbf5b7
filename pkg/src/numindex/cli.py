"""Command-line front end.

    numindex nu         --space FILE --op FILE     radius of an operator
    numindex opnorm     --space FILE --op FILE     operator norm
    numindex n1         --space FILE --op FILE --m M   compressed radius
    numindex wseq       --space FILE --op FILE --m M --jmax J
    numindex index      --space FILE               index estimate (CSV)
    numindex limit-scan --space FILE --m M         level scan (CSV)
    numindex verify     --space FILE [--samples N] property suite

Common options: --budget INT (outer restarts), --seed INT, --tol FLOAT,
--out FILE.  Exit codes: 0 success, 1 property failure, 2 input error.
Reports carry the full configuration and no timestamps, so rerunning with
the same seed reproduces them byte for byte; timings go to stderr.

``NUMINDEX_THREADS`` caps the numba thread pool (the kernels themselves run
single-threaded, so this only affects numba's internal pools);
``NUMINDEX_BACKEND`` picks numba or the numpy fallback.
"""

import argparse
import csv
import io
import json
import os
import sys

from . import _kernels
from .errors import NumindexError
from .index import estimate_index, limit_scan
from .operators import Budget, load_operator, operator_norm
from .radius import (
    modified_radius,
    numerical_radius,
    projection_radius_sequence,
)
from .spaces import load_spec
from .verify import VerifyConfig, run_suite, suite_passed

RADIUS_BUDGET_DEFAULT = 64
INDEX_BUDGET_DEFAULT = 8

TOLERANCE_NOTE = (
    "tolerance ladder: --tol sets the inner optimizer target (default 1e-8; "
    "step floor is 10x tol); equality assertions in the verify suite use "
    "1e-5 at dimensions <= 8; limit-scan convergence flags use 0.03"
)


def _add_common(p, budget_default):
    p.add_argument("--space", required=True, help="space spec JSON file")
    p.add_argument("--budget", type=int, default=budget_default,
                   help="random multistarts (default %d)" % budget_default)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", default=None, help="write the report here as well")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="numindex",
        description=__doc__,
        epilog=TOLERANCE_NOTE,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nu", help="numerical radius of an operator")
    _add_common(p, RADIUS_BUDGET_DEFAULT)
    p.add_argument("--op", required=True, help="operator JSON file")

    p = sub.add_parser("opnorm", help="operator norm")
    _add_common(p, RADIUS_BUDGET_DEFAULT)
    p.add_argument("--op", required=True)

    p = sub.add_parser("n1", help="compressed radius over ambient states")
    _add_common(p, RADIUS_BUDGET_DEFAULT)
    p.add_argument("--op", required=True)
    p.add_argument("--m", type=int, required=True,
                   help="tower level the operator lives on")

    p = sub.add_parser("wseq", help="projected-radius sequence")
    _add_common(p, RADIUS_BUDGET_DEFAULT)
    p.add_argument("--op", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--jmax", type=int, required=True)

    p = sub.add_parser("index", help="numerical-index estimate")
    _add_common(p, INDEX_BUDGET_DEFAULT)

    p = sub.add_parser("limit-scan", help="index estimates level by level")
    _add_common(p, INDEX_BUDGET_DEFAULT)
    p.add_argument("--m", type=int, required=True, help="scan levels 1..m")

    p = sub.add_parser("verify", help="run the property suite")
    _add_common(p, 16)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--inject-fault", choices=["none", "wrong-exponent"],
                   default="none",
                   help="negative control: corrupt the duality exponents")
    return ap


def _apply_thread_cap():
    cap = os.environ.get("NUMINDEX_THREADS")
    if cap and _kernels.NUMBA_ENABLED:
        import numba

        n = max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS))
        numba.set_num_threads(n)


def _budget(args) -> Budget:
    return Budget(restarts=args.budget, iterations=5000, tol=args.tol,
                  seed=args.seed)


def _config_echo(args) -> dict:
    # everything needed to re-run the computation; output paths excluded
    keys = ("space", "op", "m", "jmax", "budget", "seed", "tol",
            "samples", "inject_fault")
    return {k: getattr(args, k) for k in keys if hasattr(args, k)}


def _emit(text: str, out_path):
    sys.stdout.write(text)
    if not text.endswith("\n"):
        sys.stdout.write("\n")
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")


def _json_report(payload: dict, args) -> str:
    payload = dict(payload)
    payload["config"] = _config_echo(args)
    return json.dumps(payload, sort_keys=True, indent=2)


def cmd_nu(args) -> int:
    spec = load_spec(args.space)
    op = load_operator(args.op, spec)
    est = numerical_radius(op, _budget(args))
    report = {"command": "nu", "space": spec.to_dict(), "value": est.value}
    report.update(est.to_dict())
    _emit(_json_report(report, args), args.out)
    return 0


def cmd_opnorm(args) -> int:
    spec = load_spec(args.space)
    op = load_operator(args.op, spec)
    est = operator_norm(op, _budget(args))
    report = {"command": "opnorm", "space": spec.to_dict()}
    report.update(est.to_dict())
    _emit(_json_report(report, args), args.out)
    return 0


def cmd_n1(args) -> int:
    ambient = load_spec(args.space)
    sub = ambient.truncate(args.m)
    op = load_operator(args.op, sub)
    est = modified_radius(op, ambient, _budget(args))
    report = {"command": "n1", "space": ambient.to_dict(),
              "operator_level": args.m}
    report.update(est.to_dict())
    _emit(_json_report(report, args), args.out)
    return 0


def cmd_wseq(args) -> int:
    ambient = load_spec(args.space)
    sub = ambient.truncate(args.m)
    op = load_operator(args.op, sub)
    seq = projection_radius_sequence(op, ambient, args.jmax, _budget(args))
    report = {
        "command": "wseq",
        "space": ambient.to_dict(),
        "operator_level": args.m,
        "j_max": args.jmax,
        "values": [e.value for e in seq],
        "terms": [e.to_dict() for e in seq],
    }
    _emit(_json_report(report, args), args.out)
    return 0


def _index_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "n_hat", "n1_hat", "witness_file", "restarts", "seed",
                "flag"])
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _witness_path(out, tag):
    if not out:
        return ""
    base, ext = os.path.splitext(out)
    return "%s_witness_%s.json" % (base, tag)


def cmd_index(args) -> int:
    spec = load_spec(args.space)
    budget = Budget(restarts=args.budget, iterations=3000, tol=args.tol,
                    seed=args.seed)
    est = estimate_index(spec, budget, seed=args.seed)
    wpath = _witness_path(args.out, "m%d" % spec.depth)
    if wpath:
        with open(wpath, "w") as fh:
            json.dump(est.witness.to_dict(), fh, sort_keys=True)
            fh.write("\n")
    flag = "noisy" if est.noisy else "ok"
    text = _index_csv([[spec.depth, "%.12g" % est.value, "",
                        os.path.basename(wpath) if wpath else "",
                        est.restarts, args.seed, flag]])
    _emit(text, args.out)
    return 0


def cmd_limit_scan(args) -> int:
    spec = load_spec(args.space)
    if args.m < 1:
        raise NumindexError("empty level range: --m must be >= 1")
    budget = Budget(restarts=args.budget, iterations=2000, tol=args.tol,
                    seed=args.seed)
    table = limit_scan(spec, range(1, args.m + 1), budget, seed=args.seed)
    paths = {}
    for r in table.rows:
        wpath = _witness_path(args.out, "m%d" % r.m)
        if wpath:
            with open(wpath, "w") as fh:
                json.dump(r.index.witness.to_dict(), fh, sort_keys=True)
                fh.write("\n")
        paths[r.m] = os.path.basename(wpath) if wpath else ""
    _emit(table.to_csv(paths), args.out)
    for r in table.rows:
        sys.stderr.write("level %d: index %.6g, modified %.6g [%s]\n"
                         % (r.m, r.index.value, r.modified.value, r.flag_text))
    sys.stderr.write("convergence: %s\n"
                     % ("all flags pass" if table.passed else "FLAGGED"))
    return 0


def cmd_verify(args) -> int:
    spec = load_spec(args.space)
    if args.samples < 0:
        raise NumindexError("--samples must be >= 0")
    budget = Budget(restarts=args.budget, iterations=2500, tol=args.tol,
                    seed=args.seed)
    cfg = VerifyConfig(spec=spec, samples=args.samples, budget=budget,
                       seed=args.seed, fault=args.inject_fault)
    results = run_suite(cfg)
    lines = ["verify %s samples=%d seed=%d fault=%s"
             % (spec.describe(), args.samples, args.seed, args.inject_fault)]
    lines += [r.line() for r in results]
    ok = suite_passed(results)
    lines.append("suite: %s" % ("PASS" if ok else "FAIL"))
    if not ok:
        lines.append("reproduce with: --seed %d" % args.seed)
    _emit("\n".join(lines) + "\n", args.out)
    for r in results:
        sys.stderr.write(r.line(with_time=True) + "\n")
    return 0 if ok else 1


COMMANDS = {
    "nu": cmd_nu,
    "opnorm": cmd_opnorm,
    "n1": cmd_n1,
    "wseq": cmd_wseq,
    "index": cmd_index,
    "limit-scan": cmd_limit_scan,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize other codes
        return 2 if exc.code not in (0,) else 0
    try:
        _apply_thread_cap()
        return COMMANDS[args.command](args)
    except NumindexError as exc:
        sys.stderr.write("input error: %s\n" % exc)
        return 2
    except FileNotFoundError as exc:
        sys.stderr.write("input error: %s\n" % exc)
        return 2
    except json.JSONDecodeError as exc:
        sys.stderr.write("input error: invalid JSON: %s\n" % exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
