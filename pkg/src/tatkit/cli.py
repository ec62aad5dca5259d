"""Command-line front end.

Subcommands: gen, grad, check, bench, probe.  Machine output (instance
files, matrix text, CSV) goes to stdout or the requested output file; every
diagnostic goes to stderr.  Exit codes: 0 success, 1 validation error,
2 tolerance or numerical failure, 3 I/O error.
"""

import argparse
import csv
import io
import statistics
import sys
import time

import numpy as np

from . import exact, fastgrad, fileio, hardness, kernels
from .errors import NumericalError, ToleranceError, ValidationError
from .instance import random_instance

FD_REL_GATE = 1e-4
CSV_COLUMNS = (
    "n", "d", "eps", "degree_g", "k1", "k5",
    "method", "wall_seconds", "linf_err_vs_exact", "seed",
)

# test hook: added to the fast gradient before `check` compares engines
_check_perturbation = 0.0


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _build_parser():
    p = _Parser(prog="tat", description=__doc__)
    p.add_argument("--threads", type=int, default=1,
                   help="worker count for parallelizable kernels (1 = bit-reproducible)")
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate a random instance file")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--bound", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")

    r = sub.add_parser("grad", help="compute a gradient with one engine")
    r.add_argument("--in", dest="infile", required=True)
    r.add_argument("--engine", choices=("exact", "fast"), required=True)
    r.add_argument("--eps", type=float, default=1e-8)
    r.add_argument("--out")

    c = sub.add_parser("check", help="cross-verify both engines (and FD when tiny)")
    c.add_argument("--in", dest="infile", required=True)
    c.add_argument("--eps", type=float, default=1e-8)
    c.add_argument("--tol", type=float, default=1e-6)

    b = sub.add_parser("bench", help="time an engine over a list of sizes")
    b.add_argument("--n-list", required=True,
                   help="comma-separated sequence lengths, e.g. 256,512,1024")
    b.add_argument("--d", type=int, default=2)
    b.add_argument("--eps", type=float, default=1e-6)
    b.add_argument("--engine", choices=("exact", "fast"), required=True)
    b.add_argument("--csv", help="CSV output path (default stdout)")
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--bound", type=float, default=0.8)
    b.add_argument("--seed", type=int, default=0)

    q = sub.add_parser("probe", help="hard-instance derivative and averaging checks")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--d", type=int, required=True)
    q.add_argument("--ba", type=float, required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--t", type=int, default=100)
    return p


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _matrix_text(m):
    return "\n".join(" ".join(repr(float(v)) for v in row) for row in m) + "\n"


def _cmd_gen(args):
    inst = random_instance(args.n, args.d, args.bound, args.seed)
    _emit(fileio.format_instance(inst), args.out)
    return 0


def _cmd_grad(args):
    inst = fileio.read_instance(args.infile)
    if args.engine == "exact":
        g = exact.grad_exact(inst)
    else:
        g = fastgrad.grad_fast(inst, args.eps).g_tilde
    _emit(_matrix_text(g), args.out)
    return 0


def _cmd_check(args):
    inst = fileio.read_instance(args.infile)
    g_ref = exact.grad_exact(inst)
    report = fastgrad.grad_fast(inst, args.eps)
    g_fast = report.g_tilde + _check_perturbation
    diff = float(np.abs(g_fast - g_ref).max())
    print(f"check: engines |g_fast - g_exact|_inf = {diff:.6e} (tol {args.tol:g})",
          file=sys.stderr)
    if diff > args.tol:
        raise ToleranceError(
            f"engine disagreement {diff:.6e} exceeds tol {args.tol:g}"
        )
    if inst.n <= exact.FD_N_CAP and inst.d <= exact.FD_D_CAP:
        g_fd = exact.grad_fd(inst, 1e-5)
        rel = float(np.abs(g_ref - g_fd).max()) / max(1.0, float(np.abs(g_ref).max()))
        print(f"check: finite differences relative error = {rel:.6e} "
              f"(gate {FD_REL_GATE:g})", file=sys.stderr)
        if rel > FD_REL_GATE:
            raise ToleranceError(
                f"finite-difference disagreement {rel:.6e} exceeds {FD_REL_GATE:g}"
            )
    else:
        print("check: instance too large for finite differences, skipped",
              file=sys.stderr)
    print("check: OK", file=sys.stderr)
    return 0


def _median_time(fn, repeats):
    fn()  # warm-up, excluded
    times = []
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def _cmd_bench(args):
    try:
        ns = [int(tok) for tok in args.n_list.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"bad --n-list {args.n_list!r}")
    if not ns:
        raise ValidationError("--n-list is empty")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for n in ns:
        inst = random_instance(n, args.d, args.bound, args.seed)
        if args.engine == "exact":
            wall = _median_time(lambda: exact.grad_exact(inst), args.repeats)
            row = [n, args.d, repr(args.eps), "", "", "",
                   "exact", repr(wall), "", args.seed]
        else:
            report = fastgrad.grad_fast(inst, args.eps)
            wall = _median_time(
                lambda: fastgrad.grad_fast(inst, args.eps), args.repeats
            )
            if n <= exact.exact_cap():
                err = float(np.abs(report.g_tilde - exact.grad_exact(inst)).max())
                err_s = repr(err)
            else:
                err_s = ""
            row = [n, args.d, repr(args.eps), report.degree, report.k1,
                   report.k5, "fast", repr(wall), err_s, args.seed]
        writer.writerow(row)
        print(f"bench: n={n} engine={args.engine} wall={wall:.6g}s",
              file=sys.stderr)
    _emit(buf.getvalue(), args.csv)
    return 0


def _cmd_probe(args):
    hi = hardness.make_hard_instance(args.n, args.d, args.ba, args.seed)
    n, d, ba = hi.n, hi.d, hi.Ba
    grid = np.linspace(0.0, 1.0, 21)
    bound = 8.0 * ba * n * d
    max_fp = 0.0
    slack = 1.0 + 1e-12
    for lam in grid:
        fp = hardness.f_prime(hi, float(lam))
        max_fp = max(max_fp, abs(fp))
        if abs(fp) > bound:
            raise ToleranceError(
                f"|f'({lam:g})| = {abs(fp):.6g} exceeds 8*Ba*n*d = {bound:.6g}"
            )
        h = hardness.row_denominators(hi, float(lam))
        lo = (n * n / 2.0) ** 2 * np.exp(2.0 * ba * lam)
        hisup = float(n) ** 4 * np.exp(2.0 * ba * lam)
        if (h < lo / slack).any() or (h > hisup * slack).any():
            raise ToleranceError(f"row normalizer sandwich violated at lambda={lam:g}")
    f0 = hardness.f_lambda(hi, 0.0)
    f1 = hardness.f_lambda(hi, 1.0)
    b_emp = hardness.empirical_second_derivative_bound(hi)
    s_t = hardness.avg_estimate(hi, args.t)
    gap = abs(s_t - (f1 - f0))
    if gap > b_emp / args.t * slack:
        raise ToleranceError(
            f"averaging error {gap:.6g} exceeds b_emp/t = {b_emp / args.t:.6g}"
        )
    out = (
        f"f0={f0!r}\nf1={f1!r}\ns_t={s_t!r}\nb_emp={b_emp!r}\n"
        f"max_abs_fprime={max_fp!r}\nfprime_bound={bound!r}\n"
    )
    sys.stdout.write(out)
    print("probe: OK", file=sys.stderr)
    return 0


_DISPATCH = {
    "gen": _cmd_gen,
    "grad": _cmd_grad,
    "check": _cmd_check,
    "bench": _cmd_bench,
    "probe": _cmd_probe,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"tat: error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:  # --help
        return int(e.code or 0)
    kernels.set_threads(args.threads)
    try:
        return _DISPATCH[args.cmd](args)
    except ValidationError as e:
        print(f"tat: validation error: {e}", file=sys.stderr)
        return 1
    except (NumericalError, ToleranceError) as e:
        print(f"tat: numerical failure: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"tat: i/o error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
