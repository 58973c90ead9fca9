"""Command-line entry point: ``approxcount <command> [flags]``.

Exit status is 0 on success, 1 when a check fails or a budget is infeasible,
and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from fractions import Fraction

from . import lab, oracle
from .approxcounter import DEFAULT_C, ApproxCounter, CounterParams, merge, schedule_for
from .lab import fmt
from .morris import MorrisParams
from .randkit import RandStream
from .stats import chi_square_gof, chi_square_two_sample

SIGNIFICANCE = 1e-3


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _counter_params(args) -> CounterParams:
    return CounterParams(args.eps_num, args.eps_shift, args.delta_exp, args.c)


def _add_counter_flags(p, required=True):
    p.add_argument("--eps-num", type=int, required=required, help="numerator m of eps = m/2^s")
    p.add_argument("--eps-shift", type=int, required=required, help="shift s of eps = m/2^s")
    p.add_argument("--delta-exp", type=int, default=10, help="failure exponent, delta = 2^-delta_exp")
    p.add_argument("--c", type=float, default=DEFAULT_C, help="Chernoff constant C")


def cmd_simulate(args) -> int:
    if args.algo == "nycount":
        if args.eps_num is None or args.eps_shift is None:
            args.parser.error("nycount needs --eps-num and --eps-shift")
        params = _counter_params(args)
    else:
        if args.a is None:
            args.parser.error(f"{args.algo} needs --a")
        params = MorrisParams(args.a)
    if args.n is not None:
        n_spec = args.n
    elif args.nmin is not None and args.nmax is not None:
        n_spec = (args.nmin, args.nmax)
    else:
        args.parser.error("give --n or both --nmin and --nmax")
    reports = lab.run_trials(args.algo, params, n_spec, args.trials, args.seed, args.workers)
    _emit(lab.trials_csv(reports), args.out)
    return 0


def cmd_figure1(args) -> int:
    try:
        res = lab.figure1(args.trials, args.nmin, args.nmax, args.bits, args.seed,
                          args.delta_exp, args.c, args.workers, args.nycount_bits)
    except lab.InfeasibleBudget as exc:
        print(f"FAIL infeasible budget: {exc}", file=sys.stderr)
        return 1
    _emit(res.csv(), args.out)
    m_err, y_err = res.max_errors()
    gap = max(res.decile_gaps())
    ok = m_err <= 0.05 and y_err <= 0.05 and gap <= 0.015
    print(res.header(), file=sys.stderr)
    print(f"max rel err morris={fmt(m_err)} nycount={fmt(y_err)}; max decile gap={fmt(gap)} "
          f"{'PASS' if ok else 'FAIL'}", file=sys.stderr)
    return 0 if ok else 1


def cmd_schedule(args) -> int:
    params = _counter_params(args)
    sched = schedule_for(params)
    max_x = args.max_x if args.max_x is not None else sched.x0 + 20
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["X", "T", "t", "Y_start", "Y_end", "clamped"])
    for e in sched.table(max_x):
        w.writerow([e.x, e.T, e.t, e.y_start, e.y_end, int(e.clamped)])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_dp(args) -> int:
    if args.algo == "morris":
        if args.a is None:
            args.parser.error("morris needs --a")
        dist = oracle.morris_dp(args.a, args.n, args.mode)
        text = dist.to_csv(("X",))
    else:
        if args.eps_num is None or args.eps_shift is None:
            args.parser.error("nycount needs --eps-num and --eps-shift")
        dist = oracle.approx_dp(_counter_params(args), args.n, args.mode)
        text = dist.to_csv(("X", "Y"))
    _emit(text, args.out)
    return 0


def cmd_merge_test(args) -> int:
    params = _counter_params(args)
    master = RandStream(args.seed)
    merged, direct = [], []
    for i in range(args.trials):
        ts = master.derive(i)
        a, b = ApproxCounter(params), ApproxCounter(params)
        a.increment_many(args.n1, ts.derive(1))
        b.increment_many(args.n2, ts.derive(2))
        merged.append(merge(a, b, ts.derive(3)).x)
        d = ApproxCounter(params)
        d.increment_many(args.n1 + args.n2, ts.derive(4))
        direct.append(d.x)
    stat, dof, p = chi_square_two_sample(merged, direct)
    ok = p >= SIGNIFICANCE
    print(f"monte-carlo merge vs direct on X: chi2={stat:.3f} dof={dof} p={p:.4g}")
    if args.n1 <= oracle.MERGE_MAX_N and args.n2 <= oracle.MERGE_MAX_N:
        try:
            exact = oracle.merge_dp(params, args.n1, args.n2).probs == \
                oracle.approx_dp(params, args.n1 + args.n2).probs
        except oracle.OracleSizeError:
            exact = None
        if exact is not None:
            print(f"exact merge_dp == approx_dp: {exact}")
            ok = ok and exact
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_appendix_check(args) -> int:
    c = args.c_value if args.c_value is not None else 2.0 ** args.c_exp
    pt = oracle.appendix_params(args.eps, c, args.delta)
    prob = oracle.morris_underestimate_prob(pt.a, args.eps, pt.n)
    ok = pt.constraint_ok and prob > args.delta
    print(f"a={pt.a:.6g} N={pt.n} constraint_ok={pt.constraint_ok} "
          f"(delta bound {pt.delta_bound:.4g})")
    print(f"P(underestimate by more than eps)={float(prob):.6g} vs delta={args.delta:g}")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_fit_budget(args) -> int:
    try:
        b = lab.fit_budget(args.algo, args.bits, args.nmax, args.delta_exp, args.c)
    except lab.InfeasibleBudget as exc:
        print(f"FAIL infeasible budget: {exc}", file=sys.stderr)
        return 1
    print(f"algo={b.algo} bits={b.bits} n_max={b.n_max} {lab.describe(b.params)} bound={b.bound}")
    print(f"rule: {b.rule}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="approxcount", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="seeded trial batch, one CSV row per trial")
    p.add_argument("--algo", choices=lab.ALGOS, required=True)
    p.add_argument("--a", type=float)
    _add_counter_flags(p, required=False)
    p.add_argument("--n", type=int)
    p.add_argument("--nmin", type=int)
    p.add_argument("--nmax", type=int)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("figure1", help="paired error CDFs under a bit budget")
    p.add_argument("--trials", type=int, default=5000)
    p.add_argument("--nmin", type=int, default=500_000)
    p.add_argument("--nmax", type=int, default=999_999)
    p.add_argument("--bits", type=int, default=17)
    p.add_argument("--nycount-bits", type=int, help="separate budget for the epoch counter")
    p.add_argument("--delta-exp", type=int, default=10)
    p.add_argument("--c", type=float, default=DEFAULT_C)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_figure1)

    p = sub.add_parser("schedule", help="dump the epoch table as CSV")
    _add_counter_flags(p)
    p.add_argument("--max-x", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("dp", help="exact state distribution as CSV")
    p.add_argument("--algo", choices=("morris", "nycount"), required=True)
    p.add_argument("--a", type=float)
    _add_counter_flags(p, required=False)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mode", choices=("rational", "float"), default="rational")
    p.add_argument("--out")
    p.set_defaults(func=cmd_dp)

    p = sub.add_parser("merge-test", help="merge vs direct counting")
    _add_counter_flags(p)
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--n2", type=int, required=True)
    p.add_argument("--trials", type=int, default=50_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_merge_test)

    p = sub.add_parser("appendix-check", help="exact underestimation probability of plain Morris(a)")
    p.add_argument("--eps", type=float, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--c-exp", type=int, default=-8, help="c = 2^c_exp")
    g.add_argument("--c", dest="c_value", type=float)
    p.add_argument("--delta", type=float, required=True)
    p.set_defaults(func=cmd_appendix_check)

    p = sub.add_parser("fit-budget", help="parameters fitting a bit budget")
    p.add_argument("--algo", choices=lab.ALGOS, required=True)
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--delta-exp", type=int, default=10)
    p.add_argument("--c", type=float, default=DEFAULT_C)
    p.set_defaults(func=cmd_fit_budget)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    args.parser = ap
    try:
        return args.func(args)
    except ValueError as exc:
        ap.error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
