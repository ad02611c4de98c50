"""Command-line entry point: ``gwcoop gw ...`` and ``gwcoop coop ...``.

Results are printed as ``key=value`` lines.  Exit status is 0 on success,
2 on usage or precondition errors and 3 when an exact computation exceeds
its budget.
"""

from __future__ import annotations

import argparse
import sys

from gwcoop import coop, galton_watson as gw, phase, render
from gwcoop.errors import BudgetExceeded, PreconditionError
from gwcoop.rng import SEED_ENV, default_seed

EXIT_USAGE = 2
EXIT_BUDGET = 3


def fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        if v.is_integer() and abs(v) < 1e16:
            return str(int(v))
        return repr(v)
    return str(v)


def emit(out, **kv):
    for k, v in kv.items():
        print(f"{k}={fmt(v)}", file=out)


def _echo(args, out, names):
    emit(out, command=f"{args.group} {args.cmd}")
    emit(out, **{n: getattr(args, n) for n in names})
    emit(out, seed=args.seed)


def _int(text: str) -> int:
    # Accept 1e8-style literals for thresholds and trial counts.
    value = float(text)
    if not value.is_integer():
        raise argparse.ArgumentTypeError(f"expected an integer, got {text}")
    return int(value)


# -- gw ---------------------------------------------------------------------


def _law(args):
    return gw.OffspringLaw.binomial(args.n, args.q)


def cmd_gw_simulate(args, out):
    _echo(args, out, ["q", "n", "initial", "horizon", "threshold", "trials"])
    est = gw.survival_mc(_law(args), args.initial, args.trials, args.horizon, args.threshold, args.seed)
    emit(
        out,
        exploded=est.successes,
        censored=est.censored,
        extinct=est.trials - est.successes - est.censored,
        estimate=est.estimate,
        std_error=est.std_error,
        ci99_low=est.ci99_low,
        ci99_high=est.ci99_high,
    )


def cmd_gw_extinction(args, out):
    _echo(args, out, ["q", "n", "tol"])
    s = gw.extinction_probability(_law(args), args.tol)
    emit(out, fertility=_law(args).fertility, extinction=s, survival=1.0 - s)


def cmd_gw_law(args, out):
    _echo(args, out, ["q", "n", "initial", "steps"])
    d = gw.exact_law_at(args.initial, _law(args), args.steps)
    emit(out, mean=d.mean(), truncation_loss=d.truncation_loss)
    print("value,prob", file=out)
    for k, v in zip(d.support(), d.probs):
        print(f"{k},{fmt(float(v))}", file=out)


def cmd_gw_certificate(args, out):
    _echo(args, out, ["q", "n", "nmax", "tmax"])
    cert = gw.certificate_search(_law(args), args.nmax, args.tmax)
    _print_certificate(cert, out)


def _print_certificate(cert, out):
    if cert is None:
        emit(out, certificate="none")
        return
    line = f"N={cert.block_size} T={cert.block_time} value={fmt(cert.value)} threshold={fmt(cert.threshold)}"
    if cert.error_bar:
        line += f" error_bar={fmt(cert.error_bar)}"
    print(line, file=out)


def cmd_gw_bound(args, out):
    _echo(args, out, ["q", "n", "a", "m_trunc", "initial", "terms"])
    b = gw.survival_lower_bound(_law(args), args.a, args.m_trunc, args.initial, args.terms)
    emit(out, c=b.c, truncated_mean=b.truncated_mean, truncated_variance=b.truncated_variance, bound=b.bound)


# -- coop -------------------------------------------------------------------


def _params(args):
    return coop.CoopParams(args.p, args.q)


def cmd_coop_h(args, out):
    _echo(args, out, ["p", "q"])
    _params(args)
    if args.enumerate:
        emit(out, method="enumerate", h=coop.h_exact(args.p, args.q))
    else:
        emit(out, method="polynomial", h=coop.h_polynomial(args.p, args.q))


def cmd_coop_survive(args, out):
    _echo(args, out, ["p", "q", "trials", "threshold"])
    est = coop.coop_survival_mc(_params(args), args.trials, args.threshold, args.seed)
    emit(
        out,
        successes=est.successes,
        estimate=est.estimate,
        ci99_low=est.ci99_low,
        ci99_high=est.ci99_high,
    )


def cmd_coop_certificate(args, out):
    _echo(args, out, ["p", "q", "nmax", "tmax", "mc_trials"])
    if args.mc_trials:
        cert = coop.coop_certificate_search(_params(args), args.nmax, args.tmax, "mc", args.mc_trials, args.seed)
    else:
        cert = coop.coop_certificate_search(_params(args), args.nmax, args.tmax)
    _print_certificate(cert, out)


def cmd_coop_critical_q(args, out):
    _echo(args, out, ["p", "tol"])
    q_star = coop.critical_q(args.p, args.tol)
    emit(out, q_star=q_star, residual=abs(coop.h_polynomial(args.p, q_star) - 1.0))


def cmd_coop_phase(args, out):
    step = phase.PAPER_STEP if args.paper_scale else args.step
    args.step = step
    _echo(args, out, ["step", "trials", "threshold", "estimator", "jobs"])
    grid = phase.sweep(
        (args.p_min, args.p_max),
        (args.q_min, args.q_max),
        step,
        args.trials,
        args.threshold,
        args.seed,
        args.estimator,
        args.jobs,
    )
    emit(out, rows=grid.p_axis.size, cols=grid.q_axis.size)
    if args.csv:
        emit(out, csv=phase.export_csv(grid, args.csv))
    if args.heatmap:
        emit(out, heatmap=render.render_heatmap(grid, args.heatmap, args.overlay_critical, args.format, args.scale))


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gwcoop",
        description="Galton-Watson and cooperative two-species survival tools.",
        epilog=f"The default seed can be set through the {SEED_ENV} environment variable.",
    )
    groups = parser.add_subparsers(dest="group", required=True)

    def add(sub, name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func, cmd=name)
        p.add_argument("--seed", type=int, default=None, help="master seed (default: $%s or built-in)" % SEED_ENV)
        return p

    g = groups.add_parser("gw", help="Galton-Watson chain with Binomial(n, q) offspring").add_subparsers(
        dest="cmd", required=True
    )

    def law_args(p):
        p.add_argument("--q", type=float, required=True)
        p.add_argument("--n", type=int, default=2, help="binomial trials per individual")

    p = add(g, "simulate", cmd_gw_simulate, "Monte Carlo survival frequency")
    law_args(p)
    p.add_argument("--initial", type=int, default=1)
    p.add_argument("--horizon", type=_int, default=1000)
    p.add_argument("--threshold", type=_int, default=coop.PAPER_THRESHOLD)
    p.add_argument("--trials", type=_int, default=coop.DEFAULT_TRIALS)

    p = add(g, "extinction", cmd_gw_extinction, "extinction probability by generating-function iteration")
    law_args(p)
    p.add_argument("--tol", type=float, default=1e-10)

    p = add(g, "law", cmd_gw_law, "exact law of Y_T")
    law_args(p)
    p.add_argument("--initial", type=int, default=1)
    p.add_argument("--steps", type=int, required=True)

    p = add(g, "certificate", cmd_gw_certificate, "search N, T with P^N(Y_T >= 2N) > 1/2")
    law_args(p)
    p.add_argument("--nmax", type=int, default=16)
    p.add_argument("--tmax", type=int, default=16)

    p = add(g, "bound", cmd_gw_bound, "product lower bound on survival")
    law_args(p)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--m-trunc", type=int, required=True)
    p.add_argument("--initial", type=int, required=True)
    p.add_argument("--terms", type=int, default=200)

    c = groups.add_parser("coop", help="cooperative two-species chain").add_subparsers(dest="cmd", required=True)

    def pq(p, need_q=True):
        p.add_argument("--p", type=float, required=True)
        if need_q:
            p.add_argument("--q", type=float, required=True)

    p = add(c, "h", cmd_coop_h, "one-step expectation h(p, q)")
    pq(p)
    how = p.add_mutually_exclusive_group()
    how.add_argument("--polynomial", action="store_true", help="closed-form polynomial (default)")
    how.add_argument("--enumerate", action="store_true", help="enumerate the 64 outcomes")

    p = add(c, "survive", cmd_coop_survive, "Monte Carlo survival from (1, 1)")
    pq(p)
    p.add_argument("--trials", type=_int, default=coop.DEFAULT_TRIALS)
    p.add_argument("--threshold", type=_int, default=coop.PAPER_THRESHOLD)

    p = add(c, "certificate", cmd_coop_certificate, "search N, T with E[floor(Z_T / N)] > 1")
    pq(p)
    p.add_argument("--nmax", type=int, default=4)
    p.add_argument("--tmax", type=int, default=4)
    p.add_argument("--mc-trials", type=_int, default=0, help="use Monte Carlo with this many trials")

    p = add(c, "critical-q", cmd_coop_critical_q, "bisection for h(p, q) = 1")
    pq(p, need_q=False)
    p.add_argument("--tol", type=float, default=coop.BISECTION_TOL)

    p = add(c, "phase", cmd_coop_phase, "(p, q) survival sweep")
    p.add_argument("--step", type=float, default=phase.DEFAULT_STEP)
    p.add_argument("--paper-scale", action="store_true", help=f"use the grid step {phase.PAPER_STEP}")
    p.add_argument("--trials", type=_int, default=coop.DEFAULT_TRIALS)
    p.add_argument("--threshold", type=_int, default=coop.PAPER_THRESHOLD)
    p.add_argument("--estimator", choices=phase.ESTIMATORS, default="mc_survival")
    p.add_argument("--p-min", type=float, default=0.0)
    p.add_argument("--p-max", type=float, default=1.0)
    p.add_argument("--q-min", type=float, default=0.0)
    p.add_argument("--q-max", type=float, default=1.0)
    p.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on it)")
    p.add_argument("--csv", default=None)
    p.add_argument("--heatmap", default=None)
    p.add_argument("--format", choices=("ppm", "svg"), default="ppm")
    p.add_argument("--scale", type=int, default=4, help="pixels per cell (ppm) / size multiplier (svg)")
    p.add_argument("--overlay-critical", action="store_true", help="draw the h(p,q)=1 curve")
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.seed is None:
        try:
            args.seed = default_seed()
        except ValueError:
            print(f"error: {SEED_ENV} is not an integer", file=sys.stderr)
            return EXIT_USAGE
    try:
        args.func(args, out)
    except BudgetExceeded as exc:
        print(f"error: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (PreconditionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
