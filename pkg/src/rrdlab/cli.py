"""Command-line front end: ``rrdlab <subcommand> [options]``.

Exit status is 0 when the requested check passes, 1 when an audit fails and 2
on usage errors (bad arguments, budgets exceeded, malformed input).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from typing import Any, Sequence

from . import discrepancy as disc
from .coupling import PlanError
from .exact_rank import corank_exact, is_singular
from .experiments import (
    ExperimentSpec,
    coupling_audit,
    d2_cycle_experiment,
    erdos_oracle,
    mc_singularity,
    perm_sum_experiment,
    run_report,
)
from .matrix_core import Matrix01, MatrixFormatError, format_matrix, format_signed, parse_matrix
from .rng import make_rng
from .sampler import (
    BudgetExceeded,
    enumerate_all,
    evaluate_asymptotic_count,
    sample_rrd,
    sample_signed_rrd,
)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
MODE_ALIASES = {"exact": "exact-dp", "exact-dp": "exact-dp", "mcmc": "mcmc", "enumerate": "enumerate", "auto": "auto"}


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _grid(text: str) -> list[tuple[int, int]]:
    cells = []
    for part in text.split(","):
        try:
            n, d = part.split(":")
            cells.append((int(n), int(d)))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"grid cells look like n:d, got {part!r}") from exc
    return cells


def _rational_list(text: str) -> list[Fraction]:
    try:
        return [Fraction(t.strip()) for t in text.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated rationals, got {text!r}") from exc


def _rows_pair(text: str) -> tuple[int, int]:
    vals = _int_list(text)
    if len(vals) != 2 or vals[0] == vals[1] or min(vals) < 1:
        raise argparse.ArgumentTypeError("rows are two distinct 1-based indices like 1,2")
    return vals[0] - 1, vals[1] - 1


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=default(0), help="master seed (default 0)")
    parser.add_argument("--threads", type=int, default=default(1), help="worker processes for Monte Carlo")
    parser.add_argument("--out", default=default(None), help="output path (report base path for mc-singularity)")
    parser.add_argument("--format", choices=("json", "csv", "text"), default=default("text"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rrdlab", description="Random regular digraph matrix laboratory.")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common], help="draw matrices from M(n,d)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--mode", choices=tuple(MODE_ALIASES), default="auto")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--count", type=int, default=1, help="number of draws (ignored by --mode enumerate)")
    p.add_argument("--signed", action="store_true", help="apply iid signs")

    p = sub.add_parser("count", parents=[common], help="exact and asymptotic |M(n,d)|")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)

    p = sub.add_parser("mc-singularity", parents=[common], help="Monte Carlo singularity rates")
    p.add_argument("--grid", type=_grid, required=True, help="cells n:d,n:d,...")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--mode", choices=tuple(MODE_ALIASES), default="auto")
    p.add_argument("--unsigned-only", action="store_true")

    p = sub.add_parser("d2-cycles", parents=[common], help="d=2 singularity against cycle-parity benchmarks")
    p.add_argument("--n-list", type=_int_list, required=True)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--mode", choices=tuple(MODE_ALIASES), default="auto")
    p.add_argument(
        "--benchmark",
        choices=("exact", "uniform-derangement"),
        default="exact",
        help="benchmark whose CI membership decides the exit status",
    )

    p = sub.add_parser("perm-sum", parents=[common], help="singularity of P1 + P2")
    p.add_argument("--n-list", type=_int_list, required=True)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--exhaustive-upto", type=int, default=0)

    p = sub.add_parser("erdos", parents=[common], help="exact largest atom of a signed sum")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--x", type=_rational_list, help="coefficients, e.g. 1,2,3/2")
    g.add_argument("--all-ones", type=int, metavar="M")

    p = sub.add_parser("coupling-audit", parents=[common], help="check the shuffle preserves uniformity")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--rows", type=_rows_pair, default=(0, 1))
    p.add_argument("--mode", choices=("exact", "chi2"), default="exact")
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--frozen", type=_int_list, default=[], help="1-based frozen columns")
    p.add_argument("--s", type=int, default=None)

    p = sub.add_parser("discrepancy-audit", parents=[common], help="codegree, discrepancy and expansion events")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix", help="matrix file in the text format ('-' for stdin)")
    src.add_argument("--sample", type=_grid, metavar="N:D", help="sample one matrix from M(n,d)")
    p.add_argument("--d", type=int, default=None, help="degree parameter for good(d) (default: the common degree)")
    p.add_argument("--certify", action="store_true", help="require exact mode everywhere or abort")
    p.add_argument("--delta", type=Fraction, default=Fraction(1, 2))
    p.add_argument("--eps", type=Fraction, default=Fraction(1, 2))
    p.add_argument("--eps0", type=Fraction, default=Fraction(1, 2))
    p.add_argument("--gamma", type=Fraction, default=Fraction(1, 10))
    p.add_argument("--C0", type=Fraction, default=Fraction(1))
    p.add_argument("--budget", type=int, default=10**6)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument(
        "--large-search",
        choices=("worst", "pairs"),
        default="worst",
        help="large-minor search: extremal B per row set, or uniform (A, B) pairs",
    )

    p = sub.add_parser("rank", parents=[common], help="exact rank, corank and kernel of a matrix file")
    p.add_argument("--matrix", required=True, help="matrix file in the text format ('-' for stdin)")
    return parser


# -- output ---------------------------------------------------------------------------------

def _plain(x: Any) -> Any:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def _render(rows: list[dict], fmt: str, extra: dict | None = None) -> str:
    rows = [_plain(r) for r in rows]
    if fmt == "json":
        doc = {"rows": rows, **(_plain(extra) if extra else {})}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if not rows:
        return ""
    keys = list(rows[0])
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    cells = [[str(k) for k in keys]] + [[str(r[k]) for k in keys] for r in rows]
    widths = [max(len(c[i]) for c in cells) for i in range(len(keys))]
    lines = ["  ".join(c[i].ljust(widths[i]) for i in range(len(keys))).rstrip() for c in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        try:
            with open(out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {out}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _estimate_cols(est) -> dict:
    return {
        "trials": est.trials,
        "hits": est.hits,
        "p_hat": est.p_hat,
        "ci_low": round(est.ci_low, 6),
        "ci_high": round(est.ci_high, 6),
    }


def _read_matrix(path: str) -> tuple[Matrix01, int]:
    text = sys.stdin.read() if path == "-" else open(path).read()
    return parse_matrix(text)


# -- commands -----------------------------------------------------------------------------

def _cmd_sample(a) -> int:
    mode = MODE_ALIASES[a.mode]
    rng = make_rng(a.seed)
    if mode == "enumerate":
        mats = enumerate_all(a.n, a.d)
        text = "\n".join(format_matrix(M, a.d) for M in mats)
    else:
        parts = []
        for _ in range(a.count):
            if a.signed:
                parts.append(format_signed(sample_signed_rrd(a.n, a.d, rng, mode=mode, steps=a.steps), a.d))
            else:
                parts.append(format_matrix(sample_rrd(a.n, a.d, rng, mode=mode, steps=a.steps), a.d))
        text = "\n".join(parts)
    _emit(text, a.out)
    return EXIT_PASS


def _cmd_count(a) -> int:
    res = evaluate_asymptotic_count(a.n, a.d)
    row = {
        "n": a.n,
        "d": a.d,
        "exact": res.exact,
        "asymptotic": f"{float(res.asymptotic):.6e}",
        "ratio": None if res.ratio is None else f"{float(res.ratio):.6f}",
    }
    _emit(_render([row], a.format), a.out)
    return EXIT_PASS


def _cmd_mc(a) -> int:
    spec = ExperimentSpec("mc-singularity", tuple(a.grid), a.trials, MODE_ALIASES[a.mode], a.seed, a.out, not a.unsigned_only)
    if a.out:
        paths = run_report(spec, a.out, a.threads)
        sys.stdout.write("\n".join(paths) + "\n")
        return EXIT_PASS
    rows = [{"n": r["n"], "d": r["d"], "kind": r["kind"], **_estimate_cols(r["estimate"]), "seed": a.seed} for r in mc_singularity(spec, a.threads)]
    _emit(_render(rows, a.format), None)
    return EXIT_PASS


def _cmd_d2(a) -> int:
    rows_out = []
    ok = True
    for r in d2_cycle_experiment(a.n_list, a.trials, a.seed, MODE_ALIASES[a.mode]):
        inside = r.within_exact_benchmark if a.benchmark == "exact" else r.within_uniform_benchmark
        ok &= inside
        rows_out.append(
            {
                "n": r.n,
                **_estimate_cols(r.estimate),
                "exact_benchmark": r.benchmark_exact,
                "uniform_derangement_benchmark": r.benchmark_uniform_derangement,
                "inside_ci": inside,
            }
        )
    _emit(_render(rows_out, a.format), a.out)
    return EXIT_PASS if ok else EXIT_FAIL


def _cmd_perm(a) -> int:
    rows = [
        {"n": r["n"], **_estimate_cols(r["estimate"]), "exact": r["exact"], "exhaustive": r["exhaustive"]}
        for r in perm_sum_experiment(a.n_list, a.trials, a.seed, a.exhaustive_upto)
    ]
    _emit(_render(rows, a.format), a.out)
    return EXIT_PASS


def _cmd_erdos(a) -> int:
    res = erdos_oracle(a.x if a.x is not None else f"all-ones {a.all_ones}")
    row = {
        "m": res.m,
        "max_atom": res.max_atom,
        "bound": res.bound,
        "within_bound": res.within_bound,
        "within_inverse_sqrt": res.within_inverse_sqrt,
    }
    _emit(_render([row], a.format), a.out)
    return EXIT_PASS if res.within_bound and res.within_inverse_sqrt else EXIT_FAIL


def _cmd_coupling(a) -> int:
    if any(j < 1 or j > a.n for j in a.frozen):
        raise UsageError("frozen columns are 1-based indices in [1, n]")
    frozen = [j - 1 for j in a.frozen]
    v = coupling_audit(a.n, a.d, a.rows, a.mode, a.trials, a.seed, frozen, a.s)
    row = {"mode": v.mode, "pass": v.passed, "tv": v.tv, "chi2": v.chi2, "p_value": v.p_value, "trials": v.trials, "support": v.support}
    _emit(_render([row], a.format), a.out)
    return EXIT_PASS if v.passed else EXIT_FAIL


def _cmd_discrepancy(a) -> int:
    rng = make_rng(a.seed)
    if a.matrix:
        M, d_file = _read_matrix(a.matrix)
    else:
        (n, d_file), = a.sample
        M = sample_rrd(n, d_file, rng)
    d = a.d if a.d is not None else (M.degree() or d_file)
    if not d:
        raise UsageError("cannot infer d; pass --d")
    cfg = disc.GoodEventConfig(
        delta=a.delta, eps=a.eps, eps0=a.eps0, gamma=a.gamma, C0=a.C0, budget=a.budget, samples=a.samples
    )
    events = []
    regular = M.degree() is not None and 0 < d < M.n
    if regular:
        events.append(disc.check_codegree(M, cfg.delta))
        events.append(
            disc.check_large_minors(M, cfg.eps, cfg.C0, cfg.budget, rng, cfg.samples, a.certify, a.large_search)
        )
    events.append(disc.check_thin_minors(M, cfg.eps0, cfg.gamma, cfg.budget, rng, min(cfg.samples, 200), a.certify, d))
    events.append(disc.check_expansion(M, cfg.gamma, cfg.budget, rng, min(cfg.samples, 200), a.certify, d))
    events.extend(disc.check_good_d(M, d, cfg, rng, a.certify).events)
    report = disc.DiscrepancyReport(events)
    if a.format == "json":
        text = report.to_json() + "\n"
    elif a.format == "csv":
        text = _render([{k: v for k, v in e.to_dict().items() if k in ("name", "pass", "margin", "mode", "samples_used")} for e in events], "csv")
    else:
        text = report.to_text() + "\n"
    _emit(text, a.out)
    return EXIT_PASS if report.passed else EXIT_FAIL


def _cmd_rank(a) -> int:
    M, _ = _read_matrix(a.matrix)
    res = corank_exact(M)
    sing = is_singular(M, make_rng(a.seed))
    if a.format == "json":
        doc = {**res.to_json(), "singular": sing, "n": M.n}
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    else:
        text = _render([{"n": M.n, "rank": res.rank, "corank": res.corank, "singular": sing}], a.format)
        if a.format == "text" and res.kernel_basis:
            text += "kernel basis:\n" + "".join(
                "  " + " ".join(f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator) for x in v) + "\n"
                for v in res.kernel_basis
            )
    _emit(text, a.out)
    return EXIT_PASS


COMMANDS = {
    "sample": _cmd_sample,
    "count": _cmd_count,
    "mc-singularity": _cmd_mc,
    "d2-cycles": _cmd_d2,
    "perm-sum": _cmd_perm,
    "erdos": _cmd_erdos,
    "coupling-audit": _cmd_coupling,
    "discrepancy-audit": _cmd_discrepancy,
    "rank": _cmd_rank,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_PASS
    try:
        return COMMANDS[args.command](args)
    except (UsageError, BudgetExceeded, disc.BudgetExceeded, MatrixFormatError, PlanError, ValueError) as exc:
        print(f"rrdlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"rrdlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
