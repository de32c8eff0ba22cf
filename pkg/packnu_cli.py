"""
packnu command line.

  nu     GROUP SET [--exact|--greedy] [--order natural|random] [--seed N] [--budget N] [--check]
  cov    GROUP SET [--exact|--greedy] [--budget N]
  scan   FAMILY [--p LO..HI] [--lambda LO..HI] [--group SPEC] [--g N] [--exact]
         [--budget N] [--out TARGET] [--parallel N] [--timings]
  verify [--suite paper|all|NAME,...] [--fast] [--inject-fault] [--seed N] [--prime-limit N]

Exit codes: 0 success, 1 usage or parse error, 2 budget exhausted,
3 verification failure.
"""

import argparse
import os
import sys
from typing import List, Optional

from construction_utils import resolve_set_spec
from group_utils import InvariantViolation, PacknuError, SetSpecError, parse_group_spec
from master_orchestrator import PackingOrchestrator
from scan_utils import FAMILIES, parse_range
from verify_utils import CLAIMS

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BUDGET = 2
EXIT_VERIFY = 3

# suite names that select every claim
FULL_SUITES = ('paper', 'all')


class PacknuArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"[Error] {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    ap = PacknuArgumentParser(prog='packnu',
                              description="Packing and covering sets in finite abelian groups.")
    sub = ap.add_subparsers(dest='command', parser_class=PacknuArgumentParser)
    sub.required = True

    nu = sub.add_parser('nu', help="packing number ν(A) and its bounds")
    nu.add_argument('group', help="cyclic:N, product:N1xN2x..., multmod:P")
    nu.add_argument('set', help="{..}, interval:1..L, subgroup:g, @file or a construction")
    mode = nu.add_mutually_exclusive_group()
    mode.add_argument('--exact', action='store_true')
    mode.add_argument('--greedy', action='store_true')
    nu.add_argument('--order', default='natural', help="greedy scan order: natural or random")
    nu.add_argument('--seed', type=int, default=None, help="seed for --order random")
    nu.add_argument('--budget', type=int, default=None, help="node budget of the exact solver")
    nu.add_argument('--check', action='store_true',
                    help="check the packing set the construction comes with")

    cov = sub.add_parser('cov', help="covering number cov(A) and its bounds")
    cov.add_argument('group')
    cov.add_argument('set')
    mode = cov.add_mutually_exclusive_group()
    mode.add_argument('--exact', action='store_true')
    mode.add_argument('--greedy', action='store_true')
    cov.add_argument('--budget', type=int, default=None)

    scan = sub.add_parser('scan', help="sweep a construction family")
    scan.add_argument('family', choices=FAMILIES)
    scan.add_argument('--p', dest='p_range', default=None, help="prime range LO..HI")
    scan.add_argument('--lambda', dest='lam_range', default=None, help="λ range LO..HI")
    scan.add_argument('--group', default=None)
    scan.add_argument('--g', type=int, default=None, help="generator label")
    scan.add_argument('--exact', action='store_true')
    scan.add_argument('--budget', type=int, default=None)
    scan.add_argument('--out', default=None,
                      help="'-' or csv: CSV on stdout, json: JSON on stdout, or a .csv/.json path")
    scan.add_argument('--parallel', type=int, default=1)
    scan.add_argument('--timings', action='store_true', help="add a wall_ms column")

    verify = sub.add_parser('verify', help="check every claim at its default scale")
    verify.add_argument('--suite', default='paper',
                        help="paper (every claim), all, or a comma list of claim names")
    verify.add_argument('--fast', action='store_true', help="skip checks with p > 10^5 and sample fewer covering instances")
    verify.add_argument('--inject-fault', action='store_true',
                        help="corrupt constructed packing sets (negative control)")
    verify.add_argument('--seed', type=int, default=None)
    verify.add_argument('--prime-limit', type=int, default=None,
                        help="upper end of the prime sweeps for the interval packing claims")
    return ap


def _orchestrator(args, **config) -> PackingOrchestrator:
    budget = getattr(args, 'budget', None)
    if budget is not None:
        if budget < 1:
            raise SetSpecError(f"--budget must be positive, got {budget}")
        config['nu_budget'] = config['cov_budget'] = budget
    orchestrator = PackingOrchestrator(config=config)
    # stdout carries the report
    orchestrator.log_stream = sys.stderr
    return orchestrator


def _order(args) -> Optional[str]:
    if args.order == 'natural':
        if args.seed is not None:
            raise SetSpecError("--seed only applies to --order random")
        return None
    if args.order == 'random':
        if args.seed is None:
            raise SetSpecError("--order random needs an explicit --seed")
        return f"random:{args.seed}"
    if args.order.startswith('random:'):
        return args.order
    raise SetSpecError(f"unknown order {args.order!r}, expected natural or random")


def cmd_nu(args) -> int:
    G = parse_group_spec(args.group)
    A, construction_B = resolve_set_spec(G, args.set)
    B = None
    if args.check:
        if construction_B is None:
            raise SetSpecError(f"{args.set!r} comes with no packing set to check")
        B = construction_B
    orchestrator = _orchestrator(args)
    report = orchestrator.run_nu(A, B, exact=args.exact, order=_order(args))
    orchestrator.export_report(report)
    if not report.is_packing:
        orchestrator.log("[Error] B is not an A-packing set")
        return EXIT_VERIFY
    return EXIT_BUDGET if report.status == 'unknown' else EXIT_OK


def cmd_cov(args) -> int:
    G = parse_group_spec(args.group)
    A, _ = resolve_set_spec(G, args.set)
    orchestrator = _orchestrator(args)
    report = orchestrator.run_cov(A, exact=args.exact)
    orchestrator.export_report(report)
    if not report.covers:
        orchestrator.log("[Error] A∘B does not cover the group")
        return EXIT_VERIFY
    return EXIT_BUDGET if report.status == 'unknown' else EXIT_OK


def _out_target(out: Optional[str]):
    """(format, path or None for stdout); None format means a console table."""
    if out is None:
        return None, None
    if out in ('-', 'csv'):
        return 'csv', None
    if out == 'json':
        return 'json', None
    ext = os.path.splitext(out)[1].lower()
    return ('json' if ext == '.json' else 'csv'), out


def cmd_scan(args) -> int:
    if args.parallel < 1:
        raise SetSpecError(f"--parallel must be at least 1, got {args.parallel}")
    fmt, path = _out_target(args.out)
    orchestrator = _orchestrator(args, parallel=args.parallel, timings=args.timings)
    if fmt is None:
        orchestrator.log_stream = sys.stdout
    p_range = parse_range(args.p_range) if args.p_range else None
    lam_range = parse_range(args.lam_range) if args.lam_range else None
    tasks = orchestrator.plan_scan(args.family, p_range, lam_range, args.group, args.g,
                                   exact=args.exact)
    rows = orchestrator.run_scan(tasks)
    if fmt is None:
        print(orchestrator.scan_table(rows))
    elif fmt == 'json':
        orchestrator.export_json(rows, path)
    else:
        orchestrator.export_csv(rows, path)
    if any(row.status == 'unknown' for row in rows):
        return EXIT_BUDGET
    return EXIT_OK


def _suite_names(suite: str) -> Optional[List[str]]:
    if suite.strip() in FULL_SUITES:
        return None
    names = [name.strip() for name in suite.split(',') if name.strip()]
    unknown = [name for name in names if name not in CLAIMS]
    if unknown or not names:
        raise SetSpecError(f"unknown claim(s) {', '.join(unknown) or suite!r}; "
                           f"expected paper, all, or some of {', '.join(CLAIMS)}")
    return names


def cmd_verify(args) -> int:
    names = _suite_names(args.suite)
    orchestrator = _orchestrator(args)
    orchestrator.log_stream = sys.stdout
    results = orchestrator.run_verify(names, fast=args.fast, inject_fault=args.inject_fault,
                                      seed=args.seed, prime_limit=args.prime_limit)
    print()
    print(orchestrator.verify_table(results))
    failed = orchestrator.session_metadata['claims_failed']
    if failed:
        print(f"[Error] {len(failed)} claim(s) failed: {', '.join(failed)}")
        return EXIT_VERIFY
    print(f"[System] All {len(results)} claims passed ({orchestrator.elapsed_seconds:.1f}s)")
    return EXIT_OK


COMMANDS = {
    'nu': cmd_nu,
    'cov': cmd_cov,
    'scan': cmd_scan,
    'verify': cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InvariantViolation as e:
        print(f"[Error] invariant violated: {e}", file=sys.stderr)
        return EXIT_VERIFY
    except PacknuError as e:
        print(f"[Error] {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
