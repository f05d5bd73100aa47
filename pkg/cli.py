#!/usr/bin/env python3
"""
Command-line surface: generate, reformulate, solve, verify, experiment.

Exit codes: 0 success, 1 other input errors or a failed verification,
2 parse error, 3 generator constraint violation, 4 limit exceeded.
"""

import argparse
import logging
import sys
from typing import List, Optional

import pandas as pd
from dotenv import load_dotenv

from services.bnb_solver import STATUS_NODE_LIMIT, BranchAndBoundSolver, BranchStrategy, ORDERS
from services.dkp_generator import BETA_POLICIES, FAMILIES, DkpGenerator
from services.experiment_service import TABLES, ExperimentRequest, ExperimentService
from services.instance_file_service import InstanceFileService
from services.reformulation_service import NoIntegerSolution, ReformulationService
from utils.errors import DkpLabError, GeneratorError, LimitExceeded, ParseError, TooLarge
from utils.int_matrix import parse_int_list
from utils.knapsack_bounds import frob_p_bounds
from utils.lattice_core import ReductionProfile
from utils.lp_exact import IpInstance
from utils.settings import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_PARSE = 2
EXIT_GENERATOR = 3
EXIT_LIMIT = 4

files = InstanceFileService()


def parse_bounds(text: str):
    """Comma list of integers with `inf` for an absent upper bound"""
    try:
        return tuple(None if token.strip() == 'inf' else int(token) for token in text.split(','))
    except ValueError:
        raise ParseError(f"not a comma-separated bound list: {text!r}")


def require(args, *names: str):
    missing = [name for name in names if getattr(args, name) is None]
    if missing:
        raise ParseError(f"{args.family} needs " + ', '.join(f"--{name}" for name in missing))


def read_input(path: str) -> IpInstance:
    """Instance file or reformulation bundle; bundles yield their reformulated instance"""
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}")
    if '\n[reform]' in text or text.startswith('[reform]'):
        bundle = files.parse_bundle(text)
        if bundle.instance is None:
            raise ParseError(f"{path} holds a certificate, not an instance")
        return bundle.instance
    return files.parse_instance(text)


def emit(text: str, output: Optional[str]):
    if output:
        with open(output, 'w') as f:
            f.write(text)
        logger.info(f"Wrote {output}")
    else:
        sys.stdout.write(text)


# Commands

def cmd_generate(args) -> int:
    generator = DkpGenerator()
    if args.family == 'recipe1':
        require(args, 'p', 'r', 'u', 'k')
        params = generator.recipe1(parse_int_list(args.p), parse_int_list(args.r), parse_bounds(args.u),
                                   args.k, M=args.M, beta_policy=args.beta_policy or 'widest',
                                   beta1=args.beta1, beta2=args.beta2)
        inst = params.to_instance(name=args.name or 'recipe1')
    elif args.family == 'recipe2':
        require(args, 'p', 'r', 'k')
        params = generator.recipe2(parse_int_list(args.p), parse_int_list(args.r), args.k, M=args.M,
                                   beta_policy=args.beta_policy or 'tight-low', beta=args.beta)
        inst = params.to_instance(name=args.name or 'recipe2')
    else:
        extra = {'slack': args.slack}
        if args.t is not None:
            extra['t'] = args.t
        inst = generator.named_instance(args.family, args.n or 0, extra)
    emit(files.serialize_instance(inst), args.output)
    return EXIT_OK


def cmd_reformulate(args) -> int:
    inst = read_input(args.file)
    service = ReformulationService(ReductionProfile.parse(args.reduction))
    shift = None
    if args.rhs_reduce:
        reduction = service.rhs_reduce(inst)
        inst, shift = reduction.instance, reduction.shift
    if args.method == 'rangespace':
        reform = service.rangespace(inst)
        matrix = reform.U
    else:
        reform = service.ahl(inst)
        matrix = None if isinstance(reform, NoIntegerSolution) else reform.V
        if isinstance(reform, NoIntegerSolution):
            print(reform.describe(), file=sys.stderr)
    emit(files.serialize_bundle(reform, shift), args.output)
    if args.dump_matrix and matrix is not None:
        files.write_matrix(matrix, args.dump_matrix)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = read_input(args.file)
    direction = parse_int_list(args.direction) if args.direction else None
    fixed_order = parse_int_list(args.fixed_order) if args.fixed_order else ()
    order = args.order or ('fixed' if fixed_order else 'most_fractional')
    strategy = BranchStrategy(
        kind=args.branch, order=order, fixed_order=fixed_order, seed=args.seed,
        direction=direction, node_limit=args.node_limit, depth_limit=args.depth_limit,
    )
    objective = parse_int_list(args.objective) if args.objective else None
    solver = BranchAndBoundSolver(keep_trace=bool(args.trace))
    report = solver.solve(inst, strategy, objective)

    row = {'instance': inst.name, 'strategy': strategy.label(), **report.summary()}
    df = pd.DataFrame([row])
    if args.csv:
        df.to_csv(args.csv, index=False)
    if args.trace:
        solver.write_trace(report, args.trace)
    for key, value in df.iloc[0].items():
        print(f"{key}: {value}")
    return EXIT_LIMIT if report.status == STATUS_NODE_LIMIT else EXIT_OK


def cmd_verify(args) -> int:
    inst = read_input(args.file)
    generator = DkpGenerator()
    solver = BranchAndBoundSolver()
    ok = True

    if args.cert:
        p_text, _, k_text = args.cert.partition(':')
        if not k_text.strip().lstrip('-').isdigit():
            raise ParseError("--cert expects p1,...,pn:k")
        p, k = parse_int_list(p_text), int(k_text)
        passed = solver.check_split_certificate(inst, p, k)
        print(f"certificate p={','.join(map(str, p))} k={k}: {'PASS' if passed else 'FAIL'}")
        ok = ok and passed

    if args.frob_bounds:
        params = generator.params_from_instance(inst)
        lower, upper = frob_p_bounds(params.p, params.r, params.M)
        print(f"Frob_p in ({lower}, {upper})")
        if upper - lower == 2 and lower.denominator == 1:
            print(f"Frob_p = {lower + 1}")

    if args.node_lb:
        params = generator.params_from_instance(inst)
        print(f"node lower bound: {generator.node_lower_bound(params)}")

    return EXIT_OK if ok else EXIT_FAILED


def cmd_experiment(args) -> int:
    request = ExperimentRequest(
        table=args.table, n=args.n, count=args.count, seed=args.seed, node_limit=args.node_limit,
        u10=args.u10, run_orig=not args.no_orig, allow_large=args.allow_large,
    )
    service = ExperimentService(workers=args.workers)
    df = service.run(request)
    if args.output:
        service.write_csv(df, args.output)
    else:
        sys.stdout.write(df.to_csv(index=False))
    if args.excel:
        service.export_to_excel(df, args.table, args.excel)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='dkplab', description='Lattice reformulation toolkit for knapsack IPs')
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('gen', help='generate an instance file')
    gen.add_argument('family', choices=('recipe1', 'recipe2') + FAMILIES)
    gen.add_argument('--p')
    gen.add_argument('--r')
    gen.add_argument('--u', help='upper bounds, inf allowed')
    gen.add_argument('--k', type=int)
    gen.add_argument('--M', type=int)
    gen.add_argument('--n', type=int)
    gen.add_argument('--t', type=int)
    gen.add_argument('--beta', type=int)
    gen.add_argument('--beta1', type=int)
    gen.add_argument('--beta2', type=int)
    gen.add_argument('--beta-policy', choices=BETA_POLICIES)
    gen.add_argument('--slack', action='store_true')
    gen.add_argument('--name')
    gen.add_argument('-o', '--output')
    gen.set_defaults(func=cmd_generate)

    ref = sub.add_parser('reformulate', help='write a reformulation bundle')
    ref.add_argument('file')
    ref.add_argument('--method', choices=('rangespace', 'ahl'), default='rangespace')
    ref.add_argument('--reduction', choices=('lll', 'kz'), default='lll')
    ref.add_argument('--rhs-reduce', action='store_true')
    ref.add_argument('--dump-matrix')
    ref.add_argument('-o', '--output')
    ref.set_defaults(func=cmd_reformulate)

    solve = sub.add_parser('solve', help='branch-and-bound on an instance or bundle')
    solve.add_argument('file')
    solve.add_argument('--branch', choices=('variable', 'constraint'), default='variable')
    solve.add_argument('--order', choices=ORDERS)
    solve.add_argument('--fixed-order')
    solve.add_argument('--seed', type=int, default=0)
    solve.add_argument('--direction')
    solve.add_argument('--objective')
    solve.add_argument('--node-limit', type=int)
    solve.add_argument('--depth-limit', type=int)
    solve.add_argument('--csv')
    solve.add_argument('--trace')
    solve.set_defaults(func=cmd_solve)

    verify = sub.add_parser('verify', help='check certificates and bounds')
    verify.add_argument('file')
    verify.add_argument('--cert', help='p1,...,pn:k')
    verify.add_argument('--frob-bounds', action='store_true')
    verify.add_argument('--node-lb', action='store_true')
    verify.set_defaults(func=cmd_verify)

    exp = sub.add_parser('experiment', help='desk-scale node-count tables')
    exp.add_argument('table', choices=TABLES)
    exp.add_argument('--n', type=int, default=10)
    exp.add_argument('--count', type=int, default=5)
    exp.add_argument('--seed', type=int, default=0)
    exp.add_argument('--node-limit', type=int)
    exp.add_argument('--u10', action='store_true')
    exp.add_argument('--no-orig', action='store_true')
    exp.add_argument('--allow-large', action='store_true')
    exp.add_argument('--workers', type=int)
    exp.add_argument('--excel')
    exp.add_argument('-o', '--output')
    exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    setup_logging('DEBUG' if args.verbose else None, stream=sys.stderr)
    try:
        return args.func(args)
    except ParseError as e:
        logger.error(f"Parse error: {e}")
        return EXIT_PARSE
    except GeneratorError as e:
        logger.error(f"Generator constraint violated: {e}")
        return EXIT_GENERATOR
    except (LimitExceeded, TooLarge) as e:
        logger.error(f"Limit exceeded: {e}")
        return EXIT_LIMIT
    except DkpLabError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_FAILED


if __name__ == '__main__':
    sys.exit(main())
