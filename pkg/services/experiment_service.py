import logging
import math
import os
from dataclasses import dataclass
from datetime import datetime
from functools import reduce
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from services.bnb_solver import STATUS_INFEASIBLE, STATUS_OPTIMAL, BranchAndBoundSolver, BranchStrategy
from services.dkp_generator import DkpGenerator
from services.reformulation_service import NoIntegerSolution, ReformulationService
from utils.errors import DkpLabError, GeneratorError, LimitExceeded, ParallelVectors
from utils.int_matrix import IntMat
from utils.knapsack_bounds import ell, f_M_delta, frob_branching_range, frobenius_bruteforce
from utils.lp_exact import IpInstance, iwidth
from utils.settings import get_settings

logger = logging.getLogger(__name__)

TABLES = ('t1', 't2', 't3')
DEFAULT_M = 10000
# Frobenius oracle is skipped above this smallest weight
FROB_ORACLE_LIMIT = 10 ** 5

CSV_COLUMNS = [
    'index', 'table', 'family', 'n', 'M', 'k', 'beta1', 'beta2', 'ell', 'two_pow_ell',
    'iwidth_p', 'frob', 'orig_nodes', 'orig_status', 'r_nodes', 'r_status',
    'n_nodes', 'n_status', 'px_nodes', 'px_status', 'value',
]
FAMILY_ORDER = ['DKP-INFEAS', 'DKP-OPT', 'DKP-FEAS-MAX', 'DKP-INFEAS-MIN', 'KP-EQ']


@dataclass(frozen=True)
class ExperimentRequest:
    table: str
    n: int
    count: int
    seed: int = 0
    node_limit: Optional[int] = None
    u10: bool = False
    run_orig: bool = True
    allow_large: bool = False
    M: int = DEFAULT_M


def draw_pr(rng: np.random.Generator, n: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """p uniform in [1,10], r uniform in [-10,10]"""
    p = tuple(int(v) for v in rng.integers(1, 11, size=n))
    r = tuple(int(v) for v in rng.integers(-10, 11, size=n))
    return p, r


class ExperimentService:
    """Desk-scale node-count tables over random decomposable knapsacks"""

    def __init__(self, workers: Optional[int] = None):
        self.settings = get_settings()
        self.workers = workers or self.settings.workers

    def run(self, request: ExperimentRequest) -> pd.DataFrame:
        """
        Run every instance of a table and collect one row per (instance, family).

        Rows come back sorted by instance index, whatever order the workers
        finish in.
        """
        if request.table not in TABLES:
            raise DkpLabError(f"unknown table {request.table!r}, expected one of {TABLES}")
        if request.count < 0 or request.n < 1:
            raise DkpLabError("count must be >= 0 and n >= 1")
        guard = self.settings.orig_n_guard
        if request.run_orig and request.n > guard and not request.allow_large:
            raise LimitExceeded(
                f"n = {request.n} exceeds the original-formulation guard {guard}; "
                f"pass the override flag or skip the ORIG column"
            )

        jobs = [(request, i) for i in range(request.count)]
        if self.workers > 1 and len(jobs) > 1:
            logger.info(f"Running {len(jobs)} {request.table} instances on {self.workers} workers")
            with Pool(self.workers) as pool:
                chunks = pool.starmap(run_instance, jobs)
        else:
            chunks = [run_instance(req, i) for req, i in jobs]

        rows = [row for chunk in chunks for row in chunk]
        df = pd.DataFrame(rows, columns=CSV_COLUMNS)
        if not df.empty:
            df['family_rank'] = df['family'].map(FAMILY_ORDER.index)
            df = df.sort_values(['index', 'family_rank']).drop(columns='family_rank').reset_index(drop=True)
        logger.info(f"Experiment {request.table}: {request.count} instances, {len(df)} rows")
        return df

    @staticmethod
    def write_csv(df: pd.DataFrame, path: str) -> str:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        df.to_csv(path, index=False)
        logger.info(f"Experiment table written to {path}")
        return path

    def export_to_excel(self, df: pd.DataFrame, table: str, path: Optional[str] = None) -> str:
        """
        Export an experiment table to an Excel workbook

        Args:
            df: rows from run()
            table: table name used in the default filename
            path: explicit output path

        Returns:
            Path to generated Excel file
        """
        try:
            if path is None:
                exports_dir = self.settings.export_dir
                if not os.path.exists(exports_dir):
                    os.makedirs(exports_dir)
                    logger.info(f"Created exports directory: {exports_dir}")
                timestamp = datetime.now().strftime('%Y%m%d_%H%M%S')
                path = os.path.join(exports_dir, f'{table}_{timestamp}.xlsx')

            with pd.ExcelWriter(path, engine='xlsxwriter') as writer:
                df.to_excel(writer, sheet_name='Results', index=False)
                pd.DataFrame(self.summarize(df)).to_excel(writer, sheet_name='Summary', index=False)

            logger.info(f"Experiment exported to: {path}")
            return path

        except Exception as e:
            logger.error(f"Error exporting experiment to Excel: {str(e)}")
            raise e

    @staticmethod
    def summarize(df: pd.DataFrame) -> List[Dict]:
        """Per-family node statistics"""
        summary = []
        for family in FAMILY_ORDER:
            part = df[df['family'] == family] if not df.empty else df
            if part.empty:
                continue
            entry = {'Family': family, 'Instances': len(part)}
            for column, label in (('orig_nodes', 'ORIG'), ('r_nodes', 'R'), ('n_nodes', 'N'), ('px_nodes', 'px')):
                values = pd.to_numeric(part[column], errors='coerce').dropna()
                entry[f'{label} mean'] = round(float(values.mean()), 1) if len(values) else ''
                entry[f'{label} max'] = int(values.max()) if len(values) else ''
            summary.append(entry)
        return summary


def run_instance(request: ExperimentRequest, index: int) -> List[Dict]:
    """One random instance and all of its family rows; module level so worker processes can pickle it"""
    rng = np.random.default_rng([request.seed, index])
    node_limit = request.node_limit or get_settings().node_limit
    runner = _InstanceRunner(request, node_limit)
    if request.table == 't3':
        return runner.kp_eq_rows(rng, index)
    return runner.bounded_rows(rng, index)


class _InstanceRunner:

    def __init__(self, request: ExperimentRequest, node_limit: int):
        self.request = request
        self.solver = BranchAndBoundSolver(node_limit=node_limit)
        self.reformer = ReformulationService()
        self.generator = DkpGenerator()

    def bounded_rows(self, rng: np.random.Generator, index: int) -> List[Dict]:
        req = self.request
        n = req.n
        p, r = draw_pr(rng, n)
        u = (10 if req.u10 or req.table == 't2' else 1,) * n
        k = n // 2
        try:
            params = self.generator.recipe1(p, r, u, k, M=req.M)
        except GeneratorError as e:
            logger.warning(f"Instance {index} skipped: {e}")
            return []

        depth = ell(p, k)
        base = {
            'index': index, 'table': req.table, 'n': n, 'M': req.M, 'k': k,
            'ell': depth, 'two_pow_ell': 2 ** depth,
        }
        a = params.a
        rows = []

        infeas = params.to_instance(name=f"{req.table}-{index}")
        rows.append(self._row(base, 'DKP-INFEAS', params.beta1, params.beta2, infeas, equality=False))

        opt = IpInstance.knapsack(a, None, params.beta2, u, name=f"{req.table}-{index}-opt")
        opt_row = self._row(base, 'DKP-OPT', '', params.beta2, opt, equality=False, objective=a)
        rows.append(opt_row)

        beta_a = opt_row['value']
        if beta_a == '':
            return rows
        for family, beta in (('DKP-FEAS-MAX', beta_a), ('DKP-INFEAS-MIN', beta_a + 1)):
            inst = IpInstance.knapsack(a, beta, beta, u, name=f"{req.table}-{index}-{family.lower()}")
            rows.append(self._row(base, family, beta, beta, inst, equality=True))
        return rows

    def kp_eq_rows(self, rng: np.random.Generator, index: int) -> List[Dict]:
        req = self.request
        n = req.n
        for _ in range(100):
            p, r = draw_pr(rng, n)
            try:
                lo, hi = frob_branching_range(p, r, req.M)
                break
            except ParallelVectors:
                continue
        else:
            logger.warning(f"Instance {index} skipped: no non-parallel (p, r) drawn")
            return []

        a = tuple(pi * req.M + ri for pi, ri in zip(p, r))
        beta = math.ceil(hi) - 1
        base = {'index': index, 'table': req.table, 'n': n, 'M': req.M,
                'k': f_M_delta(p, r, req.M, 1), 'ell': '', 'two_pow_ell': ''}
        if beta <= lo:
            logger.warning(f"Instance {index}: branching range ({lo}, {hi}) holds no integer")
            return []

        inst = IpInstance.knapsack(a, beta, beta, (None,) * n, name=f"t3-{index}")
        row = self._row(base, 'KP-EQ', beta, beta, inst, equality=True)
        row['iwidth_p'] = iwidth(inst, p)
        if reduce(math.gcd, a) == 1 and min(a) <= FROB_ORACLE_LIMIT:
            row['frob'] = frobenius_bruteforce(a)

        augmented = self._with_px_variable(inst, p)
        strategy = BranchStrategy(order='fixed', fixed_order=(n,) + tuple(range(n)))
        report = self.solver.solve(augmented, strategy)
        row['px_nodes'], row['px_status'] = report.nodes_total, report.status
        return [row]

    def _row(self, base: Dict, family: str, beta1, beta2, inst: IpInstance,
             equality: bool, objective: Optional[Sequence[int]] = None) -> Dict:
        row = {column: '' for column in CSV_COLUMNS}
        row.update(base)
        row.update({'family': family, 'beta1': beta1, 'beta2': beta2})

        if self.request.run_orig:
            report = self.solver.solve(inst, objective=objective)
            row['orig_nodes'], row['orig_status'] = report.nodes_total, report.status
            if report.status == STATUS_OPTIMAL:
                row['value'] = report.value

        reform = self.reformer.rangespace(inst)
        mapped = None if objective is None else self.reformer.map_direction(reform, objective)
        report = self.solver.solve(reform.inst_new, objective=mapped)
        row['r_nodes'], row['r_status'] = report.nodes_total, report.status
        if report.status == STATUS_OPTIMAL:
            row['value'] = report.value

        if equality:
            ahl = self.reformer.ahl(inst, eq_rows=[0])
            if isinstance(ahl, NoIntegerSolution):
                row['n_nodes'], row['n_status'] = 0, STATUS_INFEASIBLE
            else:
                report = self.solver.solve(ahl.inst_new)
                row['n_nodes'], row['n_status'] = report.nodes_total, report.status
        return row

    @staticmethod
    def _with_px_variable(inst: IpInstance, p: Sequence[int]) -> IpInstance:
        """Append z with the row z - px = 0; z is the last variable"""
        rows = [row + (0,) for row in inst.A.rows()]
        rows.append(tuple(-v for v in p) + (1,))
        return IpInstance(IntMat.from_rows(rows), inst.lo + (0,), inst.hi + (0,),
                          name=f"{inst.name}-px")
