import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils.errors import ShapeMismatch, UnboundedDirection, DkpLabError
from utils.int_matrix import IntVec, dot
from utils.knapsack_bounds import split_condition
from utils.lp_exact import INFEASIBLE, UNBOUNDED, IpInstance, LpOutcome, lp_optimize, width

logger = logging.getLogger(__name__)

ORDERS = ('fixed', 'most_fractional', 'random')

STATUS_INFEASIBLE = 'Infeasible'
STATUS_FEASIBLE = 'Feasible'
STATUS_OPTIMAL = 'Optimal'
STATUS_UNBOUNDED = 'Unbounded'
STATUS_NODE_LIMIT = 'NodeLimit'


@dataclass(frozen=True)
class BranchStrategy:
    """
    kind 'variable' splits x_i <= floor(v) / x_i >= floor(v)+1; kind
    'constraint' first enumerates direction·x = t for every integer t in
    the direction's range, then continues with variable branching.
    """
    kind: str = 'variable'
    order: str = 'most_fractional'
    fixed_order: Tuple[int, ...] = ()
    seed: int = 0
    direction: Optional[IntVec] = None
    node_limit: Optional[int] = None
    depth_limit: Optional[int] = None

    def validate(self, n: int):
        if self.kind not in ('variable', 'constraint'):
            raise DkpLabError(f"unknown branching kind {self.kind!r}")
        if self.order not in ORDERS:
            raise DkpLabError(f"unknown branching order {self.order!r}")
        if self.kind == 'constraint' and (self.direction is None or len(self.direction) != n):
            raise ShapeMismatch(f"constraint branching needs a direction of length {n}")
        if any(not 0 <= i < n for i in self.fixed_order):
            raise ShapeMismatch(f"fixed order {self.fixed_order} mentions a variable outside 0..{n - 1}")

    @classmethod
    def ascending(cls, n: int, **kwargs) -> 'BranchStrategy':
        return cls(order='fixed', fixed_order=tuple(range(n)), **kwargs)

    @classmethod
    def descending(cls, n: int, **kwargs) -> 'BranchStrategy':
        return cls(order='fixed', fixed_order=tuple(reversed(range(n))), **kwargs)

    def label(self) -> str:
        if self.kind == 'constraint':
            return f"constraint{tuple(self.direction)}"
        if self.order == 'fixed':
            return f"fixed{self.fixed_order}"
        if self.order == 'random':
            return f"random({self.seed})"
        return self.order


@dataclass
class BnbReport:
    status: str
    nodes_total: int = 0
    nodes_lp_feasible: int = 0
    max_depth: int = 0
    point: Optional[IntVec] = None
    value: Optional[int] = None
    node_limit_hit: bool = False
    depth_limit_hit: bool = False
    trace: List[str] = field(default_factory=list)

    def summary(self) -> Dict:
        return {
            'status': self.status,
            'nodes_total': self.nodes_total,
            'nodes_lp_feasible': self.nodes_lp_feasible,
            'max_depth': self.max_depth,
            'point': ','.join(str(v) for v in self.point) if self.point is not None else '',
            'value': '' if self.value is None else self.value,
        }


@dataclass(frozen=True)
class _Node:
    depth: int
    bounds: Tuple[Tuple[int, Optional[int], Optional[int]], ...]
    direction_value: Optional[int]
    fixing: str


class BranchAndBoundSolver:
    """Depth-first exact branch-and-bound, down child first"""

    def __init__(self, node_limit: Optional[int] = None, keep_trace: bool = False):
        self.node_limit = node_limit
        self.keep_trace = keep_trace

    def solve(self, inst: IpInstance, strategy: Optional[BranchStrategy] = None,
              objective: Optional[Sequence[int]] = None) -> BnbReport:
        """
        Feasibility (objective None) or maximization of objective·x.

        Args:
            inst: instance to solve
            strategy: branching rule and limits
            objective: integral objective to maximize

        Returns:
            BnbReport with status and node statistics
        """
        strategy = strategy or BranchStrategy()
        strategy.validate(inst.n)
        if objective is not None and len(objective) != inst.n:
            raise ShapeMismatch(f"objective of length {len(objective)} against {inst.n} variables")
        node_limit = strategy.node_limit or self.node_limit
        rng = np.random.default_rng(strategy.seed)

        report = BnbReport(status=STATUS_INFEASIBLE)
        best_value: Optional[int] = None
        stack = [_Node(0, (), None, 'root')]

        while stack:
            if node_limit is not None and report.nodes_total >= node_limit:
                report.node_limit_hit = True
                break
            node = stack.pop()
            sub = self._node_instance(inst, node, strategy)
            report.nodes_total += 1
            report.max_depth = max(report.max_depth, node.depth)

            lp, bound = self._node_lp(sub, objective)
            if lp.status == INFEASIBLE:
                self._trace(report, node, 'infeasible', 'prune')
                continue
            report.nodes_lp_feasible += 1

            if bound is not None and best_value is not None and math.floor(bound) <= best_value:
                self._trace(report, node, f'bound {bound}', 'prune')
                continue

            if strategy.kind == 'constraint' and node.direction_value is None:
                children = self._direction_children(sub, node, strategy.direction)
                if children is not None:
                    self._trace(report, node, 'feasible', f'direction {len(children)} children')
                    stack.extend(reversed(children))
                    continue
                logger.warning("Branching direction is unbounded, falling back to variable branching")

            point = lp.point
            fractional = [i for i, v in enumerate(point) if v.denominator != 1]
            if not fractional:
                x = tuple(int(v) for v in point)
                if objective is None:
                    self._trace(report, node, 'integral', 'stop')
                    report.status, report.point = STATUS_FEASIBLE, x
                    break
                if bound is None:
                    self._trace(report, node, 'integral', 'unbounded')
                    report.status, report.point = STATUS_UNBOUNDED, x
                    break
                value = dot(objective, x)
                if best_value is None or value > best_value:
                    best_value, report.point, report.value = value, x, value
                self._trace(report, node, 'integral', f'incumbent {value}')
                continue

            if strategy.depth_limit is not None and node.depth >= strategy.depth_limit:
                report.depth_limit_hit = True
                self._trace(report, node, 'feasible', 'depth limit')
                continue

            i = self._choose(fractional, point, strategy, rng)
            f = math.floor(point[i])
            self._trace(report, node, 'feasible', f'branch x{i}={point[i]}')
            down = self._tighten(node, i, None, f, f'x{i}<={f}')
            up = self._tighten(node, i, f + 1, None, f'x{i}>={f + 1}')
            stack.append(up)
            stack.append(down)

        if report.status in (STATUS_FEASIBLE, STATUS_UNBOUNDED):
            pass
        elif objective is not None and report.point is not None:
            report.status = STATUS_NODE_LIMIT if report.node_limit_hit or report.depth_limit_hit else STATUS_OPTIMAL
        elif report.node_limit_hit or report.depth_limit_hit:
            report.status = STATUS_NODE_LIMIT
        else:
            report.status = STATUS_INFEASIBLE

        logger.info(
            f"B&B {inst.name or 'instance'} [{strategy.label()}]: {report.status}, "
            f"{report.nodes_total} nodes, {report.nodes_lp_feasible} LP-feasible, depth {report.max_depth}"
        )
        return report

    def check_split_certificate(self, inst: IpInstance, p: Sequence[int], k: int) -> bool:
        """Whether px <= k or px >= k+1 proves the knapsack infeasible"""
        view = inst.knapsack_view()
        if len(p) != inst.n:
            raise ShapeMismatch(f"p of length {len(p)} against {inst.n} variables")
        return split_condition(view.a, view.beta1, view.beta2, view.u, p, k)

    def prove_by_constraint(self, inst: IpInstance, p: Sequence[int]) -> Optional[int]:
        """k such that k < px < k+1 on the whole relaxation, or None"""
        report = width(inst, p)
        if report.empty:
            return None
        if not report.bounded:
            raise UnboundedDirection(f"direction {tuple(p)} is unbounded on the relaxation")
        if report.iwidth != 0:
            return None
        k = math.floor(report.max)
        if report.min > k and report.max < k + 1:
            return k
        return None

    def verify_fixings(self, inst: IpInstance, p: Sequence[int], k: int) -> Tuple[int, int]:
        """
        Enumerate node-fixings (x̄, F) of a bounded knapsack with
        sum_F p_i x̄_i <= k and sum_{N\\F} p_i u_i >= k+1.

        Returns (number of such fixings, number whose node LP is feasible).
        """
        view = inst.knapsack_view()
        if any(ui is None for ui in view.u):
            raise ShapeMismatch("fixings can only be enumerated over a finite box")
        n = inst.n
        qualifying = feasible = 0
        for size in range(n + 1):
            for F in combinations(range(n), size):
                free_cap = sum(p[i] * view.u[i] for i in range(n) if i not in F)
                if free_cap < k + 1:
                    continue
                for values in product(*(range(view.u[i] + 1) for i in F)):
                    if sum(p[i] * v for i, v in zip(F, values)) > k:
                        continue
                    qualifying += 1
                    rows = [tuple(int(j == i) for j in range(n)) for i in F]
                    node = inst.with_rows(rows, values, values) if F else inst
                    if lp_optimize(node, [0] * n).status != INFEASIBLE:
                        feasible += 1
        return qualifying, feasible

    @staticmethod
    def write_trace(report: BnbReport, path: str):
        with open(path, 'w') as f:
            f.write('depth\tfixing\tlp\tdecision\n')
            for line in report.trace:
                f.write(line + '\n')

    # Internals

    def _trace(self, report: BnbReport, node: _Node, lp_status: str, decision: str):
        if self.keep_trace:
            report.trace.append(f"{node.depth}\t{node.fixing}\t{lp_status}\t{decision}")

    @staticmethod
    def _node_instance(inst: IpInstance, node: _Node, strategy: BranchStrategy) -> IpInstance:
        rows, lo, hi = [], [], []
        for i, l, h in node.bounds:
            rows.append(tuple(int(j == i) for j in range(inst.n)))
            lo.append(l)
            hi.append(h)
        if node.direction_value is not None:
            rows.append(tuple(strategy.direction))
            lo.append(node.direction_value)
            hi.append(node.direction_value)
        return inst.with_rows(rows, lo, hi) if rows else inst

    @staticmethod
    def _node_lp(sub: IpInstance, objective: Optional[Sequence[int]]) -> Tuple[LpOutcome, Optional[Fraction]]:
        if objective is None:
            return lp_optimize(sub, [0] * sub.n), None
        outcome = lp_optimize(sub, objective, 'max')
        if outcome.status == UNBOUNDED:
            return lp_optimize(sub, [0] * sub.n), None
        return outcome, outcome.value

    @staticmethod
    def _direction_children(sub: IpInstance, node: _Node, direction: Sequence[int]) -> Optional[List[_Node]]:
        report = width(sub, direction)
        if not report.bounded:
            return None
        if report.empty:
            return []
        return [
            _Node(node.depth + 1, node.bounds, t, f'px={t}')
            for t in range(math.ceil(report.min), math.floor(report.max) + 1)
        ]

    @staticmethod
    def _tighten(node: _Node, i: int, lo: Optional[int], hi: Optional[int], label: str) -> _Node:
        bounds = dict((j, (l, h)) for j, l, h in node.bounds)
        old_lo, old_hi = bounds.get(i, (None, None))
        new_lo = lo if old_lo is None or (lo is not None and lo > old_lo) else old_lo
        new_hi = hi if old_hi is None or (hi is not None and hi < old_hi) else old_hi
        bounds[i] = (new_lo, new_hi)
        return _Node(node.depth + 1, tuple((j, l, h) for j, (l, h) in sorted(bounds.items())),
                     node.direction_value, label)

    @staticmethod
    def _choose(fractional: List[int], point: Sequence[Fraction], strategy: BranchStrategy, rng) -> int:
        if strategy.order == 'fixed':
            order = strategy.fixed_order or tuple(range(len(point)))
            chosen = next((i for i in order if i in fractional), None)
            return chosen if chosen is not None else fractional[0]
        if strategy.order == 'random':
            return fractional[int(rng.integers(len(fractional)))]
        half = Fraction(1, 2)
        return min(fractional, key=lambda i: (abs(point[i] - math.floor(point[i]) - half), i))
