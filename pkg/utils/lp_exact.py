"""
Exact rational linear programming over two-sided systems lo <= A x <= hi.

Variables are free; bounds live in the rows. The solver is a dense
two-phase tableau simplex with Bland's rule, so it always terminates and
every number it reports is an exact Fraction.
"""

import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from utils.errors import AssumptionViolated, ShapeMismatch, UnboundedWidth, DkpLabError
from utils.int_matrix import IntMat, IntVec, RatVec, dot

logger = logging.getLogger(__name__)

Bound = Optional[Fraction]
Extreme = Union[Fraction, float]

OPTIMAL = 'Optimal'
INFEASIBLE = 'Infeasible'
UNBOUNDED = 'Unbounded'


def to_fraction(value) -> Bound:
    if value is None:
        return None
    return value if isinstance(value, Fraction) else Fraction(value)


@dataclass(frozen=True)
class Provenance:
    """DKP parameters an instance was generated from"""
    p: IntVec
    r: IntVec
    M: int
    k: int


@dataclass(frozen=True)
class KnapsackView:
    """beta1 <= a x <= beta2, 0 <= x <= u (u entries None for +inf)"""
    a: IntVec
    beta1: Bound
    beta2: Bound
    u: Tuple[Optional[int], ...]

    @property
    def is_equality(self) -> bool:
        return self.beta1 is not None and self.beta1 == self.beta2


@dataclass(frozen=True)
class IpInstance:
    A: IntMat
    lo: Tuple[Bound, ...]
    hi: Tuple[Bound, ...]
    name: str = ''
    provenance: Optional[Provenance] = None

    def __post_init__(self):
        if self.A.nrows < 1:
            raise ShapeMismatch("an instance needs at least one row")
        if len(self.lo) != self.A.nrows or len(self.hi) != self.A.nrows:
            raise ShapeMismatch("lo/hi lengths must match the row count")
        object.__setattr__(self, 'lo', tuple(to_fraction(v) for v in self.lo))
        object.__setattr__(self, 'hi', tuple(to_fraction(v) for v in self.hi))
        for i, (l, h) in enumerate(zip(self.lo, self.hi)):
            if l is not None and h is not None and l > h:
                raise DkpLabError(f"row {i} has lo {l} > hi {h}")

    @classmethod
    def knapsack(cls, a: Sequence[int], beta1, beta2, u: Sequence[Optional[int]],
                 name: str = '', provenance: Optional[Provenance] = None) -> 'IpInstance':
        """Single knapsack row followed by the box rows 0 <= x_i <= u_i"""
        n = len(a)
        if len(u) != n:
            raise ShapeMismatch("u must have one entry per variable")
        rows = [tuple(a)] + [tuple(int(i == j) for j in range(n)) for i in range(n)]
        lo = [beta1] + [0] * n
        hi = [beta2] + list(u)
        return cls(IntMat.from_rows(rows), tuple(lo), tuple(hi), name=name, provenance=provenance)

    @property
    def n(self) -> int:
        return self.A.ncols

    @property
    def m(self) -> int:
        return self.A.nrows

    def equality_rows(self) -> List[int]:
        return [i for i, (l, h) in enumerate(zip(self.lo, self.hi)) if l is not None and l == h]

    def with_rows(self, rows: Sequence[Sequence[int]], lo: Sequence, hi: Sequence) -> 'IpInstance':
        extra = IntMat.from_rows(rows, ncols=self.n)
        return replace(self, A=self.A.stack(extra), lo=self.lo + tuple(lo), hi=self.hi + tuple(hi))

    def contains(self, x: Sequence) -> bool:
        """Whether x satisfies every row exactly"""
        for row, l, h in zip(self.A.rows(), self.lo, self.hi):
            v = dot(row, x)
            if (l is not None and v < l) or (h is not None and v > h):
                return False
        return True

    def knapsack_view(self) -> KnapsackView:
        """Read the instance back as a single-row knapsack with a box"""
        n = self.n
        if self.m != n + 1:
            raise ShapeMismatch("knapsack form needs one weight row plus one box row per variable")
        for i in range(n):
            if self.A.row(i + 1) != tuple(int(i == j) for j in range(n)) or self.lo[i + 1] != 0:
                raise ShapeMismatch(f"row {i + 1} is not the box row 0 <= x_{i} <= u")
        u = []
        for h in self.hi[1:]:
            if h is not None and h.denominator != 1:
                raise ShapeMismatch("box upper bounds must be integral")
            u.append(None if h is None else int(h))
        return KnapsackView(a=self.A.row(0), beta1=self.lo[0], beta2=self.hi[0], u=tuple(u))


@dataclass(frozen=True)
class LpOutcome:
    status: str
    value: Optional[Fraction] = None
    point: Optional[RatVec] = None


@dataclass(frozen=True)
class WidthReport:
    direction: IntVec
    max: Optional[Extreme]
    min: Optional[Extreme]
    width: Optional[Extreme]
    iwidth: Union[int, float]
    empty: bool = False

    @property
    def bounded(self) -> bool:
        return self.empty or (self.max != math.inf and self.min != -math.inf)


class _Tableau:
    """Standard form min c·z, E z = f, z >= 0, f >= 0, solved with Bland's rule"""

    def __init__(self, rows: List[List[Fraction]], basis: List[int], ncols: int):
        self.rows = rows
        self.basis = basis
        self.ncols = ncols
        self.obj: List[Fraction] = []
        self.pivots = 0

    def set_objective(self, cost: Sequence[Fraction]):
        obj = list(cost) + [Fraction(0)]
        for i, row in enumerate(self.rows):
            cb = obj[self.basis[i]]
            if cb != 0:
                obj = [a - cb * b for a, b in zip(obj, row)]
        self.obj = obj

    def pivot(self, r: int, j: int):
        row = self.rows[r]
        pv = row[j]
        row = [v / pv for v in row]
        self.rows[r] = row
        for i, other in enumerate(self.rows):
            if i != r and other[j] != 0:
                f = other[j]
                self.rows[i] = [a - f * b for a, b in zip(other, row)]
        if self.obj and self.obj[j] != 0:
            f = self.obj[j]
            self.obj = [a - f * b for a, b in zip(self.obj, row)]
        self.basis[r] = j
        self.pivots += 1

    def run(self, allowed: int) -> str:
        while True:
            enter = next((j for j in range(allowed) if self.obj[j] < 0), None)
            if enter is None:
                return OPTIMAL
            leave, best = None, None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = row[-1] / a
                    if best is None or ratio < best or (ratio == best and self.basis[i] < self.basis[leave]):
                        leave, best = i, ratio
            if leave is None:
                return UNBOUNDED
            self.pivot(leave, enter)

    def value(self) -> Fraction:
        return -self.obj[-1]

    def primal(self) -> List[Fraction]:
        z = [Fraction(0)] * self.ncols
        for i, j in enumerate(self.basis):
            z[j] = self.rows[i][-1]
        return z


def lp_optimize(inst: IpInstance, c: Sequence[int], sense: str = 'max') -> LpOutcome:
    """
    Optimize c·x over lo <= A x <= hi, x real.

    Args:
        inst: the system
        c: objective direction
        sense: 'max' or 'min'

    Returns:
        LpOutcome with exact value and point when optimal
    """
    n = inst.n
    if len(c) != n:
        raise ShapeMismatch(f"objective of length {len(c)} against {n} variables")

    specs = []
    for row, lo, hi in zip(inst.A.rows(), inst.lo, inst.hi):
        if lo is not None and hi is not None and lo == hi:
            specs.append((row, 0, lo))
            continue
        if hi is not None:
            specs.append((row, 1, hi))
        if lo is not None:
            specs.append((row, -1, lo))

    n_slack = sum(1 for _, s, _ in specs if s != 0)
    slack_start = 2 * n
    art_start = slack_start + n_slack
    needs_art = []
    rows, basis = [], []
    slack_idx = slack_start
    for row, s, rhs in specs:
        sign = -1 if rhs < 0 else 1
        coeffs = [Fraction(sign * a) for a in row] + [Fraction(-sign * a) for a in row]
        coeffs += [Fraction(0)] * n_slack
        basic = None
        if s != 0:
            coeffs[slack_idx] = Fraction(sign * s)
            if sign * s == 1:
                basic = slack_idx
            slack_idx += 1
        rows.append((coeffs, Fraction(sign) * rhs))
        needs_art.append(basic is None)
        basis.append(basic)

    n_art = sum(needs_art)
    ncols = art_start + n_art
    tableau_rows = []
    art = art_start
    for i, (coeffs, rhs) in enumerate(rows):
        full = coeffs + [Fraction(0)] * n_art + [rhs]
        if needs_art[i]:
            full[art] = Fraction(1)
            basis[i] = art
            art += 1
        tableau_rows.append(full)

    tab = _Tableau(tableau_rows, basis, ncols)

    if n_art:
        tab.set_objective([Fraction(0)] * art_start + [Fraction(1)] * n_art)
        tab.run(ncols)
        if tab.value() > 0:
            return LpOutcome(status=INFEASIBLE)
        keep = []
        for i in range(len(tab.rows)):
            if tab.basis[i] >= art_start:
                j = next((j for j in range(art_start) if tab.rows[i][j] != 0), None)
                if j is None:
                    continue
                tab.pivot(i, j)
            keep.append(i)
        tab.rows = [tab.rows[i] for i in keep]
        tab.basis = [tab.basis[i] for i in keep]

    flip = -1 if sense == 'max' else 1
    cost = [Fraction(flip * v) for v in c] + [Fraction(-flip * v) for v in c]
    cost += [Fraction(0)] * (ncols - 2 * n)
    tab.set_objective(cost)
    status = tab.run(art_start)
    if status == UNBOUNDED:
        return LpOutcome(status=UNBOUNDED)

    z = tab.primal()
    point = tuple(z[j] - z[n + j] for j in range(n))
    logger.debug(f"LP {sense} solved in {tab.pivots} pivots")
    return LpOutcome(status=OPTIMAL, value=Fraction(dot(c, point)), point=point)


def width(inst: IpInstance, c: Sequence[int]) -> WidthReport:
    """max - min of c·x over the relaxation, with the integer width"""
    direction = tuple(c)
    hi = lp_optimize(inst, c, 'max')
    if hi.status == INFEASIBLE:
        return WidthReport(direction, None, None, None, 0, empty=True)
    lo = lp_optimize(inst, c, 'min')
    top = math.inf if hi.status == UNBOUNDED else hi.value
    bottom = -math.inf if lo.status == UNBOUNDED else lo.value
    if top == math.inf or bottom == -math.inf:
        return WidthReport(direction, top, bottom, math.inf, math.inf)
    iw = max(0, math.floor(top) - math.ceil(bottom) + 1)
    return WidthReport(direction, top, bottom, top - bottom, iw)


def iwidth(inst: IpInstance, c: Sequence[int]) -> int:
    report = width(inst, c)
    if not report.bounded:
        raise UnboundedWidth(f"direction {tuple(c)} is unbounded on the relaxation")
    return report.iwidth


def _box_lp_instance(p: Sequence[int], ell, u: Sequence[Optional[int]], sense: str) -> IpInstance:
    row_lo, row_hi = (None, ell) if sense == 'max' else (ell, None)
    return IpInstance.knapsack(p, row_lo, row_hi, u)


def knapsack_extreme_lp(f: Sequence[int], p: Sequence[int], ell, u: Sequence[Optional[int]],
                        sense: str) -> Extreme:
    """max{fx | px <= ell, 0 <= x <= u} or min{fx | px >= ell, 0 <= x <= u} through the simplex"""
    outcome = lp_optimize(_box_lp_instance(p, ell, u, sense), f, sense)
    if outcome.status == INFEASIBLE:
        return -math.inf if sense == 'max' else math.inf
    if outcome.status == UNBOUNDED:
        return math.inf if sense == 'max' else -math.inf
    return outcome.value


def knapsack_extreme(f: Sequence[int], p: Sequence[int], ell, u: Sequence[Optional[int]],
                     sense: str) -> Extreme:
    """
    Knapsack relaxation extremes used by the recipes and certificates.

    sense 'max': max{fx | px <= ell, 0 <= x <= u}
    sense 'min': min{fx | px >= ell, 0 <= x <= u}

    Empty feasible sets give -inf for max and +inf for min. With p > 0 the
    fractional greedy answer is exact; anything else goes through the LP.
    """
    if len(f) != len(p) or len(u) != len(p):
        raise ShapeMismatch("f, p and u must have equal length")
    if any(v <= 0 for v in p):
        return knapsack_extreme_lp(f, p, ell, u, sense)
    ell = Fraction(ell)
    n = len(p)

    if sense == 'max':
        if ell < 0:
            return -math.inf
        order = sorted((i for i in range(n) if f[i] > 0), key=lambda i: (-Fraction(f[i], p[i]), i))
        value, cap = Fraction(0), ell
        for i in order:
            if cap <= 0:
                break
            take = cap / p[i] if u[i] is None else min(Fraction(u[i]), cap / p[i])
            value += f[i] * take
            cap -= p[i] * take
        return value

    value, need = Fraction(0), ell
    for i in range(n):
        if f[i] < 0:
            if u[i] is None:
                return -math.inf
            value += f[i] * u[i]
            need -= p[i] * u[i]
    if need <= 0:
        return value
    order = sorted((i for i in range(n) if f[i] >= 0), key=lambda i: (Fraction(f[i], p[i]), i))
    for i in order:
        take = need / p[i] if u[i] is None else min(Fraction(u[i]), need / p[i])
        value += f[i] * take
        need -= p[i] * take
        if need <= 0:
            return value
    return math.inf


def check_ratio_order(p: Sequence[int], r: Sequence[int]):
    """Ratios r_i/p_i must be nondecreasing"""
    q = [Fraction(ri, pi) for pi, ri in zip(p, r)]
    if any(q[i] > q[i + 1] for i in range(len(q) - 1)):
        raise AssumptionViolated(f"ratios r_i/p_i are not nondecreasing: {[str(x) for x in q]}")
    return q


def kpeq_width_closed_form(p: Sequence[int], r: Sequence[int], M: int, beta) -> Tuple[Fraction, List[Fraction]]:
    """
    Widths of the equality knapsack ax = beta, x >= 0, a = pM + r.

    Returns (width along p, [width along e_i for each i]).
    """
    check_ratio_order(p, r)
    a = [pi * M + ri for pi, ri in zip(p, r)]
    if any(v <= 0 for v in a):
        raise AssumptionViolated("weights a = pM + r must be positive")
    beta = Fraction(beta)
    width_p = beta * (p[0] * r[-1] - p[-1] * r[0]) / (a[0] * a[-1])
    return width_p, [beta / ai for ai in a]
