import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from utils.errors import ReformulationError, ShapeMismatch
from utils.int_matrix import IntMat, IntVec, dot
from utils.lattice_core import (
    ReductionProfile, babai_nearest, hnf, hnf_particular_solution, lll_reduce, reduce_basis
)
from utils.lp_exact import IpInstance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RangespaceReform:
    """x = U y; rows of the new instance are A·U with the original bounds"""
    U: IntMat
    inst_new: IpInstance
    profile: ReductionProfile
    c_new: Optional[IntVec] = None

    def to_original(self, y: Sequence) -> tuple:
        return self.U.apply(y)


@dataclass(frozen=True)
class AhlReform:
    """x = V λ + x_b over the kernel lattice of the equality block"""
    V: IntMat
    x_b: IntVec
    V_star: IntMat
    inst_new: IpInstance
    profile: ReductionProfile
    eq_rows: Tuple[int, ...]

    def to_original(self, lam: Sequence) -> tuple:
        return tuple(v + xb for v, xb in zip(self.V.apply(lam), self.x_b))


@dataclass(frozen=True)
class NoIntegerSolution:
    """The equality block has no integral solution: the HNF divisibility test fails at `row`"""
    row: int
    diagonal: int
    residual: Fraction

    def describe(self) -> str:
        return (f"equality row {self.row}: residual {self.residual} is not divisible "
                f"by HNF diagonal {self.diagonal}, no integer solution")


@dataclass(frozen=True)
class RhsReduction:
    """Shifted instance; old solutions are new solutions plus `shift`"""
    instance: IpInstance
    shift: IntVec


Reform = Union[RangespaceReform, AhlReform]


class ReformulationService:
    """Lattice preconditioning of integer programs"""

    def __init__(self, profile: Optional[ReductionProfile] = None):
        self.profile = profile or ReductionProfile()

    def rangespace(self, inst: IpInstance, profile: Optional[ReductionProfile] = None) -> RangespaceReform:
        """
        Replace lo <= A x <= hi with lo <= (A U) y <= hi.

        Args:
            inst: instance whose constraint matrix has full column rank
            profile: reduction to run on the columns of A

        Returns:
            RangespaceReform holding U and the new instance
        """
        profile = profile or self.profile
        reduced, U = reduce_basis(inst.A, profile)
        inst_new = replace(inst, A=reduced, name=self._derived_name(inst, 'rangespace'))
        logger.info(f"Rangespace reformulation ({profile.method}) of {inst.m}x{inst.n} instance done")
        return RangespaceReform(U=U, inst_new=inst_new, profile=profile)

    def ahl(self, inst: IpInstance, eq_rows: Optional[Sequence[int]] = None,
            profile: Optional[ReductionProfile] = None) -> Union[AhlReform, NoIntegerSolution]:
        """
        Parametrize the integer solutions of the equality rows as V λ + x_b
        and restate every other row over λ.

        Returns a NoIntegerSolution certificate instead when the equality
        block has no integral solution at all.
        """
        profile = profile or self.profile
        eq_rows = tuple(inst.equality_rows() if eq_rows is None else eq_rows)
        if not eq_rows:
            raise ReformulationError("AHL reformulation needs at least one equality row")
        rhs: List[int] = []
        for i in eq_rows:
            lo, hi = inst.lo[i], inst.hi[i]
            if lo is None or lo != hi:
                raise ReformulationError(f"row {i} is not an equality")
            if lo.denominator != 1:
                logger.info(f"Equality row {i} has fractional right-hand side {lo}")
                return NoIntegerSolution(row=i, diagonal=1, residual=lo)
            rhs.append(int(lo))

        A1 = inst.A.select_rows(eq_rows)
        res = hnf(A1)
        x_b, failed, residual = hnf_particular_solution(res, rhs)
        if x_b is None:
            certificate = NoIntegerSolution(
                row=eq_rows[failed],
                diagonal=res.H[failed, failed],
                residual=Fraction(residual)
            )
            logger.info(f"AHL gcd test failed: {certificate.describe()}")
            return certificate

        n, m = inst.n, len(eq_rows)
        dual = res.U.integer_inverse().select_rows(range(m, n))
        if res.V.ncols:
            V, T = reduce_basis(res.V, profile)
            V_star = T.integer_inverse().matmul(dual)
            shift = babai_nearest(V, x_b)
            x_b = tuple(x - v for x, v in zip(x_b, V.apply(shift)))
        else:
            V, V_star = res.V, dual

        rows, lo, hi = [], [], []
        for i in range(inst.m):
            if i in eq_rows:
                continue
            row = inst.A.row(i)
            offset = dot(row, x_b)
            rows.append(V.left_apply(row))
            lo.append(None if inst.lo[i] is None else inst.lo[i] - offset)
            hi.append(None if inst.hi[i] is None else inst.hi[i] - offset)
        if not rows:
            rows, lo, hi = [tuple([0] * V.ncols)], [None], [None]

        inst_new = IpInstance(
            IntMat.from_rows(rows, ncols=V.ncols), tuple(lo), tuple(hi),
            name=self._derived_name(inst, 'ahl'), provenance=inst.provenance
        )
        logger.info(f"AHL reformulation ({profile.method}) done: {n} variables -> {V.ncols} lattice coordinates")
        return AhlReform(V=V, x_b=x_b, V_star=V_star, inst_new=inst_new, profile=profile, eq_rows=eq_rows)

    def rhs_reduce(self, inst: IpInstance, profile: Optional[ReductionProfile] = None) -> RhsReduction:
        """
        Shift the right-hand side by a nearby lattice point.

        The system is read as F y <= f; Babai's nearest plane on a reduced
        copy of F gives x_r, and the instance becomes lo - A x_r <= A y' <= hi - A x_r.
        """
        profile = profile or self.profile
        f_rows, f_rhs = [], []
        for row, lo, hi in zip(inst.A.rows(), inst.lo, inst.hi):
            if hi is not None:
                f_rows.append(row)
                f_rhs.append(hi)
            if lo is not None:
                f_rows.append(tuple(-v for v in row))
                f_rhs.append(-lo)
        F = IntMat.from_rows(f_rows, ncols=inst.n)
        reduced, T = lll_reduce(F, ReductionProfile('LLL', profile.delta))
        x_r = T.apply(babai_nearest(reduced, f_rhs))

        offsets = inst.A.apply(x_r)
        lo = tuple(None if l is None else l - o for l, o in zip(inst.lo, offsets))
        hi = tuple(None if h is None else h - o for h, o in zip(inst.hi, offsets))
        logger.info(f"Right-hand side reduction shift: {x_r}")
        return RhsReduction(
            instance=replace(inst, lo=lo, hi=hi, name=self._derived_name(inst, 'rhs')),
            shift=tuple(x_r)
        )

    def direct_opt_reform(self, c: Sequence[int], inst: IpInstance,
                          profile: Optional[ReductionProfile] = None) -> Tuple[IntVec, RangespaceReform]:
        """Reduce the columns of (c; A) together; returns (cU, reform)"""
        profile = profile or self.profile
        if len(c) != inst.n:
            raise ShapeMismatch(f"objective of length {len(c)} against {inst.n} variables")
        stacked = IntMat.row_vector(c).stack(inst.A)
        reduced, U = reduce_basis(stacked, profile)
        c_new = reduced.row(0)
        inst_new = replace(inst, A=reduced.select_rows(range(1, reduced.nrows)),
                           name=self._derived_name(inst, 'opt'))
        logger.info(f"Direct optimization reformulation done, new objective {c_new}")
        return c_new, RangespaceReform(U=U, inst_new=inst_new, profile=profile, c_new=c_new)

    def map_direction(self, reform: Reform, vec: Sequence[int], which: str = 'forward') -> IntVec:
        """
        Carry a direction across a reformulation.

        forward: c -> cU (rangespace) or c -> cV (AHL)
        reverse: d -> dV* (AHL only)
        """
        if which == 'forward':
            matrix = reform.U if isinstance(reform, RangespaceReform) else reform.V
            return matrix.left_apply(vec)
        if which == 'reverse':
            if not isinstance(reform, AhlReform):
                raise ReformulationError("reverse direction map exists only for AHL reformulations")
            return reform.V_star.left_apply(vec)
        raise ReformulationError(f"unknown direction map {which!r}")

    @staticmethod
    def _derived_name(inst: IpInstance, suffix: str) -> str:
        return f"{inst.name}/{suffix}" if inst.name else suffix
