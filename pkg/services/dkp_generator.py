import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from utils.errors import (
    AssumptionViolated, BadDimension, BadRho, EmptyInterval, InvalidK, NotCertified, ShapeMismatch
)
from utils.int_matrix import IntMat, IntVec, norm_sq
from utils.knapsack_bounds import node_lower_bound_value, split_condition
from utils.lattice_core import is_lll_reduced, isqrt_ceil
from utils.lp_exact import IpInstance, Provenance, check_ratio_order, knapsack_extreme

logger = logging.getLogger(__name__)

# example2 is the Jeroslow family under its other name
FAMILY_ALIASES = {'example2': 'jeroslow'}

FAMILIES = ('jeroslow', 'todd', 'avis', 'reverse_avis', 'example1', 'nt_family') + tuple(FAMILY_ALIASES)

BETA_POLICIES = ('widest', 'tight-low', 'largest')

# Search horizon when M is chosen automatically
M_SEARCH_LIMIT = 10 ** 6


@dataclass(frozen=True)
class DkpParams:
    """Decomposable knapsack beta1 <= (pM + r) x <= beta2, 0 <= x <= u"""
    p: IntVec
    r: IntVec
    M: int
    k: int
    u: Tuple[Optional[int], ...]
    beta1: int
    beta2: int

    @property
    def a(self) -> IntVec:
        return tuple(pi * self.M + ri for pi, ri in zip(self.p, self.r))

    @property
    def q(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(ri, pi) for pi, ri in zip(self.p, self.r))

    @property
    def n(self) -> int:
        return len(self.p)

    @property
    def form(self) -> str:
        return 'eq' if self.beta1 == self.beta2 else 'ineq'

    @property
    def provenance(self) -> Provenance:
        return Provenance(p=self.p, r=self.r, M=self.M, k=self.k)

    def to_instance(self, name: str = '') -> IpInstance:
        return IpInstance.knapsack(self.a, self.beta1, self.beta2, self.u, name=name,
                                   provenance=self.provenance)

    def certified(self) -> bool:
        return split_condition(self.a, self.beta1, self.beta2, self.u, self.p, self.k)


@dataclass(frozen=True)
class LllCounterexample:
    """Fixed six-variable knapsack whose reduced kernel basis hides N(p) ∩ N(r)"""
    p: IntVec
    r: IntVec
    M: int
    a: IntVec
    B: IntMat
    v: IntVec

    @property
    def pB(self) -> IntVec:
        return self.B.left_apply(self.p)

    def checks(self) -> Dict[str, bool]:
        completed = IntMat.from_columns(self.B.columns() + [self.v], nrows=len(self.a))
        return {
            'lll_reduced': is_lll_reduced(self.B),
            'unimodular': abs(completed.determinant()) == 1,
            'kernel': not any(self.B.left_apply(self.a)),
        }


@dataclass(frozen=True)
class WideBasisExample:
    """
    LLL-reduced basis with geometrically shrinking Gram-Schmidt norms.

    `exact` is the rational basis scaled by a common denominator so that Q
    keeps its shape; `integral` is the scaled and rounded basis.
    """
    rho: Fraction
    n: int
    scale: int
    exact_columns: List[Tuple[Fraction, ...]]
    exact_instance: IpInstance
    integral: IntMat
    integral_instance: IpInstance


class DkpGenerator:
    """Generators for decomposable knapsacks and the named hard families"""

    def recipe1(self, p: Sequence[int], r: Sequence[int], u: Sequence[Optional[int]], k: int,
                M: Optional[int] = None, beta_policy: str = 'widest',
                beta1: Optional[int] = None, beta2: Optional[int] = None) -> DkpParams:
        """
        Bounded DKP whose infeasibility is proven by px <= k or px >= k+1.

        Args:
            p, r: decomposition a = pM + r, p > 0
            u: upper bounds (None for +inf)
            k: split right-hand side, 0 <= k < pu
            M: multiplier; smallest admissible value when omitted
            beta_policy: 'widest' or 'tight-low'
            beta1, beta2: explicit right-hand sides, validated instead of chosen

        Returns:
            Certified DkpParams
        """
        p, r, u = tuple(p), tuple(r), tuple(u)
        self._check_vectors(p, r, u)
        pu = math.inf if any(ui is None for ui in u) else sum(pi * ui for pi, ui in zip(p, u))
        if not 0 <= k < pu:
            raise InvalidK(f"k = {k} must satisfy 0 <= k < pu = {pu}")
        base_lo = knapsack_extreme(r, p, k, u, 'max')
        base_hi = knapsack_extreme(r, p, k + 1, u, 'min')
        if base_hi == -math.inf:
            raise EmptyInterval("min(r,p,k+1,u) is unbounded below, no right-hand side fits")

        def interval(m):
            return base_lo + k * m, base_hi + (k + 1) * m

        M = self._choose_M(p, r, M, interval)
        lo, hi = interval(M)
        beta1, beta2 = self._pick_betas(lo, hi, beta_policy, beta1, beta2)
        params = DkpParams(p=p, r=r, M=M, k=k, u=u, beta1=beta1, beta2=beta2)
        self._verify(params)
        logger.info(f"Recipe 1 instance: a={params.a}, beta=({beta1}, {beta2}), M={M}, k={k}")
        return params

    def recipe2(self, p: Sequence[int], r: Sequence[int], k: int, M: Optional[int] = None,
                beta_policy: str = 'tight-low', beta: Optional[int] = None) -> DkpParams:
        """Equality DKP over x >= 0 whose infeasibility branching on px proves"""
        p, r = tuple(p), tuple(r)
        u = tuple([None] * len(p))
        self._check_vectors(p, r, u)
        q = check_ratio_order(p, r)
        if q[0] == q[-1]:
            raise AssumptionViolated("p is parallel to r")
        if k < 0:
            raise InvalidK(f"k = {k} must be nonnegative")

        def interval(m):
            lo = k * (m + q[-1])
            return (lo, (k + 1) * (m + q[0])) if lo >= 0 else (lo, lo)

        M = self._choose_M(p, r, M, interval)
        lo, hi = interval(M)
        if lo < 0:
            raise EmptyInterval(f"k(M + q_n) = {lo} < 0")
        policy = 'largest' if beta_policy == 'widest' else beta_policy
        beta1, _ = self._pick_betas(lo, hi, policy, beta, beta)
        params = DkpParams(p=p, r=r, M=M, k=k, u=u, beta1=beta1, beta2=beta1)
        self._verify(params)
        logger.info(f"Recipe 2 instance: a={params.a}, beta={beta1}, M={M}, k={k}")
        return params

    def named_instance(self, family: str, n: int, extra: Optional[Dict] = None) -> IpInstance:
        """
        Named hard instances.

        jeroslow (alias example2): 2·sum(x) = n over binaries (extra 'slack': True adds
        x_{n+1} with -1/2 <= x_{n+1} <= 1/2); todd, avis: binary equality
        knapsacks with rhs floor(sum(a)/2); reverse_avis; example1; nt_family
        (extra 't').
        """
        extra = extra or {}
        if family not in FAMILIES:
            raise BadDimension(f"unknown family {family!r}")
        family = FAMILY_ALIASES.get(family, family)

        if family == 'jeroslow':
            self._require(n >= 1 and n % 2 == 1, family, n, "n must be odd")
            if extra.get('slack'):
                rows = [tuple([2] * n + [1])] + [tuple(int(i == j) for j in range(n + 1)) for i in range(n + 1)]
                lo = [n] + [0] * n + [Fraction(-1, 2)]
                hi = [n] + [1] * n + [Fraction(1, 2)]
                return IpInstance(IntMat.from_rows(rows), tuple(lo), tuple(hi), name=f"jeroslow{n}-slack")
            params = DkpParams(p=(1,) * n, r=(0,) * n, M=2, k=(n - 1) // 2, u=(1,) * n, beta1=n, beta2=n)
            return params.to_instance(name=f"jeroslow{n}")

        if family == 'todd':
            self._require(n >= 1 and n % 2 == 1, family, n, "n must be odd")
            ell_t = (2 * n).bit_length() - 1
            r = tuple(2 ** (ell_t + i) + 1 for i in range(1, n + 1))
            return self._half_sum_instance(f"todd{n}", r, 2 ** (n + ell_t + 1))

        if family == 'avis':
            self._require(n >= 1 and n % 2 == 1, family, n, "n must be odd")
            return self._half_sum_instance(f"avis{n}", tuple(range(1, n + 1)), n * (n + 1))

        if family == 'reverse_avis':
            self._require(n >= 4 and n % 4 == 0, family, n, "n must be a positive multiple of 4")
            k = n * (n + 1) // 4
            M = n // 2 + 2
            beta = 3 * n // 4 + k * M + 1
            params = DkpParams(p=tuple(range(1, n + 1)), r=(1,) * n, M=M, k=k, u=(1,) * n,
                               beta1=beta, beta2=beta)
            return params.to_instance(name=f"reverse_avis{n}")

        if family == 'example1':
            params = DkpParams(p=(1, 1), r=(1, -1), M=20, k=5, u=(6, 6), beta1=106, beta2=113)
            return params.to_instance(name='example1')

        t = int(extra.get('t', 2))
        self._require(n >= 2 and t >= 2, family, n, "n and t must be at least 2")
        beta = n ** (2 * t + 1) + n ** (t + 1) + 1
        params = DkpParams(p=(1,) * n, r=tuple(range(1, n + 1)), M=n ** (t + 1), k=n ** t,
                           u=(None,) * n, beta1=beta, beta2=beta)
        return params.to_instance(name=f"nt{n}_{t}")

    def params_from_instance(self, inst: IpInstance) -> DkpParams:
        """Rebuild DkpParams from a knapsack instance carrying a provenance record"""
        if inst.provenance is None:
            raise NotCertified(f"instance {inst.name!r} carries no provenance")
        view = inst.knapsack_view()
        if view.beta1 is None or view.beta2 is None:
            raise NotCertified("knapsack row needs finite lower and upper right-hand sides")
        prov = inst.provenance
        params = DkpParams(p=prov.p, r=prov.r, M=prov.M, k=prov.k, u=view.u,
                           beta1=int(view.beta1), beta2=int(view.beta2))
        if params.a != tuple(view.a):
            raise NotCertified("provenance does not reproduce the weight row")
        return params

    def node_lower_bound(self, params: DkpParams) -> int:
        """Minimum LP-feasible node count of ordinary branch-and-bound"""
        if not params.certified():
            raise NotCertified(f"(p, k) = ({params.p}, {params.k}) does not certify the instance")
        if all(ui == 1 for ui in params.u):
            return node_lower_bound_value(params.p, params.k, bounded=True)
        if all(ui is None for ui in params.u):
            return node_lower_bound_value(params.p, params.k, bounded=False)
        raise NotCertified("node lower bounds exist for u = e and u = +inf only")

    def large_M_recipe1(self, p: Sequence[int], r: Sequence[int], k: int,
                          u: Sequence[Optional[int]]) -> DkpParams:
        """Recipe 1 with M above 2·sqrt(n)·(||r||+1)^2·||p|| + 1, bounded through integer square roots"""
        M = self.large_M(p, r)
        return self.recipe1(p, r, u, k, M=M)

    def large_M_recipe2(self, p: Sequence[int], r: Sequence[int], k: int) -> DkpParams:
        """Recipe 2 counterpart of large_M_recipe1"""
        return self.recipe2(p, r, k, M=self.large_M(p, r))

    @staticmethod
    def large_M(p: Sequence[int], r: Sequence[int]) -> int:
        n = len(p)
        return 2 * isqrt_ceil(n) * (isqrt_ceil(norm_sq(r)) + 1) ** 2 * isqrt_ceil(norm_sq(p)) + 2

    def counterexample(self, which: str, params: Optional[Dict] = None):
        """
        'al_ex1': fixed six-variable instance with an LLL-reduced kernel basis B of
        N(a) for which no n-2 columns span N(p) ∩ N(r).
        'al_ex2': params rho (Fraction in (sqrt(3)/2, 1), default 9/10), n, scale.
        """
        params = params or {}
        if which == 'al_ex1':
            p = (1, 1, 3, 3, 3, 3)
            r = (-7, -4, -11, -6, -5, -1)
            M = 24
            rows = [
                (1, 0, -3, 1, 0),
                (2, -1, -1, -1, 0),
                (-1, -2, 0, 0, -1),
                (0, 0, 0, 1, 2),
                (-1, 0, 0, -2, 0),
                (1, 2, 1, 1, -1),
            ]
            return LllCounterexample(p=p, r=r, M=M, a=tuple(pi * M + ri for pi, ri in zip(p, r)),
                                     B=IntMat.from_rows(rows), v=(0, -3, 1, 0, 0, 0))
        if which == 'al_ex2':
            return self._wide_basis(Fraction(params.get('rho', Fraction(9, 10))),
                                    int(params.get('n', 3)), int(params.get('scale', 1000)))
        raise BadDimension(f"unknown counterexample {which!r}")

    def _wide_basis(self, rho: Fraction, n: int, scale: int) -> WideBasisExample:
        if not (rho * rho > Fraction(3, 4) and rho < 1):
            raise BadRho(f"rho = {rho} must lie in (sqrt(3)/2, 1)")
        if n < 2:
            raise BadDimension("the wide basis needs n >= 2")
        columns = []
        for i in range(n):
            col = [rho ** j / 2 for j in range(i)] + [rho ** i] + [Fraction(0)] * (n - i - 1)
            columns.append(tuple(col))
        denom = 2 * rho.denominator ** (n - 1)
        exact = IntMat.from_columns([[int(v * denom) for v in col] for col in columns], nrows=n)
        target = tuple([0] * (n - 1) + [1])
        exact_instance = IpInstance(exact, tuple([0] * n), tuple(v * denom for v in target),
                                    name=f"wide{n}-exact")

        halves = [math.floor(scale * rho ** j / 2 + Fraction(1, 2)) for j in range(n)]
        int_columns = [[halves[j] for j in range(i)] + [2 * halves[i]] + [0] * (n - i - 1) for i in range(n)]
        integral = IntMat.from_columns(int_columns, nrows=n)
        integral_instance = IpInstance(integral, tuple([0] * n), tuple(v * scale for v in target),
                                       name=f"wide{n}-scaled")
        return WideBasisExample(rho=rho, n=n, scale=scale, exact_columns=columns,
                                exact_instance=exact_instance, integral=integral,
                                integral_instance=integral_instance)

    # Helpers

    @staticmethod
    def _check_vectors(p: Sequence[int], r: Sequence[int], u: Sequence[Optional[int]]):
        if not (len(p) == len(r) == len(u)) or not p:
            raise ShapeMismatch("p, r and u must be nonempty and of equal length")
        if any(pi <= 0 for pi in p):
            raise AssumptionViolated("p must be positive")
        if any(ui is not None and ui <= 0 for ui in u):
            raise AssumptionViolated("u must be positive or +inf")

    @staticmethod
    def _choose_M(p, r, M, interval) -> int:
        if M is not None:
            if any(pi * M + ri <= 0 for pi, ri in zip(p, r)):
                raise EmptyInterval(f"M = {M} leaves a weight pM + r <= 0")
            return M
        m = max(1, max(math.floor(Fraction(-ri, pi)) + 1 for pi, ri in zip(p, r)))
        while m <= M_SEARCH_LIMIT:
            lo, hi = interval(m)
            if math.floor(lo) + 1 < hi:
                return m
            m += 1
        raise EmptyInterval(f"no M up to {M_SEARCH_LIMIT} opens the right-hand side interval")

    @staticmethod
    def _pick_betas(lo, hi, policy, beta1, beta2) -> Tuple[int, int]:
        first, last = math.floor(lo) + 1, math.ceil(hi) - 1
        if beta1 is not None or beta2 is not None:
            beta1 = beta2 if beta1 is None else beta1
            beta2 = beta1 if beta2 is None else beta2
            if not lo < beta1 <= beta2 < hi:
                raise EmptyInterval(f"beta = ({beta1}, {beta2}) outside the open interval ({lo}, {hi})")
            return int(beta1), int(beta2)
        if first > last:
            raise EmptyInterval(f"open interval ({lo}, {hi}) contains no integer")
        if policy == 'widest':
            return first, last
        if policy == 'tight-low':
            return first, first
        if policy == 'largest':
            return last, last
        raise EmptyInterval(f"unknown beta policy {policy!r}")

    @staticmethod
    def _verify(params: DkpParams):
        if not params.certified():
            raise NotCertified(f"generated instance a={params.a} fails the split condition")

    @staticmethod
    def _require(ok: bool, family: str, n: int, reason: str):
        if not ok:
            raise BadDimension(f"{family} with n={n}: {reason}")

    def _half_sum_instance(self, name: str, r: IntVec, M: int) -> IpInstance:
        n = len(r)
        a = tuple(M + ri for ri in r)
        beta = sum(a) // 2
        params = DkpParams(p=(1,) * n, r=r, M=M, k=n // 2, u=(1,) * n, beta1=beta, beta2=beta)
        return params.to_instance(name=name)
