"""
Lattice algorithms over the columns of an IntMat.

LLL reduction and shortest-vector enumeration run in fpylll; every result
is then size-reduced and checked in exact Fraction arithmetic, so returned
bases satisfy the reduction conditions exactly. Gram-Schmidt, Babai's
nearest plane, the column-style Hermite normal form with kernel and dual
bases, unimodular completion and the brute-force successive minima oracle
are exact throughout.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

from fpylll import FPLLL, GSO, LLL, Enumeration, EnumerationError, IntegerMatrix

from utils.errors import DependentColumns, DimensionCap, RankDeficient, ShapeMismatch, DkpLabError
from utils.int_matrix import IntMat, IntVec, RatVec, canonical_sign, dot, norm_sq
from utils.settings import get_settings

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)

BRUTEFORCE_MAX_COLS = 8
BRUTEFORCE_MAX_COEFF = 20

# fpylll size-reduces to eta = 0.51; the delta margin covers the exact rounding afterwards
FPLLL_ETA = 0.51
FPLLL_DELTA_MARGIN = Fraction(3, 100)
FPLLL_DELTA_CAP = 0.9999
LLL_ATTEMPTS = 4

# Enumeration runs on an mpfr GSO; candidates are re-measured exactly
ENUM_PRECISION = 240
ENUM_SOLUTIONS = 256
ENUM_RADIUS_SLACK = 1.0001

FPLLL.set_precision(ENUM_PRECISION)


@dataclass(frozen=True)
class ReductionProfile:
    """Which reduction to run and with which Lovász parameter"""
    method: str = 'LLL'
    delta: Fraction = Fraction(3, 4)

    def __post_init__(self):
        if self.method not in ('LLL', 'KZ'):
            raise DkpLabError(f"unknown reduction method {self.method!r}")
        if not (Fraction(1, 4) < Fraction(self.delta) <= 1):
            raise DkpLabError(f"delta must lie in (1/4, 1], got {self.delta}")

    @classmethod
    def parse(cls, name: str) -> 'ReductionProfile':
        return cls(method=name.upper())

    def c_n_squared(self, n: int) -> int:
        """Square of the reduction factor: 2^(n-1) for LLL, n for KZ"""
        return 2 ** (n - 1) if self.method == 'LLL' else n

    def c_n_upper(self, n: int) -> int:
        """Smallest integer >= the reduction factor"""
        return isqrt_ceil(self.c_n_squared(n))


@dataclass(frozen=True)
class GramSchmidtData:
    bstar: List[RatVec]
    mu: List[List[Fraction]]
    norms_sq: List[Fraction]


@dataclass(frozen=True)
class HnfResult:
    H: IntMat
    U: IntMat
    W: IntMat
    V: IntMat


@dataclass(frozen=True)
class SuccessiveMinima:
    """
    Successive minima found by exhaustive search in a coefficient box.

    Values are squared norms. They are minima relative to the box only: a
    shorter vector with a coefficient outside the box would be missed, so
    every value is an upper bound on the true minimum.
    """
    lattice_basis: IntMat
    values: List[Fraction]
    witnesses: List[IntVec]
    coeff_bound: int = 0


def isqrt_ceil(value) -> int:
    """Smallest integer s with s*s >= value (value int or Fraction, >= 0)"""
    value = Fraction(value)
    if value <= 0:
        return 0
    s = math.isqrt(math.ceil(value))
    while s * s < value:
        s += 1
    return s


def round_half_up(value: Fraction) -> int:
    return math.floor(value + HALF)


def gram_schmidt(B: IntMat) -> GramSchmidtData:
    """Gram-Schmidt orthogonalization of the columns of B"""
    n = B.ncols
    bstar: List[RatVec] = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    norms: List[Fraction] = []
    for i, b in enumerate(B.columns()):
        v = [Fraction(x) for x in b]
        for j in range(i):
            m = Fraction(dot(b, bstar[j])) / norms[j]
            mu[i][j] = m
            v = [vi - m * bj for vi, bj in zip(v, bstar[j])]
        mu[i][i] = Fraction(1)
        ns = norm_sq(v)
        if ns == 0:
            raise DependentColumns(f"column {i} lies in the span of the previous columns")
        bstar.append(tuple(v))
        norms.append(Fraction(ns))
    return GramSchmidtData(bstar=bstar, mu=mu, norms_sq=norms)


# fpylll stores basis vectors as rows; here they are our columns

def _to_fpylll(basis: List[List[int]]) -> IntegerMatrix:
    return IntegerMatrix.from_matrix([[int(v) for v in vec] for vec in basis])


def _from_fpylll(M: IntegerMatrix) -> List[List[int]]:
    rows = [[0] * M.ncols for _ in range(M.nrows)]
    M.to_matrix(rows)
    return [[int(v) for v in row] for row in rows]


def _identity_columns(n: int) -> List[List[int]]:
    return [[int(i == j) for i in range(n)] for j in range(n)]


def _canonicalize_columns(basis: List[List[int]], ucols: List[List[int]]):
    for j, col in enumerate(basis):
        if canonical_sign(col) != tuple(col):
            basis[j] = [-x for x in col]
            ucols[j] = [-x for x in ucols[j]]


def _pack(basis: List[List[int]], ucols: List[List[int]], nrows: int) -> Tuple[IntMat, IntMat]:
    return IntMat.from_columns(basis, nrows=nrows), IntMat.from_columns(ucols, nrows=len(ucols))


def _size_reduce(basis: List[List[int]], ucols: List[List[int]], nrows: int) -> Tuple[List[List[Fraction]], List[Fraction]]:
    """Exact size reduction in place; returns the updated mu and the (unchanged) ||b_i*||^2"""
    gs = gram_schmidt(IntMat.from_columns(basis, nrows=nrows))
    mu = [list(row) for row in gs.mu]
    for k in range(1, len(basis)):
        for l in range(k - 1, -1, -1):
            if abs(mu[k][l]) <= HALF:
                continue
            q = round_half_up(mu[k][l])
            basis[k] = [x - q * y for x, y in zip(basis[k], basis[l])]
            ucols[k] = [x - q * y for x, y in zip(ucols[k], ucols[l])]
            mu[k][l] -= q
            for i in range(l):
                mu[k][i] -= q * mu[l][i]
    return mu, gs.norms_sq


def _lovasz_holds(mu: List[List[Fraction]], bn: List[Fraction], delta: Fraction) -> bool:
    return all(bn[i] + mu[i][i - 1] ** 2 * bn[i - 1] >= delta * bn[i - 1] for i in range(1, len(bn)))


def lll_reduce(B: IntMat, profile: Optional[ReductionProfile] = None) -> Tuple[IntMat, IntMat]:
    """
    LLL-reduce the columns of B.

    Args:
        B: basis with linearly independent columns
        profile: reduction profile, only delta is used

    Returns:
        (Bred, U) with Bred = B·U and U unimodular
    """
    profile = profile or ReductionProfile()
    delta = Fraction(profile.delta)
    n = B.ncols
    basis = [list(c) for c in B.columns()]
    ucols = _identity_columns(n)
    if n == 0:
        return _pack(basis, ucols, B.nrows)

    fp_delta = min(FPLLL_DELTA_CAP, float(delta + FPLLL_DELTA_MARGIN))
    for attempt in range(LLL_ATTEMPTS):
        A = _to_fpylll(basis)
        T = IntegerMatrix.identity(n)
        LLL.reduction(A, T, delta=fp_delta, eta=FPLLL_ETA)
        transform = _from_fpylll(T)
        basis = _from_fpylll(A)
        ucols = [[sum(t * u[r] for t, u in zip(row, ucols)) for r in range(n)] for row in transform]
        mu, bn = _size_reduce(basis, ucols, B.nrows)
        if _lovasz_holds(mu, bn, delta):
            break
        logger.debug(f"fpylll LLL at delta {fp_delta} missed the exact Lovász test, tightening")
        fp_delta = min(FPLLL_DELTA_CAP, (fp_delta + 1) / 2)
    else:
        raise DkpLabError(f"no exactly {delta}-reduced basis after {LLL_ATTEMPTS} fpylll passes")

    _canonicalize_columns(basis, ucols)
    logger.debug(f"LLL on {B.nrows}x{n} finished after {attempt + 1} fpylll pass(es)")
    return _pack(basis, ucols, B.nrows)


def is_lll_reduced(B: IntMat, delta: Fraction = Fraction(3, 4)) -> bool:
    """Both LLL conditions, checked in exact arithmetic"""
    gs = gram_schmidt(B)
    n = B.ncols
    for i in range(n):
        for j in range(i):
            if abs(gs.mu[i][j]) > HALF:
                return False
    return _lovasz_holds(gs.mu, gs.norms_sq, Fraction(delta))


def _projected_norm(gs: GramSchmidtData, start: int, x: Sequence[int]) -> Fraction:
    """Exact squared norm of sum_j x_j b_{start+j} projected orthogonally to b_0 .. b_{start-1}"""
    end = start + len(x)
    total = Fraction(0)
    for l in range(start, end):
        coord = sum((gs.mu[j][l] * x[j - start] for j in range(l, end)), Fraction(0))
        total += gs.norms_sq[l] * coord * coord
    return total


def _projected_shortest(basis: List[List[int]], gs: GramSchmidtData,
                        start: int, end: int) -> Tuple[Fraction, List[IntVec]]:
    """
    Coefficient vectors over columns start..end-1 whose projection
    orthogonal to the first `start` columns has minimal nonzero norm.

    fpylll enumerates inside a slightly enlarged radius; the minimum and
    its ties are decided on exact norms.
    """
    unit = (1,) + (0,) * (end - start - 1)
    candidates = {unit}
    if end - start > 1:
        M = GSO.Mat(_to_fpylll(basis), float_type='mpfr')
        M.update_gso()
        radius = float(gs.norms_sq[start]) * ENUM_RADIUS_SLACK
        try:
            solutions = Enumeration(M, nr_solutions=ENUM_SOLUTIONS).enumerate(start, end, radius, 0)
        except EnumerationError:
            solutions = []
        for _, coeffs in solutions:
            x = canonical_sign(tuple(int(round(c)) for c in coeffs))
            if any(x):
                candidates.add(x)

    measured = {x: _projected_norm(gs, start, x) for x in candidates}
    best = min(measured.values())
    return best, sorted(x for x, value in measured.items() if value == best)


def _check_cap(n: int):
    cap = get_settings().enum_cap
    if n > cap:
        raise DimensionCap(f"enumeration over {n} columns exceeds the cap of {cap} (DKPLAB_ENUM_CAP)")


def shortest_vector(B: IntMat) -> IntVec:
    """Shortest nonzero vector of L(B); ties go to the lexicographically smallest sign-normalized coefficients"""
    n = B.ncols
    _check_cap(n)
    if n == 0:
        raise DependentColumns("empty basis has no nonzero vector")
    Bred, U = lll_reduce(B)
    _, candidates = _projected_shortest([list(c) for c in Bred.columns()], gram_schmidt(Bred), 0, n)
    coefficients = min(canonical_sign(U.apply(y)) for y in candidates)
    return B.apply(coefficients)


def unimodular_completion(c: Sequence[int]) -> IntMat:
    """Unimodular matrix whose first column is the primitive vector c"""
    res = hnf(IntMat.row_vector(c))
    if res.H[0, 0] != 1:
        raise DkpLabError(f"vector {tuple(c)} is not primitive")
    return res.U.integer_inverse().transpose()


def kz_reduce(B: IntMat, profile: Optional[ReductionProfile] = None) -> Tuple[IntMat, IntMat]:
    """
    Korkine-Zolotarev reduction of the columns of B.

    Each projected column b_i(i) is a shortest vector of the projected
    lattice L_i, found by enumeration, and the result is size-reduced.
    """
    profile = profile or ReductionProfile(method='KZ')
    n = B.ncols
    _check_cap(n)
    Bred, U = lll_reduce(B, ReductionProfile('LLL', profile.delta))
    basis = [list(c) for c in Bred.columns()]
    ucols = [list(c) for c in U.columns()]

    for i in range(n - 1):
        gs = gram_schmidt(IntMat.from_columns(basis, nrows=B.nrows))
        _, candidates = _projected_shortest(basis, gs, i, n)
        c = candidates[0]
        if c[0] == 1 and not any(c[1:]):
            continue
        T = unimodular_completion(c)
        block = basis[i:]
        ublock = ucols[i:]
        for t in range(n - i):
            basis[i + t] = [sum(T[s, t] * block[s][r] for s in range(n - i)) for r in range(B.nrows)]
            ucols[i + t] = [sum(T[s, t] * ublock[s][r] for s in range(n - i)) for r in range(n)]

    if n:
        _size_reduce(basis, ucols, B.nrows)
    _canonicalize_columns(basis, ucols)
    logger.debug(f"KZ on {B.nrows}x{n} finished")
    return _pack(basis, ucols, B.nrows)


def is_kz_reduced(B: IntMat) -> bool:
    """Size-reduced and every projection is a shortest vector of its projected lattice"""
    n = B.ncols
    _check_cap(n)
    gs = gram_schmidt(B)
    if any(abs(gs.mu[i][j]) > HALF for i in range(n) for j in range(i)):
        return False
    basis = [list(c) for c in B.columns()]
    for i in range(n):
        best, _ = _projected_shortest(basis, gs, i, n)
        if best != gs.norms_sq[i]:
            return False
    return True


def reduce_basis(B: IntMat, profile: ReductionProfile) -> Tuple[IntMat, IntMat]:
    if profile.method == 'KZ':
        return kz_reduce(B, profile)
    return lll_reduce(B, profile)


def babai_nearest(B: IntMat, target: Sequence) -> IntVec:
    """
    Nearest-plane coefficients x so that B·x is close to target.

    Rounding is to the nearest integer with exact halves going up.
    """
    if len(target) != B.nrows:
        raise ShapeMismatch(f"target of length {len(target)} against {B.nrows} rows")
    gs = gram_schmidt(B)
    cols = B.columns()
    residual = [Fraction(t) for t in target]
    x = [0] * B.ncols
    for j in reversed(range(B.ncols)):
        c = dot(residual, gs.bstar[j]) / gs.norms_sq[j]
        q = round_half_up(c)
        x[j] = q
        if q:
            residual = [r - q * b for r, b in zip(residual, cols[j])]
    return tuple(x)


def ext_gcd(a: int, b: int) -> Tuple[int, int, int]:
    """(g, x, y) with a*x + b*y = g = gcd(a, b) >= 0"""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def hnf(A: IntMat) -> HnfResult:
    """
    Column-style Hermite normal form.

    Returns H, U with A·U = [H, 0], H lower triangular with positive diagonal
    and entries left of the diagonal reduced into [0, h_ii). The kernel
    columns V are sign-normalized.
    """
    m, n = A.shape
    if m > n:
        raise RankDeficient(f"{m} rows cannot have full row rank over {n} columns")
    cols = [list(c) for c in A.columns()]
    ucols = _identity_columns(n)

    def combine(store, i, j, x, y, a_g, b_g):
        ci, cj = store[i], store[j]
        store[i] = [x * p + y * q for p, q in zip(ci, cj)]
        store[j] = [-b_g * p + a_g * q for p, q in zip(ci, cj)]

    for i in range(m):
        for j in range(i + 1, n):
            if cols[j][i] == 0:
                continue
            a, b = cols[i][i], cols[j][i]
            g, x, y = ext_gcd(a, b)
            combine(cols, i, j, x, y, a // g, b // g)
            combine(ucols, i, j, x, y, a // g, b // g)
        if cols[i][i] == 0:
            raise RankDeficient(f"row {i} is dependent on the rows above it")
        if cols[i][i] < 0:
            cols[i] = [-v for v in cols[i]]
            ucols[i] = [-v for v in ucols[i]]
        d = cols[i][i]
        for j in range(i):
            q = cols[j][i] // d
            if q:
                cols[j] = [p - q * r for p, r in zip(cols[j], cols[i])]
                ucols[j] = [p - q * r for p, r in zip(ucols[j], ucols[i])]

    for j in range(m, n):
        ucols[j] = list(canonical_sign(ucols[j]))

    U = IntMat.from_columns(ucols, nrows=n)
    H = IntMat.from_columns(cols[:m], nrows=m)
    return HnfResult(
        H=H,
        U=U,
        W=U.select_columns(range(m)),
        V=U.select_columns(range(m, n)),
    )


def hnf_particular_solution(res: HnfResult, b: Sequence[int]) -> Tuple[Optional[IntVec], Optional[int], int]:
    """
    Integral x with A·x = b, via forward substitution in H.

    Returns (x, None, 0) on success, or (None, row, residual) naming the
    first row whose divisibility test fails.
    """
    H = res.H
    z: List[int] = []
    for i in range(H.nrows):
        rest = b[i] - sum(H[i, j] * z[j] for j in range(i))
        if rest % H[i, i] != 0:
            return None, i, rest
        z.append(rest // H[i, i])
    return res.W.apply(z), None, 0


def kernel_basis(A: IntMat) -> IntMat:
    """Integer basis of {x : A·x = 0}"""
    return hnf(A).V


def dual_basis(A: IntMat) -> IntMat:
    """Last n-m rows of U^-1, so that V*·V = I"""
    res = hnf(A)
    m = A.nrows
    inverse = res.U.integer_inverse()
    return inverse.select_rows(range(m, A.ncols))


class _Echelon:
    """Incremental linear independence test over the rationals"""

    def __init__(self):
        self.rows: Dict[int, List[Fraction]] = {}

    def add(self, vec: Sequence[int]) -> bool:
        v = [Fraction(x) for x in vec]
        for pivot, row in self.rows.items():
            if v[pivot] != 0:
                f = v[pivot] / row[pivot]
                v = [a - f * b for a, b in zip(v, row)]
        pivot = next((i for i, x in enumerate(v) if x != 0), None)
        if pivot is None:
            return False
        for other_pivot, row in self.rows.items():
            if row[pivot] != 0:
                f = row[pivot] / v[pivot]
                self.rows[other_pivot] = [a - f * b for a, b in zip(row, v)]
        self.rows[pivot] = v
        return True


def successive_minima_bruteforce(B: IntMat, k: int, coeff_bound: int) -> SuccessiveMinima:
    """First k successive minima of L(B) by exhaustive search over coefficients in [-bound, bound]"""
    n = B.ncols
    if n > BRUTEFORCE_MAX_COLS or coeff_bound > BRUTEFORCE_MAX_COEFF:
        raise DimensionCap(
            f"brute force limited to {BRUTEFORCE_MAX_COLS} columns and coefficients up to {BRUTEFORCE_MAX_COEFF}"
        )
    if not 1 <= k <= n:
        raise ShapeMismatch(f"k={k} outside 1..{n}")

    vectors = []
    for coeffs in product(range(-coeff_bound, coeff_bound + 1), repeat=n):
        if canonical_sign(coeffs) != coeffs or not any(coeffs):
            continue
        v = B.apply(coeffs)
        vectors.append((norm_sq(v), canonical_sign(v)))
    vectors.sort()

    echelon = _Echelon()
    values: List[Fraction] = []
    witnesses: List[IntVec] = []
    for nsq, v in vectors:
        if echelon.add(v):
            values.append(Fraction(nsq))
            witnesses.append(v)
            if len(values) == k:
                break
    if len(values) < k:
        raise DependentColumns("basis has fewer than k independent columns")
    return SuccessiveMinima(lattice_basis=B, values=values, witnesses=witnesses, coeff_bound=coeff_bound)
