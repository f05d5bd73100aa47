"""
Closed-form quantities for decomposable knapsacks a = pM + r.
"""

import heapq
import logging
import math
from fractions import Fraction
from functools import reduce
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

from utils.errors import GcdNotOne, ParallelVectors, TooLarge, EmptyInterval, ShapeMismatch
from utils.lp_exact import knapsack_extreme

logger = logging.getLogger(__name__)

FROBENIUS_MAX_MIN_WEIGHT = 10 ** 6


def ell(p: Sequence[int], k: int) -> int:
    """
    Largest l such that every l-subset F has p(F) <= k and p(N \\ F) >= k + 1.

    Only the l largest entries need checking, so this walks sorted prefix sums.
    """
    total = sum(p)
    if k <= 0 or k >= total:
        return 0
    best, prefix = 0, 0
    for size, v in enumerate(sorted(p, reverse=True), start=1):
        prefix += v
        if prefix <= k and total - prefix >= k + 1:
            best = size
        else:
            break
    return best


def ell_bruteforce(p: Sequence[int], k: int) -> int:
    """Same as ell, by checking every subset"""
    total = sum(p)
    best = 0
    for size in range(1, len(p) + 1):
        if all(sum(F) <= k and total - sum(F) >= k + 1 for F in combinations(p, size)):
            best = size
        else:
            break
    return best


def ratio_spread(p: Sequence[int], r: Sequence[int]) -> Tuple[Fraction, Fraction]:
    """(q_1, q_n): smallest and largest of r_i/p_i"""
    if len(p) != len(r):
        raise ShapeMismatch("p and r must have equal length")
    q = [Fraction(ri, pi) for pi, ri in zip(p, r)]
    q1, qn = min(q), max(q)
    if q1 == qn:
        raise ParallelVectors("p and r are parallel, q_n = q_1")
    return q1, qn


def f_M_delta(p: Sequence[int], r: Sequence[int], M: int, delta: int) -> int:
    """ceil((M + q_1 - delta) / (q_n - q_1)) - 1"""
    q1, qn = ratio_spread(p, r)
    return math.ceil((M + q1 - delta) / (qn - q1)) - 1


def frob_branching_range(p: Sequence[int], r: Sequence[int], M: int) -> Tuple[Fraction, Fraction]:
    """Open interval of right-hand sides whose infeasibility branching on px proves"""
    q1, qn = ratio_spread(p, r)
    f1 = f_M_delta(p, r, M, 1)
    if f1 < 0:
        raise EmptyInterval(f"f(M,1) = {f1} < 0, M = {M} is too small")
    return Fraction(f1) * (M + qn), Fraction(f1 + 1) * (M + q1)


def frob_p_bounds(p: Sequence[int], r: Sequence[int], M: int) -> Tuple[Fraction, Fraction]:
    """Strict lower and upper bounds on the p-branching Frobenius number"""
    q1, qn = ratio_spread(p, r)
    f1 = f_M_delta(p, r, M, 1)
    f0 = f_M_delta(p, r, M, 0)
    if f1 < 0:
        raise EmptyInterval(f"f(M,1) = {f1} < 0, M = {M} is too small")
    return Fraction(f1) * (M + qn), Fraction(f0 + 1) * (M + q1)


def al_frob_lower(p: Sequence[int], r: Sequence[int], M: int,
                  j: Optional[int] = None, k_idx: Optional[int] = None) -> Fraction:
    """
    Earlier lower bound on Frob(a) built from one max-ratio index j and one
    min-ratio index k.
    """
    q = [Fraction(ri, pi) for pi, ri in zip(p, r)]
    if j is None:
        j = max(range(len(q)), key=lambda i: (q[i], -i))
    if k_idx is None:
        k_idx = min(range(len(q)), key=lambda i: (q[i], i))
    denom = p[k_idx] * r[j] - p[j] * r[k_idx]
    if denom == 0:
        raise ParallelVectors(f"p_k r_j = p_j r_k for j={j}, k={k_idx}")
    shift = M + Fraction(r[j], p[j])
    product = M * M * p[j] * p[k_idx] + M * (p[j] * r[k_idx] + p[k_idx] * r[j]) + r[j] * r[k_idx]
    return product * (1 - 2 / shift) / denom - shift


def frobenius_bruteforce(a: Sequence[int]) -> int:
    """
    Frob(a) from shortest paths over residues modulo min(a).

    dist[t] is the smallest representable number congruent to t, so the
    largest non-representable number is max(dist) - min(a).
    """
    if reduce(math.gcd, a) != 1:
        raise GcdNotOne(f"gcd{tuple(a)} != 1")
    base = min(a)
    if base > FROBENIUS_MAX_MIN_WEIGHT:
        raise TooLarge(f"min(a) = {base} exceeds {FROBENIUS_MAX_MIN_WEIGHT}")
    if base == 1:
        return -1
    dist: List[Optional[int]] = [None] * base
    dist[0] = 0
    heap = [(0, 0)]
    while heap:
        d, t = heapq.heappop(heap)
        if d != dist[t]:
            continue
        for w in a:
            nd, nt = d + w, (t + w) % base
            if dist[nt] is None or nd < dist[nt]:
                dist[nt] = nd
                heapq.heappush(heap, (nd, nt))
    return max(dist) - base


def split_condition(a: Sequence[int], beta1, beta2, u: Sequence[Optional[int]],
                    p: Sequence[int], k: int) -> bool:
    """max(a,p,k,u) < beta1 <= beta2 < min(a,p,k+1,u)"""
    if beta1 is None or beta2 is None:
        return False
    upper = knapsack_extreme(a, p, k, u, 'max')
    lower = knapsack_extreme(a, p, k + 1, u, 'min')
    return upper < beta1 <= beta2 < lower


def node_lower_bound_value(p: Sequence[int], k: int, bounded: bool) -> int:
    """2^l(p,k) for binary boxes, C(floor(k/max p) + n - 1, n - 1) for x >= 0 unbounded"""
    if bounded:
        return 2 ** ell(p, k)
    n = len(p)
    return math.comb(k // max(p) + n - 1, n - 1)
