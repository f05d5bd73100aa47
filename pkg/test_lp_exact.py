#!/usr/bin/env python3
"""
Tests for the exact simplex, widths and knapsack relaxation extremes
"""

import math
import unittest
from fractions import Fraction

from utils.errors import AssumptionViolated, DkpLabError, ShapeMismatch, UnboundedWidth
from utils.int_matrix import IntMat
from utils.lp_exact import (
    INFEASIBLE, OPTIMAL, UNBOUNDED, IpInstance, check_ratio_order, iwidth, knapsack_extreme,
    knapsack_extreme_lp, kpeq_width_closed_form, lp_optimize, width
)


def example1():
    return IpInstance.knapsack((21, 19), 106, 113, (6, 6), name='example1')


class LpOptimizeTests(unittest.TestCase):

    def test_example1_extremes(self):
        inst = example1()
        hi = lp_optimize(inst, (1, 1), 'max')
        lo = lp_optimize(inst, (1, 1), 'min')
        self.assertEqual(hi.status, OPTIMAL)
        self.assertEqual(hi.value, Fraction(113, 19))
        self.assertEqual(lo.value, Fraction(106, 21))
        self.assertTrue(inst.contains(hi.point))
        self.assertTrue(inst.contains(lo.point))

    def test_infeasible_toy(self):
        inst = IpInstance(IntMat.from_rows([(1,), (1,)]), (1, None), (None, 0))
        self.assertEqual(lp_optimize(inst, (1,)).status, INFEASIBLE)

    def test_unbounded(self):
        inst = IpInstance(IntMat.row_vector((1, -1)), (0,), (None,))
        self.assertEqual(lp_optimize(inst, (1, 0)).status, UNBOUNDED)

    def test_free_variables(self):
        inst = IpInstance(IntMat.from_rows([(1, 1), (1, -1)]), (-3, -1), (-3, -1))
        outcome = lp_optimize(inst, (0, 0))
        self.assertEqual(outcome.point, (-2, -1))

    def test_redundant_equalities(self):
        inst = IpInstance(IntMat.from_rows([(1, 2), (2, 4), (1, 0)]), (4, 8, 0), (4, 8, 4))
        outcome = lp_optimize(inst, (1, 0), 'max')
        self.assertEqual(outcome.value, 4)
        outcome = lp_optimize(inst, (0, 1), 'max')
        self.assertEqual(outcome.value, 2)

    def test_lo_above_hi_is_rejected(self):
        with self.assertRaises(DkpLabError):
            IpInstance(IntMat.row_vector((1,)), (1,), (0,))

    def test_objective_length(self):
        with self.assertRaises(ShapeMismatch):
            lp_optimize(example1(), (1,))


class WidthTests(unittest.TestCase):

    def test_example1_width(self):
        report = width(example1(), (1, 1))
        self.assertEqual(report.width, Fraction(359, 399))
        self.assertEqual(report.iwidth, 0)
        self.assertTrue(report.bounded)

    def test_box_width(self):
        inst = IpInstance.knapsack((1, 1), 0, 10, (3, 4))
        report = width(inst, (1, 0))
        self.assertEqual((report.min, report.max, report.iwidth), (0, 3, 4))

    def test_empty(self):
        inst = IpInstance(IntMat.from_rows([(1,), (1,)]), (1, None), (None, 0))
        report = width(inst, (1,))
        self.assertTrue(report.empty)
        self.assertEqual(report.iwidth, 0)

    def test_unbounded(self):
        inst = IpInstance(IntMat.row_vector((1, -1)), (0,), (None,))
        self.assertFalse(width(inst, (1, 0)).bounded)
        with self.assertRaises(UnboundedWidth):
            iwidth(inst, (1, 0))


class KnapsackExtremeTests(unittest.TestCase):

    def test_example1_extremes(self):
        self.assertEqual(knapsack_extreme((1, -1), (1, 1), 5, (6, 6), 'max'), 5)
        self.assertEqual(knapsack_extreme((1, -1), (1, 1), 6, (6, 6), 'min'), -6)

    def test_empty_sets(self):
        self.assertEqual(knapsack_extreme((1, 1), (1, 1), -1, (1, 1), 'max'), -math.inf)
        self.assertEqual(knapsack_extreme((1, 1), (1, 1), 3, (1, 1), 'min'), math.inf)

    def test_unbounded_box(self):
        self.assertEqual(knapsack_extreme((30, 28), (1, 1), 9, (None, None), 'max'), 270)
        self.assertEqual(knapsack_extreme((28, -1), (1, 1), 10, (None, None), 'min'), -math.inf)

    def test_matches_lp(self):
        cases = [
            ((3, -2, 5), (2, 1, 4), 7, (2, 3, 1)),
            ((-1, -4), (3, 5), Fraction(11, 2), (4, None)),
            ((2, 2, 1), (1, 1, 1), 2, (1, 1, 1)),
        ]
        for f, p, ell, u in cases:
            for sense in ('max', 'min'):
                self.assertEqual(knapsack_extreme(f, p, ell, u, sense),
                                 knapsack_extreme_lp(f, p, ell, u, sense), (f, p, ell, u, sense))


class ClosedFormTests(unittest.TestCase):

    def test_ratio_order(self):
        self.assertEqual(check_ratio_order((1, 1), (-11, 5)), [-11, 5])
        with self.assertRaises(AssumptionViolated):
            check_ratio_order((1, 1), (5, -11))

    def test_kpeq_width(self):
        p, r, M, beta = (1, 1), (-11, 5), 29, 35
        width_p, widths = kpeq_width_closed_form(p, r, M, beta)
        inst = IpInstance.knapsack((18, 34), beta, beta, (None, None))
        self.assertEqual(width_p, Fraction(140, 153))
        self.assertEqual(width(inst, p).width, width_p)
        self.assertEqual(widths, [Fraction(35, 18), Fraction(35, 34)])
        self.assertEqual(width(inst, (1, 0)).width, widths[0])


if __name__ == '__main__':
    unittest.main()
