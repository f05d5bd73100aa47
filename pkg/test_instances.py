#!/usr/bin/env python3
"""
Tests for the knapsack generators, named families and closed-form bounds
"""

import unittest
from fractions import Fraction

from services.dkp_generator import DkpGenerator, DkpParams
from utils.errors import (
    AssumptionViolated, BadDimension, BadRho, EmptyInterval, GcdNotOne, InvalidK, NotCertified,
    ParallelVectors
)
from utils.int_matrix import norm_sq
from utils.knapsack_bounds import (
    al_frob_lower, ell, f_M_delta, frob_branching_range, frob_p_bounds, frobenius_bruteforce,
    node_lower_bound_value, split_condition
)
from utils.lattice_core import is_lll_reduced
from utils.lp_exact import width


class RecipeTests(unittest.TestCase):

    def setUp(self):
        self.generator = DkpGenerator()

    def test_recipe1_example1(self):
        params = self.generator.recipe1((1, 1), (1, -1), (6, 6), 5, M=20)
        self.assertEqual((params.beta1, params.beta2), (106, 113))
        self.assertEqual(params.a, (21, 19))
        self.assertEqual(params.form, 'ineq')
        self.assertTrue(params.certified())

    def test_recipe1_tight_policy(self):
        params = self.generator.recipe1((1, 1), (1, -1), (6, 6), 5, M=20, beta_policy='tight-low')
        self.assertEqual((params.beta1, params.beta2), (106, 106))
        self.assertEqual(params.form, 'eq')

    def test_recipe1_explicit_betas(self):
        params = self.generator.recipe1((1, 1), (1, -1), (6, 6), 5, M=20, beta1=108, beta2=110)
        self.assertEqual((params.beta1, params.beta2), (108, 110))
        with self.assertRaises(EmptyInterval):
            self.generator.recipe1((1, 1), (1, -1), (6, 6), 5, M=20, beta1=105, beta2=110)

    def test_recipe1_chooses_M(self):
        params = self.generator.recipe1((1, 1), (1, -1), (6, 6), 5)
        self.assertTrue(params.certified())
        self.assertLessEqual(params.M, 20)

    def test_recipe1_errors(self):
        with self.assertRaises(EmptyInterval):
            self.generator.recipe1((1, 1), (1, -1), (6, 6), 5, M=2)
        with self.assertRaises(InvalidK):
            self.generator.recipe1((1, 1), (1, -1), (6, 6), 12, M=20)
        with self.assertRaises(AssumptionViolated):
            self.generator.recipe1((0, 1), (1, -1), (6, 6), 0, M=20)

    def test_recipe2_example8(self):
        params = self.generator.recipe2((1, 1), (-11, 5), 1, M=29)
        self.assertEqual(params.a, (18, 34))
        self.assertEqual((params.beta1, params.beta2), (35, 35))
        self.assertTrue(params.certified())
        self.assertEqual(self.generator.recipe2((1, 1), (-11, 5), 1).M, 29)

    def test_recipe2_errors(self):
        with self.assertRaises(AssumptionViolated):
            self.generator.recipe2((1, 1), (5, -11), 1, M=29)
        with self.assertRaises(AssumptionViolated):
            self.generator.recipe2((1, 2), (3, 6), 1, M=29)
        with self.assertRaises(InvalidK):
            self.generator.recipe2((1, 1), (-11, 5), -1, M=29)

    def test_large_M_instances(self):
        params = self.generator.large_M_recipe1((1, 2, 3), (4, -1, 2), 2, (1, 1, 1))
        self.assertTrue(params.certified())
        self.assertEqual(params.M, DkpGenerator.large_M((1, 2, 3), (4, -1, 2)))
        params = self.generator.large_M_recipe2((2, 1, 1), (-3, 0, 4), 1)
        self.assertTrue(params.certified())


class NamedFamilyTests(unittest.TestCase):

    def setUp(self):
        self.generator = DkpGenerator()

    def test_jeroslow(self):
        inst = self.generator.named_instance('jeroslow', 7)
        view = inst.knapsack_view()
        self.assertEqual(view.a, (2,) * 7)
        self.assertEqual((view.beta1, view.beta2), (7, 7))
        params = self.generator.params_from_instance(inst)
        self.assertEqual(self.generator.node_lower_bound(params), 8)

    def test_jeroslow_slack(self):
        inst = self.generator.named_instance('jeroslow', 5, {'slack': True})
        self.assertEqual(inst.n, 6)
        self.assertEqual(inst.A.row(0), (2, 2, 2, 2, 2, 1))
        self.assertEqual((inst.lo[-1], inst.hi[-1]), (Fraction(-1, 2), Fraction(1, 2)))

    def test_even_jeroslow_rejected(self):
        with self.assertRaises(BadDimension):
            self.generator.named_instance('jeroslow', 6)

    def test_example2_is_jeroslow(self):
        for extra in (None, {'slack': True}):
            alias = self.generator.named_instance('example2', 5, extra)
            direct = self.generator.named_instance('jeroslow', 5, extra)
            self.assertEqual((alias.A, alias.lo, alias.hi, alias.name), (direct.A, direct.lo, direct.hi, direct.name))
        with self.assertRaises(BadDimension):
            self.generator.named_instance('example2', 4)

    def test_todd(self):
        view = self.generator.named_instance('todd', 3).knapsack_view()
        self.assertEqual(view.a, (73, 81, 97))
        self.assertEqual(view.beta1, 125)
        self.assertTrue(split_condition(view.a, view.beta1, view.beta2, view.u, (1, 1, 1), 1))

    def test_avis(self):
        inst = self.generator.named_instance('avis', 5)
        view = inst.knapsack_view()
        self.assertEqual(view.a, (31, 32, 33, 34, 35))
        self.assertEqual(view.beta1, 82)
        self.assertTrue(self.generator.params_from_instance(inst).certified())

    def test_reverse_avis(self):
        inst = self.generator.named_instance('reverse_avis', 8)
        params = self.generator.params_from_instance(inst)
        self.assertEqual((params.M, params.beta1, params.k), (6, 115, 18))
        self.assertTrue(params.certified())
        self.assertEqual(ell(params.p, params.k), 2)
        self.assertEqual(self.generator.node_lower_bound(params), 4)

    def test_nt_family(self):
        inst = self.generator.named_instance('nt_family', 3, {'t': 2})
        params = self.generator.params_from_instance(inst)
        self.assertEqual(params.a, (28, 29, 30))
        self.assertEqual((params.beta1, params.k), (271, 9))
        self.assertEqual(self.generator.node_lower_bound(params), 55)

    def test_node_lower_bound_needs_certificate(self):
        params = DkpParams(p=(1, 1), r=(1, -1), M=20, k=5, u=(1, 1), beta1=21, beta2=21)
        with self.assertRaises(NotCertified):
            self.generator.node_lower_bound(params)

    def test_provenance_required(self):
        inst = self.generator.named_instance('jeroslow', 5, {'slack': True})
        with self.assertRaises(NotCertified):
            self.generator.params_from_instance(inst)


class CounterexampleTests(unittest.TestCase):

    def setUp(self):
        self.generator = DkpGenerator()

    def test_kernel_basis_missing_intersection(self):
        example = self.generator.counterexample('al_ex1')
        self.assertEqual(example.pB, (0, -1, -1, 0, 0))
        checks = example.checks()
        self.assertTrue(checks['kernel'])
        self.assertTrue(checks['unimodular'])
        self.assertTrue(checks['lll_reduced'])

    def test_wide_basis(self):
        rho, n = Fraction(9, 10), 8
        example = self.generator.counterexample('al_ex2', {'rho': rho, 'n': n})
        B = example.exact_instance.A
        self.assertTrue(is_lll_reduced(B))
        norms = [norm_sq(c) for c in B.columns()]
        self.assertEqual(max(norms), norms[-1])
        e_n = tuple([0] * (n - 1) + [1])
        self.assertEqual(width(example.exact_instance, e_n).width, (1 / rho) ** (n - 1))
        self.assertTrue(is_lll_reduced(example.integral))

    def test_bad_rho(self):
        with self.assertRaises(BadRho):
            self.generator.counterexample('al_ex2', {'rho': Fraction(1, 2)})


class BoundTests(unittest.TestCase):

    def test_frob_p_bounds_example8(self):
        self.assertEqual(frob_p_bounds((1, 1), (-11, 5), 29), (34, 36))
        lo, hi = frob_branching_range((1, 1), (-11, 5), 29)
        self.assertTrue(lo < 35 < hi)
        self.assertEqual(f_M_delta((1, 1), (-11, 5), 29, 1), 1)

    def test_frob_p_bounds_too_small_M(self):
        with self.assertRaises(EmptyInterval):
            frob_p_bounds((1, 1), (-11, 5), 12)

    def test_frobenius_oracle(self):
        self.assertEqual(frobenius_bruteforce((2, 3)), 1)
        self.assertEqual(frobenius_bruteforce((3, 5)), 7)
        self.assertEqual(frobenius_bruteforce((6, 9, 20)), 43)
        self.assertEqual(frobenius_bruteforce((1, 7)), -1)
        with self.assertRaises(GcdNotOne):
            frobenius_bruteforce((4, 6))

    def test_frob_p_bounds_below_frobenius(self):
        lower, upper = frob_p_bounds((1, 1), (-11, 5), 30)
        self.assertEqual((lower, upper), (35, 38))
        self.assertLess(lower, frobenius_bruteforce((19, 35)))

    def test_al_frob_lower(self):
        value = al_frob_lower((1, 1), (-11, 5), 29)
        self.assertIsInstance(value, Fraction)
        with self.assertRaises(ParallelVectors):
            al_frob_lower((1, 2), (3, 6), 29)

    def test_node_lower_bound_values(self):
        self.assertEqual(node_lower_bound_value((1,) * 7, 3, bounded=True), 8)
        self.assertEqual(node_lower_bound_value((1, 1, 1), 9, bounded=False), 55)

    def test_ell(self):
        self.assertEqual(ell((1, 2, 3, 4, 5, 6, 7, 8), 18), 2)
        self.assertEqual(ell((1, 1, 1), 0), 0)


if __name__ == '__main__':
    unittest.main()
