#!/usr/bin/env python3
"""
Tests for the instance/bundle text formats and the dkplab command line
"""

import io
import os
import shutil
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout

import pandas as pd

import cli
from services.dkp_generator import DkpGenerator
from services.experiment_service import CSV_COLUMNS
from services.instance_file_service import InstanceFileService
from services.reformulation_service import ReformulationService
from utils.errors import ParseError
from utils.lp_exact import IpInstance

EXAMPLE1_TEXT = """dkp-instance v1
name example1
form ineq
n 2
a 21 19
beta1 106
beta2 113
u 6 6
p 1 1
r 1 -1
M 20
k 5
"""


class InstanceFormatTests(unittest.TestCase):

    def setUp(self):
        self.files = InstanceFileService()
        self.generator = DkpGenerator()

    def test_example1_canonical_text(self):
        inst = self.generator.named_instance('example1', 2)
        self.assertEqual(self.files.serialize_instance(inst), EXAMPLE1_TEXT)
        parsed = self.files.parse_instance(EXAMPLE1_TEXT)
        self.assertEqual(parsed, inst)
        self.assertEqual(self.files.serialize_instance(parsed), EXAMPLE1_TEXT)

    def test_equality_form(self):
        inst = self.generator.named_instance('nt_family', 3, {'t': 2})
        text = self.files.serialize_instance(inst)
        self.assertIn('form eq\n', text)
        self.assertIn('beta 271\n', text)
        self.assertIn('u inf inf inf\n', text)
        self.assertEqual(self.files.parse_instance(text), inst)

    def test_general_form(self):
        inst = self.generator.named_instance('jeroslow', 5, {'slack': True})
        text = self.files.serialize_instance(inst)
        self.assertTrue(text.startswith('ip-instance v1\n'))
        self.assertIn('lo 5 0 0 0 0 0 -1/2\n', text)
        parsed = self.files.parse_instance(text)
        self.assertEqual((parsed.A, parsed.lo, parsed.hi), (inst.A, inst.lo, inst.hi))
        self.assertEqual(self.files.serialize_instance(parsed), text)

    def test_infinite_bounds(self):
        text = 'ip-instance v1\nn 1\nm 2\nA\n1\n1\nlo 1 -inf\nhi inf 0\n'
        inst = self.files.parse_instance(text)
        self.assertEqual(inst.lo, (1, None))
        self.assertEqual(inst.hi, (None, 0))

    def test_parse_errors(self):
        bad = [
            '',
            'something else\nn 2\n',
            EXAMPLE1_TEXT.replace('n 2\n', 'n 2\nn 2\n'),
            EXAMPLE1_TEXT.replace('u 6 6\n', ''),
            EXAMPLE1_TEXT.replace('M 20\n', ''),
            EXAMPLE1_TEXT.replace('a 21 19', 'a 21 x'),
            EXAMPLE1_TEXT.replace('form ineq', 'form maybe'),
            'ip-instance v1\nn 1\nm 2\nA\n1\nlo 0 0\nhi 1 1\n',
            'ip-instance v1\nn 1\nm 1\nA\n1\nlo zero\nhi 1\n',
            EXAMPLE1_TEXT.replace('beta1 106', 'beta1 abc'),
            EXAMPLE1_TEXT.replace('u 6 6', 'u 6 x'),
            EXAMPLE1_TEXT.replace('M 20', 'M twenty'),
            EXAMPLE1_TEXT.replace('n 2', 'n two'),
            'dkp-instance v1\nform eq\nn 1\na 3\nbeta 1.5\nu 2\n',
            'ip-instance v1\nn 1\nm 2\nA\n1\nx\nlo 0 0\nhi 1 1\n',
            'ip-instance v1\nn 1\nm two\nA\n1\nlo 0\nhi 1\n',
        ]
        for text in bad:
            with self.assertRaises(ParseError, msg=text):
                self.files.parse_instance(text)

    def test_indented_comment_is_skipped(self):
        text = EXAMPLE1_TEXT.replace('n 2\n', 'n 2\n   # weights\n\t# follow\n')
        self.assertEqual(self.files.parse_instance(text).A, self.files.parse_instance(EXAMPLE1_TEXT).A)


class BundleFormatTests(unittest.TestCase):

    def setUp(self):
        self.files = InstanceFileService()
        self.service = ReformulationService()

    def test_rangespace_bundle(self):
        inst = DkpGenerator().named_instance('example1', 2)
        reform = self.service.rangespace(inst)
        bundle = self.files.parse_bundle(self.files.serialize_bundle(reform))
        self.assertEqual(bundle.method, 'rangespace')
        self.assertEqual(bundle.reduction, 'LLL')
        self.assertEqual(bundle.U, reform.U)
        self.assertEqual(bundle.instance.A, reform.inst_new.A)
        self.assertEqual(bundle.instance.hi, reform.inst_new.hi)

    def test_ahl_bundle(self):
        inst = IpInstance.knapsack((6, 10, 15), 31, 31, (5, 5, 5), name='kp')
        reform = self.service.ahl(inst)
        bundle = self.files.parse_bundle(self.files.serialize_bundle(reform, shift=(0, 0, 0)))
        self.assertEqual(bundle.method, 'ahl')
        self.assertEqual((bundle.V, bundle.x_b, bundle.V_star), (reform.V, reform.x_b, reform.V_star))
        self.assertEqual(bundle.shift, (0, 0, 0))

    def test_certificate_bundle(self):
        inst = DkpGenerator().named_instance('jeroslow', 7)
        bundle = self.files.parse_bundle(self.files.serialize_bundle(self.service.ahl(inst)))
        self.assertIsNone(bundle.instance)
        self.assertEqual(bundle.certificate, {'row': '0', 'diagonal': '2', 'residual': '7'})

    def test_missing_reform_section(self):
        with self.assertRaises(ParseError):
            self.files.parse_bundle(EXAMPLE1_TEXT)

    def test_malformed_reform_line(self):
        with self.assertRaises(ParseError):
            self.files.parse_bundle(EXAMPLE1_TEXT + '[reform]\nmethod\n')


class CommandLineTests(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def path(self, name):
        return os.path.join(self.tmp, name)

    def run_cli(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = cli.main(list(argv))
        return code, out.getvalue()

    def generate(self, name, *argv):
        code, _ = self.run_cli('gen', *argv, '-o', self.path(name))
        self.assertEqual(code, cli.EXIT_OK)
        return self.path(name)

    def test_generate_example1(self):
        path = self.generate('ex1.dkp', 'example1')
        with open(path) as f:
            self.assertEqual(f.read(), EXAMPLE1_TEXT)

    def test_generate_recipe1_matches_example1(self):
        path = self.generate('r1.dkp', 'recipe1', '--p', '1,1', '--r', '1,-1', '--u', '6,6',
                             '--k', '5', '--M', '20', '--name', 'example1')
        with open(path) as f:
            self.assertEqual(f.read(), EXAMPLE1_TEXT)

    def test_generate_to_stdout(self):
        code, out = self.run_cli('gen', 'jeroslow', '--n', '5')
        self.assertEqual(code, cli.EXIT_OK)
        self.assertIn('a 2 2 2 2 2\n', out)

    def test_generator_errors(self):
        self.assertEqual(self.run_cli('gen', 'jeroslow', '--n', '6')[0], cli.EXIT_GENERATOR)
        code, _ = self.run_cli('gen', 'recipe1', '--p', '1,1', '--r', '1,-1', '--u', '6,6', '--k', '5', '--M', '2')
        self.assertEqual(code, cli.EXIT_GENERATOR)

    def test_parse_errors(self):
        self.assertEqual(self.run_cli('gen', 'recipe1', '--p', '1,1')[0], cli.EXIT_PARSE)
        self.assertEqual(self.run_cli('gen', 'recipe1', '--p', '1,1', '--r', '1,-1', '--u', 'six',
                                      '--k', '5')[0], cli.EXIT_PARSE)
        self.assertEqual(self.run_cli('solve', self.path('missing.dkp'))[0], cli.EXIT_PARSE)
        bad = self.path('bad.dkp')
        with open(bad, 'w') as f:
            f.write(EXAMPLE1_TEXT.replace('beta1 106', 'beta1 abc'))
        self.assertEqual(self.run_cli('solve', bad)[0], cli.EXIT_PARSE)

    def test_reformulate_and_solve(self):
        source = self.generate('ex1.dkp', 'example1')
        bundle = self.path('ex1.bundle')
        code, _ = self.run_cli('reformulate', source, '-o', bundle, '--dump-matrix', self.path('U.txt'))
        self.assertEqual(code, cli.EXIT_OK)
        self.assertTrue(os.path.exists(self.path('U.txt')))

        code, out = self.run_cli('solve', bundle, '--branch', 'constraint', '--direction', '0,1')
        self.assertEqual(code, cli.EXIT_OK)
        self.assertIn('status: Infeasible\n', out)
        self.assertIn('nodes_total: 1\n', out)

    def test_ahl_certificate(self):
        source = self.generate('j7.dkp', 'jeroslow', '--n', '7')
        bundle = self.path('j7.bundle')
        code, _ = self.run_cli('reformulate', source, '--method', 'ahl', '-o', bundle)
        self.assertEqual(code, cli.EXIT_OK)
        with open(bundle) as f:
            self.assertIn('[certificate]', f.read())
        self.assertEqual(self.run_cli('solve', bundle)[0], cli.EXIT_PARSE)

    def test_solve_outputs(self):
        source = self.generate('j5.dkp', 'jeroslow', '--n', '5')
        csv_path = self.path('solve.csv')
        trace_path = self.path('trace.tsv')
        code, out = self.run_cli('solve', source, '--fixed-order', '0,1,2,3,4', '--csv', csv_path,
                                 '--trace', trace_path)
        self.assertEqual(code, cli.EXIT_OK)
        self.assertIn('strategy: fixed(0, 1, 2, 3, 4)\n', out)
        df = pd.read_csv(csv_path)
        self.assertEqual(df.loc[0, 'status'], 'Infeasible')
        with open(trace_path) as f:
            self.assertEqual(len(f.read().splitlines()), df.loc[0, 'nodes_total'] + 1)

    def test_solve_node_limit(self):
        source = self.generate('j9.dkp', 'jeroslow', '--n', '9')
        code, out = self.run_cli('solve', source, '--node-limit', '3')
        self.assertEqual(code, cli.EXIT_LIMIT)
        self.assertIn('status: NodeLimit\n', out)

    def test_verify_certificate(self):
        source = self.generate('ex1.dkp', 'example1')
        code, out = self.run_cli('verify', source, '--cert', '1,1:5')
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(out, 'certificate p=1,1 k=5: PASS\n')
        code, out = self.run_cli('verify', source, '--cert', '1,1:4')
        self.assertEqual(code, cli.EXIT_FAILED)
        self.assertIn('FAIL', out)
        self.assertEqual(self.run_cli('verify', source, '--cert', '1,1')[0], cli.EXIT_PARSE)

    def test_verify_frobenius_bounds(self):
        source = self.generate('ex8.dkp', 'recipe2', '--p', '1,1', '--r', '-11,5', '--k', '1', '--M', '29')
        code, out = self.run_cli('verify', source, '--frob-bounds')
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(out, 'Frob_p in (34, 36)\nFrob_p = 35\n')

    def test_verify_node_lower_bound(self):
        source = self.generate('j7.dkp', 'jeroslow', '--n', '7')
        code, out = self.run_cli('verify', source, '--node-lb')
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(out, 'node lower bound: 8\n')

    def test_verify_without_provenance(self):
        source = self.generate('js.ip', 'jeroslow', '--n', '5', '--slack')
        self.assertEqual(self.run_cli('verify', source, '--node-lb')[0], cli.EXIT_GENERATOR)

    def test_empty_experiment(self):
        csv_path = self.path('t1.csv')
        code, _ = self.run_cli('experiment', 't1', '--count', '0', '-o', csv_path)
        self.assertEqual(code, cli.EXIT_OK)
        df = pd.read_csv(csv_path)
        self.assertEqual(list(df.columns), CSV_COLUMNS)
        self.assertEqual(len(df), 0)

    def test_experiment_guard(self):
        code, _ = self.run_cli('experiment', 't1', '--n', '1000', '--count', '1')
        self.assertEqual(code, cli.EXIT_LIMIT)


if __name__ == '__main__':
    unittest.main()
