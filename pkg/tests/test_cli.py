#!/usr/bin/env python

import csv
import io
import json
import os
import tempfile
import unittest
from unittest.mock import patch

from rodtopology import cli
from rodtopology import __main__ as entry
from generators import time_budget

DATA = os.path.join(os.path.dirname(__file__), "data")


def fixture(name):
    return os.path.join(DATA, name)


class CommandTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.settings = os.path.join(self.tmp.name, "missing-settings.json")

    def tearDown(self):
        self.tmp.cleanup()

    def run_command(self, fn, *args):
        """Run a cli function; returns (exit code, stdout)."""
        argv = [fn.__name__, *args, "--settings", self.settings]
        code = 0
        with patch("sys.argv", argv), patch("sys.stdout", new_callable=io.StringIO) as out:
            try:
                fn()
            except SystemExit as e:
                code = e.code
        return code, out.getvalue()

    def run_json(self, fn, *args):
        code, text = self.run_command(fn, *args)
        self.assertEqual(code, 0, text)
        return json.loads(text)


class TestCommands(CommandTestCase):
    def test_validate(self):
        report = self.run_json(cli.validate, fixture("two_horizons.json"))
        self.assertEqual(report["horizon_rods"], 2)
        self.assertTrue(report["geometry"])
        self.assertTrue(report["potentials"])

    def test_analyze(self):
        report = self.run_json(cli.analyze, fixture("three_horizons.json"))
        self.assertEqual(report["end"]["label"], "S³×S¹")
        self.assertTrue(report["simply_connected"])
        self.assertEqual(len(report["corners"]), 4)

    def test_analyze_counterexample(self):
        report = self.run_json(cli.analyze, fixture("counterexample.json"))
        self.assertEqual([h["topology"]["label"] for h in report["horizons"]], ["S³", "S³"])
        self.assertEqual(report["end"]["label"], "S¹×S²")
        self.assertEqual(report["end_pi1"]["label"], "Z")
        self.assertTrue(report["simply_connected"])

    def test_output_is_repeatable(self):
        first = self.run_command(cli.decompose, fixture("three_horizons.json"))
        self.assertEqual(first, self.run_command(cli.decompose, fixture("three_horizons.json")))

    def test_matrix_commands(self):
        self.assertEqual(self.run_json(cli.hnf, fixture("matrix.json"))["H"], [[2, 0], [0, 3]])
        self.assertEqual(self.run_json(cli.snf, fixture("matrix.json"))["divisors"], [1, 6])
        self.assertEqual(
            self.run_json(cli.detk, fixture("matrix.json"))["determinant_divisors"], {"1": 1, "2": 6}
        )
        self.assertEqual(
            self.run_json(cli.detk, fixture("matrix.json"), "--k", "2")["determinant_divisors"], {"2": 6}
        )

    def test_decompose(self):
        report = self.run_json(cli.decompose, fixture("three_horizons.json"))
        self.assertEqual(report["counts"], {"J": 1, "N1": 1, "N2": 1})
        self.assertEqual(len(report["relations"]), 1)

    def test_pi1_and_cover(self):
        report = self.run_json(cli.pi1, fixture("not_simply_connected.json"))
        self.assertEqual(report["pi1"]["label"], "Z")
        self.assertFalse(report["simply_connected"])
        self.assertNotIn("end_pi1", report)
        cover = self.run_json(cli.cover, fixture("two_horizons.json"))
        self.assertEqual(cover["deck_group"]["label"], "1")

    def test_fillin(self):
        report = self.run_json(cli.fillin, fixture("single_horizon.json"))
        self.assertEqual(report["horizons"][0]["chain"], [[1, 0], [0, 1]])

    def test_compactify_and_classify(self):
        report = self.run_json(cli.compactify, fixture("counterexample.json"))
        self.assertEqual(report["end_cap"]["action"], "merge")
        self.assertEqual(self.run_json(cli.classify, fixture("s2xs2.json"), "--spin")["text"], "S²×S²")
        self.assertEqual(self.run_json(cli.classify, fixture("s5.json"))["text"], "S⁵")
        result = self.run_json(cli.classify, fixture("counterexample.json"))
        self.assertTrue(result["compactified"])
        self.assertEqual(result["text"], "S⁴")

    def test_text_format(self):
        code, text = self.run_command(cli.analyze, fixture("three_horizons.json"), "--format", "text")
        self.assertEqual(code, 0)
        self.assertIn("half_plane diagram, n=3", text)
        self.assertIn("simply_connected: yes", text)

    def test_out_file(self):
        out = os.path.join(self.tmp.name, "report.json")
        code, text = self.run_command(cli.validate, fixture("s5.json"), "--out", out)
        self.assertEqual((code, text), (0, ""))
        with open(out, encoding="utf-8") as f:
            self.assertEqual(json.load(f)["shape"], "disk")


class TestFailures(CommandTestCase):
    def test_invalid_diagram(self):
        bad = os.path.join(self.tmp.name, "bad.json")
        with open(bad, "w", encoding="utf-8") as f:
            json.dump({"n": 1, "shape": "disk", "rods": []}, f)
        code, text = self.run_command(cli.validate, bad)
        self.assertEqual(code, 1)
        self.assertTrue(text.startswith("ERROR: "))
        self.assertIn("bad.json", text)

    def test_missing_file(self):
        code, text = self.run_command(cli.analyze, os.path.join(self.tmp.name, "nothing.json"))
        self.assertEqual(code, 1)
        self.assertIn("cannot read", text)

    def test_model_verify_needs_geometry(self):
        code, text = self.run_command(cli.model_verify, fixture("three_horizons.json"))
        self.assertEqual(code, 1)
        self.assertIn("ERROR: model maps need z coordinates", text)

    def test_model_verify_rejects_small_excision(self):
        code, text = self.run_command(cli.model_verify, fixture("two_horizons.json"), "--excision", "0.05")
        self.assertEqual(code, 1)
        self.assertIn("excision", text)

    def test_classify_rejects_non_simply_connected(self):
        code, text = self.run_command(cli.classify, fixture("not_simply_connected.json"), "--spin")
        self.assertEqual(code, 1)
        self.assertTrue(text.startswith("ERROR: "))

    def test_broken_settings(self):
        with open(self.settings, "w", encoding="utf-8") as f:
            f.write("{")
        code, text = self.run_command(cli.validate, fixture("s5.json"))
        self.assertEqual(code, 1)
        self.assertIn("invalid JSON", text)


class TestModelVerify(CommandTestCase):
    def test_report_and_csv(self):
        samples = os.path.join(self.tmp.name, "samples.csv")
        with time_budget(300):
            code, text = self.run_command(
                cli.model_verify, fixture("single_horizon.json"), "--no-refine", "--unpinned", "--csv", samples
            )
        self.assertIn(code, (0, 1))
        report = json.loads(text)
        self.assertFalse(report["pin_transition_columns"])
        self.assertEqual(report["result"], "PASS" if code == 0 else "FAIL")
        self.assertEqual(len(report["rays"]), 6)
        self.assertNotIn("ratio", report["annuli"][0])
        with open(samples, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ["rho", "z", "tension"])
        self.assertEqual(len(rows) - 1, sum(a["points"] for a in report["annuli"]))


class TestEntryPoint(unittest.TestCase):
    def run_main(self, *argv):
        code = 0
        with patch("sys.argv", ["rodtopology", *argv]), patch("sys.stdout", new_callable=io.StringIO) as out:
            try:
                entry.main()
            except SystemExit as e:
                code = e.code
        return code, out.getvalue()

    def test_list_commands(self):
        commands = entry.list_commands(cli)
        self.assertIn("model-verify", commands)
        self.assertIn("analyze", commands)
        self.assertEqual(len(commands), 12)

    def test_usage(self):
        code, text = self.run_main()
        self.assertEqual(code, 2)
        self.assertIn("usage: rodtopology", text)

    def test_unknown_command(self):
        code, text = self.run_main("frobnicate")
        self.assertEqual(code, 2)
        self.assertIn("ERROR: Unknown command 'frobnicate'", text)

    def test_dispatch(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, text = self.run_main("pi1", fixture("three_horizons.json"), "--settings", os.path.join(tmp, "none.json"))
        self.assertEqual(code, 0)
        self.assertTrue(json.loads(text)["simply_connected"])


if __name__ == "__main__":
    unittest.main()
