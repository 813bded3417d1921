# pylint: skip-file
from __future__ import annotations

import argparse
import csv
import io
import os
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout

from nonstatlqr.cli import Choices, CommandRegistry, Flag, Option, RequiredOption, ZeroOrMore
from nonstatlqr.cli.main import float_vector, main
from nonstatlqr.cli.parser import CommandArgument, get_bracket_content, split_union
from nonstatlqr.errors import CommandLineError
from nonstatlqr.harness import TRACE_HEADER


def make_registry():
    registry = CommandRegistry(prog="test")

    @registry.command
    def add(a: int, b: Option | int = 1, twice: Flag = False) -> int:
        """
        Add two numbers.

        :param a: first summand
        :param b: second summand
        :param twice: double the result
        """
        return (a + b) * (2 if twice else 1)

    @registry.command
    def pick(values: ZeroOrMore[float], mode: RequiredOption | Choices[("fast", "slow")]):
        return mode, values

    @registry.command
    def h__cap(max_rounds: Option | int = 10):
        return max_rounds

    return registry


class RegistryTest(unittest.TestCase):

    def setUp(self):
        self.registry = make_registry()

    def test_execute(self):
        self.assertEqual(3, self.registry.execute("add 2"))
        self.assertEqual(10, self.registry.execute("add 2 --b 3 --twice"))
        self.assertEqual(("fast", [1.0, 2.5]), self.registry.execute(["pick", "--mode", "fast", "1", "2.5"]))
        self.assertEqual(5, self.registry.execute("h-cap --max-rounds 5"))

    def test_errors_raise_without_handler(self):
        with self.assertRaises(CommandLineError):
            self.registry.execute("add", error_handler=None)
        with self.assertRaises(CommandLineError):
            self.registry.execute("pick --mode medium", error_handler=None)
        with self.assertRaises(CommandLineError):
            self.registry.execute("add two", error_handler=None)
        with self.assertRaises(CommandLineError):
            self.registry.execute("unknown", error_handler=None)

    def test_error_handler(self):
        errors = []
        self.assertIsNone(self.registry.execute("add", error_handler=errors.append, stderr=io.StringIO()))
        self.assertEqual(1, len(errors))

    def test_help(self):
        out = io.StringIO()
        self.registry.execute("help add", stdout=out)
        self.assertIn("Add two numbers.", out.getvalue())
        self.assertIn("second summand", out.getvalue())
        out = io.StringIO()
        self.registry.execute("help", stdout=out)
        self.assertIn("usage: test", out.getvalue())

    def test_invalid_commands(self):
        registry = CommandRegistry()
        with self.assertRaises(ValueError):
            @registry.command
            def help(topic: str):
                pass
        with self.assertRaises(ValueError):
            @registry.command
            def switch(on: Flag = True):
                pass
        with self.assertRaises(ValueError):
            @registry.command
            def choose(mode: Option | Choices[("a", "b")] = "c"):
                pass
        with self.assertRaises(NameError):
            @registry.command
            def documented(x: int):
                """
                :param y: no such parameter
                """

    def test_markers_are_not_instantiated(self):
        with self.assertRaises(TypeError):
            Option()


class ParserHelpersTest(unittest.TestCase):

    def test_split_union(self):
        self.assertEqual(["Option", "Choices[(1 | 2)]"], split_union("Option | Choices[(1 | 2)]"))
        self.assertEqual(["int"], split_union("int"))

    def test_bracket_content(self):
        self.assertEqual("bar[baz]", get_bracket_content("foo[bar[baz]]"))
        self.assertEqual("", get_bracket_content("foo"))

    def test_argument_name(self):
        arg = CommandArgument("h_cap")
        self.assertEqual("h_cap", arg.name)
        arg.optional = True
        self.assertEqual("--h-cap", arg.name)
        with self.assertRaises(ValueError):
            CommandArgument("2x")

    def test_float_vector(self):
        self.assertEqual([1.0, 0.5], list(float_vector("1.0,0.5")))
        with self.assertRaises(argparse.ArgumentTypeError):
            float_vector("1.0,x")


class MainTest(unittest.TestCase):

    def run_main(self, argv):
        with redirect_stdout(io.StringIO()) as out, redirect_stderr(io.StringIO()):
            status = main(argv)
        return status, out.getvalue()

    def test_no_command(self):
        status, out = self.run_main([])
        self.assertEqual(2, status)
        self.assertIn("simulate", out)

    def test_invalid_command_line(self):
        self.assertEqual(2, self.run_main(["simulate"])[0])
        self.assertEqual(2, self.run_main(["-q", "simulate", "--n", "ten"])[0])

    def test_simulate(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "trace.csv")
            status, out = self.run_main(["-q", "simulate", "--system", "lower-bound", "--adversary", "lower-bound",
                                         "--n", "16", "--out", path, "--controller", "zero"])
            with open(path, newline="", encoding="utf-8") as handle:
                rows = list(csv.reader(handle))
        self.assertEqual(0, status)
        self.assertIn("regret:", out)
        self.assertEqual(TRACE_HEADER, rows[0])
        self.assertEqual(17, len(rows))

    def test_simulate_static_windows(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "trace.csv")
            status, out = self.run_main(["-q", "simulate", "--system", "lower-bound", "--adversary", "lower-bound",
                                         "--n", "8", "--out", path, "--controller", "zero", "--static-windows",
                                         "--min-window", "4"])
        self.assertEqual(0, status)
        self.assertIn("max window dynamic regret:", out)
        self.assertIn("max window static regret:", out)

    def test_library_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            missing = os.path.join(tmp, "missing.json")
            out = os.path.join(tmp, "trace.csv")
            self.assertEqual(1, self.run_main(["-q", "simulate", "--system", missing, "--adversary", "piecewise",
                                               "--n", "4", "--out", out])[0])
            self.assertEqual(1, self.run_main(["-q", "simulate", "--system", "lower-bound", "--adversary", "gaussian",
                                               "--n", "4", "--out", out])[0])

    def test_regress(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "trace.csv")
            self.assertEqual(2, self.run_main(["-q", "regress", "--stream", "synthetic", "--out", path])[0])
            status, _ = self.run_main(["-q", "regress", "--stream", "synthetic", "--n", "20", "--out", path,
                                       "--prune", "geometric"])
            self.assertEqual(0, status)
            with open(path, newline="", encoding="utf-8") as handle:
                self.assertEqual(21, len(list(csv.reader(handle))))


if __name__ == '__main__':
    unittest.main()
