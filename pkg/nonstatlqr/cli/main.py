# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or
# go to <https://opensource.org/licenses/MIT>.

"""
The :code:`nonstat-lqr` program.

Exit status is 0 on success, 1 if the library reports an error and 2 for an invalid command line.
:code:`-v` (repeatable) and :code:`-q` before or after the command select the log level.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

import numpy as np

from .annotations import Choices, Flag, Option, RequiredOption
from .registry import CommandRegistry, default_error_handler
from .. import harness
from ..adversaries import FixedDapComparator, lower_bound_adversary
from ..dap_policy import DapConfig
from ..errors import CommandLineError, NonstatLqrError
from ..lqr_system import lower_bound_system

logger = logging.getLogger(__name__)

commands = CommandRegistry(prog="nonstat-lqr",
                           description="Dynamic regret experiments for nonstochastic LQR control.")


def float_vector(text: str) -> np.ndarray:
    """Parse :code:`1.0,0.5` into a vector."""
    try:
        return np.array([float(part) for part in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not a comma separated list of numbers")


def _print_summary(result) -> None:
    print(f"rounds: {result.trace.n}")
    print(f"regret: {result.trace.total:.6g}")
    print(f"max window dynamic regret: {result.trace.max_window_regret():.6g}")
    if result.trace.static_windows:
        print(f"max window static regret: {result.trace.max_static_window_regret():.6g}")
    if result.trace.comparator_tv is not None:
        print(f"comparator total variation: {result.trace.comparator_tv:.6g}")


@commands.command
def simulate(system: RequiredOption | str, adversary: RequiredOption | str, n: RequiredOption | int,
             out: RequiredOption | str, seed: Option | int = 0, c_n: Option | float = 1.0,
             controller: Option | Choices[("prodr", "zero")] = "prodr",
             prune: Option | Choices[("none", "geometric")] = "none", h_cap: Option | int = None,
             x1: Option | float_vector = None, static_windows: Flag = False, min_window: Option | int = 1) -> int:
    """
    Simulate a controller against a disturbance adversary and write its regret trace.

    :param system: JSON file with the system (and optionally the DAP class), or 'lower-bound'
    :param adversary: lower-bound, piecewise, sinusoidal or replay:FILE
    :param n: number of rounds
    :param out: CSV file for the per-round trace
    :param seed: random seed
    :param c_n: path length budget of the lower bound adversary
    :param controller: the learning controller or the zero baseline
    :param prune: FLH pruning policy
    :param h_cap: upper limit of the feedback delay
    :param x1: initial state, comma separated
    :param static_windows: also report the regret against the best fixed DAP of every dyadic window
    :param min_window: shortest dyadic window of the regret tables
    """
    if system == "lower-bound":
        spec, dap_cfg = lower_bound_system(n), DapConfig(m=1, R=1.0, gamma=1.0)
    else:
        spec, dap_cfg = harness.load_experiment(system)
    if adversary == "lower-bound":
        source, comparator = lower_bound_adversary(n, c_n)
    else:
        source = harness.make_adversary(adversary, c_n)
        comparator = FixedDapComparator(dap_cfg.zeros(spec.d_u, spec.d_x))
    result = harness.run_experiment(spec, source, comparator, n, seed, controller, dap_cfg, prune, h_cap, x1,
                                    C_n=c_n if adversary == "lower-bound" else None,
                                    static_windows=static_windows, min_window=min_window)
    harness.write_trace_csv(out, result.rows())
    _print_summary(result)
    print(f"feedback delay h: {result.h}")
    if result.within_budget is not None:
        print(f"comparator within budget: {result.within_budget}")
    return 0


@commands.command
def regress(stream: RequiredOption | str, out: RequiredOption | str, n: Option | int = None,
            seed: Option | int = 0, d: Option | int = 2, p: Option | int = 1,
            prune: Option | Choices[("none", "geometric")] = "none", tau: Option | int = 1,
            static_windows: Flag = False, min_window: Option | int = 1) -> int:
    """
    Run the proper regression learner on a regression stream.

    :param stream: JSON file with covariates and targets, or 'synthetic' for a drifting stream
    :param out: CSV file for the per-round trace
    :param n: number of rounds (required for synthetic streams, truncates file streams)
    :param seed: random seed of the synthetic stream
    :param d: dimension of the synthetic stream
    :param p: rows per round of the synthetic stream
    :param prune: FLH pruning policy
    :param tau: feedback delay
    :param static_windows: also report the regret against the best fixed box member of every dyadic window
    :param min_window: shortest dyadic window of the regret tables
    """
    if stream == "synthetic":
        if n is None:
            raise CommandLineError("--n is required for synthetic streams")
        data = harness.drifting_regression_stream(n, d, p, seed)
    else:
        data = harness.load_stream(stream)
        if n is not None:
            truth = None if data.truth is None else data.truth[:n]
            data = harness.RegressionStream(data.covariates[:n], data.targets[:n], data.radius, truth)
    result = harness.run_regression(data, prune=prune, tau=tau, static_windows=static_windows,
                                    min_window=min_window)
    harness.write_trace_csv(out, result.rows())
    _print_summary(result)
    return 0


@commands.command
def sweep(grid: RequiredOption | str, out: RequiredOption | str,
          prune: Option | Choices[("none", "geometric")] = "none", h_cap: Option | int = None) -> int:
    """
    Run a scaling sweep on the lower bound environment.

    :param grid: JSON file with the lists n, C_n and seeds
    :param out: output directory for sweep.csv and slopes.csv
    :param prune: FLH pruning policy
    :param h_cap: upper limit of the feedback delay
    """
    result = harness.sweep(harness.load_grid(grid), out, prune, h_cap)
    for versus, fixed, slope in result.slopes:
        print(f"slope versus {versus} at {fixed:g}: {slope:.4f}")
    for n, c_n, seed, error in result.failures:
        print(f"failed: n={n} C_n={c_n:g} seed={seed}: {error}", file=sys.stderr)
    return 1 if result.failures else 0


def _log_level(verbose: int, quiet: bool) -> int:
    if quiet:
        return logging.ERROR
    return {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point of the :code:`nonstat-lqr` script."""
    argv = list(sys.argv[1:] if argv is None else argv)
    verbosity = argparse.ArgumentParser(add_help=False)
    verbosity.add_argument("-v", "--verbose", action="count", default=0)
    verbosity.add_argument("-q", "--quiet", action="store_true")
    options, rest = verbosity.parse_known_args(argv)
    logging.basicConfig(level=_log_level(options.verbose, options.quiet),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if not rest:
        commands.help([])
        return 2
    try:
        result = commands.execute(rest, error_handler=None)
    except CommandLineError as err:
        default_error_handler(err)
        return 2
    except (NonstatLqrError, ValueError, OSError) as err:
        logger.error("%s", err)
        return 1
    return 0 if result is None else int(result)


if __name__ == "__main__":
    sys.exit(main())
