# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or
# go to <https://opensource.org/licenses/MIT>.

"""
Experiment harness: closed loop simulation, counterfactual comparator rollouts, regret traces,
scaling sweeps and the standalone regression protocol.

Every run is a pure function of its arguments and seed. CSV output formats floats with 17
significant digits so that repeated runs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from .adversaries import (ComparatorOracle, DisturbanceAdversary, LowerBoundAdversary,
                          PiecewiseConstantAdversary, ReplayAdversary, SinusoidalDriftAdversary,
                          check_comparator_budget, lower_bound_adversary)
from .barrier import CovariateBatch, squared_loss
from .config import worker_count
from .dap_policy import DapConfig, DapParams, DapSequence, dap_control
from .domain import BoxDomain, DapSpectralDomain
from .errors import DimensionMismatch, DisturbanceBoundViolated, NonstatLqrError, NumericalOverflow
from .flh import PrunePolicy
from .lqr_pipeline import ControllerState, recover_disturbance
from .lqr_system import LqrConstants, SystemSpec, default_h_cap, lower_bound_system, lqr_loss, system_constants
from .prodr import DelayedProdr, ProdrConfig, ProdrState, RoundDiagnostics, derive_config, prodr_round
from .regret import QuadraticLosses, RegretTrace, WindowRegret, best_fixed_loss, compute_regret, fit_loglog_slope, \
    windowed_fixed_policy_regret, windowed_static_regret

logger = logging.getLogger(__name__)

OVERFLOW_LIMIT = 1e12
DISTURBANCE_TOL = 1e-9

TRACE_HEADER = ["round", "learner_loss", "comparator_loss", "cum_regret", "barrier", "weight_entropy"]
SWEEP_HEADER = ["n", "C_n", "seed", "regret"]
SLOPES_HEADER = ["versus", "fixed", "slope"]

Controller = Callable[[np.ndarray], np.ndarray]


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    return f"{value:.17g}"


class ZeroController:
    """The zero DAP, :code:`u_t = −K∞x_t`. On the lower bound system this plays :code:`u_t = 0`."""

    def __init__(self, consts: LqrConstants):
        self.K_inf = consts.K_inf

    def __call__(self, x_t: np.ndarray) -> np.ndarray:
        return -self.K_inf @ x_t


class DapSequenceController:
    """
    Plays a given DAP sequence, recovering the disturbances from the observed states.

    :param consts: system constants (K∞ and the dynamics)
    :param seq: the policies, one per round
    """

    def __init__(self, consts: LqrConstants, seq: Union[DapSequence, Sequence[DapParams]]):
        self.consts = consts
        self.seq = seq
        self.t = 0
        self.recovered: List[np.ndarray] = []
        self._last: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def params(self, t: int) -> DapParams:
        return self.seq[t - 1]

    def __call__(self, x_t: np.ndarray) -> np.ndarray:
        spec = self.consts.spec
        if self._last is not None:
            self.recovered.append(recover_disturbance(self._last[0], self._last[1], x_t, spec.A, spec.B,
                                                      round_index=self.t))
        self.t += 1
        params = self.params(self.t)
        u = dap_control(params, self.consts.K_inf, x_t, self.recovered[::-1][:params.m])
        self._last = (x_t, u)
        return u


class FixedDapController(DapSequenceController):
    """Plays the same DAP every round."""

    def __init__(self, consts: LqrConstants, params: DapParams):
        super().__init__(consts, [params])

    def params(self, t: int) -> DapParams:
        return self.seq[0]


@dataclass
class SimulationResult:
    """States :code:`x_1 … x_{n+1}`, controls, disturbances and losses :code:`ℓ(x_t, u_t)` of a run."""

    states: np.ndarray
    controls: np.ndarray
    disturbances: np.ndarray
    losses: np.ndarray

    @property
    def n(self) -> int:
        return len(self.losses)


def _initial_state(spec: SystemSpec, x1: Optional[Sequence[float]]) -> np.ndarray:
    if x1 is None:
        return np.zeros(spec.d_x)
    x1 = np.asarray(x1, dtype=float)
    if x1.shape != (spec.d_x,):
        raise DimensionMismatch(f"initial state must have shape ({spec.d_x},), was {x1.shape}")
    return x1


def _check_disturbances(disturbances: np.ndarray, n: int, d_x: int) -> np.ndarray:
    disturbances = np.asarray(disturbances, dtype=float)
    if disturbances.shape != (n, d_x):
        raise DimensionMismatch(f"expected disturbances of shape {(n, d_x)}, got {disturbances.shape}")
    norms = np.linalg.norm(disturbances, axis=1)
    if n and norms.max() > 1.0 + DISTURBANCE_TOL:
        worst = int(np.argmax(norms))
        raise DisturbanceBoundViolated(float(norms[worst]), worst + 1)
    return disturbances


def _run_closed_loop(spec: SystemSpec, disturbances: np.ndarray, controller: Controller,
                     x1: Optional[Sequence[float]]) -> SimulationResult:
    n = len(disturbances)
    states = np.zeros((n + 1, spec.d_x))
    controls = np.zeros((n, spec.d_u))
    losses = np.zeros(n)
    x = _initial_state(spec, x1)
    for t in range(1, n + 1):
        norm = float(np.linalg.norm(x))
        if not norm <= OVERFLOW_LIMIT:
            raise NumericalOverflow(t, norm)
        states[t - 1] = x
        u = np.asarray(controller(x.copy()), dtype=float)
        if u.shape != (spec.d_u,):
            raise DimensionMismatch(f"controller returned shape {u.shape}, expected ({spec.d_u},)")
        controls[t - 1] = u
        losses[t - 1] = lqr_loss(spec, x, u)
        x = spec.A @ x + spec.B @ u + disturbances[t - 1]
    states[n] = x
    return SimulationResult(states, controls, disturbances, losses)


def simulate(spec: SystemSpec, adversary: DisturbanceAdversary, controller: Controller, n: int, seed: int,
             x1: Optional[Sequence[float]] = None) -> SimulationResult:
    """
    Run :code:`x_{t+1} = A x_t + B u_t + w_t` for n rounds from :code:`x_1` (0 by default).

    :param controller: called once per round with :code:`x_t`, returns :code:`u_t`
    :raises DisturbanceBoundViolated: if the adversary emits :code:`‖w_t‖ > 1`
    :raises NumericalOverflow: if the state norm exceeds 1e12
    """
    if n < 1:
        raise ValueError(f"n must be 1 or greater, was {n}")
    disturbances = _check_disturbances(adversary.generate(n, spec.d_x, seed), n, spec.d_x)
    logger.info("simulating %d rounds of %s (seed %d)", n, adversary.name, seed)
    return _run_closed_loop(spec, disturbances, controller, x1)


def rollout_comparator(spec: SystemSpec, disturbances: np.ndarray, comparator: DapSequence,
                       consts: Optional[LqrConstants] = None, x1: Optional[Sequence[float]] = None) -> np.ndarray:
    """
    Counterfactual losses of the comparator policies under the recorded disturbances.

    The rollout only reads the disturbances, never the learner's trajectory.
    """
    disturbances = np.asarray(disturbances, dtype=float)
    if len(comparator) != len(disturbances):
        raise DimensionMismatch(f"comparator has {len(comparator)} rounds, record has {len(disturbances)}")
    consts = consts if consts is not None else system_constants(spec)
    _check_disturbances(disturbances, len(disturbances), spec.d_x)
    n = len(disturbances)
    x = _initial_state(spec, x1)
    losses = np.zeros(n)
    for t in range(1, n + 1):
        norm = float(np.linalg.norm(x))
        if not norm <= OVERFLOW_LIMIT:
            raise NumericalOverflow(t, norm)
        params = comparator[t - 1]
        history = disturbances[max(0, t - 1 - params.m):t - 1][::-1]
        u = dap_control(params, consts.K_inf, x, history)
        losses[t - 1] = lqr_loss(spec, x, u)
        x = spec.A @ x + spec.B @ u + disturbances[t - 1]
    return losses


def _psd_root(S: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(0.5 * (S + S.T))
    return (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.T


def fixed_dap_losses(spec: SystemSpec, consts: LqrConstants, disturbances: np.ndarray, dap_cfg: DapConfig,
                     x1: Optional[Sequence[float]] = None) -> QuadraticLosses:
    """
    Round losses of every fixed DAP of ``dap_cfg`` as quadratics in :code:`z = flatten(M)`.

    Playing the same M from round 1 makes the trajectory affine in z, so the loss of round t is
    :code:`‖R_x^{1/2} x_t(z)‖² + ‖R_u^{1/2} u_t(z)‖²`. The disturbances are the recorded ones, so the
    result agrees with :func:`rollout_comparator` on a constant sequence.
    """
    disturbances = _check_disturbances(disturbances, len(disturbances), spec.d_x)
    n, m = len(disturbances), dap_cfg.m
    dim = m * spec.d_u * spec.d_x
    root_x, root_u = _psd_root(spec.R_x), _psd_root(spec.R_u)
    offsets = np.zeros((n, spec.d_x + spec.d_u))
    jacobians = np.zeros((n, spec.d_x + spec.d_u, dim))
    x, X = _initial_state(spec, x1), np.zeros((spec.d_x, dim))
    padded = np.vstack([np.zeros((m, spec.d_x)), disturbances])
    for t in range(1, n + 1):
        # w_{t−1}, …, w_{t−m}, zero before round 1
        stacked = padded[t - 1:t - 1 + m][::-1].reshape(-1)
        C = np.kron(stacked[None, :], np.eye(spec.d_u))
        u, U = -consts.K_inf @ x, -consts.K_inf @ X - C
        offsets[t - 1] = np.concatenate([root_x @ x, root_u @ u])
        jacobians[t - 1] = np.vstack([root_x @ X, root_u @ U])
        x, X = spec.A @ x + spec.B @ u + disturbances[t - 1], spec.A @ X + spec.B @ U
    return QuadraticLosses.from_residuals(offsets, jacobians)


@dataclass
class ExperimentResult:
    """A simulated run with its comparator and regret trace."""

    simulation: SimulationResult
    comparator_losses: np.ndarray
    trace: RegretTrace
    diagnostics: List[RoundDiagnostics] = field(default_factory=list)
    h: int = 1
    C_n: Optional[float] = None
    within_budget: Optional[bool] = None

    @property
    def regret(self) -> float:
        return self.trace.total

    @property
    def static_windows(self) -> List[WindowRegret]:
        return self.trace.static_windows

    def rows(self) -> Iterator[List[str]]:
        cumulative = self.trace.cumulative
        for t in range(self.trace.n):
            diagnostics = self.diagnostics[t] if t < len(self.diagnostics) else None
            yield [str(t + 1), _fmt(self.trace.learner_losses[t]), _fmt(self.trace.comparator_losses[t]),
                   _fmt(cumulative[t]), _fmt(diagnostics.barrier if diagnostics else None),
                   _fmt(diagnostics.weight_entropy if diagnostics else None)]


def make_controller(kind: str, consts: LqrConstants, dap_cfg: DapConfig,
                    prune: PrunePolicy = PrunePolicy.NONE) -> Controller:
    """``prodr`` for the learning controller, ``zero`` for the zero DAP baseline."""
    if kind == "prodr":
        return ControllerState(consts, dap_cfg, prune=PrunePolicy(prune))
    if kind == "zero":
        return ZeroController(consts)
    raise ValueError(f"unknown controller '{kind}'")


def run_experiment(spec: SystemSpec, adversary: DisturbanceAdversary, comparator: ComparatorOracle, n: int,
                   seed: int, controller: str = "prodr", dap_cfg: DapConfig = DapConfig(),
                   prune: PrunePolicy = PrunePolicy.NONE, h_cap: Optional[int] = None,
                   x1: Optional[Sequence[float]] = None, C_n: Optional[float] = None,
                   static_windows: bool = False, min_window: int = 1) -> ExperimentResult:
    """
    Simulate a controller, roll out the comparator chosen in hindsight and compute the regret.

    :param h_cap: upper limit of the feedback delay, :func:`~nonstatlqr.lqr_system.default_h_cap` if omitted
    :param C_n: if given, the comparator's total variation is checked against it
    :param static_windows: also compute the regret against the best fixed DAP of every dyadic window
    :param min_window: shortest dyadic window of the regret tables
    """
    spec = replace(spec, n=n)
    consts = system_constants(spec, h_cap=h_cap if h_cap is not None else default_h_cap(spec.d_x))
    policy = make_controller(controller, consts, dap_cfg, prune)
    simulation = simulate(spec, adversary, policy, n, seed, x1)
    seq = comparator.sequence(simulation.disturbances)
    comparator_losses = rollout_comparator(spec, simulation.disturbances, seq, consts, x1)
    tv, within = check_comparator_budget(seq, C_n if C_n is not None else math.inf)
    if C_n is not None and not within:
        logger.warning("comparator total variation %.4f exceeds the budget %.4f", tv, C_n)
    trace = compute_regret(simulation.losses, comparator_losses, comparator_tv=tv, min_window=min_window)
    if static_windows:
        losses = fixed_dap_losses(spec, consts, simulation.disturbances, dap_cfg, x1)
        trace.static_windows = windowed_fixed_policy_regret(losses, simulation.losses,
                                                            DapSpectralDomain(dap_cfg, spec.d_u, spec.d_x), min_window)
    diagnostics = policy.diagnostics if isinstance(policy, ControllerState) else []
    logger.info("finished %d rounds: regret %.6g", n, trace.total)
    return ExperimentResult(simulation, comparator_losses, trace, diagnostics, consts.h, C_n,
                            within if C_n is not None else None)


def lower_bound_experiment(n: int, C_n: float, seed: int, controller: str = "prodr",
                           prune: PrunePolicy = PrunePolicy.NONE, h_cap: Optional[int] = None) -> ExperimentResult:
    """The lower bound environment with its binned comparator."""
    adversary, comparator = lower_bound_adversary(n, C_n)
    return run_experiment(lower_bound_system(n), adversary, comparator, n, seed, controller,
                          DapConfig(m=1, R=1.0, gamma=1.0), prune, h_cap, C_n=C_n)


def load_experiment(path: Union[str, Path]) -> Tuple[SystemSpec, DapConfig]:
    """
    Read a system and its policy class from JSON.

    The file holds either a bare system description or
    :code:`{"system": {...}, "dap": {"m": ..., "R": ..., "gamma": ...}}`.
    """
    with open(path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    if "system" not in data:
        return SystemSpec.from_dict(data), DapConfig()
    unknown = sorted(set(data) - {"system", "dap"})
    if unknown:
        raise ValueError(f"unknown keys in experiment file: {', '.join(unknown)}")
    dap = data.get("dap", {})
    unknown = sorted(set(dap) - {"m", "R", "gamma"})
    if unknown:
        raise ValueError(f"unknown keys in DAP description: {', '.join(unknown)}")
    return SystemSpec.from_dict(data["system"]), DapConfig(**dap)


def make_adversary(name: str, C_n: float = 1.0) -> DisturbanceAdversary:
    """
    Adversary from its command line name: ``lower-bound``, ``piecewise``, ``sinusoidal`` or ``replay:FILE``.
    """
    if name == "lower-bound":
        return LowerBoundAdversary(C_n)
    if name == "piecewise":
        return PiecewiseConstantAdversary()
    if name == "sinusoidal":
        return SinusoidalDriftAdversary()
    if name.startswith("replay:"):
        return ReplayAdversary(name[len("replay:"):])
    raise ValueError(f"unknown adversary '{name}'")


def write_trace_csv(path: Union[str, Path], rows: Iterator[List[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        writer.writerows(rows)


@dataclass(frozen=True)
class SweepGrid:
    """Cells :code:`(n, C_n)` times seeds of a scaling sweep on the lower bound environment."""

    n: Tuple[int, ...]
    C_n: Tuple[float, ...]
    seeds: Tuple[int, ...]
    controller: str = "prodr"

    def __post_init__(self):
        if not self.n or not self.C_n or not self.seeds:
            raise ValueError("sweep grid must not be empty")

    def cells(self) -> List[Tuple[int, float, int]]:
        return sorted((n, c, s) for n in self.n for c in self.C_n for s in self.seeds)


def load_grid(path: Union[str, Path]) -> SweepGrid:
    """
    Read a sweep grid from JSON: :code:`{"n": [...], "C_n": [...], "seeds": [...] or count, "controller": ...}`.
    """
    with open(path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    unknown = sorted(set(data) - {"n", "C_n", "seeds", "controller"})
    if unknown:
        raise ValueError(f"unknown keys in sweep grid: {', '.join(unknown)}")
    seeds = data.get("seeds", 10)
    seeds = tuple(range(seeds)) if isinstance(seeds, int) else tuple(int(s) for s in seeds)
    return SweepGrid(tuple(int(n) for n in data.get("n", [])), tuple(float(c) for c in data.get("C_n", [])),
                     seeds, data.get("controller", "prodr"))


@dataclass
class SweepResult:
    rows: List[Tuple[int, float, int, float]]
    failures: List[Tuple[int, float, int, str]]
    medians: Dict[Tuple[int, float], float]
    slopes: List[Tuple[str, float, float]]


def _sweep_cell(n: int, C_n: float, seed: int, controller: str, prune: PrunePolicy,
                h_cap: Optional[int]) -> Tuple[int, float, int, Optional[float], Optional[str]]:
    try:
        result = lower_bound_experiment(n, C_n, seed, controller, prune, h_cap)
    except NonstatLqrError as err:
        return n, C_n, seed, None, str(err)
    return n, C_n, seed, result.regret, None


def _fit_slopes(medians: Dict[Tuple[int, float], float]) -> List[Tuple[str, float, float]]:
    slopes = []
    for versus, key_index in (("n", 0), ("C_n", 1)):
        other = 1 - key_index
        for fixed in sorted({key[other] for key in medians}):
            points = sorted((key[key_index], value) for key, value in medians.items() if key[other] == fixed)
            if len(points) < 2:
                continue
            xs, ys = zip(*points)
            try:
                slopes.append((versus, fixed, fit_loglog_slope(xs, ys)))
            except ValueError:
                logger.warning("no log-log fit versus %s at %s = %s: regrets not positive", versus,
                               "C_n" if versus == "n" else "n", fixed)
                slopes.append((versus, fixed, math.nan))
    return slopes


def sweep(grid: SweepGrid, out_dir: Optional[Union[str, Path]] = None, prune: PrunePolicy = PrunePolicy.NONE,
          h_cap: Optional[int] = None, n_jobs: Optional[int] = None) -> SweepResult:
    """
    Run all cells of the grid in parallel and summarize them.

    Per :code:`(n, C_n)` the median regret over the seeds is taken; log-log slopes are fitted against n
    at fixed :code:`C_n` and against :code:`C_n` at fixed n. Failed cells are reported and left out.
    With ``out_dir`` the rows are written to ``sweep.csv`` and the slopes to ``slopes.csv``.
    """
    cells = grid.cells()
    jobs = n_jobs if n_jobs is not None else min(worker_count(), len(cells))
    logger.info("sweeping %d cells with %d workers", len(cells), jobs)
    outcomes = Parallel(n_jobs=jobs)(
        delayed(_sweep_cell)(n, c, s, grid.controller, PrunePolicy(prune), h_cap) for n, c, s in cells
    )
    rows, failures = [], []
    for n, c, s, regret, error in outcomes:
        if error is not None:
            logger.warning("cell n=%d C_n=%s seed=%d failed: %s", n, c, s, error)
            failures.append((n, c, s, error))
        else:
            rows.append((n, c, s, regret))
    medians: Dict[Tuple[int, float], float] = {}
    for key in sorted({(n, c) for n, c, _, _ in rows}):
        medians[key] = float(np.median([r for n, c, _, r in rows if (n, c) == key]))
    result = SweepResult(rows, failures, medians, _fit_slopes(medians))

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "sweep.csv", "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(SWEEP_HEADER)
            writer.writerows([str(n), _fmt(c), str(s), _fmt(r)] for n, c, s, r in rows)
        with open(out_dir / "slopes.csv", "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(SLOPES_HEADER)
            writer.writerows([versus, _fmt(fixed), _fmt(slope)] for versus, fixed, slope in result.slopes)
    return result


@dataclass
class RegressionStream:
    """
    A minibatch regression stream.

    :param covariates: shape (n, p, d)
    :param targets: shape (n, p)
    :param radius: half width of the box domain
    :param truth: optional generating parameters, shape (n, d)
    """

    covariates: np.ndarray
    targets: np.ndarray
    radius: float = 1.0
    truth: Optional[np.ndarray] = None

    def __post_init__(self):
        self.covariates = np.asarray(self.covariates, dtype=float)
        self.targets = np.asarray(self.targets, dtype=float)
        if self.covariates.ndim != 3 or self.targets.shape != self.covariates.shape[:2]:
            raise DimensionMismatch(f"covariates {self.covariates.shape} and targets {self.targets.shape} "
                                    f"do not form a stream")
        if self.truth is not None:
            self.truth = np.asarray(self.truth, dtype=float)
            if self.truth.shape != (self.n, self.d):
                raise DimensionMismatch(f"truth must have shape {(self.n, self.d)}, was {self.truth.shape}")

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1]

    @property
    def d(self) -> int:
        return self.covariates.shape[2]

    def batch(self, t: int) -> CovariateBatch:
        """Round t (1-based)."""
        return CovariateBatch(self.covariates[t - 1], self.targets[t - 1])


def drifting_regression_stream(n: int, d: int, p: int, seed: int, segments: int = 4, noise: float = 0.05,
                               radius: float = 1.0) -> RegressionStream:
    """
    Synthetic stream with a piecewise constant ground truth inside the box of half width ``radius``.

    Rows are uniform in :code:`[−1/d, 1/d]^d` (so :code:`‖a‖₁ ≤ 1`) and targets carry uniform noise in
    :code:`[−noise, noise]`.
    """
    rng = np.random.default_rng(seed)
    covariates = rng.uniform(-1.0, 1.0, size=(n, p, d)) / d
    levels = rng.uniform(-radius, radius, size=(segments, d))
    length = max(1, math.ceil(n / segments))
    truth = levels[np.minimum(np.arange(n) // length, segments - 1)]
    targets = np.einsum("tpd,td->tp", covariates, truth) + rng.uniform(-noise, noise, size=(n, p))
    return RegressionStream(covariates, targets, radius, truth)


def load_stream(path: Union[str, Path]) -> RegressionStream:
    """Read a stream from JSON: :code:`{"covariates": ..., "targets": ..., "radius": ..., "truth": ...}`."""
    with open(path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    unknown = sorted(set(data) - {"covariates", "targets", "radius", "truth"})
    if unknown:
        raise ValueError(f"unknown keys in regression stream: {', '.join(unknown)}")
    if "covariates" not in data or "targets" not in data:
        raise ValueError("regression stream needs 'covariates' and 'targets'")
    return RegressionStream(data["covariates"], data["targets"], float(data.get("radius", 1.0)), data.get("truth"))


@dataclass
class RegressionResult:
    played: np.ndarray
    trace: RegretTrace
    diagnostics: List[RoundDiagnostics]

    @property
    def static_windows(self) -> List[WindowRegret]:
        return self.trace.static_windows

    def rows(self) -> Iterator[List[str]]:
        cumulative = self.trace.cumulative
        for t, diagnostics in enumerate(self.diagnostics):
            yield [str(t + 1), _fmt(self.trace.learner_losses[t]), _fmt(self.trace.comparator_losses[t]),
                   _fmt(cumulative[t]), _fmt(diagnostics.barrier), _fmt(diagnostics.weight_entropy)]


def stream_config(stream: RegressionStream, domain: BoxDomain, tau: int = 1) -> ProdrConfig:
    """Learner parameters from the observed bounds of a stream."""
    alpha_row = float(np.abs(stream.covariates).sum(axis=2).max())
    sigma_b = float(np.abs(stream.targets).sum(axis=1).max())
    return derive_config(p=stream.p, d=stream.d, chi=domain.chi, sigma_b=sigma_b, alpha_row=max(alpha_row, 1e-12),
                         R_tilde=domain.R_tilde, tau=tau)


def run_regression(stream: RegressionStream, domain: Optional[BoxDomain] = None,
                   prune: PrunePolicy = PrunePolicy.NONE, tau: int = 1, config: Optional[ProdrConfig] = None,
                   static_windows: bool = False, min_window: int = 1) -> RegressionResult:
    """
    Run the proper learner on a regression stream.

    With ``tau > 1`` the targets of round t are revealed at round :code:`t + τ`. The comparator is the
    generating parameter of every round if the stream has one, the best fixed box member otherwise.

    :param static_windows: also compute the static regret against the best fixed member of each dyadic window
    """
    domain = domain if domain is not None else BoxDomain(stream.d, stream.radius)
    config = config if config is not None else stream_config(stream, domain, tau)
    played = np.zeros((stream.n, stream.d))
    diagnostics: List[RoundDiagnostics] = []
    if tau == 1:
        learner = ProdrState(config, domain, prune=PrunePolicy(prune))
        for t in range(1, stream.n + 1):
            batch = stream.batch(t)
            played[t - 1], info = prodr_round(learner, batch, batch.b)
            diagnostics.append(info)
    else:
        delayed_learner = DelayedProdr(config, domain, tau=tau, prune=PrunePolicy(prune))
        for t in range(1, stream.n + 1):
            feedback = None
            if t > tau:
                old = stream.batch(t - tau)
                feedback = (old, old.b)
            played[t - 1], info = delayed_learner.round(t, stream.batch(t), feedback)
            diagnostics.append(info)

    losses = np.array([squared_loss(stream.covariates[t], stream.targets[t], played[t]) for t in range(stream.n)])
    if stream.truth is not None:
        comparator = np.array([squared_loss(stream.covariates[t], stream.targets[t], stream.truth[t])
                               for t in range(stream.n)])
    else:
        _, best = best_fixed_loss(stream.covariates, stream.targets, domain)
        comparator = np.array([squared_loss(stream.covariates[t], stream.targets[t], best) for t in range(stream.n)])
    trace = compute_regret(losses, comparator, min_window=min_window)
    if static_windows:
        trace.static_windows = windowed_static_regret(stream.covariates, stream.targets, losses, domain, min_window)
    logger.info("regression over %d rounds: regret %.6g", stream.n, trace.total)
    return RegressionResult(played, trace, diagnostics)
