# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or go to <https://opensource.org/licenses/MIT>.

"""Dynamic regret control of linear systems under adversarial disturbances."""

from .adversaries import (DisturbanceAdversary, LowerBoundAdversary, PiecewiseConstantAdversary,
                          SinusoidalDriftAdversary, ReplayAdversary, ComparatorOracle, FixedDapComparator,
                          SuppliedComparator, BinnedLowerBoundComparator, lower_bound_adversary,
                          lower_bound_bin_width, check_comparator_budget)
from .barrier import (CovariateBatch, eval_barrier, barrier_subgradient, minimax_project, squared_loss,
                      surrogate_loss)
from .config import LqrTolerances, SolverConfig, ProjectionConfig, worker_count
from .dap_policy import (DapConfig, DapParams, DapSequence, dap_feedforward, dap_control, flatten, deflatten,
                         project_dap, is_member, tv_of_sequence)
from .domain import DecisionDomain, BoxDomain, DapSpectralDomain
from .errors import *
from .flh import PrunePolicy, FlhState, flh_init, flh_predict, flh_update
from .harness import (ZeroController, DapSequenceController, FixedDapController, SimulationResult, fixed_dap_losses,
                      ExperimentResult, SweepGrid, SweepResult, RegressionStream, RegressionResult, simulate,
                      rollout_comparator, run_experiment, lower_bound_experiment, sweep, run_regression,
                      drifting_regression_stream, load_stream, load_grid, load_experiment, write_trace_csv)
from .lqr_pipeline import ControllerState, build_covariate, build_bias, recover_disturbance, control_step
from .lqr_system import (SystemSpec, LqrConstants, solve_dare, compute_controller, spectral_sigma,
                         stability_constants, compute_delay_h, compute_q_inf, system_constants, lqr_loss,
                         lower_bound_system, load_system_spec)
from .ons import OnsState, ExpConcaveSurrogate, ons_init, ons_update, build_expconcave_surrogate
from .prodr import (ProdrConfig, ProdrState, DelayedProdr, RoundDiagnostics, derive_config, lqr_prodr_config,
                    prodr_init, prodr_round, delayed_round)
from .regret import (RegretTrace, WindowRegret, QuadraticLosses, compute_regret, dyadic_windows, best_fixed_regret,
                     windowed_static_regret, best_fixed_quadratic, windowed_fixed_policy_regret, fit_loglog_slope)

# exceptions
__api_classes__ = [NonstatLqrError, NonConvergent, SingularInnerMatrix, UnstableSystem, DimensionMismatch,
                   InvalidBounds, InvalidBudget, SolverNonConvergent, ProjectionNonConvergent,
                   DisturbanceBoundViolated, NumericalOverflow, RoundError, CommandLineError]

# classes
__api_classes__.extend([LqrTolerances, SolverConfig, ProjectionConfig, SystemSpec, LqrConstants,
                        DapConfig, DapParams, DapSequence, DecisionDomain, BoxDomain, DapSpectralDomain,
                        CovariateBatch, OnsState, ExpConcaveSurrogate, PrunePolicy, FlhState,
                        ProdrConfig, ProdrState, DelayedProdr, RoundDiagnostics, ControllerState,
                        DisturbanceAdversary, LowerBoundAdversary, PiecewiseConstantAdversary,
                        SinusoidalDriftAdversary, ReplayAdversary, ComparatorOracle, FixedDapComparator,
                        SuppliedComparator, BinnedLowerBoundComparator, RegretTrace, WindowRegret,
                        QuadraticLosses, ZeroController, DapSequenceController, FixedDapController,
                        SimulationResult, ExperimentResult, SweepGrid, SweepResult, RegressionStream, RegressionResult])

# functions
__api_classes__.extend([worker_count, solve_dare, compute_controller, spectral_sigma, stability_constants,
                        compute_delay_h, compute_q_inf, system_constants, lqr_loss, lower_bound_system,
                        load_system_spec, dap_feedforward, dap_control, flatten, deflatten, project_dap,
                        is_member, tv_of_sequence, eval_barrier, barrier_subgradient, minimax_project,
                        squared_loss, surrogate_loss, ons_init, ons_update, build_expconcave_surrogate,
                        flh_init, flh_predict, flh_update, derive_config, lqr_prodr_config, prodr_init,
                        prodr_round, delayed_round, build_covariate, build_bias, recover_disturbance,
                        control_step, lower_bound_adversary, lower_bound_bin_width, check_comparator_budget,
                        compute_regret, dyadic_windows, best_fixed_regret, windowed_static_regret,
                        best_fixed_quadratic, windowed_fixed_policy_regret, fixed_dap_losses,
                        fit_loglog_slope, simulate, rollout_comparator, run_experiment,
                        lower_bound_experiment, sweep, run_regression, drifting_regression_stream,
                        load_stream, load_grid, load_experiment, write_trace_csv])

# define the public API
__all__ = [c.__name__ for c in __api_classes__]
