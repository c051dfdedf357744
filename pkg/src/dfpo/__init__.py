"""Derivative-free position optimization for movable-antenna uplink systems.

Simulates a base station whose antennas can move inside a small planar
region, and optimizes their positions from pilot measurements alone using
zeroth-order gradient estimates with adaptive momentum. Ships the channel
model, the sealed measurement environment with pilot budgeting, receive
combiners and rate/MSE objectives, spacing refinement, baseline schemes and
a seeded Monte Carlo experiment harness with a CLI.
"""

from .baselines import PsoConfig, fpa_layout, pso_upper_bound, random_position_selection
from .environment import (PilotBudget, PilotConfig, PilotEnvironment,
                          dbm_to_watts, dft_pilot_matrix, ls_estimate,
                          watts_to_dbm)
from .errors import (AvailableGridExhausted, BudgetExceeded, ConfigError,
                     DegenerateChannel, GridEmpty, SingularPilot, UsageError)
from .experiments import (ExperimentConfig, ResultRow, evaluate_sum_rate,
                          load_config, run_sweep, run_trial, snr_surface,
                          write_surface_csv)
from .objectives import (RateReport, mmse_combiner, mrc_combiner,
                         multi_user_mse_objective, rate_report,
                         single_user_power_objective)
from .refinement import (GridSpec, RefinementSets, build_grid,
                         classify_antennas, refine_positions)
from .scenario import (CarrierConfig, MovableRegion, ScenarioConfig,
                       ScenarioParams, UserChannelParams, batch_channel_matrix,
                       channel_matrix, channel_response, generate_scenario,
                       load_scenario, path_distance_delta,
                       phase_variation_vector, save_scenario)
from .zo_optimizer import (AdamState, Trajectory, ZOConfig, adamm_step,
                           boundary_project, optimize_multi_user,
                           optimize_single_user, sample_direction,
                           select_initial_position, zo_gradient)

__version__ = "0.1.0"
