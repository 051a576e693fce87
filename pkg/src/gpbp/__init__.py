"""Cavity message-passing solvers for noisy low-rank matrix completion.

The package provides two exact edge-message solvers (Gaussian-parameter
belief propagation and its alternating-least-squares reduction), their
memory-friendly node-state approximations, a population-dynamics sampler
for ensemble-level predictions, evaluation protocols, and independent
verification oracles, plus the ``gpbp`` experiment command line.
"""

from .obsgraph import (ObservationGraph, GroundTruth, NoiseModel, Fold,
                       generate_mask, generate_synthetic, load_ratings,
                       sparsify_by_user, split_folds, save_instance,
                       load_instance)
from .cavity import (EdgeMessage, Contribution, NodeState,
                     contribution_from_message, damped_contributions,
                     accumulate_node, cavity_downdate, cavity_downdate_many,
                     alpha_from, sm_downdate, sm_update)
from .config import SolverConfig
from .errors import DivergenceError, SingularityError
from .exact import (SolverState, RunResult, init_state, half_sweep, run,
                    inverse_drift, max_relative_change)
from .approx import ApproxState, init_approx_state, approx_half_sweep, approx_run
from .popdyn import PDConfig, PDPool, PDResult, pd_init, pd_sweep, pd_readout, pd_run
from .metrics import nrmse, rmse_on_edges, reconstruction_rate
from .crossval import (ALGORITHMS, CVResult, geometric_lambda_grid, nested_cv,
                       run_algorithm)
from .trace import Trace, write_csv, read_csv
from .oracles import (quadrature_moments, svt_solution, alt_min_oracle,
                      completion_objective, AltMinResult)
from .seeding import derive_seed, derive_rng
from .experiments import run_experiment, verify_battery

__version__ = "0.1.0"
