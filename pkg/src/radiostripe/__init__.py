"""Radio-stripe deployment optimization for indoor wireless power transfer."""

__version__ = "0.1.0"

from .channel import (channel_coefficient, channel_gain, channel_gains, channel_matrix,
                      channel_vector, near_field_bounds, radiation_gain, wavelength)
from .deploy_opt import (DeploymentSolution, OptimizerSettings, deployment_objective,
                         optimize_line, optimize_polygon)
from .evaluate import (EvalResult, MonteCarloSpec, grid_search_oracle, monte_carlo,
                       near_field_report, sweep_frequency, sweep_length)
from .formats import ConfigError, parse_scenario
from .gp import (GPProblem, Monomial, Posynomial, SignomialProblem, gp_solve,
                 monomial_condense, sgp_solve)
from .precoding import (dedicated_bound, maxmin_power_allocation, mrt_precoders,
                        received_power)
from .scene import (Deployment, Hotspot, Scenario, place_center_fd_array,
                    place_center_square_stripe, place_line, place_polygon)

__all__ = [
    "ConfigError", "Deployment", "DeploymentSolution", "EvalResult", "GPProblem", "Hotspot",
    "Monomial", "MonteCarloSpec", "OptimizerSettings", "Posynomial", "Scenario",
    "SignomialProblem", "channel_coefficient", "channel_gain", "channel_gains",
    "channel_matrix", "channel_vector", "dedicated_bound", "deployment_objective",
    "gp_solve", "grid_search_oracle", "maxmin_power_allocation", "monomial_condense",
    "monte_carlo", "mrt_precoders", "near_field_bounds", "near_field_report",
    "optimize_line", "optimize_polygon", "parse_scenario", "place_center_fd_array",
    "place_center_square_stripe", "place_line", "place_polygon", "radiation_gain",
    "received_power", "sgp_solve", "sweep_frequency", "sweep_length", "wavelength",
]
