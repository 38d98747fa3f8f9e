"""Planning and evaluation of post-hurricane relief logistics.

Submodules:

``instance``     network, capacities and costs
``deprivation``  deprivation cost of unmet demand
``scenario``     Markov-modulated demand/supply sampling
``milp``         model container, MPS I/O and solvers
``planner``      static and rolling-horizon planning models
``evaluate``     out-of-sample evaluation and experiment reports
``cli``          command-line front end
"""

from .instance import Instance, InstanceError, default_instance, load_instance, scale_instance, write_instance
from .deprivation import build_dep_table, compute_dep, expected_dep_coefficients, lambda_fn
from .scenario import (
    ConditionalDists,
    MarkovSpec,
    SamplePath,
    ScenarioSet,
    default_stochastic_model,
    empirical_check,
    sample_path,
    sample_scenario_set,
)

__version__ = "0.1.0"
