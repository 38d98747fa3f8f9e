"""MILP container, MPS files and solver backends.

Backends: ``bundled`` (dual simplex + branch-and-bound in this package),
``highs`` (HiGHS in process via SciPy) and ``external`` (any command that
reads MPS and writes the documented solution file).
"""

from .model import INF, MilpModel, MilpSolution, Sense, Status, VarType, max_violation, verify
from .simplex import solve_lp
from .bnb import solve_bnb
from .highs import solve_highs
from .external import SolverError, solve_external
from .mps import read_mps, write_mps
from .backends import BACKENDS, SolverConfig, solve
