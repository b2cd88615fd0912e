"""
Stationary infinitely divisible random fields on countable groups:
simulation through Poisson suspensions, exact characteristic functions,
Monte Carlo ergodicity and weak-mixing diagnostics, and exact ergodic
theory on finite systems.
"""

from .errors import *  # noqa: F401,F403
from .groups import *  # noqa: F401,F403
from .measures import *  # noqa: F401,F403
from .poisson import *  # noqa: F401,F403
from .integrals import *  # noqa: F401,F403
from .processes import *  # noqa: F401,F403
from .ergodicity import *  # noqa: F401,F403
from .finite_exact import *  # noqa: F401,F403
from .config import ExperimentConfig, load_config, parse_config, SCHEMA_VERSION

__version__ = "0.1.0"
