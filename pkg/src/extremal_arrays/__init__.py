"""Extremes of triangular arrays of elliptical random vectors and their limit laws."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .core_samplers import *  # noqa: E402,F401,F403
from .norming import *  # noqa: E402,F401,F403
from .triangular_arrays import *  # noqa: E402,F401,F403
from .limit_laws import *  # noqa: E402,F401,F403
from .extremal_processes import *  # noqa: E402,F401,F403
from .harness import *  # noqa: E402,F401,F403
from .rng import make_rng  # noqa: E402,F401
