"""Home energy management with a DDPG agent, rule-based and oracle baselines."""

from ._hems import *  # noqa: F401,F403
from ._hems import __doc__  # noqa: F401
