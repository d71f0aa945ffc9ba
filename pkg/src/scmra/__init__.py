"""Grant-free MIMO random access over self-conjugating metasurfaces.

Symbol-time simulator of the scouting/communication-task protocol, the
backscatter signal model, closed-form convergence analytics, and the
experiment service/CLI built on top of them.
"""

__version__ = "0.1.0"

from .config import ConfigError, SimConfig, config_from_dict, load_config  # noqa: F401
