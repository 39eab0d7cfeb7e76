"""BGP prefix hijack detection, de-aggregation mitigation, and simulation."""

from ._pguard import *  # noqa: F401,F403

__all__ = [name for name in dir() if not name.startswith("_")]
