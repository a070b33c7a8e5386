"""hymadsim: hybrid DTN-MANET routing protocols under a deterministic simulator."""

from .engine import Engine, Event, EventKind, RunSeed, split_rng, seconds, SECOND, MS
from .errors import ConfigError, TraceError

__version__ = "0.1.0"
