from .session import Session, TickConfig, run_trace
from .ws import SessionServer

__all__ = ["Session", "TickConfig", "run_trace", "SessionServer"]
