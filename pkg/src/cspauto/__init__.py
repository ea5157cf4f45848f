"""cspauto: CSP semantics, refinement checking and automotive attack test generation."""

__version__ = "0.1.0"

from cspauto._backend import BACKEND
from cspauto.kernel import (
    SKIP,
    STOP,
    TAU,
    TICK,
    Environment,
    Event,
    Lts,
    alphabet,
    build_lts,
    check_guarded,
    event,
    step,
)
from cspauto.lang import parse, print_env
from cspauto.refinement import (
    check_failures_refinement,
    check_traces_refinement,
    deadlock_free,
    normalize,
)
from cspauto.semantics import failures_up_to, is_deterministic, refusals_after, traces_up_to

__all__ = [
    "BACKEND", "SKIP", "STOP", "TAU", "TICK", "Environment", "Event", "Lts",
    "alphabet", "build_lts", "check_guarded", "event", "step", "parse", "print_env",
    "check_failures_refinement", "check_traces_refinement", "deadlock_free", "normalize",
    "failures_up_to", "is_deterministic", "refusals_after", "traces_up_to",
]
