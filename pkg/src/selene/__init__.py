"""SELENE: a small imperative language with scheduled, padded network output.

The package bundles a parser, a security type checker, an interpreter with
a clocked packet runtime, adversary projections and a bounded
noninterference harness.
"""

__version__ = "0.1.0"

from .core import GlobalConfig, ProgramConfig, TypeEnv, initial_global, initial_memory  # noqa: E402
from .lattice import Lattice  # noqa: E402
from .parser import build_gamma, load_program, parse_program, pretty_program  # noqa: E402
from .runtime import run  # noqa: E402
from .typecheck import check_program  # noqa: E402

__all__ = [
    "GlobalConfig",
    "Lattice",
    "ProgramConfig",
    "TypeEnv",
    "build_gamma",
    "check_program",
    "initial_global",
    "initial_memory",
    "load_program",
    "parse_program",
    "pretty_program",
    "run",
]
