"""Cycle-accurate simulator for a tagged-token dataflow fabric with
wave-ordered memory, decoupled store queues, and speculative wave ordering."""

from .asm import AsmError, emit_program, parse_program
from .engine import SimResult, Simulator, simulate
from .fabric import FabricConfig
from .harness import RunConfig, emit_report, run, sweep
from .ir import Program, validate_program
from .kernels import KERNELS, build_kernel
from .memory import DeadlockError, MemoryConfig, Metrics
from .oracle import compare_memory, interpret

__all__ = [
    "AsmError",
    "DeadlockError",
    "FabricConfig",
    "KERNELS",
    "MemoryConfig",
    "Metrics",
    "Program",
    "RunConfig",
    "SimResult",
    "Simulator",
    "build_kernel",
    "compare_memory",
    "emit_program",
    "emit_report",
    "interpret",
    "parse_program",
    "run",
    "simulate",
    "sweep",
    "validate_program",
]
