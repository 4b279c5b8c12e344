"""Lattice Yang-Mills with SO(N)/U(N)/SU(N): sampling, loop algebra, and
numerical verification of the finite-N master loop equations."""

from .backend import backend_name
from .errors import ConfigError, NumericalFaultError
from .groups import GroupSpec, group_constants, group_constants_exact
from .lattice import Lattice, build_lattice
from .loops import (Loop, LoopSequence, backtrack_erase, build_operation_sets,
                    parse_loop_text, parse_sequence_text)
from .observables import Configuration, action, wilson_loop, wilson_sequence
from .samplers import ChainConfig, MCEstimate, batch_means, run_chain
from .u1 import exact_phi_u1, gauge_fix
from .verifier import (MasterEquationReport, verify_master_equation,
                       verify_with_seeds)

__version__ = "0.1.0"

__all__ = [
    "backend_name",
    "ConfigError",
    "NumericalFaultError",
    "GroupSpec",
    "group_constants",
    "group_constants_exact",
    "Lattice",
    "build_lattice",
    "Loop",
    "LoopSequence",
    "backtrack_erase",
    "build_operation_sets",
    "parse_loop_text",
    "parse_sequence_text",
    "Configuration",
    "action",
    "wilson_loop",
    "wilson_sequence",
    "ChainConfig",
    "MCEstimate",
    "batch_means",
    "run_chain",
    "exact_phi_u1",
    "gauge_fix",
    "MasterEquationReport",
    "verify_master_equation",
    "verify_with_seeds",
    "__version__",
]
