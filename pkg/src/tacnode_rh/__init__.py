"""Explicit solution of the 4x4 tacnode Riemann-Hilbert problem.

The public surface is re-exported here; see the submodules for details.
"""

from .airy import ai_and_prime
from .airyop import AiryResolvent, PainleveQuadruple, QuadratureConfig, build_resolvent
from .errors import (BranchCutError, ConsistencyError, ConvergenceError, CrossCheckError,
                     IllConditionedError, IntegrationError, InvalidArgumentError,
                     InvalidParameterError, NearDiagonalError, OnContourError,
                     OverflowGuardError, PrecisionWarning, TacnodeError, TruncationError)
from .kernels import (KernelValue, dg_kernel, dg_kernel_diag, dg_kernel_s_derivative,
                      dg_kernel_via_integral, psi_2x2, tacnode_kernel, tacnode_kernel_diag)
from .painleve import hm_ode_oracle, hm_values
from .tacnode import (TacnodeParams, TacnodeSystem, assemble_M, derive_constants,
                      jump_matrix, m_solution, sector_of)
from .verify import ResidualReport, run_check, run_suite

__version__ = "0.1.0"
