"""Two-stage adjustable robust linear optimization toolkit.

min_x c^T x + max_{h in U} min_{y >= 0, By >= h - Ax} d^T y with x >= 0
and right-hand-side uncertainty: affine recourse policies, an exact
cutting-plane loop driven by a digitized bilinear separation MIP, and
self-contained simplex / branch-and-bound kernels underneath.
"""

from adjrobust.adjustable import (AdjustableResult, Digitization,
                                  SeparationError, adjustable_special_case,
                                  separate, solve_adjustable,
                                  solve_adjustable_vertex_oracle)
from adjrobust.affine import (AffineResult, solve_affine,
                              solve_affine_dualized,
                              solve_affine_symmetric_worstcase)
from adjrobust.analysis import (kappa_sandwich, theorem1_bound,
                                theorem2_bound, worstcase_lower_bound)
from adjrobust.bench import BenchConfig, BenchRow, BenchSummary, run_benchmark
from adjrobust.instances import (Instance, InstanceError,
                                 InstanceFormatError, RandomSpec,
                                 UncertaintySet, budget_set,
                                 enumerate_vertices, gen_iid, gen_worst_case,
                                 read_instance, write_instance)
from adjrobust.lp import LinearProgram, LpError, solve_lp
from adjrobust.mip import MipError, MixedBinaryProgram, solve_mip

__version__ = "0.1.0"

__all__ = [
    "AdjustableResult", "AffineResult", "BenchConfig", "BenchRow",
    "BenchSummary", "Digitization", "Instance", "InstanceError",
    "InstanceFormatError", "LinearProgram", "LpError", "MipError",
    "MixedBinaryProgram", "RandomSpec", "SeparationError", "UncertaintySet",
    "adjustable_special_case", "budget_set", "enumerate_vertices", "gen_iid",
    "gen_worst_case", "kappa_sandwich", "read_instance", "run_benchmark",
    "separate", "solve_adjustable", "solve_adjustable_vertex_oracle",
    "solve_affine", "solve_affine_dualized",
    "solve_affine_symmetric_worstcase", "solve_lp", "solve_mip",
    "theorem1_bound", "theorem2_bound", "worstcase_lower_bound",
    "write_instance",
]
