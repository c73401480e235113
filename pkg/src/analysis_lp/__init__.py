"""Analysis-based lp recovery with redundant frames."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .frames import (Frame, DualReport, build_frame, canonical_dual, dual_report,  # noqa: F401
                     frame_bounds, identifiability, q_controllability, scalability,
                     verify_dual)
from .rip import (estimate_localization, estimate_psi_rip, measurement_bound,  # noqa: F401
                  psi_rip_profile, sorted_block_tail_check)
from .sensing import (SensingOperator, dense_operator, gaussian_operator,  # noqa: F401
                      masked_fft_operator, radial_mask, subsampled_orthogonal)
from .solver import (SolverConfig, ReconstructionResult, best_s_term,  # noqa: F401
                     reweighted_lp, reweighted_lp_dual, weighted_l1_analysis)
from .stability import (StabilityConstants, admissible_sparsity, cone_constraint_check,  # noqa: F401
                        error_bound, gamma_dual, gamma_parseval, gamma_primal,
                        stability_constants)
from .transforms import (AnalysisOperator, canonical_dual_operator, matrix_operator,  # noqa: F401
                         undecimated_haar, undecimated_haar_2d)
