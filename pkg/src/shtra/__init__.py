"""Smooth hierarchical tensor-ring completion (SHTRA).

Tensor-ring completion whose cores are additionally regularised by the
t-SVD tensor nuclear norm, with weighted anisotropic total variation on the
recovered tensor, solved by ADMM.
"""

from .metrics import MetricReport, evaluate, mpsnr, mssim, psnr, rse, sam, ssim
from .solver import SolverConfig, SolverState, solve
from .tensor import (
    ObservationMask,
    fold_circular,
    fold_standard,
    frobenius_norm,
    inner_product,
    make_mask,
    permute_circular,
    unfold_circular,
    unfold_standard,
)
from .tr import (
    TRChain,
    chain_shift,
    random_chain,
    subchain_matrix,
    tensor_connect_product,
    tr_element,
    tr_reconstruct,
)
from .tsvd import sth, t_svd, t_svt, tnn, tubal_rank
from .tv import apply_d, apply_d_adjoint, dtd_spectrum, solve_z

__version__ = "0.1.0"
