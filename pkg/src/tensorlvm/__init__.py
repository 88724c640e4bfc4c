"""CP tensor decompositions and method-of-moments learning."""

from .direct import AlsConfig, als, als_symmetric, mttkrp, simdiag
from .errors import ContaminationWarning, NumericalError, ValidationError
from .evaluation import MatchResult, match_by_distance, match_components, perturbation_sweep
from .formats import read_dten, read_factors, read_ppm, write_dten, write_factors, write_ppm
from .imaging import compress_image
from .linalg import cca, pca, pseudo_inverse, svd, truncated_svd, whitening_matrix
from .overcomplete import foobi, lift_third_order, rank1_detector, tensorize_decompose
from .power import PowerConfig, decompose_orthogonal, power_step, run_power_method
from .report import DecompositionReport
from .rng import stream
from .stream import TripleSampleBatch, empirical_tensor, online_power_decompose
from .tensor import (
    KruskalForm,
    apply_vectors,
    fold,
    frobenius_norm,
    hadamard,
    khatri_rao,
    kruskal_to_tensor,
    multilinear,
    outer_rank1,
    spectral_norm_estimate,
    symmetrize_tensor,
    unfold,
)
from .whitening import decompose_nonorthogonal, equal_weight_parameters, whiten, unwhiten

__version__ = "0.1.0"
