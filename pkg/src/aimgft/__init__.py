"""Graph Fourier transforms for directed graphs with defective adjacency matrices.

Two routes to a Fourier basis are provided. :class:`JordanGFT` computes
Jordan chains and projects onto each Jordan subspace. :class:`InexactGFT`
only needs eigenvectors: it completes the basis of the one deficient
eigenvalue with a single kernel computation and projects onto whole
generalized eigenspaces, which gives the same per-eigenvalue projections.
"""

from .aim import (
    AimSpectrum,
    Basis,
    Component,
    DualPair,
    aim_transform,
    check_g_equivalence,
    complete_basis,
    component_energy,
    component_projector,
    dual_basis,
    energy_ranking,
    exact_gft,
    jordan_gft,
    known_eigenvectors,
    projection_agreement,
    spectrum_of,
)
from .chains import (
    ChainSet,
    CostEstimate,
    assemble_jordan_basis,
    chain_residual,
    compute_chains,
    estimate_chain_cost,
)
from .estimators import InexactGFT, JordanGFT
from .exceptions import (
    AimGFTError,
    AmbiguousClusterWarning,
    BasisRankError,
    ChainError,
    IllConditionedBasisWarning,
    InputError,
    NumericalError,
    ParseError,
    SpectralAmbiguityError,
)
from .graph import Graph, GraphSignal, NodeMeta, load_graph, load_signal, permute_graph, save_graph
from .spectral import (
    KernelProfile,
    Spectrum,
    ZeroVerdict,
    cluster_eigenvalues,
    eigendecompose,
    generalized_eigenspace,
    kernel_basis,
    kernel_dim_profile,
    numerical_rank,
    verify_numerical_zero,
)
from .variation import TvReport, tv_bound, tv_component, tv_isomorphism_check, tv_order, tv_report

__version__ = "0.1.0"
