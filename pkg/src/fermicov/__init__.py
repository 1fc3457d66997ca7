"""Numerical verification of determinant bounds for fermionic covariances.

The package instantiates, at desk scale, the objects behind sharp bounds on
determinants of discrete imaginary-time fermionic covariances: the discrete
antiperiodic torus and its covariance kernels, quasi-free states on finite
fermionic Fock spaces, the finite-dimensional modular operator, and the
Schatten/Hoelder inequalities that produce a universal per-factor bound of 1.
Every analytic formula is cross-checked against an independent brute-force
oracle (dense linear solves, explicit Fock-space traces).
"""

from fermicov.torus import (
    APFunction,
    DiscreteTorus,
    convolve,
    delta_ap,
    discrete_derivative,
    embed_vector,
)
from fermicov.spectral import (
    CutoffSpec,
    HermitianMatrix,
    SpectralData,
    apply_scalar_function,
    bernoulli_euler_rate,
    eig_hermitian,
    sign_power,
)
from fermicov.covariance import (
    BoundInstance,
    KernelEval,
    covariance_det,
    covariance_entry,
    decay_parameter,
    gram_norm_demo,
    kernel_g,
    kernel_g_continuum,
)
from fermicov.mspace import QuotientSpace, TreeGraph, bk_matrix, quotient_space
from fermicov.car_fock import (
    FockSpace,
    MonomialSpec,
    QuasiFreeState,
    annihilator,
    creator,
    expect_monomial,
    jordan_wigner,
    quasifree_density,
    second_quantize,
    wick_determinant,
)
from fermicov.modular import (
    HSVector,
    ModularData,
    correlation_vector,
    determinant_representation,
    modular_power,
    schatten_norm,
)
from fermicov.verify import (
    BoundReport,
    SharpnessReport,
    bound_check_suite,
    build_ordering_permutation,
    sharpness_sweep,
    universal_bound_estimate,
)

__version__ = "0.1.0"
