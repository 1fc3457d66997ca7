"""Covariance kernels and determinants on the discrete torus.

The covariance C = -2 (del + H^)^{-1} acts fiberwise through the spectrum of
H: on the eigenvalue lam it convolves with an explicit antiperiodic kernel
g_lam, the discrete counterpart of exp(-alpha*lam)/(1 + exp(beta*lam)).  The
kernel solves (del + lam) g = -2 delta_ap; on the single singular value
lam = n/beta it degenerates, for infinite regularization, to a two-point
spike of height 1.

Kernel magnitudes are evaluated in a log-stable form so that eigenvalues
thousands of times larger than n/beta neither overflow nor lose the bound
|g| <= 1 that the determinant estimates rest on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fermicov.spectral import (
    CutoffSpec,
    HermitianMatrix,
    SpectralData,
    bernoulli_euler_rate,
    eig_hermitian,
    singular_rate_band,
)
from fermicov.torus import APFunction, DiscreteTorus, delta_ap, derivative_matrix

__all__ = [
    "KernelEval",
    "BoundInstance",
    "kernel_g",
    "kernel_g_continuum",
    "kernel_values_at",
    "covariance_entry",
    "covariance_det",
    "sqrt_cutoff_norm",
    "instance_bound",
    "GramNormRow",
    "gram_norm_demo",
    "fit_growth_exponent",
    "decay_parameter",
    "covariance_matrix_reduced",
]


def _is_singular_rate(lam: float, torus: DiscreteTorus) -> bool:
    return abs(lam - torus.rate) <= singular_rate_band(torus)


def kernel_values_at(
    lams: np.ndarray,
    torus: DiscreteTorus,
    alpha_index: int,
    eta: float | None = None,
) -> np.ndarray:
    """Evaluate g_lam(alpha) for an array of lam at one grid point.

    With eta absent, values inside the singular band around n/beta use the
    closed infinite-regularization limit (a -1/+1 spike at alpha = beta/n and
    beta/n - beta); with eta given, the finite-regularization formula is used
    everywhere.  Off the band the result is eta-independent.
    """
    lams = np.asarray(lams, dtype=float)
    n, beta, rate = torus.n, torus.beta, torus.rate
    i0 = torus.wrap(alpha_index)
    flip = 1.0
    if i0 >= n:  # alpha in (0, beta]: antiperiodic extension g(a) = -g(a - beta)
        i0 -= n
        flip = -1.0

    singular = np.abs(lams - rate) <= singular_rate_band(torus)
    log_rates = np.where(
        singular, 1.0 if eta is None else float(eta),
        -rate * np.log(np.maximum(np.abs(1.0 - lams / rate), 1e-300)),
    )
    t = beta * log_rates / n  # per-step log magnitude
    nt = n * t
    # exponent (n - i) t - max(nt, 0) is <= 0 on both branches
    mag = np.exp((n - i0) * t - np.maximum(nt, 0.0)) / (1.0 + np.exp(-np.abs(nt)))
    signs = np.where(1.0 - lams / rate >= 0.0, 1.0, -1.0)
    sign_factor = np.where((n - i0) % 2 == 1, signs, 1.0)
    values = flip * sign_factor * mag

    if eta is None and np.any(singular):
        spike = 1.0 if i0 == 0 else 0.0  # alpha = beta/n - beta carries +1
        values = np.where(singular, flip * spike, values)
    return values


@dataclass
class KernelEval:
    """The kernel g_lam tabulated on all 2n grid points."""

    lam: float
    torus: DiscreteTorus
    eta: float | None
    values: np.ndarray = field(repr=False)

    def as_apfunction(self) -> APFunction:
        return APFunction.from_half(self.torus, self.values[: self.torus.n])

    def residual(self) -> float:
        """max_alpha |del g + lam g + 2 delta_ap| for the defining equation."""
        g = self.values
        dg = self.torus.rate * (np.roll(g, -1) - g)
        r = dg + self.lam * g + 2.0 * delta_ap(self.torus).values[:, 0].real
        return float(np.max(np.abs(r)))


def kernel_g(lam: float, torus: DiscreteTorus, eta: float | None = None) -> KernelEval:
    """Tabulate the covariance kernel g_lam on the whole grid."""
    if eta is not None and eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    half = np.array(
        [kernel_values_at(np.array([lam]), torus, i, eta)[0] for i in range(torus.n)]
    )
    values = np.concatenate([half, -half])
    return KernelEval(lam, torus, eta, values)


def kernel_g_continuum(lam: float, beta: float, alpha: float) -> float:
    """Continuum kernel exp(-alpha lam) / (1 + exp(beta lam)) for alpha in (-beta, 0]."""
    if not (-beta < alpha <= 0):
        raise ValueError(f"alpha must lie in (-beta, 0], got {alpha}")
    # shift the larger exponential into the denominator so nothing overflows
    if beta * lam > 0:
        return float(np.exp(-(alpha + beta) * lam) / (1.0 + np.exp(-beta * lam)))
    return float(np.exp(-alpha * lam) / (1.0 + np.exp(beta * lam)))


def covariance_entry(
    S: SpectralData,
    chi: CutoffSpec,
    phi1: np.ndarray,
    phi2: np.ndarray,
    alpha_index: int,
    torus: DiscreteTorus,
    eta: float | None = None,
) -> complex:
    """<phi2, (C chi(H^) phi1^)(alpha)> through the spectral representation.

    Equals sum_j g_{lam_j}(alpha) chi(lam_j) <phi2, v_j> <v_j, phi1> with the
    first slot of every inner product conjugated.
    """
    phi1 = np.asarray(phi1, dtype=complex).reshape(-1)
    phi2 = np.asarray(phi2, dtype=complex).reshape(-1)
    if phi1.shape[0] != S.dim or phi2.shape[0] != S.dim:
        raise ValueError("vector dimensions do not match the Hamiltonian")
    g = kernel_values_at(S.values, torus, alpha_index, eta)
    c1 = S.vectors.conj().T @ phi1
    c2 = S.vectors.conj().T @ phi2
    return complex(np.sum(g * chi(S.values) * np.conj(c2) * c1))


@dataclass
class BoundInstance:
    """One determinant-bound test case.

    points holds 2N triples (alpha_index, phi, j): a grid index with
    alpha in [0, beta), a fiber vector, and a 0-based color index into M.
    """

    H: HermitianMatrix
    torus: DiscreteTorus
    chi: CutoffSpec
    M: np.ndarray
    points: list

    def __post_init__(self):
        self.M = np.asarray(self.M, dtype=float)
        if self.M.ndim != 2 or self.M.shape[0] != self.M.shape[1]:
            raise ValueError("M must be a square matrix")
        if not np.allclose(self.M, self.M.T, atol=1e-10 * max(1.0, np.abs(self.M).max())):
            raise ValueError("M must be symmetric")
        if np.abs(self.M).max() == 0:
            raise ValueError("M must be nonzero")
        scale = np.abs(self.M).max()
        if np.linalg.eigvalsh(self.M).min() < -1e-10 * scale:
            raise ValueError("M must be positive semidefinite")
        if len(self.points) % 2 != 0 or not self.points:
            raise ValueError("points must hold 2N triples with N >= 1")
        norm_points = []
        lo, hi = self.torus.zero_index, self.torus.size - 2
        for alpha_index, phi, j in self.points:
            i = self.torus.wrap(int(alpha_index))
            if not lo <= i <= hi:
                raise ValueError("alpha points must lie on the grid within [0, beta)")
            phi = np.asarray(phi, dtype=complex).reshape(-1)
            if phi.shape[0] != self.H.dim:
                raise ValueError("fiber vector dimension does not match H")
            if not 0 <= int(j) < self.M.shape[0]:
                raise ValueError("color index out of range")
            norm_points.append((i, phi, int(j)))
        self.points = norm_points

    @property
    def pair_count(self) -> int:
        return len(self.points) // 2

    @property
    def m(self) -> int:
        return self.M.shape[0]


def covariance_det(
    inst: BoundInstance,
    eta: float | None = None,
    spectral: SpectralData | None = None,
) -> complex:
    """det over k,l of M[j_k, j_{N+l}] <phi_{N+l}, (C chi phi_k^)(alpha_k - alpha_{N+l})>."""
    S = spectral if spectral is not None else eig_hermitian(inst.H)
    N = inst.pair_count
    mat = np.zeros((N, N), dtype=complex)
    for k in range(N):
        ik, phik, jk = inst.points[k]
        for l in range(N):
            il, phil, jl = inst.points[N + l]
            diff = inst.torus.index_diff(ik, il)
            mat[k, l] = inst.M[jk, jl] * covariance_entry(
                S, inst.chi, phik, phil, diff, inst.torus, eta
            )
    return complex(np.linalg.det(mat))


def sqrt_cutoff_norm(S: SpectralData, chi: CutoffSpec, phi: np.ndarray) -> float:
    """|| sqrt(chi(H)) phi || computed through the eigenbasis."""
    c = S.vectors.conj().T @ np.asarray(phi, dtype=complex).reshape(-1)
    return float(np.sqrt(np.sum(chi(S.values) * np.abs(c) ** 2)))


def instance_bound(inst: BoundInstance, spectral: SpectralData | None = None) -> float:
    """The claimed bound prod_q ||sqrt(chi) phi_q|| * M[j_q, j_q]^(1/2)."""
    S = spectral if spectral is not None else eig_hermitian(inst.H)
    out = 1.0
    for _, phi, j in inst.points:
        out *= sqrt_cutoff_norm(S, inst.chi, phi) * np.sqrt(max(inst.M[j, j], 0.0))
    return float(out)


@dataclass
class GramNormRow:
    """One torus row of the naive-Gram degeneration table."""

    n: int
    beta: float
    cov_norm: float
    embed_norm: float
    gram_factor: float
    resolvent_norms: np.ndarray


def covariance_matrix_reduced(H: np.ndarray, torus: DiscreteTorus) -> np.ndarray:
    """Dense -2 (del + H^)^{-1} on the reduced antiperiodic representation."""
    H = np.asarray(H, dtype=complex)
    d = H.shape[0]
    A = np.kron(derivative_matrix(torus).astype(complex), np.eye(d)) + np.kron(
        np.eye(torus.n), H
    )
    return -2.0 * np.linalg.inv(A)


def gram_norm_demo(H: HermitianMatrix, torus_list: list) -> tuple[list, bool]:
    """Tabulate ||C_H|| and the embedding norm ||e1^|| over a list of tori.

    Returns (rows, zero_mode_present).  The embedding norm sqrt(n/(2 beta))
    grows like sqrt(n); gram_factor = ||C_H||^(1/2) * ||e1^|| is the
    per-determinant-factor weight the naive Gram estimate would charge.  The
    zero-mode precondition (0 in spec(H) within 1e-9) is reported but the
    computation runs either way.
    """
    S = eig_hermitian(H)
    zero_mode = bool(np.any(np.abs(S.values) <= 1e-9))
    rows = []
    for torus in torus_list:
        C = covariance_matrix_reduced(H.matrix, torus)
        cov_norm = float(np.linalg.norm(C, 2))
        embed_norm = float(np.sqrt(torus.rate / 2.0))
        dmat = derivative_matrix(torus).astype(complex)
        res = np.array(
            [
                2.0 * np.linalg.norm(np.linalg.inv(dmat + lam * np.eye(torus.n)), 2)
                for lam in S.values
            ]
        )
        rows.append(
            GramNormRow(
                n=torus.n,
                beta=torus.beta,
                cov_norm=cov_norm,
                embed_norm=embed_norm,
                gram_factor=float(np.sqrt(cov_norm) * embed_norm),
                resolvent_norms=res,
            )
        )
    return rows, zero_mode


def fit_growth_exponent(ns, vals) -> float:
    """Least-squares slope of log(vals) against log(ns)."""
    return float(np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(vals, float)), 1)[0])


def decay_parameter(
    S: SpectralData,
    chi: CutoffSpec,
    basis: list,
    torus: DiscreteTorus,
    eta: float | None = None,
) -> float:
    """Finite-n snapshot of the covariance summability parameter.

    max over basis index i of (beta/n) sum_tau sum_q |<phi_q, (C chi phi_i^)(tau)>|
    with both i and q running over the supplied orthonormal family.  No limit
    over n is attempted; callers report the n used.
    """
    B = np.array([np.asarray(v, dtype=complex).reshape(-1) for v in basis]).T
    gram = B.conj().T @ B
    if np.max(np.abs(gram - np.eye(B.shape[1]))) > 1e-10:
        raise ValueError("basis is not orthonormal to 1e-10")
    C = S.vectors.conj().T @ B  # column i = eigenbasis coefficients of phi_i
    weights = chi(S.values)
    G = np.array(
        [kernel_values_at(S.values, torus, tau, eta) for tau in range(torus.size)]
    )  # shape (2n, d)
    best = 0.0
    for i in range(B.shape[1]):
        # entries[tau, q] = sum_j g_j(tau) chi_j conj(C[j,q]) C[j,i]
        entries = (G * weights) @ (np.conj(C) * C[:, i][:, None])
        best = max(best, float(torus.step * np.sum(np.abs(entries))))
    return best
