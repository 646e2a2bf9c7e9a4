"""Network measurement model: differencing operators and covariance algebra.

This module owns every covariance structure the estimators and bounds
consume:

* single-difference (receiver-minus-base) and double-difference
  (minus-pivot-satellite) operators for a network of N receivers,
* the per-receiver, single-differenced, double-differenced and
  alpha-parameterized covariances (``alpha`` is the base-to-receiver noise
  variance ratio; the base noise is common to all differenced measurements,
  which is where every off-diagonal block comes from),
* the two-cluster covariance for one constrained user aided by ``N_o``
  open-sky users, together with its closed-form inverse expressed through
  six scalar coefficients ``beta0..beta5`` of (alpha, N_o).

The closed forms are the fast path; tests invert the assembled dense
matrices independently to validate them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "NetworkSpec",
    "BetaSet",
    "StructuredCovariance",
    "sd_operator",
    "dd_operator",
    "pivot_difference",
    "per_receiver_cov",
    "sd_covariance",
    "alpha_cov",
    "dd_covariance",
    "clustered_obs",
    "clustered_cov",
    "beta",
    "closed_form_inverse",
]

_SYM_TOL = 1e-12
_PSD_FLOOR = 1e-10

COVARIANCE_TAGS = ("raw", "sd_code", "sd_phase", "dd_code", "dd_phase", "clustered")


@dataclass(frozen=True)
class NetworkSpec:
    """Static description of a cooperative receiver network.

    N_c constrained (aided) users see only the K_c common satellites; N_o
    aiding users and the base see all K_c + K_o.  ``alpha`` is the base
    station's noise variance divided by the (identical) user noise variance.
    ``weighting`` selects the per-satellite weight model: ``identity`` for
    equal variances, ``elevation`` for variance scaled by 1/sin^2(elevation).
    """

    N_c: int
    N_o: int
    K_c: int
    K_o: int
    alpha: float
    sigma_rho: float
    sigma_phi: float
    wavelength: float
    weighting: str = "identity"

    def __post_init__(self) -> None:
        if self.N_c < 0 or self.N_o < 0 or self.N_c + self.N_o < 1:
            raise ValueError("need N_c >= 0, N_o >= 0 and at least one user")
        if self.K_c < 1:
            raise ValueError("K_c must be >= 1")
        if self.K_o < 0:
            raise ValueError("K_o must be >= 0")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.sigma_rho <= 0 or self.sigma_phi <= 0:
            raise ValueError("noise standard deviations must be positive")
        if not self.sigma_phi < self.sigma_rho:
            raise ValueError("carrier-phase noise must be below code noise")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self.weighting not in ("identity", "elevation"):
            raise ValueError(f"unknown weighting {self.weighting!r}")

    @property
    def N(self) -> int:
        return self.N_c + self.N_o

    @property
    def K(self) -> int:
        return self.K_c + self.K_o


@dataclass(frozen=True)
class BetaSet:
    """The six scalar coefficients that parameterize the two-cluster
    covariance inverse and Fisher information.

    Constructed so that ``beta1 == beta2 + 1`` and ``beta4 == beta5 + 1``
    hold bit-exactly (they are built from the same intermediate quantities),
    and at alpha = 0 the set degenerates to (1, 1, 0, 0, 1, 0).
    """

    beta0: float
    beta1: float
    beta2: float
    beta3: float
    beta4: float
    beta5: float

    def as_tuple(self) -> tuple:
        return (self.beta0, self.beta1, self.beta2, self.beta3, self.beta4, self.beta5)


def beta(alpha: float, N_o: int) -> BetaSet:
    """Coefficients beta0..beta5 as functions of (alpha, N_o).

    Compact recurrences (equivalent to the full rational forms):

        beta0 = 1 / (1 + alpha * N_o)
        beta2 = -alpha / (alpha * N_o + alpha + 1),   beta1 = 1 + beta2
        beta5 = -alpha * beta0,                       beta4 = 1 + beta5
        beta3 = alpha * beta2 * beta0

    The additive identities are therefore exact by construction.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if N_o < 0:
        raise ValueError("N_o must be >= 0")
    beta0 = 1.0 / (1.0 + alpha * N_o)
    beta2 = -alpha / (alpha * N_o + alpha + 1.0)
    beta1 = 1.0 + beta2
    beta5 = -alpha * beta0
    beta4 = 1.0 + beta5
    beta3 = alpha * beta2 * beta0
    return BetaSet(beta0, beta1, beta2, beta3, beta4, beta5)


def beta_exact(alpha: Fraction, N_o: int) -> tuple:
    """Rational-arithmetic version of :func:`beta` (full forms), used as an
    exactness oracle in tests and nowhere in the numerical pipeline."""
    a = Fraction(alpha)
    b0 = 1 / (1 + a * N_o)
    b1 = (a * N_o + 1) / (a * N_o + a + 1)
    b2 = -a / (a * N_o + a + 1)
    b3 = -(a**2) / ((1 + a * N_o) * (a * N_o + a + 1))
    b4 = (1 + a * (N_o - 1)) / (1 + a * N_o)
    b5 = -a / (1 + a * N_o)
    return (b0, b1, b2, b3, b4, b5)


@dataclass(frozen=True)
class StructuredCovariance:
    """A dense covariance with its block partition and provenance tag.

    ``block_layout`` records the per-block edge sizes of the natural
    partition (receivers for network covariances), so structured consumers
    need not re-derive it.  Construction validates symmetry to 1e-12 and
    positive semi-definiteness with an eigenvalue floor of -1e-10 times the
    largest eigenvalue.
    """

    dense: np.ndarray
    block_layout: tuple
    tag: str

    def __post_init__(self) -> None:
        dense = np.asarray(self.dense, dtype=float)
        object.__setattr__(self, "dense", dense)
        object.__setattr__(self, "block_layout", tuple(int(b) for b in self.block_layout))
        if self.tag not in COVARIANCE_TAGS:
            raise ValueError(f"unknown covariance tag {self.tag!r}")
        n = dense.shape[0]
        if dense.shape != (n, n):
            raise ValueError("covariance must be square")
        if sum(self.block_layout) != n:
            raise ValueError(
                f"block layout {self.block_layout} does not tile size {n}"
            )
        scale = max(1.0, float(np.max(np.abs(dense))) if n else 1.0)
        if n and float(np.max(np.abs(dense - dense.T))) > _SYM_TOL * scale:
            raise ValueError("covariance not symmetric within 1e-12")
        if n:
            eigs = np.linalg.eigvalsh(dense)
            if eigs[0] < -_PSD_FLOOR * max(eigs[-1], 0.0):
                raise ValueError(
                    f"covariance not PSD (min eig {eigs[0]:.3e} vs max {eigs[-1]:.3e})"
                )

    @property
    def n(self) -> int:
        return self.dense.shape[0]


# ---------------------------------------------------------------------------
# Differencing operators
# ---------------------------------------------------------------------------

def sd_operator(N: int, m: int) -> np.ndarray:
    """Receiver-minus-base differencing operator, shape (mN, m(N+1)).

    Input stacking convention is base block first, then users 1..N; block
    row r maps the stack to ``u_r - u_base``.  Every row sums to zero, so any
    common-mode (per-satellite) term is annihilated.
    """
    if N < 1 or m < 1:
        raise ValueError("need N >= 1 receivers and m >= 1 entries each")
    left = np.kron(-np.ones((N, 1)), np.eye(m))
    right = np.kron(np.eye(N), np.eye(m))
    return np.hstack([left, right])


def pivot_difference(m: int, pivot: int = 0) -> np.ndarray:
    """Single-receiver between-satellite differencing matrix, (m-1, m).

    Row s of the output is e_s^T - e_pivot^T over the m satellite slots
    (non-pivot rows kept in original order).  With pivot = 0 this is the
    canonical [-1 | I] form.
    """
    if m < 2:
        raise ValueError("need at least 2 satellites to difference")
    if not 0 <= pivot < m:
        raise ValueError(f"pivot {pivot} out of range for m={m}")
    D = np.delete(np.eye(m), pivot, axis=0)
    D[:, pivot] = -1.0
    return D


def dd_operator(N: int, m: int) -> np.ndarray:
    """Network double-difference operator, shape ((m-1)N, mN).

    Block-diagonal with one pivot-difference block [-1 | I] per receiver
    (pivot in the leading slot of each receiver's block); rows sum to zero,
    so per-receiver common terms (receiver clocks) are annihilated.
    """
    if N < 1:
        raise ValueError("need N >= 1 receivers")
    return np.kron(np.eye(N), pivot_difference(m, 0))


# ---------------------------------------------------------------------------
# Covariances
# ---------------------------------------------------------------------------

def per_receiver_cov(sigma2: float, W: np.ndarray) -> np.ndarray:
    """Diagonal measurement covariance sigma2 * W^-1 for one receiver."""
    W = np.asarray(W, dtype=float)
    w = np.diag(W).copy()
    if np.any(W - np.diag(w) != 0.0):
        raise ValueError("weight matrix must be diagonal")
    if np.any(w <= 0):
        raise ValueError("weights must be strictly positive")
    if sigma2 < 0:
        raise ValueError("variance must be >= 0")
    return np.diag(sigma2 / w)


def sd_covariance(user_covs, base_cov, tag: str = "sd_code") -> StructuredCovariance:
    """Covariance of receiver-minus-base differenced noise.

    With independent receivers, differencing against the shared base gives
    diagonal blocks ``user_cov_i + base_cov`` and constant off-diagonal
    blocks ``base_cov`` — assembled directly from that block structure.
    """
    blocks = [np.asarray(c, dtype=float) for c in user_covs]
    base = np.asarray(base_cov, dtype=float)
    if not blocks:
        raise ValueError("need at least one user covariance")
    K = base.shape[0]
    if base.shape != (K, K) or any(b.shape != (K, K) for b in blocks):
        raise ValueError("all covariance blocks must be K x K")
    N = len(blocks)
    out = np.tile(base, (N, N))
    for i, b in enumerate(blocks):
        out[i * K : (i + 1) * K, i * K : (i + 1) * K] += b
    return StructuredCovariance(out, (K,) * N, tag)


def alpha_cov(N: int, alpha: float, sigma_block: np.ndarray, tag: str = "sd_code") -> StructuredCovariance:
    """Identical-receiver differenced covariance (I_N + alpha * 1_N) (x) block.

    ``alpha`` is the base/receiver variance ratio; the ones-matrix term is
    the base noise common to every differenced measurement.  The Kronecker
    factor has eigenvalues {1 (multiplicity N-1), 1 + alpha N}.
    """
    if N < 1:
        raise ValueError("need N >= 1")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    block = np.asarray(sigma_block, dtype=float)
    C = np.eye(N) + alpha * np.ones((N, N))
    return StructuredCovariance(np.kron(C, block), (block.shape[0],) * N, tag)


def dd_covariance(sd_cov: StructuredCovariance, N: int, K: int) -> StructuredCovariance:
    """Covariance after between-satellite differencing (pivot in slot 0).

    Computed blockwise from the rank-one update structure of pivot
    differencing: for each (K, K) block M of the input,

        out = M[1:, 1:] - M[1:, 0] 1^T - 1 M[0, 1:] + M[0, 0] 1 1^T

    which avoids forming the operator product (tests do form it, as the
    independent oracle).
    """
    dense = sd_cov.dense
    if dense.shape != (K * N, K * N):
        raise ValueError(f"expected a ({K * N}, {K * N}) differenced covariance")
    if K < 2:
        raise ValueError("need K >= 2 to difference against a pivot")
    k = K - 1
    tag = "dd_phase" if sd_cov.tag == "sd_phase" else "dd_code"
    out = np.empty((k * N, k * N))
    for i in range(N):
        for j in range(N):
            M = dense[i * K : (i + 1) * K, j * K : (j + 1) * K]
            block = (
                M[1:, 1:]
                - M[1:, :1]
                - M[:1, 1:]
                + M[0, 0]
            )
            out[i * k : (i + 1) * k, j * k : (j + 1) * k] = block
    return StructuredCovariance(out, (k,) * N, tag)


# ---------------------------------------------------------------------------
# Two-cluster (one constrained user + N_o aiding users) structures
# ---------------------------------------------------------------------------

def clustered_obs(G_c: np.ndarray, G_o: np.ndarray, N_o: int) -> np.ndarray:
    """Block-diagonal network design: one G_c block for the constrained user,
    then N_o copies of the full stack [G_c; G_o] for the aiding users."""
    G_c = np.atleast_2d(np.asarray(G_c, dtype=float))
    G_o = np.atleast_2d(np.asarray(G_o, dtype=float))
    if N_o < 0:
        raise ValueError("N_o must be >= 0")
    if G_o.size and G_o.shape[1] != G_c.shape[1]:
        raise ValueError("G_c and G_o must have the same column count")
    if G_o.size == 0:
        G_o = np.zeros((0, G_c.shape[1]))
    K_c, M = G_c.shape
    K = K_c + G_o.shape[0]
    G_full = np.vstack([G_c, G_o])
    out = np.zeros((K_c + N_o * K, (1 + N_o) * M))
    out[:K_c, :M] = G_c
    for r in range(N_o):
        out[K_c + r * K : K_c + (r + 1) * K, (1 + r) * M : (2 + r) * M] = G_full
    return out


def clustered_cov(N_o: int, alpha: float, R_c: np.ndarray, R_o: np.ndarray) -> StructuredCovariance:
    """Differenced-noise covariance of the two-cluster network.

    Layout: the constrained user's K_c rows first, then N_o aiding-user
    blocks of size K = K_c + K_o (common satellites leading inside each
    block).  The base noise (variance ratio ``alpha``) couples everything
    that shares a satellite:

        top-left       (1 + alpha) R_c
        cross blocks   alpha R_c against each aiding user's common slots
        aiding blocks  (I + alpha 1) (x) blkdiag(R_c, R_o)
    """
    if N_o < 0:
        raise ValueError("N_o must be >= 0")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    R_c = np.atleast_2d(np.asarray(R_c, dtype=float))
    R_o = np.asarray(R_o, dtype=float)
    if R_o.size == 0:
        R_o = np.zeros((0, 0))
    R_o = np.atleast_2d(R_o)
    K_c = R_c.shape[0]
    K_o = R_o.shape[0]
    K = K_c + K_o
    R = np.zeros((K, K))
    R[:K_c, :K_c] = R_c
    R[K_c:, K_c:] = R_o
    n = K_c + N_o * K
    out = np.zeros((n, n))
    out[:K_c, :K_c] = (1.0 + alpha) * R_c
    for r in range(N_o):
        lo = K_c + r * K
        out[:K_c, lo : lo + K_c] = alpha * R_c
        out[lo : lo + K_c, :K_c] = alpha * R_c
        for s in range(N_o):
            lo_s = K_c + s * K
            blk = alpha * R
            if r == s:
                blk = blk + R
            out[lo : lo + K, lo_s : lo_s + K] = blk
    return StructuredCovariance(out, (K_c,) + (K,) * N_o, "clustered")


def closed_form_inverse(N_o: int, alpha: float, R_c: np.ndarray, R_o: np.ndarray) -> StructuredCovariance:
    """Closed-form inverse of :func:`clustered_cov`, assembled from the
    beta coefficients — no large-matrix inversion involved.

    With B_c = R_c^-1 and B_o = R_o^-1 (the only inversions, at single-block
    size), the inverse has blocks

        top-left                      beta1 * B_c
        cross (vs each aiding user)   beta2 * B_c on the common slots
        aiding diagonal               blkdiag(beta1 * B_c, beta4 * B_o)
        aiding off-diagonal           blkdiag(beta2 * B_c, beta5 * B_o)
    """
    if N_o < 0:
        raise ValueError("N_o must be >= 0")
    R_c = np.atleast_2d(np.asarray(R_c, dtype=float))
    R_o = np.asarray(R_o, dtype=float)
    if R_o.size == 0:
        R_o = np.zeros((0, 0))
    R_o = np.atleast_2d(R_o)
    K_c = R_c.shape[0]
    K_o = R_o.shape[0]
    K = K_c + K_o
    b = beta(alpha, N_o)
    B_c = np.linalg.inv(R_c)
    B_o = np.linalg.inv(R_o) if K_o else np.zeros((0, 0))
    n = K_c + N_o * K
    out = np.zeros((n, n))
    out[:K_c, :K_c] = b.beta1 * B_c
    diag = np.zeros((K, K))
    diag[:K_c, :K_c] = b.beta1 * B_c
    diag[K_c:, K_c:] = b.beta4 * B_o
    off = np.zeros((K, K))
    off[:K_c, :K_c] = b.beta2 * B_c
    off[K_c:, K_c:] = b.beta5 * B_o
    for r in range(N_o):
        lo = K_c + r * K
        out[:K_c, lo : lo + K_c] = b.beta2 * B_c
        out[lo : lo + K_c, :K_c] = b.beta2 * B_c
        for s in range(N_o):
            lo_s = K_c + s * K
            out[lo : lo + K, lo_s : lo_s + K] = diag if r == s else off
    return StructuredCovariance(out, (K_c,) + (K,) * N_o, "clustered")
