"""Closed-form estimation bounds for the cooperative network model.

Everything here is deterministic linear algebra on Fisher information
matrices.  The central object is the parameterized network FIM for one
constrained user aided by N_o identically-sighted helpers, which depends on
the cluster information pair (J_c, J_o), the base noise ratio alpha, and
N_o only.  Its Schur complement onto the constrained user reduces, through
the beta coefficients, to an m x m closed form — so bounds at crowd sizes
in the tens of thousands cost the same as at N_o = 1.

Benchmarks bracket the cooperative bound: the non-cooperative bound
(1+alpha) J_c^-1, the ideal-base bound J_c^-1, and the strong-aiding
asymptote beta1^-1 J_c^-1 that cooperation approaches as the helpers'
exclusive information grows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .netmodel import beta

__all__ = [
    "BoundReport",
    "AsymptoticReport",
    "fim",
    "crb_block",
    "rmse_bound",
    "crtk_float_fim",
    "crtk_float_crb",
    "crtk_fix_crb",
    "cluster_fims",
    "parameterized_fim",
    "constrained_user_crb",
    "benchmarks",
    "asymptotic_suite",
    "bound_report",
]

COND_LIMIT = 1e12


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _inv(M: np.ndarray, what: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return M.copy()
    if np.linalg.cond(M) > COND_LIMIT:
        raise NumericalError(f"{what} condition exceeds {COND_LIMIT:.0e}")
    return _sym(np.linalg.inv(M))


@dataclass(frozen=True)
class BoundReport:
    """Bound summary for one network configuration.

    fim: full parameterized network FIM; crb_user_blocks: per-user 3x3
    position covariance bounds (constrained user first); rmse_per_user:
    sqrt of their traces, meters; the three benchmark scalars are the
    constrained user's RMSE under no cooperation, an ideal (noise-free)
    base, and infinitely strong aiding respectively.
    """

    fim: np.ndarray
    crb_user_blocks: tuple
    rmse_per_user: tuple
    benchmark_noncoop: float
    benchmark_ideal: float
    benchmark_asymptotic: float

    def __post_init__(self) -> None:
        for blk in self.crb_user_blocks:
            if blk.shape != (3, 3):
                raise ValueError("per-user bound blocks must be 3x3")
        if len(self.rmse_per_user) != len(self.crb_user_blocks):
            raise ValueError("rmse list must match block list")


def fim(G: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Fisher information G^T R^-1 G of a linear Gaussian model."""
    G = np.asarray(G, dtype=float)
    R = np.asarray(R, dtype=float)
    return _sym(G.T @ np.linalg.solve(R, G))


def crb_block(
    J: np.ndarray, r: int, user_dim: int = 3, pos_dim: int | None = None
) -> np.ndarray:
    """Covariance bound block of user r (1-based) from a joint FIM.

    Users occupy consecutive user_dim-sized slots; the leading pos_dim
    (default: all user_dim) rows of the slot are returned, so position
    blocks of position+clock states use user_dim=4, pos_dim=3.
    """
    J = np.asarray(J, dtype=float)
    if r < 1:
        raise ValueError("user index is 1-based")
    p = user_dim if pos_dim is None else pos_dim
    lo = (r - 1) * user_dim
    if lo + user_dim > J.shape[0]:
        raise ValueError(f"user {r} is outside a {J.shape[0]}-state FIM")
    C = _inv(J, "joint FIM")
    return C[lo : lo + p, lo : lo + p]


def rmse_bound(position_block: np.ndarray) -> float:
    """3D position RMSE implied by a position covariance block, meters."""
    B = np.asarray(position_block, dtype=float)
    return float(np.sqrt(np.trace(B)))


def crtk_float_fim(
    B: np.ndarray,
    Sigma_code: np.ndarray,
    Sigma_phase: np.ndarray,
    wavelength: float,
) -> np.ndarray:
    """FIM of the double-differenced carrier model over [baselines;
    ambiguities].

    The ambiguity map is wavelength * identity on the phase side, so the
    ambiguity-ambiguity block is wavelength^2 * Sigma_phase^-1 by
    construction.
    """
    B = np.asarray(B, dtype=float)
    Wc = _inv(Sigma_code, "code covariance")
    Wp = _inv(Sigma_phase, "phase covariance")
    top_left = B.T @ (Wc + Wp) @ B
    cross = wavelength * (B.T @ Wp)
    bottom = wavelength**2 * Wp
    return np.block([[_sym(top_left), cross], [cross.T, bottom]])


def crtk_float_crb(B: np.ndarray, Sigma_code: np.ndarray) -> np.ndarray:
    """Baseline covariance bound of the float carrier solution.

    With one unknown ambiguity per phase residual, phase contributes
    nothing to the float baseline bound: it reduces to the code-only bound
    (B^T Sigma_code^-1 B)^-1, independent of the phase noise level.
    """
    B = np.asarray(B, dtype=float)
    Wc = _inv(Sigma_code, "code covariance")
    return _inv(B.T @ Wc @ B, "float baseline FIM")


def crtk_fix_crb(
    B: np.ndarray, Sigma_code: np.ndarray, Sigma_phase: np.ndarray
) -> tuple:
    """Baseline covariance bound after correct integer fixing.

    Returns (exact, phase_only): the exact bound uses both measurement
    types, (B^T (Sigma_code^-1 + Sigma_phase^-1) B)^-1; the phase-only form
    (B^T Sigma_phase^-1 B)^-1 is the usual approximation when phase noise
    is orders of magnitude below code noise.
    """
    B = np.asarray(B, dtype=float)
    Wc = _inv(Sigma_code, "code covariance")
    Wp = _inv(Sigma_phase, "phase covariance")
    exact = _inv(B.T @ (Wc + Wp) @ B, "fixed baseline FIM")
    phase_only = _inv(B.T @ Wp @ B, "phase-only baseline FIM")
    return exact, phase_only


def cluster_fims(
    G_c: np.ndarray, G_o: np.ndarray, R_c: np.ndarray, R_o: np.ndarray
) -> tuple:
    """Per-receiver information of the common and exclusive satellite sets.

    Returns (J_c, J_o) with J = G^T R^-1 G; an empty exclusive set yields a
    zero J_o of matching dimension.
    """
    G_c = np.asarray(G_c, dtype=float)
    G_o = np.asarray(G_o, dtype=float)
    J_c = fim(G_c, R_c)
    if G_o.shape[0] == 0:
        return J_c, np.zeros_like(J_c)
    return J_c, fim(G_o, R_o)


def parameterized_fim(
    J_c: np.ndarray, J_o: np.ndarray, alpha: float, N_o: int
) -> np.ndarray:
    """Joint FIM of [constrained user; N_o aiding users] in terms of the
    cluster information pair and the base noise ratio.

    Blocks: M11 = beta1 J_c; M12 = beta2 (1^T kron J_c); M22 =
    (I + beta2 * ones) kron J_c + (I + beta5 * ones) kron J_o.
    Materializes the full (1+N_o) m square matrix — use
    constrained_user_crb for large N_o.
    """
    J_c = np.asarray(J_c, dtype=float)
    J_o = np.asarray(J_o, dtype=float)
    m = J_c.shape[0]
    if J_o.shape != (m, m):
        raise ValueError("J_c and J_o must have matching shapes")
    b = beta(alpha, N_o)
    if N_o == 0:
        return b.beta1 * J_c
    eye = np.eye(N_o)
    ones = np.ones((N_o, N_o))
    M11 = b.beta1 * J_c
    M12 = b.beta2 * np.kron(np.ones((1, N_o)), J_c)
    M22 = np.kron(eye + b.beta2 * ones, J_c) + np.kron(eye + b.beta5 * ones, J_o)
    return np.block([[M11, M12], [M12.T, M22]])


def constrained_user_crb(
    J_c: np.ndarray, J_o: np.ndarray, alpha: float, N_o: int
) -> np.ndarray:
    """Covariance bound of the constrained user under cooperation.

    Schur complement of the parameterized FIM onto the first user, reduced
    to closed m x m form: the aiding block's inverse acts on the rank-one
    (in the user index) coupling, collapsing the correction to
    beta2^2 N_o J_c [c1 J_c + beta0 J_o]^-1 J_c with
    c1 = (1+alpha) / (alpha N_o + alpha + 1).  Cost is independent of N_o.
    """
    J_c = np.asarray(J_c, dtype=float)
    J_o = np.asarray(J_o, dtype=float)
    b = beta(alpha, N_o)
    M11 = b.beta1 * J_c
    if N_o == 0:
        return _inv(M11, "constrained-user FIM")
    c1 = (1.0 + alpha) / (alpha * N_o + alpha + 1.0)
    inner = c1 * J_c + b.beta0 * J_o
    correction = (
        b.beta2**2 * N_o * (J_c @ np.linalg.solve(inner, J_c))
    )
    return _inv(_sym(M11 - correction), "constrained-user FIM")


@dataclass(frozen=True)
class Benchmarks:
    """Reference bounds for the constrained user (m x m matrices)."""

    noncoop: np.ndarray
    ideal: np.ndarray
    asymptotic: np.ndarray


def benchmarks(J_c: np.ndarray, alpha: float, N_o: int) -> Benchmarks:
    """The three reference bounds: no cooperation (1+alpha) J_c^-1, ideal
    base J_c^-1, and the strong-aiding asymptote beta1^-1 J_c^-1 (which
    depends on the crowd size through beta1)."""
    J_inv = _inv(J_c, "cluster FIM")
    b = beta(alpha, N_o)
    return Benchmarks(
        noncoop=(1.0 + alpha) * J_inv,
        ideal=J_inv.copy(),
        asymptotic=(1.0 / b.beta1) * J_inv,
    )


@dataclass(frozen=True)
class AsymptoticReport:
    """Relative Frobenius errors of the cooperative bound against its
    limiting regimes.

    strong_aiding: (exclusive-noise scale t, error vs beta1^-1 J_c^-1) —
    J_o is scaled by 1/t, so smaller t means stronger aiding; useless_aiding:
    error vs (1+alpha) J_c^-1 at J_o = 0; disjoint: error vs the
    non-cooperative bound when aiding users share no satellites with the
    constrained user; crowd: error vs J_c^-1 at N_o = crowd_size.
    """

    strong_aiding: tuple
    useless_aiding: float
    disjoint: float
    crowd: float
    crowd_size: int


def _rel_err(A: np.ndarray, B: np.ndarray) -> float:
    return float(np.linalg.norm(A - B) / np.linalg.norm(B))


def asymptotic_suite(
    J_c: np.ndarray,
    J_o: np.ndarray,
    alpha: float,
    N_o: int = 10,
    strong_scales: tuple = (1e-4, 1e-6, 1e-8),
    crowd_size: int = 10_000,
) -> AsymptoticReport:
    """Evaluate the cooperative bound in its four limiting regimes.

    Strong aiding divides the exclusive-set noise by each scale (multiplying
    J_o by 1/t) rather than taking any symbolic limit.  The disjoint regime
    severs the information coupling (zero cross blocks), leaving the
    constrained user at exactly its single-differenced-alone bound.
    """
    ref = benchmarks(J_c, alpha, N_o)
    strong = []
    for t in strong_scales:
        crb_t = constrained_user_crb(J_c, J_o / t, alpha, N_o)
        strong.append((t, _rel_err(crb_t, ref.asymptotic)))
    useless = _rel_err(
        constrained_user_crb(J_c, np.zeros_like(J_c), alpha, N_o), ref.noncoop
    )
    # Disjoint visibility: the constrained user's single differences are
    # statistically independent of the aiding users' (no shared satellites),
    # so the joint FIM is block-diagonal and the Schur complement is just
    # the user's own information J_c / (1 + alpha).
    disjoint_crb = _inv(J_c / (1.0 + alpha), "disjoint-user FIM")
    disjoint = _rel_err(disjoint_crb, ref.noncoop)
    crowd_crb = constrained_user_crb(J_c, J_o, alpha, crowd_size)
    crowd = _rel_err(crowd_crb, benchmarks(J_c, alpha, crowd_size).ideal)
    return AsymptoticReport(
        strong_aiding=tuple(strong),
        useless_aiding=useless,
        disjoint=disjoint,
        crowd=crowd,
        crowd_size=crowd_size,
    )


def bound_report(
    J_c: np.ndarray, J_o: np.ndarray, alpha: float, N_o: int, user_dim: int = 4
) -> BoundReport:
    """Assemble the full bound summary for one configuration.

    Position blocks are the leading 3x3 of each user's user_dim slot in the
    inverse of the parameterized FIM; benchmark scalars are the constrained
    user's RMSE under each reference bound.
    """
    M = parameterized_fim(J_c, J_o, alpha, N_o)
    C = _inv(M, "parameterized FIM")
    blocks = []
    for r in range(N_o + 1):
        lo = r * user_dim
        blocks.append(C[lo : lo + 3, lo : lo + 3])
    ref = benchmarks(J_c, alpha, N_o)
    return BoundReport(
        fim=M,
        crb_user_blocks=tuple(blocks),
        rmse_per_user=tuple(rmse_bound(b) for b in blocks),
        benchmark_noncoop=rmse_bound(ref.noncoop[:3, :3]),
        benchmark_ideal=rmse_bound(ref.ideal[:3, :3]),
        benchmark_asymptotic=rmse_bound(ref.asymptotic[:3, :3]),
    )
