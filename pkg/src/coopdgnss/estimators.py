"""Weighted least-squares and mixed real/integer estimators.

Two pipelines share the linear-solver core:

* code-only network positioning: Gauss-Newton on the single-differenced
  code residuals (linear model, so the first step lands on the WLS optimum
  and the second confirms convergence);
* carrier-phase positioning: a float solve over [baselines; ambiguities],
  integer resolution (rounding / sequential conditional rounding / integer
  least squares), then a fixed re-solve with the integers removed from the
  phase residuals.

The integer least-squares solver is a lattice search: an L^T D L
factorization of the ambiguity covariance, an integer-preserving
decorrelation (size reductions plus conditional-variance-ordering swaps),
and a depth-first search with shrinking radius, seeded at the sequential
conditional rounding so ties resolve toward it.  The hot kernels compile
with numba when available and run as plain Python otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import NumericalError
from .simulator import ObservationSet

__all__ = [
    "EstimateReport",
    "LinearWlsSolver",
    "AmbiguityResolver",
    "solvability_check",
    "cdgnss_wls",
    "crtk_float",
    "crtk_fix",
    "resolve_ambiguities",
    "ambiguity_cost",
]

COND_LIMIT = 1e12
MAX_SEARCH_NODES = 100_000_000


@dataclass(frozen=True)
class EstimateReport:
    """Result of one estimation run.

    states: (N, d) per-user estimates (d=4 position+clock for code-only
    runs, d=3 position for carrier runs); float_ambiguities /
    fixed_ambiguities present where the pipeline produces them; fixed is
    True only when an integer solution was applied (all-or-nothing);
    iterations counts Gauss-Newton steps; residual_norm is the Euclidean
    norm of the post-fit measurement residual in meters; covariance is the
    estimator covariance of the stacked unknowns where computed.
    """

    states: np.ndarray
    float_ambiguities: np.ndarray | None
    fixed_ambiguities: np.ndarray | None
    fixed: bool
    iterations: int
    residual_norm: float
    covariance: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.fixed and self.fixed_ambiguities is None:
            raise ValueError("a fixed report must carry its integer ambiguities")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")


def solvability_check(per_user_visible_counts) -> bool:
    """True iff the network WLS problem is determined: total observations
    cover the 4-per-user unknowns and each user individually sees at least
    4 satellites.  An empty network is vacuously solvable."""
    counts = [int(c) for c in per_user_visible_counts]
    if not counts:
        return True
    if any(c < 4 for c in counts):
        return False
    return sum(counts) >= 4 * len(counts)


class LinearWlsSolver:
    """Factorized weighted least-squares operator for y = G x + e,
    cov(e) = R.  Factorizations happen once, so repeated solves against the
    same model (Monte Carlo batches) are matrix-vector products."""

    def __init__(self, G: np.ndarray, R: np.ndarray):
        G = np.asarray(G, dtype=float)
        R = np.asarray(R, dtype=float)
        if G.ndim != 2 or R.shape != (G.shape[0], G.shape[0]):
            raise ValueError("G must be (n, m) with R (n, n)")
        try:
            c_R = cho_factor(R, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"measurement covariance not positive definite: {exc}")
        WG = cho_solve(c_R, G)
        normal = G.T @ WG
        normal = 0.5 * (normal + normal.T)
        if G.shape[0] < G.shape[1] or np.linalg.cond(normal) > COND_LIMIT:
            raise NumericalError(
                f"normal matrix condition exceeds {COND_LIMIT:.0e}; model is singular"
            )
        self.G = G
        self.R = R
        self._c_R = c_R
        self._WG = WG
        self._c_N = cho_factor(normal, lower=True)
        self._normal = normal

    @property
    def n_obs(self) -> int:
        return self.G.shape[0]

    @property
    def n_states(self) -> int:
        return self.G.shape[1]

    def solve(self, y: np.ndarray) -> np.ndarray:
        """WLS estimate for a single measurement vector."""
        return cho_solve(self._c_N, self._WG.T @ np.asarray(y, dtype=float))

    def solve_batch(self, Y: np.ndarray) -> np.ndarray:
        """WLS estimates for measurement vectors stacked as columns of Y."""
        return cho_solve(self._c_N, self._WG.T @ np.asarray(Y, dtype=float))

    def covariance(self) -> np.ndarray:
        """Estimator covariance (GT R^-1 G)^-1."""
        return cho_solve(self._c_N, np.eye(self.n_states))


def _measurement_vector(obs, stacked: bool) -> np.ndarray:
    if isinstance(obs, ObservationSet):
        return obs.stacked if stacked else obs.code
    return np.asarray(obs, dtype=float)


def cdgnss_wls(
    obs,
    G: np.ndarray,
    R: np.ndarray,
    init: np.ndarray | None = None,
    max_iters: int = 10,
    tol: float = 1e-8,
    solver: LinearWlsSolver | None = None,
) -> EstimateReport:
    """Gauss-Newton WLS for the single-differenced code network model.

    ``obs`` is an sd-level observation set (its code vector is used) or a
    plain residual vector.  States come back reshaped (N, 4).  Raises
    NumericalError when the normal matrix condition exceeds 1e12.
    """
    y = _measurement_vector(obs, stacked=False)
    s = solver if solver is not None else LinearWlsSolver(G, R)
    m = s.n_states
    if m % 4 != 0:
        raise ValueError("code-only network state dimension must be a multiple of 4")
    x = np.zeros(m) if init is None else np.asarray(init, dtype=float).copy()
    iterations = 0
    for _ in range(max_iters):
        step = s.solve(y - s.G @ x)
        x = x + step
        iterations += 1
        if float(np.linalg.norm(step)) < tol:
            break
    residual = float(np.linalg.norm(y - s.G @ x))
    return EstimateReport(
        states=x.reshape(-1, 4),
        float_ambiguities=None,
        fixed_ambiguities=None,
        fixed=False,
        iterations=iterations,
        residual_norm=residual,
        covariance=s.covariance(),
    )


def _stack_carrier_model(B: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Design matrix for [code; phase] over [baselines; ambiguities]:
    code sees B only, phase sees B and the ambiguity map A."""
    B = np.asarray(B, dtype=float)
    A = np.asarray(A, dtype=float)
    n = B.shape[0]
    top = np.hstack([B, np.zeros((n, A.shape[1]))])
    bot = np.hstack([B, A])
    return np.vstack([top, bot])


def crtk_float(
    obs,
    B: np.ndarray,
    A: np.ndarray,
    R: np.ndarray,
    solver: LinearWlsSolver | None = None,
) -> EstimateReport:
    """Float solve of the double-differenced carrier model.

    ``B`` maps per-user baseline coordinates into one side's residuals (the
    same geometry applies to code and phase); ``A`` maps the integer
    ambiguities into the phase side (wavelength times a selection).  ``R``
    covers the stacked [code; phase] vector.  Returns real-valued states,
    float ambiguities, and their joint covariance.
    """
    y = _measurement_vector(obs, stacked=True)
    s = solver if solver is not None else LinearWlsSolver(_stack_carrier_model(B, A), R)
    n_base = np.asarray(B, dtype=float).shape[1]
    x = s.solve(y)
    residual = float(np.linalg.norm(y - s.G @ x))
    return EstimateReport(
        states=x[:n_base].reshape(-1, 3),
        float_ambiguities=x[n_base:].copy(),
        fixed_ambiguities=None,
        fixed=False,
        iterations=1,
        residual_norm=residual,
        covariance=s.covariance(),
    )


def crtk_fix(
    obs,
    B: np.ndarray,
    R: np.ndarray,
    fixed_a: np.ndarray,
    A: np.ndarray,
    solver: LinearWlsSolver | None = None,
) -> EstimateReport:
    """Re-solve the baselines with the ambiguities held at integers.

    The integer contribution A @ fixed_a is removed from the phase side and
    both sides are re-solved for the baselines alone, so the phase
    residuals contribute at their own (small) variance.
    """
    y = _measurement_vector(obs, stacked=True)
    B = np.asarray(B, dtype=float)
    A = np.asarray(A, dtype=float)
    a = np.asarray(fixed_a)
    n = B.shape[0]
    y_adj = y.copy()
    y_adj[n:] = y_adj[n:] - A @ a.astype(float)
    s = solver if solver is not None else LinearWlsSolver(np.vstack([B, B]), R)
    x = s.solve(y_adj)
    residual = float(np.linalg.norm(y_adj - s.G @ x))
    return EstimateReport(
        states=x.reshape(-1, 3),
        float_ambiguities=None,
        fixed_ambiguities=np.rint(a).astype(np.int64),
        fixed=True,
        iterations=1,
        residual_norm=residual,
        covariance=s.covariance(),
    )


# ---------------------------------------------------------------------------
# Integer least squares
# ---------------------------------------------------------------------------

try:  # pragma: no cover - exercised implicitly by which path runs
    from numba import njit as _njit

    def _jit(func):
        return _njit(cache=True)(func)

except ImportError:  # pragma: no cover

    def _jit(func):
        return func


def _ld_factor_impl(Q):
    """Factor Q = L^T diag(d) L with L unit lower triangular.

    Returns (L, d, ok); ok is False when Q is not positive definite.
    """
    n = Q.shape[0]
    A = Q.copy()
    L = np.zeros((n, n))
    d = np.zeros(n)
    for i in range(n - 1, -1, -1):
        d[i] = A[i, i]
        if d[i] <= 0.0:
            return L, d, False
        a = np.sqrt(d[i])
        for j in range(i + 1):
            L[i, j] = A[i, j] / a
        for j in range(i):
            for k in range(j + 1):
                A[j, k] -= L[i, k] * L[i, j]
        for j in range(i + 1):
            L[i, j] /= L[i, i]
    return L, d, True


def _reduce_impl(L, d):
    """Decorrelating reduction: integer size reductions plus swaps that
    order the conditional variances.  Modifies L, d in place and returns
    the unimodular Z with z = Z^T a."""
    n = d.shape[0]
    Z = np.eye(n)
    j = n - 2
    k = n - 2
    while j >= 0:
        if j <= k:
            for i in range(j + 1, n):
                mu = np.rint(L[i, j])
                if mu != 0.0:
                    for r in range(i, n):
                        L[r, j] -= mu * L[r, i]
                    for r in range(n):
                        Z[r, j] -= mu * Z[r, i]
        delta = d[j] + L[j + 1, j] * L[j + 1, j] * d[j + 1]
        if delta + 1e-6 < d[j + 1]:
            eta = d[j] / delta
            lam = d[j + 1] * L[j + 1, j] / delta
            d[j] = eta * d[j + 1]
            d[j + 1] = delta
            for r in range(j):
                a0 = L[j, r]
                a1 = L[j + 1, r]
                L[j, r] = -L[j + 1, j] * a0 + a1
                L[j + 1, r] = eta * a0 + lam * a1
            L[j + 1, j] = lam
            for r in range(j + 2, n):
                tmp = L[r, j]
                L[r, j] = L[r, j + 1]
                L[r, j + 1] = tmp
            for r in range(n):
                tmp = Z[r, j]
                Z[r, j] = Z[r, j + 1]
                Z[r, j + 1] = tmp
            k = j
            j = n - 2
        else:
            j -= 1
    return Z


def _conditional_round_impl(L, d, zs):
    """Sequential conditional rounding (last component first) under the
    L^T diag(d) L factorization.  Returns the integer vector and its
    quadratic cost sum_k (zb_k - z_k)^2 / d_k."""
    n = d.shape[0]
    S = np.zeros(n)
    z = np.zeros(n)
    cost = 0.0
    for k in range(n - 1, -1, -1):
        zb = zs[k] + S[k]
        z[k] = np.rint(zb)
        y = zb - z[k]
        cost += y * y / d[k]
        if k > 0:
            for j in range(k):
                S[j] += (z[k] - zb) * L[k, j]
    return z, cost


def _search_impl(L, d, zs, z_init, chi_init, max_nodes):
    """Depth-first lattice search with shrinking radius.

    Seeded with an incumbent (z_init at cost chi_init); only strictly
    better candidates replace it, so equal-cost ties keep the seed.
    Returns (best, cost, status) with status 0 = ok, 1 = node budget hit.
    """
    n = d.shape[0]
    S = np.zeros((n, n))
    dist = np.zeros(n)
    zb = np.zeros(n)
    z = np.zeros(n)
    step = np.zeros(n)
    best = z_init.copy()
    chi = chi_init

    k = n - 1
    zb[k] = zs[k]
    z[k] = np.rint(zb[k])
    y = zb[k] - z[k]
    step[k] = 1.0 if y > 0.0 else -1.0
    nodes = 0
    while True:
        nodes += 1
        if nodes > max_nodes:
            return best, chi, 1
        newdist = dist[k] + y * y / d[k]
        if newdist < chi:
            if k != 0:
                k -= 1
                dist[k] = newdist
                for j in range(k + 1):
                    S[k, j] = S[k + 1, j] + (z[k + 1] - zb[k + 1]) * L[k + 1, j]
                zb[k] = zs[k] + S[k, k]
                z[k] = np.rint(zb[k])
                y = zb[k] - z[k]
                step[k] = 1.0 if y > 0.0 else -1.0
            else:
                chi = newdist
                for j in range(n):
                    best[j] = z[j]
                z[0] += step[0]
                y = zb[0] - z[0]
                step[0] = -step[0] - (1.0 if step[0] > 0.0 else -1.0)
        else:
            if k == n - 1:
                break
            k += 1
            z[k] += step[k]
            y = zb[k] - z[k]
            step[k] = -step[k] - (1.0 if step[k] > 0.0 else -1.0)
    return best, chi, 0


_ld_factor = _jit(_ld_factor_impl)
_reduce = _jit(_reduce_impl)
_conditional_round = _jit(_conditional_round_impl)
_search = _jit(_search_impl)


RESOLVE_METHODS = ("round", "bootstrap", "ils")


class AmbiguityResolver:
    """Integer resolver with the covariance-dependent work done once.

    For a fixed float covariance Q_a the factorization (and, for ils, the
    decorrelating transform) are computed at construction; resolving a new
    float vector is then cheap, which is what Monte Carlo batches need.
    """

    def __init__(self, Q_a: np.ndarray, method: str = "ils"):
        if method not in RESOLVE_METHODS:
            raise ValueError(f"method must be one of {RESOLVE_METHODS}, got {method!r}")
        Q = np.asarray(Q_a, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("Q_a must be square")
        self.method = method
        self.n = Q.shape[0]
        if self.n == 0 or method == "round":
            return
        Q = 0.5 * (Q + Q.T)
        L, d, ok = _ld_factor(Q)
        if not ok:
            raise NumericalError("ambiguity covariance is not positive definite")
        if method == "bootstrap":
            self._L, self._d = L, d
            return
        self._Z = _reduce(L, d)  # modifies L, d in place
        self._L, self._d = L, d
        self._ZT = self._Z.T.copy()

    def resolve(self, a_float: np.ndarray) -> np.ndarray:
        a = np.asarray(a_float, dtype=float)
        if a.shape != (self.n,):
            raise ValueError(f"float ambiguity vector must have length {self.n}")
        if self.n == 0:
            return np.zeros(0, dtype=np.int64)
        if self.method == "round":
            return np.rint(a).astype(np.int64)
        if self.method == "bootstrap":
            z, _ = _conditional_round(self._L, self._d, a)
            return np.rint(z).astype(np.int64)
        zs = self._ZT @ a
        z_seed, chi_seed = _conditional_round(self._L, self._d, zs)
        z_best, _, status = _search(
            self._L, self._d, zs, z_seed, chi_seed, MAX_SEARCH_NODES
        )
        if status != 0:
            raise NumericalError("integer search exceeded its node budget")
        back = np.linalg.solve(self._ZT, z_best)
        return np.rint(back).astype(np.int64)


def resolve_ambiguities(
    float_a: np.ndarray, Q_a: np.ndarray, method: str = "ils"
) -> np.ndarray:
    """Map float ambiguities to integers.

    round: componentwise; bootstrap: sequential conditional rounding under
    an L^T D L factorization of Q_a; ils: exact integer least squares in the
    Q_a^-1 metric (decorrelation + depth-first search, ties toward the
    conditional-rounding solution).
    """
    return AmbiguityResolver(Q_a, method=method).resolve(float_a)


def ambiguity_cost(a: np.ndarray, a_float: np.ndarray, Q_a: np.ndarray) -> float:
    """Quadratic residual (a - a_float)^T Q_a^-1 (a - a_float)."""
    e = np.asarray(a, dtype=float) - np.asarray(a_float, dtype=float)
    return float(e @ np.linalg.solve(np.asarray(Q_a, dtype=float), e))
