"""Assembly of per-configuration network models.

A Scenario binds a network spec to a concrete constellation and produces
every matrix the estimators and bounds need: the stacked single-difference
design and covariance for code positioning, the double-differenced baseline
and ambiguity maps with their covariances for carrier positioning, and the
cluster information pair feeding the benchmark bounds.

Satellite ordering convention: the first K_c fixture indices are the
jointly-visible set (constrained users see exactly those), the next K_o are
exclusive to the aiding users.  The double-differencing pivot is the
highest-elevation jointly-visible satellite, so every receiver shares it.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import block_diag

from ..errors import SolvabilityError
from ..geometry import SatelliteGeometry, VisibilitySplit, geometry_matrix, observation_matrix
from ..netmodel import NetworkSpec, pivot_difference
from ..simulator import TruthState, default_views
from ..estimators import solvability_check
from .. import bounds as bounds_mod

__all__ = ["Scenario"]


class Scenario:
    """All model matrices for one (spec, geometry) configuration.

    The geometry must carry at least spec.K satellites; only the first
    spec.K are used (prefix nesting, so K_o sweeps reuse one fixture).
    """

    def __init__(self, spec: NetworkSpec, g: SatelliteGeometry):
        if g.K < spec.K:
            raise ValueError(
                f"geometry has {g.K} satellites, spec needs {spec.K}"
            )
        if g.K > spec.K:
            g = g.subset(range(spec.K))
        self.spec = spec
        self.geometry = g
        self.split = VisibilitySplit(
            tuple(range(spec.K_c)), tuple(range(spec.K_c, spec.K))
        )
        self.views = default_views(spec, self.split)
        common_elev = g.elevations[: spec.K_c]
        self.pivot = int(np.argmax(common_elev))

        H = observation_matrix(g)
        E = geometry_matrix(g)
        self.H = H
        self.E = E

        # --- single-difference code model (position+clock per user)
        self.G_sd = block_diag(*[H[list(v)] for v in self.views])
        self.R_sd_code = self._sd_cov(spec.sigma_rho)
        self.R_sd_phase = self._sd_cov(spec.sigma_phi)

        # --- double-difference carrier model (position per user)
        Bs, Dps = [], []
        for view in self.views:
            idx = list(view)
            p = idx.index(self.pivot)
            Ev = E[idx]
            keep = [i for i in range(len(idx)) if i != p]
            Bs.append(Ev[keep] - Ev[p])
            Dps.append(pivot_difference(len(idx), p))
        self.B_dd = block_diag(*Bs)
        D = block_diag(*Dps)
        self.R_dd_code = D @ self.R_sd_code @ D.T
        self.R_dd_phase = D @ self.R_sd_phase @ D.T
        self.n_dd = self.B_dd.shape[0]
        self.A_dd = spec.wavelength * np.eye(self.n_dd)
        self.R_crtk = block_diag(self.R_dd_code, self.R_dd_phase)

        # --- cluster information pair (per-receiver, own noise only)
        w = self._weights(np.arange(spec.K))
        R_c = np.diag(spec.sigma_rho**2 / w[: spec.K_c])
        R_o = np.diag(spec.sigma_rho**2 / w[spec.K_c :])
        self.J_c, self.J_o = bounds_mod.cluster_fims(
            H[: spec.K_c], H[spec.K_c :], R_c, R_o
        )

    # -- helpers -----------------------------------------------------------

    def _weights(self, sats) -> np.ndarray:
        if self.spec.weighting == "elevation":
            return np.sin(self.geometry.elevations[np.asarray(sats)]) ** 2
        return np.ones(len(sats))

    def _sd_cov(self, sigma: float) -> np.ndarray:
        """Dense single-difference covariance over the stacked user views:
        own noise sigma^2/w on the diagonal plus the shared base noise
        alpha * sigma^2/w wherever two entries reference the same satellite."""
        idx = np.concatenate([np.asarray(v, dtype=np.intp) for v in self.views])
        w = self._weights(idx)
        own = sigma**2 / w
        same_sat = idx[:, None] == idx[None, :]
        cov = same_sat * (self.spec.alpha * own)[None, :]
        cov = 0.5 * (cov + cov.T)
        cov[np.arange(idx.size), np.arange(idx.size)] += own
        return cov

    # -- solvability -------------------------------------------------------

    @property
    def visible_counts(self) -> list:
        return [len(v) for v in self.views]

    def check_solvable(self) -> None:
        if not solvability_check(self.visible_counts):
            raise SolvabilityError(
                f"per-user visibility {self.visible_counts} cannot determine "
                f"4 unknowns per user"
            )

    # -- bounds ------------------------------------------------------------

    def full_fim(self) -> np.ndarray:
        """Network FIM of the single-difference code model (4 states/user)."""
        return bounds_mod.fim(self.G_sd, self.R_sd_code)

    def user1_position_crb(self) -> np.ndarray:
        """3x3 position bound of the first (constrained) user from the full
        network FIM — valid for any N_c, unlike the closed-form path."""
        return bounds_mod.crb_block(self.full_fim(), 1, user_dim=4, pos_dim=3)

    def user1_float_crb(self) -> np.ndarray:
        """3x3 position bound of user 1 under the float carrier model."""
        C = bounds_mod.crtk_float_crb(self.B_dd, self.R_dd_code)
        return C[:3, :3]

    def user1_fix_crb(self) -> tuple:
        """(exact, phase_only) 3x3 position bounds after correct fixing."""
        exact, phase_only = bounds_mod.crtk_fix_crb(
            self.B_dd, self.R_dd_code, self.R_dd_phase
        )
        return exact[:3, :3], phase_only[:3, :3]

    def benchmark_rmse(self) -> tuple:
        """(noncoop, ideal, asymptotic) position RMSE for the constrained
        user, from its own-cluster information."""
        ref = bounds_mod.benchmarks(self.J_c, self.spec.alpha, self.spec.N_o)
        return (
            bounds_mod.rmse_bound(ref.noncoop[:3, :3]),
            bounds_mod.rmse_bound(ref.ideal[:3, :3]),
            bounds_mod.rmse_bound(ref.asymptotic[:3, :3]),
        )

    # -- truth bookkeeping ---------------------------------------------------

    def true_dd_ambiguities(self, truth: TruthState) -> np.ndarray:
        """Stacked double-differenced integer ambiguities implied by a truth
        draw (user order, pivot removed), matching the carrier model's
        ambiguity vector."""
        out = []
        for r, view in enumerate(self.views):
            idx = list(view)
            p = idx.index(self.pivot)
            sd = truth.ambiguities[r + 1, idx] - truth.ambiguities[0, idx]
            out.append(np.delete(sd - sd[p], p))
        return np.concatenate(out).astype(np.int64)

    @property
    def user1_dd_slice(self) -> slice:
        """Slice of the stacked ambiguity vector owned by user 1."""
        return slice(0, len(self.views[0]) - 1)

    def true_states(self, truth: TruthState) -> np.ndarray:
        """(N, 4) per-user position+clock truth increments."""
        return np.hstack(
            [truth.positions[1:], truth.clock_offsets[1:, None]]
        )
