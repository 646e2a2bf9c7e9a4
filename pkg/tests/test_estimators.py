"""Estimators: linear WLS core, code-network Gauss-Newton, carrier float
and fixed solutions, and integer ambiguity resolution."""
import itertools

import numpy as np
import pytest

from conftest import spd
from coopdgnss.errors import NumericalError
from coopdgnss.estimators import (
    AmbiguityResolver,
    EstimateReport,
    LinearWlsSolver,
    ambiguity_cost,
    cdgnss_wls,
    crtk_fix,
    crtk_float,
    resolve_ambiguities,
    solvability_check,
)
from coopdgnss.experiments.scenario import Scenario
from coopdgnss.simulator import sample_truth, synthesize_raw, to_dd, to_sd


@pytest.fixture(scope="module")
def scn():
    from coopdgnss.geometry import load_fixture
    from coopdgnss.netmodel import NetworkSpec

    spec = NetworkSpec(
        N_c=1, N_o=1, K_c=4, K_o=2,
        alpha=0.7, sigma_rho=1.0, sigma_phi=0.01, wavelength=0.19,
    )
    return Scenario(spec, load_fixture("k23_gdop2p5"))


def noiseless_dd(scn, truth):
    raw = synthesize_raw(
        scn.geometry, scn.spec, truth, seed=0, split=scn.split, include_noise=False
    )
    return to_dd(to_sd(raw), scn.pivot)


class TestSolvability:
    @pytest.mark.parametrize(
        "counts,expected",
        [
            ([4, 4], True),
            ([3, 19], False),
            ([], True),
            ([4], True),
            ([6, 5, 4], True),
            ([4, 4, 3], False),
        ],
    )
    def test_cases(self, counts, expected):
        assert solvability_check(counts) is expected


class TestLinearWlsSolver:
    def test_recovers_exact_solution(self):
        rng = np.random.default_rng(1)
        G = rng.standard_normal((12, 5))
        R = spd(rng, 12)
        x = rng.standard_normal(5)
        s = LinearWlsSolver(G, R)
        assert np.allclose(s.solve(G @ x), x, atol=1e-10)
        assert (s.n_obs, s.n_states) == (12, 5)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(2)
        G = rng.standard_normal((10, 4))
        R = spd(rng, 10)
        Y = rng.standard_normal((10, 7))
        s = LinearWlsSolver(G, R)
        batch = s.solve_batch(Y)
        for j in range(7):
            assert np.allclose(batch[:, j], s.solve(Y[:, j]), atol=1e-12)

    def test_covariance_matches_dense_oracle(self):
        rng = np.random.default_rng(3)
        G = rng.standard_normal((9, 3))
        R = spd(rng, 9)
        want = np.linalg.inv(G.T @ np.linalg.inv(R) @ G)
        assert np.allclose(LinearWlsSolver(G, R).covariance(), want, atol=1e-10)

    def test_rejects_indefinite_noise(self):
        G = np.ones((3, 1))
        R = np.diag([1.0, -1.0, 1.0])
        with pytest.raises(NumericalError):
            LinearWlsSolver(G, R)

    def test_rejects_underdetermined(self):
        with pytest.raises(NumericalError):
            LinearWlsSolver(np.ones((2, 3)), np.eye(2))

    def test_rejects_ill_conditioned(self):
        G = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-14], [1.0, 1.0 - 1e-14]])
        with pytest.raises(NumericalError):
            LinearWlsSolver(G, np.eye(3))


class TestCdgnssWls:
    def test_noiseless_recovery_and_convergence(self, scn):
        truth = sample_truth(scn.spec, scn.geometry, 11)
        raw = synthesize_raw(
            scn.geometry, scn.spec, truth, 0, scn.split, include_noise=False
        )
        sd = to_sd(raw)
        est = cdgnss_wls(sd, scn.G_sd, scn.R_sd_code)
        assert est.states.shape == (2, 4)
        assert np.allclose(est.states, scn.true_states(truth), atol=1e-9)
        assert est.iterations <= 2          # linear model: one real step
        assert est.residual_norm < 1e-8
        assert not est.fixed

    def test_init_does_not_change_the_answer(self, scn):
        truth = sample_truth(scn.spec, scn.geometry, 12)
        raw = synthesize_raw(scn.geometry, scn.spec, truth, 99, scn.split)
        sd = to_sd(raw)
        a = cdgnss_wls(sd, scn.G_sd, scn.R_sd_code)
        b = cdgnss_wls(
            sd, scn.G_sd, scn.R_sd_code,
            init=np.full(scn.G_sd.shape[1], 50.0),
        )
        assert np.allclose(a.states, b.states, atol=1e-8)
        assert b.iterations <= 2

    def test_accepts_plain_vector(self, scn):
        truth = sample_truth(scn.spec, scn.geometry, 13)
        raw = synthesize_raw(scn.geometry, scn.spec, truth, 5, scn.split)
        sd = to_sd(raw)
        a = cdgnss_wls(sd, scn.G_sd, scn.R_sd_code)
        b = cdgnss_wls(sd.code.copy(), scn.G_sd, scn.R_sd_code)
        assert np.array_equal(a.states, b.states)

    def test_rejects_non_network_state_dimension(self):
        with pytest.raises(ValueError, match="multiple of 4"):
            cdgnss_wls(np.zeros(8), np.eye(8)[:, :6], np.eye(8))

    def test_covariance_is_attached(self, scn):
        truth = sample_truth(scn.spec, scn.geometry, 14)
        raw = synthesize_raw(scn.geometry, scn.spec, truth, 6, scn.split)
        est = cdgnss_wls(to_sd(raw), scn.G_sd, scn.R_sd_code)
        s = LinearWlsSolver(scn.G_sd, scn.R_sd_code)
        assert np.allclose(est.covariance, s.covariance(), atol=1e-12)

    def test_unbiased_and_efficient(self, scn):
        # 1e4 trials: every state's mean error within 4 standard errors of
        # zero, and the first user's position error covariance on its bound.
        M = 10_000
        solver = LinearWlsSolver(scn.G_sd, scn.R_sd_code)
        errs = np.empty((M, 8))
        for t in range(M):
            truth = sample_truth(
                scn.spec, scn.geometry, np.random.SeedSequence(5, spawn_key=(t,))
            )
            raw = synthesize_raw(
                scn.geometry, scn.spec, truth,
                np.random.SeedSequence(6, spawn_key=(t,)), scn.split,
            )
            est = cdgnss_wls(to_sd(raw), scn.G_sd, scn.R_sd_code, solver=solver)
            errs[t] = (est.states - scn.true_states(truth)).ravel()
        se = errs.std(axis=0, ddof=1) / np.sqrt(M)
        assert np.max(np.abs(errs.mean(axis=0)) / se) < 4.0
        emp = np.sqrt(np.mean(np.sum(errs[:, :3] ** 2, axis=1)))
        bound = np.sqrt(np.trace(scn.user1_position_crb()))
        assert abs(emp - bound) / bound < 0.05


class TestCrtkFloat:
    def test_noiseless_recovery(self, scn):
        truth = sample_truth(scn.spec, scn.geometry, 21)
        est = crtk_float(noiseless_dd(scn, truth), scn.B_dd, scn.A_dd, scn.R_crtk)
        assert est.states.shape == (2, 3)
        assert np.allclose(est.states, truth.positions[1:], atol=1e-8)
        assert np.allclose(
            est.float_ambiguities, scn.true_dd_ambiguities(truth), atol=1e-7
        )
        assert not est.fixed and est.fixed_ambiguities is None

    def test_covariance_position_block_matches_bound(self, scn):
        truth = sample_truth(scn.spec, scn.geometry, 22)
        est = crtk_float(noiseless_dd(scn, truth), scn.B_dd, scn.A_dd, scn.R_crtk)
        got = est.covariance[:3, :3]
        want = scn.user1_float_crb()
        assert np.linalg.norm(got - want) / np.linalg.norm(want) < 1e-9

    def test_survives_phase_noise_near_code_noise(self, k23):
        # The stacked model stays well-conditioned even without the usual
        # hundredfold code/phase noise separation.
        from coopdgnss.netmodel import NetworkSpec

        spec = NetworkSpec(1, 1, 4, 2, 0.7, sigma_rho=1.0, sigma_phi=0.5,
                           wavelength=0.19)
        s = Scenario(spec, k23)
        truth = sample_truth(spec, s.geometry, 23)
        est = crtk_float(noiseless_dd(s, truth), s.B_dd, s.A_dd, s.R_crtk)
        assert np.allclose(est.states, truth.positions[1:], atol=1e-7)


class TestCrtkFix:
    def test_noiseless_recovery_with_true_integers(self, scn):
        truth = sample_truth(scn.spec, scn.geometry, 31)
        a_true = scn.true_dd_ambiguities(truth)
        est = crtk_fix(noiseless_dd(scn, truth), scn.B_dd, scn.R_crtk, a_true, scn.A_dd)
        assert est.fixed
        assert np.array_equal(est.fixed_ambiguities, a_true)
        assert np.allclose(est.states, truth.positions[1:], atol=1e-9)

    def test_wrong_integer_bias_is_analytic(self, scn):
        # Fixing one ambiguity off by +1 shifts the estimate by exactly
        # -wavelength * (pseudoinverse column of that phase entry).
        truth = sample_truth(scn.spec, scn.geometry, 32)
        dd = noiseless_dd(scn, truth)
        a_true = scn.true_dd_ambiguities(truth)
        n = scn.n_dd
        G = np.vstack([scn.B_dd, scn.B_dd])
        Rinv = np.linalg.inv(scn.R_crtk)
        P = np.linalg.inv(G.T @ Rinv @ G) @ G.T @ Rinv
        true_flat = truth.positions[1:].ravel()
        for j in (0, n - 1):
            a_wrong = a_true.astype(float).copy()
            a_wrong[j] += 1.0
            est = crtk_fix(dd, scn.B_dd, scn.R_crtk, a_wrong, scn.A_dd)
            bias = est.states.ravel() - true_flat
            want = -scn.spec.wavelength * P[:, n + j]
            assert np.allclose(bias, want, atol=1e-10)

    def test_fixed_error_statistics(self, scn):
        # 1e4 trials with the true integers supplied: the first user's RMSE
        # sits on the fixed bound, two orders below the float bound.
        M = 10_000
        solver = LinearWlsSolver(np.vstack([scn.B_dd, scn.B_dd]), scn.R_crtk)
        sq = 0.0
        for t in range(M):
            truth = sample_truth(
                scn.spec, scn.geometry, np.random.SeedSequence(7, spawn_key=(t,))
            )
            raw = synthesize_raw(
                scn.geometry, scn.spec, truth,
                np.random.SeedSequence(8, spawn_key=(t,)), scn.split,
            )
            dd = to_dd(to_sd(raw), scn.pivot)
            est = crtk_fix(
                dd, scn.B_dd, scn.R_crtk, scn.true_dd_ambiguities(truth),
                scn.A_dd, solver=solver,
            )
            sq += float(np.sum((est.states[0] - truth.positions[1]) ** 2))
        rmse = np.sqrt(sq / M)
        exact, _ = scn.user1_fix_crb()
        bound = np.sqrt(np.trace(exact))
        assert abs(rmse - bound) / bound < 0.02
        float_bound = np.sqrt(np.trace(scn.user1_float_crb()))
        assert rmse / float_bound == pytest.approx(0.01, rel=0.05)


class TestAmbiguityResolver:
    def test_trivial_covariance_rounds(self):
        Q = 1e-6 * np.eye(4)
        a = np.array([1.2, -0.8, 3.49, -2.51])
        want = np.array([1, -1, 3, -3])
        for method in ("round", "bootstrap", "ils"):
            got = AmbiguityResolver(Q, method).resolve(a)
            assert np.array_equal(got, want)
            assert np.issubdtype(got.dtype, np.integer)

    def test_wrapper_agrees_with_class(self):
        rng = np.random.default_rng(41)
        Q = spd(rng, 5, 0.3)
        a = rng.normal(0.0, 2.0, 5)
        for method in ("round", "bootstrap", "ils"):
            assert np.array_equal(
                resolve_ambiguities(a, Q, method),
                AmbiguityResolver(Q, method).resolve(a),
            )

    def test_ils_matches_exhaustive_box(self):
        # Small-scale version of the acceptance sweep: 200 instances, 2-3
        # dimensions, enumeration over a +-4 box around the float solution.
        rng = np.random.default_rng(271828)
        for _ in range(200):
            d = int(rng.integers(2, 4))
            A = rng.standard_normal((d, d))
            Q = A @ A.T + 0.05 * np.eye(d)
            a = rng.normal(0.0, 2.0, d)
            got = AmbiguityResolver(Q, "ils").resolve(a)
            base = np.rint(a).astype(int)
            best, best_cost = None, np.inf
            for off in itertools.product(range(-4, 5), repeat=d):
                cand = base + np.asarray(off)
                c = ambiguity_cost(cand, a, Q)
                if c < best_cost:
                    best, best_cost = cand, c
            assert np.max(np.abs(best - base)) < 4  # enumeration box sound
            assert np.array_equal(got, best)

    def test_method_cost_ordering(self):
        # Search never loses to bootstrap or rounding; bootstrap beats plain
        # rounding on the vast majority of correlated instances.
        rng = np.random.default_rng(91)
        n, boot_wins = 300, 0
        for _ in range(n):
            d = int(rng.integers(3, 7))
            A = rng.standard_normal((d, d))
            Q = A @ A.T + 0.05 * np.eye(d)
            a = rng.normal(0.0, 2.0, d)
            costs = {
                m: ambiguity_cost(AmbiguityResolver(Q, m).resolve(a), a, Q)
                for m in ("round", "bootstrap", "ils")
            }
            assert costs["ils"] <= costs["bootstrap"] + 1e-9
            assert costs["ils"] <= costs["round"] + 1e-9
            boot_wins += costs["bootstrap"] <= costs["round"] + 1e-9
        assert boot_wins / n >= 0.95

    def test_validation(self):
        with pytest.raises(ValueError):
            AmbiguityResolver(np.eye(3), "magic")
        with pytest.raises(ValueError):
            AmbiguityResolver(np.ones((2, 3)), "ils")
        with pytest.raises(NumericalError):
            AmbiguityResolver(np.array([[1.0, 2.0], [2.0, 1.0]]), "ils")
        with pytest.raises(ValueError):
            AmbiguityResolver(np.eye(3), "ils").resolve(np.zeros(2))

    def test_empty_problem(self):
        r = AmbiguityResolver(np.zeros((0, 0)), "ils")
        assert r.resolve(np.zeros(0)).size == 0

    def test_cost_value(self):
        Q = np.diag([1.0, 4.0])
        a_float = np.array([0.5, 1.0])
        got = ambiguity_cost(np.array([1, 2]), a_float, Q)
        assert got == pytest.approx(0.5**2 / 1.0 + 1.0**2 / 4.0, rel=1e-12)


class TestEstimateReport:
    def test_fixed_requires_integers(self):
        with pytest.raises(ValueError):
            EstimateReport(
                states=np.zeros((1, 3)), float_ambiguities=None,
                fixed_ambiguities=None, fixed=True, iterations=1,
                residual_norm=0.0,
            )

    def test_rejects_negative_iterations(self):
        with pytest.raises(ValueError):
            EstimateReport(
                states=np.zeros((1, 3)), float_ambiguities=None,
                fixed_ambiguities=None, fixed=False, iterations=-1,
                residual_norm=0.0,
            )
