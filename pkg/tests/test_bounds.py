"""Information and covariance bounds: FIM assembly, CRB extraction,
carrier float/fixed bounds, and the parameterized cooperative forms."""
import numpy as np
import pytest

from conftest import spd
from coopdgnss.bounds import (
    asymptotic_suite,
    benchmarks,
    bound_report,
    cluster_fims,
    constrained_user_crb,
    crb_block,
    crtk_fix_crb,
    crtk_float_crb,
    crtk_float_fim,
    fim,
    parameterized_fim,
    rmse_bound,
)
from coopdgnss.errors import NumericalError
from coopdgnss.netmodel import beta, clustered_cov, clustered_obs


def random_model(seed, k=8, m=4):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((k, m))
    R = spd(rng, k)
    return G, R


class TestFim:
    def test_identity_noise_is_gram_matrix(self):
        G = np.arange(12.0).reshape(4, 3)
        assert np.allclose(fim(G, np.eye(4)), G.T @ G, atol=1e-12)

    def test_matches_dense_oracle(self):
        G, R = random_model(7)
        want = G.T @ np.linalg.inv(R) @ G
        assert np.allclose(fim(G, R), want, atol=1e-10)

    def test_output_is_symmetric(self):
        G, R = random_model(8)
        J = fim(G, R)
        assert np.array_equal(J, J.T)


class TestCrbBlock:
    def test_diagonal_example(self):
        J = np.diag([1.0, 2.0, 4.0, 5.0, 8.0, 10.0])
        blk = crb_block(J, 1, user_dim=3)
        assert np.allclose(blk, np.diag([1.0, 0.5, 0.25]))
        blk2 = crb_block(J, 2, user_dim=3)
        assert np.allclose(blk2, np.diag([0.2, 0.125, 0.1]))

    def test_position_part_of_clock_states(self):
        J = np.diag(np.arange(1.0, 9.0))
        blk = crb_block(J, 2, user_dim=4, pos_dim=3)
        assert blk.shape == (3, 3)
        assert np.allclose(blk, np.diag([1.0 / 5.0, 1.0 / 6.0, 1.0 / 7.0]))

    def test_one_based_indexing_enforced(self):
        with pytest.raises(ValueError, match="1-based"):
            crb_block(np.eye(6), 0, user_dim=3)

    def test_out_of_range_user(self):
        with pytest.raises(ValueError):
            crb_block(np.eye(6), 3, user_dim=3)


class TestRmseBound:
    def test_identity_block(self):
        assert rmse_bound(np.eye(3)) == pytest.approx(np.sqrt(3.0), rel=1e-15)

    def test_scales_as_sqrt(self):
        rng = np.random.default_rng(9)
        B = spd(rng, 3)
        assert rmse_bound(4.0 * B) == pytest.approx(2.0 * rmse_bound(B), rel=1e-14)


class TestCarrierBounds:
    def setup_method(self):
        rng = np.random.default_rng(17)
        self.B = rng.standard_normal((10, 6))
        self.Sc = spd(rng, 10)
        self.lam = 0.19

    def test_float_fim_matches_stacked_oracle(self):
        Sp = 1e-4 * self.Sc
        n = self.B.shape[0]
        G = np.block(
            [
                [self.B, np.zeros((n, n))],
                [self.B, self.lam * np.eye(n)],
            ]
        )
        R = np.block(
            [[self.Sc, np.zeros((n, n))], [np.zeros((n, n)), Sp]]
        )
        want = G.T @ np.linalg.inv(R) @ G
        got = crtk_float_fim(self.B, self.Sc, Sp, self.lam)
        assert np.linalg.norm(got - want) / np.linalg.norm(want) < 1e-10

    def test_float_fim_ambiguity_corner(self):
        Sp = 2e-4 * np.eye(10)
        got = crtk_float_fim(self.B, self.Sc, Sp, self.lam)
        corner = got[6:, 6:]
        assert np.allclose(corner, self.lam**2 * np.linalg.inv(Sp), atol=1e-9)

    def test_float_crb_is_schur_of_float_fim(self):
        # Marginalizing the ambiguities out of the joint float information
        # must collapse to the code-only bound.
        Sp = 1e-4 * self.Sc
        J = crtk_float_fim(self.B, self.Sc, Sp, self.lam)
        cov = np.linalg.inv(J)
        got = crtk_float_crb(self.B, self.Sc)
        assert np.linalg.norm(cov[:6, :6] - got) / np.linalg.norm(got) < 1e-10

    def test_float_crb_ignores_phase_noise_level(self):
        got = crtk_float_crb(self.B, self.Sc)
        want = np.linalg.inv(self.B.T @ np.linalg.inv(self.Sc) @ self.B)
        assert np.allclose(got, want, atol=1e-10)

    def test_fix_crb_proportional_noise_ratios(self):
        # With phase covariance c^2 times code covariance: the exact fixed
        # bound is float * c^2/(1+c^2) and the phase-only form float * c^2.
        c = 0.01
        Sp = c**2 * self.Sc
        flt = crtk_float_crb(self.B, self.Sc)
        exact, phase_only = crtk_fix_crb(self.B, self.Sc, Sp)
        assert np.allclose(exact, flt * c**2 / (1 + c**2), rtol=1e-9)
        assert np.allclose(phase_only, flt * c**2, rtol=1e-9)

    def test_fix_crb_equal_noise_halves_float(self):
        exact, _ = crtk_fix_crb(self.B, self.Sc, self.Sc.copy())
        flt = crtk_float_crb(self.B, self.Sc)
        assert np.allclose(exact, flt / 2.0, rtol=1e-9)


class TestClusterFims:
    def test_values(self):
        rng = np.random.default_rng(19)
        G_c = rng.standard_normal((4, 4))
        G_o = rng.standard_normal((3, 4))
        R_c, R_o = spd(rng, 4), spd(rng, 3)
        J_c, J_o = cluster_fims(G_c, G_o, R_c, R_o)
        assert np.allclose(J_c, G_c.T @ np.linalg.inv(R_c) @ G_c, atol=1e-10)
        assert np.allclose(J_o, G_o.T @ np.linalg.inv(R_o) @ G_o, atol=1e-10)

    def test_empty_exclusive_set(self):
        rng = np.random.default_rng(20)
        G_c = rng.standard_normal((4, 4))
        J_c, J_o = cluster_fims(G_c, np.zeros((0, 4)), spd(rng, 4), np.zeros((0, 0)))
        assert np.array_equal(J_o, np.zeros((4, 4)))
        assert J_c.shape == (4, 4)


def cluster_pair(seed, m=4):
    rng = np.random.default_rng(seed)
    return spd(rng, m), spd(rng, m)


class TestParameterizedFim:
    def test_matches_brute_force_network(self):
        # Independent oracle: assemble the explicit network design and its
        # clustered noise, then take the dense information matrix.
        rng = np.random.default_rng(23)
        K_c, K_o, m = 4, 3, 4
        G_c = rng.standard_normal((K_c, m))
        G_o = rng.standard_normal((K_o, m))
        R_c, R_o = spd(rng, K_c), spd(rng, K_o)
        for alpha, n_o in [(0.5, 1), (1.0, 3), (2.0, 5)]:
            G = clustered_obs(G_c, G_o, n_o)
            R = clustered_cov(n_o, alpha, R_c, R_o).dense
            want = G.T @ np.linalg.inv(R) @ G
            J_c, J_o = cluster_fims(G_c, G_o, R_c, R_o)
            got = parameterized_fim(J_c, J_o, alpha, n_o)
            assert np.linalg.norm(got - want) / np.linalg.norm(want) < 1e-10

    def test_perfect_base_decouples(self):
        J_c, J_o = cluster_pair(24)
        got = parameterized_fim(J_c, J_o, 0.0, 2)
        m = 4
        assert np.allclose(got[:m, m:], 0.0, atol=1e-14)
        assert np.allclose(got[:m, :m], J_c, atol=1e-14)
        assert np.allclose(got[m : 2 * m, m : 2 * m], J_c + J_o, atol=1e-14)

    def test_no_aiders(self):
        J_c, J_o = cluster_pair(25)
        for a in (0.3, 1.0):
            got = parameterized_fim(J_c, J_o, a, 0)
            assert np.allclose(got, J_c / (1.0 + a), atol=1e-12)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            parameterized_fim(np.eye(4), np.eye(3), 0.5, 1)


class TestConstrainedUserCrb:
    def test_equals_block_of_full_inverse(self):
        J_c, J_o = cluster_pair(26)
        for alpha, n_o in [(0.5, 1), (1.0, 4), (2.5, 10)]:
            full = np.linalg.inv(parameterized_fim(J_c, J_o, alpha, n_o))
            want = full[:4, :4]
            got = constrained_user_crb(J_c, J_o, alpha, n_o)
            assert np.linalg.norm(got - want) / np.linalg.norm(want) < 1e-10

    def test_no_aiders_is_noncooperative(self):
        J_c, J_o = cluster_pair(27)
        got = constrained_user_crb(J_c, J_o, 0.8, 0)
        assert np.allclose(got, 1.8 * np.linalg.inv(J_c), rtol=1e-10)

    def test_useless_aiders_do_not_help(self):
        J_c, _ = cluster_pair(28)
        got = constrained_user_crb(J_c, np.zeros((4, 4)), 0.6, 7)
        assert np.allclose(got, 1.6 * np.linalg.inv(J_c), rtol=1e-10)

    def test_loewner_between_benchmarks(self):
        J_c, J_o = cluster_pair(29)
        for alpha in (0.3, 1.0, 2.0):
            for n_o in (1, 3, 10, 40):
                C = constrained_user_crb(J_c, J_o, alpha, n_o)
                ref = benchmarks(J_c, alpha, n_o)
                scale = float(np.linalg.eigvalsh(C)[-1])
                assert np.linalg.eigvalsh(C - ref.ideal)[0] >= -1e-10 * scale
                assert np.linalg.eigvalsh(ref.noncoop - C)[0] >= -1e-10 * scale

    def test_rmse_monotone_in_crowd_size(self):
        J_c, J_o = cluster_pair(30)
        prev = np.inf
        for n_o in range(0, 60):
            r = rmse_bound(constrained_user_crb(J_c, J_o, 0.7, n_o)[:3, :3])
            assert r <= prev + 1e-12
            prev = r


class TestBenchmarks:
    def test_ratios(self):
        J_c, _ = cluster_pair(33)
        ref = benchmarks(J_c, 0.5, 10)
        inv = np.linalg.inv(J_c)
        assert np.allclose(ref.ideal, inv, atol=1e-12)
        assert np.allclose(ref.noncoop, 1.5 * inv, rtol=1e-12)
        b1 = beta(0.5, 10).beta1
        assert np.allclose(ref.asymptotic, inv / b1, rtol=1e-12)
        # strong aiding can beat the ideal-base reference: beta1 < 1
        assert rmse_bound(ref.asymptotic[:3, :3]) > rmse_bound(ref.ideal[:3, :3])


class TestAsymptoticSuite:
    def test_regime_errors(self):
        J_c, J_o = cluster_pair(34)
        rep = asymptotic_suite(J_c, J_o, alpha=0.5, N_o=10)
        scales = [t for t, _ in rep.strong_aiding]
        errors = [e for _, e in rep.strong_aiding]
        assert scales == [1e-4, 1e-6, 1e-8]
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] < 1e-6
        assert rep.useless_aiding < 1e-10
        assert rep.disjoint < 1e-12
        assert rep.crowd_size == 10_000


class TestBoundReport:
    def test_structure_and_consistency(self):
        J_c, J_o = cluster_pair(35)
        rep = bound_report(J_c, J_o, alpha=0.7, N_o=3)
        assert len(rep.crb_user_blocks) == 4
        assert rep.fim.shape == (16, 16)
        assert rep.rmse_per_user[0] == pytest.approx(
            rmse_bound(rep.crb_user_blocks[0]), rel=1e-15
        )
        # constrained user first, then identical aiding users
        aiding = rep.rmse_per_user[1:]
        assert max(aiding) - min(aiding) < 1e-10
        assert rep.benchmark_ideal <= rep.rmse_per_user[0] <= rep.benchmark_noncoop
        assert rep.rmse_per_user[0] == pytest.approx(
            rmse_bound(constrained_user_crb(J_c, J_o, 0.7, 3)[:3, :3]), rel=1e-10
        )

    def test_singular_fim_raises(self):
        with pytest.raises(NumericalError):
            bound_report(np.zeros((4, 4)), np.zeros((4, 4)), 0.5, 2)
