import math
import warnings

import numpy as np
import pytest

from gramclust import (
    NotConvergedWarning,
    NotPSD,
    SdpConfig,
    SymMatrix,
    ascend_from,
    brute_force_clust,
    certify_sandwich,
    gram_factorize,
    min_enclosing_ball,
    random_centered_psd,
    solve_sdp,
)

ANTIPODAL = SymMatrix.from_array([[1.0, -1.0], [-1.0, 1.0]])


class TestSolveSdp:
    def test_antipodal_optimum(self):
        sol = solve_sdp(ANTIPODAL, rng=0)
        assert sol.value == pytest.approx(4.0, abs=1e-9)
        assert sol.vectors[0] @ sol.vectors[1] == pytest.approx(-1.0, abs=1e-9)
        assert sol.converged

    def test_zero_matrix(self):
        sol = solve_sdp(SymMatrix.from_array(np.zeros((3, 3))), rng=0)
        assert sol.value == 0.0

    def test_unit_rows(self):
        a = random_centered_psd(9, np.random.default_rng(2))
        sol = solve_sdp(a, rng=2)
        np.testing.assert_allclose(
            np.linalg.norm(sol.vectors, axis=1), 1.0, atol=1e-9
        )

    def test_value_recomputes_from_vectors(self):
        a = random_centered_psd(7, np.random.default_rng(3))
        sol = solve_sdp(a, rng=3)
        recomputed = float(np.sum((a.mat @ sol.vectors) * sol.vectors))
        assert sol.value == pytest.approx(recomputed, rel=1e-7)

    def test_value_at_least_trace_and_nonnegative(self):
        for seed in range(6):
            a = random_centered_psd(6, np.random.default_rng(40 + seed))
            sol = solve_sdp(a, rng=seed)
            assert sol.value >= float(np.trace(a.mat)) - 1e-7 * np.linalg.norm(a.mat)
            assert sol.value >= 0.0

    def test_escalation_from_rank_one(self):
        # rank0=1 forces the +2 escalation path; value must still reach the
        # reference optimum and never regress across escalations
        a = random_centered_psd(7, np.random.default_rng(31))
        low = solve_sdp(a, SdpConfig(rank0=1, restarts=2), rng=31)
        ref = solve_sdp(a, SdpConfig(rank0=7, restarts=8), rng=32)
        assert low.rank > 1
        assert low.value == pytest.approx(ref.value, rel=1e-6)

    def test_threaded_restarts_match_serial(self):
        a = random_centered_psd(8, np.random.default_rng(33))
        serial = solve_sdp(a, rng=33)
        threaded = solve_sdp(a, rng=33, threads=4)
        assert serial.value == threaded.value
        np.testing.assert_array_equal(serial.vectors, threaded.vectors)

    def test_matches_dense_multirestart_reference(self):
        # convexity: spurious strict local maxima are rank-deficient, so a
        # full-rank many-restart run is a reliable reference at n <= 6
        for seed in range(5):
            n = 4 + seed % 3
            a = random_centered_psd(n, np.random.default_rng(60 + seed))
            sol = solve_sdp(a, rng=seed)
            ref = solve_sdp(a, SdpConfig(rank0=n, restarts=12), rng=seed + 1)
            assert sol.value == pytest.approx(ref.value, rel=1e-5)

    def test_dual_upper_bounds_value(self):
        a = random_centered_psd(8, np.random.default_rng(5))
        sol = solve_sdp(a, rng=5)
        assert sol.dual_upper >= sol.value - 1e-9
        # the certificate should be nearly tight at a certified optimum
        assert sol.dual_upper - sol.value <= 1e-4 * max(sol.value, 1.0)

    def test_lower_bound_chain(self):
        a = random_centered_psd(6, np.random.default_rng(9))
        b = SymMatrix.from_array(np.eye(3))
        clust, sigma = brute_force_clust(a, b)
        ball = min_enclosing_ball(gram_factorize(b))
        sol = solve_sdp(a, rng=9)
        seed_vectors = (ball.gram.vectors[sigma] - ball.center) / ball.radius
        feasible_value = float(np.sum((a.mat @ seed_vectors) * seed_vectors))
        assert feasible_value == pytest.approx(clust / ball.radius ** 2, rel=1e-9)
        assert sol.value >= feasible_value - 1e-7 * max(1.0, abs(feasible_value))

    def test_ascend_from_never_decreases(self):
        a = random_centered_psd(6, np.random.default_rng(10))
        b = SymMatrix.from_array(np.eye(2))
        _, sigma = brute_force_clust(a, b)
        ball = min_enclosing_ball(gram_factorize(b))
        seed_vectors = (ball.gram.vectors[sigma] - ball.center) / ball.radius
        before = float(np.sum((a.mat @ seed_vectors) * seed_vectors))
        sol = ascend_from(a, seed_vectors)
        assert sol.value >= before - 1e-10

    def test_not_converged_flagged(self):
        a = random_centered_psd(12, np.random.default_rng(11))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            sol = solve_sdp(a, SdpConfig(max_iters=2, restarts=1), rng=11)
        assert not sol.converged
        assert any(issubclass(w.category, NotConvergedWarning) for w in caught)

    def test_rejects_indefinite(self):
        with pytest.raises(NotPSD):
            solve_sdp(SymMatrix.from_array([[0.0, 1.0], [1.0, 0.0]]), rng=0)

    def test_deterministic(self):
        a = random_centered_psd(8, np.random.default_rng(21))
        s1 = solve_sdp(a, rng=21)
        s2 = solve_sdp(a, rng=21)
        assert s1.value == s2.value
        np.testing.assert_array_equal(s1.vectors, s2.vectors)


class TestCertifySandwich:
    def test_antipodal_example(self):
        sol = solve_sdp(ANTIPODAL, rng=0)
        # Clust = 2, R^2 = 1/2, C = 1/pi: checks 4 <= 4.0004 and 4 <= 2pi
        report = certify_sandwich(sol, 2.0, 0.5, 1.0 / math.pi)
        assert report["passed"]
        assert report["clust_over_r2"] == pytest.approx(4.0)
        assert report["clust_over_c"] == pytest.approx(2.0 * math.pi)

    def test_all_zero_instance(self):
        sol = solve_sdp(SymMatrix.from_array(np.zeros((2, 2))), rng=0)
        report = certify_sandwich(sol, 0.0, 0.0, 0.0)
        assert report["passed"]

    def test_detects_undershoot(self):
        sol = solve_sdp(ANTIPODAL, rng=0)
        bogus = sol.__class__(**{**sol.__dict__, "value": 1.0, "dual_upper": 1.0})
        report = certify_sandwich(bogus, 2.0, 0.5, 1.0 / math.pi)
        assert not report["left_ok"]
