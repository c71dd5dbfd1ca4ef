import numpy as np
import pytest

from conftest import crandn, random_channels, random_hermitian, rel_err
from irs_isac.metrics import radar_matrix, snr_comm_trace, snr_radar_trace
from irs_isac.precoder_solver import (
    PrecoderState,
    build_B,
    build_breve_omega,
    build_Z,
    check_R_D,
    default_R_D,
    init_precoder,
    unvec,
    update_p,
)


def _feasible(rng, n, P_T):
    p = crandn(rng, n)
    return np.sqrt(P_T) * p / np.linalg.norm(p)


def test_build_Z_limits(rng):
    R, C = crandn(rng, 3, 3), crandn(rng, 2, 3)
    np.testing.assert_allclose(build_Z(R, C, 1.0, 2.0, 1.0), R.conj().T @ R / 2.0, atol=1e-14)
    assert not np.any(build_Z(np.zeros((3, 3)), np.zeros((2, 3)), 0.5, 1.0, 1.0))
    Z = build_Z(R, C, 0.3, 1.0, 1.0)
    assert np.linalg.eigvalsh(Z)[0] >= -1e-12 * np.linalg.norm(Z)


def test_build_Z_trace_oracle(rng):
    N, L, K = 3, 4, 2
    ch = random_channels(rng, N, L, K)
    Phi = np.diag(crandn(rng, L))
    P = crandn(rng, N, K)
    C = ch.F + ch.H @ Phi @ ch.G
    R = radar_matrix(ch.G, Phi, ch.a, ch.alpha_T)
    Z = build_Z(R, C, 0.4, 0.5, 2.0)
    p = P.reshape(-1, order="F")
    lhs = np.vdot(p, np.kron(np.eye(K), Z) @ p).real
    ref = 0.4 * snr_radar_trace(ch.G, Phi, ch.a, ch.alpha_T, P, 0.5) + 0.6 * snr_comm_trace(
        ch.F, ch.H, ch.G, Phi, P, 2.0
    )
    assert rel_err(lhs, ref) <= 1e-9


def test_build_Z_shape_errors(rng):
    with pytest.raises(ValueError):
        build_Z(crandn(rng, 3, 2), crandn(rng, 2, 2), 0.5, 1.0, 1.0)


def test_breve_omega_gamma_zero(rng):
    N, K = 2, 3
    Zc = np.kron(np.eye(K), random_hermitian(rng, N, psd=True))
    p = crandn(rng, N * K)
    out = build_breve_omega(p, Zc, 0.0, default_R_D(N, 4.0), lambda_m=7.0)
    np.testing.assert_allclose(out, 7.0 * np.eye(N * K) - Zc, atol=1e-14)


def test_breve_omega_feasible_covariance(rng):
    N, K, gamma = 2, 2, 0.8
    P = crandn(rng, N, K)
    R_D = P @ P.conj().T
    p = P.reshape(-1, order="F")
    Zc = np.zeros((N * K, N * K))
    out = build_breve_omega(p, Zc, gamma, R_D, lambda_m=0.0)
    np.testing.assert_allclose(out, -gamma * np.kron(np.eye(K), R_D), atol=1e-13)


def test_breve_omega_frobenius_oracle(rng):
    N, K, gamma, P_T = 3, 2, 1.7, 5.0
    P = crandn(rng, N, K)
    p = P.reshape(-1, order="F")
    R_D = default_R_D(N, P_T)
    Zc = np.zeros((N * K, N * K))
    pen = build_breve_omega(p, Zc, gamma, R_D, lambda_m=0.0)
    lhs = np.vdot(p, pen @ p).real + gamma * np.trace(R_D @ R_D).real
    ref = gamma * np.linalg.norm(P @ P.conj().T - R_D) ** 2
    assert rel_err(lhs, ref) <= 1e-9


def test_breve_omega_default_lambda(rng):
    N, K = 2, 2
    Zc = np.kron(np.eye(K), random_hermitian(rng, N, psd=True))
    out = build_breve_omega(crandn(rng, 4), Zc, 0.0, default_R_D(N, 1.0))
    # lambda_m is the largest eigenvalue of Zc (plus a tiny safety margin)
    assert np.linalg.eigvalsh(out)[0] == pytest.approx(0.0, abs=1e-5 * np.linalg.norm(Zc))


def test_build_B_structure(rng):
    n, P_T = 4, 3.0
    Om = random_hermitian(rng, n)
    p = _feasible(rng, n, P_T)
    B = build_B(p, Om, 0.0, P_T).matrix
    assert not np.any(B[:n, n]) and not np.any(B[n, :n])
    B = build_B(p, Om, 1.0, P_T).matrix
    np.testing.assert_allclose(B, B.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(B)[0] >= -1e-9 * np.abs(B).max()
    np.testing.assert_allclose(B[:n, n], p, atol=1e-14)


def test_build_B_scaled_identity_upper_block(rng):
    n, lam = 4, 2.5
    lq = build_B(_feasible(rng, n, 1.0), lam * np.eye(n), 0.0, 1.0)
    # the loading bound carries a 1e-6 relative safety margin
    assert np.max(np.abs(lq.matrix[:n, :n])) <= 1e-5 * lam


def test_update_p_identity_and_norm(rng):
    N, K, P_T = 2, 3, 7.0
    st = init_precoder(N, K, P_T, rng)
    p = update_p(st, np.eye(N * K + 1), P_T, 1)
    np.testing.assert_allclose(p, st.p1, rtol=1e-12)
    for _ in range(1000):
        B = random_hermitian(rng, N * K + 1, psd=True)
        st.p1 = update_p(st, B, P_T, 1)
        assert abs(np.vdot(st.p1, st.p1).real - P_T) <= 1e-12 * P_T


def test_update_p_zero_product(rng):
    st = init_precoder(2, 2, 1.0, rng)
    p = update_p(st, np.zeros((5, 5)), 1.0, 2)
    np.testing.assert_array_equal(p, st.p2)
    assert st.degenerate_events == 1


def test_loaded_objective_identity(rng):
    n, P_T = 6, 4.0
    Om = random_hermitian(rng, n)
    lam = 3.3
    for _ in range(10):
        p = _feasible(rng, n, P_T)
        lhs = np.vdot(p, (lam * np.eye(n) - Om) @ p).real
        rhs = lam * P_T - np.vdot(p, Om @ p).real
        assert abs(lhs - rhs) <= 1e-10 * max(abs(rhs), 1.0)


def test_alternating_updates_improve_objective(rng):
    N, K, P_T, gamma = 2, 2, 2.0, 0.5
    Zc = np.kron(np.eye(K), random_hermitian(rng, N, psd=True))
    st = init_precoder(N, K, P_T, rng, gamma=gamma)
    lam_m = np.linalg.eigvalsh(Zc)[-1]

    def objective(p):
        P = unvec(p, N, K)
        return np.vdot(p, Zc @ p).real - gamma * np.linalg.norm(P @ P.conj().T - st.R_D) ** 2

    start = objective(st.p1)
    for _ in range(100):
        for j, i in ((1, 2), (2, 1)):
            p_i = st.track(i)
            om = build_breve_omega(p_i, Zc, gamma, st.R_D, lambda_m=lam_m)
            st.set_track(j, update_p(st, build_B(p_i, om, 1.0, P_T), P_T, j))
    assert objective(st.p1) >= start
    assert np.linalg.norm(st.p1 - st.p2) <= 1e-3 * np.sqrt(P_T)


def test_R_D_validation(rng):
    R = default_R_D(4, 8.0)
    assert np.trace(R).real == pytest.approx(8.0)
    check_R_D(R, 4, 8.0)
    with pytest.raises(ValueError, match="trace"):
        check_R_D(R, 4, 9.0)
    with pytest.raises(ValueError, match="semidefinite"):
        check_R_D(np.diag([10.0, -2.0]), 2, 8.0)
    with pytest.raises(ValueError):
        check_R_D(np.eye(3), 2, 3.0)


def test_init_precoder(rng):
    st = init_precoder(4, 5, 1e5, rng)
    assert isinstance(st, PrecoderState)
    assert np.vdot(st.p1, st.p1).real == pytest.approx(1e5, rel=1e-12)
    assert st.P.shape == (4, 5)
    np.testing.assert_array_equal(st.P[:, 1], st.p1[4:8])


def test_penalty_vanishes_at_feasible_covariance(rng):
    N, K, P_T, gamma = 3, 4, 6.0, 2.0
    R_D = default_R_D(N, P_T)
    # rows orthogonal with squared norm P_T / N, so P P^H = R_D
    Q, _ = np.linalg.qr(crandn(rng, K, N))
    P = np.sqrt(P_T / N) * Q.conj().T
    p = P.reshape(-1, order="F")
    pen = build_breve_omega(p, np.zeros((N * K, N * K)), gamma, R_D, lambda_m=0.0)
    value = np.vdot(p, pen @ p).real + gamma * np.trace(R_D @ R_D).real
    assert abs(value) <= 1e-12 * gamma * np.trace(R_D @ R_D).real
