"""DFBS precoder update by bi-quadratic power iteration on vec(P)."""

from dataclasses import dataclass

import numpy as np

from ._validation import DimensionError, as_cmatrix, as_cvector, check_hermitian, hermitian_part
from .irs_solver import LoadedQuadratic, _loaded_block
from .matcore import LoadingBounds


@dataclass
class PrecoderState:
    """Paired vectorized precoder tracks, each of squared norm P_T."""

    p1: np.ndarray
    p2: np.ndarray
    N: int
    K: int
    R_D: np.ndarray
    gamma: float = 1.0
    tau_check: float = 1.0
    degenerate_events: int = 0

    @property
    def P(self):
        return unvec(self.p1, self.N, self.K)

    def copy(self):
        return PrecoderState(
            self.p1.copy(), self.p2.copy(), self.N, self.K, self.R_D,
            self.gamma, self.tau_check, self.degenerate_events,
        )

    def track(self, j):
        return getattr(self, f"p{j}")

    def set_track(self, j, value):
        setattr(self, f"p{j}", value)


def unvec(p, N, K):
    return np.reshape(p, (N, K), order="F")


def default_R_D(N, P_T):
    """Omnidirectional desired covariance (P_T / N) I."""
    return (P_T / N) * np.eye(N, dtype=np.complex128)


def check_R_D(R_D, N, P_T, rtol=1e-9):
    R_D = as_cmatrix(R_D, "R_D")
    if R_D.shape != (N, N):
        raise DimensionError(f"R_D must be {(N, N)}, got {R_D.shape}")
    check_hermitian(R_D, "R_D")
    if abs(np.trace(R_D).real - P_T) > rtol * P_T:
        raise ValueError(f"trace(R_D) must equal P_T = {P_T}")
    if np.linalg.eigvalsh(hermitian_part(R_D))[0] < -1e-8 * np.linalg.norm(R_D):
        raise ValueError("R_D must be positive semidefinite")
    return R_D


def init_precoder(N, K, P_T, rng, R_D=None, gamma=1.0, tau_check=1.0, perturbation=0.1):
    """All-ones precoder plus a small seeded complex perturbation, scaled to P_T."""
    P0 = np.ones((N, K)) + perturbation * (
        rng.standard_normal((N, K)) + 1j * rng.standard_normal((N, K))
    )
    p = P0.reshape(-1, order="F")
    p = np.sqrt(P_T) * p / np.linalg.norm(p)
    R_D = default_R_D(N, P_T) if R_D is None else check_R_D(R_D, N, P_T)
    return PrecoderState(p.copy(), p.copy(), N, K, R_D, gamma, tau_check)


def build_Z(R, C, beta, sigma_r_sq, sigma_c_sq):
    """(beta / sigma_r^2) R^H R + ((1 - beta) / sigma_c^2) C^H C."""
    R = as_cmatrix(R, "R")
    C = as_cmatrix(C, "C")
    N = R.shape[1]
    if R.shape != (N, N) or C.shape[1] != N:
        raise DimensionError(f"R must be square and C must have {N} columns; got {R.shape}, {C.shape}")
    Z = (beta / sigma_r_sq) * (R.conj().T @ R) + ((1.0 - beta) / sigma_c_sq) * (C.conj().T @ C)
    return hermitian_part(Z)


def build_breve_omega(p_tilde, Z_check, gamma, R_D, lambda_m=None, bounds=None, key=None):
    """Z_breve + gamma (I_K kron P P^H) - 2 gamma (I_K kron R_D), Z_breve = lambda_m I - Z_check.

    ``lambda_m`` defaults to the largest eigenvalue of `Z_check`.
    """
    Z_check = check_hermitian(as_cmatrix(Z_check, "Z_check"), "Z_check")
    R_D = as_cmatrix(R_D, "R_D")
    N = R_D.shape[0]
    NK = Z_check.shape[0]
    if NK % N:
        raise DimensionError(f"Z_check size {NK} is not a multiple of N = {N}")
    K = NK // N
    p_tilde = as_cvector(p_tilde, "p_tilde", NK)
    if lambda_m is None:
        bounds = bounds or LoadingBounds()
        lambda_m = bounds(Z_check, key)
    P = unvec(p_tilde, N, K)
    I_K = np.eye(K)
    Z_breve = lambda_m * np.eye(NK) - Z_check
    penalty = gamma * np.kron(I_K, P @ P.conj().T) - 2.0 * gamma * np.kron(I_K, R_D)
    return hermitian_part(Z_breve + penalty)


def build_B(p_tilde_i, breve_omega, tau_check, P_T, bounds=None, key=None):
    """Loaded precoder-step matrix ``[[lam I - Om, tau p_i], [tau p_i^H, lam - 2 tau P_T]]``.

    ``lam`` is the largest eigenvalue of the unloaded block
    ``[[Om, -tau p_i], [-tau p_i^H, 2 tau P_T]]``; by interlacing it also
    bounds the spectrum of `breve_omega`, and it makes the result PSD.
    """
    Om = check_hermitian(np.asarray(breve_omega, dtype=np.complex128), "breve_omega")
    p_i = as_cvector(p_tilde_i, "p_tilde_i", Om.shape[0])
    bounds = bounds or LoadingBounds()
    lam, B = _loaded_block(Om, tau_check * p_i, 2.0 * tau_check * P_T, bounds, key)
    return LoadedQuadratic(B, (lam,))


def update_p(state, B, P_T, j):
    """One power step for precoder track `j`: truncate ``B [p_j; 1]`` and rescale to P_T."""
    p_j = state.track(j)
    NK = p_j.shape[0]
    Bm = B.matrix if isinstance(B, LoadedQuadratic) else np.asarray(B)
    y = (Bm @ np.concatenate([p_j, [1.0]]))[:NK]
    nrm = np.linalg.norm(y)
    if not nrm > 0 or not np.isfinite(nrm):
        state.degenerate_events += 1
        return p_j.copy()
    return np.sqrt(P_T) * y / nrm
