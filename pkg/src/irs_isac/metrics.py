"""Radar and communications SNR in trace form and in quadratic/quartic form.

The trace forms are the ground truth. The quadratic forms exist for the
solvers and must agree with them; when a consistency test fails, the
quadratic side is the suspect.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import DimensionError, as_cmatrix, as_cvector, check_square, hermitian_part
from .matcore import kron, selection_matrix, vectorize


@dataclass(frozen=True)
class SnrBreakdown:
    snr_r: float
    snr_c: float
    snr_t: float

    def as_db(self):
        return tuple(to_db(x) for x in (self.snr_r, self.snr_c, self.snr_t))


@dataclass(frozen=True)
class Prop1Cache:
    """Matrices of the quadratic communications-SNR form.

    ``SNR_c = vbar^H Omega_tilde vbar`` with ``vbar = [v; 1]``.
    """

    F_tilde: np.ndarray
    G_tilde: np.ndarray
    T: np.ndarray
    Q_hat: np.ndarray
    alpha_vec: np.ndarray
    Q_tilde: np.ndarray
    Omega_tilde: np.ndarray
    Omega: np.ndarray


def to_db(x):
    return 10.0 * np.log10(x) if x > 0 else -np.inf


def _diag(v):
    return np.diag(as_cvector(v, "v"))


def snr_comm_trace(F, H, G, Phi, P, sigma_c_sq):
    """(1/sigma_c^2) Tr(C P P^H C^H) with C = F + H Phi G."""
    F, H, G, Phi, P = (as_cmatrix(X, n) for X, n in zip((F, H, G, Phi, P), "FHGΦP"))
    K, N = F.shape
    L = Phi.shape[0]
    if H.shape != (K, L) or G.shape != (L, N) or Phi.shape != (L, L) or P.shape[0] != N:
        raise DimensionError(
            f"non-conformable shapes F{F.shape} H{H.shape} Phi{Phi.shape} G{G.shape} P{P.shape}"
        )
    C = F + H @ Phi @ G
    CP = C @ P
    return float(np.trace(CP @ CP.conj().T).real) / sigma_c_sq


def radar_matrix(G, Phi, a, alpha_T):
    """Round-trip radar channel R = alpha_T G^T Phi a a^T Phi G (N x N)."""
    a = as_cvector(a, "a")
    return alpha_T * (G.T @ Phi @ np.outer(a, a) @ Phi @ G)


def snr_radar_trace(G, Phi, a, alpha_T, P, sigma_r_sq):
    """(1/sigma_r^2) Tr(R P P^H R^H)."""
    G, Phi, P = as_cmatrix(G, "G"), as_cmatrix(Phi, "Phi"), as_cmatrix(P, "P")
    L, N = G.shape
    if Phi.shape != (L, L) or P.shape[0] != N or np.size(a) != L:
        raise DimensionError(f"non-conformable shapes G{G.shape} Phi{Phi.shape} P{P.shape}")
    RP = radar_matrix(G, Phi, a, alpha_T) @ P
    return float(np.trace(RP @ RP.conj().T).real) / sigma_r_sq


def build_prop1_cache(channels, P, sigma_c_sq):
    F, G, H = channels.F, channels.G, channels.H
    N, L, K = channels.shape
    P = as_cmatrix(P, "P")
    if P.shape[0] != N:
        raise DimensionError(f"P must have {N} rows, got {P.shape}")

    F_tilde = vectorize(F)
    G_tilde = kron(G.T, H)
    T = selection_matrix(L)
    PI = kron(P.T, np.eye(K))
    Q_hat = PI.conj().T @ PI
    GT = G_tilde @ T
    alpha_vec = GT.conj().T @ Q_hat @ F_tilde
    Q_tilde = hermitian_part(GT.conj().T @ Q_hat @ GT)
    corner = np.vdot(F_tilde, Q_hat @ F_tilde).real

    Omega_tilde = np.empty((L + 1, L + 1), dtype=np.complex128)
    Omega_tilde[:L, :L] = Q_tilde
    Omega_tilde[:L, L] = alpha_vec
    Omega_tilde[L, :L] = alpha_vec.conj()
    Omega_tilde[L, L] = corner
    Omega_tilde /= sigma_c_sq

    return Prop1Cache(
        F_tilde=F_tilde,
        G_tilde=G_tilde,
        T=T,
        Q_hat=Q_hat,
        alpha_vec=alpha_vec,
        Q_tilde=Q_tilde,
        Omega_tilde=Omega_tilde,
        Omega=_diag(channels.a) @ G,
    )


def build_Q_of_v(v, Omega, P, alpha_T, sigma_r_sq):
    """L x L matrix Q(v) with ``v^H Q(v) v`` equal to the radar SNR.

    Q(v) = (|alpha_T|^2 / sigma_r^2) (v^H Omega^* kron Omega^* P^*)(Omega^T v kron P^T Omega^T)
    """
    Omega = as_cmatrix(Omega, "Omega")
    L, N = Omega.shape
    v = as_cvector(v, "v", L)
    P = as_cmatrix(P, "P")
    if P.shape[0] != N:
        raise DimensionError(f"P must have {N} rows, got {P.shape}")
    right = np.kron((Omega.T @ v)[:, None], P.T @ Omega.T)
    left = np.kron((v.conj() @ Omega.conj())[None, :], Omega.conj() @ P.conj())
    return hermitian_part(abs(alpha_T) ** 2 / sigma_r_sq * (left @ right))


def snr_comm_quadratic(cache, v):
    """Communications SNR as ``vbar^H Omega_tilde vbar`` with ``vbar = [v; 1]``."""
    L = cache.Q_tilde.shape[0]
    v_bar = np.append(as_cvector(v, "v", L), 1.0)
    return float(np.vdot(v_bar, cache.Omega_tilde @ v_bar).real)


def snr_radar_quadratic(v, Omega, P, alpha_T, sigma_r_sq):
    """Radar SNR as ``v^H Q(v) v``."""
    v = as_cvector(v, "v")
    return float(np.vdot(v, build_Q_of_v(v, Omega, P, alpha_T, sigma_r_sq) @ v).real)


def pad_corner(A):
    """Embed an L x L matrix in the top-left of an (L+1) x (L+1) zero matrix."""
    L = A.shape[0]
    out = np.zeros((L + 1, L + 1), dtype=np.complex128)
    out[:L, :L] = A
    return out


def build_check_omega(beta, Q_of_v, Omega_tilde):
    """beta * [[Q(v), 0], [0, 0]] + (1 - beta) * Omega_tilde."""
    Q_of_v = check_square(np.asarray(Q_of_v, dtype=np.complex128), "Q_of_v")
    Omega_tilde = check_square(np.asarray(Omega_tilde, dtype=np.complex128), "Omega_tilde")
    if Omega_tilde.shape[0] != Q_of_v.shape[0] + 1:
        raise DimensionError(
            f"Omega_tilde {Omega_tilde.shape} must be one larger than Q(v) {Q_of_v.shape}"
        )
    return beta * pad_corner(Q_of_v) + (1.0 - beta) * Omega_tilde


def mask_quadratic(A, w):
    """Return ``conj(w) w^T * A`` so that x^H (mask) x = (w*x)^H A (w*x)."""
    A = check_square(np.asarray(A, dtype=np.complex128), "A")
    w = as_cvector(w, "w", A.shape[0])
    return np.outer(w.conj(), w) * A


def snr_from_v(channels, v, P, sigma_c_sq, sigma_r_sq, beta):
    Phi = _diag(v)
    snr_r = snr_radar_trace(channels.G, Phi, channels.a, channels.alpha_T, P, sigma_r_sq)
    snr_c = snr_comm_trace(channels.F, channels.H, channels.G, Phi, P, sigma_c_sq)
    return SnrBreakdown(snr_r, snr_c, beta * snr_r + (1.0 - beta) * snr_c)


def snr_total(channels, irs, P, config):
    """Trace-form SNR breakdown for an IRS state (or reflection vector) and precoder."""
    v = getattr(irs, "v", irs)
    return snr_from_v(channels, v, P, config.sigma_c_sq, config.sigma_r_sq, config.beta)
