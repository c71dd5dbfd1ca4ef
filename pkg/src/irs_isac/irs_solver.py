"""IRS amplitude (b) and phase (u) updates.

Each subproblem is quartic in its variable. It is split into two tracks
(``b1, b2`` and ``u1, u2``) that are updated alternately: one track is held
fixed inside the quartic term, the other is optimized by a single
power-iteration step on a diagonally loaded (hence PSD) augmented matrix,
and a penalty ``tau * ||xbar_i - xbar_j||^2`` pulls the two tracks together.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_hermitian, hermitian_part
from .matcore import LoadingBounds
from .scene import CONTINUOUS, TWO_PI, quantize_unimodular, round_half_up


@dataclass
class LoadedQuadratic:
    """Hermitian PSD matrix of an augmented power-iteration step.

    `loading_values` keeps the eigenvalue bounds used to build it, in the
    order (inner bound, outer bound).
    """

    matrix: np.ndarray
    loading_values: tuple = ()


@dataclass
class IrsState:
    """Paired gain and phase tracks of the IRS.

    In quantized mode the phase tracks carry the relaxed MaRLI iterates,
    which need not be unimodular; :attr:`u` is always the feasible
    (hard-quantized) phase vector.
    """

    b1: np.ndarray
    b2: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    mode: str = "active"
    M: object = CONTINUOUS
    iteration: int = 0
    degenerate_events: int = field(default=0)

    @property
    def L(self):
        return self.b1.shape[0]

    @property
    def b(self):
        return self.b1

    @property
    def u(self):
        return self.feasible_phases(1)

    def feasible_phases(self, j):
        """Phase track `j` projected onto the feasible set (unit modulus, on the alphabet)."""
        u_j = self.track("u", j)
        if self.M == CONTINUOUS:
            return np.exp(1j * np.angle(u_j))
        return quantize_unimodular(u_j, self.M)

    @property
    def v(self):
        return self.b * self.u

    def copy(self):
        return IrsState(
            self.b1.copy(), self.b2.copy(), self.u1.copy(), self.u2.copy(),
            self.mode, self.M, self.iteration, self.degenerate_events,
        )

    def track(self, name, j):
        return getattr(self, f"{name}{j}")

    def set_track(self, name, j, value):
        setattr(self, f"{name}{j}", value)


def init_irs_state(L, mode, M, P_IRS, rng):
    """Uniform gains meeting the power budget and random feasible phases."""
    if mode == "passive":
        b = np.ones(L)
    else:
        b = np.full(L, np.sqrt(P_IRS / L))
    phases = rng.uniform(0.0, TWO_PI, L)
    u = np.exp(1j * phases) if M == CONTINUOUS else quantize_unimodular(np.exp(1j * phases), M)
    return IrsState(b.copy(), b.copy(), u.copy(), u.copy(), mode=mode, M=M)


def _augment(x, n_ones):
    return np.concatenate([x.astype(np.complex128), np.ones(n_ones, dtype=np.complex128)])


def _loaded_block(inner, coupling, corner, bound_fn, key):
    """Assemble E = [[inner, -c], [-c^H, corner]] and return bound*I - E."""
    n = inner.shape[0]
    E = np.empty((n + 1, n + 1), dtype=np.complex128)
    E[:n, :n] = inner
    E[:n, n] = -coupling
    E[n, :n] = -coupling.conj()
    E[n, n] = corner
    E = hermitian_part(E)
    outer = bound_fn(E, key)
    return outer, outer * np.eye(n + 1) - E


def build_E_check(check_omega_1, b_bar_i, tau, P_IRS, bounds=None, key=None):
    """Loaded gain-step matrix.

    With ``lam1 = lambda_max(Om)`` and
    ``E = [[lam1 I - Om, -tau bbar_i], [-tau bbar_i^H, 2 tau P_IRS]]``, returns
    ``lam2 I - E = [[(lam2 - lam1) I + Om, tau bbar_i], [tau bbar_i^H, lam2 - 2 tau P_IRS]]``
    where ``lam2 = lambda_max(E)``.
    """
    Om = check_hermitian(np.asarray(check_omega_1, dtype=np.complex128), "check_omega_1")
    bounds = bounds or LoadingBounds()
    n = Om.shape[0]
    lam_prime = bounds(Om, None if key is None else (key, "inner"))
    inner = lam_prime * np.eye(n) - Om
    coupling = tau * np.asarray(b_bar_i, dtype=np.complex128)
    lam_check, E_check = _loaded_block(
        inner, coupling, 2.0 * tau * P_IRS, bounds, None if key is None else (key, "outer")
    )
    return LoadedQuadratic(E_check, (lam_prime, lam_check))


def build_K(check_omega_2, u_bar_i, tau_breve, L, bounds=None, key=None):
    """Loaded phase-step matrix.

    ``[[(lam2 - lam1) I + Om, tau u_i], [tau u_i^H, lam2 - 2 tau L]]`` with
    ``lam1 = lambda_max(Om)`` and ``lam2 = max(lam1, lambda_max(E))``, E being
    the unloaded block matrix; the second bound is what makes the result PSD.
    """
    Om = check_hermitian(np.asarray(check_omega_2, dtype=np.complex128), "check_omega_2")
    bounds = bounds or LoadingBounds()
    n = Om.shape[0]
    lam_u = bounds(Om, None if key is None else (key, "inner"))
    inner = lam_u * np.eye(n) - Om
    coupling = tau_breve * np.asarray(u_bar_i, dtype=np.complex128)
    lam_E, K = _loaded_block(
        inner, coupling, 2.0 * tau_breve * L, bounds, None if key is None else (key, "outer")
    )
    lam_breve = max(lam_u, lam_E)
    if lam_breve > lam_E:
        K = K + (lam_breve - lam_E) * np.eye(n + 1)
    return LoadedQuadratic(K, (lam_u, lam_breve))


def _as_matrix(Mx):
    return Mx.matrix if isinstance(Mx, LoadedQuadratic) else np.asarray(Mx)


def update_b(state, E_check, P_IRS, j):
    """One power step for gain track `j`; returns the new gains.

    Gains are real and nonnegative: the step keeps the moduli of the first L
    entries of ``E bbarbar_j`` (their phases are the phase update's job) and
    rescales them to ``||b||^2 = P_IRS``. Projecting onto the nonnegative
    reals instead would let an element with a misaligned phase lock at zero
    gain, where its phase no longer influences the objective.
    """
    b_j = state.track("b", j)
    L = b_j.shape[0]
    y = _as_matrix(E_check) @ _augment(b_j, 2)
    z = np.abs(y[:L])
    nrm = np.linalg.norm(z)
    if not nrm > 0 or not np.isfinite(nrm):
        state.degenerate_events += 1
        return b_j.copy()
    return np.sqrt(P_IRS) * z / nrm


def _phase_product(state, K, j):
    u_j = state.track("u", j)
    L = u_j.shape[0]
    return u_j, (_as_matrix(K) @ _augment(u_j, 2))[:L]


def relaxation_operator(u_tilde, M, nu1, nu2, t, fallback_phase=None):
    """Relaxed projection of `u_tilde` toward the M-ary unimodular alphabet.

    Magnitude ``|u|^exp(-nu1 t)``; phase
    ``(2 pi / M) ([x] + {x} exp(-nu2 t))`` with ``x = M arg(u) / 2 pi``, ``[x]``
    the nearest integer (ties upward) and ``{x} = x - [x]``. As ``t`` grows the
    output tends to an alphabet point of unit modulus. With ``M`` set to
    ``"continuous"`` the output is the unit-modulus phase of `u_tilde`.
    """
    u_tilde = np.asarray(u_tilde, dtype=np.complex128)
    zero = u_tilde == 0
    theta = np.angle(u_tilde)
    if fallback_phase is not None and np.any(zero):
        theta = np.where(zero, fallback_phase, theta)
    if M == CONTINUOUS:
        return np.exp(1j * theta)
    x = M * theta / TWO_PI
    nearest = round_half_up(x)
    frac = x - nearest
    # reducing [x] mod M changes the phase by a multiple of 2 pi only, and makes
    # the t -> inf limit land exactly on the alphabet angles 2 pi m / M
    phase = (TWO_PI / M) * (np.mod(nearest, M) + frac * np.exp(-nu2 * t))
    mag = np.abs(u_tilde) ** np.exp(-nu1 * t)
    if np.any(zero):
        mag = np.where(zero, 1.0, mag)
    return mag * np.exp(1j * phase)


def update_u_marli(state, K, M, nu1, nu2, t, j):
    """MaRLI step for phase track `j` at outer iteration `t`."""
    u_j, u_tilde = _phase_product(state, K, j)
    zero = u_tilde == 0
    if np.any(zero):
        state.degenerate_events += int(zero.sum())
    return relaxation_operator(u_tilde, M, nu1, nu2, t, fallback_phase=np.angle(u_j))


def update_u_continuous(state, K, j):
    """Unquantized step: unit-modulus phases of ``K ubarbar_j``."""
    u_j, u_tilde = _phase_product(state, K, j)
    zero = u_tilde == 0
    if np.any(zero):
        state.degenerate_events += int(zero.sum())
        u_tilde = np.where(zero, u_j, u_tilde)
    return np.exp(1j * np.angle(u_tilde))


def requantize(state):
    """Hard-quantize both phase tracks onto the alphabet (no-op when continuous)."""
    if state.M == CONTINUOUS:
        state.u1 = np.exp(1j * np.angle(state.u1))
        state.u2 = np.exp(1j * np.angle(state.u2))
    else:
        state.u1 = quantize_unimodular(state.u1, state.M)
        state.u2 = quantize_unimodular(state.u2, state.M)
    return state
