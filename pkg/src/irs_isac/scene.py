"""Scenario construction: configuration, steering vectors, phase alphabet, CSI."""

import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from ._validation import ConfigError, DimensionError

CONTINUOUS = "continuous"
TWO_PI = 2.0 * np.pi


def dbm_to_mw(dbm):
    return 10.0 ** (dbm / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical and algorithmic parameters of one design run.

    Powers are given in dBm and converted to milliwatts by the ``*_mw``
    properties. ``M`` is the number of phase levels, or ``"continuous"`` for
    unquantized phases.
    """

    # geometry / dimensions
    N: int = 4
    L_x: int = 4
    L_y: int = 4
    K: int = 5
    mode: str = "active"
    # powers and noise
    P_T_dBm: float = 50.0
    P_IRS_dBm: float = 30.0
    sigma_c_sq_dBm: float = 0.0
    sigma_r_sq_dBm: float = 0.0
    # target
    alpha_T: complex = 1.0 + 0.0j
    theta_h: float = 45.0
    theta_v: float = 45.0
    r_t: float = 2500.0
    path_loss: float = 1.0
    # channel model
    rician_kappa: float = 10.0
    theta_h_inc: float | None = 20.0
    theta_v_inc: float | None = 50.0
    tx_aod: float = 0.0
    # quantization / relaxation
    M: int | str = 4
    nu1: float = 1.2
    nu2: float = 1e-9
    # solver
    beta: float = 0.5
    gamma: float = 1.0
    tau: float = 1.0
    tau_breve: float = 1.0
    tau_check: float = 1.0
    epsilon: float = 1e-3
    convergence_scale: str = "db"
    max_outer_iter: int = 1000
    inner_iters: int = 1
    update_scheme: str = "gauss_seidel"
    eig_tol: float = 1e-10
    eig_max_iter: int = 5000
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.M, str):
            m = self.M.strip().lower()
            if m in ("continuous", "inf", "infinity"):
                object.__setattr__(self, "M", CONTINUOUS)
            else:
                try:
                    object.__setattr__(self, "M", int(m))
                except ValueError:
                    raise ConfigError(f"M must be an integer >= 2 or 'continuous', got {self.M!r}")
        object.__setattr__(self, "alpha_T", complex(self.alpha_T))
        self.validate()

    def validate(self):
        for name in ("N", "L_x", "L_y", "K", "inner_iters", "eig_max_iter"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {value!r}")
        if not isinstance(self.max_outer_iter, (int, np.integer)) or self.max_outer_iter < 0:
            raise ConfigError(f"max_outer_iter must be an integer >= 0, got {self.max_outer_iter!r}")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError(f"beta must satisfy 0 <= beta <= 1, got {self.beta}")
        if self.M != CONTINUOUS and (isinstance(self.M, bool) or self.M < 2):
            raise ConfigError(f"M must be >= 2 when quantized, got {self.M}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.eig_tol > 0:
            raise ConfigError(f"eig_tol must be > 0, got {self.eig_tol}")
        if self.rician_kappa < 0:
            raise ConfigError(f"rician_kappa must be >= 0, got {self.rician_kappa}")
        if self.mode not in ("active", "passive"):
            raise ConfigError(f"mode must be 'active' or 'passive', got {self.mode!r}")
        if self.update_scheme not in ("gauss_seidel", "jacobi"):
            raise ConfigError(
                f"update_scheme must be 'gauss_seidel' or 'jacobi', got {self.update_scheme!r}"
            )
        if self.convergence_scale not in ("db", "linear"):
            raise ConfigError(
                f"convergence_scale must be 'db' or 'linear', got {self.convergence_scale!r}"
            )
        for name in ("nu1", "nu2", "gamma", "tau", "tau_breve", "tau_check", "path_loss"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("P_T_dBm", "P_IRS_dBm", "sigma_c_sq_dBm", "sigma_r_sq_dBm"):
            value = getattr(self, name)
            if not math.isfinite(value) or not dbm_to_mw(value) > 0:
                raise ConfigError(f"{name} must give a strictly positive linear power, got {value}")

    @property
    def L(self):
        return self.L_x * self.L_y

    @property
    def quantized(self):
        return self.M != CONTINUOUS

    @property
    def P_T(self):
        return dbm_to_mw(self.P_T_dBm)

    @property
    def P_IRS(self):
        return dbm_to_mw(self.P_IRS_dBm)

    @property
    def sigma_c_sq(self):
        return dbm_to_mw(self.sigma_c_sq_dBm)

    @property
    def sigma_r_sq(self):
        return dbm_to_mw(self.sigma_r_sq_dBm)

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        d = asdict(self)
        d["alpha_T"] = str(self.alpha_T)
        return d

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class PhaseSet:
    """The M-level phase alphabet {2 pi m / M : m = 0..M-1}."""

    M: int
    angles: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.M < 2:
            raise ConfigError(f"M must be >= 2, got {self.M}")
        object.__setattr__(self, "angles", TWO_PI * np.arange(self.M) / self.M)

    def __contains__(self, omega):
        return bool(np.any(self.angles == omega))

    def symbols(self):
        return np.exp(1j * self.angles)


@dataclass(frozen=True)
class ChannelSet:
    """Channel state: direct F (K x N), Tx-IRS G (L x N), IRS-user H (K x L).

    `a` is the IRS steering vector toward the target and `alpha_T` the
    complex radar cross-section (path-loss multiplier already applied).
    """

    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    a: np.ndarray
    alpha_T: complex

    def __post_init__(self):
        K, N = self.F.shape
        L = self.a.shape[0]
        if self.G.shape != (L, N):
            raise DimensionError(f"G must be {(L, N)}, got {self.G.shape}")
        if self.H.shape != (K, L):
            raise DimensionError(f"H must be {(K, L)}, got {self.H.shape}")

    @property
    def shape(self):
        """(N, L, K)."""
        return self.F.shape[1], self.a.shape[0], self.F.shape[0]


def _axis_response(n, phase_step):
    return np.exp(1j * phase_step * np.arange(n))


def steering_vector(theta_h, theta_v, L_x, L_y):
    """IRS planar-array steering vector a = a_x kron a_y at half-wavelength spacing.

    Angles are in degrees. Each axis advances the phase by
    ``pi * cos(theta_h) * sin(theta_v)`` per element.
    """
    if L_x < 1 or L_y < 1:
        raise DimensionError("L_x and L_y must be >= 1")
    step = np.pi * np.cos(np.deg2rad(theta_h)) * np.sin(np.deg2rad(theta_v))
    return np.kron(_axis_response(L_x, step), _axis_response(L_y, step))


def ula_response(n, angle_deg):
    """Half-wavelength uniform linear array response."""
    return _axis_response(n, np.pi * np.sin(np.deg2rad(angle_deg)))


def rician_channel(rows, cols, kappa, los, rng):
    """Rician fading matrix sqrt(k/(1+k)) * los + sqrt(1/(1+k)) * W.

    W has i.i.d. unit-variance circularly-symmetric complex Gaussian entries
    drawn from `rng`.
    """
    if kappa < 0:
        raise ConfigError(f"rician_kappa must be >= 0, got {kappa}")
    los = np.asarray(los, dtype=np.complex128)
    if los.shape != (rows, cols):
        raise DimensionError(f"los must be {(rows, cols)}, got {los.shape}")
    W = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)
    return np.sqrt(kappa / (1.0 + kappa)) * los + np.sqrt(1.0 / (1.0 + kappa)) * W


def round_half_up(x):
    """Nearest integer; ties go to the larger integer."""
    return np.floor(np.asarray(x, dtype=float) + 0.5)


def quantize_index(omega, M):
    """Index m in 0..M-1 of the alphabet angle nearest to `omega`."""
    return np.mod(round_half_up(M * np.asarray(omega, dtype=float) / TWO_PI), M).astype(np.int64)


def quantize_phase(omega, M):
    """Nearest angle of the M-level alphabet, reduced into [0, 2 pi)."""
    if M == CONTINUOUS:
        return np.mod(omega, TWO_PI)
    if M < 2:
        raise ConfigError(f"M must be >= 2, got {M}")
    angles = TWO_PI * np.arange(M) / M
    out = angles[quantize_index(omega, M)]
    return float(out) if np.ndim(out) == 0 else out


def quantize_unimodular(u, M):
    """Hard-project complex entries onto the M-ary unimodular alphabet."""
    return np.exp(1j * quantize_phase(np.angle(u), M))


def channel_rng(seed):
    return np.random.default_rng([seed, 0])


def init_rng(seed):
    return np.random.default_rng([seed, 1])


def build_scenario(config):
    """Draw a ChannelSet from `config`; deterministic in ``config.seed``.

    Channel draws use their own RNG stream so that runs differing only in
    solver settings (e.g. M) see identical channels.
    """
    N, L, K = config.N, config.L, config.K
    rng = channel_rng(config.seed)
    a = steering_vector(config.theta_h, config.theta_v, config.L_x, config.L_y)
    th_inc = config.theta_h if config.theta_h_inc is None else config.theta_h_inc
    tv_inc = config.theta_v if config.theta_v_inc is None else config.theta_v_inc
    g_los = np.outer(
        steering_vector(th_inc, tv_inc, config.L_x, config.L_y),
        ula_response(N, config.tx_aod).conj(),
    )
    kappa = config.rician_kappa
    F = rician_channel(K, N, kappa, np.ones((K, N)), rng)
    G = rician_channel(L, N, kappa, g_los, rng)
    H = rician_channel(K, L, kappa, np.ones((K, L)), rng)
    return ChannelSet(F=F, G=G, H=H, a=a, alpha_T=complex(config.alpha_T) * config.path_loss)
