"""Cyclic joint design of IRS gains, IRS phases and DFBS precoder.

Each outer iteration performs the gain-track pair update (active mode
only), the phase-track pair update and the precoder-track pair update, in
that order, then evaluates the SNRs in trace form on the feasible design
(reported gain track, hard-quantized phases, reported precoder track).
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import NumericalError
from .irs_solver import (
    build_E_check,
    build_K,
    init_irs_state,
    requantize,
    update_b,
    update_u_continuous,
    update_u_marli,
)
from .matcore import LoadingBounds
from .metrics import (
    SnrBreakdown,
    build_check_omega,
    build_prop1_cache,
    build_Q_of_v,
    mask_quadratic,
    radar_matrix,
    snr_total,
    to_db,
)
from .precoder_solver import build_B, build_breve_omega, build_Z, init_precoder, update_p
from .scene import CONTINUOUS, ChannelSet, ScenarioConfig, build_scenario, init_rng

logger = logging.getLogger(__name__)

TRACE_COLUMNS = (
    "iter", "snr_r_db", "snr_c_db", "snr_t_db", "delta", "track_gap_b", "track_gap_u", "track_gap_p",
)

# ScenarioConfig fields that parameterize the design rather than the channels
DESIGN_PARAMS = (
    "mode", "P_T_dBm", "P_IRS_dBm", "sigma_c_sq_dBm", "sigma_r_sq_dBm", "M", "nu1", "nu2",
    "beta", "gamma", "tau", "tau_breve", "tau_check", "epsilon", "convergence_scale",
    "max_outer_iter", "inner_iters", "update_scheme", "eig_tol", "eig_max_iter",
)


@dataclass(frozen=True)
class IterationRecord:
    """One row of a convergence trace.

    `delta` is the change of SNR_T from the previous record, measured on the
    scale named by ``ScenarioConfig.convergence_scale`` (dB by default).
    `track_gap_u` compares the feasible projections of the two phase tracks;
    the relaxed iterates themselves are not unit-modulus.
    """

    iter: int
    snr_r_db: float
    snr_c_db: float
    snr_t_db: float
    delta: float
    track_gap_b: float
    track_gap_u: float
    track_gap_p: float
    snr_t: float = 0.0

    def row(self):
        return tuple(getattr(self, c) for c in TRACE_COLUMNS)


@dataclass
class RunResult:
    trace: list
    final_state: tuple
    converged: bool
    iterations_used: int
    config_echo: ScenarioConfig
    channels: ChannelSet = field(default=None, repr=False)
    elapsed_s: float = 0.0

    @property
    def final_snr_t(self):
        return self.trace[-1].snr_t

    @property
    def final_snr_t_db(self):
        return self.trace[-1].snr_t_db


def _gap(x1, x2):
    return float(np.linalg.norm(x1 - x2))


def _check_finite(stage, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalError(stage, "non-finite values produced")


class IrsIsacDesigner(BaseEstimator):
    """Joint active-IRS and precoder design maximizing beta SNR_r + (1 - beta) SNR_c.

    Follows the scikit-learn estimator conventions: hyperparameters are set
    in ``__init__`` and exposed through ``get_params``; :meth:`fit` takes a
    :class:`~irs_isac.scene.ChannelSet` and stores the design in attributes
    with a trailing underscore.

    Parameters mirror the design-side fields of
    :class:`~irs_isac.scene.ScenarioConfig`; `random_state` seeds the
    initial phases and precoder. `R_D` overrides the default desired
    covariance ``(P_T / N) I``.

    Attributes
    ----------
    irs_state_ : IrsState
    precoder_state_ : PrecoderState
    trace_ : list of IterationRecord
    converged_ : bool
    n_iter_ : int
    """

    def __init__(
        self, mode="active", P_T_dBm=50.0, P_IRS_dBm=30.0, sigma_c_sq_dBm=0.0,
        sigma_r_sq_dBm=0.0, M=4, nu1=1.2, nu2=1e-9, beta=0.5, gamma=1.0, tau=1.0,
        tau_breve=1.0, tau_check=1.0, epsilon=1e-3, convergence_scale="db",
        max_outer_iter=1000, inner_iters=1, update_scheme="gauss_seidel", eig_tol=1e-10,
        eig_max_iter=5000, R_D=None, random_state=0,
    ):
        self.mode = mode
        self.P_T_dBm = P_T_dBm
        self.P_IRS_dBm = P_IRS_dBm
        self.sigma_c_sq_dBm = sigma_c_sq_dBm
        self.sigma_r_sq_dBm = sigma_r_sq_dBm
        self.M = M
        self.nu1 = nu1
        self.nu2 = nu2
        self.beta = beta
        self.gamma = gamma
        self.tau = tau
        self.tau_breve = tau_breve
        self.tau_check = tau_check
        self.epsilon = epsilon
        self.convergence_scale = convergence_scale
        self.max_outer_iter = max_outer_iter
        self.inner_iters = inner_iters
        self.update_scheme = update_scheme
        self.eig_tol = eig_tol
        self.eig_max_iter = eig_max_iter
        self.R_D = R_D
        self.random_state = random_state

    @classmethod
    def from_config(cls, config, **overrides):
        params = {name: getattr(config, name) for name in DESIGN_PARAMS}
        params["random_state"] = config.seed
        params.update(overrides)
        return cls(**params)

    def _config(self, channels):
        N, L, K = channels.shape
        params = {name: getattr(self, name) for name in DESIGN_PARAMS}
        # geometry fields only matter for consistency checks here
        return ScenarioConfig(N=N, L_x=L, L_y=1, K=K, seed=int(self.random_state), **params)

    # ------------------------------------------------------------------ fit
    def fit(self, channels, y=None, callback=None):
        """Run the cyclic design on `channels` until convergence or the iteration cap.

        `callback`, if given, is called as ``callback(t, irs_state, precoder_state)``
        on the initial state (t = 0) and after every outer iteration, before
        the final requantization. It must not modify the states.
        """
        if not isinstance(channels, ChannelSet):
            raise TypeError(f"fit expects a ChannelSet, got {type(channels).__name__}")
        cfg = self._config(channels)
        self.config_ = cfg
        N, L, K = channels.shape
        rng = init_rng(cfg.seed)
        irs = init_irs_state(L, cfg.mode, cfg.M, cfg.P_IRS, rng)
        pre = init_precoder(N, K, cfg.P_T, rng, R_D=self.R_D, gamma=cfg.gamma, tau_check=cfg.tau_check)
        bounds = LoadingBounds(cfg.eig_tol, cfg.eig_max_iter, rng_seed=cfg.seed)

        trace = [self._record(0, channels, irs, pre, cfg, prev=None)]
        if callback is not None:
            callback(0, irs, pre)
        converged = False
        for t in range(cfg.max_outer_iter):
            self._outer_step(t, channels, irs, pre, cfg, bounds)
            irs.iteration = t + 1
            rec = self._record(t + 1, channels, irs, pre, cfg, prev=trace[-1])
            trace.append(rec)
            if callback is not None:
                callback(t + 1, irs, pre)
            if rec.delta <= cfg.epsilon:
                converged = True
                break

        requantize(irs)
        self.irs_state_ = irs
        self.precoder_state_ = pre
        self.trace_ = trace
        self.converged_ = converged
        self.n_iter_ = len(trace) - 1
        self.channels_ = channels
        return self

    def _outer_step(self, t, channels, irs, pre, cfg, bounds):
        N, L, K = channels.shape
        jacobi = cfg.update_scheme == "jacobi"
        cache = build_prop1_cache(channels, pre.P, cfg.sigma_c_sq)
        Omega, P = cache.Omega, pre.P
        pairs = ((1, 2), (2, 1))

        def check_omega(v):
            Q = build_Q_of_v(v, Omega, P, channels.alpha_T, cfg.sigma_r_sq)
            return build_check_omega(cfg.beta, Q, cache.Omega_tilde)

        if cfg.mode == "active":
            u_feas = irs.u
            u_bar = np.append(u_feas, 1.0)
            frozen = {1: irs.b1.copy(), 2: irs.b2.copy()}
            for j, i in pairs:
                for _ in range(cfg.inner_iters):
                    b_i = frozen[i] if jacobi else irs.track("b", i)
                    om1 = mask_quadratic(check_omega(b_i * u_feas), u_bar)
                    E = build_E_check(om1, np.append(b_i, 1.0), cfg.tau, cfg.P_IRS, bounds, ("b", j))
                    irs.set_track("b", j, update_b(irs, E, cfg.P_IRS, j))
            _check_finite("gain update", irs.b1, irs.b2)

        b = irs.b
        b_bar = np.append(b, 1.0)
        frozen = {1: irs.u1.copy(), 2: irs.u2.copy()}
        for j, i in pairs:
            for _ in range(cfg.inner_iters):
                u_i = frozen[i] if jacobi else irs.track("u", i)
                om2 = mask_quadratic(check_omega(b * u_i), b_bar)
                Kmat = build_K(om2, np.append(u_i, 1.0), cfg.tau_breve, L, bounds, ("u", j))
                if cfg.M == CONTINUOUS:
                    new = update_u_continuous(irs, Kmat, j)
                else:
                    new = update_u_marli(irs, Kmat, cfg.M, cfg.nu1, cfg.nu2, t, j)
                irs.set_track("u", j, new)
        _check_finite("phase update", irs.u1, irs.u2)

        v = irs.v
        Phi = np.diag(v)
        C = channels.F + channels.H @ Phi @ channels.G
        R = radar_matrix(channels.G, Phi, channels.a, channels.alpha_T)
        Z = build_Z(R, C, cfg.beta, cfg.sigma_r_sq, cfg.sigma_c_sq)
        Z_check = np.kron(np.eye(K), Z)
        lambda_m = bounds(Z_check, "Z")
        frozen = {1: pre.p1.copy(), 2: pre.p2.copy()}
        for j, i in pairs:
            for _ in range(cfg.inner_iters):
                p_i = frozen[i] if jacobi else pre.track(i)
                om = build_breve_omega(p_i, Z_check, cfg.gamma, pre.R_D, lambda_m=lambda_m)
                B = build_B(p_i, om, cfg.tau_check, cfg.P_T, bounds, ("p", j))
                pre.set_track(j, update_p(pre, B, cfg.P_T, j))
        _check_finite("precoder update", pre.p1, pre.p2)

    @staticmethod
    def _record(it, channels, irs, pre, cfg, prev):
        snr = snr_total(channels, irs, pre.P, cfg)
        if not all(np.isfinite([snr.snr_r, snr.snr_c, snr.snr_t])):
            raise NumericalError("SNR evaluation", f"non-finite SNR at iteration {it}: {snr}")
        r_db, c_db, t_db = snr.as_db()
        if prev is None:
            delta = float("inf")
        elif cfg.convergence_scale == "db":
            delta = abs(t_db - prev.snr_t_db)
        else:
            delta = abs(snr.snr_t - prev.snr_t)
        return IterationRecord(
            iter=it, snr_r_db=r_db, snr_c_db=c_db, snr_t_db=t_db, delta=delta,
            track_gap_b=_gap(irs.b1, irs.b2), track_gap_u=_gap(irs.feasible_phases(1), irs.feasible_phases(2)),
            track_gap_p=_gap(pre.p1, pre.p2), snr_t=snr.snr_t,
        )

    # ------------------------------------------------------------ inference
    def score(self, channels=None, y=None):
        """SNR_T (linear) of the fitted design on `channels` (default: the fit channels)."""
        return self.evaluate(channels).snr_t

    def evaluate(self, channels=None):
        check_is_fitted(self, "irs_state_")
        channels = self.channels_ if channels is None else channels
        return snr_total(channels, self.irs_state_, self.precoder_state_.P, self.config_)

    @property
    def P_(self):
        check_is_fitted(self, "precoder_state_")
        return self.precoder_state_.P

    @property
    def v_(self):
        check_is_fitted(self, "irs_state_")
        return self.irs_state_.v


def run(config, callback=None):
    """Build the scenario for `config` and run the full design.

    `callback` is forwarded to :meth:`IrsIsacDesigner.fit`.
    """
    start = time.perf_counter()
    channels = build_scenario(config)
    designer = IrsIsacDesigner.from_config(config).fit(channels, callback=callback)
    result = RunResult(
        trace=designer.trace_,
        final_state=(designer.irs_state_, designer.precoder_state_),
        converged=designer.converged_,
        iterations_used=designer.n_iter_,
        config_echo=config,
        channels=channels,
        elapsed_s=time.perf_counter() - start,
    )
    logger.info(
        "seed=%s M=%s converged=%s iters=%d SNR_T=%.4f dB (%.2fs)",
        config.seed, config.M, result.converged, result.iterations_used,
        result.final_snr_t_db, result.elapsed_s,
    )
    return result


def evaluate_only(config, irs, P, channels=None):
    """Trace-form SNRs of an externally supplied IRS state (or reflection vector) and precoder."""
    channels = build_scenario(config) if channels is None else channels
    return snr_total(channels, irs, P, config)


@dataclass(frozen=True)
class SweepRow:
    """Distribution of final SNR_T (dB) over seeds for one phase resolution."""

    M: object
    n_runs: int
    n_converged: int
    median_db: float
    q1_db: float
    q3_db: float
    min_db: float
    max_db: float


@dataclass
class SweepSummary:
    rows: list
    results: dict = field(repr=False)  # (M, seed) -> RunResult

    def row_for(self, M):
        for row in self.rows:
            if row.M == M:
                return row
        raise KeyError(M)

    @property
    def medians(self):
        return [row.median_db for row in self.rows]


SWEEP_COLUMNS = ("M", "n_runs", "n_converged", "median_db", "q1_db", "q3_db", "min_db", "max_db")


def _run_quiet(config):
    result = run(config)
    result.channels = None  # keep sweep results light when sent between processes
    return result


def sweep_quantization(config, M_values, seeds, n_jobs=1):
    """Run the design for every (M, seed) pair and summarize final SNR_T per M.

    Runs for the same seed share channels regardless of M, since channel
    draws depend on the seed only. Runs are independent and are dispatched
    with joblib when ``n_jobs != 1``; results are merged in (M, seed) order.

    Returns
    -------
    SweepSummary
        One row per M, in the order of `M_values`, with the median and
        quartiles of the final SNR_T in dB.
    """
    M_values = list(M_values)
    seeds = [int(s) for s in seeds]
    if not M_values:
        raise ValueError("M_values must not be empty")
    if not seeds:
        raise ValueError("seeds must not be empty")
    configs = [config.replace(M=M, seed=s) for M in M_values for s in seeds]
    # normalized M (e.g. "inf" -> continuous) is the key of the summary
    keys = [(c.M, c.seed) for c in configs]

    if n_jobs == 1:
        outputs = [_run_quiet(c) for c in configs]
    else:
        from joblib import Parallel, delayed

        outputs = Parallel(n_jobs=n_jobs)(delayed(_run_quiet)(c) for c in configs)
    results = dict(zip(keys, outputs))

    rows = []
    for M in dict.fromkeys(k[0] for k in keys):
        finals = np.array([results[(M, s)].final_snr_t_db for s in seeds])
        q1, med, q3 = np.percentile(finals, [25, 50, 75])
        rows.append(SweepRow(
            M=M, n_runs=len(seeds),
            n_converged=sum(results[(M, s)].converged for s in seeds),
            median_db=float(med), q1_db=float(q1), q3_db=float(q3),
            min_db=float(finals.min()), max_db=float(finals.max()),
        ))
    return SweepSummary(rows, results)
