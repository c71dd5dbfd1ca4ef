"""Dense complex linear-algebra kernels.

All kernels are pure functions of their inputs. Vectors are returned as
1-D ``complex128`` arrays; matrices as 2-D arrays. Vectorization is
column-major throughout, which is what makes
``vec(C @ P) == kron(P.T, I) @ vec(C)`` hold.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import (
    DimensionError,
    as_cmatrix,
    as_cvector,
    check_hermitian,
    check_same_shape,
    check_square,
)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 5000
LOADING_MARGIN = 1e-6


@dataclass(frozen=True)
class EigenPair:
    """Dominant eigenpair returned by :func:`dominant_eigenpair`.

    Attributes
    ----------
    value : float
        Rayleigh quotient of `vector`; the largest-magnitude eigenvalue.
    vector : ndarray
        Unit 2-norm eigenvector estimate.
    degenerate : bool
        True when the input was the zero matrix.
    n_iter : int
        Power-iteration steps taken.
    converged : bool
        Whether the iterate change fell below the tolerance.
    """

    value: float
    vector: np.ndarray
    degenerate: bool = False
    n_iter: int = 0
    converged: bool = True


def kron(A, B):
    A = as_cmatrix(A, "A")
    B = as_cmatrix(B, "B")
    return np.kron(A, B)


def hadamard(A, B):
    A = np.asarray(A, dtype=np.complex128)
    B = np.asarray(B, dtype=np.complex128)
    check_same_shape(A, B)
    return A * B


def vectorize(A):
    """Stack the columns of `A` into one vector."""
    A = as_cmatrix(A, "A")
    return A.reshape(-1, order="F")


def selection_matrix(L):
    """Return the L^2 x L matrix T with ``T @ v == vectorize(diag(v))``."""
    if L < 1:
        raise DimensionError(f"L must be >= 1, got {L}")
    T = np.zeros((L * L, L), dtype=np.complex128)
    T[np.arange(L) * (L + 1), np.arange(L)] = 1.0
    return T


def frobenius_norm(A):
    return float(np.linalg.norm(np.asarray(A)))


def two_norm(x):
    x = as_cvector(x)
    return float(np.sqrt(np.vdot(x, x).real))


def trace(A):
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2:
        raise DimensionError("trace requires a matrix")
    check_square(A)
    return complex(np.trace(A))


def conj_transpose(A):
    return np.asarray(A).conj().T


def _unit_start(n, rng_seed):
    rng = np.random.default_rng(rng_seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return x / np.sqrt(np.vdot(x, x).real)


def dominant_eigenpair(H, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, rng_seed=0, x0=None):
    """Largest-magnitude eigenpair of a Hermitian matrix by power iteration.

    Iterates ``x <- H x / ||H x||`` until the phase-aligned change between
    successive iterates is at most `tol`, or `max_iter` steps are taken.

    Parameters
    ----------
    H : array_like, shape (n, n)
        Hermitian matrix.
    tol : float
        Stopping tolerance on the iterate change.
    max_iter : int
        Iteration cap.
    rng_seed : int
        Seed of the random start vector.
    x0 : array_like, optional
        Warm-start vector; replaces the seeded start when given and nonzero.

    Returns
    -------
    EigenPair
    """
    H = as_cmatrix(H, "H")
    check_hermitian(H, "H")
    n = H.shape[0]

    if x0 is not None:
        x = as_cvector(x0, "x0", n).copy()
        nrm = np.sqrt(np.vdot(x, x).real)
        x = x / nrm if nrm > 0 else _unit_start(n, rng_seed)
    else:
        x = _unit_start(n, rng_seed)

    if not np.any(H):
        return EigenPair(0.0, _unit_start(n, rng_seed), degenerate=True, n_iter=0)

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        y = H @ x
        nrm = np.sqrt(np.vdot(y, y).real)
        if nrm == 0.0:
            # start orthogonal to the range; restart from the seeded vector
            x = _unit_start(n, rng_seed + it)
            continue
        y /= nrm
        c = np.vdot(y, x)
        if abs(c) > 0:
            y *= c / abs(c)
        diff = y - x
        x = y
        if np.sqrt(np.vdot(diff, diff).real) <= tol:
            converged = True
            break

    value = float(np.vdot(x, H @ x).real)
    return EigenPair(value, x, degenerate=False, n_iter=it, converged=converged)


def loading_bound(H, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, rng_seed=0, x0=None,
                  margin=LOADING_MARGIN, return_pair=False):
    """Upper bound on the algebraically largest eigenvalue of Hermitian `H`.

    The dominant (largest-magnitude) eigenvalue is the algebraic maximum when
    it is nonnegative. Otherwise the power iteration is rerun on the shifted
    matrix ``H - lam I``, which is positive semidefinite. The result is
    inflated by ``margin`` times the spectral radius so that ``bound * I - H``
    stays PSD under round-off.
    """
    pair = dominant_eigenpair(H, tol, max_iter, rng_seed, x0)
    lam = pair.value
    radius = abs(lam)
    if lam < 0:
        H = np.asarray(H, dtype=np.complex128)
        shifted = H - lam * np.eye(H.shape[0])
        pair = dominant_eigenpair(shifted, tol, max_iter, rng_seed, pair.vector)
        lam = pair.value + lam
    bound = lam + margin * radius
    if return_pair:
        return bound, pair
    return bound


class LoadingBounds:
    """Computes loading bounds, warm-starting each named slot from its last eigenvector.

    The solvers rebuild the same family of matrices every outer iteration;
    consecutive matrices are close, so the previous dominant eigenvector is
    a good start. Results are deterministic given the sequence of calls.
    """

    def __init__(self, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, rng_seed=0):
        self.tol = tol
        self.max_iter = max_iter
        self.rng_seed = rng_seed
        self._vectors = {}

    def __call__(self, H, key=None):
        x0 = self._vectors.get(key) if key is not None else None
        if x0 is not None and x0.shape[0] != H.shape[0]:
            x0 = None
        bound, pair = loading_bound(H, self.tol, self.max_iter, self.rng_seed, x0, return_pair=True)
        if key is not None:
            self._vectors[key] = pair.vector
        return bound
