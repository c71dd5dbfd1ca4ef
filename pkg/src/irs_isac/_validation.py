"""Input validation helpers shared by the numerical modules."""

import numpy as np


class DimensionError(ValueError):
    """Raised when operands have non-conformable shapes."""


class ConfigError(ValueError):
    """Raised when a scenario configuration violates an invariant."""


class NumericalError(RuntimeError):
    """Raised when an iteration produces non-finite values.

    Parameters
    ----------
    stage : str
        Name of the solver stage that produced the offending value.
    """

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def as_cmatrix(A, name="A"):
    """Return `A` as a 2-D complex128 array, rejecting empty or non-finite input."""
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={A.ndim}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"{name} must have positive dimensions, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def as_cvector(x, name="x", length=None):
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim == 2 and 1 in x.shape:
        x = x.ravel()
    if x.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {x.shape}")
    if length is not None and x.shape[0] != length:
        raise DimensionError(f"{name} must have length {length}, got {x.shape[0]}")
    return x


def check_square(A, name="A"):
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got {A.shape}")
    return A


def check_same_shape(A, B, names=("A", "B")):
    if A.shape != B.shape:
        raise DimensionError(
            f"{names[0]} {A.shape} and {names[1]} {B.shape} must have identical shapes"
        )


def check_hermitian(A, name="A", rtol=1e-10):
    """Assert that `A` is Hermitian to `rtol` relative to its largest entry."""
    check_square(A, name)
    scale = np.max(np.abs(A))
    if scale == 0.0:
        return A
    err = np.max(np.abs(A - A.conj().T))
    if err > rtol * scale:
        raise ValueError(
            f"{name} is not Hermitian: max |A - A^H| = {err:.3e} exceeds {rtol:g} * {scale:.3e}"
        )
    return A


def hermitian_part(A):
    """Symmetrize away round-off: (A + A^H) / 2."""
    return 0.5 * (A + A.conj().T)
