"""Dense square-matrix kernels: exponential, log-determinant and inverse-transpose.

All routines work on float64 arrays and never modify their inputs.
"""

import warnings

import numpy as np
import scipy.linalg as sla

from .errors import NumericOverflowError, SingularMatrixError

PIVOT_TOL = 1e-12

# Degree-13 Pade coefficients and the 1-norm bound below which no scaling is
# needed (Higham 2005, Table 2.3).
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152
# Rows combine the power stack [I, A^2, A^4, A^6] into the four Pade blocks
# u_high, u_low, v_high, v_low with u = A (A^6 u_high + u_low), v = A^6 v_high + v_low.
_COEFS = np.array(
    [
        [0.0, _PADE13[9], _PADE13[11], _PADE13[13]],
        [_PADE13[1], _PADE13[3], _PADE13[5], _PADE13[7]],
        [0.0, _PADE13[8], _PADE13[10], _PADE13[12]],
        [_PADE13[0], _PADE13[2], _PADE13[4], _PADE13[6]],
    ]
)


def as_square(a, name="a"):
    """Validate ``a`` as a finite, non-empty square float64 matrix and return it."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def matrix_exp(a):
    """Matrix exponential by scaling and squaring with a degree-13 Pade approximant.

    Raises NumericOverflowError when the result is not representable.
    """
    return expm_unchecked(as_square(a))


def expm_unchecked(a):
    """:func:`matrix_exp` without input validation, for inner loops."""
    d = a.shape[0]
    norm1 = np.abs(a).sum(axis=0).max()
    if norm1 == 0:
        return np.eye(d)
    squarings = 0
    if norm1 > _THETA13:
        squarings = int(np.ceil(np.log2(norm1 / _THETA13)))
        a = a / 2.0**squarings

    ident = np.eye(d)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u_high, u_low, v_high, v_low = (_COEFS @ np.stack([ident, a2, a4, a6]).reshape(4, -1)).reshape(4, d, d)
    u = a @ (a6 @ u_high + u_low)
    v = a6 @ v_high + v_low

    with np.errstate(over="ignore", invalid="ignore"):
        r = np.linalg.solve(v - u, v + u)
        for _ in range(squarings):
            r = r @ r
    if not np.isfinite(r).all():
        raise NumericOverflowError("matrix exponential overflowed float64 range")
    return r


def _lu(a):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() < PIVOT_TOL:
        raise SingularMatrixError(f"matrix is singular (smallest pivot {pivots.min():.3e})")
    return lu, piv, pivots


def log_abs_det(a):
    """log|det(a)| from the pivots of a partial-pivoting LU factorization."""
    return log_abs_det_unchecked(as_square(a))


def log_abs_det_unchecked(a):
    _, _, pivots = _lu(a)
    return float(np.log(pivots).sum())


def inverse_transpose(a):
    """Return ``inv(a).T``, solved as ``a.T @ x = I`` from the LU factors of ``a``."""
    return inverse_transpose_unchecked(as_square(a))


def inverse_transpose_unchecked(a):
    lu, piv, _ = _lu(a)
    return sla.lu_solve((lu, piv), np.eye(a.shape[0]), trans=1, check_finite=False)
