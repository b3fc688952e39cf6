"""Dense complex matrix kernels.

Everything downstream works on plain ``numpy`` complex arrays; this module
validates them, evaluates the l1/l2/linf induced operator norms and supplies
the factorizations and matrix functions the rest of the package consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class MatrixError(ValueError):
    """Raised when an input is not a usable finite 2-D matrix."""


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a matrix is numerically singular for the requested op."""


class ConvergenceError(np.linalg.LinAlgError):
    pass


NORM_KINDS = ("l1", "l2", "linf")


@dataclass(frozen=True)
class Tolerance:
    """Numerical cutoffs used throughout the package.

    Parameters
    ----------
    rank_rel : float
        Singular values at or below ``rank_rel * s[0]`` count as zero.
    residual_rel : float
        Relative residual allowed when an identity is declared to hold.
    herm_abs : float
        Largest admissible ``| ||exp(ita)|| - 1 |`` for the sampled
        hermitian test.
    """

    rank_rel: float = 1e-10
    residual_rel: float = 1e-9
    herm_abs: float = 1e-7

    def __post_init__(self):
        for name in ("rank_rel", "residual_rel", "herm_abs"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if self.rank_rel >= 1:
            raise ValueError("rank_rel must be < 1")


DEFAULT_TOL = Tolerance()


class SvdResult(NamedTuple):
    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray


def as_cmatrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D complex128 array (copying if needed)."""
    arr = np.asarray(a)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise MatrixError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise MatrixError(f"{name} must have at least one row and one column")
    arr = arr.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(arr)):
        raise MatrixError(f"{name} has non-finite entries")
    return arr


def require_square(a: np.ndarray, name: str = "matrix") -> None:
    if a.shape[0] != a.shape[1]:
        raise MatrixError(f"{name} must be square, got shape {a.shape}")


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.complex128)


def _norm_kind(ctx) -> str:
    kind = getattr(ctx, "kind", ctx)
    if kind is None:
        return "l2"
    if kind not in NORM_KINDS:
        raise ValueError(f"unknown norm kind {kind!r}; expected one of {NORM_KINDS}")
    return kind


def op_norm(a, ctx=None) -> float:
    """Induced operator norm of ``a``.

    ``ctx`` is a :class:`wep.hermitian.NormContext` or one of the strings
    ``"l1"``, ``"l2"``, ``"linf"`` (default ``"l2"``).
    """
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    kind = _norm_kind(ctx)
    if kind == "l1":
        return float(np.abs(a).sum(axis=0).max())
    if kind == "linf":
        return float(np.abs(a).sum(axis=1).max())
    return float(np.linalg.norm(a, 2))


# Pade coefficients and theta thresholds for scaling and squaring (Higham 2005).
_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}
_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1,
          7: 9.504178996162932e-1, 9: 2.097847961257068e0,
          13: 5.371920351148152e0}
_MAX_SQUARINGS = 1024


def _pade_uv(a: np.ndarray, m: int):
    b = _PADE[m]
    n = a.shape[0]
    ident = np.eye(n, dtype=a.dtype)
    a2 = a @ a
    if m == 13:
        a4 = a2 @ a2
        a6 = a4 @ a2
        u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
                 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
        v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
             + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
        return u, v
    powers = [ident, a2]
    for _ in range(2, m // 2 + 1):
        powers.append(powers[-1] @ a2)
    u = sum(b[2 * k + 1] * powers[k] for k in range(m // 2 + 1))
    u = a @ u
    v = sum(b[2 * k] * powers[k] for k in range(m // 2 + 1))
    return u, v


def mat_exp(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a diagonal Pade approximant.

    Raises
    ------
    OverflowError
        If the scaling needed exceeds the supported range or the result is
        not representable in double precision.
    """
    a = as_cmatrix(a)
    require_square(a)
    norm1 = op_norm(a, "l1")
    if norm1 == 0.0:
        return identity(a.shape[0])
    for m in (3, 5, 7, 9):
        if norm1 <= _THETA[m]:
            u, v = _pade_uv(a, m)
            return np.linalg.solve(v - u, v + u)
    s = max(0, int(math.ceil(math.log2(norm1 / _THETA[13]))))
    if s > _MAX_SQUARINGS:
        raise OverflowError(f"matrix exponential: norm {norm1:.3e} beyond scaling capacity")
    scaled = a / (2.0 ** s)
    u, v = _pade_uv(scaled, 13)
    r = np.linalg.solve(v - u, v + u)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            r = r @ r
    if not np.all(np.isfinite(r)):
        raise OverflowError("matrix exponential overflowed double precision")
    return r


def svd(a) -> SvdResult:
    """Full SVD ``a = u @ diag(s) @ vt`` with ``s`` descending."""
    a = as_cmatrix(a)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"SVD did not converge: {exc}") from exc
    return SvdResult(u, s, vt)


def rank(a, tol: Tolerance = DEFAULT_TOL) -> int:
    a = np.asarray(a)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol.rank_rel * s[0]))


def range_basis(a, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the column space of ``a``."""
    a = np.asarray(a, dtype=np.complex128)
    if a.size == 0:
        return np.zeros((a.shape[0], 0), dtype=np.complex128)
    u, s, _ = np.linalg.svd(a, full_matrices=True)
    r = 0 if s[0] == 0.0 else int(np.count_nonzero(s > tol.rank_rel * s[0]))
    return u[:, :r]


def null_basis(a, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the null space of ``a``."""
    a = np.asarray(a, dtype=np.complex128)
    n = a.shape[1]
    if a.size == 0:
        return identity(n)
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    r = 0 if s[0] == 0.0 else int(np.count_nonzero(s > tol.rank_rel * s[0]))
    return vt[r:].conj().T


def same_column_space(x, y, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Whether ``x`` and ``y`` span the same column space (rank test)."""
    rx, ry = rank(x, tol), rank(y, tol)
    if rx != ry:
        return False
    return rank(np.hstack([x, y]), tol) == rx


def subspace_gap(x, y, tol: Tolerance = DEFAULT_TOL) -> float:
    """Sine of the largest principal angle between two column spaces.

    Returns 1.0 when the dimensions differ.
    """
    qx, qy = range_basis(x, tol), range_basis(y, tol)
    if qx.shape[1] != qy.shape[1]:
        return 1.0
    if qx.shape[1] == 0:
        return 0.0
    # ||(I - Qx Qx*) Qy||_2
    return float(np.linalg.norm(qy - qx @ (qx.conj().T @ qy), 2))


def _check_nonsingular(a: np.ndarray, tol: Tolerance, what: str) -> None:
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= tol.rank_rel * s[0]:
        raise SingularMatrixError(f"{what}: matrix is numerically singular")


def inverse(a, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    a = as_cmatrix(a)
    require_square(a)
    _check_nonsingular(a, tol, "inverse")
    return np.linalg.inv(a)


def solve(a, b, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Solve ``a @ x = b`` for square nonsingular ``a``."""
    a = as_cmatrix(a)
    require_square(a)
    b = np.asarray(b, dtype=np.complex128)
    _check_nonsingular(a, tol, "solve")
    return np.linalg.solve(a, b)


def eigenvalues(a) -> np.ndarray:
    """Eigenvalues of a square matrix, unordered."""
    a = as_cmatrix(a)
    require_square(a)
    return np.linalg.eigvals(a)


def principal_sqrt(a, ctx=None, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Principal square root of a positive element.

    Positivity is checked in the given norm context first; a
    :class:`wep.hermitian.NotPositiveError` names the criterion that failed.
    For l2 the root comes from a hermitian eigendecomposition with the
    nonnegative branch; for l1/linf positive elements are diagonalizable with
    nonnegative spectrum and the root is built from the eigenbasis.
    """
    from wep.hermitian import NormContext, check_positive

    a = as_cmatrix(a)
    require_square(a)
    ctx = NormContext.coerce(ctx)
    check_positive(a, ctx, tol)
    if ctx.kind == "l2":
        h = (a + a.conj().T) / 2
        w, v = np.linalg.eigh(h)
        d = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
        d = (d + d.conj().T) / 2
    else:
        w, v = np.linalg.eig(a)
        root = np.sqrt(np.clip(w.real, 0.0, None)).astype(np.complex128)
        d = (v * root) @ np.linalg.inv(v)
    scale = 1.0 + op_norm(a, "l2")
    if op_norm(d @ d - a, "l2") > tol.residual_rel * scale:
        raise ConvergenceError("principal square root failed its squaring check")
    return d
