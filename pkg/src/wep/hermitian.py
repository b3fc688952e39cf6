"""Hermitian and positive elements of matrix algebras under l1, l2, linf norms.

An element ``a`` is hermitian when ``||exp(ita)|| = 1`` for every real ``t``.
Under the l2 operator norm that is the same as ``a == a*``; under l1 and
linf no closed form is used and the exponential is sampled on a grid of
``t`` values.  Weighted algebras ``A^u`` carry the norm
``||x||_u = ||u^{1/2} x u^{-1/2}||``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from wep.matcore import (
    DEFAULT_TOL,
    NORM_KINDS,
    Tolerance,
    as_cmatrix,
    eigenvalues,
    identity,
    mat_exp,
    op_norm,
    require_square,
)

DEFAULT_T_GRID = (-5.0, -2.0, -1.0, -0.5, -0.1, 0.1, 0.5, 1.0, 2.0, 5.0)


class NotPositiveError(ValueError):
    """Raised when a matrix offered as a weight is not positive and invertible.

    ``criterion`` is one of ``"hermitian"``, ``"spectrum"``, ``"invertible"``.
    """

    def __init__(self, criterion: str, detail: str):
        self.criterion = criterion
        super().__init__(f"not positive ({criterion}): {detail}")


@dataclass(frozen=True)
class NormContext:
    kind: str = "l2"
    t_grid: tuple = DEFAULT_T_GRID

    def __post_init__(self):
        if self.kind not in NORM_KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}")
        grid = tuple(float(t) for t in self.t_grid)
        object.__setattr__(self, "t_grid", grid)
        if not grid:
            raise ValueError("t_grid must be nonempty")
        if not (any(t > 0 for t in grid) and any(t < 0 for t in grid)):
            raise ValueError("t_grid must contain both positive and negative points")
        if not any(abs(t) >= 1 for t in grid):
            raise ValueError("t_grid must contain a point with |t| >= 1")

    @classmethod
    def coerce(cls, ctx) -> "NormContext":
        if ctx is None:
            return L2
        if isinstance(ctx, cls):
            return ctx
        return cls(kind=ctx)


L2 = NormContext("l2")


class HermitianCheck(NamedTuple):
    hermitian: bool
    # max over the t grid of | ||exp(ita)|| - 1 |; None when not sampled
    deviation: Optional[float]
    # l2 only: ||a - a*|| / (1 + ||a||)
    exact_residual: Optional[float]


def exp_deviation(a: np.ndarray, ctx: NormContext) -> float:
    """Largest ``| ||exp(ita)|| - 1 |`` over ``ctx.t_grid``."""
    worst = 0.0
    for t in ctx.t_grid:
        try:
            nrm = op_norm(mat_exp(1j * t * a), ctx)
        except OverflowError:
            return math.inf
        worst = max(worst, abs(nrm - 1.0))
    return worst


def is_hermitian(a, ctx=None, tol: Tolerance = DEFAULT_TOL, sample: Optional[bool] = None) -> HermitianCheck:
    """Decide whether ``a`` is hermitian in the algebra normed by ``ctx``.

    For l2 the verdict is the exact test ``a == a*`` within
    ``tol.residual_rel``; the exponential is still sampled (unless
    ``sample=False``) so the deviation can be reported.  For l1/linf the
    sampled test is the decision procedure; it is sound to tolerance but can
    be optimistic between grid points.
    """
    a = as_cmatrix(a)
    require_square(a)
    ctx = NormContext.coerce(ctx)
    if ctx.kind == "l2":
        exact = op_norm(a - a.conj().T) / (1.0 + op_norm(a))
        dev = exp_deviation(a, ctx) if sample is not False else None
        return HermitianCheck(exact <= tol.residual_rel, dev, exact)
    dev = exp_deviation(a, ctx)
    return HermitianCheck(dev <= tol.herm_abs, dev, None)


def check_positive(a, ctx=None, tol: Tolerance = DEFAULT_TOL) -> None:
    """Raise :class:`NotPositiveError` unless ``a`` is hermitian with spectrum in R+."""
    a = as_cmatrix(a)
    require_square(a)
    ctx = NormContext.coerce(ctx)
    herm = is_hermitian(a, ctx, tol, sample=False)
    if not herm.hermitian:
        res = herm.exact_residual if herm.exact_residual is not None else herm.deviation
        raise NotPositiveError("hermitian", f"deviation {res:.3e} in {ctx.kind}")
    slack = tol.residual_rel * (1.0 + op_norm(a))
    lam = eigenvalues(a)
    if np.any(np.abs(lam.imag) > slack) or np.any(lam.real < -slack):
        raise NotPositiveError("spectrum", f"min eigenvalue {lam.real.min():.3e} not in R+")


def is_positive(a, ctx=None, tol: Tolerance = DEFAULT_TOL) -> bool:
    try:
        check_positive(a, ctx, tol)
    except NotPositiveError:
        return False
    return True


@dataclass(frozen=True, eq=False)
class Weight:
    """Positive invertible weight with cached ``u^{1/2}`` and ``u^{-1/2}``.

    Build one with :meth:`from_matrix`; the constructor does not validate.
    """

    u: np.ndarray
    u_half: np.ndarray
    u_half_inv: np.ndarray
    ctx: NormContext = field(default=L2)

    @classmethod
    def from_matrix(cls, u, ctx=None, tol: Tolerance = DEFAULT_TOL) -> "Weight":
        from wep.matcore import principal_sqrt

        u = as_cmatrix(u, "weight")
        require_square(u, "weight")
        ctx = NormContext.coerce(ctx)
        check_positive(u, ctx, tol)
        s = np.linalg.svd(u, compute_uv=False)
        if s[-1] <= tol.rank_rel * s[0]:
            raise NotPositiveError("invertible", f"smallest singular value {s[-1]:.3e}")
        half = principal_sqrt(u, ctx, tol)
        half_inv = np.linalg.inv(half)
        if ctx.kind == "l2":
            half_inv = (half_inv + half_inv.conj().T) / 2
        return cls(u.copy(), half, half_inv, ctx)

    @classmethod
    def identity(cls, n: int, ctx=None) -> "Weight":
        eye = identity(n)
        return cls(eye, eye.copy(), eye.copy(), NormContext.coerce(ctx))

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def u_inv(self) -> np.ndarray:
        return self.u_half_inv @ self.u_half_inv

    def transform(self, x: np.ndarray) -> np.ndarray:
        """``u^{1/2} x u^{-1/2}``."""
        return self.u_half @ x @ self.u_half_inv

    def with_ctx(self, ctx) -> "Weight":
        return Weight(self.u, self.u_half, self.u_half_inv, NormContext.coerce(ctx))


def weighted_norm(x, w: Weight, ctx=None) -> float:
    ctx = w.ctx if ctx is None else NormContext.coerce(ctx)
    return op_norm(w.transform(np.asarray(x, dtype=np.complex128)), ctx)


class WeightedHermitianCheck(NamedTuple):
    hermitian: bool
    deviation: float
    # l2 only: ||u^{-1} x* u - x|| / (1 + ||x||)
    congruence_residual: Optional[float]
    routes_agree: bool


def is_hermitian_weighted(x, w: Weight, ctx=None, tol: Tolerance = DEFAULT_TOL,
                          sample: bool = False) -> WeightedHermitianCheck:
    """Hermitianness of ``x`` in the weighted algebra ``A^u``.

    The verdict is ``is_hermitian(u^{1/2} x u^{-1/2})``.  Under l2 the
    congruence ``u^{-1} x* u == x`` is evaluated as a second route and
    ``routes_agree`` records whether both reach the same verdict.
    ``deviation`` is the exact residual under l2 (or the sampled deviation
    when ``sample`` is set) and the sampled deviation otherwise.
    """
    x = as_cmatrix(x)
    require_square(x)
    ctx = w.ctx if ctx is None else NormContext.coerce(ctx)
    if x.shape != w.u.shape:
        raise ValueError(f"shape mismatch: element {x.shape}, weight {w.u.shape}")
    check = is_hermitian(w.transform(x), ctx, tol, sample=sample)
    if ctx.kind != "l2":
        return WeightedHermitianCheck(check.hermitian, check.deviation, None, True)
    cong = op_norm(w.u_inv @ x.conj().T @ w.u - x) / (1.0 + op_norm(x))
    dev = check.deviation if sample else check.exact_residual
    return WeightedHermitianCheck(check.hermitian, dev, cong,
                                  check.hermitian == (cong <= tol.residual_rel))


def numerical_range(a, samples: int = 64) -> np.ndarray:
    """Boundary points of the l2 field of values ``{v* a v : ||v|| = 1}``.

    For each angle ``theta`` the top eigenvector of the hermitian part of
    ``exp(i theta) a`` is a support point of the field in direction
    ``exp(-i theta)``.
    """
    a = as_cmatrix(a)
    require_square(a)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    points = np.empty(samples, dtype=np.complex128)
    for k, theta in enumerate(2 * np.pi * np.arange(samples) / samples):
        rot = np.exp(1j * theta) * a
        _, vecs = np.linalg.eigh((rot + rot.conj().T) / 2)
        v = vecs[:, -1]
        points[k] = v.conj() @ a @ v
    return points
