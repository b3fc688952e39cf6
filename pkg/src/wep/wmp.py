"""Moore-Penrose, weighted Moore-Penrose and group inverses.

The weighted inverse ``a^+_{e,f}`` of an ``m x n`` matrix uses the weight
``e`` on the codomain and ``f`` on the domain.  It is built from the
congruence formula

    s = f^{-1/2} (e^{1/2} a f^{-1/2})^+ e^{1/2}

and then re-verified against the defining conditions: ``asa = a``,
``sas = s``, ``as`` hermitian in ``A^e`` and ``sa`` hermitian in ``A^f``.
The verification is what certifies the result; the formula only supplies
the candidate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from wep.hermitian import NormContext, Weight, is_hermitian_weighted
from wep.matcore import (
    DEFAULT_TOL,
    Tolerance,
    as_cmatrix,
    null_basis,
    op_norm,
    range_basis,
    rank,
    require_square,
)


class WeightedInverseError(ValueError):
    """A weighted MP inverse could not be certified."""


class WitnessError(ValueError):
    """An idempotent witness violates one of its required properties."""

    def __init__(self, which: str, detail: str = ""):
        self.which = which
        super().__init__(f"witness rejected: {which}" + (f" ({detail})" if detail else ""))


class GroupInverseError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WmpResult:
    pinv: np.ndarray
    res_aba: float
    res_bab: float
    herm_left_dev: float
    herm_right_dev: float
    valid: bool
    # "valid", "invalid", or "undetermined" (l1/linf hermitian test failed)
    status: str

    @property
    def max_residual(self) -> float:
        return max(self.res_aba, self.res_bab, self.herm_left_dev, self.herm_right_dev)

    def require_valid(self) -> np.ndarray:
        if not self.valid:
            raise WeightedInverseError(
                f"weighted MP inverse {self.status}: aba={self.res_aba:.2e} bab={self.res_bab:.2e} "
                f"left={self.herm_left_dev:.2e} right={self.herm_right_dev:.2e}")
        return self.pinv


@dataclass(frozen=True, eq=False)
class IdempotentWitness:
    """Idempotents ``p`` (hermitian in ``A^e``, range = range(a)) and ``q``
    (hermitian in ``A^f``, null space = null(a)), with the weights they refer to."""

    p: np.ndarray
    q: np.ndarray
    e: Weight
    f: Weight


def mp_inverse(a, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose inverse via the SVD, truncating at ``tol.rank_rel``."""
    a = as_cmatrix(a)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[1], a.shape[0]), dtype=np.complex128)
    keep = s > tol.rank_rel * s[0]
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (vt.conj().T * inv_s) @ u.conj().T


def _verify(a: np.ndarray, s: np.ndarray, e: Weight, f: Weight, tol: Tolerance) -> WmpResult:
    ctx = e.ctx
    scale = 1.0 + max(op_norm(a), op_norm(s))
    res_aba = op_norm(a @ s @ a - a) / scale
    res_bab = op_norm(s @ a @ s - s) / scale
    left = is_hermitian_weighted(a @ s, e, ctx, tol)
    right = is_hermitian_weighted(s @ a, f, ctx, tol)
    algebraic = res_aba <= tol.residual_rel and res_bab <= tol.residual_rel
    herm = left.hermitian and right.hermitian
    if algebraic and herm:
        status = "valid"
    elif algebraic and ctx.kind != "l2":
        status = "undetermined"
    else:
        status = "invalid"
    return WmpResult(s, res_aba, res_bab, left.deviation, right.deviation, status == "valid", status)


def _check_weights(a: np.ndarray, e: Weight, f: Weight) -> None:
    m, n = a.shape
    if e.n != m:
        raise ValueError(f"codomain weight is {e.n}x{e.n}, matrix has {m} rows")
    if f.n != n:
        raise ValueError(f"domain weight is {f.n}x{f.n}, matrix has {n} columns")


def wmp_inverse(a, e: Weight, f: Weight, tol: Tolerance = DEFAULT_TOL) -> WmpResult:
    """Weighted MP inverse of ``a`` (``m x n``) with codomain weight ``e`` and
    domain weight ``f``, together with its verification residuals."""
    a = as_cmatrix(a)
    _check_weights(a, e, f)
    core = mp_inverse(e.u_half @ a @ f.u_half_inv, tol)
    s = f.u_half_inv @ core @ e.u_half
    return _verify(a, s, e, f, tol)


def check_witness(a, w: IdempotentWitness, tol: Tolerance = DEFAULT_TOL) -> None:
    """Raise :class:`WitnessError` naming the first failed witness property."""
    a = as_cmatrix(a)
    p, q = as_cmatrix(w.p, "p"), as_cmatrix(w.q, "q")
    m, n = a.shape
    if p.shape != (m, m) or q.shape != (n, n):
        raise WitnessError("shapes", f"p {p.shape}, q {q.shape} for a {a.shape}")
    for name, x in (("p", p), ("q", q)):
        if op_norm(x @ x - x) > tol.residual_rel * (1.0 + op_norm(x)):
            raise WitnessError(f"{name} idempotent")
    ra = rank(a, tol)
    if not (rank(p, tol) == ra and rank(np.hstack([a, p]), tol) == ra):
        raise WitnessError("range(p) = range(a)")
    if not (rank(q, tol) == ra and rank(np.vstack([a, q]), tol) == ra):
        raise WitnessError("null(q) = null(a)")
    if not is_hermitian_weighted(p, w.e, tol=tol).hermitian:
        raise WitnessError("p hermitian in A^e")
    if not is_hermitian_weighted(q, w.f, tol=tol).hermitian:
        raise WitnessError("q hermitian in A^f")


def wmp_from_idempotents(a, w: IdempotentWitness, tol: Tolerance = DEFAULT_TOL) -> WmpResult:
    """Weighted MP inverse assembled from a pair of hermitian idempotents.

    The unique ``s`` with ``a s = p``, ``s a = q`` and ``s = q s`` is
    ``q x`` where ``x`` is any solution of ``a x = p``.
    """
    a = as_cmatrix(a)
    _check_weights(a, w.e, w.f)
    check_witness(a, w, tol)
    x = np.linalg.lstsq(a, np.asarray(w.p, dtype=np.complex128), rcond=tol.rank_rel)[0]
    s = np.asarray(w.q, dtype=np.complex128) @ x
    return _verify(a, s, w.e, w.f, tol)


def group_inverse(a, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Group inverse through the core-nilpotent splitting ``range(a) + null(a)``.

    Raises
    ------
    GroupInverseError
        If ``rank(a^2) < rank(a)``.
    """
    a = as_cmatrix(a)
    require_square(a)
    n = a.shape[0]
    r = rank(a, tol)
    if rank(a @ a, tol) != r:
        raise GroupInverseError("group inverse does not exist: rank(a^2) < rank(a)")
    if r == 0:
        return np.zeros_like(a)
    basis_r = range_basis(a, tol)
    basis_n = null_basis(a, tol)
    j = np.hstack([basis_r, basis_n])
    core = basis_r.conj().T @ a @ basis_r
    sv = np.linalg.svd(core, compute_uv=False)
    if sv[-1] <= tol.rank_rel * sv[0]:
        raise GroupInverseError("group inverse does not exist: core block is singular")
    j_inv = np.linalg.inv(j)
    return basis_r @ np.linalg.solve(core, j_inv[:r])


def double_dagger_residual(a, e: Weight, f: Weight, tol: Tolerance = DEFAULT_TOL) -> float:
    """``||(a^+_{e,f})^+_{f,e} - a|| / (1 + ||a||)``."""
    a = as_cmatrix(a)
    s = wmp_inverse(a, e, f, tol).require_valid()
    back = wmp_inverse(s, f, e, tol).require_valid()
    return op_norm(back - a) / (1.0 + op_norm(a))


def double_dagger_check(a, e: Weight, f: Weight, tol: Tolerance = DEFAULT_TOL) -> bool:
    return double_dagger_residual(a, e, f, tol) <= tol.residual_rel


def ensure_ctx(w: Optional[Weight], n: int, ctx=None) -> Weight:
    """Identity weight of size ``n`` when ``w`` is None."""
    if w is None:
        return Weight.identity(n, NormContext.coerce(ctx))
    return w
