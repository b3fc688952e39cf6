"""Full-rank factorizations, the weighted reverse-order law, and the
block / corner-algebra decompositions of weighted-EP matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from wep.hermitian import Weight, is_hermitian_weighted
from wep.matcore import (
    DEFAULT_TOL,
    SingularMatrixError,
    Tolerance,
    as_cmatrix,
    identity,
    null_basis,
    op_norm,
    range_basis,
    rank,
    require_square,
)
from wep.wmp import wmp_inverse


class NotWeightedEPError(ValueError):
    pass


class CornerSingularError(ValueError):
    """``pap`` is not invertible in the corner algebra ``pAp``."""


class ReverseOrderError(AssertionError):
    """Two routes to the same weighted inverse disagree (an upstream bug)."""


class HermitianPreconditionError(ValueError):
    def __init__(self, algebra: str, detail: str = ""):
        self.algebra = algebra
        super().__init__(f"c p c^-1 is not hermitian in {algebra}" + (f" ({detail})" if detail else ""))


def _gap(x: np.ndarray, y: np.ndarray) -> float:
    return op_norm(x - y) / (1.0 + max(op_norm(x), op_norm(y)))


def _phase_normalize(basis: np.ndarray) -> np.ndarray:
    # rotate each column so its largest-magnitude entry is real positive
    if basis.shape[1] == 0:
        return basis
    idx = np.argmax(np.abs(basis), axis=0)
    piv = basis[idx, np.arange(basis.shape[1])]
    return basis * (np.abs(piv) / piv)


@dataclass(frozen=True, eq=False)
class FullRankFactorization:
    b: np.ndarray
    c: np.ndarray
    r: int

    @property
    def degenerate(self) -> bool:
        return self.r == 0

    @property
    def product(self) -> np.ndarray:
        return self.b @ self.c


def full_rank_factorize(a, tol: Tolerance = DEFAULT_TOL) -> FullRankFactorization:
    """``a = b @ c`` with ``b = U_r diag(s_r)`` and ``c = V_r*`` from the SVD.

    The zero matrix gives ``r = 0`` with empty ``n x 0`` / ``0 x n`` factors.
    """
    a = as_cmatrix(a)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    r = 0 if s[0] == 0.0 else int(np.count_nonzero(s > tol.rank_rel * s[0]))
    b = u[:, :r] * s[:r]
    c = vt[:r].copy()
    return FullRankFactorization(b, c, r)


class FactorParts(NamedTuple):
    b_dag: np.ndarray
    c_dag: np.ndarray
    # ||b+ b - I_r|| and ||c c+ - I_r||
    residual_b: float
    residual_c: float
    valid: bool


def factor_parts_wmp(a, fr: FullRankFactorization, e: Weight, f: Weight, h: Weight,
                     tol: Tolerance = DEFAULT_TOL, a_dag: Optional[np.ndarray] = None) -> FactorParts:
    """``b^+_{e,f} = c a^+_{e,h}`` and ``c^+_{f,h} = a^+_{e,h} b``.

    ``e`` and ``h`` are ``n x n``; ``f`` is the ``r x r`` weight on the inner
    space.  Both one-sided identities ``b+ b = I_r`` and ``c c+ = I_r`` are
    checked.
    """
    a = as_cmatrix(a)
    if f.n != fr.r:
        raise ValueError(f"inner weight must be {fr.r}x{fr.r}, got {f.n}x{f.n}")
    if a_dag is None:
        a_dag = wmp_inverse(a, e, h, tol).require_valid()
    b_dag = fr.c @ a_dag
    c_dag = a_dag @ fr.b
    eye = identity(fr.r)
    res_b = op_norm(b_dag @ fr.b - eye) / (1.0 + op_norm(b_dag) * op_norm(fr.b)) if fr.r else 0.0
    res_c = op_norm(fr.c @ c_dag - eye) / (1.0 + op_norm(c_dag) * op_norm(fr.c)) if fr.r else 0.0
    ok = res_b <= tol.residual_rel and res_c <= tol.residual_rel
    return FactorParts(b_dag, c_dag, res_b, res_c, ok)


def reverse_order_wmp(fr: FullRankFactorization, b_dag: np.ndarray, c_dag: np.ndarray,
                      a_dag: Optional[np.ndarray] = None, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """``c+ @ b+``; when ``a_dag`` is given it must match, together with
    ``a a+ = b b+`` and ``a+ a = c+ c``."""
    s = c_dag @ b_dag
    if a_dag is not None:
        a = fr.product
        checks = {
            "c+ b+ = a+": _gap(s, a_dag),
            "a a+ = b b+": _gap(a @ a_dag, fr.b @ b_dag),
            "a+ a = c+ c": _gap(a_dag @ a, c_dag @ fr.c),
        }
        bad = {k: v for k, v in checks.items() if v > tol.residual_rel}
        if bad:
            raise ReverseOrderError(", ".join(f"{k}: {v:.2e}" for k, v in bad.items()))
    return s


def weighted_ep_residual(a: np.ndarray, a_dag: np.ndarray) -> float:
    p = a @ a_dag
    return op_norm(p - a_dag @ a) / (1.0 + op_norm(p))


def _require_ep(a, e, f, tol) -> np.ndarray:
    a_dag = wmp_inverse(a, e, f, tol).require_valid()
    res = weighted_ep_residual(a, a_dag)
    if res > tol.residual_rel:
        raise NotWeightedEPError(f"matrix is not weighted EP (commutator residual {res:.2e})")
    return a_dag


@dataclass(frozen=True, eq=False)
class BlockDecomposition:
    x1_basis: np.ndarray
    x2_basis: np.ndarray
    t1: np.ndarray
    j: np.ndarray
    # post-condition name -> (holds, residual)
    checks: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.x1_basis, self.x2_basis, self.t1, self.j))

    @property
    def verified(self) -> bool:
        return all(ok for ok, _ in self.checks.values())


def _blockdiag(top: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=np.complex128)
    k = top.shape[0]
    out[:k, :k] = top
    return out


def ep_block_decomposition(a, e: Weight, f: Weight, tol: Tolerance = DEFAULT_TOL) -> BlockDecomposition:
    """``a = J (T1 + 0) J^{-1}`` with ``J = [basis of range(p) | basis of null(p)]``
    and ``p = a a^+_{e,f}``.

    The five post-conditions are evaluated and stored in ``checks``.
    """
    a = as_cmatrix(a)
    require_square(a)
    a_dag = _require_ep(a, e, f, tol)
    return block_decompose(a, a_dag, e, f, tol)


def block_decompose(a: np.ndarray, a_dag: np.ndarray, e: Weight, f: Weight,
                    tol: Tolerance = DEFAULT_TOL) -> BlockDecomposition:
    """Block decomposition along ``range(p) + null(p)``, ``p = a a_dag``,
    without requiring ``a`` to be weighted EP; failing post-conditions
    show up in ``checks``."""
    n = a.shape[0]
    p = a @ a_dag
    x1 = _phase_normalize(range_basis(p, tol))
    x2 = _phase_normalize(null_basis(p, tol))
    j = np.hstack([x1, x2])
    j_inv = np.linalg.inv(j)
    k = x1.shape[1]
    # a maps range(p) into itself; x1 is orthonormal
    t1 = x1.conj().T @ a @ x1
    checks = {}
    if k:
        sv = np.linalg.svd(t1, compute_uv=False)
        ok = bool(sv[0] > 0 and sv[-1] > tol.rank_rel * sv[0])
        checks["t1 invertible"] = (ok, float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0)
        t1_inv = np.linalg.inv(t1) if checks["t1 invertible"][0] else np.zeros_like(t1)
    else:
        checks["t1 invertible"] = (True, 1.0)
        t1_inv = t1
    r = _gap(j @ _blockdiag(t1, n) @ j_inv, a)
    checks["a = J(T1+0)J^-1"] = (r <= tol.residual_rel, r)
    r = _gap(j @ _blockdiag(t1_inv, n) @ j_inv, a_dag)
    checks["a+ = J(T1^-1+0)J^-1"] = (r <= tol.residual_rel, r)
    q1 = j @ _blockdiag(identity(k), n) @ j_inv
    q2 = identity(n) - q1
    h1 = is_hermitian_weighted(q1, e, tol=tol)
    h2 = is_hermitian_weighted(q2, f, tol=tol)
    checks["Q1 hermitian in A^e"] = (h1.hermitian, h1.deviation)
    checks["Q2 hermitian in A^f"] = (h2.hermitian, h2.deviation)
    return BlockDecomposition(x1, x2, t1, j, checks)


def blocks_through_maps_check(a, s: np.ndarray, t1: np.ndarray, u: np.ndarray, p: np.ndarray,
                              e: Weight, f: Weight, tol: Tolerance = DEFAULT_TOL) -> dict:
    """Evaluate the injective/surjective block factorization predicate.

    Checks ``s`` injective, ``u`` surjective, ``t1`` invertible, ``p`` an
    idempotent hermitian in both ``A^e`` and ``A^f``, ``a = s (t1 + 0) u``,
    ``range(p) = s(X1 + 0)`` and ``null(p) = u^{-1}(0 + X2)``.  Returns a
    dict of named booleans; ``all(...)`` is the verdict.
    """
    a = as_cmatrix(a)
    k = t1.shape[0]
    dim = s.shape[1]
    out = {}
    out["s injective"] = rank(s, tol) == dim
    out["u surjective"] = rank(u, tol) == u.shape[0]
    out["t1 invertible"] = k == 0 or rank(t1, tol) == k
    out["p idempotent"] = _gap(p @ p, p) <= tol.residual_rel
    out["p hermitian in A^e"] = is_hermitian_weighted(p, e, tol=tol).hermitian
    out["p hermitian in A^f"] = is_hermitian_weighted(p, f, tol=tol).hermitian
    mid = np.zeros((dim, dim), dtype=np.complex128)
    mid[:k, :k] = t1
    out["a = s(t1+0)u"] = _gap(s @ mid @ u, a) <= tol.residual_rel
    s1 = s[:, :k]
    out["range(p) = s(X1+0)"] = (rank(p, tol) == rank(s1, tol) ==
                                 rank(np.hstack([p, s1]), tol))
    # u^{-1}(0 + X2) = null of the first k rows of u
    u1 = u[:k]
    if k:
        out["null(p) = u^-1(0+X2)"] = (rank(p, tol) == rank(u1, tol) ==
                                       rank(np.vstack([p, u1]), tol))
    else:
        out["null(p) = u^-1(0+X2)"] = rank(p, tol) == 0
    return out


@dataclass(frozen=True, eq=False)
class EpDecomposition:
    c: np.ndarray
    p: np.ndarray
    core: np.ndarray
    degenerate: bool = False
    checks: dict = field(default_factory=dict)


def pAp_inverse(a, p, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Inverse of ``pap`` inside the corner algebra ``pAp`` (unit ``p``).

    Returns ``x = p x p`` with ``(pap) x = x (pap) = p``.
    """
    a = as_cmatrix(a)
    p = as_cmatrix(p, "p")
    n = p.shape[0]
    if _gap(p @ p, p) > tol.residual_rel:
        raise ValueError("p is not idempotent")
    x1 = range_basis(p, tol)
    k = x1.shape[1]
    if k == 0:
        return np.zeros((n, n), dtype=np.complex128)
    # p = x1 (x1* p); restriction of pap to range(p) in x1 coordinates
    left = x1.conj().T @ p
    core = left @ a @ x1
    sv = np.linalg.svd(core, compute_uv=False)
    if sv[-1] <= tol.rank_rel * sv[0]:
        raise CornerSingularError("not invertible in corner algebra")
    x = x1 @ np.linalg.solve(core, left)
    pap = p @ a @ p
    if max(_gap(pap @ x, p), _gap(x @ pap, p)) > tol.residual_rel:
        raise CornerSingularError("not invertible in corner algebra (identity check failed)")
    return x


def canonical_ep_decomposition(a, e: Weight, f: Weight, tol: Tolerance = DEFAULT_TOL) -> EpDecomposition:
    """``a = c p (pap) p c^{-1}`` with ``c = 1`` and ``p = a a^+_{e,f}``."""
    a = as_cmatrix(a)
    require_square(a)
    a_dag = _require_ep(a, e, f, tol)
    return corner_decompose(a, a_dag, e, f, tol)


def corner_decompose(a: np.ndarray, a_dag: np.ndarray, e: Weight, f: Weight,
                     tol: Tolerance = DEFAULT_TOL) -> EpDecomposition:
    """Canonical candidate ``c = 1``, ``p = a a_dag`` with every invariant
    evaluated into ``checks`` instead of being assumed."""
    n = a.shape[0]
    c = identity(n)
    p = a @ a_dag
    core = p @ a @ p
    checks = {}
    r = _gap(p @ p, p)
    checks["p idempotent"] = (r <= tol.residual_rel, r)
    r = _gap(c @ p @ a @ p @ np.linalg.inv(c), a)
    checks["a = c pap c^-1"] = (r <= tol.residual_rel, r)
    h = is_hermitian_weighted(p, e, tol=tol)
    checks["cpc^-1 hermitian in A^e"] = (h.hermitian, h.deviation)
    h = is_hermitian_weighted(p, f, tol=tol)
    checks["cpc^-1 hermitian in A^f"] = (h.hermitian, h.deviation)
    degenerate = rank(p, tol) == 0
    if degenerate:
        checks["pap invertible in pAp"] = (True, 0.0)
    else:
        try:
            inv = pAp_inverse(a, p, tol)
            r = _gap(inv, a_dag)
            checks["pap invertible in pAp"] = (True, r)
        except CornerSingularError:
            checks["pap invertible in pAp"] = (False, np.inf)
    return EpDecomposition(c, p, core, degenerate, checks)


def ep_synthesize_from_decomposition(c, p, core_seed, e: Weight, f: Weight,
                                     tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Build ``a = c p core_seed p c^{-1}``, which is weighted EP for ``(e, f)``
    whenever the preconditions hold; they are checked and violations raise."""
    c = as_cmatrix(c, "c")
    p = as_cmatrix(p, "p")
    core_seed = as_cmatrix(core_seed, "core_seed")
    sv = np.linalg.svd(c, compute_uv=False)
    if sv[-1] <= tol.rank_rel * sv[0]:
        raise SingularMatrixError("c is not invertible")
    if _gap(p @ p, p) > tol.residual_rel:
        raise ValueError("p is not idempotent")
    c_inv = np.linalg.inv(c)
    q = c @ p @ c_inv
    for name, w in (("A^e", e), ("A^f", f)):
        chk = is_hermitian_weighted(q, w, tol=tol)
        if not chk.hermitian:
            raise HermitianPreconditionError(name, f"deviation {chk.deviation:.2e}")
    pAp_inverse(core_seed, p, tol)
    return c @ p @ core_seed @ p @ c_inv
