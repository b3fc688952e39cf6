"""Weighted-EP decision: the direct commuting test and every equivalent
characterization, evaluated independently and cross-checked.

Each characterization is turned into a concrete computation on the
instance (an equality of matrices, a subspace comparison, or the
solvability of a linear system with a checked witness).  An
:class:`EpReport` collects the verdicts and is ``consistent`` exactly when
every one of them matches the direct verdict.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from wep.factor import (
    FullRankFactorization,
    block_decompose,
    corner_decompose,
    full_rank_factorize,
    weighted_ep_residual,
)
from wep.hermitian import Weight, is_hermitian_weighted
from wep.matcore import (
    DEFAULT_TOL,
    Tolerance,
    as_cmatrix,
    identity,
    null_basis,
    op_norm,
    rank,
    require_square,
    same_column_space,
    subspace_gap,
)
from wep.wmp import GroupInverseError, group_inverse, mp_inverse, wmp_inverse


# ---------------------------------------------------------------------------
# report types

@dataclass
class Statement:
    id: str
    verdict: bool
    residual: float
    label: str = ""
    witness: Optional[List[np.ndarray]] = None

    def to_dict(self) -> dict:
        return {"id": self.id, "verdict": self.verdict, "residual": float(self.residual),
                "label": self.label}


@dataclass
class EpReport:
    direct: bool
    direct_residual: float
    statements: List[Statement] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return all(s.verdict == self.direct for s in self.statements)

    @property
    def disagreements(self) -> List[Statement]:
        return [s for s in self.statements if s.verdict != self.direct]

    def __getitem__(self, sid: str) -> Statement:
        for s in self.statements:
            if s.id == sid:
                return s
        raise KeyError(sid)

    def ids(self) -> List[str]:
        return [s.id for s in self.statements]

    def to_dict(self) -> dict:
        return {"direct": self.direct, "direct_residual": float(self.direct_residual),
                "consistent": self.consistent,
                "statements": [s.to_dict() for s in self.statements]}


def merge_reports(*reports: EpReport) -> EpReport:
    directs = {r.direct for r in reports}
    if len(directs) != 1:
        raise ValueError("reports disagree on the direct verdict")
    out = EpReport(reports[0].direct, max(r.direct_residual for r in reports))
    for r in reports:
        out.statements.extend(r.statements)
    return out


# ---------------------------------------------------------------------------
# helpers

def _gap(x, y) -> float:
    return op_norm(x - y) / (1.0 + max(op_norm(x), op_norm(y)))


def _zero(expr, *factors) -> float:
    scale = 1.0
    for f in factors:
        scale *= op_norm(f)
    return op_norm(expr) / (1.0 + scale)


def _pinv(x: np.ndarray, tol: Tolerance) -> np.ndarray:
    if x.size == 0:
        return np.zeros((x.shape[1], x.shape[0]), dtype=np.complex128)
    return mp_inverse(x, tol)


def _rank(x: np.ndarray, tol: Tolerance) -> int:
    return 0 if x.size == 0 else rank(x, tol)


def _full_col_rank(x, tol) -> bool:
    return _rank(x, tol) == x.shape[1]


def _full_row_rank(x, tol) -> bool:
    return _rank(x, tol) == x.shape[0]


def _stmt(sid, residuals, tol: Tolerance, label="", witness=None, extra=True) -> Statement:
    res = max(residuals) if residuals else 0.0
    return Statement(sid, bool(extra) and res <= tol.residual_rel, float(res), label, witness)


def _wmp_or_zero(x: np.ndarray, e: Weight, f: Weight, tol: Tolerance) -> np.ndarray:
    if x.size == 0:
        return np.zeros((x.shape[1], x.shape[0]), dtype=np.complex128)
    return wmp_inverse(x, e, f, tol).require_valid()


# ---------------------------------------------------------------------------
# direct oracle

class EpVerdict(NamedTuple):
    ep: bool
    residual: float
    a_dag: np.ndarray


def is_weighted_ep(a, e: Weight, f: Weight, tol: Tolerance = DEFAULT_TOL) -> EpVerdict:
    """``a^+_{e,f}`` exists and commutes with ``a``.

    The residual is ``||a a+ - a+ a|| / (1 + ||a a+||)``.  A weighted
    inverse that fails verification raises
    :class:`wep.wmp.WeightedInverseError`.
    """
    a = as_cmatrix(a)
    require_square(a)
    a_dag = wmp_inverse(a, e, f, tol).require_valid()
    res = weighted_ep_residual(a, a_dag)
    return EpVerdict(res <= tol.residual_rel, res, a_dag)


# ---------------------------------------------------------------------------
# membership in one-sided ideals

class Side(enum.Enum):
    LEFT = "left"        # target = X @ generator
    RIGHT = "right"      # target = generator @ X
    TWO_SIDED = "two_sided"


@dataclass(frozen=True, eq=False)
class MembershipQuery:
    target: np.ndarray
    side: Side
    generator: np.ndarray

    def __post_init__(self):
        t, g = np.asarray(self.target), np.asarray(self.generator)
        if self.side in (Side.RIGHT, Side.TWO_SIDED) and t.shape[0] != g.shape[0]:
            raise ValueError(f"right membership needs equal row counts: {t.shape} vs {g.shape}")
        if self.side in (Side.LEFT, Side.TWO_SIDED) and t.shape[1] != g.shape[1]:
            raise ValueError(f"left membership needs equal column counts: {t.shape} vs {g.shape}")


class MembershipResult(NamedTuple):
    solvable: bool
    residual: float
    witness: List[np.ndarray]


def membership_solvable(q: MembershipQuery, tol: Tolerance = DEFAULT_TOL) -> MembershipResult:
    """Consistency of ``target = generator X`` / ``target = X generator``.

    Decided by the projector tests ``g g+ t = t`` (right) and
    ``t g+ g = t`` (left); the MP-based solution is returned as witness.
    """
    t = np.asarray(q.target, dtype=np.complex128)
    g = np.asarray(q.generator, dtype=np.complex128)
    g_pinv = _pinv(g, tol)
    residuals, witness = [], []
    if q.side in (Side.RIGHT, Side.TWO_SIDED):
        x = g_pinv @ t
        residuals.append(_gap(g @ x, t))
        witness.append(x)
    if q.side in (Side.LEFT, Side.TWO_SIDED):
        x = t @ g_pinv
        residuals.append(_gap(x @ g, t))
        witness.append(x)
    res = max(residuals)
    return MembershipResult(res <= tol.residual_rel, res, witness)


def _member(target, side, generator, tol) -> MembershipResult:
    return membership_solvable(MembershipQuery(target, side, generator), tol)


def sandwich_solvable(left: np.ndarray, target: np.ndarray, right: np.ndarray,
                      tol: Tolerance = DEFAULT_TOL) -> MembershipResult:
    """Consistency of ``left @ Z @ right = target`` via the vectorized system."""
    # row-major vec: vec(L Z R) = kron(L, R^T) vec(Z)
    m = np.kron(left, right.T)
    rhs = target.reshape(-1)
    if m.size == 0:
        z = np.zeros((left.shape[1], right.shape[0]), dtype=np.complex128)
    else:
        z = np.linalg.lstsq(m, rhs, rcond=None)[0].reshape(left.shape[1], right.shape[0])
    res = _gap(left @ z @ right, target)
    return MembershipResult(res <= tol.residual_rel, res, [z])


# ---------------------------------------------------------------------------
# a = b c

def ep_statement_suite_bc(a, fr: FullRankFactorization, e: Weight, f: Weight, h: Weight,
                          tol: Tolerance = DEFAULT_TOL) -> EpReport:
    """Characterizations of weighted-EP-ness (weights ``e``, ``h``) through a
    full-rank factorization ``a = b c`` with inner weight ``f`` (``r x r``).

    ``b+ = b^+_{e,f}`` and ``c+ = c^+_{f,h}`` are computed directly from
    ``b`` and ``c``, not from ``a+``.  Where a statement asks for the
    existence of ``u``-type witnesses, the witnesses are forced by
    ``b+ b = I`` and ``c c+ = I`` (``u = c b``, ``z = b+ c+``), so checking
    those candidates decides existence.  Over a common finite-dimensional
    inner space the injective/surjective variants collapse to invertibility;
    they are still evaluated as separate rank conditions.
    """
    a = as_cmatrix(a)
    require_square(a)
    n = a.shape[0]
    direct = is_weighted_ep(a, e, h, tol)
    a_dag = direct.a_dag
    b, c, r = fr.b, fr.c, fr.r
    if _gap(b @ c, a) > tol.residual_rel:
        raise ValueError("factorization does not reproduce a")
    if r and f.n != r:
        raise ValueError(f"inner weight must be {r}x{r}, got {f.n}x{f.n}")
    bd = _wmp_or_zero(b, e, f, tol) if r else np.zeros((0, n), dtype=np.complex128)
    cd = _wmp_or_zero(c, f, h, tol) if r else np.zeros((n, 0), dtype=np.complex128)
    eye_n, eye_r = identity(n), identity(r)
    bbd, cdc = b @ bd, cd @ c
    st = []

    st.append(_stmt("bc.ii", [_gap(bbd, cdc)], tol, "b b+ = c+ c"))

    m = [_member(b, Side.RIGHT, cd, tol), _member(cd, Side.RIGHT, b, tol)]
    nb, nc = null_basis(bd, tol) if r else eye_n, null_basis(c, tol) if r else eye_n
    same_null = same_column_space(nb, nc, tol) if nb.size or nc.size else True
    st.append(_stmt("bc.iii", [x.residual for x in m] + [subspace_gap(nb, nc, tol) if nb.shape == nc.shape else 1.0],
                    tol, "bA = c+A and null(b+) = null(c)",
                    extra=all(x.solvable for x in m) and same_null))

    st.append(_stmt("bc.iv", [_zero((eye_n - cdc) @ b, eye_n - cdc, b),
                              _zero(c @ (eye_n - bbd), c, eye_n - bbd)],
                    tol, "(1 - c+c) b = 0 and c (1 - b b+) = 0"))

    st.append(_stmt("bc.v", [_zero(bd @ (eye_n - cdc), bd, eye_n - cdc),
                             _zero((eye_n - bbd) @ cd, eye_n - bbd, cd)],
                    tol, "b+ (1 - c+c) = 0 and (1 - b b+) c+ = 0"))

    u = c @ b
    z = bd @ cd
    vi = [_gap(c, u @ bd), _gap(b, cd @ u), _gap(u @ z, eye_r), _gap(z @ u, eye_r)]
    st.append(_stmt("bc.vi", vi, tol, "c = u b+, b = c+ u, u invertible", [u, z]))

    st.append(_stmt("bc.vii", [_gap(c, u @ bd), _gap(b, cd @ u)], tol,
                    "c = u2 b+, b = c+ u1, u1 surjective, u2 injective", [u, u],
                    extra=_full_row_rank(u, tol) and _full_col_rank(u, tol)))

    st.append(_stmt("bc.viii", [_gap(c, u @ bd), _gap(bd, z @ c), _gap(b, cd @ u), _gap(cd, b @ z)],
                    tol, "c = u5 b+, b+ = u6 c, b = c+ u3, c+ = b u4", [u, z, u, z]))

    st.append(_stmt("bc.ix", [_gap(bd, z @ c), _gap(cd, b @ z)], tol,
                    "b+ = u8 c, c+ = b u7, u7 surjective, u8 injective", [z, z],
                    extra=_full_row_rank(z, tol) and _full_col_rank(z, tol)))

    m = [_member(a, Side.RIGHT, cd, tol), _member(a, Side.LEFT, bd, tol)]
    st.append(_stmt("bc.x", [x.residual for x in m], tol, "a in c+A and in Ab+",
                    [m[0].witness[0], m[1].witness[0]], extra=all(x.solvable for x in m)))

    m = [_member(a_dag, Side.RIGHT, b, tol), _member(a_dag, Side.LEFT, c, tol)]
    st.append(_stmt("bc.xi", [x.residual for x in m], tol, "a+ in bA and in Ac",
                    [m[0].witness[0], m[1].witness[0]], extra=all(x.solvable for x in m)))

    xii = [_gap(b, cd @ u), _gap(cd, b @ z), _gap(c, u @ bd), _gap(bd, z @ c), _gap(u @ z, eye_r)]
    st.append(_stmt("bc.xii", xii, tol, "b A^-1 = c+ A^-1 and A^-1 c = A^-1 b+", [u, z]))

    # left annihilators {y : y x = 0} are null spaces of x^T
    lb = null_basis(b.T, tol) if r else eye_n
    lc = null_basis(cd.T, tol) if r else eye_n
    same_left = lb.shape == lc.shape and (lb.size == 0 or same_column_space(lb, lc, tol))
    m = [_member(c, Side.LEFT, bd, tol), _member(bd, Side.LEFT, c, tol)]
    st.append(_stmt("bc.xiii", [x.residual for x in m] + [subspace_gap(lb, lc, tol) if lb.size else 0.0],
                    tol, "left annihilators of b and c+ agree and Ac = Ab+",
                    extra=same_left and all(x.solvable for x in m)))

    return EpReport(direct.ep, direct.residual, st)


# ---------------------------------------------------------------------------
# a+ = s a

def _invertible_solution(target, gen, side, tol):
    # member of the solution family that is invertible whenever one exists
    # among solutions built from the MP projectors
    n = gen.shape[0]
    g_pinv = _pinv(gen, tol)
    if side is Side.LEFT:
        return target @ g_pinv + (identity(n) - gen @ g_pinv)
    return g_pinv @ target + (identity(n) - g_pinv @ gen)


def ep_statement_suite_sa(a, e: Weight, f: Weight, tol: Tolerance = DEFAULT_TOL) -> EpReport:
    """Characterizations through factorizations of ``a+`` and of the
    idempotents ``a a+`` and ``a+ a`` (weights ``e``, ``f``).

    Plain solvability is decided by projector tests.  Statements that also
    require invertible / injective / surjective witnesses use the solution
    ``x0 + (1 - projector)`` of each system, which is invertible in the
    weighted-EP case; the rank conditions are then checked on it.
    """
    a = as_cmatrix(a)
    require_square(a)
    n = a.shape[0]
    direct = is_weighted_ep(a, e, f, tol)
    ad = direct.a_dag
    p = a @ ad       # a a+
    q = ad @ a       # a+ a
    st = []

    s = _invertible_solution(ad, a, Side.LEFT, tol)
    t = _invertible_solution(ad, a, Side.RIGHT, tol)
    st.append(_stmt("sa.ii", [_gap(ad, s @ a), _gap(ad, a @ t)], tol,
                    "a+ = s a = a t, s injective, t surjective", [s, t],
                    extra=_full_col_rank(s, tol) and _full_row_rank(t, tol)))

    m = [_member(ad, Side.LEFT, a, tol), _member(ad, Side.RIGHT, a, tol)]
    st.append(_stmt("sa.iii", [x.residual for x in m], tol, "a+ = s1 a = a t1",
                    [m[0].witness[0], m[1].witness[0]], extra=all(x.solvable for x in m)))

    m = [_member(q, Side.LEFT, ad, tol), _member(q, Side.RIGHT, a, tol),
         _member(p, Side.RIGHT, ad, tol), _member(p, Side.LEFT, a, tol)]
    st.append(_stmt("sa.iv", [x.residual for x in m], tol, "a+a = u a+ = a v, a a+ = a+ u1 = v1 a",
                    [x.witness[0] for x in m], extra=all(x.solvable for x in m)))

    m = [_member(q, Side.LEFT, ad, tol), _member(p, Side.RIGHT, ad, tol),
         _member(ad, Side.RIGHT, a, tol), _member(ad, Side.LEFT, a, tol)]
    st.append(_stmt("sa.v", [x.residual for x in m], tol, "a+a = u2 a+, a a+ = a+ u3, a+ = a v2 = v3 a",
                    [x.witness[0] for x in m], extra=all(x.solvable for x in m)))

    x = _invertible_solution(q, p, Side.LEFT, tol)
    y = _invertible_solution(q, p, Side.RIGHT, tol)
    eqs = [_gap(q, x @ p), _gap(q, p @ y)]
    st.append(_stmt("sa.vi", eqs, tol, "a+a = x a a+ = a a+ y, x and y invertible", [x, y],
                    extra=_rank(x, tol) == n and _rank(y, tol) == n))
    st.append(_stmt("sa.vii", eqs, tol, "a+a = x1 a a+ = a a+ y1, x1 injective, y1 surjective", [x, y],
                    extra=_full_col_rank(x, tol) and _full_row_rank(y, tol)))
    m = _member(q, Side.RIGHT, p, tol)
    st.append(_stmt("sa.viii", [eqs[0], m.residual], tol, "a+a = x2 a a+ = a a+ y2, x2 injective",
                    [x, m.witness[0]], extra=_full_col_rank(x, tol) and m.solvable))

    m1 = sandwich_solvable(a, q, ad, tol)
    m2 = sandwich_solvable(ad, p, a, tol)
    st.append(_stmt("sa.ix", [m1.residual, m2.residual], tol, "a+a = a z1 a+ and a a+ = a+ z2 a",
                    m1.witness + m2.witness, extra=m1.solvable and m2.solvable))

    return EpReport(direct.ep, direct.residual, st)


# ---------------------------------------------------------------------------
# weight symmetry and decompositions

def weight_swap_suite(a, e: Weight, f: Weight, tol: Tolerance = DEFAULT_TOL) -> EpReport:
    """Weighted-EP verdicts for ``(f, e)``, ``(e, e)`` and ``(f, f)`` against ``(e, f)``."""
    a = as_cmatrix(a)
    require_square(a)
    direct = is_weighted_ep(a, e, f, tol)
    fe = is_weighted_ep(a, f, e, tol)
    ee = is_weighted_ep(a, e, e, tol)
    ff = is_weighted_ep(a, f, f, tol)
    st = [
        Statement("swap.fe", fe.ep, fe.residual, "weighted EP with weights f, e"),
        Statement("swap.ee_ff", ee.ep and ff.ep, max(ee.residual, ff.residual),
                  "weighted EP with weights e, e and with f, f"),
        Statement("swap.ee", ee.ep, ee.residual, "weighted EP with weights e, e"),
        Statement("swap.ff", ff.ep, ff.residual, "weighted EP with weights f, f"),
    ]
    return EpReport(direct.ep, direct.residual, st)


class CongruenceCheck(NamedTuple):
    holds: bool
    residual: float
    checks: dict


def cstar_congruence(a, e: Weight, f: Weight, tol: Tolerance = DEFAULT_TOL) -> CongruenceCheck:
    """Hilbert-space characterization with ``P = a a^+_{e,f}``.

    Requires ``e^{-1} P* e = P``, ``f^{-1} P* f = P`` and that ``a`` and
    ``a+`` are block diagonal ``T1 + 0`` / ``T1^{-1} + 0`` along
    ``range(P) + null(P)``.  ``P`` is forced: any idempotent giving those
    block forms equals ``a a+``.
    """
    a = as_cmatrix(a)
    require_square(a)
    if e.ctx.kind != "l2" or f.ctx.kind != "l2":
        raise ValueError("congruence characterization needs the l2 norm context")
    n = a.shape[0]
    ad = wmp_inverse(a, e, f, tol).require_valid()
    p = a @ ad
    cp = identity(n) - p
    checks = {
        "E^-1 P* E = P": _gap(e.u_inv @ p.conj().T @ e.u, p),
        "F^-1 P* F = P": _gap(f.u_inv @ p.conj().T @ f.u, p),
        "a (1-P) = 0": _zero(a @ cp, a, cp),
        "(1-P) a = 0": _zero(cp @ a, cp, a),
        "a+ (1-P) = 0": _zero(ad @ cp, ad, cp),
        "(1-P) a+ = 0": _zero(cp @ ad, cp, ad),
    }
    res = max(checks.values())
    ok = res <= tol.residual_rel and rank(a, tol) == _rank(p, tol)
    return CongruenceCheck(ok, res, checks)


def cstar_congruence_check(a, e: Weight, f: Weight, tol: Tolerance = DEFAULT_TOL) -> bool:
    return cstar_congruence(a, e, f, tol).holds


def decomposition_suite(a, e: Weight, f: Weight, tol: Tolerance = DEFAULT_TOL) -> EpReport:
    """Block, corner-algebra, congruence and group-inverse characterizations."""
    a = as_cmatrix(a)
    require_square(a)
    direct = is_weighted_ep(a, e, f, tol)
    ad = direct.a_dag
    st = []

    blk = block_decompose(a, ad, e, f, tol)
    res = max(float(v) for k, (_, v) in blk.checks.items() if k != "t1 invertible")
    st.append(Statement("decomp.block", blk.verified, res,
                        "a = J(T1+0)J^-1, a+ = J(T1^-1+0)J^-1, Q1 in H(A^e), Q2 in H(A^f)",
                        [blk.j, blk.t1]))

    can = corner_decompose(a, ad, e, f, tol)
    ok = all(v for v, _ in can.checks.values())
    res = max(float(r) for _, r in can.checks.values())
    st.append(Statement("decomp.corner", ok, res,
                        "a = c pap c^-1, cpc^-1 in H(A^e) and H(A^f), pap invertible in pAp",
                        [can.c, can.p]))

    if e.ctx.kind == "l2":
        cg = cstar_congruence(a, e, f, tol)
        st.append(Statement("decomp.congruence", cg.holds, cg.residual,
                            "E^-1 P* E = P = F^-1 P* F with block forms"))

    try:
        g = group_inverse(a, tol)
    except GroupInverseError:
        st.append(Statement("group.hermitian", False, float("inf"),
                            "group invertible with a a# in H(A^e), a# a in H(A^f)"))
    else:
        h1 = is_hermitian_weighted(a @ g, e, tol=tol)
        h2 = is_hermitian_weighted(g @ a, f, tol=tol)
        st.append(Statement("group.hermitian", h1.hermitian and h2.hermitian,
                            max(h1.deviation, h2.deviation),
                            "group invertible with a a# in H(A^e), a# a in H(A^f)", [g]))
    return EpReport(direct.ep, direct.residual, st)


def full_report(a, e: Weight, f: Weight, tol: Tolerance = DEFAULT_TOL,
                inner: Optional[Weight] = None, fr: Optional[FullRankFactorization] = None) -> EpReport:
    """All suites merged.  ``inner`` is the ``r x r`` weight of the full-rank
    factorization (identity when omitted)."""
    a = as_cmatrix(a)
    fr = full_rank_factorize(a, tol) if fr is None else fr
    if inner is None:
        inner = Weight.identity(max(fr.r, 1), e.ctx)
    return merge_reports(
        ep_statement_suite_bc(a, fr, e, inner, f, tol),
        ep_statement_suite_sa(a, e, f, tol),
        weight_swap_suite(a, e, f, tol),
        decomposition_suite(a, e, f, tol),
    )


# ---------------------------------------------------------------------------
# block-form instances

def block_form_statements(t1, j, e: Weight, f: Weight, tol: Tolerance = DEFAULT_TOL) -> dict:
    """For ``T = J (T1 + 0) J^{-1}`` and ``T' = J (T1^{-1} + 0) J^{-1}``
    return the three verdicts ``{"mp": ..., "ep": ..., "herm": ...}``:
    weighted MP invertible with inverse ``T'``; weighted EP with inverse
    ``T'``; ``Q1 in H(A^e)`` and ``Q2 in H(A^f)``.
    """
    t1 = as_cmatrix(t1, "t1")
    j = as_cmatrix(j, "j")
    n, k = j.shape[0], t1.shape[0]
    j_inv = np.linalg.inv(j)

    def embed(x):
        out = np.zeros((n, n), dtype=np.complex128)
        out[:k, :k] = x
        return j @ out @ j_inv

    t = embed(t1)
    t_prime = embed(np.linalg.inv(t1))
    q1 = embed(identity(k))
    q2 = identity(n) - q1
    res = wmp_inverse(t, e, f, tol)
    matches = res.valid and _gap(res.pinv, t_prime) <= tol.residual_rel
    ep = matches and weighted_ep_residual(t, res.pinv) <= tol.residual_rel
    herm = (is_hermitian_weighted(q1, e, tol=tol).hermitian and
            is_hermitian_weighted(q2, f, tol=tol).hermitian)
    return {"mp": bool(matches), "ep": bool(ep), "herm": bool(herm)}


# ---------------------------------------------------------------------------
# instance generation

def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_pd(n: int, rng: np.random.Generator, lo: float = 0.5, hi: float = 3.0) -> np.ndarray:
    """Hermitian positive definite matrix with spectrum in ``[lo, hi]``."""
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    q = random_unitary(n, rng)
    m = (q * rng.uniform(lo, hi, n)) @ q.conj().T
    return (m + m.conj().T) / 2


def _random_core(k: int, rng, lo=0.5, hi=2.0) -> np.ndarray:
    if k == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    return (random_unitary(k, rng) * rng.uniform(lo, hi, k)) @ random_unitary(k, rng)


def _blockdiag(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    k, m = x.shape[0], y.shape[0]
    out = np.zeros((k + m, k + m), dtype=np.complex128)
    out[:k, :k] = x
    out[k:, k:] = y
    return out


class Instance(NamedTuple):
    a: np.ndarray
    e: Weight
    f: Weight


def generate_instance(n: int, rank: int, ep: bool, seed, general: bool = False,
                      tol: Tolerance = DEFAULT_TOL, kind: Optional[str] = None) -> Instance:
    """Random ``(a, e, f)`` that is weighted EP (``ep=True``) or not.

    With an orthonormal basis ``u`` and ``p`` the coordinate projection onto
    the first ``rank`` axes, the weights are block diagonal in ``u``'s basis
    and ``a = u p K p u*`` for a random invertible core ``K``.  With
    ``general=True`` the weight ``e`` is an arbitrary positive matrix,
    ``f = e^{1/2} g e^{1/2}`` with ``g`` block diagonal, and the similarity
    is ``e^{-1/2} u``, which makes ``a a+`` an oblique idempotent.

    Non-EP instances add an off-block term: ``kind="oblique"`` keeps the
    core invertible (group invertible, not weighted EP), ``kind="index2"``
    makes ``rank(a^2) < rank(a)``.  They need ``1 <= rank <= n - 1``.
    Output is deterministic in ``seed`` (anything ``default_rng`` accepts).
    """
    if not 0 <= rank <= n:
        raise ValueError(f"rank must be in [0, {n}], got {rank}")
    if not ep and not 1 <= rank <= n - 1:
        raise ValueError("non-EP instances need 1 <= rank <= n - 1")
    rng = np.random.default_rng(seed)
    if kind is None and not ep:
        kind = "oblique" if rng.random() < 0.6 else "index2"
    for _ in range(100):
        u = random_unitary(n, rng)
        g_e = u @ _blockdiag(random_pd(rank, rng), random_pd(n - rank, rng)) @ u.conj().T
        g_f = u @ _blockdiag(random_pd(rank, rng), random_pd(n - rank, rng)) @ u.conj().T
        if general:
            e_mat = random_pd(n, rng)
            e = Weight.from_matrix(e_mat, tol=tol)
            f = Weight.from_matrix(e.u_half @ g_f @ e.u_half, tol=tol)
            c = e.u_half_inv @ u
        else:
            e = Weight.from_matrix(g_e, tol=tol)
            f = Weight.from_matrix(g_f, tol=tol)
            c = u
        k = _random_core(rank, rng)
        if ep:
            from wep.factor import ep_synthesize_from_decomposition

            p = _blockdiag(identity(rank), np.zeros((n - rank, n - rank)))
            seed_core = _blockdiag(k, rng.standard_normal((n - rank, n - rank)) + 0j)
            a = ep_synthesize_from_decomposition(c, p, seed_core, e, f, tol)
            return Instance(a, e, f)
        top = np.zeros((n, n), dtype=np.complex128)
        if kind == "index2":
            # singular core with [K N] of full row rank
            w, s_, vh = np.linalg.svd(k)
            s_[-1] = 0.0
            k = (w * s_) @ vh
        top[:rank, :rank] = k
        top[:rank, rank:] = rng.standard_normal((rank, n - rank)) + 1j * rng.standard_normal((rank, n - rank))
        a = c @ top @ np.linalg.inv(c)
        if kind == "index2" and _rank(a, tol) != rank:
            continue
        res = wmp_inverse(a, e, f, tol)
        if res.valid and weighted_ep_residual(a, res.pinv) > 10 * tol.residual_rel:
            return Instance(a, e, f)
    raise RuntimeError("could not draw a separated non-EP instance")
