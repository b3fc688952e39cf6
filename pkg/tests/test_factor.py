import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import crandn, low_rank, random_weight, rel
from wep.epcheck import generate_instance, is_weighted_ep, random_unitary
from wep.factor import (
    CornerSingularError,
    HermitianPreconditionError,
    NotWeightedEPError,
    ReverseOrderError,
    blocks_through_maps_check,
    canonical_ep_decomposition,
    ep_block_decomposition,
    ep_synthesize_from_decomposition,
    factor_parts_wmp,
    full_rank_factorize,
    pAp_inverse,
    reverse_order_wmp,
)
from wep.hermitian import Weight
from wep.matcore import rank, subspace_gap
from wep.wmp import mp_inverse, wmp_inverse

I2, I3 = Weight.identity(2), Weight.identity(3)


# --- full-rank factorization ---------------------------------------------

def test_full_rank_examples(rng):
    fr = full_rank_factorize(np.eye(3))
    assert fr.r == 3 and rel(fr.product, np.eye(3)) < 1e-15
    fr = full_rank_factorize(np.array([[1, 2], [2, 4]]))
    assert fr.r == 1 and fr.b.shape == (2, 1) and fr.c.shape == (1, 2)
    assert rel(fr.product, np.array([[1, 2], [2, 4]])) < 1e-14
    fr = full_rank_factorize(np.zeros((3, 3)))
    assert fr.degenerate and fr.b.shape == (3, 0) and fr.c.shape == (0, 3)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 8), data=st.data())
def test_full_rank_invariants(seed, n, data):
    r = data.draw(st.integers(0, n))
    a = low_rank(np.random.default_rng(seed), n, n, r)
    fr = full_rank_factorize(a)
    assert fr.r == r
    if r:
        assert rank(fr.b) == rank(fr.c) == r
    assert rel(fr.product, a) < 1e-12


# --- factor parts and reverse order --------------------------------------

def test_factor_parts_invertible(rng):
    a = crandn(rng, 3, 3) + 3 * np.eye(3)
    fr = full_rank_factorize(a)
    parts = factor_parts_wmp(a, fr, I3, I3, I3)
    assert parts.valid
    assert rel(parts.b_dag, np.linalg.inv(fr.b)) < 1e-12
    assert rel(parts.c_dag, np.linalg.inv(fr.c)) < 1e-12


def test_factor_parts_projection_identity_weights(rng):
    q = random_unitary(4, rng)[:, :2]
    a = q @ q.conj().T
    fr = full_rank_factorize(a)
    parts = factor_parts_wmp(a, fr, Weight.identity(4), Weight.identity(2), Weight.identity(4))
    assert parts.valid
    assert rel(parts.b_dag, fr.b.conj().T) < 1e-12
    assert rel(parts.c_dag, fr.c.conj().T) < 1e-12


def _weights(rng, n, r):
    return random_weight(rng, n), random_weight(rng, r), random_weight(rng, n)


def test_factor_identities_random(rng):
    for _ in range(25):
        n = int(rng.integers(2, 8))
        r = int(rng.integers(1, n + 1))
        a = low_rank(rng, n, n, r)
        fr = full_rank_factorize(a)
        e, f, h = _weights(rng, n, r)
        parts = factor_parts_wmp(a, fr, e, f, h)
        assert parts.valid
        a_dag = wmp_inverse(a, e, h).require_valid()
        # each side independently: b+ and c+ straight from the weighted inverse
        b_dag = wmp_inverse(fr.b, e, f).require_valid()
        c_dag = wmp_inverse(fr.c, f, h).require_valid()
        assert rel(parts.b_dag, b_dag) < 1e-9 and rel(parts.c_dag, c_dag) < 1e-9
        assert rel(a @ a_dag, fr.b @ b_dag) < 1e-9
        assert rel(a_dag @ a, c_dag @ fr.c) < 1e-9
        assert rel(a @ c_dag, fr.b) < 1e-9
        assert rel(b_dag @ a, fr.c) < 1e-9
        assert rel(reverse_order_wmp(fr, b_dag, c_dag, a_dag), a_dag) < 1e-9


def test_reverse_order_examples():
    fr = full_rank_factorize(np.eye(2))
    parts = factor_parts_wmp(np.eye(2), fr, I2, I2, I2)
    assert rel(reverse_order_wmp(fr, parts.b_dag, parts.c_dag), np.eye(2)) < 1e-14
    a = np.diag([3.0, 0.0])
    fr = full_rank_factorize(a)
    one = Weight.identity(1)
    parts = factor_parts_wmp(a, fr, I2, one, I2)
    assert rel(reverse_order_wmp(fr, parts.b_dag, parts.c_dag), np.diag([1 / 3, 0])) < 1e-14


def test_reverse_order_mismatch_raises(rng):
    a = low_rank(rng, 4, 4, 2)
    fr = full_rank_factorize(a)
    parts = factor_parts_wmp(a, fr, Weight.identity(4), Weight.identity(2), Weight.identity(4))
    with pytest.raises(ReverseOrderError):
        reverse_order_wmp(fr, parts.b_dag, parts.c_dag, a_dag=2 * mp_inverse(a))


def test_factor_parts_inner_weight_shape(rng):
    a = low_rank(rng, 4, 4, 2)
    with pytest.raises(ValueError):
        factor_parts_wmp(a, full_rank_factorize(a), Weight.identity(4), Weight.identity(3),
                         Weight.identity(4))


# --- block decomposition --------------------------------------------------

def test_block_examples(rng):
    blk = ep_block_decomposition(np.diag([2.0, 0.0]), I2, I2)
    assert blk.verified
    assert rel(blk.t1, np.array([[2.0]])) < 1e-14
    assert rel(np.abs(blk.j), np.eye(2)) < 1e-14
    q = random_unitary(3, rng)[:, :2]
    blk = ep_block_decomposition(q @ q.conj().T, I3, I3)
    assert blk.verified and rel(blk.t1, np.eye(2)) < 1e-12


def test_block_on_generated_instances():
    for seed in range(40):
        n = 1 + seed % 7
        inst = generate_instance(n, seed % (n + 1), True, seed, general=seed % 3 == 0)
        blk = ep_block_decomposition(inst.a, inst.e, inst.f)
        assert blk.verified, blk.checks
        assert len(blk.checks) == 5
        x1, x2, t1, j = blk
        k = x1.shape[1]
        # independent reconstruction
        mid = np.zeros((n, n), dtype=complex)
        mid[:k, :k] = t1
        assert rel(j @ mid @ np.linalg.inv(j), inst.a) <= 1e-9


def test_block_rejects_non_ep():
    with pytest.raises(NotWeightedEPError):
        ep_block_decomposition(np.array([[0, 1], [0, 0]]), I2, I2)


def test_blocks_through_maps(rng):
    for seed in range(10):
        inst = generate_instance(5, 1 + seed % 4, True, seed, general=True)
        blk = ep_block_decomposition(inst.a, inst.e, inst.f)
        j = blk.j
        p = inst.a @ wmp_inverse(inst.a, inst.e, inst.f).pinv
        out = blocks_through_maps_check(inst.a, j, blk.t1, np.linalg.inv(j), p, inst.e, inst.f)
        assert all(out.values()), out
        assert subspace_gap(p, blk.x1_basis) < 1e-9
        # a p that is not hermitian in the weighted algebras breaks the predicate
        z = crandn(rng, blk.x1_basis.shape[1], 5)
        oblique = blk.x1_basis @ np.linalg.solve(z @ blk.x1_basis, z)
        out = blocks_through_maps_check(inst.a, j, blk.t1, np.linalg.inv(j), oblique,
                                        inst.e, inst.f)
        assert not all(out.values())


def test_blocks_through_maps_rectangular_s_u(rng):
    # s injective 4x3 and u surjective 3x4 with a = s (t1 + 0) u
    s = crandn(rng, 4, 3)
    u = crandn(rng, 3, 4)
    t1 = crandn(rng, 2, 2) + 2 * np.eye(2)
    mid = np.zeros((3, 3), dtype=complex)
    mid[:2, :2] = t1
    a = s @ mid @ u
    e = Weight.identity(4)
    p = a @ wmp_inverse(a, e, e).pinv
    out = blocks_through_maps_check(a, s, t1, u, p, e, e)
    assert out["s injective"] and out["u surjective"] and out["t1 invertible"]
    assert out["a = s(t1+0)u"] and out["range(p) = s(X1+0)"]
    # a is EP exactly when null(p) matches u^{-1}(0 + X2) as well
    ep = is_weighted_ep(a, e, e).ep
    assert out["null(p) = u^-1(0+X2)"] == ep


# --- corner algebra -------------------------------------------------------

def test_pAp_inverse_examples(rng):
    a = crandn(rng, 3, 3) + 3 * np.eye(3)
    assert rel(pAp_inverse(a, np.eye(3)), np.linalg.inv(a)) < 1e-12
    x = pAp_inverse(np.diag([5.0, 0.0]), np.diag([1.0, 0.0]))
    assert rel(x, np.diag([0.2, 0.0])) < 1e-14
    with pytest.raises(CornerSingularError, match="not invertible in corner algebra"):
        pAp_inverse(np.diag([0.0, 1.0]), np.diag([1.0, 0.0]))
    with pytest.raises(ValueError):
        pAp_inverse(np.eye(2), 2 * np.eye(2))


def test_pAp_inverse_oblique(rng):
    for _ in range(20):
        n, k = 5, 3
        basis = crandn(rng, n, k)
        z = crandn(rng, k, n)
        p = basis @ np.linalg.solve(z @ basis, z)
        a = crandn(rng, n, n)
        x = pAp_inverse(a, p)
        pap = p @ a @ p
        assert rel(pap @ x, p) < 1e-9 and rel(x @ pap, p) < 1e-9 and rel(p @ x @ p, x) < 1e-9


# --- canonical decomposition ---------------------------------------------

def test_canonical_examples(rng):
    a = crandn(rng, 3, 3) + 3 * np.eye(3)
    dec = canonical_ep_decomposition(a, random_weight(rng, 3), random_weight(rng, 3))
    assert rel(dec.p, np.eye(3)) < 1e-10 and rel(dec.core, a) < 1e-10
    assert all(ok for ok, _ in dec.checks.values())
    dec = canonical_ep_decomposition(np.zeros((2, 2)), I2, I2)
    assert dec.degenerate and np.all(dec.p == 0) and np.all(dec.core == 0)


def test_canonical_on_generated_instances():
    for seed in range(30):
        n = 2 + seed % 6
        inst = generate_instance(n, seed % (n + 1), True, seed, general=seed % 2 == 0)
        dec = canonical_ep_decomposition(inst.a, inst.e, inst.f)
        assert all(ok for ok, _ in dec.checks.values()), dec.checks
        assert rel(dec.c, np.eye(n)) == 0
        s = wmp_inverse(inst.a, inst.e, inst.f).pinv
        assert rel(dec.p, inst.a @ s) < 1e-12
        assert rel(dec.p, s @ inst.a) <= 1e-9
        assert rel(dec.c @ dec.p @ inst.a @ dec.p @ np.linalg.inv(dec.c), inst.a) <= 1e-9


def test_canonical_rejects_non_ep():
    with pytest.raises(NotWeightedEPError):
        canonical_ep_decomposition(np.array([[0, 1], [0, 0]]), I2, I2)


# --- synthesis ------------------------------------------------------------

def test_synthesize_examples(rng):
    core = crandn(rng, 3, 3) + 3 * np.eye(3)
    a = ep_synthesize_from_decomposition(np.eye(3), np.eye(3), core, I3, I3)
    assert rel(a, core) < 1e-15
    q = random_unitary(3, rng)[:, :2]
    p = q @ q.conj().T
    a = ep_synthesize_from_decomposition(np.eye(3), p, crandn(rng, 3, 3), I3, I3)
    s = mp_inverse(a)
    assert rel(a @ s, s @ a) < 1e-10


def test_synthesize_block_weights_round_trip(rng):
    for _ in range(15):
        n, k = 5, int(rng.integers(1, 5))
        u = random_unitary(n, rng)
        blk = lambda: u @ np.block([[_pd(rng, k), np.zeros((k, n - k))],
                                    [np.zeros((n - k, k)), _pd(rng, n - k)]]) @ u.conj().T
        e, f = Weight.from_matrix(blk()), Weight.from_matrix(blk())
        p = np.diag([1.0] * k + [0.0] * (n - k))
        a = ep_synthesize_from_decomposition(u, p, crandn(rng, n, n), e, f)
        assert is_weighted_ep(a, e, f).ep
        dec = canonical_ep_decomposition(a, e, f)
        assert rel(dec.p, a @ wmp_inverse(a, e, f).pinv) < 1e-12
        assert rel(dec.p, u @ p @ u.conj().T) < 1e-9


def _pd(rng, k):
    m = crandn(rng, k, k)
    return m @ m.conj().T + np.eye(k)


def test_synthesize_precondition_errors(rng):
    oblique = np.array([[1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(HermitianPreconditionError) as info:
        ep_synthesize_from_decomposition(np.eye(2), oblique, np.eye(2), I2, I2)
    assert info.value.algebra == "A^e"
    e = Weight.from_matrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
    p = np.diag([1.0, 0.0])
    with pytest.raises(HermitianPreconditionError) as info:
        ep_synthesize_from_decomposition(np.eye(2), p, np.eye(2), I2, e)
    assert info.value.algebra == "A^f"
    with pytest.raises(CornerSingularError):
        ep_synthesize_from_decomposition(np.eye(2), p, np.diag([0.0, 1.0]), I2, I2)
