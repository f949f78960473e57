"""Tensor-core checks: Kronecker products, partial traces, localization."""
import numpy as np
import pytest

from qcablocks.errors import DimensionMismatch
from qcablocks import linalg as la

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def test_kron_identity():
    assert np.allclose(la.kron(np.eye(2), np.eye(2)), np.eye(4))


def test_kron_x_on_first_factor():
    m = la.kron(X, np.eye(2))
    expected = np.zeros((4, 4), dtype=complex)
    expected[0, 2] = expected[1, 3] = expected[2, 0] = expected[3, 1] = 1
    assert np.allclose(m, expected)


def test_kron_matches_index_formula():
    # Oracle: (A ⊗ B)[(i,k),(j,l)] = A[i,j] B[k,l], checked entry by entry.
    rng = np.random.default_rng(7)
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    m = la.kron(a, b)
    for i in range(3):
        for j in range(3):
            for k in range(3):
                for l in range(3):
                    assert m[3 * i + k, 3 * j + l] == pytest.approx(a[i, j] * b[k, l])


def test_partial_trace_bell_state():
    phi = np.zeros(4, dtype=complex)
    phi[0] = phi[3] = 1 / np.sqrt(2)
    rho = np.outer(phi, phi.conj())
    red = la.partial_trace(rho, (2, 2), {0})
    assert np.allclose(red, np.eye(2) / 2)


def test_partial_trace_product_oracle():
    # Tracing the second factor of A ⊗ B gives Tr(B) · A.
    rng = np.random.default_rng(11)
    for p, q in [(2, 3), (3, 2), (4, 2)]:
        a = rng.standard_normal((p, p)) + 1j * rng.standard_normal((p, p))
        b = rng.standard_normal((q, q)) + 1j * rng.standard_normal((q, q))
        out = la.partial_trace(la.kron(a, b), (p, q), {0})
        assert np.allclose(out, np.trace(b) * a)
        out1 = la.partial_trace(la.kron(a, b), (p, q), {1})
        assert np.allclose(out1, np.trace(a) * b)


def test_partial_trace_identity():
    assert np.allclose(la.partial_trace(np.eye(4), (2, 2), {1}), 2 * np.eye(2))


def test_partial_trace_preserves_trace():
    rng = np.random.default_rng(3)
    m = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
    for keep in [{0}, {1}, {2}, {0, 2}, {0, 1, 2}]:
        out = la.partial_trace(m, (2, 3, 2), keep)
        assert np.trace(out) == pytest.approx(np.trace(m))


def test_partial_trace_middle_factor():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    c = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    m = la.kron(a, b, c)
    out = la.partial_trace(m, (2, 3, 2), {1})
    assert np.allclose(out, np.trace(a) * np.trace(c) * b)


def test_partial_trace_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        la.partial_trace(np.eye(4), (2, 3), {0})


def test_is_localized_product_operator():
    assert la.is_localized(la.kron(X, np.eye(2)), (2, 2), {0})
    assert la.is_localized(la.kron(np.eye(2), Z), (2, 2), {1})


def test_is_localized_cnot_is_not():
    assert not la.is_localized(CNOT, (2, 2), {0})
    assert not la.is_localized(CNOT, (2, 2), {1})
    assert la.is_localized(CNOT, (2, 2), {0, 1})


def test_is_localized_full_region_always_true():
    rng = np.random.default_rng(9)
    m = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    assert la.localization_residual(m, (2, 2, 2), {0, 1, 2}) <= 1e-12


def test_is_localized_agrees_with_commutant_oracle():
    # Oracle: a is of the form M ⊗ I iff it commutes with every I ⊗ E_kl.
    rng = np.random.default_rng(13)
    p, q = 3, 2

    def commutant_test(a):
        for _, _, e in la.matrix_units(q):
            emb = la.kron(np.eye(p), e)
            if la.max_norm(a @ emb - emb @ a) > 1e-9:
                return False
        return True

    local = la.kron(rng.standard_normal((p, p)) + 1j * rng.standard_normal((p, p)), np.eye(q))
    assert commutant_test(local) and la.is_localized(local, (p, q), {0})

    # A Haar-ish conjugation of a local operator is almost surely non-local.
    g = rng.standard_normal((p * q, p * q)) + 1j * rng.standard_normal((p * q, p * q))
    w, _ = np.linalg.qr(g)
    moved = w @ local @ la.dagger(w)
    assert commutant_test(moved) == la.is_localized(moved, (p, q), {0})
    assert not la.is_localized(moved, (p, q), {0})


def test_localized_operators_on_disjoint_regions_commute():
    rng = np.random.default_rng(17)
    dims = (2, 3, 2)
    a = la.embed_on_factors(
        rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)), dims, {0})
    b = la.embed_on_factors(
        rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6)), dims, {1, 2})
    assert la.max_norm(a @ b - b @ a) <= 12 * 1e-9


def test_restriction_trace_morphism():
    # For A on factors {0,1} and B on factors {1,2} of a (p,q,r) space:
    # p·r·Tr_02(AB) = Tr_02(A) · Tr_02(B).
    rng = np.random.default_rng(19)
    p, q, r = 2, 3, 2
    dims = (p, q, r)
    a = la.embed_on_factors(
        rng.standard_normal((p * q, p * q)) + 1j * rng.standard_normal((p * q, p * q)),
        dims, {0, 1})
    b = la.embed_on_factors(
        rng.standard_normal((q * r, q * r)) + 1j * rng.standard_normal((q * r, q * r)),
        dims, {1, 2})
    lhs = p * r * la.partial_trace(a @ b, dims, {1})
    rhs = la.partial_trace(a, dims, {1}) @ la.partial_trace(b, dims, {1})
    assert la.max_norm(lhs - rhs) < 1e-9 * max(1.0, la.max_norm(rhs))


def test_embed_on_factors_positions():
    m = la.embed_on_factors(X, (2, 2, 2), {1})
    assert np.allclose(m, la.kron(np.eye(2), X, np.eye(2)))
    # Non-contiguous region: entries follow X[i,i'] δ_aa' δ_bb' Z[j,j'].
    m2 = la.embed_on_factors(la.kron(X, Z), (2, 3, 2, 2), {0, 3})
    expected = np.zeros((24, 24), dtype=complex)
    for i in range(2):
        for a in range(3):
            for b in range(2):
                for j in range(2):
                    for ii in range(2):
                        for jj in range(2):
                            row = ((i * 3 + a) * 2 + b) * 2 + j
                            col = ((ii * 3 + a) * 2 + b) * 2 + jj
                            expected[row, col] += X[i, ii] * Z[j, jj]
    assert np.allclose(m2, expected)


def test_dagger_and_hs_inner():
    assert la.hs_inner(X, X) == pytest.approx(2.0)
    assert np.allclose(la.dagger(np.array([[1, 1j], [0, 1]])),
                       np.array([[1, 0], [-1j, 1]]))


def test_is_unitary():
    assert la.is_unitary(np.eye(5))
    assert not la.is_unitary(np.diag([1.0, 2.0]))
    with pytest.raises(DimensionMismatch):
        la.is_unitary(np.ones((2, 3)))


def test_trace_distance_extremes():
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    rho1 = np.diag([0.0, 1.0]).astype(complex)
    assert la.trace_distance(rho0, rho1) == pytest.approx(1.0)
    assert la.trace_distance(rho0, rho0) == pytest.approx(0.0)


def test_phase_fix_canonicalizes():
    rng = np.random.default_rng(23)
    m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    for theta in (0.3, 1.1, -2.0):
        fixed = la.phase_fix(np.exp(1j * theta) * m)
        assert np.allclose(fixed, la.phase_fix(m))
