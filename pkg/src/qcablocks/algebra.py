"""Finite-dimensional matrix *-algebras: closure from generators, centers,
maximal projector families, and the constructive tensor-factor theorems.

An algebra is held as an orthonormal basis (Hilbert-Schmidt inner product)
of its linear span, which is closed under products and adjoints.  The two
factorization routines produce a unitary change of basis under which the
algebra becomes M_p ⊗ I_q (one factor) or the pair M_p ⊗ I_q / I_p ⊗ M_q
(two commuting factors).

All randomized steps draw from a seeded generator and are deterministic
given the seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    NontrivialCenter,
    NotCommuting,
    NotGenerating,
    NumericalFailure,
)
from .linalg import (
    dagger,
    hs_norm,
    localization_residual,
    max_norm,
    partial_trace,
    phase_fix,
    validate_shape,
)

# Rank / nullspace decisions are made on singular values relative to the
# largest one.
RANK_RATIO = 1e-8
# Eigenvalue clusters of sampled Hermitian elements are split when the gap
# exceeds this fraction of the spectral radius.
CLUSTER_GAP_RATIO = 1e-6
MAX_SAMPLE_RETRIES = 6


@dataclass(frozen=True)
class GeneratedAlgebra:
    """A matrix *-algebra: generators plus an HS-orthonormal closure basis.

    ``basis`` is a stacked array of shape (dim, n, n).  The span of the
    basis contains the identity and is closed under +, scalar, product and
    adjoint (up to the closure tolerance used when it was built).
    """

    ambient_dim: int
    generators: tuple[np.ndarray, ...]
    basis: np.ndarray

    @property
    def dimension(self) -> int:
        return self.basis.shape[0]

    def project_coeffs(self, m: np.ndarray) -> np.ndarray:
        """Coefficients of the HS-orthogonal projection of m onto the span."""
        return self.basis.conj().reshape(self.dimension, -1) @ np.asarray(m).ravel()

    def projection_residual(self, m: np.ndarray) -> float:
        """Max-norm distance of m from the span of the basis."""
        coeffs = self.project_coeffs(m)
        approx = np.tensordot(coeffs, self.basis, axes=(0, 0))
        return max_norm(np.asarray(m) - approx)

    def contains(self, m: np.ndarray, tol: float = 1e-8) -> bool:
        return self.projection_residual(m) <= tol

    def random_hermitian(self, rng: np.random.Generator) -> np.ndarray:
        """A Gaussian random Hermitian element of the algebra."""
        coeff = rng.standard_normal(self.dimension) + 1j * rng.standard_normal(self.dimension)
        m = np.tensordot(coeff, self.basis, axes=(0, 0))
        return (m + dagger(m)) / 2.0


@dataclass(frozen=True)
class ProjectorFamily:
    """Orthogonal projectors in an algebra summing to the identity, all of
    equal rank, with each compression P_i A P_i one-dimensional."""

    projectors: np.ndarray  # (count, n, n)
    ranks: tuple[int, ...]

    @property
    def count(self) -> int:
        return self.projectors.shape[0]


@dataclass(frozen=True)
class Factorization:
    """Unitary u of size pq x pq exhibiting a tensor-factor structure."""

    u: np.ndarray
    p: int
    q: int


def _orthonormal_rows(stack: np.ndarray, floor: float) -> np.ndarray:
    """Orthonormal basis (as rows) of the row space of ``stack``, keeping
    singular directions above ``floor``."""
    if stack.shape[0] == 0:
        return stack
    _, s, vh = np.linalg.svd(stack, full_matrices=False)
    return vh[s > floor]


def _check_square(mats, n: int) -> list[np.ndarray]:
    out = []
    for m in mats:
        a = np.asarray(m, dtype=np.complex128)
        if a.shape != (n, n):
            raise DimensionMismatch(f"generator of shape {a.shape}, expected ({n}, {n})")
        out.append(a)
    return out


def close(generators, n: int, rank_ratio: float = RANK_RATIO) -> GeneratedAlgebra:
    """Smallest *-algebra containing the generators and the identity.

    Breadth-first span growth: orthonormalize generators, adjoints and I,
    then repeatedly add the orthogonal complement of all pairwise products
    until no singular value above the rank threshold emerges.
    """
    gens = _check_square(generators, n)
    seed = gens + [dagger(g) for g in gens] + [np.eye(n, dtype=np.complex128)]
    stack = np.stack([m.ravel() for m in seed])
    scale = max(float(np.max(np.abs(np.linalg.svd(stack, compute_uv=False)))), 1.0)
    floor = rank_ratio * scale
    basis = _orthonormal_rows(stack, floor)
    fresh = basis  # directions whose products have not been formed yet
    while fresh.shape[0] > 0:
        b = basis.reshape(-1, n, n)
        k = b.shape[0]
        if k >= n * n:
            break
        f = fresh.reshape(-1, n, n)
        # products of older directions among themselves are already in the
        # span from the previous round; only pairs touching a fresh
        # direction can leave it
        prods = np.concatenate([
            np.einsum("aij,bjk->abik", b, f).reshape(-1, n * n),
            np.einsum("aij,bjk->abik", f, b).reshape(-1, n * n),
        ])
        coeffs = basis.conj() @ prods.T
        resid = prods - coeffs.T @ basis
        prod_scale = float(np.max(np.abs(resid))) * n if resid.size else 0.0
        # the residual rows are orthogonal to the current span, so the new
        # directions extend the orthonormal basis directly
        fresh = _orthonormal_rows(resid, max(floor, rank_ratio * max(prod_scale, 1.0)))
        if fresh.shape[0] == 0:
            break
        basis = np.vstack([basis, fresh])
    # one final pass curbs drift accumulated across rounds
    basis = _orthonormal_rows(basis, floor)
    return GeneratedAlgebra(n, tuple(gens), basis.reshape(-1, n, n))


def span_algebra(elements, n: int, generators=None) -> GeneratedAlgebra:
    """Algebra whose span is already product/adjoint-closed (e.g. the image
    of a full matrix algebra under a *-isomorphism).  Orthonormalizes the
    given spanning set without running the closure iteration.

    Wide stacks (few vectors of large dimension) are orthonormalized
    through the Gram matrix, which costs two matrix products instead of a
    large SVD; the spanning sets seen here are well conditioned, so the
    reduced rank resolution of squared singular values does not matter."""
    mats = _check_square(elements, n)
    stack = np.stack([m.ravel() for m in mats])
    k = stack.shape[0]
    if stack.shape[1] > 64 * k:
        gram = stack @ dagger(stack)
        vals, vecs = np.linalg.eigh(gram)
        scale = max(float(vals[-1]), 1.0)
        keep = vals > (RANK_RATIO**2) * scale
        basis = (vecs[:, keep] / np.sqrt(vals[keep])).T.conj() @ stack
    else:
        scale = max(float(np.max(np.abs(np.linalg.svd(stack, compute_uv=False)))), 1.0)
        basis = _orthonormal_rows(stack, RANK_RATIO * scale)
    gens = tuple(mats) if generators is None else tuple(generators)
    return GeneratedAlgebra(n, gens, basis.reshape(-1, n, n))


def center(alg: GeneratedAlgebra) -> GeneratedAlgebra:
    """Elements of the algebra commuting with the whole algebra.

    Computed as the nullspace of the stacked commutator maps in the
    algebra's own coordinates.
    """
    b = alg.basis
    k, n = b.shape[0], alg.ambient_dim
    comm = np.einsum("aij,bjk->abik", b, b) - np.einsum("bij,ajk->abik", b, b)
    m = comm.reshape(k, k * n * n).T  # column a = stacked commutators of b_a
    if m.shape[0] >= k:
        _, s, vh = np.linalg.svd(m, full_matrices=False)
        smax = float(s[0]) if s.size else 0.0
        null_mask = s <= RANK_RATIO * max(smax, 1.0)
        coeffs = vh.conj()[null_mask]
    else:  # fewer rows than coefficients: the nullspace includes vh's tail
        _, s, vh = np.linalg.svd(m, full_matrices=True)
        smax = float(s[0]) if s.size else 0.0
        null_mask = np.ones(k, dtype=bool)
        null_mask[: s.size] = s <= RANK_RATIO * max(smax, 1.0)
        coeffs = vh.conj()[null_mask]
    cbasis = np.einsum("ma,aij->mij", coeffs, b)
    return GeneratedAlgebra(n, tuple(cbasis), cbasis)


def _cluster_eigvals(vals: np.ndarray, gap: float) -> list[np.ndarray]:
    """Indices of eigenvalues grouped into clusters separated by > gap."""
    order = np.argsort(vals)
    groups: list[list[int]] = [[order[0]]]
    for i in order[1:]:
        if vals[i] - vals[groups[-1][-1]] > gap:
            groups.append([i])
        else:
            groups[-1].append(i)
    return [np.array(g) for g in groups]


def _spectral_projectors(h: np.ndarray) -> list[np.ndarray]:
    """Projectors onto eigenvalue clusters of a Hermitian matrix."""
    vals, vecs = np.linalg.eigh(h)
    radius = max(float(np.max(np.abs(vals))), 1.0)
    gap = CLUSTER_GAP_RATIO * radius
    return [vecs[:, g] @ dagger(vecs[:, g]) for g in _cluster_eigvals(vals, gap)]


def _range_basis(p: np.ndarray, rank: int) -> np.ndarray:
    """Orthonormal basis (columns) of the range of a projector of known rank."""
    vals, vecs = np.linalg.eigh(p)
    return vecs[:, np.argsort(vals)[::-1][:rank]]


def _compression_residual(p: np.ndarray, basis: np.ndarray, rank: int) -> float:
    """Max over algebra basis b of the distance of P b P from C.P."""
    pband = np.einsum("ij,ajk,kl->ail", p, basis, p)
    coeffs = np.einsum("aij,ji->a", pband, p) / rank
    return max_norm(pband - coeffs[:, None, None] * p)


def maximal_projector_family(alg: GeneratedAlgebra, seed: int = 0,
                             tol: float = 1e-8) -> ProjectorFamily:
    """Maximal family of orthogonal projectors inside an algebra with
    scalar center: they sum to I, have equal ranks, and each compression
    P_i A P_i is one-dimensional.

    A seeded random Hermitian element of the algebra is spectrally split;
    any block whose compression is not yet scalar is refined through the
    eigendecomposition of a violating compressed element.
    """
    if center(alg).dimension != 1:
        raise NontrivialCenter("projector family requires a scalar center")
    n = alg.ambient_dim
    rng = np.random.default_rng(seed)
    last_err: Exception | None = None
    for _ in range(MAX_SAMPLE_RETRIES):
        try:
            h = alg.random_hermitian(rng)
            projs = _spectral_projectors(h)
            projs = _refine_family(projs, alg, tol)
            ranks = [int(round(float(np.trace(p).real))) for p in projs]
            if len(set(ranks)) != 1 or sum(ranks) != n or min(ranks) < 1:
                raise NumericalFailure(f"degenerate sample: unequal ranks {ranks}")
            fam = ProjectorFamily(np.stack(projs), tuple(ranks))
            _validate_family(fam, alg, tol)
            return fam
        except NumericalFailure as err:  # degenerate sample: retry with fresh draw
            last_err = err
    raise NumericalFailure(f"projector family did not stabilize: {last_err}")


def _refine_family(projs: list[np.ndarray], alg: GeneratedAlgebra,
                   tol: float) -> list[np.ndarray]:
    basis = alg.basis
    out = list(projs)
    guard = 0
    i = 0
    while i < len(out):
        p = out[i]
        rank = int(round(float(np.trace(p).real)))
        if rank <= 0:
            raise NumericalFailure("projector collapsed to rank 0")
        if rank == 1 or _compression_residual(p, basis, rank) <= tol:
            i += 1
            continue
        guard += 1
        if guard > alg.ambient_dim * 4:
            raise NumericalFailure("projector refinement did not terminate")
        split = _split_block(p, rank, basis, tol)
        if split is None:
            raise NumericalFailure("compression violation found but block did not split")
        out[i : i + 1] = split
    return out


def _split_block(p: np.ndarray, rank: int, basis: np.ndarray, tol: float):
    """Split P along the spectrum of a compressed Hermitian violator."""
    for b in basis:
        for h in ((b + dagger(b)) / 2.0, (b - dagger(b)) / 2.0j):
            m = p @ h @ p
            c = complex(np.trace(p @ m)) / rank
            if max_norm(m - c * p) <= tol:
                continue
            cols = _range_basis(p, rank)
            hr = dagger(cols) @ m @ cols
            vals, vecs = np.linalg.eigh(hr)
            radius = max(float(np.max(np.abs(vals))), 1.0)
            groups = _cluster_eigvals(vals, CLUSTER_GAP_RATIO * radius)
            if len(groups) < 2:
                continue
            return [cols @ vecs[:, g] @ dagger(vecs[:, g]) @ dagger(cols) for g in groups]
    return None


def _validate_family(fam: ProjectorFamily, alg: GeneratedAlgebra, tol: float) -> None:
    ps = fam.projectors
    n = alg.ambient_dim
    if max_norm(np.einsum("aij,ajk->ik", ps, ps) - np.eye(n)) > 1e-6:
        raise NumericalFailure("projector family does not resolve the identity")
    for i, p in enumerate(ps):
        if max_norm(p @ p - p) > 1e-6 or max_norm(p - dagger(p)) > 1e-6:
            raise NumericalFailure(f"projector {i} is not a Hermitian idempotent")
        if _compression_residual(p, alg.basis, fam.ranks[i]) > max(tol, 1e-7):
            raise NumericalFailure(f"projector {i} compression is not scalar")


def factor_one(alg: GeneratedAlgebra, seed: int = 0, tol: float = 1e-8) -> Factorization:
    """Unitary W with W b W† of the form M ⊗ I_q for every basis element b.

    Construction: maximal projector family -> basis-aligning unitary taking
    each projector to a coordinate block -> a generic algebra element whose
    first block row is rescaled blockwise into the block-diagonal unitary
    that makes all blocks scalar.
    """
    fam = maximal_projector_family(alg, seed=seed, tol=tol)
    p_count = fam.count
    q = fam.ranks[0]
    n = alg.ambient_dim
    cols = np.hstack([_range_basis(fam.projectors[i], q) for i in range(p_count)])
    u_align = dagger(cols)
    rotated = np.einsum("ij,ajk,kl->ail", u_align, alg.basis, dagger(u_align))

    rng = np.random.default_rng((seed * 0x9E3779B1 + 0x7F4A7C15) % (2**63))
    v_blocks = None
    for _ in range(MAX_SAMPLE_RETRIES):
        coeff = rng.standard_normal(alg.dimension) + 1j * rng.standard_normal(alg.dimension)
        a = np.tensordot(coeff, rotated, axes=(0, 0))
        blocks = [a[0:q, i * q : (i + 1) * q] for i in range(p_count)]
        norms = [hs_norm(b) / np.sqrt(q) for b in blocks]
        if min(norms) > 1e-6 * max(max(norms), 1.0):
            v_blocks = [b / s for b, s in zip(blocks, norms)]
            break
    if v_blocks is None:
        raise NumericalFailure("no connecting element with all first-row blocks nonzero")

    v = np.zeros((n, n), dtype=np.complex128)
    for i, b in enumerate(v_blocks):
        v[i * q : (i + 1) * q, i * q : (i + 1) * q] = b
    w = phase_fix(v @ u_align)

    residual = factorization_residual(alg, w, p_count, q)
    if residual > tol:
        raise NumericalFailure(f"factorization residual {residual:.2e} exceeds {tol:.1e}")
    return Factorization(w, p_count, q)


def factorization_residual(alg: GeneratedAlgebra, w: np.ndarray, p: int, q: int,
                           region=(0,)) -> float:
    """Worst localization residual of the conjugated basis on the stated factor."""
    worst = 0.0
    for b in alg.basis:
        worst = max(worst, localization_residual(w @ b @ dagger(w), (p, q), region))
    return worst


def commutation_defect(a: GeneratedAlgebra, b: GeneratedAlgebra) -> float:
    """Largest max-norm commutator between basis elements of two algebras."""
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatch("algebras live in different ambient dimensions")
    ab = np.einsum("aij,bjk->abik", a.basis, b.basis)
    ba = np.einsum("bij,ajk->abik", b.basis, a.basis)
    return max_norm(ab - ba)


def factor_pair(a: GeneratedAlgebra, b: GeneratedAlgebra, seed: int = 0,
                tol: float = 1e-8, comm_tol: float = 1e-8) -> Factorization:
    """Unitary W splitting two commuting, jointly generating algebras as
    W a W† ⊆ M_p ⊗ I_q and W b W† ⊆ I_p ⊗ M_q."""
    n = a.ambient_dim
    if b.ambient_dim != n:
        raise DimensionMismatch("algebras live in different ambient dimensions")
    defect = commutation_defect(a, b)
    if defect > comm_tol:
        raise NotCommuting(f"algebras do not commute (defect {defect:.2e})")
    joint = close(list(a.basis) + list(b.basis), n)
    if joint.dimension != n * n:
        raise NotGenerating(
            f"joint closure has dimension {joint.dimension}, expected {n * n}")
    fact = factor_one(a, seed=seed, tol=tol)
    # The commutant of M_p ⊗ I_q is I_p ⊗ M_q, so the second algebra lands
    # in the complementary factor automatically; verify rather than align.
    resid_b = factorization_residual(b, fact.u, fact.p, fact.q, region=(1,))
    if resid_b > tol:
        raise NumericalFailure(
            f"second algebra misses the complementary factor (residual {resid_b:.2e})")
    return fact


def restrict(alg: GeneratedAlgebra, dims, keep) -> GeneratedAlgebra:
    """Algebra generated by the partial traces of the basis onto ``keep``."""
    dims = validate_shape(dims, alg.ambient_dim)
    traced = [partial_trace(m, dims, keep) for m in alg.basis]
    nk = traced[0].shape[0]
    return close(traced, nk)
