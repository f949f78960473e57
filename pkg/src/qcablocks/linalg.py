"""Dense complex matrix utilities: Kronecker products, partial traces,
localization tests, and Hilbert-Schmidt geometry.

All functions treat matrices as numpy arrays of complex128.  A "factor
shape" is a tuple of positive integers whose product equals the ambient
dimension; factor 0 is the leftmost (most significant) Kronecker factor.
Everything here is pure and safe to call concurrently.
"""
from __future__ import annotations

from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch

DEFAULT_TOL = 1e-9


def as_matrix(m) -> np.ndarray:
    """Coerce to a 2-D complex128 array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got ndim={a.ndim}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    """Adjoint (conjugate transpose)."""
    return np.asarray(m).conj().T


def kron(*factors: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices, left factor most significant."""
    if not factors:
        raise DimensionMismatch("kron needs at least one factor")
    return reduce(np.kron, factors)


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product Tr(a† b)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def hs_norm(a: np.ndarray) -> float:
    """Hilbert-Schmidt (Frobenius) norm."""
    return float(np.linalg.norm(a))


def max_norm(a: np.ndarray) -> float:
    """Entrywise max-modulus norm used for all tolerance checks."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_unitary(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``max |m† m - I| <= tol``.  Raises on non-square input."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"unitarity needs a square matrix, got {m.shape}")
    n = m.shape[0]
    return max_norm(dagger(m) @ m - np.eye(n)) <= tol


def validate_shape(dims: Sequence[int], n: int) -> tuple[int, ...]:
    """Check that a factor shape multiplies out to the ambient dimension n."""
    dims = tuple(int(d) for d in dims)
    if any(d <= 0 for d in dims):
        raise DimensionMismatch(f"factor dims must be positive, got {dims}")
    if int(np.prod(dims)) != n:
        raise DimensionMismatch(f"factor shape {dims} does not multiply to {n}")
    return dims


def _normalize_region(dims: Sequence[int], region: Iterable[int]) -> tuple[int, ...]:
    w = len(dims)
    keep = sorted(set(int(i) for i in region))
    if any(i < 0 or i >= w for i in keep):
        raise DimensionMismatch(f"region {keep} out of range for {w} factors")
    return tuple(keep)


def partial_trace(m: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out the factors not listed in ``keep``; kept factor order is
    preserved.  ``dims`` is the factor shape of the square matrix ``m``."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch("partial_trace needs a square matrix")
    dims = validate_shape(dims, m.shape[0])
    keep = _normalize_region(dims, keep)
    w = len(dims)
    t = m.reshape(dims + dims)
    row_labels = list(range(w))
    col_labels = [w + i if i in keep else i for i in range(w)]
    out_labels = [i for i in keep] + [w + i for i in keep]
    out = np.einsum(t, row_labels + col_labels, out_labels)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return out.reshape(dk, dk)


def embed_on_factors(op: np.ndarray, dims: Sequence[int], region: Iterable[int]) -> np.ndarray:
    """Embed an operator acting on the listed factors (in increasing position
    order) into the full space, identity on the complement."""
    op = as_matrix(op)
    dims = tuple(int(d) for d in dims)
    region = _normalize_region(dims, region)
    kept_dims = tuple(dims[i] for i in region)
    dk = int(np.prod(kept_dims)) if kept_dims else 1
    if op.shape != (dk, dk):
        raise DimensionMismatch(f"operator shape {op.shape} does not match region dims {kept_dims}")
    comp = [i for i in range(len(dims)) if i not in region]
    t = op.reshape(kept_dims + kept_dims)
    # Axis bookkeeping: after the outer products the axes are
    # (kept rows..., kept cols..., r_j, c_j for each complement factor j).
    for j in comp:
        t = np.tensordot(t, np.eye(dims[j]), axes=0)
    w = len(dims)
    k = len(region)
    row_axis = {}
    col_axis = {}
    for a, i in enumerate(region):
        row_axis[i] = a
        col_axis[i] = k + a
    for a, j in enumerate(comp):
        row_axis[j] = 2 * k + 2 * a
        col_axis[j] = 2 * k + 2 * a + 1
    order = [row_axis[i] for i in range(w)] + [col_axis[i] for i in range(w)]
    n = int(np.prod(dims))
    return t.transpose(order).reshape(n, n)


def localization_residual(a: np.ndarray, dims: Sequence[int], region: Iterable[int]) -> float:
    """Max-norm distance of ``a`` from the set of operators supported on
    ``region`` (identity elsewhere)."""
    a = as_matrix(a)
    dims = validate_shape(dims, a.shape[0])
    region = _normalize_region(dims, region)
    comp_dim = int(np.prod([dims[i] for i in range(len(dims)) if i not in region]))
    pt = partial_trace(a, dims, region) / comp_dim
    return max_norm(a - embed_on_factors(pt, dims, region))


def is_localized(a: np.ndarray, dims: Sequence[int], region: Iterable[int],
                 tol: float = DEFAULT_TOL) -> bool:
    """True iff ``a`` is, within tol, of the form M_region ⊗ I_complement
    (factors reordered back to their original positions)."""
    return localization_residual(a, dims, region) <= tol


def localized_part(a: np.ndarray, dims: Sequence[int], region: Iterable[int]) -> np.ndarray:
    """The operator on the region factors obtained by tracing out the
    complement and dividing by its dimension.  If ``a`` is localized on the
    region this is exactly its local action."""
    a = as_matrix(a)
    dims = validate_shape(dims, a.shape[0])
    region = _normalize_region(dims, region)
    comp_dim = int(np.prod([dims[i] for i in range(len(dims)) if i not in region]))
    return partial_trace(a, dims, region) / comp_dim


def matrix_units(n: int):
    """Yield ``(k, l, E_kl)`` over the standard matrix units of M_n."""
    for k in range(n):
        for l in range(n):
            e = np.zeros((n, n), dtype=np.complex128)
            e[k, l] = 1.0
            yield k, l, e


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the trace norm of the Hermitian difference of two states."""
    rho = as_matrix(rho)
    sigma = as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"shape mismatch {rho.shape} vs {sigma.shape}")
    diff = rho - sigma
    diff = (diff + dagger(diff)) / 2.0
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def phase_fix(m: np.ndarray, cutoff: float = 1e-12) -> np.ndarray:
    """Multiply by a global phase so the first entry (row-major scan) with
    modulus above ``cutoff`` becomes real positive.  Canonical representative
    of a phase orbit."""
    m = np.asarray(m, dtype=np.complex128)
    flat = m.ravel()
    idx = np.flatnonzero(np.abs(flat) > cutoff)
    if idx.size == 0:
        return m.copy()
    pivot = flat[idx[0]]
    return m * (abs(pivot) / pivot)
