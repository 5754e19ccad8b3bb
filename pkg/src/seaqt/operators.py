"""Dense operator algebra on a finite-dimensional Hilbert space.

Operators are plain ``numpy`` complex arrays of shape ``(d, d)``. The space of
linear operators is treated as a real Euclidean space under

    X . Y = 1/2 Tr(X^dagger Y + Y^dagger X) = Re Tr(X^dagger Y)

and this module provides Gram matrices, prefix-greedy independence selection
and orthogonal decomposition of a vector with respect to the span of a list of
vectors, both in Gram-inverse and in determinant-ratio form.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy import linalg

TOL_RANK = 1e-12
TOL_HERM = 1e-10


def as_operator(x) -> np.ndarray:
    """Coerce ``x`` to a finite square complex matrix."""
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"operator must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("operator has non-finite entries")
    return a


def dagger(x: np.ndarray) -> np.ndarray:
    return x.conj().swapaxes(-1, -2)


def hermitian_part(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + dagger(x))


def is_hermitian(x: np.ndarray, tol: float = TOL_HERM) -> bool:
    """Hermiticity test scaled by the largest entry magnitude."""
    x = np.asarray(x)
    scale = max(float(np.max(np.abs(x))), 1.0) if x.size else 1.0
    return bool(np.max(np.abs(x - dagger(x)), initial=0.0) <= tol * scale)


def as_hermitian(x, tol: float = TOL_HERM) -> np.ndarray:
    """Validate hermiticity and return the exactly hermitian part."""
    a = as_operator(x)
    if not is_hermitian(a, tol):
        raise ValueError("operator is not hermitian within tolerance")
    return hermitian_part(a)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def real_inner(x: np.ndarray, y: np.ndarray) -> float:
    """Real inner product ``1/2 Tr(X^dagger Y + Y^dagger X)``."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.real(np.vdot(x, y)))


def norm(x: np.ndarray) -> float:
    return float(np.sqrt(max(real_inner(x, x), 0.0)))


def gram_matrix(vs: Sequence[np.ndarray]) -> np.ndarray:
    """Real symmetric Gram matrix ``M[k, m] = vs[k] . vs[m]``."""
    if len(vs) == 0:
        raise ValueError("gram_matrix needs at least one vector")
    shape = np.shape(vs[0])
    for v in vs:
        if np.shape(v) != shape:
            raise ValueError("all vectors must share one dimension")
    flat = np.array([np.ravel(v) for v in vs], dtype=complex)
    g = np.real(flat.conj() @ flat.T)
    return 0.5 * (g + g.T)


def select_independent(vs: Sequence[np.ndarray], tol_rank: float = TOL_RANK) -> list[int]:
    """Prefix-greedy selection of a linearly independent subset.

    A vector is kept when the Gram determinant of the kept set plus the
    candidate stays above ``tol_rank`` times the product of the diagonal Gram
    entries (i.e. the normalized Gram determinant, which lies in ``[0, 1]``).
    Earlier vectors win ties. Zero vectors are never kept.
    """
    if len(vs) == 0:
        raise ValueError("select_independent needs a non-empty list")
    g = gram_matrix(vs)
    diag = np.diag(g)
    kept: list[int] = []
    for k in range(len(vs)):
        if not diag[k] > 0.0:
            continue
        trial = kept + [k]
        d = np.sqrt(diag[trial])
        normalized = g[np.ix_(trial, trial)] / np.outer(d, d)
        if np.linalg.det(normalized) > tol_rank:
            kept.append(k)
    return kept


def _projection_coefficients(b: np.ndarray, hs: Sequence[np.ndarray]) -> np.ndarray:
    g = gram_matrix(hs)
    rhs = np.array([real_inner(b, h) for h in hs])
    return linalg.cho_solve(linalg.cho_factor(g), rhs)


def project_onto(b: np.ndarray, hs: Sequence[np.ndarray], tol_rank: float = TOL_RANK) -> np.ndarray:
    """Orthogonal projection of ``b`` onto the real span of ``hs``."""
    b = np.asarray(b, dtype=complex)
    if len(hs) == 0:
        return np.zeros_like(b)
    keep = select_independent(hs, tol_rank)
    if not keep:
        return np.zeros_like(b)
    basis = [np.asarray(hs[k], dtype=complex) for k in keep]
    coef = _projection_coefficients(b, basis)
    return sum(c * h for c, h in zip(coef, basis))


def project_orthogonal(b: np.ndarray, hs: Sequence[np.ndarray], tol_rank: float = TOL_RANK) -> np.ndarray:
    """Component of ``b`` orthogonal to the real span of ``hs``.

    ``hs`` is filtered with :func:`select_independent` first; an empty
    effective span returns ``b`` unchanged.
    """
    b = np.asarray(b, dtype=complex)
    return b - project_onto(b, hs, tol_rank)


def gram_det_ratio_norm(b: np.ndarray, hs: Sequence[np.ndarray]) -> float:
    """``det M(b, hs) / det M(hs)``, the squared norm of ``b`` orthogonal to ``hs``.

    Evaluated as the Schur complement of the Gram block of ``hs`` through a
    Cholesky factorization. ``hs`` must be linearly independent.
    """
    if len(hs) == 0:
        return real_inner(b, b)
    g = gram_matrix(hs)
    try:
        cf = linalg.cho_factor(g)
    except linalg.LinAlgError as exc:
        raise ValueError("hs are linearly dependent; filter with select_independent") from exc
    d = np.sqrt(np.diag(g))
    if np.linalg.det(g / np.outer(d, d)) <= TOL_RANK:
        raise ValueError("hs are linearly dependent; filter with select_independent")
    v = np.array([real_inner(b, h) for h in hs])
    ratio = real_inner(b, b) - float(v @ linalg.cho_solve(cf, v))
    return max(ratio, 0.0)


def deviation_vectors(b: np.ndarray, hs: Sequence[np.ndarray], gamma: np.ndarray):
    """Deviation vectors relative to a unit normalization vector ``gamma``.

    With ``h_r = 2 gamma`` and means ``<X> = x . h_r / 4`` this returns
    ``(x - h_r <X>) / 2`` for ``b`` and each of ``hs``, i.e. half the
    component of each vector orthogonal to ``gamma``.
    """
    h_r = 2.0 * np.asarray(gamma, dtype=complex)

    def dev(x):
        mean = real_inner(x, h_r) / 4.0
        return (np.asarray(x, dtype=complex) - h_r * mean) / 2.0

    return dev(b), [dev(h) for h in hs]
