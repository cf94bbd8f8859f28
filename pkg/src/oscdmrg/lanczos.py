"""Symmetric eigensolvers.

``dense_sym_eig`` wraps the LAPACK full decomposition, used for density
matrices and small Hamiltonians. ``lowest_k`` is a block Lanczos iteration
with full reorthogonalization and thick restarts that works from a
caller-supplied matrix-vector product only; it is the workhorse for
superblock and exact diagonalizations where the operator is never
materialized. Full (rather than selective) reorthogonalization is used
throughout: dimensions stay modest and ghost eigenvalues would corrupt the
density-matrix spectra downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError

__all__ = ["EigResult", "dense_sym_eig", "lowest_k"]

# Below this dimension the Krylov basis is saturated in one batched
# application instead of iterating toward it.
_DENSE_CUTOFF = 384
# Expansion steps between Rayleigh-Ritz convergence checks.
_CHECK_EVERY = 3


@dataclass(frozen=True)
class EigResult:
    """Lowest eigenpairs: ascending values, orthonormal columns in vectors.

    ``residual_norms[i] = ||H v_i - lambda_i v_i||``; ``iterations`` counts
    matrix-vector products (0 for the dense path).
    """

    values: np.ndarray
    vectors: np.ndarray
    residual_norms: np.ndarray
    iterations: int


def dense_sym_eig(mat: np.ndarray) -> EigResult:
    """Full spectrum of a symmetric matrix, ascending.

    The input must be symmetric within 1e-10 entrywise; it is symmetrized
    by averaging with its transpose before decomposing.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix has non-finite entries")
    asym = float(np.max(np.abs(mat - mat.T)))
    if asym > 1e-10:
        raise ValueError(f"matrix asymmetry {asym:.2e} exceeds 1e-10")
    sym = 0.5 * (mat + mat.T)
    values, vectors = np.linalg.eigh(sym)
    resid = np.linalg.norm(sym @ vectors - vectors * values, axis=0)
    return EigResult(values=values, vectors=vectors, residual_norms=resid, iterations=0)


def lowest_k(
    apply: Callable[[np.ndarray], np.ndarray],
    dim: int,
    k: int,
    tol: float = 1e-10,
    max_iter: int = 2000,
    seed: int = 0,
    max_basis: int | None = None,
    v0: np.ndarray | None = None,
    apply_block: Callable[[np.ndarray], np.ndarray] | None = None,
) -> EigResult:
    """The k algebraically smallest eigenpairs of a symmetric linear map.

    ``apply`` maps a length-``dim`` vector to H @ v and must be symmetric
    (the caller's contract). Convergence requires every residual to satisfy
    ``||H v - lambda v|| <= tol * max(1, |lambda|)``. ``max_iter`` caps the
    number of matrix-vector products; exceeding it raises
    :class:`ConvergenceError` carrying the current residual norms.

    Deterministic for a fixed seed: the starting block is drawn from a
    seeded generator and every reduction has a fixed order. ``v0`` may
    supply starting vectors (shape ``(dim,)`` or ``(dim, j)``); missing
    directions are topped up from the same generator. ``apply_block``
    optionally applies H to every column of a matrix at once (pure
    performance; must agree with ``apply``).
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if not 1 <= k <= dim:
        raise ValueError(f"k={k} outside 1..{dim}")
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    rng = np.random.default_rng(seed)

    if apply_block is None:
        def apply_block(vblock: np.ndarray) -> np.ndarray:
            return np.column_stack([apply(vblock[:, j]) for j in range(vblock.shape[1])])

    if dim <= _DENSE_CUTOFF and max_iter >= dim:
        # Saturate the Krylov space outright: with full reorthogonalization
        # the basis would reach the whole space anyway at this size, and one
        # batched application is far cheaper than iterating toward it.
        ident = np.eye(dim)
        t_mat = ident.T @ apply_block(ident)
        t_mat = 0.5 * (t_mat + t_mat.T)
        vals, vecs = np.linalg.eigh(t_mat)
        lam = vals[:k].copy()
        x_vecs = vecs[:, :k]
        rnorm = np.linalg.norm(t_mat @ x_vecs - x_vecs * lam, axis=0)
        if np.all(rnorm <= tol * np.maximum(1.0, np.abs(lam))):
            return EigResult(values=lam, vectors=x_vecs, residual_norms=rnorm,
                             iterations=dim)
        raise ConvergenceError(
            f"residuals stalled at machine level {rnorm.max():.3e} with the "
            f"full space spanned (tol {tol:.1e} unreachable)",
            residual_norms=rnorm,
        )

    expand = min(k, dim)
    if max_basis is None:
        max_basis = max(6 * k + 10, 96)
    max_basis = min(dim, max(max_basis, 2 * k, expand + k))
    keep = min(max(2 * k + 2, max_basis // 2), max_basis - 1)

    q_basis = np.empty((dim, max_basis))
    aq = np.empty((dim, max_basis))
    t_buf = np.zeros((max_basis, max_basis))
    p = 0
    matvecs = 0

    def orthonormalize(cands: np.ndarray) -> np.ndarray:
        """Orthonormalize candidate columns against the current basis (two
        batched Gram-Schmidt passes) and among themselves; columns whose
        norm collapses below 1e-8 of their original size are dropped."""
        if cands.size == 0:
            return cands.reshape(dim, 0)
        ref = np.linalg.norm(cands, axis=0)
        good = ref > 0
        w = cands[:, good] / ref[good]
        for _ in range(2):
            if p:
                w = w - q_basis[:, :p] @ (q_basis[:, :p].T @ w)
        cols: list[np.ndarray] = []
        for j in range(w.shape[1]):
            v = w[:, j].copy()
            for u in cols:
                v -= u * (u @ v)
            for u in cols:
                v -= u * (u @ v)
            nrm = np.linalg.norm(v)
            if nrm > 1e-8:
                cols.append(v / nrm)
        if not cols:
            return np.empty((dim, 0))
        return np.column_stack(cols)

    def append(new_cols: np.ndarray) -> int:
        nonlocal p, matvecs
        nb = new_cols.shape[1]
        if nb == 0:
            return 0
        q_basis[:, p:p + nb] = new_cols
        aq[:, p:p + nb] = apply_block(new_cols)
        new_t = q_basis[:, :p + nb].T @ aq[:, p:p + nb]
        t_buf[: p + nb, p:p + nb] = new_t
        t_buf[p:p + nb, :p] = new_t[:p].T
        p += nb
        matvecs += nb
        return nb

    want = min(max(k, expand), dim)
    start = np.empty((dim, 0))
    if v0 is not None:
        v0 = np.asarray(v0, dtype=float)
        if v0.ndim == 1:
            v0 = v0[:, None]
        start = orthonormalize(v0)
    attempts = 0
    while start.shape[1] < want and attempts < 20:
        fresh = rng.standard_normal((dim, want - start.shape[1]))
        merged = np.hstack([start, fresh]) if start.shape[1] else fresh
        start = orthonormalize(merged)
        attempts += 1
    append(start)

    def expand_once(candidates: np.ndarray, budget: int) -> int:
        new_cols = orthonormalize(candidates)[:, :budget]
        if new_cols.shape[1] == 0:
            new_cols = orthonormalize(rng.standard_normal((dim, min(budget, dim - p))))
        return append(new_cols)

    last_block = p
    while True:
        t_mat = t_buf[:p, :p]
        t_mat = 0.5 * (t_mat + t_mat.T)
        vals, s_mat = np.linalg.eigh(t_mat)
        lam = vals[:k]
        y_mat = s_mat[:, :k]
        x_vecs = q_basis[:, :p] @ y_mat
        ax_vecs = aq[:, :p] @ y_mat
        resid = ax_vecs - x_vecs * lam
        rnorm = np.linalg.norm(resid, axis=0)
        if np.all(rnorm <= tol * np.maximum(1.0, np.abs(lam))):
            return EigResult(
                values=lam.copy(),
                vectors=x_vecs,
                residual_norms=rnorm,
                iterations=matvecs,
            )
        if matvecs >= max_iter:
            raise ConvergenceError(
                f"no convergence after {matvecs} matvecs "
                f"(worst residual {rnorm.max():.3e})",
                residual_norms=rnorm,
            )
        if p >= dim:
            # The whole space is spanned; the Rayleigh-Ritz values are exact
            # but a tolerance below machine level cannot be certified.
            raise ConvergenceError(
                f"residuals stalled at machine level {rnorm.max():.3e} with "
                f"the full space spanned (tol {tol:.1e} unreachable)",
                residual_norms=rnorm,
            )
        if p + expand > max_basis:
            # Thick restart: keep the leading Ritz vectors, continue the
            # recursion from the residual block.
            nkeep = min(keep, p)
            q_new = q_basis[:, :p] @ s_mat[:, :nkeep]
            aq_new = aq[:, :p] @ s_mat[:, :nkeep]
            q_basis[:, :nkeep] = q_new
            aq[:, :nkeep] = aq_new
            # In the Ritz basis the projected operator is diagonal.
            t_buf[:nkeep, :nkeep] = np.diag(vals[:nkeep])
            p = nkeep
            added = expand_once(resid, min(max_basis - p, expand))
            if added == 0:
                raise ConvergenceError(
                    "unable to expand the Krylov basis further",
                    residual_norms=rnorm,
                )
            last_block = added
        # Grow the block Krylov space a few steps between checks.
        steps = 0
        while (
            steps < _CHECK_EVERY
            and p + expand <= max_basis
            and p < dim
            and matvecs < max_iter
        ):
            added = expand_once(aq[:, p - last_block:p], min(max_basis - p, expand))
            if added == 0:
                break
            last_block = added
            steps += 1
