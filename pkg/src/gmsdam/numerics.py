"""Sparse symmetric solves with Dirichlet elimination and small generalized eigenproblems."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SolverError(RuntimeError):
    pass


@dataclass
class LinearSystem:
    matrix: sp.spmatrix
    rhs: np.ndarray
    dirichlet_dofs: np.ndarray
    dirichlet_values: np.ndarray


class DirichletSolver:
    """Factor the free-free block of ``matrix`` once and reuse it.

    ``solve`` takes a full right-hand side (rows at constrained dofs are
    ignored) and the prescribed values, and returns the full nodal vector.
    """

    def __init__(self, matrix, dirichlet_dofs, rtol: float = 1e-10):
        matrix = sp.csr_matrix(matrix)
        n = matrix.shape[0]
        fixed = np.unique(np.asarray(dirichlet_dofs, dtype=np.int64))
        if fixed.size and (fixed[0] < 0 or fixed[-1] >= n):
            raise ValueError("Dirichlet dof outside the matrix")
        free_mask = np.ones(n, dtype=bool)
        free_mask[fixed] = False
        self.n = n
        self.fixed = fixed
        self.free = np.flatnonzero(free_mask)
        self.rtol = rtol
        self._A_ff = matrix[self.free][:, self.free].tocsc()
        self._A_fd = matrix[self.free][:, fixed].tocsr()
        try:
            self._lu = spla.splu(self._A_ff)
        except RuntimeError as exc:
            raise SolverError(f"factorization of the reduced system failed: {exc}") from exc

    def solve(self, rhs: np.ndarray, dirichlet_values=None) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        values = (np.zeros(self.fixed.size) if dirichlet_values is None
                  else np.asarray(dirichlet_values, dtype=float))
        r = rhs[self.free] - self._A_fd @ values
        x_free = self._lu.solve(r)
        res = np.linalg.norm(self._A_ff @ x_free - r)
        scale = max(np.linalg.norm(r), np.finfo(float).tiny)
        if not np.isfinite(res) or res > self.rtol * scale:
            raise SolverError(f"reduced solve residual {res / scale:.3e} exceeds {self.rtol:.1e}")
        out = np.empty(self.n)
        out[self.free] = x_free
        out[self.fixed] = values
        return out


def solve_dirichlet(system: LinearSystem, rtol: float = 1e-10) -> np.ndarray:
    return DirichletSolver(system.matrix, system.dirichlet_dofs, rtol).solve(
        system.rhs, system.dirichlet_values)


@dataclass(frozen=True)
class EigenPairs:
    values: np.ndarray    # ascending
    vectors: np.ndarray   # columns, M-orthonormal

    def __len__(self):
        return len(self.values)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def smallest_eigenpairs(K, M, L: int, dense_limit: int = 3000, rtol: float = 1e-8) -> EigenPairs:
    """The ``L`` smallest eigenpairs of ``K v = sigma M v``.

    ``K`` symmetric positive semidefinite, ``M`` symmetric positive definite.
    Problems up to ``dense_limit`` dofs go through a dense solver; larger ones
    use shift-invert Lanczos followed by a Rayleigh-Ritz cleanup.
    """
    n = K.shape[0]
    if not 1 <= L <= n:
        raise ValueError(f"requested {L} eigenpairs from a problem with {n} dofs")
    if n <= dense_limit:
        Kd = K.toarray() if sp.issparse(K) else np.asarray(K, dtype=float)
        Md = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
        vals, vecs = la.eigh(Kd, Md, subset_by_index=[0, L - 1])
    else:
        K, M = sp.csc_matrix(K), sp.csc_matrix(M)
        shift = -1e-6 * abs(K.diagonal()).max() / abs(M.diagonal()).max()
        _, V = spla.eigsh(K, k=L, M=M, sigma=shift, which="LM")
        vals, Y = la.eigh(V.T @ (K @ V), V.T @ (M @ V))
        vecs = V @ Y
    vecs = _fix_signs(vecs)

    KV = K @ vecs
    MV = M @ vecs
    res = np.linalg.norm(KV - MV * vals, axis=0)
    ref = np.maximum(np.linalg.norm(KV, axis=0), np.abs(vals) * np.linalg.norm(MV, axis=0))
    # a residual at roundoff level is fine for the (near-)kernel where K v ~ 0
    floor = 1e3 * np.finfo(float).eps * abs(K.diagonal()).max() * np.linalg.norm(vecs, axis=0)
    bad = res > np.maximum(rtol * ref, floor)
    if bad.any():
        raise SolverError(f"eigenpair residuals too large: {res[bad]}")
    return EigenPairs(np.asarray(vals), vecs)
