"""GMsFEM coarse space: multiscale partition of unity times local spectral modes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import element_mass, element_stiffness, shape, shape_grad, _kappa
from .grid import CoarseMesh, Tag
from .numerics import SolverError, smallest_eigenpairs


def _local_matrix(fine, elements, nodes, local, scale):
    """Assemble an element matrix over a subset of fine elements, numbered by ``nodes``."""
    conn = np.searchsorted(nodes, fine.elements[elements])
    k = conn.shape[1]
    rows = np.repeat(conn, k, axis=1).ravel()
    cols = np.tile(conn, (1, k)).ravel()
    data = (scale[:, None] * local.ravel()[None, :]).ravel()
    n = len(nodes)
    return sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def build_partition_of_unity(coarse: CoarseMesh, kappa) -> sp.csc_matrix:
    """Multiscale partition of unity, one column per coarse node.

    On every coarse cell each corner function solves the kappa-weighted
    Laplace problem with the bilinear coarse hat as boundary data.
    """
    fine = coarse.fine
    values = _kappa(fine, kappa)
    Kel = element_stiffness(fine.hx, fine.hy)
    chi = np.zeros((coarse.n_nodes, fine.n_nodes))
    rx, ry = coarse.ratio
    # local boundary of a cell in its own lexicographic numbering
    jj, ii = np.divmod(np.arange((rx + 1) * (ry + 1)), rx + 1)
    on_edge = (ii == 0) | (ii == rx) | (jj == 0) | (jj == ry)
    bnd, inner = np.flatnonzero(on_edge), np.flatnonzero(~on_edge)
    hats = shape(ii / rx, jj / ry)                     # (n_local, 4 corners)

    for c in range(coarse.n_cells):
        nodes = coarse.cell_fine_nodes(c)              # lexicographic, hence sorted
        elems = coarse.cell_fine_elements(c)
        K = _local_matrix(fine, elems, nodes, Kel, values[elems])
        local = hats.copy()
        if inner.size:
            K_ii = K[inner][:, inner].tocsc()
            rhs = -(K[inner][:, bnd] @ hats[bnd])
            try:
                local[inner] = spla.splu(K_ii).solve(np.asarray(rhs))
            except RuntimeError as exc:
                raise SolverError(f"partition of unity solve failed on cell {c}: {exc}") from exc
        corners = coarse.cell_corners(c)
        for a in range(4):
            chi[corners[a], nodes] = local[:, a]
    return sp.csc_matrix(chi.T)


def compute_weight(coarse: CoarseMesh, kappa, chi: sp.spmatrix, floor: float = 1e-14) -> np.ndarray:
    """Element-wise ``kappa * sum_j H^2 |grad chi_j|^2`` with gradients at centroids."""
    fine = coarse.fine
    values = _kappa(fine, kappa)
    grad = shape_grad(0.5, 0.5, fine.hx, fine.hy)      # (4, 2)
    chi = sp.csr_matrix(chi)
    total = np.zeros(fine.n_elements)
    for c in range(coarse.n_cells):
        elems = coarse.cell_fine_elements(c)
        conn = fine.elements[elems]                    # (ne, 4)
        for k in coarse.cell_corners(c):
            col = chi[:, k].toarray().ravel()
            g = np.einsum("ea,ad->ed", col[conn], grad)
            total[elems] += coarse.H ** 2 * np.einsum("ed,ed->e", g, g)
    weight = values * total
    if weight.max() <= 0:
        raise ValueError("spectral weight vanishes everywhere")
    return np.maximum(weight, floor * weight.max())


def enrichment_counts(coarse: CoarseMesh, li: int) -> np.ndarray:
    """``li`` modes at interior coarse nodes, one at boundary coarse nodes."""
    if li < 1:
        raise ValueError("at least one basis function per coarse node is required")
    return np.array([1 if coarse.is_boundary_node(k) else li for k in range(coarse.n_nodes)])


def local_eigenproblem(coarse: CoarseMesh, kappa, weight: np.ndarray, k: int):
    """Neumann stiffness and weighted mass on neighborhood ``k`` (local node order = sorted fine ids)."""
    fine = coarse.fine
    nb = coarse.neighborhoods[k]
    values = _kappa(fine, kappa)
    K = _local_matrix(fine, nb.elements, nb.nodes, element_stiffness(fine.hx, fine.hy),
                      values[nb.elements])
    M = _local_matrix(fine, nb.elements, nb.nodes, element_mass(fine.hx, fine.hy),
                      weight[nb.elements])
    return K, M


@dataclass(frozen=True)
class CoarseSpace:
    R0: sp.csc_matrix            # (n_fine, dim) basis functions as columns
    counts: np.ndarray           # modes per coarse node
    eigenvalues: list            # ascending eigenvalues per coarse node
    owner: np.ndarray            # coarse node of each column
    chi: sp.csc_matrix           # partition of unity, (n_fine, n_coarse)
    weight: np.ndarray           # spectral weight per fine element

    @property
    def dim(self) -> int:
        return self.R0.shape[1]


def build_spectral_basis(coarse: CoarseMesh, kappa, weight: np.ndarray, counts,
                         chi: sp.spmatrix) -> CoarseSpace:
    fine = coarse.fine
    counts = np.asarray(counts, dtype=int)
    if counts.shape != (coarse.n_nodes,) or counts.min() < 1:
        raise ValueError("need a positive mode count for every coarse node")
    water = fine.boundary_nodes(Tag.WATER)
    chi_csc = sp.csc_matrix(chi)

    rows, cols, data, owner, eigenvalues = [], [], [], [], []
    col = 0
    for nb in coarse.neighborhoods:
        L = int(counts[nb.index])
        if L > len(nb.nodes):
            raise ValueError(f"coarse node {nb.index}: {L} modes requested, "
                             f"only {len(nb.nodes)} local dofs")
        K, M = local_eigenproblem(coarse, kappa, weight, nb.index)
        pairs = smallest_eigenpairs(K, M, L)
        eigenvalues.append(pairs.values)
        chi_local = chi_csc[nb.nodes, nb.index].toarray().ravel()
        keep = ~np.isin(nb.nodes, water)
        for ell in range(L):
            v = chi_local * pairs.vectors[:, ell]
            nz = keep & (v != 0)
            rows.append(nb.nodes[nz])
            cols.append(np.full(nz.sum(), col))
            data.append(v[nz])
            owner.append(nb.index)
            col += 1
    R0 = sp.csc_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                       shape=(fine.n_nodes, col))
    return CoarseSpace(R0, counts, eigenvalues, np.array(owner), chi_csc, weight)


def build_coarse_space(coarse: CoarseMesh, kappa, li: int) -> CoarseSpace:
    chi = build_partition_of_unity(coarse, kappa)
    weight = compute_weight(coarse, kappa, chi)
    return build_spectral_basis(coarse, kappa, weight, enrichment_counts(coarse, li), chi)


def assemble_coarse_system(R0, system, rhs, lift):
    """``S0 = R0^T system R0`` and ``c0 = R0^T (rhs - system lift)``."""
    R0 = sp.csc_matrix(R0)
    S0 = (R0.T @ system @ R0).tocsc()
    c0 = R0.T @ (np.asarray(rhs) - system @ np.asarray(lift))
    return S0, c0


def prolong(R0, p0, lift=None) -> np.ndarray:
    p = R0 @ np.asarray(p0)
    return p if lift is None else p + lift


class CoarseSolver:
    """Galerkin solve in the column space of ``R0``; factorization reused across calls."""

    def __init__(self, R0, system, dense_limit: int = 2000):
        self.R0 = sp.csc_matrix(R0)
        self.system = sp.csr_matrix(system)
        S0 = (self.R0.T @ self.system @ self.R0).tocsc()
        self.dim = S0.shape[0]
        if self.dim <= dense_limit:
            dense = S0.toarray()
            try:
                self._cho = la.cho_factor(dense)
            except la.LinAlgError:
                w = la.eigvalsh(dense)
                raise SolverError(f"coarse matrix is not positive definite "
                                  f"(smallest eigenvalue {w[0]:.3e})") from None
            self._solve = lambda c: la.cho_solve(self._cho, c)
        else:
            try:
                lu = spla.splu(S0)
            except RuntimeError as exc:
                raise SolverError(f"coarse factorization failed: {exc}") from exc
            self._solve = lu.solve

    def solve(self, rhs, lift) -> np.ndarray:
        c0 = self.R0.T @ (np.asarray(rhs) - self.system @ lift)
        return prolong(self.R0, self._solve(c0), lift)
