"""Q1 finite element matrices and the characteristics right-hand side."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import FineMesh, Tag
from .permeability import PermeabilityField

_G = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
# 2x2 Gauss points on the unit square, x1 fastest; weights are all 1/4
GAUSS_S = np.tile(_G, 2)
GAUSS_T = np.repeat(_G, 2)
GAUSS_W = np.full(4, 0.25)

EDGE_MASS = np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])


def shape(s, t):
    """Bilinear shape functions at local coordinates; last axis = local node."""
    s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
    return np.stack([(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t], axis=-1)


def shape_grad(s, t, hx, hy):
    """Physical gradients of the shape functions, shape (..., 4, 2)."""
    s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
    ds = np.stack([-(1 - t), 1 - t, t, -t], axis=-1) / hx
    dt = np.stack([-(1 - s), -s, s, 1 - s], axis=-1) / hy
    return np.stack([ds, dt], axis=-1)


def element_stiffness(hx: float, hy: float) -> np.ndarray:
    g = shape_grad(GAUSS_S, GAUSS_T, hx, hy)            # (4q, 4, 2)
    return hx * hy * np.einsum("q,qad,qbd->ab", GAUSS_W, g, g)


def element_mass(hx: float, hy: float) -> np.ndarray:
    n = shape(GAUSS_S, GAUSS_T)                           # (4q, 4)
    return hx * hy * np.einsum("q,qa,qb->ab", GAUSS_W, n, n)


def _assemble(conn: np.ndarray, local: np.ndarray, scale: np.ndarray, n: int) -> sp.csr_matrix:
    k = conn.shape[1]
    rows = np.repeat(conn, k, axis=1).ravel()
    cols = np.tile(conn, (1, k)).ravel()
    data = (scale[:, None] * local.ravel()[None, :]).ravel()
    return sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def _kappa(mesh: FineMesh, kappa) -> np.ndarray:
    values = kappa.values if isinstance(kappa, PermeabilityField) else np.asarray(kappa, dtype=float)
    if values.shape != (mesh.n_elements,):
        raise ValueError(f"expected {mesh.n_elements} element values, got {values.shape}")
    return values


def assemble_stiffness(mesh: FineMesh, kappa) -> sp.csr_matrix:
    """``a_ij = int kappa grad(phi_i) . grad(phi_j)``."""
    return _assemble(mesh.elements, element_stiffness(mesh.hx, mesh.hy),
                     _kappa(mesh, kappa), mesh.n_nodes)


def assemble_weighted_mass(mesh: FineMesh, kappa) -> sp.csr_matrix:
    """``m_ij = int kappa phi_i phi_j``."""
    return _assemble(mesh.elements, element_mass(mesh.hx, mesh.hy),
                     _kappa(mesh, kappa), mesh.n_nodes)


def assemble_boundary_mass_seepage(mesh: FineMesh) -> sp.csr_matrix:
    """``int_{Gamma_0} phi_i phi_j``."""
    be = mesh.boundary_edges
    mask = be.mask(Tag.SEEPAGE)
    return _assemble(be.nodes[mask], EDGE_MASS, be.length[mask], mesh.n_nodes)


def assemble_boundary_flux_mass(mesh: FineMesh, kappa) -> sp.csr_matrix:
    """``int_{Gamma u Gamma_0} phi_i kappa (e2 . n) phi_j``.

    ``e2 . n`` is +1 on the top side, -1 on the bottom side and zero on the
    lateral sides; kappa comes from the element adjacent to each edge.
    """
    be = mesh.boundary_edges
    values = _kappa(mesh, kappa)
    normal = np.select([be.side == "top", be.side == "bottom"], [1.0, -1.0], 0.0)
    mask = be.mask(Tag.SEEPAGE, Tag.IMPERVIOUS) & (normal != 0)
    scale = normal[mask] * values[be.element[mask]] * be.length[mask]
    return _assemble(be.nodes[mask], EDGE_MASS, scale, mesh.n_nodes)


def characteristic_foot(x, g: float, dt: float):
    """Foot of the characteristic through ``x``: shift up by ``g*dt``, clamped at x2 = 1."""
    x = np.asarray(x, dtype=float)
    out = x.copy()
    out[..., 1] = np.minimum(x[..., 1] + g * dt, 1.0)
    return out


def locate(mesh: FineMesh, pts: np.ndarray):
    """Element indices and local coordinates of points in the closed square."""
    u = pts[..., 0] * mesh.nx
    v = pts[..., 1] * mesh.ny
    i = np.clip(np.floor(u).astype(np.int64), 0, mesh.nx - 1)
    j = np.clip(np.floor(v).astype(np.int64), 0, mesh.ny - 1)
    return j * mesh.nx + i, u - i, v - j


def interpolate(mesh: FineMesh, nodal: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a nodal field at arbitrary points."""
    e, s, t = locate(mesh, pts)
    return np.einsum("...a,...a->...", shape(s, t), nodal[mesh.elements[e]])


def quadrature_points(mesh: FineMesh, s=GAUSS_S, t=GAUSS_T) -> np.ndarray:
    """(n_elements, q, 2) physical points for local coordinates ``(s, t)``."""
    j, i = np.divmod(np.arange(mesh.n_elements), mesh.nx)
    x = (i[:, None] + np.asarray(s)[None, :]) * mesh.hx
    y = (j[:, None] + np.asarray(t)[None, :]) * mesh.hy
    return np.stack([x, y], axis=-1)


def transport_rule(mesh: FineMesh, g: float, dt: float):
    """Local points and weights for the transport integral.

    The shift ``g*dt`` is the same for every element, so the pre-images of
    the horizontal grid lines (and of the clamp line x2 = 1) cut each element
    at one common local height.  2x2 Gauss on each of the resulting pieces
    integrates the interpolated integrand exactly; plain 2x2 Gauss would see
    a kappa jump at 0, 2 or 4 of its points depending on ``g*dt / h``.
    """
    frac = (-g * dt / mesh.hy) % 1.0
    cuts = [0.0, 1.0] if frac < 1e-12 or frac > 1 - 1e-12 else [0.0, frac, 1.0]
    s, t, w = [], [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        s.append(GAUSS_S)
        t.append(lo + (hi - lo) * GAUSS_T)
        w.append(GAUSS_W * (hi - lo))
    return np.concatenate(s), np.concatenate(t), np.concatenate(w)


def transport_matrix(mesh: FineMesh, kappa, g: float, dt: float) -> sp.csr_matrix:
    """Linear map ``theta_prev -> b`` for fixed ``g`` and ``dt``.

    ``b_i = (1/dt) int (theta_prev kappa)(Phi(x)) phi_i(x) dx``; at every
    quadrature point of :func:`transport_rule` the integrand is the bilinear
    interpolant of theta at the foot point times kappa of the element
    containing it.
    """
    if dt <= 0:
        raise ValueError("time step must be positive")
    values = _kappa(mesh, kappa)
    qs, qt, qw = transport_rule(mesh, g, dt)
    feet = characteristic_foot(quadrature_points(mesh, qs, qt), g, dt)
    e, s, t = locate(mesh, feet)                                      # (ne, q)
    interp = shape(s, t) * values[e][..., None]                       # (ne, q, b)
    weights = mesh.hx * mesh.hy * qw[:, None] * shape(qs, qt) / dt    # (q, a)
    data = np.einsum("qa,eqb->eqab", weights, interp)
    rows = np.broadcast_to(mesh.elements[:, None, :, None], data.shape)
    cols = np.broadcast_to(mesh.elements[e][:, :, None, :], data.shape)
    return sp.coo_matrix((data.ravel(), (rows.ravel(), cols.ravel())),
                         shape=(mesh.n_nodes, mesh.n_nodes)).tocsr()


def assemble_buoyancy(mesh: FineMesh, kappa) -> sp.csr_matrix:
    """``c_ij = int kappa phi_j d(phi_i)/dx2`` (not symmetric)."""
    n = shape(GAUSS_S, GAUSS_T)
    dy = shape_grad(GAUSS_S, GAUSS_T, mesh.hx, mesh.hy)[..., 1]
    local = mesh.hx * mesh.hy * np.einsum("q,qa,qb->ab", GAUSS_W, dy, n)
    return _assemble(mesh.elements, local, _kappa(mesh, kappa), mesh.n_nodes)


def linearized_transport_matrix(mesh: FineMesh, kappa, g: float, dt: float) -> sp.csr_matrix:
    """First-order expansion of :func:`transport_matrix` in ``dt``.

    ``(1/dt) int (kappa theta)(x + g dt e2) phi_i = (1/dt) int kappa theta phi_i
    + g int d(kappa theta)/dx2 phi_i + O(dt)``, and integrating the last term by
    parts gives ``M / dt + g (M_flux - C)`` with ``C`` from :func:`assemble_buoyancy`.
    Its steady states do not depend on ``dt``; in particular ``p = h - x2``,
    ``theta = 1`` balances exactly for any kappa.
    """
    if dt <= 0:
        raise ValueError("time step must be positive")
    return (assemble_weighted_mass(mesh, kappa) / dt
            + g * (assemble_boundary_flux_mass(mesh, kappa) - assemble_buoyancy(mesh, kappa))).tocsr()


def assemble_transport_rhs(mesh: FineMesh, kappa, theta_prev: np.ndarray,
                           g: float, dt: float) -> np.ndarray:
    """Characteristics right-hand side for one saturation field; see :func:`transport_matrix`."""
    return transport_matrix(mesh, kappa, g, dt) @ np.asarray(theta_prev, dtype=float)


@dataclass(frozen=True)
class FineOperators:
    """The four fine matrices; the system matrix is formed on demand."""

    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    seepage_mass: sp.csr_matrix
    flux_mass: sp.csr_matrix

    @classmethod
    def build(cls, mesh: FineMesh, kappa) -> "FineOperators":
        return cls(assemble_stiffness(mesh, kappa), assemble_weighted_mass(mesh, kappa),
                   assemble_boundary_mass_seepage(mesh), assemble_boundary_flux_mass(mesh, kappa))

    def system_matrix(self, dt: float, omega1: float, omega2: float, g: float = 1.0) -> sp.csr_matrix:
        return (self.stiffness + (omega2 / dt) * self.mass + omega1 * self.seepage_mass
                + (g * omega2) * self.flux_mass).tocsr()

    def duality_rhs(self, b: np.ndarray, alpha: np.ndarray, beta: np.ndarray,
                    dt: float, g: float = 1.0) -> np.ndarray:
        """Right-hand side of the pressure equation for given multipliers (full nodal vectors)."""
        return (b - (self.mass @ beta) / dt - g * (self.flux_mass @ beta)
                - self.seepage_mass @ alpha)


def write_coo(matrix, path) -> None:
    """Dump a sparse matrix as ``row col value`` lines."""
    m = sp.coo_matrix(matrix)
    order = np.lexsort((m.col, m.row))
    with open(path, "w") as fh:
        for r, c, v in zip(m.row[order], m.col[order], m.data[order]):
            fh.write(f"{r} {c} {v:.17g}\n")
