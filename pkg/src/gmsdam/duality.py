"""Pointwise Yosida maps and the multiplier updates of the duality method.

For a maximal monotone ``G`` and ``omega * lam < 1`` the resolvent is
``J = ((1 - omega lam) I + lam G)^{-1}`` and the Yosida approximation of
``G - omega I`` is ``(I - J) / lam``.  Both maps below are the closed forms
obtained by inverting ``(1 - omega lam) y + lam G(y)`` branch by branch.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


def _check(omega, lam):
    if omega < 0 or lam <= 0:
        raise ValueError(f"need omega >= 0 and lambda > 0, got omega={omega}, lambda={lam}")
    if omega * lam >= 1:
        raise ValueError(f"omega * lambda must be < 1, got {omega * lam}")


def yosida_heaviside(z, omega: float, lam: float):
    """Yosida approximation of ``H - omega I`` for the multivalued Heaviside ``H``.

    Branches: ``z < 0`` (dry), ``0 <= z <= lam`` (the vertical jump of H at 0)
    and ``z > lam`` (saturated, H = 1).
    """
    _check(omega, lam)
    z = np.asarray(z, dtype=float)
    c = 1.0 - omega * lam
    out = np.where(z < 0, -omega * z / c,
                   np.where(z <= lam, z / lam, (1.0 - omega * z) / c))
    return out if out.ndim else float(out)


def yosida_indicator_nonpositive(z, omega: float, lam: float):
    """Yosida approximation of ``d I_(-inf, 0] - omega I``."""
    _check(omega, lam)
    z = np.asarray(z, dtype=float)
    c = 1.0 - omega * lam
    out = np.where(z < 0, -omega * z / c, z / lam)
    return out if out.ndim else float(out)


def heaviside_contains(y, u, omega: float, atol: float = 0.0):
    """Whether ``u`` belongs to ``H(y) - omega y`` (elementwise).

    With ``atol > 0`` the test is "within ``atol`` of the graph", so ``|y| <= atol``
    counts as the jump point.
    """
    y, u = np.asarray(y, dtype=float), np.asarray(u, dtype=float)
    v = u + omega * y
    jump = (np.abs(y) <= atol) & (v >= -atol) & (v <= 1.0 + atol)
    return jump | np.where(y < 0, np.abs(v) <= atol, np.abs(v - 1.0) <= atol)


def indicator_contains(y, u, omega: float, atol: float = 0.0):
    """Whether ``u`` belongs to ``d I_(-inf, 0](y) - omega y`` (elementwise, same tolerance rule)."""
    y, u = np.asarray(y, dtype=float), np.asarray(u, dtype=float)
    v = u + omega * y
    return ((np.abs(y) <= atol) & (v >= -atol)) | ((y < 0) & (np.abs(v) <= atol))


@dataclass
class DualityParams:
    omega1: float = 0.5
    omega2: float = 0.5
    lambda1: float = 1.0
    lambda2: float = 1.0

    def __post_init__(self):
        _check(self.omega1, self.lambda1)
        _check(self.omega2, self.lambda2)


def update_beta(p, beta_old, omega2: float, lambda2: float) -> np.ndarray:
    return yosida_heaviside(np.asarray(p) + lambda2 * np.asarray(beta_old), omega2, lambda2)


def update_alpha(p_seepage, alpha_old, omega1: float, lambda1: float) -> np.ndarray:
    """Same as :func:`update_beta` for the seepage-face multiplier (Gamma_0 nodes only)."""
    return yosida_indicator_nonpositive(
        np.asarray(p_seepage) + lambda1 * np.asarray(alpha_old), omega1, lambda1)


def recover_theta(p, beta, omega2: float) -> tuple[np.ndarray, float]:
    """Saturation ``beta + omega2 p`` clipped to [0, 1], plus the largest pre-clip overshoot."""
    theta = np.asarray(beta, dtype=float) + omega2 * np.asarray(p, dtype=float)
    overshoot = float(max(0.0, -theta.min(), theta.max() - 1.0)) if theta.size else 0.0
    if overshoot > 1e-2:
        log.debug("saturation overshoot %.3e clipped", overshoot)
    return np.clip(theta, 0.0, 1.0), overshoot
