"""Piecewise-constant high-contrast permeability fields on the fine mesh.

The default channel and inclusion layouts below are this package's own
choices: thin high-conductivity strips and blobs placed off the coarse grid
lines (multiples of 0.1) so that the coarse mesh never resolves them.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import FineMesh

log = logging.getLogger(__name__)


class FieldFormatError(ValueError):
    pass


@dataclass(frozen=True)
class PermeabilityField:
    values: np.ndarray   # one value per fine element, index j * nx + i
    background: float = 1.0
    high: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("permeability must be a flat per-element array")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("permeability must be finite and strictly positive")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    @property
    def contrast(self) -> float:
        return float(self.values.max() / self.values.min())

    def scaled(self, c: float) -> "PermeabilityField":
        return PermeabilityField(self.values * c, self.background * c, self.high * c)

    def grid(self, mesh: FineMesh) -> np.ndarray:
        """Values as an (ny, nx) array, row j holding x2-layer j."""
        return self.values.reshape(mesh.ny, mesh.nx)


@dataclass(frozen=True)
class Channel:
    """Axis-aligned strip: ``band`` across the flow, ``extent`` along it."""

    band: tuple[float, float]
    extent: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        for lo, hi in (self.band, self.extent):
            if not (0.0 <= lo <= 1.0 and 0.0 <= hi <= 1.0):
                raise ValueError(f"channel {self} reaches outside [0, 1]")


DEFAULT_HORIZONTAL = (
    Channel((0.13, 0.16), (0.0, 0.85)),
    Channel((0.33, 0.36), (0.15, 1.0)),
    Channel((0.53, 0.56), (0.0, 0.85)),
    Channel((0.73, 0.76), (0.15, 1.0)),
)


@dataclass(frozen=True)
class InclusionSpec:
    """Layout for the channels-and-inclusions family.

    Fixed ``horizontal``/``vertical`` channels are laid first; then
    ``n_inclusions`` rectangles or ellipses with half-sizes drawn from
    ``radius`` are scattered with the seeded generator.
    """

    horizontal: tuple = (
        Channel((0.23, 0.25), (0.04, 0.72)),
        Channel((0.47, 0.49), (0.27, 0.96)),
        Channel((0.77, 0.79), (0.05, 0.83)),
    )
    vertical: tuple = (
        Channel((0.63, 0.65), (0.05, 0.42)),
    )
    n_inclusions: int = 24
    radius: tuple[float, float] = (0.012, 0.03)
    ellipse_fraction: float = 0.5


def _mark(mesh: FineMesh, channels, transpose: bool) -> np.ndarray:
    c = mesh.centroids
    across, along = (c[:, 0], c[:, 1]) if transpose else (c[:, 1], c[:, 0])
    hit = np.zeros(mesh.n_elements, dtype=bool)
    for ch in channels:
        inside = ((across >= ch.band[0]) & (across <= ch.band[1])
                  & (along >= ch.extent[0]) & (along <= ch.extent[1]))
        if not inside.any():
            log.warning("channel %s contains no element centroid; ignored", ch)
        hit |= inside
    return hit


def _check_values(kappa_bg, kappa_hi):
    if kappa_bg <= 0 or kappa_hi <= 0:
        raise ValueError("permeability values must be positive")


def _field(hit, kappa_bg, kappa_hi):
    return PermeabilityField(np.where(hit, float(kappa_hi), float(kappa_bg)),
                             float(kappa_bg), float(kappa_hi))


def constant_field(mesh: FineMesh, value: float = 1.0) -> PermeabilityField:
    return PermeabilityField(np.full(mesh.n_elements, float(value)), value, value)


def gen_horizontal_channels(mesh: FineMesh, channels=DEFAULT_HORIZONTAL,
                            kappa_bg: float = 1.0, kappa_hi: float = 1e2) -> PermeabilityField:
    """Elements whose centroid lies in a channel get ``kappa_hi``."""
    _check_values(kappa_bg, kappa_hi)
    return _field(_mark(mesh, channels, transpose=False), kappa_bg, kappa_hi)


def gen_vertical_channels(mesh: FineMesh, channels=DEFAULT_HORIZONTAL,
                          kappa_bg: float = 1.0, kappa_hi: float = 1e2) -> PermeabilityField:
    """Same as the horizontal generator with x1 and x2 swapped."""
    _check_values(kappa_bg, kappa_hi)
    return _field(_mark(mesh, channels, transpose=True), kappa_bg, kappa_hi)


def gen_channels_and_inclusions(mesh: FineMesh, seed: int = 0, spec: InclusionSpec | None = None,
                                kappa_bg: float = 1.0, kappa_hi: float = 1e2) -> PermeabilityField:
    _check_values(kappa_bg, kappa_hi)
    spec = spec if spec is not None else InclusionSpec()
    hit = _mark(mesh, spec.horizontal, transpose=False) | _mark(mesh, spec.vertical, transpose=True)

    rng = np.random.default_rng(seed)
    c = mesh.centroids
    rmin, rmax = spec.radius
    for _ in range(spec.n_inclusions):
        cx, cy = rng.uniform(0.05, 0.95, size=2)
        ax, ay = rng.uniform(rmin, rmax, size=2)
        dx, dy = (c[:, 0] - cx) / ax, (c[:, 1] - cy) / ay
        if rng.uniform() < spec.ellipse_fraction:
            hit |= dx * dx + dy * dy <= 1.0
        else:
            hit |= (np.abs(dx) <= 1.0) & (np.abs(dy) <= 1.0)
    return _field(hit, kappa_bg, kappa_hi)


def save_field(field: PermeabilityField, mesh: FineMesh, path) -> None:
    """Row-major CSV: line j holds the nx values of element row j."""
    np.savetxt(path, field.grid(mesh), delimiter=",", fmt="%.17g")


def load_field(mesh: FineMesh, path) -> PermeabilityField:
    path = Path(path)
    rows = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError:
                raise FieldFormatError(f"{path}:{lineno}: non-numeric entry") from None
    values = np.array([v for row in rows for v in row], dtype=float)
    if values.size != mesh.n_elements or len(rows) != mesh.ny:
        raise FieldFormatError(
            f"{path}: expected {mesh.ny} rows of {mesh.nx} values, "
            f"got {len(rows)} rows with {values.size} values")
    if np.any(~np.isfinite(values)) or np.any(values <= 0):
        raise FieldFormatError(f"{path}: permeability values must be finite and positive")
    return PermeabilityField(values, float(values.min()), float(values.max()))


FAMILIES = {
    "constant": lambda mesh, seed, bg, hi: constant_field(mesh, bg),
    "horizontal": lambda mesh, seed, bg, hi: gen_horizontal_channels(mesh, kappa_bg=bg, kappa_hi=hi),
    "vertical": lambda mesh, seed, bg, hi: gen_vertical_channels(mesh, kappa_bg=bg, kappa_hi=hi),
    "channels_inclusions": lambda mesh, seed, bg, hi: gen_channels_and_inclusions(
        mesh, seed, kappa_bg=bg, kappa_hi=hi),
}


def make_field(family: str, mesh: FineMesh, seed: int = 0,
               kappa_bg: float = 1.0, kappa_hi: float = 1e2) -> PermeabilityField:
    try:
        gen = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown coefficient family {family!r}; "
                         f"choose from {sorted(FAMILIES)}") from None
    return gen(mesh, seed, kappa_bg, kappa_hi)
