"""Experiment configuration and ASCII output: field files, error tables, run manifests.

Configuration is an INI file with the sections ``[mesh]``, ``[coefficient]``,
``[solver]``, ``[gmsfem]`` and ``[output]``.  Every key is optional; unknown
sections or keys are rejected so that typos never silently fall back to a
default.
"""
from __future__ import annotations

import configparser
import csv
import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .driver import SolverConfig
from .grid import BoundaryPartition, FineMesh, build_coarse_mesh, build_fine_mesh
from .permeability import FAMILIES, PermeabilityField, load_field, make_field

log = logging.getLogger(__name__)

FIELD_FORMATS = ("csv", "vtk")
TABLE_HEADER = ("coarse_dim", "Li", "energy_error_percent")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    nx: int = 100
    ny: int = 100
    coarse_nx: int = 10
    coarse_ny: int = 10
    partition: str = "dam"           # dam | submerged
    family: str = "channels_inclusions"
    seed: int = 0
    kappa_bg: float = 1.0
    kappa_hi: float = 1e2
    field_path: str | None = None     # CSV coefficient; overrides ``family``
    li_list: tuple = (1, 2, 4, 6, 8, 10)
    out_dir: str = "out"
    formats: tuple = ("csv", "vtk")
    solver: SolverConfig = field(default_factory=SolverConfig)

    def fine_mesh(self) -> FineMesh:
        if self.partition == "dam":
            part = BoundaryPartition.dam(self.solver.head_left, self.solver.head_right)
        else:
            part = BoundaryPartition.submerged()
        return build_fine_mesh(self.nx, self.ny, part)

    def coarse_mesh(self, fine: FineMesh):
        return build_coarse_mesh(fine, self.coarse_nx, self.coarse_ny)

    def coefficient(self, mesh: FineMesh) -> PermeabilityField:
        if self.field_path:
            return load_field(mesh, self.field_path)
        return make_field(self.family, mesh, self.seed, self.kappa_bg, self.kappa_hi)

    def descriptor(self) -> dict:
        if self.field_path:
            return {"source": "file", "path": str(self.field_path)}
        return {"source": "generator", "family": self.family, "seed": self.seed,
                "kappa_bg": self.kappa_bg, "kappa_hi": self.kappa_hi}

    def with_(self, **kw) -> "ExperimentSpec":
        solver_kw = {k: kw.pop(k) for k in list(kw) if k in _SOLVER_FIELDS}
        spec = replace(self, **kw)
        if solver_kw:
            spec = replace(spec, solver=spec.solver.with_(**solver_kw))
        return spec


_SOLVER_FIELDS = {f.name for f in fields(SolverConfig)}


def _int_list(text: str) -> tuple:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(int(t) for t in items)


def _word_list(text: str) -> tuple:
    return tuple(t.strip().lower() for t in text.split(",") if t.strip())


def _optional_float(text: str):
    return None if text.strip().lower() in ("", "auto", "none") else float(text)


# section -> key -> (target attribute, converter); targets prefixed with
# "solver." land in SolverConfig
SCHEMA = {
    "mesh": {
        "nx": ("nx", int), "ny": ("ny", int),
        "coarse_nx": ("coarse_nx", int), "coarse_ny": ("coarse_ny", int),
        "partition": ("partition", str.strip),
        "head_left": ("solver.head_left", float), "head_right": ("solver.head_right", float),
    },
    "coefficient": {
        "family": ("family", str.strip), "seed": ("seed", int),
        "kappa_bg": ("kappa_bg", float), "kappa_hi": ("kappa_hi", float),
        "path": ("field_path", str.strip),
    },
    "solver": {
        "dt": ("solver.dt", _optional_float), "g": ("solver.g", float),
        "omega1": ("solver.omega1", float), "omega2": ("solver.omega2", float),
        "lambda1": ("solver.lambda1", float), "lambda2": ("solver.lambda2", float),
        "tol": ("solver.tol", float), "max_steps": ("solver.max_steps", int),
        "fixed_point_iters": ("solver.fixed_point_iters", int),
        "mode": ("solver.mode", str.strip), "init": ("solver.init", str.strip),
        "transport": ("solver.transport", str.strip),
    },
    "gmsfem": {
        "li": ("solver.li", int), "li_list": ("li_list", _int_list),
    },
    "output": {
        "dir": ("out_dir", str.strip), "formats": ("formats", _word_list),
    },
}


def parse_config_text(text: str, source: str = "<config>") -> ExperimentSpec:
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        # ParsingError and friends already carry the offending line number
        raise ConfigError(f"{source}: {exc}") from None

    top, solver = {}, {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
            target, convert = SCHEMA[section][key]
            try:
                value = convert(raw)
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for {section}.{key} = {raw!r} ({exc})") from None
            if target.startswith("solver."):
                solver[target[7:]] = value
            else:
                top[target] = value

    try:
        spec = ExperimentSpec(solver=SolverConfig(**solver), **top)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from None
    _validate(spec, source)
    return spec


def parse_config(path) -> ExperimentSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, str(path))


def _validate(spec: ExperimentSpec, source: str):
    if spec.partition not in ("dam", "submerged"):
        raise ConfigError(f"{source}: mesh.partition must be 'dam' or 'submerged'")
    if not spec.field_path and spec.family not in FAMILIES:
        raise ConfigError(f"{source}: coefficient.family must be one of {sorted(FAMILIES)}")
    bad = [f for f in spec.formats if f not in FIELD_FORMATS]
    if bad:
        raise ConfigError(f"{source}: output.formats has unknown entries {bad}")
    if min(spec.li_list) < 1:
        raise ConfigError(f"{source}: gmsfem.li_list entries must be >= 1")
    for name in ("nx", "ny", "coarse_nx", "coarse_ny"):
        if getattr(spec, name) < 1:
            raise ConfigError(f"{source}: mesh.{name} must be positive")
    if spec.nx % spec.coarse_nx or spec.ny % spec.coarse_ny:
        raise ConfigError(f"{source}: fine mesh {spec.nx}x{spec.ny} does not nest in "
                          f"coarse mesh {spec.coarse_nx}x{spec.coarse_ny}")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_field(values, mesh: FineMesh, path, fmt: str = "csv", name: str = "field") -> Path:
    """Write a nodal field; CSV has one line per node row j, VTK is legacy ASCII."""
    values = np.asarray(values, dtype=float)
    if values.shape != (mesh.n_nodes,):
        raise ValueError(f"expected {mesh.n_nodes} nodal values, got {values.shape}")
    path = Path(path)
    rows = values.reshape(mesh.ny + 1, mesh.nx + 1)
    if fmt == "csv":
        text = "".join(",".join(_fmt(v) for v in row) + "\n" for row in rows)
    elif fmt == "vtk":
        head = [
            "# vtk DataFile Version 3.0",
            name,
            "ASCII",
            "DATASET STRUCTURED_POINTS",
            f"DIMENSIONS {mesh.nx + 1} {mesh.ny + 1} 1",
            "ORIGIN 0 0 0",
            f"SPACING {_fmt(mesh.hx)} {_fmt(mesh.hy)} 1",
            f"POINT_DATA {mesh.n_nodes}",
            f"SCALARS {name} double 1",
            "LOOKUP_TABLE default",
        ]
        text = "\n".join(head) + "\n" + "\n".join(_fmt(v) for v in values) + "\n"
    else:
        raise ValueError(f"unknown field format {fmt!r}; choose from {FIELD_FORMATS}")
    path.write_text(text)
    return path


def read_field_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2).ravel()


def write_error_table(reports, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_HEADER)
        for r in reports:
            w.writerow([r.coarse_dim, r.li, _fmt(r.energy_error_percent)])
    return path


def read_error_table(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return [{"coarse_dim": int(r["coarse_dim"]), "Li": int(r["Li"]),
                 "energy_error_percent": float(r["energy_error_percent"])}
                for r in csv.DictReader(fh)]


class RunManifest:
    """Collects everything a CLI run produced and writes it as ``manifest.json``."""

    def __init__(self, spec: ExperimentSpec, out_dir):
        self.spec = spec
        self.out_dir = Path(out_dir)
        self.files: list[str] = []
        self.iterations: dict = {}
        self.reports: list[dict] = []
        self.timings: dict = {}

    def path(self, name: str) -> Path:
        """Register ``name`` inside the output directory and return its path."""
        self.out_dir.mkdir(parents=True, exist_ok=True)
        if name not in self.files:
            self.files.append(name)
        return self.out_dir / name

    def field(self, values, mesh: FineMesh, stem: str):
        for fmt in self.spec.formats:
            write_field(values, mesh, self.path(f"{stem}.{fmt}"), fmt, name=stem)

    def to_dict(self) -> dict:
        solver = asdict(self.spec.solver)
        config = {k: v for k, v in asdict(self.spec).items() if k != "solver"}
        config["li_list"] = list(config["li_list"])
        config["formats"] = list(config["formats"])
        return {
            "config": {**config, "solver": solver},
            "coefficient": self.spec.descriptor(),
            "iterations": self.iterations,
            "reports": self.reports,
            "files": sorted(self.files),
            "timings_seconds": self.timings,
        }

    def write(self) -> Path:
        path = self.out_dir / "manifest.json"
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        missing = [f for f in self.files if not (self.out_dir / f).exists()]
        if missing:
            raise RuntimeError(f"manifest lists files that were not written: {missing}")
        return path
