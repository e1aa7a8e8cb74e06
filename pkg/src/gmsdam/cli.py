"""Command line entry point: ``gmsdam {run,sweep,basis,check}``."""
from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from .driver import DamProblem, ErrorReport, run_to_steady, sweep
from .duality import (heaviside_contains, indicator_contains, yosida_heaviside,
                      yosida_indicator_nonpositive)
from .gmsfem import build_coarse_space
from .io import ConfigError, ExperimentSpec, RunManifest, parse_config, write_error_table
from .numerics import SolverError
from .permeability import FieldFormatError, save_field

log = logging.getLogger("gmsdam")


def _load_spec(args) -> ExperimentSpec:
    spec = parse_config(args.config) if args.config else ExperimentSpec()
    kw = {}
    if args.mode is not None:
        kw["mode"] = args.mode
    if args.li is not None:
        kw["li"] = args.li
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.out_dir is not None:
        kw["out_dir"] = args.out_dir
    if getattr(args, "li_list", None):
        kw["li_list"] = tuple(args.li_list)
    return spec.with_(**kw) if kw else spec


def _setup(spec: ExperimentSpec):
    mesh = spec.fine_mesh()
    kappa = spec.coefficient(mesh)
    log.info("fine mesh %dx%d (%d nodes), coefficient contrast %.3g",
             mesh.nx, mesh.ny, mesh.n_nodes, kappa.contrast)
    return mesh, kappa


def _iterations(res) -> dict:
    lo, hi = res.state.theta_range
    return {"steps": res.steps, "converged": res.converged,
            "theta_min_preclip": lo, "theta_max_preclip": hi}


def _write_state(manifest: RunManifest, mesh, state, prefix: str):
    manifest.field(state.p, mesh, f"{prefix}pressure")
    manifest.field(state.theta, mesh, f"{prefix}saturation")


def cmd_run(spec: ExperimentSpec) -> int:
    manifest = RunManifest(spec, spec.out_dir)
    mesh, kappa = _setup(spec)
    save_field(kappa, mesh, manifest.path("permeability.csv"))
    t0 = time.perf_counter()
    problem = DamProblem(mesh, kappa, spec.solver)
    if spec.solver.mode == "fine":
        solver = problem.fine_solver()
    else:
        space = build_coarse_space(spec.coarse_mesh(mesh), kappa, spec.solver.li)
        solver = problem.coarse_solver(space)
        manifest.reports.append({"Li": spec.solver.li, "coarse_dim": space.dim})
    manifest.timings["setup"] = time.perf_counter() - t0
    res = run_to_steady(problem, solver)
    manifest.timings[spec.solver.mode] = res.seconds
    manifest.iterations[spec.solver.mode] = _iterations(res)
    _write_state(manifest, mesh, res.state, "")
    manifest.write()
    print(f"{spec.solver.mode}: {res.steps} steps, converged={res.converged}, "
          f"theta pre-clip range [{res.state.theta_range[0]:.3g}, {res.state.theta_range[1]:.3g}]")
    return 0 if res.converged else 3


def cmd_sweep(spec: ExperimentSpec) -> int:
    manifest = RunManifest(spec, spec.out_dir)
    mesh, kappa = _setup(spec)
    coarse = spec.coarse_mesh(mesh)
    save_field(kappa, mesh, manifest.path("permeability.csv"))
    t0 = time.perf_counter()
    fine, rows = sweep(mesh, coarse, kappa, spec.solver.with_(mode="gmsfem"), spec.li_list)
    manifest.timings["total"] = time.perf_counter() - t0
    manifest.timings["fine"] = fine.seconds
    manifest.iterations["fine"] = _iterations(fine)
    _write_state(manifest, mesh, fine.state, "fine_")
    reports: list[ErrorReport] = []
    for rep, res, _ in rows:
        reports.append(rep)
        manifest.iterations[f"gmsfem_li{rep.li}"] = _iterations(res)
        manifest.timings[f"gmsfem_li{rep.li}"] = res.seconds
        manifest.reports.append({"Li": rep.li, "coarse_dim": rep.coarse_dim,
                                 "energy_error_percent": rep.energy_error_percent})
        _write_state(manifest, mesh, res.state, f"gmsfem_li{rep.li}_")
    write_error_table(reports, manifest.path("error_table.csv"))
    manifest.write()
    print(f"{'dim(V0)':>8} {'Li':>3} {'error %':>9} {'steps':>6}")
    for rep in reports:
        print(f"{rep.coarse_dim:>8} {rep.li:>3} {rep.energy_error_percent:>9.3f} {rep.coarse_steps:>6}")
    print(f"fine reference: {fine.steps} steps")
    ok = fine.converged and all(r.converged for r in reports)
    return 0 if ok else 3


def cmd_basis(spec: ExperimentSpec, node: int | None) -> int:
    manifest = RunManifest(spec, spec.out_dir)
    mesh, kappa = _setup(spec)
    coarse = spec.coarse_mesh(mesh)
    space = build_coarse_space(coarse, kappa, spec.solver.li)
    if node is None:
        node = (coarse.Ny // 2) * (coarse.Nx + 1) + coarse.Nx // 2
    if not 0 <= node < coarse.n_nodes:
        raise ValueError(f"coarse node {node} out of range [0, {coarse.n_nodes})")
    manifest.field(space.chi[:, node].toarray().ravel(), mesh, f"chi_{node}")
    for k, col in enumerate(np.flatnonzero(space.owner == node)):
        manifest.field(space.R0[:, col].toarray().ravel(), mesh, f"basis_{node}_{k}")
    np.savetxt(manifest.path("weight.csv"), space.weight.reshape(mesh.ny, mesh.nx),
               delimiter=",", fmt="%.17g")
    with manifest.path("eigenvalues.csv").open("w") as fh:
        fh.write("node,index,eigenvalue\n")
        for i, vals in enumerate(space.eigenvalues):
            for ell, v in enumerate(vals):
                fh.write(f"{i},{ell},{v:.17g}\n")
    manifest.reports.append({"Li": spec.solver.li, "coarse_dim": space.dim})
    manifest.write()
    print(f"coarse space dimension {space.dim}; basis of node {node} written to {spec.out_dir}")
    return 0


def _self_checks():
    """Small, fast invariants; each yields (name, passed, detail)."""
    from .assembly import FineOperators, assemble_transport_rhs
    from .driver import SolverConfig, initial_state, time_step
    from .grid import BoundaryPartition, build_coarse_mesh, build_fine_mesh
    from .gmsfem import build_partition_of_unity, compute_weight, local_eigenproblem
    from .numerics import smallest_eigenpairs
    from .permeability import make_field

    rng = np.random.default_rng(0)
    y = rng.uniform(-2, 2, 1000)
    ok = True
    for G, contains in ((yosida_heaviside, heaviside_contains),
                        (yosida_indicator_nonpositive, indicator_contains)):
        u = G(y, 0.5, 1.0)
        ok &= bool(np.all(contains(y - 1.0 * u, u, 0.5, atol=1e-12)))
    yield "yosida equivalence", ok, ""

    mesh = build_fine_mesh(20, 20)
    coarse = build_coarse_mesh(mesh, 4, 4)
    kappa = make_field("channels_inclusions", mesh, 0)
    ops = FineOperators.build(mesh, kappa)
    sym = max(abs(m - m.T).max() for m in (ops.stiffness, ops.mass, ops.seepage_mass, ops.flux_mass))
    yield "matrix symmetry", sym < 1e-13, f"max asymmetry {sym:.1e}"
    yield "stiffness kernel", abs(ops.stiffness @ np.ones(mesh.n_nodes)).max() < 1e-12, ""
    b = assemble_transport_rhs(mesh, np.ones(mesh.n_elements), np.ones(mesh.n_nodes), 1.0, 0.01)
    yield "transport total", abs(b.sum() - 100.0) < 1e-10, f"sum b = {b.sum():.15g}"

    chi = build_partition_of_unity(coarse, kappa)
    pu = abs(np.asarray(chi.sum(axis=1)).ravel() - 1).max()
    yield "partition of unity", pu < 1e-10, f"max |sum chi - 1| = {pu:.1e}"
    weight = compute_weight(coarse, kappa, chi)
    sigma = max(smallest_eigenpairs(*local_eigenproblem(coarse, kappa, weight, k), 1).values[0]
                for k in range(coarse.n_nodes))
    yield "neumann kernel", sigma < 1e-8, f"max sigma_1 = {sigma:.1e}"

    sub = build_fine_mesh(10, 10, BoundaryPartition.submerged())
    prob = DamProblem(sub, make_field("constant", sub), SolverConfig())
    state = initial_state(prob)
    new = time_step(prob, prob.fine_solver(), state)
    dev = abs(new.p - (1 - sub.coords[:, 1])).max()
    yield "hydrostatic fixed point", dev < 1e-8, f"max deviation {dev:.1e}"


def cmd_check() -> int:
    failed = 0
    for name, passed, detail in _self_checks():
        print(f"{'PASS' if passed else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
        failed += not passed
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment file")
    common.add_argument("--mode", choices=("fine", "gmsfem"))
    common.add_argument("--li", type=int, help="basis functions per interior coarse node")
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--seed", type=int, help="coefficient generator seed")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="gmsdam", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="one steady-state solve (fine or gmsfem)")
    sw = sub.add_parser("sweep", parents=[common],
                        help="fine reference plus gmsfem runs over a list of Li")
    sw.add_argument("--li-list", dest="li_list", type=int, nargs="+")
    bs = sub.add_parser("basis", parents=[common], help="dump the multiscale basis of one coarse node")
    bs.add_argument("--node", type=int, help="coarse node index (default: the centre node)")
    sub.add_parser("check", parents=[common], help="run quick invariant self-checks")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        if args.command == "check":
            return cmd_check()
        spec = _load_spec(args)
        if args.command == "run":
            return cmd_run(spec)
        if args.command == "sweep":
            return cmd_sweep(spec)
        return cmd_basis(spec, args.node)
    except (ConfigError, FieldFormatError, SolverError, ValueError, OSError) as exc:
        print(f"gmsdam: error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, ConfigError) else 1


if __name__ == "__main__":
    sys.exit(main())
