"""Command line front end: config files, seeded initial data, CSV and VTK
output, and the run/check/preset subcommands."""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, fields as dc_fields, replace
from pathlib import Path

import numpy as np

from .assembly import SchemeKind, quadrature
from .diagnostics import DiagnosticsRecord, initial_record
from .mesh import Mesh, build_periodic_unit_square
from .physics import MaterialLaws
from .schemes import SchemeConfig, SchemeState, StepFailure, initial_state, run
from .spaces import DofMap, FieldVector, SpaceKind, build_space

CSV_HEADER = ("step,time,mass,E_total,E_interf,E_bulk,E_kin,diss_mob,diss_alpha,"
              "diss_visc,balance_res,Lx,Ly,P,div_norm,newton_iters,newton_res")

_MASK64 = (1 << 64) - 1


class ConfigError(ValueError):
    """Malformed configuration input; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class RunConfig:
    """Flat key=value run configuration.

    Defaults are the reference experiment values except the mesh size,
    which is the desk-scale 64 instead of the finer production resolution.
    """

    scheme: str = "ch"
    n: int = 64
    tau: float = 1e-3
    t_end: float = 0.1
    gamma: float = 1e-4
    mob_scale: float = 5.0
    mob_floor: float = 1e-6
    alpha0: float = 1e-2
    alpha1: float = 1.0
    eta0: float = 1e-4
    eta1: float = 1e-2
    seed: int = 0
    newton_tol: float = 1e-11
    newton_max_iters: int = 50
    newton_damping: float = 1.0
    darcy_order: int = 0
    quad_degree: int = 6
    out_dir: str = "out"
    field_stride: int = 0

    def __post_init__(self):
        if self.scheme not in ("ch", "chd", "chns"):
            raise ConfigError(f"scheme must be ch, chd or chns, got {self.scheme!r}")
        if self.n < 2:
            raise ConfigError(f"n must be at least 2, got {self.n}")
        if self.tau <= 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if self.t_end < self.tau:
            raise ConfigError(f"T={self.t_end} is below one step tau={self.tau}")
        if not 0 <= self.seed <= _MASK64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.field_stride < 0:
            raise ConfigError(f"field_stride must be non-negative, got {self.field_stride}")
        if self.quad_degree not in range(1, 9):
            raise ConfigError(f"quad_degree must be in 1..8, got {self.quad_degree}")

    @property
    def scheme_kind(self) -> SchemeKind:
        return SchemeKind(self.scheme)

    def laws(self) -> MaterialLaws:
        return MaterialLaws(gamma=self.gamma, mob_scale=self.mob_scale,
                            mob_floor=self.mob_floor, alpha0=self.alpha0,
                            alpha1=self.alpha1, eta0=self.eta0, eta1=self.eta1,
                            beta=1 if self.scheme == "chns" else 0)

    def scheme_config(self) -> SchemeConfig:
        return SchemeConfig(scheme=self.scheme_kind, n=self.n, tau=self.tau,
                            t_end=self.t_end, newton_tol=self.newton_tol,
                            newton_max_iters=self.newton_max_iters,
                            newton_damping=self.newton_damping, laws=self.laws(),
                            darcy_order=self.darcy_order,
                            quad_degree=self.quad_degree, seed=self.seed)

    def serialize(self) -> str:
        lines = [f"{f.name}={getattr(self, f.name)}" for f in dc_fields(self)]
        return "\n".join(lines) + "\n"


_INT_KEYS = {"n", "seed", "newton_max_iters", "darcy_order", "quad_degree", "field_stride"}
_STR_KEYS = {"scheme", "out_dir"}
_ALL_KEYS = {f.name for f in dc_fields(RunConfig)}


def parse_config(text: str) -> RunConfig:
    """Parse key=value lines; '#' starts a comment, unknown keys are errors."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {raw.strip()!r}", lineno)
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key == "T":  # accepted alias for the final time
            key = "t_end"
        if key not in _ALL_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            if key in _STR_KEYS:
                values[key] = val
            elif key in _INT_KEYS:
                values[key] = int(val)
            else:
                values[key] = float(val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {val!r}", lineno) from exc
    try:
        return RunConfig(**values)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def splitmix64(z: int) -> int:
    """Standard finalizer; bit-reproducible across implementations."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def initial_phi(seed: int, space: DofMap) -> FieldVector:
    """Uniform 0.4 plus a seeded perturbation in [-1e-3, 1e-3] per vertex."""
    if space.kind is not SpaceKind.P1C:
        raise ValueError("initial data lives on the continuous P1 space")
    vals = np.empty(space.ndofs)
    for i in range(space.ndofs):
        u = splitmix64((seed + i) & _MASK64) / 2.0**64
        vals[i] = 0.4 + (2.0 * u - 1.0) * 1e-3
    return FieldVector(vals, space)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_csv_header(stream) -> None:
    stream.write(CSV_HEADER + "\n")


def write_csv_row(record: DiagnosticsRecord, stream) -> None:
    row = [str(record.step), _fmt(record.time), _fmt(record.mass),
           _fmt(record.e_total), _fmt(record.e_interf), _fmt(record.e_bulk),
           _fmt(record.e_kin), _fmt(record.diss_mob), _fmt(record.diss_alpha),
           _fmt(record.diss_visc), _fmt(record.balance_res), _fmt(record.lx),
           _fmt(record.ly), _fmt(record.ang), _fmt(record.div_norm),
           str(record.newton_iters), _fmt(record.newton_res)]
    stream.write(",".join(row) + "\n")


def _unwrapped_grid(mesh: Mesh):
    """(n+1)^2 points duplicating the periodic seam, plus triangle cells."""
    n = mesh.n
    idx = np.arange((n + 1) * (n + 1))
    pts = np.column_stack([(idx % (n + 1)) / n, (idx // (n + 1)) / n])
    src = (idx // (n + 1)) % n * n + (idx % (n + 1)) % n  # source periodic vertex
    cells = []
    for j in range(n):
        for i in range(n):
            v00 = j * (n + 1) + i
            v10 = v00 + 1
            v01 = v00 + (n + 1)
            v11 = v01 + 1
            cells.append((v00, v10, v11))
            cells.append((v00, v11, v01))
    return pts, src, np.array(cells)


def write_vtk(fields: dict, mesh: Mesh, path) -> None:
    """Legacy ASCII unstructured-grid file with the periodic seam duplicated.

    fields maps names to FieldVectors; P1 fields become point data, the
    quadratic velocity is sampled at vertices as point vectors, and H(div)
    velocities and discontinuous pressures become cell data.
    """
    pts, src, cells = _unwrapped_grid(mesh)
    point_scalars = {}
    point_vectors = {}
    cell_scalars = {}
    cell_vectors = {}
    for name, f in fields.items():
        kind = f.space.kind
        if kind is SpaceKind.P1C:
            point_scalars[name] = f.coeffs[src]
        elif kind is SpaceKind.P2C_VEC:
            ns = f.space.nscalar
            point_vectors[name] = np.column_stack([f.coeffs[src], f.coeffs[ns + src]])
        elif kind in (SpaceKind.RT0, SpaceKind.RT1):
            from .spaces import eval_basis
            center = np.array([[1 / 3, 1 / 3]])
            vals = np.empty((mesh.num_triangles, 2))
            for t in range(mesh.num_triangles):
                be = eval_basis(f.space, t, center)
                vals[t] = np.einsum("ld,l->d", be.val[0], f.coeffs[f.space.element_dofs[t]])
            cell_vectors[name] = vals
        elif kind in (SpaceKind.P0_DISC, SpaceKind.P1_DISC):
            if kind is SpaceKind.P0_DISC:
                cell_scalars[name] = f.coeffs.copy()
            else:
                cell_scalars[name] = f.coeffs.reshape(-1, 3).mean(axis=1)
        else:
            raise ValueError(f"no output mapping for space {kind.name}")
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8") as fh:
            fh.write("# vtk DataFile Version 3.0\n")
            fh.write("phasefem fields\n")
            fh.write("ASCII\n")
            fh.write("DATASET UNSTRUCTURED_GRID\n")
            fh.write(f"POINTS {len(pts)} double\n")
            for x, y in pts:
                fh.write(f"{_fmt(x)} {_fmt(y)} 0\n")
            fh.write(f"CELLS {len(cells)} {4 * len(cells)}\n")
            for a, b, c in cells:
                fh.write(f"3 {a} {b} {c}\n")
            fh.write(f"CELL_TYPES {len(cells)}\n")
            fh.write("5\n" * len(cells))
            if point_scalars or point_vectors:
                fh.write(f"POINT_DATA {len(pts)}\n")
                for name, vals in point_scalars.items():
                    fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                    for v in vals:
                        fh.write(_fmt(v) + "\n")
                for name, vals in point_vectors.items():
                    fh.write(f"VECTORS {name} double\n")
                    for vx, vy in vals:
                        fh.write(f"{_fmt(vx)} {_fmt(vy)} 0\n")
            if cell_scalars or cell_vectors:
                fh.write(f"CELL_DATA {len(cells)}\n")
                for name, vals in cell_scalars.items():
                    fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                    for v in vals:
                        fh.write(_fmt(v) + "\n")
                for name, vals in cell_vectors.items():
                    fh.write(f"VECTORS {name} double\n")
                    for vx, vy in vals:
                        fh.write(f"{_fmt(vx)} {_fmt(vy)} 0\n")
    except OSError as exc:
        raise OSError(f"failed writing VTK file {path}: {exc}") from exc


def _vtk_fields(state: SchemeState, scheme: SchemeKind) -> dict:
    fields = {"phi": state.phi, "mu": state.mu}
    if scheme is not SchemeKind.CH:
        fields["velocity"] = state.v
        fields["pressure"] = state.p
    return fields


def run_experiment(config: RunConfig, out_dir: Path) -> dict:
    """Execute one seeded run, writing CSV (and optional VTK) into out_dir."""
    scfg = config.scheme_config()
    mesh = build_periodic_unit_square(config.n)
    pspace = build_space(mesh, SpaceKind.P1C)
    phi0 = initial_phi(config.seed, pspace)
    state0 = initial_state(scfg, phi0)
    rule = quadrature(config.quad_degree)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{config.scheme}.csv"
    summary = {"mass0": None, "mass_drift": 0.0, "max_balance": 0.0,
               "max_div": 0.0, "final_energy": None}
    rec0 = initial_record(state0, scfg.scheme, scfg.laws, rule)
    summary["mass0"] = rec0.mass
    summary["final_energy"] = rec0.e_total

    with csv_path.open("w", encoding="utf-8", newline="\n") as stream:
        write_csv_header(stream)
        write_csv_row(rec0, stream)

        def sink(rec: DiagnosticsRecord):
            write_csv_row(rec, stream)
            summary["mass_drift"] = max(summary["mass_drift"], abs(rec.mass - summary["mass0"]))
            summary["max_balance"] = max(summary["max_balance"], rec.balance_res)
            summary["max_div"] = max(summary["max_div"], rec.div_norm)
            summary["final_energy"] = rec.e_total

        def field_sink(state: SchemeState):
            write_vtk(_vtk_fields(state, scfg.scheme), mesh,
                      out_dir / f"{config.scheme}_{state.index:06d}.vtk")

        if config.field_stride > 0:
            write_vtk(_vtk_fields(state0, scfg.scheme), mesh,
                      out_dir / f"{config.scheme}_000000.vtk")
        run(scfg, state0, diag_sink=sink,
            field_sink=field_sink if config.field_stride > 0 else None,
            field_stride=config.field_stride)
    summary["csv"] = str(csv_path)
    return summary


def _self_check() -> list[tuple[str, bool]]:
    """Small invariant suite on a tiny mesh, used by the check subcommand."""
    from . import diagnostics as dg
    from .physics import dg_potential, double_well

    results = []
    mesh = build_periodic_unit_square(4)
    results.append(("mesh counts", (mesh.num_vertices, mesh.num_edges,
                                    mesh.num_triangles) == (16, 48, 32)))
    results.append(("euler characteristic",
                    mesh.num_vertices - mesh.num_edges + mesh.num_triangles == 0))
    rng = np.random.default_rng(0)
    a = rng.uniform(-0.5, 1.5, 200)
    b = rng.uniform(-0.5, 1.5, 200)
    lhs = dg_potential(a, b) * (b - a)
    rhs = double_well(b) - double_well(a)
    results.append(("potential secant identity",
                    bool(np.all(np.abs(lhs - rhs) <= 1e-14 * (1 + np.abs(rhs))))))
    rule = quadrature(2)
    results.append(("quadrature weights", abs(rule.weights.sum() - 0.5) < 1e-15))
    cfg = RunConfig(scheme="ch", n=8, t_end=2e-3, seed=7)
    scfg = cfg.scheme_config()
    pspace = build_space(build_periodic_unit_square(cfg.n), SpaceKind.P1C)
    s0 = initial_state(scfg, initial_phi(cfg.seed, pspace))
    rule6 = quadrature(6)
    recs = []
    run(scfg, s0, diag_sink=recs.append)
    m0 = dg.mass(s0.phi, rule6)
    results.append(("mass conservation", all(abs(r.mass - m0) <= 1e-12 for r in recs)))
    results.append(("energy balance", all(r.balance_res <= 1e-9 for r in recs)))
    e0 = dg.energy(s0.phi, None, scfg.laws, rule6).total
    results.append(("energy monotone",
                    all(b.e_total <= a + 1e-9 for a, b in
                        zip([e0] + [r.e_total for r in recs[:-1]], recs))))
    return results


def _preset_text(scheme: str) -> str:
    cfg = RunConfig(scheme=scheme, t_end=0.3,
                    field_stride=50 if scheme != "ch" else 100)
    return cfg.serialize()


def cli_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="phasefem",
        description="Structure-preserving phase-field flow solver on the periodic unit square",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a configured run")
    p_run.add_argument("--config", required=True, help="path to key=value config file")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--out", default=None, help="override the output directory")
    p_check = sub.add_parser("check", help="run the built-in invariant suite")
    p_preset = sub.add_parser("preset", help="print a reference config")
    p_preset.add_argument("scheme", choices=["ch", "chd", "chns"])
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2

    if args.command == "preset":
        sys.stdout.write(_preset_text(args.scheme))
        return 0

    if args.command == "check":
        results = _self_check()
        ok = True
        for name, passed in results:
            print(f"check {name}: {'ok' if passed else 'FAIL'}")
            ok = ok and passed
        return 0 if ok else 1

    # run
    cfg_path = Path(args.config)
    if not cfg_path.is_file():
        print(f"error: file-not-found: {cfg_path}", file=sys.stderr)
        return 1
    try:
        config = parse_config(cfg_path.read_text(encoding="utf-8"))
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 1
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    overrides["out_dir"] = args.out or os.environ.get("PHASEFIELD_OUT") or config.out_dir
    config = replace(config, **overrides)
    try:
        summary = run_experiment(config, Path(config.out_dir))
    except StepFailure as exc:
        print(f"error: step-failure: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1
    print(f"final_energy={_fmt(summary['final_energy'])} "
          f"mass_drift={_fmt(summary['mass_drift'])} "
          f"max_balance_res={_fmt(summary['max_balance'])} "
          f"max_div_norm={_fmt(summary['max_div'])}")
    return 0


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))
