"""Time steppers for the three coupled schemes.

Each step solves the fully implicit nonlinear system by plain Newton with an
absolute residual tolerance (max norm of the assembled residual).  The phase
field (and, for the Navier-Stokes coupling, the velocity) is the only state
carried between steps; chemical potential and pressure are per-step
quantities kept for reporting.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import la
from .assembly import (FormContext, QuadratureRule, SchemeKind, assemble_jacobian,
                       assemble_residual, block_layout, initial_mu, quadrature,
                       velocity_space_kind)
from .diagnostics import make_record
from .mesh import Mesh, build_periodic_unit_square
from .physics import MaterialLaws
from .spaces import DofMap, FieldVector, SpaceKind, build_space


@dataclass(frozen=True)
class SchemeConfig:
    """Run parameters of one time integration."""

    scheme: SchemeKind
    n: int = 64
    tau: float = 1e-3
    t_end: float = 0.1
    newton_tol: float = 1e-11
    newton_max_iters: int = 50
    newton_damping: float = 1.0
    laws: MaterialLaws = field(default_factory=MaterialLaws)
    darcy_order: int = 0
    quad_degree: int = 6
    seed: int = 0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"time step must be positive, got {self.tau}")
        if self.t_end < self.tau:
            raise ValueError(f"final time {self.t_end} must be at least one step {self.tau}")
        if self.newton_tol <= 0:
            raise ValueError(f"Newton tolerance must be positive, got {self.newton_tol}")
        if not 0 < self.newton_damping <= 1:
            raise ValueError(f"Newton damping must be in (0, 1], got {self.newton_damping}")
        if self.darcy_order not in (0, 1):
            raise ValueError(f"Darcy order must be 0 or 1, got {self.darcy_order}")
        expected_beta = 1 if self.scheme is SchemeKind.CHNS else 0
        if self.laws.beta != expected_beta:
            raise ValueError(
                f"kinetic flag beta={self.laws.beta} inconsistent with {self.scheme.value}"
            )
        self.laws.validate()

    @property
    def n_steps(self) -> int:
        """Number of uniform steps; a non-integer T/tau is floored."""
        return int(np.floor(self.t_end / self.tau + 1e-9))


@dataclass(frozen=True)
class SchemeState:
    """Solution bundle at one time level."""

    index: int
    phi: FieldVector
    mu: FieldVector
    v: FieldVector | None = None
    p: FieldVector | None = None


@dataclass(frozen=True)
class NewtonReport:
    iterations: int
    residual: float
    converged: bool


class StepFailure(RuntimeError):
    """Newton did not converge within the iteration budget."""

    def __init__(self, message: str, report: NewtonReport):
        super().__init__(message)
        self.report = report


def build_spaces(mesh: Mesh, scheme: SchemeKind, darcy_order: int = 0) -> dict[str, DofMap]:
    spaces = {"phi": build_space(mesh, SpaceKind.P1C)}
    if scheme is not SchemeKind.CH:
        vkind, pkind = velocity_space_kind(scheme, darcy_order)
        spaces["v"] = build_space(mesh, vkind)
        spaces["p"] = build_space(mesh, pkind)
    return spaces


def initial_state(config: SchemeConfig, phi: FieldVector,
                  v: FieldVector | None = None) -> SchemeState:
    """Wrap initial data into a converged-state bundle.

    The chemical potential is seeded by its mass-matrix projection so that
    the first Newton iterate starts from a consistent point.
    """
    rule = quadrature(config.quad_degree)
    mu = initial_mu(phi, config.laws, rule)
    mesh = phi.space.mesh
    if config.scheme is SchemeKind.CH:
        return SchemeState(index=0, phi=phi, mu=mu)
    spaces = build_spaces(mesh, config.scheme, config.darcy_order)
    if v is None:
        v = FieldVector(np.zeros(spaces["v"].ndofs), spaces["v"])
    p = FieldVector(np.zeros(spaces["p"].ndofs), spaces["p"])
    return SchemeState(index=0, phi=phi, mu=mu, v=v, p=p)


def _spaces_of(state: SchemeState, scheme: SchemeKind) -> dict[str, DofMap]:
    spaces = {"phi": state.phi.space}
    if scheme is not SchemeKind.CH:
        spaces["v"] = state.v.space
        spaces["p"] = state.p.space
    return spaces


def step(state: SchemeState, config: SchemeConfig,
         rule: QuadratureRule | None = None) -> tuple[SchemeState, NewtonReport]:
    """Advance one time step by Newton's method.

    The initial guess is the previous time level; the Darcy velocity and
    pressure restart from zero each step.
    """
    scheme = config.scheme
    spaces = _spaces_of(state, scheme)
    if rule is None:
        rule = quadrature(config.quad_degree)
    layout = block_layout(scheme, spaces)
    x = np.zeros(layout.total)
    x[layout.sl("phi")] = state.phi.coeffs
    x[layout.sl("mu")] = state.mu.coeffs
    if scheme is SchemeKind.CHNS:
        x[layout.sl("v")] = state.v.coeffs
        x[layout.sl("p")] = state.p.coeffs
    ctx = FormContext(
        scheme=scheme,
        mesh=state.phi.space.mesh,
        spaces=spaces,
        laws=config.laws,
        tau=config.tau,
        rule=rule,
        prev_phi=state.phi.coeffs,
        prev_v=state.v.coeffs if scheme is SchemeKind.CHNS else None,
        iterate=x,
    )
    resid = assemble_residual(scheme, ctx)
    res_norm = float(np.abs(resid).max())
    iters = 0
    while res_norm > config.newton_tol:
        if iters >= config.newton_max_iters:
            report = NewtonReport(iterations=iters, residual=res_norm, converged=False)
            raise StepFailure(
                f"Newton stalled at step {state.index + 1}: residual {res_norm:.3e} "
                f"after {iters} iterations (tolerance {config.newton_tol:.1e})",
                report,
            )
        jac = assemble_jacobian(scheme, ctx)
        dx = la.direct_solve(jac, -resid)
        x = x + config.newton_damping * dx
        ctx.iterate = x
        resid = assemble_residual(scheme, ctx)
        res_norm = float(np.abs(resid).max())
        iters += 1
    report = NewtonReport(iterations=iters, residual=res_norm, converged=True)
    new = SchemeState(
        index=state.index + 1,
        phi=FieldVector(x[layout.sl("phi")].copy(), spaces["phi"]),
        mu=FieldVector(x[layout.sl("mu")].copy(), spaces["phi"]),
        v=(FieldVector(x[layout.sl("v")].copy(), spaces["v"])
           if scheme is not SchemeKind.CH else None),
        p=(FieldVector(x[layout.sl("p")].copy(), spaces["p"])
           if scheme is not SchemeKind.CH else None),
    )
    return new, report


def run(config: SchemeConfig, initial: SchemeState, diag_sink=None,
        field_sink=None, field_stride: int = 0) -> SchemeState:
    """Integrate n_steps uniform steps from the initial state.

    diag_sink(record) is invoked after every step; field_sink(state) on
    every field_stride-th step when a positive stride is given.  The run is
    deterministic for identical inputs.
    """
    rule = quadrature(config.quad_degree)
    state = initial
    for k in range(1, config.n_steps + 1):
        prev = state
        try:
            state, report = step(state, config, rule)
        except StepFailure as exc:
            phi = prev.phi.coeffs
            raise StepFailure(
                f"{exc} | failing state: step {k}, phi range "
                f"[{phi.min():.6g}, {phi.max():.6g}], mass {phi.mean():.6g}",
                exc.report,
            ) from exc
        if diag_sink is not None:
            diag_sink(make_record(prev, state, config.scheme, config.laws,
                                  config.tau, rule, k, report.iterations,
                                  report.residual))
        if field_sink is not None and field_stride > 0 and k % field_stride == 0:
            field_sink(state)
    return state


def make_mesh_and_phi(config: SchemeConfig, phi_values: np.ndarray | None = None):
    """Convenience constructor: mesh plus a phase field from raw values."""
    mesh = build_periodic_unit_square(config.n)
    pspace = build_space(mesh, SpaceKind.P1C)
    if phi_values is None:
        phi_values = np.zeros(pspace.ndofs)
    return mesh, FieldVector(np.asarray(phi_values, dtype=float), pspace)
