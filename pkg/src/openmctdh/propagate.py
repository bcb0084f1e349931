"""Time integration: variational splitting, relaxation, trajectory recording.

One full step of length tau is the Strang composition

    kinetic(tau/2) o potential(tau) o kinetic(tau/2).

The kinetic part is the exact free flow: it rotates every orbital by the
diagonal unitary exp(-i tau k^2 / 4) in Fourier space and leaves the Galerkin
matrix untouched, because a one-body unitary maps the determinant manifold
onto itself.  The potential part integrates the coupled orbital/matrix
equations with classical RK4, re-evaluating all orbital-dependent
coefficients at every stage.  Local error is O(tau^3).

Ground states are prepared by imaginary-time relaxation of the pure-state
equations (plain RK4 on the gradient flow, with per-step renormalization and
re-orthonormalization; no splitting, since the free flow is not unitary in
imaginary time).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import grid1d
from .errors import ConvergenceError, NumericalBlowupError
from .fock import fermion_compound, galerkin_one_body, galerkin_two_body
from .grid1d import SPFSet
from .liouville import BlockDensityMatrix
from .mctdh import (
    DEFAULT_EPS_REG,
    Integrals,
    MCTDHState,
    Potentials,
    build_integrals,
    b_rhs,
    energy_expectation,
    min_eig_s,
    particle_density,
    reduced_densities,
    spf_rhs,
)
from .purestate import PureMCTDHState, pure_rhs

logger = logging.getLogger(__name__)

__all__ = [
    "PropagationConfig",
    "TrajectoryRecord",
    "RelaxResult",
    "kinetic_half_step",
    "potential_step",
    "split_step",
    "propagate",
    "relax_imaginary",
    "reorthonormalize",
]

ORTHO_DRIFT_LIMIT = 1e-8
RETRACT_THRESHOLD = 5e-13


@dataclass
class PropagationConfig:
    """Step size, horizon and bookkeeping for a propagation run."""

    tau: float
    t_final: float
    record_every: int = 1
    eps_reg: float = DEFAULT_EPS_REG
    imaginary: bool = False

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.t_final < 0:
            raise ValueError(f"t_final must be non-negative, got {self.t_final}")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.tau))


@dataclass(eq=False)
class TrajectoryRecord:
    """Observables stored along a run."""

    t: float
    block_probs: np.ndarray
    energy: float
    trace: float
    sigma_min: float
    density: np.ndarray


@dataclass(eq=False)
class RelaxResult:
    state: MCTDHState
    energy: float
    steps: int


def kinetic_half_step(state: MCTDHState, dt: float) -> MCTDHState:
    """Exact free flow over dt applied to the orbitals; B is unchanged."""
    phi = grid1d.free_propagation_rows(state.spfs.grid, state.spfs.phi, dt)
    return MCTDHState(SPFSet(state.spfs.grid, phi), state.b, state.t + dt)


def _coupled_rhs(grid, basis, phi, blocks, model: Potentials, eps_reg: float):
    spfs = SPFSet(grid, phi)
    ints = build_integrals(spfs, model, include_kinetic=False)
    state = MCTDHState(spfs, BlockDensityMatrix(basis, blocks))
    bdot = b_rhs(state, ints)
    dens = reduced_densities(state, need_two_body=ints.u is not None)
    phidot = spf_rhs(state, ints, eps_reg, densities=dens)
    return phidot, bdot


def potential_step(
    state: MCTDHState, tau: float, model: Potentials, eps_reg: float = DEFAULT_EPS_REG
) -> MCTDHState:
    """One RK4 step of the coupled equations with the kinetic term excluded.

    All four stages rebuild h_jk, Gamma_jk, u_jklm and the mean fields from
    the stage orbitals.
    """
    grid = state.spfs.grid
    basis = state.basis
    phi0, b0 = state.spfs.phi, state.b.blocks

    def f(phi, blocks):
        return _coupled_rhs(grid, basis, phi, blocks, model, eps_reg)

    k1p, k1b = f(phi0, b0)
    k2p, k2b = f(phi0 + (tau / 2) * k1p, _axpy(b0, k1b, tau / 2))
    k3p, k3b = f(phi0 + (tau / 2) * k2p, _axpy(b0, k2b, tau / 2))
    k4p, k4b = f(phi0 + tau * k3p, _axpy(b0, k3b, tau))
    phi = phi0 + (tau / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p)
    blocks = [
        b + (tau / 6.0) * (a + 2 * c + 2 * d + e)
        for b, a, c, d, e in zip(b0, k1b, k2b, k3b, k4b)
    ]
    return MCTDHState(
        SPFSet(grid, phi), BlockDensityMatrix(basis, blocks), state.t + tau
    )


def _axpy(blocks, deriv, c):
    return [b + c * d for b, d in zip(blocks, deriv)]


def split_step(
    state: MCTDHState, tau: float, model: Potentials, eps_reg: float = DEFAULT_EPS_REG
) -> MCTDHState:
    """Strang-symmetric full step."""
    out = kinetic_half_step(state, tau / 2)
    out = potential_step(out, tau, model, eps_reg)
    out = kinetic_half_step(out, tau / 2)
    out.t = state.t + tau
    return out


def signed_qr(columns: np.ndarray):
    """QR with the R diagonal rotated positive-real, so Q stays close to the input."""
    q, r = np.linalg.qr(columns)
    d = np.diagonal(r)
    phase = np.where(np.abs(d) > 0, d / np.abs(np.where(np.abs(d) > 0, d, 1.0)), 1.0)
    return q * phase[None, :], r / phase[:, None]


def reorthonormalize(state: MCTDHState) -> MCTDHState:
    """Restore orbital orthonormality and transform B congruently.

    QR-orthonormalizes the orbitals (phi_old = phi_new R columnwise) and maps
    every block with the compound matrices of R, an exact re-parameterization
    of the same density operator.  Fermion bases only.
    """
    if state.basis.statistics != "fermion":
        raise NotImplementedError("orthonormalization safeguard implemented for fermions")
    grid = state.spfs.grid
    q, r = signed_qr(state.spfs.phi.T * np.sqrt(grid.dx))
    phi_new = q.T / np.sqrt(grid.dx)
    blocks = []
    for n, b in enumerate(state.b.blocks):
        g = fermion_compound(r, n)
        blocks.append(g @ b @ g.conj().T)
    return MCTDHState(
        SPFSet(grid, phi_new), BlockDensityMatrix(state.basis, blocks), state.t
    )


def _record(state: MCTDHState, model: Potentials) -> TrajectoryRecord:
    probs = state.b.block_traces().real
    energy = energy_expectation(state, model).real
    dens = reduced_densities(state, need_two_body=False)
    return TrajectoryRecord(
        t=state.t,
        block_probs=probs,
        energy=energy,
        trace=float(probs.sum()),
        sigma_min=min_eig_s(dens.s),
        density=particle_density(state),
    )


def propagate(
    state: MCTDHState,
    model: Potentials,
    config: PropagationConfig,
    observer=None,
) -> tuple[MCTDHState, list[TrajectoryRecord]]:
    """Repeated split steps with periodic observable records.

    observer(state, record) is invoked at every record point (including t=0
    and the endpoint) and must treat the state as read-only.
    """
    if config.imaginary:
        raise ValueError("imaginary-time propagation is handled by relax_imaginary")
    records = [_record(state, model)]
    if observer is not None:
        observer(state, records[-1])
    ortho_events = 0
    retractable = state.basis.statistics == "fermion"
    for step in range(1, config.n_steps + 1):
        state = split_step(state, config.tau, model, config.eps_reg)
        if not state.b.is_finite() or not np.isfinite(state.spfs.phi).all():
            raise NumericalBlowupError(f"non-finite state at step {step}")
        defect = state.spfs.orthonormality_defect()
        if defect > ORTHO_DRIFT_LIMIT:
            ortho_events += 1
            logger.warning(
                "orbital drift safeguard fired at t=%.6g (defect %.2e)", state.t, defect
            )
        if retractable and defect > RETRACT_THRESHOLD:
            # exact gauge retraction; keeps the drift far below the safeguard limit
            state = reorthonormalize(state)
        if step % config.record_every == 0 or step == config.n_steps:
            records.append(_record(state, model))
            if observer is not None:
                observer(state, records[-1])
    if ortho_events:
        logger.info("re-orthonormalization safeguard fired %d times", ortho_events)
    return state, records


def _pure_from_state(state: MCTDHState) -> PureMCTDHState:
    """Extract the coefficient vector of a rank-1 block-N density."""
    n = state.basis.max_particles
    block = state.b.blocks[n]
    vals, vecs = np.linalg.eigh(block)
    if vals[-1] <= 0:
        raise ValueError("top block carries no probability")
    residual = np.sum(np.abs(vals[:-1]))
    if residual > 1e-8:
        raise ValueError(f"initial density is not rank-1 (residual weight {residual:.3e})")
    return PureMCTDHState(state.spfs, state.basis, np.sqrt(vals[-1]) * vecs[:, -1], state.t)


def relax_imaginary(
    initial: MCTDHState,
    model: Potentials,
    config: PropagationConfig,
    tol: float = 1e-10,
) -> RelaxResult:
    """Imaginary-time relaxation of a pure state to the variational ground state.

    RK4 on the gradient flow with the full one-body operator (kinetic
    included); after every step the coefficient vector is renormalized and
    the orbitals re-orthonormalized.  Stops once |dE/ds| < tol; raises
    ConvergenceError after config.n_steps steps without convergence.
    """
    if not config.imaginary:
        raise ValueError("relaxation requires an imaginary-time configuration")
    if model.cap is not None:
        raise ValueError("relaxation must run without the absorber")
    grid = initial.spfs.grid
    pure = _pure_from_state(initial)
    pure.coeffs = pure.coeffs / np.linalg.norm(pure.coeffs)
    tau = config.tau

    def f(phi, c):
        spfs = SPFSet(grid, phi)
        ints = build_integrals(spfs, model, include_kinetic=True)
        return pure_rhs(
            PureMCTDHState(spfs, pure.basis, c), ints, config.eps_reg, imaginary=True
        )

    def rayleigh(phi, c):
        spfs = SPFSet(grid, phi)
        ints = build_integrals(spfs, model, include_kinetic=True)
        h = galerkin_one_body(pure.basis, ints.h_mat)[pure.basis.max_particles]
        if ints.u is not None:
            h = h + galerkin_two_body(pure.basis, ints.u)[pure.basis.max_particles]
        return float((c.conj() @ (h @ c)).real)

    phi, c = pure.spfs.phi, pure.coeffs
    energy = rayleigh(phi, c)
    for step in range(1, config.n_steps + 1):
        k1p, k1c = f(phi, c)
        k2p, k2c = f(phi + (tau / 2) * k1p, c + (tau / 2) * k1c)
        k3p, k3c = f(phi + (tau / 2) * k2p, c + (tau / 2) * k2c)
        k4p, k4c = f(phi + tau * k3p, c + tau * k3c)
        phi = phi + (tau / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p)
        c = c + (tau / 6.0) * (k1c + 2 * k2c + 2 * k3c + k4c)
        if not (np.isfinite(phi).all() and np.isfinite(c).all()):
            raise NumericalBlowupError(f"relaxation diverged at step {step}")
        c = c / np.linalg.norm(c)
        q, _ = np.linalg.qr(phi.T * np.sqrt(grid.dx))
        phi = q.T / np.sqrt(grid.dx)
        new_energy = rayleigh(phi, c)
        if abs(new_energy - energy) < tol * tau:
            energy = new_energy
            basis = pure.basis
            state = MCTDHState(
                SPFSet(grid, phi),
                BlockDensityMatrix.pure(basis, basis.max_particles, c),
                0.0,
            )
            return RelaxResult(state=state, energy=energy, steps=step)
        energy = new_energy
    raise ConvergenceError(
        f"relaxation did not converge within {config.n_steps} steps",
        last_energy=energy,
    )
