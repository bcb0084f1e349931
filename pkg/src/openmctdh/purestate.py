"""Pure-state MCTDH: a coefficient vector on one particle-number block.

Closed-system specialization used for ground-state relaxation and as an
independent cross-check of the density-operator propagation.  The reduced
densities are assembled from the coefficient vector directly,

    S_jk   = <c_j psi | c_k psi>,
    S2_jklm = <c_k c_j psi | c_m c_l psi>,

never through B^2, so the two code paths share only the low-level basis maps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grid1d
from .fock import FockBasis
from .grid1d import SPFSet
from .mctdh import Integrals, Potentials, build_integrals, regularized_solve
from .fock import galerkin_one_body, galerkin_two_body

__all__ = ["PureMCTDHState", "pure_reduced_densities", "pure_rhs", "pure_split_step"]


@dataclass(eq=False)
class PureMCTDHState:
    """Orbitals plus an N-particle coefficient vector."""

    spfs: SPFSet
    basis: FockBasis
    coeffs: np.ndarray
    t: float = 0.0

    @property
    def n(self) -> int:
        return self.basis.max_particles

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


def pure_reduced_densities(basis: FockBasis, coeffs: np.ndarray, *, need_two_body: bool):
    """(S, S2) evaluated as inner products of annihilated vectors."""
    n = basis.max_particles
    d = basis.annihilators[n] @ coeffs
    s = d.conj() @ d.T
    s = 0.5 * (s + s.conj().T)
    s2 = None
    if need_two_body and n >= 2:
        e = basis.pair_annihilators[n] @ coeffs  # [k, j] slot holds c_k c_j psi
        s2 = np.einsum("kja,mla->jklm", e.conj(), e)
    elif need_two_body:
        L = basis.n_modes
        s2 = np.zeros((L, L, L, L), dtype=complex)
    return s, s2


def _hamiltonian_block(basis: FockBasis, integrals: Integrals) -> np.ndarray:
    n = basis.max_particles
    h = galerkin_one_body(basis, integrals.h_mat)[n]
    if integrals.u is not None:
        h = h + galerkin_two_body(basis, integrals.u)[n]
    return h


def pure_rhs(
    state: PureMCTDHState,
    integrals: Integrals,
    eps_reg: float,
    *,
    imaginary: bool = False,
):
    """(dphi/dt rows, dc/dt) for real time, or the gradient-flow version for t = -i s."""
    basis = state.basis
    spfs = state.spfs
    h = _hamiltonian_block(basis, integrals)
    if integrals.cap_mat is not None:
        g = galerkin_one_body(basis, integrals.cap_mat)[basis.max_particles]
        cdot = -1j * (h @ state.coeffs) - g @ state.coeffs
    else:
        cdot = -1j * (h @ state.coeffs)

    s, s2 = pure_reduced_densities(basis, state.coeffs, need_two_body=integrals.u is not None)
    hphi = integrals.one_phi
    if integrals.cap_phi is not None:
        hphi = hphi - 1j * integrals.cap_phi
    rows = s.astype(complex) @ hphi
    if s2 is not None:
        w = np.tensordot(s2, integrals.fields, axes=([1, 3], [0, 1]))
        rows = rows + np.sum(w * spfs.phi[None, :, :], axis=1)
    rows = grid1d.project_rows(spfs, rows)
    rows = grid1d.project_rows(spfs, rows)
    phidot, _ = regularized_solve(s, -1j * rows, eps_reg)

    if imaginary:
        # t -> -i s: d/ds = -i d/dt turns both equations into gradient flows
        return -1j * phidot, -1j * cdot
    return phidot, cdot


def _potential_step(state: PureMCTDHState, tau: float, model: Potentials, eps_reg: float):
    grid = state.spfs.grid

    def f(phi, c):
        spfs = SPFSet(grid, phi)
        ints = build_integrals(spfs, model, include_kinetic=False)
        return pure_rhs(PureMCTDHState(spfs, state.basis, c), ints, eps_reg)

    phi0, c0 = state.spfs.phi, state.coeffs
    k1p, k1c = f(phi0, c0)
    k2p, k2c = f(phi0 + (tau / 2) * k1p, c0 + (tau / 2) * k1c)
    k3p, k3c = f(phi0 + (tau / 2) * k2p, c0 + (tau / 2) * k2c)
    k4p, k4c = f(phi0 + tau * k3p, c0 + tau * k3c)
    phi = phi0 + (tau / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p)
    c = c0 + (tau / 6.0) * (k1c + 2 * k2c + 2 * k3c + k4c)
    return PureMCTDHState(SPFSet(grid, phi), state.basis, c, state.t + tau)


def pure_split_step(
    state: PureMCTDHState, tau: float, model: Potentials, eps_reg: float
) -> PureMCTDHState:
    """Strang step: exact kinetic half steps around an RK4 potential step."""
    grid = state.spfs.grid
    phi = grid1d.free_propagation_rows(grid, state.spfs.phi, tau / 2)
    mid = _potential_step(
        PureMCTDHState(SPFSet(grid, phi), state.basis, state.coeffs, state.t), tau, model, eps_reg
    )
    phi = grid1d.free_propagation_rows(grid, mid.spfs.phi, tau / 2)
    return PureMCTDHState(SPFSet(grid, phi), state.basis, mid.coeffs, state.t + tau)


def pure_retract(state: PureMCTDHState, threshold: float = 5e-13) -> PureMCTDHState:
    """Exact gauge retraction: re-orthonormalize orbitals, rotate the coefficients."""
    if state.spfs.orthonormality_defect() <= threshold:
        return state
    if state.basis.statistics != "fermion":
        raise NotImplementedError("retraction implemented for fermions")
    from .fock import fermion_compound
    from .propagate import signed_qr

    grid = state.spfs.grid
    q, r = signed_qr(state.spfs.phi.T * np.sqrt(grid.dx))
    phi = q.T / np.sqrt(grid.dx)
    g = fermion_compound(r, state.basis.max_particles)
    return PureMCTDHState(SPFSet(grid, phi), state.basis, g @ state.coeffs, state.t)
