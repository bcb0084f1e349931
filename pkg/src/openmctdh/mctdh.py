"""Variational equations of motion for a density operator with moving orbitals.

The state is the pair (phi, B): L orthonormal orbitals and a block-diagonal
Galerkin matrix over the Fock basis they generate.  The time-dependent
variational principle with gauge <phi_j | dphi_k/dt> = 0 yields

    dB/dt   = -i [H, B] - {G, B} + 2 sum_jk Gamma_jk c_k B c_j^dag
    i sum_k dphi_k/dt S_jk = Q [ sum_k (h - i Gamma) phi_k S_jk
                                 + sum_klm U_km phi_l S2_jklm ]

with the second-power reduced densities S_jk = tr(c_j^dag c_k B^2) and
S2_jklm = tr(c_j^dag c_k^dag c_m c_l B^2), the mean fields U_km, and the
complement projector Q.  Near-singular S is handled by the standard
exponential regularization sigma -> sigma + eps * exp(-sigma / eps) applied
in the eigenbasis of S.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import grid1d
from .fock import (
    FockBasis,
    galerkin_one_body,
    galerkin_two_body,
    one_body_trace,
    two_body_trace,
)
from .grid1d import GridSpec, PairPotential, SPFSet
from .liouville import BlockDensityMatrix, LindbladOperators, lindblad_rhs

logger = logging.getLogger(__name__)

__all__ = [
    "MCTDHState",
    "Potentials",
    "Integrals",
    "ReducedDensities",
    "build_integrals",
    "reduced_one_body",
    "reduced_two_body",
    "reduced_densities",
    "b_rhs",
    "spf_rhs",
    "regularized_solve",
    "min_eig_s",
    "particle_density",
    "block_energies",
    "energy_expectation",
    "assemble_lindblad_operators",
]

DEFAULT_EPS_REG = 1e-8


@dataclass(eq=False)
class Potentials:
    """The model: a real trap V(x), an optional absorber Gamma(x) >= 0, and an
    optional symmetric pair potential."""

    grid: GridSpec
    trap: np.ndarray
    cap: np.ndarray | None = None
    pair: PairPotential | None = None

    def without_cap(self) -> "Potentials":
        return Potentials(self.grid, self.trap, None, self.pair)


@dataclass(eq=False)
class MCTDHState:
    """Orbitals plus Galerkin matrix at one instant."""

    spfs: SPFSet
    b: BlockDensityMatrix
    t: float = 0.0

    @property
    def basis(self) -> FockBasis:
        return self.b.basis

    def validate(self, ortho_tol: float = 1e-8, trace_tol: float = 1e-10) -> None:
        if self.spfs.count != self.basis.n_modes:
            raise ValueError("orbital count does not match the Fock basis")
        defect = self.spfs.orthonormality_defect()
        if defect > ortho_tol:
            raise ValueError(f"orbitals are not orthonormal (defect {defect:.3e})")
        tr = self.b.trace()
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"density matrix trace {tr} is not 1")


@dataclass(eq=False)
class ReducedDensities:
    """Second-power reduced matrices entering the orbital equation."""

    s: np.ndarray
    s2: np.ndarray | None


@dataclass(eq=False)
class Integrals:
    """Orbital-dependent coefficients refreshed at every integrator stage.

    one_phi rows hold the grid action of the one-body generator (potential,
    optionally plus kinetic) on each orbital; cap_phi the absorber action.
    """

    one_phi: np.ndarray
    cap_phi: np.ndarray | None
    h_mat: np.ndarray
    cap_mat: np.ndarray | None
    u: np.ndarray | None
    fields: np.ndarray | None

    @property
    def n_modes(self) -> int:
        return self.h_mat.shape[0]


def build_integrals(
    spfs: SPFSet, model: Potentials, *, include_kinetic: bool = False
) -> Integrals:
    """Evaluate h_jk, Gamma_jk, u_jklm and the mean fields for the current orbitals."""
    grid = spfs.grid
    phi = spfs.phi
    one_phi = model.trap[None, :] * phi
    if include_kinetic:
        one_phi = one_phi + grid1d.kinetic_rows(grid, phi)
    h_mat = grid.dx * (phi.conj() @ one_phi.T)
    h_mat = 0.5 * (h_mat + h_mat.conj().T)

    cap_phi = cap_mat = None
    if model.cap is not None:
        cap_phi = model.cap[None, :] * phi
        cap_mat = grid.dx * (phi.conj() @ cap_phi.T)
        cap_mat = 0.5 * (cap_mat + cap_mat.conj().T)

    u = fields = None
    if model.pair is not None:
        fields = grid1d.mean_fields(spfs, model.pair)
        u = grid.dx * np.einsum("ja,kma,la->jklm", phi.conj(), fields, phi)
        u = 0.5 * (u + u.transpose(1, 0, 3, 2))
        u = 0.5 * (u + u.conj().transpose(2, 3, 0, 1))

    return Integrals(one_phi, cap_phi, h_mat, cap_mat, u, fields)


def _squared_blocks(b: BlockDensityMatrix) -> list[np.ndarray]:
    return [blk @ blk for blk in b.blocks]


def reduced_one_body(state: MCTDHState) -> np.ndarray:
    """S_jk = tr(c_j^dag c_k B^2), Hermitian positive semidefinite."""
    s = one_body_trace(state.basis, _squared_blocks(state.b))
    return 0.5 * (s + s.conj().T)


def reduced_two_body(state: MCTDHState) -> np.ndarray:
    """S2_jklm = tr(c_j^dag c_k^dag c_m c_l B^2)."""
    return two_body_trace(state.basis, _squared_blocks(state.b))


def reduced_densities(state: MCTDHState, *, need_two_body: bool) -> ReducedDensities:
    b2 = _squared_blocks(state.b)
    s = one_body_trace(state.basis, b2)
    s = 0.5 * (s + s.conj().T)
    s2 = two_body_trace(state.basis, b2) if need_two_body else None
    return ReducedDensities(s, s2)


def assemble_lindblad_operators(basis: FockBasis, integrals: Integrals) -> LindbladOperators:
    """Galerkin blocks of H and Gamma from the current coefficients."""
    if integrals.n_modes != basis.n_modes:
        raise ValueError(
            f"integrals carry {integrals.n_modes} modes, basis has {basis.n_modes}"
        )
    h_blocks = galerkin_one_body(basis, integrals.h_mat)
    if integrals.u is not None:
        for hb, h2 in zip(h_blocks, galerkin_two_body(basis, integrals.u)):
            hb += h2
    g_blocks = None
    if integrals.cap_mat is not None:
        g_blocks = galerkin_one_body(basis, integrals.cap_mat)
    return LindbladOperators(basis, h_blocks, g_blocks, integrals.cap_mat)


def b_rhs(state: MCTDHState, integrals: Integrals) -> list[np.ndarray]:
    """Galerkin-matrix derivative; the master equation with refreshed coefficients."""
    ops = assemble_lindblad_operators(state.basis, integrals)
    return lindblad_rhs(state.b, ops)


def min_eig_s(s: np.ndarray) -> float:
    """Smallest eigenvalue of the reduced one-body matrix."""
    return float(np.linalg.eigvalsh(s)[0])


def regularized_solve(s: np.ndarray, rhs: np.ndarray, eps_reg: float = DEFAULT_EPS_REG):
    """Solve S X = rhs with the eigenvalue map sigma -> sigma + eps exp(-sigma/eps).

    rhs rows are indexed like the equations (first index of S); negative
    eigenvalues from round-off are clipped to zero before the map so the
    exponential cannot amplify them.  Returns (X, sigma_min).
    """
    sigma, vecs = np.linalg.eigh(s)
    sigma_min = float(sigma[0])
    sigma = np.clip(sigma, 0.0, None)
    with np.errstate(over="ignore"):
        reg = sigma + eps_reg * np.exp(-sigma / eps_reg)
    x = vecs @ ((vecs.conj().T @ rhs) / reg[:, None])
    return x, sigma_min


def spf_rhs(
    state: MCTDHState,
    integrals: Integrals,
    eps_reg: float = DEFAULT_EPS_REG,
    densities: ReducedDensities | None = None,
) -> np.ndarray:
    """Orbital time derivatives under the gauge <phi_j|dphi_k/dt> = 0.

    Returns rows dphi_k/dt.  When the orbitals span the full grid space the
    complement projector vanishes and so do the derivatives.
    """
    spfs = state.spfs
    if spfs.count == spfs.grid.n_points:
        return np.zeros_like(spfs.phi)
    if densities is None:
        densities = reduced_densities(state, need_two_body=integrals.u is not None)
    s = densities.s

    hphi = integrals.one_phi
    if integrals.cap_phi is not None:
        hphi = hphi - 1j * integrals.cap_phi
    rows = densities.s.astype(complex) @ hphi
    if integrals.u is not None:
        w = np.tensordot(densities.s2, integrals.fields, axes=([1, 3], [0, 1]))
        rows = rows + np.sum(w * spfs.phi[None, :, :], axis=1)

    # project twice: the second pass removes the orthonormality-defect
    # residue that the regularized solve would otherwise amplify
    rows = grid1d.project_rows(spfs, rows)
    rows = grid1d.project_rows(spfs, rows)

    phidot, sigma_min = regularized_solve(s, -1j * rows, eps_reg)
    if sigma_min < 100.0 * eps_reg:
        logger.warning(
            "reduced density near singular: sigma_min=%.3e (eps_reg=%.1e)",
            sigma_min,
            eps_reg,
        )
    return phidot


def particle_density(state: MCTDHState) -> np.ndarray:
    """n(x) = sum_jk conj(phi_j) phi_k tr(c_j^dag c_k B); linear in B."""
    s1 = one_body_trace(state.basis, state.b.blocks)
    phi = state.spfs.phi
    return np.einsum("jk,jx,kx->x", s1, phi.conj(), phi).real


def block_energies(state: MCTDHState, model: Potentials) -> np.ndarray:
    """tr(H B_n) per particle-number block, full Hamiltonian."""
    integrals = build_integrals(state.spfs, model, include_kinetic=True)
    h_blocks = galerkin_one_body(state.basis, integrals.h_mat)
    if integrals.u is not None:
        for hb, h2 in zip(h_blocks, galerkin_two_body(state.basis, integrals.u)):
            hb += h2
    return np.array([np.trace(h @ b) for h, b in zip(h_blocks, state.b.blocks)])


def energy_expectation(state: MCTDHState, model: Potentials) -> complex:
    """tr(H B) with the full one-body operator (kinetic plus trap) and the pair term."""
    return complex(np.sum(block_energies(state, model)))
