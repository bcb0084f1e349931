"""Fixed-basis Lindblad and non-Hermitian Schroedinger dynamics.

This is the brute-force layer: density operators are stored as dense
Hermitian blocks B_n over a truncated Fock basis, and the master equation

    dB_n/dt = -i [H, B_n] - {G, B_n} + 2 sum_jk Gamma_jk c_k B_{n+1} c_j^dag

is integrated with plain fixed-step RK4.  The anticommutator drains each
block while the sandwich term feeds the block below, so the total trace is
conserved identically.  Everything here works on a frozen orbital set; it
serves as the reference for the variational propagation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalBlowupError
from .fock import FockBasis

__all__ = [
    "BlockDensityMatrix",
    "PureState",
    "LindbladOperators",
    "lindblad_rhs",
    "nh_schrodinger_rhs",
    "oracle_propagate",
    "nh_propagate",
]


@dataclass(eq=False)
class BlockDensityMatrix:
    """Block-diagonal density operator, one dense matrix per particle number.

    Only the number-diagonal blocks are stored: for a pure N-particle initial
    condition the off-diagonal blocks vanish identically and stay zero.
    """

    basis: FockBasis
    blocks: list[np.ndarray]

    @classmethod
    def zeros(cls, basis: FockBasis) -> "BlockDensityMatrix":
        return cls(basis, [np.zeros((d, d), dtype=complex) for d in basis.dims])

    @classmethod
    def pure(cls, basis: FockBasis, n: int, amplitudes: np.ndarray) -> "BlockDensityMatrix":
        """Rank-1 density |v><v| placed on block n."""
        v = np.asarray(amplitudes, dtype=complex)
        if v.shape != (basis.dims[n],):
            raise ValueError(
                f"amplitude vector has shape {v.shape}, block {n} has dim {basis.dims[n]}"
            )
        out = cls.zeros(basis)
        out.blocks[n] = np.outer(v, v.conj())
        return out

    def copy(self) -> "BlockDensityMatrix":
        return BlockDensityMatrix(self.basis, [b.copy() for b in self.blocks])

    def block_traces(self) -> np.ndarray:
        return np.array([np.trace(b) for b in self.blocks])

    def trace(self) -> complex:
        return complex(np.sum(self.block_traces()))

    def hermiticity_defect(self) -> float:
        return max(
            (np.max(np.abs(b - b.conj().T)) if b.size else 0.0) for b in self.blocks
        )

    def is_finite(self) -> bool:
        return all(np.isfinite(b).all() for b in self.blocks)


@dataclass(eq=False)
class PureState:
    """Coefficient vector over a single n-particle block."""

    basis: FockBasis
    n: int
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(eq=False)
class LindbladOperators:
    """Frozen Galerkin operators driving the master equation.

    h_blocks holds H (one- plus two-body); g_blocks the absorber Gamma with
    the same block structure; gamma is the one-body coefficient matrix
    Gamma_jk feeding the sandwich term.  A closed system carries g_blocks and
    gamma as None.
    """

    basis: FockBasis
    h_blocks: list[np.ndarray]
    g_blocks: list[np.ndarray] | None = None
    gamma: np.ndarray | None = None

    def __post_init__(self):
        for name, blocks in (("h", self.h_blocks), ("g", self.g_blocks)):
            if blocks is None:
                continue
            if len(blocks) != len(self.basis.dims):
                raise ValueError(f"{name}_blocks count does not match the basis")
            for n, b in enumerate(blocks):
                if b.shape != (self.basis.dims[n], self.basis.dims[n]):
                    raise ValueError(f"{name} block {n} has shape {b.shape}")
        if self.gamma is not None and self.gamma.shape != (
            self.basis.n_modes,
            self.basis.n_modes,
        ):
            raise ValueError("gamma matrix does not match the mode count")


def _sandwich(basis: FockBasis, gamma: np.ndarray, b_above: np.ndarray, n: int) -> np.ndarray:
    """2 sum_jk Gamma_jk c_k B_{n+1} c_j^dag restricted to block n."""
    a = basis.annihilators[n + 1]
    z = a @ b_above
    w = np.tensordot(gamma, z, axes=([1], [0]))
    return 2.0 * np.tensordot(w, a.conj(), axes=([0, 2], [0, 2]))


def lindblad_rhs(b: BlockDensityMatrix, ops: LindbladOperators) -> list[np.ndarray]:
    """Blockwise time derivative of the density operator."""
    if ops.basis is not b.basis:
        raise ValueError("operators and density matrix live on different bases")
    basis = b.basis
    nmax = basis.max_particles
    out = []
    for n in range(nmax + 1):
        bn = b.blocks[n]
        h = ops.h_blocks[n]
        d = -1j * (h @ bn - bn @ h)
        if ops.g_blocks is not None:
            g = ops.g_blocks[n]
            d -= g @ bn + bn @ g
            if n < nmax:
                d += _sandwich(basis, ops.gamma, b.blocks[n + 1], n)
        out.append(d)
    return out


def nh_schrodinger_rhs(
    psi: PureState, h_block: np.ndarray, g_block: np.ndarray | None = None
) -> np.ndarray:
    """d psi/dt = -i (H - i Gamma) psi on the state's block."""
    d = -1j * (h_block @ psi.amplitudes)
    if g_block is not None:
        d -= g_block @ psi.amplitudes
    return d


def _add_scaled(blocks: list[np.ndarray], deriv: list[np.ndarray], c: float):
    return [b + c * d for b, d in zip(blocks, deriv)]


def oracle_propagate(
    b0: BlockDensityMatrix,
    ops: LindbladOperators,
    t_final: float,
    tau: float,
    observer=None,
) -> BlockDensityMatrix:
    """Fixed-step RK4 reference integration of the master equation.

    The step count is round(t_final / tau); tau is used exactly, so pick it
    to divide t_final.  observer(t, b) is called after every step.
    """
    if tau <= 0:
        raise ValueError(f"time step must be positive, got {tau}")
    n_steps = int(round(t_final / tau))
    blocks = [x.copy() for x in b0.blocks]
    state = BlockDensityMatrix(b0.basis, blocks)

    def rhs(bl):
        return lindblad_rhs(BlockDensityMatrix(b0.basis, bl), ops)

    t = 0.0
    # divergence shows up as inf/nan and is reported below, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n_steps):
            k1 = rhs(blocks)
            k2 = rhs(_add_scaled(blocks, k1, tau / 2))
            k3 = rhs(_add_scaled(blocks, k2, tau / 2))
            k4 = rhs(_add_scaled(blocks, k3, tau))
            blocks = [
                b + (tau / 6.0) * (a + 2 * c + 2 * d + e)
                for b, a, c, d, e in zip(blocks, k1, k2, k3, k4)
            ]
            t += tau
            state = BlockDensityMatrix(b0.basis, blocks)
            if not state.is_finite():
                raise NumericalBlowupError(f"non-finite density matrix at t={t:.6g}")
            if observer is not None:
                observer(t, state)
    return state


def nh_propagate(
    psi0: PureState,
    h_block: np.ndarray,
    g_block: np.ndarray | None,
    t_final: float,
    tau: float,
    observer=None,
) -> PureState:
    """RK4 integration of the non-Hermitian Schroedinger equation on one block."""
    if tau <= 0:
        raise ValueError(f"time step must be positive, got {tau}")
    n_steps = int(round(t_final / tau))
    v = psi0.amplitudes.astype(complex).copy()

    def rhs(y):
        return nh_schrodinger_rhs(PureState(psi0.basis, psi0.n, y), h_block, g_block)

    t = 0.0
    for _ in range(n_steps):
        k1 = rhs(v)
        k2 = rhs(v + (tau / 2) * k1)
        k3 = rhs(v + (tau / 2) * k2)
        k4 = rhs(v + tau * k3)
        v = v + (tau / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += tau
        if not np.isfinite(v).all():
            raise NumericalBlowupError(f"non-finite wavefunction at t={t:.6g}")
        if observer is not None:
            observer(t, PureState(psi0.basis, psi0.n, v.copy()))
    return PureState(psi0.basis, psi0.n, v)
