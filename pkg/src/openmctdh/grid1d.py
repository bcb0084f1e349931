"""Uniform periodic grid in one dimension and the single-particle toolbox.

Everything downstream (orbitals, integrals, mean fields) lives on a grid of
n equidistant nodes x_i = -R + i*dx covering [-R, R) with dx = 2R/n.  The
kinetic operator acts spectrally through the FFT, so the grid is implicitly
periodic.  All inner products use the dx-weighted rectangle rule; in that
convention the FFT collocation basis is exactly orthonormal and spectral
differentiation is Hermitian to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridSpec",
    "GridFunction",
    "SPFSet",
    "OneBodyCoeffs",
    "TwoBodyCoeffs",
    "PairPotential",
    "make_grid",
    "eval_trap",
    "eval_cap",
    "kinetic_apply",
    "kinetic_rows",
    "free_propagation_rows",
    "one_body_integrals",
    "two_body_integrals",
    "mean_field",
    "mean_fields",
    "project_complement",
    "project_rows",
    "overlap_matrix",
    "dense_one_body_matrix",
    "smoothed_coulomb",
]


@dataclass(eq=False)
class GridSpec:
    """Equidistant periodic grid on [-R, R).

    Nodes are x_i = -R + i*dx with dx = 2R/n_points; the wavenumber array is
    the discrete Fourier dual in standard FFT ordering.  Powers of two are
    the usual choice for n_points but any n >= 2 works.
    """

    half_width: float
    n_points: int
    dx: float = field(init=False)
    x: np.ndarray = field(init=False)
    k: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.half_width <= 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if self.n_points < 2:
            raise ValueError(f"need at least 2 grid points, got {self.n_points}")
        self.dx = 2.0 * self.half_width / self.n_points
        self.x = -self.half_width + self.dx * np.arange(self.n_points)
        self.k = 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)


def make_grid(half_width: float, n_points: int) -> GridSpec:
    """Build the periodic grid for a domain [-half_width, half_width)."""
    return GridSpec(float(half_width), int(n_points))


@dataclass(eq=False)
class GridFunction:
    """Complex (or real) function sampled on the grid nodes."""

    grid: GridSpec
    values: np.ndarray

    def inner(self, other: "GridFunction") -> complex:
        """dx-weighted inner product <self|other>, conjugating self."""
        return complex(self.grid.dx * np.vdot(self.values, other.values))

    def norm(self) -> float:
        return float(np.sqrt(self.grid.dx * np.vdot(self.values, self.values).real))


@dataclass(eq=False)
class SPFSet:
    """An orthonormal set of single-particle functions, stored as rows.

    phi has shape (L, n_points).  Orthonormality is in the dx-weighted inner
    product and is required to hold to ~1e-10 by every consumer; it is the
    caller's job to maintain it along a propagation.
    """

    grid: GridSpec
    phi: np.ndarray

    @property
    def count(self) -> int:
        return self.phi.shape[0]

    def function(self, j: int) -> GridFunction:
        return GridFunction(self.grid, self.phi[j].copy())

    def overlap(self) -> np.ndarray:
        return self.grid.dx * (self.phi.conj() @ self.phi.T)

    def orthonormality_defect(self) -> float:
        return float(np.max(np.abs(self.overlap() - np.eye(self.count))))


@dataclass(eq=False)
class OneBodyCoeffs:
    """Matrix of a one-body operator in the current orbital set.

    label is "hamiltonian" (Hermitian) or "cap" (Hermitian and positive
    semidefinite, since the absorber is a non-negative local potential).
    """

    matrix: np.ndarray
    label: str = "hamiltonian"

    def validate(self, atol: float = 1e-10) -> None:
        m = self.matrix
        if self.label not in ("hamiltonian", "cap"):
            raise ValueError(f"unknown label {self.label!r}")
        if np.max(np.abs(m - m.conj().T)) > atol:
            raise ValueError("one-body coefficient matrix is not Hermitian")
        if self.label == "cap":
            if np.linalg.eigvalsh(m)[0] < -atol:
                raise ValueError("cap coefficient matrix is not positive semidefinite")


@dataclass(eq=False)
class TwoBodyCoeffs:
    """Rank-4 tensor u_{jklm} of a symmetric pair potential.

    Satisfies the pair-exchange symmetry u_{jklm} = u_{kjml} and the
    Hermiticity conj(u_{jklm}) = u_{lmjk}; both hold bitwise because the
    constructor symmetrizes explicitly.
    """

    tensor: np.ndarray

    def validate(self) -> None:
        u = self.tensor
        if np.max(np.abs(u - u.transpose(1, 0, 3, 2))) != 0.0:
            raise ValueError("pair-exchange symmetry violated")
        if np.max(np.abs(u.conj() - u.transpose(2, 3, 0, 1))) != 0.0:
            raise ValueError("two-body Hermiticity violated")


@dataclass(eq=False)
class PairPotential:
    """Symmetric pair potential tabulated on the grid, u[a, b] = u(x_a, x_b)."""

    grid: GridSpec
    matrix: np.ndarray

    @classmethod
    def from_callable(cls, grid: GridSpec, fn) -> "PairPotential":
        xa = grid.x[:, None]
        xb = grid.x[None, :]
        m = np.asarray(fn(xa, xb), dtype=float)
        if np.max(np.abs(m - m.T)) != 0.0:
            m = 0.5 * (m + m.T)
        return cls(grid, m)


def smoothed_coulomb(grid: GridSpec, strength: float = 2.0, smoothing: float = 0.1) -> PairPotential:
    """Long-ranged soft-core repulsion strength / sqrt((x1-x2)^2 + smoothing^2)."""
    return PairPotential.from_callable(
        grid, lambda a, b: strength / np.sqrt((a - b) ** 2 + smoothing**2)
    )


def eval_trap(grid: GridSpec, depth: float = 8.0, width: float = 1.25) -> GridFunction:
    """Gaussian well V(x) = -depth * exp(-x^2 / width).

    With the default depth 8 and width 1.25 the well supports exactly four
    bound one-body states on the standard grid.
    """
    return GridFunction(grid, -depth * np.exp(-(grid.x**2) / width))


def eval_cap(grid: GridSpec, r_prime: float) -> GridFunction:
    """Quadratic absorber (|x| - r_prime)^2 outside [-r_prime, r_prime], zero inside."""
    if not 0 < r_prime < grid.half_width:
        raise ValueError(
            f"cap onset must satisfy 0 < r_prime < {grid.half_width}, got {r_prime}"
        )
    d = np.abs(grid.x) - r_prime
    return GridFunction(grid, np.where(d > 0, d, 0.0) ** 2)


def kinetic_rows(grid: GridSpec, rows: np.ndarray) -> np.ndarray:
    """Apply T = -(1/2) d^2/dx^2 spectrally to each row."""
    return np.fft.ifft(0.5 * grid.k**2 * np.fft.fft(rows, axis=-1), axis=-1)


def kinetic_apply(grid: GridSpec, f: GridFunction) -> GridFunction:
    """Kinetic energy action on a single grid function."""
    return GridFunction(grid, kinetic_rows(grid, np.asarray(f.values, dtype=complex)))


def free_propagation_rows(grid: GridSpec, rows: np.ndarray, dt: float) -> np.ndarray:
    """Exact free evolution exp(-i dt T) of each row, a diagonal unitary in k-space."""
    phase = np.exp(-0.5j * dt * grid.k**2)
    return np.fft.ifft(phase * np.fft.fft(rows, axis=-1), axis=-1)


def overlap_matrix(grid: GridSpec, rows_a: np.ndarray, rows_b: np.ndarray) -> np.ndarray:
    """Matrix of dx-weighted inner products <a_j|b_k>."""
    return grid.dx * (rows_a.conj() @ rows_b.T)


def one_body_integrals(
    spfs: SPFSet,
    potential: GridFunction | None = None,
    *,
    include_kinetic: bool = False,
    label: str = "hamiltonian",
) -> OneBodyCoeffs:
    """Quadrature matrix elements <phi_j| T?[+V] |phi_k> of a local one-body operator.

    The potential must be real; the result is explicitly Hermitized to remove
    quadrature round-off.
    """
    grid = spfs.grid
    hphi = np.zeros_like(spfs.phi, dtype=complex)
    if include_kinetic:
        hphi += kinetic_rows(grid, spfs.phi)
    if potential is not None:
        v = np.asarray(potential.values)
        if np.iscomplexobj(v) and np.max(np.abs(v.imag)) > 0:
            raise ValueError("one-body potentials must be real")
        hphi += v.real[None, :] * spfs.phi
    m = grid.dx * (spfs.phi.conj() @ hphi.T)
    m = 0.5 * (m + m.conj().T)
    return OneBodyCoeffs(matrix=m, label=label)


def mean_fields(spfs: SPFSet, pair: PairPotential) -> np.ndarray:
    """All mean-field potentials U[k, m](x) = dx * sum_y conj(phi_k(y)) u(x, y) phi_m(y).

    Returns an array of shape (L, L, n_points); each U[k, m] is a local
    one-body potential, with conj(U[k, m]) = U[m, k] for the symmetric pair
    potentials used here.
    """
    phi = spfs.phi
    dens = phi.conj()[:, None, :] * phi[None, :, :]
    return spfs.grid.dx * (dens @ pair.matrix.T)


def mean_field(spfs: SPFSet, k: int, m: int, pair: PairPotential) -> GridFunction:
    """Single mean-field potential U_{km}(x); see mean_fields."""
    L = spfs.count
    if not (0 <= k < L and 0 <= m < L):
        raise ValueError(f"orbital indices must lie in [0, {L}), got ({k}, {m})")
    phi = spfs.phi
    values = spfs.grid.dx * (pair.matrix @ (phi[k].conj() * phi[m]))
    return GridFunction(spfs.grid, values)


def two_body_integrals(spfs: SPFSet, pair: PairPotential) -> TwoBodyCoeffs:
    """Pair-potential tensor u_{jklm} = <phi_j phi_k| u |phi_l phi_m>.

    The bra-ket is on the plain tensor-product space (no antisymmetrization).
    Assembled through the mean fields, then symmetrized so both tensor
    invariants hold exactly.
    """
    phi = spfs.phi
    fields = mean_fields(spfs, pair)
    u = spfs.grid.dx * np.einsum("ja,kma,la->jklm", phi.conj(), fields, phi)
    u = 0.5 * (u + u.transpose(1, 0, 3, 2))
    u = 0.5 * (u + u.conj().transpose(2, 3, 0, 1))
    return TwoBodyCoeffs(tensor=u)


def project_rows(spfs: SPFSet, rows: np.ndarray) -> np.ndarray:
    """Apply Q = 1 - sum_k |phi_k><phi_k| to each row."""
    coeff = spfs.grid.dx * (rows @ spfs.phi.conj().T)
    return rows - coeff @ spfs.phi


def project_complement(spfs: SPFSet, f: GridFunction) -> GridFunction:
    """Project a function onto the orthogonal complement of the orbital span."""
    values = project_rows(spfs, np.asarray(f.values, dtype=complex)[None, :])[0]
    return GridFunction(spfs.grid, values)


def dense_one_body_matrix(
    grid: GridSpec, potential: GridFunction | None = None, *, include_kinetic: bool = True
) -> np.ndarray:
    """Dense matrix of T[+V] in the collocation basis e_i = delta_i / sqrt(dx).

    Used for direct diagonalization (bound-state counting, relaxation seeds,
    reference spectra).  Hermitized to remove FFT round-off.
    """
    n = grid.n_points
    h = np.zeros((n, n), dtype=complex)
    if include_kinetic:
        h += kinetic_rows(grid, np.eye(n)).T
    if potential is not None:
        h += np.diag(potential.values.astype(complex))
    return 0.5 * (h + h.conj().T)
