"""Occupation-number basis for at most N identical particles in L modes.

Fermion states are encoded as occupation bitstrings (mode j <-> bit j); the
sign of c_j on a determinant is (-1)^(number of occupied modes below j).
Boson states are occupation tuples with the total particle number capped at
N, so creation beyond the cap is truncated to nothing.

The block maps of the annihilators c_j : V_n -> V_{n-1} depend only on
orthonormality of the underlying orbitals, never on the orbitals themselves,
so a basis is built once and reused while the orbitals rotate.  Dense
stacked copies of those maps (and of the pair maps c_a c_b) are cached on
the basis; they are what make Galerkin assembly and reduced-density
contractions cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb, sqrt

import numpy as np
import scipy.sparse as sps

__all__ = [
    "FockState",
    "FockBasis",
    "annihilate",
    "create",
    "enumerate_basis",
    "annihilator_matrix",
    "galerkin_one_body",
    "galerkin_two_body",
    "one_body_trace",
    "two_body_trace",
    "fermion_compound",
]

_STATISTICS = ("fermion", "boson")


@dataclass(frozen=True)
class FockState:
    """A single occupation-number basis vector."""

    statistics: str
    occ: tuple[int, ...]

    @property
    def n(self) -> int:
        return sum(self.occ)

    @property
    def n_modes(self) -> int:
        return len(self.occ)


def annihilate(state: FockState, mode: int):
    """Apply c_mode; returns (amplitude, state) or None if the result vanishes."""
    occ = state.occ
    nj = occ[mode]
    if nj == 0:
        return None
    new = occ[:mode] + (nj - 1,) + occ[mode + 1 :]
    if state.statistics == "fermion":
        amp = -1.0 if sum(occ[:mode]) % 2 else 1.0
    else:
        amp = sqrt(nj)
    return amp, FockState(state.statistics, new)


def create(state: FockState, mode: int, cap: int | None = None):
    """Apply c_mode^dagger, the adjoint of annihilate.

    Fermion double occupation gives None; a boson result beyond the particle
    cap (when given) is truncated to None.
    """
    occ = state.occ
    nj = occ[mode]
    if state.statistics == "fermion":
        if nj == 1:
            return None
        amp = -1.0 if sum(occ[:mode]) % 2 else 1.0
    else:
        if cap is not None and state.n + 1 > cap:
            return None
        amp = sqrt(nj + 1)
    new = occ[:mode] + (nj + 1,) + occ[mode + 1 :]
    return amp, FockState(state.statistics, new)


def _fermion_block(L: int, n: int) -> list[tuple[int, ...]]:
    # ascending bitmask order, mode j <-> bit j
    combos = []
    for modes in combinations(range(L), n):
        mask = sum(1 << j for j in modes)
        occ = tuple(1 if j in modes else 0 for j in range(L))
        combos.append((mask, occ))
    combos.sort()
    return [occ for _, occ in combos]


def _boson_block(L: int, n: int) -> list[tuple[int, ...]]:
    def compositions(total, slots):
        if slots == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(total - first, slots - 1):
                yield (first,) + rest

    # same convention as the fermion bitmask order: last mode most significant
    return sorted(compositions(n, L), key=lambda occ: occ[::-1])


@dataclass(eq=False)
class FockBasis:
    """Truncated Fock basis over L modes with particle numbers n = 0..N."""

    n_modes: int
    max_particles: int
    statistics: str
    blocks: list[list[FockState]]
    index: dict[tuple[int, ...], tuple[int, int]]
    dims: list[int]
    _ann: list[np.ndarray] | None = field(default=None, repr=False)
    _pair: list[np.ndarray] | None = field(default=None, repr=False)

    def block_dim(self, n: int) -> int:
        return self.dims[n]

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    def state_index(self, state: FockState) -> tuple[int, int]:
        return self.index[state.occ]

    @property
    def annihilators(self) -> list[np.ndarray]:
        """Per block n, the stacked maps A[n][j] = matrix of c_j : V_n -> V_{n-1}.

        Shape (L, dims[n-1], dims[n]); the n = 0 entry is empty.
        """
        if self._ann is None:
            self._ann = self._build_annihilators()
        return self._ann

    @property
    def pair_annihilators(self) -> list[np.ndarray]:
        """Per block n, the stacks P[n][a, b] = matrix of c_a c_b : V_n -> V_{n-2}."""
        if self._pair is None:
            ann = self.annihilators
            pair = []
            for n in range(self.max_particles + 1):
                if n < 2:
                    pair.append(
                        np.zeros((self.n_modes, self.n_modes, 0, self.dims[n]))
                    )
                else:
                    pair.append(np.einsum("mab,lbc->mlac", ann[n - 1], ann[n]))
            self._pair = pair
        return self._pair

    def _build_annihilators(self) -> list[np.ndarray]:
        L = self.n_modes
        out = [np.zeros((L, 0, self.dims[0]))]
        for n in range(1, self.max_particles + 1):
            a = np.zeros((L, self.dims[n - 1], self.dims[n]))
            for col, state in enumerate(self.blocks[n]):
                for j in range(L):
                    res = annihilate(state, j)
                    if res is None:
                        continue
                    amp, target = res
                    a[j, self.index[target.occ][1], col] = amp
            out.append(a)
        return out


def enumerate_basis(L: int, N: int, statistics: str = "fermion") -> FockBasis:
    """All occupation states with n = 0..N particles in L modes.

    Blocks are ordered by increasing n; inside a block states ascend in the
    integer encoding (fermions) or the equivalent reversed-tuple order
    (bosons).
    """
    if statistics not in _STATISTICS:
        raise ValueError(f"statistics must be one of {_STATISTICS}, got {statistics!r}")
    if L < 1:
        raise ValueError(f"need at least one mode, got L={L}")
    if N < 0:
        raise ValueError(f"particle cap must be non-negative, got N={N}")
    if statistics == "fermion" and N > L:
        raise ValueError(f"cannot place {N} fermions in {L} modes")

    blocks: list[list[FockState]] = []
    index: dict[tuple[int, ...], tuple[int, int]] = {}
    for n in range(N + 1):
        occs = _fermion_block(L, n) if statistics == "fermion" else _boson_block(L, n)
        block = [FockState(statistics, occ) for occ in occs]
        for i, state in enumerate(block):
            index[state.occ] = (n, i)
        blocks.append(block)
    dims = [len(b) for b in blocks]
    expected = [
        comb(L, n) if statistics == "fermion" else comb(L + n - 1, n)
        for n in range(N + 1)
    ]
    assert dims == expected
    return FockBasis(L, N, statistics, blocks, index, dims)


def annihilator_matrix(basis: FockBasis, mode: int) -> list[sps.csr_matrix]:
    """Sparse block maps of c_mode, one entry per block n (mapping V_n -> V_{n-1})."""
    if not 0 <= mode < basis.n_modes:
        raise ValueError(f"mode must lie in [0, {basis.n_modes}), got {mode}")
    return [
        sps.csr_matrix(a[mode]) if a.shape[1] else sps.csr_matrix((0, a.shape[2]))
        for a in basis.annihilators
    ]


def _as_matrix(coeffs, L: int) -> np.ndarray:
    m = np.asarray(getattr(coeffs, "matrix", coeffs), dtype=complex)
    if m.shape != (L, L):
        raise ValueError(f"coefficient matrix has shape {m.shape}, expected {(L, L)}")
    return m


def _as_tensor(coeffs, L: int) -> np.ndarray:
    u = np.asarray(getattr(coeffs, "tensor", coeffs), dtype=complex)
    if u.shape != (L, L, L, L):
        raise ValueError(f"coefficient tensor has shape {u.shape}, expected L={L}")
    return u


def galerkin_one_body(basis: FockBasis, coeffs) -> list[np.ndarray]:
    """Blocks of sum_jk M_jk c_j^dag c_k (particle-number conserving)."""
    m = _as_matrix(coeffs, basis.n_modes)
    out = []
    for a in basis.annihilators:
        w = np.tensordot(m, a, axes=([1], [0]))
        out.append(np.tensordot(a.conj(), w, axes=([0, 1], [0, 1])))
    return out


def galerkin_two_body(basis: FockBasis, coeffs) -> list[np.ndarray]:
    """Blocks of (1/2) sum_jklm u_jklm c_j^dag c_k^dag c_m c_l."""
    u = _as_tensor(coeffs, basis.n_modes)
    out = []
    for p in basis.pair_annihilators:
        # c_j^dag c_k^dag c_m c_l = P[k,j]^dag P[m,l]
        t = np.tensordot(u, p, axes=([3, 2], [0, 1]))
        h2 = 0.5 * np.tensordot(
            p.conj().transpose(1, 0, 2, 3), t, axes=([0, 1, 2], [0, 1, 2])
        )
        out.append(h2)
    return out


def one_body_trace(basis: FockBasis, blocks: list[np.ndarray]) -> np.ndarray:
    """Matrix S_jk = sum_n tr(c_j^dag c_k M_n) for a block-diagonal operator M."""
    L = basis.n_modes
    s = np.zeros((L, L), dtype=complex)
    for a, m in zip(basis.annihilators, blocks):
        if a.shape[1] == 0:
            continue
        w = a @ m
        s += np.tensordot(a.conj(), w, axes=([1, 2], [1, 2]))
    return s


def two_body_trace(basis: FockBasis, blocks: list[np.ndarray]) -> np.ndarray:
    """Tensor S2_jklm = sum_n tr(c_j^dag c_k^dag c_m c_l M_n)."""
    L = basis.n_modes
    s2 = np.zeros((L, L, L, L), dtype=complex)
    for p, m in zip(basis.pair_annihilators, blocks):
        if p.shape[2] == 0:
            continue
        w = p @ m
        t = np.tensordot(p.conj(), w, axes=([2, 3], [2, 3]))  # [k,j,m,l]
        s2 += t.transpose(1, 0, 3, 2)
    return s2


def _mode_subsets(count: int, n: int) -> list[tuple[int, ...]]:
    # ascending-bitmask order, matching the fermion block enumeration
    return [
        modes
        for _, modes in sorted(
            (sum(1 << j for j in modes), modes) for modes in combinations(range(count), n)
        )
    ]


def fermion_compound(g: np.ndarray, n: int) -> np.ndarray:
    """n-th compound matrix of a one-particle transformation g.

    Entry (P, J) is det(g[P, J]) over the n-element mode subsets P, J in the
    same ascending-bitmask order used by the basis blocks, i.e. the matrix of
    the induced transformation between n-fermion determinant bases.
    """
    g = np.asarray(g, dtype=complex)
    rows_out, cols_in = g.shape
    if n == 0:
        return np.ones((1, 1), dtype=complex)
    row_sets = _mode_subsets(rows_out, n)
    col_sets = _mode_subsets(cols_in, n)
    rows_idx = np.array(row_sets)  # (nP, n)
    cols_idx = np.array(col_sets)  # (nJ, n)
    sub = g[rows_idx[:, None, :, None], cols_idx[None, :, None, :]]  # (nP, nJ, n, n)
    return np.linalg.det(sub)
