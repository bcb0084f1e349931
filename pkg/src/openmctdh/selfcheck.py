"""Fast invariant suite behind the `check` CLI subcommand.

Everything runs on deliberately tiny instances (seconds, not minutes); the
heavyweight quantitative reproductions live in the test suite.
"""

from __future__ import annotations

import numpy as np

from .fock import (
    annihilator_matrix,
    enumerate_basis,
    fermion_compound,
    galerkin_one_body,
    galerkin_two_body,
)
from .grid1d import (
    GridFunction,
    SPFSet,
    eval_cap,
    eval_trap,
    kinetic_rows,
    make_grid,
    one_body_integrals,
    smoothed_coulomb,
    two_body_integrals,
)
from .liouville import BlockDensityMatrix, LindbladOperators, lindblad_rhs, oracle_propagate
from .mctdh import MCTDHState, Potentials, build_integrals, spf_rhs
from .propagate import split_step


def _random_orthonormal(grid, count, rng):
    raw = rng.standard_normal((grid.n_points, count)) + 1j * rng.standard_normal(
        (grid.n_points, count)
    )
    q, _ = np.linalg.qr(raw)
    return SPFSet(grid, q.T / np.sqrt(grid.dx))


def _check_algebra(L: int):
    worst = 0.0
    for statistics in ("fermion", "boson"):
        cap = L if statistics == "fermion" else L + 1
        basis = enumerate_basis(L, cap, statistics)
        sign = 1.0 if statistics == "fermion" else -1.0
        mats = [annihilator_matrix(basis, j) for j in range(L)]
        for n in range(cap):
            for j in range(L):
                for k in range(L):
                    lhs = mats[j][n + 1] @ mats[k][n + 1].conj().T.tocsr()
                    lhs = lhs + sign * (mats[k][n].conj().T @ mats[j][n])
                    target = np.eye(basis.dims[n]) if j == k else 0.0
                    worst = max(worst, float(np.max(np.abs(lhs.toarray() - target))))
    return worst < 1e-12, f"max anticommutator defect {worst:.2e}"


def _check_trace_conservation(L: int, rng):
    basis = enumerate_basis(L, min(2, L), "fermion")
    dims = basis.dims
    blocks = []
    for d in dims:
        m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        blocks.append(m @ m.conj().T)
    total = sum(np.trace(b).real for b in blocks)
    blocks = [b / total for b in blocks]
    h = rng.standard_normal((L, L)) + 1j * rng.standard_normal((L, L))
    h = 0.5 * (h + h.conj().T)
    g = rng.standard_normal((L, L)) + 1j * rng.standard_normal((L, L))
    g = g @ g.conj().T
    ops = LindbladOperators(
        basis, galerkin_one_body(basis, h), galerkin_one_body(basis, g), g
    )
    deriv = lindblad_rhs(BlockDensityMatrix(basis, blocks), ops)
    drift = abs(sum(np.trace(d) for d in deriv))
    return drift < 1e-12, f"|d trace/dt| = {drift:.2e}"


def _check_single_mode_decay():
    basis = enumerate_basis(1, 1, "fermion")
    gamma = np.array([[0.6]])
    ops = LindbladOperators(
        basis,
        [np.zeros((1, 1)), np.zeros((1, 1))],
        galerkin_one_body(basis, gamma),
        gamma,
    )
    b0 = BlockDensityMatrix.pure(basis, 1, np.array([1.0]))
    out = oracle_propagate(b0, ops, 1.0, 1e-3)
    err = abs(out.blocks[1][0, 0].real - np.exp(-2 * 0.6))
    return err < 1e-8, f"decay error {err:.2e}"


def _check_gauge(rng):
    grid = make_grid(6.0, 16)
    L = 3
    spfs = _random_orthonormal(grid, L, rng)
    basis = enumerate_basis(L, 2, "fermion")
    blocks = []
    for d in basis.dims:
        m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        blocks.append(m @ m.conj().T)
    total = sum(np.trace(b).real for b in blocks)
    blocks = [b / total for b in blocks]
    model = Potentials(
        grid,
        eval_trap(grid, depth=2.0, width=0.4).values,
        eval_cap(grid, 4.0).values,
        None,
    )
    state = MCTDHState(spfs, BlockDensityMatrix(basis, blocks))
    ints = build_integrals(spfs, model)
    phidot = spf_rhs(state, ints)
    defect = float(np.max(np.abs(grid.dx * (spfs.phi.conj() @ phidot.T))))
    return defect < 1e-10, f"max |<phi_j|dphi_k/dt>| = {defect:.2e}"


def _check_kinetic_hermiticity(rng):
    grid = make_grid(5.0, 32)
    f = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    g = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    tf = kinetic_rows(grid, f[None, :])[0]
    tg = kinetic_rows(grid, g[None, :])[0]
    lhs = grid.dx * np.vdot(f, tg)
    rhs = grid.dx * np.vdot(tf, g)
    err = abs(lhs - rhs)
    return err < 1e-10, f"|<f|Tg> - <Tf|g>| = {err:.2e}"


def _check_oracle_comparison(L: int, rng):
    """Complete orbital set on an L-point grid: variational flow vs the
    frozen-basis master-equation integrator."""
    L = max(2, min(L, 6))
    grid = make_grid(3.0, L)
    basis = enumerate_basis(L, 2, "fermion")
    spfs = SPFSet(grid, (np.eye(L) / np.sqrt(grid.dx)).astype(complex))
    trap = eval_trap(grid, depth=1.0, width=2.0)
    cap_values = 0.3 * eval_cap(grid, 1.5).values
    pair = smoothed_coulomb(grid, 0.4, 1.0)
    model = Potentials(grid, trap.values, cap_values, pair)

    v = rng.standard_normal(basis.dims[2]) + 1j * rng.standard_normal(basis.dims[2])
    v /= np.linalg.norm(v)
    state = MCTDHState(spfs, BlockDensityMatrix.pure(basis, 2, v))

    h = one_body_integrals(spfs, trap, include_kinetic=True).matrix
    gam = one_body_integrals(spfs, GridFunction(grid, cap_values), label="cap").matrix
    u = two_body_integrals(spfs, pair).tensor
    h_blocks = galerkin_one_body(basis, h)
    for hb, h2 in zip(h_blocks, galerkin_two_body(basis, u)):
        hb += h2
    ops = LindbladOperators(basis, h_blocks, galerkin_one_body(basis, gam), gam)

    tau, t_final = 1e-3, 0.2
    oracle = oracle_propagate(state.b, ops, t_final, tau)
    s = state
    for _ in range(int(round(t_final / tau))):
        s = split_step(s, tau, model)
    g = np.sqrt(grid.dx) * s.spfs.phi.T
    worst = 0.0
    for n, block in enumerate(s.b.blocks):
        comp = fermion_compound(g, n)
        worst = max(worst, float(np.max(np.abs(comp @ block @ comp.conj().T - oracle.blocks[n]))))
    return worst < 1e-6, f"blockwise deviation {worst:.2e}"


def run_checks(seed_basis: int = 3):
    """Run the tiny-instance invariant suite; returns (name, ok, detail) triples."""
    rng = np.random.default_rng(7)
    results = []
    results.append(("second-quantization algebra", *_check_algebra(min(seed_basis, 4))))
    results.append(("trace conservation", *_check_trace_conservation(seed_basis, rng)))
    results.append(("single-mode decay vs closed form", *_check_single_mode_decay()))
    results.append(("orbital gauge orthogonality", *_check_gauge(rng)))
    results.append(("kinetic operator hermiticity", *_check_kinetic_hermiticity(rng)))
    results.append(("full-basis oracle comparison", *_check_oracle_comparison(seed_basis, rng)))
    return results
