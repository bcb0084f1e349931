import numpy as np
import pytest

from openmctdh.fock import enumerate_basis
from openmctdh.grid1d import SPFSet, eval_trap, make_grid, smoothed_coulomb
from openmctdh.liouville import BlockDensityMatrix
from openmctdh.mctdh import (
    MCTDHState,
    Potentials,
    build_integrals,
    reduced_one_body,
    reduced_two_body,
)
from openmctdh.purestate import PureMCTDHState, pure_reduced_densities, pure_rhs


def random_spfs(grid, count, rng):
    raw = rng.standard_normal((grid.n_points, count)) + 1j * rng.standard_normal(
        (grid.n_points, count)
    )
    q, _ = np.linalg.qr(raw)
    return SPFSet(grid, q.T / np.sqrt(grid.dx))


@pytest.fixture
def pure_setup(rng):
    grid = make_grid(5.0, 16)
    basis = enumerate_basis(4, 3, "fermion")
    c = rng.standard_normal(basis.dims[3]) + 1j * rng.standard_normal(basis.dims[3])
    c /= np.linalg.norm(c)
    spfs = random_spfs(grid, 4, rng)
    return grid, basis, spfs, c


def test_pure_reduced_densities_match_density_matrix_route(pure_setup):
    # vector route vs trace-over-B^2 route on the rank-1 density
    grid, basis, spfs, c = pure_setup
    s, s2 = pure_reduced_densities(basis, c, need_two_body=True)
    state = MCTDHState(spfs, BlockDensityMatrix.pure(basis, 3, c))
    assert np.max(np.abs(s - reduced_one_body(state))) < 1e-12
    assert np.max(np.abs(s2 - reduced_two_body(state))) < 1e-12


def test_pure_rhs_matches_density_operator_rhs(pure_setup):
    # for a rank-1 closed-system density the two formulations are one flow
    grid, basis, spfs, c = pure_setup
    model = Potentials(
        grid, eval_trap(grid, 2.0, 1.0).values, None, smoothed_coulomb(grid, 0.7, 0.5)
    )
    ints = build_integrals(spfs, model)
    pure = PureMCTDHState(spfs, basis, c)
    phidot_pure, cdot = pure_rhs(pure, ints, 1e-8)

    from openmctdh.mctdh import b_rhs, spf_rhs

    state = MCTDHState(spfs, BlockDensityMatrix.pure(basis, 3, c))
    phidot_rho = spf_rhs(state, ints, 1e-8)
    bdot = b_rhs(state, ints)

    # the two routes build S from different contractions; the solve amplifies
    # their 1e-12 float disagreement by the conditioning of S
    assert np.max(np.abs(phidot_pure - phidot_rho)) < 1e-7
    expected_bdot = np.outer(cdot, c.conj()) + np.outer(c, cdot.conj())
    assert np.max(np.abs(bdot[3] - expected_bdot)) < 1e-12


def test_imaginary_rhs_is_gradient_flow(pure_setup):
    grid, basis, spfs, c = pure_setup
    model = Potentials(grid, eval_trap(grid, 2.0, 1.0).values, None, None)
    ints = build_integrals(spfs, model, include_kinetic=True)
    pure = PureMCTDHState(spfs, basis, c)
    _, cdot = pure_rhs(pure, ints, 1e-8, imaginary=True)
    from openmctdh.fock import galerkin_one_body

    h = galerkin_one_body(basis, ints.h_mat)[3]
    assert np.max(np.abs(cdot - (-(h @ c)))) < 1e-12
