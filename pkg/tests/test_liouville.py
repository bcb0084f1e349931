import numpy as np
import pytest

from openmctdh.errors import NumericalBlowupError
from openmctdh.fock import enumerate_basis, galerkin_one_body
from openmctdh.liouville import (
    BlockDensityMatrix,
    LindbladOperators,
    PureState,
    lindblad_rhs,
    nh_propagate,
    nh_schrodinger_rhs,
    oracle_propagate,
)
from oracles import random_block_density, random_hermitian, random_psd


def decay_operators(gamma=0.5):
    basis = enumerate_basis(1, 1, "fermion")
    g = np.array([[gamma]])
    return basis, LindbladOperators(
        basis, [np.zeros((1, 1)), np.zeros((1, 1))], galerkin_one_body(basis, g), g
    )


def random_ops(basis, rng, with_cap=True):
    L = basis.n_modes
    h = random_hermitian(L, rng)
    if not with_cap:
        return LindbladOperators(basis, galerkin_one_body(basis, h))
    g = random_psd(L, rng)
    return LindbladOperators(basis, galerkin_one_body(basis, h), galerkin_one_body(basis, g), g)


class TestLindbladRHS:
    def test_single_mode_decay_rates(self):
        basis, ops = decay_operators(gamma=0.7)
        b = BlockDensityMatrix(basis, [np.array([[0.25 + 0j]]), np.array([[0.75 + 0j]])])
        deriv = lindblad_rhs(b, ops)
        assert deriv[1][0, 0] == pytest.approx(-2 * 0.7 * 0.75)
        assert deriv[0][0, 0] == pytest.approx(+2 * 0.7 * 0.75)

    def test_closed_system_is_von_neumann(self, rng):
        basis = enumerate_basis(3, 2, "fermion")
        ops = random_ops(basis, rng, with_cap=False)
        blocks = random_block_density(basis, rng, pure_top=True)
        deriv = lindblad_rhs(BlockDensityMatrix(basis, blocks), ops)
        n = basis.max_particles
        expected = -1j * (ops.h_blocks[n] @ blocks[n] - blocks[n] @ ops.h_blocks[n])
        assert np.allclose(deriv[n], expected, atol=1e-14)
        for m in range(n):
            assert np.allclose(deriv[m], 0.0)

    def test_trace_free_for_random_inputs(self, rng):
        for _ in range(5):
            basis = enumerate_basis(3, 3, "fermion")
            ops = random_ops(basis, rng)
            blocks = random_block_density(basis, rng)
            deriv = lindblad_rhs(BlockDensityMatrix(basis, blocks), ops)
            assert abs(sum(np.trace(d) for d in deriv)) < 1e-13

    def test_hermiticity_preserved(self, rng):
        basis = enumerate_basis(3, 2, "fermion")
        ops = random_ops(basis, rng)
        blocks = random_block_density(basis, rng)
        deriv = lindblad_rhs(BlockDensityMatrix(basis, blocks), ops)
        for d in deriv:
            assert np.max(np.abs(d - d.conj().T)) < 1e-13

    def test_top_block_autonomous(self, rng):
        # the N-block derivative never references lower blocks
        basis = enumerate_basis(3, 2, "fermion")
        ops = random_ops(basis, rng)
        blocks = random_block_density(basis, rng)
        deriv_full = lindblad_rhs(BlockDensityMatrix(basis, blocks), ops)
        zeroed = [b.copy() for b in blocks]
        for m in range(basis.max_particles):
            zeroed[m][:] = 0.0
        deriv_zeroed = lindblad_rhs(BlockDensityMatrix(basis, zeroed), ops)
        n = basis.max_particles
        assert np.allclose(deriv_full[n], deriv_zeroed[n], atol=1e-15)

    def test_basis_mismatch_rejected(self, rng):
        basis = enumerate_basis(2, 1, "fermion")
        other = enumerate_basis(2, 1, "fermion")
        ops = random_ops(basis, rng)
        b = BlockDensityMatrix.zeros(other)
        with pytest.raises(ValueError):
            lindblad_rhs(b, ops)


class TestNHSchrodinger:
    def test_norm_derivative_matches_cap_expectation(self, rng):
        # d|psi|^2/dt = -2 <psi|Gamma|psi>, via a 5-point finite-difference stencil
        basis = enumerate_basis(3, 2, "fermion")
        L = basis.n_modes
        h = random_hermitian(L, rng)
        g = 0.1 * random_psd(L, rng)
        hb = galerkin_one_body(basis, h)[2]
        gb = galerkin_one_body(basis, g)[2]
        v = rng.standard_normal(basis.dims[2]) + 1j * rng.standard_normal(basis.dims[2])
        v /= np.linalg.norm(v)
        psi0 = PureState(basis, 2, v)

        tau = 1e-5
        delta = 5e-3
        t_center = 0.05
        samples = {}
        psi = psi0
        t = 0.0
        for target in [t_center + k * delta for k in (-2, -1, 0, 1, 2)]:
            psi = nh_propagate(psi, hb, gb, target - t, tau)
            t = target
            samples[round((target - t_center) / delta)] = psi

        norms = {k: np.linalg.norm(p.amplitudes) ** 2 for k, p in samples.items()}
        fd = (-norms[2] + 8 * norms[1] - 8 * norms[-1] + norms[-2]) / (12 * delta)
        c = samples[0].amplitudes
        expected = -2 * np.vdot(c, gb @ c).real
        assert fd == pytest.approx(expected, rel=1e-6)

    def test_norm_constant_without_cap(self, rng):
        basis = enumerate_basis(2, 2, "fermion")
        h = random_hermitian(2, rng)
        hb = galerkin_one_body(basis, h)[2]
        v = rng.standard_normal(1) + 1j * rng.standard_normal(1)
        psi = PureState(basis, 2, v / np.linalg.norm(v))
        out = nh_propagate(psi, hb, None, 1.0, 1e-3)
        assert out.norm() == pytest.approx(1.0, abs=1e-10)

    def test_rank_one_consistency_with_lindblad_top_block(self, rng):
        # block N of the master equation on |psi><psi| is |dpsi><psi| + |psi><dpsi|
        basis = enumerate_basis(3, 2, "fermion")
        ops = random_ops(basis, rng)
        n = basis.max_particles
        v = rng.standard_normal(basis.dims[n]) + 1j * rng.standard_normal(basis.dims[n])
        v /= np.linalg.norm(v)
        blocks = [np.zeros((d, d), dtype=complex) for d in basis.dims]
        blocks[n] = np.outer(v, v.conj())
        deriv = lindblad_rhs(BlockDensityMatrix(basis, blocks), ops)
        vdot = nh_schrodinger_rhs(PureState(basis, n, v), ops.h_blocks[n], ops.g_blocks[n])
        expected = np.outer(vdot, v.conj()) + np.outer(v, vdot.conj())
        assert np.max(np.abs(deriv[n] - expected)) < 1e-13


class TestOraclePropagate:
    def test_single_mode_closed_form(self):
        basis, ops = decay_operators(gamma=0.5)
        b0 = BlockDensityMatrix.pure(basis, 1, np.array([1.0]))
        out = oracle_propagate(b0, ops, 2.0, 1e-3)
        expected = np.exp(-2 * 0.5 * 2.0)
        assert out.blocks[1][0, 0].real == pytest.approx(expected, rel=1e-8)
        assert out.trace() == pytest.approx(1.0, abs=1e-12)

    def test_fourth_order_convergence(self):
        basis, ops = decay_operators(gamma=0.9)
        b0 = BlockDensityMatrix.pure(basis, 1, np.array([1.0]))
        exact = np.exp(-2 * 0.9)
        errors = []
        for tau in (0.1, 0.05):
            out = oracle_propagate(b0, ops, 1.0, tau)
            errors.append(abs(out.blocks[1][0, 0].real - exact))
        ratio = errors[0] / errors[1]
        assert ratio == pytest.approx(16.0, rel=0.25)

    def test_isospectral_closed_flow(self, rng):
        basis = enumerate_basis(3, 2, "fermion")
        ops = random_ops(basis, rng, with_cap=False)
        blocks = random_block_density(basis, rng)
        b0 = BlockDensityMatrix(basis, blocks)
        eig0 = np.linalg.eigvalsh(blocks[2])
        out = oracle_propagate(b0, ops, 1.0, 1e-3)
        eig1 = np.linalg.eigvalsh(out.blocks[2])
        assert np.max(np.abs(eig0 - eig1)) < 1e-8

    def test_positivity_along_trajectory(self, rng):
        # experiment-sized basis, frozen-coefficient oracle run
        basis = enumerate_basis(5, 3, "fermion")
        ops = random_ops(basis, rng)
        blocks = random_block_density(basis, rng, pure_top=True)
        worst = []

        def observer(t, state):
            worst.append(min(np.linalg.eigvalsh(b).min() for b in state.blocks))

        oracle_propagate(BlockDensityMatrix(basis, blocks), ops, 2.0, 1e-3, observer)
        assert min(worst) > -1e-8

    def test_blowup_detection(self):
        basis = enumerate_basis(1, 1, "fermion")
        # negative "absorber" acts as exponential gain
        g = np.array([[-80.0]])
        ops = LindbladOperators(
            basis, [np.zeros((1, 1)), np.zeros((1, 1))], galerkin_one_body(basis, g), g
        )
        b0 = BlockDensityMatrix.pure(basis, 1, np.array([1.0]))
        with pytest.raises(NumericalBlowupError):
            oracle_propagate(b0, ops, 50.0, 0.5)

    def test_invalid_tau(self):
        basis, ops = decay_operators()
        b0 = BlockDensityMatrix.pure(basis, 1, np.array([1.0]))
        with pytest.raises(ValueError):
            oracle_propagate(b0, ops, 1.0, -0.1)
