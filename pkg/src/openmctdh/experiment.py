"""End-to-end driver: Gaussian-well scattering of three spin-polarized fermions.

A two-particle ground state is relaxed in the well, an incoming Gaussian
packet is attached as an extra orbital through a creation operator, and the
resulting three-particle density operator is propagated for t_final time
units while the absorber drains outgoing flux.  Observables (block
probabilities, energy, particle density, smallest reduced-density
eigenvalue) are recorded and written as CSV plus a JSON metadata file.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import grid1d
from .errors import InternalConsistencyError
from .fock import FockState, create, enumerate_basis
from .grid1d import GridFunction, GridSpec, SPFSet, make_grid, smoothed_coulomb
from .liouville import BlockDensityMatrix
from .mctdh import (
    MCTDHState,
    Potentials,
    block_energies,
    energy_expectation,
    particle_density,
)
from .propagate import (
    PropagationConfig,
    RelaxResult,
    TrajectoryRecord,
    propagate,
    relax_imaginary,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "load_config",
    "build_grid",
    "build_model",
    "ground_state",
    "prepare_initial_state",
    "density",
    "block_probabilities",
    "energy",
    "run_experiment",
    "write_probabilities_csv",
    "write_density_csv",
    "write_spectrum_csv",
]

_FLOAT_FMT = "%.16e"  # 17 significant digits


@dataclass
class ExperimentConfig:
    """All knobs of the scattering experiment, defaulted to the standard run."""

    half_width: float = 20.0
    n_points: int = 128
    cap_onset: float = 16.0
    trap_depth: float = 8.0
    trap_width: float = 1.25
    coulomb_strength: float = 2.0
    coulomb_smoothing: float = 0.1
    packet_center: float = -2.0
    packet_width: float = 0.75
    packet_momentum: float = 3.0
    l_ground: int = 4
    l_total: int = 5
    n_particles: int = 3
    t_final: float = 30.0
    tau: float = 2.5e-3
    eps_reg: float = 1e-8
    record_every: int = 40
    relax_tau: float = 0.005
    relax_tol: float = 1e-10
    relax_max_steps: int = 400000
    gamma_off: bool = False
    out_dir: str = "out"

    def validate(self) -> None:
        if not 0 < self.cap_onset < self.half_width:
            raise ValueError("cap_onset must lie strictly between 0 and half_width")
        if self.l_total > self.n_points:
            raise ValueError("cannot carry more orbitals than grid points")
        if self.l_ground >= self.l_total:
            raise ValueError("l_total must exceed l_ground by the packet orbital")
        if not 0 < self.n_particles <= self.l_total:
            raise ValueError("n_particles must fit into l_total fermion modes")
        if self.tau <= 0 or self.relax_tau <= 0:
            raise ValueError("time steps must be positive")
        if self.t_final < 0:
            raise ValueError("t_final must be non-negative")


_BOOL_STRINGS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _parse_value(raw: str, target_type):
    if target_type is bool:
        try:
            return _BOOL_STRINGS[raw.strip().lower()]
        except KeyError:
            raise ValueError(f"cannot parse boolean from {raw!r}") from None
    return target_type(raw.strip())


def load_config(path) -> ExperimentConfig:
    """Parse a flat 'key = value' file; unknown keys are errors."""
    defaults = ExperimentConfig()
    types = {f.name: type(getattr(defaults, f.name)) for f in dataclasses.fields(defaults)}
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in types:
            raise ValueError(f"{path}:{lineno}: unknown configuration key {key!r}")
        values[key] = _parse_value(raw, types[key])
    config = ExperimentConfig(**values)
    config.validate()
    return config


def build_grid(config: ExperimentConfig) -> GridSpec:
    return make_grid(config.half_width, config.n_points)


def build_model(config: ExperimentConfig, grid: GridSpec | None = None) -> Potentials:
    grid = grid or build_grid(config)
    trap = grid1d.eval_trap(grid, depth=config.trap_depth, width=config.trap_width)
    cap = None
    if not config.gamma_off:
        cap = grid1d.eval_cap(grid, config.cap_onset).values
    pair = smoothed_coulomb(grid, config.coulomb_strength, config.coulomb_smoothing)
    return Potentials(grid, trap.values, cap, pair)


def bound_state_count(grid: GridSpec, model: Potentials) -> int:
    h = grid1d.dense_one_body_matrix(grid, GridFunction(grid, model.trap))
    return int(np.sum(np.linalg.eigvalsh(h) < 0))


def _relax_seed(grid: GridSpec, model: Potentials, l_ground: int, n_hold: int) -> MCTDHState:
    """Lowest eigenvectors of the one-body operator, holding n_hold particles."""
    h = grid1d.dense_one_body_matrix(grid, GridFunction(grid, model.trap))
    _, vecs = np.linalg.eigh(h)
    phi = vecs[:, :l_ground].T / np.sqrt(grid.dx)
    basis = enumerate_basis(l_ground, n_hold, "fermion")
    seed = FockState("fermion", tuple(1 if j < n_hold else 0 for j in range(l_ground)))
    vec = np.zeros(basis.dims[n_hold], dtype=complex)
    vec[basis.state_index(seed)[1]] = 1.0
    return MCTDHState(
        SPFSet(grid, phi.astype(complex)),
        BlockDensityMatrix.pure(basis, n_hold, vec),
    )


def ground_state(config: ExperimentConfig, model: Potentials | None = None) -> RelaxResult:
    """Relax the (n_particles - 1)-body ground state in the bare well."""
    grid = build_grid(config)
    model = model or build_model(config, grid)
    seed = _relax_seed(grid, model.without_cap(), config.l_ground, config.n_particles - 1)
    relax_config = PropagationConfig(
        tau=config.relax_tau,
        t_final=config.relax_max_steps * config.relax_tau,
        eps_reg=config.eps_reg,
        imaginary=True,
    )
    result = relax_imaginary(seed, model.without_cap(), relax_config, tol=config.relax_tol)
    logger.info("relaxation converged: E=%.10f after %d steps", result.energy, result.steps)
    return result


def incoming_packet(grid: GridSpec, config: ExperimentConfig) -> np.ndarray:
    """Gaussian packet exp(-(x - x0)^2 / w + i k x), before projection."""
    x = grid.x
    return np.exp(
        -((x - config.packet_center) ** 2) / config.packet_width
        + 1j * config.packet_momentum * x
    )


def prepare_initial_state(
    config: ExperimentConfig,
    model: Potentials | None = None,
    relaxed: RelaxResult | None = None,
) -> tuple[MCTDHState, RelaxResult]:
    """Attach the packet orbital to the relaxed state with a creation operator.

    The packet is projected off the relaxed orbitals and normalized, so the
    resulting block-N density is rank-1 with unit trace.
    """
    grid = build_grid(config)
    model = model or build_model(config, grid)
    if relaxed is None:
        relaxed = ground_state(config, model)
    ground = relaxed.state

    g = incoming_packet(grid, config)
    g = grid1d.project_rows(ground.spfs, g[None, :])[0]
    norm = np.sqrt(grid.dx * np.vdot(g, g).real)
    if norm < 1e-12:
        raise ValueError("packet is annihilated by the projection")
    packet = g / norm

    phi = np.vstack([ground.spfs.phi, packet[None, :]])
    spfs = SPFSet(grid, phi)
    basis = enumerate_basis(config.l_total, config.n_particles, "fermion")
    packet_mode = config.l_total - 1
    n_hold = config.n_particles - 1

    ground_block = ground.basis.blocks[n_hold]
    vals, vecs = np.linalg.eigh(ground.b.blocks[n_hold])
    coeffs = np.sqrt(vals[-1]) * vecs[:, -1]

    vec = np.zeros(basis.dims[config.n_particles], dtype=complex)
    for amp, state in zip(coeffs, ground_block):
        extended = FockState(
            "fermion", state.occ + (0,) * (config.l_total - config.l_ground)
        )
        res = create(extended, packet_mode)
        if res is None:
            continue
        sign, created = res
        vec[basis.state_index(created)[1]] += sign * amp
    vec = vec / np.linalg.norm(vec)

    state = MCTDHState(spfs, BlockDensityMatrix.pure(basis, config.n_particles, vec))
    state.validate()
    return state, relaxed


def density(state: MCTDHState) -> GridFunction:
    """Particle density n(x); integrates to sum_n n p_n."""
    return GridFunction(state.spfs.grid, particle_density(state))


def block_probabilities(state: MCTDHState) -> np.ndarray:
    """p_n = tr(B_n); real within 1e-12 by construction."""
    traces = state.b.block_traces()
    worst = float(np.max(np.abs(traces.imag))) if traces.size else 0.0
    if worst > 1e-12:
        raise InternalConsistencyError(f"block trace imaginary part {worst:.3e}")
    return traces.real


def energy(state: MCTDHState, model: Potentials) -> float:
    """tr(H B) with the full Hamiltonian; must be real to 1e-8."""
    value = energy_expectation(state, model)
    if abs(value.imag) > 1e-8:
        raise InternalConsistencyError(f"energy imaginary part {value.imag:.3e}")
    return float(value.real)


def _fmt(x: float) -> str:
    return _FLOAT_FMT % x


def write_probabilities_csv(path, records: list[TrajectoryRecord]) -> None:
    n_blocks = len(records[0].block_probs)
    header = ["t"] + [f"p{n}" for n in range(n_blocks)] + ["trace", "energy_re", "sigma_min"]
    lines = [",".join(header)]
    for rec in records:
        row = (
            [rec.t]
            + list(rec.block_probs)
            + [rec.trace, rec.energy, rec.sigma_min]
        )
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_density_csv(path, grid: GridSpec, records: list[TrajectoryRecord]) -> None:
    lines = [",".join(_fmt(v) for v in grid.x)]
    for rec in records:
        lines.append(",".join(_fmt(v) for v in [rec.t, *rec.density]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_spectrum_csv(path, records: list[TrajectoryRecord]) -> None:
    lines = ["t,sigma_min"]
    for rec in records:
        lines.append(f"{_fmt(rec.t)},{_fmt(rec.sigma_min)}")
    Path(path).write_text("\n".join(lines) + "\n")


def run_experiment(config: ExperimentConfig) -> dict:
    """Full pipeline; returns the metadata dictionary that is also written to disk."""
    config.validate()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    grid = build_grid(config)
    model = build_model(config, grid)
    timings = {}

    t0 = time.perf_counter()
    relaxed = ground_state(config, model)
    timings["relax_seconds"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    state, _ = prepare_initial_state(config, model, relaxed)
    initial_energy = energy(state, model)
    timings["prepare_seconds"] = time.perf_counter() - t0

    run_config = PropagationConfig(
        tau=config.tau,
        t_final=config.t_final,
        record_every=config.record_every,
        eps_reg=config.eps_reg,
    )
    t0 = time.perf_counter()
    final_state, records = propagate(state, model, run_config)
    timings["propagate_seconds"] = time.perf_counter() - t0

    write_probabilities_csv(out_dir / "probabilities.csv", records)
    write_density_csv(out_dir / "density.csv", grid, records)
    write_spectrum_csv(out_dir / "spectrum.csv", records)

    final = records[-1]
    meta = {
        "config": dataclasses.asdict(config),
        "grid": {
            "dx": grid.dx,
            "n_points": grid.n_points,
            "half_width": grid.half_width,
            "k_max": float(np.max(np.abs(grid.k))),
        },
        "bound_state_count": bound_state_count(grid, model),
        "relaxed_energy": relaxed.energy,
        "relax_steps": relaxed.steps,
        "initial_energy": initial_energy,
        "final": {
            "t": final.t,
            "block_probs": [float(p) for p in final.block_probs],
            "trace": final.trace,
            "energy": final.energy,
            "block_energies": [float(e.real) for e in block_energies(final_state, model)],
            "sigma_min": final.sigma_min,
        },
        "timings": timings,
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return meta
