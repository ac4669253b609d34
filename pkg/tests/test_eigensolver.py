import numpy as np
import pytest

import qmchannel as qc


def test_harmonic_spectrum(six_states):
    # E_n = (n + 1/2) hbar omega
    expected = np.arange(6) + 0.5
    rel = np.abs(six_states.energies - expected) / expected
    assert np.max(rel) < 1e-3
    assert np.all(np.diff(six_states.energies) > 0.0)


def test_ground_state_profile(ground, osc_grid, make_gaussian_state):
    analytic = make_gaussian_state(osc_grid)
    overlap = abs(qc.inner_product(ground.psi, analytic.psi))
    assert overlap >= 1.0 - 1e-8


def test_states_are_orthonormal(six_states):
    k = six_states.k
    gram = np.array(
        [
            [qc.inner_product(six_states.states[i].psi, six_states.states[j].psi)
             for j in range(k)]
            for i in range(k)
        ]
    )
    assert np.max(np.abs(gram - np.eye(k))) < 1e-8


def test_states_decay_and_sign_convention(six_states):
    for state in six_states.states:
        v = np.real(state.psi.values)
        assert v[0] == 0.0 and v[-1] == 0.0
        assert max(abs(v[1]), abs(v[-2])) < 1e-6
        big = np.abs(v) > 1e-8 * np.max(np.abs(v))
        assert v[int(np.argmax(big))] > 0.0


def test_solve_is_deterministic(harmonic, osc_grid, six_states):
    again = qc.solve_bound_states(harmonic, osc_grid, 6)
    assert np.array_equal(again.energies, six_states.energies)
    for a, b in zip(again.states, six_states.states):
        assert np.array_equal(a.psi.values, b.psi.values)


def test_residuals_within_solver_tolerance(six_states):
    for s in range(six_states.k):
        assert qc.residual_norm(six_states, s) <= 1e-6


def test_residual_of_discrete_eigenvector_is_roundoff():
    # coarse grid keeps ||H|| small, wide domain kills the boundary terms
    grid = qc.Grid(-12.0, 12.0, 256)
    solution = qc.solve_bound_states(qc.PotentialSpec.harmonic(), grid, 1)
    assert qc.residual_norm(solution, 0) <= 1e-12


def test_residual_of_generic_state_is_order_one(osc_grid, harmonic):
    rng = np.random.default_rng(3)
    state = qc.WaveFunction.from_values(osc_grid, rng.standard_normal(osc_grid.n))
    h = harmonic.hamiltonian(osc_grid)
    # ||(H - <H>) Psi|| for a rough vector is huge, nowhere near an eigenpair
    assert qc.in_deviation(state, h) >= 0.1


def test_energy_deviation_tracks_residual(ground_solution, ground, h_obs):
    res = qc.residual_norm(ground_solution, 0)
    dev = qc.in_deviation(ground, h_obs)
    assert dev <= 10.0 * res + 1e-12


def test_ground_energy_refines_monotonically_from_below(harmonic):
    # 3-point Dirichlet discretization underestimates E0; refining the grid
    # must move it up toward hbar omega / 2 and shrink the error ~4x per step
    energies = []
    for n in (512, 1024, 2048):
        grid = qc.oscillator_grid(n=n)
        energies.append(float(qc.solve_bound_states(harmonic, grid, 1).energies[0]))
    errors = [0.5 - e for e in energies]
    assert all(e > 0.0 for e in errors)
    assert energies[1] >= energies[0] - 1e-10
    assert energies[2] >= energies[1] - 1e-10
    assert errors[1] / errors[0] < 0.3
    assert errors[2] / errors[1] < 0.3


def test_square_well_table():
    # box of width 2 with tall finite walls inside the domain:
    # E_n ~ n^2 pi^2 / 8, slightly lowered by wall penetration
    grid = qc.Grid(-1.5, 1.5, 2048)
    v = np.where(np.abs(grid.points) <= 1.0, 0.0, 1.0e6)
    pot = qc.PotentialSpec.from_table(qc.GridFunction(grid, v))
    solution = qc.solve_bound_states(pot, grid, 4)
    e1 = np.pi**2 / 8.0
    for n, e in enumerate(solution.energies, start=1):
        assert e == pytest.approx(n**2 * e1, rel=1e-2)
    ratios = solution.energies / solution.energies[0]
    assert np.allclose(ratios, [1.0, 4.0, 9.0, 16.0], rtol=1e-2)


def test_domain_too_small_raises(harmonic):
    grid = qc.Grid(-1.4, 1.4, 512)
    with pytest.raises(qc.DomainTooSmallError):
        qc.solve_bound_states(harmonic, grid, 1)


def test_k_range_validation(harmonic, osc_grid):
    with pytest.raises(ValueError):
        qc.solve_bound_states(harmonic, osc_grid, 0)
    with pytest.raises(ValueError):
        qc.solve_bound_states(harmonic, osc_grid, osc_grid.n - 1)


def test_residual_index_validation(ground_solution):
    with pytest.raises(IndexError):
        qc.residual_norm(ground_solution, 1)


def test_potential_spec_validation(osc_grid):
    with pytest.raises(ValueError):
        qc.PotentialSpec("coulomb")
    with pytest.raises(ValueError):
        qc.PotentialSpec("user_table")  # table missing
    bad = np.zeros(osc_grid.n)
    bad[5] = np.inf
    with pytest.raises(ValueError):
        qc.PotentialSpec.from_table(qc.GridFunction(osc_grid, bad))
    table = qc.PotentialSpec.from_table(qc.GridFunction(osc_grid, np.zeros(osc_grid.n)))
    with pytest.raises(qc.GridMismatchError):
        table.values_on(qc.Grid(-1.0, 1.0, 64))


def test_potential_hamiltonian_matches_module_factory(osc_grid, harmonic, make_gaussian_state):
    f = make_gaussian_state(osc_grid, k=0.7).psi
    via_spec = harmonic.hamiltonian(osc_grid).apply(f)
    via_factory = qc.harmonic_hamiltonian().apply(f)
    assert np.max(np.abs(via_spec.values - via_factory.values)) < 1e-12


def test_eigensolution_requires_ascending_energies(six_states, harmonic):
    states = six_states.states[:2]
    with pytest.raises(ValueError):
        qc.EigenSolution(np.array([1.5, 0.5]), states, harmonic)
    with pytest.raises(ValueError):
        qc.EigenSolution(np.array([0.5]), states, harmonic)


def test_write_eigensolution_csv(tmp_path, six_states):
    path = tmp_path / "eigenstates.csv"
    qc.write_eigensolution_csv(six_states, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x," + ",".join(f"psi_{s}" for s in range(6))
    assert len(lines) == six_states.grid.n + 1
    cells = lines[1].split(",")
    assert len(cells) == 7
    assert float(cells[0]) == six_states.grid.x_min
