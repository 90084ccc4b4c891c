import math

import numpy as np
import pytest
from scipy.special import j1 as scipy_j1

from geogate.dynamics import (
    ConvergenceError,
    DecoherenceRates,
    DensityMatrix,
    ErrorFractions,
    TransmonParams,
    aux_states,
    build_two_qubit_drive,
    effective_two_qubit_hamiltonian,
    error_inject,
    eta_waveform,
    evolve_lindblad,
    evolve_schrodinger,
    parallel_transport_check,
    propagator,
    qubit_collapse,
    subspace_frame_phase,
    three_level_hamiltonian,
    two_level_hamiltonian,
    two_qubit_collapse,
    two_qubit_full_hamiltonian,
    IDX_01, IDX_02, IDX_10, IDX_11, IDX_20,
)
from geogate.paths import sample_trajectory
from geogate.pulses import (
    CATALOG,
    DEFAULT_BUDGET,
    AmplitudeBudget,
    TWO_QUBIT_COEFFS,
    default_schedule,
    drag_correct,
    synthesize,
    target_unitary,
)

TWO_PI = 2 * math.pi
RATES = DecoherenceRates(gamma_decay=TWO_PI * 3e-6, kappa_dephase=TWO_PI * 3e-6)
ANH = TWO_PI * 0.220


def zero_hamiltonian(dim):
    def sample(ts):
        ts = np.asarray(ts, dtype=float)
        return np.zeros(ts.shape + (dim, dim), dtype=complex)
    return sample


class TestDensityMatrix:
    def test_from_ket_valid(self):
        dm = DensityMatrix.from_ket([1.0, 1.0])
        dm.validate()
        assert dm.dim == 2
        assert dm.matrix[0, 1] == pytest.approx(0.5)

    def test_invalid_trace(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.diag([0.7, 0.7]).astype(complex)).validate()

    def test_invalid_hermiticity(self):
        m = np.array([[0.5, 0.1], [0.3, 0.5]], dtype=complex)
        with pytest.raises(ValueError):
            DensityMatrix(m).validate()


class TestLindbladBasics:
    def test_free_evolution_is_identity(self):
        rho0 = DensityMatrix.from_ket([1.0, 1.0j]).matrix
        res = evolve_lindblad(zero_hamiltonian(2), rho0, [], (0.0, 5.0), dt=0.01)
        assert np.allclose(res.final, rho0, atol=1e-14)

    def test_amplitude_damping_closed_form(self):
        # under (Gamma/2) L(sigma_-) the excited population decays as
        # exp(-Gamma t) and the coherence as exp(-Gamma t / 2)
        gamma = TWO_PI * 3e-6
        rho0 = np.array([[0.25, 0.25], [0.25, 0.75]], dtype=complex)
        t_end = 40.0
        res = evolve_lindblad(zero_hamiltonian(2), rho0,
                              qubit_collapse(DecoherenceRates(gamma_decay=gamma)),
                              (0.0, t_end), dt=0.01)
        assert res.final[1, 1].real == pytest.approx(0.75 * math.exp(-gamma * t_end), rel=1e-9)
        assert abs(res.final[0, 1]) == pytest.approx(0.25 * math.exp(-gamma * t_end / 2), rel=1e-9)

    def test_dephasing_closed_form(self):
        # (kappa/2) L(sigma_z) damps coherences at rate 2 kappa
        kappa = 1e-4
        rho0 = DensityMatrix.from_ket([1.0, 1.0]).matrix
        t_end = 30.0
        res = evolve_lindblad(zero_hamiltonian(2), rho0,
                              qubit_collapse(DecoherenceRates(kappa_dephase=kappa)),
                              (0.0, t_end), dt=0.01)
        assert abs(res.final[0, 1]) == pytest.approx(0.5 * math.exp(-2 * kappa * t_end), rel=1e-9)
        assert res.final[0, 0].real == pytest.approx(0.5, abs=1e-12)

    def test_trace_and_hermiticity_preserved(self):
        pulse = synthesize(CATALOG["pi8"])
        sampler = two_level_hamiltonian(pulse)
        rho0 = DensityMatrix.from_ket([1.0, 0.5]).matrix
        res = evolve_lindblad(sampler, rho0, qubit_collapse(RATES), (0.0, pulse.tau), dt=0.005)
        assert abs(np.trace(res.final).real - 1.0) < 1e-8
        assert np.abs(res.final - res.final.conj().T).max() < 1e-12
        assert np.linalg.eigvalsh(res.final).min() > -1e-9

    def test_batched_matches_loop(self):
        pulse = synthesize(CATALOG["pi8"], grid_points=801)
        sampler = two_level_hamiltonian(pulse)
        kets = np.array([[1.0, 0.0], [0.6, 0.8], [0.0, 1.0]], dtype=complex)
        rho0 = np.einsum("ni,nj->nij", kets, kets.conj())
        batched = evolve_lindblad(sampler, rho0, qubit_collapse(RATES),
                                  (0.0, pulse.tau), dt=0.01).final
        for i in range(3):
            single = evolve_lindblad(sampler, rho0[i], qubit_collapse(RATES),
                                     (0.0, pulse.tau), dt=0.01).final
            assert np.allclose(batched[i], single, atol=1e-14)

    def test_convergence_guard_passes_for_fine_dt(self):
        pulse = synthesize(CATALOG["pi8"], grid_points=801)
        sampler = two_level_hamiltonian(pulse)
        rho0 = DensityMatrix.from_ket([1.0, 1.0]).matrix
        evolve_lindblad(sampler, rho0, qubit_collapse(RATES), (0.0, pulse.tau),
                        dt=0.01, check_convergence=True)

    def test_convergence_guard_rejects_coarse_dt(self):
        pulse = synthesize(CATALOG["pi8"], grid_points=801)
        sampler = two_level_hamiltonian(pulse)
        rho0 = DensityMatrix.from_ket([1.0, 1.0]).matrix
        with pytest.raises(ConvergenceError):
            evolve_lindblad(sampler, rho0, qubit_collapse(RATES), (0.0, pulse.tau),
                            dt=3.0, check_convergence=True)

    def test_recorded_trajectory_endpoints(self):
        rho0 = DensityMatrix.from_ket([0.0, 1.0]).matrix
        res = evolve_lindblad(zero_hamiltonian(2), rho0,
                              qubit_collapse(DecoherenceRates(gamma_decay=1e-3)),
                              (0.0, 10.0), dt=0.1, record_stride=10)
        assert res.recorded
        assert res.times[0] == 0.0
        assert res.times[-1] == pytest.approx(10.0)
        assert np.allclose(res.states[0], rho0)


class TestSchrodinger:
    def test_unitarity(self):
        pulse = synthesize(CATALOG["hadamard"])
        U = propagator(two_level_hamiltonian(pulse), 2, (0.0, pulse.tau), dt=0.002)
        assert np.linalg.norm(U.conj().T @ U - np.eye(2)) < 1e-9

    def test_rabi_half_period_inverts_population(self):
        om = 0.05
        def sampler(ts):
            ts = np.asarray(ts, dtype=float)
            H = np.zeros(ts.shape + (2, 2), dtype=complex)
            H[..., 0, 1] = om / 2
            H[..., 1, 0] = om / 2
            return H
        psi = evolve_schrodinger(sampler, np.array([1.0, 0.0], dtype=complex),
                                 (0.0, math.pi / om), dt=0.01).final
        assert abs(psi[1]) == pytest.approx(1.0, abs=1e-9)


class TestErrorInjection:
    def test_zero_errors_identity(self):
        pulse = synthesize(CATALOG["pi8"], grid_points=401)
        base = two_level_hamiltonian(pulse)
        wrapped = error_inject(base, ErrorFractions(), pulse)
        ts = np.linspace(0, pulse.tau, 7)
        assert np.allclose(wrapped(ts), base(ts), atol=1e-15)

    def test_epsilon_scales_drive(self):
        pulse = synthesize(CATALOG["pi8"], grid_points=401)
        base = two_level_hamiltonian(pulse)
        wrapped = error_inject(base, ErrorFractions(epsilon=0.1), pulse)
        ts = np.linspace(0, pulse.tau, 7)
        H0, H1 = base(ts), wrapped(ts)
        assert np.allclose(H1[..., 1, 0], 1.1 * H0[..., 1, 0], atol=1e-15)
        assert np.allclose(H1[..., 0, 0], H0[..., 0, 0], atol=1e-15)

    def test_delta_offsets_splitting(self):
        pulse = synthesize(CATALOG["pi8"], grid_points=401)
        base = two_level_hamiltonian(pulse)
        wrapped = error_inject(base, ErrorFractions(delta=-0.1), pulse)
        ts = np.array([0.0, pulse.tau / 3])
        dH = wrapped(ts) - base(ts)
        assert np.allclose(dH[..., 1, 1], -0.05 * pulse.omega0, atol=1e-15)
        assert np.allclose(dH[..., 0, 0], +0.05 * pulse.omega0, atol=1e-15)

    def test_out_of_range_warns(self):
        with pytest.warns(UserWarning):
            ErrorFractions(epsilon=0.5)


class TestThreeLevel:
    def test_diagonal_without_drive(self):
        from geogate.pulses import DrivePulse
        n = 11
        t = np.linspace(0, 10, n)
        pulse = DrivePulse(tau=10.0, t=t, delta=np.zeros(n), omega=np.zeros(n),
                           phase=np.zeros(n), beta_dot=np.zeros(n),
                           zeta=np.zeros(n), omega0=0.1)
        H = three_level_hamiltonian(pulse, ANH)(np.array([1.0]))[0]
        assert np.allclose(H, np.diag([0, 0, -ANH]), atol=1e-15)

    def test_qubit_block_matches_two_level(self):
        pulse = drag_correct(synthesize(CATALOG["pi8"], grid_points=801), ANH)
        ts = np.linspace(0, pulse.tau, 9)
        H3 = three_level_hamiltonian(pulse, ANH)(ts)
        H2 = two_level_hamiltonian(pulse)(ts)
        # same drive magnitude; representations differ by the frame phase
        assert np.allclose(np.abs(H3[..., 0, 1]), np.abs(H2[..., 0, 1]), atol=1e-14)
        assert np.allclose(H3[..., 0, 0], H2[..., 0, 0], atol=1e-14)
        assert np.allclose(H3[..., 1, 1], H2[..., 1, 1], atol=1e-14)
        assert np.allclose(np.abs(H3[..., 1, 2]), math.sqrt(2) * np.abs(H2[..., 0, 1]),
                           atol=1e-14)

    def test_leakage_stays_small_with_correction(self):
        pulse = drag_correct(synthesize(CATALOG["pi8"]), ANH)
        sampler = three_level_hamiltonian(pulse, ANH)
        ket = np.zeros(3, dtype=complex)
        ket[0] = ket[1] = 1 / math.sqrt(2)
        rho0 = np.outer(ket, ket.conj())
        res = evolve_lindblad(sampler, rho0, [], (0.0, pulse.tau), dt=0.002)
        assert res.final[2, 2].real < 5e-4


class TestParallelTransport:
    @pytest.mark.parametrize("name", ["phase", "pi8", "hadamard"])
    def test_catalog_gates_transport(self, name):
        # the expectation vanishes identically on the synthesis grid; the
        # residual is set by pulse interpolation, so use a dense grid
        spec = CATALOG[name]
        traj = sample_trajectory(spec, default_schedule(spec), 40001)
        pulse = synthesize(spec, grid_points=40001)
        violation, cyclic = parallel_transport_check(traj, pulse, dt=0.002)
        assert violation < 1e-8 * pulse.omega0
        assert cyclic < 1e-6

    def test_detuning_error_breaks_transport(self):
        spec = CATALOG["pi8"]
        traj = sample_trajectory(spec, default_schedule(spec))
        pulse = synthesize(spec)
        import dataclasses
        bad = dataclasses.replace(pulse, delta=pulse.delta + 0.1 * pulse.omega0)
        violation, _ = parallel_transport_check(traj, bad, dt=0.002)
        assert violation > 1e-3 * pulse.omega0

    def test_aux_states_orthonormal(self):
        plus, minus = aux_states(0.7, 1.3)
        assert abs(np.vdot(plus, plus) - 1) < 1e-15
        assert abs(np.vdot(minus, minus) - 1) < 1e-15
        assert abs(np.vdot(plus, minus)) < 1e-15

    @pytest.mark.parametrize("name", ["pi8", "hadamard"])
    def test_accumulated_frame_phases(self, name):
        # both auxiliary states end with opposite phases equal in
        # magnitude to the loop phase
        from geogate.dynamics import evolution_frame
        spec = CATALOG[name]
        traj = sample_trajectory(spec, default_schedule(spec))
        pulse = synthesize(spec)
        frame = evolution_frame(traj, pulse, dt=0.002)
        assert frame.gamma_plus[0] == pytest.approx(0.0, abs=1e-12)
        assert frame.gamma_plus[-1] == pytest.approx(-spec.gamma_g, abs=1e-5)
        assert frame.gamma_minus[-1] == pytest.approx(+spec.gamma_g, abs=1e-5)


def paper_params():
    return TransmonParams(g=TWO_PI * 0.010, Delta=TWO_PI * 0.500,
                          anh_a=TWO_PI * 0.220, anh_b=TWO_PI * 0.200)


def two_qubit_drive(coeffs=TWO_QUBIT_COEFFS, grid_points=2001):
    params = paper_params()
    spec = CATALOG["phase"]
    pulse = synthesize(spec, default_schedule(spec, coeffs),
                       AmplitudeBudget(TWO_PI * 0.015), grid_points)
    return params, build_two_qubit_drive(params, pulse, math.pi / 4)


class TestEtaWaveform:
    def test_zero_maps_to_zero(self):
        assert eta_waveform(0.0, TWO_PI * 0.010) == pytest.approx(0.0, abs=1e-12)

    def test_round_trip_at_unity(self):
        g = TWO_PI * 0.010
        gp = 2 * math.sqrt(2) * g * scipy_j1(1.0)
        assert eta_waveform(gp, g) == pytest.approx(1.0, abs=1e-10)

    def test_reference_budget_ratio(self):
        g = TWO_PI * 0.010
        eta = eta_waveform(TWO_PI * 0.015, g)
        assert 1.0 < eta < 1.8412
        assert scipy_j1(eta) == pytest.approx(0.015 / (2 * math.sqrt(2) * 0.010), abs=1e-10)

    def test_unrealizable_drive_rejected(self):
        g = TWO_PI * 0.010
        with pytest.raises(ValueError):
            eta_waveform(2 * math.sqrt(2) * g * 0.6, g)


class TestTwoQubitHamiltonians:
    def test_frequency_matching_exact(self):
        params, drive = two_qubit_drive()
        assert drive.frequency_matching_residual(params) == 0.0

    def test_zero_modulation_leaves_bare_coupling(self):
        params = paper_params()
        from geogate.dynamics import TwoQubitDrive
        t = np.linspace(0, 10, 101)
        drive = TwoQubitDrive(tau=10.0, t=t, eta=np.zeros(101), varphi=np.zeros(101),
                              g_prime=np.zeros(101), Delta_prime=np.zeros(101),
                              nu=np.full(101, params.anh_b + params.Delta),
                              gamma_g_prime=0.0)
        H = two_qubit_full_hamiltonian(params, drive)(np.array([0.0, 1.0]))
        assert abs(H[0, IDX_10, IDX_01] - params.g) < 1e-12
        assert abs(H[1, IDX_10, IDX_01] - params.g * np.exp(1j * params.Delta)) < 1e-12
        assert abs(H[1, IDX_11, IDX_02]) == pytest.approx(math.sqrt(2) * params.g, rel=1e-12)

    def test_zero_coupling_zero_hamiltonian(self):
        params = TransmonParams(g=0.0, Delta=TWO_PI * 0.5,
                                anh_a=TWO_PI * 0.22, anh_b=TWO_PI * 0.2)
        _, drive = two_qubit_drive()
        drive_params_zero_g = params
        H = two_qubit_full_hamiltonian(drive_params_zero_g, drive)(np.linspace(0, 1, 5))
        assert np.abs(H).max() == 0.0

    def test_effective_rabi_oscillation(self):
        # constant coupling, zero detuning: full population transfer at
        # half the Rabi period
        from geogate.dynamics import TwoQubitDrive
        gp = 0.05
        t = np.linspace(0, 200, 41)
        drive = TwoQubitDrive(tau=200.0, t=t, eta=np.zeros(41), varphi=np.zeros(41),
                              g_prime=np.full(41, gp), Delta_prime=np.zeros(41),
                              nu=np.zeros(41), gamma_g_prime=0.0)
        sampler = effective_two_qubit_hamiltonian(drive)
        psi = evolve_schrodinger(sampler, np.array([1.0, 0.0], dtype=complex),
                                 (0.0, math.pi / gp), dt=0.01).final
        assert abs(psi[1]) == pytest.approx(1.0, abs=1e-9)

    def test_effective_control_phase(self):
        # the subspace pulse returns |11> with exactly the target phase
        _, drive = two_qubit_drive(grid_points=4001)
        sampler = effective_two_qubit_hamiltonian(drive)
        psi = evolve_schrodinger(sampler, np.array([1.0, 0.0], dtype=complex),
                                 (0.0, drive.tau), dt=0.002).final
        assert abs(psi[0]) == pytest.approx(1.0, abs=1e-6)
        assert np.angle(psi[0]) == pytest.approx(-math.pi / 4, abs=1e-5)

    def test_jacobi_anger_first_sideband(self):
        # Fourier component of exp(-i eta sin(theta)) at exp(-i theta)
        # equals J1(eta)
        for eta in (0.3, 0.9, 1.3):
            theta = np.linspace(0, 2 * math.pi, 20001)
            f = np.exp(-1j * eta * np.sin(theta)) * np.exp(1j * theta)
            c1 = np.trapezoid(f, theta) / (2 * math.pi)
            assert abs(c1 - scipy_j1(eta)) < 1e-6

    def test_full_model_tracks_effective_populations(self):
        # counter-rotating residuals at the reference parameters produce
        # transient ripples of a few percent; a frequency-matching bug
        # would decohere the transfer entirely (see control below)
        params, drive = two_qubit_drive(grid_points=4001)
        full = two_qubit_full_hamiltonian(params, drive)
        eff = effective_two_qubit_hamiltonian(drive)
        psi9 = np.zeros(9, dtype=complex)
        psi9[IDX_11] = 1.0
        res_full = evolve_schrodinger(full, psi9, (0.0, drive.tau), dt=0.001,
                                      record_stride=500)
        res_eff = evolve_schrodinger(eff, np.array([1.0, 0.0], dtype=complex),
                                     (0.0, drive.tau), dt=0.001, record_stride=500)
        p11_full = np.abs(res_full.states[:, IDX_11]) ** 2
        p02_full = np.abs(res_full.states[:, IDX_02]) ** 2
        p11_eff = np.abs(res_eff.states[:, 0]) ** 2
        p02_eff = np.abs(res_eff.states[:, 1]) ** 2
        assert np.abs(p11_full - p11_eff).max() < 5e-2
        assert np.abs(p02_full - p02_eff).max() < 5e-2
        assert abs(p11_full[-1] - p11_eff[-1]) < 1e-2

    def test_broken_frequency_matching_loses_tracking(self):
        import dataclasses
        params, drive = two_qubit_drive(grid_points=4001)
        # drop the time-dependent part of the matching condition
        broken = dataclasses.replace(
            drive, Delta_prime=np.zeros_like(drive.Delta_prime))
        full = two_qubit_full_hamiltonian(params, broken)
        psi9 = np.zeros(9, dtype=complex)
        psi9[IDX_11] = 1.0
        res_full = evolve_schrodinger(full, psi9, (0.0, drive.tau), dt=0.001,
                                      record_stride=2000)
        eff = effective_two_qubit_hamiltonian(drive)
        res_eff = evolve_schrodinger(eff, np.array([1.0, 0.0], dtype=complex),
                                     (0.0, drive.tau), dt=0.001, record_stride=2000)
        p11_full = np.abs(res_full.states[:, IDX_11]) ** 2
        p11_eff = np.abs(res_eff.states[:, 0]) ** 2
        assert np.abs(p11_full - p11_eff).max() > 0.2

    def test_frame_phase_accumulates_detuning_integral(self):
        _, drive = two_qubit_drive(grid_points=4001)
        ts = np.linspace(0.0, drive.tau, 5001)
        S = subspace_frame_phase(drive, ts)
        assert S[0] == 0.0
        # independent quadrature of the sampled detuning
        from scipy.integrate import simpson
        expected = simpson(np.interp(ts, drive.t, drive.Delta_prime), x=ts)
        assert S[-1] == pytest.approx(expected, rel=1e-6)

    def test_collapse_sets(self):
        ops2 = two_qubit_collapse(RATES)
        assert len(ops2) == 4
        for rate, L in ops2:
            assert L.shape == (9, 9)
        ops1 = qubit_collapse(RATES, 3)
        assert ops1[0][1][0, 1] == 1.0
        assert ops1[1][1][2, 2] == 0.0
