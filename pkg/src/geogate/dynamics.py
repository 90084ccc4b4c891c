"""Closed- and open-system time evolution for the gate models.

Four models share one fixed-step RK4 core:

* two-level qubit driven by a synthesized pulse,
* three-level transmon with the second excited state as leakage target,
* two capacitively coupled transmons (9 levels, interaction picture) with
  a flux modulation on the second qubit,
* the effective two-level reduction of the coupled pair in the
  {|11>, |02>} subspace.

Open-system evolution follows

    rho_dot = -i [H(t), rho] + sum_k (r_k/2) (2 L_k rho L_k^+ - {L_k^+ L_k, rho})

with decay sigma_- = |0><1| and dephasing sigma_z = |1><1| - |0><0| embedded
per qubit (higher levels undamped).

Hamiltonian samplers are vectorized callables ``H(ts) -> (len(ts), d, d)``;
the integrator evaluates them once on its half-step grid.  Batched density
matrices (leading batch axes) evolve simultaneously through numpy
broadcasting.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._csv import write_csv
from .optimize import invert_bessel_j1
from .paths import PathTrajectory
from .pulses import DrivePulse

DEFAULT_DT = 0.001  # ns


class ConvergenceError(RuntimeError):
    """Step-size rejection: halving dt moved the final state too much."""


@dataclass(frozen=True)
class DecoherenceRates:
    """Decay and pure-dephasing rates, rad/ns."""

    gamma_decay: float = 0.0
    kappa_dephase: float = 0.0

    def __post_init__(self):
        if self.gamma_decay < 0 or self.kappa_dephase < 0:
            raise ValueError("rates must be non-negative")

    @property
    def is_zero(self):
        return self.gamma_decay == 0.0 and self.kappa_dephase == 0.0


@dataclass(frozen=True)
class ErrorFractions:
    """Relative drive-amplitude and detuning offsets used in robustness scans."""

    epsilon: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if max(abs(self.epsilon), abs(self.delta)) > 0.1 + 1e-12:
            warnings.warn("error fraction outside the benchmark range [-0.1, 0.1]",
                          stacklevel=2)


@dataclass(frozen=True)
class TransmonParams:
    """Single transmon: anharmonicity; coupled pair: g, detuning, both anharmonicities."""

    anharmonicity: float = 0.0
    g: float = 0.0
    Delta: float = 0.0
    anh_a: float = 0.0
    anh_b: float = 0.0


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray

    @classmethod
    def from_ket(cls, ket) -> "DensityMatrix":
        ket = np.asarray(ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        return cls(np.outer(ket, ket.conj()))

    @property
    def dim(self):
        return self.matrix.shape[-1]

    def validate(self, herm_tol=1e-12, trace_tol=1e-10, psd_tol=1e-9):
        m = self.matrix
        if np.abs(m - m.conj().T).max() > herm_tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > trace_tol or abs(np.trace(m).imag) > trace_tol:
            raise ValueError("density matrix trace differs from one")
        if np.linalg.eigvalsh(m).min() < -psd_tol:
            raise ValueError("density matrix has a significantly negative eigenvalue")
        return self


def aux_states(alpha: float, beta: float):
    """Orthonormal pair of Bloch states at (alpha, beta) and its antipode."""
    plus = np.array([math.cos(alpha / 2),
                     math.sin(alpha / 2) * np.exp(1j * beta)], dtype=complex)
    minus = np.array([math.sin(alpha / 2) * np.exp(-1j * beta),
                      -math.cos(alpha / 2)], dtype=complex)
    return plus, minus


@dataclass(frozen=True)
class EvolutionFrame:
    """Start point of a loop plus the phases its auxiliary pair accumulates."""

    alpha0: float
    beta0: float
    gamma_plus: np.ndarray | None = None
    gamma_minus: np.ndarray | None = None

    def initial_states(self):
        return aux_states(self.alpha0, self.beta0)


# ---------------------------------------------------------------------------
# samplers

def _interp(ts, tp, fp):
    return np.interp(ts, tp, fp)


def two_level_hamiltonian(pulse: DrivePulse, err: ErrorFractions | None = None):
    """Rotating-frame qubit Hamiltonian sampler for a synthesized pulse."""
    base = _two_level_terms(pulse)

    def sample(ts):
        H = base(ts)
        if err is not None and (err.epsilon or err.delta):
            H = H + _error_terms(ts, pulse, err, dim=2)
        return H

    return sample


def _two_level_terms(pulse):
    def sample(ts):
        ts = np.asarray(ts, dtype=float)
        de = _interp(ts, pulse.t, pulse.delta)
        env = pulse.drag if pulse.drag is not None else pulse.omega.astype(complex)
        om = (_interp(ts, pulse.t, env.real) + 1j * _interp(ts, pulse.t, env.imag))
        ph = _interp(ts, pulse.t, pulse.phase)
        drive = om * np.exp(1j * ph)
        H = np.zeros(ts.shape + (2, 2), dtype=complex)
        H[..., 0, 0] = -de / 2
        H[..., 1, 1] = de / 2
        H[..., 1, 0] = drive / 2
        H[..., 0, 1] = np.conj(drive) / 2
        return H
    return sample


def _error_terms(ts, pulse: DrivePulse, err: ErrorFractions, dim: int):
    """Additive drive-scaling and detuning-offset terms, qubit convention.

    The amplitude error scales the instantaneous complex drive; the
    detuning error adds a constant (delta/2) * omega0 on |1><1| - |0><0|.
    For three levels the amplitude error also scales the leakage row the
    drive shares.
    """
    ts = np.asarray(ts, dtype=float)
    env = pulse.drag if pulse.drag is not None else pulse.omega.astype(complex)
    om = (_interp(ts, pulse.t, env.real) + 1j * _interp(ts, pulse.t, env.imag))
    ph = _interp(ts, pulse.t, pulse.phase)
    drive = err.epsilon * om * np.exp(1j * ph)
    off = err.delta * pulse.omega0 / 2
    E = np.zeros(ts.shape + (dim, dim), dtype=complex)
    E[..., 0, 0] = -off
    E[..., 1, 1] = off
    E[..., 1, 0] = drive / 2
    E[..., 0, 1] = np.conj(drive) / 2
    if dim >= 3:
        E[..., 2, 1] = math.sqrt(2) * drive / 2
        E[..., 1, 2] = np.conj(E[..., 2, 1])
    return E


def error_inject(base_sampler, err: ErrorFractions, pulse: DrivePulse, dim: int = 2):
    """Wrap a sampler with the additive amplitude/detuning error terms."""
    if err is None or (err.epsilon == 0.0 and err.delta == 0.0):
        return base_sampler

    def sample(ts):
        return base_sampler(ts) + _error_terms(ts, pulse, err, dim)

    return sample


def three_level_hamiltonian(pulse: DrivePulse, anharmonicity: float,
                            err: ErrorFractions | None = None):
    """Transmon sampler in the frame rotating at the drive frequency.

    The qubit block reproduces the two-level Hamiltonian; the second
    excited state sits at 3*Delta/2 - anharmonicity and shares the drive
    with a sqrt(2) matrix element.
    """
    def sample(ts):
        ts = np.asarray(ts, dtype=float)
        de = _interp(ts, pulse.t, pulse.delta)
        env = pulse.drag if pulse.drag is not None else pulse.omega.astype(complex)
        om = (_interp(ts, pulse.t, env.real) + 1j * _interp(ts, pulse.t, env.imag))
        ph = _interp(ts, pulse.t, pulse.phase)
        d01 = 0.5 * om * np.exp(-1j * ph)
        H = np.zeros(ts.shape + (3, 3), dtype=complex)
        H[..., 0, 0] = -de / 2
        H[..., 1, 1] = de / 2
        H[..., 2, 2] = 3 * de / 2 - anharmonicity
        H[..., 0, 1] = d01
        H[..., 1, 0] = np.conj(d01)
        H[..., 1, 2] = math.sqrt(2) * d01
        H[..., 2, 1] = np.conj(H[..., 1, 2])
        if err is not None and (err.epsilon or err.delta):
            H = H + _error_terms(ts, pulse, err, dim=3)
        return H

    return sample


# ---------------------------------------------------------------------------
# two-qubit models

@dataclass(frozen=True)
class TwoQubitDrive:
    """Flux-modulation waveform for the coupled-transmon control-phase gate.

    The modulation frequency satisfies nu = Delta_prime + anh_b + Delta at
    every sample by construction.
    """

    tau: float
    t: np.ndarray
    eta: np.ndarray
    varphi: np.ndarray
    g_prime: np.ndarray
    Delta_prime: np.ndarray
    nu: np.ndarray
    gamma_g_prime: float

    def frequency_matching_residual(self, params: TransmonParams) -> float:
        return float(np.abs(self.nu - (self.Delta_prime + params.anh_b + params.Delta)).max())


def eta_waveform(g_prime, g: float):
    """Modulation amplitude solving 2*sqrt(2)*g*J1(eta) = g_prime pointwise."""
    ratio = np.asarray(g_prime, dtype=float) / (2 * math.sqrt(2) * g)
    return invert_bessel_j1(ratio)


def build_two_qubit_drive(params: TransmonParams, pulse: DrivePulse,
                          gamma_g_prime: float) -> TwoQubitDrive:
    """Map a synthesized subspace pulse onto the physical flux modulation."""
    eta = eta_waveform(pulse.omega, params.g)
    nu = pulse.delta + params.anh_b + params.Delta
    return TwoQubitDrive(tau=pulse.tau, t=pulse.t, eta=eta, varphi=pulse.phase,
                         g_prime=pulse.omega, Delta_prime=pulse.delta, nu=nu,
                         gamma_g_prime=gamma_g_prime)


def _cumulative_trapezoid(y, x):
    out = np.empty_like(y)
    out[0] = 0.0
    np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x), out=out[1:])
    return out


def subspace_frame_phase(drive: TwoQubitDrive, ts) -> np.ndarray:
    """Integral of Delta_prime accumulated on the supplied grid."""
    dpr = _interp(ts, drive.t, drive.Delta_prime)
    return _cumulative_trapezoid(dpr, ts)


def subspace_frame_unitary(drive: TwoQubitDrive, ts) -> np.ndarray:
    """Diagonal frame change aligning the interaction picture with the
    effective-model frame in which the control phase is defined."""
    S = subspace_frame_phase(drive, ts)[-1]
    U = np.eye(9, dtype=complex)
    U[4, 4] = np.exp(-1j * S / 2)   # |11>
    U[2, 2] = np.exp(+1j * S / 2)   # |02>
    return U


# product basis |k_a k_b>, index 3*k_a + k_b
IDX_01, IDX_02, IDX_10, IDX_11, IDX_20 = 1, 2, 3, 4, 6
COMPUTATIONAL_IDX = (0, IDX_01, IDX_10, IDX_11)


def two_qubit_full_hamiltonian(params: TransmonParams, drive: TwoQubitDrive):
    """Interaction-picture sampler for the coupled pair (9 levels).

    Exchange terms |10><01|, sqrt(2)|11><02| and sqrt(2)|20><11| rotate at
    Delta, Delta + anh_b and Delta - anh_a respectively, all modulated by
    exp(-i eta sin(integral nu + varphi)).  The modulation phase integral
    is accumulated by trapezoid quadrature on the grid handed to the
    sampler, so it shares the integrator's time resolution.
    """
    def sample(ts):
        ts = np.asarray(ts, dtype=float)
        eta = _interp(ts, drive.t, drive.eta)
        phi = _interp(ts, drive.t, drive.varphi)
        S = subspace_frame_phase(drive, ts)
        theta = S + (params.anh_b + params.Delta) * ts + phi
        mod = np.exp(-1j * eta * np.sin(theta))
        c1 = params.g * np.exp(1j * params.Delta * ts) * mod
        c2 = math.sqrt(2) * params.g * np.exp(1j * (params.Delta + params.anh_b) * ts) * mod
        c3 = math.sqrt(2) * params.g * np.exp(1j * (params.Delta - params.anh_a) * ts) * mod
        H = np.zeros(ts.shape + (9, 9), dtype=complex)
        H[..., IDX_10, IDX_01] = c1
        H[..., IDX_01, IDX_10] = np.conj(c1)
        H[..., IDX_11, IDX_02] = c2
        H[..., IDX_02, IDX_11] = np.conj(c2)
        H[..., IDX_20, IDX_11] = c3
        H[..., IDX_11, IDX_20] = np.conj(c3)
        return H

    return sample


def effective_two_qubit_hamiltonian(drive: TwoQubitDrive):
    """Two-level reduction in {|11>, |02>}: detuning Delta_prime, coupling g_prime."""
    def sample(ts):
        ts = np.asarray(ts, dtype=float)
        dpr = _interp(ts, drive.t, drive.Delta_prime)
        gp = _interp(ts, drive.t, drive.g_prime)
        phi = _interp(ts, drive.t, drive.varphi)
        off = 0.5 * gp * np.exp(-1j * phi)
        H = np.zeros(ts.shape + (2, 2), dtype=complex)
        H[..., 0, 0] = -dpr / 2
        H[..., 1, 1] = dpr / 2
        H[..., 0, 1] = off
        H[..., 1, 0] = np.conj(off)
        return H

    return sample


# ---------------------------------------------------------------------------
# collapse operators

def qubit_collapse(rates: DecoherenceRates, dim: int = 2):
    """Decay and dephasing embedded in the qubit subspace of a d-level system."""
    ops = []
    if rates.gamma_decay:
        sm = np.zeros((dim, dim), dtype=complex)
        sm[0, 1] = 1.0
        ops.append((rates.gamma_decay, sm))
    if rates.kappa_dephase:
        sz = np.zeros((dim, dim), dtype=complex)
        sz[0, 0] = -1.0
        sz[1, 1] = 1.0
        ops.append((rates.kappa_dephase, sz))
    return ops


def two_qubit_collapse(rates: DecoherenceRates):
    """Per-qubit decay and dephasing in the 9-level product space."""
    I3 = np.eye(3, dtype=complex)
    sm = np.zeros((3, 3), dtype=complex)
    sm[0, 1] = 1.0
    sz = np.diag([-1.0, 1.0, 0.0]).astype(complex)
    ops = []
    if rates.gamma_decay:
        ops.append((rates.gamma_decay, np.kron(sm, I3)))
        ops.append((rates.gamma_decay, np.kron(I3, sm)))
    if rates.kappa_dephase:
        ops.append((rates.kappa_dephase, np.kron(sz, I3)))
        ops.append((rates.kappa_dephase, np.kron(I3, sz)))
    return ops


# ---------------------------------------------------------------------------
# integrators

def _half_step_grid(t_span, dt):
    if t_span is None:
        raise ValueError("t_span (t0, t1) is required")
    t0, t1 = t_span
    if not t1 > t0:
        raise ValueError("t_span must satisfy t1 > t0")
    if dt <= 0:
        raise ValueError("dt must be positive")
    n_steps = max(1, int(round((t1 - t0) / dt)))
    ts = np.linspace(t0, t1, 2 * n_steps + 1)
    return ts, n_steps, (t1 - t0) / n_steps


@dataclass
class EvolutionResult:
    times: np.ndarray
    states: np.ndarray  # final state, or (n_records, ...) when recording
    recorded: bool = False

    @property
    def final(self):
        return self.states[-1] if self.recorded else self.states


def evolve_lindblad(hamiltonian, rho0, collapse=(), t_span=None, dt=DEFAULT_DT,
                    record_stride: int | None = None, hermitize: bool = True,
                    check_convergence: bool = False,
                    convergence_tol: float = 1e-6) -> EvolutionResult:
    """Fixed-step RK4 integration of the master equation.

    ``rho0`` may carry leading batch axes; ``hamiltonian(ts)`` may return
    matching batch axes (broadcast rules apply).  ``collapse`` is a list of
    (rate, operator) pairs entering as (rate/2) * (2 L rho L+ - {L+L, rho}).
    With ``check_convergence`` the evolution is repeated at dt/2 and the
    run is rejected if the final states differ beyond ``convergence_tol``.
    """
    result = _evolve_lindblad_once(hamiltonian, rho0, collapse, t_span, dt,
                                   record_stride, hermitize)
    if check_convergence:
        fine = _evolve_lindblad_once(hamiltonian, rho0, collapse, t_span, dt / 2,
                                     None, hermitize)
        diff = np.abs(result.final - fine.final).max()
        if diff > convergence_tol:
            raise ConvergenceError(
                f"halving dt changed the final state by {diff:.3e} (> {convergence_tol:.1e})")
    return result


def _evolve_lindblad_once(hamiltonian, rho0, collapse, t_span, dt,
                          record_stride, hermitize):
    ts, n_steps, dt = _half_step_grid(t_span, dt)
    H = np.asarray(hamiltonian(ts))
    rho = np.array(rho0, dtype=complex)
    ops = [(float(r), np.asarray(L, dtype=complex)) for r, L in collapse if r]
    anticomm = None
    if ops:
        anticomm = sum(r * (L.conj().T @ L) for r, L in ops)

    def rhs(Hk, rho):
        out = -1j * (Hk @ rho - rho @ Hk)
        if ops:
            for r, L in ops:
                out += r * (L @ rho @ L.conj().T)
            out -= 0.5 * (anticomm @ rho + rho @ anticomm)
        return out

    records = []
    record_times = []
    if record_stride:
        records.append(rho.copy())
        record_times.append(ts[0])
    for k in range(n_steps):
        H1, H2, H3 = H[2 * k], H[2 * k + 1], H[2 * k + 2]
        k1 = rhs(H1, rho)
        k2 = rhs(H2, rho + 0.5 * dt * k1)
        k3 = rhs(H2, rho + 0.5 * dt * k2)
        k4 = rhs(H3, rho + dt * k3)
        rho = rho + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if hermitize:
            rho = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
        if record_stride and ((k + 1) % record_stride == 0 or k == n_steps - 1):
            records.append(rho.copy())
            record_times.append(ts[2 * k + 2])
    if record_stride:
        return EvolutionResult(np.array(record_times), np.array(records), recorded=True)
    return EvolutionResult(np.array([ts[-1]]), rho, recorded=False)


def evolve_schrodinger(hamiltonian, psi0, t_span, dt=DEFAULT_DT,
                       record_stride: int | None = None,
                       matrix: bool = False) -> EvolutionResult:
    """Fixed-step RK4 for kets (last axis is the state index).

    With ``matrix=True`` the last two axes are treated as an operator whose
    columns propagate (for building unitaries).
    """
    ts, n_steps, dt = _half_step_grid(t_span, dt)
    H = np.asarray(hamiltonian(ts))
    psi = np.array(psi0, dtype=complex)

    def rhs(Hk, y):
        if matrix:
            return -1j * (Hk @ y)
        return -1j * np.einsum("...ij,...j->...i", Hk, y)

    records = []
    record_times = []
    if record_stride:
        records.append(psi.copy())
        record_times.append(ts[0])
    for k in range(n_steps):
        H1, H2, H3 = H[2 * k], H[2 * k + 1], H[2 * k + 2]
        k1 = rhs(H1, psi)
        k2 = rhs(H2, psi + 0.5 * dt * k1)
        k3 = rhs(H2, psi + 0.5 * dt * k2)
        k4 = rhs(H3, psi + dt * k3)
        psi = psi + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if record_stride and ((k + 1) % record_stride == 0 or k == n_steps - 1):
            records.append(psi.copy())
            record_times.append(ts[2 * k + 2])
    if record_stride:
        return EvolutionResult(np.array(record_times), np.array(records), recorded=True)
    return EvolutionResult(np.array([ts[-1]]), psi, recorded=False)


def propagator(hamiltonian, dim, t_span, dt=DEFAULT_DT) -> np.ndarray:
    """Propagate the identity columns to obtain the closed-system unitary."""
    return evolve_schrodinger(hamiltonian, np.eye(dim, dtype=complex), t_span, dt,
                              matrix=True).final


# ---------------------------------------------------------------------------
# invariants

def parallel_transport_check(traj: PathTrajectory, pulse: DrivePulse,
                             dt: float = DEFAULT_DT):
    """Max |<psi|H|psi>| along the evolution of both auxiliary states.

    Also returns the worst cyclic-return deficit 1 - |<phi(0)|psi(tau)>|.
    """
    sampler = two_level_hamiltonian(pulse)
    plus, minus = aux_states(traj.alpha[0], traj.beta[0])
    psi0 = np.stack([plus, minus])
    res = evolve_schrodinger(sampler, psi0, (0.0, pulse.tau), dt, record_stride=1)
    H = sampler(res.times)
    expval = np.einsum("tni,tij,tnj->tn", res.states.conj(), H, res.states)
    overlap = np.abs(np.einsum("ni,ni->n", psi0.conj(), res.states[-1]))
    return float(np.abs(expval).max()), float(np.abs(1.0 - overlap).max())


def evolution_frame(traj: PathTrajectory, pulse: DrivePulse,
                    dt: float = DEFAULT_DT, record_stride: int = 100) -> EvolutionFrame:
    """Track the phases the auxiliary pair accumulates along the drive.

    With parallel transport in force the dynamical contribution vanishes,
    so gamma_plus(tau) = -gamma_minus(tau) = minus the loop phase.
    """
    sampler = two_level_hamiltonian(pulse)
    psi0 = np.stack(aux_states(traj.alpha[0], traj.beta[0]))
    res = evolve_schrodinger(sampler, psi0, (0.0, pulse.tau), dt,
                             record_stride=record_stride)
    s_grid = res.times / pulse.tau
    alpha = np.interp(s_grid, traj.s, traj.alpha)
    beta = np.interp(s_grid, traj.s, traj.beta)
    refs = np.empty_like(res.states)
    for i, (a, b) in enumerate(zip(alpha, beta)):
        refs[i, 0], refs[i, 1] = aux_states(a, b)
    overlaps = np.einsum("tni,tni->tn", refs.conj(), res.states)
    phases = np.unwrap(np.angle(overlaps), axis=0)
    return EvolutionFrame(alpha0=traj.alpha[0], beta0=traj.beta[0],
                          gamma_plus=phases[:, 0], gamma_minus=phases[:, 1])


def trace_to_csv(path, times, populations, fidelity=None):
    headers = ["t_ns"] + [f"pop_{i}" for i in range(populations.shape[1])]
    cols = [times] + [populations[:, i] for i in range(populations.shape[1])]
    if fidelity is not None:
        headers.append("fidelity")
        cols.append(fidelity)
    write_csv(path, headers, cols)
