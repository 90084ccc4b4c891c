"""Closed circle trajectories on the Bloch sphere for geometric gates.

A gate is identified by a target loop phase and a starting point
(``PathSpec``).  The loop itself is the shortest smooth circle compatible
with those data; its polar angle is slaved to the azimuth through

    tan(alpha/2) = C * sin(beta - pi/2),   C = sqrt(2*pi*g - g^2)/(pi - g)

for loops through the north pole, and through the implicit constraint

    2 sin(pi/12) sin(alpha) cos(beta) - 2 cos(pi/12) cos(alpha) + 1 = 0

for the Hadamard loop that starts at (pi/4, 0).  The azimuth schedule
(``BetaSchedule``) fixes how fast the loop is traversed and carries the
optional sine-series correction terms used to reshape the drive envelope.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import simpson

SIN_PI_12 = math.sin(math.pi / 12)
COS_PI_12 = math.cos(math.pi / 12)

DEFAULT_GRID_POINTS = 4001

# window slop for folding float noise at the schedule endpoints
_WINDOW_TOL = 1e-12


class ConvergenceError(RuntimeError):
    """Root refinement failed to reach the requested residual."""


class PathKind(enum.Enum):
    POLE_START = "pole_start"
    HADAMARD_START = "hadamard_start"


class ScheduleBase(enum.Enum):
    HALF_TURN = "half_turn"      # beta: pi/2 -> 3pi/2
    FULL_TURN = "full_turn"      # beta: 0 -> 2pi


@dataclass(frozen=True)
class PathSpec:
    """Target loop phase and starting point identifying a gate."""

    gamma_g: float
    alpha0: float
    beta0: float
    kind: PathKind

    def __post_init__(self):
        if self.kind is PathKind.POLE_START:
            if not 0.0 < self.gamma_g < math.pi:
                raise ValueError(f"pole-start loop phase must lie in (0, pi), got {self.gamma_g}")
            if self.alpha0 != 0.0:
                raise ValueError("pole-start trajectories begin at the north pole (alpha0 = 0)")
        elif self.kind is PathKind.HADAMARD_START:
            if not math.isclose(self.gamma_g, math.pi / 2, rel_tol=0, abs_tol=1e-12):
                raise ValueError("Hadamard-start loop phase is fixed at pi/2")
            if not (math.isclose(self.alpha0, math.pi / 4, abs_tol=1e-12) and self.beta0 == 0.0):
                raise ValueError("Hadamard-start trajectories begin at (pi/4, 0)")


@dataclass(frozen=True)
class BetaSchedule:
    """Azimuth schedule: base profile plus sine-series corrections.

    The corrections vanish at s = 0 and s = 1, so the endpoints always
    match the base profile exactly.  ``tau`` is filled in once the
    duration has been normalized against an amplitude budget.
    """

    base: ScheduleBase
    coeffs: tuple = ()
    tau: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(a) for a in self.coeffs))
        if len(self.coeffs) > 3:
            raise ValueError("at most three correction coefficients are supported")

    def with_tau(self, tau: float) -> "BetaSchedule":
        return replace(self, tau=float(tau))


@dataclass(frozen=True)
class PathPoint:
    alpha: float
    beta: float
    dalpha_ds: float
    dbeta_ds: float


@dataclass(frozen=True)
class PathTrajectory:
    """Sampled loop on a uniform grid in normalized time s = t/tau."""

    spec: PathSpec
    schedule: BetaSchedule | None
    s: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    dalpha_ds: np.ndarray
    dbeta_ds: np.ndarray

    def __len__(self):
        return len(self.s)

    def point(self, i: int) -> PathPoint:
        return PathPoint(self.alpha[i], self.beta[i], self.dalpha_ds[i], self.dbeta_ds[i])

    @property
    def samples(self):
        return [self.point(i) for i in range(len(self))]


def circle_constant(gamma_g: float) -> float:
    """Radius constant C of the pole-start circle for a loop phase."""
    if not 0.0 <= gamma_g < math.pi:
        raise ValueError(f"loop phase must lie in [0, pi), got {gamma_g}")
    if gamma_g == 0.0:
        return 0.0
    return math.sqrt(2 * math.pi * gamma_g - gamma_g**2) / (math.pi - gamma_g)


def alpha_max(gamma_g: float) -> float:
    """Largest polar angle reached by the pole-start circle."""
    if not 0.0 <= gamma_g <= math.pi:
        raise ValueError(f"loop phase must lie in [0, pi], got {gamma_g}")
    return 2.0 * math.acos(1.0 - gamma_g / math.pi)


def alpha_of_beta(gamma_g: float, beta):
    """Polar angle of the pole-start circle at azimuth ``beta``.

    Defined on the half-turn window beta in [pi/2, 3pi/2] where the sine
    factor is non-negative.
    """
    C = circle_constant(gamma_g)
    beta = np.asarray(beta, dtype=float)
    sin_fac = np.sin(beta - math.pi / 2)
    if np.any(sin_fac < -_WINDOW_TOL):
        raise ValueError("azimuth outside the half-turn window [pi/2, 3pi/2]")
    alpha = 2.0 * np.arctan(C * np.clip(sin_fac, 0.0, None))
    return float(alpha) if alpha.ndim == 0 else alpha


def _hadamard_residual(alpha, beta):
    return (2 * SIN_PI_12 * np.sin(alpha) * np.cos(beta)
            - 2 * COS_PI_12 * np.cos(alpha) + 1.0)


def _hadamard_residual_dalpha(alpha, beta):
    return 2 * SIN_PI_12 * np.cos(alpha) * np.cos(beta) + 2 * COS_PI_12 * np.sin(alpha)


def hadamard_alpha_of_beta(beta, tol: float = 1e-12):
    """Polar angle of the Hadamard loop at azimuth ``beta``.

    The constraint has a single root in (0, pi/2) for every azimuth; that
    root is the branch continuous with alpha(0) = pi/4.  Bracketed
    bisection is refined with Newton steps until the constraint residual
    falls below ``tol``.
    """
    beta = np.asarray(beta, dtype=float)
    scalar = beta.ndim == 0
    b = np.atleast_1d(beta)

    lo = np.zeros_like(b)
    hi = np.full_like(b, math.pi / 2)
    # residual is negative at 0 and positive at pi/2 for all beta
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        neg = _hadamard_residual(mid, b) < 0.0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    alpha = 0.5 * (lo + hi)
    for _ in range(3):
        alpha = alpha - _hadamard_residual(alpha, b) / _hadamard_residual_dalpha(alpha, b)
    res = np.abs(_hadamard_residual(alpha, b))
    if np.any(res > tol):
        raise ConvergenceError(f"constraint residual {res.max():.3e} above {tol:.1e}")
    return float(alpha[0]) if scalar else alpha


def hadamard_dalpha_dbeta(alpha, beta):
    """Implicit derivative d(alpha)/d(beta) along the Hadamard loop."""
    num = SIN_PI_12 * np.sin(alpha) * np.sin(beta)
    den = SIN_PI_12 * np.cos(alpha) * np.cos(beta) + COS_PI_12 * np.sin(alpha)
    return num / den


def beta_schedule(s, schedule: BetaSchedule):
    """Azimuth and its derivative with respect to normalized time.

    Half turn:  beta = pi/2 + pi sin^2(pi s / 2) + sum_k a_k sin(2 k pi s)
    Full turn:  beta = 2 pi sin^2(pi s / 2) + sum_k a_k sin(2 k pi s)
    """
    s = np.asarray(s, dtype=float)
    if schedule.base is ScheduleBase.HALF_TURN:
        beta = math.pi / 2 + math.pi * np.sin(math.pi * s / 2) ** 2
        dbeta = (math.pi**2 / 2) * np.sin(math.pi * s)
    else:
        beta = 2 * math.pi * np.sin(math.pi * s / 2) ** 2
        dbeta = math.pi**2 * np.sin(math.pi * s)
    for k, a_k in enumerate(schedule.coeffs, start=1):
        beta = beta + a_k * np.sin(2 * k * math.pi * s)
        dbeta = dbeta + 2 * k * math.pi * a_k * np.cos(2 * k * math.pi * s)
    if s.ndim == 0:
        return float(beta), float(dbeta)
    return beta, dbeta


def sample_trajectory(spec: PathSpec, schedule: BetaSchedule,
                      grid_points: int = DEFAULT_GRID_POINTS) -> PathTrajectory:
    """Sample the loop on a uniform grid in s with analytic derivatives.

    Pole-start loops tolerate schedules that retrace past the pole: the
    signed polar coordinate folds to |alpha|.  Loop integrals are even in
    alpha, so the accumulated phase is unaffected by the fold.
    """
    if grid_points < 2:
        raise ValueError("need at least two grid points")
    if spec.kind is PathKind.POLE_START and schedule.base is not ScheduleBase.HALF_TURN:
        raise ValueError("pole-start loops pair with the half-turn schedule")
    if spec.kind is PathKind.HADAMARD_START and schedule.base is not ScheduleBase.FULL_TURN:
        raise ValueError("Hadamard-start loops pair with the full-turn schedule")

    s = np.linspace(0.0, 1.0, grid_points)
    beta, dbeta = beta_schedule(s, schedule)

    if spec.kind is PathKind.POLE_START:
        C = circle_constant(spec.gamma_g)
        sin_fac = np.sin(beta - math.pi / 2)
        signed = 2.0 * np.arctan(C * sin_fac)
        dsigned = 2.0 * C * np.cos(beta - math.pi / 2) / (1.0 + (C * sin_fac) ** 2) * dbeta
        sign = np.where(signed < 0.0, -1.0, 1.0)
        alpha = np.abs(signed)
        dalpha = sign * dsigned
    else:
        alpha = hadamard_alpha_of_beta(beta)
        dalpha = hadamard_dalpha_dbeta(alpha, beta) * dbeta

    return PathTrajectory(spec=spec, schedule=schedule, s=s, alpha=alpha,
                          beta=beta, dalpha_ds=dalpha, dbeta_ds=dbeta)


def trajectory_from_samples(spec: PathSpec, s, alpha, beta, dalpha_ds, dbeta_ds) -> PathTrajectory:
    """Wrap externally constructed samples (comparison loops, ad-hoc paths)."""
    arrays = [np.asarray(a, dtype=float) for a in (s, alpha, beta, dalpha_ds, dbeta_ds)]
    return PathTrajectory(spec, None, *arrays)


def closure_distance(traj: PathTrajectory) -> float:
    """Great-circle distance between the first and last samples."""
    a0, b0 = traj.alpha[0], traj.beta[0]
    a1, b1 = traj.alpha[-1], traj.beta[-1]
    cosd = (math.cos(a0) * math.cos(a1)
            + math.sin(a0) * math.sin(a1) * math.cos(b1 - b0))
    return math.acos(min(1.0, max(-1.0, cosd)))


def geometric_phase(traj: PathTrajectory) -> float:
    """Loop phase (1/2) * integral of (1 - cos alpha) d(beta)."""
    integrand = 0.5 * (1.0 - np.cos(traj.alpha)) * traj.dbeta_ds
    return float(simpson(integrand, x=traj.s))


def path_length(traj: PathTrajectory) -> float:
    """Arc length of the sampled loop on the unit sphere."""
    speed = np.sqrt(traj.dalpha_ds**2 + (np.sin(traj.alpha) * traj.dbeta_ds) ** 2)
    return float(simpson(speed, x=traj.s))
