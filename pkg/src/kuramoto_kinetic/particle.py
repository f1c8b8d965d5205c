"""The N-oscillator Kuramoto system and its synchronization diagnostics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FrequencyDensity, PhaseEnsemble
from .errors import CouplingTooWeak, UnstableStep, ZeroDensityAtOrigin


@dataclass(frozen=True)
class ParticleParams:
    K: float
    dt: float
    t_end: float

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("coupling K must be >= 0")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")

    @staticmethod
    def default_dt(K: float) -> float:
        return 1e-3 * min(1.0, 1.0 / K) if K > 0 else 1e-3


@dataclass(frozen=True)
class TrajectoryRecord:
    times: np.ndarray
    snapshots: list
    diameters: np.ndarray
    order_param: np.ndarray
    mean_phase: np.ndarray

    def columns(self) -> dict[str, np.ndarray]:
        return {"t": self.times, "D_theta": self.diameters, "r": self.order_param, "theta_c": self.mean_phase}


def _coupling_pairwise(theta: np.ndarray) -> np.ndarray:
    # (1/N) sum_j sin(theta_j - theta_i), O(N^2)
    return np.sin(theta[None, :] - theta[:, None]).mean(axis=1)


def _coupling_sums(theta: np.ndarray) -> np.ndarray:
    s, c = np.sin(theta), np.cos(theta)
    S, C = s.mean(), c.mean()
    return S * c - C * s


def kuramoto_rhs(e: PhaseEnsemble, K: float, method: str = "sums") -> np.ndarray:
    """Phase velocities ``Omega_i - (K/N) sum_j sin(theta_i - theta_j)``.

    ``method="pairwise"`` evaluates the double sum directly; ``"sums"`` uses the
    identity ``sin(b - a) = sin b cos a - cos b sin a`` to reduce it to two
    global means.
    """
    return _rhs(e.theta, e.omega, K, method)


def _rhs(theta, omega, K, method="sums"):
    if K == 0:
        return omega.copy()
    coupling = _coupling_sums(theta) if method == "sums" else _coupling_pairwise(theta)
    return omega + K * coupling


def _rk4(theta, omega, K, dt, method="sums"):
    k1 = _rhs(theta, omega, K, method)
    k2 = _rhs(theta + 0.5 * dt * k1, omega, K, method)
    k3 = _rhs(theta + 0.5 * dt * k2, omega, K, method)
    k4 = _rhs(theta + dt * k3, omega, K, method)
    return theta + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), k1


def step_rk4(e: PhaseEnsemble, params: ParticleParams) -> PhaseEnsemble:
    """One classical RK4 step; phases are not wrapped."""
    theta, _ = _rk4(e.theta, e.omega, params.K, params.dt)
    return PhaseEnsemble(theta, e.omega, e.time + params.dt)


def phase_diameter(e: PhaseEnsemble) -> float:
    return float(e.theta.max() - e.theta.min())


def freq_diameter(e: PhaseEnsemble) -> float:
    return float(e.omega.max() - e.omega.min())


def order_parameter(e: PhaseEnsemble) -> float:
    """Modulus of the mean phasor ``|(1/N) sum exp(i theta_j)|``."""
    return float(np.hypot(np.cos(e.theta).mean(), np.sin(e.theta).mean()))


def mean_phase(e: PhaseEnsemble) -> float:
    """Arithmetic mean of the lifted phases (not the circular mean)."""
    return float(e.theta.mean())


def simulate(e0: PhaseEnsemble, params: ParticleParams, sample_every: int = 1) -> TrajectoryRecord:
    """Integrate to ``params.t_end`` with fixed-step RK4, sampling every ``sample_every`` steps.

    The final time is always sampled.  Raises :class:`UnstableStep` as soon as
    some oscillator would move more than pi/4 in one step.
    """
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    n_steps = int(round(params.t_end / params.dt))
    theta, omega = e0.theta.copy(), e0.omega
    snaps = [e0]
    for n in range(1, n_steps + 1):
        theta, k1 = _rk4(theta, omega, params.K, params.dt)
        if np.max(np.abs(k1)) * params.dt > np.pi / 4:
            raise UnstableStep(f"|dtheta/dt| * dt exceeds pi/4 at step {n}; reduce dt")
        if n % sample_every == 0 or n == n_steps:
            snaps.append(PhaseEnsemble(theta, omega, e0.time + n * params.dt))
    return TrajectoryRecord(
        times=np.array([s.time for s in snaps]),
        snapshots=snaps,
        diameters=np.array([phase_diameter(s) for s in snaps]),
        order_param=np.array([order_parameter(s) for s in snaps]),
        mean_phase=np.array([mean_phase(s) for s in snaps]),
    )


def critical_coupling(g: FrequencyDensity) -> float:
    """Kuramoto's critical coupling ``2 / (pi g(0))``."""
    g0 = g.origin_value
    if g0 is None or not g0 > 0:
        raise ZeroDensityAtOrigin("the frequency law has no positive density at 0")
    return 2.0 / (np.pi * g0)


def trapping_estimates(d_theta0: float, d_omega: float, K: float) -> tuple[float, float]:
    """Trapping diameter ``D_inf = arcsin(D_Omega / K)`` and entry time ``t0``.

    ``t0 = (D0 - D_inf) / (K sin D0 - D_Omega)``, or 0 when the initial
    diameter is already inside the trapping interval.
    """
    if not 0 < d_theta0 < np.pi:
        raise ValueError(f"initial diameter must lie in (0, pi), got {d_theta0}")
    if not d_omega > 0:
        raise ValueError("frequency diameter must be positive")
    k_e = d_omega / np.sin(d_theta0)
    if K <= k_e:
        raise CouplingTooWeak(f"K = {K} must exceed D_Omega / sin D0 = {k_e}")
    d_inf = float(np.arcsin(d_omega / K))
    if d_theta0 <= d_inf:
        return d_inf, 0.0
    return d_inf, float((d_theta0 - d_inf) / (K * np.sin(d_theta0) - d_omega))


def envelope_violations(times, diameters, d0: float, K: float, eps: float = 1e-6) -> int:
    """Samples outside ``[e^{-Kt} D0 - eps, e^{-K alpha t} D0 + eps]``, ``alpha = sin D0 / D0``."""
    t = np.asarray(times)
    d = np.asarray(diameters)
    alpha = np.sin(d0) / d0 if d0 > 0 else 1.0
    lower = np.exp(-K * t) * d0 - eps
    upper = np.exp(-K * alpha * t) * d0 + eps
    return int(np.sum((d < lower) | (d > upper)))


def order_monotonicity_report(order_param, slack: float = 1e-8) -> dict:
    """Soft check: where does r(t) decrease by more than ``slack``?

    Monotone growth of r is not a theorem, so this only reports.
    """
    drops = -np.diff(np.asarray(order_param))
    bad = np.flatnonzero(drops > slack)
    return {"violations": int(bad.size), "max_drop": float(drops.max()) if drops.size else 0.0}
