"""Lagrangian solver for the kinetic Kuramoto equation in quantile form.

Each lattice entry ``phi[j, k]`` is the position of the mass fraction
``s_j`` of fiber ``k`` and moves with

    d phi / dt = Omega_k + K * sum_{j', k'} w[j', k'] sin(phi[j', k'] - phi[j, k])

where ``w`` are the static lattice weights ``g(Omega_k) dOmega_k / M_eta``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TWO_PI, GridDensity, QuantileField
from .errors import MonotonicityLoss, SupportEscape


@dataclass(frozen=True)
class KineticParams:
    K: float
    dt: float
    t_end: float

    def __post_init__(self):
        if self.K < 0 or self.dt <= 0 or self.t_end < 0:
            raise ValueError("need K >= 0, dt > 0, t_end >= 0")


@dataclass(frozen=True)
class QuantileTrajectory:
    times: np.ndarray
    fields: list

    @property
    def final(self) -> QuantileField:
        return self.fields[-1]


def _rhs(phi, omega, w, K, method="sums"):
    if K == 0:
        return np.broadcast_to(omega, phi.shape).copy()
    if method == "sums":
        S = np.sum(w * np.sin(phi))
        C = np.sum(w * np.cos(phi))
        coupling = S * np.cos(phi) - C * np.sin(phi)
    else:
        flat = phi.ravel()
        wf = np.ascontiguousarray(w).ravel()
        coupling = (np.sin(flat[None, :] - flat[:, None]) @ wf).reshape(phi.shape)
    return omega[None, :] + K * coupling


def phi_rhs(q: QuantileField, K: float, method: str = "sums") -> np.ndarray:
    """Time derivative of every quantile.

    ``method="pairwise"`` performs the full lattice double sum (O(M^2) per
    entry); ``"sums"`` reduces it to the two global moments
    ``sum w sin phi`` and ``sum w cos phi``.
    """
    return _rhs(q.phi, q.freq.omega_grid, q.weights, K, method)


def _check(phi, n):
    if np.any(np.diff(phi, axis=0) < 0):
        raise MonotonicityLoss(f"quantiles crossed at step {n}")
    if np.any(phi <= 0.0) or np.any(phi >= TWO_PI):
        raise SupportEscape(f"a quantile left (0, 2pi) at step {n}")


def evolve(q0: QuantileField, params: KineticParams, sample_every: int = 1) -> QuantileTrajectory:
    """RK4-advance a quantile field, sampling every ``sample_every`` steps (and at the end).

    Monotonicity loss and support escape abort the run; nothing is repaired.
    """
    _check(q0.phi, 0)
    omega = q0.freq.omega_grid
    w = np.ascontiguousarray(q0.weights)
    K, dt = params.K, params.dt
    n_steps = int(round(params.t_end / dt))
    phi = q0.phi.copy()
    fields = [q0]
    for n in range(1, n_steps + 1):
        k1 = _rhs(phi, omega, w, K)
        k2 = _rhs(phi + 0.5 * dt * k1, omega, w, K)
        k3 = _rhs(phi + 0.5 * dt * k2, omega, w, K)
        k4 = _rhs(phi + dt * k3, omega, w, K)
        phi = phi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _check(phi, n)
        if n % sample_every == 0 or n == n_steps:
            fields.append(q0.with_phi(phi, q0.time + n * dt))
    return QuantileTrajectory(np.array([f.time for f in fields]), fields)


def field_diameter(q: QuantileField) -> float:
    """``max_k phi(g(Omega_k), Omega_k) - min_k phi(0, Omega_k)`` from extrapolated ends."""
    live = q.freq.weights > 0
    lo, hi = q.endpoints()
    return float(hi[live].max() - lo[live].min())


def density_from_quantile(q: QuantileField, m_theta: int) -> GridDensity:
    """Histogram of the quantile masses on a uniform theta grid.

    Each sample carries ``g(Omega_k) / M_eta`` of fiber ``k``'s density
    mass, so the theta-marginal of every fiber is reproduced exactly.
    """
    dtheta = TWO_PI / m_theta
    cells = np.clip(np.floor(q.phi / dtheta).astype(int), 0, m_theta - 1)
    vals = np.zeros((m_theta, q.freq.size))
    per_sample = q.freq.values / q.m_eta
    for k in range(q.freq.size):
        vals[:, k] = np.bincount(cells[:, k], minlength=m_theta) * per_sample[k]
    return GridDensity(q.freq, vals / dtheta, q.time)


def translate(q: QuantileField, shift: float) -> QuantileField:
    """Rigid phase shift; the equation is invariant under it."""
    return q.with_phi(q.phi + shift)


def resample(q: QuantileField, fractions) -> QuantileField:
    """Monotone (piecewise-linear) resampling of every fiber onto new fractions.

    Values outside the sampled range use the extrapolated endpoint quantiles.
    """
    lo, hi = q.endpoints()
    s = np.concatenate([[0.0], q.fractions, [1.0]])
    new = np.asarray(fractions, dtype=float)
    phi = np.empty((new.size, q.freq.size))
    for k in range(q.freq.size):
        col = np.concatenate([[lo[k]], q.phi[:, k], [hi[k]]])
        phi[:, k] = np.interp(new, s, np.maximum.accumulate(col))
    return QuantileField(new, q.freq, phi, q.time)

