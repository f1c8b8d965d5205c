"""Named benchmark initial data.

A preset is a theta-profile on the reference interval [-1, 1] placed in every
fiber at ``center + shift * Omega_k`` and scaled to ``halfwidth``.  Presets can
be rendered as grid densities (exact cell averages), quantile fields (exact
quantiles, solved by bisection) or particle ensembles.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FrequencyDensity, GridDensity, PhaseEnsemble, QuantileField, TWO_PI, midpoint_fractions


def _rc(x):
    x = np.clip(x, -1.0, 1.0)
    return 0.5 * (x + 1.0) + np.sin(np.pi * x) / (2.0 * np.pi)


def _tent(x):
    x = np.clip(x, -1.0, 1.0)
    return np.where(x < 0, 0.5 * (x + 1.0) ** 2, 1.0 - 0.5 * (1.0 - x) ** 2)


def _uniform(x):
    return 0.5 * (np.clip(x, -1.0, 1.0) + 1.0)


def _two_bump(x):
    return 0.5 * _rc((x + 0.5) / 0.5) + 0.5 * _rc((x - 0.5) / 0.5)


# reference CDFs on [-1, 1]; all symmetric about 0
PROFILES = {
    "uniform": _uniform,
    "tent": _tent,
    "raised-cosine": _rc,
    "two-bump": _two_bump,
}


@dataclass(frozen=True)
class Preset:
    profile: str = "raised-cosine"
    center: float = np.pi
    halfwidth: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"unknown preset {self.profile!r}; choose from {sorted(PROFILES)}")
        if self.halfwidth < 0:
            raise ValueError("halfwidth must be >= 0")

    def centers(self, freq: FrequencyDensity) -> np.ndarray:
        return self.center + self.shift * freq.omega_grid

    def support_inside(self, freq: FrequencyDensity) -> bool:
        c = self.centers(freq)
        return bool(np.all(c - self.halfwidth > 0) and np.all(c + self.halfwidth < TWO_PI))

    def cdf(self, theta, freq: FrequencyDensity) -> np.ndarray:
        """Fiber-relative CDF in [0, 1], shape (len(theta), M_omega)."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))[:, None]
        c = self.centers(freq)[None, :]
        if self.halfwidth == 0:
            return (theta >= c).astype(float)
        return PROFILES[self.profile]((theta - c) / self.halfwidth)

    def quantiles(self, levels, freq: FrequencyDensity) -> np.ndarray:
        """``inf{theta : CDF > u}`` per fiber at relative levels ``u``, by bisection."""
        u = np.asarray(levels, dtype=float)[:, None]
        c = self.centers(freq)[None, :]
        if self.halfwidth == 0:
            return np.broadcast_to(c, (u.shape[0], c.shape[1])).copy()
        F = PROFILES[self.profile]
        lo = np.full((u.shape[0], c.shape[1]), -1.0)
        hi = np.full_like(lo, 1.0)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            above = F(mid) > u
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        return c + self.halfwidth * hi

    def grid_density(self, freq: FrequencyDensity, m_theta: int) -> GridDensity:
        dtheta = TWO_PI / m_theta
        edges = dtheta * np.arange(m_theta + 1)
        cell = np.diff(self.cdf(edges, freq), axis=0)
        return GridDensity(freq, cell * freq.values[None, :] / dtheta)

    def quantile_field(self, freq: FrequencyDensity, m_eta: int) -> QuantileField:
        s = midpoint_fractions(m_eta)
        return QuantileField(s, freq, self.quantiles(s, freq))

    def ensemble(self, freq: FrequencyDensity, n: int, closed: bool = False, jitter: float = 0.0, rng=None) -> PhaseEnsemble:
        """Oscillators allotted to fibers in proportion to their mass.

        ``closed=True`` places the extreme oscillators of every fiber on the
        support ends (levels ``i / (n_k - 1)``) so the initial diameter equals
        the preset's exactly; otherwise levels are stratified ``(i + 1/2) / n_k``.
        ``jitter`` moves every level by up to ``jitter / n_k`` using ``rng``.
        """
        counts = n * freq.weights
        if not np.allclose(counts, np.round(counts), rtol=0, atol=1e-9):
            raise ValueError(f"N = {n} cannot be split over fiber masses {freq.weights}")
        counts = np.round(counts).astype(int)
        thetas, omegas = [], []
        for k, nk in enumerate(counts):
            if nk == 0:
                continue
            if closed:
                u = np.arange(nk) / (nk - 1) if nk > 1 else np.array([0.5])
            else:
                u = midpoint_fractions(nk)
            if jitter:
                u = np.clip(u + jitter / nk * rng.uniform(nk, -1.0, 1.0), 0.0, 1.0)
            th = self.quantiles(u, freq)[:, k]
            thetas.append(th)
            omegas.append(np.full(nk, freq.omega_grid[k]))
        return PhaseEnsemble(np.concatenate(thetas), np.concatenate(omegas))

    def comb(self, freq: FrequencyDensity, n: int) -> PhaseEnsemble:
        """Uniform-mass comb at stratified joint levels ``(i - 1/2) / n``, Omega-major.

        Same ordering as :func:`dirac_comb_from_density` but with exact
        quantiles, so a Dirac preset yields atoms exactly at its centres.
        """
        G = np.cumsum(freq.weights)
        u = midpoint_fractions(n)
        k = np.minimum(np.searchsorted(G, u, side="right"), freq.size - 1)
        below = np.concatenate([[0.0], G[:-1]])[k]
        r = np.clip((u - below) / freq.weights[k], 0.0, 1.0)
        theta = np.empty(n)
        for kk in np.unique(k):
            sel = k == kk
            theta[sel] = self.quantiles(r[sel], freq)[:, kk]
        return PhaseEnsemble(theta, freq.omega_grid[k])
