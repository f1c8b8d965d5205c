"""Domain types and conversions between density, CDF, quantile and particle views.

All containers are frozen dataclasses holding read-only numpy arrays, so a
value can be shared between threads once constructed.

Conventions
-----------
* Phases live on the lift of the circle; physical states are required to sit
  inside the open interval (0, 2*pi) and are never wrapped mid-computation.
* A fiber is the set of oscillators sharing one natural frequency node
  ``omega_grid[k]``.  Its mass is ``values[k] * widths[k]`` where ``values``
  is the frequency density and ``widths`` the Omega-quadrature cell width
  (``1`` for atomic laws, so ``values`` are then plain masses).
* Quantile fractions are fiber-relative: level ``s`` in fiber ``k`` stands
  for ``eta = s * values[k]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    AsymmetricDensity,
    EmptyLevelSet,
    EmptyMeasure,
    InvalidDensity,
    LatticeMismatch,
    NegativeDensity,
    NonUnitMass,
    UnboundedSupport,
)

TWO_PI = 2.0 * np.pi
_trapezoid = getattr(np, "trapezoid", None) or np.trapz
MASS_TOL = 1e-10


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def midpoint_fractions(m: int) -> np.ndarray:
    """Cell-midpoint sample fractions ``(j - 1/2) / m`` for ``j = 1..m``."""
    if m < 1:
        raise ValueError("need at least one fraction")
    return (np.arange(m) + 0.5) / m


# ---------------------------------------------------------------------------
# Frequency law


@dataclass(frozen=True)
class FrequencyDensity:
    """Natural-frequency law discretised on a symmetric Omega grid.

    ``origin_value`` is the density of the underlying continuous law at
    Omega = 0 (``None`` for atomic laws); it is kept separately because the
    grid generally has no node at the origin.
    """

    omega_grid: np.ndarray
    values: np.ndarray
    widths: np.ndarray
    support_radius: float
    origin_value: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "omega_grid", _frozen(self.omega_grid))
        object.__setattr__(self, "values", _frozen(self.values))
        object.__setattr__(self, "widths", _frozen(self.widths))
        object.__setattr__(self, "support_radius", float(self.support_radius))
        self._validate()

    def _validate(self):
        om, g, w, c = self.omega_grid, self.values, self.widths, self.support_radius
        if om.ndim != 1 or om.shape != g.shape or om.shape != w.shape or om.size == 0:
            raise InvalidDensity("omega_grid, values and widths must be equal-length vectors")
        if not np.isfinite(c) or c < 0:
            raise UnboundedSupport(f"support radius must be finite, got {c}")
        if not (np.all(np.isfinite(om)) and np.all(np.isfinite(g))):
            raise UnboundedSupport("non-finite frequency nodes or values")
        if om.size > 1 and np.any(np.diff(om) <= 0):
            raise InvalidDensity("omega_grid must be strictly increasing")
        if np.any(g < 0) or np.any(w <= 0):
            raise NegativeDensity("frequency density values must be >= 0 and widths > 0")
        if np.any(np.abs(om) > c * (1 + 1e-12) + 1e-15):
            raise UnboundedSupport(f"nodes outside [-{c}, {c}]")
        scale = max(c, 1.0)
        if not np.allclose(om, -om[::-1], rtol=0, atol=1e-12 * scale):
            raise AsymmetricDensity("omega grid is not symmetric about 0")
        gmax = float(np.max(g * w)) if g.size else 0.0
        if not np.allclose(g * w, (g * w)[::-1], rtol=0, atol=1e-12 * max(gmax, 1.0)):
            raise AsymmetricDensity("density is not even in omega")
        mass = self.mass
        if abs(mass - 1.0) > MASS_TOL:
            raise NonUnitMass(f"total mass {mass!r} differs from 1")
        if abs(self.mean) > MASS_TOL:
            raise AsymmetricDensity(f"mean frequency {self.mean!r} is not zero")

    @property
    def size(self) -> int:
        return self.omega_grid.size

    @property
    def weights(self) -> np.ndarray:
        """Fiber masses ``g(Omega_k) * dOmega_k``."""
        return self.values * self.widths

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    @property
    def mean(self) -> float:
        return float(np.sum(self.omega_grid * self.weights))

    @property
    def diameter(self) -> float:
        """D_Omega = 2 * support radius, the width of the frequency support."""
        return 2.0 * float(self.support_radius)


def _uniform_density(C: float, n: int = 32) -> FrequencyDensity:
    if not np.isfinite(C) or C <= 0:
        raise UnboundedSupport(f"uniform law needs finite C > 0, got {C}")
    h = 2.0 * C / n
    om = -C + h * (np.arange(n) + 0.5)
    om = 0.5 * (om - om[::-1])  # exact symmetry in floating point
    return FrequencyDensity(om, np.full(n, 1.0 / (2.0 * C)), np.full(n, h), C, 1.0 / (2.0 * C))


def _atomic_density(atoms: Mapping[float, float]) -> FrequencyDensity:
    if not atoms:
        raise InvalidDensity("no atoms given")
    items = sorted((float(k), float(v)) for k, v in atoms.items())
    om = np.array([k for k, _ in items])
    m = np.array([v for _, v in items])
    if not np.all(np.isfinite(om)):
        raise UnboundedSupport("atom locations must be finite")
    if np.any(m <= 0):
        raise InvalidDensity("atom masses must be positive")
    if not (np.allclose(om, -om[::-1], rtol=0, atol=1e-12) and np.allclose(m, m[::-1], rtol=0, atol=1e-12)):
        raise AsymmetricDensity(f"atoms {dict(items)} are not symmetric about 0")
    if abs(m.sum() - 1.0) > MASS_TOL:
        raise NonUnitMass(f"atom masses sum to {m.sum()!r}")
    om = 0.5 * (om - om[::-1])
    return FrequencyDensity(om, m, np.ones_like(m), float(np.max(np.abs(om))), None)


def _piecewise_density(table: Sequence[tuple[float, float]], n: int = 32) -> FrequencyDensity:
    knots = np.array([float(x) for x, _ in table])
    vals = np.array([float(y) for _, y in table])
    if knots.size < 2:
        raise InvalidDensity("piecewise table needs at least two knots")
    if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(vals))):
        raise UnboundedSupport("piecewise table must have finite knots and values")
    if np.any(np.diff(knots) <= 0):
        raise InvalidDensity("piecewise knots must be strictly increasing")
    if np.any(vals < 0):
        raise NegativeDensity("piecewise density values must be >= 0")
    if not (np.allclose(knots, -knots[::-1], rtol=0, atol=1e-12) and np.allclose(vals, vals[::-1], rtol=0, atol=1e-12)):
        raise AsymmetricDensity("piecewise table is not symmetric about 0")
    mass = float(_trapezoid(vals, knots))
    if abs(mass - 1.0) > MASS_TOL:
        raise NonUnitMass(f"piecewise density integrates to {mass!r}")
    C = float(knots[-1])
    h = 2.0 * C / n
    edges = -C + h * np.arange(n + 1)
    # Exact cell integrals of a piecewise-linear function: trapezoid over the
    # merged set of knots and cell edges.
    pts = np.union1d(knots, edges)
    gp = np.interp(pts, knots, vals, left=0.0, right=0.0)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (gp[1:] + gp[:-1]) * np.diff(pts))])
    cell_mass = np.diff(np.interp(edges, pts, cum))
    cell_mass = 0.5 * (cell_mass + cell_mass[::-1])
    cell_mass /= cell_mass.sum() / mass  # roundoff only; mass was checked above
    om = -C + h * (np.arange(n) + 0.5)
    om = 0.5 * (om - om[::-1])
    g0 = float(np.interp(0.0, knots, vals))
    return FrequencyDensity(om, cell_mass / h, np.full(n, h), C, g0)


def make_frequency_density(kind: str, **params) -> FrequencyDensity:
    """Build a validated frequency law.

    ``kind`` is one of ``"uniform"`` (``C``, optional ``n`` cells),
    ``"atoms"`` (``atoms``: mapping omega -> mass) or ``"piecewise"``
    (``table``: knots ``[(omega, g), ...]`` of a piecewise-linear density,
    optional ``n`` cells).  Invalid input raises; nothing is renormalised.
    """
    if kind == "uniform":
        return _uniform_density(float(params["C"]), int(params.get("n", 32)))
    if kind == "atoms":
        return _atomic_density(params["atoms"])
    if kind == "piecewise":
        return _piecewise_density(params["table"], int(params.get("n", 32)))
    raise ValueError(f"unknown frequency density kind {kind!r}")


def tent_table(C: float = 1.0) -> list[tuple[float, float]]:
    """Knots of the symmetric tent density on [-C, C]."""
    return [(-C, 0.0), (0.0, 1.0 / C), (C, 0.0)]


# ---------------------------------------------------------------------------
# Particle ensembles and measures


@dataclass(frozen=True)
class PhaseEnsemble:
    """N oscillators ``(theta_i, omega_i)`` at time ``time``.

    Phases are stored on the lift; use :meth:`wrapped` for output in [0, 2pi).
    """

    theta: np.ndarray
    omega: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        th = _frozen(np.atleast_1d(self.theta))
        om = _frozen(np.atleast_1d(self.omega))
        if th.ndim != 1 or th.shape != om.shape or th.size == 0:
            raise ValueError("theta and omega must be non-empty vectors of equal length")
        if not (np.all(np.isfinite(th)) and np.all(np.isfinite(om))):
            raise ValueError("non-finite oscillator state")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "time", float(self.time))

    @property
    def n(self) -> int:
        return self.theta.size

    def wrapped(self) -> "PhaseEnsemble":
        return PhaseEnsemble(np.mod(self.theta, TWO_PI), self.omega, self.time)

    def inside_support(self) -> bool:
        return bool(np.all(self.theta > 0.0) and np.all(self.theta < TWO_PI))


@dataclass(frozen=True)
class EmpiricalMeasure:
    theta: np.ndarray
    omega: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        for name in ("theta", "omega", "weights"):
            object.__setattr__(self, name, _frozen(np.atleast_1d(getattr(self, name))))
        if not (self.theta.shape == self.omega.shape == self.weights.shape):
            raise ValueError("atom arrays must have equal length")
        if np.any(self.weights <= 0):
            raise ValueError("atom weights must be positive")

    @property
    def n(self) -> int:
        return self.theta.size

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))


def ensemble_to_empirical(e: PhaseEnsemble) -> EmpiricalMeasure:
    return EmpiricalMeasure(e.theta, e.omega, np.full(e.n, 1.0 / e.n))


# ---------------------------------------------------------------------------
# Grid densities, CDFs and quantiles


@dataclass(frozen=True)
class GridDensity:
    """Cell averages ``f(theta_m, Omega_k)`` on a uniform theta grid over [0, 2pi)."""

    freq: FrequencyDensity
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 2 or v.shape[1] != self.freq.size or v.shape[0] < 1:
            raise ValueError(f"values must have shape (M_theta, {self.freq.size}), got {v.shape}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "time", float(self.time))

    @property
    def m_theta(self) -> int:
        return self.values.shape[0]

    @property
    def dtheta(self) -> float:
        return TWO_PI / self.m_theta

    @property
    def theta_edges(self) -> np.ndarray:
        return self.dtheta * np.arange(self.m_theta + 1)

    @property
    def theta_grid(self) -> np.ndarray:
        return self.dtheta * (np.arange(self.m_theta) + 0.5)

    @property
    def omega_grid(self) -> np.ndarray:
        return self.freq.omega_grid

    def marginal(self) -> np.ndarray:
        """theta-integral per fiber; equals ``g(Omega_k)`` for a valid state."""
        return self.values.sum(axis=0) * self.dtheta

    def cell_masses(self) -> np.ndarray:
        return self.values * self.dtheta * self.freq.widths[None, :]

    @property
    def total_mass(self) -> float:
        return float(self.cell_masses().sum())

    def theta_mean(self) -> float:
        return float(np.sum(self.cell_masses() * self.theta_grid[:, None]))


@dataclass(frozen=True)
class CdfTable:
    """Piecewise-linear per-fiber CDF ``F(theta, Omega_k)`` sampled at ``theta_nodes``.

    Repeated nodes are allowed and encode jumps (atoms).
    """

    theta_nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = _frozen(self.theta_nodes)
        vals = _frozen(self.values)
        if vals.ndim == 1:
            vals = _frozen(vals[:, None])
        if nodes.ndim != 1 or vals.shape[0] != nodes.size:
            raise ValueError("CDF values must have one row per theta node")
        if np.any(np.diff(nodes) < 0):
            raise ValueError("theta nodes must be nondecreasing")
        if np.any(np.diff(vals, axis=0) < 0):
            raise NegativeDensity("CDF decreases somewhere")
        object.__setattr__(self, "theta_nodes", nodes)
        object.__setattr__(self, "values", vals)

    @property
    def fiber_mass(self) -> np.ndarray:
        return self.values[-1]

    def __call__(self, theta) -> np.ndarray:
        """Evaluate F at ``theta`` in every fiber; returns shape (len(theta), M_omega)."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return np.stack([np.interp(theta, self.theta_nodes, col) for col in self.values.T], axis=1)


def build_cdf(f: GridDensity) -> CdfTable:
    """Cumulative theta-integral of every fiber, sampled at the cell edges."""
    if np.any(f.values < 0):
        raise NegativeDensity("density has negative cells")
    cum = np.cumsum(f.values * f.dtheta, axis=0)
    return CdfTable(f.theta_edges, np.vstack([np.zeros(f.freq.size), cum]))


def _inverse_column(nodes: np.ndarray, F: np.ndarray, eta: np.ndarray) -> np.ndarray:
    # inf{theta : F(theta) > eta} for piecewise-linear F
    if np.any(eta >= F[-1]):
        raise EmptyLevelSet(f"level {float(np.max(eta))!r} >= fiber mass {float(F[-1])!r}")
    if np.any(eta < 0):
        raise ValueError("quantile levels must be >= 0")
    i = np.maximum(np.searchsorted(F, eta, side="right"), 1)  # first node with F > eta
    lo, hi = F[i - 1], F[i]
    t = np.clip((eta - lo) / (hi - lo), 0.0, 1.0)
    return nodes[i - 1] + t * (nodes[i] - nodes[i - 1])


def pseudo_inverse(cdf: CdfTable, fractions) -> np.ndarray:
    """Quantile matrix ``phi[j, k] = inf{theta : F(theta, Omega_k) > s_j * mass_k}``."""
    s = np.asarray(fractions, dtype=float)
    mass = cdf.fiber_mass
    out = np.empty((s.size, mass.size))
    for k in range(mass.size):
        out[:, k] = _inverse_column(cdf.theta_nodes, cdf.values[:, k], s * mass[k])
    return out


@dataclass(frozen=True)
class QuantileField:
    """Per-fiber quantiles ``phi[j, k]`` at fractions ``s_j`` of fiber ``k``."""

    fractions: np.ndarray
    freq: FrequencyDensity
    phi: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        s = _frozen(self.fractions)
        p = _frozen(self.phi)
        if p.shape != (s.size, self.freq.size):
            raise ValueError(f"phi must have shape ({s.size}, {self.freq.size}), got {p.shape}")
        object.__setattr__(self, "fractions", s)
        object.__setattr__(self, "phi", p)
        object.__setattr__(self, "time", float(self.time))

    @property
    def m_eta(self) -> int:
        return self.fractions.size

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights ``g(Omega_k) dOmega_k / M_eta`` on the (j, k) lattice."""
        return np.broadcast_to(self.freq.weights / self.m_eta, self.phi.shape)

    def theta_mean(self) -> float:
        return float(np.sum(self.weights * self.phi))

    def omega_mean(self) -> float:
        return float(np.sum(self.weights.sum(axis=0) * self.freq.omega_grid))

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.phi, axis=0) >= 0))

    def inside_support(self) -> bool:
        return bool(np.all(self.phi > 0.0) and np.all(self.phi < TWO_PI))

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """Extrapolated ``phi(0, .)`` and ``phi(g(.), .)`` per fiber.

        Linear extrapolation from the two samples nearest each end; a single
        sample is its own endpoint.
        """
        s, p = self.fractions, self.phi
        if s.size == 1:
            return p[0].copy(), p[0].copy()
        lo = p[0] + (p[1] - p[0]) * (0.0 - s[0]) / (s[1] - s[0])
        hi = p[-1] + (p[-1] - p[-2]) * (1.0 - s[-1]) / (s[-1] - s[-2])
        return lo, hi

    def with_phi(self, phi, time: float | None = None) -> "QuantileField":
        return QuantileField(self.fractions, self.freq, phi, self.time if time is None else time)


def quantile_field_from_density(f: GridDensity, m_eta: int) -> QuantileField:
    s = midpoint_fractions(m_eta)
    return QuantileField(s, f.freq, pseudo_inverse(build_cdf(f), s), f.time)


def _fiber_index(omega: np.ndarray, freq: FrequencyDensity) -> np.ndarray:
    nodes = freq.omega_grid
    k = np.clip(np.searchsorted(nodes, omega), 0, nodes.size - 1)
    km = np.clip(k - 1, 0, nodes.size - 1)
    k = np.where(np.abs(nodes[km] - omega) < np.abs(nodes[k] - omega), km, k)
    if not np.allclose(nodes[k], omega, rtol=0, atol=1e-12 * max(1.0, freq.support_radius)):
        raise LatticeMismatch("oscillator frequencies do not lie on the omega grid")
    return k


def quantile_field_from_ensemble(e: PhaseEnsemble, freq: FrequencyDensity, fractions) -> QuantileField:
    """Empirical per-fiber quantiles of a uniform-weight ensemble.

    The ensemble's fiber counts must reproduce the fiber masses of ``freq``
    exactly (``n_k / N == weights[k]``); otherwise the two objects do not live
    on the same lattice.
    """
    s = np.asarray(fractions, dtype=float)
    k_of = _fiber_index(e.omega, freq)
    counts = np.bincount(k_of, minlength=freq.size)
    if not np.allclose(counts / e.n, freq.weights, rtol=0, atol=1e-12):
        raise LatticeMismatch("fiber counts of the ensemble do not match the frequency weights")
    phi = np.empty((s.size, freq.size))
    for k in range(freq.size):
        th = np.sort(e.theta[k_of == k])
        idx = np.minimum(np.floor(s * th.size).astype(int), th.size - 1)
        phi[:, k] = th[idx]
    return QuantileField(s, freq, phi, e.time)


def dirac_comb_from_density(f: GridDensity, n: int) -> PhaseEnsemble:
    """Uniform-mass comb of ``n`` atoms by stratified joint quantiles.

    Atom ``i`` sits at joint level ``(i - 1/2) / n``; the joint order is
    Omega-major, then theta within the fiber.
    """
    if abs(f.total_mass - 1.0) > 1e-9:
        raise NonUnitMass(f"density has mass {f.total_mass!r}")
    fiber_mass = f.marginal() * f.freq.widths
    G = np.cumsum(fiber_mass)
    u = midpoint_fractions(n)
    k = np.minimum(np.searchsorted(G, u, side="right"), f.freq.size - 1)
    below = np.concatenate([[0.0], G[:-1]])[k]
    r = np.clip((u - below) / fiber_mass[k], 0.0, 1.0 - 1e-15)
    cdf = build_cdf(f)
    marg = cdf.fiber_mass
    theta = np.empty(n)
    for kk in np.unique(k):
        sel = k == kk
        theta[sel] = _inverse_column(cdf.theta_nodes, cdf.values[:, kk], r[sel] * marg[kk])
    return PhaseEnsemble(theta, f.freq.omega_grid[k], f.time)


# ---------------------------------------------------------------------------
# Support boxes


@dataclass(frozen=True)
class SupportBox:
    theta_min: float
    theta_max: float
    omega_min: float
    omega_max: float

    @property
    def d_theta(self) -> float:
        return self.theta_max - self.theta_min

    @property
    def d_omega(self) -> float:
        return self.omega_max - self.omega_min


def support_box(m, mass_floor: float | None = None) -> SupportBox:
    """Bounding box of the support of an empirical measure, quantile field or grid density.

    For a :class:`GridDensity` ``mass_floor`` is relative to the peak cell
    value (default ``1e-12``) and the box spans the centres of retained cells.
    For an :class:`EmpiricalMeasure` it is an absolute weight floor (default 0).
    A :class:`QuantileField` uses its extrapolated end quantiles.
    """
    if isinstance(m, PhaseEnsemble):
        m = ensemble_to_empirical(m)
    if isinstance(m, EmpiricalMeasure):
        keep = m.weights > (mass_floor or 0.0)
        if not np.any(keep):
            raise EmptyMeasure("no atoms above the mass floor")
        th, om = m.theta[keep], m.omega[keep]
        return SupportBox(float(th.min()), float(th.max()), float(om.min()), float(om.max()))
    if isinstance(m, QuantileField):
        live = m.freq.weights > 0
        if not np.any(live):
            raise EmptyMeasure("quantile field carries no mass")
        lo, hi = m.endpoints()
        om = m.freq.omega_grid[live]
        return SupportBox(float(lo[live].min()), float(hi[live].max()), float(om.min()), float(om.max()))
    if isinstance(m, GridDensity):
        floor = 1e-12 if mass_floor is None else mass_floor
        peak = float(m.values.max())
        if peak <= 0:
            raise EmptyMeasure("grid density is identically zero")
        mask = m.values > floor * peak
        rows = np.flatnonzero(mask.any(axis=1))
        cols = np.flatnonzero(mask.any(axis=0))
        th, om = m.theta_grid, m.freq.omega_grid
        return SupportBox(float(th[rows[0]]), float(th[rows[-1]]), float(om[cols[0]]), float(om[cols[-1]]))
    raise TypeError(f"no support box for {type(m).__name__}")
