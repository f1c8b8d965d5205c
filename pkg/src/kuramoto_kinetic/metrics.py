"""Distances between states and rate diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import EmpiricalMeasure, GridDensity, PhaseEnsemble, QuantileField, ensemble_to_empirical
from .errors import LatticeMismatch, MeanNotZero, NonPositiveValues, RangeViolation, UnequalSupport


def _same_lattice(q1: QuantileField, q2: QuantileField) -> None:
    if q1.phi.shape != q2.phi.shape or not np.array_equal(q1.fractions, q2.fractions):
        raise LatticeMismatch("quantile fields use different eta fractions")
    f1, f2 = q1.freq, q2.freq
    if not (np.array_equal(f1.omega_grid, f2.omega_grid) and np.allclose(f1.weights, f2.weights, rtol=0, atol=1e-14)):
        raise LatticeMismatch("quantile fields use different frequency lattices")


def wasserstein_p_fiber(q1: QuantileField, q2: QuantileField, k: int, p: float) -> float:
    """``|| phi1(., Omega_k) - phi2(., Omega_k) ||_{L^p(0, g(Omega_k))}``."""
    _same_lattice(q1, q2)
    d = np.abs(q1.phi[:, k] - q2.phi[:, k])
    if np.isinf(p):
        return float(d.max())
    return float(np.sum(q1.freq.values[k] / q1.m_eta * d**p) ** (1.0 / p))


def modified_wp(q1: QuantileField, q2: QuantileField, p: float) -> float:
    """L^p-in-Omega aggregate of the fiber distances; ``p = inf`` is the largest fiber distance."""
    _same_lattice(q1, q2)
    d = np.abs(q1.phi - q2.phi)
    if np.isinf(p):
        live = q1.freq.weights > 0
        return float(d[:, live].max())
    return float(np.sum(q1.weights * d**p) ** (1.0 / p))


def _as_measure(m) -> EmpiricalMeasure:
    return ensemble_to_empirical(m) if isinstance(m, PhaseEnsemble) else m


def w1_empirical(a, b) -> float:
    """Exact W1 between two equal-size uniform-weight empirical measures.

    Ground cost is the Euclidean distance on the (theta, Omega) strip.  When
    every atom shares one frequency the problem is one-dimensional and sorted
    matching is optimal; otherwise a linear assignment problem is solved.
    """
    a, b = _as_measure(a), _as_measure(b)
    if a.n != b.n:
        raise UnequalSupport(f"atom counts differ: {a.n} vs {b.n}")
    w = 1.0 / a.n
    if not (np.allclose(a.weights, w, rtol=1e-12) and np.allclose(b.weights, w, rtol=1e-12)):
        raise UnequalSupport("atoms must carry uniform weights 1/N")
    om = np.concatenate([a.omega, b.omega])
    if np.all(om == om[0]):
        return float(np.mean(np.abs(np.sort(a.theta) - np.sort(b.theta))))
    cost = np.hypot(a.theta[:, None] - b.theta[None, :], a.omega[:, None] - b.omega[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() * w)


def bl_distance_upper(m, center: float) -> float:
    """First absolute theta-moment about ``center``.

    Upper bound for the bounded-Lipschitz distance between ``m`` and the
    Dirac mass at ``(center, 0)`` for a measure whose frequencies are all 0.
    """
    if isinstance(m, (PhaseEnsemble, EmpiricalMeasure)):
        m = _as_measure(m)
        return float(np.sum(m.weights * np.abs(m.theta - center)))
    if isinstance(m, GridDensity):
        return float(np.sum(m.cell_masses() * np.abs(m.theta_grid - center)[:, None]))
    if isinstance(m, QuantileField):
        return float(np.sum(m.weights * np.abs(m.phi - center)))
    raise TypeError(f"unsupported measure type {type(m).__name__}")


# ---------------------------------------------------------------------------
# Lemma audit

SIGN_CLASSES = ("P", "Z", "N")


@dataclass
class LemmaCheck:
    lhs: float
    rhs: float
    holds: bool
    # I(A, B) per sign pattern (A: class of the starred variable) with its table bound
    cases: dict = field(default_factory=dict)

    @property
    def cases_hold(self) -> bool:
        return all(c["holds"] for c in self.cases.values())


def project_mean_zero(raw, weights) -> np.ndarray:
    raw = np.asarray(raw, dtype=float)
    return raw - np.sum(weights * raw) / np.sum(weights)


def admissible_field(raw, weights, amplitude: float) -> np.ndarray:
    """Project ``raw`` to weighted mean zero and rescale so ``max |Phi| = amplitude``."""
    if not 0 < amplitude < np.pi / 2:
        raise RangeViolation("amplitude must lie in (0, pi/2)")
    phi = project_mean_zero(raw, weights)
    peak = np.max(np.abs(phi))
    return phi if peak == 0 else phi * (amplitude / peak)


def _signed_power(x, p):
    return np.sign(x) * np.abs(x) ** (p - 1) if p != 1 else np.sign(x)


def lemma_cal_check(phi, weights, p: float, tol: float = 1e-10, mean_tol: float = 1e-12) -> LemmaCheck:
    """Evaluate both sides of the sign-weighted sine inequality on a lattice.

    lhs = sum_{a,b} w_a w_b [|Phi_a|^{p-1} sgn Phi_a - |Phi_b|^{p-1} sgn Phi_b] sin((Phi_b - Phi_a)/2)
    rhs = -(2/pi) sum_a w_a |Phi_a|^p

    The weights must be a probability vector, ``Phi`` must have weighted mean
    zero (to ``mean_tol``) and ``|Phi| < pi/2``.  Each of the nine sign-pattern
    blocks is also checked against its own bound.
    """
    x = np.asarray(phi, dtype=float).ravel()
    w = np.broadcast_to(np.asarray(weights, dtype=float), np.shape(phi)).ravel()
    if abs(w.sum() - 1.0) > 1e-10:
        raise ValueError("lattice weights must sum to one")
    if np.max(np.abs(x)) >= np.pi / 2:
        raise RangeViolation("|Phi| must stay below pi/2")
    mean = float(np.sum(w * x))
    if abs(mean) > mean_tol * max(1.0, float(np.sum(w * np.abs(x)))):
        raise MeanNotZero(f"weighted mean {mean!r} is not zero; project it out first")

    psi = _signed_power(x, p)
    cls = np.where(x > 0, 0, np.where(x < 0, 2, 1))
    block = np.zeros((3, 3))  # [class of starred b, class of a]
    for lo in range(0, x.size, 512):
        a = slice(lo, lo + 512)
        delta = (psi[a, None] - psi[None, :]) * np.sin((x[None, :] - x[a, None]) / 2.0)
        contrib = (w[a, None] * w[None, :]) * delta
        for cb in range(3):
            cols = cls == cb
            if not np.any(cols):
                continue
            row_sums = contrib[:, cols].sum(axis=1)
            block[cb] += np.bincount(cls[a], weights=row_sums, minlength=3)
    lhs = float(block.sum())
    absx = np.abs(x)
    rhs = float(-(2.0 / np.pi) * np.sum(w * absx**p))

    def stats(c):
        sel = cls == c
        pm1 = np.where(sel, 1.0, 0.0) if p == 1 else np.where(sel, absx ** (p - 1), 0.0)
        return (
            float(w[sel].sum()),
            float(np.sum(w[sel] * absx[sel] ** p)),
            float(np.sum(w * pm1)),
            float(np.sum(w[sel] * absx[sel])),
        )

    L, Mp, Mq, M1 = zip(*(stats(c) for c in range(3)))
    Z = 1

    def bound(A, B):
        if A == Z and B == Z:
            return 0.0
        if Z in (A, B):
            other = B if A == Z else A
            return -L[Z] / np.pi * Mp[other]
        if A != B:
            return -(L[A] * Mp[B] + L[B] * Mp[A] + Mq[B] * M1[A] + Mq[A] * M1[B]) / np.pi
        return -(2.0 * L[A] * Mp[A] - 2.0 * Mq[A] * M1[A]) / np.pi

    cases = {}
    for A in range(3):
        for B in range(3):
            b = bound(A, B)
            cases[SIGN_CLASSES[A] + SIGN_CLASSES[B]] = {
                "value": float(block[A, B]),
                "bound": float(b),
                "holds": bool(block[A, B] <= b + tol),
            }
    return LemmaCheck(lhs, rhs, bool(lhs <= rhs + tol), cases)


# ---------------------------------------------------------------------------
# Rate fitting


@dataclass(frozen=True)
class RateFit:
    rate: float
    intercept: float
    r_squared: float
    window: tuple[float, float]


def fit_decay_rate(times, values, window: tuple[float, float] | None = None) -> RateFit:
    """Least-squares fit of ``log v = intercept - rate * t`` on ``window`` (inclusive)."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    ta, tb = (t.min(), t.max()) if window is None else window
    if not ta < tb:
        raise ValueError("window must satisfy t_a < t_b")
    sel = (t >= ta - 1e-12) & (t <= tb + 1e-12)
    if sel.sum() < 5:
        raise ValueError(f"need at least 5 samples in the window, got {int(sel.sum())}")
    if np.any(v[sel] <= 0):
        raise NonPositiveValues("decay fit needs strictly positive values")
    ts, ys = t[sel], np.log(v[sel])
    if np.ptp(ys) == 0.0:
        # flat series: the mean is off by an ulp, so short-circuit
        return RateFit(0.0, float(ys[0]), 1.0, (float(ta), float(tb)))
    A = np.column_stack([np.ones_like(ts), ts])
    (c0, c1), *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = ys - (c0 + c1 * ts)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(float(-c1), float(c0), r2, (float(ta), float(tb)))
