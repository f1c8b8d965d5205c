import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kuramoto_kinetic.core import FrequencyDensity, PhaseEnsemble, make_frequency_density, tent_table
from kuramoto_kinetic.errors import CouplingTooWeak, UnstableStep, ZeroDensityAtOrigin
from kuramoto_kinetic.particle import (
    ParticleParams,
    critical_coupling,
    envelope_violations,
    freq_diameter,
    kuramoto_rhs,
    mean_phase,
    order_monotonicity_report,
    order_parameter,
    phase_diameter,
    simulate,
    step_rk4,
    trapping_estimates,
)


def _brute_rhs(theta, omega, K):
    n = theta.size
    return np.array([omega[i] - K / n * sum(np.sin(theta[i] - theta[j]) for j in range(n)) for i in range(n)])


def test_decoupled_rhs_is_natural_frequency():
    e = PhaseEnsemble([1.0, 2.0, 4.0], [0.3, -0.1, 0.0])
    assert np.array_equal(kuramoto_rhs(e, 0.0), e.omega)


def test_two_body_rhs_by_hand():
    e = PhaseEnsemble([0.0, np.pi / 2], [0.0, 0.0])
    for method in ("sums", "pairwise"):
        assert np.allclose(kuramoto_rhs(e, 1.0, method), [0.5, -0.5], atol=1e-15)
    assert np.allclose(_brute_rhs(e.theta, e.omega, 1.0), [0.5, -0.5], atol=1e-15)


def test_synchronous_state_feels_no_coupling():
    e = PhaseEnsemble(np.full(5, 2.5), np.linspace(-1, 1, 5))
    assert np.allclose(kuramoto_rhs(e, 3.0), e.omega, atol=1e-15)


@given(n=st.integers(1, 60), K=st.floats(0.0, 10.0), seed=st.integers(0, 2**32 - 1))
def test_sums_and_pairwise_forms_agree(n, K, seed):
    rng = np.random.default_rng(seed)
    e = PhaseEnsemble(rng.uniform(0.1, 6.1, n), rng.uniform(-1, 1, n))
    a, b = kuramoto_rhs(e, K, "sums"), kuramoto_rhs(e, K, "pairwise")
    scale = max(1.0, np.max(np.abs(b)))
    assert np.max(np.abs(a - b)) <= 1e-12 * scale


def test_forms_agree_at_n_1000():
    rng = np.random.default_rng(1)
    e = PhaseEnsemble(rng.uniform(0.1, 6.1, 1000), rng.uniform(-1, 1, 1000))
    a, b = kuramoto_rhs(e, 2.0, "sums"), kuramoto_rhs(e, 2.0, "pairwise")
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(b))
    assert np.allclose(b[:20], _brute_rhs(e.theta, e.omega, 2.0)[:20], atol=1e-12)


def test_rk4_is_exact_on_free_drift():
    e = PhaseEnsemble([1.0, 3.0], [0.25, -0.5])
    out = step_rk4(e, ParticleParams(0.0, 0.5, 1.0))
    assert np.array_equal(out.theta, e.theta + 0.5 * e.omega)
    assert np.array_equal(out.omega, e.omega)
    assert out.time == 0.5


def _two_body_error(dt):
    d0, K = 2.0, 1.0
    e = PhaseEnsemble([np.pi + d0 / 2, np.pi - d0 / 2], [0.0, 0.0])
    rec = simulate(e, ParticleParams(K, dt, 1.0), sample_every=10**9)
    d = rec.snapshots[-1].theta[0] - rec.snapshots[-1].theta[1]
    exact = 2 * np.arctan(np.tan(d0 / 2) * np.exp(-K * 1.0))
    return abs(d - exact)


def test_two_body_phase_difference_matches_closed_form():
    assert _two_body_error(1e-3) <= 1e-8


def test_rk4_global_order():
    assert _two_body_error(0.1) / _two_body_error(0.05) >= 12


def test_free_streaming_samples():
    e = PhaseEnsemble([1.0, 2.0, 3.0], [0.1, 0.0, -0.2])
    rec = simulate(e, ParticleParams(0.0, 0.01, 2.0), sample_every=25)
    assert np.allclose(rec.times, np.arange(0, 2.0001, 0.25))
    for t, s in zip(rec.times, rec.snapshots):
        assert np.allclose(s.theta, e.theta + e.omega * t, atol=1e-13)


def test_final_time_is_always_sampled():
    rec = simulate(PhaseEnsemble([1.0], [0.0]), ParticleParams(1.0, 0.1, 1.0), sample_every=3)
    assert rec.times[-1] == pytest.approx(1.0)
    assert np.all(np.diff(rec.times) > 0)


def test_identical_oscillators_contract():
    rng = np.random.default_rng(2)
    e = PhaseEnsemble(np.pi + rng.uniform(-1, 1, 50), np.zeros(50))
    rec = simulate(e, ParticleParams(1.0, 1e-3, 3.0), sample_every=50)
    assert np.all(np.diff(rec.diameters) < 0)


@pytest.mark.parametrize("K", [0.0, 0.7, 3.0])
def test_mean_phase_moves_with_mean_frequency(K):
    rng = np.random.default_rng(4)
    n = 300
    e = PhaseEnsemble(np.pi + rng.uniform(-1, 1, n), rng.uniform(-0.3, 0.5, n))
    rec = simulate(e, ParticleParams(K, 1e-3, 2.0), sample_every=100)
    drift = rec.mean_phase - rec.mean_phase[0] - e.omega.mean() * rec.times
    assert np.all(np.abs(drift) <= 1e-10)


def test_unstable_step_is_refused():
    e = PhaseEnsemble([1.0, 2.0], [50.0, -50.0])
    with pytest.raises(UnstableStep):
        simulate(e, ParticleParams(1.0, 0.1, 1.0))


def test_diameters():
    assert phase_diameter(PhaseEnsemble([2.0], [0.0])) == 0.0
    assert phase_diameter(PhaseEnsemble([1.0, 2.5], [0.0, 0.0])) == 1.5
    rng = np.random.default_rng(5)
    e = PhaseEnsemble(rng.uniform(0, 6, 100), rng.uniform(-1, 1, 100))
    assert phase_diameter(e) == max(abs(a - b) for a, b in itertools.combinations(e.theta, 2))
    assert freq_diameter(e) == max(abs(a - b) for a, b in itertools.combinations(e.omega, 2))


def test_order_parameter_examples():
    assert order_parameter(PhaseEnsemble(np.full(7, 1.3), np.zeros(7))) == pytest.approx(1.0, abs=1e-15)
    roots = 2 * np.pi * np.arange(8) / 8 + 0.1
    assert order_parameter(PhaseEnsemble(roots, np.zeros(8))) <= 1e-12
    assert order_parameter(PhaseEnsemble([1.0, 1.0 + np.pi], [0.0, 0.0])) <= 1e-15


def test_mean_phase_is_arithmetic_on_the_lift():
    assert mean_phase(PhaseEnsemble([0.5, 7.0], [0.0, 0.0])) == 3.75


def test_critical_coupling_examples():
    assert critical_coupling(make_frequency_density("uniform", C=1.0)) == pytest.approx(4 / np.pi)
    assert critical_coupling(make_frequency_density("piecewise", table=tent_table(1.0))) == pytest.approx(2 / np.pi)
    with pytest.raises(ZeroDensityAtOrigin):
        critical_coupling(make_frequency_density("atoms", atoms={-0.5: 0.5, 0.5: 0.5}))


@given(lam=st.floats(0.1, 10.0))
def test_critical_coupling_under_dilation(lam):
    # g_lam(Omega) = lam g(lam Omega) is the tent on [-1/lam, 1/lam] with peak lam
    g = make_frequency_density("piecewise", table=tent_table(1.0 / lam))
    assert critical_coupling(g) == pytest.approx(2 / (np.pi * lam * 1.0), rel=1e-12)


def test_critical_coupling_needs_positive_origin_density():
    g = FrequencyDensity(np.array([-1.0, 0.0, 1.0]), np.array([0.5, 0.0, 0.5]), np.ones(3), 1.0, 0.0)
    with pytest.raises(ZeroDensityAtOrigin):
        critical_coupling(g)


def test_trapping_estimates_examples():
    d_inf, t0 = trapping_estimates(2.0, 1.0, 2.0)
    assert d_inf == pytest.approx(np.pi / 6, abs=1e-15)
    assert t0 == pytest.approx((2.0 - np.pi / 6) / (2 * np.sin(2.0) - 1), rel=1e-14)
    assert trapping_estimates(1.0, 1e-9, 2.0)[0] < 1e-9
    # K > D_Omega / sin D0 already forces D0 > D_inf, so t0 is positive
    assert trapping_estimates(0.2, 1.0, 10.0)[1] > 0.0


def test_trapping_needs_strong_coupling():
    with pytest.raises(CouplingTooWeak):
        trapping_estimates(2.0, 1.0, 1.0 / np.sin(2.0))


@given(d0=st.floats(0.05, 3.0), d_omega=st.floats(0.01, 2.0), margin=st.floats(1.01, 5.0))
def test_trapping_estimates_are_well_formed(d0, d_omega, margin):
    K = margin * d_omega / np.sin(d0)
    d_inf, t0 = trapping_estimates(d0, d_omega, K)
    assert 0 < d_inf < np.pi / 2
    assert t0 >= 0 and (t0 > 0) == (d0 > d_inf)


@pytest.mark.parametrize("d0, K", [(2.0, 1.0), (1.0, 2.5), (3.0, 0.5)])
def test_identical_envelope(d0, K):
    n = 64
    e = PhaseEnsemble(np.pi + d0 * (np.arange(n) / (n - 1) - 0.5), np.zeros(n))
    rec = simulate(e, ParticleParams(K, 1e-3, 5.0), sample_every=20)
    assert rec.diameters[0] == pytest.approx(d0, abs=1e-14)
    assert envelope_violations(rec.times, rec.diameters, d0, K) == 0


def test_envelope_counter_flags_outliers():
    t = np.array([0.0, 1.0])
    assert envelope_violations(t, [2.0, 2.0], 2.0, 1.0) == 1
    assert envelope_violations(t, [2.0, 0.1], 2.0, 1.0) == 1


def test_non_identical_oscillators_are_trapped():
    n = 100
    om = np.repeat([-0.5, 0.5], n // 2)
    th = np.concatenate([np.linspace(np.pi, np.pi + 2.0, n // 2), np.linspace(np.pi - 0.5, np.pi + 1.0, n // 2)])
    e = PhaseEnsemble(th, om)
    d0 = phase_diameter(e)
    d_inf, t0 = trapping_estimates(d0, 1.0, 2.0)
    rec = simulate(e, ParticleParams(2.0, 1e-3, 8.0), sample_every=10)
    assert rec.diameters.max() <= d0 + 1e-12
    assert rec.diameters[-1] <= d_inf + 1e-3


def test_order_parameter_report_is_soft():
    rep = order_monotonicity_report([0.1, 0.5, 0.4, 0.9])
    assert rep["violations"] == 1 and rep["max_drop"] == pytest.approx(0.1)
