import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kuramoto_kinetic.core import (
    TWO_PI,
    PhaseEnsemble,
    QuantileField,
    make_frequency_density,
    midpoint_fractions,
    support_box,
)
from kuramoto_kinetic.errors import MonotonicityLoss, SupportEscape
from kuramoto_kinetic.particle import kuramoto_rhs, trapping_estimates
from kuramoto_kinetic.presets import Preset
from kuramoto_kinetic.quantile import (
    KineticParams,
    density_from_quantile,
    evolve,
    field_diameter,
    phi_rhs,
    resample,
    translate,
)


def _comb_pair(two_atoms, per_fiber=64, seed=0):
    """A two-fiber N-atom comb and the quantile field that encodes it."""
    rng = np.random.default_rng(seed)
    phi = np.sort(rng.uniform(np.pi - 1.0, np.pi + 1.0, (per_fiber, 2)), axis=0)
    q = QuantileField(midpoint_fractions(per_fiber), two_atoms, phi)
    e = PhaseEnsemble(phi.T.ravel(), np.repeat(two_atoms.omega_grid, per_fiber))
    return q, e


def test_lattice_weights_sum_to_one(uniform8):
    q = Preset().quantile_field(uniform8, 37)
    assert abs(q.weights.sum() - 1.0) <= 1e-10
    assert np.allclose(q.weights, uniform8.weights / 37)


def test_dirac_is_an_equilibrium(single_fiber):
    q = QuantileField(midpoint_fractions(10), single_fiber, np.full((10, 1), np.pi))
    assert np.all(phi_rhs(q, 2.0) == 0.0)
    traj = evolve(q, KineticParams(2.0, 1e-2, 5.0), sample_every=100)
    assert all(np.all(f.phi == np.pi) for f in traj.fields)


def test_free_transport_of_quantiles(uniform8, smooth_preset):
    q = smooth_preset.quantile_field(uniform8, 16)
    assert np.array_equal(phi_rhs(q, 0.0), np.broadcast_to(uniform8.omega_grid, q.phi.shape))


@given(m=st.integers(1, 20), K=st.floats(0.0, 5.0), seed=st.integers(0, 2**32 - 1))
def test_sums_and_pairwise_rhs_agree(m, K, seed):
    g = make_frequency_density("uniform", C=0.5, n=6)
    rng = np.random.default_rng(seed)
    phi = np.sort(rng.uniform(0.5, 5.5, (m, 6)), axis=0)
    q = QuantileField(midpoint_fractions(m), g, phi)
    a, b = phi_rhs(q, K, "sums"), phi_rhs(q, K, "pairwise")
    assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(b)))


def test_comb_field_rhs_matches_particles(two_atoms):
    q, e = _comb_pair(two_atoms)
    rq = phi_rhs(q, 1.7).T.ravel()
    assert np.max(np.abs(rq - kuramoto_rhs(e, 1.7))) <= 1e-12


def test_identical_field_diameter_envelope(single_fiber):
    q0 = Preset("uniform", np.pi, 1.0).quantile_field(single_fiber, 200)
    d0 = field_diameter(q0)
    assert d0 == pytest.approx(2.0, abs=1e-12)
    traj = evolve(q0, KineticParams(1.0, 1e-3, 10.0), sample_every=50)
    alpha = np.sin(d0) / d0
    d = np.array([field_diameter(f) for f in traj.fields])
    assert np.all(d <= d0 * np.exp(-alpha * traj.times) + 1e-6)
    assert np.all(d >= d0 * np.exp(-traj.times) - 1e-6)


def test_theta_mean_is_conserved_over_ten_time_units(uniform8):
    q0 = Preset("tent", np.pi, 1.0, 0.6).quantile_field(uniform8, 40)
    traj = evolve(q0, KineticParams(1.5, 1e-3, 10.0), sample_every=500)
    drift = np.abs(np.array([f.theta_mean() for f in traj.fields]) - q0.theta_mean())
    assert np.all(drift <= 1e-9 * traj.times + 1e-15)
    assert all(abs(f.omega_mean()) <= 1e-12 for f in traj.fields)
    assert all(f.weights.sum() == q0.weights.sum() for f in traj.fields)


def test_crossing_quantiles_abort(single_fiber):
    q = QuantileField(midpoint_fractions(3), single_fiber, np.array([[1.0], [3.0], [2.0]]))
    with pytest.raises(MonotonicityLoss):
        evolve(q, KineticParams(1.0, 1e-2, 0.1))


def test_escaping_support_aborts():
    g = make_frequency_density("atoms", atoms={-1.0: 0.5, 1.0: 0.5})
    q = QuantileField(midpoint_fractions(2), g, np.array([[0.2, 6.0], [0.3, 6.1]]))
    with pytest.raises(SupportEscape):
        evolve(q, KineticParams(0.0, 0.05, 1.0))


def test_field_diameter_examples(single_fiber):
    assert field_diameter(QuantileField(midpoint_fractions(5), single_fiber, np.full((5, 1), 2.0))) == 0.0
    for m in (10, 40, 160):
        q = Preset("uniform", 2.0, 0.75).quantile_field(single_fiber, m)
        assert field_diameter(q) == pytest.approx(1.5, abs=1.0 / m)


def test_field_diameter_matches_histogram_support(uniform8):
    # needs a density bounded below at its edges; vanishing tails leave the
    # outermost samples far from the support ends
    q = Preset("uniform", np.pi, 1.0, 0.5).quantile_field(uniform8, 400)
    f = density_from_quantile(q, 256)
    box = support_box(f, mass_floor=0.0)
    assert abs(field_diameter(q) - box.d_theta) <= f.dtheta


def test_histogram_examples(single_fiber, uniform8, smooth_preset):
    q = Preset("uniform", np.pi, np.pi - 1e-9).quantile_field(single_fiber, 64 * 32)
    f = density_from_quantile(q, 64)
    assert np.allclose(f.values[1:-1], 1 / TWO_PI, rtol=1e-12)
    dirac = QuantileField(midpoint_fractions(8), single_fiber, np.full((8, 1), np.pi + 0.01))
    fd = density_from_quantile(dirac, 32)
    assert np.count_nonzero(fd.values) == 1
    h = density_from_quantile(smooth_preset.quantile_field(uniform8, 50), 64)
    assert np.allclose(h.marginal(), uniform8.values, rtol=1e-13)


def test_round_trip_error_is_first_order_in_m_eta(single_fiber):
    p = Preset("raised-cosine", np.pi, 1.5)
    exact = p.grid_density(single_fiber, 64)
    errs = [np.sum(np.abs(density_from_quantile(p.quantile_field(single_fiber, m), 64).values - exact.values))
            for m in (64 * 64, 128 * 64, 256 * 64)]
    assert errs[0] > errs[1] > errs[2]


def test_translation_commutes_with_the_flow(uniform8, smooth_preset):
    q = smooth_preset.quantile_field(uniform8, 20)
    params = KineticParams(2.0, 1e-3, 0.5)
    a = evolve(translate(q, 0.3), params, 10**9).final
    b = translate(evolve(q, params, 10**9).final, 0.3)
    assert np.max(np.abs(a.phi - b.phi)) <= 1e-12


def test_resample_is_monotone_and_exact_on_nodes(uniform8, smooth_preset):
    q = smooth_preset.quantile_field(uniform8, 32)
    same = resample(q, q.fractions)
    assert np.array_equal(same.phi, q.phi)
    fine = resample(q, midpoint_fractions(100))
    assert fine.is_monotone()


def test_two_atom_field_is_trapped(two_atoms):
    q0 = Preset("uniform", np.pi, 0.5, -1.0).quantile_field(two_atoms, 100)
    d0 = field_diameter(q0)
    d_inf, t0 = trapping_estimates(d0, two_atoms.diameter, 2.0)
    traj = evolve(q0, KineticParams(2.0, 1e-3, 10.0), sample_every=10)
    d = np.array([field_diameter(f) for f in traj.fields])
    assert d.max() <= d0 + 1e-12
    assert np.all(d[traj.times >= t0] <= d_inf + 1e-3)
