import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_hybrid_manifolds, random_network
from pdk.errors import InfeasibleError, ParameterError, SingularNetworkError, SpecError
from pdk.network import (
    Coupling,
    DiscreteState,
    NetworkSpec,
    Topology,
    design_two_state_series,
    find_perfect_transmission,
    parallel_spec,
    series_spec,
    simple_spec,
    transfer_closed_form,
    transfer_direct,
    transfer_hybrid_homogeneous,
    transfer_hybrid_unbalanced,
    transfer_parallel_homogeneous,
    transfer_series,
    transfer_simple,
    hybrid_homogeneous_spec,
)
from pdk.recurrence import wallis_euler
from pdk.spectral import FrequencyGrid, dispersion_metric, group_delay, spectral_bandwidth

SEEDS = st.integers(0, 2**32 - 1)


# ---------------------------------------------------------------- simple model


@pytest.mark.parametrize("gamma,Gamma", [(1.0, 1.0), (0.3, 2.0), (2.0, 0.5)])
def test_simple_peak_transmission(gamma, Gamma):
    res = transfer_simple(gamma, Gamma, 0.7, np.array([0.7, 1.0]))
    assert abs(res.T.values[0]) ** 2 == pytest.approx(4 * gamma * Gamma / (gamma + Gamma) ** 2, abs=1e-14)


def test_simple_delay_and_dispersion():
    gamma, Gamma = 0.4, 1.1
    spec = simple_spec(gamma, Gamma, 1.5)
    g = spec.adapted_grid(8001, tail=1e-10)
    res = transfer_closed_form(spec, g)
    tau = group_delay(res.T)
    k = int(np.argmin(np.abs(g.points - 1.5)))
    d = g.points[k] - 1.5
    h = (gamma + Gamma) / 2
    assert tau.values[k] == pytest.approx(h / (h * h + d * d), rel=1e-8)
    assert dispersion_metric(res.T) == pytest.approx(8 * gamma * Gamma / (gamma + Gamma) ** 3, rel=1e-6)


def test_simple_rejects_bad_decays():
    with pytest.raises(ParameterError):
        transfer_simple(-1.0, 1.0, 0.0, np.zeros(1))


# ---------------------------------------------------------------- oracle equivalence


@pytest.mark.parametrize("kind", ["parallel", "series", "hybrid"])
@given(seed=SEEDS, n=st.integers(1, 6))
def test_closed_form_matches_direct(kind, seed, n):
    spec = random_network(np.random.default_rng(seed), kind, n)
    g = spec.adapted_grid(401)
    a = transfer_closed_form(spec, g)
    b = transfer_direct(spec, g)
    assert np.max(np.abs(a.R.values - b.R.values)) < 1e-9
    assert np.max(np.abs(np.abs(a.T.values) - np.abs(b.T.values))) < 1e-9
    assert a.flux_defect() < 1e-10
    assert b.flux_defect() < 1e-10


@given(seed=SEEDS, n=st.integers(1, 6))
def test_direct_scattering_matrix_is_unitary(seed, n):
    spec = random_network(np.random.default_rng(seed), "series", n)
    res = transfer_direct(spec, spec.adapted_grid(201))
    assert res.phase_relation_defect() < 1e-10


@given(seed=SEEDS, n=st.integers(2, 6))
def test_hybrid_closed_form_from_manifolds(seed, n):
    from pdk.network import hybrid_unbalanced_spec

    mans = random_hybrid_manifolds(np.random.default_rng(seed), n)
    spec = hybrid_unbalanced_spec(mans)
    g = spec.adapted_grid(301)
    a = transfer_hybrid_unbalanced(mans, g)
    b = transfer_direct(spec, g)
    assert np.max(np.abs(a.R.values - b.R.values)) < 1e-9


def test_homogeneous_forms_match_direct():
    g = FrequencyGrid.uniform(-6, 6, 801)
    om = [-2.0, 0.5, 3.0]
    a = transfer_parallel_homogeneous(om, 0.7, 0.7, g)
    b = transfer_direct(parallel_spec(DiscreteState(w, 0.7, 0.7) for w in om), g)
    assert np.max(np.abs(a.R.values - b.R.values)) < 1e-12
    mans = [[-1.0, 1.0], [0.0], [-0.5, 0.5, 2.0]]
    a = transfer_hybrid_homogeneous(mans, 0.8, 1.2, [0.9, 0.6], g)
    b = transfer_direct(hybrid_homogeneous_spec(mans, 0.8, 1.2, [0.9, 0.6]), g)
    assert np.max(np.abs(a.R.values - b.R.values)) < 1e-12


def test_side_channel_loss_balances_flux():
    spec = NetworkSpec(Topology.SIMPLE, (DiscreteState(0.0, 1.0, 1.0, 0.5),))
    res = transfer_direct(spec, np.linspace(-5, 5, 101))
    assert res.D is not None
    assert res.flux_defect() < 1e-13
    # on resonance |D|^2 = 4 mu gamma / (gamma + Gamma + mu)^2
    assert abs(res.D.values[50]) ** 2 == pytest.approx(4 * 0.5 / 2.5**2, rel=1e-12)
    with pytest.raises(SpecError):
        transfer_closed_form(spec, np.zeros(1))


def test_long_chain_far_tail_is_finite():
    n = 70
    res = transfer_series(np.zeros(n), 1.0, 1.0, np.full(n - 1, 5.0), np.array([-1e6, 1e6]))
    assert np.all(np.isfinite(res.T.values)) and np.all(np.isfinite(res.R.values))
    assert res.flux_defect() < 1e-10


# ---------------------------------------------------------------- recurrence


@given(
    m=st.integers(1, 8),
    seed=SEEDS,
)
def test_wallis_euler_matches_backward_evaluation(m, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=m) + 1j * rng.normal(size=m)
    b = rng.normal(size=m) + 1j * rng.normal(size=m) + 3.0
    # b_0 + a_0 / (b_1 + a_1 / (...)) read as A/B with A_{-1} = 1
    val = b[m - 1]
    for k in range(m - 2, -1, -1):
        val = b[k] + a[k + 1] / val
    ref = (val + a[0]) / val
    ratio, _ = wallis_euler(a, b)
    assert ratio == pytest.approx(ref, rel=1e-10)


def test_wallis_euler_shape_checks():
    with pytest.raises(ValueError):
        wallis_euler(np.ones(2), np.ones(3))
    with pytest.raises(ValueError):
        wallis_euler(np.ones(3), np.ones(3), np.ones(3))


# ---------------------------------------------------------------- parallel bandwidth and phase


def test_parallel_bandwidth_sum_rule_and_spacing_invariance():
    gam = np.array([0.5, 1.0, 1.5, 0.8])
    gout = 1.7 * gam
    ref = np.sum(2 * gam * gout / (gam + gout))
    vals = []
    for spacing in (3.0, 30.0):
        om = spacing * np.arange(4)
        spec = parallel_spec(DiscreteState(w, a, b) for w, a, b in zip(om, gam, gout))
        res = transfer_closed_form(spec, spec.adapted_grid(8001, tail=1e-10))
        vals.append(spectral_bandwidth(res.T))
    assert vals[0] == pytest.approx(ref, rel=1e-6)
    assert vals[1] == pytest.approx(vals[0], rel=1e-6)


def test_balanced_parallel_phase_per_resonance():
    om = [-4.0, -2.0, 0.0, 2.0, 4.0]
    spec = parallel_spec(DiscreteState(w, 1.0, 1.0) for w in om)
    res = transfer_closed_form(spec, spec.adapted_grid(8001, tail=1e-12))
    from pdk.spectral import unwrap_phase

    up = unwrap_phase(res.T)
    ph = up.phase[up.defined]
    assert ph[-1] - ph[0] == pytest.approx(5 * np.pi, abs=1e-3)


# ---------------------------------------------------------------- perfect transmission


def test_comb_has_one_peak_per_state():
    n, g = 12, 5.0
    spec = series_spec(np.zeros(n), 1.0, 1.0, np.full(n - 1, g))
    res = transfer_closed_form(spec, np.linspace(-2.2 * g, 2.2 * g, 20001))
    peaks = find_perfect_transmission(res, 1e-6)
    assert peaks.size == n
    assert np.all(np.abs(peaks) < 2 * g)


def test_two_state_design_reaches_unity():
    w1, w2, gamma, Gamma = -0.5, 0.8, 0.6, 1.9
    w_star, g = design_two_state_series(w1, w2, gamma, Gamma)
    res = transfer_series([w1, w2], gamma, Gamma, [g], np.array([w_star, w_star + 1]))
    assert abs(res.T.values[0]) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_two_state_design_special_cases():
    assert design_two_state_series(1.0, 1.0, 2.0, 2.0) == (1.0, pytest.approx(1.0))
    with pytest.raises(InfeasibleError):
        design_two_state_series(0.0, 1.0, 1.0, 1.0)
    with pytest.raises(ParameterError):
        design_two_state_series(0.0, 1.0, 0.0, 1.0)


@given(
    w1=st.floats(-5, 5), w2=st.floats(-5, 5), gamma=st.floats(0.05, 3), ratio=st.floats(1.05, 10)
)
def test_unbalanced_two_state_design_always_feasible(w1, w2, gamma, ratio):
    w_star, g = design_two_state_series(w1, w2, gamma, gamma * ratio)
    res = transfer_series([w1, w2], gamma, gamma * ratio, [g], np.array([w_star, w_star + 1]))
    assert abs(res.T.values[0]) ** 2 == pytest.approx(1.0, abs=1e-9)


def test_detuned_balanced_pair_has_no_perfect_transmission():
    res = transfer_series([-1.0, 1.0], 1.0, 1.0, [0.5], np.linspace(-5, 5, 2001))
    assert find_perfect_transmission(res, 1e-6).size == 0


# ---------------------------------------------------------------- validation and serialization


def test_degenerate_states():
    spec = parallel_spec([DiscreteState(0.0, 1.0, 1.0), DiscreteState(0.0, 1.0, 1.0)])
    with pytest.raises(SpecError):
        transfer_closed_form(spec, np.zeros(1))
    with pytest.raises(SingularNetworkError):
        transfer_direct(spec, np.linspace(-1, 1, 5))


@pytest.mark.parametrize(
    "build",
    [
        lambda: NetworkSpec(Topology.SIMPLE, (DiscreteState(0, 1, 1), DiscreteState(1, 1, 1))),
        lambda: NetworkSpec(Topology.PARALLEL, (DiscreteState(0, 1, 0),)),
        lambda: NetworkSpec(Topology.SERIES, (DiscreteState(0, 1, 0), DiscreteState(1, 0, 1))),
        lambda: NetworkSpec(Topology.HYBRID, (DiscreteState(0, 1, 1),)),
        lambda: NetworkSpec(Topology.GENERAL, (DiscreteState(0, 1, 1),), (Coupling(0, 3, 1.0),)),
        lambda: Coupling(1, 1, 1.0),
        lambda: DiscreteState(0.0, -1.0),
    ],
)
def test_invalid_specs_rejected(build):
    with pytest.raises(ParameterError):
        build()


@pytest.mark.parametrize("kind", ["parallel", "series", "hybrid"])
@given(seed=SEEDS, n=st.integers(1, 8))
def test_json_round_trip(kind, seed, n):
    spec = random_network(np.random.default_rng(seed), kind, n)
    assert NetworkSpec.from_json(spec.to_json()) == spec


def test_malformed_json_is_spec_error():
    with pytest.raises(SpecError):
        NetworkSpec.from_dict({"topology": "simple"})
    with pytest.raises(SpecError):
        NetworkSpec.from_dict({"topology": "nonsense", "states": []})
