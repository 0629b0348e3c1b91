import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdk.errors import GridError, InfeasibleWindowError, ParameterError
from pdk.spectral import TemporalFunction, TimeGrid, integrate
from pdk.wavepacket import (
    CouplingSchedule,
    TargetWavepacket,
    build_orthogonal_pulse,
    detection_probability,
    forward_amplitude,
    gaussian_kappa,
    gaussian_target,
    gaussian_weight,
    hermite_gaussian_1,
    inverse_design,
    polynomial_schedule,
    round_trip_error,
    trigger_spectrum,
)


def random_target(seed):
    """Smooth positive envelope with a chirped phase on [-8, 8]."""
    rng = np.random.default_rng(seed)
    t = np.linspace(-8, 8, 4097)
    k = int(rng.integers(1, 4))
    amp = sum(
        rng.uniform(0.3, 1.0) * np.exp(-((t - rng.uniform(-2, 2)) ** 2) / (4 * rng.uniform(0.4, 1.0) ** 2))
        for _ in range(k)
    )
    phase = rng.uniform(-2, 2) * t + rng.uniform(-0.3, 0.3) * t * t
    return TargetWavepacket.from_samples(t, amp, phase)


# ---------------------------------------------------------------- forward map


def test_constant_coupling_closed_form():
    kappa, T0, T = 0.8, -3.0, 2.0
    t = np.linspace(T0, T, 2001)
    amp = forward_amplitude(CouplingSchedule.from_samples(t, np.full_like(t, kappa), 0.0))
    ref = np.sqrt(kappa) * np.exp(-kappa * (T - t) / 2)
    assert np.max(np.abs(amp.psi.values - ref)) < 1e-12
    assert amp.weight == pytest.approx(1 - np.exp(-kappa * (T - T0)), abs=1e-14)
    assert amp.norm_defect < 1e-10


def test_detuning_sets_phase():
    t = np.linspace(-2, 0, 1001)
    amp = forward_amplitude(CouplingSchedule.from_samples(t, np.ones_like(t), 0.5))
    # Psi^* carries exp(-i int_t^T Delta)
    ph = np.angle(amp.psi_star().values)
    assert np.allclose(ph, -0.5 * (0 - t), atol=1e-12)


@given(n=st.integers(0, 4), two_sided=st.booleans(), kappa0=st.floats(0.05, 5.0))
def test_polynomial_weight_bounded(n, two_sided, kappa0):
    t = np.linspace(-4, 0, 801)
    amp = forward_amplitude(polynomial_schedule(t, kappa0, 1.0, n, two_sided=two_sided))
    assert 0.0 <= amp.weight <= 1.0
    assert amp.norm_defect < 1e-6


def test_schedule_validation():
    t = np.linspace(0, 1, 5)
    with pytest.raises(ParameterError):
        CouplingSchedule.from_samples(t, -np.ones(5), 0.0)
    with pytest.raises(GridError):
        CouplingSchedule(TemporalFunction(TimeGrid(t), np.ones(5)), TemporalFunction(TimeGrid(t + 1), np.ones(5)))


# ---------------------------------------------------------------- inverse design


@pytest.mark.parametrize("T_sigma", [2.0, 3.5, 7.0])
def test_gaussian_kappa_matches_closed_form(T_sigma):
    sigma = 1.0
    target = gaussian_target(sigma, n_sigma=10, points_per_sigma=256)
    sched = inverse_design(target, T_sigma * sigma)
    t = sched.grid.points
    ref = gaussian_kappa(t, sigma, 0.0, T_sigma * sigma)
    ok = ref > 1e-12
    assert np.max(np.abs(sched.kappa.values[ok] - ref[ok]) / ref[ok]) < 1e-8
    amp = forward_amplitude(sched)
    assert amp.weight == pytest.approx(gaussian_weight(sigma, 0.0, T_sigma * sigma), abs=1e-9)


def test_gaussian_detuning_equals_carrier():
    target = gaussian_target(1.0, omega0=2.5, points_per_sigma=64)
    sched = inverse_design(target, 3.0)
    assert np.allclose(sched.delta.values, 2.5, atol=1e-9)


@pytest.mark.filterwarnings("ignore:decay rate capped")
@pytest.mark.parametrize("seed", range(5))
def test_round_trip_random_targets(seed):
    target = random_target(seed)
    sched = inverse_design(target, float(target.t[-1]))
    assert round_trip_error(target, sched) < 1e-6


@pytest.mark.filterwarnings("ignore:decay rate capped")
@given(seed=st.integers(0, 2**32 - 1), cut=st.floats(0.3, 1.0))
def test_inverse_design_invariants(seed, cut):
    target = random_target(seed)
    t = target.t
    idx = int(cut * (t.size - 1))
    T = float(t[idx])
    inside = integrate(t[: idx + 1], target.amplitude.values[: idx + 1] ** 2)
    if inside <= 1e-12:
        # nothing of the packet arrives before T
        with pytest.raises(InfeasibleWindowError):
            inverse_design(target, T)
        return
    sched = inverse_design(target, T)
    assert len(sched.grid) == idx + 1
    assert np.all(sched.kappa.values >= 0)
    amp = forward_amplitude(sched)
    assert amp.weight == pytest.approx(inside, abs=1e-6)
    assert 0.0 <= amp.weight <= 1.0


def test_matched_state_detected_with_weight():
    target = gaussian_target(1.0, omega0=1.0, points_per_sigma=128)
    amp = forward_amplitude(inverse_design(target, 2.0))
    # the overlap of the truncated kernel with the full packet is W itself
    p = detection_probability(target.matched_state(), amp)
    assert p == pytest.approx(amp.weight**2, abs=1e-8)
    st = amp.state()
    assert detection_probability(st, amp) == pytest.approx(amp.weight, abs=1e-8)


def test_vanishing_denominator_is_capped_and_reported():
    t = np.linspace(-8, 8, 2049)
    target = TargetWavepacket.from_samples(t, np.exp(-(t**2) / 4), np.zeros_like(t))
    with pytest.warns(RuntimeWarning, match="decay rate capped"):
        sched = inverse_design(target, 8.0)
    assert sched.warnings
    assert np.all(np.isfinite(sched.kappa.values))


def test_infeasible_window():
    target = gaussian_target(1.0, points_per_sigma=32)
    with pytest.raises(InfeasibleWindowError, match="extends past T"):
        inverse_design(target, -9.0)
    with pytest.raises(InfeasibleWindowError):
        inverse_design(target, 100.0)
    with pytest.raises(GridError):
        inverse_design(target, 0.01)


def test_target_must_be_normalised():
    t = np.linspace(-1, 1, 11)
    g = TimeGrid(t)
    with pytest.raises(ParameterError):
        TargetWavepacket(TemporalFunction(g, np.ones(11)), TemporalFunction(g, np.zeros(11)))


def test_detection_requires_normalised_input():
    target = gaussian_target(1.0, points_per_sigma=32)
    amp = forward_amplitude(inverse_design(target, 3.0))
    with pytest.raises(ParameterError):
        detection_probability(target.matched_state().scaled(2.0), amp)


# ---------------------------------------------------------------- orthogonal pulse


def test_orthogonal_pulse_is_orthogonal_and_odd():
    pulse = build_orthogonal_pulse(1.0, 0.2, 0.1, n_sigma=10)
    g = gaussian_target(1.0, n_sigma=10)
    ov = integrate(pulse.t, np.conj(pulse.matched_state().values) * g.matched_state().values)
    assert abs(ov) < 1e-12
    a = pulse.amplitude.values
    assert np.allclose(a, a[::-1], atol=1e-15)
    sched = inverse_design(pulse, 7.0)
    assert forward_amplitude(sched).weight > 1 - 1e-8


def test_orthogonal_pulse_close_to_hermite_gaussian():
    pulse = build_orthogonal_pulse(1.0, 0.05, 0.05, n_sigma=10)
    hg = np.abs(hermite_gaussian_1(pulse.t, 1.0))
    ov = integrate(pulse.t, pulse.amplitude.values * hg)
    assert ov > 0.999


def test_orthogonal_pulse_parameters():
    with pytest.raises(ParameterError):
        build_orthogonal_pulse(1.0, 0.1, 0.2)
    with pytest.raises(ParameterError):
        build_orthogonal_pulse(1.0, 0.2, 0.1, order=2)


# ---------------------------------------------------------------- trigger spectrum


def test_trigger_spectrum_of_gaussian():
    sigma, w0 = 1.0, 0.7
    target = gaussian_target(sigma, omega0=w0, points_per_sigma=16)
    amp = forward_amplitude(inverse_design(target, 7.0))
    spec = trigger_spectrum(amp, center=w0)
    assert spec.norm2() == pytest.approx(1.0, abs=1e-9)
    # |spectrum|^2 is normal with centre omega0 and standard deviation 1 / (2 sigma)
    p = spec.abs2()
    ref = np.exp(-2 * sigma**2 * (spec.x - w0) ** 2) * np.sqrt(2 * sigma**2 / np.pi)
    assert np.max(np.abs(p - ref)) < 1e-6
