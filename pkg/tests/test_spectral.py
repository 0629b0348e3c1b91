import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as spi

from pdk.errors import CoverageError, GridError, WindowLeakageError
from pdk.spectral import (
    FrequencyGrid,
    SpectralFunction,
    TemporalFunction,
    TimeGrid,
    cumulative_integral,
    derivative,
    dispersion_metric,
    fourier_pair,
    group_delay,
    integrate,
    integrate_abs,
    inverse_fourier,
    spectral_bandwidth,
    unitarity_defect,
    unwrap_phase,
)


def lorentz_t(w, gamma=1.0, Gamma=1.0, w0=0.0):
    return np.sqrt(gamma * Gamma) / ((gamma + Gamma) / 2 - 1j * (w - w0))


# ---------------------------------------------------------------- grids


def test_grid_rejects_bad_points():
    with pytest.raises(GridError):
        FrequencyGrid(np.array([0.0]))
    with pytest.raises(GridError):
        FrequencyGrid(np.array([0.0, 1.0, 1.0]))
    with pytest.raises(GridError):
        FrequencyGrid(np.array([0.0, np.nan]))


def test_step_only_on_uniform_grid():
    assert FrequencyGrid.uniform(0, 1, 11).step == pytest.approx(0.1)
    with pytest.raises(GridError):
        FrequencyGrid(np.array([0.0, 1.0, 3.0])).step


def test_sampled_values_must_match_grid():
    g = FrequencyGrid.uniform(0, 1, 5)
    with pytest.raises(GridError):
        SpectralFunction(g, np.zeros(4))
    with pytest.raises(GridError):
        SpectralFunction(g, np.array([0, 1, np.inf, 0, 0.0]))


@pytest.mark.parametrize("tail", [1e-8, 1e-10, 1e-12])
def test_adapted_grid_keeps_every_point(tail):
    g = FrequencyGrid.resonance_adapted([-2.0, 3.0], [0.5, 1.0], 2001, tail=tail)
    assert len(g) == 2001
    assert np.all(np.diff(g.points) > 0)


def test_adapted_grid_symmetric_for_symmetric_lines():
    g = FrequencyGrid.resonance_adapted([-1.0, 1.0], [0.3, 0.3], 1001, tail=1e-10)
    assert np.allclose(g.points, -g.points[::-1], rtol=1e-9, atol=1e-9)


def test_adapted_grid_integrates_lorentzian():
    # int |T|^2 = pi (gamma + Gamma)/2 * 4 gamma Gamma / (gamma + Gamma)^2
    g = FrequencyGrid.resonance_adapted([0.0], [1.0], 4001, tail=1e-12)
    val = integrate(g.points, np.abs(lorentz_t(g.points)) ** 2)
    assert val == pytest.approx(np.pi, rel=1e-9)


# ---------------------------------------------------------------- quadrature


def test_integrate_matches_quad_on_nonuniform_grid():
    s = np.linspace(-1, 1, 801)
    x = 3 * s + s**3
    f = lambda t: np.exp(-t * t) * np.cos(2 * t)  # noqa: E731
    ref = spi.quad(f, x[0], x[-1], epsabs=1e-14)[0]
    assert integrate(x, f(x)) == pytest.approx(ref, abs=1e-9)


def test_integrate_uniform_grid_is_high_order():
    x = np.linspace(0, np.pi, 101)
    assert integrate(x, np.sin(x)) == pytest.approx(2.0, abs=1e-11)


def test_integrate_even_point_count():
    s = np.linspace(0, 1, 40)
    x = s + 0.3 * s * s
    ref = x[-1] ** 5 / 5
    assert integrate(x, x**4) == pytest.approx(ref, rel=1e-5)
    assert integrate(x[:-1], x[:-1] ** 4) == pytest.approx(x[-2] ** 5 / 5, rel=1e-5)


def test_integrate_abs_handles_sign_changes():
    x = np.linspace(0, 2 * np.pi, 2001)
    assert integrate_abs(x, np.sin(x)) == pytest.approx(4.0, abs=1e-6)
    assert integrate_abs(x, -np.sin(3 * x)) == pytest.approx(4.0, abs=1e-5)


def test_cumulative_integral_forward_and_reverse():
    x = np.linspace(0, 2, 401)
    fwd = cumulative_integral(x, np.cos(x))
    rev = cumulative_integral(x, np.cos(x), reverse=True)
    assert np.allclose(fwd, np.sin(x), atol=1e-12)
    assert np.allclose(rev, np.sin(2) - np.sin(x), atol=1e-12)


@given(
    a=st.floats(-3, 3),
    b=st.floats(-3, 3),
    n=st.integers(7, 200),
    warp=st.floats(0.0, 0.9),
)
def test_integrate_is_linear(a, b, n, warp):
    s = np.linspace(-1, 1, n)
    x = s + warp * s**3 / 3
    y1, y2 = np.exp(x), np.cos(5 * x)
    lhs = integrate(x, a * y1 + b * y2)
    rhs = a * integrate(x, y1) + b * integrate(x, y2)
    assert lhs == pytest.approx(rhs, abs=1e-12)


# ---------------------------------------------------------------- derivative


def test_derivative_is_fourth_order():
    errs = []
    for n in (101, 201):
        s = np.linspace(0, 1, n)
        x = s + 0.3 * s * s
        errs.append(np.max(np.abs(derivative(x, np.sin(x))[2:-2] - np.cos(x[2:-2]))))
    assert errs[0] / errs[1] > 12


# ---------------------------------------------------------------- Fourier pair


def gaussian_packet(sigma=1.0, t0=0.0, n=2048, span=40.0):
    t = np.linspace(-span / 2, span / 2, n, endpoint=False)
    f = np.exp(-((t - t0) ** 2) / (4 * sigma**2)) / (2 * np.pi * sigma**2) ** 0.25
    return TemporalFunction(TimeGrid(t), f)


def test_fourier_gaussian_closed_form():
    sigma, t0 = 1.3, 2.0
    F = fourier_pair(gaussian_packet(sigma, t0))
    w = F.x
    # e^{+i w t} convention: a delay t0 multiplies the spectrum by e^{+i w t0}
    ref = (2 * sigma**2 / np.pi) ** 0.25 * np.exp(-(sigma**2) * w**2) * np.exp(1j * w * t0)
    assert np.max(np.abs(F.values - ref)) < 1e-12


def test_fourier_round_trip():
    f = gaussian_packet(0.7, -1.0)
    back = inverse_fourier(fourier_pair(f, center=0.3), t_start=f.x[0])
    assert np.allclose(back.x, f.x)
    assert np.max(np.abs(back.values - f.values)) < 1e-11


@given(
    centers=st.lists(st.floats(-6, 6), min_size=1, max_size=4),
    widths=st.lists(st.floats(0.4, 2.0), min_size=4, max_size=4),
    phases=st.lists(st.floats(0, 6.3), min_size=4, max_size=4),
)
def test_fourier_preserves_norm(centers, widths, phases):
    t = np.linspace(-30, 30, 4096, endpoint=False)
    f = sum(
        np.exp(-((t - c) ** 2) / (4 * s * s) + 1j * p) for c, s, p in zip(centers, widths, phases)
    )
    tf = TemporalFunction(TimeGrid(t), f)
    F = fourier_pair(tf)
    assert F.norm2() == pytest.approx(tf.norm2(), rel=1e-10)


def test_fourier_reports_leakage():
    t = np.linspace(-2, 2, 256, endpoint=False)
    with pytest.raises(WindowLeakageError):
        fourier_pair(TemporalFunction(TimeGrid(t), np.ones_like(t)))


def test_fourier_needs_uniform_grid():
    t = np.linspace(0, 1, 64) ** 2
    with pytest.raises(GridError):
        fourier_pair(TemporalFunction(TimeGrid(t), np.zeros_like(t)))


# ---------------------------------------------------------------- phase and delay


def test_unwrap_phase_removes_sign_flip_at_zero():
    w = np.linspace(-1, 1, 401)
    # real factor (w - 0.1) flips sign without adding phase
    T = SpectralFunction(FrequencyGrid(w), (w - 0.1 + 1e-3) * np.exp(1j * 3 * w))
    up = unwrap_phase(T, floor=1e-12)
    assert up.crossings.sum() == 1
    slope = np.diff(up.phase[up.defined]) / np.diff(w[up.defined])
    assert np.allclose(slope, 3.0, atol=1e-9)


def test_group_delay_lorentzian_sign_and_value():
    g = FrequencyGrid.resonance_adapted([0.0], [1.0], 4001)
    gamma, Gamma = 0.6, 1.4
    T = SpectralFunction(g, lorentz_t(g.points, gamma, Gamma))
    tau = group_delay(T)
    h = (gamma + Gamma) / 2
    ref = h / (h * h + g.points**2)
    ok = tau.defined
    assert np.all(tau.values[ok] > 0)
    assert np.max(np.abs(tau.values[ok] - ref[ok])) < 1e-7 * ref.max()
    core = ok & (np.abs(g.points) < 50)
    assert np.max(np.abs(tau.values[core] - ref[core]) / ref[core]) < 1e-6


def test_group_delay_undefined_below_floor():
    w = np.linspace(-1, 1, 201)
    T = SpectralFunction(FrequencyGrid(w), w * np.exp(1j * w))
    tau = group_delay(T, floor=1e-3)
    assert not tau.defined[100]
    assert np.isnan(tau.values[100])


def test_dispersion_metric_lorentzian():
    g = FrequencyGrid.resonance_adapted([0.0], [1.0], 8001, tail=1e-10)
    gamma, Gamma = 1.0, 3.0
    T = SpectralFunction(g, lorentz_t(g.points, gamma, Gamma))
    ref = 8 * gamma * Gamma / (gamma + Gamma) ** 3
    assert dispersion_metric(T) == pytest.approx(ref, rel=1e-6)


# ---------------------------------------------------------------- bandwidth and unitarity


def test_bandwidth_lorentzian():
    g = FrequencyGrid.resonance_adapted([0.0], [1.0], 4001, tail=1e-10)
    gamma, Gamma = 0.5, 2.0
    T = SpectralFunction(g, lorentz_t(g.points, gamma, Gamma))
    assert spectral_bandwidth(T) == pytest.approx(2 * gamma * Gamma / (gamma + Gamma), rel=1e-7)


def test_bandwidth_reports_poor_coverage():
    w = np.linspace(-3, 3, 601)
    with pytest.raises(CoverageError):
        spectral_bandwidth(SpectralFunction(FrequencyGrid(w), lorentz_t(w)))


def test_bandwidth_rejects_gain():
    w = np.linspace(-3, 3, 11)
    with pytest.raises(GridError):
        spectral_bandwidth(SpectralFunction(FrequencyGrid(w), 2 * np.ones(11)))


def test_unitarity_defect():
    w = np.linspace(-3, 3, 101)
    g = FrequencyGrid(w)
    t = lorentz_t(w)
    r = 1 - t
    assert unitarity_defect(SpectralFunction(g, t), SpectralFunction(g, r)) < 1e-15
    assert unitarity_defect(SpectralFunction(g, t), SpectralFunction(g, 0 * r)) > 0.5


def test_resample_zero_outside_support():
    f = SpectralFunction(FrequencyGrid.uniform(0, 1, 11), np.ones(11))
    out = f.resample(FrequencyGrid.uniform(-1, 2, 31))
    assert out.values[0] == 0 and out.values[-1] == 0 and out.values[15] == 1
