from __future__ import annotations

import math

import numpy as np
import pytest

from src.attractor import (
    TangentBundle,
    VolumeTrace,
    absorbing_ball_experiment,
    dimension_estimate,
    fit_exponent,
    gronwall_radius,
    initial_bundle,
    linearized_step,
    lipschitz_estimate,
    orthonormalize,
    trace_AQN,
    volume_decay_run,
    volume_frame,
)
from src.domain import SpectralField
from src.errors import DegenerateBundleError
from src.ineqlab.base import make_test_field
from src.sqg import SQGConfig, SQGIntegrator, SQGState, run


@pytest.fixture
def free_cfg(sp8):
    return SQGConfig(sp8, alpha=1.5, dt=1e-3, t_end=0.02)


def test_eigen_bundle_is_orthonormal_in_energy_norm(sp8):
    bundle = initial_bundle(sp8, 4)
    np.testing.assert_allclose(bundle.gram(), np.eye(4), atol=1e-14)
    random = initial_bundle(sp8, 5, kind="random", seed=3)
    np.testing.assert_allclose(random.gram(), np.eye(5), atol=1e-12)
    with pytest.raises(ValueError):
        initial_bundle(sp8, 2, kind="lyapunov")


def test_orthonormalize_logs_and_degeneracy(sp8):
    base = initial_bundle(sp8, 3)
    scaled = base.with_coeffs(base.coeffs * np.array([2.0, 0.5, 1.0])[:, None, None])
    bundle, logs = orthonormalize(scaled)
    np.testing.assert_allclose(logs, np.log([2.0, 0.5, 1.0]), atol=1e-14)
    np.testing.assert_allclose(bundle.gram(), np.eye(3), atol=1e-14)
    twin = np.stack([base.coeffs[0], base.coeffs[0]])
    with pytest.raises(DegenerateBundleError) as info:
        orthonormalize(TangentBundle(sp8, twin))
    assert info.value.index == 1


def test_zero_base_trace_and_rate(free_cfg, sp8):
    mu = free_cfg.mu
    modes = sp8.lowest_modes(4)
    expected = np.cumsum([mu[j - 1, k - 1] for j, k in modes])
    traces = volume_decay_run(free_cfg, SpectralField.zeros(sp8), [1, 2, 4], orth_every=5)
    assert [t.n for t in traces] == [1, 2, 4]
    for trace, target in zip(traces, expected[[0, 1, 3]]):
        assert list(trace.times) == pytest.approx([0.0, 0.005, 0.01, 0.015, 0.02])
        np.testing.assert_allclose(trace.trace, target, rtol=1e-12)
        assert trace.rate == pytest.approx(-target, rel=1e-8)
        assert trace.mean_trace == pytest.approx(target, rel=1e-12)
        assert trace.consistency < 1e-8
    report = dimension_estimate(traces, free_cfg.alpha)
    assert report.n0 == 1 and report.n0_rate == 1 and report.consistent
    frame = volume_frame(traces, amplitude=0.0)
    assert len(frame) == 15 and set(frame["n"]) == {1, 2, 4}


def test_trace_of_orthonormal_eigen_bundle(free_cfg, sp8):
    bundle = initial_bundle(sp8, 2)
    value = trace_AQN(bundle, SpectralField.zeros(sp8), free_cfg)
    assert value == pytest.approx(free_cfg.mu[0, 0] + free_cfg.mu[0, 1], rel=1e-12)
    with pytest.raises(ValueError):
        trace_AQN(bundle.with_coeffs(bundle.coeffs * 2.0), SpectralField.zeros(sp8), free_cfg)


def test_linearized_step_is_derivative_of_step(sp8):
    forcing = SpectralField.mode(sp8, 1, 1, amplitude=5.0)
    cfg = SQGConfig(sp8, alpha=1.5, dt=1e-3, t_end=0.01, forcing=forcing)
    q = cfg.prepare_initial(make_test_field(sp8, "random-band-limited", seed=2, band=4).field * 3.0)
    xi = cfg.prepare_initial(make_test_field(sp8, "random-band-limited", seed=5, band=4).field)
    integrator = SQGIntegrator(cfg)
    h = 1e-6
    plus = integrator.step(SQGState(0.0, q + xi * h)).q
    minus = integrator.step(SQGState(0.0, q - xi * h)).q
    fd = (plus - minus).coeffs / (2 * h)
    lin = linearized_step(xi, SQGState(0.0, q), cfg, integrator).coeffs
    np.testing.assert_allclose(lin, fd, rtol=1e-6, atol=1e-8 * np.max(np.abs(lin)))


def test_dimension_estimate_from_synthetic_traces():
    times = np.linspace(0.0, 1.0, 11)

    def trace(n, mean):
        return VolumeTrace(n, times, -mean * times, np.full(11, mean), -mean)

    report = dimension_estimate([trace(1, -3.0), trace(2, -1.0), trace(4, 2.0), trace(8, 9.0)], alpha=1.5)
    assert report.n0 == 4 and report.n0_rate == 4
    assert report.margin == pytest.approx(2.0)
    assert report.exponent == pytest.approx(math.log(4.5) / math.log(2.0))
    none = dimension_estimate([trace(1, -3.0), trace(2, -1.0)], alpha=1.5)
    assert none.exceeds and none.to_dict()["status"] == "dimension exceeds N_max"


def test_fit_exponent_power_law():
    n = np.array([2, 4, 8, 16])
    assert fit_exponent(n, -3.0 * n ** 1.75) == pytest.approx(1.75)
    assert math.isnan(fit_exponent([4], [1.0]))


def test_gronwall_radius_constant_signal():
    t = np.linspace(0.0, 3.0, 31)
    out = gronwall_radius(t, np.ones_like(t))
    assert out["sup"] == 1.0
    assert out["window_integral"] == pytest.approx(1.0)


def test_lipschitz_identical_data_uses_tangent_flow(sp8):
    cfg = SQGConfig(sp8, alpha=1.5, dt=1e-3, t_end=0.02)
    q = SpectralField.mode(sp8, 1, 1, amplitude=2.0)
    report = lipschitz_estimate(q, q, cfg)
    assert report.via_tangent
    assert report.ratio == pytest.approx(math.exp(-2.0 * cfg.mu[0, 0] * 0.02), rel=1e-10)
    assert report.within_bound


def test_lipschitz_distinct_data(sp8):
    forcing = SpectralField.mode(sp8, 1, 1, amplitude=5.0)
    cfg = SQGConfig(sp8, alpha=1.5, dt=1e-3, t_end=0.02, forcing=forcing)
    q1 = make_test_field(sp8, "random-band-limited", seed=0, band=4).field
    q2 = q1 + SpectralField.mode(sp8, 2, 1, amplitude=0.01)
    report = lipschitz_estimate(q1, q2, cfg)
    assert not report.via_tangent
    assert 0 < report.ratio <= report.bound


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [1.25, 1.75])
def test_forced_volume_decay_on_attractor(sp16, alpha):
    forcing = SpectralField.mode(sp16, 1, 1, amplitude=10.0) + SpectralField.mode(sp16, 2, 1, amplitude=5.0)
    cfg = SQGConfig(sp16, alpha=alpha, dt=1e-3, t_end=0.5, forcing=forcing)
    q0 = make_test_field(sp16, "random-band-limited", seed=7, band=4).field
    start = run(cfg, q0, sample_every=cfg.n_steps).state.q
    window = SQGConfig(sp16, alpha=alpha, dt=1e-3, t_end=0.2, forcing=forcing)
    traces = volume_decay_run(window, start, [1, 2, 4, 8, 16, 32], orth_every=10)
    report = dimension_estimate(traces, alpha)
    assert report.n0_rate is not None and report.n0_rate <= 32
    assert all(report.rates[n] < 0 for n in report.rates if n >= report.n0_rate)
    assert report.n0 is not None and report.consistent
    assert report.exponent_ok
    assert max(t.consistency for t in traces) <= 0.01


@pytest.mark.slow
def test_absorbing_ball_tail_agrees(sp8):
    forcing = SpectralField.mode(sp8, 1, 1, amplitude=10.0)
    cfg = SQGConfig(sp8, alpha=1.5, dt=5e-4, t_end=1.0, forcing=forcing)
    q0 = make_test_field(sp8, "random-band-limited", seed=1, band=4).field * 0.1
    report = absorbing_ball_experiment(cfg, [q0, q0 * 10.0, q0 * 100.0], 1.1, sample_every=20)
    assert report.initial_norms[1] == pytest.approx(10.0 * report.initial_norms[0])
    assert report.initial_norms[2] == pytest.approx(100.0 * report.initial_norms[0])
    assert all(np.isfinite(report.entry_times))
    assert np.all(np.diff(report.entry_times) >= 0)
    assert report.entry_times[2] > report.entry_times[0]
    assert report.agrees
    with pytest.raises(ValueError):
        absorbing_ball_experiment(cfg, [q0], 1.5)
