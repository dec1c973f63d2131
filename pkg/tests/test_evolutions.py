import math

import numpy as np
import pytest

from cvbackflow.channels import apply, embed_local, intermediate_map, is_cptp
from cvbackflow.errors import DegenerateEvolutionError, DomainError, InvariantError, UnsupportedFormError
from cvbackflow.evolutions import (Evolution, central_difference, channel_at, classical_noise,
                                   entanglement_backflow_predicate_2mode, is_markovian_at, lossy, nm_intervals,
                                   nm_mask, noise_profile_oscillating, noise_profile_rational,
                                   noise_profile_rational_scaled, sample_intervals, steering_backflow_predicate)
from cvbackflow.symplectic import Bipartition, ghz_w_state, two_mode_squeezed
from cvbackflow.witnesses import entanglement_ppt, steerability


def wobbly_lossy():
    """Damped map whose noise oscillates: tau = e^{-0.3t}, eta = (1 - e^{-0.6t})(1 + 0.8 sin 3t)."""

    def eta(t):
        return (1 - math.exp(-0.6 * t)) * (1 + 0.8 * math.sin(3 * t))

    def eta_dot(t):
        return 0.6 * math.exp(-0.6 * t) * (1 + 0.8 * math.sin(3 * t)) + (1 - math.exp(-0.6 * t)) * 2.4 * math.cos(3 * t)

    return lossy(lambda t: math.exp(-0.3 * t), lambda t: -0.3 * math.exp(-0.3 * t), eta, eta_dot, name="wobbly")


GRID = np.linspace(0, 6, 301)


def test_rational_profile_anchors():
    ev = noise_profile_rational()
    assert ev.eta(0.0) == 0.0
    assert ev.eta(1.0) == 1.0
    assert ev.eta(2.0) == 2.0
    assert ev.eta(1e8) == pytest.approx(1.0, abs=1e-7)
    assert noise_profile_rational_scaled().eta(1.0) == 2.0


@pytest.mark.parametrize("ev", [noise_profile_rational(), noise_profile_rational_scaled(),
                                noise_profile_oscillating(2.0), wobbly_lossy()], ids=lambda e: e.name)
def test_analytic_derivatives_match_finite_differences(ev):
    for t in np.linspace(0.1, 5.0, 23):
        assert ev.eta_dot(t) == pytest.approx(central_difference(ev.eta, t), rel=1e-6, abs=1e-8)
        assert ev.tau_dot(t) == pytest.approx(central_difference(ev.tau, t), rel=1e-6, abs=1e-8)


def test_oscillating_profile_validation():
    with pytest.raises(DomainError):
        noise_profile_oscillating(-1.0)
    assert noise_profile_oscillating(0.0).eta(0.3) == 0.0


def test_evolution_invariants():
    with pytest.raises(InvariantError):
        lossy(lambda t: 0.9, lambda t: 0.0, lambda t: 0.0, lambda t: 0.0)
    with pytest.raises(InvariantError):
        classical_noise(lambda t: 0.1 + t, lambda t: 1.0)
    with pytest.raises(InvariantError):
        Evolution("custom")
    with pytest.raises(InvariantError):
        Evolution("quantum")
    ev = noise_profile_rational()
    assert ev.tau(3.0) == 1.0 and ev.tau_dot(3.0) == 0.0


def test_domain_checks():
    ev = lossy(lambda t: 1.0, lambda t: 0.0, lambda t: t, lambda t: 1.0, t_max=2.0)
    with pytest.raises(DomainError):
        is_markovian_at(ev, 2.5)
    with pytest.raises(DomainError):
        channel_at(ev, -0.1)


def test_channel_at_zero_is_identity():
    ch = channel_at(wobbly_lossy(), 0.0)
    np.testing.assert_array_equal(ch.T, np.eye(2))
    np.testing.assert_array_equal(ch.N, np.zeros((2, 2)))


def test_classical_noise_nm_iff_noise_decreases():
    ev = noise_profile_rational()
    for t in GRID:
        v = is_markovian_at(ev, float(t))
        assert v.lambda_plus == v.lambda_minus == pytest.approx(ev.eta_dot(t))
        assert v.markovian_at_t == (ev.eta_dot(t) >= -1e-9)
    assert nm_intervals(ev, GRID) == [(2.0 + 0.02, 6.0)]


@pytest.mark.parametrize("ev", [noise_profile_rational(), noise_profile_oscillating(0.8),
                                noise_profile_oscillating(30.0), wobbly_lossy()], ids=lambda e: e.name)
def test_general_criterion_equals_closed_form(ev):
    for t in GRID:
        a = is_markovian_at(ev, float(t))
        b = is_markovian_at(ev, float(t), method="general")
        assert b.lambda_plus == pytest.approx(a.lambda_plus, rel=1e-9, abs=1e-10)
        assert b.lambda_minus == pytest.approx(a.lambda_minus, rel=1e-9, abs=1e-10)
        assert a.markovian_at_t == b.markovian_at_t


def test_custom_evolution_uses_matrix_criterion():
    # phase-insensitive amplifier T = e^{t/2} I with minimal noise e^t - 1: Markovian throughout
    def matrices(t):
        g = math.exp(t / 2)
        return g * np.eye(2), 0.5 * g * np.eye(2), (g * g - 1) * np.eye(2), g * g * np.eye(2)

    ev = Evolution("custom", matrices=matrices)
    assert not ev.is_lossy_form
    assert all(is_markovian_at(ev, t).markovian_at_t for t in (0.0, 0.5, 2.0))
    with pytest.raises(UnsupportedFormError):
        steering_backflow_predicate(ev, 1.0, "two_mode")
    with pytest.raises(UnsupportedFormError):
        entanglement_backflow_predicate_2mode(ev, 1.0)


def test_nonpositive_tau_is_degenerate():
    ev = lossy(lambda t: 1 - t, lambda t: -1.0, lambda t: t, lambda t: 1.0)
    with pytest.raises(DegenerateEvolutionError):
        is_markovian_at(ev, 1.0)
    with pytest.raises(DegenerateEvolutionError):
        is_markovian_at(ev, 1.5, method="general")


def test_verdict_matches_cptp_of_short_intermediate_maps():
    # the infinitesimal criterion is the first-order CPTP test of the map from t to t + h
    ev, h = wobbly_lossy(), 1e-4
    checked = 0
    for t in GRID[1:-1]:
        v = is_markovian_at(ev, float(t))
        margin = min(v.lambda_plus, v.lambda_minus)
        if abs(margin) < 1e-2:
            continue
        bridge = intermediate_map(channel_at(ev, t + h), channel_at(ev, t))
        assert is_cptp(bridge) is v.markovian_at_t
        checked += 1
    assert checked > 200


def _rising(f, t, h=1e-5):
    return f(t + h) > f(t - h)


@pytest.mark.parametrize("ev", [noise_profile_rational(), noise_profile_oscillating(2.0), wobbly_lossy()],
                         ids=lambda e: e.name)
def test_steering_predicates_match_numerical_witness(ev):
    for t in np.linspace(0.05, 5.95, 119):
        for setup, make, part in (("two_mode", two_mode_squeezed, Bipartition(1, 1)),
                                  ("three_mode", ghz_w_state, Bipartition(2, 1))):
            s0 = make(1.0)
            if setup == "two_mode" and abs(ev.eta(t) - ev.tau(t) ** 2) < 1e-3:
                continue  # kink of max(0, .) at the GIB boundary

            def g(x):
                return steerability(apply(embed_local(channel_at(ev, x), s0.modes), s0), part)

            if abs(g(t + 1e-5) - g(t - 1e-5)) < 1e-9:
                # flat: either steering is zero or the noise is stationary
                assert not steering_backflow_predicate(ev, t, setup) or abs(ev.eta_dot(t)) < 1e-2
                continue
            assert steering_backflow_predicate(ev, t, setup) is _rising(g, t)


def test_entanglement_predicate_small_squeezing():
    ev = noise_profile_oscillating(2.0)
    s0 = two_mode_squeezed(0.05)
    for t in np.linspace(0.05, 2.95, 59):
        def e(x):
            return entanglement_ppt(apply(embed_local(channel_at(ev, x), 2), s0), Bipartition(1, 1))

        if abs(e(t + 1e-5) - e(t - 1e-5)) < 1e-12:
            continue
        assert entanglement_backflow_predicate_2mode(ev, t) is _rising(e, t)


def test_sample_intervals():
    t = [0.0, 1.0, 2.0, 3.0, 4.0]
    assert sample_intervals(t, [False, True, True, False, True]) == [(1.0, 3.0), (4.0, 4.0)]
    assert sample_intervals(t, [False] * 5) == []
    ev = noise_profile_oscillating(1.0)
    assert nm_mask(ev, [0.25, 0.75]).tolist() == [False, True]
