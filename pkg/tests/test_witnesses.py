import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cvbackflow.channels import GaussianChannel, apply, embed_local
from cvbackflow.errors import InsufficientDataError, InvariantError, UnsupportedPartitionError
from cvbackflow.symplectic import Bipartition, CovarianceMatrix, ghz_w_state, two_mode_squeezed
from cvbackflow.witnesses import (WitnessTrace, backflows_inside, detect_backflows, entanglement_ppt, mask_runs,
                                  overlaps, steerability)

from _gen import random_contractive_channel, random_cptp_channel, random_state

TWO = Bipartition(1, 1)
THREE = Bipartition(2, 1)
seeds = st.integers(0, 2**32 - 1)


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_two_mode_squeezed_witness_values(r):
    # nu_- = 1/cosh 2r for steering; the partial transpose has symplectic eigenvalue e^{-2r}
    s = two_mode_squeezed(r)
    assert steerability(s, TWO) == pytest.approx(math.log(math.cosh(2 * r)), rel=1e-12)
    assert steerability(s, TWO, "B->A") == pytest.approx(steerability(s, TWO), rel=1e-12)
    assert entanglement_ppt(s, TWO) == pytest.approx(1 - math.exp(-2 * r), rel=1e-12)


def test_product_states_carry_no_correlations():
    s = CovarianceMatrix(np.diag([2.0, 2.0, 3.0, 3.0]))
    assert steerability(s, TWO) == 0.0
    assert entanglement_ppt(s, TWO) == 0.0
    assert steerability(two_mode_squeezed(0), TWO) == pytest.approx(0.0, abs=1e-15)


def test_steering_vanishes_under_gib_noise():
    out = apply(embed_local(GaussianChannel.isotropic(1.0, 1.0), 2), two_mode_squeezed(2.0))
    assert steerability(out, TWO) == pytest.approx(0.0, abs=1e-12)
    three = apply(embed_local(GaussianChannel.isotropic(1.0, 1.0), 3), ghz_w_state(2.0))
    assert steerability(three, THREE) > 0.5


def test_steering_direction_argument():
    with pytest.raises(ValueError):
        steerability(two_mode_squeezed(1.0), TWO, "A<-B")


def test_ppt_needs_a_single_mode_party():
    s = CovarianceMatrix(np.eye(8))
    with pytest.raises(UnsupportedPartitionError):
        entanglement_ppt(s, Bipartition(2, 2))
    with pytest.raises(UnsupportedPartitionError):
        entanglement_ppt(two_mode_squeezed(1.0), THREE)


@settings(max_examples=150, deadline=None)
@given(seed=seeds, modes=st.integers(2, 3))
def test_steering_monotone_under_local_cptp_channels(seed, modes):
    rng = np.random.default_rng(seed)
    part = Bipartition(modes - 1, 1)
    s = random_state(rng, modes)
    out = apply(embed_local(random_cptp_channel(rng), modes), s)
    assert steerability(out, part) <= steerability(s, part) + 1e-9


@settings(max_examples=150, deadline=None)
@given(seed=seeds, modes=st.integers(2, 3))
def test_ppt_entanglement_monotone_under_contractive_channels(seed, modes):
    rng = np.random.default_rng(seed)
    part = Bipartition(modes - 1, 1)
    s = random_state(rng, modes)
    out = apply(embed_local(random_contractive_channel(rng), modes), s)
    assert entanglement_ppt(out, part) <= entanglement_ppt(s, part) + 1e-9


def test_ppt_entanglement_is_not_invariant_under_local_squeezing():
    # a local squeezer followed by its inverse is the identity, yet the quantifier moves
    s = two_mode_squeezed(1.0)
    squeeze = GaussianChannel(np.diag([2.0, 0.5, 1.0, 1.0]), np.zeros((4, 4)))
    unsqueeze = GaussianChannel(np.diag([0.5, 2.0, 1.0, 1.0]), np.zeros((4, 4)))
    e0 = entanglement_ppt(s, TWO)
    e1 = entanglement_ppt(apply(squeeze, s), TWO)
    e2 = entanglement_ppt(apply(unsqueeze, apply(squeeze, s)), TWO)
    assert e1 < e0 - 0.1
    assert e2 == pytest.approx(e0, abs=1e-12)
    # steering is built from symplectic invariants and does not move
    assert steerability(apply(squeeze, s), TWO) == pytest.approx(steerability(s, TWO), abs=1e-12)


def trace(values, times=None):
    times = np.arange(len(values), dtype=float) if times is None else times
    return WitnessTrace(tuple(times), tuple(values))


def test_trace_invariants():
    with pytest.raises(InvariantError):
        WitnessTrace((0.0, 1.0), (1.0,))
    with pytest.raises(InvariantError):
        WitnessTrace((0.0, 0.0), (1.0, 1.0))
    with pytest.raises(InvariantError):
        WitnessTrace((0.0, 1.0), (1.0, -1.0))
    with pytest.raises(InvariantError):
        WitnessTrace((0.0, 1.0), (1.0, math.nan))


def test_monotone_trace_has_no_backflow():
    rep = detect_backflows(trace([3.0, 2.0, 2.0, 1.0, 0.0]))
    assert not rep.has_backflow and rep.max_rise == 0.0


def test_single_bump():
    rep = detect_backflows(trace([3.0, 2.0, 2.5, 2.7, 1.0, 0.5]))
    assert rep.intervals == ((1.0, 3.0),)
    assert rep.index_ranges == ((1, 3),)
    assert rep.max_rise == pytest.approx(0.5)


def test_rises_below_threshold_are_ignored():
    v = [1.0, 1.0 + 1e-12, 1.0, 1.5]
    rep = detect_backflows(trace(v))
    assert rep.intervals == ((2.0, 3.0),)
    assert rep.tolerance == pytest.approx(1.5e-9)


def test_short_trace():
    with pytest.raises(InsufficientDataError):
        detect_backflows(trace([1.0]))


def test_mask_runs_and_overlaps():
    assert mask_runs([]) == []
    assert mask_runs([True, True, False, True]) == [(0, 2), (3, 4)]
    assert overlaps((0, 1), (0.5, 2))
    assert not overlaps((0, 1), (1, 2))
    rep = detect_backflows(trace([1.0, 2.0, 1.0, 0.5, 1.0]))
    assert backflows_inside(rep, [(0.5, 0.8), (1.5, 2.5), (3.5, 4.0)]) == [True, False, True]
