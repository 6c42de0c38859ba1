import numpy as np
import pytest

from asyncsa import (
    AgentSchedule,
    AllActive,
    BernoulliActivation,
    ConfigError,
    ConstantSteps,
    HarmonicSteps,
    InsufficientActivationError,
    PowerSteps,
    RoundRobin,
    balance_ratio,
    effective_step,
    timeline,
)
from asyncsa.schedules import activation_from_config, step_policy_from_config


def test_harmonic_values_and_bounds():
    steps = HarmonicSteps(c=10.0)
    assert steps.a(0) == pytest.approx(0.1)
    assert steps.a(90) == pytest.approx(0.01)
    counts = np.array([0, 10, 990])
    assert steps.a_of(counts) == pytest.approx([0.1, 0.05, 0.001])
    with pytest.raises(ConfigError):
        HarmonicSteps(c=0.5)


def test_power_and_constant_validation():
    assert PowerSteps(p=0.6).a(0) == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        PowerSteps(p=0.0)
    with pytest.raises(ConfigError):
        PowerSteps(p=1.5)
    assert ConstantSteps(a0=0.5).a(10**6) == 0.5
    with pytest.raises(ConfigError):
        ConstantSteps(a0=1.5)


def test_square_summable_flags():
    assert HarmonicSteps(c=1.0).square_summable
    assert not PowerSteps(p=0.4).square_summable
    assert PowerSteps(p=0.6).square_summable
    assert not ConstantSteps(a0=0.1).square_summable
    for policy in (HarmonicSteps(), PowerSteps(p=0.7), ConstantSteps(a0=1.0)):
        assert policy.sum_diverges


def test_step_policy_config_round_trip_and_errors():
    for policy in (HarmonicSteps(c=3.0), PowerSteps(p=0.6, c=2.0),
                   ConstantSteps(a0=0.25)):
        assert step_policy_from_config(policy.to_config()) == policy
    with pytest.raises(ConfigError):
        step_policy_from_config({"kind": "nope"})
    with pytest.raises(ConfigError):
        step_policy_from_config({"kind": "harmonic", "c": 2.0, "junk": 1})


def test_activation_config_round_trip_and_errors():
    for policy in (AllActive(), RoundRobin(k=2),
                   BernoulliActivation(q=[0.5, 1.0])):
        rebuilt = activation_from_config(policy.to_config())
        assert type(rebuilt) is type(policy)
    assert isinstance(activation_from_config(None), AllActive)
    with pytest.raises(ConfigError):
        activation_from_config({"kind": "sometimes"})
    with pytest.raises(ConfigError):
        RoundRobin(k=0)
    with pytest.raises(ConfigError):
        BernoulliActivation(q=0.0)


def test_all_active_counters_track_tick():
    sched = AgentSchedule.create(AllActive(), 3, seed=0)
    for n in range(5):
        mask = sched.sampler.next(n)
        assert mask.all()
        sched.advance(mask)
    assert sched.counters.tolist() == [5, 5, 5]


def test_round_robin_cycles_in_index_order():
    sched = AgentSchedule.create(RoundRobin(k=2), 3, seed=0)
    masks = []
    for n in range(3):
        mask = sched.sampler.next(n)
        masks.append(np.flatnonzero(mask).tolist())
        sched.advance(mask)
    assert masks == [[0, 1], [0, 2], [1, 2]]
    assert sched.counters.tolist() == [2, 2, 2]


def test_bernoulli_respects_per_agent_rates():
    sched = AgentSchedule.create(BernoulliActivation(q=[0.5, 1.0]), 2, seed=0)
    for n in range(10_000):
        mask = sched.sampler.next(n)
        assert mask.any()
        sched.advance(mask)
    rates = sched.counters / 10_000
    assert rates[1] == 1.0
    assert rates[0] == pytest.approx(0.5, abs=0.02)


def test_effective_step_example():
    # counters (0, 10) under a(n) = 1/(n+11): largest step 1/11, the other
    # agent runs at fraction 11/21 of it
    abar, q = effective_step(0, np.array([True, True]), np.array([0, 10]),
                             HarmonicSteps(c=11.0))
    assert abar == pytest.approx(1 / 11)
    assert q == pytest.approx([1.0, 11 / 21])


def test_effective_step_masks_inactive_and_needs_one_active():
    abar, q = effective_step(0, np.array([False, True]), np.array([0, 0]),
                             HarmonicSteps(c=10.0))
    assert abar == pytest.approx(0.1)
    assert q.tolist() == [0.0, 1.0]
    with pytest.raises(ValueError):
        effective_step(0, np.array([False, False]), np.array([0, 0]),
                       HarmonicSteps())


def test_timeline_all_active_matches_harmonic_sum():
    sched = AgentSchedule.create(AllActive(), 2, seed=0)
    t = timeline(HarmonicSteps(c=10.0), sched, 1000)
    assert t.shape == (1001,)
    assert t[0] == 0.0
    assert np.all(np.diff(t) > 0)
    # sum_{n<1000} 1/(n+10), computed once with exact rationals
    assert t[1000] == pytest.approx(4.665457889572304, abs=1e-12)
    # the caller's schedule is untouched
    assert sched.counters.tolist() == [0, 0]


def test_timeline_round_robin_uses_active_agent_counter():
    sched = AgentSchedule.create(RoundRobin(k=1), 2, seed=0)
    t = timeline(HarmonicSteps(c=10.0), sched, 4)
    # ticks 0,1 both run a fresh agent at a(0); ticks 2,3 at a(1)
    assert t == pytest.approx([0.0, 0.1, 0.2, 0.2 + 1 / 11, 0.2 + 2 / 11])


def _counters_trace(policy, d, ticks, seed=0):
    sched = AgentSchedule.create(policy, d, seed)
    rows = np.zeros((ticks, d), dtype=np.int64)
    for n in range(ticks):
        rows[n] = sched.counters
        sched.advance(sched.sampler.next(n))
    return rows


def test_balance_ratio_self_is_exactly_one():
    trace = _counters_trace(RoundRobin(k=1), 2, 10)
    for n in range(10):
        assert balance_ratio(trace, HarmonicSteps(c=10.0), 0, 0, n) == 1.0


def test_balance_ratio_round_robin_tends_to_one():
    # the ratio approaches 1 only at 1/log(n) speed, so the window is loose
    trace = _counters_trace(RoundRobin(k=1), 2, 20_000)
    ratio = balance_ratio(trace, HarmonicSteps(c=10.0), 0, 1, 19_999)
    assert ratio == pytest.approx(1.0, abs=0.02)
    shorter = balance_ratio(trace, HarmonicSteps(c=10.0), 0, 1, 199)
    assert abs(ratio - 1.0) < abs(shorter - 1.0)


def test_balance_ratio_requires_activation():
    trace = _counters_trace(RoundRobin(k=1), 3, 2)
    # agent 2 has not run within the first two ticks
    with pytest.raises(InsufficientActivationError):
        balance_ratio(trace, HarmonicSteps(), 0, 2, 1)


def test_balance_ratio_bernoulli_stays_near_one():
    hits = 0
    for seed in range(20):
        tr = _counters_trace(BernoulliActivation(q=0.5), 2, 20_000, seed=seed)
        r = balance_ratio(tr, HarmonicSteps(c=10.0), 0, 1, 19_999)
        hits += 0.9 <= r <= 1.1
    assert hits >= 18
