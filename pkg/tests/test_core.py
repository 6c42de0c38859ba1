from fractions import Fraction

import numpy as np
import pytest

from asyncsa import (
    AllActive,
    ComponentUniformErrors,
    ConfigError,
    ConstantSteps,
    DivergenceError,
    EuclideanNorm,
    FixedBiasErrors,
    HarmonicSteps,
    HistoryWindowError,
    IterateHistory,
    ProjectionRegion,
    ProjectionSpec,
    QuadraticObjective,
    RoundRobin,
    RunConfig,
    ScaledIdentityObjective,
    SimState,
    StaleRefreshDelays,
    UniformDelays,
    UniformNoise,
    build_runtime,
    run,
    run_light,
    sa_step_into,
)


def _cfg(**kw) -> RunConfig:
    base = dict(
        dimension=2,
        horizon=200,
        seed=5,
        objective=QuadraticObjective(matrices="random"),
        steps=HarmonicSteps(c=10.0),
    )
    base.update(kw)
    return RunConfig(**base)


# ---------------------------------------------------------------------------
# exact recursions


def test_linear_decay_matches_telescoping_product():
    # x_{n+1} = (1 - 1/(n+10)) x_n telescopes to x_N = (9 / (N+9)) x_0
    cfg = RunConfig(
        dimension=2,
        horizon=1000,
        seed=0,
        objective=ScaledIdentityObjective(gain=-1.0),
        steps=HarmonicSteps(c=10.0),
        x0=[1.0, 1.0],
    )
    result = run_light(cfg)
    prod = Fraction(1)
    for m in range(1000):
        prod *= 1 - Fraction(1, m + 10)
    assert prod == Fraction(9, 1009)
    expected = float(prod) * np.sqrt(2.0)
    assert abs(np.linalg.norm(result.final_x) - expected) < 1e-12


def test_first_activation_uses_count_zero_step():
    # with a zero field and a unit bias, x_1 = a(0) exactly; reading the
    # counter after advancing would give 1/11 instead of 1/10
    cfg = RunConfig(
        dimension=1,
        horizon=2,
        seed=0,
        objective=ScaledIdentityObjective(gain=0.0),
        steps=HarmonicSteps(c=10.0),
        errors=FixedBiasErrors(bias=[1.0]),
        x0=[0.0],
    )
    trace = run(cfg)
    assert trace.x[1, 0] == 0.1
    assert trace.x[2, 0] == 0.1 + 1 / 11
    assert trace.step[0, 0] == 0.1
    assert trace.step[1, 0] == 1 / 11


def test_counters_record_prior_activations():
    cfg = _cfg(horizon=3, activation=RoundRobin(k=1))
    trace = run(cfg)
    assert trace.counters.tolist() == [[0, 0], [1, 0], [1, 1], [2, 1]]
    assert trace.active[:3].tolist() == [[1, 0], [0, 1], [1, 0]]


def test_golden_endpoint_is_frozen():
    cfg = _cfg(
        delays=StaleRefreshDelays(p_c=0.4),
        errors=ComponentUniformErrors(bound=0.3),
    )
    trace = run(cfg)
    assert trace.final_x[0] == 0.04617775722866827
    assert trace.final_x[1] == 0.04301694412945187
    assert trace.residual[-1] == 0.11046693464758445
    assert trace.counters[-1].tolist() == [200, 200]


# ---------------------------------------------------------------------------
# run drivers agree


def test_traced_and_light_runs_agree():
    cfg = _cfg(
        delays=StaleRefreshDelays(p_c=0.5),
        errors=ComponentUniformErrors(bound=0.2),
        noise=UniformNoise(level=0.1),
        projection=ProjectionSpec(r_inner=2.0, r_outer=4.0),
    )
    trace = run(cfg)
    result = run_light(cfg)
    assert np.array_equal(result.final_x, trace.final_x)
    assert np.array_equal(result.counters, trace.counters[-1])
    assert result.projections == int(trace.projected.sum())
    assert result.initial_projection == trace.meta["initial_projection"]


def test_equal_configs_write_identical_traces(tmp_path):
    cfg = _cfg(delays=StaleRefreshDelays(p_c=0.5),
               errors=ComponentUniformErrors(bound=0.2))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(cfg).write_csv(a)
    run(cfg).write_csv(b)
    assert a.read_bytes() == b.read_bytes()


def test_manual_stepping_matches_run():
    cfg = _cfg(horizon=3, errors=ComponentUniformErrors(bound=0.2))
    bundle = build_runtime(cfg)
    state = SimState.create(bundle.x0, bundle.schedule, bundle.steps,
                            capacity=3)
    for _ in range(3):
        sa_step_into(state, bundle)
    assert np.array_equal(state.x, run(cfg).final_x)


def test_degenerate_delay_models_reduce_to_zero_delays():
    base = _cfg(errors=ComponentUniformErrors(bound=0.2))
    ref = run_light(base).final_x
    for delays in (UniformDelays(tau_max=0), StaleRefreshDelays(p_c=1.0)):
        got = run_light(_cfg(errors=ComponentUniformErrors(bound=0.2),
                             delays=delays)).final_x
        assert got == pytest.approx(ref, rel=1e-13)


# ---------------------------------------------------------------------------
# projection


def test_projection_region_geometry():
    region = ProjectionRegion(center=np.zeros(2), r_inner=1.0, r_outer=2.0,
                              norm=EuclideanNorm())
    assert region.contains(np.array([1.5, 0.0]))
    kept, flag = region.project(np.array([1.5, 0.0]))
    assert not flag and np.array_equal(kept, [1.5, 0.0])
    pulled, flag = region.project(np.array([0.0, 5.0]))
    assert flag and pulled == pytest.approx([0.0, 1.0])
    # the boundary itself is outside the open ball
    edge, flag = region.project(np.array([2.0, 0.0]))
    assert flag and edge == pytest.approx([1.0, 0.0])


def test_initial_iterate_outside_region_is_projected():
    cfg = _cfg(
        errors=ComponentUniformErrors(bound=0.2),
        projection=ProjectionSpec(r_inner=1.0, r_outer=2.0),
        x0=[30.0, 40.0],
    )
    trace = run(cfg)
    assert trace.meta["initial_projection"] is True
    assert np.linalg.norm(trace.x[0]) == pytest.approx(1.0)
    sizes = np.linalg.norm(trace.x, axis=1)
    assert (sizes < 2.0).all()
    result = run_light(cfg)
    assert result.initial_projection is True
    assert result.projections == int(trace.projected.sum())


def test_projection_keeps_expansive_dynamics_bounded():
    cfg = RunConfig(
        dimension=2,
        horizon=500,
        seed=3,
        objective=ScaledIdentityObjective(gain=1.0),
        steps=ConstantSteps(a0=0.5),
        projection=ProjectionSpec(r_inner=1.0, r_outer=2.0),
        x0=[1.5, 0.0],
    )
    trace = run(cfg)
    assert trace.projected.sum() > 0
    assert (np.linalg.norm(trace.x, axis=1) < 2.0).all()


# ---------------------------------------------------------------------------
# divergence


def _divergent_cfg(horizon=1000):
    return RunConfig(
        dimension=2,
        horizon=horizon,
        seed=1,
        objective=ScaledIdentityObjective(gain=5.0),
        steps=ConstantSteps(a0=1.0),
        x0=[1.0, 1.0],
    )


def test_divergence_raises_with_truncated_trace():
    with pytest.raises(DivergenceError) as info:
        run(_divergent_cfg())
    exc = info.value
    assert 0 < exc.n < 1000
    assert exc.component in (0, 1)
    assert exc.trace is not None
    assert exc.trace.ticks == exc.n
    assert np.isfinite(exc.trace.x).all()


def test_divergence_in_light_run():
    with pytest.raises(DivergenceError) as info:
        run_light(_divergent_cfg())
    assert info.value.trace is None


# ---------------------------------------------------------------------------
# history storage


def test_gather_hand_case():
    hist = IterateHistory(np.array([0.0, 10.0]))
    hist.append(np.array([1.0, 11.0]))
    hist.append(np.array([2.0, 12.0]))
    tau = np.array([[0, 2], [1, 0]])
    views = hist.gather(2, tau)
    # V[j, i] = x_{2 - tau[j, i]}[j]
    assert views.tolist() == [[2.0, 0.0], [11.0, 12.0]]
    with pytest.raises(IndexError):
        hist.gather(2, np.array([[3, 0], [0, 0]]))


def test_history_growth_and_value_access():
    hist = IterateHistory(np.zeros(1))
    for m in range(1, 3000):
        hist.append(np.array([float(m)]))
    assert hist.value(0)[0] == 0.0
    assert hist.value(1500)[0] == 1500.0
    assert hist.latest[0] == 2999.0
    with pytest.raises(IndexError):
        hist.value(3000)
    snap = hist.snapshot(10)
    assert snap.shape == (11, 1)
    assert snap[7, 0] == 7.0


def test_windowed_history_evicts_old_iterates():
    hist = IterateHistory(np.zeros(1), window=2)
    for m in range(1, 6):
        hist.append(np.array([float(m)]))
    assert hist.value(5)[0] == 5.0
    assert hist.value(3)[0] == 3.0
    with pytest.raises(HistoryWindowError):
        hist.value(2)
    with pytest.raises(HistoryWindowError):
        hist.snapshot(3)


def test_windowed_run_matches_full_history_run():
    cfg = _cfg(delays=UniformDelays(tau_max=3),
               errors=ComponentUniformErrors(bound=0.2))
    full = run_light(cfg).final_x
    windowed = run_light(cfg, window=10).final_x
    assert np.array_equal(windowed, full)


def test_window_too_small_for_delays_raises():
    cfg = _cfg(delays=UniformDelays(tau_max=5))
    with pytest.raises(HistoryWindowError):
        run_light(cfg, window=1)


# ---------------------------------------------------------------------------
# config edges


def test_horizon_one_runs():
    trace = run(_cfg(horizon=1))
    assert trace.ticks == 1


def test_bad_horizon_rejected():
    with pytest.raises(ConfigError):
        _cfg(horizon=0)


def test_noise_sum_series():
    cfg = _cfg(noise=UniformNoise(level=0.2), activation=AllActive())
    result = run_light(cfg, xi_series=True)
    assert result.xi.shape == (201, 2)
    assert np.array_equal(result.xi[0], [0.0, 0.0])
    assert np.array_equal(result.xi[-1], result.noise_sum)
    assert np.abs(result.xi).max() > 0
