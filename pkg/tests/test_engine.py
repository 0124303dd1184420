import io
import logging
import math

import numpy as np
import pytest

from hn4walk.engine import (
    CoinDirection,
    EdgeMode,
    ProbabilityTrace,
    ResourceLimitError,
    WalkConfig,
    WalkEngine,
    amplified_cost,
    apply_coin,
    apply_oracle,
    apply_shift,
    coin_weights,
    directions,
    flip,
    initial_state,
    memory_requirement,
    run,
    shift_permutation,
    step,
    success_probability,
    target_indices,
)
from hn4walk.topology import TopologyParams

from dense_reference import dense_step

RNG = np.random.default_rng(411)


def random_state(n_coins, n_vertices, rng=RNG):
    psi = rng.normal(size=(n_coins, n_vertices)) + 1j * rng.normal(size=(n_coins, n_vertices))
    return psi / np.linalg.norm(psi)


def make_config(side=4, na=8.5, targets=((1, 2),), mode=EdgeMode.HN4):
    return WalkConfig.with_na(TopologyParams.from_side(side), na, targets, mode)


def test_direction_cardinality():
    assert len(directions(EdgeMode.HN4)) == 9
    assert len(directions(EdgeMode.GRID)) == 5
    assert directions(EdgeMode.HN4)[-1] is CoinDirection.HOLD
    assert directions(EdgeMode.GRID)[-1] is CoinDirection.HOLD


def test_flip_is_involution():
    for d in CoinDirection:
        assert flip(flip(d)) is d
    assert flip(CoinDirection.HOLD) is CoinDirection.HOLD
    assert flip(CoinDirection.X_PLUS) is CoinDirection.X_MINUS


def test_config_validation():
    topo = TopologyParams.from_side(4)
    with pytest.raises(ValueError):
        WalkConfig(topo, -0.1)
    with pytest.raises(ValueError):
        WalkConfig(topo, 0.5, ((0, 0), (0, 0)))
    with pytest.raises(Exception):
        WalkConfig(topo, 0.5, ((4, 0),))
    config = WalkConfig.with_na(topo, 8.0, [(1, 2)])
    assert config.loop_weight == 0.5
    assert config.na == 8.0


def test_initial_state_zero_loop_weight():
    config = make_config(side=4, na=0.0)
    psi = initial_state(config)
    np.testing.assert_allclose(psi[:-1].real, 1.0 / np.sqrt(8 * 16), rtol=0, atol=1e-15)
    assert np.all(psi[-1] == 0)


def test_initial_state_uniform_when_a_is_one():
    topo = TopologyParams.from_side(4)
    config = WalkConfig(topo, 1.0, ((1, 2),), EdgeMode.HN4)
    psi = initial_state(config)
    np.testing.assert_allclose(psi.real, 1.0 / 12.0, rtol=0, atol=1e-15)


@pytest.mark.parametrize("mode", list(EdgeMode))
@pytest.mark.parametrize("n", range(2, 10))
def test_initial_state_norm(mode, n):
    topo = TopologyParams(n)
    config = WalkConfig.with_na(topo, 8.5, ((1, 2),), mode)
    psi = initial_state(config)
    # exact summation: the bound is tighter than pairwise reduction error
    total = math.fsum((psi.real**2 + psi.imag**2).ravel().tolist())
    assert abs(total - 1.0) < 1e-14


def test_oracle_empty_targets_is_identity():
    psi = random_state(9, 16)
    before = psi.copy()
    apply_oracle(psi, np.array([], dtype=np.int64))
    np.testing.assert_array_equal(psi, before)


def test_oracle_involution():
    config = make_config()
    psi = random_state(9, 16)
    before = psi.copy()
    idx = target_indices(config)
    apply_oracle(psi, idx)
    apply_oracle(psi, idx)
    assert np.max(np.abs(psi - before)) < 1e-15


def test_oracle_flips_exactly_one_block():
    # 4x4 grid, one target: 9 of the 144 amplitudes change sign
    config = make_config()
    psi = random_state(9, 16)
    before = psi.copy()
    apply_oracle(psi, target_indices(config))
    changed = psi != before
    assert changed.sum() == 9
    np.testing.assert_array_equal(psi[changed], -before[changed])


def test_coin_fixes_coin_state_and_negates_orthogonal():
    w = coin_weights(8.5 / 16, EdgeMode.HN4)
    block = np.repeat(w.astype(np.complex128)[:, None], 3, axis=1) * np.array([1.0, 2.0, 1j])
    psi = block.copy()
    apply_coin(psi, w)
    np.testing.assert_allclose(psi, block, atol=1e-14)

    ortho = np.zeros((9, 1), dtype=np.complex128)
    ortho[0, 0], ortho[1, 0] = w[1], -w[0]  # orthogonal to w by construction
    psi = ortho.copy()
    apply_coin(psi, w)
    np.testing.assert_allclose(psi, -ortho, atol=1e-14)


def test_coin_involution():
    w = coin_weights(0.03, EdgeMode.HN4)
    psi = random_state(9, 64)
    before = psi.copy()
    apply_coin(psi, w)
    apply_coin(psi, w)
    assert np.max(np.abs(psi - before)) < 1e-14


@pytest.mark.parametrize("mode", list(EdgeMode))
@pytest.mark.parametrize("n", range(2, 7))
def test_shift_permutation_is_bijection(mode, n):
    perm = shift_permutation(TopologyParams(n), mode)
    np.testing.assert_array_equal(np.sort(perm), np.arange(perm.size))


@pytest.mark.parametrize("mode", list(EdgeMode))
def test_shift_involution(mode):
    topo = TopologyParams.from_side(8)
    perm = shift_permutation(topo, mode)
    psi = random_state(len(directions(mode)), topo.n_vertices)
    once = np.empty_like(psi)
    twice = np.empty_like(psi)
    apply_shift(psi, perm, once)
    apply_shift(once, perm, twice)
    assert np.max(np.abs(twice - psi)) < 1e-15


def test_shift_swaps_long_range_pair_at_exceptional_vertex():
    # x + 1 = 8 = 2**(n-1) on a 16-side lattice: LX+ and LX- swap in place
    topo = TopologyParams.from_side(16)
    perm = shift_permutation(topo, EdgeMode.HN4)
    psi = np.zeros((9, topo.n_vertices), dtype=np.complex128)
    v = 7 + 16 * 3
    psi[CoinDirection.LX_PLUS, v] = 1.0
    psi[CoinDirection.LX_MINUS, v] = 2.0
    out = np.empty_like(psi)
    apply_shift(psi, perm, out)
    assert out[CoinDirection.LX_MINUS, v] == 1.0
    assert out[CoinDirection.LX_PLUS, v] == 2.0
    out[CoinDirection.LX_MINUS, v] = out[CoinDirection.LX_PLUS, v] = 0.0
    assert np.all(out == 0)


@pytest.mark.parametrize("mode", list(EdgeMode))
def test_step_matches_dense_reference(mode):
    config = make_config(mode=mode)
    matrix = dense_step(config)
    n_coins = len(directions(mode))
    psi = random_state(n_coins, 16)
    expected = (matrix @ psi.reshape(-1)).reshape(n_coins, 16)
    got = step(psi.copy(), config)
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_step_is_stationary_without_targets():
    for mode in EdgeMode:
        config = WalkConfig.with_na(TopologyParams.from_side(64), 8.5, (), mode)
        psi = initial_state(config)
        after = step(psi.copy(), config)
        assert np.linalg.norm(after - psi) < 1e-12


def test_step_preserves_norm():
    config = make_config(side=8)
    psi = random_state(9, 64)
    after = step(psi.copy(), config)
    assert abs(np.linalg.norm(after) - 1.0) < 1e-14


def test_success_probability_cases():
    config = make_config(side=4, targets=((1, 2),))
    idx = target_indices(config)
    psi = np.zeros((9, 16), dtype=np.complex128)
    psi[3, idx[0]] = 1.0
    assert success_probability(psi, idx) == pytest.approx(1.0)

    everything = np.arange(16, dtype=np.int64)
    psi = random_state(9, 16)
    assert success_probability(psi, everything) == pytest.approx(1.0)


def test_trace_starts_at_m_over_n():
    config = make_config(side=16, targets=((1, 6), (3, 4), (9, 2)))
    trace = run(config, 0)
    assert len(trace) == 1
    assert trace[0] == pytest.approx(3 / 256, abs=1e-15)


def test_trace_invariant_under_target_permutation():
    topo = TopologyParams.from_side(16)
    targets = ((1, 6), (3, 4), (9, 2))
    a = run(WalkConfig.with_na(topo, 25.0, targets), 40)
    b = run(WalkConfig.with_na(topo, 25.0, targets[::-1]), 40)
    np.testing.assert_array_equal(a.probabilities, b.probabilities)


def test_run_is_deterministic():
    config = make_config(side=16, targets=((1, 6),), na=8.5)
    a = run(config, 50)
    b = run(config, 50)
    np.testing.assert_array_equal(a.probabilities, b.probabilities)


def test_run_streams_rows_to_sink():
    config = make_config(side=4, targets=((1, 2),))
    sink = io.StringIO()
    trace = run(config, 3, sink=sink)
    lines = sink.getvalue().splitlines()
    assert len(lines) == 4
    for t, line in enumerate(lines):
        step_str, p_str = line.split(",")
        assert int(step_str) == t
        assert float(p_str) == trace[t]


def test_memory_requirement_and_limit():
    topo = TopologyParams.from_side(16)
    assert memory_requirement(topo, EdgeMode.HN4) == 2 * 16 * 9 * 256
    assert memory_requirement(topo, EdgeMode.GRID) == 2 * 16 * 5 * 256
    config = WalkConfig.with_na(topo, 8.5, ((1, 6),))
    with pytest.raises(ResourceLimitError):
        WalkEngine(config, memory_limit=1024)
    with pytest.raises(ResourceLimitError):
        run(config, 5, memory_limit=1024)


def test_engine_counts_steps_and_resets():
    engine = WalkEngine(make_config(side=16, targets=((1, 6),)))
    p0 = engine.probability()
    engine.advance(7)
    assert engine.t == 7
    engine.reset()
    assert engine.t == 0
    assert engine.probability() == p0


def test_engine_warns_on_exceptional_target(caplog):
    with caplog.at_level(logging.WARNING, logger="hn4walk.engine"):
        WalkEngine(make_config(side=16, targets=((6, 7),)))  # y + 1 = 8 = 2**(n-1)
    assert any("exceptional" in rec.message for rec in caplog.records)


def test_amplified_cost():
    assert amplified_cost(100, 1.0) == 100
    assert amplified_cost(100, 0.25) == 200
    with pytest.raises(ValueError):
        amplified_cost(100, 0.0)
    with pytest.raises(ValueError):
        amplified_cost(100, 1.5)


def test_probability_trace_rows():
    trace = ProbabilityTrace(np.array([0.1, 0.2, 0.3]))
    assert list(trace.rows()) == [(0, 0.1), (1, 0.2), (2, 0.3)]
    assert trace.final_step == 2
