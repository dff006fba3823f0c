import pytest
import numpy as np
from naqc.circuit import CX, Circuit, build_bv, build_cuccaro
from naqc.compiler import compile_circuit, verify
from naqc.fidelity import ErrorParams, swap_budget
from naqc.lossim import (
    OVERHEAD_HEADER,
    SENSITIVITY_HEADER,
    ExecutionState,
    LossModel,
    RunTrace,
    Strategy,
    StrategyKind,
    TimingModel,
    apply_strategy,
    hole_fidelity_trace,
    loss_rate_slope,
    max_sustained_holes,
    minor_reroute,
    prepare_state,
    sample_losses,
    shift_overlay,
    simulate_run,
    strategy_kind,
    sweep_loss_rate,
    virtual_remap,
)
from naqc.topology import GridSpec, HardwareState


@pytest.fixture
def cnot():
    c = Circuit(2)
    c.add(CX, 0, 1)
    c.measured = [0, 1]
    return c


def _state(kind, circuit, grid):
    return prepare_state(Strategy(kind), circuit, grid)


def test_loss_model():
    """
    """
    assert LossModel().p_measure == 0.02
    assert LossModel(measurement_mode="ejection").p_measure == 0.5
    assert LossModel(p_measure=0.1).p_measure == 0.1
    scaled = LossModel(p_vacuum=0.01).scaled(10)
    assert np.isclose(scaled.p_vacuum, 0.1)
    assert np.isclose(scaled.p_measure, 0.2)
    assert LossModel(p_vacuum=0.5).scaled(10).p_vacuum == 1.0
    with pytest.raises(ValueError):
        LossModel(measurement_mode="destructive")
    with pytest.raises(ValueError):
        LossModel(p_vacuum=2)


def test_strategies():
    """
    """
    assert strategy_kind("VirtualRemap") == StrategyKind.virtual_remap
    with pytest.raises(ValueError):
        strategy_kind("Reshuffle")
    st = Strategy("CompileSmallReroute")
    assert st.compiles_small and st.reroutes
    assert st.compile_grid(GridSpec(5, 5, 3)).mid == 2
    assert st.compile_grid(GridSpec(5, 5, 2)).mid == 1
    with pytest.raises(ValueError):
        st.compile_grid(GridSpec(5, 5, 1.5))
    assert Strategy("MinorReroute").compile_grid(GridSpec(5, 5, 3)).mid == 3
    with pytest.raises(ValueError):
        Strategy("CompileSmall", small_mid_delta=0)


def test_sample_losses():
    """
    """
    hw = HardwareState(GridSpec(3, 3, 1), [4])
    rng = np.random.default_rng(0)
    assert sample_losses(hw, LossModel(0.0, p_measure=0.0), [0, 1], rng) == set()
    everything = sample_losses(hw, LossModel(1.0, p_measure=0.0), [0], rng)
    assert everything == set(hw.usable)
    assert sample_losses(hw, LossModel(0.0, p_measure=1.0), [0, 8], rng) == {0, 8}
    with pytest.raises(ValueError):
        sample_losses(hw, LossModel(), [4], rng)


def test_shift_overlay(cnot):
    """
    """
    grid = GridSpec(3, 1, 1)
    cp = compile_circuit(cnot, grid)
    assert cp.initial_mapping.forward == [1, 0]
    hw = HardwareState(grid, [1])
    assert shift_overlay(hw, {}, [1], cp) == {1: 2}
    # the remapped CNOT is two sites apart
    assert virtual_remap(hw, {}, [1], cp) is None
    wide = GridSpec(3, 1, 2)
    cp = compile_circuit(cnot, wide)
    assert virtual_remap(HardwareState(wide, [1]), {}, [1], cp) == {1: 2}
    # no spare site anywhere
    assert shift_overlay(HardwareState(grid, [1, 2]), {}, [1], cp) is None


def test_shift_pushes_occupied_sites(cnot):
    """
    """
    grid = GridSpec(4, 1, 1)
    cp = compile_circuit(cnot, grid)
    assert cp.initial_mapping.forward == [1, 0]
    hw = HardwareState(grid, [0])
    assert shift_overlay(hw, {}, [0], cp) == {0: 1, 1: 2}
    assert virtual_remap(hw, {}, [0], cp) == {0: 1, 1: 2}


def test_minor_reroute(cnot):
    """
    """
    grid = GridSpec(4, 1, 1)
    cp = compile_circuit(cnot, grid)
    hw = HardwareState(grid)
    program, added = minor_reroute(hw, {1: 3}, cp, None)
    assert added == 4
    assert program.swap_count == 4
    assert verify(program, cnot, grid, check_zones=False)
    assert minor_reroute(hw, {1: 3}, cp, 3) is None
    assert minor_reroute(hw, {1: 3}, cp, 6)[1] == 4
    program, added = minor_reroute(hw, {}, cp, 0)
    assert added == 0


def test_apply_strategy_unaffected(cnot):
    """
    """
    grid = GridSpec(3, 1, 1)
    state = _state("AlwaysReload", cnot, grid)
    outcome = apply_strategy(state.strategy, state, [2])
    assert outcome.action == "unaffected"
    assert not outcome.reload
    assert state.hw.lost == frozenset({2})
    assert apply_strategy(state.strategy, state, [1]).reload


def test_apply_strategy_virtual_remap(cnot):
    """
    """
    tm = TimingModel()
    state = _state("VirtualRemap", cnot, GridSpec(3, 1, 1))
    assert apply_strategy(state.strategy, state, [1], tm).reload

    state = _state("VirtualRemap", cnot, GridSpec(3, 1, 2))
    outcome = apply_strategy(state.strategy, state, [1], tm)
    assert outcome.action == "remap"
    assert outcome.dt == tm.t_remap
    assert state.overlay == {1: 2}
    assert state.in_use() == frozenset({0, 2})
    assert state.measured_sites() == {0, 2}
    state.reload()
    assert state.overlay == {}
    assert state.hw.lost == frozenset()


def test_apply_strategy_recompile(cnot):
    """
    """
    grid = GridSpec(4, 1, 1)
    state = _state("AlwaysRecompile", cnot, grid)
    outcome = apply_strategy(
        state.strategy, state, [0], TimingModel(t_recompile=0.5)
    )
    assert outcome.action == "recompile"
    assert outcome.dt == 0.5
    assert outcome.category == "recompile"
    assert 0 not in state.in_use()
    assert verify(state.executed(), cnot, grid, hw=state.hw)

    state = _state("AlwaysRecompile", cnot, GridSpec(3, 1, 1))
    # sites 0 and 2 are not within reach of each other
    assert apply_strategy(state.strategy, state, [1]).reload


def test_sustained_holes_ordering():
    """
    """
    grid = GridSpec(5, 5, 2)
    c = build_bv(5)
    counts = {}
    for kind in ("AlwaysReload", "VirtualRemap", "MinorReroute", "AlwaysRecompile"):
        stats = max_sustained_holes(Strategy(kind), c, grid, trials=5, seed=3)
        assert len(stats.counts) == 5
        assert np.isclose(stats.mean, np.mean(stats.counts))
        counts[kind] = stats.counts
    for i in range(5):
        assert counts["AlwaysReload"][i] <= counts["VirtualRemap"][i]
        assert counts["VirtualRemap"][i] <= counts["MinorReroute"][i]
        assert counts["AlwaysReload"][i] <= counts["AlwaysRecompile"][i]
        assert counts["AlwaysRecompile"][i] <= grid.num_sites - c.n_qubits
    with pytest.raises(ValueError):
        max_sustained_holes(Strategy("AlwaysReload"), c, grid, trials=0)


def test_hole_fidelity_trace():
    """
    """
    grid = GridSpec(5, 5, 2)
    c = build_bv(5)
    points = hole_fidelity_trace(Strategy("VirtualRemap"), c, grid, seed=2)
    assert [holes for holes, _ in points] == list(range(len(points)))
    # remapping moves atoms but never changes the executed gates
    assert all(np.isclose(s, points[0][1]) for _, s in points)


def test_simulate_run_without_loss(cnot):
    """
    """
    tm = TimingModel()
    lm = LossModel(0.0, p_measure=0.0)
    trace = simulate_run(Strategy("VirtualRemap"), cnot, GridSpec(3, 3, 1), lm, tm, 10)
    assert trace.successful == 10
    assert trace.reloads == 0
    assert len(trace.shots) == 10
    assert np.isclose(trace.total_time, tm.t_reload + 10 * (tm.t_shot + tm.t_fluoresce))
    assert trace.overhead_row()["reloads"] == 0
    assert list(trace.overhead_row()) == OVERHEAD_HEADER


def test_simulate_run_shot_cap(cnot):
    """
    """
    tm = TimingModel()
    lm = LossModel(1.0, p_measure=0.0)
    with pytest.warns(UserWarning):
        trace = simulate_run(
            Strategy("AlwaysReload"), cnot, GridSpec(3, 3, 1), lm, tm, 10, max_shots=5
        )
    assert trace.successful == 0
    assert trace.reloads == 5
    expected = 6 * tm.t_reload + 5 * (tm.t_shot + tm.t_fluoresce)
    assert np.isclose(trace.total_time, expected)
    assert np.isclose(trace.time_by_category()["load"], 6 * tm.t_reload)


def test_run_trace_rejects_unknown_category():
    """
    """
    trace = RunTrace(Strategy("AlwaysReload"), 3.0)
    with pytest.raises(ValueError):
        trace.add_event(0, "coffee", 1.0, "break")


def test_sweep_loss_rate(cnot):
    """
    """
    lm = LossModel(0.01, p_measure=0.0)
    rows = sweep_loss_rate(
        Strategy("AlwaysReload"),
        cnot,
        GridSpec(3, 3, 1),
        lm,
        [0.0, 1000.0],
        trials=3,
        max_shots=50,
    )
    assert [list(row) for row in rows] == [SENSITIVITY_HEADER] * 2
    assert rows[0]["shots_before_reload"] == 50
    assert rows[1]["shots_before_reload"] == 0


def test_loss_rate_slope():
    """
    """
    assert np.isclose(loss_rate_slope([1, 10], [100, 10]), 1.0)
    assert np.isclose(loss_rate_slope([1, 10, 100], [100, 10, 1]), 1.0)
    with pytest.raises(ValueError):
        loss_rate_slope([1], [1])
    with pytest.raises(ValueError):
        loss_rate_slope([1, 10], [0, 10])


def test_execution_state_reuses_original(cnot):
    """
    """
    grid = GridSpec(4, 1, 1)
    state = _state("AlwaysRecompile", cnot, grid)
    original = state.original
    apply_strategy(state.strategy, state, [0], TimingModel(t_recompile=0.0))
    assert state.current is not original
    state.reload()
    assert state.current is original
    again = ExecutionState(cnot, grid, state.strategy, original, state.budget)
    assert again.executed() == original


def test_sustained_holes_ignore_swap_budget():
    """
    """
    grid = GridSpec(5, 5, 2)
    c = build_bv(5)
    tight = ErrorParams(p2=0.5)
    assert swap_budget(tight.p2) == 0
    reroute = max_sustained_holes(Strategy("MinorReroute"), c, grid, 10, seed=1, ep=tight)
    default = max_sustained_holes(Strategy("MinorReroute"), c, grid, 10, seed=1)
    remap = max_sustained_holes(Strategy("VirtualRemap"), c, grid, 10, seed=1)
    assert reroute.counts == default.counts
    assert sum(reroute.counts) > sum(remap.counts)


@pytest.fixture(scope="module")
def adder30():
    return build_cuccaro(30)


@pytest.mark.parametrize("mid", [3, 4])
def test_sustained_holes_minor_reroute(adder30, mid):
    """
    """
    grid = GridSpec(10, 10, mid)
    stats = max_sustained_holes(Strategy("MinorReroute"), adder30, grid, 12, seed=0)
    assert 42 <= stats.mean <= 58


@pytest.mark.parametrize("mid", [2, 3])
def test_sustained_holes_virtual_remap(adder30, mid):
    """
    """
    grid = GridSpec(10, 10, mid)
    remap = max_sustained_holes(Strategy("VirtualRemap"), adder30, grid, 12, seed=0)
    reroute = max_sustained_holes(Strategy("MinorReroute"), adder30, grid, 12, seed=0)
    assert remap.mean < 15
    assert remap.mean <= reroute.mean


def test_sustained_holes_recompile(adder30):
    """
    """
    grid = GridSpec(10, 10, 5)
    stats = max_sustained_holes(Strategy("AlwaysRecompile"), adder30, grid, 4, seed=0)
    assert 66 <= stats.mean <= grid.num_sites - adder30.n_qubits


def test_overhead_against_reload():
    """
    """
    grid = GridSpec(10, 10, 3)
    c = build_bv(10)
    lm = LossModel(seed=5)
    tm = TimingModel(t_recompile=1.0)
    totals = {}
    for kind in (
        "AlwaysReload",
        "AlwaysRecompile",
        "VirtualRemap",
        "MinorReroute",
        "CompileSmall",
        "CompileSmallReroute",
    ):
        trace = simulate_run(Strategy(kind), c, grid, lm, tm, 100)
        assert trace.successful == 100
        totals[kind] = trace.total_time
    for kind in ("VirtualRemap", "MinorReroute", "CompileSmall", "CompileSmallReroute"):
        assert totals[kind] <= totals["AlwaysReload"]
    assert totals["AlwaysRecompile"] >= totals["AlwaysReload"]


def test_shots_before_reload_scale_with_loss_rate(adder30):
    """
    """
    rows = sweep_loss_rate(
        Strategy("CompileSmallReroute"),
        adder30,
        GridSpec(10, 10, 3),
        LossModel(),
        [0.01, 0.1, 1.0],
        trials=30,
    )
    kept = [row for row in rows if row["shots_before_reload"] > 0]
    factors = [row["factor"] for row in kept]
    assert max(factors) / min(factors) >= 100
    slope = loss_rate_slope(factors, [row["shots_before_reload"] for row in kept])
    assert 0.8 <= slope <= 1.2
