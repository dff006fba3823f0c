"""
Atom-loss simulation: loss sampling, the coping strategies, the
number of holes each strategy sustains before a reload and a
multi-shot run simulator with time accounting.

Sites in a compiled program are "compiled" sites.  After virtual
remapping each compiled site runs on a physical site given by an
overlay (identity where absent).  A site is in use if the program
places a qubit on it initially or touches it with any scheduled op.
"""

import logging
from enum import Enum
from time import perf_counter
from typing import Dict, Iterable, List, NamedTuple, Optional, Set, Tuple
from warnings import warn
import numpy as np
from naqc.circuit import Circuit
from naqc.compiler import (
    CompiledProgram,
    apply_overlay,
    compile_circuit,
    out_of_range_ops,
    reroute_program,
)
from naqc.fidelity import ErrorParams, success_probability, swap_budget
from naqc.topology import GridSpec, HardwareState, is_connected
from naqc.utilities import sweep

logger = logging.getLogger(__name__)

# per measured qubit loss probability for each readout mode
MEASUREMENT_LOSS = {"lossless": 0.02, "ejection": 0.5}

# cardinal shift directions in tie-break order, N being toward row 0
DIRECTIONS = (("N", (0, -1)), ("E", (1, 0)), ("S", (0, 1)), ("W", (-1, 0)))

CATEGORIES = ("load", "fluoresce", "shot", "remap", "recompile")

HOLES_HEADER = ["strategy", "mid", "trial", "holes_sustained"]
TRACE_HEADER = ["strategy", "mid", "shot", "event", "dt_seconds", "category"]
OVERHEAD_HEADER = [
    "strategy",
    "mid",
    "total_s",
    "load_s",
    "fluoresce_s",
    "shot_s",
    "recompile_s",
    "reloads",
]
SENSITIVITY_HEADER = ["strategy", "mid", "factor", "trials", "shots_before_reload"]
HOLE_FIDELITY_HEADER = ["strategy", "mid", "holes", "success"]


class LossModel:
    """
    Independent per-shot atom loss: every usable site is lost with
    ``p_vacuum`` and every measured site additionally with the
    readout mode's loss probability.
    """

    def __init__(
        self,
        p_vacuum: float = 0.0068,
        measurement_mode: str = "lossless",
        p_measure: Optional[float] = None,
        seed: int = 0,
    ):
        """
        :param p_vacuum: Per-site loss probability per shot.
        :param measurement_mode: 'lossless' or 'ejection'.
        :param p_measure: Overrides the mode's readout loss.
        :param seed: RNG seed.
        """
        if measurement_mode not in MEASUREMENT_LOSS:
            raise ValueError(
                "Invalid measurement mode '{}'. Valid modes are {}.".format(
                    measurement_mode, ", ".join(MEASUREMENT_LOSS)
                )
            )
        for name, val in (("p_vacuum", p_vacuum), ("p_measure", p_measure)):
            if val is not None and not 0 <= val <= 1:
                raise ValueError(
                    "{} must be a probability, got {}.".format(name, val)
                )
        self.p_vacuum = p_vacuum
        self.measurement_mode = measurement_mode
        self._p_measure = p_measure
        self.seed = seed

    @property
    def p_measure(self) -> float:
        """
        """
        if self._p_measure is None:
            return MEASUREMENT_LOSS[self.measurement_mode]
        return self._p_measure

    def scaled(self, factor: float) -> "LossModel":
        """
        Copy with both loss probabilities multiplied by ``factor``.
        """
        return LossModel(
            min(1.0, self.p_vacuum * factor),
            self.measurement_mode,
            min(1.0, self.p_measure * factor),
            self.seed,
        )

    def rng(self, offset: int = 0) -> np.random.Generator:
        """
        """
        return np.random.default_rng(self.seed + offset)


class TimingModel:
    """
    Wall-clock costs in seconds.  ``t_recompile`` of None charges the
    measured time of each recompilation.
    """

    def __init__(
        self,
        t_reload: float = 0.3,
        t_fluoresce: float = 0.006,
        t_remap: float = 4e-8,
        t_shot: float = 0.001,
        t_recompile: Optional[float] = None,
    ):
        """
        """
        for name, val in (
            ("t_reload", t_reload),
            ("t_fluoresce", t_fluoresce),
            ("t_remap", t_remap),
            ("t_shot", t_shot),
            ("t_recompile", t_recompile),
        ):
            if val is not None and val < 0:
                raise ValueError("{} must be nonnegative.".format(name))
        self.t_reload = t_reload
        self.t_fluoresce = t_fluoresce
        self.t_remap = t_remap
        self.t_shot = t_shot
        self.t_recompile = t_recompile


class StrategyKind(Enum):
    """
    How a run copes with lost atoms.
    """

    always_reload = "AlwaysReload"
    always_recompile = "AlwaysRecompile"
    virtual_remap = "VirtualRemap"
    minor_reroute = "MinorReroute"
    compile_small = "CompileSmall"
    compile_small_reroute = "CompileSmallReroute"


class Strategy:
    """
    A coping strategy.  The CompileSmall variants compile at
    ``mid - small_mid_delta`` and check against the true MID, so every
    interaction has slack to absorb shifts.
    """

    def __init__(self, kind: StrategyKind, small_mid_delta: int = 1):
        """
        """
        if isinstance(kind, str):
            kind = strategy_kind(kind)
        if small_mid_delta < 1:
            raise ValueError("small_mid_delta must be a positive integer.")
        self.kind = kind
        self.small_mid_delta = int(small_mid_delta)

    @property
    def name(self) -> str:
        """
        """
        return self.kind.value

    @property
    def compiles_small(self) -> bool:
        """
        """
        return self.kind in (
            StrategyKind.compile_small,
            StrategyKind.compile_small_reroute,
        )

    @property
    def reroutes(self) -> bool:
        """
        """
        return self.kind in (
            StrategyKind.minor_reroute,
            StrategyKind.compile_small_reroute,
        )

    def compile_grid(self, grid: GridSpec) -> GridSpec:
        """
        Grid the program is compiled for.
        """
        if not self.compiles_small:
            return grid
        if self.small_mid_delta >= grid.mid or grid.mid - self.small_mid_delta < 1:
            raise ValueError(
                "{} needs mid - small_mid_delta >= 1, got mid {:g} and "
                "delta {}.".format(self.name, grid.mid, self.small_mid_delta)
            )
        return grid.with_mid(grid.mid - self.small_mid_delta)

    def __repr__(self) -> str:
        """
        """
        return "Strategy({})".format(self.name)


def strategy_kind(name: str) -> StrategyKind:
    """
    Look a strategy up by its display name.
    """
    for kind in StrategyKind:
        if kind.value == name:
            return kind
    raise ValueError(
        "Unknown strategy '{}'. Valid strategies are {}.".format(
            name, ", ".join(kind.value for kind in StrategyKind)
        )
    )


class TraceEvent(NamedTuple):
    shot: int
    event: str
    dt: float
    category: str


class ShotRecord(NamedTuple):
    shot: int
    losses: Tuple[int, ...]
    action: str
    added_swaps: int
    reloaded: bool
    success: bool
    success_prob: float


class RunTrace:
    """
    Event log of a simulated run.  Totals are always derived from the
    recorded events and shots.
    """

    def __init__(self, strategy: Strategy, mid: float):
        """
        """
        self.strategy = strategy
        self.mid = mid
        self.events = []
        self.shots = []
        self.recompiles = 0

    def add_event(self, shot: int, event: str, dt: float, category: str) -> None:
        """
        """
        if category not in CATEGORIES:
            raise ValueError("Unknown time category '{}'.".format(category))
        self.events.append(TraceEvent(shot, event, dt, category))

    def time_by_category(self) -> Dict[str, float]:
        """
        """
        totals = {category: 0.0 for category in CATEGORIES}
        for event in self.events:
            totals[event.category] += event.dt
        return totals

    @property
    def total_time(self) -> float:
        """
        """
        return float(sum(event.dt for event in self.events))

    @property
    def successful(self) -> int:
        """
        """
        return sum(1 for rec in self.shots if rec.success)

    @property
    def reloads(self) -> int:
        """
        """
        return sum(1 for rec in self.shots if rec.reloaded)

    def event_rows(self) -> List[dict]:
        """
        Rows keyed by ``TRACE_HEADER``.
        """
        return [
            {
                "strategy": self.strategy.name,
                "mid": self.mid,
                "shot": event.shot,
                "event": event.event,
                "dt_seconds": event.dt,
                "category": event.category,
            }
            for event in self.events
        ]

    def overhead_row(self) -> dict:
        """
        Row keyed by ``OVERHEAD_HEADER``.
        """
        times = self.time_by_category()
        return {
            "strategy": self.strategy.name,
            "mid": self.mid,
            "total_s": self.total_time,
            "load_s": times["load"],
            "fluoresce_s": times["fluoresce"],
            "shot_s": times["shot"],
            "recompile_s": times["recompile"],
            "reloads": self.reloads,
        }


class ExecutionState:
    """
    Mutable state of one run between reloads: the hardware holes, the
    program currently compiled, the overlay from compiled to physical
    sites and the rerouted program, if any.
    """

    def __init__(
        self,
        circuit: Circuit,
        grid: GridSpec,
        strategy: Strategy,
        original: CompiledProgram,
        budget: Optional[int],
    ):
        """
        :param circuit: Program being run.
        :param grid: True hardware grid.
        :param strategy: Coping strategy.
        :param original: Program compiled for the full grid, restored
            on every reload.
        :param budget: Max SWAPs rerouting may add, None for no limit.
        """
        self.circuit = circuit
        self.grid = grid
        self.strategy = strategy
        self.original = original
        self.budget = budget
        self.reload()

    def reload(self) -> None:
        """
        Full array reload: no holes and the original program.
        """
        self.hw = HardwareState(self.grid)
        self.current = self.original
        self.overlay = {}
        self.rerouted = None
        self.added_swaps = 0
        self._executed = None
        self._success = None

    def physical(self, site: int) -> int:
        """
        """
        return self.overlay.get(site, site)

    def in_use(self) -> frozenset:
        """
        Physical sites the executed program occupies or touches.
        """
        if self.rerouted is not None:
            return self.rerouted.in_use_sites()
        return frozenset(self.physical(s) for s in self.current.in_use_sites())

    def executed(self) -> CompiledProgram:
        """
        The program as it physically runs.
        """
        if self._executed is None:
            if self.rerouted is not None:
                self._executed = self.rerouted
            else:
                self._executed = apply_overlay(self.current, self.overlay)
        return self._executed

    def measured_sites(self) -> Set[int]:
        """
        Physical sites read out at the end of a shot.
        """
        final = self.executed().final_mapping
        return {final.site_of(q) for q in self.circuit.measured}

    def shot_success(self, ep: ErrorParams) -> float:
        """
        Success probability of the executed program.
        """
        if self._success is None:
            self._success = success_probability(self.executed(), ep)
        return self._success

    def update(self, current=None, overlay=None, rerouted=None, added=0) -> None:
        """
        """
        if current is not None:
            self.current = current
        if overlay is not None:
            self.overlay = overlay
        self.rerouted = rerouted
        self.added_swaps = added
        self._executed = None
        self._success = None


def prepare_state(
    strategy: Strategy,
    circuit: Circuit,
    grid: GridSpec,
    ep: Optional[ErrorParams] = None,
) -> ExecutionState:
    """
    Compile the program for the strategy and build a fresh state.
    """
    if ep is None:
        ep = ErrorParams()
    original = compile_circuit(circuit, strategy.compile_grid(grid))
    return ExecutionState(circuit, grid, strategy, original, swap_budget(ep.p2))


def sample_losses(
    hw: HardwareState,
    lm: LossModel,
    measured_sites: Iterable[int],
    rng: np.random.Generator,
) -> Set[int]:
    """
    Sites lost during one shot.  One uniform draw is made per usable
    site (ascending) for vacuum loss and then one per measured site
    (ascending) for readout loss.
    """
    usable = np.array(hw.usable, dtype=int)
    measured = np.array(sorted(measured_sites), dtype=int)
    for site in measured:
        if not hw.is_usable(int(site)):
            raise ValueError("Measured site {} is already lost.".format(site))
    lost = usable[rng.random(len(usable)) < lm.p_vacuum]
    lost_measured = measured[rng.random(len(measured)) < lm.p_measure]
    return set(lost.tolist()) | set(lost_measured.tolist())


def _ray(site: int, step: Tuple[int, int], grid: GridSpec) -> List[int]:
    """
    Sites from ``site`` (exclusive) to the grid edge along ``step``.
    """
    coord = grid.site_coord(site)
    x, y = int(coord.x) + step[0], int(coord.y) + step[1]
    ray = []
    while 0 <= x < grid.width and 0 <= y < grid.height:
        ray.append(y * grid.width + x)
        x += step[0]
        y += step[1]
    return ray


def shift_overlay(
    hw: HardwareState,
    overlay: Dict[int, int],
    lost: Iterable[int],
    cp: CompiledProgram,
) -> Optional[Dict[int, int]]:
    """
    Move the contents of every lost in-use site one usable position
    along the cardinal direction with the most spare sites, pushing
    the occupied sites in front of it along until the first spare.

    :param hw: Hardware state including the new losses.
    :param overlay: Current compiled to physical site overlay.
    :param lost: Newly lost sites.
    :param cp: Compiled program the overlay applies to.

    :returns: The new overlay, or None if some lost site has no spare
        in any direction.
    """
    grid = hw.grid
    holder = {overlay.get(s, s): s for s in cp.in_use_sites()}
    for site in sorted(lost):
        if site not in holder:
            continue
        best = None
        best_spare = 0
        for name, step in DIRECTIONS:
            ray = _ray(site, step, grid)
            spare = sum(1 for s in ray if hw.is_usable(s) and s not in holder)
            if spare > best_spare:
                best, best_spare = ray, spare
        if best is None:
            return None
        carry = holder.pop(site)
        for s in best:
            if not hw.is_usable(s):
                continue
            if s in holder:
                carry, holder[s] = holder[s], carry
            else:
                holder[s] = carry
                break
    return {comp: phys for phys, comp in holder.items() if comp != phys}


def virtual_remap(
    hw: HardwareState,
    overlay: Dict[int, int],
    lost: Iterable[int],
    cp: CompiledProgram,
) -> Optional[Dict[int, int]]:
    """
    Shift the overlay around newly lost sites and check that every
    scheduled op is still within the true MID.

    :returns: The new overlay, or None when a reload is needed.
    """
    shifted = shift_overlay(hw, overlay, lost, cp)
    if shifted is None:
        return None
    if out_of_range_ops(cp, hw.grid, shifted):
        return None
    return shifted


def minor_reroute(
    hw: HardwareState,
    overlay: Dict[int, int],
    cp: CompiledProgram,
    budget: Optional[int],
) -> Optional[Tuple[CompiledProgram, int]]:
    """
    Execute ``cp`` through ``overlay``, walking the operands of every
    op left out of range along shortest paths and back.

    :param hw: Hardware state including all losses.
    :param overlay: Shifted overlay.
    :param cp: Compiled program.
    :param budget: Max SWAPs that may be added program-wide, None for
        no limit.

    :returns: (executed program, SWAPs added), or None when some op
        has no path or the added SWAPs exceed the budget.
    """
    executed = apply_overlay(cp, overlay)
    if not out_of_range_ops(executed, hw.grid):
        return executed, 0
    rerouted = reroute_program(executed, hw)
    if rerouted is None:
        return None
    if budget is not None and rerouted[1] > budget:
        return None
    return rerouted


class Outcome(NamedTuple):
    action: str
    reload: bool
    dt: float
    category: Optional[str]


def apply_strategy(
    st: Strategy,
    state: ExecutionState,
    losses: Iterable[int],
    tm: Optional[TimingModel] = None,
) -> Outcome:
    """
    Record ``losses`` in ``state`` and adjust the program the way the
    strategy does.  Losses touching no in-use site always continue at
    no cost.  A reload outcome leaves the state unchanged; the caller
    reloads and charges the reload time.
    """
    if tm is None:
        tm = TimingModel()
    losses = set(losses)
    hit = losses & state.in_use()
    state.hw = state.hw.with_lost(losses)
    if not hit:
        return Outcome("unaffected", False, 0.0, None)

    kind = st.kind
    if kind == StrategyKind.always_reload:
        return Outcome("reload", True, 0.0, None)

    if kind == StrategyKind.always_recompile:
        if state.circuit.n_qubits > state.hw.num_usable or not is_connected(
            state.hw
        ):
            return Outcome("reload", True, 0.0, None)
        start = perf_counter()
        try:
            cp = compile_circuit(state.circuit, state.grid, hw=state.hw)
        except RuntimeError as err:
            logger.debug("recompile failed: %s", err)
            return Outcome("reload", True, 0.0, None)
        elapsed = perf_counter() - start
        state.update(current=cp, overlay={})
        dt = elapsed if tm.t_recompile is None else tm.t_recompile
        return Outcome("recompile", False, dt, "recompile")

    if st.reroutes:
        shifted = shift_overlay(state.hw, state.overlay, hit, state.current)
        if shifted is None:
            return Outcome("reload", True, 0.0, None)
        rerouted = minor_reroute(state.hw, shifted, state.current, state.budget)
        if rerouted is None:
            return Outcome("reload", True, 0.0, None)
        program, added = rerouted
        state.update(overlay=shifted, rerouted=program if added else None, added=added)
        return Outcome("reroute" if added else "remap", False, tm.t_remap, "remap")

    shifted = virtual_remap(state.hw, state.overlay, hit, state.current)
    if shifted is None:
        return Outcome("reload", True, 0.0, None)
    state.update(overlay=shifted)
    return Outcome("remap", False, tm.t_remap, "remap")


class HoleStats(NamedTuple):
    mean: float
    std: float
    counts: List[int]


def _hole_trial(args) -> int:
    """
    Holes sustained in one trial: sites are removed in a random order
    until the strategy forces a reload.
    """
    strategy, circuit, grid, original, budget, seed, trial = args
    state = ExecutionState(circuit, grid, strategy, original, budget)
    order = np.random.default_rng(seed + trial).permutation(grid.num_sites)
    tm = TimingModel(t_recompile=0.0)
    for holes, site in enumerate(order):
        if apply_strategy(strategy, state, [int(site)], tm).reload:
            return holes
    return grid.num_sites


def max_sustained_holes(
    st: Strategy,
    circuit: Circuit,
    grid: GridSpec,
    trials: int,
    seed: int = 0,
    ep: Optional[ErrorParams] = None,
    processes: int = 1,
) -> HoleStats:
    """
    Distribution over trials of the number of holes a strategy
    sustains before the first forced reload.  Trial ``i`` draws its
    removal order from seed + i, so strategies compared at the same
    seed see the same removal orders.  Rerouting adds SWAPs without
    limit here; only a missing path or no spare site forces a reload.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1.")
    state = prepare_state(st, circuit, grid, ep)
    params = [
        (st, circuit, grid, state.original, None, seed, trial)
        for trial in range(trials)
    ]
    counts = sweep(_hole_trial, params, processes)
    logger.info(
        "%s mid=%g holes mean=%.2f over %d trials",
        st.name,
        grid.mid,
        np.mean(counts),
        trials,
    )
    return HoleStats(float(np.mean(counts)), float(np.std(counts)), counts)


def hole_fidelity_trace(
    st: Strategy,
    circuit: Circuit,
    grid: GridSpec,
    ep: Optional[ErrorParams] = None,
    seed: int = 0,
) -> List[Tuple[int, float]]:
    """
    Success probability of the executed program as random holes
    accumulate, from 0 holes until the strategy forces a reload.
    """
    if ep is None:
        ep = ErrorParams()
    state = prepare_state(st, circuit, grid, ep)
    state.budget = None
    order = np.random.default_rng(seed).permutation(grid.num_sites)
    tm = TimingModel(t_recompile=0.0)
    points = [(0, state.shot_success(ep))]
    for holes, site in enumerate(order, start=1):
        if apply_strategy(st, state, [int(site)], tm).reload:
            break
        points.append((holes, state.shot_success(ep)))
    return points


def simulate_run(
    st: Strategy,
    circuit: Circuit,
    grid: GridSpec,
    lm: LossModel,
    tm: TimingModel,
    target_successful_shots: int = 500,
    ep: Optional[ErrorParams] = None,
    max_shots: Optional[int] = None,
    state: Optional[ExecutionState] = None,
) -> RunTrace:
    """
    Run shots until ``target_successful_shots`` succeed.  The run
    starts with one array load; the initial compilation is not
    charged.  Every shot costs one execution and one fluorescence
    image, after which losses are sampled and the strategy applied.
    A shot succeeds iff none of its in-use atoms was lost.

    :param max_shots: Shot cap, 100 x target by default.  Hitting it
        ends the run early with a warning.
    :param state: Reuse an already prepared state.
    """
    if target_successful_shots < 1:
        raise ValueError("target_successful_shots must be at least 1.")
    if ep is None:
        ep = ErrorParams()
    if state is None:
        state = prepare_state(st, circuit, grid, ep)
    else:
        state.reload()
    if max_shots is None:
        max_shots = 100 * target_successful_shots
    rng = lm.rng()
    trace = RunTrace(st, grid.mid)
    trace.add_event(0, "load", tm.t_reload, "load")

    shot = 0
    while trace.successful < target_successful_shots:
        if shot >= max_shots:
            warn(
                "{} stopped after {} shots with {} of {} successful.".format(
                    st.name, shot, trace.successful, target_successful_shots
                )
            )
            break
        trace.add_event(shot, "shot", tm.t_shot, "shot")
        trace.add_event(shot, "fluoresce", tm.t_fluoresce, "fluoresce")
        prob = state.shot_success(ep)
        losses = sample_losses(state.hw, lm, state.measured_sites(), rng)
        success = not (losses & state.in_use())
        outcome = apply_strategy(st, state, losses, tm)
        if outcome.category is not None:
            trace.add_event(shot, outcome.action, outcome.dt, outcome.category)
        if outcome.category == "recompile":
            trace.recompiles += 1
        if outcome.reload:
            trace.add_event(shot, "reload", tm.t_reload, "load")
            state.reload()
        trace.shots.append(
            ShotRecord(
                shot,
                tuple(sorted(losses)),
                outcome.action,
                state.added_swaps,
                outcome.reload,
                success,
                prob,
            )
        )
        logger.debug(
            "shot %d losses=%d action=%s", shot, len(losses), outcome.action
        )
        shot += 1
    return trace


def _shots_before_reload(args) -> int:
    """
    """
    strategy, circuit, grid, original, budget, lm, max_shots, trial = args
    state = ExecutionState(circuit, grid, strategy, original, budget)
    rng = lm.rng(trial)
    tm = TimingModel(t_recompile=0.0)
    successful = 0
    for _ in range(max_shots):
        losses = sample_losses(state.hw, lm, state.measured_sites(), rng)
        if not losses & state.in_use():
            successful += 1
        if apply_strategy(strategy, state, losses, tm).reload:
            break
    return successful


def sweep_loss_rate(
    st: Strategy,
    circuit: Circuit,
    grid: GridSpec,
    lm: LossModel,
    factors: Iterable[float],
    trials: int = 20,
    ep: Optional[ErrorParams] = None,
    max_shots: int = 100000,
    processes: int = 1,
) -> List[dict]:
    """
    Mean successful shots before the first reload as both loss
    probabilities are scaled by each factor.

    :returns: Rows keyed by ``SENSITIVITY_HEADER``.
    """
    state = prepare_state(st, circuit, grid, ep)
    rows = []
    for factor in factors:
        scaled = lm.scaled(factor)
        params = [
            (st, circuit, grid, state.original, state.budget, scaled, max_shots, trial)
            for trial in range(trials)
        ]
        shots = sweep(_shots_before_reload, params, processes)
        rows.append(
            {
                "strategy": st.name,
                "mid": grid.mid,
                "factor": factor,
                "trials": trials,
                "shots_before_reload": float(np.mean(shots)),
            }
        )
    return rows


def loss_rate_slope(factors: Iterable[float], shots: Iterable[float]) -> float:
    """
    Slope of log(shots) against log(1 / factor).  A value of 1 means
    shots between reloads scale inversely with the loss rate.
    """
    factors = np.asarray(list(factors), dtype=float)
    shots = np.asarray(list(shots), dtype=float)
    if len(factors) < 2 or np.any(factors <= 0) or np.any(shots <= 0):
        raise ValueError("Need at least two positive factors and shot counts.")
    slope, _ = np.polyfit(np.log(1 / factors), np.log(shots), 1)
    return float(slope)
