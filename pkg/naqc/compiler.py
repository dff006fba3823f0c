"""
Mapping, routing and restriction-zone scheduling of circuits onto an
atom grid, plus an independent verifier for compiled programs.

The pipeline is: optional Toffoli decomposition, ASAP layering,
lookahead-weighted initial placement and a timestep-by-timestep
frontier router that inserts SWAPs toward blocked interactions.  The
no-zone baseline reuses the routed op sequence and only relaxes the
parallelism test, so both programs contain exactly the same gates.
"""

import logging
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
from warnings import warn
import numpy as np
from naqc.circuit import (
    SWAP,
    Circuit,
    Gate,
    LayerAssignment,
    asap_layers,
    decompose_toffolis as toffoli_decomposition,
)
from naqc.const import LOOKAHEAD_HORIZON, SWAP_CNOTS, TOFFOLI_MIN_MID
from naqc.coordinate import list_center2
from naqc.fp import fp_lep, fp_ltp, fp_nearest
from naqc.topology import (
    GridSpec,
    HardwareState,
    conflicts,
    interactable,
    shortest_path,
    sites_within,
    zone_of,
)

logger = logging.getLogger(__name__)

SCHED_HEADER = "naqc-sched v1"


class Mapping:
    """
    Injective assignment of program qubits to grid sites.  ``forward``
    is indexed by qubit; the reverse direction is partial since spare
    sites hold no qubit.
    """

    def __init__(self, forward: Sequence[int]):
        """
        :param forward: Site of each program qubit, indexed by qubit.
        """
        self._forward = [int(site) for site in forward]
        self._reverse = {site: q for q, site in enumerate(self._forward)}
        if len(self._reverse) != len(self._forward):
            raise ValueError("Mapping places two qubits on the same site.")
        if any(site < 0 for site in self._forward):
            raise ValueError("Mapping sites must be nonnegative.")

    @property
    def forward(self) -> List[int]:
        """
        """
        return list(self._forward)

    @property
    def n_qubits(self) -> int:
        """
        """
        return len(self._forward)

    def site_of(self, qubit: int) -> int:
        """
        """
        return self._forward[qubit]

    def qubit_at(self, site: int) -> Optional[int]:
        """
        Program qubit held by ``site``, or None for an empty site.
        """
        return self._reverse.get(site)

    def sites(self) -> frozenset:
        """
        """
        return frozenset(self._forward)

    def swap_sites(self, site1: int, site2: int) -> None:
        """
        Exchange the contents of two sites.  Either may be empty.
        """
        q1 = self._reverse.pop(site1, None)
        q2 = self._reverse.pop(site2, None)
        if q1 is not None:
            self._forward[q1] = site2
            self._reverse[site2] = q1
        if q2 is not None:
            self._forward[q2] = site1
            self._reverse[site1] = q2

    def copy(self) -> "Mapping":
        """
        """
        return Mapping(self._forward)

    def __eq__(self, other) -> bool:
        """
        """
        if not isinstance(other, Mapping):
            return NotImplemented
        return self._forward == other._forward

    def __repr__(self) -> str:
        """
        """
        return "Mapping({})".format(self._forward)


class WeightedInteractionGraph:
    """
    Symmetric lookahead weights between program-qubit pairs.  Only
    pairs sharing a future gate are stored.
    """

    def __init__(self, n_qubits: int, weights: Dict[Tuple[int, int], float]):
        """
        :param n_qubits: Number of program qubits.
        :param weights: Map from (u, v) with u < v to a positive weight.
        """
        self._n_qubits = n_qubits
        self._weights = {}
        for (u, v), w in weights.items():
            if w <= 0:
                raise ValueError("Interaction weights must be positive.")
            self._weights[(min(u, v), max(u, v))] = float(w)

    @property
    def n_qubits(self) -> int:
        """
        """
        return self._n_qubits

    def weight(self, u: int, v: int) -> float:
        """
        w(u, v), 0 for pairs that never interact.
        """
        return self._weights.get((min(u, v), max(u, v)), 0.0)

    def pairs(self) -> List[Tuple[int, int]]:
        """
        """
        return sorted(self._weights)

    def matrix(self) -> np.ndarray:
        """
        Dense symmetric weight matrix with a zero diagonal.
        """
        mat = np.zeros((self._n_qubits, self._n_qubits))
        for (u, v), w in self._weights.items():
            mat[u, v] = w
            mat[v, u] = w
        return mat

    def __len__(self) -> int:
        """
        """
        return len(self._weights)


class ScheduledGate:
    """
    A gate executing at a timestep on concrete grid sites.  Program
    gates keep their qubit operands; router SWAPs carry the sites.
    """

    def __init__(self, gate: Gate, sites: Sequence[int], timestep: int):
        """
        """
        if timestep < 0:
            raise ValueError("Timesteps must be nonnegative.")
        if len(sites) != gate.arity:
            raise ValueError("One site is required per gate operand.")
        self.gate = gate
        self.sites = tuple(int(site) for site in sites)
        self.timestep = int(timestep)

    def __eq__(self, other) -> bool:
        """
        """
        if not isinstance(other, ScheduledGate):
            return NotImplemented
        return (
            self.gate == other.gate
            and self.sites == other.sites
            and self.timestep == other.timestep
        )

    def __repr__(self) -> str:
        """
        """
        return "ScheduledGate(t={}, {!r}, sites={})".format(
            self.timestep, self.gate, self.sites
        )


def swap_gate(site1: int, site2: int) -> Gate:
    """
    Router SWAP exchanging the contents of two sites.
    """
    return Gate(SWAP, (site1, site2), is_swap=True)


class CompiledProgram:
    """
    Timestep-assigned executable program with its initial and final
    mappings.  Metrics are counted when the program is built; the
    verifier recounts them from the schedule.
    """

    def __init__(
        self,
        schedule: List[ScheduledGate],
        initial_mapping: Mapping,
        final_mapping: Mapping,
        grid: GridSpec,
        decomposed: bool = False,
        ideal_no_zones: bool = False,
    ):
        """
        :param schedule: Scheduled gates sorted by timestep.
        :param initial_mapping: Qubit placement before the first
            timestep.
        :param final_mapping: Qubit placement after the last timestep.
        :param grid: Grid the program was compiled for.
        :param decomposed: Whether Toffolis were decomposed before
            mapping.
        :param ideal_no_zones: Whether the schedule ignores restriction
            zones.
        """
        self.schedule = list(schedule)
        self.initial_mapping = initial_mapping
        self.final_mapping = final_mapping
        self.grid = grid
        self.decomposed = decomposed
        self.ideal_no_zones = ideal_no_zones
        self.metrics = count_metrics(self.schedule)

    @property
    def n1(self) -> int:
        """
        """
        return self.metrics["n1"]

    @property
    def n2(self) -> int:
        """
        """
        return self.metrics["n2"]

    @property
    def n3(self) -> int:
        """
        """
        return self.metrics["n3"]

    @property
    def swap_count(self) -> int:
        """
        """
        return self.metrics["swap_count"]

    @property
    def depth(self) -> int:
        """
        """
        return self.metrics["depth"]

    @property
    def gate_count(self) -> int:
        """
        Total gates with every SWAP counted as 3 two-qubit gates.
        """
        return self.n1 + self.n2 + self.n3 + SWAP_CNOTS * self.swap_count

    def timesteps(self) -> List[List[ScheduledGate]]:
        """
        Scheduled gates grouped by timestep.
        """
        steps = [[] for _ in range(self.depth)]
        for op in self.schedule:
            steps[op.timestep].append(op)
        return steps

    def in_use_sites(self) -> frozenset:
        """
        Every site the program touches: the initial placement plus all
        sites visited by scheduled gates.
        """
        sites = set(self.initial_mapping.forward)
        for op in self.schedule:
            sites.update(op.sites)
        return frozenset(sites)

    def __eq__(self, other) -> bool:
        """
        """
        if not isinstance(other, CompiledProgram):
            return NotImplemented
        return (
            self.schedule == other.schedule
            and self.initial_mapping == other.initial_mapping
            and self.final_mapping == other.final_mapping
            and self.grid == other.grid
            and self.decomposed == other.decomposed
            and self.ideal_no_zones == other.ideal_no_zones
        )

    def __repr__(self) -> str:
        """
        """
        return "CompiledProgram(gates={}, depth={}, swaps={})".format(
            self.gate_count, self.depth, self.swap_count
        )


def count_metrics(schedule: Iterable[ScheduledGate]) -> Dict[str, int]:
    """
    Per-arity program gate counts, SWAP count and depth of a schedule.
    """
    metrics = {"n1": 0, "n2": 0, "n3": 0, "swap_count": 0, "depth": 0}
    for op in schedule:
        if op.gate.is_swap:
            metrics["swap_count"] += 1
        else:
            metrics["n{}".format(op.gate.arity)] += 1
        metrics["depth"] = max(metrics["depth"], op.timestep + 1)
    return metrics


def parallelism(cp: CompiledProgram) -> float:
    """
    Average number of scheduled operations per timestep.
    """
    if cp.depth == 0:
        return 0.0
    return len(cp.schedule) / cp.depth


def lookahead_weights(
    c: Circuit, layers: LayerAssignment, current_layer: int
) -> WeightedInteractionGraph:
    """
    Sum e^-(l - l_c) over every operand pair of every gate at layer
    l >= l_c.

    :param c: Circuit.
    :param layers: ASAP layers of ``c``.
    :param current_layer: l_c.
    """
    if current_layer < 0:
        raise ValueError("Current layer must be nonnegative.")
    weights = {}
    for idx, gate in enumerate(c.gates):
        layer = layers[idx]
        if layer < current_layer:
            continue
        contrib = np.exp(-(layer - current_layer))
        for pair in gate.pairs():
            weights[pair] = weights.get(pair, 0.0) + contrib
    return WeightedInteractionGraph(c.n_qubits, weights)


def _hardware(grid: GridSpec, hw: Optional[HardwareState]) -> HardwareState:
    """
    """
    if hw is None:
        return HardwareState(grid)
    if hw.grid != grid:
        raise ValueError("Hardware state belongs to a different grid.")
    return hw


def _nearest_free(site: int, free: np.ndarray, dist: np.ndarray) -> int:
    """
    Free site nearest to ``site``, ties broken by lowest index.
    """
    cand = np.flatnonzero(free)
    order = np.lexsort((cand, fp_nearest(dist[site][cand])))
    return int(cand[order[0]])


def initial_mapping(
    c: Circuit, grid: GridSpec, hw: Optional[HardwareState] = None
) -> Mapping:
    """
    Place program qubits on usable sites.  The heaviest interacting
    pair goes adjacent at the device center.  Other qubits follow in
    descending order of weight to the already placed ones, each on the
    free site minimizing sum_v d(h, phi(v)) * w(u, v).  A qubit with no
    weight to the placed set, and every qubit of a circuit without
    multiqubit gates, takes the free site nearest the center.

    :param c: Circuit to place.
    :param grid: Target grid.
    :param hw: Hardware state whose lost sites must stay empty.
    """
    hw = _hardware(grid, hw)
    n = c.n_qubits
    if n > hw.num_usable:
        raise ValueError(
            "Program of {} qubits does not fit on {} usable sites.".format(
                n, hw.num_usable
            )
        )
    if n == 0:
        return Mapping([])

    dist = grid.distances()
    free = hw.usable_mask()
    center = grid.center_site()
    if not free[center]:
        center = _nearest_free(center, free, dist)
    weights = lookahead_weights(c, asap_layers(c), 0).matrix()
    forward = [-1] * n

    def place(qubit, site):
        forward[qubit] = site
        free[site] = False

    if not weights.any():
        for qubit in range(n):
            place(qubit, _nearest_free(center, free, dist))
        return Mapping(forward)

    upper = np.triu_indices(n, 1)
    best = int(np.argmax(weights[upper]))
    u, v = int(upper[0][best]), int(upper[1][best])
    place(u, center)
    place(v, _nearest_free(center, free, dist))
    mapped = [u, v]

    while len(mapped) < n:
        unmapped = [q for q in range(n) if forward[q] < 0]
        conn = weights[np.ix_(unmapped, mapped)].sum(axis=1)
        # weights of late layers fall below the rounding grain, so
        # compare relative values
        if conn.max() > 0:
            conn = conn / conn.max()
        qubit = unmapped[int(np.argmax(fp_nearest(conn)))]
        w = weights[qubit, mapped]
        if not w.any():
            place(qubit, _nearest_free(center, free, dist))
        else:
            w = w / w.sum()
            scores = fp_nearest(dist[:, [forward[q] for q in mapped]] @ w)
            scores[~free] = np.inf
            place(qubit, int(np.argmin(scores)))
        mapped.append(qubit)

    logger.debug("initial mapping %s", forward)
    return Mapping(forward)


def swap_candidates(
    sites: Sequence[int], hw: HardwareState
) -> List[Tuple[int, int]]:
    """
    Legal SWAP moves for a gate whose operands sit on ``sites``.  For
    each operand position k, a target h must be usable, within MID of
    ``sites[k]``, not another operand site and strictly closer than
    ``sites[k]`` to the partner (two operands) or to the centroid of
    the other two operands (three operands).

    :returns: (k, h) pairs ordered by k then h.
    """
    grid = hw.grid
    coords = [grid.site_coord(site) for site in sites]
    cands = []
    for k, site in enumerate(sites):
        others = [coord for j, coord in enumerate(coords) if j != k]
        if not others:
            continue
        ref = list_center2(others)
        cur = coords[k].distance(ref)
        for h in sites_within(site, grid.mid, hw, exclude=sites):
            if fp_ltp(grid.site_coord(h).distance(ref), cur):
                cands.append((k, h))
    return cands


def _walk_targets(
    fixed: Sequence[int], hw: HardwareState, blocked: Iterable[int]
) -> List[int]:
    """
    Usable sites within MID of every site in ``fixed``, excluding
    ``blocked``.
    """
    dists = hw.grid.distances()[:, list(fixed)]
    close = np.all(fp_nearest(dists) <= fp_nearest(hw.grid.mid), axis=1)
    blocked = set(blocked) | set(fixed)
    return [
        int(site)
        for site in np.flatnonzero(close)
        if hw.is_usable(int(site)) and int(site) not in blocked
    ]


def _anchor_position(sites: Sequence[int], dist: np.ndarray) -> int:
    """
    Operand position with the smallest total distance to the others.
    """
    return _anchor_order(sites, dist)[0]


def _anchor_order(sites: Sequence[int], dist: np.ndarray) -> List[int]:
    """
    Operand positions by total distance to the others, ties by position.
    """
    totals = [
        fp_nearest(sum(dist[site, other] for other in sites))
        for site in sites
    ]
    return [int(k) for k in np.argsort(totals, kind="stable")]


class _Release:
    """
    Walk plan for a gate the scoring heuristic cannot unblock: every
    operand except the anchor walks a shortest path until it is within
    MID of the anchor and of the operands already walked.
    """

    def __init__(self, gate_idx: int, anchor: int, movers: List[int]):
        """
        """
        self.gate_idx = gate_idx
        self.anchor = anchor
        self.movers = movers
        self.placed = []
        self.path = None
        self.step = 0


class _Router:
    """
    Frontier router.  Each timestep first schedules every ready gate
    that is interactable and fits, then tries one SWAP per blocked
    gate.  Weights are recomputed whenever the frontier advances.
    """

    def __init__(
        self,
        c: Circuit,
        hw: HardwareState,
        m0: Mapping,
        layers: LayerAssignment,
    ):
        """
        """
        self.gates = c.gates
        self.n_qubits = c.n_qubits
        self.hw = hw
        self.grid = hw.grid
        self.dist = self.grid.distances()
        self.layers = layers
        self.mapping = m0.copy()
        preds = c.predecessors()
        self.n_preds = [len(p) for p in preds]
        self.succs = [[] for _ in self.gates]
        for idx, pred in enumerate(preds):
            for j in pred:
                self.succs[j].append(idx)
        self.ready = [i for i, n in enumerate(self.n_preds) if n == 0]
        self.pending = {}
        for idx in range(len(self.gates)):
            self.pending.setdefault(layers[idx], set()).add(idx)
        self.schedule = []
        self.weights = None
        self.release = None

    def sites(self, idx: int) -> Tuple[int, ...]:
        """
        """
        return tuple(self.mapping.site_of(q) for q in self.gates[idx].operands)

    def interactable(self, sites: Sequence[int]) -> bool:
        """
        """
        return all(
            fp_lep(self.dist[a, b], self.grid.mid)
            for a, b in combinations(sites, 2)
        )

    @staticmethod
    def fits(sites, used, zones, zone) -> bool:
        """
        """
        if any(site in used for site in sites):
            return False
        return not any(conflicts(zone, other) for other in zones)

    def place(self, gate, sites, t, used, zones) -> bool:
        """
        Schedule ``gate`` on ``sites`` at ``t`` if it fits.
        """
        zone = zone_of(sites, self.grid)
        if not self.fits(sites, used, zones, zone):
            return False
        self.schedule.append(ScheduledGate(gate, sites, t))
        used.update(sites)
        zones.append(zone)
        if gate.is_swap:
            self.mapping.swap_sites(*sites)
        return True

    def window_weights(self) -> np.ndarray:
        """
        Lookahead weights of the unexecuted gates, counted from the
        lowest pending layer and truncated at the lookahead horizon.
        """
        if self.weights is not None:
            return self.weights
        weights = np.zeros((self.n_qubits, self.n_qubits))
        current = min(self.pending)
        for layer in range(current, current + LOOKAHEAD_HORIZON + 1):
            contrib = np.exp(-(layer - current))
            for idx in self.pending.get(layer, ()):
                for u, v in self.gates[idx].pairs():
                    weights[u, v] += contrib
                    weights[v, u] += contrib
        self.weights = weights
        return weights

    def swap_score(self, u: int, h: int, weights: np.ndarray) -> float:
        """
        Weighted distance reduction of moving ``u`` to ``h`` plus that
        of the qubit displaced from ``h`` (0 for an empty site).
        """
        pos = self.mapping.forward
        su = pos[u]
        x = self.mapping.qubit_at(h)
        du = self.dist[su, pos]
        dh = self.dist[h, pos]
        wu = weights[u].copy()
        wu[u] = 0.0
        if x is not None:
            wu[x] = 0.0
        score = float(np.dot(du - dh, wu))
        if x is not None:
            wx = weights[x].copy()
            wx[u] = 0.0
            wx[x] = 0.0
            score += float(np.dot(dh - du, wx))
        return score

    def best_swap(self, idx: int, weights: np.ndarray):
        """
        Highest scoring legal SWAP for a blocked gate as (site, h),
        ties by lowest h then lowest qubit.  None without candidates.
        """
        sites = self.sites(idx)
        operands = self.gates[idx].operands
        best = None
        best_key = None
        for k, h in swap_candidates(sites, self.hw):
            u = operands[k]
            score = fp_nearest(self.swap_score(u, h, weights))
            key = (-score, h, u)
            if best_key is None or key < best_key:
                best_key = key
                best = (sites[k], h)
        return best

    def enter_release(self, idx: int) -> None:
        """
        """
        sites = self.sites(idx)
        operands = list(self.gates[idx].operands)
        anchor = operands.pop(_anchor_position(sites, self.dist))
        self.release = _Release(idx, anchor, operands)
        self.weights = None
        warn(
            "Router could not make progress on gate {} and is walking "
            "its operands along shortest paths.".format(idx)
        )

    def release_step(self, t, used, zones) -> bool:
        """
        Advance the release walk by one hop.  Returns True if a SWAP
        was scheduled.
        """
        rel = self.release
        while True:
            if not rel.movers:
                self.release = None
                return False
            mover = rel.movers[0]
            if rel.path is None:
                fixed = [self.mapping.site_of(q) for q in [rel.anchor] + rel.placed]
                others = [self.mapping.site_of(q) for q in rel.movers[1:]]
                rel.path = shortest_path(
                    self.hw,
                    self.mapping.site_of(mover),
                    _walk_targets(fixed, self.hw, others),
                    blocked=fixed + others,
                )
                rel.step = 0
                if rel.path is None:
                    raise RuntimeError(
                        "No path brings qubit {} within interaction "
                        "distance of its partners.".format(mover)
                    )
            if rel.step == len(rel.path) - 1:
                rel.placed.append(rel.movers.pop(0))
                rel.path = None
                continue
            break
        hop = (rel.path[rel.step], rel.path[rel.step + 1])
        if self.place(swap_gate(*hop), hop, t, used, zones):
            rel.step += 1
            return True
        return False

    def complete(self, idx: int) -> None:
        """
        """
        self.ready.remove(idx)
        layer = self.layers[idx]
        self.pending[layer].discard(idx)
        if not self.pending[layer]:
            del self.pending[layer]
        for succ in self.succs[idx]:
            self.n_preds[succ] -= 1
            if self.n_preds[succ] == 0:
                self.ready.append(succ)
        self.ready.sort()
        self.weights = None
        if self.release is not None and self.release.gate_idx == idx:
            self.release = None

    def run(self) -> List[ScheduledGate]:
        """
        """
        t = 0
        stall = 0
        idle = 0
        remaining = len(self.gates)
        while remaining:
            used = set()
            zones = []
            done = []
            blocked = []
            for idx in list(self.ready):
                sites = self.sites(idx)
                if not self.interactable(sites):
                    blocked.append(idx)
                elif self.place(self.gates[idx], sites, t, used, zones):
                    done.append(idx)

            swapped = False
            if self.release is not None:
                swapped = self.release_step(t, used, zones)
            elif blocked:
                weights = self.window_weights()
                for idx in blocked:
                    best = self.best_swap(idx, weights)
                    if best is not None and self.place(
                        swap_gate(*best), best, t, used, zones
                    ):
                        swapped = True

            if not done and not swapped:
                idle += 1
                if not blocked or idle > 2:
                    raise RuntimeError(
                        "Routing deadlock at timestep {}. This is a "
                        "bug.".format(t)
                    )
                if self.release is None:
                    self.enter_release(blocked[0])
                continue
            idle = 0

            for idx in done:
                self.complete(idx)
            remaining -= len(done)
            stall = 0 if done else stall + 1
            if (
                stall >= self.grid.num_sites
                and self.release is None
                and remaining
            ):
                stuck = [
                    idx
                    for idx in self.ready
                    if not self.interactable(self.sites(idx))
                ]
                if stuck:
                    self.enter_release(stuck[0])
                stall = 0
            t += 1
        return self.schedule


def route_and_schedule(
    c: Circuit,
    grid: GridSpec,
    m0: Mapping,
    hw: Optional[HardwareState] = None,
    layers: Optional[LayerAssignment] = None,
) -> CompiledProgram:
    """
    Route and schedule ``c`` starting from placement ``m0``.

    :param c: Circuit to route.
    :param grid: Target grid.
    :param m0: Initial placement covering every program qubit.
    :param hw: Hardware state whose lost sites must stay empty.
    :param layers: ASAP layers of ``c``, computed when omitted.
    """
    hw = _hardware(grid, hw)
    if m0.n_qubits != c.n_qubits:
        raise ValueError(
            "Mapping covers {} qubits but the circuit has {}.".format(
                m0.n_qubits, c.n_qubits
            )
        )
    for site in m0.forward:
        grid.site_index(site)
        if not hw.is_usable(site):
            raise ValueError("Mapping places a qubit on lost site {}.".format(site))
    if c.arity_counts()[2] and fp_ltp(grid.mid, TOFFOLI_MIN_MID):
        raise ValueError(
            "Three-qubit gates cannot execute with a max interaction "
            "distance below sqrt(2); decompose them first."
        )
    if layers is None:
        layers = asap_layers(c)
    router = _Router(c, hw, m0, layers)
    schedule = router.run()
    return CompiledProgram(schedule, m0.copy(), router.mapping.copy(), grid)


def retime(schedule: Sequence[ScheduledGate]) -> List[ScheduledGate]:
    """
    Reassign timesteps as soon as possible with only site
    dependencies: an op runs one step after the latest earlier op
    touching any of its sites.  Op order and content are unchanged.
    """
    last = {}
    out = []
    for op in sorted(schedule, key=lambda op: op.timestep):
        t = 1 + max(last.get(site, -1) for site in op.sites)
        for site in op.sites:
            last[site] = t
        out.append(ScheduledGate(op.gate, op.sites, t))
    out.sort(key=lambda op: op.timestep)
    return out


def compile_circuit(
    c: Circuit,
    grid: GridSpec,
    decompose_toffolis: bool = False,
    ideal_no_zones: bool = False,
    hw: Optional[HardwareState] = None,
) -> CompiledProgram:
    """
    Compile a circuit for a grid.

    Three-qubit gates are decomposed automatically (with a warning)
    when the MID is below sqrt(2), since no three sites are then
    pairwise interactable.

    :param c: Circuit to compile.
    :param grid: Target grid.
    :param decompose_toffolis: Replace Toffolis by 6-CNOT circuits
        before mapping.
    :param ideal_no_zones: Schedule the routed program ignoring
        restriction zones.  Gate counts are identical to the normal
        compilation.
    :param hw: Hardware state whose lost sites must stay empty.
    """
    hw = _hardware(grid, hw)
    has_3q = c.arity_counts()[2] > 0
    decomposed = False
    if has_3q and (
        decompose_toffolis or fp_ltp(grid.mid, TOFFOLI_MIN_MID)
    ):
        if not decompose_toffolis:
            warn(
                "Max interaction distance {:g} cannot host three-qubit "
                "gates. Decomposing Toffolis.".format(grid.mid)
            )
        c = toffoli_decomposition(c)
        decomposed = True
    layers = asap_layers(c)
    m0 = initial_mapping(c, grid, hw)
    cp = route_and_schedule(c, grid, m0, hw, layers)
    cp.decomposed = decomposed
    if ideal_no_zones:
        cp = CompiledProgram(
            retime(cp.schedule),
            cp.initial_mapping,
            cp.final_mapping,
            grid,
            decomposed=decomposed,
            ideal_no_zones=True,
        )
    logger.info(
        "compiled %d qubits on %r: gates=%d depth=%d swaps=%d",
        c.n_qubits,
        grid,
        cp.gate_count,
        cp.depth,
        cp.swap_count,
    )
    return cp


def verify_report(
    cp: CompiledProgram,
    original: Circuit,
    grid: GridSpec,
    check_zones: Optional[bool] = None,
    hw: Optional[HardwareState] = None,
) -> List[str]:
    """
    Check a compiled program against its source circuit and return
    a description of every violation found (empty when valid).

    :param cp: Compiled program.
    :param original: Circuit before any Toffoli decomposition.
    :param grid: Grid providing MID and zone geometry.
    :param check_zones: Check restriction-zone conflicts per
        timestep.  Defaults to False only for no-zone programs.
    :param hw: When given, every scheduled site must be usable.
    """
    if check_zones is None:
        check_zones = not cp.ideal_no_zones
    problems = []
    expected = toffoli_decomposition(original) if cp.decomposed else original
    gates = expected.gates

    if cp.initial_mapping.n_qubits != expected.n_qubits:
        return ["initial mapping covers the wrong number of qubits"]
    for site in cp.initial_mapping.forward:
        if not 0 <= site < grid.num_sites:
            return ["initial mapping site {} outside grid".format(site)]

    for idx, op in enumerate(cp.schedule):
        if idx and op.timestep < cp.schedule[idx - 1].timestep:
            problems.append("schedule not sorted by timestep")
            break

    steps = {}
    for op in cp.schedule:
        steps.setdefault(op.timestep, []).append(op)
    for t in sorted(steps):
        seen = set()
        for op in steps[t]:
            if any(not 0 <= site < grid.num_sites for site in op.sites):
                problems.append("t={}: site outside grid".format(t))
                return problems
            if seen & set(op.sites):
                problems.append("t={}: site used twice".format(t))
            seen.update(op.sites)
            if hw is not None and not all(hw.is_usable(s) for s in op.sites):
                problems.append("t={}: gate on lost site".format(t))
            try:
                if not interactable(op.sites, grid):
                    problems.append(
                        "t={}: {} on {} exceeds MID".format(
                            t, op.gate.label, op.sites
                        )
                    )
            except ValueError:
                problems.append("t={}: duplicate operand sites".format(t))
        if check_zones:
            zones = [zone_of(op.sites, grid) for op in steps[t]]
            for za, zb in combinations(zones, 2):
                if conflicts(za, zb):
                    problems.append("t={}: restriction zones overlap".format(t))
                    break

    preds = expected.predecessors()
    n_preds = [len(p) for p in preds]
    succs = [[] for _ in gates]
    for idx, pred in enumerate(preds):
        for j in pred:
            succs[j].append(idx)
    done = [False] * len(gates)
    waiting = {i for i, n in enumerate(n_preds) if n == 0}
    mapping = cp.initial_mapping.copy()
    for t in sorted(steps):
        ready = {(gates[i].label, gates[i].operands): i for i in waiting}
        finished = []
        for op in steps[t]:
            if op.gate.is_swap:
                continue
            qubits = tuple(mapping.qubit_at(site) for site in op.sites)
            key = (op.gate.label, qubits)
            if None in qubits or key not in ready or qubits != op.gate.operands:
                problems.append(
                    "t={}: {} on {} matches no ready gate".format(
                        t, op.gate.label, op.sites
                    )
                )
                continue
            idx = ready.pop(key)
            waiting.discard(idx)
            done[idx] = True
            finished.append(idx)
        for op in steps[t]:
            if op.gate.is_swap:
                mapping.swap_sites(*op.sites)
        for idx in finished:
            for succ in succs[idx]:
                n_preds[succ] -= 1
                if n_preds[succ] == 0:
                    waiting.add(succ)

    missing = done.count(False)
    if missing:
        problems.append("{} gates never executed".format(missing))
    if mapping != cp.final_mapping:
        problems.append("replayed mapping differs from final mapping")
    if count_metrics(cp.schedule) != cp.metrics:
        problems.append("metrics do not match the schedule")
    return problems


def verify(
    cp: CompiledProgram,
    original: Circuit,
    grid: GridSpec,
    check_zones: Optional[bool] = None,
    hw: Optional[HardwareState] = None,
) -> bool:
    """
    True iff ``verify_report`` finds nothing wrong.
    """
    problems = verify_report(cp, original, grid, check_zones, hw)
    for problem in problems:
        logger.debug("verify: %s", problem)
    return not problems


def apply_overlay(cp: CompiledProgram, overlay: Dict[int, int]) -> CompiledProgram:
    """
    The program as physically executed after virtual remapping: every
    compiled site s runs on ``overlay.get(s, s)``.

    :param cp: Compiled program.
    :param overlay: Injective map from compiled to physical sites.
    """

    def phys(site):
        return overlay.get(site, site)

    schedule = []
    for op in cp.schedule:
        sites = tuple(phys(site) for site in op.sites)
        gate = swap_gate(*sites) if op.gate.is_swap else op.gate
        schedule.append(ScheduledGate(gate, sites, op.timestep))
    return CompiledProgram(
        schedule,
        Mapping([phys(s) for s in cp.initial_mapping.forward]),
        Mapping([phys(s) for s in cp.final_mapping.forward]),
        cp.grid,
        decomposed=cp.decomposed,
        ideal_no_zones=cp.ideal_no_zones,
    )


def out_of_range_ops(
    cp: CompiledProgram, grid: GridSpec, overlay: Optional[Dict[int, int]] = None
) -> List[int]:
    """
    Schedule indices of ops whose (overlaid) operand sites are not
    pairwise within the grid's MID.
    """
    ops = []
    pairs = []
    for idx, op in enumerate(cp.schedule):
        for a, b in combinations(op.sites, 2):
            ops.append(idx)
            pairs.append((a, b))
    if not pairs:
        return []
    pairs = np.array(pairs)
    if overlay:
        lut = np.arange(grid.num_sites)
        for src, dst in overlay.items():
            lut[src] = dst
        pairs = lut[pairs]
    dists = grid.distances()[pairs[:, 0], pairs[:, 1]]
    far = fp_nearest(dists) > fp_nearest(grid.mid)
    return sorted(set(np.array(ops)[far].tolist()))


def _walk_operands(
    sites: Sequence[int], hw: HardwareState, anchor: int
) -> Optional[Tuple[List[int], List[Tuple[int, int]]]]:
    """
    Walk every operand except ``anchor`` along a shortest path until
    it is within MID of the operands already placed.  A walk only ends
    on a site that still leaves the remaining operands a common spot.

    :returns: (final operand sites, forward SWAP hops), or None.
    """
    sites = list(sites)
    fixed = [sites[anchor]]
    movers = [k for k in range(len(sites)) if k != anchor]
    forward = []
    for pos, k in enumerate(movers):
        others = [sites[j] for j in movers[pos + 1:]]
        targets = _walk_targets(fixed, hw, others)
        if others:
            targets = [
                t for t in targets if _walk_targets(fixed + [t], hw, others)
            ]
        path = shortest_path(hw, sites[k], targets, blocked=fixed + others)
        if path is None:
            return None
        forward.extend(zip(path[:-1], path[1:]))
        sites[k] = path[-1]
        fixed.append(path[-1])
    return sites, forward


def reroute_program(
    cp: CompiledProgram, hw: HardwareState
) -> Optional[Tuple[CompiledProgram, int]]:
    """
    Make every op of ``cp`` interactable on ``hw`` by walking operands
    along shortest paths of usable sites, running the op and walking
    back, so the mapping after each op is unchanged.  Timesteps are
    reassigned by site dependencies only.  Every operand is tried as
    the anchor, closest first, and the walk with fewest hops is kept.

    :returns: The rerouted program and the number of SWAPs added
        (forward and reverse), or None if some op has no path.
    """
    grid = hw.grid
    dist = grid.distances()
    ops = []
    added = 0
    for op in cp.schedule:
        if interactable(op.sites, grid):
            ops.append(op)
            continue
        walks = [
            _walk_operands(op.sites, hw, anchor)
            for anchor in _anchor_order(op.sites, dist)
        ]
        walks = [walk for walk in walks if walk is not None]
        if not walks:
            return None
        sites, forward = min(walks, key=lambda walk: len(walk[1]))
        gate = swap_gate(*sites) if op.gate.is_swap else op.gate
        ops.extend(ScheduledGate(swap_gate(*hop), hop, op.timestep) for hop in forward)
        ops.append(ScheduledGate(gate, sites, op.timestep))
        ops.extend(
            ScheduledGate(swap_gate(*hop), hop, op.timestep)
            for hop in reversed(forward)
        )
        added += 2 * len(forward)
    rerouted = CompiledProgram(
        retime(ops),
        cp.initial_mapping.copy(),
        cp.final_mapping.copy(),
        cp.grid,
        decomposed=cp.decomposed,
        ideal_no_zones=cp.ideal_no_zones,
    )
    return rerouted, added


def program_to_text(cp: CompiledProgram) -> str:
    """
    Serialize to the ``naqc-sched v1`` text format.
    """
    grid = cp.grid
    lines = [
        SCHED_HEADER,
        "grid {} {} {!r} {!r}".format(
            grid.width, grid.height, grid.mid, grid.zone_divisor
        ),
        "options decomposed={:d} ideal_no_zones={:d}".format(
            cp.decomposed, cp.ideal_no_zones
        ),
        "mapping {}".format(
            ",".join(str(site) for site in cp.initial_mapping.forward)
        ).rstrip(),
    ]
    for op in cp.schedule:
        lines.append(
            "t={} {} {}{}".format(
                op.timestep,
                op.gate.label,
                ",".join(str(site) for site in op.sites),
                " swap" if op.gate.is_swap else "",
            )
        )
    return "\n".join(lines) + "\n"


def _int_list(text: str, lineno: int) -> List[int]:
    """
    """
    if not text:
        return []
    try:
        return [int(tok) for tok in text.split(",")]
    except ValueError:
        raise ValueError(
            "line {}: expected comma-separated integers, got '{}'.".format(
                lineno, text
            )
        )


def program_from_text(text: str) -> CompiledProgram:
    """
    Parse the ``naqc-sched v1`` text format.  Program gate operands
    are recovered by replaying the SWAPs from the initial mapping.
    """
    lines = [
        (num, line.strip())
        for num, line in enumerate(text.splitlines(), start=1)
        if line.strip() and not line.strip().startswith("#")
    ]
    if len(lines) < 4 or lines[0][1] != SCHED_HEADER:
        lineno = lines[0][0] if lines else 1
        raise ValueError(
            "line {}: expected header '{}' followed by grid, options and "
            "mapping lines.".format(lineno, SCHED_HEADER)
        )

    lineno, line = lines[1]
    parts = line.split()
    try:
        if len(parts) != 5 or parts[0] != "grid":
            raise ValueError("expected 'grid W H MID DIVISOR'")
        grid = GridSpec(int(parts[1]), int(parts[2]), float(parts[3]), float(parts[4]))
    except ValueError as err:
        raise ValueError("line {}: {}".format(lineno, err))

    lineno, line = lines[2]
    parts = line.split()
    flags = {}
    for part in parts[1:]:
        key, _, val = part.partition("=")
        flags[key] = val
    if (
        not parts
        or parts[0] != "options"
        or set(flags) != {"decomposed", "ideal_no_zones"}
        or not all(val in ("0", "1") for val in flags.values())
    ):
        raise ValueError(
            "line {}: expected 'options decomposed=<0|1> "
            "ideal_no_zones=<0|1>'.".format(lineno)
        )

    lineno, line = lines[3]
    parts = line.split()
    if not parts or parts[0] != "mapping" or len(parts) > 2:
        raise ValueError("line {}: expected 'mapping s0,s1,...'.".format(lineno))
    try:
        m0 = Mapping(_int_list(parts[1] if len(parts) == 2 else "", lineno))
        for site in m0.forward:
            grid.site_index(site)
    except ValueError as err:
        if str(err).startswith("line "):
            raise
        raise ValueError("line {}: {}".format(lineno, err))

    mapping = m0.copy()
    schedule = []
    for lineno, line in lines[4:]:
        parts = line.split()
        if len(parts) not in (3, 4) or not parts[0].startswith("t="):
            raise ValueError(
                "line {}: expected 't=<step> GATE s0[,s1[,s2]] [swap]'.".format(
                    lineno
                )
            )
        is_swap = len(parts) == 4
        if is_swap and parts[3] != "swap":
            raise ValueError("line {}: unknown flag '{}'.".format(lineno, parts[3]))
        if is_swap and parts[1] != SWAP:
            raise ValueError(
                "line {}: SWAP lines use the label 'swap'.".format(lineno)
            )
        sites = _int_list(parts[2], lineno)
        try:
            t = int(parts[0][2:])
            for site in sites:
                grid.site_index(site)
            if schedule and t < schedule[-1].timestep:
                raise ValueError("timesteps must be nondecreasing")
            if is_swap:
                gate = swap_gate(*sites)
                mapping.swap_sites(*sites)
            else:
                qubits = [mapping.qubit_at(site) for site in sites]
                if None in qubits:
                    raise ValueError("gate on a site holding no qubit")
                gate = Gate(parts[1], qubits)
            schedule.append(ScheduledGate(gate, sites, t))
        except (ValueError, TypeError) as err:
            raise ValueError("line {}: {}".format(lineno, err))

    return CompiledProgram(
        schedule,
        m0,
        mapping,
        grid,
        decomposed=flags["decomposed"] == "1",
        ideal_no_zones=flags["ideal_no_zones"] == "1",
    )


def write_program(cp: CompiledProgram, fpath: str) -> None:
    """
    Write a compiled program file.
    """
    with open(fpath, "w") as fout:
        fout.write(program_to_text(cp))


def read_program(fpath: str) -> CompiledProgram:
    """
    Read a compiled program file.
    """
    with open(fpath) as fin:
        return program_from_text(fin.read())
