"""
Analytic program success model: the probability that no gate fails
times the probability that no decoherence error occurs while the
program runs.
"""

import logging
from typing import Dict, List, Optional, Sequence
import numpy as np
from naqc.circuit import benchmark_sizes, build_benchmark
from naqc.compiler import CompiledProgram, compile_circuit
from naqc.const import SUCCESS_THRESHOLD, SWAP_CNOTS
from naqc.fp import fp_nearest
from naqc.topology import GridSpec

logger = logging.getLogger(__name__)

FIDELITY_HEADER = [
    "benchmark",
    "size",
    "mid",
    "p2",
    "gate_count",
    "depth",
    "swaps",
    "success",
]

MODES = ("ground", "full")


class ErrorParams:
    """
    Gate success probabilities, coherence times and gate durations.
    The three-qubit success probability defaults to p2**4, which lies
    between the 6-CNOT decomposition (p2**6) and a single two-qubit
    gate.
    """

    def __init__(
        self,
        p1: float = 0.999,
        p2: float = 0.965,
        p3: Optional[float] = None,
        t1_ground: float = 1.0,
        t2_ground: float = 1.0,
        t1_excited: float = 1e-4,
        t2_excited: float = 1e-4,
        dur1: float = 1e-6,
        dur2: float = 1e-6,
        dur3: float = 1e-6,
    ):
        """
        :param p1: Single-qubit gate success probability.
        :param p2: Two-qubit gate success probability.
        :param p3: Three-qubit gate success probability.  None ties it
            to p2**4.
        :param t1_ground: Ground-state T1 in seconds.
        :param t2_ground: Ground-state T2 in seconds.
        :param t1_excited: Excited-state T1 in seconds.  Only used in
            'full' mode.
        :param t2_excited: Excited-state T2 in seconds.  Only used in
            'full' mode.
        :param dur1: Single-qubit gate duration in seconds.
        :param dur2: Two-qubit gate duration in seconds.
        :param dur3: Three-qubit gate duration in seconds.
        """
        for name, val in (("p1", p1), ("p2", p2), ("p3", p3)):
            if val is not None and not 0 <= val <= 1:
                raise ValueError(
                    "{} must be a probability, got {}.".format(name, val)
                )
        for name, val in (
            ("t1_ground", t1_ground),
            ("t2_ground", t2_ground),
            ("t1_excited", t1_excited),
            ("t2_excited", t2_excited),
        ):
            if val <= 0:
                raise ValueError("{} must be positive.".format(name))
        for name, val in (("dur1", dur1), ("dur2", dur2), ("dur3", dur3)):
            if val < 0:
                raise ValueError("{} must be nonnegative.".format(name))
        self.p1 = p1
        self.p2 = p2
        self._p3 = p3
        self.t1_ground = t1_ground
        self.t2_ground = t2_ground
        self.t1_excited = t1_excited
        self.t2_excited = t2_excited
        self.dur1 = dur1
        self.dur2 = dur2
        self.dur3 = dur3

    @property
    def p3(self) -> float:
        """
        """
        if self._p3 is None:
            return self.p2 ** 4
        return self._p3

    def with_p2(
        self, p2: float, p3_exponent: Optional[float] = None
    ) -> "ErrorParams":
        """
        Copy with a new two-qubit success probability.  With
        ``p3_exponent`` the three-qubit probability becomes
        p2**p3_exponent; otherwise an explicit p3 is kept and a tied
        one follows p2.
        """
        p3 = self._p3 if p3_exponent is None else p2 ** p3_exponent
        return ErrorParams(
            self.p1,
            p2,
            p3,
            self.t1_ground,
            self.t2_ground,
            self.t1_excited,
            self.t2_excited,
            self.dur1,
            self.dur2,
            self.dur3,
        )

    def duration(self, arity: int, is_swap: bool = False) -> float:
        """
        Duration of one op.  A SWAP lasts three two-qubit gates.
        """
        if is_swap:
            return SWAP_CNOTS * self.dur2
        return (self.dur1, self.dur2, self.dur3)[arity - 1]

    def as_dict(self) -> Dict[str, Optional[float]]:
        """
        """
        return {
            "p1": self.p1,
            "p2": self.p2,
            "p3": self._p3,
            "t1_ground": self.t1_ground,
            "t2_ground": self.t2_ground,
            "t1_excited": self.t1_excited,
            "t2_excited": self.t2_excited,
            "dur1": self.dur1,
            "dur2": self.dur2,
            "dur3": self.dur3,
        }


def ground_time(cp: CompiledProgram, ep: ErrorParams) -> float:
    """
    Program wall time: the slowest op of every timestep, summed.
    """
    return float(
        sum(
            max(ep.duration(op.gate.arity, op.gate.is_swap) for op in step)
            for step in cp.timesteps()
            if step
        )
    )


def excited_time(cp: CompiledProgram, ep: ErrorParams) -> float:
    """
    Time spent with some qubit excited: the slowest multiqubit op of
    every timestep that has one, summed.
    """
    total = 0.0
    for step in cp.timesteps():
        durs = [
            ep.duration(op.gate.arity, op.gate.is_swap)
            for op in step
            if op.gate.arity > 1
        ]
        if durs:
            total += max(durs)
    return total


def success_probability(
    cp: CompiledProgram, ep: ErrorParams, mode: str = "ground"
) -> float:
    """
    prod_i p_i**n_i * exp(-dg/T1g - dg/T2g), with every SWAP counted as
    three two-qubit gates.  'full' mode also applies the excited-state
    factor exp(-de/T1e - de/T2e).

    :param cp: Compiled program.
    :param ep: Error parameters.
    :param mode: 'ground' or 'full'.
    """
    if mode not in MODES:
        raise ValueError(
            "Invalid success mode '{}'. Valid modes are {}.".format(
                mode, ", ".join(MODES)
            )
        )
    n2 = cp.n2 + SWAP_CNOTS * cp.swap_count
    gate_success = ep.p1 ** cp.n1 * ep.p2 ** n2 * ep.p3 ** cp.n3
    dg = ground_time(cp, ep)
    exponent = -dg / ep.t1_ground - dg / ep.t2_ground
    if mode == "full":
        de = excited_time(cp, ep)
        exponent += -de / ep.t1_excited - de / ep.t2_excited
    return float(gate_success * np.exp(exponent))


def swap_budget(p2: float, fraction: float = 0.5) -> Optional[int]:
    """
    Largest number of added SWAPs that keeps the success probability
    at least ``fraction`` of its loss-free value.  None when p2 is 1
    and SWAPs are free.
    """
    if not 0 < p2 <= 1:
        raise ValueError("p2 must be in (0, 1], got {}.".format(p2))
    if not 0 < fraction < 1:
        raise ValueError("fraction must be in (0, 1), got {}.".format(fraction))
    if p2 == 1:
        return None
    budget = np.log(fraction) / (SWAP_CNOTS * np.log(p2))
    return int(np.floor(fp_nearest(budget)))


def sweep_two_qubit_error(
    benchmark: str,
    size: int,
    grid: GridSpec,
    p2_values: Sequence[float],
    base: Optional[ErrorParams] = None,
    p3_exponent: Optional[float] = None,
    seed: int = 0,
    density: float = 0.1,
    decompose_toffolis: bool = False,
    mode: str = "ground",
) -> List[dict]:
    """
    Compile a benchmark once and evaluate its success probability for
    each two-qubit success probability.

    :returns: One row per p2 keyed by ``FIDELITY_HEADER`` plus
        'error_rate' (1 - success).
    """
    if base is None:
        base = ErrorParams()
    for p2 in p2_values:
        if not 0 < p2 <= 1:
            raise ValueError("p2 values must be in (0, 1], got {}.".format(p2))
    c = build_benchmark(benchmark, size, seed=seed, density=density)
    cp = compile_circuit(c, grid, decompose_toffolis=decompose_toffolis)
    rows = []
    for p2 in p2_values:
        success = success_probability(cp, base.with_p2(p2, p3_exponent), mode)
        rows.append(
            {
                "benchmark": benchmark,
                "size": size,
                "mid": grid.mid,
                "p2": p2,
                "gate_count": cp.gate_count,
                "depth": cp.depth,
                "swaps": cp.swap_count,
                "success": success,
                "error_rate": 1 - success,
            }
        )
    return rows


def max_runnable_size(
    benchmark: str,
    grid: GridSpec,
    ep: ErrorParams,
    threshold: float = SUCCESS_THRESHOLD,
    seed: int = 0,
    density: float = 0.1,
    decompose_toffolis: bool = False,
    max_size: Optional[int] = None,
    overshoot: int = 3,
) -> int:
    """
    Largest benchmark size whose compiled success probability is at
    least ``threshold``, or 0 if none is.

    Success usually falls with size, so sizes are bisected first.
    The ``overshoot`` valid sizes above the bisection result are then
    compiled too; if any of them passes, success was not monotone and
    every size is scanned from the top.

    :param benchmark: Benchmark name.
    :param grid: Target grid.  Sizes never exceed its site count.
    :param ep: Error parameters.
    :param threshold: Success threshold in (0, 1).
    :param max_size: Optional cap below the site count.
    :param overshoot: Number of sizes above the bisection result checked.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must be in (0, 1), got {}.".format(threshold))
    limit = grid.num_sites if max_size is None else min(max_size, grid.num_sites)
    sizes = benchmark_sizes(benchmark, limit)
    cache = {}

    def runs(size):
        if size not in cache:
            c = build_benchmark(benchmark, size, seed=seed, density=density)
            cp = compile_circuit(c, grid, decompose_toffolis=decompose_toffolis)
            cache[size] = success_probability(cp, ep) >= threshold
            logger.debug(
                "%s size %d success %s", benchmark, size, cache[size]
            )
        return cache[size]

    lo, hi = -1, len(sizes)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if runs(sizes[mid]):
            lo = mid
        else:
            hi = mid

    if any(runs(size) for size in sizes[lo + 1 : lo + 1 + overshoot]):
        for size in reversed(sizes):
            if runs(size):
                return size
    return sizes[lo] if lo >= 0 else 0
