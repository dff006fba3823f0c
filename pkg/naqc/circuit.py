"""
Gate-level circuit representation and the parametric benchmarks.

A circuit is an ordered list of gates over ``n_qubits`` program
qubits.  Two gates depend on each other iff they share an operand, so
the list order is always a valid linearization of the dependency DAG
and layering only needs a single pass.  Gate labels are symbolic; no
unitary semantics are attached to them anywhere in the package.

Benchmark constructions (qubit layout and gate order) are documented
in docs/formats.md so that gate counts are reproducible.
"""

import logging
import re
from itertools import combinations
from typing import Callable, Dict, Iterable, List, Optional, Tuple
import numpy as np

logger = logging.getLogger(__name__)

# symbolic gate labels
H = "h"
X = "x"
T = "t"
TDG = "tdg"
RZ = "rz"
RX = "rx"
CX = "cx"
CP = "cp"
CPDG = "cpdg"
CCX = "ccx"
SWAP = "swap"

CIRCUIT_HEADER = "naqc-circuit v1"
_LABEL_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")
_RESERVED_LABELS = ("qubits", "measure")


class Gate:
    """
    A gate acting on 1 to 3 operands.  Operands of program gates are
    program-qubit ids.  SWAPs inserted by the router are hardware
    operations and carry the two site indices they exchange instead.
    """

    def __init__(self, label: str, operands: Iterable[int], is_swap=False):
        """
        :param label: Symbolic gate name, e.g. 'cx'.
        :param operands: Ordered operand ids.  For controlled gates
            the target is last.
        :param is_swap: Set only by the router for inserted SWAPs.
        """
        operands = tuple(int(op) for op in operands)
        if not _LABEL_RE.match(label) or label in _RESERVED_LABELS:
            raise ValueError("Invalid gate label '{}'.".format(label))
        if (label == SWAP) != bool(is_swap):
            raise ValueError("Only routing SWAPs may use the label 'swap'.")
        if len(operands) < 1 or len(operands) > 3:
            raise ValueError(
                "Gates take 1 to 3 operands, got {}.".format(len(operands))
            )
        if len(set(operands)) != len(operands):
            raise ValueError(
                "Gate operands must be distinct, got {}.".format(operands)
            )
        if any(op < 0 for op in operands):
            raise ValueError("Gate operands must be nonnegative.")
        if is_swap and len(operands) != 2:
            raise ValueError("A SWAP takes exactly 2 operands.")
        self._label = label
        self._operands = operands
        self._is_swap = bool(is_swap)

    @property
    def label(self) -> str:
        """
        """
        return self._label

    @property
    def operands(self) -> Tuple[int, ...]:
        """
        """
        return self._operands

    @property
    def is_swap(self) -> bool:
        """
        """
        return self._is_swap

    @property
    def arity(self) -> int:
        """
        """
        return len(self._operands)

    def pairs(self) -> List[Tuple[int, int]]:
        """
        All unordered operand pairs, each sorted ascending.
        """
        return [
            (min(u, v), max(u, v)) for u, v in combinations(self._operands, 2)
        ]

    def __eq__(self, other) -> bool:
        """
        """
        if not isinstance(other, Gate):
            return NotImplemented
        return (
            self.label == other.label
            and self.operands == other.operands
            and self.is_swap == other.is_swap
        )

    def __hash__(self) -> int:
        """
        """
        return hash((self.label, self.operands, self.is_swap))

    def __repr__(self) -> str:
        """
        """
        return "Gate({!r}, {}{})".format(
            self.label, self.operands, ", swap" if self.is_swap else ""
        )


class Circuit:
    """
    An ordered gate sequence over ``n_qubits`` program qubits plus the
    set of qubits measured at the end.
    """

    def __init__(
        self,
        n_qubits: int,
        gates: Optional[Iterable[Gate]] = None,
        measured: Optional[Iterable[int]] = None,
    ):
        """
        :param n_qubits: Number of program qubits.
        :param gates: Initial gates, appended in order.
        :param measured: Program qubits measured at the end.  Defaults
            to no qubits.
        """
        if n_qubits < 0:
            raise ValueError("Qubit count must be nonnegative.")
        self._n_qubits = int(n_qubits)
        self._gates = []
        for gate in gates or []:
            self.append(gate)
        self._measured = frozenset()
        self.measured = measured or ()

    @property
    def n_qubits(self) -> int:
        """
        """
        return self._n_qubits

    @property
    def gates(self) -> List[Gate]:
        """
        """
        return list(self._gates)

    @property
    def measured(self) -> frozenset:
        """
        """
        return self._measured

    @measured.setter
    def measured(self, qubits: Iterable[int]) -> None:
        """
        """
        qubits = frozenset(int(q) for q in qubits)
        for q in qubits:
            if q < 0 or q >= self._n_qubits:
                raise ValueError(
                    "Measured qubit {} outside circuit of {} qubits.".format(
                        q, self._n_qubits
                    )
                )
        self._measured = qubits

    def append(self, gate: Gate) -> Gate:
        """
        Append a program gate, checking its operands against the
        qubit count.
        """
        if gate.is_swap:
            raise ValueError("SWAPs are inserted by the router only.")
        for op in gate.operands:
            if op >= self._n_qubits:
                raise ValueError(
                    "Operand {} outside circuit of {} qubits.".format(
                        op, self._n_qubits
                    )
                )
        self._gates.append(gate)
        return gate

    def add(self, label: str, *operands: int) -> Gate:
        """
        Convenience wrapper: ``c.add(CX, 0, 1)``.
        """
        return self.append(Gate(label, operands))

    def __len__(self) -> int:
        """
        """
        return len(self._gates)

    def __eq__(self, other) -> bool:
        """
        """
        if not isinstance(other, Circuit):
            return NotImplemented
        return (
            self.n_qubits == other.n_qubits
            and self._gates == other._gates
            and self.measured == other.measured
        )

    def arity_counts(self) -> Tuple[int, int, int]:
        """
        Number of 1-, 2- and 3-qubit gates (n_1, n_2, n_3).
        """
        counts = [0, 0, 0]
        for gate in self._gates:
            counts[gate.arity - 1] += 1
        return tuple(counts)

    def count(self, label: str) -> int:
        """
        Number of gates with the given label.
        """
        return sum(1 for gate in self._gates if gate.label == label)

    def predecessors(self) -> List[Tuple[int, ...]]:
        """
        For each gate index, the indices of the gates it directly
        depends on (the previous gate on each operand), ascending.
        """
        last = [-1] * self._n_qubits
        preds = []
        for idx, gate in enumerate(self._gates):
            preds.append(
                tuple(sorted({last[q] for q in gate.operands if last[q] >= 0}))
            )
            for q in gate.operands:
                last[q] = idx
        return preds

    def copy_with(self, gates: Iterable[Gate]) -> "Circuit":
        """
        New circuit with the same qubit count and measured set but a
        different gate list.
        """
        return Circuit(self._n_qubits, gates, self._measured)


class LayerAssignment:
    """
    As-soon-as-possible layer of every gate.
    """

    def __init__(self, layers: Iterable[int]):
        """
        """
        self._layers = tuple(int(layer) for layer in layers)

    @property
    def layers(self) -> Tuple[int, ...]:
        """
        """
        return self._layers

    @property
    def depth(self) -> int:
        """
        """
        if not self._layers:
            return 0
        return max(self._layers) + 1

    def __getitem__(self, idx: int) -> int:
        """
        """
        return self._layers[idx]

    def __len__(self) -> int:
        """
        """
        return len(self._layers)

    def layer_widths(self) -> List[int]:
        """
        Number of gates in each layer.
        """
        widths = [0] * self.depth
        for layer in self._layers:
            widths[layer] += 1
        return widths


def asap_layers(c: Circuit) -> LayerAssignment:
    """
    Assign each gate to the layer one past the latest layer of any
    gate it depends on (0 when it has no predecessor).
    """
    last = [-1] * c.n_qubits
    layers = []
    for gate in c.gates:
        layer = 1 + max(last[q] for q in gate.operands)
        for q in gate.operands:
            last[q] = layer
        layers.append(layer)
    return LayerAssignment(layers)


def _toffoli_decomposition(a: int, b: int, t: int) -> List[Gate]:
    """
    Standard 6-CNOT Toffoli decomposition with controls ``a``, ``b``
    and target ``t``.  It interacts every operand pair.
    """
    seq = [
        (H, t),
        (CX, b, t),
        (TDG, t),
        (CX, a, t),
        (T, t),
        (CX, b, t),
        (TDG, t),
        (CX, a, t),
        (T, b),
        (T, t),
        (H, t),
        (CX, a, b),
        (T, a),
        (TDG, b),
        (CX, a, b),
    ]
    return [Gate(item[0], item[1:]) for item in seq]


def decompose_toffolis(c: Circuit) -> Circuit:
    """
    Replace every 3-operand gate with the 6-CNOT decomposition.  One-
    and two-operand gates are copied unchanged and in order.
    """
    gates = []
    for gate in c.gates:
        if gate.arity == 3:
            gates.extend(_toffoli_decomposition(*gate.operands))
        else:
            gates.append(gate)
    return c.copy_with(gates)


def build_bv(n: int) -> Circuit:
    """
    Bernstein-Vazirani with the all 1s oracle.  Qubits 0..n-2 hold the
    data and qubit n-1 is the ancilla, so the program size n counts
    the ancilla.

    :param n: Total qubit count, at least 2.
    """
    if n < 2:
        raise ValueError("Bernstein-Vazirani needs at least 2 qubits.")
    anc = n - 1
    c = Circuit(n)
    c.add(X, anc)
    for q in range(n):
        c.add(H, q)
    for q in range(n - 1):
        c.add(CX, q, anc)
    for q in range(n - 1):
        c.add(H, q)
    c.measured = range(n - 1)
    return c


def build_cuccaro(n: int) -> Circuit:
    """
    Cuccaro ripple-carry adder of two (n - 2) / 2 bit registers with a
    carry-in and a carry-out qubit.  Layout: 0 is the carry-in, b_i is
    1 + 2i, a_i is 2 + 2i and n - 1 is the carry-out.  The sum is
    written into b.  Toffolis are kept native.

    The first CNOT of each MAJ block, a_i onto b_i, touches no qubit used
    before it, so all of them land in layer 0.  Everything else forms a
    single serial chain through the carry.

    :param n: Total qubit count, even and at least 4.
    """
    if n < 4 or n % 2:
        raise ValueError(
            "Cuccaro adder needs an even qubit count of at least 4, "
            "got {}.".format(n)
        )
    bits = (n - 2) // 2
    cin = 0
    cout = n - 1

    def a(i):
        return 2 + 2 * i

    def b(i):
        return 1 + 2 * i

    c = Circuit(n)

    def maj(x, y, z):
        c.add(CX, z, y)
        c.add(CX, z, x)
        c.add(CCX, x, y, z)

    def uma(x, y, z):
        c.add(CCX, x, y, z)
        c.add(CX, z, x)
        c.add(CX, x, y)

    maj(cin, b(0), a(0))
    for i in range(1, bits):
        maj(a(i - 1), b(i), a(i))
    c.add(CX, a(bits - 1), cout)
    for i in range(bits - 1, 0, -1):
        uma(a(i - 1), b(i), a(i))
    uma(cin, b(0), a(0))
    c.measured = [b(i) for i in range(bits)] + [cout]
    return c


def cnu_controls(n: int) -> int:
    """
    Number of controls of the n-qubit CNU benchmark.  The benchmark
    uses c controls, c - 2 clean ancilla and one target, so n = 2c - 1.
    """
    if n < 3 or n % 2 == 0:
        raise ValueError(
            "CNU needs an odd qubit count of at least 3 "
            "(c controls + c - 2 ancilla + 1 target), got {}.".format(n)
        )
    return (n + 1) // 2


def build_cnu(n: int) -> Circuit:
    """
    Logarithmic-depth multi-controlled NOT built from Toffolis.
    Controls are 0..c-1, ancilla c..2c-3 and the target is n - 1.
    Controls are AND-ed pairwise into ancilla level by level (an odd
    element carries to the next level), the last two partial products
    flip the target, and the ancilla tree is uncomputed in reverse.

    :param n: Total qubit count, odd and at least 3.
    """
    n_controls = cnu_controls(n)
    target = n - 1
    next_anc = n_controls
    compute = []
    level = list(range(n_controls))
    while len(level) > 2:
        nxt = []
        for i in range(0, len(level) - 1, 2):
            compute.append((level[i], level[i + 1], next_anc))
            nxt.append(next_anc)
            next_anc += 1
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt

    c = Circuit(n)
    for ops in compute:
        c.add(CCX, *ops)
    c.add(CCX, level[0], level[1], target)
    for ops in reversed(compute):
        c.add(CCX, *ops)
    c.measured = list(range(n_controls)) + [target]
    return c


def build_qft_adder(n: int) -> Circuit:
    """
    Draper adder: QFT on register b, controlled phases from register
    a, inverse QFT.  Register a is 0..m-1 and b is m..2m-1 with
    m = n / 2.  The QFT uses m(m-1)/2 'cp' gates, the addition block
    m(m+1)/2 'cp' gates (b_j is driven by a_k for k >= j) and the
    inverse QFT m(m-1)/2 'cpdg' gates.

    :param n: Total qubit count, even and at least 2.
    """
    if n < 2 or n % 2:
        raise ValueError(
            "QFT adder needs an even qubit count of at least 2, "
            "got {}.".format(n)
        )
    m = n // 2

    def a(i):
        return i

    def b(i):
        return m + i

    c = Circuit(n)
    for j in range(m):
        c.add(H, b(j))
        for k in range(j + 1, m):
            c.add(CP, b(k), b(j))
    for j in range(m):
        for k in range(j, m):
            c.add(CP, a(k), b(j))
    for j in reversed(range(m)):
        for k in reversed(range(j + 1, m)):
            c.add(CPDG, b(k), b(j))
        c.add(H, b(j))
    c.measured = [b(i) for i in range(m)]
    return c


def qaoa_edges(n: int, density: float, seed: int) -> List[Tuple[int, int]]:
    """
    Erdos-Renyi edge sample used by the QAOA benchmark.  One uniform
    draw per vertex pair, in lexicographic pair order.
    """
    if n < 2:
        raise ValueError("QAOA needs at least 2 qubits.")
    if not 0 < density <= 1:
        raise ValueError(
            "QAOA edge density must be in (0, 1], got {}.".format(density)
        )
    pairs = list(combinations(range(n), 2))
    rng = np.random.default_rng(seed)
    draws = rng.random(len(pairs))
    return [pair for pair, draw in zip(pairs, draws) if draw < density]


def build_qaoa_maxcut(n: int, density: float = 0.1, seed: int = 0) -> Circuit:
    """
    Depth p=1 QAOA for MAX-CUT on a random graph: a Hadamard layer, a
    CNOT-Rz-CNOT block per edge and an Rx mixer on every qubit.

    :param n: Vertex (qubit) count, at least 2.
    :param density: Edge probability in (0, 1].
    :param seed: RNG seed for the graph sample.
    """
    edges = qaoa_edges(n, density, seed)
    c = Circuit(n)
    for q in range(n):
        c.add(H, q)
    for u, v in edges:
        c.add(CX, u, v)
        c.add(RZ, v)
        c.add(CX, u, v)
    for q in range(n):
        c.add(RX, q)
    c.measured = range(n)
    logger.debug("qaoa n=%d density=%g seed=%d edges=%d", n, density, seed, len(edges))
    return c


benchmarks: Dict[str, Callable[..., Circuit]] = {
    "bv": build_bv,
    "cuccaro": build_cuccaro,
    "cnu": build_cnu,
    "qft_adder": build_qft_adder,
    "qaoa": build_qaoa_maxcut,
}

# benchmarks written in terms of Toffolis
toffoli_benchmarks = ("cuccaro", "cnu")


def valid_size(name: str, n: int) -> bool:
    """
    Whether the named benchmark can be built with n qubits.
    """
    if name not in benchmarks:
        raise ValueError(
            "Unknown benchmark '{}'. Valid names are {}.".format(
                name, ", ".join(sorted(benchmarks))
            )
        )
    if name == "cuccaro":
        return n >= 4 and n % 2 == 0
    if name == "cnu":
        return n >= 3 and n % 2 == 1
    if name == "qft_adder":
        return n >= 2 and n % 2 == 0
    return n >= 2


def benchmark_sizes(name: str, max_size: int, min_size: int = 2) -> List[int]:
    """
    All sizes in [min_size, max_size] valid for the named benchmark.
    """
    return [n for n in range(min_size, max_size + 1) if valid_size(name, n)]


def build_benchmark(
    name: str, size: int, seed: int = 0, density: float = 0.1
) -> Circuit:
    """
    Build a benchmark by name.  ``seed`` and ``density`` only affect
    'qaoa'.
    """
    if not valid_size(name, size):
        raise ValueError(
            "Invalid size {} for benchmark '{}'.".format(size, name)
        )
    if name == "qaoa":
        return build_qaoa_maxcut(size, density=density, seed=seed)
    return benchmarks[name](size)


def circuit_to_text(c: Circuit) -> str:
    """
    Serialize to the ``naqc-circuit v1`` text format.
    """
    lines = [CIRCUIT_HEADER, "qubits {}".format(c.n_qubits)]
    for gate in c.gates:
        lines.append(
            "{} {}".format(gate.label, ",".join(str(q) for q in gate.operands))
        )
    measured = ",".join(str(q) for q in sorted(c.measured))
    lines.append("measure {}".format(measured).rstrip())
    return "\n".join(lines) + "\n"


def _parse_ids(text: str, lineno: int) -> List[int]:
    """
    """
    try:
        return [int(tok) for tok in text.split(",")]
    except ValueError:
        raise ValueError(
            "line {}: expected comma-separated qubit ids, got '{}'.".format(
                lineno, text
            )
        )


def circuit_from_text(text: str) -> Circuit:
    """
    Parse the ``naqc-circuit v1`` text format.  Blank lines and lines
    starting with '#' are ignored.  Errors name the offending line.
    """
    lines = [
        (num, line.strip())
        for num, line in enumerate(text.splitlines(), start=1)
        if line.strip() and not line.strip().startswith("#")
    ]
    if not lines or lines[0][1] != CIRCUIT_HEADER:
        lineno = lines[0][0] if lines else 1
        raise ValueError(
            "line {}: expected header '{}'.".format(lineno, CIRCUIT_HEADER)
        )
    if len(lines) < 2 or not lines[1][1].startswith("qubits"):
        lineno = lines[1][0] if len(lines) > 1 else lines[0][0]
        raise ValueError("line {}: expected 'qubits N'.".format(lineno))
    lineno, line = lines[1]
    parts = line.split()
    if len(parts) != 2 or not parts[1].isdigit():
        raise ValueError("line {}: expected 'qubits N'.".format(lineno))
    c = Circuit(int(parts[1]))

    measured_seen = False
    for lineno, line in lines[2:]:
        parts = line.split()
        if measured_seen:
            raise ValueError(
                "line {}: nothing may follow the measure line.".format(lineno)
            )
        if parts[0] == "measure":
            if len(parts) > 2:
                raise ValueError("line {}: malformed measure line.".format(lineno))
            ids = _parse_ids(parts[1], lineno) if len(parts) == 2 else []
            try:
                c.measured = ids
            except ValueError as err:
                raise ValueError("line {}: {}".format(lineno, err))
            measured_seen = True
            continue
        if len(parts) != 2:
            raise ValueError(
                "line {}: expected 'GATE q0[,q1[,q2]]', got '{}'.".format(
                    lineno, line
                )
            )
        try:
            c.append(Gate(parts[0], _parse_ids(parts[1], lineno)))
        except ValueError as err:
            if str(err).startswith("line "):
                raise
            raise ValueError("line {}: {}".format(lineno, err))
    return c


def write_circuit(c: Circuit, fpath: str) -> None:
    """
    Write a circuit file.
    """
    with open(fpath, "w") as fout:
        fout.write(circuit_to_text(c))


def read_circuit(fpath: str) -> Circuit:
    """
    Read a circuit file.
    """
    with open(fpath) as fin:
        return circuit_from_text(fin.read())
