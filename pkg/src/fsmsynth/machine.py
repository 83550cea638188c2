"""Bit-string genome encoding of Mealy machines and their RAM realization.

A machine with S states, x input bits and y output bits is held in a genome of
p = S * 2**x genes. Gene g = state * 2**x + input stores the next state
(T bits) followed by the output code (y bits), both most-significant bit first.
The same table read as memory words gives the RAM image: the address is
``state ++ input`` and the data word is ``next ++ output``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class EncodingError(ValueError):
    """Raised for shape mismatches and out-of-range fields."""


@dataclass(frozen=True)
class EncodingSpec:
    states: int
    input_bits: int
    output_bits: int
    action_count: int

    @property
    def triggers(self) -> int:
        return max(1, (self.states - 1).bit_length())

    @property
    def input_symbols(self) -> int:
        return 1 << self.input_bits

    @property
    def gene_count(self) -> int:
        return self.states * self.input_symbols

    @property
    def gene_bits(self) -> int:
        return self.triggers + self.output_bits

    @property
    def genome_bits(self) -> int:
        return self.gene_count * self.gene_bits

    @property
    def ram_address_bits(self) -> int:
        return self.triggers + self.input_bits

    @property
    def ram_data_bits(self) -> int:
        return self.triggers + self.output_bits


def make_encoding(states: int, input_bits: int, output_bits: int, action_count: int) -> EncodingSpec:
    for name, value in (("states", states), ("input_bits", input_bits),
                        ("output_bits", output_bits), ("action_count", action_count)):
        if int(value) != value or value < 1:
            raise EncodingError(f"{name} must be a positive integer, got {value!r}")
    if action_count > (1 << output_bits):
        raise EncodingError(
            f"action_count {action_count} does not fit in {output_bits} output bits")
    return EncodingSpec(int(states), int(input_bits), int(output_bits), int(action_count))


def _weights(width: int) -> np.ndarray:
    return (1 << np.arange(width - 1, -1, -1)).astype(np.int64)


def _unpack(bits: np.ndarray, spec: EncodingSpec) -> tuple[np.ndarray, np.ndarray]:
    genes = bits.reshape(spec.gene_count, spec.gene_bits).astype(np.int64)
    t = spec.triggers
    return genes[:, :t] @ _weights(t), genes[:, t:] @ _weights(spec.output_bits)


def _pack(next_field: np.ndarray, out_field: np.ndarray, spec: EncodingSpec) -> bytes:
    t, y = spec.triggers, spec.output_bits
    shifts_t = np.arange(t - 1, -1, -1)
    shifts_y = np.arange(y - 1, -1, -1)
    hi = (np.asarray(next_field, dtype=np.int64)[:, None] >> shifts_t) & 1
    lo = (np.asarray(out_field, dtype=np.int64)[:, None] >> shifts_y) & 1
    return np.hstack([hi, lo]).astype(np.uint8).tobytes()


@dataclass(frozen=True)
class Genome:
    """Fixed-length bit string; ``bits`` holds one byte (0 or 1) per bit."""

    bits: bytes
    spec: EncodingSpec

    def __post_init__(self):
        if len(self.bits) != self.spec.genome_bits:
            raise EncodingError(
                f"genome has {len(self.bits)} bits, spec needs {self.spec.genome_bits}")

    @classmethod
    def from_string(cls, text: str, spec: EncodingSpec) -> Genome:
        digits = "".join(text.split())
        if set(digits) - {"0", "1"}:
            raise EncodingError("genome string may only contain 0 and 1")
        return cls(bytes(int(c) for c in digits), spec)

    @classmethod
    def from_array(cls, bits, spec: EncodingSpec) -> Genome:
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.size and arr.max() > 1:
            raise EncodingError("genome bits must be 0 or 1")
        return cls(arr.tobytes(), spec)

    @property
    def array(self) -> np.ndarray:
        return np.frombuffer(self.bits, dtype=np.uint8)

    def fields(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-gene (next-state, output) field values."""
        return _unpack(self.array, self.spec)

    def is_corrected(self) -> bool:
        nxt, out = self.fields()
        return bool((nxt < self.spec.states).all() and (out < self.spec.action_count).all())

    def __str__(self) -> str:
        return "".join("01"[b] for b in self.bits)


def _check_spec(genome: Genome, spec: EncodingSpec) -> None:
    if genome.spec != spec or len(genome.bits) != spec.genome_bits:
        raise EncodingError("genome was not sized for this encoding")


def correct(genome: Genome, spec: EncodingSpec) -> Genome:
    """Repair out-of-range fields by modular reduction; valid genes are untouched."""
    _check_spec(genome, spec)
    nxt, out = genome.fields()
    if (nxt < spec.states).all() and (out < spec.action_count).all():
        return genome
    return Genome(_pack(nxt % spec.states, out % spec.action_count, spec), spec)


@dataclass(frozen=True, eq=False)
class MealyMachine:
    """Decoded transition and output tables, indexed ``[state, input_symbol]``.

    The initial state is always 0.
    """

    spec: EncodingSpec
    next_state: np.ndarray
    output: np.ndarray

    def __post_init__(self):
        shape = (self.spec.states, self.spec.input_symbols)
        nxt = np.array(self.next_state, dtype=np.int64)
        out = np.array(self.output, dtype=np.int64)
        if nxt.shape != shape or out.shape != shape:
            raise EncodingError(f"tables must have shape {shape}")
        if nxt.min() < 0 or nxt.max() >= self.spec.states:
            raise EncodingError("next-state entry out of range")
        if out.min() < 0 or out.max() >= self.spec.action_count:
            raise EncodingError("output entry out of range")
        nxt.flags.writeable = False
        out.flags.writeable = False
        object.__setattr__(self, "next_state", nxt)
        object.__setattr__(self, "output", out)

    @property
    def initial_state(self) -> int:
        return 0

    def __eq__(self, other):
        if not isinstance(other, MealyMachine):
            return NotImplemented
        return (self.spec == other.spec
                and np.array_equal(self.next_state, other.next_state)
                and np.array_equal(self.output, other.output))

    def __hash__(self):
        return hash((self.spec, self.next_state.tobytes(), self.output.tobytes()))

    def __repr__(self):
        s = self.spec
        return f"MealyMachine(S={s.states}, x={s.input_bits}, y={s.output_bits}, A={s.action_count})"


def decode(genome: Genome, spec: EncodingSpec) -> MealyMachine:
    _check_spec(genome, spec)
    nxt, out = genome.fields()
    if (nxt >= spec.states).any() or (out >= spec.action_count).any():
        raise EncodingError("genome is not corrected; run correct() first")
    shape = (spec.states, spec.input_symbols)
    return MealyMachine(spec, nxt.reshape(shape), out.reshape(shape))


def encode(machine: MealyMachine, spec: EncodingSpec) -> Genome:
    if machine.spec != spec:
        raise EncodingError("machine does not match encoding")
    return Genome(_pack(machine.next_state.ravel(), machine.output.ravel(), spec), spec)


def step(machine: MealyMachine, state: int, input_symbol: int) -> tuple[int, int]:
    spec = machine.spec
    if not 0 <= state < spec.states:
        raise IndexError(f"state {state} out of range")
    if not 0 <= input_symbol < spec.input_symbols:
        raise IndexError(f"input symbol {input_symbol} out of range")
    return int(machine.next_state[state, input_symbol]), int(machine.output[state, input_symbol])


def reachable_states(machine: MealyMachine) -> int:
    """Number of states reachable from state 0 over the next-state table."""
    seen = {0}
    queue = deque([0])
    while queue:
        s = queue.popleft()
        for t in machine.next_state[s]:
            t = int(t)
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return len(seen)


def random_machine(spec: EncodingSpec, rng: np.random.Generator) -> MealyMachine:
    shape = (spec.states, spec.input_symbols)
    return MealyMachine(spec, rng.integers(0, spec.states, shape),
                        rng.integers(0, spec.action_count, shape))


@dataclass(frozen=True)
class RamImage:
    address_bits: int
    data_bits: int
    words: tuple[int, ...]

    def __post_init__(self):
        if len(self.words) != 1 << self.address_bits:
            raise EncodingError(
                f"RAM needs {1 << self.address_bits} words, got {len(self.words)}")
        limit = 1 << self.data_bits
        if any(not 0 <= w < limit for w in self.words):
            raise EncodingError(f"word wider than {self.data_bits} bits")

    @property
    def depth(self) -> int:
        return len(self.words)


def to_ram_image(machine: MealyMachine, spec: EncodingSpec) -> RamImage:
    """Lay the machine out as memory; unused state codes read as zero words."""
    if machine.spec != spec:
        raise EncodingError("machine does not match encoding")
    words = [0] * (1 << spec.ram_address_bits)
    for s in range(spec.states):
        for i in range(spec.input_symbols):
            nxt, act = step(machine, s, i)
            words[(s << spec.input_bits) | i] = (nxt << spec.output_bits) | act
    return RamImage(spec.ram_address_bits, spec.ram_data_bits, tuple(words))


# FSM interchange text format: "fsm S x y A" then "state input next action" lines.

def dumps_machine(machine: MealyMachine) -> str:
    s = machine.spec
    lines = [f"fsm {s.states} {s.input_bits} {s.output_bits} {s.action_count}"]
    for state in range(s.states):
        for i in range(s.input_symbols):
            nxt, act = step(machine, state, i)
            lines.append(f"{state} {i} {nxt} {act}")
    return "\n".join(lines) + "\n"


def loads_machine(text: str) -> MealyMachine:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or rows[0][0] != "fsm" or len(rows[0]) != 5:
        raise EncodingError("missing 'fsm S x y A' header")
    try:
        spec = make_encoding(*(int(v) for v in rows[0][1:]))
        body = [tuple(int(v) for v in r) for r in rows[1:]]
    except ValueError as exc:
        raise EncodingError(f"malformed machine file: {exc}") from None
    if len(body) != spec.gene_count or any(len(r) != 4 for r in body):
        raise EncodingError(f"expected {spec.gene_count} rows of 'state input next action'")
    shape = (spec.states, spec.input_symbols)
    nxt = np.zeros(shape, dtype=np.int64)
    out = np.zeros(shape, dtype=np.int64)
    for g, (state, i, n, a) in enumerate(body):
        if (state, i) != divmod(g, spec.input_symbols):
            raise EncodingError(f"row {g + 1} out of gene order")
        nxt[state, i] = n
        out[state, i] = a
    return MealyMachine(spec, nxt, out)


def load_machine(path) -> MealyMachine:
    return loads_machine(Path(path).read_text())


def save_machine(machine: MealyMachine, path) -> None:
    Path(path).write_text(dumps_machine(machine))
