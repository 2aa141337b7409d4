"""Dataflow program representation.

A program is a set of instructions grouped into *wave blocks*.  A wave block
is an acyclic dataflow fragment; at run time each dynamic execution of a
block happens inside a numbered wave, and values cross from one wave to the
next only through WaveAdvance instructions.

Memory instructions carry an ordering annotation ``<P, C, S>``: the sequence
number ``C`` of the operation itself plus the sequence numbers of its
predecessor and successor along the control path.  Wildcards:

* ``.`` -- the neighbour does not exist (chain start / chain end)
* ``?`` -- the neighbour is unknown statically because of a branch
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

WILD_NONE = "."
WILD_UNKNOWN = "?"

WORD_MASK = (1 << 64) - 1


def wrap64(value: int) -> int:
    """Wrap an integer to a signed 64-bit word."""
    value &= WORD_MASK
    if value >= 1 << 63:
        value -= 1 << 64
    return value


class Opcode(Enum):
    CONST = "const"
    ALU = "alu"
    SELECT = "select"
    STEER = "steer"
    WAVE_ADVANCE = "wadv"
    LOAD = "load"
    STORE = "store"
    STORE_ADDR = "sta"
    STORE_DATA = "std"
    MEMNOP = "memnop"
    OUTPUT = "output"


MEMORY_OPCODES = {
    Opcode.LOAD,
    Opcode.STORE,
    Opcode.STORE_ADDR,
    Opcode.STORE_DATA,
    Opcode.MEMNOP,
}

#: number of input operand ports per opcode
_ARITY = {
    Opcode.CONST: 1,   # trigger
    Opcode.SELECT: 3,  # v1, v2, selector
    Opcode.STEER: 2,   # value, condition
    Opcode.WAVE_ADVANCE: 1,
    Opcode.LOAD: 1,    # address
    Opcode.STORE: 2,   # address, data
    Opcode.STORE_ADDR: 1,
    Opcode.STORE_DATA: 1,
    Opcode.MEMNOP: 1,  # trigger
    Opcode.OUTPUT: 1,
}

ALU_OPS = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a // b if b else 0,
    "mod": lambda a, b: a % b if b else 0,
    "and": lambda a, b: a & b,
    "or": lambda a, b: a | b,
    "xor": lambda a, b: a ^ b,
    "lt": lambda a, b: int(a < b),
    "le": lambda a, b: int(a <= b),
    "eq": lambda a, b: int(a == b),
    "ne": lambda a, b: int(a != b),
}


@dataclass(frozen=True)
class MemAnnotation:
    """Wave-ordering annotation ``<P, C, S>`` of one memory operation."""

    pred: int | str
    cur: int
    succ: int | str

    def __post_init__(self) -> None:
        if not isinstance(self.cur, int):
            raise ValueError("C must be a concrete sequence number")
        for name, part in (("pred", self.pred), ("succ", self.succ)):
            if isinstance(part, str) and part not in (WILD_NONE, WILD_UNKNOWN):
                raise ValueError(f"bad {name} wildcard {part!r}")

    def __str__(self) -> str:
        return f"<{self.pred},{self.cur},{self.succ}>"


@dataclass(frozen=True)
class Dest:
    """One destination of an instruction output: (instruction, input port)."""

    inst: str
    port: int

    def __str__(self) -> str:
        return f"{self.inst}({self.port})"


@dataclass
class Instruction:
    id: str
    opcode: Opcode
    block: str
    alu_op: str | None = None
    imm: int | None = None
    annotation: MemAnnotation | None = None
    dests: list[Dest] = field(default_factory=list)
    # steer only: dests fires for condition true, dests_false otherwise
    dests_false: list[Dest] = field(default_factory=list)

    @property
    def arity(self) -> int:
        if self.opcode is Opcode.ALU:
            return 1 if self.imm is not None else 2
        return _ARITY[self.opcode]

    @property
    def is_memory(self) -> bool:
        return self.opcode in MEMORY_OPCODES

    def all_dests(self) -> list[Dest]:
        return list(self.dests) + list(self.dests_false)


@dataclass(frozen=True)
class EntryConstant:
    """A value injected into the fabric at wave 0 before cycle 0."""

    value: int
    dest: Dest


@dataclass
class Program:
    instructions: dict[str, Instruction] = field(default_factory=dict)
    blocks: dict[str, list[str]] = field(default_factory=dict)
    entry_constants: list[EntryConstant] = field(default_factory=list)
    memory_image: dict[int, int] = field(default_factory=dict)

    def add(self, inst: Instruction) -> Instruction:
        if inst.id in self.instructions:
            raise ValueError(f"duplicate instruction id {inst.id!r}")
        self.instructions[inst.id] = inst
        self.blocks.setdefault(inst.block, []).append(inst.id)
        return inst

    def memory_ops(self, block: str) -> list[Instruction]:
        return [
            self.instructions[i]
            for i in self.blocks.get(block, [])
            if self.instructions[i].is_memory
        ]


@dataclass(frozen=True)
class Violation:
    """One problem found by :func:`validate_program`."""

    block: str
    message: str
    inst: str | None = None

    def __str__(self) -> str:
        where = f"{self.block}/{self.inst}" if self.inst else self.block
        return f"[{where}] {self.message}"


def chain_linked(a: MemAnnotation, b: MemAnnotation) -> bool:
    """True when operation ``b`` may immediately follow ``a`` on a path.

    At least one side has to name the other explicitly; a wildcard ``?`` on
    the opposite side is accepted (that is what makes branch boundaries
    resolvable), but two ``?`` facing each other are not a link -- that is the
    broken-chain case a MemNop exists to fix.
    """
    forward = b.pred == a.cur and a.succ in (b.cur, WILD_UNKNOWN)
    backward = a.succ == b.cur and b.pred in (a.cur, WILD_UNKNOWN)
    return forward or backward


def _term_and(term: frozenset, literal: tuple) -> frozenset | None:
    inst, value = literal
    if (inst, not value) in term:
        return None
    return term | {literal}


def _guards(program: Program, block: str) -> dict[str, set[frozenset]]:
    """Compute under which steer outcomes each instruction executes.

    The guard of an instruction is a DNF set of conjunctions over
    ``(steer_id, bool)`` literals.  WaveAdvance instructions act as block
    entries (their producers feed the *next* wave), so edges into them do not
    count as intra-block dataflow.
    """
    ids = program.blocks.get(block, [])
    insts = [program.instructions[i] for i in ids]
    by_id = {i.id: i for i in insts}

    # producers per (inst, port), restricted to this block
    producers: dict[str, list[tuple[str, frozenset | None]]] = {i.id: [] for i in insts}
    for inst in insts:
        for dest, lit in [(d, None) for d in (inst.dests if inst.opcode is not Opcode.STEER else [])] + (
            [(d, (inst.id, True)) for d in inst.dests]
            + [(d, (inst.id, False)) for d in inst.dests_false]
            if inst.opcode is Opcode.STEER
            else []
        ):
            target = by_id.get(dest.inst)
            if target is None or target.opcode is Opcode.WAVE_ADVANCE:
                continue
            producers[dest.inst].append((inst.id, lit))

    entry_guard: set[frozenset] = {frozenset()}
    guards: dict[str, set[frozenset]] = {}

    def guard_of(iid: str, stack: tuple = ()) -> set[frozenset]:
        if iid in guards:
            return guards[iid]
        if iid in stack:
            # cycle inside a block is invalid; treated as unconditional so
            # validation can continue and report elsewhere
            return entry_guard
        inst = by_id[iid]
        if not producers[iid] or inst.opcode is Opcode.WAVE_ADVANCE:
            guards[iid] = entry_guard
            return entry_guard
        result: set[frozenset] = set()
        for src, lit in producers[iid]:
            for term in guard_of(src, stack + (iid,)):
                new = term if lit is None else _term_and(term, lit)
                if new is not None:
                    result.add(new)
        if not result:
            result = entry_guard
        guards[iid] = result
        return result

    for inst in insts:
        guard_of(inst.id)
    return guards


def validate_program(program: Program) -> list[Violation]:
    """Structural and chain validation; returns all problems found."""
    problems: list[Violation] = []

    for inst in program.instructions.values():
        for dest in inst.all_dests():
            target = program.instructions.get(dest.inst)
            if target is None:
                problems.append(
                    Violation(inst.block, f"destination {dest.inst!r} does not exist", inst.id)
                )
            elif not 0 <= dest.port < target.arity:
                problems.append(
                    Violation(inst.block, f"port {dest.port} out of range for {dest.inst!r}", inst.id)
                )
        if inst.is_memory and inst.annotation is None:
            problems.append(Violation(inst.block, "memory operation without annotation", inst.id))
        if not inst.is_memory and inst.annotation is not None:
            problems.append(Violation(inst.block, "annotation on non-memory instruction", inst.id))
        if inst.opcode is Opcode.ALU and inst.alu_op not in ALU_OPS:
            problems.append(Violation(inst.block, f"unknown alu op {inst.alu_op!r}", inst.id))
        if inst.opcode is not Opcode.STEER and inst.dests_false:
            problems.append(Violation(inst.block, "false-path destinations on non-steer", inst.id))
    for entry in program.entry_constants:
        if entry.dest.inst not in program.instructions:
            problems.append(Violation("<entry>", f"entry destination {entry.dest.inst!r} missing"))

    for block in program.blocks:
        problems.extend(_validate_block_chain(program, block))
    return problems


def _validate_block_chain(program: Program, block: str) -> list[Violation]:
    problems: list[Violation] = []
    mem_ops = [i for i in program.memory_ops(block) if i.annotation is not None]
    if not mem_ops:
        return problems

    # store halves share one chain slot; everything else owns its slot
    slots: dict[int, list[Instruction]] = {}
    for inst in mem_ops:
        slots.setdefault(inst.annotation.cur, []).append(inst)
    for cur, members in sorted(slots.items()):
        if len(members) == 1:
            if members[0].opcode in (Opcode.STORE_ADDR, Opcode.STORE_DATA):
                problems.append(
                    Violation(block, f"unpaired store half at C={cur}", members[0].id)
                )
            continue
        ok = len(members) == 2 and {m.opcode for m in members} == {
            Opcode.STORE_ADDR,
            Opcode.STORE_DATA,
        } and members[0].annotation == members[1].annotation
        if not ok:
            problems.append(Violation(block, f"sequence number C={cur} is not unique"))

    guards = _guards(program, block)
    steers = sorted(
        {
            s
            for terms in guards.values()
            for term in terms
            for (s, _v) in term
        }
    )
    if len(steers) > 12:
        problems.append(Violation(block, "too many branches to enumerate control paths"))
        return problems

    # one representative instruction per chain slot (store halves agree)
    slot_insts = {cur: members[0] for cur, members in slots.items()}

    for mask in range(1 << len(steers)):
        outcome = {s: bool(mask >> k & 1) for k, s in enumerate(steers)}
        path = []
        for cur in sorted(slot_insts):
            inst = slot_insts[cur]
            if any(
                all(outcome.get(s, v) == v for (s, v) in term)
                for term in guards.get(inst.id, {frozenset()})
            ):
                path.append(inst)
        if not path:
            problems.append(Violation(block, f"control path {outcome} has no memory operations"))
            continue
        first, last = path[0].annotation, path[-1].annotation
        if first.pred != WILD_NONE:
            problems.append(
                Violation(block, "first operation must have P=.", path[0].id)
            )
        if last.succ != WILD_NONE:
            problems.append(
                Violation(block, "last operation must have S=.", path[-1].id)
            )
        for a, b in zip(path, path[1:]):
            if not chain_linked(a.annotation, b.annotation):
                problems.append(
                    Violation(
                        block,
                        f"broken chain between C={a.annotation.cur} and C={b.annotation.cur}"
                        f" on path {outcome}",
                        b.id,
                    )
                )
    # deduplicate (different steer combinations often repeat a violation)
    seen: set[tuple] = set()
    unique = []
    for p in problems:
        key = (p.block, p.inst, p.message.split(" on path ")[0])
        if key not in seen:
            seen.add(key)
            unique.append(p)
    return unique
