"""Timing-free reference interpreter.

Executes a program with unlimited instruction parallelism but sequential
memory semantics: only the lowest uncommitted wave's memory operations are
applied, in annotation-chain order, each taking effect instantly.  The result
is the architecturally correct final memory image and memory trace that the
cycle-accurate simulator must reproduce in every mode.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .ir import (
    ALU_OPS,
    Dest,
    Instruction,
    Opcode,
    Program,
    WILD_NONE,
    WILD_UNKNOWN,
    wrap64,
)


@dataclass(frozen=True)
class TraceEvent:
    wave: int
    c: int
    kind: str  # "load" | "store" | "memnop"
    address: int | None
    value: int | None


@dataclass
class OracleResult:
    memory: dict[int, int]
    trace: list[TraceEvent]
    outputs: list[tuple[int, int]]  # (wave, value) per Output firing
    fired: int


@dataclass
class _Slot:
    c: int
    pred: object
    succ: object
    kind: str = ""
    address: int | None = None
    value: int | None = None
    reply_to: tuple[Dest, ...] = ()
    done: bool = False


@dataclass
class _Wave:
    slots: dict[int, _Slot] = field(default_factory=dict)
    executed: set[int] = field(default_factory=set)
    executed_succ: set[int] = field(default_factory=set)
    finished: bool = False


class _Interpreter:
    def __init__(self, program: Program, max_steps: int):
        self.program = program
        self.by_id = program.instructions
        self.max_steps = max_steps
        self.pending: dict[tuple[str, int], dict[int, int]] = {}
        self.fire_queue: deque[tuple[Instruction, int, dict[int, int]]] = deque()
        self.memory = dict(program.memory_image)
        self.waves: dict[int, _Wave] = {}
        self.trace: list[TraceEvent] = []
        self.outputs: list[tuple[int, int]] = []
        self.fired = 0

    # ------------------------------------------------------------------
    def deliver(self, dest: Dest, wave: int, value: int) -> None:
        inst = self.by_id[dest.inst]
        key = (inst.id, wave)
        group = self.pending.setdefault(key, {})
        group[dest.port] = value
        if len(group) == inst.arity:
            del self.pending[key]
            self.fire_queue.append((inst, wave, group))

    def send(self, dests, wave: int, value: int) -> None:
        for dest in dests:
            self.deliver(dest, wave, value)

    def drain_fires(self) -> None:
        while self.fire_queue:
            inst, wave, values = self.fire_queue.popleft()
            self.fired += 1
            if self.fired > self.max_steps:
                raise RuntimeError("reference interpreter exceeded step budget")
            self.fire(inst, wave, values)

    def fire(self, inst: Instruction, wave: int, values: dict[int, int]) -> None:
        op = inst.opcode
        if op is Opcode.CONST:
            self.send(inst.dests, wave, wrap64(inst.imm))
        elif op is Opcode.ALU:
            a = values[0]
            b = wrap64(inst.imm) if inst.imm is not None else values[1]
            self.send(inst.dests, wave, wrap64(ALU_OPS[inst.alu_op](a, b)))
        elif op is Opcode.SELECT:
            self.send(inst.dests, wave, values[0] if values[2] else values[1])
        elif op is Opcode.STEER:
            dests = inst.dests if values[1] else inst.dests_false
            self.send(dests, wave, values[0])
        elif op is Opcode.WAVE_ADVANCE:
            self.send(inst.dests, wave + 1, values[0])
        elif op is Opcode.OUTPUT:
            self.outputs.append((wave, values[0]))
        elif op is Opcode.LOAD:
            address = wrap64(values[0] + (inst.imm or 0))
            self.request(inst, wave, "load", address=address, reply_to=inst.dests)
        elif op is Opcode.STORE:
            address = wrap64(values[0] + (inst.imm or 0))
            self.request(inst, wave, "store", address=address, value=values[1])
        elif op is Opcode.STORE_ADDR:
            address = wrap64(values[0] + (inst.imm or 0))
            self.request(inst, wave, "store", address=address)
        elif op is Opcode.STORE_DATA:
            self.request(inst, wave, "store", value=values[0])
        elif op is Opcode.MEMNOP:
            self.request(inst, wave, "memnop")
        else:  # pragma: no cover
            raise RuntimeError(f"unhandled opcode {op}")

    def request(self, inst: Instruction, wave: int, kind: str, address=None, value=None, reply_to=()) -> None:
        ann = inst.annotation
        wstate = self.waves.setdefault(wave, _Wave())
        slot = wstate.slots.get(ann.cur)
        if slot is None:
            slot = _Slot(ann.cur, ann.pred, ann.succ)
            wstate.slots[ann.cur] = slot
        slot.kind = kind
        if address is not None:
            slot.address = address
        if value is not None:
            slot.value = value
        if reply_to:
            slot.reply_to = tuple(reply_to)

    # ------------------------------------------------------------------
    def chain_ready(self, wstate: _Wave, slot: _Slot) -> bool:
        if slot.kind == "":
            return False
        if slot.kind == "store" and (slot.address is None or slot.value is None):
            return False
        if slot.pred == WILD_NONE:
            return True
        if slot.pred == WILD_UNKNOWN:
            return slot.c in wstate.executed_succ
        return slot.pred in wstate.executed

    def apply_frontier(self, frontier: int) -> bool:
        """Apply every currently-ready memory op of the frontier wave."""
        progressed = False
        while True:
            wstate = self.waves.get(frontier)
            if wstate is None:
                return progressed
            ready = [
                s
                for s in wstate.slots.values()
                if not s.done and self.chain_ready(wstate, s)
            ]
            if not ready:
                return progressed
            slot = min(ready, key=lambda s: s.c)
            slot.done = True
            wstate.executed.add(slot.c)
            if isinstance(slot.succ, int):
                wstate.executed_succ.add(slot.succ)
            elif slot.succ == WILD_NONE:
                wstate.finished = True
            if slot.kind == "store":
                self.memory[slot.address] = slot.value
                self.trace.append(TraceEvent(frontier, slot.c, "store", slot.address, slot.value))
            elif slot.kind == "load":
                value = self.memory.get(slot.address, 0)
                self.trace.append(TraceEvent(frontier, slot.c, "load", slot.address, value))
                self.send(slot.reply_to, frontier, value)
                self.drain_fires()
            else:
                self.trace.append(TraceEvent(frontier, slot.c, "memnop", None, None))
            progressed = True

    def run(self) -> OracleResult:
        for constant in self.program.entry_constants:
            self.deliver(constant.dest, 0, wrap64(constant.value))
        self.drain_fires()
        frontier = 0
        while True:
            progressed = self.apply_frontier(frontier)
            wstate = self.waves.get(frontier)
            if wstate is not None and wstate.finished:
                all_done = all(s.done for s in wstate.slots.values() if s.kind)
                if all_done:
                    frontier += 1
                    continue
            if not progressed:
                break
        return OracleResult(self.memory, self.trace, self.outputs, self.fired)


def interpret(program: Program, max_steps: int = 10_000_000) -> OracleResult:
    """Run the reference interpreter to quiescence."""
    return _Interpreter(program, max_steps).run()


def compare_memory(expected: dict[int, int], actual: dict[int, int]) -> list[str]:
    """Differences between two memory images (missing keys read as zero)."""
    problems = []
    for addr in sorted(set(expected) | set(actual)):
        want = expected.get(addr, 0)
        got = actual.get(addr, 0)
        if want != got:
            problems.append(f"addr {addr:#x}: expected {want}, got {got}")
    return problems
