"""Cycle-accurate simulator driving the fabric and the store buffer.

Each cycle: operand/request deliveries arrive (a priority queue keyed by
cycle, with deterministic FIFO tie-breaks), the store buffer admits incoming
requests and applies at most one memory operation, then every processing
element fires at most one ready instruction.  All messages produced by a
fire or an application are scheduled at least one routed hop in the future,
so intra-cycle ordering never matters beyond the fixed phase order above.

The simulation is fully deterministic for a given program and configuration.
When no component has work in the current cycle the clock jumps to the next
scheduled delivery.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

from .fabric import (
    FabricConfig,
    Operand,
    ProcessingElement,
    Tag,
    Topology,
    place_instructions,
)
from .ir import ALU_OPS, Dest, Instruction, Opcode, Program, wrap64
from .memory import (
    DeadlockError,
    MemoryConfig,
    MemoryModel,
    MemoryRequest,
    Metrics,
    RequestKind,
    StoreBuffer,
)


@dataclass
class SimResult:
    cycles: int
    metrics: Metrics
    memory: dict[int, int]
    outputs: list[tuple[int, int]]  # (wave, value) from Output firings
    events: list[dict] | None

    def memory_dump(self) -> list[str]:
        return [f"{addr} {self.memory[addr]}" for addr in sorted(self.memory)]


class Simulator:
    def __init__(
        self,
        program: Program,
        mode: str = "strict",
        window: int | None = None,
        fabric_config: FabricConfig | None = None,
        memory_config: MemoryConfig | None = None,
        record_events: bool = False,
        wct_capacity: int | None = None,
        max_cycles: int = 50_000_000,
    ):
        self.program = program
        self.mode = mode
        self.max_cycles = max_cycles
        self.config = fabric_config or FabricConfig()
        self.topology = Topology(self.config)
        self.placement = place_instructions(
            list(program.instructions), self.config
        )
        self.pes = [ProcessingElement(i, self.config) for i in range(self.config.total_pes)]
        for inst in program.instructions.values():
            self.pes[self.placement[inst.id]].host(inst)
        self.metrics = Metrics()
        self.memory = MemoryModel(memory_config, program.memory_image)
        self.events: list[dict] | None = [] if record_events else None
        self.sb = StoreBuffer(
            mode,
            window,
            self.memory,
            self.metrics,
            send_operand=self._send_from_buffer,
            route_to_pe=self._route_buffer_to_inst,
            event=self._event,
            wct_capacity=wct_capacity,
        )
        self._heap: list[tuple[int, int, str, object]] = []
        self._seq = 0
        self._cycle = 0
        self._raw_outputs: list[tuple[int, int, int]] = []  # (wave, exen, value)

    # ------------------------------------------------------------------
    # message scheduling
    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def _schedule(self, cycle: int, kind: str, payload) -> None:
        heapq.heappush(self._heap, (cycle, self._next_seq(), kind, payload))

    def _send_from_buffer(self, operand: Operand, delay: int) -> None:
        self._schedule(self._cycle + max(1, delay), "op", operand)

    def _route_buffer_to_inst(self, inst_id: str) -> int:
        return self.topology.route_to_store_buffer(self.placement[inst_id])

    def _event(self, _name: str, **fields) -> None:
        if self.events is not None:
            fields["event"] = _name
            self.events.append(fields)

    def _send_operands(self, src_pe: int, tag: Tag, dests, value: int) -> None:
        for dest in dests:
            delay = self.topology.route(src_pe, self.placement[dest.inst])
            self._schedule(self._cycle + delay, "op", Operand(tag, dest, value))

    def _send_request(self, src_pe: int, kind: RequestKind, inst: Instruction, tag: Tag, **fields) -> None:
        request = MemoryRequest(
            kind=kind,
            annotation=inst.annotation,
            wave=tag.wave,
            exen=tag.exen,
            thread=tag.thread,
            **fields,
        )
        delay = self.topology.route_to_store_buffer(src_pe)
        self._schedule(self._cycle + delay, "req", request)

    # ------------------------------------------------------------------
    # instruction semantics
    def _fire(self, inst: Instruction, tag: Tag, values: dict[int, int]) -> None:
        self.metrics.instructions_fired += 1
        src_pe = self.placement[inst.id]
        op = inst.opcode
        if op is Opcode.CONST:
            self._send_operands(src_pe, tag, inst.dests, wrap64(inst.imm))
        elif op is Opcode.ALU:
            a = values[0]
            b = wrap64(inst.imm) if inst.imm is not None else values[1]
            self._send_operands(src_pe, tag, inst.dests, wrap64(ALU_OPS[inst.alu_op](a, b)))
        elif op is Opcode.SELECT:
            result = values[0] if values[2] else values[1]
            self._send_operands(src_pe, tag, inst.dests, result)
        elif op is Opcode.STEER:
            dests = inst.dests if values[1] else inst.dests_false
            self._send_operands(src_pe, tag, dests, values[0])
        elif op is Opcode.WAVE_ADVANCE:
            advanced = Tag(tag.wave + 1, tag.exen, tag.thread)
            self._send_operands(src_pe, advanced, inst.dests, values[0])
            if self.mode == "twc":
                delay = self.topology.route_to_store_buffer(src_pe)
                for dest in inst.dests:
                    tap = Operand(advanced, dest, values[0])
                    self._schedule(self._cycle + delay, "tap", tap)
        elif op is Opcode.OUTPUT:
            self._raw_outputs.append((tag.wave, tag.exen, values[0]))
        elif op is Opcode.LOAD:
            address = wrap64(values[0] + (inst.imm or 0))
            self._send_request(
                src_pe, RequestKind.LOAD, inst, tag,
                address=address, reply_to=tuple(inst.dests),
            )
        elif op is Opcode.STORE:
            address = wrap64(values[0] + (inst.imm or 0))
            self._send_request(src_pe, RequestKind.STORE_ADDR, inst, tag, address=address)
            self._send_request(src_pe, RequestKind.STORE_DATA, inst, tag, value=values[1])
        elif op is Opcode.STORE_ADDR:
            address = wrap64(values[0] + (inst.imm or 0))
            self._send_request(src_pe, RequestKind.STORE_ADDR, inst, tag, address=address)
        elif op is Opcode.STORE_DATA:
            self._send_request(src_pe, RequestKind.STORE_DATA, inst, tag, value=values[0])
        elif op is Opcode.MEMNOP:
            self._send_request(src_pe, RequestKind.MEMNOP, inst, tag)
        else:  # pragma: no cover
            raise RuntimeError(f"unhandled opcode {op}")

    def _fire_allowed(self, inst: Instruction, tag: Tag) -> bool:
        if self.mode == "twc" and inst.opcode is Opcode.WAVE_ADVANCE:
            return not self.sb.speculation.wct_full(tag.wave + 1)
        return True

    # ------------------------------------------------------------------
    def run(self) -> SimResult:
        for constant in self.program.entry_constants:
            self._schedule(0, "op", Operand(Tag(0, 0), constant.dest, wrap64(constant.value)))
        cycle = 0
        last_activity = 0
        cap = self.config.deliveries_per_instruction_per_cycle
        while True:
            if cycle > self.max_cycles:
                raise RuntimeError(f"simulation exceeded {self.max_cycles} cycles")
            self._cycle = cycle
            activity = False

            delivered: dict[str, int] = {}
            while self._heap and self._heap[0][0] <= cycle:
                _, _, kind, payload = heapq.heappop(self._heap)
                if kind == "op":
                    inst_id = payload.dest.inst
                    if delivered.get(inst_id, 0) >= cap:
                        self._schedule(cycle + 1, "op", payload)
                        continue
                    delivered[inst_id] = delivered.get(inst_id, 0) + 1
                    pe = self.pes[self.placement[inst_id]]
                    pe.deliver(payload, self._next_seq())
                elif kind == "req":
                    self.sb.enqueue(payload)
                else:  # tap
                    self.sb.speculation.record_read_set(payload)
                activity = True

            if self.sb.has_work():
                activity = True
            self.sb.step(cycle)

            for pe in self.pes:
                for _ in range(self.config.fires_per_pe_per_cycle):
                    item = pe.take_fireable(allowed=self._fire_allowed)
                    if item is None:
                        break
                    inst, tag, values = item
                    self._fire(inst, tag, values)
                    activity = True

            if activity:
                last_activity = cycle

            pes_ready = any(pe.ready for pe in self.pes)
            if not self._heap and not pes_ready and not self.sb.has_work():
                break
            if not activity and not pes_ready and self._heap:
                cycle = max(cycle + 1, self._heap[0][0])
            else:
                cycle += 1

        self.metrics.total_cycles = last_activity + 1
        if self.sb.waves or self.sb.deferred or self.sb.queues:
            raise DeadlockError(
                "simulation quiesced with uncommitted memory operations: "
                + self.sb.pending_state()
            )
        outputs = [
            (wave, value)
            for wave, exen, value in self._raw_outputs
            if exen == self.sb.current_exen(wave)
        ]
        return SimResult(
            cycles=self.metrics.total_cycles,
            metrics=self.metrics,
            memory=dict(self.memory.data),
            outputs=outputs,
            events=self.events,
        )


def simulate(program: Program, mode: str = "strict", window: int | None = None, **kwargs) -> SimResult:
    """Build a simulator, run it to quiescence, and return the result."""
    return Simulator(program, mode=mode, window=window, **kwargs).run()
