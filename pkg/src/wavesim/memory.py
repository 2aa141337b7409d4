"""Wave-ordered memory: the store buffer and the cache model.

The store buffer keeps one request list per dynamic wave.  Within a wave,
requests become ready in annotation-chain order; across waves, ordering is
controlled by the commit frontier and (in speculative mode) the speculation
window.  A wave's operations are executed strictly after all previous waves
in ``strict``/``decoupled`` modes; in ``twc`` mode waves up to
``lastCommittedWave + window`` may execute speculatively and are fixed up by
the speculation layer when conflicts appear.
"""
from __future__ import annotations

from collections import OrderedDict, deque
from dataclasses import dataclass, field
from enum import Enum

from .fabric import Operand, Tag
from .ir import Dest, MemAnnotation, WILD_NONE, WILD_UNKNOWN


class RequestKind(Enum):
    LOAD = "load"
    STORE_ADDR = "sta"
    STORE_DATA = "std"
    MEMNOP = "memnop"


@dataclass
class MemoryRequest:
    kind: RequestKind
    annotation: MemAnnotation
    wave: int
    exen: int
    address: int | None = None
    value: int | None = None
    reply_to: tuple[Dest, ...] = ()
    thread: int = 0


@dataclass
class Metrics:
    total_cycles: int = 0
    requests_executed: int = 0
    instructions_fired: int = 0
    commits: int = 0
    aborts: int = 0
    raw: int = 0
    war: int = 0
    waw: int = 0
    stale_drops: int = 0
    window_defers: int = 0

    def hazard_counts(self) -> dict[str, int]:
        return {"raw": self.raw, "war": self.war, "waw": self.waw}


@dataclass
class MemoryConfig:
    l1_lines: int = 1024
    l1_latency: int = 1
    l2_lines: int = 131072
    l2_ways: int = 4
    l2_latency: int = 7
    memory_latency: int = 100


class CacheModel:
    """Two-level write-back, write-allocate cache tag model.

    Only latency is modelled here; data always lives in the flat backing
    store, which keeps rollback writes trivially coherent.
    """

    def __init__(self, config: MemoryConfig):
        self.config = config
        self._l1: dict[int, int] = {}
        self._l2: dict[int, OrderedDict] = {}
        self._l2_sets = max(1, config.l2_lines // config.l2_ways)

    def access(self, addr: int) -> int:
        cfg = self.config
        slot = addr % cfg.l1_lines
        if self._l1.get(slot) == addr:
            return cfg.l1_latency
        ways = self._l2.setdefault(addr % self._l2_sets, OrderedDict())
        if addr in ways:
            ways.move_to_end(addr)
            latency = cfg.l2_latency
        else:
            latency = cfg.memory_latency
            ways[addr] = True
            if len(ways) > cfg.l2_ways:
                ways.popitem(last=False)
        self._l1[slot] = addr
        return latency


class MemoryModel:
    """Flat 64-bit word memory behind the cache tag model."""

    def __init__(self, config: MemoryConfig | None = None, image: dict[int, int] | None = None):
        self.config = config or MemoryConfig()
        self.cache = CacheModel(self.config)
        self.data: dict[int, int] = dict(image or {})

    def read(self, addr: int) -> tuple[int, int]:
        return self.data.get(addr, 0), self.cache.access(addr)

    def write(self, addr: int, value: int) -> int:
        self.data[addr] = value
        return self.cache.access(addr)

    def read_quiet(self, addr: int) -> int:
        return self.data.get(addr, 0)

    def dump(self) -> str:
        lines = [f"{addr} {self.data[addr]}" for addr in sorted(self.data)]
        return "\n".join(lines) + "\n"


@dataclass
class Slot:
    """One chain position: a load, a memnop, or a store (both halves)."""

    c: int
    annotation: MemAnnotation
    kind: str = ""  # "load" | "store" | "memnop"
    address: int | None = None
    value: int | None = None
    reply_to: tuple[Dest, ...] = ()
    exen: int = 0
    seq: int = 0
    executed: bool = False
    applied: bool = False

    @property
    def have_addr(self) -> bool:
        return self.kind == "memnop" or self.address is not None

    @property
    def have_data(self) -> bool:
        return self.kind != "store" or self.value is not None


@dataclass
class WaveState:
    wave: int
    slots: dict[int, Slot] = field(default_factory=dict)
    executed: set[int] = field(default_factory=set)
    executed_succ: set[int] = field(default_factory=set)
    finished: bool = False

    def chain_ready(self, slot: Slot) -> bool:
        pred = slot.annotation.pred
        if pred == WILD_NONE:
            return True
        if pred == WILD_UNKNOWN:
            return slot.c in self.executed_succ
        return pred in self.executed

    def mark_executed(self, slot: Slot) -> None:
        slot.executed = True
        self.executed.add(slot.c)
        succ = slot.annotation.succ
        if isinstance(succ, int):
            self.executed_succ.add(succ)
        elif succ == WILD_NONE:
            self.finished = True


@dataclass
class _PartialQueue:
    """Decoupled-store queue opened by a StoreAddr awaiting its data."""

    address: int
    wave: int
    seq: int
    entries: deque = field(default_factory=deque)


class DeadlockError(RuntimeError):
    pass


class StoreBuffer:
    """Memory interface of the fabric: wave request lists plus the caches."""

    def __init__(
        self,
        mode: str = "strict",
        window: int | None = None,
        memory: MemoryModel | None = None,
        metrics: Metrics | None = None,
        send_operand=None,
        route_to_pe=None,
        event=None,
        input_ports: int = 4,
        applications_per_cycle: int = 1,
        wct_capacity: int | None = None,
    ):
        if mode not in ("strict", "decoupled", "twc"):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == "twc" and window is not None and window < 1:
            raise ValueError("speculation window must be >= 1")
        self.mode = mode
        self.window = window
        self.memory = memory or MemoryModel()
        self.metrics = metrics or Metrics()
        self.send_operand = send_operand or (lambda operand, delay: None)
        self.route_to_pe = route_to_pe or (lambda inst_id: 1)
        self.event = event or (lambda _name, **fields: None)
        self.input_ports = input_ports
        self.applications_per_cycle = applications_per_cycle

        self.last_committed = -1
        self.last_exen = 0
        self.waves: dict[int, WaveState] = {}
        self.deferred: dict[int, list[MemoryRequest]] = {}
        self.inq: deque[MemoryRequest] = deque()
        self.queues: dict[int, _PartialQueue] = {}
        self._seq = 0
        self.max_wave_seen = -1

        from .twc import Speculation

        self.speculation = Speculation(self, wct_capacity=wct_capacity)

    # ------------------------------------------------------------------
    # configuration helpers
    def current_exen(self, wave: int) -> int:
        return self.speculation.current_exen(wave)

    def _gate(self) -> float:
        if self.mode == "twc" and self.window is None:
            return float("inf")
        window = self.window if self.mode == "twc" else 1
        return self.last_committed + window

    def speculation_gate(self, wave: int) -> bool:
        """True when a request of this wave may execute now."""
        return wave <= self._gate()

    def is_speculative(self, wave: int) -> bool:
        return wave > self.last_committed + 1

    # ------------------------------------------------------------------
    # request intake
    def enqueue(self, request: MemoryRequest) -> None:
        self.inq.append(request)

    def accept_request(self, request: MemoryRequest) -> str:
        """Admit one request.  Returns the outcome:

        ``accepted``        placed into its wave's request list
        ``rejected-stale``  execution number does not match the wave's
        ``rejected-window`` beyond the speculation window, buffered
        """
        wave = request.wave
        if wave <= self.last_committed or request.exen != self.current_exen(wave):
            self.metrics.stale_drops += 1
            self.event("reject-stale", wave=wave, exen=request.exen, c=request.annotation.cur)
            return "rejected-stale"
        self.max_wave_seen = max(self.max_wave_seen, wave)
        if not self.speculation_gate(wave):
            self.deferred.setdefault(wave, []).append(request)
            self.metrics.window_defers += 1
            return "rejected-window"
        self._insert(request)
        return "accepted"

    def _insert(self, request: MemoryRequest) -> None:
        ws = self.waves.setdefault(request.wave, WaveState(request.wave))
        c = request.annotation.cur
        slot = ws.slots.get(c)
        if slot is None:
            self._seq += 1
            slot = Slot(c=c, annotation=request.annotation, exen=request.exen, seq=self._seq)
            ws.slots[c] = slot
        if request.kind is RequestKind.LOAD:
            slot.kind = "load"
            slot.address = request.address
            slot.reply_to = request.reply_to
        elif request.kind is RequestKind.MEMNOP:
            slot.kind = "memnop"
        elif request.kind is RequestKind.STORE_ADDR:
            slot.kind = "store"
            slot.address = request.address
        elif request.kind is RequestKind.STORE_DATA:
            slot.kind = "store"
            slot.value = request.value

    def _promote(self) -> None:
        gate = self._gate()
        for wave in sorted([w for w in self.deferred if w <= gate]):
            for request in self.deferred.pop(wave):
                if request.exen == self.current_exen(wave):
                    self._insert(request)
                else:
                    self.metrics.stale_drops += 1

    # ------------------------------------------------------------------
    # execution
    def resolve_ready(self) -> tuple[WaveState, Slot] | None:
        """Lowest (wave, C) request that may execute this cycle."""
        gate = self._gate()
        for wave in sorted(self.waves):
            if wave > gate:
                break
            ws = self.waves[wave]
            for c in sorted(ws.slots):
                slot = ws.slots[c]
                if slot.executed or not slot.kind:
                    continue
                if not ws.chain_ready(slot):
                    continue
                if slot.kind == "store" and not slot.have_addr:
                    continue
                if self.mode != "decoupled" and not slot.have_data:
                    continue
                return ws, slot
        return None

    def _drainable(self) -> _PartialQueue | None:
        for addr in sorted(self.queues):
            queue = self.queues[addr]
            if queue.entries:
                head = queue.entries[0]
                if head.kind != "store" or head.have_data:
                    return queue
        return None

    def step(self, cycle: int) -> None:
        for _ in range(self.input_ports):
            if not self.inq:
                break
            self.accept_request(self.inq.popleft())
        for _ in range(self.applications_per_cycle):
            queue = self._drainable() if self.mode == "decoupled" else None
            if queue is not None:
                slot = queue.entries.popleft()
                self._apply(self.waves[queue.wave], slot, cycle, from_queue=True)
                if not queue.entries and self.queues.get(queue.address) is queue:
                    del self.queues[queue.address]
                continue
            ready = self.resolve_ready()
            if ready is None:
                break
            ws, slot = ready
            self.apply_operation(ws, slot, cycle)
        self.advance_commit_frontier()
        self._promote()

    def apply_operation(self, ws: WaveState, slot: Slot, cycle: int) -> None:
        """Execute one chain-ready request (the per-cycle memory operation)."""
        if self.mode == "decoupled" and slot.kind != "memnop":
            queue = self.queues.get(slot.address)
            if queue is not None:
                # an open partial store queue absorbs same-address operations
                ws.mark_executed(slot)
                queue.entries.append(slot)
                return
            if slot.kind == "store" and not slot.have_data:
                ws.mark_executed(slot)
                self._seq += 1
                new_queue = _PartialQueue(slot.address, ws.wave, slot.seq)
                new_queue.entries.append(slot)
                self.queues[slot.address] = new_queue
                return
        ws.mark_executed(slot)
        self._apply(ws, slot, cycle, from_queue=False)

    def _apply(self, ws: WaveState, slot: Slot, cycle: int, from_queue: bool) -> None:
        slot.applied = True
        self.metrics.requests_executed += 1
        wave = ws.wave
        if slot.kind == "memnop":
            self.event("apply", cycle=cycle, wave=wave, c=slot.c, kind="memnop")
            return
        if self.mode == "twc":
            result = self.speculation.detect_and_resolve(wave, slot, cycle)
        elif slot.kind == "store":
            self.memory.write(slot.address, slot.value)
            result = None
        else:
            result = self.memory.read(slot.address)
        self.event(
            "apply", cycle=cycle, wave=wave, c=slot.c, kind=slot.kind, addr=slot.address
        )
        if slot.kind == "load" and result is not None:
            value, latency = result
            for dest in slot.reply_to:
                operand = Operand(Tag(wave, slot.exen), dest, value)
                self.send_operand(operand, latency + self.route_to_pe(dest.inst))

    # ------------------------------------------------------------------
    # commit
    def _wave_complete(self, ws: WaveState) -> bool:
        if not ws.finished:
            return False
        if self.mode == "decoupled":
            if any(q.wave == ws.wave and q.entries for q in self.queues.values()):
                return False
            if any(s.executed and not s.applied for s in ws.slots.values()):
                return False
        return True

    def advance_commit_frontier(self) -> int:
        committed = 0
        while True:
            ws = self.waves.get(self.last_committed + 1)
            if ws is None or not self._wave_complete(ws):
                break
            self.commit_wave(ws.wave)
            committed += 1
        return committed

    def commit_wave(self, wave: int) -> None:
        assert wave == self.last_committed + 1
        self.last_committed = wave
        del self.waves[wave]
        self.metrics.commits += 1
        self.speculation.on_commit(wave)
        self.event("commit", wave=wave)

    # ------------------------------------------------------------------
    # engine integration
    def has_work(self) -> bool:
        if self.inq:
            return True
        if self.mode == "decoupled" and self._drainable() is not None:
            return True
        if self.resolve_ready() is not None:
            return True
        if self.deferred and min(self.deferred) <= self._gate():
            return True
        return False

    def pending_state(self) -> str:
        """Human-readable frontier snapshot for deadlock diagnostics."""
        parts = [f"lastCommittedWave={self.last_committed}"]
        for wave in sorted(self.waves):
            ws = self.waves[wave]
            waiting = sorted(c for c, s in ws.slots.items() if not s.executed)
            parts.append(f"wave {wave}: executed={sorted(ws.executed)} waiting={waiting}")
        if self.deferred:
            parts.append(f"deferred waves: {sorted(self.deferred)}")
        return "; ".join(parts)

    def drained(self) -> bool:
        return (
            not self.inq
            and not self.deferred
            and not self.queues
            and all(
                all(s.executed for s in ws.slots.values() if s.kind)
                for ws in self.waves.values()
            )
        )
