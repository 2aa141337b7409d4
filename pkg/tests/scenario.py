"""Direct store-buffer driver for hazard-semantics tests.

Drives a speculative store buffer with hand-ordered request arrivals so
that tests can exercise every interleaving of two or more waves' memory
operations, independently of fabric timing.  Each scenario is checked
against plain sequential execution (abort-and-serialize semantics): the
final memory image and every load's (re-)observed value must match the
wave-by-wave, chain-order reference.
"""

from __future__ import annotations

from wavesim.ir import Dest, MemAnnotation, WILD_NONE
from wavesim.memory import MemoryModel, MemoryRequest, RequestKind, StoreBuffer

#: op encodings: ("load", addr) or ("store", addr, value)
Op = tuple


def chain_annotations(count: int) -> list[MemAnnotation]:
    """Linear chain <.,0,1> <0,1,2> ... <k-1,k,.> for one wave."""
    anns = []
    for c in range(count):
        pred = WILD_NONE if c == 0 else c - 1
        succ = WILD_NONE if c == count - 1 else c + 1
        anns.append(MemAnnotation(pred, c, succ))
    return anns


def sequential_reference(
    base: dict[int, int], waves: dict[int, list[Op]]
) -> tuple[dict[int, int], dict[str, int]]:
    """Execute waves in order, ops in chain order; return memory + loads."""
    memory = dict(base)
    loads: dict[str, int] = {}
    for wave in sorted(waves):
        for c, op in enumerate(waves[wave]):
            if op[0] == "load":
                loads[f"obs_w{wave}_c{c}"] = memory.get(op[1], 0)
            else:
                memory[op[1]] = op[2]
    return memory, loads


class ScenarioRun:
    """Delivers one wave-op at a time and fully drains the buffer between
    deliveries, emulating an arbitrary arrival interleaving."""

    def __init__(
        self,
        base: dict[int, int],
        waves: dict[int, list[Op]],
        window: int | None = None,
        on_rollback=None,
    ):
        self.base = dict(base)
        self.waves = waves
        self.sb = StoreBuffer(
            mode="twc",
            window=window,
            memory=MemoryModel(image=dict(base)),
            send_operand=self._reply,
            event=self._event,
        )
        self.loads: dict[str, int] = {}
        self.delivered: dict[int, list[int]] = {w: [] for w in waves}  # op indices
        self.applied_stores: list[tuple[int, int]] = []  # (wave, c), apply order
        self.rollbacks: list[int] = []
        self._user_hook = on_rollback
        self.sb.speculation.on_rollback = self._rolled
        self._redo: list[int] = []
        self._cycle = 0

    # -- plumbing ----------------------------------------------------------
    def _reply(self, operand, delay) -> None:
        self.loads[operand.dest.inst] = operand.value

    def _event(self, name: str, **fields) -> None:
        if name == "apply" and fields.get("kind") == "store":
            self.applied_stores.append((fields["wave"], fields["c"]))

    def _rolled(self, start: int, cycle: int) -> None:
        self.rollbacks.append(start)
        self._redo.extend(w for w in self.delivered if w >= start and self.delivered[w])
        if self._user_hook is not None:
            self._user_hook(self, start)
        # rolled-back applies are undone; they re-appear if re-executed
        self.applied_stores = [(w, c) for w, c in self.applied_stores if w < start]

    def _requests(self, wave: int, c: int) -> list[MemoryRequest]:
        op = self.waves[wave][c]
        ann = chain_annotations(len(self.waves[wave]))[c]
        exen = self.sb.current_exen(wave)
        if op[0] == "load":
            return [MemoryRequest(
                RequestKind.LOAD, ann, wave, exen, address=op[1],
                reply_to=(Dest(f"obs_w{wave}_c{c}", 0),),
            )]
        return [
            MemoryRequest(RequestKind.STORE_ADDR, ann, wave, exen, address=op[1]),
            MemoryRequest(RequestKind.STORE_DATA, ann, wave, exen, value=op[2]),
        ]

    def _pump(self) -> None:
        guard = 0
        while self.sb.inq or self.sb.resolve_ready() is not None:
            self.sb.step(self._cycle)
            self._cycle += 1
            guard += 1
            assert guard < 100_000, "scenario failed to drain"
        while self._redo:
            doomed = sorted(set(self._redo))
            self._redo.clear()
            for wave in doomed:
                for c in self.delivered.get(wave, []):
                    for request in self._requests(wave, c):
                        self.sb.enqueue(request)
            while self.sb.inq or self.sb.resolve_ready() is not None:
                self.sb.step(self._cycle)
                self._cycle += 1
                guard += 1
                assert guard < 100_000, "scenario failed to drain"

    # -- public API ---------------------------------------------------------
    def deliver(self, wave: int, c: int) -> None:
        for request in self._requests(wave, c):
            self.sb.enqueue(request)
        self.delivered[wave].append(c)
        self._pump()

    def run(self, order: list[int]) -> None:
        """``order`` names the wave of each successive delivery; within a
        wave, ops always arrive in chain order."""
        cursor = {w: 0 for w in self.waves}
        for wave in order:
            self.deliver(wave, cursor[wave])
            cursor[wave] += 1

    def expected_surviving_memory(self, start: int) -> dict[int, int]:
        """Memory image as if waves >= ``start`` had never executed: the
        newest applied store below ``start`` wins at each address."""
        memory = dict(self.base)
        best: dict[int, tuple[int, int]] = {}
        for wave, c in self.applied_stores:
            if wave >= start:
                continue
            op = self.waves[wave][c]
            if best.get(op[1], (-1, -1)) <= (wave, c):
                best[op[1]] = (wave, c)
                memory[op[1]] = op[2]
        return memory

    def check_final(self) -> None:
        memory, loads = sequential_reference(self.base, self.waves)
        actual = {a: self.sb.memory.read_quiet(a) for a in memory}
        assert actual == memory, f"memory {actual} != sequential {memory}"
        assert self.loads == loads, f"loads {self.loads} != sequential {loads}"


def interleavings(waves: dict[int, list[Op]]):
    """All arrival orders of the waves' ops (within-wave order preserved)."""
    keys = sorted(waves)

    def rec(remaining: tuple[int, ...]):
        if not any(remaining):
            yield []
            return
        for i, left in enumerate(remaining):
            if left:
                rest = remaining[:i] + (left - 1,) + remaining[i + 1 :]
                for tail in rec(rest):
                    yield [keys[i]] + tail

    yield from rec(tuple(len(waves[k]) for k in keys))
