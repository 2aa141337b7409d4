"""Speculative wave ordering: conflict detection, logging, and rollback.

In speculative mode the store buffer executes memory operations from waves
beyond the commit frontier.  This module keeps the bookkeeping needed to make
that safe:

* an operation history keyed by address (detects conflicts with later waves),
* a per-wave catalog of the same entries (fast erase on commit/rollback),
* per-wave context tables capturing every operand that crossed into a wave,
  so an aborted wave can be restarted by re-sending its inputs.

Conflicts are repaired in place where possible: a store that arrives after a
later wave already stored to the same address is absorbed into that later
store's backup (write-after-write); a load that arrives after a later wave's
store reads that store's backup (write-after-read).  Only a true
read-after-write misorder forces an abort of the reading wave and everything
after it.
"""
from __future__ import annotations

from dataclasses import dataclass

from .fabric import Operand, Tag
from .ir import Dest


@dataclass
class LogEntry:
    wave: int
    c: int
    seq: int
    kind: str  # "load" | "store"
    address: int
    backup: int

    def order_key(self) -> tuple[int, int, int]:
        return (self.wave, self.c, self.seq)


@dataclass
class WctLine:
    value: int
    dest: Dest
    exen: int


class Speculation:
    def __init__(self, store_buffer, wct_capacity: int | None = None):
        self.sb = store_buffer
        self.wct_capacity = wct_capacity
        self.moh: dict[int, list[LogEntry]] = {}
        self.catalog: dict[int, list[LogEntry]] = {}
        self.wct: dict[int, dict[tuple[int, int], WctLine]] = {}
        # each rollback at wave X bumps the execution number of every wave
        # >= X; the floor list reconstructs the current number for any wave
        self.floors: list[tuple[int, int]] = []
        self._seq = 0
        self.on_rollback = None

    # ------------------------------------------------------------------
    def current_exen(self, wave: int) -> int:
        best = 0
        for floor_wave, exen in self.floors:
            if wave >= floor_wave and exen > best:
                best = exen
        return best

    def wct_full(self, wave: int) -> bool:
        if self.wct_capacity is None:
            return False
        return len(self.wct.get(wave, ())) >= self.wct_capacity

    def record_read_set(self, operand: Operand) -> None:
        """Capture one operand entering a wave; re-send it if it was in
        flight during a rollback.

        The operand's execution number is the sending wave's.  If it is
        older than even the *sender's* current number, the sender itself was
        rolled back and will re-fire, so this copy is a duplicate and is
        dropped.  Otherwise a number older than the target wave's means the
        operand crossed a rollback of the target in flight: it would never
        be re-sent by anyone else, so it is renumbered and re-sent here.
        """
        wave = operand.tag.wave
        current = self.current_exen(wave)
        if operand.tag.exen > current:
            raise RuntimeError("operand execution number ahead of the wave's")
        if operand.tag.exen < self.current_exen(wave - 1):
            return
        key = (operand.dest.inst, operand.dest.port)
        self.wct.setdefault(wave, {})[key] = WctLine(operand.value, operand.dest, current)
        if operand.tag.exen < current:
            fresh = Operand(Tag(wave, current, operand.tag.thread), operand.dest, operand.value)
            self.sb.send_operand(fresh, self.sb.route_to_pe(operand.dest.inst))

    # ------------------------------------------------------------------
    def _later(self, address: int, wave: int) -> list[LogEntry]:
        return [e for e in self.moh.get(address, ()) if e.wave > wave]

    def _log(self, wave: int, slot, address: int, backup: int) -> None:
        self._seq += 1
        entry = LogEntry(wave, slot.c, self._seq, slot.kind, address, backup)
        self.moh.setdefault(address, []).append(entry)
        self.catalog.setdefault(wave, []).append(entry)

    def detect_and_resolve(self, wave: int, slot, cycle: int):
        """Apply one memory operation, repairing or aborting on conflicts.

        Returns ``(value, latency)`` for loads, ``None`` for stores.
        """
        sb = self.sb
        address = slot.address
        if slot.kind == "store":
            later = self._later(address, wave)
            readers = [e.wave for e in later if e.kind == "load"]
            if readers:
                sb.metrics.raw += 1
                sb.event("raw", cycle=cycle, wave=wave, addr=address, abort=min(readers))
                self.rollback(min(readers), cycle)
                later = self._later(address, wave)
            stores = sorted((e for e in later if e.kind == "store"), key=LogEntry.order_key)
            speculative = sb.is_speculative(wave)
            if stores:
                nearest = stores[0]
                sb.metrics.waw += 1
                sb.event("waw", cycle=cycle, wave=wave, addr=address, masked_by=nearest.wave)
                backup = nearest.backup
                nearest.backup = slot.value
            else:
                backup = sb.memory.read_quiet(address)
                sb.memory.write(address, slot.value)
            if speculative:
                self._log(wave, slot, address, backup)
            return None
        later = self._later(address, wave)
        stores = sorted((e for e in later if e.kind == "store"), key=LogEntry.order_key)
        if stores:
            sb.metrics.war += 1
            sb.event("war", cycle=cycle, wave=wave, addr=address, forwarded_from=stores[0].wave)
            value, latency = stores[0].backup, 1
        else:
            value, latency = sb.memory.read(address)
        if sb.is_speculative(wave):
            self._log(wave, slot, address, value)
        return value, latency

    # ------------------------------------------------------------------
    def rollback(self, start: int, cycle: int) -> None:
        """Abort wave ``start`` and every later wave, then restart ``start``."""
        sb = self.sb
        assert start > sb.last_committed + 1
        sb.metrics.aborts += 1

        doomed: list[LogEntry] = []
        for wave in [w for w in self.catalog if w >= start]:
            doomed.extend(self.catalog.pop(wave))
        for entry in sorted(doomed, key=LogEntry.order_key, reverse=True):
            if entry.kind == "store":
                sb.memory.write(entry.address, entry.backup)
            entries = self.moh.get(entry.address)
            entries.remove(entry)
            if not entries:
                del self.moh[entry.address]

        for wave in [w for w in self.wct if w > start]:
            del self.wct[wave]
        for wave in [w for w in sb.waves if w >= start]:
            del sb.waves[wave]
        for wave in [w for w in sb.deferred if w >= start]:
            del sb.deferred[wave]

        sb.last_exen += 1
        self.floors.append((start, sb.last_exen))

        for line in self.wct.get(start, {}).values():
            line.exen = sb.last_exen
            operand = Operand(Tag(start, sb.last_exen), line.dest, line.value)
            sb.send_operand(operand, sb.route_to_pe(line.dest.inst))

        sb.event("rollback", cycle=cycle, wave=start, exen=sb.last_exen)
        if self.on_rollback is not None:
            self.on_rollback(start, cycle)

    def on_commit(self, wave: int) -> None:
        """Drop speculation state made permanent by committing ``wave``."""
        self.wct.pop(wave, None)
        promoted = wave + 1
        for entry in self.catalog.pop(promoted, ()):
            entries = self.moh.get(entry.address)
            entries.remove(entry)
            if not entries:
                del self.moh[entry.address]
        self.wct.pop(promoted, None)
