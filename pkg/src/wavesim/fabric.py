"""Execution fabric: processing elements, tag matching and topology.

Operands carry ``(thread, wave, exen, dest)`` tags.  An instruction fires
when every input port holds an operand with the same ``(wave, exen)``.  The
execution number ``exen`` distinguishes re-executions of the same wave after
a speculation rollback; two filters keep stale operands from mixing with the
current execution:

* the *matching-table checkup* run on every delivery, which erases queued
  operands of the same ``(wave, dest)`` with an older exen, and
* a per-PE *execution map*, a sorted set of ``(wave, exen)`` thresholds that
  drops arriving operands whose exen is below the recorded threshold for
  their wave.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field, replace

from .ir import Dest, Instruction, Opcode


@dataclass(frozen=True)
class Tag:
    wave: int
    exen: int
    thread: int = 0


@dataclass(frozen=True)
class Operand:
    tag: Tag
    dest: Dest
    value: int

    def advanced(self) -> "Operand":
        return replace(self, tag=replace(self.tag, wave=self.tag.wave + 1))


@dataclass
class FabricConfig:
    clusters: int = 4
    domains_per_cluster: int = 4
    pes_per_domain: int = 8
    pes_per_pod: int = 2
    instructions_per_pe: int = 8
    matching_capacity: int = 10_000_000
    fires_per_pe_per_cycle: int = 1
    deliveries_per_instruction_per_cycle: int = 3
    latency_intra_pod: int = 1
    latency_intra_domain: int = 2
    latency_intra_cluster: int = 3
    latency_inter_cluster: int = 4
    store_buffer_cluster: int = 0

    @property
    def total_pes(self) -> int:
        return self.clusters * self.domains_per_cluster * self.pes_per_domain


class Topology:
    """Maps PE indices to (cluster, domain, pod) coordinates and latencies."""

    def __init__(self, config: FabricConfig):
        self.config = config

    def coords(self, pe: int) -> tuple[int, int, int]:
        c = self.config
        cluster, rest = divmod(pe, c.domains_per_cluster * c.pes_per_domain)
        domain, local = divmod(rest, c.pes_per_domain)
        return cluster, domain, local // c.pes_per_pod

    def route(self, src_pe: int, dst_pe: int) -> int:
        """Hop latency in cycles between two PEs."""
        c = self.config
        a, b = self.coords(src_pe), self.coords(dst_pe)
        if a[0] != b[0]:
            return c.latency_inter_cluster
        if a[1] != b[1]:
            return c.latency_intra_cluster
        if a[2] != b[2]:
            return c.latency_intra_domain
        return c.latency_intra_pod

    def route_to_store_buffer(self, pe: int) -> int:
        c = self.config
        if self.coords(pe)[0] != c.store_buffer_cluster:
            return c.latency_inter_cluster
        return c.latency_intra_cluster


class PlacementError(ValueError):
    pass


def place_instructions(instruction_ids: list[str], config: FabricConfig) -> dict[str, int]:
    """Assign instructions to PEs round-robin in program order.

    Consecutive instructions land on consecutive PEs (so a wave block spreads
    over a contiguous PE range); assignment wraps into the next slot of each
    PE once every PE holds one instruction.
    """
    capacity = config.total_pes * config.instructions_per_pe
    if len(instruction_ids) > capacity:
        raise PlacementError(
            f"program needs {len(instruction_ids)} slots, fabric has {capacity}"
        )
    return {iid: idx % config.total_pes for idx, iid in enumerate(instruction_ids)}


class ExecutionMap:
    """Sorted ``(wave, exen)`` thresholds; waves below the first key pass freely."""

    def __init__(self) -> None:
        self._waves: list[int] = []
        self._exens: list[int] = []

    def threshold(self, wave: int) -> int:
        idx = bisect.bisect_right(self._waves, wave) - 1
        return self._exens[idx] if idx >= 0 else 0

    def admit(self, wave: int, exen: int) -> bool:
        """Check an arriving operand and update the map.

        Returns False when the operand is stale (exen below the threshold
        recorded for its wave).
        """
        current = self.threshold(wave)
        if exen < current:
            return False
        if exen > current:
            idx = bisect.bisect_left(self._waves, wave)
            # drop entries at or above this wave that the new pair subsumes
            while idx < len(self._waves) and self._exens[idx] <= exen:
                del self._waves[idx]
                del self._exens[idx]
            self._waves.insert(idx, wave)
            self._exens.insert(idx, exen)
        return True

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self._waves, self._exens))


@dataclass
class _Group:
    operands: dict[int, int] = field(default_factory=dict)  # port -> value
    complete_seq: int | None = None


class MatchingTable:
    """Tag-matched operand storage of one PE."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.size = 0
        # (dest inst, wave) -> exen -> group
        self._groups: dict[tuple[str, int], dict[int, _Group]] = {}

    def checkup(self, operand: Operand) -> str:
        """Scan for same ``(wave, dest)`` entries of a different execution.

        Returns ``insert`` when the operand should be stored, ``ignore`` when
        a newer execution is already present.  Entries belonging to an older
        execution are erased.
        """
        key = (operand.dest.inst, operand.tag.wave)
        versions = self._groups.get(key)
        if not versions:
            return "insert"
        exen = operand.tag.exen
        for other in sorted(versions):
            if other > exen:
                return "ignore"
            if other < exen:
                self.size -= len(versions[other].operands)
                del versions[other]
        return "insert"

    def insert(self, operand: Operand) -> _Group | None:
        """Store an operand; returns the group when it became complete."""
        key = (operand.dest.inst, operand.tag.wave)
        group = self._groups.setdefault(key, {}).setdefault(operand.tag.exen, _Group())
        if operand.dest.port in group.operands:
            raise RuntimeError(
                f"duplicate operand delivery for {operand.dest} "
                f"wave={operand.tag.wave} exen={operand.tag.exen}"
            )
        group.operands[operand.dest.port] = operand.value
        self.size += 1
        return group

    def pop(self, inst: str, wave: int, exen: int) -> dict[int, int] | None:
        versions = self._groups.get((inst, wave))
        if not versions or exen not in versions:
            return None
        group = versions.pop(exen)
        if not versions:
            del self._groups[(inst, wave)]
        self.size -= len(group.operands)
        return group.operands

    def peek(self, inst: str, wave: int, exen: int) -> _Group | None:
        return self._groups.get((inst, wave), {}).get(exen)


@dataclass(order=True)
class ReadyGroup:
    wave: int
    exen: int
    seq: int
    inst: str


class ProcessingElement:
    """One PE: an instruction store, a matching table and an execution map."""

    def __init__(self, index: int, config: FabricConfig):
        self.index = index
        self.config = config
        self.instructions: dict[str, Instruction] = {}
        self.table = MatchingTable(config.matching_capacity)
        self.execution_map = ExecutionMap()
        self.ready: list[ReadyGroup] = []

    def host(self, inst: Instruction) -> None:
        if len(self.instructions) >= self.config.instructions_per_pe:
            raise PlacementError(f"PE {self.index} instruction store full")
        self.instructions[inst.id] = inst

    def deliver(self, operand: Operand, seq: int) -> str:
        """Deliver one operand.  Returns the outcome:

        ``stale``   dropped by the execution map
        ``ignored`` superseded by a newer execution in the table
        ``blocked`` matching table full (caller should retry next cycle)
        ``stored``  inserted, group not complete yet
        ``ready``   inserted and the instruction group became fireable
        """
        if not self.execution_map.admit(operand.tag.wave, operand.tag.exen):
            return "stale"
        outcome = self.table.checkup(operand)
        if outcome == "ignore":
            return "ignored"
        if self.table.size >= self.table.capacity:
            return "blocked"
        group = self.table.insert(operand)
        inst = self.instructions[operand.dest.inst]
        if group is not None and len(group.operands) == inst.arity:
            group.complete_seq = seq
            self.ready.append(
                ReadyGroup(operand.tag.wave, operand.tag.exen, seq, inst.id)
            )
            return "ready"
        return "stored"

    def take_fireable(self, allowed=None) -> tuple[Instruction, Tag, dict[int, int]] | None:
        """Pop the oldest ready group (lowest wave, exen, then arrival).

        ``allowed(inst, tag)`` may veto a group; vetoed groups stay queued
        (used to stall wave advances when a context table is full).
        """
        self.ready.sort()
        index = 0
        while index < len(self.ready):
            group = self.ready[index]
            inst = self.instructions[group.inst]
            tag = Tag(group.wave, group.exen)
            if allowed is not None and not allowed(inst, tag):
                index += 1
                continue
            self.ready.pop(index)
            operands = self.table.pop(group.inst, group.wave, group.exen)
            if operands is None:
                continue  # erased by a checkup since it became ready
            if len(operands) != inst.arity:
                continue
            return inst, tag, operands
        return None
