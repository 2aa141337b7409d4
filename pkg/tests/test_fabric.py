"""Fabric units: topology, placement, matching table, execution map, PE."""

import pytest

from wavesim.fabric import (
    ExecutionMap,
    FabricConfig,
    MatchingTable,
    Operand,
    PlacementError,
    ProcessingElement,
    Tag,
    Topology,
    place_instructions,
)
from wavesim.ir import Dest, Instruction, Opcode


def make_operand(inst="a", port=0, wave=0, exen=0, value=1):
    return Operand(Tag(wave, exen), Dest(inst, port), value)


class TestTopology:
    def setup_method(self):
        self.config = FabricConfig()
        self.topo = Topology(self.config)

    def test_coords_layout(self):
        # PEs 0..7 fill cluster 0 / domain 0, pods of two
        assert self.topo.coords(0) == (0, 0, 0)
        assert self.topo.coords(1) == (0, 0, 0)
        assert self.topo.coords(2) == (0, 0, 1)
        assert self.topo.coords(8) == (0, 1, 0)
        assert self.topo.coords(32) == (1, 0, 0)

    def test_route_latency_tiers(self):
        c = self.config
        assert self.topo.route(0, 1) == c.latency_intra_pod
        assert self.topo.route(0, 2) == c.latency_intra_domain
        assert self.topo.route(0, 8) == c.latency_intra_cluster
        assert self.topo.route(0, 32) == c.latency_inter_cluster

    def test_store_buffer_route(self):
        c = self.config
        assert self.topo.route_to_store_buffer(0) == c.latency_intra_cluster
        assert self.topo.route_to_store_buffer(32) == c.latency_inter_cluster

    def test_total_pes(self):
        assert self.config.total_pes == 4 * 4 * 8


class TestPlacement:
    def test_round_robin_contiguous(self):
        config = FabricConfig(clusters=1, domains_per_cluster=1, pes_per_domain=4)
        ids = [f"i{k}" for k in range(6)]
        placement = place_instructions(ids, config)
        assert [placement[i] for i in ids] == [0, 1, 2, 3, 0, 1]

    def test_capacity_overflow(self):
        config = FabricConfig(
            clusters=1, domains_per_cluster=1, pes_per_domain=1,
            instructions_per_pe=2,
        )
        with pytest.raises(PlacementError):
            place_instructions(["a", "b", "c"], config)


class TestExecutionMap:
    def test_admit_below_threshold_rejected(self):
        emap = ExecutionMap()
        assert emap.admit(5, 2)
        assert emap.threshold(5) == 2
        assert not emap.admit(5, 1)
        assert emap.admit(5, 2)

    def test_threshold_applies_to_later_waves(self):
        emap = ExecutionMap()
        emap.admit(5, 2)
        assert emap.threshold(9) == 2
        assert emap.threshold(4) == 0
        assert not emap.admit(9, 1)

    def test_subsumed_entries_dropped(self):
        emap = ExecutionMap()
        emap.admit(5, 1)
        emap.admit(8, 2)
        emap.admit(3, 4)
        assert emap.pairs() == [(3, 4)]


class TestMatchingTable:
    def test_checkup_erases_older_execution(self):
        table = MatchingTable(100)
        table.insert(make_operand(exen=0))
        assert table.checkup(make_operand(exen=1)) == "insert"
        assert table.pop("a", 0, 0) is None
        assert table.size == 0

    def test_checkup_ignores_when_newer_present(self):
        table = MatchingTable(100)
        table.insert(make_operand(exen=2))
        assert table.checkup(make_operand(exen=1)) == "ignore"

    def test_duplicate_delivery_raises(self):
        table = MatchingTable(100)
        table.insert(make_operand())
        with pytest.raises(RuntimeError):
            table.insert(make_operand())

    def test_pop_clears_size(self):
        table = MatchingTable(100)
        table.insert(make_operand(port=0))
        table.insert(make_operand(port=1))
        assert table.size == 2
        assert table.pop("a", 0, 0) == {0: 1, 1: 1}
        assert table.size == 0


class TestProcessingElement:
    def make_pe(self):
        pe = ProcessingElement(0, FabricConfig())
        pe.host(Instruction(id="add", block="b", opcode=Opcode.ALU, alu_op="add",
                            dests=(Dest("out", 0),)))
        return pe

    def test_group_completion_fires(self):
        pe = self.make_pe()
        assert pe.deliver(make_operand("add", 0, value=3), seq=0) == "stored"
        assert pe.deliver(make_operand("add", 1, value=4), seq=1) == "ready"
        inst, tag, operands = pe.take_fireable()
        assert inst.id == "add"
        assert tag == Tag(0, 0)
        assert operands == {0: 3, 1: 4}
        assert pe.take_fireable() is None

    def test_stale_operand_dropped(self):
        pe = self.make_pe()
        pe.deliver(make_operand("add", 0, wave=2, exen=3), seq=0)
        assert pe.deliver(make_operand("add", 1, wave=2, exen=1), seq=1) == "stale"

    def test_rollback_erases_partial_group(self):
        pe = self.make_pe()
        pe.deliver(make_operand("add", 0, wave=2, exen=0, value=7), seq=0)
        # re-execution arrives with a bumped exen: old half must not match
        assert pe.deliver(make_operand("add", 0, wave=2, exen=1, value=8), seq=1) == "stored"
        assert pe.deliver(make_operand("add", 1, wave=2, exen=1, value=9), seq=2) == "ready"
        _, tag, operands = pe.take_fireable()
        assert tag.exen == 1
        assert operands == {0: 8, 1: 9}

    def test_take_fireable_orders_by_wave(self):
        pe = self.make_pe()
        pe.deliver(make_operand("add", 0, wave=5), seq=0)
        pe.deliver(make_operand("add", 1, wave=5), seq=1)
        pe.deliver(make_operand("add", 0, wave=1), seq=2)
        pe.deliver(make_operand("add", 1, wave=1), seq=3)
        _, tag, _ = pe.take_fireable()
        assert tag.wave == 1

    def test_allowed_veto_keeps_group_queued(self):
        pe = self.make_pe()
        pe.deliver(make_operand("add", 0), seq=0)
        pe.deliver(make_operand("add", 1), seq=1)
        assert pe.take_fireable(allowed=lambda inst, tag: False) is None
        assert pe.take_fireable() is not None

    def test_host_capacity(self):
        config = FabricConfig(instructions_per_pe=1)
        pe = ProcessingElement(0, config)
        pe.host(Instruction(id="a", block="b", opcode=Opcode.OUTPUT))
        with pytest.raises(PlacementError):
            pe.host(Instruction(id="b", block="b", opcode=Opcode.OUTPUT))


class TestOperand:
    def test_advanced_bumps_wave_only(self):
        op = make_operand(wave=3, exen=2)
        adv = op.advanced()
        assert adv.tag == Tag(4, 2)
        assert adv.dest == op.dest
