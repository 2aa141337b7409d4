"""Store buffer and cache model: ordering, decoupled queues, deadlock."""

import pytest

from wavesim.asm import parse_program
from wavesim.engine import DeadlockError, Simulator
from wavesim.ir import Dest, MemAnnotation, WILD_NONE, WILD_UNKNOWN
from wavesim.memory import (
    CacheModel,
    MemoryConfig,
    MemoryModel,
    MemoryRequest,
    Metrics,
    RequestKind,
    StoreBuffer,
)

from scenario import chain_annotations


def load_req(ann, wave, addr, inst="obs", exen=0):
    return MemoryRequest(RequestKind.LOAD, ann, wave, exen, address=addr,
                         reply_to=(Dest(inst, 0),))


def sta_req(ann, wave, addr, exen=0):
    return MemoryRequest(RequestKind.STORE_ADDR, ann, wave, exen, address=addr)


def std_req(ann, wave, value, exen=0):
    return MemoryRequest(RequestKind.STORE_DATA, ann, wave, exen, value=value)


def pump(sb, limit=10_000):
    cycle = 0
    while sb.inq or sb.has_work():
        sb.step(cycle)
        cycle += 1
        assert cycle < limit, "store buffer failed to drain"
    return cycle


class TestCacheModel:
    def test_latency_tiers(self):
        cache = CacheModel(MemoryConfig())
        cfg = MemoryConfig()
        assert cache.access(0x40) == cfg.memory_latency  # cold miss
        assert cache.access(0x40) == cfg.l1_latency      # L1 hit
        # evict 0x40 from L1 with a conflicting line, keep it in L2
        assert cache.access(0x40 + cfg.l1_lines) == cfg.memory_latency
        assert cache.access(0x40) == cfg.l2_latency

    def test_l2_lru_eviction(self):
        cfg = MemoryConfig(l1_lines=1, l2_lines=2, l2_ways=2)
        cache = CacheModel(cfg)
        cache.access(0)
        cache.access(2)
        cache.access(4)  # evicts 0 from the 2-way set
        cache.access(2)  # keeps 2 hot
        assert cache.access(0) == cfg.memory_latency

    def test_memory_model_read_write(self):
        mem = MemoryModel()
        assert mem.read(5)[0] == 0
        mem.write(5, 42)
        assert mem.read_quiet(5) == 42
        assert mem.dump() == "5 42\n"


class TestStrictOrdering:
    def test_out_of_order_arrival_applies_in_chain_order(self):
        applied = []
        sb = StoreBuffer(mode="strict",
                         event=lambda _name, **f: applied.append((f["wave"], f["c"]))
                         if _name == "apply" else None)
        anns = chain_annotations(3)
        # arrive in reverse chain order within one wave
        sb.enqueue(sta_req(anns[2], 0, addr=10))
        sb.enqueue(std_req(anns[2], 0, value=3))
        sb.enqueue(sta_req(anns[1], 0, addr=10))
        sb.enqueue(std_req(anns[1], 0, value=2))
        sb.enqueue(sta_req(anns[0], 0, addr=10))
        sb.enqueue(std_req(anns[0], 0, value=1))
        pump(sb)
        assert applied == [(0, 0), (0, 1), (0, 2)]
        assert sb.memory.read_quiet(10) == 3

    def test_later_wave_waits_for_commit(self):
        sb = StoreBuffer(mode="strict")
        ann1 = chain_annotations(1)[0]
        sb.enqueue(sta_req(ann1, 1, addr=7))
        sb.enqueue(std_req(ann1, 1, value=9))
        sb.step(0)
        # wave 1 is beyond lastCommitted + 1 window of 1? no: gate is lc+1 = 0
        assert sb.memory.read_quiet(7) == 0
        ann0 = chain_annotations(1)[0]
        sb.enqueue(sta_req(ann0, 0, addr=7))
        sb.enqueue(std_req(ann0, 0, value=4))
        pump(sb)
        assert sb.memory.read_quiet(7) == 9
        assert sb.metrics.commits == 2

    def test_load_reply_sent_with_latency(self):
        sent = []
        sb = StoreBuffer(mode="strict",
                         memory=MemoryModel(image={30: 11}),
                         send_operand=lambda op, delay: sent.append((op, delay)))
        ann = chain_annotations(1)[0]
        sb.enqueue(load_req(ann, 0, addr=30))
        pump(sb)
        (op, delay), = sent
        assert op.value == 11
        assert op.dest == Dest("obs", 0)
        assert delay >= MemoryConfig().memory_latency

    def test_wildcard_unknown_pred_waits_for_named_succ(self):
        applied = []
        sb = StoreBuffer(mode="strict",
                         event=lambda _name, **f: applied.append(f["c"])
                         if _name == "apply" else None)
        head = MemAnnotation(WILD_NONE, 0, WILD_UNKNOWN)
        tail = MemAnnotation(WILD_UNKNOWN, 2, WILD_NONE)
        taken = MemAnnotation(0, 1, 2)
        sb.enqueue(MemoryRequest(RequestKind.MEMNOP, tail, 0, 0))
        sb.step(0)
        assert applied == []  # facing "?" must not link head-to-tail
        sb.enqueue(MemoryRequest(RequestKind.MEMNOP, head, 0, 0))
        sb.enqueue(MemoryRequest(RequestKind.MEMNOP, taken, 0, 0))
        pump(sb)
        assert applied == [0, 1, 2]

    def test_stale_exen_rejected(self):
        sb = StoreBuffer(mode="twc", window=4)
        ann = chain_annotations(1)[0]
        assert sb.accept_request(load_req(ann, 2, addr=0, exen=5)) == "rejected-stale"
        assert sb.metrics.stale_drops == 1

    def test_window_defer_and_promote(self):
        sb = StoreBuffer(mode="twc", window=2)
        anns = chain_annotations(1)
        far = sta_req(anns[0], 4, addr=1)
        assert sb.accept_request(far) == "rejected-window"
        assert sb.metrics.window_defers == 1
        # commit waves 0 and 1 to move the gate past wave 4 - window
        for wave in (0, 1, 2):
            ann = chain_annotations(1)[0]
            sb.enqueue(MemoryRequest(RequestKind.MEMNOP, ann, wave, 0))
        pump(sb)
        assert sb.last_committed == 2
        assert not sb.deferred
        assert 4 in sb.waves


class TestDecoupledQueues:
    def test_partial_queue_collects_then_drains_in_order(self):
        """StoreAddr opens a queue; same-address ops wait for the data."""
        events = []
        replies = []
        sb = StoreBuffer(
            mode="decoupled",
            send_operand=lambda op, delay: replies.append(op.value),
            event=lambda _name, **f: events.append((f["c"], f["kind"]))
            if _name == "apply" and f.get("kind") != "memnop" else None,
        )
        anns = chain_annotations(7)
        addr = 0x50
        # c=0: store whose data is late
        sb.enqueue(sta_req(anns[0], 0, addr=addr))
        sb.step(0)
        # five same-address operations behind it, all chain-ready in turn
        sb.enqueue(load_req(anns[1], 0, addr=addr))
        sb.enqueue(sta_req(anns[2], 0, addr=addr))
        sb.enqueue(std_req(anns[2], 0, value=22))
        sb.enqueue(load_req(anns[3], 0, addr=addr))
        sb.enqueue(sta_req(anns[4], 0, addr=addr))
        sb.enqueue(std_req(anns[4], 0, value=44))
        sb.enqueue(load_req(anns[5], 0, addr=addr))
        for cycle in range(1, 20):
            sb.step(cycle)
        # nothing has touched memory yet: all queued behind the dataless store
        assert events == []
        assert replies == []
        assert addr in sb.queues
        assert len(sb.queues[addr].entries) == 6
        # a different address is not blocked
        sb.enqueue(load_req(anns[6], 0, addr=0x99))
        for cycle in range(20, 25):
            sb.step(cycle)
        assert events == [(6, "load")]
        events.clear()
        # the data arrives: the whole queue drains in chain order
        sb.enqueue(std_req(anns[0], 0, value=11))
        pump(sb)
        assert events == [(0, "store"), (1, "load"), (2, "store"),
                          (3, "load"), (4, "store"), (5, "load")]
        assert replies == [0, 11, 22, 44]
        assert sb.memory.read_quiet(addr) == 44

    def test_decoupled_matches_strict_result(self):
        anns = chain_annotations(4)
        results = {}
        for mode in ("strict", "decoupled"):
            sb = StoreBuffer(mode=mode)
            sb.enqueue(sta_req(anns[0], 0, addr=1))
            sb.enqueue(sta_req(anns[1], 0, addr=2))
            sb.enqueue(std_req(anns[1], 0, value=20))
            sb.enqueue(std_req(anns[0], 0, value=10))
            sb.enqueue(sta_req(anns[2], 0, addr=1))
            sb.enqueue(std_req(anns[2], 0, value=30))
            sb.enqueue(MemoryRequest(RequestKind.MEMNOP, anns[3], 0, 0))
            pump(sb)
            results[mode] = dict(sb.memory.data)
        assert results["strict"] == results["decoupled"] == {1: 30, 2: 20}

    def test_wave_commit_waits_for_queue_drain(self):
        sb = StoreBuffer(mode="decoupled")
        anns = chain_annotations(2)
        sb.enqueue(sta_req(anns[0], 0, addr=3))
        sb.enqueue(MemoryRequest(RequestKind.MEMNOP, anns[1], 0, 0))
        for cycle in range(5):
            sb.step(cycle)
        assert sb.metrics.commits == 0
        sb.enqueue(std_req(anns[0], 0, value=8))
        pump(sb)
        assert sb.metrics.commits == 1


class TestDeadlock:
    def test_missing_store_data_deadlocks_simulator(self):
        program = parse_program(
            """
            const 40 -> sta(0)
            sta: sta <.,0,.>
            """
        )
        sim = Simulator(program)
        with pytest.raises(DeadlockError) as excinfo:
            sim.run()
        assert "wave 0" in str(excinfo.value)
