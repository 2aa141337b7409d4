"""Assembly round-trips and parse errors."""

import pytest

from wavesim.asm import AsmError, emit_program, parse_program
from wavesim.ir import Opcode, validate_program
from wavesim.kernels import KERNELS, build_kernel

SAMPLE = """
# one-wave sample with a steered branch
wave main
mem 100 = 7
const 1 -> trig(0), addr(0)
trig: memnop <.,0,?>
addr: alu add imm=100 -> st(0)
cond: const 1 -> st(1)
st: steer -> t:ld(0), f:nop(0)
ld: load imm=1 <0,1,3> -> out(0)
nop: memnop <0,2,3>
tail: memnop <?,3,.>
out: output
"""


class TestParse:
    def test_sample_parses_and_validates(self):
        p = parse_program(SAMPLE)
        assert validate_program(p) == []
        assert p.memory_image == {100: 7}
        assert p.instructions["ld"].imm == 1
        assert p.instructions["st"].opcode is Opcode.STEER
        assert [d.inst for d in p.instructions["st"].dests_false] == ["nop"]
        assert len(p.entry_constants) == 2

    def test_round_trip_is_stable(self):
        p = parse_program(SAMPLE)
        text = emit_program(p)
        again = emit_program(parse_program(text))
        assert text == again

    def test_kernel_round_trips(self):
        for kind in KERNELS:
            p = build_kernel(kind, n=6, dim=2, repeat=2, length=8)
            text = emit_program(p)
            q = parse_program(text)
            assert emit_program(q) == text
            assert validate_program(q) == []

    def test_annotation_wildcards(self):
        p = parse_program("m: memnop <.,0,?>\nj: memnop <?,1,.>")
        assert p.instructions["m"].annotation.succ == "?"
        assert p.instructions["j"].annotation.pred == "?"


class TestErrors:
    def test_unknown_opcode(self):
        with pytest.raises(AsmError, match="unknown opcode"):
            parse_program("a: frobnicate")

    def test_bad_annotation(self):
        with pytest.raises(AsmError, match="bad annotation"):
            parse_program("a: memnop <.,x,.>")

    def test_false_dest_on_non_steer(self):
        with pytest.raises(AsmError, match="steer"):
            parse_program("a: const 1 -> f:b(0)\nb: output")

    def test_duplicate_id(self):
        with pytest.raises(AsmError, match="duplicate"):
            parse_program("a: output\na: output")

    def test_error_carries_line_number(self):
        with pytest.raises(AsmError) as err:
            parse_program("a: output\nb: nope")
        assert err.value.line_no == 2
