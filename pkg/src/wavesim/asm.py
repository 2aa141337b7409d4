"""Textual assembly for dataflow programs.

Grammar (one statement per line, ``#`` starts a comment)::

    wave <block-id>
    mem <addr> = <word>
    const <value> -> <dest>(<port>)[, ...]
    <id>: <opcode-spec> [<P,C,S>] -> <dest>(<port>)[, ...]

Opcode specs::

    alu <op> [imm=<n>]      two-input ALU, or one input plus immediate
    const <value>           triggered constant (one trigger input)
    select                  v1(0), v2(1), selector(2); true picks v1
    steer                   value(0), condition(1); dests prefixed t:/f:
    wadv                    wave advance
    load [imm=<off>] <P,C,S>
    store <P,C,S> [imm=<off>]        combined address+data store
    sta [imm=<off>] <P,C,S>          store address half
    std <P,C,S>                      store data half
    memnop <P,C,S>
    output

Memory annotations are written ``<P,C,S>`` with ``.`` and ``?`` wildcards,
for example ``<.,1,?>``.  Destinations are ``name(port)``; steer true-path
destinations are prefixed ``t:`` and false-path ones ``f:``.
"""
from __future__ import annotations

import re

from .ir import (
    Dest,
    EntryConstant,
    Instruction,
    MemAnnotation,
    Opcode,
    Program,
    WILD_NONE,
    WILD_UNKNOWN,
)


class AsmError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


_DEST_RE = re.compile(r"^(?:(t|f):)?([A-Za-z0-9_.\-]+)\((\d+)\)$")
_ANNOT_RE = re.compile(r"<\s*([.?]|\d+)\s*,\s*(\d+)\s*,\s*([.?]|\d+)\s*>")


def _parse_annotation(text: str, line_no: int) -> MemAnnotation:
    m = _ANNOT_RE.fullmatch(text.strip())
    if not m:
        raise AsmError(line_no, f"bad annotation {text!r}")
    p, c, s = m.groups()
    pred = p if p in (WILD_NONE, WILD_UNKNOWN) else int(p)
    succ = s if s in (WILD_NONE, WILD_UNKNOWN) else int(s)
    return MemAnnotation(pred, int(c), succ)


def _parse_dests(text: str, line_no: int) -> tuple[list[Dest], list[Dest]]:
    true_dests: list[Dest] = []
    false_dests: list[Dest] = []
    for part in [p.strip() for p in text.split(",") if p.strip()]:
        m = _DEST_RE.match(part)
        if not m:
            raise AsmError(line_no, f"bad destination {part!r}")
        prefix, inst, port = m.groups()
        dest = Dest(inst, int(port))
        (false_dests if prefix == "f" else true_dests).append(dest)
    return true_dests, false_dests


def _parse_int(text: str, line_no: int) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise AsmError(line_no, f"bad integer {text!r}") from None


def parse_program(text: str) -> Program:
    program = Program()
    block = "main"
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("wave "):
            block = line.split(None, 1)[1].strip()
            program.blocks.setdefault(block, [])
            continue
        if line.startswith("mem "):
            m = re.fullmatch(r"mem\s+([-\w]+)\s*=\s*([-\w]+)", line)
            if not m:
                raise AsmError(line_no, f"bad memory line {raw.strip()!r}")
            program.memory_image[_parse_int(m.group(1), line_no)] = _parse_int(
                m.group(2), line_no
            )
            continue
        if line.startswith("const ") and ":" not in line.split("->", 1)[0]:
            head, _, dest_text = line.partition("->")
            if not dest_text:
                raise AsmError(line_no, "entry constant needs destinations")
            value = _parse_int(head.split(None, 1)[1].strip(), line_no)
            dests, false_dests = _parse_dests(dest_text, line_no)
            if false_dests:
                raise AsmError(line_no, "t:/f: prefixes only apply to steer")
            for dest in dests:
                program.entry_constants.append(EntryConstant(value, dest))
            continue

        m = re.match(r"^([A-Za-z0-9_.\-]+)\s*:\s*(.*)$", line)
        if not m:
            raise AsmError(line_no, f"cannot parse {raw.strip()!r}")
        inst_id, rest = m.group(1), m.group(2)
        body, _, dest_text = rest.partition("->")
        tokens = body.split()
        if not tokens:
            raise AsmError(line_no, "missing opcode")
        name = tokens.pop(0)
        try:
            opcode = Opcode(name)
        except ValueError:
            raise AsmError(line_no, f"unknown opcode {name!r}") from None

        alu_op = None
        imm = None
        annotation = None
        if opcode is Opcode.ALU:
            if not tokens:
                raise AsmError(line_no, "alu needs an operation")
            alu_op = tokens.pop(0)
        for token in tokens:
            if token.startswith("imm="):
                imm = _parse_int(token[4:], line_no)
            elif token.startswith("<"):
                annotation = _parse_annotation(token, line_no)
            elif opcode is Opcode.CONST and imm is None:
                imm = _parse_int(token, line_no)
            else:
                raise AsmError(line_no, f"unexpected token {token!r}")
        if opcode is Opcode.CONST and imm is None:
            raise AsmError(line_no, "const needs a value")

        dests, false_dests = _parse_dests(dest_text, line_no) if dest_text else ([], [])
        if false_dests and opcode is not Opcode.STEER:
            raise AsmError(line_no, "t:/f: prefixes only apply to steer")
        try:
            program.add(
                Instruction(
                    id=inst_id,
                    opcode=opcode,
                    block=block,
                    alu_op=alu_op,
                    imm=imm,
                    annotation=annotation,
                    dests=dests,
                    dests_false=false_dests,
                )
            )
        except ValueError as exc:
            raise AsmError(line_no, str(exc)) from None
    return program


def emit_program(program: Program) -> str:
    """Serialize a program to canonical assembly text.

    ``parse_program(emit_program(p))`` reproduces ``p``.
    """
    out: list[str] = []
    for addr in sorted(program.memory_image):
        out.append(f"mem {addr} = {program.memory_image[addr]}")
    for entry in program.entry_constants:
        out.append(f"const {entry.value} -> {entry.dest}")
    for block, ids in program.blocks.items():
        out.append(f"wave {block}")
        for iid in ids:
            inst = program.instructions[iid]
            parts = [f"{inst.id}:", inst.opcode.value]
            if inst.opcode is Opcode.ALU:
                parts.append(inst.alu_op or "")
                if inst.imm is not None:
                    parts.append(f"imm={inst.imm}")
            elif inst.opcode is Opcode.CONST:
                parts.append(str(inst.imm))
            elif inst.imm is not None:
                parts.append(f"imm={inst.imm}")
            if inst.annotation is not None:
                parts.append(str(inst.annotation))
            dests = [str(d) for d in inst.dests]
            if inst.opcode is Opcode.STEER:
                dests = [f"t:{d}" for d in inst.dests] + [
                    f"f:{d}" for d in inst.dests_false
                ]
            line = " ".join(p for p in parts if p)
            if dests:
                line += " -> " + ", ".join(dests)
            out.append(line)
    return "\n".join(out) + "\n"
