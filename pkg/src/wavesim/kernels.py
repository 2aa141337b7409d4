"""Benchmark kernel generators.

Each generator builds a :class:`~wavesim.ir.Program` for one of the seven
benchmark kinds in :data:`KERNELS`.  The MATRIX family computes per-matrix
determinants plus per-row sums into result vectors; ``*-STORES`` variants
prepend an initialization loop that writes every matrix element; ``*-MIN``
variants repeat the computation loop ``repeat`` times (indexing matrices
modulo ``n``); ``*-DEP`` variants add a cross-iteration scratch-word
dependency between iterations ``n//2 - 1`` and ``n//2``.  VECTOR-FULL-DEP
is a single loop of interleaved loads and stores over one vector whose
store data is deliberately delayed, so that out-of-order wave execution
provokes WAR, WAW and RAW conflicts while remaining sequentially
well-defined.

The compute loops are software-pipelined: store data for iteration ``t``
is produced from the loads of iteration ``t - CARRY`` and forwarded
through wave-advance hops, so every value crossing a wave boundary is
visible to the wave-ordering hardware.
"""

from __future__ import annotations

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

#: The seven supported kernel kinds, in canonical order.
KERNELS = [
    "MATRIX",
    "MATRIX-DEP",
    "MATRIX-STORES",
    "MATRIX-STORES-DEP",
    "MATRIX-STORES-MIN",
    "MATRIX-STORES-MIN-DEP",
    "VECTOR-FULL-DEP",
]

# memory layout (word addressed)
MAT_BASE = 0x1000  # matrix elements, n * dim * dim words
DET_BASE = 0x100000  # determinant result vector, one word per iteration
SUM_BASE = 0x200000  # row-sum result vectors, dim words per iteration
SCRATCH = 0x300000  # cross-iteration dependency word (*-DEP)

INP_BASE = 0x1000  # VECTOR-FULL-DEP: read-only input vector
VEC_BASE = 0x10000  # VECTOR-FULL-DEP: the contended vector
OUT_BASE = 0x100000  # VECTOR-FULL-DEP: per-iteration observed values

# timing-model tuning knobs (see docstring above)
CARRY = 3  # software-pipeline depth: wave t stores iteration t - CARRY
COUNTER_PAD = 6  # extra hops in the loop counter to pace wave launches
DEP_DELAY = 16  # hops delaying the *-DEP scratch store's data
G_CHAIN = 10  # hops delaying VECTOR's second store's data
G_EXTRA = 6  # additional hops for VECTOR's scratch store data

#: value offsets added by the VECTOR delay chains (used by scalar references)
G_OFFSET = sum(5 * i + 3 for i in range(G_CHAIN))
G_EXTRA_OFFSET = sum(7 * i + 1 for i in range(G_EXTRA))


def vector_input(j: int) -> int:
    """Preset value of the VECTOR-FULL-DEP input word ``j``."""
    return (j * 11 + 3) % 257


def matrix_input(u: int, e: int) -> int:
    """Preset element ``e`` of matrix ``u`` for the non-STORES variants."""
    return (u * 7 + e * 5 + 1) % 97


def init_element(u: int, e: int, dim: int) -> int:
    """Element ``e`` of matrix ``u`` as written by the *-STORES init loop.

    The init loop carries a running value across waves and bumps it twice
    per element with position-dependent increments.
    """
    v = 11
    for _ in range(u + 1):
        base = v
        for k in range(dim * dim):
            base += (3 * k * k + 5) + (2 * k + 7)
            if _ == u and k == e:
                return base
        v = base
    raise AssertionError("unreachable")


class _Chain:
    """Assigns ``<P, C, S>`` annotations along one block's memory chain.

    The chain is described as a sequence of plain slots and branches.  A
    plain slot is a tuple of instruction ids sharing one sequence number
    (a store-address/store-data pair, or a single op).  A branch carries
    a taken arm and a not-taken arm, each a list of slots; the ops just
    before and after a branch get wildcard successors/predecessors.
    """

    def __init__(self, program: Program) -> None:
        self.program = program
        self.elems: list[tuple] = []

    def op(self, *ids: str) -> None:
        self.elems.append(("op", tuple(ids)))

    def branch(self, taken: list[tuple], fallthrough: list[tuple]) -> None:
        self.elems.append(
            ("br", [tuple(p) for p in taken], [tuple(p) for p in fallthrough])
        )

    def assign(self) -> None:
        seq: dict[tuple, int] = {}
        counter = 0

        def give(pos: tuple) -> None:
            nonlocal counter
            seq[pos] = counter
            counter += 1

        for elem in self.elems:
            if elem[0] == "op":
                give(elem[1])
            else:
                for pos in elem[1]:
                    give(pos)
                for pos in elem[2]:
                    give(pos)

        def set_ann(pos: tuple, pred, succ) -> None:
            ann = MemAnnotation(pred, seq[pos], succ)
            for iid in pos:
                self.program.instructions[iid].annotation = ann

        last = len(self.elems) - 1
        for i, elem in enumerate(self.elems):
            if elem[0] == "op":
                prev = self.elems[i - 1] if i > 0 else None
                nxt = self.elems[i + 1] if i < last else None
                pred = WILD_NONE if prev is None else (
                    seq[prev[1]] if prev[0] == "op" else WILD_UNKNOWN
                )
                succ = WILD_NONE if nxt is None else (
                    seq[nxt[1]] if nxt[0] == "op" else WILD_UNKNOWN
                )
                set_ann(elem[1], pred, succ)
            else:
                # branches must sit between plain ops
                prev_c = seq[self.elems[i - 1][1]]
                next_c = seq[self.elems[i + 1][1]]
                for arm in (elem[1], elem[2]):
                    for k, pos in enumerate(arm):
                        pred = prev_c if k == 0 else seq[arm[k - 1]]
                        succ = next_c if k == len(arm) - 1 else seq[arm[k + 1]]
                        set_ann(pos, pred, succ)


class _Builder:
    def __init__(self) -> None:
        self.program = Program()
        self._alu_seq = 0

    def add(self, iid: str, opcode: Opcode, block: str, **kw) -> str:
        self.program.add(Instruction(iid, opcode, block, **kw))
        return iid

    def wire(self, src: str, dst: str, port: int = 0, taken: bool = True) -> None:
        inst = self.program.instructions[src]
        (inst.dests if taken else inst.dests_false).append(Dest(dst, port))

    def entry(self, value: int, dst: str, port: int = 0) -> None:
        self.program.entry_constants.append(EntryConstant(value, Dest(dst, port)))

    def alu2(self, block: str, op: str, a: str, b: str) -> str:
        """Add a two-input ALU fed by instructions ``a`` and ``b``."""
        iid = f"{block[0]}_x{self._alu_seq}"
        self._alu_seq += 1
        self.add(iid, Opcode.ALU, block, alu_op=op)
        self.wire(a, iid, 0)
        self.wire(b, iid, 1)
        return iid

    def alu1(self, block: str, iid: str, op: str, imm: int, src: str | None) -> str:
        self.add(iid, Opcode.ALU, block, alu_op=op, imm=imm)
        if src is not None:
            self.wire(src, iid, 0)
        return iid

    def hop_chain(self, block: str, prefix: str, src: str, imms: list[int]) -> str:
        """A chain of immediate adders used purely as a value delay line."""
        prev = src
        for i, imm in enumerate(imms):
            prev = self.alu1(block, f"{prefix}{i}", "add", imm, prev)
        return prev


def _det_circuit(b: _Builder, block: str, cells: list[list[str]]) -> str:
    """Emit a determinant circuit over the loaded cells; returns its id.

    Cofactor expansion for dim <= 3 (exact), fraction-free elimination
    for larger matrices (exact when all leading minors are nonzero; the
    divide-by-zero guard keeps it total and deterministic otherwise).
    """
    dim = len(cells)
    if dim <= 3:

        def cofactor(m: list[list[str]]) -> str:
            if len(m) == 1:
                return m[0][0]
            acc = None
            for col in range(len(m)):
                minor = [
                    [row[c] for c in range(len(m)) if c != col] for row in m[1:]
                ]
                term = b.alu2(block, "mul", m[0][col], cofactor(minor))
                if acc is None:
                    acc = term
                else:
                    acc = b.alu2(block, "sub" if col % 2 else "add", acc, term)
            return acc

        return cofactor(cells)

    work = [row[:] for row in cells]
    prev_pivot: str | None = None
    for k in range(dim - 1):
        for i in range(k + 1, dim):
            for j in range(k + 1, dim):
                t1 = b.alu2(block, "mul", work[i][j], work[k][k])
                t2 = b.alu2(block, "mul", work[i][k], work[k][j])
                num = b.alu2(block, "sub", t1, t2)
                work[i][j] = (
                    num if prev_pivot is None else b.alu2(block, "div", num, prev_pivot)
                )
        prev_pivot = work[k][k]
    return work[dim - 1][dim - 1]


def _build_matrix(kind: str, n: int, dim: int, repeat: int) -> Program:
    dep = kind.endswith("-DEP")
    stores = "-STORES" in kind
    minimal = "-MIN" in kind
    passes = repeat if minimal else 1
    if n < 1 or dim < 1 or repeat < 1:
        raise ValueError("n, dim and repeat must be positive")
    if dep and n < 6:
        raise ValueError(f"{kind} needs n >= 6 to place the dependency")

    d2 = dim * dim
    total = n * passes  # compute-loop trip count
    k_dep = n // 2 - 1  # iteration writing the scratch word
    b = _Builder()
    blk = "compute"
    t_dests: list[Dest] = []  # everything fed by the loop counter

    def on_t(iid: str, port: int = 0) -> None:
        t_dests.append(Dest(iid, port))

    # ---- memory operations and their sequencing chain -------------------
    b.add("c_head", Opcode.MEMNOP, blk)
    on_t("c_head")
    if dep:
        b.add("c_dld", Opcode.LOAD, blk)
        b.add("c_dnop1", Opcode.MEMNOP, blk)
        b.add("c_j1", Opcode.MEMNOP, blk)
        on_t("c_j1")
    for e in range(d2):
        b.add(f"c_ld{e}", Opcode.LOAD, blk, imm=e)
    b.add("c_lnop", Opcode.MEMNOP, blk)
    b.add("c_j2", Opcode.MEMNOP, blk)
    on_t("c_j2")
    b.add("c_dsta", Opcode.STORE_ADDR, blk, imm=0)
    b.add("c_dstd", Opcode.STORE_DATA, blk)
    for r in range(dim):
        b.add(f"c_ssta{r}", Opcode.STORE_ADDR, blk, imm=r)
        b.add(f"c_sstd{r}", Opcode.STORE_DATA, blk)
    b.add("c_snop", Opcode.MEMNOP, blk)
    if dep:
        b.add("c_j3", Opcode.MEMNOP, blk)
        on_t("c_j3")
        b.add("c_xsta", Opcode.STORE_ADDR, blk)
        b.add("c_xstd", Opcode.STORE_DATA, blk)
        b.add("c_dnop2", Opcode.MEMNOP, blk)
    b.add("c_tail", Opcode.MEMNOP, blk)
    on_t("c_tail")

    chain = _Chain(b.program)
    chain.op("c_head")
    if dep:
        chain.branch([("c_dld",)], [("c_dnop1",)])
        chain.op("c_j1")
    chain.branch([(f"c_ld{e}",) for e in range(d2)], [("c_lnop",)])
    chain.op("c_j2")
    chain.branch(
        [("c_dsta", "c_dstd")] + [(f"c_ssta{r}", f"c_sstd{r}") for r in range(dim)],
        [("c_snop",)],
    )
    if dep:
        chain.op("c_j3")
        chain.branch([("c_xsta", "c_xstd")], [("c_dnop2",)])
    chain.op("c_tail")
    chain.assign()

    # ---- load addressing -------------------------------------------------
    if minimal:
        b.alu1(blk, "c_m", "mod", n, None)
        on_t("c_m")
        idx = "c_m"
    else:
        idx = None
    b.alu1(blk, "c_lbase", "mul", d2, idx)
    if idx is None:
        on_t("c_lbase")
    b.alu1(blk, "c_laddr", "add", MAT_BASE, "c_lbase")
    b.alu1(blk, "c_pl", "le", total - 1, None)
    on_t("c_pl")
    b.add("c_lsteer", Opcode.STEER, blk)
    b.wire("c_laddr", "c_lsteer", 0)
    b.wire("c_pl", "c_lsteer", 1)
    for e in range(d2):
        b.wire("c_lsteer", f"c_ld{e}", 0)
    b.wire("c_lsteer", "c_lnop", 0, taken=False)

    # ---- store addressing (single steer gates the whole store group) ----
    b.alu1(blk, "c_s", "sub", CARRY, None)
    on_t("c_s")
    if minimal:
        b.alu1(blk, "c_smod", "mod", n, "c_s")
        sidx = "c_smod"
    else:
        sidx = "c_s"
    b.alu1(blk, "c_daddr", "add", DET_BASE, sidx)
    b.alu1(blk, "c_ps0", "le", CARRY - 1, None)
    on_t("c_ps0")
    b.alu1(blk, "c_ps", "eq", 0, "c_ps0")  # true iff t >= CARRY
    b.add("c_dsteer", Opcode.STEER, blk)
    b.wire("c_daddr", "c_dsteer", 0)
    b.wire("c_ps", "c_dsteer", 1)
    b.wire("c_dsteer", "c_dsta", 0)
    b.wire("c_dsteer", "c_sb0", 0)
    b.wire("c_dsteer", "c_snop", 0, taken=False)
    b.alu1(blk, "c_sb0", "sub", DET_BASE, None)  # recover s from the det address
    b.alu1(blk, "c_sb1", "mul", dim, "c_sb0")
    b.alu1(blk, "c_sb2", "add", SUM_BASE, "c_sb1")
    for r in range(dim):
        b.wire("c_sb2", f"c_ssta{r}", 0)

    # ---- determinant, row sums and their wave-advance pipelines ---------
    cells = [[f"c_ld{r * dim + c}" for c in range(dim)] for r in range(dim)]
    det = _det_circuit(b, blk, cells)
    carried = [det]
    for r in range(dim):
        acc = cells[r][0]
        for c in range(1, dim):
            acc = b.alu2(blk, "add", acc, cells[r][c])
        carried.append(acc)
    piped = []
    for v, src in enumerate(carried):
        prev = src
        for h in range(CARRY):
            iid = f"c_pipe{v}_{h}"
            b.add(iid, Opcode.WAVE_ADVANCE, blk)
            b.wire(prev, iid, 0)
            prev = iid
        piped.append(prev)
    if dep:
        b.add("c_dadj", Opcode.ALU, blk, alu_op="add")
        b.wire(piped[0], "c_dadj", 0)
        b.wire("c_dadj", "c_dstd", 0)
    else:
        b.wire(piped[0], "c_dstd", 0)
    for r in range(dim):
        b.wire(piped[1 + r], f"c_sstd{r}", 0)

    # ---- the cross-iteration dependency (*-DEP) --------------------------
    if dep:
        b.add("c_scr", Opcode.CONST, blk, imm=SCRATCH)
        on_t("c_scr")
        b.add("c_z", Opcode.CONST, blk, imm=0)
        on_t("c_z")
        b.alu1(blk, "c_pds", "eq", k_dep + CARRY, None)
        on_t("c_pds")
        b.alu1(blk, "c_pdl", "eq", k_dep + CARRY + 1, None)
        on_t("c_pdl")
        # scratch load feeding the determinant adjustment of the next iteration
        b.add("c_ldl", Opcode.STEER, blk)
        b.wire("c_scr", "c_ldl", 0)
        b.wire("c_pdl", "c_ldl", 1)
        b.wire("c_ldl", "c_dld", 0)
        b.wire("c_ldl", "c_dnop1", 0, taken=False)
        b.wire("c_dld", "c_dadj", 1)
        b.add("c_zst", Opcode.STEER, blk)
        b.wire("c_z", "c_zst", 0)
        b.wire("c_pdl", "c_zst", 1)
        b.wire("c_zst", "c_dadj", 1, taken=False)
        # scratch store whose data trails this wave's first load response
        delayed = b.hop_chain(
            blk, "c_dd", "c_ld0", [2 * i + 3 for i in range(DEP_DELAY)]
        )
        b.add("c_das", Opcode.STEER, blk)
        b.wire("c_scr", "c_das", 0)
        b.wire("c_pds", "c_das", 1)
        b.wire("c_das", "c_xsta", 0)
        b.wire("c_das", "c_dnop2", 0, taken=False)
        b.add("c_dds", Opcode.STEER, blk)
        b.wire(delayed, "c_dds", 0)
        b.wire("c_pds", "c_dds", 1)
        b.wire("c_dds", "c_xstd", 0)

    # ---- loop counter, paced so one wave launches per store-group drain --
    b.add("c_t_adv", Opcode.WAVE_ADVANCE, blk)
    throttled = b.hop_chain(blk, "c_thr", None, [0] * COUNTER_PAD)
    on_t("c_thr0")
    b.alu1(blk, "c_inc", "add", 1, throttled)
    b.alu1(blk, "c_cont", "le", total - 1 + CARRY, "c_inc")
    b.add("c_steer", Opcode.STEER, blk)
    b.wire("c_inc", "c_steer", 0)
    b.wire("c_cont", "c_steer", 1)
    b.wire("c_steer", "c_t_adv", 0)
    b.program.instructions["c_t_adv"].dests = list(t_dests)

    # ---- init loop (*-STORES) or preset matrix data ----------------------
    if stores:
        iblk = "init"
        u_dests: list[Dest] = []
        for e in range(d2):
            b.add(f"i_st{e}", Opcode.STORE, iblk, imm=e)
        ichain = _Chain(b.program)
        for e in range(d2):
            ichain.op(f"i_st{e}")
        ichain.assign()
        b.alu1(iblk, "i_base0", "mul", d2, None)
        u_dests.append(Dest("i_base0", 0))
        b.alu1(iblk, "i_base", "add", MAT_BASE, "i_base0")
        for e in range(d2):
            b.wire("i_base", f"i_st{e}", 0)
        prev = None
        for e in range(d2):
            prev = b.alu1(iblk, f"i_va{e}", "add", 3 * e * e + 5, prev)
            prev = b.alu1(iblk, f"i_vb{e}", "add", 2 * e + 7, prev)
            b.wire(prev, f"i_st{e}", 1)
        b.alu1(iblk, "i_inc", "add", 1, None)
        u_dests.append(Dest("i_inc", 0))
        b.alu1(iblk, "i_cont", "le", n - 1, "i_inc")
        b.add("i_us", Opcode.STEER, iblk)
        b.wire("i_inc", "i_us", 0)
        b.wire("i_cont", "i_us", 1)
        b.wire("i_us", "i_u_adv", 0)
        b.add("i_vs", Opcode.STEER, iblk)
        b.wire(prev, "i_vs", 0)
        b.wire("i_cont", "i_vs", 1)
        b.wire("i_vs", "i_v_adv", 0)
        b.wire("i_vs", "i_exit", 0, taken=False)
        b.alu1(iblk, "i_exit", "mul", 0, None)
        b.add("i_u_adv", Opcode.WAVE_ADVANCE, iblk, dests=list(u_dests))
        b.add("i_v_adv", Opcode.WAVE_ADVANCE, iblk, dests=[Dest("i_va0", 0)])
        # the exit token both sequences init before compute and carries t=0
        b.add("i_x_adv", Opcode.WAVE_ADVANCE, iblk, dests=list(t_dests))
        b.wire("i_exit", "i_x_adv", 0)
        for d in u_dests:
            b.entry(0, d.inst, d.port)
        b.entry(11, "i_va0", 0)
    else:
        for u in range(n):
            for e in range(d2):
                b.program.memory_image[MAT_BASE + u * d2 + e] = matrix_input(u, e)
        for d in t_dests:
            b.entry(0, d.inst, d.port)
    return b.program


def _build_vector(length: int) -> Program:
    if length < 4:
        raise ValueError("VECTOR-FULL-DEP needs length >= 4")
    blk = "vector"
    mid = length // 2
    b = _Builder()
    j_dests: list[Dest] = []

    def on_j(iid: str, port: int = 0) -> None:
        j_dests.append(Dest(iid, port))

    # memory chain: head [dld|nop] j1 inp-load storeA storeB loadC storeW
    #               [scratch-store|nop] tail
    b.add("v_head", Opcode.MEMNOP, blk)
    on_j("v_head")
    b.add("v_dld", Opcode.LOAD, blk)
    b.add("v_dnop1", Opcode.MEMNOP, blk)
    b.add("v_j1", Opcode.MEMNOP, blk)
    on_j("v_j1")
    b.add("v_c0", Opcode.LOAD, blk)
    b.add("v_a", Opcode.STORE, blk)
    b.add("v_bsta", Opcode.STORE_ADDR, blk)
    b.add("v_bstd", Opcode.STORE_DATA, blk)
    b.add("v_c", Opcode.LOAD, blk)
    b.add("v_w", Opcode.STORE, blk)
    b.add("v_xsta", Opcode.STORE_ADDR, blk)
    b.add("v_xstd", Opcode.STORE_DATA, blk)
    b.add("v_dnop2", Opcode.MEMNOP, blk)
    b.add("v_tail", Opcode.MEMNOP, blk)
    on_j("v_tail")

    chain = _Chain(b.program)
    chain.op("v_head")
    chain.branch([("v_dld",)], [("v_dnop1",)])
    chain.op("v_j1")
    chain.op("v_c0")
    chain.op("v_a")
    chain.op("v_bsta", "v_bstd")
    chain.op("v_c")
    chain.op("v_w")
    chain.branch([("v_xsta", "v_xstd")], [("v_dnop2",)])
    chain.op("v_tail")
    chain.assign()

    # addresses
    b.alu1(blk, "v_ai", "add", INP_BASE, None)
    on_j("v_ai")
    b.wire("v_ai", "v_c0", 0)
    b.alu1(blk, "v_aa", "add", VEC_BASE, None)
    on_j("v_aa")
    b.wire("v_aa", "v_a", 0)
    b.alu1(blk, "v_ab", "add", VEC_BASE + 1, None)
    on_j("v_ab")
    b.wire("v_ab", "v_bsta", 0)
    b.wire("v_ab", "v_c", 0)
    b.alu1(blk, "v_aw", "add", OUT_BASE, None)
    on_j("v_aw")
    b.wire("v_aw", "v_w", 0)

    # store A writes a fast function of j; store B trails the input load
    b.alu1(blk, "v_f0", "mul", 13, None)
    on_j("v_f0")
    b.alu1(blk, "v_f", "add", 5, "v_f0")
    b.wire("v_f", "v_a", 1)
    slow = b.hop_chain(blk, "v_g", "v_c0", [5 * i + 3 for i in range(G_CHAIN)])
    b.wire(slow, "v_bstd", 0)
    slower = b.hop_chain(blk, "v_e", slow, [7 * i + 1 for i in range(G_EXTRA)])

    # observed value: loadC plus the scratch adjustment at j == mid + 1
    b.add("v_wadd", Opcode.ALU, blk, alu_op="add")
    b.wire("v_c", "v_wadd", 0)
    b.wire("v_wadd", "v_w", 1)
    b.add("v_scr", Opcode.CONST, blk, imm=SCRATCH)
    on_j("v_scr")
    b.add("v_z", Opcode.CONST, blk, imm=0)
    on_j("v_z")
    b.alu1(blk, "v_pds", "eq", mid, None)
    on_j("v_pds")
    b.alu1(blk, "v_pdl", "eq", mid + 1, None)
    on_j("v_pdl")
    b.add("v_ldl", Opcode.STEER, blk)
    b.wire("v_scr", "v_ldl", 0)
    b.wire("v_pdl", "v_ldl", 1)
    b.wire("v_ldl", "v_dld", 0)
    b.wire("v_ldl", "v_dnop1", 0, taken=False)
    b.wire("v_dld", "v_wadd", 1)
    b.add("v_zst", Opcode.STEER, blk)
    b.wire("v_z", "v_zst", 0)
    b.wire("v_pdl", "v_zst", 1)
    b.wire("v_zst", "v_wadd", 1, taken=False)
    b.add("v_das", Opcode.STEER, blk)
    b.wire("v_scr", "v_das", 0)
    b.wire("v_pds", "v_das", 1)
    b.wire("v_das", "v_xsta", 0)
    b.wire("v_das", "v_dnop2", 0, taken=False)
    b.add("v_dds", Opcode.STEER, blk)
    b.wire(slower, "v_dds", 0)
    b.wire("v_pds", "v_dds", 1)
    b.wire("v_dds", "v_xstd", 0)

    # loop counter over j = 1 .. length - 2
    b.add("v_jadv", Opcode.WAVE_ADVANCE, blk)
    b.alu1(blk, "v_i1", "add", 1, None)
    on_j("v_i1")
    b.alu1(blk, "v_cont", "le", length - 2, "v_i1")
    b.add("v_js", Opcode.STEER, blk)
    b.wire("v_i1", "v_js", 0)
    b.wire("v_cont", "v_js", 1)
    b.wire("v_js", "v_jadv", 0)
    b.program.instructions["v_jadv"].dests = list(j_dests)
    for d in j_dests:
        b.entry(1, d.inst, d.port)

    for j in range(length):
        b.program.memory_image[INP_BASE + j] = vector_input(j)
    return b.program


def vector_reference(length: int) -> dict[int, int]:
    """Scalar reference of the VECTOR-FULL-DEP loop's final memory."""
    mem = {INP_BASE + j: vector_input(j) for j in range(length)}
    mid = length // 2
    for j in range(1, length - 1):
        g = mem[INP_BASE + j] + G_OFFSET
        mem[VEC_BASE + j] = j * 13 + 5
        mem[VEC_BASE + j + 1] = g
        observed = mem[VEC_BASE + j + 1]
        if j == mid + 1:
            observed += mem.get(SCRATCH, 0)
        mem[OUT_BASE + j] = observed
        if j == mid:
            mem[SCRATCH] = g + G_EXTRA_OFFSET
    return mem


def build_kernel(
    kind: str, n: int = 50, dim: int = 3, repeat: int = 3, length: int = 100
) -> Program:
    """Build one of the seven benchmark kernels as a validated program.

    ``n``, ``dim`` and ``repeat`` size the MATRIX family; ``length`` sizes
    VECTOR-FULL-DEP.
    """
    if kind not in KERNELS:
        raise ValueError(f"unknown kernel kind {kind!r}")
    if kind == "VECTOR-FULL-DEP":
        return _build_vector(length)
    return _build_matrix(kind, n, dim, repeat)
