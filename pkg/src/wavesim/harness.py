"""Experiment driver: single runs, window sweeps and report emission."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .engine import SimResult, Simulator
from .fabric import FabricConfig
from .kernels import KERNELS, build_kernel
from .memory import DeadlockError, MemoryConfig, Metrics
from .oracle import compare_memory, interpret

#: Speculation-window sizes used throughout the experiments (None = infinite).
SWEEP_WINDOWS: list[int | None] = [2, 3, 5, 10, 20, 30, None]

CSV_HEADER = "kernel,mode,window,cycles,raw,war,waw,commits,aborts,speedup_pct"


class VerificationError(Exception):
    """Final memory differed from the sequential oracle."""


@dataclass
class RunConfig:
    """Everything needed to reproduce one simulation run."""

    kernel: str
    n: int = 50
    dim: int = 3
    repeat: int = 3
    length: int = 100
    mode: str = "strict"
    window: int | None = None  # twc only; None = infinite
    verify: bool = False
    dump_memory: str | None = None
    event_log: str | None = None
    seed: int = 0  # reserved: the pipeline is seedless-deterministic
    fabric: FabricConfig = field(default_factory=FabricConfig)
    memory: MemoryConfig = field(default_factory=MemoryConfig)
    max_cycles: int = 50_000_000

    def __post_init__(self) -> None:
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.mode not in ("strict", "decoupled", "twc"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode != "twc" and self.window is not None:
            raise ValueError("window is only meaningful in twc mode")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class RunOutcome:
    config: RunConfig
    result: SimResult

    @property
    def metrics(self) -> Metrics:
        return self.result.metrics


def _window_label(window: int | None) -> str:
    return "inf" if window is None else str(window)


def run(config: RunConfig) -> RunOutcome:
    """Build the kernel, simulate to quiescence and return the outcome.

    Raises :class:`~wavesim.memory.DeadlockError` (with frontier
    diagnostics) if the machine goes quiet with uncommitted work, and
    :class:`VerificationError` if ``verify`` is set and the final memory
    image differs from the sequential oracle.
    """
    program = build_kernel(
        config.kernel, n=config.n, dim=config.dim,
        repeat=config.repeat, length=config.length,
    )
    sim = Simulator(
        program,
        mode=config.mode,
        window=config.window,
        fabric_config=config.fabric,
        memory_config=config.memory,
        record_events=config.event_log is not None,
        max_cycles=config.max_cycles,
    )
    result = sim.run()
    if config.verify:
        expected = interpret(program).memory
        diff = compare_memory(expected, result.memory)
        if diff:
            shown = "\n  ".join(diff[:20])
            raise VerificationError(
                f"{config.kernel} [{config.mode}"
                f"/{_window_label(config.window)}]: memory differs from the"
                f" oracle at {len(diff)} addresses:\n  {shown}"
            )
    if config.dump_memory:
        Path(config.dump_memory).write_text(
            "".join(line + "\n" for line in result.memory_dump())
        )
    if config.event_log:
        lines = [repr(ev) for ev in result.events or []]
        Path(config.event_log).write_text("".join(line + "\n" for line in lines))
    return RunOutcome(config, result)


def sweep(base: RunConfig, windows: list[int | None] | None = None) -> list[dict]:
    """One twc run per window plus strict and decoupled baselines.

    Returns report rows (dicts matching :data:`CSV_HEADER`), with
    ``speedup_pct`` measured against the strict baseline as
    ``(baseline_cycles / variant_cycles - 1) * 100``.
    """
    if windows is None:
        windows = list(SWEEP_WINDOWS)
    runs: list[tuple[str, int | None]] = [("strict", None), ("decoupled", None)]
    runs += [("twc", w) for w in windows]
    outcomes = [
        run(base.replace(mode=mode, window=w, dump_memory=None, event_log=None))
        for mode, w in runs
    ]
    baseline = outcomes[0].result.cycles
    rows = []
    for outcome in outcomes:
        m = outcome.metrics
        rows.append({
            "kernel": base.kernel,
            "mode": outcome.config.mode,
            "window": (
                _window_label(outcome.config.window)
                if outcome.config.mode == "twc" else "-"
            ),
            "cycles": outcome.result.cycles,
            "raw": m.raw,
            "war": m.war,
            "waw": m.waw,
            "commits": m.commits,
            "aborts": m.aborts,
            "speedup_pct": round((baseline / outcome.result.cycles - 1) * 100, 2),
        })
    return rows


def emit_report(rows: list[dict], out_dir: str | Path, name: str = "sweep") -> list[Path]:
    """Write the CSV table, a plot-data file and a rendered figure.

    The plot-data file holds one ``(window, speedup)`` series per kernel;
    the figure renders the same series.  Returns the written paths.
    """
    if not rows:
        raise ValueError("emit_report needs at least one row")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    csv_path = out / f"{name}.csv"
    lines = [CSV_HEADER]
    for row in rows:
        lines.append(",".join(str(row[col]) for col in CSV_HEADER.split(",")))
    csv_path.write_text("".join(line + "\n" for line in lines))

    series: dict[str, list[tuple[str, float]]] = {}
    for row in rows:
        if row["mode"] == "twc":
            series.setdefault(row["kernel"], []).append(
                (str(row["window"]), float(row["speedup_pct"]))
            )
    plot_path = out / f"{name}.plot"
    plot_lines = []
    for kernel in sorted(series):
        plot_lines.append(f"# {kernel}")
        for window, speedup in series[kernel]:
            plot_lines.append(f"{window} {speedup}")
    plot_path.write_text("".join(line + "\n" for line in plot_lines))

    png_path = out / f"{name}.png"
    _render_figure(series, png_path)
    return [csv_path, plot_path, png_path]


def _render_figure(series: dict[str, list[tuple[str, float]]], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for kernel in sorted(series):
        points = series[kernel]
        ax.plot(range(len(points)), [s for _, s in points], marker="o", label=kernel)
        ax.set_xticks(range(len(points)))
        ax.set_xticklabels([w for w, _ in points])
    ax.set_xlabel("speculation window")
    ax.set_ylabel("speedup vs strict (%)")
    ax.axhline(0.0, color="grey", linewidth=0.8)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def format_deadlock(error: DeadlockError) -> str:
    return f"deadlock: {error}"
