"""Run the engine CLI and load its record files into tables."""

from __future__ import annotations

import shutil
import subprocess
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import wire


class EngineError(RuntimeError):
    """Nonzero engine exit; carries its stderr text."""

    def __init__(self, returncode: int, stderr: str):
        super().__init__(f"engine exited with {returncode}: {stderr.strip()}")
        self.returncode = returncode
        self.stderr = stderr


def engine_command() -> list[str]:
    exe = shutil.which("cortexsim")
    if exe:
        return [exe]
    return [sys.executable, "-m", "cortexsim.cli"]


def run_engine(args: list[str]) -> str:
    proc = subprocess.run(
        engine_command() + args, capture_output=True, text=True, check=False
    )
    if proc.returncode != 0:
        raise EngineError(proc.returncode, proc.stderr)
    return proc.stdout


@dataclass
class RunTables:
    spikes: list[tuple[int, int, int]]  # (t, minicolumn addr, 100-bit bitmap)
    events: np.ndarray  # columns: t, addr, type, count
    stats: np.ndarray  # columns: t, active
    stdout: str


def run_and_load(
    net: str,
    stim: str | None,
    steps: int,
    seed: int = 0,
    tm_minicolumns: int = 32768,
    f_gate: int = 0,
    burst: int = 64,
    workers: int = 1,
    monitor: str | None = None,
) -> RunTables:
    """Invoke `cortexsim run` and parse its record files."""
    with tempfile.TemporaryDirectory(prefix="netbuilder_run_") as tmp:
        tmp_path = Path(tmp)
        spikes = tmp_path / "spikes.csv"
        events = tmp_path / "events.csv"
        stats = tmp_path / "stats.csv"
        args = [
            "run", "--net", net, "--steps", str(steps), "--seed", str(seed),
            "--tm-minicolumns", str(tm_minicolumns), "--f-gate", str(f_gate),
            "--burst", str(burst), "--workers", str(workers),
            "--spikes", str(spikes), "--events", str(events), "--stats", str(stats),
        ]
        if stim is not None:
            args += ["--stim", stim]
        if monitor is not None:
            args += ["--monitor", monitor]
        stdout = run_engine(args)
        ev = wire.parse_event_records(str(events))
        st = wire.parse_stats_records(str(stats))
        return RunTables(
            spikes=wire.parse_spike_records(str(spikes)),
            events=np.asarray(ev, dtype=np.int64).reshape(-1, 4),
            stats=np.asarray(st, dtype=np.int64).reshape(-1, 2),
            stdout=stdout,
        )
