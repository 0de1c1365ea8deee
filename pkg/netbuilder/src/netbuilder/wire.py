"""Canonical engine file formats, written independently of the engine.

Implements the documented canonical-writer contract: deterministic line
ordering, hex addressing, and time constants rendered as the shortest
decimal that re-quantizes to the same 8-bit leak code.  Files produced
here are byte-compatible with the engine's own generator for the same
content.
"""

from __future__ import annotations

import math

CODE4_MIN, CODE4_MAX = -8, 7
HYPER_SPAN = 1 << 20
ADDR_SPAN = 1 << 27


def leak_code(tau_ms: float) -> int:
    """8-bit leak rate: round(256*tau/(tau+1)), tau in (0, 30] ms."""
    if not tau_ms > 0 or tau_ms > 30:
        raise ValueError(f"time constant must be in (0, 30] ms, got {tau_ms}")
    return min(255, math.floor(256.0 * tau_ms / (tau_ms + 1.0) + 0.5))


def gain_code(g: float) -> int:
    """8-bit gain code: round(g*16) clamped to [1, 255]."""
    return max(1, min(255, math.floor(g * 16 + 0.5)))


def weight_code(w: float) -> int:
    """Signed 4-bit code: round(w*8) clamped to [-8, 7]."""
    return max(CODE4_MIN, min(CODE4_MAX, math.floor(w * 8 + 0.5)))


def canonical_tau(leak: int) -> float:
    """Shortest decimal time constant that quantizes back to ``leak``."""
    if leak <= 0:
        return 0.01
    tau = leak / (256.0 - leak) if leak < 256 else 30.0
    for digits in range(0, 6):
        cand = round(tau, digits)
        if 0 < cand <= 30.0 and leak_code(cand) == min(255, leak):
            return cand
    return min(tau, 30.0)


def _fmt(x: float) -> str:
    return f"{x:g}"


def serialize_network(
    seed: int,
    ranges: list[tuple[int, int, int]],  # (start_addr, param_type_id, conn_id)
    types: dict[tuple[int, int], tuple[int, dict]],  # (ptype, slot) -> (count, codes)
    posts: dict[tuple[int, int], int],  # (conn, slot) -> delay
    pres: dict[tuple[int, int], dict],  # (conn, slot) -> rule fields
) -> str:
    lines = [f"seed {seed}"]
    for i, (start, ptype, conn) in enumerate(sorted(ranges)):
        lines.append(f"range {i} {start:07x} {ptype} {conn}")
    for (ptype, slot), (count, c) in sorted(types.items()):
        if count == 0:
            continue
        lines.append(
            f"type {ptype} {slot} {count} "
            f"{_fmt(canonical_tau(c['leak_epsc']))} {_fmt(canonical_tau(c['leak_ipsc']))} "
            f"{_fmt(canonical_tau(c['leak_mem']))} {_fmt(canonical_tau(c['leak_rfc']))} "
            f"{_fmt(c['g_syn'] / 16)} {_fmt(c['g_psc'] / 16)} "
            f"{c['v_init']} {c['v_reset']}"
        )
    for (conn, slot), delay in sorted(posts.items()):
        lines.append(f"post {conn} {slot} {delay}")
    for (conn, slot), rule in sorted(pres.items()):
        lines.append(
            f"pre {conn} {slot} {rule['offset']:05x} {rule['fanout']} {rule['dest_hc_size']}"
        )
        lines.append(f"weights {conn} {slot} " + " ".join(str(w) for w in rule["weights"]))
        lines.append(f"masks {conn} {slot} " + " ".join(f"{m:02x}" for m in rule["masks"]))
    return "\n".join(lines) + "\n"


def serialize_stimulus(events: list[tuple[int, int, tuple[int, ...]]]) -> str:
    lines = [
        f"ev {t} {addr:07x} " + " ".join(str(c) for c in counts)
        for t, addr, counts in events
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_spike_records(path: str) -> list[tuple[int, int, int]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            t, addr, bitmap = line.rstrip("\n").split(",")
            out.append((int(t), int(addr, 16), int(bitmap, 16)))
    return out


def parse_event_records(path: str) -> list[tuple[int, int, int, int]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            t, addr, ty, count = line.rstrip("\n").split(",")
            out.append((int(t), int(addr, 16), int(ty), int(count)))
    return out


def parse_stats_records(path: str) -> list[tuple[int, int]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            t, active = line.rstrip("\n").split(",")
            out.append((int(t), int(active)))
    return out
