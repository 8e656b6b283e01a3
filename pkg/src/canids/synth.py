"""Synthetic CAN traffic generation and attack injection (flooding/fuzzing/replay/spoofing)."""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .frames import CanFrame, Label, pad_payload

STANDARD_ID_SPACE = 0x800  # 11-bit IDs for randomly fuzzed frames


@dataclass(frozen=True)
class ByteSpec:
    """Value model for one payload byte.

    kind: "const" (value a), "counter" (starts at a, step b, mod 256),
    or "walk" (bounded random walk on [a, b] with +-step c).
    """

    kind: str
    a: int = 0
    b: int = 0
    c: int = 1


@dataclass(frozen=True)
class EcuSpec:
    arbitration_id: int
    period_ms: float
    dlc: int
    bytes: Tuple[ByteSpec, ...] = ()  # one spec per payload byte up to dlc; missing = const 0


@dataclass(frozen=True)
class TrafficProfile:
    ecu_specs: Tuple[EcuSpec, ...]
    duration: float
    jitter: float = 0.0  # fraction of period, uniform +- jitter
    seed: int = 0

    def validate(self) -> None:
        if not self.ecu_specs:
            raise ValueError("profile needs at least one ECU spec")
        if not 0.0 <= self.jitter < 0.5:
            raise ValueError(f"jitter must lie in [0, 0.5), got {self.jitter}")
        for spec in self.ecu_specs:
            if spec.period_ms <= 0:
                raise ValueError(f"ECU {spec.arbitration_id:#x} has non-positive period")


@dataclass(frozen=True)
class AttackSpec:
    kind: Label
    start: float
    duration: float
    rate: float = 100.0                       # messages/second (flooding, fuzzing, spoofing)
    target_id: int = 0x000                    # flooding, spoofing
    replay_span: Tuple[float, float] = (0.0, 0.0)
    mutation: Tuple[Tuple[int, int, int], ...] = ()  # (byte index, lo, hi) inclusive ranges


def _byte_value(spec: ByteSpec, k: int, walk_state: dict, key, rng: np.random.Generator) -> int:
    if spec.kind == "const":
        return spec.a & 0xFF
    if spec.kind == "counter":
        return (spec.a + k * spec.b) & 0xFF
    if spec.kind == "walk":
        lo, hi = spec.a, spec.b
        v = walk_state.get(key, (lo + hi) // 2)
        v += int(rng.integers(-spec.c, spec.c + 1))
        v = max(lo, min(hi, v))
        walk_state[key] = v
        return v
    raise ValueError(f"unknown byte model {spec.kind!r}")


def generate_normal(profile: TrafficProfile) -> list:
    """Emit periodic frames for every ECU, merged in timestamp order.

    Deterministic for a fixed seed; each ECU draws from its own seeded
    substream so adding an ECU never perturbs the others.
    """
    profile.validate()
    all_frames = []
    for idx, spec in enumerate(profile.ecu_specs):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=profile.seed, spawn_key=(idx,)))
        period = spec.period_ms / 1000.0
        walk_state: dict = {}
        k = 0
        t = 0.0
        while t < profile.duration:
            if profile.jitter > 0:
                ts = t + float(rng.uniform(-profile.jitter, profile.jitter)) * period
                ts = max(0.0, ts)
            else:
                ts = t
            data = []
            for b in range(spec.dlc):
                bspec = spec.bytes[b] if b < len(spec.bytes) else ByteSpec("const", 0)
                data.append(_byte_value(bspec, k, walk_state, b, rng))
            all_frames.append(CanFrame(ts, spec.arbitration_id, spec.dlc, pad_payload(data), Label.NORMAL))
            k += 1
            t = k * period
    all_frames.sort(key=lambda f: f.timestamp)
    return all_frames


def _check_interval(frames, start: float, end: float) -> None:
    t0, t1 = frames[0].timestamp, frames[-1].timestamp
    if start < t0 - 1e-9 or end > t1 + 1e-9:
        raise ValueError(f"attack interval [{start}, {end}] outside log span [{t0}, {t1}]")


def inject(frames: Sequence[CanFrame], spec: AttackSpec, seed: int = 0) -> list:
    """Insert attack frames into a timestamp-sorted log; originals are untouched.

    Output is re-sorted by timestamp with injected frames placed after
    originals on ties.
    """
    if not frames:
        raise ValueError("cannot inject into an empty log")
    rng = np.random.default_rng(seed)
    end = spec.start + spec.duration
    _check_interval(frames, spec.start, end)
    injected: list = []

    if spec.kind is Label.FLOODING:
        if spec.rate <= 0:
            raise ValueError("flooding rate must be positive")
        count = int(round(spec.rate * spec.duration))
        for i in range(count):
            ts = spec.start + i / spec.rate
            injected.append(CanFrame(ts, spec.target_id, 8, b"\x00" * 8, Label.FLOODING))
    elif spec.kind is Label.FUZZING:
        if spec.rate <= 0:
            raise ValueError("fuzzing rate must be positive")
        count = int(round(spec.rate * spec.duration))
        times = np.sort(rng.uniform(spec.start, end, size=count))
        for ts in times:
            arb = int(rng.integers(0, STANDARD_ID_SPACE))
            dlc = int(rng.integers(0, 9))
            data = [int(v) for v in rng.integers(0, 256, size=dlc)]
            injected.append(CanFrame(float(ts), arb, dlc, pad_payload(data), Label.FUZZING))
    elif spec.kind is Label.REPLAY:
        lo, hi = spec.replay_span
        source = [f for f in frames if lo <= f.timestamp < hi]
        if not source:
            raise ValueError(f"replay span [{lo}, {hi}) contains no frames")
        base = source[0].timestamp
        for f in source:
            ts = spec.start + (f.timestamp - base)
            injected.append(CanFrame(ts, f.arbitration_id, f.dlc, f.payload, Label.REPLAY))
    elif spec.kind is Label.SPOOFING:
        if spec.rate <= 0:
            raise ValueError("spoofing rate must be positive")
        if not spec.mutation:
            raise ValueError("spoofing needs at least one byte mutation")
        count = int(round(spec.rate * spec.duration))
        # spoofed payloads start from the victim's last genuine payload
        victim = sorted(
            (f for f in frames if f.arbitration_id == spec.target_id),
            key=lambda f: f.timestamp,
        )
        victim_times = [f.timestamp for f in victim]
        for i in range(count):
            ts = spec.start + i / spec.rate
            pos = bisect.bisect_right(victim_times, ts)
            if pos > 0:
                base_dlc, base_payload = victim[pos - 1].dlc, victim[pos - 1].payload
            else:
                base_dlc, base_payload = 8, b"\x00" * 8
            data = bytearray(base_payload)
            dlc = base_dlc
            for (bi, lo, hi) in spec.mutation:
                if bi >= dlc:
                    dlc = bi + 1
                data[bi] = int(rng.integers(lo, hi + 1))
            for j in range(dlc, 8):
                data[j] = 0
            injected.append(CanFrame(ts, spec.target_id, dlc, bytes(data), Label.SPOOFING))
    else:
        raise ValueError(f"not an attack kind: {spec.kind}")

    tagged = [(f.timestamp, 0, i, f) for i, f in enumerate(frames)]
    tagged += [(f.timestamp, 1, i, f) for i, f in enumerate(injected)]
    tagged.sort(key=lambda t: t[:3])
    return [t[3] for t in tagged]
