"""Core CAN frame, normalized frame, and window types shared across the pipeline."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

MAX_DLC = 8
MAX_ARBITRATION_ID = 1 << 29  # 29-bit extended IDs


class Label(enum.Enum):
    NORMAL = "Normal"
    FLOODING = "Flooding"
    FUZZING = "Fuzzing"
    REPLAY = "Replay"
    SPOOFING = "Spoofing"

    @classmethod
    def from_string(cls, s: str) -> "Label":
        key = s.strip().lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ValueError(f"unknown label {s!r}")

    @property
    def is_attack(self) -> bool:
        return self is not Label.NORMAL


@dataclass(frozen=True)
class CanFrame:
    """One parsed CAN message with an 8-byte zero-padded payload."""

    timestamp: float
    arbitration_id: int
    dlc: int
    payload: bytes  # always 8 bytes; bytes at index >= dlc are 0x00
    label: Label = Label.NORMAL

    def __post_init__(self) -> None:
        if not 0 <= self.dlc <= MAX_DLC:
            raise ValueError(f"dlc {self.dlc} outside [0, {MAX_DLC}]")
        if not 0 <= self.arbitration_id < MAX_ARBITRATION_ID:
            raise ValueError(f"arbitration id {self.arbitration_id:#x} outside 29-bit range")
        if len(self.payload) != MAX_DLC:
            raise ValueError(f"payload must be {MAX_DLC} bytes, got {len(self.payload)}")
        if any(self.payload[i] != 0 for i in range(self.dlc, MAX_DLC)):
            raise ValueError("payload bytes beyond dlc must be zero")


def pad_payload(data: Sequence[int]) -> bytes:
    """Zero-pad a payload of up to 8 bytes to exactly 8 bytes."""
    if len(data) > MAX_DLC:
        raise ValueError(f"payload longer than {MAX_DLC} bytes")
    return bytes(data) + b"\x00" * (MAX_DLC - len(data))


@dataclass(frozen=True)
class NormalizedFrame:
    """Frame after field normalization; both real-valued and binarized bytes kept."""

    timestamp: float
    arbitration_id: int
    dlc_norm: float            # dlc / 8
    byte_norm: tuple           # payload[i] / 255, 8 values in [0, 1]
    byte_bin: tuple            # 1 where payload[i] > 0, 8 values in {0, 1}
    label: Label = Label.NORMAL


@dataclass
class Window:
    """W consecutive frames; labeled anomalous when any member frame is an attack."""

    index: int
    frames: list  # list[NormalizedFrame], exactly W entries
    label: int    # 1 = anomalous

    @property
    def size(self) -> int:
        return len(self.frames)

    def attack_kinds(self) -> set:
        """Attack labels present in this window (empty for a normal window)."""
        return {f.label for f in self.frames if f.label.is_attack}
