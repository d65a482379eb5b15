"""Idealised crosstalk-compensation baselines applied to a channel set."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .cable_model import ChannelMatrixSet

DEFAULT_THP_LOSS_DB = 0.5


class CompensationKind(enum.Enum):
    NONE = "none"
    IDEAL = "ideal"
    THP = "thp"


@dataclass(frozen=True)
class CompensationMode:
    kind: CompensationKind = CompensationKind.NONE
    precoding_loss_db: float = 0.0

    def __post_init__(self):
        if not (self.precoding_loss_db >= 0 and math.isfinite(self.precoding_loss_db)):
            raise ValueError(
                f"precoding loss must be finite and >= 0 dB, got {self.precoding_loss_db!r}"
            )
        if self.kind is not CompensationKind.THP and self.precoding_loss_db != 0:
            raise ValueError("precoding loss only applies to THP compensation")

    @classmethod
    def parse(cls, text) -> "CompensationMode":
        """Accepts ``none``, ``ideal``, ``thp`` or ``thp:<loss_db>``."""
        if isinstance(text, cls):
            return text
        raw = str(text).strip().lower()
        name, _, arg = raw.partition(":")
        if name == "none" and not arg:
            return cls()
        if name == "ideal" and not arg:
            return cls(CompensationKind.IDEAL)
        if name == "thp":
            if not arg:
                return cls(CompensationKind.THP, DEFAULT_THP_LOSS_DB)
            try:
                loss = float(arg)
            except ValueError:
                raise ValueError(f"bad THP loss in compensation {text!r}") from None
            return cls(CompensationKind.THP, loss)
        raise ValueError(
            f"unknown compensation {text!r}; expected none, ideal or thp:<loss_db>"
        )

    def __str__(self) -> str:
        if self.kind is CompensationKind.THP:
            return f"thp:{self.precoding_loss_db:g}"
        return self.kind.value


NONE = CompensationMode()
IDEAL = CompensationMode(CompensationKind.IDEAL)


def compensate(channels: ChannelMatrixSet, mode: CompensationMode = NONE) -> ChannelMatrixSet:
    if mode.kind is CompensationKind.NONE:
        return channels
    n = channels.n_pairs
    direct = channels.direct_gains()
    if mode.kind is CompensationKind.THP:
        direct = direct * 10.0 ** (-mode.precoding_loss_db / 10.0)
    gains = np.zeros_like(channels.gains)
    idx = np.arange(n)
    gains[:, idx, idx] = direct
    return replace(channels, gains=gains)
