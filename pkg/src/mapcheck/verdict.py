from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional


class Outcome(str, Enum):
    CYCLE_FOUND = "cycle-found"
    NO_ACCEPTING_CYCLE = "no-accepting-cycle"


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    witness: Optional[int] = None

    def __post_init__(self):
        if (self.outcome is Outcome.CYCLE_FOUND) != (self.witness is not None):
            raise ValueError("witness must be present exactly when a cycle is found")

    @property
    def cycle_found(self) -> bool:
        return self.outcome is Outcome.CYCLE_FOUND

    @classmethod
    def found(cls, witness: int) -> "Verdict":
        return cls(Outcome.CYCLE_FOUND, int(witness))

    @classmethod
    def none(cls) -> "Verdict":
        return cls(Outcome.NO_ACCEPTING_CYCLE)
