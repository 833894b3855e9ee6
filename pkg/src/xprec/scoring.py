"""Candidate scoring primitives: combined score and quality bands."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, asdict

from .errors import OutOfRange


class QualityBand(enum.IntEnum):
    Poor = 0
    Fair = 1
    Good = 2
    VeryGood = 3
    Excellent = 4


# Lower-inclusive band boundaries.
_BAND_EDGES = [
    (0.7, QualityBand.Excellent),
    (0.6, QualityBand.VeryGood),
    (0.5, QualityBand.Good),
    (0.4, QualityBand.Fair),
    (0.0, QualityBand.Poor),
]


def combined_score(ce: float, llm: float) -> float:
    """Multiplicative quality score; weak performance on either axis dominates."""
    if not (0.0 <= ce <= 1.0 and 0.0 <= llm <= 1.0):
        raise OutOfRange(f"scores must be in [0,1], got ce={ce}, llm={llm}")
    return ce * llm


def band(score: float) -> QualityBand:
    if not 0.0 <= score <= 1.0:
        raise OutOfRange(f"score must be in [0,1], got {score}")
    for edge, b in _BAND_EDGES:
        if score >= edge:
            return b
    return QualityBand.Poor


@dataclass
class ScoredCandidate:
    anchor_item_id: str
    item_id: str
    source: str  # "mba" | "llm" | "similar"
    llm_rec: str = ""
    retrieval_sim: float = 0.0
    ce_score: float | None = None
    llm_score: float | None = None
    combined: float | None = None
    band: QualityBand | None = None

    def finalize(self) -> "ScoredCandidate":
        """Fill combined score and band once both component scores are set."""
        if self.ce_score is not None and self.llm_score is not None:
            self.combined = combined_score(self.ce_score, self.llm_score)
            self.band = band(self.combined)
        return self

    def to_json(self) -> str:
        d = asdict(self)
        d["band"] = self.band.name if self.band is not None else None
        return json.dumps(d, sort_keys=True)

    @staticmethod
    def from_json(line: str) -> "ScoredCandidate":
        d = json.loads(line)
        if d.get("band") is not None:
            d["band"] = QualityBand[d["band"]]
        return ScoredCandidate(**d)
