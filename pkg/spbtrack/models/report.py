from datetime import datetime
from typing import Any, Dict, List, Tuple

import pandas as pd

from pydantic import BaseModel, Field

REPORT_COLUMNS = [
    "sequence",
    "sAMOTA",
    "AMOTA",
    "AMOTP",
    "MOTA",
    "MOTP",
    "recall",
    "precision",
    "F1",
    "IDs",
    "IDs_best_recall",
    "IDs_best_mota",
    "TP",
    "FP",
    "FN",
    "GT",
]


class FrameMatch(BaseModel):
    """Per-frame matching outcome; ``matches`` holds (gt id, pred id, IoU)."""

    frame: int
    matches: List[Tuple[int, int, float]] = Field(default_factory=list)
    fp: int = 0
    fn: int = 0

    @property
    def tp(self) -> int:
        return len(self.matches)


class ClearMot(BaseModel):
    mota: float = 0.0
    motp: float = 0.0
    recall: float = 0.0
    precision: float = 0.0
    f1: float = 0.0
    ids: int = Field(default=0, ge=0)
    tp: int = 0
    fp: int = 0
    fn: int = 0
    gt: int = 0


class RecallSweep(BaseModel):
    samota: float = 0.0
    amota: float = 0.0
    amotp: float = 0.0
    ids_best_recall: int = 0
    ids_best_mota: int = 0


class SequenceMetrics(BaseModel):
    sequence: str
    clear: ClearMot = Field(default_factory=ClearMot)
    sweep: RecallSweep = Field(default_factory=RecallSweep)

    def row(self) -> Dict[str, Any]:
        c, s = self.clear, self.sweep
        return {
            "sequence": self.sequence,
            "sAMOTA": s.samota,
            "AMOTA": s.amota,
            "AMOTP": s.amotp,
            "MOTA": c.mota,
            "MOTP": c.motp,
            "recall": c.recall,
            "precision": c.precision,
            "F1": c.f1,
            "IDs": c.ids,
            "IDs_best_recall": s.ids_best_recall,
            "IDs_best_mota": s.ids_best_mota,
            "TP": c.tp,
            "FP": c.fp,
            "FN": c.fn,
            "GT": c.gt,
        }


class EvalReport(BaseModel):
    sequences: List[SequenceMetrics] = Field(default_factory=list)
    aggregate: SequenceMetrics = Field(
        default_factory=lambda: SequenceMetrics(sequence="all")
    )
    iou_threshold: float = 0.25

    def to_frame(self) -> pd.DataFrame:
        rows = [m.row() for m in self.sequences] + [self.aggregate.row()]
        return pd.DataFrame(rows, columns=REPORT_COLUMNS)

    def to_csv(self, path: Any) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.6f")

    def table(self) -> str:
        return self.to_frame().to_string(index=False, float_format="%.4f")


class RunManifest(BaseModel):
    command: str
    version: str
    config: Dict[str, Any] = Field(default_factory=dict)
    inputs: Dict[str, str] = Field(default_factory=dict)
    outputs: List[str] = Field(default_factory=list)
    seed: int = 0
    frames: int = 0
    frames_per_second: float = 0.0
    timing_ms: Dict[str, float] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)
    created_at: datetime = Field(default_factory=datetime.now)
