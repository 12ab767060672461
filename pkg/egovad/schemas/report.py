"""
Pydantic schemas for evaluation reports and dataset statistics
"""
from typing import Dict, Optional

from pydantic import BaseModel, Field


class EvalReport(BaseModel):
    """Frame-level ROC-AUC, overall and per anomaly class"""

    overall_auc: float = Field(..., ge=0, le=1)
    class_auc: Dict[str, float] = Field(default_factory=dict)
    frames_evaluated: Dict[str, int] = Field(default_factory=dict)
    averaging: str = "micro"


class SplitStats(BaseModel):
    videos: int
    total_frames: int
    mean_frames: float
    min_frames: int
    max_frames: int
    anomaly_segments: int = 0
    mean_anomaly_frames: Optional[float] = None
    min_anomaly_frames: Optional[int] = None
    max_anomaly_frames: Optional[int] = None


class DatasetStats(BaseModel):
    """Per split/label statistics plus per-class test counts"""

    groups: Dict[str, SplitStats] = Field(default_factory=dict)
    test_class_counts: Dict[str, int] = Field(default_factory=dict)
