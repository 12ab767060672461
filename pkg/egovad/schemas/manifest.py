"""
Pydantic schemas for manifest entries and validation reports
"""
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"


class VideoLabel(str, Enum):
    NORMAL = "normal"
    ANOMALY = "anomaly"


class ClassTag(str, Enum):
    """Anomaly categories of the WS-DoTA test split"""

    ST = "ST"  # collision with a vehicle that starts, stops, or is stationary
    AH = "AH"  # collision with a vehicle moving ahead or waiting
    LA = "LA"  # collision with a vehicle moving laterally in the same direction
    OC = "OC"  # collision with an oncoming vehicle
    TC = "TC"  # collision with a vehicle turning into or crossing the road
    VP = "VP"  # collision between vehicle and pedestrian
    VO = "VO"  # collision with an obstacle in the roadway
    OO = "OO"  # out of control, leaving the roadway to the left or right


class ManifestEntry(BaseModel):
    """One video of a manifest (one JSONL line)"""

    video_id: str = Field(..., min_length=1)
    split: Split
    label: VideoLabel
    class_tag: Optional[ClassTag] = None
    feature_path: str
    frame_count: int
    anomaly_intervals: List[Tuple[int, int]] = Field(
        default_factory=list,
        description="Half-open [start_frame, end_frame) intervals, 0-indexed",
    )


class Violation(BaseModel):
    """One manifest problem; violations are data, never exceptions"""

    code: str
    video_id: Optional[str] = None
    message: str

    def sort_key(self) -> Tuple[str, str, str]:
        return (self.code, self.video_id or "", self.message)


class ValidationReport(BaseModel):
    violations: List[Violation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def messages(self) -> List[str]:
        return [
            f"[{v.code}] {v.video_id}: {v.message}" if v.video_id else f"[{v.code}] {v.message}"
            for v in self.violations
        ]
