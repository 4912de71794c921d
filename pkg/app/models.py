"""SQLModel entities of the run catalog."""

import datetime as dt
from typing import Optional

from sqlmodel import Field, SQLModel


class RunRecordBase(SQLModel):
    dataset: str = Field(index=True, max_length=128)
    command: str = "run"
    inference_mode: str = "scalable"
    seed: int = 0
    m: int
    k: int
    delta_cap: int
    easy_ratio: float
    n_pairs: int = 0
    n_evidence: int = 0
    iterations: int = 0
    fallbacks: int = 0
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None
    seconds: float = 0.0
    output_dir: str = ""
    config_echo: str = ""


class RunRecord(RunRecordBase, table=True):
    id: Optional[int] = Field(default=None, primary_key=True)
    created_at: dt.datetime = Field(default_factory=dt.datetime.utcnow, index=True)
