from __future__ import annotations

"""SQLite run catalog helpers."""

import logging
from pathlib import Path
from typing import List, Optional

from sqlalchemy.engine import Engine
from sqlmodel import Session, SQLModel, create_engine, select

from .models import RunRecord

logger = logging.getLogger(__name__)


def make_engine(path: Path) -> Engine:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return create_engine(f"sqlite:///{path}", echo=False)


def init_db(engine: Engine) -> None:
    SQLModel.metadata.create_all(engine)


def record_run(path: Path, record: RunRecord) -> RunRecord:
    """Append one run to the catalog at ``path``, creating it on first use."""

    engine = make_engine(path)
    init_db(engine)
    with Session(engine) as session:
        session.add(record)
        session.commit()
        session.refresh(record)
    logger.info("Recorded run %s of %s in %s", record.id, record.dataset, path)
    return record


def list_runs(path: Path, dataset: Optional[str] = None) -> List[RunRecord]:
    engine = make_engine(path)
    init_db(engine)
    with Session(engine) as session:
        query = select(RunRecord)
        if dataset is not None:
            query = query.where(RunRecord.dataset == dataset)
        return session.exec(query.order_by(RunRecord.id)).all()
