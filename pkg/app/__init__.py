"""Gradual machine learning for entity resolution.

Importing the package installs the SQLAlchemy aliases SQLModel 0.0.16 needs
so the optional run catalog works against both the pinned 1.4 series and 2.x.
"""

from __future__ import annotations

import sys
import types

import sqlalchemy.engine.interfaces as _sainterfaces
import sqlalchemy.engine.result as _saresult
import sqlalchemy.types as _satypes
from sqlalchemy.orm import RelationshipProperty as _RelationshipProperty

__version__ = "0.3.0"


def _alias(module: object, name: str, value: object) -> None:
    if not hasattr(module, name):
        setattr(module, name, value)


for _name in ("DOUBLE", "Double", "DOUBLE_PRECISION"):
    _alias(_satypes, _name, _satypes.Float)
_alias(_satypes, "UUID", getattr(_satypes, "Uuid", _satypes.CHAR))
_alias(_satypes, "Uuid", _satypes.CHAR)
_alias(_sainterfaces, "_CoreAnyExecuteParams", object)
_alias(_sainterfaces, "_CoreSingleExecuteParams", object)
_alias(_saresult, "TupleResult", _saresult.Result)
# 1.4 relationship properties are not subscriptable
_alias(_RelationshipProperty, "__class_getitem__", classmethod(lambda cls, _: cls))

_orm_typing = sys.modules.setdefault("sqlalchemy.orm._typing", types.ModuleType("sqlalchemy.orm._typing"))
_alias(_orm_typing, "OrmExecuteOptionsParameter", object)
