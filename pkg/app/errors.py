"""Exception hierarchy shared by the pipeline stages and the CLI."""

from __future__ import annotations


class GmlError(Exception):
    """Base class for every failure the CLI reports with a dedicated exit code."""

    exit_code = 4

    def __init__(self, module: str, message: str):
        super().__init__(f"{module}: {message}")
        self.module = module
        self.detail = message


class ConfigurationError(GmlError):
    exit_code = 2


class UsageError(GmlError):
    exit_code = 2


class ParseError(GmlError):
    exit_code = 3


class IntegrityError(GmlError):
    exit_code = 3


class DegenerateClusteringError(GmlError):
    pass


class ClassStarvationError(GmlError):
    pass


class NoEvidenceError(GmlError):
    def __init__(self, target: str):
        super().__init__("gradual_inference", f"no evidence shares a feature with {target!r}")
        self.target = target


class NumericError(GmlError):
    pass


class DomainError(GmlError, ValueError):
    pass
