"""Structured logging for protocol runs, tagged with party and round when known."""

from __future__ import annotations

import json
import logging
import sys
import time
from typing import Any

from fastlloyd.config.settings import get_settings

# Attributes set through ``extra=`` by the msa package.
PROTOCOL_FIELDS = ("role", "party", "round")

TEXT_FORMAT = "%(asctime)s [%(levelname)s] %(threadName)s %(name)s%(context)s: %(message)s"


def protocol_context(
    role: str, party: int | None = None, round_index: int | None = None
) -> dict[str, Any]:
    """``extra=`` payload identifying which party (and round) a record came from."""
    context: dict[str, Any] = {"role": role}
    if party is not None:
        context["party"] = party
    if round_index is not None:
        context["round"] = round_index
    return context


def _context_of(record: logging.LogRecord) -> dict[str, Any]:
    return {f: getattr(record, f) for f in PROTOCOL_FIELDS if hasattr(record, f)}


class JsonFormatter(logging.Formatter):
    """One JSON object per record; protocol context fields are promoted to top-level keys."""

    def format(self, record: logging.LogRecord) -> str:
        entry: dict[str, Any] = {
            "ts": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(record.created))
            + f".{int(record.msecs):03d}Z",
            "level": record.levelname,
            "logger": record.name,
            "thread": record.threadName,
            "msg": record.getMessage(),
        }
        entry.update(_context_of(record))
        if record.levelno >= logging.WARNING:
            entry["where"] = f"{record.module}.{record.funcName}:{record.lineno}"
        if record.exc_info and record.exc_info[0] is not None:
            entry["exception"] = self.formatException(record.exc_info)
        return json.dumps(entry, default=str)


class ContextTextFormatter(logging.Formatter):
    """Text lines with a ``[role party=N round=T]`` tag when the record carries one."""

    def __init__(self) -> None:
        super().__init__(TEXT_FORMAT)

    def format(self, record: logging.LogRecord) -> str:
        context = _context_of(record)
        if context:
            role = context.pop("role", "")
            tags = " ".join([role, *(f"{k}={v}" for k, v in context.items())]).strip()
            record.context = f" [{tags}]"
        else:
            record.context = ""
        return super().format(record)


def setup_logging(level: str | None = None, json_output: bool | None = None) -> None:
    """Install a single stderr handler on the root logger.

    ``level`` and ``json_output`` fall back to FASTLLOYD_LOG_LEVEL and FASTLLOYD_LOG_FORMAT.
    Calling it again replaces the previous handler.
    """
    settings = get_settings()
    level = level or settings.log_level
    if json_output is None:
        json_output = settings.log_format.lower() == "json"
    log_level = logging.getLevelName(level.upper())
    if not isinstance(log_level, int):
        log_level = logging.INFO

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonFormatter() if json_output else ContextTextFormatter())

    root = logging.getLogger()
    root.handlers.clear()
    root.setLevel(log_level)
    root.addHandler(handler)
