"""
Logging do laboratório de sketches

Cada logger grava JSON (um objeto por linha) e texto legível em arquivo, e texto
em stderr. Campos de contexto (experimento, semente) entram como chaves do JSON
via `with_context`.
"""
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional

from pythonjsonlogger import jsonlogger

from .settings import settings

_TEXT_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
_DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def _file_handlers(log_path: Path) -> list:
    json_handler = logging.FileHandler(log_path, encoding='utf-8')
    json_handler.setFormatter(jsonlogger.JsonFormatter(
        '%(asctime)s %(name)s %(levelname)s %(process)d %(message)s',
        datefmt=_DATE_FORMAT,
    ))
    plain_handler = logging.FileHandler(log_path.with_name(log_path.stem + "_plain.log"), encoding='utf-8')
    plain_handler.setFormatter(logging.Formatter(_TEXT_FORMAT, datefmt=_DATE_FORMAT))
    for handler in (json_handler, plain_handler):
        handler.setLevel(logging.DEBUG)
    return [json_handler, plain_handler]


def setup_logger(name: str, log_file: Optional[str] = None, level: Optional[str] = None) -> logging.Logger:
    """
    Logger com saída JSON e texto em arquivo e texto em stderr.

    Idempotente: chamadas repetidas com o mesmo nome (inclusive em processos
    filhos do runner) não duplicam handlers.
    """
    log_path = Path(log_file or settings.log_file)
    log_path.parent.mkdir(parents=True, exist_ok=True)

    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, (level or settings.log_level).upper()))
    if logger.handlers:
        return logger

    # stderr: o stdout fica livre para a saída --json da CLI
    console = logging.StreamHandler(sys.stderr)
    console.setLevel(getattr(logging, settings.console_log_level.upper()))
    console.setFormatter(logging.Formatter(_TEXT_FORMAT, datefmt=_DATE_FORMAT))

    for handler in [*_file_handlers(log_path), console]:
        logger.addHandler(handler)
    return logger


class ContextAdapter(logging.LoggerAdapter):
    """Anexa campos fixos a cada registro; o formatter JSON os grava como chaves."""

    def process(self, msg: Any, kwargs: Dict[str, Any]):
        kwargs["extra"] = {**self.extra, **kwargs.get("extra", {})}
        return msg, kwargs


def with_context(logger: logging.Logger, **fields: Any) -> ContextAdapter:
    """Ex.: with_context(logger, run="set_query_l2", seed=7).info("...")."""
    return ContextAdapter(logger, fields)
