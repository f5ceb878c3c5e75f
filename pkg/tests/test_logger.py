import json
import logging
import sys

from config.logger import setup_logger, with_context
from config.settings import settings


def test_setup_is_idempotent(tmp_path):
    log_file = tmp_path / "lab.log"
    first = setup_logger("teste.idempotente", log_file=str(log_file))
    second = setup_logger("teste.idempotente", log_file=str(log_file))
    assert first is second
    assert len(first.handlers) == 3
    assert (tmp_path / "lab_plain.log").exists()


def test_context_fields_become_json_keys(tmp_path):
    log_file = tmp_path / "lab.log"
    logger = setup_logger("teste.contexto", log_file=str(log_file), level="DEBUG")
    with_context(logger, run="set_query_l2", seed=7).info("experimento iniciado", extra={"trial": 3})
    for handler in logger.handlers:
        handler.flush()

    line = json.loads(log_file.read_text(encoding="utf-8").splitlines()[-1])
    assert line["message"] == "experimento iniciado"
    assert (line["run"], line["seed"], line["trial"]) == ("set_query_l2", 7, 3)
    assert line["levelname"] == "INFO"


def test_context_reaches_captured_records(caplog):
    logger = setup_logger("teste.captura")
    with caplog.at_level(logging.WARNING, logger="teste.captura"):
        with_context(logger, run="zipfian").warning("aborto")
    record = caplog.records[-1]
    assert record.run == "zipfian" and record.getMessage() == "aborto"


def test_console_goes_to_stderr_at_configured_level(tmp_path):
    logger = setup_logger("teste.console", log_file=str(tmp_path / "lab.log"))
    consoles = [h for h in logger.handlers if type(h) is logging.StreamHandler]
    assert len(consoles) == 1
    assert consoles[0].stream is sys.stderr
    assert consoles[0].level == getattr(logging, settings.console_log_level.upper())
