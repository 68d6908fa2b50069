import logging

import pytest

from core import logger as dcea_logger


@pytest.fixture
def bare_logger():
    log = logging.getLogger("dcea")
    saved = list(log.handlers), log.level
    log.handlers.clear()
    yield log
    for handler in log.handlers:
        handler.close()
    log.handlers[:] = saved[0]
    log.setLevel(saved[1])


def test_console_and_file_handlers(tmp_path, bare_logger):
    log = dcea_logger.configure_logging("debug", str(tmp_path))
    assert log is bare_logger
    assert log.level == logging.DEBUG
    assert [type(h) for h in log.handlers] == [logging.StreamHandler, logging.FileHandler]
    logging.getLogger("dcea.core.sim_engine").info("hello")
    log.handlers[1].flush()
    assert "| INFO | dcea.core.sim_engine |" in (tmp_path / "dcea.log").read_text(encoding="utf-8")


def test_empty_log_dir_disables_the_file(bare_logger):
    log = dcea_logger.configure_logging("info", "")
    assert [type(h) for h in log.handlers] == [logging.StreamHandler]


def test_handlers_are_attached_once(tmp_path, bare_logger, monkeypatch):
    monkeypatch.setenv("DCEA_LOG_LEVEL", "warning")
    dcea_logger.configure_logging(log_dir="")
    dcea_logger.configure_logging(log_dir="")
    assert len(bare_logger.handlers) == 1
    assert bare_logger.level == logging.WARNING
