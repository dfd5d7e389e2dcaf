"""Tests for FileLogger."""

import logging
import os
import re
import tempfile

import pytest
from hypothesis import given, settings, strategies as st

from zdquant.utils.exceptions import ConfigError
from zdquant.utils.file_logger import FileLogger, get_logger, resolve_level, setup_logger


class TestFileLoggerProperty:
    """Every log entry SHALL carry timestamp, level and message."""

    @given(message=st.text(alphabet="abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 =.", min_size=1, max_size=50))
    @settings(max_examples=50)
    def test_entry_fields(self, message):
        with tempfile.TemporaryDirectory() as tmpdir:
            log_file = os.path.join(tmpdir, "run.log")
            logger = FileLogger(log_file=log_file, level="DEBUG")
            logger.setup(tmpdir)
            logger.info(message)
            logger.close()
            with open(log_file, "r", encoding="utf-8") as f:
                content = f.read()
        assert re.search(r"\d{4}-\d{2}-\d{2} \d{2}:\d{2}:\d{2}", content)
        assert "| INFO" in content
        assert message.strip() in content

    @given(level=st.sampled_from(["DEBUG", "INFO", "WARNING", "ERROR"]))
    @settings(max_examples=20)
    def test_level_appears(self, level):
        with tempfile.TemporaryDirectory() as tmpdir:
            log_file = os.path.join(tmpdir, "run.log")
            logger = FileLogger(log_file=log_file, level="DEBUG")
            logger.setup(tmpdir)
            getattr(logger, level.lower())("solver step")
            logger.close()
            with open(log_file, "r", encoding="utf-8") as f:
                assert level in f.read()


class TestFileLoggerUnit:
    def test_default_file_name(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            logger = FileLogger(level="INFO")
            log_path = logger.setup(tmpdir)
            logger.info("start")
            logger.close()
            assert os.path.basename(log_path).startswith("zdquant_")
            assert os.path.exists(log_path)

    def test_level_filters(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            log_file = os.path.join(tmpdir, "run.log")
            logger = FileLogger(log_file=log_file, level="WARNING")
            logger.setup(tmpdir)
            logger.info("hidden")
            logger.warning("shown")
            logger.close()
            with open(log_file, "r", encoding="utf-8") as f:
                content = f.read()
        assert "hidden" not in content and "shown" in content

    def test_log_summary(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            log_file = os.path.join(tmpdir, "run.log")
            logger = FileLogger(log_file=log_file)
            logger.setup(tmpdir)
            logger.log_summary({"gain": 0.0625, "iterations": 41})
            logger.close()
            with open(log_file, "r", encoding="utf-8") as f:
                content = f.read()
        assert "gain: 0.0625" in content
        assert "iterations: 41" in content

    def test_no_file_without_log_to_file(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            logger = FileLogger(log_to_file=False)
            assert logger.setup(tmpdir) is None
            logger.info("console only")
            logger.close()
            assert os.listdir(tmpdir) == []

    def test_setup_logger_replaces_global(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            logger = setup_logger(level="DEBUG", output_dir=tmpdir)
            try:
                assert get_logger() is logger
                assert logger.log_file.startswith(tmpdir)
            finally:
                logger.close()

    def test_log_run_line(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            log_file = os.path.join(tmpdir, "run.log")
            logger = FileLogger(log_file=log_file)
            logger.setup(tmpdir)
            logger.log_run("solve", seed=7, tol=1e-9, exact=True)
            logger.log_summary({"passed": False})
            logger.close()
            with open(log_file, "r", encoding="utf-8") as f:
                content = f.read()
        assert "solve: seed=7 tol=1e-09 exact=true" in content
        assert "passed: false" in content

    def test_unknown_level(self):
        with pytest.raises(ConfigError):
            FileLogger(level="LOUD")
        assert resolve_level("warning") == logging.WARNING

    def test_run_name(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            logger = FileLogger(run_name="zdquant_couple")
            log_path = logger.setup(tmpdir)
            logger.close()
            assert os.path.basename(log_path).startswith("zdquant_couple_")
