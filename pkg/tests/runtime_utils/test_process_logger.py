import logging

import pytest

from ztac_py.crypto_core.primitives import hash_bytes
from ztac_py.runtime_utils.env_validation import env_int, validate_environment
from ztac_py.runtime_utils.op_tally import Phase, in_phase, recording
from ztac_py.runtime_utils.process_logger import ProcessLogger


def test_log_lifecycle(caplog: pytest.LogCaptureFixture) -> None:
    """
    start and complete lines carry the process name, metadata and status
    """
    caplog.set_level(logging.INFO)

    process_logger = ProcessLogger("unit_process", scenario="honest", status="ignored")
    process_logger.log_start()
    process_logger.add_metadata(windows=3)
    process_logger.log_complete()

    assert "process_name=unit_process" in caplog.text
    assert "scenario=honest" in caplog.text
    assert "windows=3" in caplog.text
    assert "status=started" in caplog.text
    assert "status=complete" in caplog.text
    assert "parent=ztac_test" in caplog.text


def test_log_failure(caplog: pytest.LogCaptureFixture) -> None:
    """
    failures are logged at error level with the exception type
    """
    caplog.set_level(logging.INFO)

    process_logger = ProcessLogger("failing_process")
    process_logger.log_start()
    try:
        raise KeyError("missing")
    except KeyError as exception:
        process_logger.log_failure(exception)

    errors = [record for record in caplog.records if record.levelno == logging.ERROR]
    assert len(errors) == 1
    assert "status=failed" in errors[0].getMessage()
    assert "error_type=KeyError" in errors[0].getMessage()


def test_operation_deltas(caplog: pytest.LogCaptureFixture) -> None:
    """
    completion lines report the operations performed since log_start
    """
    caplog.set_level(logging.INFO)

    with recording():
        hash_bytes(b"before")
        process_logger = ProcessLogger("hashing")
        process_logger.log_start()
        hash_bytes(b"one")
        hash_bytes(b"two")
        process_logger.log_complete()

    completed = [record.getMessage() for record in caplog.records if "status=complete" in record.getMessage()]
    assert len(completed) == 1
    assert "ops_T_SHA=2" in completed[0]


def test_context_manager(caplog: pytest.LogCaptureFixture) -> None:
    """
    lines inside a protocol phase are tagged with it, and an exception leaving
    the block is logged as a failure and re-raised
    """
    caplog.set_level(logging.INFO)

    with in_phase(Phase.UPLOADING):
        with ProcessLogger("window", window=1):
            pass

    with pytest.raises(ValueError):
        with ProcessLogger("broken_window", window=2):
            raise ValueError("bad window")

    messages = [record.getMessage() for record in caplog.records]
    assert any("process_name=window" in line and "phase=uploading" in line for line in messages)
    assert any("process_name=broken_window" in line and "status=failed" in line for line in messages)
    assert all("phase=" not in line for line in messages if "broken_window" in line)


def test_validate_environment(monkeypatch: pytest.MonkeyPatch, caplog: pytest.LogCaptureFixture) -> None:
    """
    missing required variables raise, private values are masked in the logs
    """
    caplog.set_level(logging.INFO)
    monkeypatch.setenv("ZTAC_SECRET", "hunter2")
    monkeypatch.delenv("ZTAC_MISSING", raising=False)

    validate_environment(required_variables=["ZTAC_SECRET"], private_variables=["ZTAC_SECRET"])
    assert "hunter2" not in caplog.text
    assert "ZTAC_SECRET=**********" in caplog.text

    with pytest.raises(EnvironmentError):
        validate_environment(required_variables=["ZTAC_MISSING"])


def test_env_int(monkeypatch: pytest.MonkeyPatch) -> None:
    """
    integer settings fall back to their default when unset or blank
    """
    monkeypatch.delenv("ZTAC_BENCH_ITERS", raising=False)
    assert env_int("ZTAC_BENCH_ITERS", 5) == 5

    monkeypatch.setenv("ZTAC_BENCH_ITERS", "  ")
    assert env_int("ZTAC_BENCH_ITERS", 5) == 5

    monkeypatch.setenv("ZTAC_BENCH_ITERS", "12")
    assert env_int("ZTAC_BENCH_ITERS", 5) == 12

    monkeypatch.setenv("ZTAC_BENCH_ITERS", "twelve")
    with pytest.raises(ValueError):
        env_int("ZTAC_BENCH_ITERS", 5)
