import logging
import os
import time
import uuid
from types import TracebackType
from typing import Dict, Optional, Type, Union

import psutil

from ztac_py.runtime_utils.op_tally import Term, active_tally, current_phase

MdValues = Optional[Union[str, int, float, bool]]


class ProcessLogger:
    """
    Key=value log lines for one unit of simulator work: a start line, an
    optional metadata line, then a complete or failed line with the duration.

    Lines emitted inside a protocol phase carry phase=<name>. When an operation
    tally is recording, the completion line also carries ops_<term> counts of
    the primitive operations performed since log_start.

    Usable as a context manager; an exception leaving the block is logged as a
    failure and re-raised.
    """

    # keys owned by the logger, metadata can not overwrite them
    reserved_keys = frozenset(
        {
            "parent",
            "process_name",
            "process_id",
            "uuid",
            "phase",
            "status",
            "duration",
            "error_type",
            "rss_mb",
            "print_log",
        }
    )

    def __init__(self, process_name: str, **metadata: MdValues) -> None:
        logging.getLogger().setLevel("INFO")

        self.process_name = process_name
        self.run_id: Optional[uuid.UUID] = None
        self.status: Optional[str] = None
        self.duration: Optional[float] = None
        self.error_type: Optional[str] = None
        self.metadata: Dict[str, str] = {}

        self.start_time = 0.0
        self._tally_start: Dict[Term, int] = {}

        self.add_metadata(**metadata)

    def _fields(self) -> Dict[str, object]:
        fields: Dict[str, object] = {
            "parent": os.environ.get("SERVICE_NAME", "unknown"),
            "process_name": self.process_name,
        }
        if self.run_id is not None:
            fields["process_id"] = os.getpid()
            fields["uuid"] = self.run_id
        phase = current_phase()
        if phase is not None:
            fields["phase"] = phase.name.lower()
        fields["status"] = self.status
        if self.duration is not None:
            fields["duration"] = f"{self.duration:.2f}"
        if self.error_type is not None:
            fields["error_type"] = self.error_type
        fields["rss_mb"] = psutil.Process().memory_info().rss // (1000 * 1000)
        fields.update(self.metadata)
        return fields

    def _log_string(self) -> str:
        return ", ".join(f"{key}={value}" for key, value in self._fields().items())

    def _tally_delta(self) -> Dict[str, int]:
        tally = active_tally()
        if tally is None:
            return {}
        delta = {}
        for term, count in tally.totals().items():
            performed = count - self._tally_start.get(term, 0)
            if performed > 0:
                delta[f"ops_{term.value}"] = performed
        return delta

    def add_metadata(self, print_log: bool = True, **metadata: MdValues) -> None:
        """
        add metadata to the process logger. once started, a metadata line is
        logged unless print_log is False
        """
        for key, value in metadata.items():
            if key in ProcessLogger.reserved_keys:
                continue
            self.metadata[str(key)] = str(value)

        if self.status is not None and print_log:
            self.status = "add_metadata"
            logging.info(self._log_string())

    def log_start(self) -> None:
        """log the start of a process"""
        self.run_id = uuid.uuid4()
        self.status = "started"
        self.duration = None
        self.error_type = None

        tally = active_tally()
        self._tally_start = {} if tally is None else tally.totals()
        self.start_time = time.monotonic()

        logging.info(self._log_string())

    def log_complete(self) -> None:
        """log the completion of a process with duration and operation counts"""
        self.duration = time.monotonic() - self.start_time
        self.add_metadata(print_log=False, **self._tally_delta())
        self.status = "complete"

        logging.info(self._log_string())

    def log_failure(self, exception: BaseException) -> None:
        """log the failure of a process with the exception type"""
        self.duration = time.monotonic() - self.start_time
        self.status = "failed"
        self.error_type = type(exception).__name__

        logging.exception(self._log_string())

    def __enter__(self) -> "ProcessLogger":
        self.log_start()
        return self

    def __exit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc_value: Optional[BaseException],
        traceback: Optional[TracebackType],
    ) -> None:
        if exc_value is None:
            self.log_complete()
        else:
            self.log_failure(exc_value)
