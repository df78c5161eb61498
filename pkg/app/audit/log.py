"""
Append-only Audit Log
UTF-8 newline-delimited JSON, one AuditRecord per line. Every append checks day
ordering and the parameter chain before anything is written.
"""
import json
import logging
from pathlib import Path
from typing import Iterator, List, Optional

from pydantic import ValidationError

from app.audit.models import AuditRecord
from app.core.exceptions import AuditIntegrityError

logger = logging.getLogger(__name__)


class AuditLog:
    """
    In-memory view of one run's records, optionally mirrored to a file.

    With a path, each append writes its line immediately so a run that aborts
    keeps everything logged up to that point.
    """

    def __init__(self, path: Optional[Path] = None, truncate: bool = True):
        self.path = Path(path) if path is not None else None
        self.records: List[AuditRecord] = []
        if self.path is not None and truncate:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("", encoding="utf-8")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[AuditRecord]:
        return iter(self.records)

    @property
    def last(self) -> Optional[AuditRecord]:
        return self.records[-1] if self.records else None

    def check(self, record: AuditRecord) -> None:
        last = self.last
        if last is None:
            return
        if record.day <= last.day:
            raise AuditIntegrityError(
                f"day {record.day} does not follow day {last.day}"
            )
        if record.prior_params != last.decision.new_params:
            raise AuditIntegrityError(
                f"day {record.day}: prior_params {record.prior_params.as_tuple()} "
                f"!= new_params {last.decision.new_params.as_tuple()} of day {last.day}"
            )

    def append(self, record: AuditRecord) -> "AuditLog":
        self.check(record)
        self.records.append(record)
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(record.to_line() + "\n")
        return self

    def dumps(self) -> str:
        return "".join(record.to_line() + "\n" for record in self.records)

    def write(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())
        return path

    @classmethod
    def loads(cls, text: str) -> "AuditLog":
        log = cls()
        for number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = AuditRecord.model_validate_json(line)
            except ValidationError as e:
                raise AuditIntegrityError(f"line {number}{_day_hint(line)}: {e.error_count()} invalid field(s)") from e
            try:
                log.append(record)
            except AuditIntegrityError as e:
                raise AuditIntegrityError(f"line {number}: {e}") from e
        return log

    @classmethod
    def read(cls, path: Path) -> "AuditLog":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except UnicodeDecodeError as e:
            raise AuditIntegrityError(f"{path} is not UTF-8") from e
        log = cls.loads(text)
        logger.debug(f"[AuditLog] Read {len(log)} record(s) from {path}")
        return log


def _day_hint(line: str) -> str:
    try:
        day = json.loads(line).get("day")
    except (ValueError, AttributeError):
        return ""
    return f" (day {day})" if day is not None else ""
