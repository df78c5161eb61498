# Audit layer: append-only decision log and replay verification
from app.audit.log import AuditLog
from app.audit.models import AuditRecord, config_digest
from app.audit.replay import Mismatch, ReplayVerdict, replay_verify

__all__ = [
    "AuditLog",
    "AuditRecord",
    "Mismatch",
    "ReplayVerdict",
    "config_digest",
    "replay_verify",
]
