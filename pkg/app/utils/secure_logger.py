#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Secure Logging Utilities - masks credentials that can leak through LLM endpoint URLs
"""

import logging
import re
from typing import Any, Optional


class SecureFormatter(logging.Formatter):
    """
    Formatter that hides credentials in log lines.

    Endpoints are often reverse proxies in front of Ollama, so URLs can carry
    userinfo or key query parameters.
    """

    SENSITIVE_PATTERNS = [
        (r'(https?://)[^/\s:@]+:[^/\s@]+@', r'\1***:***@'),
        (r'(api_key|apikey|token|key)=([^&\s"\']+)', r'\1=***'),
        (r'Bearer\s+([A-Za-z0-9\-._~+/]+=*)', 'Bearer ***'),
        (r'password["\']?\s*[:=]\s*["\']?([^"\'\s,}]+)', 'password=***'),
    ]

    DEFAULT_FORMAT = '[%(asctime)s] %(levelname)s in %(module)s: %(message)s'

    def format(self, record: logging.LogRecord) -> str:
        return mask_secrets(super().format(record))


def mask_secrets(text: str) -> str:
    for pattern, replacement in SecureFormatter.SENSITIVE_PATTERNS:
        text = re.sub(pattern, replacement, text, flags=re.IGNORECASE)
    return text


def configure_logging(level: str = "INFO", fmt: Optional[str] = None) -> logging.Logger:
    """
    Install one SecureFormatter stream handler on the `app` logger.

    Safe to call more than once; the level is updated and no duplicate
    handler is added.
    """
    root = logging.getLogger("app")
    root.setLevel(level.upper())

    for handler in root.handlers:
        if isinstance(handler.formatter, SecureFormatter):
            handler.setLevel(level.upper())
            return root

    handler = logging.StreamHandler()
    handler.setLevel(level.upper())
    handler.setFormatter(SecureFormatter(fmt or SecureFormatter.DEFAULT_FORMAT))
    root.addHandler(handler)
    return root


def sanitize_log_data(data: Any) -> Any:
    """
    Mask secret-looking keys and URL credentials before a structure is logged
    (used for backend configs).
    """
    if isinstance(data, dict):
        sanitized = {}
        for key, value in data.items():
            if str(key).lower() in ('password', 'token', 'secret', 'api_key', 'credentials'):
                sanitized[key] = '***'
            else:
                sanitized[key] = sanitize_log_data(value)
        return sanitized

    if isinstance(data, (list, tuple)):
        return [sanitize_log_data(item) for item in data]

    if isinstance(data, str):
        return mask_secrets(data)

    return data
