#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Input Validation Utilities for CLI flags and config values
"""

import re
from typing import List, Optional
from urllib.parse import urlparse

from app.core.exceptions import InvalidConfigurationError


def parse_seed_list(text: str) -> List[int]:
    """
    Parse "300,400,500" (spaces allowed) into a list of ints.

    Args:
        text: comma separated seeds

    Returns:
        seeds in the given order, duplicates removed
    """
    if text is None or not str(text).strip():
        raise InvalidConfigurationError("seed list must not be empty")

    seeds: List[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if not re.fullmatch(r"-?\d+", part):
            raise InvalidConfigurationError(f"invalid seed: {part!r}")
        seed = int(part)
        if seed < 0:
            raise InvalidConfigurationError(f"seeds must be non-negative: {seed}")
        if seed not in seeds:
            seeds.append(seed)

    if not seeds:
        raise InvalidConfigurationError("seed list must not be empty")
    return seeds


def validate_endpoint_url(url: Optional[str]) -> str:
    """
    Check an LLM endpoint URL (http/https with a host; ports and paths allowed).

    Returns:
        the URL with surrounding whitespace removed
    """
    if not url or not url.strip():
        raise InvalidConfigurationError("endpoint URL is required for the LLM backend")

    url = url.strip()
    parsed = urlparse(url)
    if parsed.scheme not in ("http", "https") or not parsed.hostname:
        raise InvalidConfigurationError(f"endpoint URL must be http(s)://host[:port]/path, got {url!r}")
    return url


def require_unit_interval(name: str, value: float, open_interval: bool = False) -> float:
    """
    Validate that value lies in [0, 1] (or (0, 1) when open_interval).
    """
    if open_interval:
        if not 0.0 < value < 1.0:
            raise InvalidConfigurationError(f"{name} must be in (0, 1), got {value}")
    elif not 0.0 <= value <= 1.0:
        raise InvalidConfigurationError(f"{name} must be in [0, 1], got {value}")
    return value
