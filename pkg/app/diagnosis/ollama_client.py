"""
Ollama Client
Blocking client for an Ollama-compatible /api/generate endpoint.
"""
import logging
import threading
import time
from typing import List, Optional, Protocol

import httpx
import numpy as np

from app.core.exceptions import BackendUnavailableError
from app.diagnosis.models import BackendConfig

logger = logging.getLogger(__name__)


class TextGenerator(Protocol):
    """Anything that turns a prompt into raw model text"""

    def generate(self, prompt: str) -> str:
        ...


class OllamaClient:
    """
    Sends one prompt per call with stream disabled and returns the "response"
    field verbatim. Transport errors and non-2xx replies are retried
    `max_retries` times before BackendUnavailableError.
    """

    def __init__(self, config: BackendConfig, transport: Optional[httpx.BaseTransport] = None):
        self.config = config
        self.client = httpx.Client(
            timeout=config.timeout_ms / 1000.0,
            transport=transport,
            headers={"Content-Type": "application/json", "User-Agent": "care-policy-sim/1.0"},
        )
        self.call_count = 0
        self.latencies_ms: List[float] = []
        self._lock = threading.Lock()

    def is_configured(self) -> bool:
        return bool(self.config.endpoint_url and self.config.model_name)

    def build_payload(self, prompt: str) -> dict:
        return {
            "model": self.config.model_name,
            "prompt": prompt,
            "stream": False,
            "format": "json",
            "options": {"temperature": self.config.temperature},
        }

    def generate(self, prompt: str) -> str:
        payload = self.build_payload(prompt)
        attempts = self.config.max_retries + 1
        last_error: Optional[Exception] = None

        for attempt in range(1, attempts + 1):
            started = time.perf_counter()
            try:
                response = self.client.post(self.config.endpoint_url, json=payload)
                response.raise_for_status()
                data = response.json()
            except httpx.TimeoutException as e:
                last_error = e
                logger.warning(f"[OllamaClient] Timeout (attempt {attempt}/{attempts})")
                continue
            except httpx.HTTPStatusError as e:
                last_error = e
                logger.warning(
                    f"[OllamaClient] HTTP {e.response.status_code} (attempt {attempt}/{attempts})"
                )
                continue
            except (httpx.HTTPError, ValueError) as e:
                last_error = e
                logger.warning(f"[OllamaClient] Request failed (attempt {attempt}/{attempts}): {e}")
                continue

            elapsed_ms = (time.perf_counter() - started) * 1000.0
            with self._lock:
                self.call_count += 1
                self.latencies_ms.append(elapsed_ms)
            logger.debug(f"[OllamaClient] {self.config.model_name} answered in {elapsed_ms:.0f} ms")

            text = data.get("response", "") if isinstance(data, dict) else ""
            return text if isinstance(text, str) else str(text)

        raise BackendUnavailableError(
            f"{self.config.endpoint_url} unreachable after {attempts} attempt(s): {last_error}"
        )

    def median_latency_ms(self) -> Optional[float]:
        with self._lock:
            if not self.latencies_ms:
                return None
            return float(np.median(self.latencies_ms))

    def log_latency_summary(self) -> None:
        median = self.median_latency_ms()
        if median is not None:
            logger.info(
                f"[OllamaClient] {self.call_count} call(s), median latency {median:.0f} ms"
            )

    def close(self) -> None:
        self.client.close()

    def __enter__(self) -> "OllamaClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
