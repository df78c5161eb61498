"""
Model Output Parser
Turns raw generate-endpoint text into a validated Diagnosis.
"""
import json
from typing import Any, Dict, Optional

from pydantic import ValidationError

from app.core.exceptions import SchemaViolationError
from app.diagnosis.models import Diagnosis


_decoder = json.JSONDecoder()


def _fenced_body(text: str) -> Optional[str]:
    """Body of the first markdown code block (```json ... ```), if any"""
    parts = text.split("```")
    if len(parts) < 3:
        return None
    body = parts[1]
    if body.lstrip().lower().startswith("json"):
        body = body.lstrip()[4:]
    return body


def _first_object(body: str) -> Optional[Dict[str, Any]]:
    start = body.find("{")
    while start != -1:
        try:
            obj, _ = _decoder.raw_decode(body, start)
        except json.JSONDecodeError:
            start = body.find("{", start + 1)
            continue
        if isinstance(obj, dict):
            return obj
        start = body.find("{", start + 1)
    return None


def extract_json_object(text: str) -> Dict[str, Any]:
    """
    First JSON object in the text. A fenced block is searched first; when it
    holds no object (a fenced note after the answer), the whole text is.
    Leading prose and trailing chatter are tolerated; a top-level array or
    scalar is not an object.

    Raises:
        SchemaViolationError: when no object can be decoded
    """
    if not isinstance(text, str):
        raise SchemaViolationError("response is not text", raw_text=str(text))

    fenced = _fenced_body(text)
    obj = _first_object(fenced) if fenced is not None else None
    if obj is None:
        obj = _first_object(text)
    if obj is None:
        raise SchemaViolationError("no JSON object found", raw_text=text)
    return obj


def parse_response(text: str, agent_id: Optional[int] = None) -> Diagnosis:
    """
    Validate the first JSON object in `text` against the Diagnosis schema.

    When `agent_id` is given, a missing agent_id is filled in and a different
    one is rejected (the model answered about somebody else).
    """
    data = extract_json_object(text)

    if agent_id is not None:
        claimed = data.setdefault("agent_id", agent_id)
        if claimed != agent_id:
            raise SchemaViolationError(
                f"agent_id {claimed!r} does not match requested agent {agent_id}",
                raw_text=text,
            )

    try:
        return Diagnosis.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'object'}: {err['msg']}"
            for err in e.errors()
        )
        raise SchemaViolationError(problems, raw_text=text) from e


def serialize_diagnosis(diagnosis: Diagnosis) -> str:
    """Inverse of parse_response for a valid Diagnosis"""
    return diagnosis.model_dump_json()
