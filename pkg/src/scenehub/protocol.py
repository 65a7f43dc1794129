"""JSON message envelope shared by every subsystem interaction.

The envelope schema is strict (unknown envelope fields are rejected), the
type-specific body is open: unknown body fields are preserved on decode and
re-emitted on encode, so independent components can extend messages without
breaking each other.

Encoding is canonical: UTF-8, object keys sorted by code point, no
insignificant whitespace, numbers in shortest round-trip decimal form. Two
structurally equal messages always encode to identical bytes, which is what
makes the golden-file tests under ``protocol/golden/`` byte-exact.
"""

from __future__ import annotations

import json
import math
import re
import uuid
from dataclasses import dataclass, field
from random import Random
from typing import Any

PROTOCOL_VERSION = 1

MESSAGE_TYPES = (
    "register",
    "heartbeat",
    "command",
    "route_assignment",
    "sensor_reading",
    "image_meta",
    "detection",
    "status",
    "evidence",
    "error",
)

AGENT_STATUSES = ("idle", "enroute", "sensing", "returning", "failed")

SENSOR_KINDS = ("radiation_dose",)

IMAGE_FRAME_PX = 1024

_ENVELOPE_FIELDS = ("version", "msg_id", "ts", "src", "dst", "type", "body")

_MSG_ID_RE = re.compile(r"^[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}$")


class ProtocolError(ValueError):
    pass


class DecodeError(ProtocolError):
    """Malformed or non-conforming bytes; ``offset`` is the byte position when known."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class EncodeError(ProtocolError):
    """Message violates its schema; ``violations`` lists every problem found."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class Envelope:
    msg_id: str
    ts: float
    src: str
    dst: str
    type: str
    body: dict[str, Any] = field(default_factory=dict)
    version: int = PROTOCOL_VERSION


def new_msg_id(rng: Random) -> str:
    """Fresh 128-bit message id in canonical hex-with-dashes form."""
    return str(uuid.UUID(int=rng.getrandbits(128), version=4))


def canonical_json_bytes(obj: Any) -> bytes:
    """Canonical JSON: sorted keys, no whitespace, shortest number form, UTF-8."""
    try:
        return json.dumps(
            obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
        ).encode("utf-8")
    except (TypeError, ValueError) as exc:
        raise EncodeError([f"body is not canonical-JSON serializable: {exc}"]) from exc


def encode(msg: Envelope) -> bytes:
    """Canonical bytes for ``msg``; raises :class:`EncodeError` if it fails validation."""
    violations = validate(msg)
    if violations:
        raise EncodeError(violations)
    return canonical_json_bytes(
        {
            "version": msg.version,
            "msg_id": msg.msg_id,
            "ts": msg.ts,
            "src": msg.src,
            "dst": msg.dst,
            "type": msg.type,
            "body": msg.body,
        }
    )


def decode(data: bytes | str) -> Envelope:
    """Parse envelope bytes.

    Raises :class:`DecodeError` (never anything else) on malformed JSON, a
    non-object document, missing or mistyped envelope fields, unknown envelope
    fields, or an unsupported version. Body contents are not schema-checked
    here; use :func:`validate` for that.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(f"invalid UTF-8: {exc}", offset=exc.start) from exc
    else:
        text = data
    try:
        doc = json.loads(text, parse_constant=_reject_non_finite)
    except json.JSONDecodeError as exc:
        raise DecodeError(f"malformed JSON at byte {exc.pos}: {exc.msg}", offset=exc.pos) from exc
    except RecursionError as exc:
        raise DecodeError("JSON nesting too deep") from exc
    except ValueError as exc:
        raise DecodeError(str(exc)) from exc

    if not isinstance(doc, dict):
        raise DecodeError("top-level JSON value must be an object")
    unknown = sorted(set(doc) - set(_ENVELOPE_FIELDS))
    if unknown:
        raise DecodeError(f"unknown envelope fields {unknown}")
    for name in _ENVELOPE_FIELDS:
        if name not in doc:
            raise DecodeError(f"missing required field {name}")

    if not _is_number(doc["version"]):
        raise DecodeError("field version must be a number")
    if doc["version"] != PROTOCOL_VERSION:
        raise DecodeError(f"unsupported protocol version {doc['version']!r} (supported: 1)")
    for name in ("msg_id", "src", "dst", "type"):
        if not isinstance(doc[name], str):
            raise DecodeError(f"field {name} must be a string")
    if not _is_number(doc["ts"]):
        raise DecodeError("field ts must be a number")
    if not isinstance(doc["body"], dict):
        raise DecodeError("field body must be an object")

    return Envelope(
        msg_id=doc["msg_id"],
        ts=doc["ts"],
        src=doc["src"],
        dst=doc["dst"],
        type=doc["type"],
        body=doc["body"],
        version=doc["version"],
    )


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _reject_non_finite(token: str) -> float:
    # canonical JSON has no NaN/Infinity; refuse rather than smuggle them in
    raise ValueError(f"non-finite number {token!r} is not allowed on the wire")


def _is_number(v: Any) -> bool:
    if isinstance(v, bool):
        return False
    if isinstance(v, int):
        return True
    return isinstance(v, float) and math.isfinite(v)


def _check_geo(body: dict, key: str, out: list[str], required: bool = True) -> None:
    pos = body.get(key)
    if pos is None:
        if required:
            out.append(f"{key}: missing")
        return
    if not isinstance(pos, dict):
        out.append(f"{key}: must be an object with lat_deg/lon_deg/alt_m")
        return
    lat, lon, alt = pos.get("lat_deg"), pos.get("lon_deg"), pos.get("alt_m")
    if not _is_number(lat) or not -90.0 <= lat <= 90.0:
        out.append(f"{key}.lat_deg: must be a number in [-90, 90]")
    if not _is_number(lon) or not -180.0 <= lon <= 180.0:
        out.append(f"{key}.lon_deg: must be a number in [-180, 180]")
    if alt is not None and not _is_number(alt):
        out.append(f"{key}.alt_m: must be a number")


def _check_str(body: dict, key: str, out: list[str], required: bool = True) -> None:
    v = body.get(key)
    if v is None:
        if required:
            out.append(f"{key}: missing")
    elif not isinstance(v, str) or not v:
        out.append(f"{key}: must be a non-empty string")


def _check_num(
    body: dict, key: str, out: list[str],
    lo: float | None = None, hi: float | None = None, required: bool = True,
) -> None:
    v = body.get(key)
    if v is None:
        if required:
            out.append(f"{key}: missing")
        return
    if not _is_number(v):
        out.append(f"{key}: must be a number")
        return
    if lo is not None and v < lo:
        out.append(f"{key}: {v} below {lo}")
    if hi is not None and v > hi:
        out.append(f"{key}: {v} above {hi}")


def _validate_register(body: dict) -> list[str]:
    out: list[str] = []
    _check_str(body, "agent_id", out)
    _check_num(body, "radio_range_m", out, lo=0.0, required=False)
    return out


def _validate_heartbeat(body: dict) -> list[str]:
    out: list[str] = []
    _check_num(body, "battery_pct", out, lo=0.0, hi=100.0)
    _check_geo(body, "position", out)
    status = body.get("status")
    if status not in AGENT_STATUSES:
        out.append(f"status: {status!r} not one of {list(AGENT_STATUSES)}")
    return out


def _validate_command(body: dict) -> list[str]:
    out: list[str] = []
    _check_str(body, "name", out)
    return out


def _validate_route_assignment(body: dict) -> list[str]:
    out: list[str] = []
    _check_str(body, "mission_id", out)
    waypoints = body.get("waypoints")
    aborted = body.get("aborted", False)
    if not isinstance(waypoints, list):
        out.append("waypoints: missing or not a list")
    elif not waypoints and not aborted:
        out.append("waypoints: must be non-empty unless the mission is aborted")
    else:
        for i, wp in enumerate(waypoints):
            sub: list[str] = []
            if not isinstance(wp, dict):
                out.append(f"waypoints[{i}]: must be an object")
                continue
            _check_geo({"p": wp}, "p", sub)
            gi = wp.get("grid_index")
            if not (isinstance(gi, list) and len(gi) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in gi)):
                sub.append("grid_index: must be a [row, col] integer pair")
            out.extend(f"waypoints[{i}].{v.removeprefix('p.')}" for v in sub)
    return out


def _validate_sensor_reading(body: dict) -> list[str]:
    out: list[str] = []
    kind = body.get("kind")
    if kind not in SENSOR_KINDS:
        out.append(f"kind: {kind!r} not one of {list(SENSOR_KINDS)}")
    _check_num(body, "value", out, lo=0.0)
    _check_geo(body, "position", out)
    seq = body.get("seq")
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 0:
        out.append("seq: must be a non-negative integer")
    return out


def _validate_image_meta(body: dict) -> list[str]:
    out: list[str] = []
    _check_str(body, "capture_id", out)
    _check_geo(body, "position", out)
    _check_num(body, "footprint_half_width_m", out, lo=0.0)
    _check_num(body, "detection_count", out, lo=0, required=False)
    return out


def _validate_detection(body: dict) -> list[str]:
    out: list[str] = []
    _check_str(body, "capture_id", out)
    bbox = body.get("bbox")
    if not (isinstance(bbox, list) and len(bbox) == 4 and all(_is_number(v) for v in bbox)):
        out.append("bbox: must be [x_min, y_min, x_max, y_max]")
    else:
        x_min, y_min, x_max, y_max = bbox
        if not all(0 <= v <= IMAGE_FRAME_PX for v in bbox):
            out.append(f"bbox: coordinates must lie in [0, {IMAGE_FRAME_PX}]")
        if not (x_min < x_max and y_min < y_max):
            out.append("bbox: must satisfy x_min < x_max and y_min < y_max")
    _check_str(body, "label", out)
    conf = body.get("confidence")
    if not _is_number(conf) or not 0.0 < conf <= 1.0:
        out.append("confidence: must be a number in (0, 1]")
    geo = body.get("geo_position")
    if not isinstance(geo, dict) or not all(_is_number(geo.get(k)) for k in ("east_m", "north_m")):
        out.append("geo_position: must be an object with east_m/north_m (meters)")
    return out


def _validate_status(body: dict) -> list[str]:
    out: list[str] = []
    status = body.get("status")
    if status not in AGENT_STATUSES:
        out.append(f"status: {status!r} not one of {list(AGENT_STATUSES)}")
    _check_num(body, "battery_pct", out, lo=0.0, hi=100.0, required=False)
    return out


def _validate_evidence(body: dict) -> list[str]:
    out: list[str] = []
    _check_str(body, "variable", out)
    if not isinstance(body.get("value"), bool):
        out.append("value: must be a boolean")
    _check_str(body, "region", out, required=False)
    return out


def _validate_error(body: dict) -> list[str]:
    out: list[str] = []
    _check_str(body, "message", out)
    return out


_BODY_VALIDATORS = {
    "register": _validate_register,
    "heartbeat": _validate_heartbeat,
    "command": _validate_command,
    "route_assignment": _validate_route_assignment,
    "sensor_reading": _validate_sensor_reading,
    "image_meta": _validate_image_meta,
    "detection": _validate_detection,
    "status": _validate_status,
    "evidence": _validate_evidence,
    "error": _validate_error,
}


def validate(msg: Envelope) -> list[str]:
    """All schema violations for ``msg`` (empty list means valid).

    Every violation is reported, not just the first, in envelope field order
    followed by body field order.
    """
    out: list[str] = []
    if msg.version != PROTOCOL_VERSION:
        out.append(f"version: {msg.version!r} unsupported (expected {PROTOCOL_VERSION})")
    if not isinstance(msg.msg_id, str) or not _MSG_ID_RE.match(msg.msg_id):
        out.append(f"msg_id: {msg.msg_id!r} is not canonical hex-with-dashes")
    if not _is_number(msg.ts) or msg.ts < 0:
        out.append(f"ts: {msg.ts!r} must be a non-negative number of sim-seconds")
    if not isinstance(msg.src, str) or not msg.src:
        out.append("src: must be a non-empty endpoint id")
    elif msg.src == "broadcast":
        out.append("src: 'broadcast' is not a valid sender")
    if not isinstance(msg.dst, str) or not msg.dst:
        out.append("dst: must be a non-empty endpoint id or 'broadcast'")
    elif msg.src == msg.dst:
        out.append(f"dst: must differ from src ({msg.src!r})")
    if msg.type not in MESSAGE_TYPES:
        out.append(f"type: {msg.type!r} not one of {list(MESSAGE_TYPES)}")
    if not isinstance(msg.body, dict):
        out.append("body: must be an object")
        return out
    validator = _BODY_VALIDATORS.get(msg.type)
    if validator is not None:
        out.extend(f"body.{v}" for v in validator(msg.body))
    return out
