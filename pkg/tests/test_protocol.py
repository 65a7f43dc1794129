import json
import random
import string

import pytest

from conftest import REPO_ROOT
from scenehub.protocol import (
    MESSAGE_TYPES,
    DecodeError,
    EncodeError,
    Envelope,
    decode,
    encode,
    new_msg_id,
    validate,
)

GOLDEN_DIR = REPO_ROOT / "protocol" / "golden"

MSG_ID = "5f0c2a1e-9d34-4b6a-8c21-7e55a10f3b9d"


def heartbeat(**overrides):
    fields = dict(
        msg_id=MSG_ID,
        ts=12.0,
        src="rav-1",
        dst="hub",
        type="heartbeat",
        body={
            "battery_pct": 87.5,
            "position": {"lat_deg": 52.4205, "lon_deg": -7.7093, "alt_m": 10.0},
            "status": "enroute",
        },
    )
    fields.update(overrides)
    return Envelope(**fields)


class TestGoldenFiles:
    @pytest.mark.parametrize("name", sorted(p.name for p in GOLDEN_DIR.glob("*.golden.json")))
    def test_round_trips_byte_identical(self, name):
        raw = (GOLDEN_DIR / name).read_bytes()
        assert encode(decode(raw)) == raw

    def test_heartbeat_fields_as_authored(self):
        env = decode((GOLDEN_DIR / "heartbeat.golden.json").read_bytes())
        assert env.body["battery_pct"] == 87.5
        assert env.src == "rav-1" and env.type == "heartbeat"
        assert env.body["status"] == "enroute"

    def test_goldens_are_canonical_json(self):
        for path in GOLDEN_DIR.glob("*.golden.json"):
            raw = path.read_bytes()
            doc = json.loads(raw)
            recanon = json.dumps(
                doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False
            ).encode("utf-8")
            assert recanon == raw, path.name


class TestEncode:
    def test_canonical_bytes_fixed(self):
        expected = (
            b'{"body":{"battery_pct":87.5,"position":{"alt_m":10.0,"lat_deg":52.4205,'
            b'"lon_deg":-7.7093},"status":"enroute"},"dst":"hub",'
            b'"msg_id":"5f0c2a1e-9d34-4b6a-8c21-7e55a10f3b9d","src":"rav-1","ts":12.0,'
            b'"type":"heartbeat","version":1}'
        )
        assert encode(heartbeat()) == expected

    def test_key_order_never_matters(self):
        a = heartbeat(body={"status": "idle", "battery_pct": 50.0,
                            "position": {"lon_deg": 0.0, "lat_deg": 0.0, "alt_m": 0.0}})
        b = heartbeat(body={"battery_pct": 50.0,
                            "position": {"alt_m": 0.0, "lat_deg": 0.0, "lon_deg": 0.0},
                            "status": "idle"})
        assert encode(a) == encode(b)

    def test_unknown_type_is_encode_error(self):
        with pytest.raises(EncodeError, match="type"):
            encode(heartbeat(type="telemetry"))

    def test_invalid_body_is_encode_error(self):
        with pytest.raises(EncodeError):
            encode(heartbeat(body={"battery_pct": 150.0}))


class TestDecode:
    def test_missing_field_named(self):
        doc = json.loads(encode(heartbeat()))
        del doc["msg_id"]
        with pytest.raises(DecodeError, match="msg_id"):
            decode(json.dumps(doc).encode())

    def test_malformed_json_reports_offset(self):
        with pytest.raises(DecodeError) as err:
            decode(b'{"version": 1, "msg_id": ')
        assert err.value.offset is not None

    def test_wrong_version_rejected(self):
        doc = json.loads(encode(heartbeat()))
        doc["version"] = 2
        with pytest.raises(DecodeError, match="version"):
            decode(json.dumps(doc).encode())

    def test_unknown_envelope_field_rejected(self):
        doc = json.loads(encode(heartbeat()))
        doc["signature"] = "abc"
        with pytest.raises(DecodeError, match="signature"):
            decode(json.dumps(doc).encode())

    def test_unknown_body_fields_preserved(self):
        doc = json.loads(encode(heartbeat()))
        doc["body"]["x"] = 1
        env = decode(json.dumps(doc).encode())
        assert env.body["x"] == 1
        assert json.loads(encode(env))["body"]["x"] == 1

    def test_non_object_rejected(self):
        with pytest.raises(DecodeError):
            decode(b"[1, 2, 3]")

    def test_non_finite_numbers_rejected_on_the_wire(self):
        doc = json.loads(encode(heartbeat()))
        for literal in ("NaN", "Infinity", "-Infinity"):
            text = json.dumps(doc).replace("12.0", literal)
            with pytest.raises(DecodeError, match="non-finite"):
                decode(text.encode())

    def test_nan_field_value_is_a_violation(self):
        violations = validate(heartbeat(ts=float("nan")))
        assert any("ts" in v for v in violations)

    def test_huge_integers_survive(self):
        env = heartbeat(body={"battery_pct": 1.0,
                              "position": {"lat_deg": 0.0, "lon_deg": 0.0, "alt_m": 0.0},
                              "status": "idle", "counter": 10**40})
        assert decode(encode(env)) == env


class TestValidate:
    def test_valid_register_is_ok(self):
        env = Envelope(
            msg_id=MSG_ID, ts=0.0, src="rav-1", dst="hub", type="register",
            body={"agent_id": "rav-1", "radio_range_m": 100.0},
        )
        assert validate(env) == []

    def test_battery_range_violation(self):
        violations = validate(heartbeat(body={
            "battery_pct": 150.0,
            "position": {"lat_deg": 0.0, "lon_deg": 0.0, "alt_m": 0.0},
            "status": "idle",
        }))
        assert len(violations) == 1
        assert "battery_pct" in violations[0]

    def test_all_violations_reported_in_field_order(self):
        violations = validate(heartbeat(body={
            "battery_pct": 150.0,
            "position": {"lat_deg": 0.0, "lon_deg": 0.0, "alt_m": 0.0},
            "status": "hovering",
        }))
        assert len(violations) == 2
        assert "battery_pct" in violations[0]
        assert "status" in violations[1]

    def test_src_equals_dst_rejected(self):
        assert any("dst" in v for v in validate(heartbeat(src="hub", dst="hub")))

    def test_broadcast_dst_allowed_broadcast_src_rejected(self):
        ok = heartbeat(dst="broadcast")
        assert validate(ok) == []
        assert any("src" in v for v in validate(heartbeat(src="broadcast", dst="hub")))

    def test_bad_msg_id_rejected(self):
        assert any("msg_id" in v for v in validate(heartbeat(msg_id="not-an-id")))


def random_envelope(rng: random.Random) -> Envelope:
    def rand_value(depth=0):
        kind = rng.randrange(7 if depth < 2 else 5)
        if kind == 0:
            return rng.randint(-10**6, 10**6)
        if kind == 1:
            return rng.uniform(-1e6, 1e6)
        if kind == 2:
            return "".join(rng.choices(string.ascii_letters + "   _-", k=rng.randrange(12)))
        if kind == 3:
            return rng.random() < 0.5
        if kind == 4:
            return None
        if kind == 5:
            return [rand_value(depth + 1) for _ in range(rng.randrange(4))]
        return {f"k{i}": rand_value(depth + 1) for i in range(rng.randrange(4))}

    # command bodies only need a name; everything else rides as extra fields
    body = {"name": "op-" + str(rng.randrange(100))}
    for i in range(rng.randrange(6)):
        body[f"extra_{i}"] = rand_value()
    return Envelope(
        msg_id=new_msg_id(rng),
        ts=rng.uniform(0, 1e6),
        src=f"rav-{rng.randrange(10)}",
        dst=rng.choice(["hub", "broadcast", "console"]),
        type="command",
        body=body,
    )


class TestProperties:
    def test_structural_round_trip_10k(self):
        rng = random.Random(424242)
        for i in range(10_000):
            env = random_envelope(rng)
            assert decode(encode(env)) == env, f"case {i}"

    def test_canonical_uniqueness(self):
        rng = random.Random(7)
        for _ in range(500):
            env = random_envelope(rng)
            first = encode(env)
            assert encode(decode(first)) == first

    def test_fuzz_decode_never_raises_other_errors(self):
        rng = random.Random(99)
        seed_docs = [encode(heartbeat())]
        for i in range(20_000):
            if rng.random() < 0.5:
                data = bytes(rng.randrange(256) for _ in range(rng.randrange(40)))
            else:
                data = bytearray(rng.choice(seed_docs))
                for _ in range(rng.randrange(6)):
                    data[rng.randrange(len(data))] = rng.randrange(256)
                data = bytes(data)
            try:
                decode(data)
            except DecodeError:
                pass

    def test_all_types_validate_with_minimal_bodies(self):
        bodies = {
            "register": {"agent_id": "rav-1"},
            "heartbeat": {"battery_pct": 10.0,
                          "position": {"lat_deg": 0.0, "lon_deg": 0.0, "alt_m": 0.0},
                          "status": "idle"},
            "command": {"name": "survey"},
            "route_assignment": {"mission_id": "m-1",
                                 "waypoints": [{"lat_deg": 0.0, "lon_deg": 0.0, "alt_m": 1.0,
                                                "grid_index": [0, 0]}]},
            "sensor_reading": {"kind": "radiation_dose", "value": 0.5,
                               "position": {"lat_deg": 0.0, "lon_deg": 0.0, "alt_m": 0.0},
                               "seq": 1},
            "image_meta": {"capture_id": "c1",
                           "position": {"lat_deg": 0.0, "lon_deg": 0.0, "alt_m": 0.0},
                           "footprint_half_width_m": 15.0},
            "detection": {"capture_id": "c1", "bbox": [0.0, 0.0, 10.0, 10.0],
                          "label": "barrel", "confidence": 0.9,
                          "geo_position": {"east_m": 0.0, "north_m": 0.0, "up_m": 0.0}},
            "status": {"status": "failed"},
            "evidence": {"variable": "handheld_rad_positive", "value": True},
            "error": {"message": "boom"},
        }
        assert sorted(bodies) == sorted(MESSAGE_TYPES)
        rng = random.Random(0)
        for type_, body in bodies.items():
            env = Envelope(
                msg_id=new_msg_id(rng), ts=1.0, src="rav-1",
                dst="hub" if type_ != "route_assignment" else "rav-2",
                type=type_, body=body,
            )
            src = "hub" if type_ == "route_assignment" else env.src
            env = Envelope(env.msg_id, env.ts, src, env.dst, env.type, env.body)
            assert validate(env) == [], type_
            assert decode(encode(env)) == env
