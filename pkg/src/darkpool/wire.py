"""Signed JSON envelopes over newline-delimited streams.

Every message between a client and the relay is one JSON object per line:

    {"type": ..., "session_id"?: hex, "seq": n, "sender": hex identity key,
     "payload": {...}, "sig": hex}

The signature is Schnorr over the canonical JSON serialization (sorted
keys, no whitespace) of the envelope without its ``sig`` field. Binary
protocol payloads ride inside ``payload`` hex-encoded.
"""

from __future__ import annotations

import json

from .errors import BadSignature, DecodeError
from .group import GroupPoint, RandomSource, DEFAULT_RNG, Scalar, deserialize_point
from .sigma import Signature, sign, verify_sig

MSG_REGISTER = "REGISTER"
MSG_ORDER = "ORDER"
MSG_ORDER_ACK = "ORDER_ACK"
MSG_MATCH_TICKET = "MATCH_TICKET"
MSG_CONFIRM = "CONFIRM"
MSG_SESSION_START = "SESSION_START"
MSG_ROUND = "ROUND"
MSG_ABORT = "ABORT"
MSG_PUNISH_NOTICE = "PUNISH_NOTICE"
MSG_VERDICT = "VERDICT"
MSG_REVEAL = "REVEAL"
MSG_SETTLEMENT_INSTRUCTION = "SETTLEMENT_INSTRUCTION"
MSG_ERROR = "ERROR"

ALL_TYPES = {
    MSG_REGISTER, MSG_ORDER, MSG_ORDER_ACK, MSG_MATCH_TICKET, MSG_CONFIRM,
    MSG_SESSION_START, MSG_ROUND, MSG_ABORT, MSG_PUNISH_NOTICE, MSG_VERDICT,
    MSG_REVEAL, MSG_SETTLEMENT_INSTRUCTION, MSG_ERROR,
}

#: Streams carry payloads up to this size (shuffle proofs are large).
STREAM_LIMIT = 32 * 1024 * 1024


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def signing_bytes(envelope: dict) -> bytes:
    unsigned = {k: v for k, v in envelope.items() if k != "sig"}
    return canonical_json(unsigned)


def make_envelope(msg_type: str, payload: dict, sk: Scalar, sender: GroupPoint,
                  seq: int, session_id: str | None = None,
                  rng: RandomSource = DEFAULT_RNG) -> dict:
    if msg_type not in ALL_TYPES:
        raise ValueError(f"unknown message type {msg_type}")
    envelope = {
        "type": msg_type,
        "seq": seq,
        "sender": sender.data.hex(),
        "payload": payload,
    }
    if session_id is not None:
        envelope["session_id"] = session_id
    sig = sign(sk, signing_bytes(envelope), rng)
    envelope["sig"] = sig.serialize().hex()
    return envelope


def sender_key(envelope: dict) -> GroupPoint:
    try:
        return deserialize_point(bytes.fromhex(envelope["sender"]))
    except (KeyError, ValueError, TypeError, DecodeError):
        raise BadSignature("envelope sender key is unreadable")


def check_envelope(envelope: dict, expected_sender: GroupPoint | None = None) -> GroupPoint:
    """Verify shape and signature; returns the sender's identity key."""
    if not isinstance(envelope, dict) or envelope.get("type") not in ALL_TYPES:
        raise DecodeError("not a protocol envelope")
    if not isinstance(envelope.get("payload"), dict):
        raise DecodeError("envelope payload must be an object")
    if not isinstance(envelope.get("seq"), int):
        raise DecodeError("envelope seq must be an integer")
    pk = sender_key(envelope)
    if expected_sender is not None and pk != expected_sender:
        raise BadSignature("envelope sender differs from the expected party")
    try:
        sig = Signature.deserialize(bytes.fromhex(envelope["sig"]))
    except (KeyError, ValueError, TypeError, DecodeError):
        raise BadSignature("envelope signature is unreadable")
    if not verify_sig(pk, signing_bytes(envelope), sig):
        raise BadSignature("envelope signature does not verify")
    return pk


def encode_line(envelope: dict) -> bytes:
    return canonical_json(envelope) + b"\n"


def decode_line(line: bytes) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DecodeError(f"bad envelope line: {exc}")
    if not isinstance(obj, dict):
        raise DecodeError("envelope line is not an object")
    return obj


def hex_payload(data: bytes) -> dict:
    return {"data": data.hex()}


def payload_bytes(envelope: dict) -> bytes:
    try:
        return bytes.fromhex(envelope["payload"]["data"])
    except (KeyError, ValueError, TypeError):
        raise DecodeError("envelope carries no binary payload")
