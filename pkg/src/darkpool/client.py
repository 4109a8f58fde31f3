"""Trader-side daemon and CLI.

The daemon owns the identity key, the order sizes (which never touch the
wire before a reveal), and the live comparison sessions. It keeps one
persistent connection to the relay and serves a loopback HTTP+JSON API
consumed by both the CLI and the browser panel; inbound relay traffic and
local API calls are handled on one event loop, so state never races.
"""

from __future__ import annotations

import argparse
import asyncio
import base64
import hashlib
import json
import logging
import os
import secrets
import time
import urllib.error
import urllib.request
import uuid
from decimal import Decimal

from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from . import compare, wire
from .compare import CompareConfig, CompareSession, STEP_LABELS, start_session
from .errors import (
    BadProof,
    BadSignature,
    DarkpoolError,
    DecisionExpired,
    DecodeError,
    NotRegistered,
    ProtocolOrderViolation,
    ReferenceUnavailable,
    SessionExpired,
    SizeOutOfRange,
    UnknownSession,
)
from .group import GENERATOR, DEFAULT_RNG, RandomSource, Scalar, deserialize_scalar, \
    serialize_scalar
from .relay import PriceFeed, _as_price
from .errors import StalePrice

log = logging.getLogger("darkpool.client")

DEFAULT_HTTP_PORT = 7800


# --- identity keyfile ---------------------------------------------------------

def _derive_key(passphrase: str, salt: bytes) -> bytes:
    return hashlib.scrypt(passphrase.encode(), salt=salt, n=2**14, r=8, p=1,
                          dklen=32)


def load_or_create_identity(path: str, passphrase: str,
                            rng: RandomSource = DEFAULT_RNG) -> Scalar:
    """Passphrase-encrypted identity key, created on first run."""
    if os.path.exists(path):
        with open(path) as fh:
            blob = json.load(fh)
        salt = base64.b64decode(blob["salt"])
        nonce = base64.b64decode(blob["nonce"])
        ct = base64.b64decode(blob["ciphertext"])
        key = _derive_key(passphrase, salt)
        sk_bytes = AESGCM(key).decrypt(nonce, ct, b"darkpool-identity")
        return deserialize_scalar(sk_bytes)

    sk = rng.scalar_nonzero()
    salt, nonce = secrets.token_bytes(16), secrets.token_bytes(12)
    key = _derive_key(passphrase, salt)
    ct = AESGCM(key).encrypt(nonce, serialize_scalar(sk), b"darkpool-identity")
    blob = {
        "salt": base64.b64encode(salt).decode(),
        "nonce": base64.b64encode(nonce).decode(),
        "ciphertext": base64.b64encode(ct).decode(),
    }
    with open(path, "w") as fh:
        json.dump(blob, fh)
    os.chmod(path, 0o600)
    return sk


# --- configuration -------------------------------------------------------------

class ClientConfig:
    def __init__(self, relay_host: str = "127.0.0.1", relay_port: int = 7700,
                 keyfile: str = "darkpool-client.key", passphrase: str = "",
                 price_source: str | None = None,
                 price_tolerance: float = 0.02,
                 auto_confirm: bool = False, auto_resubmit: bool = True,
                 http_host: str = "127.0.0.1", http_port: int = DEFAULT_HTTP_PORT,
                 display_name: str = "", session_timeout: float = 60.0):
        if not 0 < price_tolerance < 0.5:
            raise ValueError("price tolerance must be in (0, 0.5)")
        self.relay_host = relay_host
        self.relay_port = relay_port
        self.keyfile = keyfile
        self.passphrase = passphrase
        self.price_source = price_source
        self.price_tolerance = price_tolerance
        self.auto_confirm = auto_confirm
        self.auto_resubmit = auto_resubmit
        self.http_host = http_host
        self.http_port = http_port
        self.display_name = display_name
        self.session_timeout = session_timeout


class LocalOrder:
    """Order plus the size, which exists only in this process."""

    def __init__(self, order_id: str, buy_asset: str, sell_asset: str,
                 size: int, limit_price: str | None):
        self.order_id = order_id
        self.buy_asset = buy_asset
        self.sell_asset = sell_asset
        self.size = size
        self.limit_price = limit_price
        self.filled = 0
        self.status = "open"
        self.timeline: list[dict] = [{"at": time.time(), "status": "open"}]

    @property
    def residual(self) -> int:
        return self.size - self.filled

    def set_status(self, status: str):
        self.status = status
        self.timeline.append({"at": time.time(), "status": status})

    def as_dict(self) -> dict:
        return {
            "order_id": self.order_id,
            "buy_asset": self.buy_asset,
            "sell_asset": self.sell_asset,
            "size": self.size,
            "filled": self.filled,
            "residual": self.residual,
            "limit_price": self.limit_price,
            "status": self.status,
            "timeline": self.timeline,
        }


class PendingDecision:
    def __init__(self, ticket: dict, price_check: dict, expires_at: float):
        self.ticket = ticket
        self.price_check = price_check
        self.expires_at = expires_at

    def as_dict(self) -> dict:
        return {
            "session_id": self.ticket["session_id"],
            "ticket": self.ticket,
            "price_check": self.price_check,
            "expires_at": self.expires_at,
        }


class ActiveSession:
    def __init__(self, session_id: str, order_id: str, role: int,
                 session: CompareSession, ticket: dict, peer: str):
        self.session_id = session_id
        self.order_id = order_id
        self.role = role
        self.session = session
        self.ticket = ticket
        self.peer = peer
        self.state = "running"
        self.verdict: compare.CompareVerdict | None = None
        self.relay_verdict: dict | None = None

    def as_dict(self) -> dict:
        round_no = self.session.round
        return {
            "session_id": self.session_id,
            "order_id": self.order_id,
            "role": self.role,
            "round": round_no,
            "stage": STEP_LABELS.get(round_no, "starting"),
            "state": self.state,
            "verdict": None if self.verdict is None else {
                "smaller_role": self.verdict.smaller_role,
                "is_strict": self.verdict.is_strict,
                "we_reveal": self.verdict.smaller_role == self.role,
            },
        }


# --- price verification -----------------------------------------------------------

def check_price(quoted: Decimal, reference: Decimal, tolerance: float) -> bool:
    """Inclusive bound: |quoted - reference| <= tolerance * reference."""
    tol = Decimal(str(tolerance))
    return abs(quoted - reference) <= tol * reference


# --- the daemon ---------------------------------------------------------------------

class ClientDaemon:
    def __init__(self, config: ClientConfig, rng: RandomSource = DEFAULT_RNG):
        self.config = config
        self.rng = rng
        self.sk = load_or_create_identity(config.keyfile, config.passphrase, rng)
        self.pk = GENERATOR.mul(self.sk)
        self.identity = self.pk.data.hex()
        self.registered = False
        self.bit_width: int | None = None
        self.relay_key = None  # trusted on first contact
        self.orders: dict[str, LocalOrder] = {}
        self.pending_orders: dict[str, dict] = {}  # client_ref -> order fields
        self.decisions: dict[str, PendingDecision] = {}
        self.sessions: dict[str, ActiveSession] = {}
        self.session_orders: dict[str, str] = {}  # session id -> own order id
        self.fills: list[dict] = []
        self.banned = False
        self.wire_log: list[tuple[str, bytes]] = []
        self._seq = 0
        self._reader: asyncio.StreamReader | None = None
        self._writer: asyncio.StreamWriter | None = None
        self._waiters: list[asyncio.Future] = []
        self._subscribers: list[asyncio.Queue] = []
        self._tasks: list[asyncio.Task] = []
        self._http_server: asyncio.AbstractServer | None = None
        if config.price_source:
            self._reference_feed = PriceFeed({"_ref": config.price_source})
        else:
            self._reference_feed = None

    # -- lifecycle --

    async def start(self):
        self._reader, self._writer = await asyncio.open_connection(
            self.config.relay_host, self.config.relay_port,
            limit=wire.STREAM_LIMIT)
        self._tasks.append(asyncio.create_task(self._read_relay()))
        self._tasks.append(asyncio.create_task(self._ticker()))
        self._http_server = await asyncio.start_server(
            self._handle_http, self.config.http_host, self.config.http_port)
        log.info("daemon up: identity %s, api http://%s:%s",
                 self.identity[:12], self.config.http_host, self.config.http_port)

    async def stop(self):
        for task in self._tasks:
            task.cancel()
        if self._http_server:
            self._http_server.close()
            await self._http_server.wait_closed()
        if self._writer:
            self._writer.close()

    # -- relay connection --

    def _send_envelope(self, msg_type: str, payload: dict,
                       session_id: str | None = None):
        self._seq += 1
        envelope = wire.make_envelope(msg_type, payload, self.sk, self.pk,
                                      self._seq, session_id, self.rng)
        line = wire.encode_line(envelope)
        self.wire_log.append(("out", line))
        self._writer.write(line)

    async def _request(self, msg_type: str, payload: dict,
                       session_id: str | None = None, timeout: float = 10.0) -> dict:
        """Send and await the relay's direct reply (ack or error)."""
        future = asyncio.get_running_loop().create_future()
        self._waiters.append(future)
        self._send_envelope(msg_type, payload, session_id)
        await self._writer.drain()
        return await asyncio.wait_for(future, timeout)

    async def _read_relay(self):
        try:
            while True:
                line = await self._reader.readline()
                if not line:
                    log.warning("relay connection closed")
                    break
                self.wire_log.append(("in", line))
                try:
                    envelope = wire.decode_line(line)
                    sender = wire.check_envelope(envelope)
                except (DecodeError, BadSignature) as exc:
                    log.warning("dropping unreadable envelope: %s", exc)
                    continue
                try:
                    self._on_envelope(envelope, sender)
                except DarkpoolError as exc:
                    log.warning("envelope handling failed: %s", exc)
                    self._publish("error", {"detail": str(exc)})
        except asyncio.CancelledError:
            raise
        except ConnectionError as exc:
            log.warning("relay connection lost: %s", exc)

    async def _ticker(self):
        while True:
            await asyncio.sleep(1.0)
            now = time.time()
            for sid, decision in list(self.decisions.items()):
                if now > decision.expires_at:
                    del self.decisions[sid]
                    self._publish("decision_expired", {"session_id": sid})
            for sid, active in list(self.sessions.items()):
                if active.state == "running" and active.session.expired():
                    active.state = "expired"
                    self._publish("session", active.as_dict())

    # -- envelope handling --

    def _on_envelope(self, envelope: dict, sender):
        msg_type = envelope["type"]
        payload = envelope["payload"]

        if msg_type in (wire.MSG_ROUND, wire.MSG_REVEAL):
            self._on_round(envelope, sender)
            return

        # everything else must come from the relay (trusted on first contact)
        if self.relay_key is None:
            self.relay_key = sender
        elif sender != self.relay_key:
            raise BadSignature("relay identity changed mid-connection")

        if msg_type == wire.MSG_REGISTER:
            self.registered = True
            self.bit_width = payload.get("bit_width")
            self._resolve_waiter(envelope)
            self._publish("status", self.status())
        elif msg_type == wire.MSG_ORDER_ACK:
            # build the local order here, before any ticket can reference it
            fields = self.pending_orders.pop(payload.get("client_ref"), None)
            if fields is not None and "order_id" in payload:
                order = LocalOrder(payload["order_id"], fields["buy_asset"],
                                   fields["sell_asset"], fields["size"],
                                   fields["limit_price"])
                self.orders[order.order_id] = order
                self._publish("order", order.as_dict())
            self._resolve_waiter(envelope)
        elif msg_type == wire.MSG_ERROR:
            if payload.get("code") == "DuplicateKey":
                # already registered with this key: treat as success
                self.registered = True
            self._resolve_waiter(envelope)
            self._publish("error", payload)
        elif msg_type == wire.MSG_MATCH_TICKET:
            self._on_ticket(payload)
        elif msg_type == wire.MSG_SESSION_START:
            self._on_session_start(payload)
        elif msg_type == wire.MSG_VERDICT:
            active = self.sessions.get(payload.get("session_id"))
            if active:
                active.relay_verdict = payload
                self._publish("session", active.as_dict())
        elif msg_type == wire.MSG_SETTLEMENT_INSTRUCTION:
            self._on_settlement(payload)
        elif msg_type == wire.MSG_PUNISH_NOTICE:
            self._on_punish(payload)
        elif msg_type == wire.MSG_ABORT:
            self._on_abort(payload)

    def _resolve_waiter(self, envelope: dict):
        if self._waiters:
            future = self._waiters.pop(0)
            if not future.done():
                future.set_result(envelope)

    # -- tickets and decisions --

    def _price_check(self, ticket: dict) -> dict:
        quoted = Decimal(ticket["market_price"])
        if self._reference_feed is None:
            return {"verdict": "unavailable",
                    "warning": "no reference price source configured",
                    "quoted": str(quoted)}
        try:
            reference = self._reference_feed.get("_ref")
        except StalePrice as exc:
            return {"verdict": "unavailable", "warning": str(exc),
                    "quoted": str(quoted)}
        ok = check_price(quoted, reference, self.config.price_tolerance)
        return {"verdict": "pass" if ok else "fail",
                "quoted": str(quoted), "reference": str(reference),
                "tolerance": self.config.price_tolerance}

    def _own_order_in(self, ticket: dict) -> tuple[int, str] | None:
        if ticket.get("role1") == self.identity:
            return 1, ticket["role1_order"]
        if ticket.get("role2") == self.identity:
            return 2, ticket["role2_order"]
        return None

    def _on_ticket(self, ticket: dict):
        ours = self._own_order_in(ticket)
        if ours is None:
            log.warning("ticket for someone else; ignoring")
            return
        role, order_id = ours
        order = self.orders.get(order_id)
        if order is None:
            log.warning("ticket references unknown order %s", order_id[:8])
            return
        self.session_orders[ticket["session_id"]] = order_id
        order.set_status("matched")
        price_check = self._price_check(ticket)
        k = int(ticket.get("bit_width", 64))
        if order.residual >= (1 << k):
            price_check = {"verdict": "fail",
                           "warning": f"order size does not fit {k} bits",
                           "quoted": ticket["market_price"]}
        decision = PendingDecision(ticket, price_check,
                                   ticket.get("confirm_deadline", time.time() + 60))
        self.decisions[ticket["session_id"]] = decision
        self._publish("decision", decision.as_dict())
        if self.config.auto_confirm and price_check["verdict"] == "pass":
            self.decide(ticket["session_id"], True)

    def decide(self, session_id: str, accept: bool):
        decision = self.decisions.pop(session_id, None)
        if decision is None:
            raise UnknownSession("no pending decision for this session")
        if time.time() > decision.expires_at:
            self._publish("decision_expired", {"session_id": session_id})
            raise DecisionExpired("the confirmation window closed")
        self._send_envelope(wire.MSG_CONFIRM, {"accept": bool(accept)}, session_id)
        if not accept:
            ours = self._own_order_in(decision.ticket)
            if ours and ours[1] in self.orders:
                self.orders[ours[1]].set_status("open")
        self._publish("decision_taken",
                      {"session_id": session_id, "accept": bool(accept)})

    # -- the comparison itself --

    def _on_session_start(self, payload: dict):
        session_id = payload["session_id"]
        role = int(payload["role"])
        k = int(payload["bit_width"])
        peer = payload["peer"]
        order_id = self.session_orders.get(session_id)
        order = self.orders.get(order_id) if order_id else None
        if order is None:
            log.warning("session start without a matching local order")
            return
        me, them = bytes.fromhex(self.identity), bytes.fromhex(peer)
        identities = (me, them) if role == 1 else (them, me)
        config = CompareConfig(
            bit_width=k, role=role, session_id=bytes.fromhex(session_id),
            identities=identities, timeout_seconds=self.config.session_timeout)
        session, first = start_session(config, order.residual, self.rng)
        active = ActiveSession(session_id, order.order_id, role, session,
                               {"session_id": session_id, **payload}, peer)
        self.sessions[session_id] = active
        order.set_status("comparing")
        self._send_envelope(wire.MSG_ROUND, wire.hex_payload(first), session_id)
        self._publish("session", active.as_dict())

    def _on_round(self, envelope: dict, sender):
        session_id = envelope.get("session_id")
        active = self.sessions.get(session_id)
        if active is None:
            raise UnknownSession(f"round for unknown session {session_id}")
        if sender.data.hex() != active.peer:
            raise BadSignature("round envelope not signed by the counterparty")
        payload = wire.payload_bytes(envelope)
        try:
            outbound, verdict = active.session.handle_message(payload)
        except BadProof as exc:
            active.state = "peer_misbehaved"
            self._publish("session", active.as_dict())
            log.warning("peer proof failed in %s: %s", session_id[:8], exc)
            return
        except (ProtocolOrderViolation, SessionExpired) as exc:
            active.state = "aborted"
            self._publish("session", active.as_dict())
            log.warning("session %s aborted: %s", session_id[:8], exc)
            return
        for out in outbound:
            self._send_envelope(wire.MSG_ROUND, wire.hex_payload(out), session_id)
        if verdict is not None:
            active.verdict = verdict
            self._publish("session", active.as_dict())
            if verdict.smaller_role == active.role:
                _, reveal_payload = active.session.make_reveal()
                self._send_envelope(wire.MSG_REVEAL,
                                    wire.hex_payload(reveal_payload), session_id)
        if active.session.peer_reveal is not None:
            active.state = "peer_revealed"
            self._publish("session", active.as_dict())

    # -- settlement and aftermath --

    def _on_settlement(self, payload: dict):
        session_id = payload["session_id"]
        active = self.sessions.get(session_id)
        if active is None:
            return
        order = self.orders.get(active.order_id)
        size = int(payload["size"])
        fill = {
            "session_id": session_id,
            "order_id": active.order_id,
            "instrument": payload.get("instrument"),
            "price": payload.get("price"),
            "size": size,
            "counterparty": active.peer,
            "at": time.time(),
        }
        self.fills.append(fill)
        active.state = "filled"
        if order is not None:
            order.filled += size
            if payload.get("settled_order") == order.order_id or order.residual == 0:
                order.set_status("settled")
                if (payload.get("reopened_order") == order.order_id
                        and order.residual == 0):
                    # tie: the relay reopened us but nothing remains
                    self._cancel_remote(order)
            else:
                # the relay reopened our order for the residual
                order.set_status("open")
                if not self.config.auto_resubmit:
                    self._cancel_remote(order)
        self._publish("fill", fill)
        self._publish("session", active.as_dict())

    def _cancel_remote(self, order: LocalOrder):
        self._send_envelope(wire.MSG_ORDER,
                            {"action": "cancel", "order_id": order.order_id})
        order.set_status("cancelled")

    def _on_punish(self, payload: dict):
        session_id = payload.get("session_id")
        banned = payload.get("banned")
        active = self.sessions.get(session_id)
        if banned == self.identity:
            self.banned = True
            self._publish("punish", {"you": True, **payload})
            return
        if active:
            active.state = "peer_punished"
            order = self.orders.get(active.order_id)
            if order is not None:
                order.set_status("open")  # relay reopened it for rematching
            self._publish("punish", {"you": False, **payload})
            self._publish("session", active.as_dict())

    def _on_abort(self, payload: dict):
        session_id = payload.get("session_id")
        self.decisions.pop(session_id, None)
        active = self.sessions.get(session_id)
        if active and active.state == "running":
            active.state = "aborted"
        order_id = self.session_orders.get(session_id)
        order = self.orders.get(order_id) if order_id else None
        if order is not None and order.status in ("matched", "comparing"):
            order.set_status("open")
        self._publish("abort", payload)

    # -- local commands (HTTP surface) --

    def status(self) -> dict:
        return {
            "identity": self.identity,
            "registered": self.registered,
            "banned": self.banned,
            "bit_width": self.bit_width,
            "relay": f"{self.config.relay_host}:{self.config.relay_port}",
            "orders": len(self.orders),
            "open_decisions": len(self.decisions),
            "active_sessions": sum(1 for s in self.sessions.values()
                                   if s.state == "running"),
        }

    async def register(self, display_name: str | None = None) -> dict:
        reply = await self._request(wire.MSG_REGISTER, {
            "display_name": display_name or self.config.display_name})
        if reply["type"] == wire.MSG_ERROR:
            if reply["payload"].get("code") == "DuplicateKey":
                return {"registered": True, "note": "key was already registered"}
            raise DarkpoolError(reply["payload"].get("detail", "registration failed"))
        return {"registered": True, **reply["payload"]}

    async def place_order(self, buy_asset: str, sell_asset: str, size,
                          limit_price=None) -> dict:
        if not self.registered:
            raise NotRegistered("register with the relay first")
        if not isinstance(size, int) or isinstance(size, bool):
            raise SizeOutOfRange("size must be an integer")
        cap = self.bit_width or 64
        if not 0 < size < (1 << cap):
            raise SizeOutOfRange(f"size must be in (0, 2^{cap})")
        ref = uuid.uuid4().hex
        payload = {
            "buy_asset": str(buy_asset),
            "sell_asset": str(sell_asset),
            "client_ref": ref,
        }
        if limit_price is not None:
            payload["limit_price"] = str(_as_price(limit_price))
        # the size is deliberately absent from the wire payload; the reader
        # creates the local order the moment the ack arrives
        self.pending_orders[ref] = {
            "buy_asset": str(buy_asset), "sell_asset": str(sell_asset),
            "size": size, "limit_price": payload.get("limit_price"),
        }
        try:
            reply = await self._request(wire.MSG_ORDER, payload)
        finally:
            self.pending_orders.pop(ref, None)
        if reply["type"] == wire.MSG_ERROR:
            raise DarkpoolError(reply["payload"].get("detail", "order rejected"))
        order = self.orders[reply["payload"]["order_id"]]
        return order.as_dict()

    # -- events --

    def _publish(self, event: str, data: dict):
        message = {"event": event, "data": data, "at": time.time()}
        for queue in list(self._subscribers):
            queue.put_nowait(message)

    # -- HTTP API --

    async def _handle_http(self, reader: asyncio.StreamReader,
                           writer: asyncio.StreamWriter):
        try:
            request = await self._read_http_request(reader)
            if request is None:
                return
            method, path, body = request
            if path == "/events":
                await self._serve_events(writer)
                return
            status, reply = await self._route(method, path, body)
        except DarkpoolError as exc:
            status, reply = 400, {"error": type(exc).__name__, "detail": str(exc)}
        except Exception as exc:  # pragma: no cover - defensive
            log.exception("http handler error")
            status, reply = 500, {"error": "internal", "detail": str(exc)}
        try:
            body_bytes = json.dumps(reply).encode()
            writer.write(
                f"HTTP/1.1 {status} {'OK' if status == 200 else 'ERROR'}\r\n"
                f"Content-Type: application/json\r\n"
                f"Content-Length: {len(body_bytes)}\r\n"
                f"Access-Control-Allow-Origin: *\r\n"
                f"Connection: close\r\n\r\n".encode() + body_bytes)
            await writer.drain()
        except ConnectionError:
            pass
        finally:
            writer.close()

    async def _read_http_request(self, reader):
        try:
            request_line = await reader.readline()
        except (ConnectionError, asyncio.LimitOverrunError):
            return None
        if not request_line:
            return None
        parts = request_line.decode("latin1").split()
        if len(parts) < 2:
            return None
        method, path = parts[0].upper(), parts[1]
        headers = {}
        while True:
            line = await reader.readline()
            if line in (b"\r\n", b"\n", b""):
                break
            name, _, value = line.decode("latin1").partition(":")
            headers[name.strip().lower()] = value.strip()
        body = {}
        length = int(headers.get("content-length", 0) or 0)
        if length:
            raw = await reader.readexactly(length)
            try:
                body = json.loads(raw)
            except json.JSONDecodeError:
                raise DecodeError("request body is not JSON")
        return method, path, body

    async def _route(self, method: str, path: str, body: dict) -> tuple[int, dict]:
        if method == "GET" and path == "/status":
            return 200, self.status()
        if method == "GET" and path == "/orders":
            return 200, {"orders": [o.as_dict() for o in self.orders.values()]}
        if method == "POST" and path == "/orders":
            order = await self.place_order(
                body.get("buy_asset", ""), body.get("sell_asset", ""),
                body.get("size"), body.get("limit_price"))
            return 200, order
        if method == "GET" and path == "/decisions":
            return 200, {"decisions": [d.as_dict() for d in self.decisions.values()]}
        if method == "POST" and path.startswith("/decisions/"):
            session_id = path.split("/", 2)[2]
            self.decide(session_id, bool(body.get("accept")))
            return 200, {"session_id": session_id, "accept": bool(body.get("accept"))}
        if method == "GET" and path == "/sessions":
            return 200, {"sessions": [s.as_dict() for s in self.sessions.values()]}
        if method == "GET" and path.startswith("/sessions/"):
            session_id = path.split("/", 2)[2]
            active = self.sessions.get(session_id)
            if active is None:
                raise UnknownSession(session_id)
            return 200, active.as_dict()
        if method == "GET" and path == "/fills":
            return 200, {"fills": self.fills}
        if method == "POST" and path == "/register":
            return 200, await self.register(body.get("display_name"))
        return 404, {"error": "NotFound", "detail": path}

    async def _serve_events(self, writer: asyncio.StreamWriter):
        queue: asyncio.Queue = asyncio.Queue()
        self._subscribers.append(queue)
        try:
            writer.write(b"HTTP/1.1 200 OK\r\n"
                         b"Content-Type: text/event-stream\r\n"
                         b"Cache-Control: no-cache\r\n"
                         b"Access-Control-Allow-Origin: *\r\n"
                         b"Connection: keep-alive\r\n\r\n")
            writer.write(b": connected\n\n")
            await writer.drain()
            while True:
                message = await queue.get()
                data = json.dumps(message)
                writer.write(f"event: {message['event']}\ndata: {data}\n\n".encode())
                await writer.drain()
        except (ConnectionError, asyncio.CancelledError):
            pass
        finally:
            self._subscribers.remove(queue)
            writer.close()


# --- CLI -----------------------------------------------------------------------------

def _api(daemon_addr: str, method: str, path: str, body: dict | None = None) -> dict:
    url = f"http://{daemon_addr}{path}"
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(url, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=30) as resp:
            return json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        detail = exc.read().decode(errors="replace")
        raise SystemExit(f"daemon error: {detail}")
    except urllib.error.URLError as exc:
        raise SystemExit(f"cannot reach the daemon at {daemon_addr}: {exc.reason}")


def _run_daemon(args):
    passphrase = args.passphrase
    if passphrase is None:
        passphrase = os.environ.get("DARKPOOL_PASSPHRASE", "")
    host, _, port = args.relay.rpartition(":")
    config = ClientConfig(
        relay_host=host or "127.0.0.1", relay_port=int(port),
        keyfile=args.keyfile, passphrase=passphrase,
        price_source=args.price, price_tolerance=args.tolerance,
        auto_confirm=args.auto_confirm, auto_resubmit=not args.manual_resubmit,
        http_port=args.http_port, display_name=args.name)
    daemon = ClientDaemon(config)

    async def run():
        await daemon.start()
        try:
            await asyncio.Event().wait()
        finally:
            await daemon.stop()

    try:
        asyncio.run(run())
    except KeyboardInterrupt:
        pass


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="darkpool-client",
        description="Trader daemon and CLI for the hidden-size dark pool.")
    parser.add_argument("--daemon-addr", default=f"127.0.0.1:{DEFAULT_HTTP_PORT}",
                        help="address of the local daemon API")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="start the trader daemon")
    run_p.add_argument("--relay", default="127.0.0.1:7700")
    run_p.add_argument("--keyfile", default="darkpool-client.key")
    run_p.add_argument("--passphrase", default=None,
                       help="keyfile passphrase (default: $DARKPOOL_PASSPHRASE)")
    run_p.add_argument("--http-port", type=int, default=DEFAULT_HTTP_PORT)
    run_p.add_argument("--price", default=None,
                       help="reference price source: static:<v> or url:<endpoint>")
    run_p.add_argument("--tolerance", type=float, default=0.02)
    run_p.add_argument("--auto-confirm", action="store_true")
    run_p.add_argument("--manual-resubmit", action="store_true",
                       help="cancel residual orders instead of keeping them open")
    run_p.add_argument("--name", default="")

    reg_p = sub.add_parser("register", help="register with the relay")
    reg_p.add_argument("--name", default="")

    order_p = sub.add_parser("order", help="place an order")
    order_p.add_argument("buy_asset")
    order_p.add_argument("sell_asset")
    order_p.add_argument("size", type=int)
    order_p.add_argument("--limit", default=None)

    sub.add_parser("decisions", help="list pending match confirmations")

    decide_p = sub.add_parser("decide", help="answer a match confirmation")
    decide_p.add_argument("session_id")
    decide_p.add_argument("answer", choices=["yes", "no"])

    sub.add_parser("status", help="daemon status")
    sub.add_parser("fills", help="fill history")

    args = parser.parse_args(argv)

    if args.command == "run":
        _run_daemon(args)
        return

    addr = args.daemon_addr
    if args.command == "register":
        print(json.dumps(_api(addr, "POST", "/register",
                              {"display_name": args.name}), indent=2))
    elif args.command == "order":
        body = {"buy_asset": args.buy_asset, "sell_asset": args.sell_asset,
                "size": args.size}
        if args.limit is not None:
            body["limit_price"] = args.limit
        print(json.dumps(_api(addr, "POST", "/orders", body), indent=2))
    elif args.command == "decisions":
        print(json.dumps(_api(addr, "GET", "/decisions"), indent=2))
    elif args.command == "decide":
        print(json.dumps(_api(addr, "POST", f"/decisions/{args.session_id}",
                              {"accept": args.answer == "yes"}), indent=2))
    elif args.command == "status":
        print(json.dumps(_api(addr, "GET", "/status"), indent=2))
    elif args.command == "fills":
        print(json.dumps(_api(addr, "GET", "/fills"), indent=2))


if __name__ == "__main__":
    main()
