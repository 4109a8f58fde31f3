"""The dark pool operator service.

Keeps the user registry and the sizeless order book, matches complementary
orders at the market price, relays the comparison protocol between the two
matched traders while verifying every zero-knowledge proof inline, and
punishes provable misbehavior by permanent ban.

The operator is honest-but-curious by assumption: everything here works
from wire-visible data only. Order records deliberately have no size
field; the only size the relay ever learns is the revealed (smaller) one.

Core logic lives in :class:`Relay`, synchronous and fully testable without
sockets; :class:`RelayServer` adds the asyncio TCP front end.
"""

from __future__ import annotations

import argparse
import asyncio
import copy
import json
import logging
import sqlite3
import time
import urllib.request
import uuid
from decimal import Decimal, InvalidOperation

from . import wire
from .compare import STEP_KEYS, STEP_BITS, STEP_SHUFFLE_FIRST, STEP_SHUFFLE_SECOND, \
    STEP_BLIND, STEP_SHARES, STEP_REVEAL, SessionAuditor, peek_header
from .elgamal import keygen
from .errors import (
    BadProof,
    BadReveal,
    BadSignature,
    BannedKey,
    DecodeError,
    DuplicateKey,
    InvalidEvidence,
    NotYourSession,
    ProtocolOrderViolation,
    SameAssetPair,
    StalePrice,
    StaleRound,
    UnknownOrder,
    UnknownSession,
    UnknownUser,
)
from .group import (
    DEFAULT_RNG,
    GENERATOR,
    RandomSource,
    deserialize_scalar,
    serialize_scalar,
)

log = logging.getLogger("darkpool.relay")

PRICE_QUANTUM = Decimal("0.00000001")

ORDER_STATES = ("open", "matched", "comparing", "revealed", "settled", "cancelled")

#: Orders re-opened by an unanswered ticket wait this long before rematching.
TICKET_TIMEOUT_COOLDOWN = 30.0


def _as_price(text) -> Decimal:
    try:
        price = Decimal(str(text)).quantize(PRICE_QUANTUM)
    except (InvalidOperation, ValueError):
        raise StalePrice(f"unreadable price {text!r}")
    if price <= 0:
        raise StalePrice(f"non-positive price {text}")
    return price


class PriceFeed:
    """One price source per instrument: ``static:<value>`` or ``url:<endpoint>``.

    URL sources must answer GET with JSON ``{"price": <number or string>}``.
    Responses are cached up to ``max_age`` seconds; an unreachable source
    past that age raises StalePrice and matching pauses.
    """

    def __init__(self, sources: dict[str, str], max_age: float = 30.0,
                 clock=time.time):
        self.sources = dict(sources)
        self.max_age = max_age
        self.clock = clock
        self._cache: dict[str, tuple[Decimal, float]] = {}

    def instruments(self) -> list[str]:
        return list(self.sources)

    def get(self, instrument: str) -> Decimal:
        source = self.sources.get(instrument)
        if source is None:
            raise StalePrice(f"no price source for {instrument}")
        if source.startswith("static:"):
            return _as_price(source[len("static:"):])
        if not source.startswith("url:"):
            raise StalePrice(f"unrecognized price source {source!r}")

        now = self.clock()
        try:
            with urllib.request.urlopen(source[len("url:"):], timeout=5) as resp:
                body = json.loads(resp.read())
            price = _as_price(body["price"])
        except Exception as exc:
            cached = self._cache.get(instrument)
            if cached and now - cached[1] <= self.max_age:
                return cached[0]
            raise StalePrice(f"price source for {instrument} unreachable: {exc}")
        self._cache[instrument] = (price, now)
        return price


class Store:
    """Single-file persistence for users, bans, orders, and the relay key."""

    def __init__(self, path: str):
        self.db = sqlite3.connect(path)
        self.db.row_factory = sqlite3.Row
        self.db.executescript(
            """
            CREATE TABLE IF NOT EXISTS meta(
                key TEXT PRIMARY KEY, value TEXT NOT NULL);
            CREATE TABLE IF NOT EXISTS users(
                identity_key TEXT PRIMARY KEY,
                display_name TEXT NOT NULL,
                status TEXT NOT NULL,
                registered_at REAL NOT NULL);
            CREATE TABLE IF NOT EXISTS orders(
                order_id TEXT PRIMARY KEY,
                owner TEXT NOT NULL,
                buy_asset TEXT NOT NULL,
                sell_asset TEXT NOT NULL,
                limit_price TEXT,
                state TEXT NOT NULL,
                created_at REAL NOT NULL);
            """
        )
        self.db.commit()

    def close(self):
        self.db.close()

    # -- relay identity --

    def load_or_create_identity(self, rng: RandomSource):
        row = self.db.execute(
            "SELECT value FROM meta WHERE key = 'relay_sk'").fetchone()
        if row:
            return deserialize_scalar(bytes.fromhex(row["value"]))
        kp = keygen(rng)
        self.db.execute("INSERT INTO meta(key, value) VALUES('relay_sk', ?)",
                        (serialize_scalar(kp.sk).hex(),))
        self.db.commit()
        return kp.sk

    # -- users --

    def get_user(self, identity_key: str):
        return self.db.execute(
            "SELECT * FROM users WHERE identity_key = ?", (identity_key,)
        ).fetchone()

    def add_user(self, identity_key: str, display_name: str, now: float):
        self.db.execute(
            "INSERT INTO users VALUES(?, ?, 'active', ?)",
            (identity_key, display_name, now))
        self.db.commit()

    def set_user_status(self, identity_key: str, status: str):
        self.db.execute("UPDATE users SET status = ? WHERE identity_key = ?",
                        (status, identity_key))
        self.db.commit()

    # -- orders --

    def add_order(self, order: dict):
        self.db.execute(
            "INSERT INTO orders VALUES(?, ?, ?, ?, ?, ?, ?)",
            (order["order_id"], order["owner"], order["buy_asset"],
             order["sell_asset"], order["limit_price"], order["state"],
             order["created_at"]))
        self.db.commit()

    def get_order(self, order_id: str):
        return self.db.execute(
            "SELECT * FROM orders WHERE order_id = ?", (order_id,)).fetchone()

    def set_order_state(self, order_id: str, state: str):
        assert state in ORDER_STATES
        self.db.execute("UPDATE orders SET state = ? WHERE order_id = ?",
                        (state, order_id))
        self.db.commit()

    def open_orders(self) -> list:
        return self.db.execute(
            "SELECT * FROM orders WHERE state = 'open' ORDER BY created_at, order_id"
        ).fetchall()

    def orders_of(self, owner: str) -> list:
        return self.db.execute(
            "SELECT * FROM orders WHERE owner = ? ORDER BY created_at, order_id",
            (owner,)).fetchall()

    def reset_transient_states(self):
        """Sessions do not survive a restart; matched orders re-open."""
        self.db.execute(
            "UPDATE orders SET state = 'open' "
            "WHERE state IN ('matched', 'comparing', 'revealed')")
        self.db.commit()


class MatchSession:
    """Relay-side record of one matched pair."""

    def __init__(self, session_id: bytes, instrument: str, price: Decimal,
                 role1_key: str, role2_key: str, order1: str, order2: str,
                 bit_width: int, deadline: float, identities: tuple[bytes, bytes]):
        self.session_id = session_id
        self.instrument = instrument
        self.price = price
        self.keys = {1: role1_key, 2: role2_key}
        self.orders = {1: order1, 2: order2}
        self.bit_width = bit_width
        self.deadline = deadline
        self.state = "pending"  # pending -> active -> done | aborted
        self.confirmed: set[str] = set()
        self.auditor = SessionAuditor(bit_width, session_id,
                                      identities=identities)
        self.last_activity = 0.0

    @property
    def hex_id(self) -> str:
        return self.session_id.hex()

    def role_of(self, identity_key: str) -> int:
        for role, key in self.keys.items():
            if key == identity_key:
                return role
        raise NotYourSession(f"{identity_key[:12]} is not in this session")

    def peer_of(self, identity_key: str) -> str:
        return self.keys[2] if self.keys[1] == identity_key else self.keys[1]


class MisbehaviorReport:
    def __init__(self, session_id: bytes, accused: str, round: int, evidence: dict):
        self.session_id = session_id
        self.accused = accused
        self.round = round
        self.evidence = evidence


class Relay:
    """Order book, matching, relaying, and punishment. Synchronous core;
    outbound envelopes accumulate in ``outbox`` as (recipient, envelope)."""

    def __init__(self, store: Store, feed: PriceFeed, bit_width: int = 16,
                 session_timeout: float = 60.0, clock=time.time,
                 rng: RandomSource = DEFAULT_RNG):
        self.store = store
        self.feed = feed
        self.bit_width = bit_width
        self.session_timeout = session_timeout
        self.clock = clock
        self.rng = rng
        self.sk = store.load_or_create_identity(rng)
        self.pk = GENERATOR.mul(self.sk)
        self.sessions: dict[str, MatchSession] = {}
        self.no_rematch: set[frozenset] = set()
        self.cooldowns: dict[str, float] = {}
        self.outbox: list[tuple[str, dict]] = []
        self._seq = 0
        store.reset_transient_states()

    # -- outbound --

    def _send(self, recipient: str, msg_type: str, payload: dict,
              session_id: str | None = None):
        self._seq += 1
        envelope = wire.make_envelope(msg_type, payload, self.sk, self.pk,
                                      self._seq, session_id, self.rng)
        self.outbox.append((recipient, envelope))

    def _forward(self, recipient: str, envelope: dict):
        self.outbox.append((recipient, envelope))

    def send_error(self, recipient: str, code: str, detail: str = "",
                   session_id: str | None = None):
        self._send(recipient, wire.MSG_ERROR,
                   {"code": code, "detail": detail}, session_id)

    # -- registry --

    def register(self, identity_key: str, display_name: str) -> dict:
        row = self.store.get_user(identity_key)
        if row is not None:
            if row["status"] == "banned":
                raise BannedKey("this key was expelled from the pool")
            raise DuplicateKey("key already registered")
        now = self.clock()
        self.store.add_user(identity_key, display_name, now)
        return {"identity_key": identity_key, "display_name": display_name,
                "status": "active", "registered_at": now,
                "bit_width": self.bit_width}

    def _require_active(self, identity_key: str):
        row = self.store.get_user(identity_key)
        if row is None:
            raise UnknownUser("register first")
        if row["status"] != "active":
            raise BannedKey("this key was expelled from the pool")
        return row

    # -- order book --

    def submit_order(self, owner: str, payload: dict) -> dict:
        self._require_active(owner)
        buy, sell = payload.get("buy_asset"), payload.get("sell_asset")
        if not buy or not sell or not isinstance(buy, str) or not isinstance(sell, str):
            raise SameAssetPair("orders need a buy asset and a sell asset")
        if buy == sell:
            raise SameAssetPair("cannot trade an asset against itself")
        limit = payload.get("limit_price")
        if limit is not None:
            try:
                limit = str(_as_price(limit))
            except StalePrice:
                raise DecodeError(f"unreadable limit price {limit!r}")
        order = {
            "order_id": uuid.uuid4().hex,
            "owner": owner,
            "buy_asset": buy,
            "sell_asset": sell,
            "limit_price": limit,
            "state": "open",
            "created_at": self.clock(),
        }
        self.store.add_order(order)
        return order

    def cancel_order(self, owner: str, order_id: str) -> dict:
        row = self.store.get_order(order_id)
        if row is None or row["owner"] != owner:
            raise UnknownOrder("no such order for this owner")
        if row["state"] != "open":
            raise UnknownOrder(f"order is {row['state']}, not open")
        self.store.set_order_state(order_id, "cancelled")
        return {"order_id": order_id, "state": "cancelled"}

    # -- matching --

    def _instrument_side(self, row) -> tuple[str, int] | None:
        """(instrument, role) for an order: role 1 buys the base asset."""
        buy, sell = row["buy_asset"], row["sell_asset"]
        if f"{buy}/{sell}" in self.feed.sources:
            return f"{buy}/{sell}", 1
        if f"{sell}/{buy}" in self.feed.sources:
            return f"{sell}/{buy}", 2
        return None

    def _limit_ok(self, row, role: int, price: Decimal) -> bool:
        if row["limit_price"] is None:
            return True
        limit = Decimal(row["limit_price"])
        return price <= limit if role == 1 else price >= limit

    def match_orders(self) -> list[MatchSession]:
        """Pair open complementary orders oldest-first at the market price."""
        now = self.clock()
        by_instrument: dict[str, dict[int, list]] = {}
        for row in self.store.open_orders():
            if self.cooldowns.get(row["order_id"], 0) > now:
                continue
            user = self.store.get_user(row["owner"])
            if user is None or user["status"] != "active":
                continue
            side = self._instrument_side(row)
            if side is None:
                continue
            instrument, role = side
            by_instrument.setdefault(instrument, {1: [], 2: []})[role].append(row)

        created = []
        for instrument, sides in by_instrument.items():
            try:
                price = self.feed.get(instrument)
            except StalePrice:
                continue  # matching pauses for this instrument
            buys = [r for r in sides[1] if self._limit_ok(r, 1, price)]
            sells = [r for r in sides[2] if self._limit_ok(r, 2, price)]
            used: set[str] = set()
            for buy in buys:
                for sell in sells:
                    if sell["order_id"] in used:
                        continue
                    if buy["owner"] == sell["owner"]:
                        continue
                    if frozenset((buy["order_id"], sell["order_id"])) in self.no_rematch:
                        continue
                    created.append(self._open_session(instrument, price, buy, sell))
                    used.add(sell["order_id"])
                    break
        return created

    def _open_session(self, instrument: str, price: Decimal, buy, sell) -> MatchSession:
        now = self.clock()
        session = MatchSession(
            session_id=uuid.uuid4().bytes,
            instrument=instrument,
            price=price,
            role1_key=buy["owner"],
            role2_key=sell["owner"],
            order1=buy["order_id"],
            order2=sell["order_id"],
            bit_width=self.bit_width,
            deadline=now + self.session_timeout,
            identities=(bytes.fromhex(buy["owner"]), bytes.fromhex(sell["owner"])),
        )
        session.last_activity = now
        self.sessions[session.hex_id] = session
        self.store.set_order_state(buy["order_id"], "matched")
        self.store.set_order_state(sell["order_id"], "matched")
        ticket = {
            "session_id": session.hex_id,
            "instrument": instrument,
            "market_price": str(price),
            "role1": session.keys[1],
            "role2": session.keys[2],
            "role1_order": session.orders[1],
            "role2_order": session.orders[2],
            "bit_width": session.bit_width,
            "issued_at": now,
            "confirm_deadline": session.deadline,
        }
        for key in session.keys.values():
            self._send(key, wire.MSG_MATCH_TICKET, ticket, session.hex_id)
        log.info("matched %s: %s vs %s at %s", session.hex_id[:8],
                 session.orders[1][:8], session.orders[2][:8], price)
        return session

    # -- confirmation --

    def _session(self, session_id: str) -> MatchSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSession("no such session")
        return session

    def confirm_match(self, session_id: str, identity_key: str, accept: bool):
        session = self._session(session_id)
        session.role_of(identity_key)  # raises NotYourSession for strangers
        if session.state != "pending":
            raise UnknownSession("session is no longer awaiting confirmation")
        if not accept:
            if identity_key in session.confirmed:
                raise UnknownSession("already confirmed; completion is binding")
            self._void_session(session, "declined", rematch_block=True)
            return
        session.confirmed.add(identity_key)
        if len(session.confirmed) == 2:
            session.state = "active"
            session.last_activity = self.clock()
            for order_id in session.orders.values():
                self.store.set_order_state(order_id, "comparing")
            for role, key in session.keys.items():
                peer = session.keys[2 if role == 1 else 1]
                self._send(key, wire.MSG_SESSION_START, {
                    "session_id": session_id,
                    "role": role,
                    "bit_width": session.bit_width,
                    "market_price": str(session.price),
                    "instrument": session.instrument,
                    "peer": peer,
                }, session_id)

    def _void_session(self, session: MatchSession, reason: str,
                      rematch_block: bool = False, cooldown: float = 0.0):
        """Return both orders to the book without punishment."""
        session.state = "aborted"
        pair = frozenset(session.orders.values())
        if rematch_block:
            self.no_rematch.add(pair)
        for order_id in session.orders.values():
            if self.store.get_order(order_id)["state"] in ("matched", "comparing"):
                self.store.set_order_state(order_id, "open")
                if cooldown:
                    self.cooldowns[order_id] = self.clock() + cooldown
        for key in session.keys.values():
            self._send(key, wire.MSG_ABORT,
                       {"session_id": session.hex_id, "reason": reason},
                       session.hex_id)
        del self.sessions[session.hex_id]

    # -- protocol relaying --

    def relay_message(self, sender: str, envelope: dict):
        """Verify and forward one ROUND or REVEAL envelope."""
        session_id = envelope.get("session_id")
        if not isinstance(session_id, str):
            raise UnknownSession("round envelope lacks a session id")
        session = self._session(session_id)
        sender_role = session.role_of(sender)
        if session.state != "active":
            raise UnknownSession("session is not active")

        payload = wire.payload_bytes(envelope)
        step, claimed_role, claimed_sid = peek_header(payload)
        if claimed_role != sender_role or claimed_sid != session.session_id:
            raise ProtocolOrderViolation(
                "payload claims a role or session the sender does not hold")
        if (envelope["type"] == wire.MSG_REVEAL) != (step == STEP_REVEAL):
            raise ProtocolOrderViolation("envelope type does not match the step")
        try:
            verdict = session.auditor.ingest(payload)
        except BadProof as exc:
            self.punish(MisbehaviorReport(session.session_id, sender,
                                          exc.step, envelope))
            return
        session.last_activity = self.clock()
        self._forward(session.peer_of(sender), envelope)

        if verdict is not None and session.state == "active":
            for key in session.keys.values():
                self._send(key, wire.MSG_VERDICT, {
                    "session_id": session_id,
                    "smaller_role": verdict.smaller_role,
                    "is_strict": verdict.is_strict,
                }, session_id)
        if session.auditor.reveal is not None:
            self.on_verdict(session)

    # -- settlement --

    def on_verdict(self, session: MatchSession):
        """Book updates once the reveal has passed the step-16 check."""
        verdict = session.auditor.verdict
        reveal = session.auditor.reveal
        smaller_order = session.orders[verdict.smaller_role]
        larger_role = 2 if verdict.smaller_role == 1 else 1
        larger_order = session.orders[larger_role]

        self.store.set_order_state(smaller_order, "revealed")
        self.store.set_order_state(smaller_order, "settled")
        # the larger side keeps its residual hidden and goes back in the book
        self.store.set_order_state(larger_order, "open")

        instruction = {
            "session_id": session.hex_id,
            "instrument": session.instrument,
            "price": str(session.price),
            "size": reveal.size,
            "role1": session.keys[1],
            "role2": session.keys[2],
            "settled_order": smaller_order,
            "reopened_order": larger_order,
        }
        for key in session.keys.values():
            self._send(key, wire.MSG_SETTLEMENT_INSTRUCTION, instruction,
                       session.hex_id)
        session.state = "done"
        del self.sessions[session.hex_id]
        log.info("settled %s: %s units @ %s", session.hex_id[:8],
                 reveal.size, session.price)

    # -- punishment --

    def punish(self, report: MisbehaviorReport):
        """Validate evidence, then ban: the accused's signed message must
        replay into the session transcript as a failing proof."""
        session = self.sessions.get(report.session_id.hex())
        if session is None:
            raise InvalidEvidence("report references no live session")
        user = self.store.get_user(report.accused)
        if user is None:
            raise InvalidEvidence("report accuses an unknown key")
        try:
            session.role_of(report.accused)
        except NotYourSession:
            raise InvalidEvidence("accused is not a session party")
        try:
            sender = wire.check_envelope(report.evidence)
        except (BadSignature, DecodeError):
            raise InvalidEvidence("evidence envelope signature is invalid")
        if sender.data.hex() != report.accused:
            raise InvalidEvidence("evidence was not signed by the accused")
        probe = copy.deepcopy(session.auditor)
        try:
            probe.ingest(wire.payload_bytes(report.evidence))
        except BadProof:
            pass  # provably bad: punishable
        except (StaleRound, ProtocolOrderViolation, DecodeError):
            raise InvalidEvidence("evidence is stale or out of order, not disprovable")
        else:
            raise InvalidEvidence("embedded proof verifies; nothing to punish")

        self._ban(report.accused, session, report.round)

    def _ban(self, accused: str, session: MatchSession, step: int):
        self.store.set_user_status(accused, "banned")
        accused_role = session.role_of(accused)
        victim = session.peer_of(accused)
        notice = {
            "session_id": session.hex_id,
            "banned": accused,
            "step": step,
            "reason": "zero-knowledge proof failed verification",
        }
        for key in session.keys.values():
            self._send(key, wire.MSG_PUNISH_NOTICE, notice, session.hex_id)
        # the offender's orders go away; the honest side returns to the book
        for row in self.store.orders_of(accused):
            if row["state"] in ("open", "matched", "comparing"):
                self.store.set_order_state(row["order_id"], "cancelled")
        victim_order = session.orders[2 if accused_role == 1 else 1]
        self.store.set_order_state(victim_order, "open")
        session.state = "aborted"
        del self.sessions[session.hex_id]
        # abort any other live session involving the banned key
        for other in list(self.sessions.values()):
            if accused in other.keys.values():
                self._void_session(other, "counterparty expelled")
        log.warning("banned %s at step %s of %s", accused[:12], step,
                    session.hex_id[:8])

    # -- timeouts --

    def tick(self):
        """Apply confirmation deadlines and session stall timeouts."""
        now = self.clock()
        for session in list(self.sessions.values()):
            if session.state == "pending" and now > session.deadline:
                self._void_session(session, "confirmation deadline passed",
                                   cooldown=TICKET_TIMEOUT_COOLDOWN)
            elif (session.state == "active"
                  and now - session.last_activity > self.session_timeout):
                pending = self._pending_roles(session)
                if not pending:
                    self._void_session(session, "stalled with nothing due")
                    continue
                for role in pending:
                    key = session.keys[role]
                    if self.store.get_user(key)["status"] == "active":
                        self._ban(key, session, self._next_step(session, role))
                        break  # _ban removed the session

    def _next_step(self, session: MatchSession, role: int) -> int:
        auditor = session.auditor
        for step in auditor.expected_steps(role):
            if step not in auditor._seen[role]:
                return step
        return STEP_REVEAL

    def _pending_roles(self, session: MatchSession) -> list[int]:
        """Roles whose next message is due and overdue."""
        auditor = session.auditor
        pending = []
        for role in (1, 2):
            step = self._next_step(session, role)
            if step == STEP_KEYS:
                ready = True
            elif step == STEP_BITS:
                ready = len(auditor.session_pks) == 2
            elif step == STEP_SHUFFLE_FIRST:
                ready = bool(auditor.circuit)
            elif step == STEP_SHUFFLE_SECOND:
                ready = bool(auditor.first_shuffle)
            elif step == STEP_BLIND:
                ready = bool(auditor.final_vectors)
            elif step == STEP_SHARES:
                ready = len(auditor.blinded) == 2
            else:  # reveal
                ready = (auditor.verdict is not None
                         and auditor.verdict.smaller_role == role
                         and auditor.reveal is None)
            if ready:
                pending.append(role)
        return pending

    def price_feed(self, instrument: str) -> Decimal:
        return self.feed.get(instrument)


# --- wire dispatch ----------------------------------------------------------------

class RelayServer:
    """asyncio TCP front end: newline-delimited JSON envelopes."""

    def __init__(self, relay: Relay, host: str = "127.0.0.1", port: int = 7700):
        self.relay = relay
        self.host = host
        self.port = port
        self.connections: dict[str, asyncio.StreamWriter] = {}
        self._server: asyncio.AbstractServer | None = None
        self._tick_task: asyncio.Task | None = None

    async def start(self):
        self._server = await asyncio.start_server(
            self._handle, self.host, self.port, limit=wire.STREAM_LIMIT)
        self._tick_task = asyncio.create_task(self._ticker())
        addr = self._server.sockets[0].getsockname()
        log.info("relay listening on %s:%s", addr[0], addr[1])

    async def stop(self):
        if self._tick_task:
            self._tick_task.cancel()
        if self._server:
            self._server.close()
            await self._server.wait_closed()
        for writer in list(self.connections.values()):
            writer.close()
        self.relay.store.close()

    async def _ticker(self):
        while True:
            await asyncio.sleep(1.0)
            self.relay.tick()
            self.relay.match_orders()
            await self._flush()

    async def _flush(self):
        for recipient, envelope in self.relay.outbox:
            writer = self.connections.get(recipient)
            if writer is None or writer.is_closing():
                continue
            writer.write(wire.encode_line(envelope))
            try:
                await writer.drain()
            except ConnectionError:
                pass
        self.relay.outbox.clear()

    async def _handle(self, reader: asyncio.StreamReader,
                      writer: asyncio.StreamWriter):
        bound_key: str | None = None
        try:
            while True:
                line = await reader.readline()
                if not line:
                    break
                try:
                    envelope = wire.decode_line(line)
                    sender = wire.check_envelope(envelope)
                except (DecodeError, BadSignature) as exc:
                    writer.write(wire.encode_line(self._anon_error(str(exc))))
                    await writer.drain()
                    continue
                sender_hex = sender.data.hex()
                if bound_key is None:
                    bound_key = sender_hex
                    self.connections[sender_hex] = writer
                elif bound_key != sender_hex:
                    writer.write(wire.encode_line(
                        self._anon_error("one identity per connection")))
                    await writer.drain()
                    continue
                self._dispatch(sender_hex, envelope)
                self.relay.match_orders()
                await self._flush()
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            if bound_key and self.connections.get(bound_key) is writer:
                del self.connections[bound_key]
            writer.close()

    def _anon_error(self, detail: str) -> dict:
        relay = self.relay
        relay._seq += 1
        return wire.make_envelope(wire.MSG_ERROR,
                                  {"code": "BadSignature", "detail": detail},
                                  relay.sk, relay.pk, relay._seq)

    def _dispatch(self, sender: str, envelope: dict):
        relay = self.relay
        msg_type = envelope["type"]
        payload = envelope.get("payload", {})
        try:
            if msg_type == wire.MSG_REGISTER:
                record = relay.register(sender, str(payload.get("display_name", "")))
                relay._send(sender, wire.MSG_REGISTER, record)
                return
            if msg_type == wire.MSG_ORDER:
                relay._require_active(sender)
                if payload.get("action") == "cancel":
                    ack = relay.cancel_order(sender, str(payload.get("order_id")))
                else:
                    order = relay.submit_order(sender, payload)
                    ack = {"order_id": order["order_id"], "state": order["state"]}
                if "client_ref" in payload:
                    ack["client_ref"] = payload["client_ref"]
                relay._send(sender, wire.MSG_ORDER_ACK, ack)
                return
            if msg_type == wire.MSG_CONFIRM:
                relay._require_active(sender)
                relay.confirm_match(str(envelope.get("session_id")), sender,
                                    bool(payload.get("accept")))
                return
            if msg_type in (wire.MSG_ROUND, wire.MSG_REVEAL):
                relay._require_active(sender)
                relay.relay_message(sender, envelope)
                return
            relay.send_error(sender, "UnsupportedType", msg_type)
        except (DuplicateKey, BannedKey, UnknownUser, SameAssetPair,
                UnknownOrder, UnknownSession, NotYourSession, StaleRound,
                StalePrice, BadSignature, DecodeError,
                ProtocolOrderViolation) as exc:
            relay.send_error(sender, type(exc).__name__, str(exc),
                             envelope.get("session_id"))


def parse_price_sources(entries: list[str]) -> dict[str, str]:
    sources = {}
    for entry in entries:
        if "=" not in entry:
            raise ValueError(f"price source {entry!r} must be INSTRUMENT=SOURCE")
        instrument, source = entry.split("=", 1)
        sources[instrument] = source
    return sources


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="darkpool-relay",
        description="Dark pool operator: matches hidden-size orders and "
                    "relays the size-comparison protocol.")
    parser.add_argument("--listen", default="127.0.0.1:7700",
                        help="host:port to listen on")
    parser.add_argument("--data", default="darkpool-relay.db",
                        help="path of the persistent store")
    parser.add_argument("--price", action="append", default=[],
                        metavar="INSTRUMENT=SOURCE",
                        help="price source, e.g. BTC/USD=static:100 or "
                             "BTC/USD=url:http://host/price (repeatable)")
    parser.add_argument("--price-max-age", type=float, default=30.0,
                        help="seconds a fetched price stays valid")
    parser.add_argument("--session-timeout", type=float, default=60.0,
                        help="seconds before a silent party is punished")
    parser.add_argument("--bit-width", type=int, default=16,
                        help="order size bits (sizes below 2^k)")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s")

    host, _, port = args.listen.rpartition(":")
    feed = PriceFeed(parse_price_sources(args.price), args.price_max_age)
    store = Store(args.data)
    relay = Relay(store, feed, bit_width=args.bit_width,
                  session_timeout=args.session_timeout)
    server = RelayServer(relay, host or "127.0.0.1", int(port))

    async def run():
        await server.start()
        try:
            await asyncio.Event().wait()
        finally:
            await server.stop()

    try:
        asyncio.run(run())
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
