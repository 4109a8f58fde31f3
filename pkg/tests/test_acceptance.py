"""Acceptance suite: one test per release criterion.

Each test prints a single [PASS]/[FAIL] line (run with ``pytest -s``).
The heavy protocol sweeps fan out over a process pool; every individual
run is still a complete two-party protocol execution.
"""

import asyncio
import json
import multiprocessing
import time
from collections import Counter

import pytest

from darkpool import wire
from darkpool.compare import (
    CompareConfig,
    Reveal,
    gamma,
    run_local_comparison,
    size_bits,
    start_session,
    verify_reveal,
)
from darkpool.elgamal import decrypt_point, discrete_log_small, encrypt, keygen
from darkpool.errors import MalformedStatement
from darkpool.group import GENERATOR, RandomSource, Scalar
from darkpool.shuffle import ShuffleInstance, prove_shuffle, shuffle, verify_shuffle
from darkpool import sigma

from net_harness import Stack, free_port, wait_for, run


def report(name: str, ok: bool, extra: str = ""):
    tag = "PASS" if ok else "FAIL"
    print(f"[{tag}] {name}" + (f" ({extra})" if extra else ""))
    assert ok, name


# --- criterion: comparison correctness, all 225 pairs at k=4 -------------------------

def _run_pair(args):
    s1, s2 = args
    verdict, reveal, _, _ = run_local_comparison(s1, s2, 4)
    expected_role = 2 if s1 > s2 else 1
    ok = (verdict.smaller_role == expected_role
          and reveal.size == min(s1, s2)
          and verdict.is_strict == (s1 > s2))
    return s1, s2, ok


def test_comparison_correctness_exhaustive_k4():
    pairs = [(s1, s2) for s1 in range(1, 16) for s2 in range(1, 16)]
    t0 = time.monotonic()
    with multiprocessing.Pool(2) as pool:
        results = pool.map(_run_pair, pairs, chunksize=8)
    elapsed = time.monotonic() - t0
    failures = [(s1, s2) for s1, s2, ok in results if not ok]
    report("comparison correctness: 225/225 pairs, k=4",
           not failures and elapsed < 60.0,
           f"{elapsed:.1f}s, failures={failures[:5]}")


# --- criterion: printed-weight discrepancy is real and the fix removes it -------------

def test_paper_weight_discrepancy_reproduction():
    printed_false: list[tuple] = []
    corrected_false: list[tuple] = []
    for k in (2, 3, 4):
        for s1 in range(1 << k):
            for s2 in range(1 << k):
                b1, b2 = size_bits(s1, k), size_bits(s2, k)
                printed_zero = any(
                    gamma(j, b1, b2, k, paper_compat=True) == 0
                    for j in range(1, k + 1))
                corrected_zero = any(
                    gamma(j, b1, b2, k, paper_compat=False) == 0
                    for j in range(1, k + 1))
                if printed_zero and s1 < s2:
                    printed_false.append((k, s1, s2))
                if corrected_zero and not s1 > s2:
                    corrected_false.append((k, s1, s2))
    report("printed 2^d-2 weights misfire, 2^d weights never do",
           bool(printed_false) and not corrected_false,
           f"printed-weight false zeros: {len(printed_false)}, "
           f"e.g. {printed_false[0]}")


# --- criterion: sigma protocol suites ---------------------------------------------------

def test_sigma_completeness_1000_each():
    rng = RandomSource(seed=90001)
    ctx = b"acceptance"
    bad = 0
    for _ in range(1000):
        x = rng.scalar_nonzero()
        p = GENERATOR.mul(x)
        bad += not sigma.verify_dlog(
            sigma.prove_dlog(x, GENERATOR, p, ctx, rng), GENERATOR, p, ctx)
    for _ in range(1000):
        x = rng.scalar_nonzero()
        n = 2 + (rng.scalar().value % 3)
        bases = [GENERATOR.mul(rng.scalar_nonzero()) for _ in range(n)]
        points = [g.mul(x) for g in bases]
        bad += not sigma.verify_eq_logs(
            sigma.prove_eq_logs(x, bases, points, ctx, rng), bases, points, ctx)
    kp = keygen(rng)
    for i in range(1000):
        m, r = i % 2, rng.scalar_nonzero()
        ct = encrypt(Scalar(m), r, kp.pk)
        bad += not sigma.verify_bit(
            sigma.prove_bit(m, r, ct, kp.pk, ctx, rng), ct, kp.pk, ctx)
    for i in range(1000):
        msg = rng.bytes(32)
        bad += not sigma.verify_sig(kp.pk, msg, sigma.sign(kp.sk, msg, rng))
    report("sigma completeness: 1000 instances per proof type", bad == 0,
           f"failures={bad}")


def test_sigma_tamper_fuzz_and_replay():
    rng = RandomSource(seed=90002)
    ctx, other_ctx = b"ctx-A", b"ctx-B"
    accepted = 0
    total = 0

    x = rng.scalar_nonzero()
    p = GENERATOR.mul(x)
    dlog = sigma.prove_dlog(x, GENERATOR, p, ctx, rng)
    blob = dlog.serialize()
    for i in range(len(blob)):
        total += 1
        mutated = blob[:i] + bytes([blob[i] ^ 0x01]) + blob[i + 1:]
        try:
            accepted += sigma.verify_dlog(
                sigma.DlogProof.deserialize(mutated), GENERATOR, p, ctx)
        except Exception:
            pass

    bases = [GENERATOR.mul(rng.scalar_nonzero()) for _ in range(2)]
    points = [g.mul(x) for g in bases]
    eq = sigma.prove_eq_logs(x, bases, points, ctx, rng)
    blob = eq.serialize()
    for i in range(len(blob)):
        total += 1
        mutated = blob[:i] + bytes([blob[i] ^ 0x01]) + blob[i + 1:]
        try:
            accepted += sigma.verify_eq_logs(
                sigma.EqLogProof.deserialize(mutated), bases, points, ctx)
        except Exception:
            pass

    kp = keygen(rng)
    r = rng.scalar_nonzero()
    ct = encrypt(Scalar(1), r, kp.pk)
    bit = sigma.prove_bit(1, r, ct, kp.pk, ctx, rng)
    blob = bit.serialize()
    for i in range(len(blob)):
        total += 1
        mutated = blob[:i] + bytes([blob[i] ^ 0x01]) + blob[i + 1:]
        try:
            accepted += sigma.verify_bit(
                sigma.BitProof.deserialize(mutated), ct, kp.pk, ctx)
        except Exception:
            pass

    sig = sigma.sign(kp.sk, b"message", rng)
    blob = sig.serialize()
    for i in range(len(blob)):
        total += 1
        mutated = blob[:i] + bytes([blob[i] ^ 0x01]) + blob[i + 1:]
        try:
            accepted += sigma.verify_sig(
                kp.pk, b"message", sigma.Signature.deserialize(mutated))
        except Exception:
            pass

    # cross-context replay: 100 fresh instances per proof type
    replays = 0
    for _ in range(100):
        x2 = rng.scalar_nonzero()
        p2 = GENERATOR.mul(x2)
        replays += sigma.verify_dlog(
            sigma.prove_dlog(x2, GENERATOR, p2, ctx, rng), GENERATOR, p2, other_ctx)
        points2 = [g.mul(x2) for g in bases]
        replays += sigma.verify_eq_logs(
            sigma.prove_eq_logs(x2, bases, points2, ctx, rng), bases, points2, other_ctx)
        r2 = rng.scalar_nonzero()
        ct2 = encrypt(Scalar(0), r2, kp.pk)
        replays += sigma.verify_bit(
            sigma.prove_bit(0, r2, ct2, kp.pk, ctx, rng), ct2, kp.pk, other_ctx)
    report("sigma tamper fuzz and cross-context replay all rejected",
           accepted == 0 and replays == 0,
           f"{total} byte flips, 300 replays")


# --- criterion: shuffle suite -----------------------------------------------------------

def _shuffle_completeness(args):
    seed, k = args
    rng = RandomSource(seed=seed)
    kp = keygen(rng)
    inputs = [encrypt(Scalar(i % 16), rng.scalar_nonzero(), kp.pk)
              for i in range(k)]
    outputs, witness = shuffle(inputs, kp.pk, rng)
    instance = ShuffleInstance(inputs, outputs, kp.pk)
    proof = prove_shuffle(instance, witness, b"acc", rng)
    return verify_shuffle(instance, proof, b"acc")


def test_shuffle_multiset_preservation_exhaustive():
    rng = RandomSource(seed=90003)
    kp = keygen(rng)
    bad = 0
    for k in range(1, 9):
        for trial in range(4):
            values = [rng.scalar().value % 16 for _ in range(k)]
            inputs = [encrypt(Scalar(v), rng.scalar_nonzero(), kp.pk)
                      for v in values]
            outputs, _ = shuffle(inputs, kp.pk, rng)
            got = Counter(
                discrete_log_small(decrypt_point(ct, kp.sk), 16)
                for ct in outputs)
            bad += got != Counter(values)
    report("shuffle preserves plaintext multisets for k <= 8", bad == 0)


def test_shuffle_proof_completeness_100_per_size():
    jobs = []
    seed = 70000
    for k in (1, 2, 4, 8, 64):
        for _ in range(100):
            seed += 1
            jobs.append((seed, k))
    t0 = time.monotonic()
    with multiprocessing.Pool(2) as pool:
        results = pool.map(_shuffle_completeness, jobs, chunksize=4)
    elapsed = time.monotonic() - t0
    report("shuffle proof completeness: 100 instances per k in {1,2,4,8,64}",
           all(results), f"{elapsed:.0f}s")


def test_shuffle_soundness_probes():
    rng = RandomSource(seed=90004)
    kp, other = keygen(rng), keygen(rng)
    inputs = [encrypt(Scalar(v), rng.scalar_nonzero(), kp.pk) for v in range(8)]
    rejected = 0
    trials = 0
    for _ in range(25):
        outputs, witness = shuffle(inputs, kp.pk, rng)
        instance = ShuffleInstance(inputs, outputs, kp.pk)
        proof = prove_shuffle(instance, witness, b"acc", rng)

        swapped = list(outputs)
        swapped[0], swapped[3] = swapped[3], swapped[0]
        trials += 1
        rejected += not verify_shuffle(
            ShuffleInstance(inputs, swapped, kp.pk), proof, b"acc")

        substituted = list(outputs)
        substituted[rng.scalar().value % 8] = encrypt(
            Scalar(13), rng.scalar_nonzero(), kp.pk)
        trials += 1
        rejected += not verify_shuffle(
            ShuffleInstance(inputs, substituted, kp.pk), proof, b"acc")

        duplicated = list(outputs)
        duplicated[1] = duplicated[0]
        trials += 1
        rejected += not verify_shuffle(
            ShuffleInstance(inputs, duplicated, kp.pk), proof, b"acc")

        trials += 1
        rejected += not verify_shuffle(
            ShuffleInstance(inputs, outputs, other.pk), proof, b"acc")

        trials += 1
        try:
            ShuffleInstance(inputs, outputs[:-1], kp.pk)
        except MalformedStatement:
            rejected += 1
    report("shuffle soundness probes all rejected", rejected == trials,
           f"{rejected}/{trials}")


# --- criterion: reveal binding ----------------------------------------------------------

def test_reveal_binding_rejects_every_wrong_size():
    rng_seed = 91000
    bad = 0
    checked = 0
    for trial in range(20):
        s1 = 1 + (trial * 7) % 15
        s2 = 1 + (trial * 11) % 15
        verdict, reveal, sess1, sess2 = run_local_comparison(
            s1, s2, 4,
            rng1=RandomSource(seed=rng_seed + 2 * trial),
            rng2=RandomSource(seed=rng_seed + 2 * trial + 1))
        watcher = sess1 if verdict.smaller_role == 2 else sess2
        cts = watcher.peer_bit_cts
        combined = watcher.combined_key
        if not verify_reveal(reveal, cts, combined):
            bad += 1
        for wrong in range(1, 16):
            if wrong == reveal.size:
                continue
            checked += 1
            if verify_reveal(Reveal(wrong, reveal.aggregate_randomness),
                             cts, combined):
                bad += 1
    report("reveal binding: every wrong size in [1,16) rejected, 20 sessions",
           bad == 0, f"{checked} wrong sizes checked")


# --- criterion: relay integration --------------------------------------------------------

def test_relay_integration_full_flow():
    async def main():
        stack = Stack(bit_width=16)
        await stack.start_relay()
        try:
            a = await stack.start_daemon("alice")
            b = await stack.start_daemon("bob")
            await a.register()
            await b.register()
            order_a = await a.place_order("BTC", "USD", 5)
            order_b = await b.place_order("USD", "BTC", 3)
            await wait_for(lambda: a.decisions and b.decisions, what="tickets")
            sid = next(iter(a.decisions))
            a.decide(sid, True)
            b.decide(sid, True)
            await wait_for(lambda: a.fills and b.fills, timeout=25, what="fills")

            assert a.fills[0]["size"] == 3
            assert a.fills[0]["price"] == "100.00000000"
            oa = a.orders[order_a["order_id"]]
            assert oa.status == "open" and oa.residual == 2
            assert stack.relay.store.get_order(order_a["order_id"])["state"] == "open"
            assert stack.relay.store.get_order(order_b["order_id"])["state"] == "settled"

            for daemon, size in ((a, 5), (b, 3)):
                needle = size.to_bytes(8, "big").hex().encode()
                for direction, line in daemon.wire_log:
                    env = json.loads(line)
                    if env["type"] == wire.MSG_REVEAL:
                        break
                    assert needle not in line
                    assert b'"size"' not in line

            # the operator's persisted state knows no sizes either
            with open(stack.data_path, "rb") as fh:
                db_bytes = fh.read()
            assert b"size" not in db_bytes
            cols = [r[1] for r in stack.relay.store.db.execute(
                "PRAGMA table_info(orders)")]
            assert "size" not in cols
        finally:
            await stack.stop()

    t0 = time.monotonic()
    run(main())
    elapsed = time.monotonic() - t0
    report("relay integration: 5 vs 3 fills 3, residual 2 reopened, "
           "no size bytes before reveal", elapsed < 30.0, f"{elapsed:.1f}s")


# --- criterion: punishment through the full stack ------------------------------------------

class RawParty:
    """Minimal wire-speaking client for fault injection."""

    def __init__(self, seed):
        self.rng = RandomSource(seed=seed)
        self.kp = keygen(self.rng)
        self.hex = self.kp.pk.data.hex()
        self.seq = 0
        self.reader = None
        self.writer = None

    async def connect(self, port):
        self.reader, self.writer = await asyncio.open_connection(
            "127.0.0.1", port, limit=wire.STREAM_LIMIT)

    async def send(self, msg_type, payload, session_id=None):
        self.seq += 1
        env = wire.make_envelope(msg_type, payload, self.kp.sk, self.kp.pk,
                                 self.seq, session_id, self.rng)
        self.writer.write(wire.encode_line(env))
        await self.writer.drain()

    async def recv_until(self, *types, timeout=20.0):
        async def read():
            while True:
                line = await self.reader.readline()
                if not line:
                    raise ConnectionError("closed")
                env = wire.decode_line(line)
                if env["type"] in types:
                    return env
        return await asyncio.wait_for(read(), timeout)

    def close(self):
        if self.writer:
            self.writer.close()


def test_punishment_ban_survives_restart():
    async def main():
        stack = Stack(bit_width=8)
        await stack.start_relay()
        honest = await stack.start_daemon("honest", auto_confirm=True)
        await honest.register()
        honest_order = await honest.place_order("BTC", "USD", 5)

        evil = RawParty(seed=66601)
        await evil.connect(stack.relay_port)
        await evil.send(wire.MSG_REGISTER, {"display_name": "evil"})
        await evil.recv_until(wire.MSG_REGISTER)
        await evil.send(wire.MSG_ORDER, {"buy_asset": "USD", "sell_asset": "BTC"})
        await evil.recv_until(wire.MSG_ORDER_ACK)

        ticket_env = await evil.recv_until(wire.MSG_MATCH_TICKET)
        sid = ticket_env["payload"]["session_id"]
        await evil.send(wire.MSG_CONFIRM, {"accept": True}, sid)
        start_env = await evil.recv_until(wire.MSG_SESSION_START)
        role = start_env["payload"]["role"]
        peer = start_env["payload"]["peer"]

        me, them = bytes.fromhex(evil.hex), bytes.fromhex(peer)
        ids = (me, them) if role == 1 else (them, me)
        config = CompareConfig(8, role, bytes.fromhex(sid), identities=ids)
        session, first = start_session(config, 3, evil.rng)
        await evil.send(wire.MSG_ROUND, wire.hex_payload(first), sid)

        peer_keys = await evil.recv_until(wire.MSG_ROUND)
        outbound, _ = session.handle_message(wire.payload_bytes(peer_keys))
        bits_payload = bytearray(outbound[0])
        bits_payload[-1] ^= 0x01  # corrupt the last bit proof
        await evil.send(wire.MSG_ROUND, wire.hex_payload(bytes(bits_payload)), sid)

        notice = await evil.recv_until(wire.MSG_PUNISH_NOTICE)
        assert notice["payload"]["banned"] == evil.hex
        evil.close()

        await wait_for(
            lambda: stack.relay.store.get_user(evil.hex)["status"] == "banned",
            what="ban recorded")
        await wait_for(
            lambda: stack.relay.store.get_order(
                honest_order["order_id"])["state"] == "open",
            what="honest order reopened")

        # restart the relay on the same data file and port
        await stack.stop_relay()
        await asyncio.sleep(0.1)
        await stack.start_relay()

        assert stack.relay.store.get_user(evil.hex)["status"] == "banned"
        evil2 = RawParty(seed=66601)  # same identity key
        assert evil2.hex == notice["payload"]["banned"]
        await evil2.connect(stack.relay_port)
        await evil2.send(wire.MSG_REGISTER, {"display_name": "evil again"})
        err = await evil2.recv_until(wire.MSG_ERROR)
        assert err["payload"]["code"] == "BannedKey"
        evil2.close()
        assert stack.relay.store.get_order(
            honest_order["order_id"])["state"] == "open"
        await stack.stop()

    run(main())
    report("punishment: invalid bit proof banned, ban survives restart, "
           "honest order open", True)


# --- criterion: k=64 performance over loopback ----------------------------------------------

def test_k64_comparison_under_30s():
    async def main():
        stack = Stack(bit_width=64)
        await stack.start_relay()
        try:
            a = await stack.start_daemon("alice", auto_confirm=True)
            b = await stack.start_daemon("bob", auto_confirm=True)
            await a.register()
            await b.register()
            await a.place_order("BTC", "USD", 123_456_789_012)
            await b.place_order("USD", "BTC", 987_654_321)
            await wait_for(lambda: a.fills and b.fills, timeout=29,
                           what="k=64 fills")
            assert a.fills[0]["size"] == 987_654_321
        finally:
            await stack.stop()

    t0 = time.monotonic()
    run(main())
    elapsed = time.monotonic() - t0
    report("performance: k=64 comparison end-to-end over loopback",
           elapsed < 30.0, f"{elapsed:.1f}s")
