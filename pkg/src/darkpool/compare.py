"""Two-party hidden-size comparison engine.

Message-driven state machine for the matched traders. Transport-agnostic:
it consumes and produces binary round payloads; signing and delivery are
the wire layer's job. A :class:`SessionAuditor` replays both directions of
a session from the payloads alone, which is how the relay verifies every
proof inline without learning anything the transcript doesn't already say.

Stages, in paper-step numbering (roles i in {1, 2}, bit slot j in [1, k]):

- 5  keys:    session public key plus a dlog proof; both sides
- 7  bits:    ElGamal bit encryptions, each with a 0-or-1 proof; both sides
- 9  shuffle: role 1 permutes + re-randomizes the circuit, with proof
- 10 shuffle: role 2 shuffles role 1's output, with proof
- 11 blind:   each side's secret scalar multiple of the final circuit
- 12 shares:  decryption shares, with equal-log proofs
- 14 verdict: identity test on the combined result (no message)
- 15 reveal:  the smaller size and its aggregate bit randomness
"""

from __future__ import annotations

import time

from .elgamal import (
    CIPHERTEXT_LEN,
    CombinedKey,
    ElGamalCiphertext,
    KeyPair,
    deserialize_ciphertext,
    keygen,
    serialize_ciphertext,
)
from .errors import (
    BadProof,
    DecodeError,
    InvalidOrderSize,
    ProtocolOrderViolation,
    SessionExpired,
    StaleRound,
)
from .group import (
    DEFAULT_RNG,
    GENERATOR,
    IDENTITY,
    POINT_LEN,
    SCALAR_LEN,
    GroupPoint,
    RandomSource,
    Scalar,
    deserialize_point,
    deserialize_scalar,
    serialize_point,
    serialize_scalar,
)
from .shuffle import (
    ShuffleInstance,
    ShuffleProof,
    prove_shuffle,
    shuffle,
    verify_shuffle,
)
from . import sigma

STEP_KEYS = 5
STEP_BITS = 7
STEP_SHUFFLE_FIRST = 9
STEP_SHUFFLE_SECOND = 10
STEP_BLIND = 11
STEP_SHARES = 12
STEP_VERDICT = 14
STEP_REVEAL = 15

STEP_LABELS = {
    STEP_KEYS: "keys",
    STEP_BITS: "encrypted bits",
    STEP_SHUFFLE_FIRST: "shuffle",
    STEP_SHUFFLE_SECOND: "shuffle",
    STEP_BLIND: "blind",
    STEP_SHARES: "decrypt",
    STEP_VERDICT: "verdict",
    STEP_REVEAL: "reveal",
}

_PAYLOAD_VERSION = 1


# --- circuit plaintext reference ----------------------------------------------

def _weight(d: int, paper_compat: bool) -> int:
    """Higher-bit weight for the comparison circuit.

    The corrected weight is 2^d: signed sums of distinct powers of two
    can never land on {0, -1, -2}, so the base term is cancelled exactly
    when bit j is the most significant disagreement. The printed 2^d - 2
    variant is kept for fidelity experiments; it admits false
    cancellations (see tests for a concrete pair).
    """
    return (1 << d) - 2 if paper_compat else (1 << d)


def size_bits(s: int, k: int) -> list[int]:
    """Binary decomposition, bit 1 (index 0) least significant."""
    return [(s >> j) & 1 for j in range(k)]


def gamma(j: int, bits1: list[int], bits2: list[int], k: int,
          paper_compat: bool = False) -> int:
    """Plaintext of circuit slot j: zero iff bit j proves s1 > s2.

    gamma_j = 1 + b2_j - b1_j + sum_{d > j} w_d * (b1_d - b2_d),
    with j and d 1-based and bit 1 least significant.
    """
    if not 1 <= j <= k:
        raise ValueError("bit index out of range")
    total = 1 + bits2[j - 1] - bits1[j - 1]
    for d in range(j + 1, k + 1):
        total += _weight(d, paper_compat) * (bits1[d - 1] - bits2[d - 1])
    return total


def build_circuit(cts1: list[ElGamalCiphertext], cts2: list[ElGamalCiphertext],
                  k: int, paper_compat: bool = False) -> list[ElGamalCiphertext]:
    """Homomorphic evaluation of gamma over both parties' bit ciphertexts.

    Slot j encrypts gamma(j) under the combined key; the constant term G
    enters the first component only. Deterministic, so both parties (and
    the relay) derive byte-identical circuits from the same inputs.
    """
    if len(cts1) != k or len(cts2) != k:
        raise ProtocolOrderViolation("circuit needs both full bit-ciphertext vectors")
    one = ElGamalCiphertext(GENERATOR, IDENTITY)
    suffix = ElGamalCiphertext(IDENTITY, IDENTITY)
    circuit: list[ElGamalCiphertext | None] = [None] * k
    for j in range(k, 0, -1):
        circuit[j - 1] = one + cts2[j - 1] - cts1[j - 1] + suffix
        if j > 1:
            w = Scalar(_weight(j, paper_compat))
            suffix = suffix + (cts1[j - 1] - cts2[j - 1]).mul(w)
    return circuit  # type: ignore[return-value]


# --- round payloads -----------------------------------------------------------

class _Writer:
    def __init__(self):
        self.parts: list[bytes] = []

    def u8(self, v: int):
        self.parts.append(bytes([v]))

    def u16(self, v: int):
        self.parts.append(v.to_bytes(2, "big"))

    def u64(self, v: int):
        self.parts.append(v.to_bytes(8, "big"))

    def raw(self, b: bytes):
        self.parts.append(b)

    def blob(self, b: bytes):
        self.parts.append(len(b).to_bytes(4, "big"))
        self.parts.append(b)

    def done(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def _take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise DecodeError("payload truncated")
        out = self.data[self.off: self.off + n]
        self.off += n
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u16(self) -> int:
        return int.from_bytes(self._take(2), "big")

    def u64(self) -> int:
        return int.from_bytes(self._take(8), "big")

    def raw(self, n: int) -> bytes:
        return self._take(n)

    def blob(self) -> bytes:
        n = int.from_bytes(self._take(4), "big")
        if n > len(self.data):
            raise DecodeError("payload blob length corrupt")
        return self._take(n)

    def finish(self) -> None:
        if self.off != len(self.data):
            raise DecodeError("payload has trailing bytes")


def _pack_header(step: int, role: int, session_id: bytes) -> _Writer:
    w = _Writer()
    w.u8(_PAYLOAD_VERSION)
    w.u8(step)
    w.u8(role)
    w.blob(session_id)
    return w


def peek_header(payload: bytes) -> tuple[int, int, bytes]:
    """(step, role, session_id) without parsing the body."""
    r = _Reader(payload)
    if r.u8() != _PAYLOAD_VERSION:
        raise DecodeError("unknown payload version")
    step = r.u8()
    role = r.u8()
    session_id = r.blob()
    return step, role, session_id


class KeysPayload:
    step = STEP_KEYS

    def __init__(self, role: int, session_id: bytes, pk: GroupPoint,
                 proof: sigma.DlogProof):
        self.role, self.session_id, self.pk, self.proof = role, session_id, pk, proof

    def pack(self) -> bytes:
        w = _pack_header(self.step, self.role, self.session_id)
        w.raw(serialize_point(self.pk))
        w.raw(self.proof.serialize())
        return w.done()


class BitsPayload:
    step = STEP_BITS

    def __init__(self, role: int, session_id: bytes,
                 cts: list[ElGamalCiphertext], proofs: list[sigma.BitProof]):
        self.role, self.session_id, self.cts, self.proofs = role, session_id, cts, proofs

    def pack(self) -> bytes:
        w = _pack_header(self.step, self.role, self.session_id)
        w.u16(len(self.cts))
        for ct in self.cts:
            w.raw(serialize_ciphertext(ct))
        for proof in self.proofs:
            w.raw(proof.serialize())
        return w.done()


class ShufflePayload:
    def __init__(self, step: int, role: int, session_id: bytes,
                 outputs: list[ElGamalCiphertext], proof: ShuffleProof):
        self.step, self.role, self.session_id = step, role, session_id
        self.outputs, self.proof = outputs, proof

    def pack(self) -> bytes:
        w = _pack_header(self.step, self.role, self.session_id)
        w.u16(len(self.outputs))
        for ct in self.outputs:
            w.raw(serialize_ciphertext(ct))
        w.blob(self.proof.data)
        return w.done()


class BlindPayload:
    step = STEP_BLIND

    def __init__(self, role: int, session_id: bytes,
                 blinded: list[ElGamalCiphertext], proofs: list[sigma.EqLogProof]):
        self.role, self.session_id, self.blinded, self.proofs = role, session_id, blinded, proofs

    def pack(self) -> bytes:
        w = _pack_header(self.step, self.role, self.session_id)
        w.u16(len(self.blinded))
        for ct in self.blinded:
            w.raw(serialize_ciphertext(ct))
        for proof in self.proofs:
            w.blob(proof.serialize())
        return w.done()


class SharesPayload:
    step = STEP_SHARES

    def __init__(self, role: int, session_id: bytes,
                 shares: list[GroupPoint], proofs: list[sigma.EqLogProof]):
        self.role, self.session_id, self.shares, self.proofs = role, session_id, shares, proofs

    def pack(self) -> bytes:
        w = _pack_header(self.step, self.role, self.session_id)
        w.u16(len(self.shares))
        for p in self.shares:
            w.raw(serialize_point(p))
        for proof in self.proofs:
            w.blob(proof.serialize())
        return w.done()


class RevealPayload:
    step = STEP_REVEAL

    def __init__(self, role: int, session_id: bytes, size: int,
                 aggregate_randomness: Scalar):
        self.role, self.session_id = role, session_id
        self.size, self.aggregate_randomness = size, aggregate_randomness

    def pack(self) -> bytes:
        w = _pack_header(self.step, self.role, self.session_id)
        w.u64(self.size)
        w.raw(serialize_scalar(self.aggregate_randomness))
        return w.done()


def parse_payload(payload: bytes):
    """Decode any round payload into its typed form."""
    r = _Reader(payload)
    if r.u8() != _PAYLOAD_VERSION:
        raise DecodeError("unknown payload version")
    step = r.u8()
    role = r.u8()
    if role not in (1, 2):
        raise DecodeError("role must be 1 or 2")
    session_id = r.blob()

    if step == STEP_KEYS:
        pk = deserialize_point(r.raw(POINT_LEN))
        proof = sigma.DlogProof.deserialize(r.raw(POINT_LEN + SCALAR_LEN))
        r.finish()
        return KeysPayload(role, session_id, pk, proof)

    if step == STEP_BITS:
        k = r.u16()
        cts = [deserialize_ciphertext(r.raw(CIPHERTEXT_LEN)) for _ in range(k)]
        proofs = [
            sigma.BitProof.deserialize(r.raw(4 * POINT_LEN + 4 * SCALAR_LEN))
            for _ in range(k)
        ]
        r.finish()
        return BitsPayload(role, session_id, cts, proofs)

    if step in (STEP_SHUFFLE_FIRST, STEP_SHUFFLE_SECOND):
        k = r.u16()
        outputs = [deserialize_ciphertext(r.raw(CIPHERTEXT_LEN)) for _ in range(k)]
        proof = ShuffleProof(r.blob())
        r.finish()
        return ShufflePayload(step, role, session_id, outputs, proof)

    if step == STEP_BLIND:
        k = r.u16()
        blinded = [deserialize_ciphertext(r.raw(CIPHERTEXT_LEN)) for _ in range(k)]
        proofs = [sigma.EqLogProof.deserialize(r.blob()) for _ in range(k)]
        r.finish()
        return BlindPayload(role, session_id, blinded, proofs)

    if step == STEP_SHARES:
        k = r.u16()
        shares = [deserialize_point(r.raw(POINT_LEN)) for _ in range(k)]
        proofs = [sigma.EqLogProof.deserialize(r.blob()) for _ in range(k)]
        r.finish()
        return SharesPayload(role, session_id, shares, proofs)

    if step == STEP_REVEAL:
        size = r.u64()
        agg = deserialize_scalar(r.raw(SCALAR_LEN))
        r.finish()
        return RevealPayload(role, session_id, size, agg)

    raise DecodeError(f"unknown protocol step {step}")


# --- configuration and results --------------------------------------------------

class CompareConfig:
    """Session parameters. Roles come from the relay's match ticket."""

    def __init__(self, bit_width: int, role: int, session_id: bytes,
                 paper_compat_weights: bool = False,
                 identities: tuple[bytes, bytes] = (b"", b""),
                 timeout_seconds: float = 60.0):
        if not 1 <= bit_width <= 64:
            raise ValueError("bit width must be in [1, 64]")
        if role not in (1, 2):
            raise ValueError("role must be 1 or 2")
        if not session_id:
            raise ValueError("session id must be non-empty")
        self.bit_width = bit_width
        self.role = role
        self.session_id = bytes(session_id)
        self.paper_compat_weights = paper_compat_weights
        self.identities = (bytes(identities[0]), bytes(identities[1]))
        self.timeout_seconds = timeout_seconds


class CompareVerdict:
    """smaller_role reveals. is_strict=False means compared as s1 <= s2."""

    __slots__ = ("smaller_role", "is_strict")

    def __init__(self, smaller_role: int, is_strict: bool):
        self.smaller_role = smaller_role
        self.is_strict = is_strict

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CompareVerdict)
            and self.smaller_role == other.smaller_role
            and self.is_strict == other.is_strict
        )

    def __repr__(self) -> str:
        op = "<" if self.is_strict else "<="
        other = 2 if self.smaller_role == 1 else 1
        return f"CompareVerdict(s{self.smaller_role} {op} s{other})"


class Reveal:
    __slots__ = ("size", "aggregate_randomness")

    def __init__(self, size: int, aggregate_randomness: Scalar):
        self.size = size
        self.aggregate_randomness = aggregate_randomness


def _ctx(config: CompareConfig, step: int, sender_role: int, kind: bytes,
         index: int | None = None) -> bytes:
    """Transcript context: binds proofs to session, identities, step, role."""
    parts = [
        b"compare/v1",
        len(config.session_id).to_bytes(2, "big"), config.session_id,
        len(config.identities[0]).to_bytes(2, "big"), config.identities[0],
        len(config.identities[1]).to_bytes(2, "big"), config.identities[1],
        bytes([step, sender_role]),
        kind,
    ]
    if index is not None:
        parts.append(index.to_bytes(2, "big"))
    return b"|".join(parts)


# --- shared verification helpers (used by sessions and the relay auditor) ------

def verify_keys_payload(msg: KeysPayload, config: CompareConfig) -> None:
    ctx = _ctx(config, STEP_KEYS, msg.role, b"session-key")
    if not sigma.verify_dlog(msg.proof, GENERATOR, msg.pk, ctx):
        raise BadProof(STEP_KEYS, detail="session key dlog proof")


def verify_bits_payload(msg: BitsPayload, config: CompareConfig,
                        combined_pk: GroupPoint) -> None:
    k = config.bit_width
    if len(msg.cts) != k or len(msg.proofs) != k:
        raise BadProof(STEP_BITS, detail="bit vector has wrong length")
    for j in range(k):
        ctx = _ctx(config, STEP_BITS, msg.role, b"bit", j)
        if not sigma.verify_bit(msg.proofs[j], msg.cts[j], combined_pk, ctx):
            raise BadProof(STEP_BITS, index=j)


def verify_shuffle_payload(msg: ShufflePayload, config: CompareConfig,
                           inputs: list[ElGamalCiphertext],
                           combined_pk: GroupPoint) -> None:
    if len(msg.outputs) != len(inputs):
        raise BadProof(msg.step, detail="shuffle changed the vector length")
    instance = ShuffleInstance(inputs, msg.outputs, combined_pk)
    ctx = _ctx(config, msg.step, msg.role, b"shuffle")
    if not verify_shuffle(instance, msg.proof, ctx):
        raise BadProof(msg.step, detail="shuffle proof")


def verify_blind_payload(msg: BlindPayload, config: CompareConfig,
                         circuit: list[ElGamalCiphertext]) -> None:
    k = config.bit_width
    if len(msg.blinded) != k or len(msg.proofs) != k:
        raise BadProof(STEP_BLIND, detail="blind vector has wrong length")
    for j in range(k):
        ctx = _ctx(config, STEP_BLIND, msg.role, b"blind", j)
        bases = [circuit[j].a, circuit[j].b]
        points = [msg.blinded[j].a, msg.blinded[j].b]
        if not sigma.verify_eq_logs(msg.proofs[j], bases, points, ctx):
            raise BadProof(STEP_BLIND, index=j)


def verify_shares_payload(msg: SharesPayload, config: CompareConfig,
                          sender_pk: GroupPoint,
                          u_sums: list[GroupPoint]) -> None:
    k = config.bit_width
    if len(msg.shares) != k or len(msg.proofs) != k:
        raise BadProof(STEP_SHARES, detail="share vector has wrong length")
    for j in range(k):
        ctx = _ctx(config, STEP_SHARES, msg.role, b"share", j)
        bases = [GENERATOR, u_sums[j]]
        points = [sender_pk, msg.shares[j]]
        if not sigma.verify_eq_logs(msg.proofs[j], bases, points, ctx):
            raise BadProof(STEP_SHARES, index=j)


def results_and_verdict(blinded1: list[ElGamalCiphertext],
                        blinded2: list[ElGamalCiphertext],
                        shares1: list[GroupPoint],
                        shares2: list[GroupPoint]) -> tuple[list[GroupPoint], CompareVerdict]:
    """T_j = (V1_j + V2_j) - (W1_j + W2_j); any identity means s1 > s2."""
    results = [
        (blinded1[j].a + blinded2[j].a) - (shares1[j] + shares2[j])
        for j in range(len(blinded1))
    ]
    if any(t.is_identity() for t in results):
        return results, CompareVerdict(smaller_role=2, is_strict=True)
    return results, CompareVerdict(smaller_role=1, is_strict=False)


def verify_reveal(reveal: Reveal, peer_bit_cts: list[ElGamalCiphertext],
                  combined_key: CombinedKey | GroupPoint) -> bool:
    """Check size*G + r*P equals the weighted sum of the original bit
    ciphertexts' first components."""
    pk = combined_key.pk if isinstance(combined_key, CombinedKey) else combined_key
    lhs = GENERATOR.mul(Scalar(reveal.size)) + pk.mul(reveal.aggregate_randomness)
    rhs = IDENTITY
    for j, ct in enumerate(peer_bit_cts):
        rhs = rhs + ct.a.mul(Scalar(1 << j))
    return lhs == rhs


# --- the per-party session ------------------------------------------------------

class CompareSession:
    """One trader's side of a comparison. Single-threaded; one message at
    a time. Every peer message is fully verified before state advances."""

    def __init__(self, config: CompareConfig, own_size: int,
                 rng: RandomSource = DEFAULT_RNG, clock=time.monotonic):
        k = config.bit_width
        if not 0 < own_size < (1 << k):
            raise InvalidOrderSize(f"size must be in (0, 2^{k})")
        self.config = config
        self.rng = rng
        self.clock = clock
        self.own_size = own_size
        self.own_bits = size_bits(own_size, k)
        self.bit_randomness: list[Scalar] = []
        self.own_keypair: KeyPair = keygen(rng)
        self.combined_key: CombinedKey | None = None
        self.peer_session_pk: GroupPoint | None = None
        self.own_bit_cts: list[ElGamalCiphertext] = []
        self.peer_bit_cts: list[ElGamalCiphertext] = []
        self.circuit: list[ElGamalCiphertext] = []
        self.first_shuffle: list[ElGamalCiphertext] = []
        self.final_vectors: list[ElGamalCiphertext] = []
        self.blinding: list[Scalar] = []
        self.own_blinded: list[ElGamalCiphertext] = []
        self.peer_blinded: list[ElGamalCiphertext] = []
        self.own_shares: list[GroupPoint] = []
        self.peer_shares: list[GroupPoint] = []
        self.results: list[GroupPoint] = []
        self.verdict: CompareVerdict | None = None
        self.peer_reveal: Reveal | None = None
        self.revealed = False
        self.aborted = False
        self.round = 0
        self.last_activity = clock()
        # inbound steps arrive in exactly this order
        peer_shuffle = STEP_SHUFFLE_SECOND if config.role == 1 else STEP_SHUFFLE_FIRST
        self._expect = [STEP_KEYS, STEP_BITS, peer_shuffle, STEP_BLIND, STEP_SHARES]

    @property
    def peer_role(self) -> int:
        return 2 if self.config.role == 1 else 1

    def expired(self, now: float | None = None) -> bool:
        now = self.clock() if now is None else now
        return (
            not self.aborted
            and self.outcome_pending()
            and now - self.last_activity > self.config.timeout_seconds
        )

    def outcome_pending(self) -> bool:
        if self.verdict is None:
            return True
        if self.verdict.smaller_role == self.config.role:
            return not self.revealed
        return self.peer_reveal is None

    # -- outbound builders --

    def _keys_payload(self) -> bytes:
        cfg = self.config
        ctx = _ctx(cfg, STEP_KEYS, cfg.role, b"session-key")
        proof = sigma.prove_dlog(self.own_keypair.sk, GENERATOR,
                                 self.own_keypair.pk, ctx, self.rng)
        return KeysPayload(cfg.role, cfg.session_id, self.own_keypair.pk, proof).pack()

    def _bits_payload(self) -> bytes:
        cfg = self.config
        pk = self.combined_key.pk
        cts, proofs = [], []
        self.bit_randomness = []
        for j, bit in enumerate(self.own_bits):
            r = self.rng.scalar_nonzero()
            self.bit_randomness.append(r)
            ct = ElGamalCiphertext(
                GENERATOR.mul(Scalar(bit)) + pk.mul(r), GENERATOR.mul(r)
            )
            ctx = _ctx(cfg, STEP_BITS, cfg.role, b"bit", j)
            proofs.append(sigma.prove_bit(bit, r, ct, pk, ctx, self.rng))
            cts.append(ct)
        self.own_bit_cts = cts
        return BitsPayload(cfg.role, cfg.session_id, cts, proofs).pack()

    def _shuffle_payload(self, step: int,
                         inputs: list[ElGamalCiphertext]) -> ShufflePayload:
        cfg = self.config
        pk = self.combined_key.pk
        outputs, witness = shuffle(inputs, pk, self.rng)
        instance = ShuffleInstance(inputs, outputs, pk)
        ctx = _ctx(cfg, step, cfg.role, b"shuffle")
        proof = prove_shuffle(instance, witness, ctx, self.rng)
        return ShufflePayload(step, cfg.role, cfg.session_id, outputs, proof)

    def _blind_payload(self) -> bytes:
        cfg = self.config
        blinded, proofs = [], []
        self.blinding = []
        for j, ct in enumerate(self.final_vectors):
            m = self.rng.scalar_nonzero()
            self.blinding.append(m)
            out = ct.mul(m)
            ctx = _ctx(cfg, STEP_BLIND, cfg.role, b"blind", j)
            proofs.append(sigma.prove_eq_logs(
                m, [ct.a, ct.b], [out.a, out.b], ctx, self.rng))
            blinded.append(out)
        self.own_blinded = blinded
        return BlindPayload(cfg.role, cfg.session_id, blinded, proofs).pack()

    def _shares_payload(self) -> bytes:
        cfg = self.config
        u_sums = self._u_sums()
        shares, proofs = [], []
        for j, u in enumerate(u_sums):
            share = u.mul(self.own_keypair.sk)
            ctx = _ctx(cfg, STEP_SHARES, cfg.role, b"share", j)
            proofs.append(sigma.prove_eq_logs(
                self.own_keypair.sk, [GENERATOR, u],
                [self.own_keypair.pk, share], ctx, self.rng))
            shares.append(share)
        self.own_shares = shares
        return SharesPayload(cfg.role, cfg.session_id, shares, proofs).pack()

    def _u_sums(self) -> list[GroupPoint]:
        own, peer = self.own_blinded, self.peer_blinded
        return [own[j].b + peer[j].b for j in range(len(own))]

    # -- inbound handling --

    def handle_message(self, payload: bytes,
                       now: float | None = None) -> tuple[list[bytes], CompareVerdict | None]:
        """Verify one peer payload, advance, and return outbound payloads.

        Raises BadProof when any embedded proof fails (the caller should
        report the offending envelope), ProtocolOrderViolation on wrong
        session/role/step, SessionExpired past the idle timeout.
        """
        if self.aborted:
            raise ProtocolOrderViolation("session was aborted")
        now = self.clock() if now is None else now
        if self.expired(now):
            self.aborted = True
            raise SessionExpired(f"no peer message for {self.config.timeout_seconds}s")

        msg = parse_payload(payload)
        cfg = self.config
        if msg.session_id != cfg.session_id:
            raise ProtocolOrderViolation("payload belongs to a different session")
        if msg.role != self.peer_role:
            raise ProtocolOrderViolation("payload claims the wrong role")
        expected = self._expected_step()
        if msg.step != expected:
            raise ProtocolOrderViolation(
                f"expected step {expected}, got {msg.step}")

        try:
            outbound, verdict = self._dispatch(msg)
        except BadProof:
            self.aborted = True
            raise
        if self._expect and self._expect[0] == expected:
            self._expect.pop(0)
        self.last_activity = now
        return outbound, verdict

    def _expected_step(self) -> int:
        if self._expect:
            return self._expect[0]
        if (self.verdict is not None
                and self.verdict.smaller_role == self.peer_role
                and self.peer_reveal is None):
            return STEP_REVEAL
        raise ProtocolOrderViolation("no further peer messages expected")

    def _dispatch(self, msg) -> tuple[list[bytes], CompareVerdict | None]:
        cfg = self.config
        if isinstance(msg, KeysPayload):
            verify_keys_payload(msg, cfg)
            self.peer_session_pk = msg.pk
            parts = ([self.own_keypair.pk, msg.pk] if cfg.role == 1
                     else [msg.pk, self.own_keypair.pk])
            self.combined_key = CombinedKey(parts)
            self.round = STEP_KEYS
            return [self._bits_payload()], None

        if isinstance(msg, BitsPayload):
            verify_bits_payload(msg, cfg, self.combined_key.pk)
            self.peer_bit_cts = msg.cts
            cts1, cts2 = ((self.own_bit_cts, msg.cts) if cfg.role == 1
                          else (msg.cts, self.own_bit_cts))
            self.circuit = build_circuit(cts1, cts2, cfg.bit_width,
                                         cfg.paper_compat_weights)
            self.round = STEP_BITS
            if cfg.role == 1:
                out = self._shuffle_payload(STEP_SHUFFLE_FIRST, self.circuit)
                self.first_shuffle = out.outputs
                self.round = STEP_SHUFFLE_FIRST
                return [out.pack()], None
            return [], None

        if isinstance(msg, ShufflePayload):
            if cfg.role == 1:
                # role 2 shuffled our shuffle output
                verify_shuffle_payload(msg, cfg, self.first_shuffle,
                                       self.combined_key.pk)
                self.final_vectors = msg.outputs
                self.round = STEP_SHUFFLE_SECOND
                return [self._blind_payload()], None
            # role 2: verify role 1's shuffle of the circuit, then shuffle it
            verify_shuffle_payload(msg, cfg, self.circuit, self.combined_key.pk)
            self.first_shuffle = msg.outputs
            out = self._shuffle_payload(STEP_SHUFFLE_SECOND, msg.outputs)
            self.final_vectors = out.outputs
            self.round = STEP_SHUFFLE_SECOND
            return [out.pack(), self._blind_payload()], None

        if isinstance(msg, BlindPayload):
            verify_blind_payload(msg, cfg, self.final_vectors)
            self.peer_blinded = msg.blinded
            self.round = STEP_BLIND
            return [self._shares_payload()], None

        if isinstance(msg, SharesPayload):
            verify_shares_payload(msg, cfg, self.peer_session_pk, self._u_sums())
            self.peer_shares = msg.shares
            b1, b2 = ((self.own_blinded, self.peer_blinded) if cfg.role == 1
                      else (self.peer_blinded, self.own_blinded))
            s1, s2 = ((self.own_shares, self.peer_shares) if cfg.role == 1
                      else (self.peer_shares, self.own_shares))
            self.results, self.verdict = results_and_verdict(b1, b2, s1, s2)
            self.round = STEP_VERDICT
            return [], self.verdict

        if isinstance(msg, RevealPayload):
            reveal = Reveal(msg.size, msg.aggregate_randomness)
            if not verify_reveal(reveal, self.peer_bit_cts, self.combined_key):
                raise BadProof(STEP_REVEAL, detail="reveal equation")
            self.peer_reveal = reveal
            self.round = STEP_REVEAL
            return [], None

        raise ProtocolOrderViolation("unhandled payload type")

    # -- reveal --

    def make_reveal(self) -> tuple[Reveal, bytes]:
        """Disclose own size with the aggregate of the original (step 7)
        bit randomness. Only the verdict's smaller role may call this."""
        if self.verdict is None or self.verdict.smaller_role != self.config.role:
            raise ProtocolOrderViolation("this side does not reveal")
        agg = Scalar(0)
        for j, r in enumerate(self.bit_randomness):
            agg = agg + Scalar(1 << j) * r
        reveal = Reveal(self.own_size, agg)
        payload = RevealPayload(self.config.role, self.config.session_id,
                                reveal.size, reveal.aggregate_randomness).pack()
        self.revealed = True
        self.round = STEP_REVEAL
        return reveal, payload


def start_session(config: CompareConfig, own_size: int,
                  rng: RandomSource = DEFAULT_RNG,
                  clock=time.monotonic) -> tuple[CompareSession, bytes]:
    """Create a session and its opening key-exchange payload."""
    session = CompareSession(config, own_size, rng, clock)
    first = session._keys_payload()
    session.round = STEP_KEYS
    return session, first


# --- in-process driver ------------------------------------------------------------

def run_local_comparison(size1: int, size2: int, bit_width: int,
                         session_id: bytes = b"local",
                         paper_compat_weights: bool = False,
                         rng1: RandomSource = DEFAULT_RNG,
                         rng2: RandomSource = DEFAULT_RNG,
                         ) -> tuple[CompareVerdict, Reveal, CompareSession, CompareSession]:
    """Run both sides in one process, relaying payloads directly.

    Returns the (shared) verdict, the smaller side's reveal, and the two
    sessions for inspection.
    """
    cfg1 = CompareConfig(bit_width, 1, session_id, paper_compat_weights)
    cfg2 = CompareConfig(bit_width, 2, session_id, paper_compat_weights)
    s1, first1 = start_session(cfg1, size1, rng1)
    s2, first2 = start_session(cfg2, size2, rng2)
    sessions = {1: s1, 2: s2}

    queue: list[tuple[int, bytes]] = [(2, first1), (1, first2)]
    verdicts: dict[int, CompareVerdict] = {}
    while queue:
        to_role, payload = queue.pop(0)
        outbound, verdict = sessions[to_role].handle_message(payload)
        if verdict is not None:
            verdicts[to_role] = verdict
        peer = 2 if to_role == 1 else 1
        queue.extend((peer, p) for p in outbound)

    if verdicts[1] != verdicts[2]:
        raise ProtocolOrderViolation("parties disagree on the verdict")
    verdict = verdicts[1]

    revealer = sessions[verdict.smaller_role]
    watcher = sessions[2 if verdict.smaller_role == 1 else 1]
    reveal, payload = revealer.make_reveal()
    watcher.handle_message(payload)
    return verdict, reveal, s1, s2


# --- relay-side transcript auditor ----------------------------------------------

class SessionAuditor:
    """Replays a session from both parties' payloads, verifying every
    proof, exactly as the relay must before forwarding. Sees only what
    travels the wire; ends up knowing the verdict and the revealed size,
    and nothing else about either input."""

    def __init__(self, bit_width: int, session_id: bytes,
                 paper_compat_weights: bool = False,
                 identities: tuple[bytes, bytes] = (b"", b"")):
        self.config = CompareConfig(bit_width, 1, session_id,
                                    paper_compat_weights, identities)
        self.session_pks: dict[int, GroupPoint] = {}
        self.combined_key: CombinedKey | None = None
        self.bit_cts: dict[int, list[ElGamalCiphertext]] = {}
        self.circuit: list[ElGamalCiphertext] = []
        self.first_shuffle: list[ElGamalCiphertext] = []
        self.final_vectors: list[ElGamalCiphertext] = []
        self.blinded: dict[int, list[ElGamalCiphertext]] = {}
        self.shares: dict[int, list[GroupPoint]] = {}
        self.verdict: CompareVerdict | None = None
        self.reveal: Reveal | None = None
        self._seen: dict[int, set[int]] = {1: set(), 2: set()}

    def expected_steps(self, role: int) -> list[int]:
        own_shuffle = STEP_SHUFFLE_FIRST if role == 1 else STEP_SHUFFLE_SECOND
        return [STEP_KEYS, STEP_BITS, own_shuffle, STEP_BLIND, STEP_SHARES, STEP_REVEAL]

    def ingest(self, payload: bytes) -> CompareVerdict | None:
        """Verify one relayed payload. Raises StaleRound on duplicates,
        ProtocolOrderViolation on sequence breaks, BadProof on any
        failed proof. Returns the verdict exactly once, on the message
        that completes the second share vector."""
        msg = parse_payload(payload)
        cfg = self.config
        if msg.session_id != cfg.session_id:
            raise ProtocolOrderViolation("payload belongs to a different session")
        role = msg.role
        if msg.step in self._seen[role]:
            raise StaleRound(f"step {msg.step} from role {role} already relayed")
        if msg.step not in self.expected_steps(role):
            raise ProtocolOrderViolation(f"role {role} never sends step {msg.step}")
        prior = [s for s in self.expected_steps(role) if s < msg.step]
        if any(s not in self._seen[role] for s in prior):
            raise ProtocolOrderViolation(
                f"step {msg.step} from role {role} arrived out of order")

        if isinstance(msg, KeysPayload):
            verify_keys_payload(msg, cfg)
            self.session_pks[role] = msg.pk
            if len(self.session_pks) == 2:
                self.combined_key = CombinedKey(
                    [self.session_pks[1], self.session_pks[2]])
        elif isinstance(msg, BitsPayload):
            if self.combined_key is None:
                raise ProtocolOrderViolation("bits before both keys")
            verify_bits_payload(msg, cfg, self.combined_key.pk)
            self.bit_cts[role] = msg.cts
            if len(self.bit_cts) == 2:
                self.circuit = build_circuit(
                    self.bit_cts[1], self.bit_cts[2], cfg.bit_width,
                    cfg.paper_compat_weights)
        elif isinstance(msg, ShufflePayload):
            if msg.step == STEP_SHUFFLE_FIRST:
                if not self.circuit:
                    raise ProtocolOrderViolation("shuffle before both bit vectors")
                verify_shuffle_payload(msg, cfg, self.circuit, self.combined_key.pk)
                self.first_shuffle = msg.outputs
            else:
                if not self.first_shuffle:
                    raise ProtocolOrderViolation("second shuffle before the first")
                verify_shuffle_payload(msg, cfg, self.first_shuffle,
                                       self.combined_key.pk)
                self.final_vectors = msg.outputs
        elif isinstance(msg, BlindPayload):
            if not self.final_vectors:
                raise ProtocolOrderViolation("blind before both shuffles")
            verify_blind_payload(msg, cfg, self.final_vectors)
            self.blinded[role] = msg.blinded
        elif isinstance(msg, SharesPayload):
            if len(self.blinded) != 2:
                raise ProtocolOrderViolation("shares before both blind vectors")
            u_sums = [self.blinded[1][j].b + self.blinded[2][j].b
                      for j in range(cfg.bit_width)]
            verify_shares_payload(msg, cfg, self.session_pks[role], u_sums)
            self.shares[role] = msg.shares
            if len(self.shares) == 2:
                _, self.verdict = results_and_verdict(
                    self.blinded[1], self.blinded[2],
                    self.shares[1], self.shares[2])
                self._seen[role].add(msg.step)
                return self.verdict
        elif isinstance(msg, RevealPayload):
            if self.verdict is None:
                raise ProtocolOrderViolation("reveal before the verdict")
            if role != self.verdict.smaller_role:
                raise ProtocolOrderViolation("reveal from the larger side")
            reveal = Reveal(msg.size, msg.aggregate_randomness)
            # checked against the revealer's own original bit ciphertexts
            if not verify_reveal(reveal, self.bit_cts[role], self.combined_key):
                raise BadProof(STEP_REVEAL, detail="reveal equation")
            self.reveal = reveal

        self._seen[role].add(msg.step)
        return None
