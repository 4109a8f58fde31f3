"""Non-interactive sigma protocols and Schnorr signatures.

All proofs are made non-interactive with a strong Fiat-Shamir transform:
the challenge hashes a proof-type tag, the caller's transcript context
(session, round, sender binding), the full public statement, and the
prover commitments. A proof therefore verifies only against the exact
statement and context it was produced for.

Provers draw randomness from an injectable source; verifiers are pure.
"""

from __future__ import annotations

from .elgamal import ElGamalCiphertext
from .errors import DecodeError, MalformedStatement
from .group import (
    DEFAULT_RNG,
    GENERATOR,
    POINT_LEN,
    SCALAR_LEN,
    GroupPoint,
    RandomSource,
    Scalar,
    deserialize_point,
    deserialize_scalar,
    hash_to_scalar,
    serialize_point,
    serialize_scalar,
)

_DLOG_TAG = b"proof/dlog"
_EQLOG_TAG = b"proof/eqlog"
_BIT_TAG = b"proof/bit"
_SIG_TAG = b"sig/schnorr"


class DlogProof:
    """Knowledge of x with p = x*g: commitment z*g, response z + c*x."""

    __slots__ = ("commitment", "response")

    def __init__(self, commitment: GroupPoint, response: Scalar):
        self.commitment = commitment
        self.response = response

    def serialize(self) -> bytes:
        return serialize_point(self.commitment) + serialize_scalar(self.response)

    @classmethod
    def deserialize(cls, data: bytes) -> "DlogProof":
        if len(data) != POINT_LEN + SCALAR_LEN:
            raise DecodeError("bad dlog proof length")
        return cls(
            deserialize_point(data[:POINT_LEN]),
            deserialize_scalar(data[POINT_LEN:]),
        )


class EqLogProof:
    """Same x across n >= 2 base/point pairs: one commitment per base."""

    __slots__ = ("commitments", "response")

    def __init__(self, commitments: list[GroupPoint], response: Scalar):
        self.commitments = list(commitments)
        self.response = response

    def serialize(self) -> bytes:
        out = len(self.commitments).to_bytes(2, "big")
        for c in self.commitments:
            out += serialize_point(c)
        return out + serialize_scalar(self.response)

    @classmethod
    def deserialize(cls, data: bytes) -> "EqLogProof":
        if len(data) < 2:
            raise DecodeError("bad eqlog proof length")
        n = int.from_bytes(data[:2], "big")
        need = 2 + n * POINT_LEN + SCALAR_LEN
        if len(data) != need:
            raise DecodeError("bad eqlog proof length")
        commitments = [
            deserialize_point(data[2 + i * POINT_LEN: 2 + (i + 1) * POINT_LEN])
            for i in range(n)
        ]
        return cls(commitments, deserialize_scalar(data[2 + n * POINT_LEN:]))


class BitProof:
    """Disjunctive proof that a ciphertext encrypts 0 or 1.

    Branch 1 (a1, b1, r1, d1) carries the "plaintext is 1" equations and
    branch 2 the "plaintext is 0" equations; the honest prover simulates
    the false branch and splits the challenge as c = d1 + d2.
    """

    __slots__ = ("a1", "b1", "a2", "b2", "r1", "d1", "r2", "d2")

    def __init__(self, a1, b1, a2, b2, r1, d1, r2, d2):
        self.a1, self.b1, self.a2, self.b2 = a1, b1, a2, b2
        self.r1, self.d1, self.r2, self.d2 = r1, d1, r2, d2

    def serialize(self) -> bytes:
        return b"".join(
            [serialize_point(p) for p in (self.a1, self.b1, self.a2, self.b2)]
            + [serialize_scalar(s) for s in (self.r1, self.d1, self.r2, self.d2)]
        )

    @classmethod
    def deserialize(cls, data: bytes) -> "BitProof":
        if len(data) != 4 * POINT_LEN + 4 * SCALAR_LEN:
            raise DecodeError("bad bit proof length")
        pts = [
            deserialize_point(data[i * POINT_LEN: (i + 1) * POINT_LEN])
            for i in range(4)
        ]
        off = 4 * POINT_LEN
        scs = [
            deserialize_scalar(data[off + i * SCALAR_LEN: off + (i + 1) * SCALAR_LEN])
            for i in range(4)
        ]
        return cls(*pts, *scs)


class Signature:
    """Schnorr signature: a dlog proof bound to the message bytes."""

    __slots__ = ("commitment", "response")

    def __init__(self, commitment: GroupPoint, response: Scalar):
        self.commitment = commitment
        self.response = response

    def serialize(self) -> bytes:
        return serialize_point(self.commitment) + serialize_scalar(self.response)

    @classmethod
    def deserialize(cls, data: bytes) -> "Signature":
        if len(data) != POINT_LEN + SCALAR_LEN:
            raise DecodeError("bad signature length")
        return cls(
            deserialize_point(data[:POINT_LEN]),
            deserialize_scalar(data[POINT_LEN:]),
        )


# --- knowledge of discrete logarithm -----------------------------------------

def prove_dlog(x: Scalar, g: GroupPoint, p: GroupPoint, ctx: bytes,
               rng: RandomSource = DEFAULT_RNG) -> DlogProof:
    z = rng.scalar_nonzero()
    commitment = g.mul(z)
    c = hash_to_scalar(_DLOG_TAG, [ctx, g, p, commitment])
    return DlogProof(commitment, z + c * x)


def verify_dlog(proof: DlogProof, g: GroupPoint, p: GroupPoint, ctx: bytes) -> bool:
    try:
        c = hash_to_scalar(_DLOG_TAG, [ctx, g, p, proof.commitment])
        return g.mul(proof.response) == proof.commitment + p.mul(c)
    except Exception:
        return False


# --- equality of discrete logarithms -----------------------------------------

def _check_eq_statement(bases: list[GroupPoint], points: list[GroupPoint]) -> None:
    if len(bases) != len(points):
        raise MalformedStatement("bases and points differ in length")
    if len(bases) < 2:
        raise MalformedStatement("equality proof needs at least two base/point pairs")


def prove_eq_logs(x: Scalar, bases: list[GroupPoint], points: list[GroupPoint],
                  ctx: bytes, rng: RandomSource = DEFAULT_RNG) -> EqLogProof:
    _check_eq_statement(bases, points)
    z = rng.scalar_nonzero()
    commitments = [g.mul(z) for g in bases]
    c = hash_to_scalar(_EQLOG_TAG, [ctx, *bases, *points, *commitments])
    return EqLogProof(commitments, z + c * x)


def verify_eq_logs(proof: EqLogProof, bases: list[GroupPoint],
                   points: list[GroupPoint], ctx: bytes) -> bool:
    _check_eq_statement(bases, points)
    if len(proof.commitments) != len(bases):
        return False
    try:
        c = hash_to_scalar(_EQLOG_TAG, [ctx, *bases, *points, *proof.commitments])
        r = proof.response
        return all(
            g.mul(r) == a + p.mul(c)
            for g, p, a in zip(bases, points, proof.commitments)
        )
    except Exception:
        return False


# --- encrypted value is 0 or 1 -----------------------------------------------

def prove_bit(m: int, r: Scalar, ct: ElGamalCiphertext, pk: GroupPoint,
              ctx: bytes, rng: RandomSource = DEFAULT_RNG) -> BitProof:
    """Prove ct = (m*G + r*pk, r*G) with m in {0, 1}, hiding which."""
    if m not in (0, 1):
        raise MalformedStatement("bit proofs cover only plaintexts 0 and 1")
    g = GENERATOR
    cpt, d = ct.a, ct.b  # the statement's (C, D) pair
    w = rng.scalar_nonzero()
    if m == 0:
        # branch 1 ("m=1") simulated, branch 2 real
        r1, d1 = rng.scalar_nonzero(), rng.scalar_nonzero()
        a1 = g.mul(r1) + d.mul(d1)
        b1 = pk.mul(r1) + (cpt - g).mul(d1)
        a2 = g.mul(w)
        b2 = pk.mul(w)
        c = hash_to_scalar(_BIT_TAG, [ctx, pk, cpt, d, a1, b1, a2, b2])
        d2 = c - d1
        r2 = w - r * d2
    else:
        # branch 2 ("m=0") simulated, branch 1 real
        r2, d2 = rng.scalar_nonzero(), rng.scalar_nonzero()
        a1 = g.mul(w)
        b1 = pk.mul(w)
        a2 = g.mul(r2) + d.mul(d2)
        b2 = pk.mul(r2) + cpt.mul(d2)
        c = hash_to_scalar(_BIT_TAG, [ctx, pk, cpt, d, a1, b1, a2, b2])
        d1 = c - d2
        r1 = w - r * d1
    return BitProof(a1, b1, a2, b2, r1, d1, r2, d2)


def verify_bit(proof: BitProof, ct: ElGamalCiphertext, pk: GroupPoint,
               ctx: bytes) -> bool:
    g = GENERATOR
    cpt, d = ct.a, ct.b
    try:
        c = hash_to_scalar(
            _BIT_TAG, [ctx, pk, cpt, d, proof.a1, proof.b1, proof.a2, proof.b2]
        )
        if proof.d1 + proof.d2 != c:
            return False
        return (
            proof.a1 == g.mul(proof.r1) + d.mul(proof.d1)
            and proof.b1 == pk.mul(proof.r1) + (cpt - g).mul(proof.d1)
            and proof.a2 == g.mul(proof.r2) + d.mul(proof.d2)
            and proof.b2 == pk.mul(proof.r2) + cpt.mul(proof.d2)
        )
    except Exception:
        return False


# --- message signatures -------------------------------------------------------

def sign(sk: Scalar, message: bytes, rng: RandomSource = DEFAULT_RNG) -> Signature:
    z = rng.scalar_nonzero()
    commitment = GENERATOR.mul(z)
    pk = GENERATOR.mul(sk)
    c = hash_to_scalar(_SIG_TAG, [pk, commitment, message])
    return Signature(commitment, z + c * sk)


def verify_sig(pk: GroupPoint, message: bytes, sig: Signature) -> bool:
    try:
        c = hash_to_scalar(_SIG_TAG, [pk, sig.commitment, message])
        return GENERATOR.mul(sig.response) == sig.commitment + pk.mul(c)
    except Exception:
        return False
