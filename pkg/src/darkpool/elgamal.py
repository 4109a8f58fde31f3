"""EC ElGamal over the project group, with 2-of-2 combined keys.

A ciphertext is the point pair (a, b) = (m*G + r*pk, r*G). Decryption
recovers m*G, never m itself, which is all the comparison protocol needs:
its verdict comes from an identity test. ``discrete_log_small`` exists so
tests can read tiny plaintexts back out.
"""

from __future__ import annotations

from .errors import DecodeError
from .group import (
    DEFAULT_RNG,
    GENERATOR,
    IDENTITY,
    POINT_LEN,
    GroupPoint,
    RandomSource,
    Scalar,
    deserialize_point,
    serialize_point,
)


class KeyPair:
    __slots__ = ("sk", "pk")

    def __init__(self, sk: Scalar, pk: GroupPoint):
        self.sk = sk
        self.pk = pk

    def __repr__(self) -> str:
        return f"KeyPair(pk={self.pk.data.hex()})"


class CombinedKey:
    """Sum of the two session public keys; decryption needs both shares."""

    __slots__ = ("pk", "parts")

    def __init__(self, parts: list[GroupPoint]):
        if len(parts) != 2:
            raise ValueError("combined keys are formed from exactly two session keys")
        self.parts = list(parts)
        self.pk = parts[0] + parts[1]


class ElGamalCiphertext:
    __slots__ = ("a", "b")

    def __init__(self, a: GroupPoint, b: GroupPoint):
        self.a = a
        self.b = b

    def __add__(self, other: "ElGamalCiphertext") -> "ElGamalCiphertext":
        return ElGamalCiphertext(self.a + other.a, self.b + other.b)

    def __sub__(self, other: "ElGamalCiphertext") -> "ElGamalCiphertext":
        return ElGamalCiphertext(self.a - other.a, self.b - other.b)

    def mul(self, k: Scalar) -> "ElGamalCiphertext":
        return ElGamalCiphertext(self.a.mul(k), self.b.mul(k))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ElGamalCiphertext)
            and self.a == other.a
            and self.b == other.b
        )

    def __hash__(self) -> int:
        return hash(("ElGamalCiphertext", self.a, self.b))

    def __repr__(self) -> str:
        return f"ElGamalCiphertext(a={self.a.data.hex()}, b={self.b.data.hex()})"


CIPHERTEXT_LEN = 2 * POINT_LEN


def serialize_ciphertext(ct: ElGamalCiphertext) -> bytes:
    return serialize_point(ct.a) + serialize_point(ct.b)


def deserialize_ciphertext(data: bytes) -> ElGamalCiphertext:
    if len(data) != CIPHERTEXT_LEN:
        raise DecodeError(f"ciphertext must be {CIPHERTEXT_LEN} bytes")
    return ElGamalCiphertext(
        deserialize_point(data[:POINT_LEN]), deserialize_point(data[POINT_LEN:])
    )


def keygen(rng: RandomSource = DEFAULT_RNG) -> KeyPair:
    sk = rng.scalar_nonzero()
    return KeyPair(sk, GENERATOR.mul(sk))


def encrypt(m: Scalar | int, r: Scalar, pk: GroupPoint) -> ElGamalCiphertext:
    """(m*G + r*pk, r*G). The nonce r must be nonzero."""
    if r.is_zero():
        raise ValueError("encryption nonce must be nonzero")
    if isinstance(m, int):
        m = Scalar(m)
    return ElGamalCiphertext(GENERATOR.mul(m) + pk.mul(r), GENERATOR.mul(r))


def rerandomize(ct: ElGamalCiphertext, r: Scalar, pk: GroupPoint) -> ElGamalCiphertext:
    """Add an encryption of zero: plaintext unchanged, bytes fresh."""
    return ElGamalCiphertext(ct.a + pk.mul(r), ct.b + GENERATOR.mul(r))


def decrypt_point(ct: ElGamalCiphertext, sk: Scalar) -> GroupPoint:
    """a - sk*b = m*G."""
    return ct.a - ct.b.mul(sk)


def partial_decrypt(b_sum: GroupPoint, sk_i: Scalar) -> GroupPoint:
    """One party's decryption share sk_i * b_sum under a combined key."""
    return b_sum.mul(sk_i)


def is_identity(p: GroupPoint) -> bool:
    return p.is_identity()


def discrete_log_small(p: GroupPoint, bound: int = 1 << 16) -> int | None:
    """Linear-scan dlog of p base G, for test plaintext recovery only."""
    acc = IDENTITY
    for m in range(bound):
        if acc == p:
            return m
        acc = acc + GENERATOR
    return None
