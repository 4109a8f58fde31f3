"""Prime-order group arithmetic, canonical encodings, and Pedersen commitments.

The group is ristretto255 (prime order, ~128-bit security), reached through
libsodium. Points encode to exactly 32 bytes and the encoding is unique per
element, so byte equality is group equality. Scalars are integers mod the
group order q, encoded as 32 big-endian bytes.

Everything in this module is a pure function on immutable values.
"""

from __future__ import annotations

import hashlib
import secrets

from . import _sodium
from .errors import DecodeError

#: Group order q. All scalar arithmetic is mod q.
Q = _sodium.GROUP_ORDER

POINT_LEN = 32
SCALAR_LEN = 32

#: Protocol-wide version constant: group choice and encoding rules are
#: frozen under this tag and it prefixes every transcript hash.
PROTOCOL_VERSION = b"darkpool/v1/ristretto255"


class Scalar:
    """Element of the scalar field Z_q."""

    __slots__ = ("value",)

    def __init__(self, value: int):
        self.value = value % Q

    def __add__(self, other: "Scalar") -> "Scalar":
        return Scalar(self.value + other.value)

    def __sub__(self, other: "Scalar") -> "Scalar":
        return Scalar(self.value - other.value)

    def __mul__(self, other) -> "Scalar":
        if isinstance(other, Scalar):
            return Scalar(self.value * other.value)
        if isinstance(other, GroupPoint):
            return other.mul(self)
        return NotImplemented

    def __neg__(self) -> "Scalar":
        return Scalar(-self.value)

    def inverse(self) -> "Scalar":
        if self.value == 0:
            raise ZeroDivisionError("zero scalar has no inverse")
        return Scalar(pow(self.value, -1, Q))

    def is_zero(self) -> bool:
        return self.value == 0

    def __eq__(self, other) -> bool:
        return isinstance(other, Scalar) and self.value == other.value

    def __hash__(self) -> int:
        return hash(("Scalar", self.value))

    def __repr__(self) -> str:
        return f"Scalar({self.value:#x})"


class GroupPoint:
    """Group element, held as its canonical 32-byte encoding."""

    __slots__ = ("data",)

    def __init__(self, data: bytes):
        if len(data) != POINT_LEN:
            raise DecodeError(f"point encoding must be {POINT_LEN} bytes")
        self.data = bytes(data)

    def __add__(self, other: "GroupPoint") -> "GroupPoint":
        return GroupPoint(_sodium.point_add(self.data, other.data))

    def __sub__(self, other: "GroupPoint") -> "GroupPoint":
        return GroupPoint(_sodium.point_sub(self.data, other.data))

    def __neg__(self) -> "GroupPoint":
        return GroupPoint(_sodium.point_sub(_sodium.IDENTITY_BYTES, self.data))

    def mul(self, k: Scalar) -> "GroupPoint":
        return GroupPoint(_sodium.scalar_mult(k.value, self.data))

    def __mul__(self, k: Scalar) -> "GroupPoint":
        return self.mul(k)

    def __rmul__(self, k: Scalar) -> "GroupPoint":
        return self.mul(k)

    def is_identity(self) -> bool:
        return self.data == _sodium.IDENTITY_BYTES

    def __eq__(self, other) -> bool:
        return isinstance(other, GroupPoint) and self.data == other.data

    def __hash__(self) -> int:
        return hash(("GroupPoint", self.data))

    def __repr__(self) -> str:
        return f"GroupPoint({self.data.hex()})"


#: Neutral element O.
IDENTITY = GroupPoint(_sodium.IDENTITY_BYTES)

#: Primary generator G.
GENERATOR = GroupPoint(_sodium.base_point())


def hash_to_point(domain: bytes) -> GroupPoint:
    """Derive a group element from a domain string; its dlog is unknown."""
    h = hashlib.sha512(PROTOCOL_VERSION + b"|hash-to-point|" + domain).digest()
    return GroupPoint(_sodium.point_from_hash(h))


class GeneratorSet:
    """Generator pair (g, h) for Pedersen commitments.

    h is hashed to the curve from a fixed domain string, so nobody knows
    log_g(h).
    """

    __slots__ = ("g", "h")

    def __init__(self, g: GroupPoint | None = None, h: GroupPoint | None = None):
        self.g = g if g is not None else GENERATOR
        self.h = h if h is not None else hash_to_point(b"pedersen-generator-h")
        if self.g.is_identity() or self.h.is_identity() or self.g == self.h:
            raise ValueError("generators must be distinct and non-trivial")


DEFAULT_GENERATORS = GeneratorSet()


class PedersenCommitment:
    __slots__ = ("c",)

    def __init__(self, c: GroupPoint):
        self.c = c

    def __add__(self, other: "PedersenCommitment") -> "PedersenCommitment":
        return PedersenCommitment(self.c + other.c)

    def __eq__(self, other) -> bool:
        return isinstance(other, PedersenCommitment) and self.c == other.c

    def __hash__(self) -> int:
        return hash(("PedersenCommitment", self.c))

    def __repr__(self) -> str:
        return f"PedersenCommitment({self.c.data.hex()})"


def pedersen_commit(x: Scalar, r: Scalar, gens: GeneratorSet = DEFAULT_GENERATORS) -> PedersenCommitment:
    """C = x*g + r*h. The blinding r must be nonzero."""
    if r.is_zero():
        raise ValueError("pedersen blinding must be nonzero")
    return PedersenCommitment(gens.g.mul(x) + gens.h.mul(r))


def pedersen_verify(c: PedersenCommitment, x: Scalar, r: Scalar,
                    gens: GeneratorSet = DEFAULT_GENERATORS) -> bool:
    return c.c == gens.g.mul(x) + gens.h.mul(r)


# --- canonical serialization -------------------------------------------------

def serialize_point(p: GroupPoint) -> bytes:
    return p.data


def deserialize_point(data: bytes) -> GroupPoint:
    if len(data) != POINT_LEN:
        raise DecodeError(f"point encoding must be {POINT_LEN} bytes, got {len(data)}")
    if not _sodium.is_valid_point(data):
        raise DecodeError("bytes are not a canonical group element encoding")
    return GroupPoint(data)


def serialize_scalar(s: Scalar) -> bytes:
    return s.value.to_bytes(SCALAR_LEN, "big")


def deserialize_scalar(data: bytes) -> Scalar:
    if len(data) != SCALAR_LEN:
        raise DecodeError(f"scalar encoding must be {SCALAR_LEN} bytes, got {len(data)}")
    value = int.from_bytes(data, "big")
    if value >= Q:
        raise DecodeError("scalar encoding is not reduced mod the group order")
    return Scalar(value)


# --- transcript hashing ------------------------------------------------------

def _canonical_item(item) -> bytes:
    if isinstance(item, GroupPoint):
        return item.data
    if isinstance(item, Scalar):
        return serialize_scalar(item)
    if isinstance(item, (bytes, bytearray)):
        return bytes(item)
    if isinstance(item, int):
        if item < 0:
            raise TypeError("negative ints have no canonical transcript encoding")
        return item.to_bytes(8, "big")
    if isinstance(item, str):
        return item.encode()
    raise TypeError(f"cannot hash value of type {type(item).__name__}")


def hash_to_scalar(domain_tag: bytes, items: list) -> Scalar:
    """Hash a domain tag plus an ordered item list to a uniform scalar.

    Every item is length-prefixed, so item boundaries and the item count
    are unambiguous in the transcript.
    """
    if not domain_tag:
        raise ValueError("domain_tag must be non-empty")
    h = hashlib.sha512()
    h.update(len(PROTOCOL_VERSION).to_bytes(4, "big"))
    h.update(PROTOCOL_VERSION)
    h.update(len(domain_tag).to_bytes(4, "big"))
    h.update(bytes(domain_tag))
    for item in items:
        enc = _canonical_item(item)
        h.update(len(enc).to_bytes(4, "big"))
        h.update(enc)
    # 64 uniform bytes reduced mod q: bias < 2^-250
    return Scalar(int.from_bytes(h.digest(), "big"))


# --- randomness --------------------------------------------------------------

class RandomSource:
    """Injectable randomness. The default draws from the OS.

    Tests pass ``seed=`` to get a reproducible stream.
    """

    def __init__(self, seed: int | None = None):
        if seed is None:
            self._bits = lambda: secrets.randbits(512)
            self._rng = None
        else:
            import random

            self._rng = random.Random(seed)
            self._bits = lambda: self._rng.getrandbits(512)

    def scalar(self) -> Scalar:
        return Scalar(self._bits())

    def scalar_nonzero(self) -> Scalar:
        while True:
            s = self.scalar()
            if not s.is_zero():
                return s

    def bytes(self, n: int) -> bytes:
        if self._rng is None:
            return secrets.token_bytes(n)
        return self._rng.getrandbits(8 * n).to_bytes(n, "big")

    def permutation(self, k: int) -> list[int]:
        """Uniform permutation of range(k) via Fisher-Yates."""
        perm = list(range(k))
        for i in range(k - 1, 0, -1):
            j = self._bits() % (i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm


DEFAULT_RNG = RandomSource()
