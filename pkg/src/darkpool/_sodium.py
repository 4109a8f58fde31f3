"""ctypes bindings for libsodium's ristretto255 group operations.

Only the point operations live here; scalar-field arithmetic is done in
Python ints by the group module. All functions take and return raw
32-byte canonical encodings.
"""

import ctypes
import ctypes.util

_name = ctypes.util.find_library("sodium") or "libsodium.so.23"
_lib = ctypes.CDLL(_name)
if _lib.sodium_init() < 0:  # pragma: no cover
    raise RuntimeError("libsodium failed to initialize")

for _fn in (
    "crypto_core_ristretto255_is_valid_point",
    "crypto_core_ristretto255_add",
    "crypto_core_ristretto255_sub",
    "crypto_core_ristretto255_from_hash",
    "crypto_scalarmult_ristretto255",
    "crypto_scalarmult_ristretto255_base",
):
    if not hasattr(_lib, _fn):  # pragma: no cover
        raise RuntimeError(f"libsodium is too old: missing {_fn}")

#: Order of the ristretto255 group (prime).
GROUP_ORDER = 2**252 + 27742317777372353535851937790883648493

#: Canonical encoding of the neutral element.
IDENTITY_BYTES = bytes(32)

_buf = ctypes.create_string_buffer  # local alias


def is_valid_point(data: bytes) -> bool:
    """True iff ``data`` is a canonical 32-byte encoding of a group element."""
    if len(data) != 32:
        return False
    return _lib.crypto_core_ristretto255_is_valid_point(data) == 1


def point_add(p: bytes, q: bytes) -> bytes:
    out = _buf(32)
    if _lib.crypto_core_ristretto255_add(out, p, q) != 0:
        raise ValueError("invalid point passed to add")
    return out.raw


def point_sub(p: bytes, q: bytes) -> bytes:
    out = _buf(32)
    if _lib.crypto_core_ristretto255_sub(out, p, q) != 0:
        raise ValueError("invalid point passed to sub")
    return out.raw


def point_from_hash(h64: bytes) -> bytes:
    """Map 64 uniform bytes to a group element (Elligator-style, one-way)."""
    if len(h64) != 64:
        raise ValueError("from_hash needs exactly 64 bytes")
    out = _buf(32)
    _lib.crypto_core_ristretto255_from_hash(out, h64)
    return out.raw


def base_point() -> bytes:
    out = _buf(32)
    one = (1).to_bytes(32, "little")
    _lib.crypto_scalarmult_ristretto255_base(out, one)
    return out.raw


_BASE = base_point()


def scalar_mult(n: int, p: bytes) -> bytes:
    """n*P for n already reduced to [0, GROUP_ORDER).

    libsodium refuses to output the identity, but in a prime-order group
    n*P = O only when n = 0 or P = O, so those cases are answered directly.
    """
    if n == 0 or p == IDENTITY_BYTES:
        return IDENTITY_BYTES
    out = _buf(32)
    n_le = n.to_bytes(32, "little")
    if p == _BASE:
        rc = _lib.crypto_scalarmult_ristretto255_base(out, n_le)
    else:
        rc = _lib.crypto_scalarmult_ristretto255(out, n_le, p)
    if rc != 0:
        raise ValueError("invalid point passed to scalar_mult")
    return out.raw
