import pytest

from darkpool import group
from darkpool.errors import DecodeError
from darkpool.group import (
    GENERATOR,
    IDENTITY,
    Q,
    GroupPoint,
    RandomSource,
    Scalar,
    deserialize_point,
    deserialize_scalar,
    hash_to_scalar,
    pedersen_commit,
    pedersen_verify,
    serialize_point,
    serialize_scalar,
)

RNG = RandomSource(seed=1001)


def naive_mul(n: int, p: GroupPoint) -> GroupPoint:
    """Independent scalar-multiplication oracle: repeated addition."""
    acc = IDENTITY
    for _ in range(n):
        acc = acc + p
    return acc


# --- hash_to_scalar ----------------------------------------------------------

def test_hash_deterministic():
    p = GENERATOR
    assert hash_to_scalar(b"tag", [p]) == hash_to_scalar(b"tag", [p])


def test_hash_binds_item_count():
    p, q = GENERATOR, GENERATOR + GENERATOR
    assert hash_to_scalar(b"tag", [p]) != hash_to_scalar(b"tag", [p, q])


def test_hash_domain_separation():
    p = GENERATOR
    assert hash_to_scalar(b"tag1", [p]) != hash_to_scalar(b"tag2", [p])


def test_hash_rejects_empty_tag():
    with pytest.raises(ValueError):
        hash_to_scalar(b"", [GENERATOR])


def test_hash_sensitive_to_any_item_byte():
    a = hash_to_scalar(b"t", [b"\x00\x01", b"\x02"])
    b = hash_to_scalar(b"t", [b"\x00\x01", b"\x03"])
    c = hash_to_scalar(b"t", [b"\x00", b"\x01\x02"])  # same concatenation, moved boundary
    assert a != b
    assert a != c


# --- pedersen ----------------------------------------------------------------

def test_commit_zero_value_is_h():
    gens = group.DEFAULT_GENERATORS
    c = pedersen_commit(Scalar(0), Scalar(1), gens)
    assert c.c == gens.h


def test_commit_one_one_is_g_plus_h():
    gens = group.DEFAULT_GENERATORS
    c = pedersen_commit(Scalar(1), Scalar(1), gens)
    assert c.c == gens.g + gens.h


def test_commit_3_5_against_repeated_addition():
    gens = group.DEFAULT_GENERATORS
    c = pedersen_commit(Scalar(3), Scalar(5), gens)
    assert c.c == naive_mul(3, gens.g) + naive_mul(5, gens.h)


def test_commit_rejects_zero_blinding():
    with pytest.raises(ValueError):
        pedersen_commit(Scalar(7), Scalar(0))


def test_verify_roundtrip_and_binding():
    x, r = RNG.scalar(), RNG.scalar_nonzero()
    c = pedersen_commit(x, r)
    assert pedersen_verify(c, x, r)
    assert not pedersen_verify(c, x + Scalar(1), r)
    assert not pedersen_verify(c, x, r + Scalar(1))


def test_pedersen_homomorphism():
    for _ in range(20):
        x1, r1 = RNG.scalar(), RNG.scalar_nonzero()
        x2, r2 = RNG.scalar(), RNG.scalar_nonzero()
        lhs = pedersen_commit(x1, r1) + pedersen_commit(x2, r2)
        assert pedersen_verify(lhs, x1 + x2, r1 + r2)


# --- group laws --------------------------------------------------------------

def random_point() -> GroupPoint:
    return GENERATOR.mul(RNG.scalar())


def test_neutral_element_laws():
    for _ in range(20):
        p = random_point()
        assert p + IDENTITY == p
        assert (p - p).is_identity()


def test_scalar_distributes_over_point():
    for _ in range(20):
        a, b = RNG.scalar(), RNG.scalar()
        p = random_point()
        assert p.mul(a + b) == p.mul(a) + p.mul(b)
        assert p.mul(a).mul(b) == p.mul(a * b)


def test_small_scalar_mult_matches_repeated_addition():
    p = random_point()
    for n in range(0, 9):
        assert p.mul(Scalar(n)) == naive_mul(n, p)


def test_scalar_field_arithmetic():
    a, b = Scalar(Q - 1), Scalar(2)
    assert (a + b) == Scalar(1)
    assert (Scalar(0) - b) == Scalar(Q - 2)
    assert (a * b) == Scalar(2 * (Q - 1) % Q)
    x = RNG.scalar_nonzero()
    assert x * x.inverse() == Scalar(1)


# --- serialization -----------------------------------------------------------

def test_point_roundtrip():
    for _ in range(20):
        p = random_point()
        assert deserialize_point(serialize_point(p)) == p
    assert deserialize_point(serialize_point(IDENTITY)) == IDENTITY


def test_point_rejects_wrong_length():
    with pytest.raises(DecodeError):
        deserialize_point(bytes(31))
    with pytest.raises(DecodeError):
        deserialize_point(bytes(33))


def test_point_rejects_invalid_encoding():
    bad = bytearray(serialize_point(GENERATOR))
    rejected = 0
    for i in range(32):
        cand = bytes(bad[:i]) + bytes([bad[i] ^ 0xFF]) + bytes(bad[i + 1:])
        try:
            deserialize_point(cand)
        except DecodeError:
            rejected += 1
    # most single-byte mutations fall off the curve; at least one must
    assert rejected > 0
    with pytest.raises(DecodeError):
        # 2^255 - 19 as little-endian field element: non-canonical for sure
        deserialize_point(b"\xff" * 32)


def test_scalar_roundtrip_and_rejections():
    s = RNG.scalar()
    assert deserialize_scalar(serialize_scalar(s)) == s
    with pytest.raises(DecodeError):
        deserialize_scalar(Q.to_bytes(32, "big"))  # exactly q: non-canonical
    with pytest.raises(DecodeError):
        deserialize_scalar(bytes(31))


def test_serialized_valid_values_never_error():
    for _ in range(50):
        p, s = random_point(), RNG.scalar()
        deserialize_point(serialize_point(p))
        deserialize_scalar(serialize_scalar(s))


# --- randomness --------------------------------------------------------------

def test_seeded_rng_reproducible():
    a = RandomSource(seed=5)
    b = RandomSource(seed=5)
    assert a.scalar() == b.scalar()
    assert a.permutation(10) == b.permutation(10)


def test_permutation_is_bijection():
    perm = RNG.permutation(64)
    assert sorted(perm) == list(range(64))
