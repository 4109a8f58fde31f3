"""Verifiable re-encryption shuffle of ElGamal ciphertext vectors.

``shuffle`` permutes a ciphertext vector and re-randomizes every element
with fresh nonzero randomness, so the input-output correspondence is
hidden. ``prove_shuffle`` produces a cut-and-choose argument: the prover
publishes SECURITY_ROUNDS independent shadow shuffles of the inputs and,
per Fiat-Shamir challenge bit, opens either the mapping inputs->shadow or
shadow->outputs. Opening both sides of one round would compose to the
secret mapping, so each round keeps it hidden; faking a round requires
guessing its challenge bit, giving soundness error 2^-SECURITY_ROUNDS.

Proof bytes are opaque to callers and carry a leading algorithm byte.
"""

from __future__ import annotations

import hashlib

from .elgamal import (
    CIPHERTEXT_LEN,
    ElGamalCiphertext,
    deserialize_ciphertext,
    rerandomize,
    serialize_ciphertext,
)
from .errors import DecodeError, MalformedStatement
from .group import (
    DEFAULT_RNG,
    PROTOCOL_VERSION,
    SCALAR_LEN,
    GroupPoint,
    RandomSource,
    Scalar,
    deserialize_scalar,
    serialize_scalar,
)

#: Parallel cut-and-choose rounds; soundness error 2^-SECURITY_ROUNDS.
SECURITY_ROUNDS = 80

_ALGO_CUT_AND_CHOOSE = 0x01


class ShuffleInstance:
    __slots__ = ("inputs", "outputs", "pk")

    def __init__(self, inputs: list[ElGamalCiphertext],
                 outputs: list[ElGamalCiphertext], pk: GroupPoint):
        if len(inputs) != len(outputs):
            raise MalformedStatement("shuffle instance vectors differ in length")
        if not inputs:
            raise MalformedStatement("shuffle instance is empty")
        self.inputs = list(inputs)
        self.outputs = list(outputs)
        self.pk = pk


class ShuffleWitness:
    """outputs[i] = inputs[permutation[i]] re-randomized with rerand[i]."""

    __slots__ = ("permutation", "rerand")

    def __init__(self, permutation: list[int], rerand: list[Scalar]):
        self.permutation = list(permutation)
        self.rerand = list(rerand)


class ShuffleProof:
    __slots__ = ("data",)

    def __init__(self, data: bytes):
        self.data = bytes(data)


def shuffle(inputs: list[ElGamalCiphertext], pk: GroupPoint,
            rng: RandomSource = DEFAULT_RNG) -> tuple[list[ElGamalCiphertext], ShuffleWitness]:
    """Uniform permutation plus fresh nonzero re-randomization per element."""
    if not inputs:
        raise MalformedStatement("cannot shuffle an empty vector")
    k = len(inputs)
    perm = rng.permutation(k)
    rerand = [rng.scalar_nonzero() for _ in range(k)]
    outputs = [rerandomize(inputs[perm[i]], rerand[i], pk) for i in range(k)]
    return outputs, ShuffleWitness(perm, rerand)


def _is_permutation(seq: list[int], k: int) -> bool:
    return len(seq) == k and sorted(seq) == list(range(k))


def _witness_holds(instance: ShuffleInstance, witness: ShuffleWitness) -> bool:
    k = len(instance.inputs)
    if not _is_permutation(witness.permutation, k) or len(witness.rerand) != k:
        return False
    if any(r.is_zero() for r in witness.rerand):
        return False
    return all(
        instance.outputs[i]
        == rerandomize(instance.inputs[witness.permutation[i]], witness.rerand[i], instance.pk)
        for i in range(k)
    )


def _challenge_bits(instance: ShuffleInstance, shadows: list[list[ElGamalCiphertext]],
                    ctx: bytes) -> list[int]:
    h = hashlib.sha512()

    def feed(data: bytes) -> None:
        h.update(len(data).to_bytes(4, "big"))
        h.update(data)

    feed(PROTOCOL_VERSION)
    feed(b"proof/shuffle")
    feed(ctx)
    feed(instance.pk.data)
    for ct in instance.inputs:
        feed(serialize_ciphertext(ct))
    for ct in instance.outputs:
        feed(serialize_ciphertext(ct))
    for shadow in shadows:
        for ct in shadow:
            feed(serialize_ciphertext(ct))
    digest = h.digest()
    return [(digest[t // 8] >> (t % 8)) & 1 for t in range(SECURITY_ROUNDS)]


def prove_shuffle(instance: ShuffleInstance, witness: ShuffleWitness, ctx: bytes,
                  rng: RandomSource = DEFAULT_RNG) -> ShuffleProof:
    if not _witness_holds(instance, witness):
        raise MalformedStatement("witness does not open this shuffle instance")
    k = len(instance.inputs)
    pk = instance.pk

    shadows: list[list[ElGamalCiphertext]] = []
    shadow_maps: list[tuple[list[int], list[Scalar]]] = []
    for _ in range(SECURITY_ROUNDS):
        sigma = rng.permutation(k)
        rho = [rng.scalar_nonzero() for _ in range(k)]
        shadows.append([rerandomize(instance.inputs[sigma[i]], rho[i], pk) for i in range(k)])
        shadow_maps.append((sigma, rho))

    bits = _challenge_bits(instance, shadows, ctx)

    inv_perm = [0] * k
    for i, src in enumerate(witness.permutation):
        inv_perm[src] = i

    out = bytearray()
    out.append(_ALGO_CUT_AND_CHOOSE)
    out += k.to_bytes(2, "big")
    for t in range(SECURITY_ROUNDS):
        sigma, rho = shadow_maps[t]
        for ct in shadows[t]:
            out += serialize_ciphertext(ct)
        if bits[t] == 0:
            # open inputs -> shadow
            mapping, scalars = sigma, rho
        else:
            # open shadow -> outputs: outputs[i] = shadow[tau[i]] + Enc(0; delta[i])
            inv_sigma = [0] * k
            for i, src in enumerate(sigma):
                inv_sigma[src] = i
            mapping = [inv_sigma[witness.permutation[i]] for i in range(k)]
            scalars = [witness.rerand[i] - rho[mapping[i]] for i in range(k)]
        for idx in mapping:
            out += idx.to_bytes(2, "big")
        for s in scalars:
            out += serialize_scalar(s)
    return ShuffleProof(bytes(out))


def verify_shuffle(instance: ShuffleInstance, proof: ShuffleProof, ctx: bytes) -> bool:
    try:
        return _verify(instance, proof.data, ctx)
    except (DecodeError, MalformedStatement, ValueError, IndexError):
        return False


def _verify(instance: ShuffleInstance, data: bytes, ctx: bytes) -> bool:
    k = len(instance.inputs)
    pk = instance.pk

    round_len = k * CIPHERTEXT_LEN + k * 2 + k * SCALAR_LEN
    if len(data) != 3 + SECURITY_ROUNDS * round_len:
        return False
    if data[0] != _ALGO_CUT_AND_CHOOSE or int.from_bytes(data[1:3], "big") != k:
        return False

    off = 3
    shadows = []
    openings = []
    for _ in range(SECURITY_ROUNDS):
        shadow = []
        for _ in range(k):
            shadow.append(deserialize_ciphertext(data[off: off + CIPHERTEXT_LEN]))
            off += CIPHERTEXT_LEN
        shadows.append(shadow)
        mapping = []
        for _ in range(k):
            mapping.append(int.from_bytes(data[off: off + 2], "big"))
            off += 2
        scalars = []
        for _ in range(k):
            scalars.append(deserialize_scalar(data[off: off + SCALAR_LEN]))
            off += SCALAR_LEN
        openings.append((mapping, scalars))

    bits = _challenge_bits(instance, shadows, ctx)
    for t in range(SECURITY_ROUNDS):
        mapping, scalars = openings[t]
        if not _is_permutation(mapping, k):
            return False
        if bits[t] == 0:
            src, dst = instance.inputs, shadows[t]
        else:
            src, dst = shadows[t], instance.outputs
        for i in range(k):
            if dst[i] != rerandomize(src[mapping[i]], scalars[i], pk):
                return False
    return True
