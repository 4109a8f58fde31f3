from collections import Counter

import pytest

from darkpool.elgamal import decrypt_point, discrete_log_small, encrypt, keygen
from darkpool.errors import MalformedStatement
from darkpool.group import RandomSource, Scalar
from darkpool.shuffle import (
    ShuffleInstance,
    ShuffleProof,
    ShuffleWitness,
    prove_shuffle,
    shuffle,
    verify_shuffle,
)

RNG = RandomSource(seed=4004)
CTX = b"shuffle-test-ctx"


def encrypt_vector(values, pk):
    return [encrypt(Scalar(v), RNG.scalar_nonzero(), pk) for v in values]


def decrypt_multiset(cts, sk, bound=64):
    return Counter(discrete_log_small(decrypt_point(ct, sk), bound) for ct in cts)


def test_empty_input_rejected():
    kp = keygen(RNG)
    with pytest.raises(MalformedStatement):
        shuffle([], kp.pk, RNG)


def test_single_element():
    kp = keygen(RNG)
    (ct,) = encrypt_vector([5], kp.pk)
    outputs, witness = shuffle([ct], kp.pk, RNG)
    assert witness.permutation == [0]
    assert outputs[0] != ct  # re-randomized, bytes differ
    assert decrypt_point(outputs[0], kp.sk) == decrypt_point(ct, kp.sk)


def test_multiset_preserved_k4():
    kp = keygen(RNG)
    inputs = encrypt_vector([0, 1, 2, 3], kp.pk)
    outputs, _ = shuffle(inputs, kp.pk, RNG)
    assert decrypt_multiset(outputs, kp.sk) == Counter([0, 1, 2, 3])


def test_multiset_preserved_exhaustive_small_k():
    kp = keygen(RNG)
    for k in range(1, 9):
        values = [RNG.scalar().value % 16 for _ in range(k)]
        inputs = encrypt_vector(values, kp.pk)
        outputs, _ = shuffle(inputs, kp.pk, RNG)
        assert decrypt_multiset(outputs, kp.sk, bound=16) == Counter(values)


def test_witness_with_zero_rerand_rejected():
    kp = keygen(RNG)
    inputs = encrypt_vector([1, 2], kp.pk)
    witness = ShuffleWitness([0, 1], [Scalar(0), Scalar(1)])
    instance = ShuffleInstance(inputs, inputs, kp.pk)
    with pytest.raises(MalformedStatement):
        prove_shuffle(instance, witness, CTX, RNG)


def test_proof_completeness_k4():
    kp = keygen(RNG)
    inputs = encrypt_vector([0, 1, 2, 3], kp.pk)
    outputs, witness = shuffle(inputs, kp.pk, RNG)
    instance = ShuffleInstance(inputs, outputs, kp.pk)
    proof = prove_shuffle(instance, witness, CTX, RNG)
    assert verify_shuffle(instance, proof, CTX)


def test_proof_completeness_various_k():
    kp = keygen(RNG)
    for k in (1, 2, 8):
        values = list(range(k))
        inputs = encrypt_vector(values, kp.pk)
        outputs, witness = shuffle(inputs, kp.pk, RNG)
        instance = ShuffleInstance(inputs, outputs, kp.pk)
        proof = prove_shuffle(instance, witness, CTX, RNG)
        assert verify_shuffle(instance, proof, CTX)


def test_swap_outputs_after_proving():
    kp = keygen(RNG)
    inputs = encrypt_vector([0, 1, 2, 3], kp.pk)
    outputs, witness = shuffle(inputs, kp.pk, RNG)
    proof = prove_shuffle(ShuffleInstance(inputs, outputs, kp.pk), witness, CTX, RNG)
    swapped = list(outputs)
    swapped[0], swapped[1] = swapped[1], swapped[0]
    assert not verify_shuffle(ShuffleInstance(inputs, swapped, kp.pk), proof, CTX)


def test_substituted_plaintext_rejected():
    # replace one output with a fresh encryption of a different value
    kp = keygen(RNG)
    inputs = encrypt_vector([0, 1, 2, 3], kp.pk)
    for _ in range(100):
        outputs, witness = shuffle(inputs, kp.pk, RNG)
        proof = prove_shuffle(ShuffleInstance(inputs, outputs, kp.pk), witness, CTX, RNG)
        mutated = list(outputs)
        slot = RNG.scalar().value % 4
        mutated[slot] = encrypt(Scalar(7), RNG.scalar_nonzero(), kp.pk)
        assert not verify_shuffle(ShuffleInstance(inputs, mutated, kp.pk), proof, CTX)


def test_length_change_rejected():
    kp = keygen(RNG)
    inputs = encrypt_vector([0, 1, 2, 3], kp.pk)
    outputs, witness = shuffle(inputs, kp.pk, RNG)
    proof = prove_shuffle(ShuffleInstance(inputs, outputs, kp.pk), witness, CTX, RNG)
    with pytest.raises(MalformedStatement):
        ShuffleInstance(inputs, outputs[:3], kp.pk)
    # same-length but truncated-and-padded instance still fails verification
    padded = outputs[:3] + [outputs[2]]
    assert not verify_shuffle(ShuffleInstance(inputs, padded, kp.pk), proof, CTX)


def test_wrong_key_rejected():
    kp, other = keygen(RNG), keygen(RNG)
    inputs = encrypt_vector([0, 1, 2, 3], kp.pk)
    outputs, witness = shuffle(inputs, kp.pk, RNG)
    proof = prove_shuffle(ShuffleInstance(inputs, outputs, kp.pk), witness, CTX, RNG)
    assert not verify_shuffle(ShuffleInstance(inputs, outputs, other.pk), proof, CTX)


def test_context_binding():
    kp = keygen(RNG)
    inputs = encrypt_vector([0, 1], kp.pk)
    outputs, witness = shuffle(inputs, kp.pk, RNG)
    instance = ShuffleInstance(inputs, outputs, kp.pk)
    proof = prove_shuffle(instance, witness, CTX, RNG)
    assert not verify_shuffle(instance, proof, b"another-session")


def test_malformed_proof_bytes():
    kp = keygen(RNG)
    inputs = encrypt_vector([0, 1], kp.pk)
    outputs, witness = shuffle(inputs, kp.pk, RNG)
    instance = ShuffleInstance(inputs, outputs, kp.pk)
    proof = prove_shuffle(instance, witness, CTX, RNG)
    assert not verify_shuffle(instance, ShuffleProof(b""), CTX)
    assert not verify_shuffle(instance, ShuffleProof(proof.data[:100]), CTX)
    assert not verify_shuffle(instance, ShuffleProof(b"\x02" + proof.data[1:]), CTX)
