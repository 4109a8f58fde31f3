"""
Cryptographic building blocks
=============================

A walk through the primitives the dark pool is built from: Pedersen
commitments, additively homomorphic ElGamal with a two-party combined key,
and the zero-knowledge proofs that make every protocol message checkable.
"""

from darkpool.group import GENERATOR, RandomSource, Scalar, pedersen_commit, pedersen_verify
from darkpool.elgamal import CombinedKey, encrypt, keygen, partial_decrypt, discrete_log_small
from darkpool import sigma

rng = RandomSource()

# --- Pedersen commitments: hide a value now, open and verify it later.

x, r = Scalar(42), rng.scalar_nonzero()
commitment = pedersen_commit(x, r)
print("commit to 42        ", commitment.c.data.hex()[:32], "...")
print("opens as 42?        ", pedersen_verify(commitment, x, r))
print("opens as 43?        ", pedersen_verify(commitment, Scalar(43), r))

# Commitments add up: commit(a) + commit(b) opens as a + b.
c2 = pedersen_commit(Scalar(8), rng.scalar_nonzero())
print()

# --- ElGamal under a combined key: neither party can decrypt alone.

alice, bob = keygen(rng), keygen(rng)
shared = CombinedKey([alice.pk, bob.pk])

ct = encrypt(Scalar(1), rng.scalar_nonzero(), shared.pk)
share_a = partial_decrypt(ct.b, alice.sk)
share_b = partial_decrypt(ct.b, bob.sk)
plain = ct.a - share_a - share_b
print("two-party decryption of Enc(1):", discrete_log_small(plain, 4))

# Ciphertexts add: Enc(1) + Enc(1) decrypts to 2.
ct_sum = ct + encrypt(Scalar(1), rng.scalar_nonzero(), shared.pk)
plain = ct_sum.a - partial_decrypt(ct_sum.b, alice.sk) - partial_decrypt(ct_sum.b, bob.sk)
print("Enc(1) + Enc(1) decrypts to:   ", discrete_log_small(plain, 4))
print()

# --- Proofs: every claim a trader makes travels with a transcript-bound proof.

ctx = b"demo-session/round-1"

# "I know the private key for this public key."
proof = sigma.prove_dlog(alice.sk, GENERATOR, alice.pk, ctx, rng)
print("key ownership proof verifies:        ", sigma.verify_dlog(proof, GENERATOR, alice.pk, ctx))
print("...but not in another session:       ", sigma.verify_dlog(proof, GENERATOR, alice.pk, b"other"))

# "This ciphertext encrypts a 0 or a 1" (without saying which).
m, r = 1, rng.scalar_nonzero()
bit_ct = encrypt(Scalar(m), r, shared.pk)
bit_proof = sigma.prove_bit(m, r, bit_ct, shared.pk, ctx, rng)
print("bit proof verifies:                  ", sigma.verify_bit(bit_proof, bit_ct, shared.pk, ctx))

cheat_ct = encrypt(Scalar(2), r, shared.pk)
print("same proof on an Enc(2) ciphertext:  ", sigma.verify_bit(bit_proof, cheat_ct, shared.pk, ctx))
