"""Dark pool with hidden order sizes.

A relay operator matches sizeless orders at market price; the matched pair
then runs a zero-knowledge comparison to learn only whose order is smaller,
and only the smaller size is ever revealed for settlement.

Layers, bottom up:

- ``group``:    prime-order group, scalars, Pedersen commitments
- ``elgamal``:  additively homomorphic EC ElGamal with 2-of-2 combined keys
- ``sigma``:    non-interactive proofs (dlog, equal logs, bit, signatures)
- ``shuffle``:  verifiable re-encryption shuffle of ciphertext vectors
- ``compare``:  the two-party size-comparison state machine
- ``relay``:    the operator service (registry, book, matching, relaying)
- ``client``:   the trader daemon (orders, price checks, protocol driver)
"""

from .group import (
    GENERATOR,
    IDENTITY,
    Q,
    GeneratorSet,
    GroupPoint,
    PedersenCommitment,
    RandomSource,
    Scalar,
    hash_to_scalar,
    pedersen_commit,
    pedersen_verify,
)

__all__ = [
    "GENERATOR",
    "IDENTITY",
    "Q",
    "GeneratorSet",
    "GroupPoint",
    "PedersenCommitment",
    "RandomSource",
    "Scalar",
    "hash_to_scalar",
    "pedersen_commit",
    "pedersen_verify",
]

__version__ = "0.1.0"
