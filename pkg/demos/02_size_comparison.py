"""
Who has the smaller order?
==========================

Two traders compare order sizes without revealing them. The circuit
encrypts, per bit position j, the value

    gamma_j = 1 + b2_j - b1_j + sum_{d>j} 2^d (b1_d - b2_d)

which is zero exactly when j is the most significant bit where the sizes
differ and trader 1 holds the larger size. Shuffling hides which position
decided; blinding hides every nonzero magnitude. All that survives is one
bit: was there a zero?
"""

from darkpool.compare import gamma, run_local_comparison, size_bits

# --- The plaintext circuit, before any cryptography.

k = 4
s1, s2 = 11, 13
b1, b2 = size_bits(s1, k), size_bits(s2, k)
print(f"s1={s1} bits={b1}   s2={s2} bits={b2}")
print("gamma per slot:", [gamma(j, b1, b2, k) for j in range(1, k + 1)])
print("(no zero: s1 <= s2 ... here s1 < s2)")
print()

s1, s2 = 13, 11
b1, b2 = size_bits(s1, k), size_bits(s2, k)
print(f"s1={s1} bits={b1}   s2={s2} bits={b2}")
print("gamma per slot:", [gamma(j, b1, b2, k) for j in range(1, k + 1)])
print("(a zero: s1 > s2, and its position is the deciding bit)")
print()

# --- The printed-weight pitfall this implementation corrects.
# With weights 2^d - 2 the pair (4, 7) at k=3 produces a zero although
# 4 < 7; weights 2^d make cancellations impossible.
b1, b2 = size_bits(4, 3), size_bits(7, 3)
print("weights 2^d - 2, pair (4, 7):",
      [gamma(j, b1, b2, 3, paper_compat=True) for j in range(1, 4)], "<- false zero")
print("weights 2^d,     pair (4, 7):",
      [gamma(j, b1, b2, 3) for j in range(1, 4)])
print()

# --- The real thing: full protocol, both parties in this process.
# Each message carries its zero-knowledge proofs and both sides verify
# everything; only the verdict and the smaller size come out.

verdict, reveal, session1, session2 = run_local_comparison(13, 11, bit_width=4)
print("verdict:", verdict)
print("revealed size (the smaller):", reveal.size)
print("role 1 learned role 2's bits?",
      "no - only ciphertexts:" , session1.peer_bit_cts[0].a.data.hex()[:24], "...")

# A tie resolves toward role 1 revealing; both orders fill completely.
verdict, reveal, _, _ = run_local_comparison(9, 9, bit_width=4)
print("tie verdict:", verdict, "- revealed:", reveal.size)
