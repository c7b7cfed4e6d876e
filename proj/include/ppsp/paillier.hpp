#pragma once

#include <cstdint>
#include <stdexcept>

#include "ppsp/core_math.hpp"
#include "ppsp/sampler.hpp"

namespace ppsp {

struct KeygenError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Public part: n and n^2. The generator is fixed to g = n + 1.
struct PaillierPublicKey {
  BigInt n;
  Modulus n_sq;
  unsigned key_bits;

  BigInt g() const { return n + 1; }
};

struct PaillierKeypair {
  BigInt p_prime;
  BigInt q_prime;
  PaillierPublicKey pk;
  BigInt lambda;  ///< lcm(p - 1, q - 1)
  BigInt mu;      ///< lambda^-1 mod n
};

struct PaillierCiphertext {
  ModInt value;  ///< element of Z_{n^2}
};

/// Two key_bits/2-bit primes with the top two bits set, so n has exactly
/// key_bits bits. Deterministic in the rng state.
PaillierKeypair paillier_keygen(SeededRng& rng, unsigned key_bits);

/// (1 + msg n) r^n mod n^2 with fresh r in Z*_n.
PaillierCiphertext paillier_encrypt(const PaillierPublicKey& pk, const BigInt& msg, SeededRng& rng);
BigInt paillier_decrypt(const PaillierKeypair& key, const PaillierCiphertext& c);
PaillierCiphertext hom_add(const PaillierPublicKey& pk, const PaillierCiphertext& a, const PaillierCiphertext& b);
PaillierCiphertext hom_scale(const PaillierPublicKey& pk, const PaillierCiphertext& a, const BigInt& k);

struct PaillierRun {
  std::size_t result = 0;
  /// Table-style accounting: one key-sized value per ciphertext.
  std::uint64_t table_bits_x_to_y = 0;
  std::uint64_t table_bits_y_to_x = 0;
  /// Actual widths: 2 key_bits per ciphertext, plus n sent with the inputs.
  std::uint64_t wire_bits_x_to_y = 0;
  std::uint64_t wire_bits_y_to_x = 0;
  double step1_ms = 0;  ///< key generation and encrypting x
  double keygen_ms = 0;  ///< the key-generation share of step1_ms
  double step2_ms = 0;
  double step3_ms = 0;
  double total_ms() const { return step1_ms + step2_ms + step3_ms; }
};

std::uint64_t paillier_table_bits_x_to_y(std::size_t m, unsigned key_bits);
std::uint64_t paillier_table_bits_y_to_x(unsigned key_bits);

/// X encrypts every x_i, Y multiplies the ciphertexts where y_i = 1, X
/// decrypts. Element i is encrypted with substream i, so the ciphertexts do
/// not depend on `threads`.
PaillierRun ppsp_paillier(const BinaryVector& x, const BinaryVector& y, unsigned key_bits, SeededRng& rng,
                          unsigned threads = 1);

/// Same protocol under an existing key (key generation is not timed).
PaillierRun ppsp_paillier(const BinaryVector& x, const BinaryVector& y, const PaillierKeypair& key, SeededRng& rng,
                          unsigned threads = 1);

/// Encrypts the first `count` entries of x only; used to time a sample.
std::vector<PaillierCiphertext> paillier_encrypt_vector(const PaillierPublicKey& pk, const BinaryVector& x,
                                                        std::size_t count, SeededRng& rng, unsigned threads = 1);

}  // namespace ppsp
