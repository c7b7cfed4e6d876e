#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "ppsp/core_math.hpp"

namespace ppsp {

struct ParameterSet;

using Seed = std::array<std::uint8_t, 32>;

/// Parses exactly 64 hex digits (an optional 0x prefix is accepted).
Seed parse_seed(std::string_view hex);
std::string to_hex(const Seed& seed);
/// Fresh seed from OS entropy.
Seed random_seed();
/// Domain-separated child seed: BLAKE2b-256(label || seed).
Seed derive_seed(const Seed& seed, std::string_view label);

/// Deterministic byte stream: ChaCha20 keyed by the seed, with the 64-bit
/// stream id as nonce. Single owner; not thread safe.
///
/// Byte order is fixed (keystream order, little-endian words), so a given
/// (seed, stream) produces the same values on every platform.
class SeededRng {
 public:
  explicit SeededRng(const Seed& seed, std::uint64_t stream = 0);

  void fill(std::span<std::uint8_t> out);
  std::uint64_t next_u64();
  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit_double();

  /// Independent stream number `index`, derived from this generator's
  /// (seed, stream) without advancing it. Equivalent to
  /// `StreamFamily(*this).stream(index)`.
  SeededRng substream(std::uint64_t index) const;

  /// Draws 32 bytes from this stream.
  Seed next_seed();

 private:
  friend class StreamFamily;
  void refill();

  Seed key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint8_t, 256> buffer_{};
  std::size_t pos_ = buffer_.size();
};

/// The substreams of one generator; derive the family once and hand out
/// per-column streams cheaply. Safe to share across threads.
class StreamFamily {
 public:
  explicit StreamFamily(const SeededRng& parent);
  SeededRng stream(std::uint64_t index) const { return SeededRng(key_, index); }

 private:
  Seed key_;
};

/// Uniform element of [0, q) by rejection on ceil(log2 q)-bit draws.
BigInt uniform_mod_q(SeededRng& rng, const Modulus& q);

/// Same distribution, written straight into a limb slot.
void uniform_mod_q_into(SeededRng& rng, const Modulus& q, std::span<mp_limb_t> out);

/// Uniform integer in [0, 2^bits).
BigInt random_bits(SeededRng& rng, unsigned bits);

/// Prime of exactly `bits` bits: the next prime after a random value with
/// its `top_bits` leading bits set. Throws std::runtime_error after a bounded
/// number of attempts.
BigInt random_prime(SeededRng& rng, unsigned bits, unsigned top_bits = 1);

ModVector uniform_vector(SeededRng& rng, const Modulus& q, std::size_t size);

/// One draw of the rounded Gaussian error distribution.
struct ErrorSample {
  ModInt value;       ///< round(pre_round * q) mod q
  double pre_round;   ///< w ~ Normal(0, alpha / sqrt(2 pi))
};

/// Normal(0, 1) via the polar Box-Muller transform. Only IEEE-exact
/// operations and a correctly rounded logarithm are used, so the output is
/// reproducible across platforms.
double standard_normal(SeededRng& rng);

/// round(w * q) with w taken as an exact binary fraction, ties away from zero.
BigInt scale_and_round(double w, const BigInt& q);

ErrorSample gaussian_error(SeededRng& rng, const ParameterSet& p);

/// Public matrix A in Z_q^{n x m}: column j is filled from substream j of the
/// seed, so the matrix is independent of `threads`.
ModMatrix derive_public_matrix(const Seed& seed, const ParameterSet& p, unsigned threads = 1);

}  // namespace ppsp
