#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ppsp/core_math.hpp"
#include "ppsp/sampler.hpp"

namespace ppsp {

/// The masking parameters are too small for the vector length, or a
/// recovered value left [0, m].
struct ParameterViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bit lengths: k1 for the prime p, k2 for the prime alpha, k3 for the masks
/// c_i and k4 for Y's multipliers r_i.
struct MaskConfig {
  unsigned k1 = 3072;
  unsigned k2 = 80;
  unsigned k3 = 30;
  unsigned k4 = 30;
};

/// Throws ParameterViolation unless, for m + 2 slots,
///   (m+2)(2^(k2+k3) + 2^(k2+k4) + 2^(k3+k4)) < 2^(2 k2 - 2)   (noise below alpha^2)
///   (m+2) 2^(2 k2) + 2^(2 k2 - 2) < 2^(k1 - 1)                 (no wrap mod p)
void check_mask_config(const MaskConfig& cfg, std::size_t m);

/// Per-session secrets of X.
struct RandMaskParams {
  MaskConfig cfg;
  BigInt p_mod;        ///< k1-bit prime
  BigInt alpha_prime;  ///< k2-bit prime
  BigInt s_mask;       ///< uniform in [1, p)
  BigInt s_inv;
};

/// Fresh primes and mask; checks the config against m first.
RandMaskParams rand_setup(const MaskConfig& cfg, std::size_t m, SeededRng& rng);

struct MaskedVector {
  std::vector<BigInt> c;  ///< m + 2 entries of Z_p
};

/// C_i = s (a_i alpha + c_i) mod p over x padded with two zeros; c_i nonzero
/// k3-bit values drawn per element.
MaskedVector mask(const BinaryVector& x, const RandMaskParams& params, SeededRng& rng, unsigned threads = 1);
/// Same with caller-supplied c (length m + 2).
MaskedVector mask_with(const BinaryVector& x, const RandMaskParams& params, std::span<const BigInt> c);

/// D = sum of (alpha C_i if b_i = 1, else r_i C_i) mod p, y padded with two
/// zeros; r_i nonzero k4-bit values.
BigInt respond(const MaskedVector& masked, const BinaryVector& y, const RandMaskParams& params, SeededRng& rng,
               unsigned threads = 1);
BigInt respond_with(const MaskedVector& masked, const BinaryVector& y, const RandMaskParams& params,
                    std::span<const BigInt> r);

/// floor((s^-1 D mod p) / alpha^2). Throws ParameterViolation above m.
std::size_t recover(const BigInt& d, const RandMaskParams& params, std::size_t m);

struct RandRun {
  std::size_t result = 0;
  /// (m + 4) k1 and k1, the table accounting.
  std::uint64_t table_bits_x_to_y = 0;
  std::uint64_t table_bits_y_to_x = 0;
  /// What the steps send: m + 2 masked values plus alpha and p.
  std::uint64_t wire_bits_x_to_y = 0;
  std::uint64_t wire_bits_y_to_x = 0;
  double step1_ms = 0;  ///< prime generation and masking
  double keygen_ms = 0;  ///< the key-generation share of step1_ms
  double step2_ms = 0;
  double step3_ms = 0;
  double total_ms() const { return step1_ms + step2_ms + step3_ms; }
};

std::uint64_t rand_table_bits_x_to_y(std::size_t m, unsigned k1);
std::uint64_t rand_wire_bits_x_to_y(std::size_t m, const MaskConfig& cfg);

RandRun ppsp_randomised(const BinaryVector& x, const BinaryVector& y, const MaskConfig& cfg, SeededRng& rng,
                        unsigned threads = 1);

}  // namespace ppsp
