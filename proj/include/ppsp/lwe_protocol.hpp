#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppsp/core_math.hpp"
#include "ppsp/params.hpp"
#include "ppsp/sampler.hpp"

namespace ppsp {

/// Step 3 produced a value outside [0, m]: the aggregate error exceeded the
/// bin half-width.
struct DecryptionFailure : std::runtime_error {
  DecryptionFailure(const std::string& what, BigInt raw) : std::runtime_error(what), raw(std::move(raw)) {}
  BigInt raw;  ///< the rounded value before the range check
};

struct ProtocolStateError : std::logic_error {
  using std::logic_error::logic_error;
};

struct MsgU {
  ModVector u;
};

struct MsgC {
  ModInt c1;
  ModVector c2;
};

/// Explicit error terms for Step 2, used instead of sampling.
struct InjectedErrors {
  BigInt e1;
  std::vector<BigInt> e2;  ///< length m, signed
};

/// Test hook for Step 2. Any field left empty is sampled as usual.
struct Step2Override {
  std::optional<ModVector> t;
  std::optional<InjectedErrors> errors;
};

/// What Step 2 actually used, for checking the decryption identity.
struct Step2Trace {
  std::optional<ModVector> t;
  BigInt e1;
  std::vector<BigInt> e2;  ///< centered representatives
};

class EntityX {
 public:
  enum class State { Init, SentU, Done };

  EntityX(ParameterSet p, std::shared_ptr<const ModMatrix> a, BinaryVector x);

  /// u = A x mod q.
  MsgU step1(unsigned threads = 1);
  /// Recovers x^T y; throws DecryptionFailure when out of range.
  std::size_t step3(const MsgC& msg);

  State state() const { return state_; }
  const ParameterSet& params() const { return p_; }

 private:
  ParameterSet p_;
  std::shared_ptr<const ModMatrix> a_;
  BinaryVector x_;
  BigInt bin_;
  State state_ = State::Init;
};

class EntityY {
 public:
  enum class State { Init, Responded };

  EntityY(ParameterSet p, std::shared_ptr<const ModMatrix> a, BinaryVector y);

  /// Samples t, e1 and e2 from `rng`; e2_j comes from substream j of a seed
  /// drawn from `rng`, so the result does not depend on `threads`.
  MsgC step2(const MsgU& msg, SeededRng& rng, unsigned threads = 1);
  MsgC step2(const MsgU& msg, SeededRng& rng, unsigned threads, const Step2Override& hook,
             Step2Trace* trace = nullptr);

  State state() const { return state_; }

 private:
  ParameterSet p_;
  std::shared_ptr<const ModMatrix> a_;
  BinaryVector y_;
  BigInt bin_;
  State state_ = State::Init;
};

struct LweTranscript {
  MsgU msg_u;
  MsgC msg_c;
  std::size_t result = 0;
  std::uint64_t bits_x_to_y = 0;
  std::uint64_t bits_y_to_x = 0;
  std::uint64_t bytes_x_to_y = 0;  ///< ceil(bits / 8)
  std::uint64_t bytes_y_to_x = 0;
  double setup_ms = 0;  ///< deriving A
  double step1_ms = 0;
  double step2_ms = 0;
  double step3_ms = 0;
  double total_ms() const { return step1_ms + step2_ms + step3_ms; }
};

/// Payload sizes in bits: n W and (m + 1) W with W = ceil(log2 q).
std::uint64_t lwe_bits_x_to_y(const ParameterSet& p);
std::uint64_t lwe_bits_y_to_x(const ParameterSet& p);

/// One in-process execution of Steps 1-3. A is derived from `seed`, Y's
/// randomness from a separate child seed. The caller validates `p`.
/// A failed Step 3 propagates as DecryptionFailure.
LweTranscript run_local(const ParameterSet& p, const BinaryVector& x, const BinaryVector& y,
                        const Seed& seed, unsigned threads = 1);

/// Same, with a precomputed A (benchmarks reuse it across trials).
LweTranscript run_local(const ParameterSet& p, std::shared_ptr<const ModMatrix> a, const BinaryVector& x,
                        const BinaryVector& y, SeededRng& y_rng, unsigned threads = 1);

// Wire framing: "PPSP", version, kind, set name, n, m, field width, then
// fixed-width big-endian fields packed back to back.
struct FrameHeader {
  std::uint8_t kind = 0;  ///< 1 = MsgU, 2 = MsgC
  std::string set_name;
  std::uint32_t n = 0;
  std::uint32_t m = 0;
  std::uint32_t q_bits = 0;
};

std::vector<std::uint8_t> encode(const MsgU& msg, const ParameterSet& p);
std::vector<std::uint8_t> encode(const MsgC& msg, const ParameterSet& p);
FrameHeader read_header(std::span<const std::uint8_t> frame);
MsgU decode_msg_u(std::span<const std::uint8_t> frame, const ParameterSet& p);
MsgC decode_msg_c(std::span<const std::uint8_t> frame, const ParameterSet& p);
/// Header length in bytes for a given set name.
std::size_t frame_header_size(const ParameterSet& p);

}  // namespace ppsp
