#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppsp/params.hpp"
#include "ppsp/randmask.hpp"
#include "ppsp/sampler.hpp"

namespace ppsp {

enum class Scheme { Lwe, Paillier, Randomised };

Scheme parse_scheme(const std::string& name);
std::string scheme_name(Scheme s);

struct BenchConfig {
  Scheme scheme = Scheme::Lwe;
  ParameterSet set;
  std::vector<std::size_t> dims;  ///< empty means {set.m}
  unsigned trials = 1;
  Seed seed{};
  unsigned threads = 1;
  bool warmup = true;  ///< run and discard one extra trial per dimension
  /// Paillier modulus size; 0 picks it from the set's security level.
  unsigned key_bits = 0;
  /// Paillier runs longer than this many elements are timed on a prefix of
  /// this length and scaled linearly to m.
  std::size_t paillier_sample = 100;
  MaskConfig mask;
};

struct BenchRecord {
  std::string scheme;
  std::string set;
  std::size_t m = 0;
  unsigned trials = 0;
  double setup_ms = 0;  ///< one-off work outside the steps (deriving A)
  double step1_ms = 0;  ///< means over trials
  double step2_ms = 0;
  double step3_ms = 0;
  double total_ms = 0;
  double median_total_ms = 0;
  double keygen_ms = 0;  ///< mean key/prime generation time inside step 1
  std::uint64_t bits_x_to_y = 0;
  std::uint64_t bits_y_to_x = 0;
  std::size_t failures = 0;
  bool extrapolated = false;
};

/// Modulus size for a set: the 80/112/128/192/256-bit sets map to
/// 1024/2048/3072/7680/15360 bits, everything else to 3072.
unsigned paillier_key_bits_for(const ParameterSet& set);

std::vector<BenchRecord> bench_lwe(const BenchConfig& cfg);
std::vector<BenchRecord> bench_paillier(const BenchConfig& cfg);
std::vector<BenchRecord> bench_randomised(const BenchConfig& cfg);
std::vector<BenchRecord> run_bench(const BenchConfig& cfg);

std::string csv_header();
std::string to_csv_row(const BenchRecord& r);
std::string to_csv(const std::vector<BenchRecord>& records);
nlohmann::json to_json(const BenchRecord& r);

struct CommsRow {
  std::string scheme;
  std::string accounting;  ///< "table" or "wire"
  std::uint64_t bits_x_to_y = 0;
  std::uint64_t bits_y_to_x = 0;
};

struct CommsReport {
  std::string set;
  std::size_t m = 0;
  unsigned key_bits = 0;
  unsigned k1 = 0;
  std::vector<CommsRow> rows;  ///< LWE, Paillier, Randomisation (table), then the wire figures
};

/// Closed-form message sizes at dimension m. Paillier uses `key_bits`
/// (0 picks it from the set), randomisation uses k1.
CommsReport comms_report(const ParameterSet& set, std::size_t m, unsigned key_bits = 0,
                         const MaskConfig& mask = {});

/// Decimal units with one decimal place, rounded to nearest: kB below
/// 10^6 bytes, MB above. 28500 bits -> "3.6 kB".
std::string format_size(std::uint64_t bits);

nlohmann::json to_json(const CommsReport& r);

/// Uniform random binary vector.
BinaryVector random_binary(SeededRng& rng, std::size_t m);

}  // namespace ppsp
