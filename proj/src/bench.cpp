#include "ppsp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ppsp/lwe_protocol.hpp"
#include "ppsp/paillier.hpp"

namespace ppsp {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

struct Trial {
  double step1 = 0, step2 = 0, step3 = 0, keygen = 0;
  bool failed = false;
  double total() const { return step1 + step2 + step3; }
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : (v[k - 1] + v[k]) / 2;
}

void summarise(BenchRecord& rec, const std::vector<Trial>& trials) {
  const double n = static_cast<double>(trials.size());
  std::vector<double> totals;
  for (const auto& t : trials) {
    rec.step1_ms += t.step1 / n;
    rec.step2_ms += t.step2 / n;
    rec.step3_ms += t.step3 / n;
    rec.keygen_ms += t.keygen / n;
    rec.failures += t.failed ? 1 : 0;
    totals.push_back(t.total());
  }
  rec.total_ms = std::accumulate(totals.begin(), totals.end(), 0.0) / n;
  rec.median_total_ms = median(totals);
  rec.trials = static_cast<unsigned>(trials.size());
}

std::vector<std::size_t> dims_of(const BenchConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("trials must be at least 1");
  std::vector<std::size_t> dims = cfg.dims.empty() ? std::vector<std::size_t>{cfg.set.m} : cfg.dims;
  for (auto d : dims)
    if (d < 1) throw std::invalid_argument("dimensions must be at least 1");
  return dims;
}

// Runs warm-up plus cfg.trials calls of `one`, keeping the timed ones.
template <typename Fn>
std::vector<Trial> repeat(const BenchConfig& cfg, Fn&& one) {
  if (cfg.warmup) one();
  std::vector<Trial> out;
  for (unsigned k = 0; k < cfg.trials; ++k) out.push_back(one());
  return out;
}

std::string fixed(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  os << v;
  return os.str();
}

}  // namespace

Scheme parse_scheme(const std::string& name) {
  if (name == "lwe") return Scheme::Lwe;
  if (name == "paillier") return Scheme::Paillier;
  if (name == "randomised" || name == "randomized" || name == "rand") return Scheme::Randomised;
  throw std::invalid_argument("unknown scheme: " + name + " (expected lwe, paillier or randomised)");
}

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Lwe: return "lwe";
    case Scheme::Paillier: return "paillier";
    case Scheme::Randomised: return "randomised";
  }
  return "?";
}

BinaryVector random_binary(SeededRng& rng, std::size_t m) {
  std::vector<std::uint8_t> bits(m);
  std::vector<std::uint8_t> bytes((m + 7) / 8);
  rng.fill(bytes);
  for (std::size_t i = 0; i < m; ++i) bits[i] = (bytes[i / 8] >> (i % 8)) & 1;
  return BinaryVector(std::move(bits));
}

unsigned paillier_key_bits_for(const ParameterSet& set) {
  if (set.name == "80-bit") return 1024;
  if (set.name == "112-bit") return 2048;
  if (set.name == "192-bit") return 7680;
  if (set.name == "256-bit") return 15360;
  return 3072;
}

std::vector<BenchRecord> bench_lwe(const BenchConfig& cfg) {
  std::vector<BenchRecord> out;
  SeededRng rng(derive_seed(cfg.seed, "ppsp/bench/lwe"));
  for (std::size_t m : dims_of(cfg)) {
    const ParameterSet p = with_dimension(cfg.set, m);
    if (!validate(p).passed())
      throw ParameterError("parameter set " + p.name + " fails validation at m = " + std::to_string(m));
    BenchRecord rec{"lwe", p.name, m};
    const auto t0 = Clock::now();
    auto a = std::make_shared<const ModMatrix>(derive_public_matrix(rng.next_seed(), p, cfg.threads));
    rec.setup_ms = elapsed_ms(t0);
    auto trials = repeat(cfg, [&] {
      const BinaryVector x = random_binary(rng, m);
      const BinaryVector y = random_binary(rng, m);
      SeededRng y_rng(rng.next_seed());
      Trial t;
      try {
        const LweTranscript tr = run_local(p, a, x, y, y_rng, cfg.threads);
        t = {tr.step1_ms, tr.step2_ms, tr.step3_ms, 0, tr.result != dot(x, y)};
      } catch (const DecryptionFailure&) {
        t.failed = true;
      }
      return t;
    });
    summarise(rec, trials);
    rec.bits_x_to_y = lwe_bits_x_to_y(p);
    rec.bits_y_to_x = lwe_bits_y_to_x(p);
    out.push_back(rec);
  }
  return out;
}

std::vector<BenchRecord> bench_paillier(const BenchConfig& cfg) {
  std::vector<BenchRecord> out;
  SeededRng rng(derive_seed(cfg.seed, "ppsp/bench/paillier"));
  const unsigned key_bits = cfg.key_bits ? cfg.key_bits : paillier_key_bits_for(cfg.set);
  for (std::size_t m : dims_of(cfg)) {
    BenchRecord rec{"paillier", cfg.set.name, m};
    const bool sampled = cfg.paillier_sample > 0 && m > cfg.paillier_sample;
    const std::size_t run_m = sampled ? cfg.paillier_sample : m;
    const double scale = static_cast<double>(m) / static_cast<double>(run_m);
    auto trials = repeat(cfg, [&] {
      const BinaryVector x = random_binary(rng, run_m);
      const BinaryVector y = random_binary(rng, run_m);
      const PaillierRun r = ppsp_paillier(x, y, key_bits, rng, cfg.threads);
      // Per-element work scales with m; key generation and decryption do not.
      return Trial{r.keygen_ms + (r.step1_ms - r.keygen_ms) * scale, r.step2_ms * scale, r.step3_ms, r.keygen_ms,
                   r.result != dot(x, y)};
    });
    summarise(rec, trials);
    rec.extrapolated = sampled;
    rec.bits_x_to_y = paillier_table_bits_x_to_y(m, key_bits);
    rec.bits_y_to_x = paillier_table_bits_y_to_x(key_bits);
    out.push_back(rec);
  }
  return out;
}

std::vector<BenchRecord> bench_randomised(const BenchConfig& cfg) {
  std::vector<BenchRecord> out;
  SeededRng rng(derive_seed(cfg.seed, "ppsp/bench/randomised"));
  for (std::size_t m : dims_of(cfg)) {
    check_mask_config(cfg.mask, m);
    BenchRecord rec{"randomised", "k1=" + std::to_string(cfg.mask.k1), m};
    auto trials = repeat(cfg, [&] {
      const BinaryVector x = random_binary(rng, m);
      const BinaryVector y = random_binary(rng, m);
      Trial t;
      try {
        const RandRun r = ppsp_randomised(x, y, cfg.mask, rng, cfg.threads);
        t = {r.step1_ms, r.step2_ms, r.step3_ms, r.keygen_ms, r.result != dot(x, y)};
      } catch (const ParameterViolation&) {
        t.failed = true;
      }
      return t;
    });
    summarise(rec, trials);
    rec.bits_x_to_y = rand_table_bits_x_to_y(m, cfg.mask.k1);
    rec.bits_y_to_x = cfg.mask.k1;
    out.push_back(rec);
  }
  return out;
}

std::vector<BenchRecord> run_bench(const BenchConfig& cfg) {
  switch (cfg.scheme) {
    case Scheme::Lwe: return bench_lwe(cfg);
    case Scheme::Paillier: return bench_paillier(cfg);
    case Scheme::Randomised: return bench_randomised(cfg);
  }
  return {};
}

std::string csv_header() {
  return "scheme,set,m,trials,setup_ms,step1_ms,step2_ms,step3_ms,total_ms,median_total_ms,keygen_ms,"
         "bits_x_to_y,bits_y_to_x,failures,extrapolated";
}

std::string to_csv_row(const BenchRecord& r) {
  std::ostringstream os;
  os << r.scheme << ',' << r.set << ',' << r.m << ',' << r.trials << ',' << fixed(r.setup_ms) << ','
     << fixed(r.step1_ms) << ',' << fixed(r.step2_ms) << ',' << fixed(r.step3_ms) << ',' << fixed(r.total_ms) << ','
     << fixed(r.median_total_ms) << ',' << fixed(r.keygen_ms) << ',' << r.bits_x_to_y << ',' << r.bits_y_to_x << ','
     << r.failures << ',' << (r.extrapolated ? 1 : 0);
  return os.str();
}

std::string to_csv(const std::vector<BenchRecord>& records) {
  std::string out = csv_header() + "\n";
  for (const auto& r : records) out += to_csv_row(r) + "\n";
  return out;
}

nlohmann::json to_json(const BenchRecord& r) {
  return {{"scheme", r.scheme},
          {"set", r.set},
          {"m", r.m},
          {"trials", r.trials},
          {"setup_ms", r.setup_ms},
          {"step1_ms", r.step1_ms},
          {"step2_ms", r.step2_ms},
          {"step3_ms", r.step3_ms},
          {"total_ms", r.total_ms},
          {"median_total_ms", r.median_total_ms},
          {"keygen_ms", r.keygen_ms},
          {"bits_x_to_y", r.bits_x_to_y},
          {"bits_y_to_x", r.bits_y_to_x},
          {"failures", r.failures},
          {"extrapolated", r.extrapolated}};
}

std::string format_size(std::uint64_t bits) {
  // Tenths of a kB (800 bits) or of an MB (800000 bits), half-up.
  const bool mega = bits >= 8'000'000;
  const std::uint64_t unit = mega ? 800'000 : 800;
  const std::uint64_t tenths = (bits + unit / 2) / unit;
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10) + (mega ? " MB" : " kB");
}

CommsReport comms_report(const ParameterSet& set, std::size_t m, unsigned key_bits, const MaskConfig& mask) {
  CommsReport r{set.name, m, key_bits ? key_bits : paillier_key_bits_for(set), mask.k1, {}};
  ParameterSet p = set;
  p.m = m;
  r.rows.push_back({"LWE", "table", lwe_bits_x_to_y(p), lwe_bits_y_to_x(p)});
  r.rows.push_back({"Paillier", "table", paillier_table_bits_x_to_y(m, r.key_bits),
                    paillier_table_bits_y_to_x(r.key_bits)});
  r.rows.push_back({"Randomisation", "table", rand_table_bits_x_to_y(m, mask.k1), mask.k1});
  r.rows.push_back({"Paillier", "wire", static_cast<std::uint64_t>(m) * 2 * r.key_bits + r.key_bits,
                    2 * static_cast<std::uint64_t>(r.key_bits)});
  r.rows.push_back({"Randomisation", "wire", rand_wire_bits_x_to_y(m, mask), mask.k1});
  return r;
}

nlohmann::json to_json(const CommsReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"scheme", row.scheme},
                    {"accounting", row.accounting},
                    {"bits_x_to_y", row.bits_x_to_y},
                    {"bits_y_to_x", row.bits_y_to_x},
                    {"x_to_y", format_size(row.bits_x_to_y)},
                    {"y_to_x", format_size(row.bits_y_to_x)}});
  return {{"set", r.set}, {"m", r.m}, {"paillier_key_bits", r.key_bits}, {"k1", r.k1}, {"rows", rows}};
}

}  // namespace ppsp
