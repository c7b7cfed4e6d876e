// Acceptance run: one line per criterion, nonzero exit if any fails.

#include <json.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <thread>

#include "ppsp/bench.hpp"
#include "ppsp/lwe_protocol.hpp"
#include "ppsp/paillier.hpp"
#include "ppsp/params.hpp"
#include "ppsp/randmask.hpp"

using namespace ppsp;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v, int precision = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

Seed seed_from(std::mt19937_64& gen) {
  Seed s;
  for (auto& b : s) b = static_cast<std::uint8_t>(gen());
  return s;
}

// Plain oracle over raw bits, independent of the library's dot product.
struct Bits {
  std::vector<std::uint8_t> v;
  BinaryVector vec() const { return BinaryVector(v); }
};

Bits random_bits(std::mt19937_64& gen, std::size_t m) {
  Bits b{std::vector<std::uint8_t>(m)};
  for (auto& x : b.v) x = gen() & 1;
  return b;
}

std::size_t oracle_dot(const Bits& a, const Bits& b) {
  std::size_t s = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i) s += a.v[i] & b.v[i];
  return s;
}

Outcome criterion1() {
  const ParameterSet p = toy_set();
  if (!validate(p, Validation::RelaxSecurity).passed()) return {false, "toy set fails relaxed validation"};
  std::mt19937_64 gen(101);
  const auto t0 = Clock::now();
  std::size_t failures = 0, ambiguous = 0, other_failures = 0;
  const int runs = 100000;
  for (int k = 0; k < runs; ++k) {
    const Bits x = random_bits(gen, p.m), y = random_bits(gen, p.m);
    // x = 1^m with y = 0 or 1^m: s = 0 and s = m land in the same slot.
    const std::size_t want = oracle_dot(x, y);
    const bool shared = oracle_dot(x, x) == p.m && (want == 0 || want == p.m);
    ambiguous += shared;
    bool ok = false;
    try {
      ok = run_local(p, x.vec(), y.vec(), seed_from(gen)).result == want;
    } catch (const DecryptionFailure&) {
    }
    failures += !ok;
    other_failures += !ok && !shared;
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < 60,
          "toy set (n=4, m=8, q=2^20), " + std::to_string(runs) + " runs, " + std::to_string(failures) +
              " failures (" + std::to_string(other_failures) + " outside the shared s = 0 / s = m slot, which " +
              std::to_string(ambiguous) + " runs hit), " +
              num(secs, 1) + " s (limit 60 s)"};
}

Outcome criterion2() {
  const ParameterSet p = *find_builtin("I");
  std::mt19937_64 gen(102);
  const auto t0 = Clock::now();
  std::size_t failures = 0;
  const int runs = 100;
  for (int k = 0; k < runs; ++k) {
    const Bits x = random_bits(gen, p.m), y = random_bits(gen, p.m);
    try {
      if (run_local(p, x.vec(), y.vec(), seed_from(gen)).result != oracle_dot(x, y)) ++failures;
    } catch (const DecryptionFailure&) {
      ++failures;
    }
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < 1800, "Set I, " + std::to_string(runs) + " runs with fresh A, " +
                                            std::to_string(failures) + " failures, " + num(secs, 1) + " s"};
}

// Injects e1 and e2 so that e2^T x - e1 equals `aggregate`, with the total
// split at random over e1 and the support of x.
long run_with_aggregate(const ParameterSet& p, const std::shared_ptr<const ModMatrix>& a, const Bits& x,
                        const Bits& y, const BigInt& aggregate, std::mt19937_64& gen) {
  EntityX ex(p, a, x.vec());
  EntityY ey(p, a, y.vec());
  SeededRng rng(seed_from(gen));
  InjectedErrors errs{BigInt(0), std::vector<BigInt>(p.m, 0)};
  BigInt rest = aggregate;
  for (std::size_t j = 0; j < p.m; ++j) {
    if (!x.v[j]) {
      errs.e2[j] = static_cast<long>(gen() % 2001) - 1000;  // ignored by X's sum
      continue;
    }
    const BigInt part = static_cast<long>(gen() % 20001) - 10000;
    errs.e2[j] = part;
    rest -= part;
  }
  errs.e1 = -rest;
  const MsgC mc = ey.step2(ex.step1(), rng, 1, Step2Override{std::nullopt, errs});
  try {
    return static_cast<long>(ex.step3(mc));
  } catch (const DecryptionFailure& f) {
    return f.raw.get_si();
  }
}

Outcome criterion3() {
  const ParameterSet p = *find_builtin("I");
  const BigInt half = half_bin(p);
  std::mt19937_64 gen(103);
  const auto a = std::make_shared<const ModMatrix>(derive_public_matrix(seed_from(gen), p));
  int bad = 0;
  const int placements = 100;
  for (int k = 0; k < placements; ++k) {
    const Bits x = random_bits(gen, p.m), y = random_bits(gen, p.m);
    const long s = static_cast<long>(oracle_dot(x, y));
    for (int sign : {1, -1}) {
      if (run_with_aggregate(p, a, x, y, sign * (half - 1), gen) != s) ++bad;
      if (run_with_aggregate(p, a, x, y, sign * (half + 1), gen) != s + sign) ++bad;
    }
  }
  return {bad == 0, "Set I, " + std::to_string(placements) + " placements x 2 signs at floor(q/2m) +/- 1 (2^" +
                        num(log2_of(mpq_class(half)), 2) + "), " + std::to_string(bad) + " mismatches"};
}

Outcome criterion4() {
  std::string failed;
  double min_cost = INFINITY;
  for (const auto& p : builtin_sets()) {
    if (!validate(p).passed()) failed += " " + p.name;
  }
  for (const char* name : {"I", "II", "III", "IV", "V", "VI"}) {
    const double c = attack_cost(*find_builtin(name)).attack_cost_log2;
    min_cost = std::min(min_cost, c);
    if (c < 128) failed += std::string(" cost:") + name;
  }
  return {failed.empty(), std::to_string(builtin_sets().size()) + " sets validated, minimum attack cost over I-VI 2^" +
                              num(min_cost, 1) + (failed.empty() ? "" : ", failing:" + failed)};
}

Outcome criterion5() {
  const std::pair<const char*, double> table[] = {{"I", 538}, {"II", 238}, {"III", 85}, {"IV", 24}};
  bool ok = true;
  std::string detail = "log2(alpha_max q) vs table:";
  for (auto [name, want] : table) {
    const auto p = *find_builtin(name);
    const double got = log2_of(alpha_upper_bound(p) * p.q);
    ok = ok && std::fabs(got - want) <= 2.0;
    detail += std::string(" ") + name + " " + num(got, 2) + "/" + num(want, 0);
  }
  return {ok, detail + " (tolerance 2 bits)"};
}

Outcome criterion6() {
  const auto r = comms_report(*find_builtin("I"), 30000);
  const auto& lwe = r.rows[0];
  const auto& pai = r.rows[1];
  const auto& rnd = r.rows[2];
  const bool bits_ok = lwe.bits_x_to_y == 28500 && lwe.bits_y_to_x == 30001ull * 570;
  const bool render_ok = format_size(lwe.bits_x_to_y) == "3.6 kB" && format_size(lwe.bits_y_to_x) == "2.1 MB" &&
                         format_size(pai.bits_x_to_y) == "11.5 MB" && format_size(rnd.bits_x_to_y) == "11.5 MB";
  // The Y->X rows are one 3072-bit value = 0.384 kB; the table prints 0.3.
  const double small_kb = static_cast<double>(pai.bits_y_to_x) / 8000.0;
  const bool small_ok = pai.bits_y_to_x == 3072 && rnd.bits_y_to_x == 3072 && std::fabs(small_kb - 0.3) <= 0.1;
  return {bits_ok && render_ok && small_ok,
          "LWE " + std::to_string(lwe.bits_x_to_y) + " / " + std::to_string(lwe.bits_y_to_x) + " bits = " +
              format_size(lwe.bits_x_to_y) + " / " + format_size(lwe.bits_y_to_x) + "; Paillier " +
              format_size(pai.bits_x_to_y) + " / " + format_size(pai.bits_y_to_x) + "; Randomisation " +
              format_size(rnd.bits_x_to_y) + " / " + format_size(rnd.bits_y_to_x) + " (table 0.3 kB, " +
              num(small_kb, 3) + " kB exact, within 0.1 unit)"};
}

Outcome criterion7() {
  std::mt19937_64 gen(107);
  const int pairs = 10000;
  const std::size_t m = 8;
  std::size_t paillier_bad = 0, rand_bad = 0;
  SeededRng rng(seed_from(gen));
  std::optional<PaillierKeypair> key;
  for (int k = 0; k < pairs; ++k) {
    if (k % 100 == 0) key = paillier_keygen(rng, 512);
    const Bits x = random_bits(gen, m), y = random_bits(gen, m);
    if (ppsp_paillier(x.vec(), y.vec(), *key, rng).result != oracle_dot(x, y)) ++paillier_bad;
  }
  const MaskConfig cfg{512, 40, 12, 12};
  check_mask_config(cfg, m);
  for (int k = 0; k < pairs; ++k) {
    const Bits x = random_bits(gen, m), y = random_bits(gen, m);
    try {
      if (ppsp_randomised(x.vec(), y.vec(), cfg, rng).result != oracle_dot(x, y)) ++rand_bad;
    } catch (const ParameterViolation&) {
      ++rand_bad;
    }
  }
  return {paillier_bad == 0 && rand_bad == 0,
          std::to_string(pairs) + " pairs at m = 8: Paillier-512 " + std::to_string(paillier_bad) +
              " mismatches, randomisation (k1, k2, k3, k4) = (512, 40, 12, 12) " + std::to_string(rand_bad) +
              " mismatches"};
}

double lwe_total_ms(const ParameterSet& set, std::size_t m, unsigned trials, std::uint8_t tag,
                    unsigned threads = 1) {
  BenchConfig cfg;
  cfg.set = set;
  cfg.dims = {m};
  cfg.trials = trials;
  cfg.threads = threads;
  cfg.seed.fill(tag);
  return bench_lwe(cfg).at(0).median_total_ms;
}

Outcome criterion8() {
  bool ok = true;
  std::string detail;

  // (a) ordering over Sets I-IV.
  double prev = 0;
  bool ordered = true;
  detail += "(a) totals ms:";
  for (const char* name : {"I", "II", "III", "IV"}) {
    const auto p = *find_builtin(name);
    const double t = lwe_total_ms(p, p.m, 3, 80);
    ordered = ordered && t > prev;
    prev = t;
    detail += std::string(" ") + name + "=" + num(t, 0);
  }
  detail += ordered ? " ordered" : " NOT ordered";
  ok = ok && ordered;

  // (b) Paillier-3072 extrapolated to m = 30000 against LWE Set I.
  const auto set1 = *find_builtin("I");
  const double lwe30k = lwe_total_ms(set1, 30000, 3, 81);
  BenchConfig pc;
  pc.scheme = Scheme::Paillier;
  pc.set = set1;
  pc.dims = {30000};
  pc.key_bits = 3072;
  pc.paillier_sample = 20;
  pc.warmup = false;
  pc.seed.fill(82);
  const double paillier30k = bench_paillier(pc).at(0).total_ms;
  const double ratio = paillier30k / lwe30k;
  detail += "; (b) Paillier/LWE at 30000 = " + num(ratio, 0) + (ratio >= 1e3 ? " >= 1000" : " < 1000");
  ok = ok && ratio >= 1e3;

  // (c) LWE against randomisation at k1 = 3072; the randomisation total
  // includes its prime generation, which that scheme performs in step 1.
  bool faster = true;
  detail += "; (c)";
  for (std::size_t m : {30000u, 40000u, 50000u}) {
    const double l = lwe_total_ms(set1, m, 3, 83);
    BenchConfig rc;
    rc.scheme = Scheme::Randomised;
    rc.dims = {m};
    rc.trials = 3;
    rc.warmup = false;
    rc.seed.fill(84);
    const auto rec = bench_randomised(rc).at(0);
    faster = faster && l < rec.median_total_ms;
    detail += " m=" + std::to_string(m) + " lwe " + num(l, 0) + " vs rand " + num(rec.median_total_ms, 0) +
              " (" + num(rec.total_ms - rec.keygen_ms, 0) + " without primes)";
  }
  ok = ok && faster;

  // (d) four threads against one for Step 2 at m = 2^15.
  {
    auto a = std::make_shared<const ModMatrix>(derive_public_matrix(Seed{}, set1, 1));
    std::mt19937_64 gen(108);
    const Bits x = random_bits(gen, set1.m), y = random_bits(gen, set1.m);
    const Seed yseed = seed_from(gen);
    auto step2 = [&](unsigned threads, MsgC& out) {
      EntityX ex(set1, a, x.vec());
      EntityY ey(set1, a, y.vec());
      const MsgU mu = ex.step1();
      SeededRng rng(yseed);
      const auto t0 = Clock::now();
      out = ey.step2(mu, rng, threads);
      return seconds_since(t0) * 1000;
    };
    const ModInt zero = ModInt::zero(Modulus(set1.q));
    MsgC one{zero, ModVector(Modulus(set1.q), 0)}, four = one;
    double t1 = 1e300, t4 = 1e300;
    for (int k = 0; k < 3; ++k) {
      t1 = std::min(t1, step2(1, one));
      t4 = std::min(t4, step2(4, four));
    }
    const bool identical = one.c1 == four.c1 && one.c2 == four.c2;
    const bool quicker = t4 < t1;
    detail += "; (d) step 2 ms 1 thread " + num(t1, 0) + ", 4 threads " + num(t4, 0) +
              (identical ? ", bit-identical" : ", OUTPUTS DIFFER") + ", " +
              std::to_string(std::thread::hardware_concurrency()) + " hardware threads";
    ok = ok && identical && quicker;
  }
  return {ok, detail};
}

Outcome criterion9() {
  const ParameterSet p = *find_builtin("I");
  SeededRng rng(derive_seed(Seed{}, "acceptance/gaussian"));
  // Reference: sigma = alpha q / sqrt(2 pi); 2^537 still fits a double.
  const double sigma = mpq_class(p.alpha * p.q).get_d() / std::sqrt(2 * std::numbers::pi);
  const int draws = 100000;
  long double sq = 0;
  int tail = 0;
  for (int k = 0; k < draws; ++k) {
    const long double z = gaussian_error(rng, p).value.centered().get_d() / sigma;
    sq += z * z;
    if (std::fabs(z) > 4.5L) ++tail;
  }
  const long double ratio = std::sqrt(sq / draws);
  const double tail_rate = static_cast<double>(tail) / draws;
  return {std::fabs(static_cast<double>(ratio) - 1.0) < 0.05 && tail_rate < 1e-4,
          "Set I, " + std::to_string(draws) + " draws: std / (alpha q / sqrt(2 pi)) = " +
              num(static_cast<double>(ratio), 4) + " (within 5%), tail beyond 4.5 sigma " + std::to_string(tail) +
              "/" + std::to_string(draws)};
}

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult cli(const std::string& args) {
  const std::string cmd = std::string(PPSP_CLI_PATH) + " " + args + " 2>/dev/null";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

Outcome criterion10() {
  const std::string seed = "00112233445566778899aabbccddeeff00112233445566778899aabbccddeeff";
  const std::regex timing("timing [^\n]*\n");
  std::vector<std::string> texts;
  bool codes = true;
  for (const char* threads : {"1", "1", "4"}) {
    const auto r = cli("run --set I --dim 1000 --seed " + seed + " --threads " + threads);
    codes = codes && r.code == 0;
    texts.push_back(std::regex_replace(r.out, timing, ""));
  }
  std::vector<std::string> jsons;
  for (const char* threads : {"1", "3"}) {
    auto j = nlohmann::json::parse(cli("run --set II --seed " + seed + " --json --threads " + threads).out);
    j.erase("timing");
    jsons.push_back(j.dump());
  }
  const bool same = texts[0] == texts[1] && texts[1] == texts[2] && jsons[0] == jsons[1] && !texts[0].empty();
  return {codes && same, std::string("3 text runs (threads 1, 1, 4) and 2 JSON runs (threads 1, 3): non-timing output ") +
                             (same ? "byte-identical" : "DIFFERS")};
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7, criterion8,
                                                          criterion9, criterion10};
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "[PASS]" : "[FAIL]") << " criterion " << (k + 1) << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
