#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "ppsp/bench.hpp"
#include "ppsp/lwe_protocol.hpp"
#include "ppsp/params.hpp"

using nlohmann::json;
using namespace ppsp;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

// Thrown for bad input that the option parser cannot catch on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ParameterSet load_set(const std::string& name) {
  try {
    return resolve_set(name);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

std::string fmt(double v, int precision = 3) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string kind_label(ConstraintKind k) { return k == ConstraintKind::Correctness ? "correctness" : "security"; }

std::string status(const ConstraintRow& r) {
  if (r.pass) return "PASS";
  return r.waived ? "WAIVED" : "FAIL";
}

json report_json(const ParameterSet& p, const SecurityReport& r) {
  json rows = json::array();
  for (const auto& c : r.constraints)
    rows.push_back({{"name", c.name}, {"kind", kind_label(c.kind)}, {"status", status(c)}, {"margin", c.margin}});
  json out = {{"set", p.name},
              {"n", p.n},
              {"m", p.m},
              {"q_bits", Modulus(p.q).bits()},
              {"q", "0x" + p.q.get_str(16)},
              {"alpha", format_rational(p.alpha)},
              {"log2_alpha_q", log2_of(p.alpha * p.q)},
              {"shortest_vector_len_log2", r.shortest_vector_len_log2},
              {"attack_cost_log2", r.attack_cost_log2},
              {"attack_k", r.chosen_k},
              {"shortcut_cost_log2", r.shortcut_cost_log2},
              {"sis_norm_bound", r.sis_norm_bound},
              {"constraints", rows},
              {"passed", r.passed()}};
  if (r.alpha_max) out["log2_alpha_max_q"] = log2_of(*r.alpha_max * p.q);
  if (r.alpha_min) out["log2_alpha_min_q"] = log2_of(*r.alpha_min * p.q);
  return out;
}

void print_report(const ParameterSet& p, const SecurityReport& r) {
  std::cout << "set " << p.name << ": n = " << p.n << ", m = " << p.m << ", q bits = " << Modulus(p.q).bits()
            << ", log2(alpha q) = " << fmt(log2_of(p.alpha * p.q)) << "\n";
  for (const auto& c : r.constraints)
    std::cout << "  " << c.name << ": " << status(c) << "  (" << kind_label(c.kind) << ", margin " << fmt(c.margin)
              << ")\n";
  if (r.alpha_max) std::cout << "  log2(alpha_max q) = " << fmt(log2_of(*r.alpha_max * p.q)) << "\n";
  if (r.alpha_min) std::cout << "  log2(alpha_min q) = " << fmt(log2_of(*r.alpha_min * p.q)) << "\n";
  std::cout << "  shortest vector log2 = " << fmt(r.shortest_vector_len_log2) << "\n"
            << "  attack cost log2 = " << fmt(r.attack_cost_log2) << " (k = " << r.chosen_k << ")\n"
            << "  shortcut cost log2 = " << fmt(r.shortcut_cost_log2) << "\n"
            << "  SIS norm bound = " << fmt(r.sis_norm_bound) << "\n"
            << "result: " << (r.passed() ? "PASS" : "FAIL") << "\n";
}

Seed seed_or_random(const std::string& hex, bool& generated) {
  generated = hex.empty();
  if (generated) return random_seed();
  try {
    return parse_seed(hex);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

BinaryVector read_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read vector file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return BinaryVector::parse(buf.str());
  } catch (const std::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      throw UsageError("bad dimension list: " + text);
    }
    if (pos != item.size() || v == 0) throw UsageError("bad dimension list: " + text);
    dims.push_back(static_cast<std::size_t>(v));
  }
  return dims;
}

struct Options {
  bool json = false;
  std::string set = "I";
  bool relax = false;
  std::size_t dim = 0;
  std::string seed;
  std::string x_file, y_file;
  unsigned threads = 1;
  std::string scheme = "lwe";
  std::string dims;
  unsigned trials = 1;
  std::string out;
  unsigned key_bits = 0;
  unsigned k1 = 3072, k2 = 80, k3 = 30, k4 = 30;
  std::size_t sample = 100;
  bool no_warmup = false;
};

int cmd_params_list(const Options& o) {
  json all = json::array();
  for (const auto& p : builtin_sets()) {
    const auto r = validate(p);
    if (o.json) {
      all.push_back(report_json(p, r));
      continue;
    }
    std::cout << std::left << std::setw(8) << p.name << " n=" << std::setw(5) << p.n << " m=" << std::setw(6) << p.m
              << " q_bits=" << std::setw(5) << Modulus(p.q).bits() << " log2(alpha q)=" << std::setw(9)
              << fmt(log2_of(p.alpha * p.q)) << " attack_cost_log2=" << std::setw(8) << fmt(r.attack_cost_log2, 1)
              << (r.passed() ? " PASS" : " FAIL") << "\n";
  }
  if (o.json) std::cout << all.dump(2) << "\n";
  return kOk;
}

int cmd_params_validate(const Options& o) {
  const ParameterSet p = load_set(o.set);
  const auto r = validate(p, o.relax ? Validation::RelaxSecurity : Validation::Strict);
  if (o.json)
    std::cout << report_json(p, r).dump(2) << "\n";
  else
    print_report(p, r);
  return r.passed() ? kOk : kFailed;
}

int cmd_run(const Options& o) {
  const ParameterSet p = load_set(o.set);
  bool generated = false;
  const Seed seed = seed_or_random(o.seed, generated);

  std::optional<BinaryVector> x_in, y_in;
  if (!o.x_file.empty()) x_in = read_vector(o.x_file);
  if (!o.y_file.empty()) y_in = read_vector(o.y_file);
  std::size_t dim = o.dim;
  if (dim == 0) dim = x_in ? x_in->size() : y_in ? y_in->size() : p.m;
  if (dim > p.m) throw UsageError("--dim " + std::to_string(dim) + " exceeds m = " + std::to_string(p.m));
  if ((x_in && x_in->size() != dim) || (y_in && y_in->size() != dim))
    throw UsageError("input vector length does not match the dimension " + std::to_string(dim));

  const auto report = validate(p, o.relax ? Validation::RelaxSecurity : Validation::Strict);
  if (!report.passed()) {
    std::cerr << "error: parameter set " << p.name << " fails validation (see params-validate)\n";
    return kFailed;
  }

  SeededRng input_rng(derive_seed(seed, "ppsp/cli/inputs"));
  const BinaryVector x = x_in ? *x_in : random_binary(input_rng, dim);
  const BinaryVector y = y_in ? *y_in : random_binary(input_rng, dim);
  const std::size_t expected = dot(x, y);

  // Shorter inputs are zero-padded to the set's dimension.
  LweTranscript tr{MsgU{ModVector(Modulus(p.q), 0)}, MsgC{ModInt::zero(Modulus(p.q)), ModVector(Modulus(p.q), 0)}};
  std::string failure;
  try {
    tr = run_local(p, x.resized(p.m), y.resized(p.m), seed, o.threads);
  } catch (const DecryptionFailure& e) {
    failure = e.what();
  }
  const bool ok = failure.empty() && tr.result == expected;

  if (o.json) {
    json out = {{"set", p.name},
                {"n", p.n},
                {"m", p.m},
                {"dim", dim},
                {"seed", to_hex(seed)},
                {"seed_generated", generated},
                {"expected", expected},
                {"status", ok ? "ok" : "failure"},
                {"bits_x_to_y", tr.bits_x_to_y},
                {"bits_y_to_x", tr.bits_y_to_x},
                {"bytes_x_to_y", tr.bytes_x_to_y},
                {"bytes_y_to_x", tr.bytes_y_to_x}};
    if (failure.empty()) out["result"] = tr.result;
    else out["error"] = failure;
    out["timing"] = {{"setup_ms", tr.setup_ms},
                     {"step1_ms", tr.step1_ms},
                     {"step2_ms", tr.step2_ms},
                     {"step3_ms", tr.step3_ms},
                     {"total_ms", tr.total_ms()}};
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "set: " << p.name << " (n = " << p.n << ", m = " << p.m << ")\n"
              << "dim: " << dim << "\n"
              << "seed: " << to_hex(seed) << (generated ? " (generated)" : "") << "\n";
    if (failure.empty()) std::cout << "result: " << tr.result << "\n";
    std::cout << "expected: " << expected << "\n"
              << "status: " << (ok ? "ok" : "failure") << "\n"
              << "bits x->y: " << tr.bits_x_to_y << " (" << tr.bytes_x_to_y << " bytes)\n"
              << "bits y->x: " << tr.bits_y_to_x << " (" << tr.bytes_y_to_x << " bytes)\n"
              << "timing setup_ms: " << fmt(tr.setup_ms) << "\n"
              << "timing step1_ms: " << fmt(tr.step1_ms) << "\n"
              << "timing step2_ms: " << fmt(tr.step2_ms) << "\n"
              << "timing step3_ms: " << fmt(tr.step3_ms) << "\n"
              << "timing total_ms: " << fmt(tr.total_ms()) << "\n";
  }
  if (!failure.empty()) std::cerr << "error: " << failure << "\n";
  return ok ? kOk : kFailed;
}

int cmd_bench(const Options& o) {
  BenchConfig cfg;
  try {
    cfg.scheme = parse_scheme(o.scheme);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  cfg.set = load_set(o.set);
  if (!o.dims.empty()) cfg.dims = parse_dims(o.dims);
  cfg.trials = o.trials;
  bool generated = false;
  cfg.seed = seed_or_random(o.seed, generated);
  cfg.threads = o.threads;
  cfg.warmup = !o.no_warmup;
  cfg.key_bits = o.key_bits;
  cfg.paillier_sample = o.sample;
  cfg.mask = MaskConfig{o.k1, o.k2, o.k3, o.k4};
  if (generated) std::cerr << "seed: " << to_hex(cfg.seed) << "\n";

  std::vector<BenchRecord> records;
  try {
    records = run_bench(cfg);
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  } catch (const ParameterViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }

  std::string text;
  if (o.json) {
    json arr = json::array();
    for (const auto& r : records) arr.push_back(to_json(r));
    text = json{{"seed", to_hex(cfg.seed)}, {"records", arr}}.dump(2) + "\n";
  } else {
    text = to_csv(records);
  }
  if (o.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(o.out);
    if (!f) throw UsageError("cannot write " + o.out);
    f << text;
  }

  bool ok = true;
  for (const auto& r : records) {
    const double rate = static_cast<double>(r.failures) / r.trials;
    if ((cfg.scheme != Scheme::Lwe && r.failures > 0) || (cfg.scheme == Scheme::Lwe && rate > 1e-4)) ok = false;
  }
  if (!ok) std::cerr << "error: correctness failures recorded\n";
  return ok ? kOk : kFailed;
}

int cmd_comms(const Options& o) {
  const ParameterSet p = load_set(o.set);
  const std::size_t m = o.dim ? o.dim : p.m;
  const auto r = comms_report(p, m, o.key_bits, MaskConfig{o.k1, o.k2, o.k3, o.k4});
  if (o.json) {
    std::cout << to_json(r).dump(2) << "\n";
    return kOk;
  }
  std::cout << "set " << r.set << ", m = " << r.m << ", Paillier key " << r.key_bits << " bits, k1 = " << r.k1
            << "\n";
  for (const auto& row : r.rows) {
    const std::string label = row.scheme + (row.accounting == "wire" ? " (wire)" : "");
    std::cout << label << ": " << format_size(row.bits_x_to_y) << " / " << format_size(row.bits_y_to_x) << "  ("
              << row.bits_x_to_y << " / " << row.bits_y_to_x << " bits)\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice-based privacy-preserving scalar product: parameters, runs, benchmarks"};
  app.require_subcommand(1);
  Options o;

  auto add_set = [&](CLI::App* sc) { sc->add_option("--set", o.set, "built-in set name or parameter file")->capture_default_str(); };
  auto add_json = [&](CLI::App* sc) { sc->add_flag("--json", o.json, "machine-readable output"); };
  auto add_mask = [&](CLI::App* sc) {
    sc->add_option("--key-bits", o.key_bits, "Paillier modulus bits (default from the set)");
    sc->add_option("--k1", o.k1, "randomisation: bits of p")->capture_default_str();
    sc->add_option("--k2", o.k2, "randomisation: bits of alpha")->capture_default_str();
    sc->add_option("--k3", o.k3, "randomisation: bits of c_i")->capture_default_str();
    sc->add_option("--k4", o.k4, "randomisation: bits of r_i")->capture_default_str();
  };

  auto* list = app.add_subcommand("params-list", "list the built-in parameter sets");
  add_json(list);

  auto* val = app.add_subcommand("params-validate", "check a parameter set against every constraint");
  add_set(val);
  val->add_flag("--relax-security", o.relax, "waive the security rows (toy sets)");
  add_json(val);

  auto* run = app.add_subcommand("run", "run the protocol once in-process");
  add_set(run);
  run->add_option("--dim", o.dim, "input length (<= m, default m)");
  run->add_option("--seed", o.seed, "32-byte hex seed (default: fresh, echoed)");
  run->add_option("--x-file", o.x_file, "X's input: one 0/1 per element");
  run->add_option("--y-file", o.y_file, "Y's input: one 0/1 per element");
  run->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  run->add_flag("--relax-security", o.relax, "waive the security rows (toy sets)");
  add_json(run);

  auto* bench = app.add_subcommand("bench", "time a scheme over several dimensions");
  bench->add_option("--scheme", o.scheme, "lwe, paillier or randomised")->capture_default_str();
  add_set(bench);
  bench->add_option("--dims", o.dims, "comma-separated dimensions (default m)");
  bench->add_option("--trials", o.trials, "timed trials per dimension")->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--seed", o.seed, "32-byte hex seed (default: fresh)");
  bench->add_option("--out", o.out, "output file (default stdout)");
  bench->add_option("--sample", o.sample, "Paillier: elements timed before scaling to m")->capture_default_str();
  bench->add_flag("--no-warmup", o.no_warmup, "skip the discarded warm-up trial");
  add_mask(bench);
  add_json(bench);

  auto* comms = app.add_subcommand("comms", "communication cost of the three schemes");
  add_set(comms);
  comms->add_option("--dim", o.dim, "vector length (default m)");
  add_mask(comms);
  add_json(comms);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*list) return cmd_params_list(o);
    if (*val) return cmd_params_validate(o);
    if (*run) return cmd_run(o);
    if (*bench) return cmd_bench(o);
    if (*comms) return cmd_comms(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kUsage;
}
