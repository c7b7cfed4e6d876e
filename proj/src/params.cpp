#include "ppsp/params.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace ppsp {

namespace {

class Real {
 public:
  explicit Real(unsigned precision) { mpfr_init2(v_, precision); }
  ~Real() { mpfr_clear(v_); }
  Real(const Real&) = delete;
  Real& operator=(const Real&) = delete;

  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }

  mpq_class to_rational() const {
    BigInt mant;
    const mpfr_exp_t e = mpfr_get_z_2exp(mant.get_mpz_t(), v_);
    mpq_class out(mant);
    if (e > 0)
      mpq_mul_2exp(out.get_mpq_t(), out.get_mpq_t(), static_cast<mp_bitcnt_t>(e));
    else
      mpq_div_2exp(out.get_mpq_t(), out.get_mpq_t(), static_cast<mp_bitcnt_t>(-e));
    return out;
  }

 private:
  mpfr_t v_;
};

mpq_class sqrt_two_pi(unsigned precision, mpfr_rnd_t rnd) {
  Real v(precision);
  mpfr_const_pi(v.get(), rnd);
  mpfr_mul_2ui(v.get(), v.get(), 1, rnd);
  mpfr_sqrt(v.get(), v.get(), rnd);
  return v.to_rational();
}

// 2 sqrt(n log2 q log2 delta), the exponent of the reduction bound.
double reduction_exponent(const ParameterSet& p, unsigned precision = 256) {
  if (p.delta <= 1) throw ParameterError("delta must exceed 1");
  Real log_q(precision), log_delta(precision);
  mpfr_set_z(log_q.get(), p.q.get_mpz_t(), MPFR_RNDN);
  mpfr_log2(log_q.get(), log_q.get(), MPFR_RNDN);
  mpfr_set_q(log_delta.get(), p.delta.get_mpq_t(), MPFR_RNDN);
  mpfr_log2(log_delta.get(), log_delta.get(), MPFR_RNDN);
  mpfr_mul(log_q.get(), log_q.get(), log_delta.get(), MPFR_RNDN);
  mpfr_mul_ui(log_q.get(), log_q.get(), p.n, MPFR_RNDN);
  mpfr_sqrt(log_q.get(), log_q.get(), MPFR_RNDN);
  mpfr_mul_2ui(log_q.get(), log_q.get(), 1, MPFR_RNDN);
  return mpfr_get_d(log_q.get(), MPFR_RNDN);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw ParameterError("invalid integer for '" + key + "': " + v);
  }
  if (pos != v.size()) throw ParameterError("invalid integer for '" + key + "': " + v);
  return static_cast<std::size_t>(out);
}

BigInt parse_integer(const std::string& key, std::string v) {
  int base = 10;
  if (v.starts_with("0x") || v.starts_with("0X")) {
    v = v.substr(2);
    base = 16;
  }
  BigInt out;
  if (v.empty() || out.set_str(v, base) != 0) throw ParameterError("invalid integer for '" + key + "'");
  return out;
}

}  // namespace

bool SecurityReport::passed() const {
  return std::all_of(constraints.begin(), constraints.end(),
                     [](const ConstraintRow& r) { return r.pass || r.waived; });
}

double log2_of(const BigInt& v) {
  if (v <= 0) return -INFINITY;
  long e = 0;
  const double d = mpz_get_d_2exp(&e, v.get_mpz_t());
  return std::log2(d) + static_cast<double>(e);
}

double log2_of(const mpq_class& v) { return log2_of(BigInt(v.get_num())) - log2_of(BigInt(v.get_den())); }

BigInt bin_size(const ParameterSet& p) {
  if (p.m == 0) throw ParameterError("m must be positive");
  return round_div(p.q, BigInt(static_cast<unsigned long>(p.m)));
}

BigInt half_bin(const ParameterSet& p) {
  if (p.m == 0) throw ParameterError("m must be positive");
  return round_div(p.q, BigInt(2 * static_cast<unsigned long>(p.m)));
}

double error_stddev_unscaled(const ParameterSet& p) {
  return p.alpha.get_d() / std::sqrt(2.0 * std::numbers::pi);
}

double error_stddev(const ParameterSet& p) {
  return std::exp2(log2_of(p.alpha * p.q)) / std::sqrt(2.0 * std::numbers::pi);
}

mpq_class alpha_upper_bound(const ParameterSet& p, unsigned precision) {
  if (p.m == 0) throw ParameterError("m must be positive");
  const mpq_class bracket = mpq_class(half_bin(p)) - mpq_class(static_cast<unsigned long>(p.m + 1), 2);
  if (bracket <= 0) throw ParameterError("no admissible alpha: q too small for m");
  mpq_class out = sqrt_two_pi(precision, MPFR_RNDD) * bracket;
  out /= p.sigma_mult * mpq_class(p.q) * mpq_class(static_cast<unsigned long>(p.m + 1));
  return out;
}

mpq_class alpha_lower_bound(const ParameterSet& p, unsigned precision) {
  Real root_n(precision);
  mpfr_set_ui(root_n.get(), static_cast<unsigned long>(p.n), MPFR_RNDU);
  mpfr_sqrt(root_n.get(), root_n.get(), MPFR_RNDU);
  const mpq_class hardness = 2 * root_n.to_rational() / mpq_class(p.q);

  Real reduction(precision);
  mpfr_set_d(reduction.get(), -reduction_exponent(p, precision), MPFR_RNDN);
  mpfr_exp2(reduction.get(), reduction.get(), MPFR_RNDU);
  const mpq_class inner = std::max(mpq_class(1, p.q), reduction.to_rational());
  const mpq_class dual = mpq_class(3, 2) * sqrt_two_pi(precision, MPFR_RNDU) * inner;
  return std::max(hardness, dual);
}

double shortest_vector_bound_log2(const ParameterSet& p) {
  return std::min(log2_of(p.q), reduction_exponent(p));
}

unsigned select_attack_k(double ratio) {
  unsigned best = 1;
  double best_gap = INFINITY;
  for (unsigned k = 1; k <= 64; ++k) {
    const double gap = std::fabs(std::ldexp(1.0, static_cast<int>(k)) / (k + 1) - ratio);
    if (gap < best_gap) {
      best_gap = gap;
      best = k;
    }
  }
  return best;
}

namespace {

SecurityReport build_report(const ParameterSet& p, Validation mode) {
  SecurityReport r;
  const double log_q = log2_of(p.q);
  const double dim = static_cast<double>(p.n) * log_q;
  r.sis_norm_bound = std::sqrt(std::max(dim, 0.0));
  r.shortcut_cost_log2 = dim;

  auto row = [&](std::string name, ConstraintKind kind, bool pass, double margin) {
    const bool waived = mode == Validation::RelaxSecurity && kind == ConstraintKind::Security;
    r.constraints.push_back({std::move(name), kind, pass, margin, waived});
  };
  const auto C = ConstraintKind::Correctness;
  const auto S = ConstraintKind::Security;

  row("n >= 1", C, p.n >= 1, static_cast<double>(p.n) - 1);
  row("m >= 1", C, p.m >= 1, static_cast<double>(p.m) - 1);

  BigInt q_pow_n;
  mpz_pow_ui(q_pow_n.get_mpz_t(), p.q.get_mpz_t(), static_cast<unsigned long>(p.n));
  BigInt two_128 = BigInt(1) << 128;
  row("n*log2(q) > 128", S, q_pow_n > two_128, dim - 128);

  BigInt two_m;
  mpz_ui_pow_ui(two_m.get_mpz_t(), 2, static_cast<unsigned long>(p.m));
  row("m >= n*log2(q)", S, two_m >= q_pow_n, static_cast<double>(p.m) - dim);

  if (p.n >= 1 && p.m >= 1) {
    r.shortest_vector_len_log2 = shortest_vector_bound_log2(p);
    const double reduction = reduction_exponent(p);
    const double half_log_m = 0.5 * std::log2(static_cast<double>(p.m));
    row("sqrt(m) < 2^(2*sqrt(n*log2(q)*log2(delta)))", S, half_log_m < reduction, reduction - half_log_m);

    r.chosen_k = select_attack_k(static_cast<double>(p.m) / dim);
    r.attack_cost_log2 = std::ldexp(static_cast<double>(p.m), -static_cast<int>(r.chosen_k));
  } else {
    row("sqrt(m) < 2^(2*sqrt(n*log2(q)*log2(delta)))", S, false, 0);
  }

  try {
    r.alpha_max = alpha_upper_bound(p);
  } catch (const ParameterError&) {
  }
  if (r.alpha_max) {
    row("alpha <= alpha_upper_bound", C, p.alpha <= *r.alpha_max,
        p.alpha > 0 ? log2_of(*r.alpha_max / p.alpha) : INFINITY);
  } else {
    row("alpha <= alpha_upper_bound", C, false, -INFINITY);
  }

  r.alpha_min = alpha_lower_bound(p);
  row("alpha >= alpha_lower_bound", S, p.alpha >= *r.alpha_min,
      p.alpha > 0 ? log2_of(p.alpha / *r.alpha_min) : -INFINITY);

  const BigInt two_m_int = BigInt(2) * BigInt(static_cast<unsigned long>(p.m));
  row("q > 2m", C, p.q > two_m_int, log_q - log2_of(two_m_int));
  const BigInt n_int(static_cast<unsigned long>(p.n));
  row("q > n", S, p.q > n_int, log_q - log2_of(n_int));
  return r;
}

}  // namespace

SecurityReport attack_cost(const ParameterSet& p) { return build_report(p, Validation::Strict); }

SecurityReport validate(const ParameterSet& p, Validation mode) { return build_report(p, mode); }

BigInt largest_prime_below_pow2(unsigned bits) {
  if (bits < 2) throw ParameterError("need at least 2 bits for a prime");
  BigInt c = (BigInt(1) << bits) - 1;
  while (mpz_probab_prime_p(c.get_mpz_t(), 40) == 0) c -= 2;
  return c;
}

mpq_class default_alpha(const ParameterSet& p) {
  const mpq_class hi = alpha_upper_bound(p);
  const mpq_class lo = alpha_lower_bound(p);
  const mpq_class half = hi / 2;
  if (half >= lo || lo > hi) return half;
  return (lo + hi) / 2;
}

ParameterSet make_set(std::string name, std::size_t n, std::size_t m, unsigned q_bits) {
  ParameterSet p;
  p.name = std::move(name);
  p.n = n;
  p.m = m;
  p.q = largest_prime_below_pow2(q_bits);
  p.alpha = default_alpha(p);
  return p;
}

ParameterSet with_dimension(const ParameterSet& p, std::size_t m) {
  ParameterSet out = p;
  out.m = m;
  if (m == p.m) return out;
  bool keep = false;
  try {
    keep = out.alpha <= alpha_upper_bound(out) && out.alpha >= alpha_lower_bound(out);
  } catch (const ParameterError&) {
  }
  if (!keep) out.alpha = default_alpha(out);
  return out;
}

const std::vector<ParameterSet>& builtin_sets() {
  static const std::vector<ParameterSet> sets = [] {
    std::vector<ParameterSet> v;
    // Sets V and VI need m >= n log2 q, so their dimension is raised to n * bits.
    v.push_back(make_set("I", 50, 1u << 15, 570));
    v.push_back(make_set("II", 100, 1u << 15, 270));
    v.push_back(make_set("III", 250, 1u << 15, 116));
    v.push_back(make_set("IV", 500, 1u << 15, 55));
    v.push_back(make_set("V", 1000, 39000, 39));
    v.push_back(make_set("VI", 2000, 82000, 41));
    v.push_back(make_set("80-bit", 50, 23500, 470));
    v.push_back(make_set("112-bit", 50, 27500, 550));
    v.push_back(make_set("128-bit", 50, 28500, 570));
    v.push_back(make_set("192-bit", 50, 40500, 810));
    v.push_back(make_set("256-bit", 50, 50000, 1000));
    return v;
  }();
  return sets;
}

ParameterSet toy_set() {
  ParameterSet p;
  p.name = "toy";
  p.n = 4;
  p.m = 8;
  p.q = BigInt(1) << 20;
  p.alpha = mpq_class(100, p.q);
  p.alpha.canonicalize();
  return p;
}

std::optional<ParameterSet> find_builtin(std::string_view name) {
  std::string key = lower(trim(name));
  if (key.starts_with("set ")) key = trim(key.substr(4));
  if (key == "toy") return toy_set();
  if (!key.empty() && std::all_of(key.begin(), key.end(), ::isdigit)) key += "-bit";
  for (const auto& p : builtin_sets())
    if (lower(p.name) == key) return p;
  return std::nullopt;
}

std::string format_rational(const mpq_class& v) {
  BigInt den = v.get_den();
  if (den == 1) return v.get_num().get_str();
  // Exact decimal when the denominator is 2^a 5^b.
  unsigned twos = 0, fives = 0;
  while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) {
    den /= 2;
    ++twos;
  }
  while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) {
    den /= 5;
    ++fives;
  }
  if (den != 1) return v.get_num().get_str() + "/" + v.get_den().get_str();
  const unsigned digits = std::max(twos, fives);
  BigInt scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, digits);
  const BigInt scaled = BigInt(v.get_num() * scale / v.get_den());
  std::string mag = BigInt(abs(scaled)).get_str();
  if (mag.size() <= digits) mag.insert(0, digits - mag.size() + 1, '0');
  mag.insert(mag.size() - digits, ".");
  return (scaled < 0 ? "-" : "") + mag;
}

mpq_class parse_rational(std::string_view text) {
  const std::string s = trim(text);
  if (s.empty()) throw ParameterError("empty rational");
  if (const auto slash = s.find('/'); slash != std::string::npos) {
    mpq_class out(parse_integer("rational", trim(s.substr(0, slash))),
                  parse_integer("rational", trim(s.substr(slash + 1))));
    if (out.get_den() == 0) throw ParameterError("zero denominator");
    out.canonicalize();
    return out;
  }
  if (const auto dot = s.find('.'); dot != std::string::npos) {
    const std::string frac = s.substr(dot + 1);
    const std::string whole = s.substr(0, dot);
    BigInt scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
    const bool negative = whole.starts_with("-");
    const BigInt w = whole.empty() || whole == "-" ? BigInt(0) : parse_integer("rational", whole);
    const BigInt f = frac.empty() ? BigInt(0) : parse_integer("rational", frac);
    mpq_class out(abs(w) * scale + f, scale);
    out.canonicalize();
    return negative ? mpq_class(-out) : out;
  }
  return mpq_class(parse_integer("rational", s));
}

std::string format_parameter_set(const ParameterSet& p) {
  std::ostringstream os;
  os << "# ppsp parameter set\n";
  os << "name = " << p.name << "\n";
  os << "n = " << p.n << "\n";
  os << "m = " << p.m << "\n";
  os << "q = 0x" << p.q.get_str(16) << "\n";
  os << "alpha_num = " << p.alpha.get_num().get_str() << "\n";
  os << "alpha_den = " << p.alpha.get_den().get_str() << "\n";
  os << "sigma_mult = " << format_rational(p.sigma_mult) << "\n";
  os << "delta = " << format_rational(p.delta) << "\n";
  return os.str();
}

ParameterSet parse_parameter_set(std::string_view text) {
  ParameterSet p;
  bool have_n = false, have_m = false, have_q = false;
  std::optional<BigInt> alpha_num, alpha_den;
  std::optional<mpq_class> alpha;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParameterError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "name") {
      p.name = value;
    } else if (key == "n") {
      p.n = parse_size(key, value);
      have_n = true;
    } else if (key == "m") {
      p.m = parse_size(key, value);
      have_m = true;
    } else if (key == "q") {
      p.q = parse_integer(key, value);
      have_q = true;
    } else if (key == "q_bits") {
      p.q = largest_prime_below_pow2(static_cast<unsigned>(parse_size(key, value)));
      have_q = true;
    } else if (key == "alpha_num") {
      alpha_num = parse_integer(key, value);
    } else if (key == "alpha_den") {
      alpha_den = parse_integer(key, value);
    } else if (key == "alpha") {
      alpha = parse_rational(value);
    } else if (key == "sigma_mult") {
      p.sigma_mult = parse_rational(value);
    } else if (key == "delta") {
      p.delta = parse_rational(value);
    } else {
      throw ParameterError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (!have_n || !have_m || !have_q) throw ParameterError("parameter file needs n, m and q");
  if (p.q < 2) throw ParameterError("q must be at least 2");
  if (alpha_num.has_value() != alpha_den.has_value())
    throw ParameterError("alpha_num and alpha_den must be given together");
  if (alpha_num) {
    if (*alpha_den == 0) throw ParameterError("alpha_den must be non-zero");
    p.alpha = mpq_class(*alpha_num, *alpha_den);
    p.alpha.canonicalize();
  } else if (alpha) {
    p.alpha = *alpha;
  } else {
    // No admissible window: leave alpha at zero and let validation report it.
    try {
      p.alpha = default_alpha(p);
    } catch (const ParameterError&) {
      p.alpha = 0;
    }
  }
  if (p.alpha < 0) throw ParameterError("alpha must be non-negative");
  return p;
}

ParameterSet load_parameter_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read parameter file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_parameter_set(buf.str());
}

ParameterSet resolve_set(const std::string& name_or_path) {
  if (auto p = find_builtin(name_or_path)) return *p;
  if (std::filesystem::exists(name_or_path)) return load_parameter_set(name_or_path);
  throw std::runtime_error("unknown parameter set or file: " + name_or_path);
}

}  // namespace ppsp
