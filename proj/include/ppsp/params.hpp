#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ppsp/core_math.hpp"

namespace ppsp {

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// LWE parameters shared by both parties. `alpha` is the noise rate; the
/// error standard deviation is alpha * q / sqrt(2 pi).
struct ParameterSet {
  std::string name;
  std::size_t n = 0;
  std::size_t m = 0;
  BigInt q;
  mpq_class alpha;
  mpq_class sigma_mult{9, 2};
  mpq_class delta{101, 100};
};

enum class ConstraintKind { Correctness, Security };

struct ConstraintRow {
  std::string name;
  ConstraintKind kind;
  bool pass;
  double margin;  ///< distance from the threshold; positive when satisfied
  bool waived = false;
};

struct SecurityReport {
  double shortest_vector_len_log2 = 0;
  double attack_cost_log2 = 0;
  unsigned chosen_k = 0;
  /// The cruder n*log2(q) cost figure, reported alongside the k-scan result.
  double shortcut_cost_log2 = 0;
  /// Informational SIS norm bound sqrt(n log2 q); not used in any check.
  double sis_norm_bound = 0;
  std::optional<mpq_class> alpha_min;
  std::optional<mpq_class> alpha_max;
  std::vector<ConstraintRow> constraints;

  bool passed() const;
};

enum class Validation { Strict, RelaxSecurity };

double log2_of(const BigInt& v);
double log2_of(const mpq_class& v);

/// Bin size round(q / m).
BigInt bin_size(const ParameterSet& p);
/// round(q / 2m), the correctness bound on the aggregate error.
BigInt half_bin(const ParameterSet& p);

/// alpha / sqrt(2 pi) as a double: the std of the unscaled draw w.
double error_stddev_unscaled(const ParameterSet& p);
/// alpha * q / sqrt(2 pi).
double error_stddev(const ParameterSet& p);

/// Largest alpha for which the 4.5-sigma error bound stays below
/// round(q / 2m). Throws ParameterError when q is too small for m.
/// sqrt(2 pi) is evaluated to `precision` bits and rounded down.
mpq_class alpha_upper_bound(const ParameterSet& p, unsigned precision = 256);

/// Smallest alpha meeting the LWE hardness conditions.
mpq_class alpha_lower_bound(const ParameterSet& p, unsigned precision = 256);

/// log2 of min(q, 2^(2 sqrt(n log2 q log2 delta))).
double shortest_vector_bound_log2(const ParameterSet& p);

/// k in [1, 64] minimising |2^k / (k + 1) - m / (n log2 q)|; ties go to the
/// smaller k.
unsigned select_attack_k(double ratio);

SecurityReport attack_cost(const ParameterSet& p);
SecurityReport validate(const ParameterSet& p, Validation mode = Validation::Strict);

/// Largest prime strictly below 2^bits.
BigInt largest_prime_below_pow2(unsigned bits);

/// Default noise rate: half the upper bound, or the midpoint of the
/// admissible window when half would fall below the lower bound.
mpq_class default_alpha(const ParameterSet& p);

/// Builds a set with q = largest prime below 2^q_bits and the default alpha.
ParameterSet make_set(std::string name, std::size_t n, std::size_t m, unsigned q_bits);

/// Same n, q with dimension m. alpha is kept when still admissible and
/// re-derived otherwise.
ParameterSet with_dimension(const ParameterSet& p, std::size_t m);

/// Sets I-VI and the 80/112/128/192/256-bit sets, in that order.
const std::vector<ParameterSet>& builtin_sets();

/// n = 4, m = 8, q = 2^20, alpha q = 100. Only passes with the security rows
/// waived.
ParameterSet toy_set();

/// Accepts "I".."VI", "Set I", "128-bit", "128" and "toy" (case-insensitive).
std::optional<ParameterSet> find_builtin(std::string_view name);

std::string format_parameter_set(const ParameterSet& p);
ParameterSet parse_parameter_set(std::string_view text);
ParameterSet load_parameter_set(const std::string& path);

/// Built-in name first, then a parameter file path.
ParameterSet resolve_set(const std::string& name_or_path);

std::string format_rational(const mpq_class& v);
mpq_class parse_rational(std::string_view text);

}  // namespace ppsp
