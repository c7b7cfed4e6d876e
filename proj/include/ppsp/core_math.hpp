#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ppsp {

using BigInt = mpz_class;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ModulusMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SerializationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shared, immutable modulus q >= 2.
///
/// Copies are cheap (reference counted). `bits()` is the fixed field width
/// ceil(log2 q), i.e. the bit length of q - 1, and `limbs()` is the number of
/// GMP limbs needed to hold any canonical residue.
class Modulus {
 public:
  explicit Modulus(const BigInt& q);

  const BigInt& value() const { return data_->q; }
  std::size_t bits() const { return data_->bits; }
  std::size_t limbs() const { return data_->limbs; }

  friend bool operator==(const Modulus& a, const Modulus& b) {
    return a.data_ == b.data_ || a.data_->q == b.data_->q;
  }

 private:
  struct Data {
    BigInt q;
    std::size_t bits;
    std::size_t limbs;
  };
  std::shared_ptr<const Data> data_;
};

/// A residue modulo q, always held in canonical form 0 <= value < q.
class ModInt {
 public:
  ModInt(const BigInt& value, Modulus q);

  static ModInt zero(Modulus q) { return ModInt(BigInt(0), std::move(q)); }

  const BigInt& value() const { return value_; }
  const Modulus& modulus() const { return q_; }

  /// Representative in (-q/2, q/2].
  BigInt centered() const;

  friend ModInt operator+(const ModInt& a, const ModInt& b);
  friend ModInt operator-(const ModInt& a, const ModInt& b);
  friend ModInt operator*(const ModInt& a, const ModInt& b);
  friend bool operator==(const ModInt& a, const ModInt& b) {
    return a.q_ == b.q_ && a.value_ == b.value_;
  }

 private:
  BigInt value_;
  Modulus q_;
};

namespace detail {

// Fixed-width limb storage for `count` canonical residues mod q.
class ResidueStore {
 public:
  ResidueStore(Modulus q, std::size_t count);

  const Modulus& modulus() const { return q_; }
  std::size_t count() const { return count_; }

  std::span<const mp_limb_t> limbs(std::size_t i) const {
    return {data_.data() + i * q_.limbs(), q_.limbs()};
  }
  std::span<mp_limb_t> limbs(std::size_t i) {
    return {data_.data() + i * q_.limbs(), q_.limbs()};
  }

  BigInt get(std::size_t i) const;
  void set(std::size_t i, const BigInt& v);
  // Stores v, which must already be canonical.
  void set_canonical(std::size_t i, mpz_srcptr v);

  bool operator==(const ResidueStore& other) const {
    return q_ == other.q_ && count_ == other.count_ && data_ == other.data_;
  }

 private:
  Modulus q_;
  std::size_t count_;
  std::vector<mp_limb_t> data_;
};

}  // namespace detail

/// Read-only mpz view over a limb span; valid while the span is.
class LimbView {
 public:
  explicit LimbView(std::span<const mp_limb_t> limbs) {
    mpz_roinit_n(&view_, limbs.data(), static_cast<mp_size_t>(limbs.size()));
  }
  mpz_srcptr get() const { return &view_; }

 private:
  __mpz_struct view_;
};

class ModVector {
 public:
  ModVector(Modulus q, std::size_t size) : store_(std::move(q), size) {}
  ModVector(Modulus q, std::span<const BigInt> values);

  std::size_t size() const { return store_.count(); }
  const Modulus& modulus() const { return store_.modulus(); }

  BigInt operator[](std::size_t i) const { return store_.get(i); }
  ModInt at(std::size_t i) const;
  void set(std::size_t i, const BigInt& v) { store_.set(i, v); }
  void set_canonical(std::size_t i, mpz_srcptr v) { store_.set_canonical(i, v); }

  std::span<const mp_limb_t> limbs(std::size_t i) const { return store_.limbs(i); }
  std::span<mp_limb_t> limbs(std::size_t i) { return store_.limbs(i); }

  bool operator==(const ModVector& other) const { return store_ == other.store_; }

 private:
  detail::ResidueStore store_;
};

/// n x m matrix over Z_q. Stored column by column so that each column a_j is
/// one contiguous run of limbs.
class ModMatrix {
 public:
  ModMatrix(Modulus q, std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const Modulus& modulus() const { return store_.modulus(); }

  BigInt operator()(std::size_t i, std::size_t j) const { return store_.get(index(i, j)); }
  void set(std::size_t i, std::size_t j, const BigInt& v) { store_.set(index(i, j), v); }

  std::span<const mp_limb_t> limbs(std::size_t i, std::size_t j) const {
    return store_.limbs(index(i, j));
  }
  std::span<mp_limb_t> limbs(std::size_t i, std::size_t j) { return store_.limbs(index(i, j)); }

  bool operator==(const ModMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && store_ == other.store_;
  }

 private:
  std::size_t index(std::size_t i, std::size_t j) const { return j * rows_ + i; }

  std::size_t rows_;
  std::size_t cols_;
  detail::ResidueStore store_;
};

/// Vector over {0,1}.
class BinaryVector {
 public:
  BinaryVector() = default;
  explicit BinaryVector(std::size_t size) : bits_(size, 0) {}
  explicit BinaryVector(std::vector<std::uint8_t> bits);

  /// Parses a string of '0'/'1' characters; whitespace is ignored.
  static BinaryVector parse(std::string_view text);

  std::size_t size() const { return bits_.size(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool bit) { bits_.at(i) = bit ? 1 : 0; }
  std::size_t weight() const;

  /// Copy zero-padded (or truncated) to `size`.
  BinaryVector resized(std::size_t size) const;

  std::string to_string() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  bool operator==(const BinaryVector&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Plaintext x^T y.
std::size_t dot(const BinaryVector& x, const BinaryVector& y);

/// u = A x mod q.
ModVector mat_vec_mul(const ModMatrix& a, const BinaryVector& x, unsigned threads = 1);

/// t^T u mod q.
ModInt vec_vec_mul(const ModVector& t, const ModVector& u);

/// acc = sum_i t_i * A(i, j), without reduction.
void column_dot(const ModVector& t, const ModMatrix& a, std::size_t j, mpz_class& acc);

/// t^T A mod q, one output per column. Columns are processed independently,
/// so the result does not depend on `threads`.
ModVector vec_mat_mul(const ModVector& t, const ModMatrix& a, unsigned threads = 1);

/// num / den rounded to the nearest integer, ties away from zero. den != 0.
BigInt round_div(const BigInt& num, const BigInt& den);

/// Nearest integer to a rational, ties away from zero.
BigInt round_nearest(const mpq_class& value);

/// Maps d to (-q/2, q/2] and returns round(d' / bin), ties away from zero.
BigInt centered_round_div(const ModInt& d, const BigInt& bin);

/// Same with the window shifted to (center - q/2, center + q/2].
BigInt round_div_around(const ModInt& d, const BigInt& bin, const BigInt& center);

// Serialization: u32 big-endian length prefixes, big-endian magnitudes, and
// the modulus stored once per container.
std::vector<std::uint8_t> serialize(const ModInt& v);
std::vector<std::uint8_t> serialize(const ModVector& v);
std::vector<std::uint8_t> serialize(const ModMatrix& m);
ModInt deserialize_mod_int(std::span<const std::uint8_t> bytes);
ModVector deserialize_mod_vector(std::span<const std::uint8_t> bytes);
ModMatrix deserialize_mod_matrix(std::span<const std::uint8_t> bytes);

/// Big-endian magnitude bytes of a non-negative integer (empty for zero).
std::vector<std::uint8_t> to_bytes(const BigInt& v);
BigInt from_bytes(std::span<const std::uint8_t> bytes);

}  // namespace ppsp
