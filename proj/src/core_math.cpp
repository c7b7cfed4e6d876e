#include "ppsp/core_math.hpp"

#include <algorithm>
#include <cstring>

#include "ppsp/parallel.hpp"

namespace ppsp {

namespace {

std::size_t limbs_for_bits(std::size_t bits) {
  return std::max<std::size_t>(1, (bits + GMP_NUMB_BITS - 1) / GMP_NUMB_BITS);
}

void require_same_modulus(const Modulus& a, const Modulus& b, const char* what) {
  if (!(a == b)) throw ModulusMismatch(std::string(what) + ": operands use different moduli");
}

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void integer(const BigInt& v) {
    const auto bytes = to_bytes(v);
    u32(static_cast<std::uint32_t>(bytes.size()));
    out_.insert(out_.end(), bytes.begin(), bytes.end());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v = (v << 8) | in_[pos_++];
    return v;
  }
  BigInt integer() {
    const std::uint32_t len = u32();
    need(len);
    BigInt v = from_bytes(in_.subspan(pos_, len));
    pos_ += len;
    return v;
  }
  void finish() const {
    if (pos_ != in_.size()) throw SerializationError("trailing bytes after container");
  }

 private:
  void need(std::size_t k) const {
    if (in_.size() - pos_ < k) throw SerializationError("truncated input");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

Modulus read_modulus(ByteReader& r) {
  BigInt q = r.integer();
  if (q < 2) throw SerializationError("modulus must be at least 2");
  return Modulus(q);
}

BigInt read_residue(ByteReader& r, const Modulus& q) {
  BigInt v = r.integer();
  if (v >= q.value()) throw SerializationError("residue not in canonical form");
  return v;
}

}  // namespace

Modulus::Modulus(const BigInt& q) {
  if (q < 2) throw std::invalid_argument("modulus must be at least 2");
  const BigInt top = q - 1;
  const std::size_t bits = mpz_sizeinbase(top.get_mpz_t(), 2);
  data_ = std::make_shared<const Data>(Data{q, bits, limbs_for_bits(bits)});
}

ModInt::ModInt(const BigInt& value, Modulus q) : q_(std::move(q)) {
  mpz_mod(value_.get_mpz_t(), value.get_mpz_t(), q_.value().get_mpz_t());
}

BigInt ModInt::centered() const {
  if (2 * value_ > q_.value()) return value_ - q_.value();
  return value_;
}

ModInt operator+(const ModInt& a, const ModInt& b) {
  require_same_modulus(a.q_, b.q_, "ModInt +");
  return ModInt(a.value_ + b.value_, a.q_);
}

ModInt operator-(const ModInt& a, const ModInt& b) {
  require_same_modulus(a.q_, b.q_, "ModInt -");
  return ModInt(a.value_ - b.value_, a.q_);
}

ModInt operator*(const ModInt& a, const ModInt& b) {
  require_same_modulus(a.q_, b.q_, "ModInt *");
  return ModInt(a.value_ * b.value_, a.q_);
}

namespace detail {

ResidueStore::ResidueStore(Modulus q, std::size_t count)
    : q_(std::move(q)), count_(count), data_(count * q_.limbs(), 0) {}

BigInt ResidueStore::get(std::size_t i) const {
  BigInt out;
  mpz_set(out.get_mpz_t(), LimbView(limbs(i)).get());
  return out;
}

void ResidueStore::set(std::size_t i, const BigInt& v) {
  BigInt r;
  mpz_mod(r.get_mpz_t(), v.get_mpz_t(), q_.value().get_mpz_t());
  set_canonical(i, r.get_mpz_t());
}

void ResidueStore::set_canonical(std::size_t i, mpz_srcptr v) {
  auto dst = limbs(i);
  const std::size_t n = mpz_size(v);
  std::copy_n(mpz_limbs_read(v), n, dst.begin());
  std::fill(dst.begin() + static_cast<std::ptrdiff_t>(n), dst.end(), mp_limb_t{0});
}

}  // namespace detail

ModVector::ModVector(Modulus q, std::span<const BigInt> values) : store_(std::move(q), values.size()) {
  for (std::size_t i = 0; i < values.size(); ++i) store_.set(i, values[i]);
}

ModInt ModVector::at(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("ModVector index");
  return ModInt(store_.get(i), modulus());
}

ModMatrix::ModMatrix(Modulus q, std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), store_(std::move(q), rows * cols) {}

BinaryVector::BinaryVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_)
    if (b > 1) throw std::invalid_argument("binary vector entries must be 0 or 1");
}

BinaryVector BinaryVector::parse(std::string_view text) {
  std::vector<std::uint8_t> bits;
  bits.reserve(text.size());
  for (char c : text) {
    if (c == '0' || c == '1') {
      bits.push_back(static_cast<std::uint8_t>(c - '0'));
    } else if (c != ' ' && c != '\n' && c != '\r' && c != '\t') {
      throw std::invalid_argument(std::string("invalid character in binary vector: '") + c + "'");
    }
  }
  return BinaryVector(std::move(bits));
}

std::size_t BinaryVector::weight() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BinaryVector BinaryVector::resized(std::size_t size) const {
  auto bits = bits_;
  bits.resize(size, 0);
  return BinaryVector(std::move(bits));
}

std::string BinaryVector::to_string() const {
  std::string s(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i) s[i] = static_cast<char>('0' + bits_[i]);
  return s;
}

std::size_t dot(const BinaryVector& x, const BinaryVector& y) {
  if (x.size() != y.size()) throw DimensionError("dot: length mismatch");
  std::size_t s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] & y[i];
  return s;
}

ModVector mat_vec_mul(const ModMatrix& a, const BinaryVector& x, unsigned threads) {
  if (a.cols() != x.size()) throw DimensionError("mat_vec_mul: A.cols != x.length");
  const Modulus& q = a.modulus();
  const std::size_t width = q.limbs();
  std::vector<std::size_t> support;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (x[j]) support.push_back(j);

  ModVector u(q, a.rows());
  parallel_for(a.rows(), threads, [&](std::size_t begin, std::size_t end) {
    // One spare limb absorbs the carries of up to 2^64 additions.
    std::vector<mp_limb_t> acc(width + 1);
    BigInt reduced;
    for (std::size_t i = begin; i < end; ++i) {
      std::fill(acc.begin(), acc.end(), mp_limb_t{0});
      for (std::size_t j : support) {
        const auto col = a.limbs(i, j);
        mpn_add(acc.data(), acc.data(), static_cast<mp_size_t>(width + 1), col.data(),
                static_cast<mp_size_t>(width));
      }
      mpz_mod(reduced.get_mpz_t(), LimbView(acc).get(), q.value().get_mpz_t());
      u.set_canonical(i, reduced.get_mpz_t());
    }
  });
  return u;
}

ModInt vec_vec_mul(const ModVector& t, const ModVector& u) {
  if (t.size() != u.size()) throw DimensionError("vec_vec_mul: length mismatch");
  require_same_modulus(t.modulus(), u.modulus(), "vec_vec_mul");
  BigInt acc;
  for (std::size_t i = 0; i < t.size(); ++i)
    mpz_addmul(acc.get_mpz_t(), LimbView(t.limbs(i)).get(), LimbView(u.limbs(i)).get());
  return ModInt(acc, t.modulus());
}

void column_dot(const ModVector& t, const ModMatrix& a, std::size_t j, mpz_class& acc) {
  acc = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    mpz_addmul(acc.get_mpz_t(), LimbView(t.limbs(i)).get(), LimbView(a.limbs(i, j)).get());
}

ModVector vec_mat_mul(const ModVector& t, const ModMatrix& a, unsigned threads) {
  if (t.size() != a.rows()) throw DimensionError("vec_mat_mul: t.length != A.rows");
  require_same_modulus(t.modulus(), a.modulus(), "vec_mat_mul");
  const Modulus& q = a.modulus();
  ModVector out(q, a.cols());
  parallel_for(a.cols(), threads, [&](std::size_t begin, std::size_t end) {
    BigInt acc;
    for (std::size_t j = begin; j < end; ++j) {
      column_dot(t, a, j, acc);
      mpz_mod(acc.get_mpz_t(), acc.get_mpz_t(), q.value().get_mpz_t());
      out.set_canonical(j, acc.get_mpz_t());
    }
  });
  return out;
}

BigInt round_div(const BigInt& num, const BigInt& den) {
  if (den == 0) throw std::domain_error("round_div: zero divisor");
  BigInt quot, rem;
  mpz_tdiv_qr(quot.get_mpz_t(), rem.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  if (2 * abs(rem) >= abs(den)) {
    if ((sgn(num) < 0) != (sgn(den) < 0))
      quot -= 1;
    else
      quot += 1;
  }
  return quot;
}

BigInt round_nearest(const mpq_class& value) {
  return round_div(value.get_num(), value.get_den());
}

BigInt centered_round_div(const ModInt& d, const BigInt& bin) {
  if (bin == 0) throw std::domain_error("centered_round_div: bin must be non-zero");
  return round_div(d.centered(), bin);
}

BigInt round_div_around(const ModInt& d, const BigInt& bin, const BigInt& center) {
  if (bin == 0) throw std::domain_error("round_div_around: bin must be non-zero");
  const Modulus& q = d.modulus();
  BigInt shifted = (d.value() - center) % q.value();
  if (shifted < 0) shifted += q.value();
  return round_div(center + ModInt(shifted, q).centered(), bin);
}

std::vector<std::uint8_t> to_bytes(const BigInt& v) {
  if (v < 0) throw std::invalid_argument("to_bytes: negative value");
  if (v == 0) return {};
  std::vector<std::uint8_t> out((mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8);
  std::size_t written = 0;
  mpz_export(out.data(), &written, 1, 1, 1, 0, v.get_mpz_t());
  out.resize(written);
  return out;
}

BigInt from_bytes(std::span<const std::uint8_t> bytes) {
  BigInt v;
  if (!bytes.empty()) mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  return v;
}

std::vector<std::uint8_t> serialize(const ModInt& v) {
  ByteWriter w;
  w.integer(v.modulus().value());
  w.integer(v.value());
  return w.take();
}

std::vector<std::uint8_t> serialize(const ModVector& v) {
  ByteWriter w;
  w.integer(v.modulus().value());
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) w.integer(v[i]);
  return w.take();
}

std::vector<std::uint8_t> serialize(const ModMatrix& m) {
  ByteWriter w;
  w.integer(m.modulus().value());
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) w.integer(m(i, j));
  return w.take();
}

ModInt deserialize_mod_int(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Modulus q = read_modulus(r);
  BigInt v = read_residue(r, q);
  r.finish();
  return ModInt(v, q);
}

ModVector deserialize_mod_vector(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Modulus q = read_modulus(r);
  const std::uint32_t count = r.u32();
  ModVector v(q, count);
  for (std::uint32_t i = 0; i < count; ++i) v.set(i, read_residue(r, q));
  r.finish();
  return v;
}

ModMatrix deserialize_mod_matrix(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Modulus q = read_modulus(r);
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  ModMatrix m(q, rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) m.set(i, j, read_residue(r, q));
  r.finish();
  return m;
}

}  // namespace ppsp
