#include "ppsp/sampler.hpp"

#include <mpfr.h>
#include <sodium.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

#include "ppsp/parallel.hpp"
#include "ppsp/params.hpp"

namespace ppsp {

namespace {

void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  });
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Correctly rounded natural log; std::log is not guaranteed to be.
double exact_log(double x) {
  mpfr_t v;
  mpfr_init2(v, 53);
  mpfr_set_d(v, x, MPFR_RNDN);
  mpfr_log(v, v, MPFR_RNDN);
  const double out = mpfr_get_d(v, MPFR_RNDN);
  mpfr_clear(v);
  return out;
}

}  // namespace

Seed parse_seed(std::string_view hex) {
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  if (hex.size() != 64) throw std::invalid_argument("seed must be 64 hex digits (32 bytes)");
  Seed seed{};
  for (std::size_t i = 0; i < seed.size(); ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("seed contains a non-hex character");
    seed[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return seed;
}

std::string to_hex(const Seed& seed) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (auto b : seed) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 15]);
  }
  return out;
}

Seed random_seed() {
  ensure_sodium();
  Seed seed;
  randombytes_buf(seed.data(), seed.size());
  return seed;
}

Seed derive_seed(const Seed& seed, std::string_view label) {
  ensure_sodium();
  Seed out;
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, out.size());
  crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(label.data()), label.size());
  crypto_generichash_update(&st, seed.data(), seed.size());
  crypto_generichash_final(&st, out.data(), out.size());
  return out;
}

SeededRng::SeededRng(const Seed& seed, std::uint64_t stream) : key_(seed), stream_(stream) {
  ensure_sodium();
}

void SeededRng::refill() {
  std::array<unsigned char, crypto_stream_chacha20_NONCEBYTES> nonce{};
  for (std::size_t k = 0; k < nonce.size(); ++k) nonce[k] = static_cast<unsigned char>(stream_ >> (8 * k));
  buffer_.fill(0);
  crypto_stream_chacha20_xor_ic(buffer_.data(), buffer_.data(), buffer_.size(), nonce.data(), block_,
                                key_.data());
  block_ += buffer_.size() / 64;
  pos_ = 0;
}

void SeededRng::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (pos_ == buffer_.size()) refill();
    const std::size_t take = std::min(out.size() - done, buffer_.size() - pos_);
    std::copy_n(buffer_.begin() + static_cast<std::ptrdiff_t>(pos_), take, out.begin() + static_cast<std::ptrdiff_t>(done));
    pos_ += take;
    done += take;
  }
}

std::uint64_t SeededRng::next_u64() {
  std::array<std::uint8_t, 8> b;
  fill(b);
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | b[static_cast<std::size_t>(k)];
  return v;
}

double SeededRng::next_unit_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

StreamFamily::StreamFamily(const SeededRng& parent) {
  std::string label = "ppsp/substream/";
  for (std::size_t k = 0; k < 8; ++k) label.push_back(static_cast<char>(parent.stream_ >> (8 * k)));
  key_ = derive_seed(parent.key_, label);
}

SeededRng SeededRng::substream(std::uint64_t index) const { return StreamFamily(*this).stream(index); }

Seed SeededRng::next_seed() {
  Seed s;
  fill(s);
  return s;
}

void uniform_mod_q_into(SeededRng& rng, const Modulus& q, std::span<mp_limb_t> out) {
  const std::size_t bits = q.bits();
  const std::size_t limbs = q.limbs();
  const unsigned top_bits = static_cast<unsigned>(bits - (limbs - 1) * GMP_NUMB_BITS);
  const mp_limb_t top_mask = top_bits >= GMP_NUMB_BITS ? ~mp_limb_t{0} : (mp_limb_t{1} << top_bits) - 1;
  const mp_limb_t* qp = mpz_limbs_read(q.value().get_mpz_t());
  const std::size_t qsize = mpz_size(q.value().get_mpz_t());
  while (true) {
    for (std::size_t k = 0; k < limbs; ++k) out[k] = rng.next_u64();
    out[limbs - 1] &= top_mask;
    // q may need one more limb than the residues (q = 2^(64k)).
    if (qsize > limbs) return;
    if (mpn_cmp(out.data(), qp, static_cast<mp_size_t>(limbs)) < 0) return;
  }
}

BigInt uniform_mod_q(SeededRng& rng, const Modulus& q) {
  std::vector<mp_limb_t> limbs(q.limbs());
  uniform_mod_q_into(rng, q, limbs);
  BigInt out;
  mpz_set(out.get_mpz_t(), LimbView(limbs).get());
  return out;
}

BigInt random_bits(SeededRng& rng, unsigned bits) {
  std::vector<std::uint8_t> buf((bits + 7) / 8);
  rng.fill(buf);
  BigInt v = from_bytes(buf);
  mpz_fdiv_r_2exp(v.get_mpz_t(), v.get_mpz_t(), bits);
  return v;
}

BigInt random_prime(SeededRng& rng, unsigned bits, unsigned top_bits) {
  if (bits < 2 || top_bits < 1 || top_bits > bits) throw std::invalid_argument("random_prime: bad bit counts");
  for (int attempt = 0; attempt < 64; ++attempt) {
    BigInt c = random_bits(rng, bits);
    for (unsigned k = 1; k <= top_bits; ++k) mpz_setbit(c.get_mpz_t(), bits - k);
    BigInt p;
    mpz_nextprime(p.get_mpz_t(), c.get_mpz_t());
    if (mpz_sizeinbase(p.get_mpz_t(), 2) == bits) return p;
  }
  throw std::runtime_error("prime generation failed");
}

ModVector uniform_vector(SeededRng& rng, const Modulus& q, std::size_t size) {
  ModVector v(q, size);
  for (std::size_t i = 0; i < size; ++i) uniform_mod_q_into(rng, q, v.limbs(i));
  return v;
}

double standard_normal(SeededRng& rng) {
  while (true) {
    const double u = 2.0 * rng.next_unit_double() - 1.0;
    const double v = 2.0 * rng.next_unit_double() - 1.0;
    const double s = u * u + v * v;
    if (s >= 1.0 || s == 0.0) continue;
    return u * std::sqrt(-2.0 * exact_log(s) / s);
  }
}

BigInt scale_and_round(double w, const BigInt& q) {
  if (!std::isfinite(w)) throw std::domain_error("scale_and_round: non-finite draw");
  if (w == 0.0) return 0;
  int exp = 0;
  const double frac = std::frexp(w, &exp);  // w = frac * 2^exp, 0.5 <= |frac| < 1
  const auto mant = static_cast<std::int64_t>(std::ldexp(frac, 53));
  const int shift = exp - 53;  // w = mant * 2^shift exactly
  BigInt scaled = BigInt(static_cast<long>(mant)) * q;
  if (shift >= 0) {
    mpz_mul_2exp(scaled.get_mpz_t(), scaled.get_mpz_t(), static_cast<mp_bitcnt_t>(shift));
    return scaled;
  }
  BigInt den;
  mpz_ui_pow_ui(den.get_mpz_t(), 2, static_cast<unsigned long>(-shift));
  return round_div(scaled, den);
}

ErrorSample gaussian_error(SeededRng& rng, const ParameterSet& p) {
  const Modulus q(p.q);
  if (p.alpha == 0) {
    // Degenerate distribution: no draw is consumed.
    return {ModInt::zero(q), 0.0};
  }
  const double w = standard_normal(rng) * error_stddev_unscaled(p);
  return {ModInt(scale_and_round(w, p.q), q), w};
}

ModMatrix derive_public_matrix(const Seed& seed, const ParameterSet& p, unsigned threads) {
  const Modulus q(p.q);
  ModMatrix a(q, p.n, p.m);
  const StreamFamily columns(SeededRng(derive_seed(seed, "ppsp/public-matrix")));
  parallel_for(p.m, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      SeededRng col = columns.stream(j);
      for (std::size_t i = 0; i < p.n; ++i) uniform_mod_q_into(col, q, a.limbs(i, j));
    }
  });
  return a;
}

}  // namespace ppsp
