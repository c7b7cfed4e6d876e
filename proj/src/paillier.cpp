#include "ppsp/paillier.hpp"

#include <chrono>

#include "ppsp/parallel.hpp"

namespace ppsp {

namespace {

constexpr int kPrimeAttempts = 64;

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

// Uniform unit of Z_n.
BigInt random_unit(SeededRng& rng, const BigInt& n) {
  const Modulus mod(n);
  while (true) {
    BigInt r = uniform_mod_q(rng, mod);
    if (r != 0 && gcd(r, n) == 1) return r;
  }
}

void require_key(const PaillierPublicKey& pk, const PaillierCiphertext& c) {
  if (!(c.value.modulus() == pk.n_sq)) throw ModulusMismatch("ciphertext belongs to a different key");
}

}  // namespace

PaillierKeypair paillier_keygen(SeededRng& rng, unsigned key_bits) {
  if (key_bits < 64 || key_bits % 2 != 0) throw std::invalid_argument("key_bits must be even and at least 64");
  for (int attempt = 0; attempt < kPrimeAttempts; ++attempt) {
    BigInt p = random_prime(rng, key_bits / 2, 2);
    BigInt q = random_prime(rng, key_bits / 2, 2);
    if (p == q) continue;
    const BigInt n = p * q;
    const BigInt phi = (p - 1) * (q - 1);
    if (gcd(n, phi) != 1) continue;
    BigInt lambda;
    mpz_lcm(lambda.get_mpz_t(), BigInt(p - 1).get_mpz_t(), BigInt(q - 1).get_mpz_t());
    BigInt mu;
    mpz_invert(mu.get_mpz_t(), lambda.get_mpz_t(), n.get_mpz_t());
    return PaillierKeypair{p, q, PaillierPublicKey{n, Modulus(n * n), key_bits}, lambda, mu};
  }
  throw KeygenError("key generation failed");
}

PaillierCiphertext paillier_encrypt(const PaillierPublicKey& pk, const BigInt& msg, SeededRng& rng) {
  if (msg < 0 || msg >= pk.n) throw std::out_of_range("plaintext must lie in [0, n)");
  const BigInt r = random_unit(rng, pk.n);
  const BigInt& n_sq = pk.n_sq.value();
  BigInt rn;
  mpz_powm(rn.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t(), n_sq.get_mpz_t());
  // g^msg = 1 + msg n (mod n^2) for g = n + 1.
  return {ModInt(BigInt(1 + msg * pk.n) * rn, pk.n_sq)};
}

BigInt paillier_decrypt(const PaillierKeypair& key, const PaillierCiphertext& c) {
  require_key(key.pk, c);
  BigInt u;
  mpz_powm(u.get_mpz_t(), c.value.value().get_mpz_t(), key.lambda.get_mpz_t(), key.pk.n_sq.value().get_mpz_t());
  const BigInt l = (u - 1) / key.pk.n;
  BigInt out = l * key.mu;
  mpz_mod(out.get_mpz_t(), out.get_mpz_t(), key.pk.n.get_mpz_t());
  return out;
}

PaillierCiphertext hom_add(const PaillierPublicKey& pk, const PaillierCiphertext& a, const PaillierCiphertext& b) {
  require_key(pk, a);
  require_key(pk, b);
  return {a.value * b.value};
}

PaillierCiphertext hom_scale(const PaillierPublicKey& pk, const PaillierCiphertext& a, const BigInt& k) {
  require_key(pk, a);
  if (k < 0) throw std::invalid_argument("hom_scale: exponent must be non-negative");
  BigInt out;
  mpz_powm(out.get_mpz_t(), a.value.value().get_mpz_t(), k.get_mpz_t(), pk.n_sq.value().get_mpz_t());
  return {ModInt(out, pk.n_sq)};
}

std::uint64_t paillier_table_bits_x_to_y(std::size_t m, unsigned key_bits) {
  return static_cast<std::uint64_t>(m) * key_bits;
}

std::uint64_t paillier_table_bits_y_to_x(unsigned key_bits) { return key_bits; }

std::vector<PaillierCiphertext> paillier_encrypt_vector(const PaillierPublicKey& pk, const BinaryVector& x,
                                                        std::size_t count, SeededRng& rng, unsigned threads) {
  if (count > x.size()) throw DimensionError("cannot encrypt more entries than the vector holds");
  const StreamFamily elements(SeededRng(rng.next_seed()));
  std::vector<PaillierCiphertext> out(count, PaillierCiphertext{ModInt::zero(pk.n_sq)});
  parallel_for(count, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      SeededRng r = elements.stream(i);
      out[i] = paillier_encrypt(pk, BigInt(x[i]), r);
    }
  });
  return out;
}

PaillierRun ppsp_paillier(const BinaryVector& x, const BinaryVector& y, const PaillierKeypair& key, SeededRng& rng,
                          unsigned threads) {
  if (x.size() != y.size()) throw DimensionError("ppsp_paillier: length mismatch");
  PaillierRun run;
  auto t0 = std::chrono::steady_clock::now();
  const auto cts = paillier_encrypt_vector(key.pk, x, x.size(), rng, threads);
  run.step1_ms = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  // x^0 = 1 is a valid encryption of 0, so the zero entries just drop out.
  PaillierCiphertext acc{ModInt(BigInt(1), key.pk.n_sq)};
  for (std::size_t i = 0; i < y.size(); ++i) acc = hom_add(key.pk, acc, hom_scale(key.pk, cts[i], BigInt(y[i])));
  run.step2_ms = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  run.result = paillier_decrypt(key, acc).get_ui();
  run.step3_ms = elapsed_ms(t0);

  const unsigned key_bits = key.pk.key_bits;
  run.table_bits_x_to_y = paillier_table_bits_x_to_y(x.size(), key_bits);
  run.table_bits_y_to_x = paillier_table_bits_y_to_x(key_bits);
  run.wire_bits_x_to_y = static_cast<std::uint64_t>(x.size()) * 2 * key_bits + key_bits;
  run.wire_bits_y_to_x = 2 * static_cast<std::uint64_t>(key_bits);
  return run;
}

PaillierRun ppsp_paillier(const BinaryVector& x, const BinaryVector& y, unsigned key_bits, SeededRng& rng,
                          unsigned threads) {
  if (x.size() != y.size()) throw DimensionError("ppsp_paillier: length mismatch");
  const auto t0 = std::chrono::steady_clock::now();
  const PaillierKeypair key = paillier_keygen(rng, key_bits);
  const double keygen = elapsed_ms(t0);
  PaillierRun run = ppsp_paillier(x, y, key, rng, threads);
  run.keygen_ms = keygen;
  run.step1_ms += keygen;
  return run;
}

}  // namespace ppsp
