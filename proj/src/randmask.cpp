#include "ppsp/randmask.hpp"

#include <chrono>

#include "ppsp/parallel.hpp"

namespace ppsp {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

BigInt pow2(unsigned e) { return BigInt(1) << e; }

BigInt nonzero_bits(SeededRng& rng, unsigned bits) {
  while (true) {
    BigInt v = random_bits(rng, bits);
    if (v != 0) return v;
  }
}

std::vector<BigInt> draw_nonzero(SeededRng& rng, std::size_t count, unsigned bits, unsigned threads) {
  const StreamFamily elements(SeededRng(rng.next_seed()));
  std::vector<BigInt> out(count);
  parallel_for(count, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      SeededRng r = elements.stream(i);
      out[i] = nonzero_bits(r, bits);
    }
  });
  return out;
}

// Entry i of v padded with two zeros.
unsigned padded(const BinaryVector& v, std::size_t i) { return i < v.size() ? v[i] : 0; }

}  // namespace

void check_mask_config(const MaskConfig& cfg, std::size_t m) {
  if (cfg.k2 < 2 || cfg.k3 < 1 || cfg.k4 < 1 || cfg.k1 < 3)
    throw ParameterViolation("mask bit lengths too small");
  const BigInt slots(static_cast<unsigned long>(m + 2));
  const BigInt noise = slots * (pow2(cfg.k2 + cfg.k3) + pow2(cfg.k2 + cfg.k4) + pow2(cfg.k3 + cfg.k4));
  if (noise >= pow2(2 * cfg.k2 - 2))
    throw ParameterViolation("mask noise can reach alpha^2: raise k2 or lower k3/k4");
  if (slots * pow2(2 * cfg.k2) + pow2(2 * cfg.k2 - 2) >= pow2(cfg.k1 - 1))
    throw ParameterViolation("masked sum can wrap mod p: raise k1");
}

RandMaskParams rand_setup(const MaskConfig& cfg, std::size_t m, SeededRng& rng) {
  check_mask_config(cfg, m);
  RandMaskParams out{cfg, random_prime(rng, cfg.k1), random_prime(rng, cfg.k2), 0, 0};
  out.s_mask = uniform_mod_q(rng, Modulus(out.p_mod));
  while (out.s_mask == 0) out.s_mask = uniform_mod_q(rng, Modulus(out.p_mod));
  mpz_invert(out.s_inv.get_mpz_t(), out.s_mask.get_mpz_t(), out.p_mod.get_mpz_t());
  return out;
}

MaskedVector mask_with(const BinaryVector& x, const RandMaskParams& params, std::span<const BigInt> c) {
  if (c.size() != x.size() + 2) throw DimensionError("mask: need m + 2 mask values");
  MaskedVector out{std::vector<BigInt>(c.size())};
  for (std::size_t i = 0; i < c.size(); ++i) {
    BigInt v = padded(x, i) ? BigInt(params.alpha_prime + c[i]) : c[i];
    v *= params.s_mask;
    mpz_mod(out.c[i].get_mpz_t(), v.get_mpz_t(), params.p_mod.get_mpz_t());
  }
  return out;
}

MaskedVector mask(const BinaryVector& x, const RandMaskParams& params, SeededRng& rng, unsigned threads) {
  const auto c = draw_nonzero(rng, x.size() + 2, params.cfg.k3, threads);
  return mask_with(x, params, c);
}

BigInt respond_with(const MaskedVector& masked, const BinaryVector& y, const RandMaskParams& params,
                    std::span<const BigInt> r) {
  if (masked.c.size() != y.size() + 2 || r.size() != masked.c.size())
    throw DimensionError("respond: lengths must be m + 2");
  BigInt sum;
  for (std::size_t i = 0; i < masked.c.size(); ++i)
    mpz_addmul(sum.get_mpz_t(), masked.c[i].get_mpz_t(),
               padded(y, i) ? params.alpha_prime.get_mpz_t() : r[i].get_mpz_t());
  mpz_mod(sum.get_mpz_t(), sum.get_mpz_t(), params.p_mod.get_mpz_t());
  return sum;
}

BigInt respond(const MaskedVector& masked, const BinaryVector& y, const RandMaskParams& params, SeededRng& rng,
               unsigned threads) {
  const auto r = draw_nonzero(rng, masked.c.size(), params.cfg.k4, threads);
  return respond_with(masked, y, params, r);
}

std::size_t recover(const BigInt& d, const RandMaskParams& params, std::size_t m) {
  BigInt e = d * params.s_inv;
  mpz_mod(e.get_mpz_t(), e.get_mpz_t(), params.p_mod.get_mpz_t());
  const BigInt q = e / (params.alpha_prime * params.alpha_prime);
  if (q > BigInt(static_cast<unsigned long>(m)))
    throw ParameterViolation("recovered value " + q.get_str() + " exceeds m");
  return static_cast<std::size_t>(q.get_ui());
}

std::uint64_t rand_table_bits_x_to_y(std::size_t m, unsigned k1) { return static_cast<std::uint64_t>(m + 4) * k1; }

std::uint64_t rand_wire_bits_x_to_y(std::size_t m, const MaskConfig& cfg) {
  return static_cast<std::uint64_t>(m + 2) * cfg.k1 + cfg.k2 + cfg.k1;
}

RandRun ppsp_randomised(const BinaryVector& x, const BinaryVector& y, const MaskConfig& cfg, SeededRng& rng,
                        unsigned threads) {
  if (x.size() != y.size()) throw DimensionError("ppsp_randomised: length mismatch");
  RandRun run;
  auto t0 = std::chrono::steady_clock::now();
  const RandMaskParams params = rand_setup(cfg, x.size(), rng);
  run.keygen_ms = elapsed_ms(t0);
  const MaskedVector masked = mask(x, params, rng, threads);
  run.step1_ms = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  const BigInt d = respond(masked, y, params, rng, threads);
  run.step2_ms = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  run.result = recover(d, params, x.size());
  run.step3_ms = elapsed_ms(t0);

  run.table_bits_x_to_y = rand_table_bits_x_to_y(x.size(), cfg.k1);
  run.table_bits_y_to_x = cfg.k1;
  run.wire_bits_x_to_y = rand_wire_bits_x_to_y(x.size(), cfg);
  run.wire_bits_y_to_x = cfg.k1;
  return run;
}

}  // namespace ppsp
