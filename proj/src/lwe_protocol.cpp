#include "ppsp/lwe_protocol.hpp"

#include <chrono>

#include "ppsp/parallel.hpp"

namespace ppsp {

namespace {

constexpr std::uint8_t kFrameVersion = 1;
constexpr std::uint8_t kKindU = 1;
constexpr std::uint8_t kKindC = 2;

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

void check_shape(const ParameterSet& p, const ModMatrix& a, const BinaryVector& v, const char* who) {
  if (a.rows() != p.n || a.cols() != p.m) throw DimensionError(std::string(who) + ": A must be n x m");
  if (v.size() != p.m) throw DimensionError(std::string(who) + ": input length must equal m");
  if (!(a.modulus() == Modulus(p.q))) throw ModulusMismatch(std::string(who) + ": A is not over Z_q");
}

class BitWriter {
 public:
  void put_bits(std::uint64_t value, unsigned count) {
    for (unsigned k = count; k-- > 0;) put_bit((value >> k) & 1);
  }
  // Low `width` bits of v, most significant first.
  void put_field(const BigInt& v, std::size_t width) {
    const std::size_t nbytes = (width + 7) / 8;
    std::vector<std::uint8_t> buf(nbytes, 0);
    const auto mag = to_bytes(v);
    std::copy(mag.begin(), mag.end(), buf.end() - static_cast<std::ptrdiff_t>(mag.size()));
    const unsigned lead = static_cast<unsigned>(nbytes * 8 - width);
    put_bits(buf[0], 8 - lead);
    for (std::size_t k = 1; k < nbytes; ++k) put_bits(buf[k], 8);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void put_bit(unsigned b) {
    if (fill_ == 0) out_.push_back(0);
    out_.back() |= static_cast<std::uint8_t>(b << (7 - fill_));
    fill_ = (fill_ + 1) & 7;
  }
  std::vector<std::uint8_t> out_;
  unsigned fill_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint64_t get_bits(unsigned count) {
    std::uint64_t v = 0;
    for (unsigned k = 0; k < count; ++k) v = (v << 1) | get_bit();
    return v;
  }
  BigInt get_field(std::size_t width) {
    const std::size_t nbytes = (width + 7) / 8;
    std::vector<std::uint8_t> buf(nbytes, 0);
    const unsigned lead = static_cast<unsigned>(nbytes * 8 - width);
    buf[0] = static_cast<std::uint8_t>(get_bits(8 - lead));
    for (std::size_t k = 1; k < nbytes; ++k) buf[k] = static_cast<std::uint8_t>(get_bits(8));
    return from_bytes(buf);
  }
  std::size_t bit_position() const { return pos_; }

 private:
  unsigned get_bit() {
    if (pos_ >= in_.size() * 8) throw SerializationError("frame truncated");
    const unsigned b = (in_[pos_ / 8] >> (7 - pos_ % 8)) & 1;
    ++pos_;
    return b;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_header(BitWriter& w, std::uint8_t kind, const ParameterSet& p) {
  for (char c : std::string("PPSP")) w.put_bits(static_cast<std::uint8_t>(c), 8);
  w.put_bits(kFrameVersion, 8);
  w.put_bits(kind, 8);
  if (p.name.size() > 0xffff) throw SerializationError("set name too long");
  w.put_bits(p.name.size(), 16);
  for (char c : p.name) w.put_bits(static_cast<std::uint8_t>(c), 8);
  w.put_bits(p.n, 32);
  w.put_bits(p.m, 32);
  w.put_bits(Modulus(p.q).bits(), 32);
}

FrameHeader parse_header(BitReader& r) {
  std::string magic;
  for (int k = 0; k < 4; ++k) magic.push_back(static_cast<char>(r.get_bits(8)));
  if (magic != "PPSP") throw SerializationError("bad frame magic");
  if (r.get_bits(8) != kFrameVersion) throw SerializationError("unsupported frame version");
  FrameHeader h;
  h.kind = static_cast<std::uint8_t>(r.get_bits(8));
  const auto len = r.get_bits(16);
  for (std::uint64_t k = 0; k < len; ++k) h.set_name.push_back(static_cast<char>(r.get_bits(8)));
  h.n = static_cast<std::uint32_t>(r.get_bits(32));
  h.m = static_cast<std::uint32_t>(r.get_bits(32));
  h.q_bits = static_cast<std::uint32_t>(r.get_bits(32));
  return h;
}

FrameHeader expect_header(BitReader& r, std::uint8_t kind, const ParameterSet& p) {
  FrameHeader h = parse_header(r);
  if (h.kind != kind) throw SerializationError("unexpected message kind");
  if (h.n != p.n || h.m != p.m || h.q_bits != Modulus(p.q).bits())
    throw SerializationError("frame header does not match the parameter set");
  return h;
}

BigInt read_residue(BitReader& r, const Modulus& q) {
  BigInt v = r.get_field(q.bits());
  if (v >= q.value()) throw SerializationError("field value not reduced mod q");
  return v;
}

void expect_end(const BitReader& r, std::span<const std::uint8_t> frame) {
  if ((r.bit_position() + 7) / 8 != frame.size()) throw SerializationError("trailing bytes in frame");
}

}  // namespace

EntityX::EntityX(ParameterSet p, std::shared_ptr<const ModMatrix> a, BinaryVector x)
    : p_(std::move(p)), a_(std::move(a)), x_(std::move(x)) {
  check_shape(p_, *a_, x_, "EntityX");
  bin_ = bin_size(p_);
}

MsgU EntityX::step1(unsigned threads) {
  if (state_ != State::Init) throw ProtocolStateError("step1 requires state Init");
  MsgU msg{mat_vec_mul(*a_, x_, threads)};
  state_ = State::SentU;
  return msg;
}

std::size_t EntityX::step3(const MsgC& msg) {
  if (state_ != State::SentU) throw ProtocolStateError("step3 requires state SentU");
  const Modulus& q = a_->modulus();
  if (msg.c2.size() != p_.m) throw DimensionError("step3: c2 length must equal m");
  if (!(msg.c2.modulus() == q) || !(msg.c1.modulus() == q)) throw ModulusMismatch("step3: message not over Z_q");
  BigInt acc;
  for (std::size_t j = 0; j < p_.m; ++j)
    if (x_[j]) mpz_add(acc.get_mpz_t(), acc.get_mpz_t(), LimbView(msg.c2.limbs(j)).get());
  acc -= msg.c1.value();
  state_ = State::Done;
  // x^T y lies in [0, w], so the rounding window is centred on that range
  // rather than on zero. Errors up to half a bin survive whenever w < m.
  const unsigned long w = x_.weight();
  acc %= q.value();
  if (acc < 0) acc += q.value();
  const ModInt d(acc, q);
  BigInt s = round_div_around(d, bin_, BigInt(w) * bin_ / 2);
  if (w == p_.m && (s == 0 || s == w)) {
    // Slots 0 and m differ by m bin - q mod q, which is tiny: pick the one
    // nearer to d, preferring 0 on a tie.
    BigInt to_m = d.value() - BigInt(w) * bin_;
    to_m %= q.value();
    if (to_m < 0) to_m += q.value();
    s = abs(ModInt(to_m, q).centered()) < abs(d.centered()) ? BigInt(w) : BigInt(0);
  }
  if (s < 0 || s > BigInt(w))
    throw DecryptionFailure("decryption failure: recovered value " + s.get_str() + " outside [0, weight(x)]", s);
  return static_cast<std::size_t>(s.get_ui());
}

EntityY::EntityY(ParameterSet p, std::shared_ptr<const ModMatrix> a, BinaryVector y)
    : p_(std::move(p)), a_(std::move(a)), y_(std::move(y)) {
  check_shape(p_, *a_, y_, "EntityY");
  bin_ = bin_size(p_);
}

MsgC EntityY::step2(const MsgU& msg, SeededRng& rng, unsigned threads) {
  return step2(msg, rng, threads, Step2Override{});
}

MsgC EntityY::step2(const MsgU& msg, SeededRng& rng, unsigned threads, const Step2Override& hook,
                    Step2Trace* trace) {
  if (state_ != State::Init) throw ProtocolStateError("step2 requires state Init");
  const Modulus& q = a_->modulus();
  if (msg.u.size() != p_.n) throw DimensionError("step2: u length must equal n");
  if (!(msg.u.modulus() == q)) throw ModulusMismatch("step2: u not over Z_q");
  if (hook.t && (hook.t->size() != p_.n || !(hook.t->modulus() == q)))
    throw DimensionError("step2: injected t must be an n-vector over Z_q");
  if (hook.errors && hook.errors->e2.size() != p_.m) throw DimensionError("step2: injected e2 must have length m");

  const ModVector t = hook.t ? *hook.t : uniform_vector(rng, q, p_.n);
  const BigInt e1 = hook.errors ? hook.errors->e1 : gaussian_error(rng, p_).value.centered();
  const StreamFamily columns(SeededRng(rng.next_seed()));

  std::vector<BigInt> e2(p_.m);
  ModVector c2(q, p_.m);
  parallel_for(p_.m, threads, [&](std::size_t begin, std::size_t end) {
    BigInt acc;
    for (std::size_t j = begin; j < end; ++j) {
      if (hook.errors) {
        e2[j] = hook.errors->e2[j];
      } else {
        SeededRng col = columns.stream(j);
        e2[j] = gaussian_error(col, p_).value.centered();
      }
      column_dot(t, *a_, j, acc);
      acc += e2[j];
      if (y_[j]) acc += bin_;
      mpz_mod(acc.get_mpz_t(), acc.get_mpz_t(), q.value().get_mpz_t());
      c2.set_canonical(j, acc.get_mpz_t());
    }
  });
  MsgC out{vec_vec_mul(t, msg.u) + ModInt(e1, q), std::move(c2)};
  if (trace) {
    trace->t = t;
    trace->e1 = e1;
    trace->e2 = std::move(e2);
  }
  state_ = State::Responded;
  return out;
}

std::uint64_t lwe_bits_x_to_y(const ParameterSet& p) { return p.n * Modulus(p.q).bits(); }

std::uint64_t lwe_bits_y_to_x(const ParameterSet& p) { return (p.m + 1) * Modulus(p.q).bits(); }

LweTranscript run_local(const ParameterSet& p, std::shared_ptr<const ModMatrix> a, const BinaryVector& x,
                        const BinaryVector& y, SeededRng& y_rng, unsigned threads) {
  EntityX ex(p, a, x);
  EntityY ey(p, a, y);
  LweTranscript tr{MsgU{ModVector(a->modulus(), 0)}, MsgC{ModInt::zero(a->modulus()), ModVector(a->modulus(), 0)}};

  auto t0 = std::chrono::steady_clock::now();
  tr.msg_u = ex.step1(threads);
  tr.step1_ms = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  tr.msg_c = ey.step2(tr.msg_u, y_rng, threads);
  tr.step2_ms = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  tr.result = ex.step3(tr.msg_c);
  tr.step3_ms = elapsed_ms(t0);

  tr.bits_x_to_y = lwe_bits_x_to_y(p);
  tr.bits_y_to_x = lwe_bits_y_to_x(p);
  tr.bytes_x_to_y = (tr.bits_x_to_y + 7) / 8;
  tr.bytes_y_to_x = (tr.bits_y_to_x + 7) / 8;
  return tr;
}

LweTranscript run_local(const ParameterSet& p, const BinaryVector& x, const BinaryVector& y, const Seed& seed,
                        unsigned threads) {
  const auto t0 = std::chrono::steady_clock::now();
  auto a = std::make_shared<const ModMatrix>(derive_public_matrix(seed, p, threads));
  const double setup = elapsed_ms(t0);
  SeededRng y_rng(derive_seed(seed, "ppsp/entity-y"));
  LweTranscript tr = run_local(p, std::move(a), x, y, y_rng, threads);
  tr.setup_ms = setup;
  return tr;
}

std::size_t frame_header_size(const ParameterSet& p) { return 4 + 1 + 1 + 2 + p.name.size() + 12; }

std::vector<std::uint8_t> encode(const MsgU& msg, const ParameterSet& p) {
  const Modulus q(p.q);
  if (msg.u.size() != p.n) throw DimensionError("encode: u length must equal n");
  BitWriter w;
  write_header(w, kKindU, p);
  for (std::size_t i = 0; i < msg.u.size(); ++i) w.put_field(msg.u[i], q.bits());
  return w.take();
}

std::vector<std::uint8_t> encode(const MsgC& msg, const ParameterSet& p) {
  const Modulus q(p.q);
  if (msg.c2.size() != p.m) throw DimensionError("encode: c2 length must equal m");
  BitWriter w;
  write_header(w, kKindC, p);
  w.put_field(msg.c1.value(), q.bits());
  for (std::size_t j = 0; j < msg.c2.size(); ++j) w.put_field(msg.c2[j], q.bits());
  return w.take();
}

FrameHeader read_header(std::span<const std::uint8_t> frame) {
  BitReader r(frame);
  return parse_header(r);
}

MsgU decode_msg_u(std::span<const std::uint8_t> frame, const ParameterSet& p) {
  const Modulus q(p.q);
  BitReader r(frame);
  expect_header(r, kKindU, p);
  ModVector u(q, p.n);
  for (std::size_t i = 0; i < p.n; ++i) u.set(i, read_residue(r, q));
  expect_end(r, frame);
  return MsgU{std::move(u)};
}

MsgC decode_msg_c(std::span<const std::uint8_t> frame, const ParameterSet& p) {
  const Modulus q(p.q);
  BitReader r(frame);
  expect_header(r, kKindC, p);
  ModInt c1(read_residue(r, q), q);
  ModVector c2(q, p.m);
  for (std::size_t j = 0; j < p.m; ++j) c2.set(j, read_residue(r, q));
  expect_end(r, frame);
  return MsgC{std::move(c1), std::move(c2)};
}

}  // namespace ppsp
