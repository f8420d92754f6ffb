#include "chebfd/cheby.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace chebfd::cheby {

namespace {

constexpr char kMagic[8] = {'C', 'H', 'F', 'D', 'S', 'E', 'Q', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
  void u32(std::uint32_t x) { raw(x, 4); }
  void u64(std::uint64_t x) { raw(x, 8); }
  void i32(std::int32_t x) { u32(static_cast<std::uint32_t>(x)); }
  void f64(double x) { u64(std::bit_cast<std::uint64_t>(x)); }
  void bytes(const char *p, std::size_t n) { buf_.append(p, n); }
  void doubles(std::span<const double> v) {
    for (double x : v)
      f64(x);
  }
  std::string &buffer() { return buf_; }

private:
  void raw(std::uint64_t x, int n) {
    for (int i = 0; i < n; ++i)
      buf_.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
  }
  std::string buf_;
};

class Reader {
public:
  Reader(const std::string &buf, std::string what)
      : buf_(buf), what_(std::move(what)) {}
  std::uint64_t u64() { return raw(8); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void bytes(char *out, std::size_t n) {
    need(n);
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::vector<double> doubles(std::uint64_t n) {
    need(n * 8);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto &x : v)
      x = f64();
    return v;
  }
  std::size_t pos() const { return pos_; }

private:
  void need(std::uint64_t n) {
    if (pos_ + n > buf_.size())
      throw CheckpointError(fmt::format(
          "{}: file truncated ({} bytes, needed at least {})", what_,
          buf_.size(), pos_ + n));
  }
  std::uint64_t raw(int n) {
    need(static_cast<std::uint64_t>(n));
    std::uint64_t x = 0;
    for (int i = 0; i < n; ++i)
      x |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + static_cast<std::size_t>(i)]))
           << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return x;
  }
  const std::string &buf_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::int32_t parity_code(Parity p) { return static_cast<std::int32_t>(p); }

Parity parity_decode(std::int32_t x, const std::string &what) {
  if (x < 0 || x > 2)
    throw CheckpointError(fmt::format("{}: invalid parity code {}", what, x));
  return static_cast<Parity>(x);
}

void atomic_write(const std::filesystem::path &path, const std::string &data) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f)
      throw CheckpointError(fmt::format("cannot open {} for writing", tmp.string()));
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
    f.flush();
    if (!f)
      throw CheckpointError(fmt::format("write to {} failed", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    throw CheckpointError(fmt::format("cannot rename {} to {}: {}", tmp.string(),
                                      path.string(), ec.message()));
}

std::string slurp(const std::filesystem::path &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw CheckpointError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Lists every header field that differs; empty when compatible.
std::vector<std::string> compatibility(const ChebyshevSequence &a,
                                       const ChebyshevSequence &b,
                                       std::size_t vector_length,
                                       std::size_t grid_size) {
  std::vector<std::string> d;
  if (a.grid_hash != b.grid_hash)
    d.push_back(fmt::format("grid hash {} != {}", hex64(a.grid_hash), hex64(b.grid_hash)));
  if (a.config_hash != b.config_hash)
    d.push_back(fmt::format("config hash {} != {}", hex64(a.config_hash),
                            hex64(b.config_hash)));
  if (a.scaling.shift != b.scaling.shift || a.scaling.half_width != b.scaling.half_width)
    d.push_back(fmt::format("scaling ({:.17g}, {:.17g}) != ({:.17g}, {:.17g})",
                            a.scaling.shift, a.scaling.half_width, b.scaling.shift,
                            b.scaling.half_width));
  if (a.parity != b.parity)
    d.push_back(fmt::format("parity {} != {}", to_string(a.parity), to_string(b.parity)));
  if (a.seed != b.seed)
    d.push_back(fmt::format("seed {} != {}", a.seed, b.seed));
  if (vector_length != grid_size)
    d.push_back(fmt::format("vector length {} != grid size {}", vector_length, grid_size));
  return d;
}

} // namespace

void write_checkpoint(const std::filesystem::path &path, const CheckpointData &d) {
  const auto &s = d.sequence;
  if (d.prev.size() != d.cur.size())
    throw std::logic_error("checkpoint vectors differ in length");
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.u32(0);
  w.u64(s.grid_hash);
  w.u64(s.config_hash);
  w.f64(s.scaling.shift);
  w.f64(s.scaling.half_width);
  w.i32(parity_code(s.parity));
  w.u32(0);
  w.u64(s.seed);
  w.u64(d.target_coeffs);
  w.u64(s.steps);
  w.u64(s.c.size());
  w.u64(d.cur.size());
  w.doubles(s.c);
  w.doubles(d.prev);
  w.doubles(d.cur);
  Fnv1a h;
  h.update(w.buffer().data(), w.buffer().size());
  w.u64(h.digest());
  atomic_write(path, w.buffer());
}

CheckpointData read_checkpoint(const std::filesystem::path &path) {
  const std::string buf = slurp(path);
  const std::string what = path.string();
  Reader r(buf, what);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw CheckpointError(fmt::format("{}: not a Chebyshev sequence file", what));
  if (const auto v = r.u32(); v != kVersion)
    throw CheckpointError(fmt::format("{}: unsupported version {}", what, v));
  r.u32();
  CheckpointData d;
  auto &s = d.sequence;
  s.grid_hash = r.u64();
  s.config_hash = r.u64();
  s.scaling.shift = r.f64();
  s.scaling.half_width = r.f64();
  s.parity = parity_decode(r.i32(), what);
  r.u32();
  s.seed = r.u64();
  d.target_coeffs = r.u64();
  s.steps = r.u64();
  const auto nc = r.u64();
  const auto nv = r.u64();
  // size check before allocating
  const std::uint64_t expect = r.pos() + 8 * (nc + 2 * nv) + 8;
  if (buf.size() != expect)
    throw CheckpointError(fmt::format(
        "{}: size {} bytes does not match the header ({} expected); file "
        "truncated or corrupt",
        what, buf.size(), expect));
  s.c = r.doubles(nc);
  d.prev = r.doubles(nv);
  d.cur = r.doubles(nv);
  const std::size_t body = r.pos();
  const auto stored = r.u64();
  Fnv1a h;
  h.update(buf.data(), body);
  if (h.digest() != stored)
    throw CheckpointError(fmt::format("{}: checksum mismatch", what));
  return d;
}

void write_sequence(const std::filesystem::path &path, const ChebyshevSequence &s) {
  write_checkpoint(path, {s, s.c.size(), {}, {}});
}

ChebyshevSequence read_sequence(const std::filesystem::path &path) {
  return read_checkpoint(path).sequence;
}

ChebyshevSequence generate_sequence(const ham::ScaledHamiltonian &h,
                                    std::span<const double> xi0,
                                    const SequenceRequest &request,
                                    const CheckpointPolicy &policy) {
  const std::size_t n = h.size();
  if (request.n_coeffs < 2 || request.n_coeffs % 2 != 0)
    throw ConfigError(fmt::format(
        "number of Chebyshev coefficients must be even and >= 2 (got {})",
        request.n_coeffs));
  if (xi0.size() != n)
    throw ConfigError("start vector does not match the grid");
  if (!h.scaled())
    throw NumericalError("Hamiltonian has no spectral scaling");

  ChebyshevSequence seq;
  seq.grid_hash = h.grid().content_hash();
  seq.config_hash = request.config_hash;
  seq.scaling = h.scaling();
  seq.parity = request.parity;
  seq.seed = request.seed;
  const std::uint64_t total = request.n_coeffs / 2;

  std::vector<double> prev, cur;
  const bool have_ckpt = !policy.path.empty() && policy.resume &&
                         std::filesystem::exists(policy.path);
  if (have_ckpt) {
    auto d = read_checkpoint(policy.path);
    const auto diff = compatibility(d.sequence, seq, d.cur.size(), n);
    if (!diff.empty()) {
      std::string msg = fmt::format("checkpoint {} is incompatible with this run:",
                                    policy.path.string());
      for (const auto &x : diff)
        msg += "\n  " + x;
      throw CheckpointError(msg);
    }
    if (d.sequence.steps > total)
      throw CheckpointError(fmt::format(
          "checkpoint holds {} steps, more than the {} requested",
          d.sequence.steps, total));
    if (d.sequence.c.size() != 2 * d.sequence.steps + 1 || d.sequence.steps < 1)
      throw CheckpointError("checkpoint coefficient count is inconsistent");
    seq = std::move(d.sequence);
    prev = std::move(d.prev);
    cur = std::move(d.cur);
  } else {
    prev.assign(xi0.begin(), xi0.end());
    cur.resize(n);
    h.apply_scaled(prev, cur);
    const double c0 = compensated_dot(prev, prev);
    const double c1 = compensated_dot(prev, cur);
    if (!(c0 > 0.0))
      throw NumericalError("start vector has zero norm");
    seq.c = {c0, c1, 2.0 * compensated_dot(cur, cur) - c0};
    seq.steps = 1;
  }

  // seq.c holds c_0 .. c_{2n} with n = seq.steps; prev = xi_{n-1}, cur = xi_n
  const double c0 = seq.c[0];
  const double c1 = seq.c[1];
  auto check = [&](std::size_t k) {
    const double x = seq.c[k];
    if (!std::isfinite(x) || std::abs(x) > 10.0 * c0)
      throw NumericalError(fmt::format(
          "Chebyshev recursion diverged at c_{} = {:.6g} (c_0 = {:.6g}); the "
          "scaled spectrum left [-1, 1]: widen the bounds (shift {:.10g}, half "
          "width {:.10g} hartree)",
          k, x, c0, seq.scaling.shift, seq.scaling.half_width));
  };
  for (std::size_t k = 0; k < seq.c.size(); ++k)
    check(k);

  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t first = seq.steps;
  auto save = [&] {
    if (!policy.path.empty())
      write_checkpoint(policy.path, {seq, request.n_coeffs, prev, cur});
  };
  while (seq.steps < total) {
    if (policy.stop_after != 0 && seq.steps >= policy.stop_after)
      break;
    // prev <- 2 Hs cur - prev, then swap: (prev, cur) = (xi_n, xi_{n+1})
    h.apply_scaled(cur, prev, 2.0, -1.0, prev);
    std::swap(prev, cur);
    ++seq.steps;
    seq.c.push_back(2.0 * compensated_dot(prev, cur) - c1);
    check(seq.c.size() - 1);
    seq.c.push_back(2.0 * compensated_dot(cur, cur) - c0);
    check(seq.c.size() - 1);
    if (policy.stride != 0 && seq.steps % policy.stride == 0 && seq.steps < total)
      save();
    if (policy.progress && policy.progress_every != 0 &&
        (seq.steps % policy.progress_every == 0 || seq.steps == total)) {
      const double sec = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
      policy.progress({seq.steps - first, total - first, sec});
    }
  }
  // the checkpoint keeps c_N so that a later run can extend the sequence
  if (seq.steps > first || !have_ckpt)
    save();
  if (seq.steps == total)
    seq.c.resize(request.n_coeffs);
  return seq;
}

} // namespace chebfd::cheby
