#include "riser/checkpoint.hpp"

#include <cstring>
#include <stdexcept>

#include "riser/io_util.hpp"

namespace riser {
namespace {

constexpr char kMagic[8] = {'R', 'I', 'S', 'E', 'R', 'C', 'K', '1'};

struct Writer {
  std::string out;
  void raw(const void* p, size_t n) {
    out.append(static_cast<const char*>(p), n);
  }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void i64(std::int64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void mat(const Eigen::MatrixXd& m) {
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    raw(m.data(), sizeof(double) * m.size());
  }
  void rng(const RngState& r) {
    for (auto w : r.s) u64(w);
  }
};

struct Reader {
  const std::string& in;
  size_t pos = 0;
  explicit Reader(const std::string& s) : in(s) {}
  void raw(void* p, size_t n) {
    if (pos + n > in.size())
      throw std::runtime_error("checkpoint: truncated file");
    std::memcpy(p, in.data() + pos, n);
    pos += n;
  }
  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, 8);
    return v;
  }
  std::int64_t i64() {
    std::int64_t v;
    raw(&v, 8);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (pos + n > in.size())
      throw std::runtime_error("checkpoint: truncated string");
    std::string s(in.data() + pos, n);
    pos += n;
    return s;
  }
  Eigen::MatrixXd mat() {
    const std::uint32_t r = u32();
    const std::uint32_t c = u32();
    if (r > 1u << 24 || c > 1u << 24)
      throw std::runtime_error("checkpoint: implausible tensor shape");
    Eigen::MatrixXd m(r, c);
    raw(m.data(), sizeof(double) * m.size());
    return m;
  }
  RngState rng() {
    RngState r;
    for (auto& w : r.s) w = u64();
    return r;
  }
};

void write_adam(Writer& w, const AdamSnapshot& a) {
  w.u8(a.present ? 1 : 0);
  if (!a.present) return;
  w.i64(a.t);
  w.u32(static_cast<std::uint32_t>(a.m.size()));
  for (const auto& m : a.m) w.mat(m);
  for (const auto& v : a.v) w.mat(v);
}

AdamSnapshot read_adam(Reader& r) {
  AdamSnapshot a;
  a.present = r.u8() != 0;
  if (!a.present) return a;
  a.t = r.i64();
  const std::uint32_t n = r.u32();
  a.m.reserve(n);
  a.v.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) a.m.push_back(r.mat());
  for (std::uint32_t i = 0; i < n; ++i) a.v.push_back(r.mat());
  return a;
}

}  // namespace

std::string Checkpoint::to_bytes() const {
  Writer w;
  w.raw(kMagic, 8);
  w.u32(schema_version);
  w.u64(config_hash);
  w.i64(iteration);
  w.u8(baseline_mode ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    w.str(p.name);
    w.mat(p.value);
  }
  write_adam(w, policy_adam);
  write_adam(w, cenet_adam);
  w.u32(static_cast<std::uint32_t>(envs.size()));
  for (const auto& e : envs) {
    w.u32(static_cast<std::uint32_t>(e.level));
    w.rng(e.env_stream);
    w.rng(e.act_rng);
  }
  w.rng(trainer_rng);
  return std::move(w.out);
}

Checkpoint Checkpoint::from_bytes(const std::string& bytes) {
  Reader r(bytes);
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic (not a riser checkpoint)");
  Checkpoint ck;
  ck.schema_version = r.u32();
  if (ck.schema_version != kVersion)
    throw std::runtime_error("checkpoint: unsupported schema version " +
                             std::to_string(ck.schema_version));
  ck.config_hash = r.u64();
  ck.iteration = r.i64();
  ck.baseline_mode = r.u8() != 0;
  const std::uint32_t n = r.u32();
  ck.params.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    NamedTensor t;
    t.name = r.str();
    t.value = r.mat();
    ck.params.push_back(std::move(t));
  }
  ck.policy_adam = read_adam(r);
  ck.cenet_adam = read_adam(r);
  const std::uint32_t ne = r.u32();
  ck.envs.reserve(ne);
  for (std::uint32_t i = 0; i < ne; ++i) {
    EnvSnapshot e;
    e.level = static_cast<int>(r.u32());
    e.env_stream = r.rng();
    e.act_rng = r.rng();
    ck.envs.push_back(e);
  }
  ck.trainer_rng = r.rng();
  return ck;
}

void Checkpoint::save(const std::string& path) const {
  atomic_write_file(path, to_bytes());
}

Checkpoint Checkpoint::load(const std::string& path,
                            std::uint64_t expected_hash, bool allow_mismatch) {
  Checkpoint ck = from_bytes(read_file(path));
  if (expected_hash != 0 && ck.config_hash != expected_hash && !allow_mismatch)
    throw std::runtime_error(
        "checkpoint: config hash mismatch (checkpoint was produced under a "
        "different configuration; pass the explicit override to load anyway)");
  return ck;
}

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

}  // namespace riser
