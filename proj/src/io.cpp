#include "scbf/io.hpp"

#include <openssl/evp.h>
#include <zlib.h>

#include <bit>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace scbf {

namespace {

static_assert(sizeof(double) == 8);

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void c128(Complex c) {
    f64(c.real());
    f64(c.imag());
  }

  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes(b) {}

  void need(std::size_t k) const {
    if (pos + k > bytes.size()) throw SnapshotTruncatedError("snapshot truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  Complex c128() {
    const double re = f64();
    return {re, f64()};
  }
  // Guards element counts against the remaining byte budget.
  std::uint64_t count(std::size_t element_bytes) {
    const std::uint64_t c = u64();
    if (element_bytes && c > (bytes.size() - pos) / element_bytes) throw SnapshotTruncatedError("snapshot truncated");
    return c;
  }

  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> b) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < b.size()) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(b.size() - done, 1u << 30));
    crc = crc32(crc, b.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

// Wavevectors with 0 < |k|^2 < n^2 times polarizations, without building the basis.
std::uint64_t mode_count(std::uint32_t d, std::uint32_t n) {
  const long m = long(n) - 1;
  const long n2 = long(n) * long(n);
  std::uint64_t count = 0;
  const long zmax = d == 3 ? m : 0;
  for (long a = -m; a <= m; ++a)
    for (long b = -m; b <= m; ++b)
      for (long c = -zmax; c <= zmax; ++c) {
        const long k2 = a * a + b * b + c * c;
        if (k2 > 0 && k2 < n2) ++count;
      }
  return count * (d - 1);
}

// Total size the header and counts declare. Throws SnapshotTruncatedError when
// the declared layout runs past the end of the data.
std::size_t layout_size(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t kMaxCutoff[4] = {0, 0, 1u << 12, 1u << 8};
  Reader r(bytes);
  r.pos = 8;
  const std::uint32_t d = r.u32();
  const std::uint32_t n = r.u32();
  if ((d != 2 && d != 3) || n < 1 || n > kMaxCutoff[d]) {
    throw SnapshotChecksumError("snapshot header corrupt (d = " + std::to_string(d) + ", n = " + std::to_string(n) + ")");
  }
  const std::uint64_t modes = mode_count(d, n);
  r.pos += 40;
  r.pos += r.count(8 + 16 * modes) * (8 + 16 * modes);
  r.pos += 24;
  r.pos += r.count(16) * 16;
  r.pos += r.count(16) * 16;
  r.need(16);
  return r.pos + 16;
}

}  // namespace

std::vector<std::uint8_t> encode_snapshot(const Snapshot& s) {
  const Trajectory& tr = s.trajectory;
  Writer w;
  w.out.insert(w.out.end(), {'S', 'C', 'B', 'F'});
  w.u32(kSnapshotVersion);
  w.u32(s.header.d);
  w.u32(s.header.n);
  w.f64(s.header.r);
  w.f64(s.header.mu);
  w.f64(s.header.beta);
  w.f64(s.header.horizon);
  w.f64(s.header.dt);
  w.u64(tr.states.size());
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    w.f64(tr.times[k]);
    for (const Complex& c : tr.states[k].coeffs) w.c128(c);
  }
  const NoiseRecord& nr = tr.noise;
  w.u64(nr.seed);
  w.u64(nr.trajectory);
  w.u64(nr.modes);
  w.u64(nr.increments.size());
  for (const Complex& c : nr.increments) w.c128(c);
  w.u64(nr.jump_times.size());
  for (double t : nr.jump_times) w.f64(t);
  for (double z : nr.marks) w.f64(z);
  w.u32(tr.status == RunStatus::completed ? 0u : 1u);
  w.f64(tr.trip_time);
  w.u32(crc32_of(w.out));
  return std::move(w.out);
}

Snapshot decode_snapshot(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw SnapshotTruncatedError("snapshot truncated");
  if (std::memcmp(bytes.data(), "SCBF", 4) != 0) throw SnapshotError("not a snapshot (bad magic)");
  Reader hdr(bytes);
  hdr.pos = 4;
  const std::uint32_t version = hdr.u32();
  if (version != kSnapshotVersion) {
    throw SnapshotVersionError("snapshot version " + std::to_string(version) + " not supported (expected " +
                               std::to_string(kSnapshotVersion) + ")");
  }
  const std::size_t body = layout_size(bytes) - 4;
  Reader tail(bytes);
  tail.pos = body;
  const std::uint32_t stored = tail.u32();
  if (crc32_of(bytes.first(body)) != stored) throw SnapshotChecksumError("snapshot CRC-32 mismatch");
  if (body + 4 != bytes.size()) throw SnapshotError("snapshot has bytes after the checksum");

  Reader r(bytes.first(body));
  r.pos = 8;
  Snapshot s;
  s.header.d = r.u32();
  s.header.n = r.u32();
  s.header.r = r.f64();
  s.header.mu = r.f64();
  s.header.beta = r.f64();
  s.header.horizon = r.f64();
  s.header.dt = r.f64();
  const BasisPtr basis = Basis::build(int(s.header.d), int(s.header.n));
  const std::size_t modes = basis->size();
  const std::uint64_t outputs = r.count(8 + 16 * modes);
  Trajectory& tr = s.trajectory;
  for (std::uint64_t k = 0; k < outputs; ++k) {
    tr.times.push_back(r.f64());
    SpectralField u(basis);
    for (auto& c : u.coeffs) c = r.c128();
    tr.states.push_back(std::move(u));
  }
  NoiseRecord& nr = tr.noise;
  nr.seed = r.u64();
  nr.trajectory = r.u64();
  nr.modes = r.u64();
  const std::uint64_t inc = r.count(16);
  nr.increments.resize(inc);
  for (auto& c : nr.increments) c = r.c128();
  const std::uint64_t jumps = r.count(16);
  nr.jump_times.resize(jumps);
  nr.marks.resize(jumps);
  for (auto& t : nr.jump_times) t = r.f64();
  for (auto& z : nr.marks) z = r.f64();
  const std::uint32_t status = r.u32();
  if (status > 1) throw SnapshotError("snapshot has unknown run status " + std::to_string(status));
  tr.status = status == 0 ? RunStatus::completed : RunStatus::guard_tripped;
  tr.trip_time = r.f64();
  if (r.pos != body) throw SnapshotError("snapshot has trailing bytes before the checksum");
  return s;
}

void write_snapshot(const std::string& path, const Snapshot& s) {
  const auto bytes = encode_snapshot(s);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_ledger_csv(const std::string& path, const EnergyLedger& ledger) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "time,energy_H2,diss_V,diss_Lr1,mart_wiener,mart_jump,qv_sigma,qv_gamma,residual\r\n";
  for (const LedgerRow& r : ledger.rows) {
    f << format_double(r.time) << ',' << format_double(r.energy) << ',' << format_double(r.diss_v) << ','
      << format_double(r.diss_lr1) << ',' << format_double(r.mart_wiener) << ',' << format_double(r.mart_jump) << ','
      << format_double(r.qv_sigma) << ',' << format_double(r.qv_gamma) << ',' << format_double(r.residual) << "\r\n";
  }
}

using nlohmann::json;

namespace {

json mean_json(const MeanEstimate& e) { return {{"mean", e.mean}, {"se", e.se}, {"count", e.count}, {"ci95", e.ci95()}}; }

}  // namespace

json to_json(const PropertyReport& r) {
  json j = {{"property", r.name},      {"samples", r.samples}, {"worst_margin", r.worst_margin},
            {"tolerance", r.tolerance}, {"passed", r.passed}};
  json vals = json::object();
  for (const auto& [k, v] : r.values) vals[k] = v;
  j["values"] = vals;
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j;
}

json to_json(const BalanceReport& r) {
  return {{"property", "ensemble energy balance"},
          {"balance", mean_json(r.balance)},
          {"control_difference", mean_json(r.control_difference)},
          {"bias_band", r.bias_band},
          {"tripped", r.tripped},
          {"passed", r.passed}};
}

json to_json(const VarianceReport& r) {
  json modes = json::array();
  for (std::size_t i = 0; i < r.expected.size(); ++i) {
    const auto& k = r.wavevectors[i].k;
    modes.push_back({{"k", {k[0], k[1], k[2]}},
                     {"expected", r.expected[i]},
                     {"observed", r.observed[i]},
                     {"se", r.standard_error[i]}});
  }
  return {{"property", "linear stokes stationary variance"},
          {"paths", r.paths},
          {"worst_z", r.worst_z},
          {"modes", modes},
          {"passed", r.passed}};
}

json to_json(const MomentReport& r) {
  return {{"property", "moment bound"},
          {"ensemble", r.ensemble},
          {"tripped", r.tripped},
          {"sup_energy", mean_json(r.sup_energy)},
          {"v_dissipation", mean_json(r.v_dissipation)},
          {"lr1_dissipation", mean_json(r.lr1_dissipation)},
          {"total", mean_json(r.total)},
          {"sup_energy_p2", mean_json(r.sup_energy_p2)},
          {"initial_energy", r.initial_energy},
          {"k1", r.k1},
          {"constant", r.constant},
          {"bound", r.bound},
          {"passed", r.passed}};
}

json to_json(const UniquenessReport& r) {
  return {{"property", "pathwise uniqueness"},
          {"regime", r.regime.description},
          {"weight_rate", r.regime.rate},
          {"zero_separation", to_json(r.zero_separation)},
          {"envelope", to_json(r.envelope)},
          {"scaling", to_json(r.scaling)},
          {"passed", r.passed}};
}

json to_json(const ConvergenceReport& r) {
  return {{"property", "galerkin self-convergence"},
          {"cutoffs", r.cutoffs},
          {"sup_differences", r.sup_differences},
          {"terminal_differences", r.terminal_differences},
          {"rate", r.rate},
          {"monotone", r.monotone},
          {"passed", r.passed}};
}

json to_json(const DtStudy& r) {
  return {{"property", "dt refinement"}, {"dts", r.dts}, {"errors", r.errors}, {"order", r.order}};
}

json to_json(const HypothesisConstants& k) { return {{"K1", k.k1}, {"K2", k.k2}, {"L", k.lipschitz}}; }

json to_json(const CertReport& r) {
  json j = {{"property", "hypothesis certification"},
            {"growth_ratio", r.growth_ratio},
            {"moment_ratio", r.moment_ratio},
            {"lipschitz_ratio", r.lipschitz_ratio},
            {"declared", to_json(r.declared)},
            {"passed", r.passed}};
  if (!r.passed) {
    j["failing_clause"] = r.failing_clause;
    if (r.witness) j["witness_norms"] = {r.witness->first, r.witness->second};
  }
  return j;
}

void write_jsonl(const std::string& path, const std::vector<json>& records) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  for (const json& j : records) f << j.dump() << '\n';
}

std::string sha256_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (f) {
    f.read(buf, sizeof buf);
    if (f.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(f.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

void write_manifest(const std::string& dir, const RunManifest& m) {
  namespace fs = std::filesystem;
  json files = json::object();
  for (const auto& name : m.files) files[name] = sha256_file((fs::path(dir) / name).string());
  const json j = {{"tool", "scbf"},
                  {"tool_version", kToolVersion},
                  {"command", m.command},
                  {"seed", m.seed},
                  {"config", m.config},
                  {"constants", to_json(m.constants)},
                  {"files", files}};
  std::ofstream f((fs::path(dir) / "manifest.json").string(), std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write manifest in " + dir);
  f << j.dump(2) << '\n';
}

}  // namespace scbf
