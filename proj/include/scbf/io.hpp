#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scbf/diagnostics.hpp"
#include "scbf/integrator.hpp"
#include "scbf/noise.hpp"

namespace scbf {

inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

/// Run parameters stored in the snapshot header.
struct SnapshotHeader {
  std::uint32_t d = 2;
  std::uint32_t n = 1;
  double r = 1.0;
  double mu = 1.0;
  double beta = 1.0;
  double horizon = 0.0;
  double dt = 0.0;

  bool operator==(const SnapshotHeader&) const = default;
};

struct Snapshot {
  SnapshotHeader header;
  Trajectory trajectory;
};

struct SnapshotError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SnapshotChecksumError : SnapshotError {
  using SnapshotError::SnapshotError;
};
struct SnapshotTruncatedError : SnapshotError {
  using SnapshotError::SnapshotError;
};
struct SnapshotVersionError : SnapshotError {
  using SnapshotError::SnapshotError;
};

/// Layout, all little-endian:
///   "SCBF" | version u32 | d u32 | n u32 | r mu beta T dt f64 | outputs u64
///   per output: time f64, then re/im f64 pairs in basis order
///   seed u64 | trajectory u64 | modes u64 | increments u64 | re/im f64 pairs
///   jumps u64 | times f64... | marks f64... | status u32 | trip time f64
///   CRC-32 (zlib) of everything before it, u32
std::vector<std::uint8_t> encode_snapshot(const Snapshot& s);
Snapshot decode_snapshot(std::span<const std::uint8_t> bytes);

void write_snapshot(const std::string& path, const Snapshot& s);
Snapshot read_snapshot(const std::string& path);

/// RFC-4180 CSV with the documented ledger columns.
void write_ledger_csv(const std::string& path, const EnergyLedger& ledger);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

nlohmann::json to_json(const PropertyReport& r);
nlohmann::json to_json(const BalanceReport& r);
nlohmann::json to_json(const VarianceReport& r);
nlohmann::json to_json(const MomentReport& r);
nlohmann::json to_json(const UniquenessReport& r);
nlohmann::json to_json(const ConvergenceReport& r);
nlohmann::json to_json(const DtStudy& r);
nlohmann::json to_json(const CertReport& r);
nlohmann::json to_json(const HypothesisConstants& k);

/// One compact JSON object per line.
void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& records);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

struct RunManifest {
  nlohmann::json config;
  HypothesisConstants constants;
  std::uint64_t seed = 0;
  std::string command;
  std::vector<std::string> files;  // paths relative to the manifest directory
};

/// Writes manifest.json in `dir`, hashing each listed file.
void write_manifest(const std::string& dir, const RunManifest& m);

}  // namespace scbf
