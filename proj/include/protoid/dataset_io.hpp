#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "protoid/waveform.hpp"

namespace protoid {

inline constexpr const char* kGeneratorVersion = "protoid-gen/1";

/// Sidecar fields of a capture.
struct CaptureMeta {
  double sample_rate_hz = 20e6;
  double center_freq_hz = 2.442e9;
  std::vector<ProtocolId> protocols;
  std::optional<double> tx_power_dbm;
  std::uint64_t seed = 0;
  std::string generator_version = kGeneratorVersion;
  std::string scenario = "sim";
};

struct Capture {
  ComplexSignal signal;
  CaptureMeta meta;
};

/// `<name>.iq`: N*8 bytes of little-endian float32 (I, Q) pairs, no header.
/// `<name>.json`: the sidecar. `path` may name either file or the bare stem.
void write_capture(const std::filesystem::path& path, const ComplexSignal& signal, const CaptureMeta& meta);
Capture read_capture(const std::filesystem::path& path);

/// Raw sample blob only.
CVector read_iq_blob(const std::filesystem::path& iq_path);

struct ManifestEntry {
  std::string path;  ///< relative to the manifest directory
  std::vector<ProtocolId> protocols;
  std::string scenario = "sim";
  Index length = 0;
  std::uint64_t seed = 0;
};

struct Manifest {
  std::uint64_t seed = 0;
  nlohmann::json spec = nlohmann::json::object();
  std::vector<ManifestEntry> files;
  std::filesystem::path root;  ///< directory holding manifest.json; not serialized
};

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

enum class SplitStrategy { TimeSplit, ScenarioSplit };

struct SplitSpec {
  SplitStrategy strategy = SplitStrategy::TimeSplit;
  double train_fraction = 0.8;
  std::string holdout_scenario;
};

struct Split {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> test;
};

/// Time split: within each (scenario, protocol set) group the first
/// floor(train_fraction * n) files in manifest order train, the rest test.
/// Scenario split: every file of the holdout scenario tests, the rest train.
Split make_split(const Manifest& manifest, const SplitSpec& spec);

LabeledBurst load_burst(const Manifest& manifest, const ManifestEntry& entry);
std::vector<LabeledBurst> load_bursts(const Manifest& manifest, const std::vector<ManifestEntry>& entries);

struct GenerateConfig {
  int bursts_per_protocol = 50;
  std::vector<ProtocolId> protocols{kWifiProtocols.begin(), kWifiProtocols.end()};
  Index payload_bits = 1000;
  std::string scenario = "sim";
  std::uint64_t seed = 0;
};

/// Single-protocol bursts, protocol-major order; burst i of protocol p uses
/// its own derived seed so datasets extend without reshuffling.
std::vector<LabeledBurst> generate_bursts(const GenerateConfig& cfg);

struct OverlapDatasetConfig {
  std::vector<OverlapCase> cases{kOverlapCases.begin(), kOverlapCases.end()};
  std::vector<ReceiverLayout> layouts{ReceiverLayout::O1};
  std::vector<double> ratios{0.25, 0.5};
  int captures_per_config = 2;
  Index capture_len = 0;  ///< 0 keeps the layout's length
  std::uint64_t seed = 0;
};

/// Protocols whose transmit channel reaches into the receiver band.
std::vector<ProtocolId> overlap_labels(const OverlapSpec& spec);

std::vector<LabeledBurst> generate_overlap_bursts(const OverlapDatasetConfig& cfg);

/// Writes `bursts` as captures plus manifest.json under `dir` and returns the manifest.
Manifest write_dataset(const std::filesystem::path& dir, const std::vector<LabeledBurst>& bursts,
                       std::uint64_t seed, const nlohmann::json& spec);

}  // namespace protoid
