#include "protoid/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "protoid/error.hpp"

namespace protoid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path with_ext(const fs::path& path, const char* ext) {
  fs::path p = path;
  if (p.extension() == ".iq" || p.extension() == ".json") p.replace_extension();
  p += ext;
  return p;
}

json protocols_json(const std::vector<ProtocolId>& ps) {
  json a = json::array();
  for (ProtocolId p : ps) a.push_back(std::string(to_string(p)));
  return a;
}

std::vector<ProtocolId> protocols_from_json(const json& a) {
  std::vector<ProtocolId> out;
  for (const json& v : a) out.push_back(parse_protocol(v.get<std::string>()));
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorKind::IoError, "write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::FormatError, path.string() + ": " + e.what());
  }
}

std::string group_key(const ManifestEntry& e) {
  std::string key = e.scenario + "|";
  for (ProtocolId p : e.protocols) key += std::string(to_string(p)) + ",";
  return key;
}

}  // namespace

void write_capture(const fs::path& path, const ComplexSignal& signal, const CaptureMeta& meta) {
  require(!meta.protocols.empty(), ErrorKind::InvalidInput, "capture needs at least one protocol label");
  const fs::path iq = with_ext(path, ".iq");
  const fs::path side = with_ext(path, ".json");
  std::vector<char> blob(static_cast<std::size_t>(signal.size()) * 8);
  auto put = [&](std::size_t at, float v) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int k = 0; k < 4; ++k) blob[at + static_cast<std::size_t>(k)] = static_cast<char>((bits >> (8 * k)) & 0xFF);
  };
  for (Index i = 0; i < signal.size(); ++i) {
    put(static_cast<std::size_t>(8 * i), static_cast<float>(signal.samples[i].real()));
    put(static_cast<std::size_t>(8 * i + 4), static_cast<float>(signal.samples[i].imag()));
  }
  std::ofstream out(iq, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::IoError, "cannot write " + iq.string());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  require(static_cast<bool>(out), ErrorKind::IoError, "write failed for " + iq.string());

  json j = {{"sample_rate_hz", meta.sample_rate_hz},
            {"center_freq_hz", meta.center_freq_hz},
            {"protocols", protocols_json(meta.protocols)},
            {"seed", meta.seed},
            {"generator_version", meta.generator_version},
            {"scenario", meta.scenario}};
  if (meta.tx_power_dbm) j["tx_power_dbm"] = *meta.tx_power_dbm;
  write_text(side, j.dump(2) + "\n");
}

CVector read_iq_blob(const fs::path& iq_path) {
  std::ifstream in(iq_path, std::ios::binary | std::ios::ate);
  require(static_cast<bool>(in), ErrorKind::IoError, "cannot open " + iq_path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  require(bytes % 8 == 0, ErrorKind::FormatError,
          iq_path.string() + ": " + std::to_string(bytes) + " bytes is not a whole number of IQ pairs");
  in.seekg(0);
  std::vector<unsigned char> blob(bytes);
  in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(bytes));
  require(static_cast<bool>(in), ErrorKind::IoError, "read failed for " + iq_path.string());
  auto get = [&](std::size_t at) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(blob[at + static_cast<std::size_t>(k)]) << (8 * k);
    return static_cast<double>(std::bit_cast<float>(bits));
  };
  CVector out(static_cast<Index>(bytes / 8));
  for (Index i = 0; i < out.size(); ++i) {
    out[i] = Complex(get(static_cast<std::size_t>(8 * i)), get(static_cast<std::size_t>(8 * i + 4)));
  }
  return out;
}

Capture read_capture(const fs::path& path) {
  const fs::path iq = with_ext(path, ".iq");
  const fs::path side = with_ext(path, ".json");
  Capture c;
  const json j = read_json(side);
  try {
    for (const char* key : {"sample_rate_hz", "center_freq_hz", "protocols", "seed", "generator_version"}) {
      require(j.contains(key), ErrorKind::FormatError, side.string() + ": missing field '" + key + "'");
    }
    c.meta.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    c.meta.center_freq_hz = j.at("center_freq_hz").get<double>();
    c.meta.protocols = protocols_from_json(j.at("protocols"));
    c.meta.seed = j.at("seed").get<std::uint64_t>();
    c.meta.generator_version = j.at("generator_version").get<std::string>();
    c.meta.scenario = j.value("scenario", std::string("sim"));
    if (j.contains("tx_power_dbm")) c.meta.tx_power_dbm = j.at("tx_power_dbm").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorKind::FormatError, side.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidSpec) fail(ErrorKind::FormatError, side.string() + ": " + e.what());
    throw;
  }
  require(!c.meta.protocols.empty(), ErrorKind::FormatError, side.string() + ": empty protocol list");
  require(c.meta.sample_rate_hz > 0.0, ErrorKind::FormatError, side.string() + ": non-positive sample rate");
  c.signal = ComplexSignal(read_iq_blob(iq), c.meta.sample_rate_hz);
  return c;
}

void write_manifest(const fs::path& path, const Manifest& m) {
  json files = json::array();
  for (const ManifestEntry& e : m.files) {
    files.push_back({{"path", e.path},
                     {"protocols", protocols_json(e.protocols)},
                     {"scenario", e.scenario},
                     {"length", e.length},
                     {"seed", e.seed}});
  }
  const json j = {{"seed", m.seed}, {"spec", m.spec}, {"files", files}};
  write_text(path, j.dump(2) + "\n");
}

Manifest read_manifest(const fs::path& path) {
  const json j = read_json(path);
  Manifest m;
  m.root = path.parent_path();
  try {
    m.seed = j.value("seed", std::uint64_t{0});
    m.spec = j.value("spec", json::object());
    for (const json& f : j.at("files")) {
      ManifestEntry e;
      e.path = f.at("path").get<std::string>();
      e.protocols = protocols_from_json(f.at("protocols"));
      e.scenario = f.value("scenario", std::string("sim"));
      e.length = f.value("length", Index{0});
      e.seed = f.value("seed", std::uint64_t{0});
      require(!e.protocols.empty(), ErrorKind::FormatError, "manifest entry " + e.path + " has no protocols");
      m.files.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::FormatError, path.string() + ": " + e.what());
  }
  return m;
}

Split make_split(const Manifest& manifest, const SplitSpec& spec) {
  require(!manifest.files.empty(), ErrorKind::InvalidInput, "cannot split an empty corpus");
  Split s;
  if (spec.strategy == SplitStrategy::ScenarioSplit) {
    const bool known = std::any_of(manifest.files.begin(), manifest.files.end(),
                                   [&](const ManifestEntry& e) { return e.scenario == spec.holdout_scenario; });
    require(known, ErrorKind::InvalidSpec, "unknown scenario '" + spec.holdout_scenario + "'");
    for (const ManifestEntry& e : manifest.files) {
      (e.scenario == spec.holdout_scenario ? s.test : s.train).push_back(e);
    }
    return s;
  }
  require(spec.train_fraction > 0.0 && spec.train_fraction < 1.0, ErrorKind::InvalidSpec,
          "train_fraction must be in (0, 1)");
  std::map<std::string, std::size_t> total;
  for (const ManifestEntry& e : manifest.files) ++total[group_key(e)];
  std::map<std::string, std::size_t> seen;
  for (const ManifestEntry& e : manifest.files) {
    const std::string key = group_key(e);
    const auto cut = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(total[key])));
    (seen[key]++ < cut ? s.train : s.test).push_back(e);
  }
  return s;
}

LabeledBurst load_burst(const Manifest& manifest, const ManifestEntry& entry) {
  Capture c = read_capture(manifest.root / entry.path);
  return LabeledBurst{std::move(c.signal), entry.protocols, entry.scenario};
}

std::vector<LabeledBurst> load_bursts(const Manifest& manifest, const std::vector<ManifestEntry>& entries) {
  std::vector<LabeledBurst> out;
  out.reserve(entries.size());
  for (const ManifestEntry& e : entries) out.push_back(load_burst(manifest, e));
  return out;
}

std::vector<LabeledBurst> generate_bursts(const GenerateConfig& cfg) {
  require(cfg.bursts_per_protocol > 0, ErrorKind::InvalidSpec, "bursts_per_protocol must be positive");
  require(!cfg.protocols.empty(), ErrorKind::InvalidSpec, "no protocols to generate");
  std::vector<LabeledBurst> out;
  for (ProtocolId p : cfg.protocols) {
    BurstSpec spec = BurstSpec::defaults(p);
    spec.payload_bits = cfg.payload_bits;
    for (int i = 0; i < cfg.bursts_per_protocol; ++i) {
      RandomSource rng(derive_seed(cfg.seed, (static_cast<std::uint64_t>(class_index(p)) << 32) |
                                                 static_cast<std::uint64_t>(i)));
      out.push_back(LabeledBurst{generate_burst(spec, rng), {p}, cfg.scenario});
    }
  }
  return out;
}

std::vector<ProtocolId> overlap_labels(const OverlapSpec& spec) {
  std::vector<ProtocolId> out;
  const double reach = spec.rx_sample_rate_hz / 2.0 + 10e6;
  if (std::abs(spec.tx1_center_hz - spec.rx_center_hz) < reach) out.push_back(spec.incumbent);
  if (spec.interferer_power > 0.0 && std::abs(spec.tx2_center_hz - spec.rx_center_hz) < reach &&
      std::find(out.begin(), out.end(), spec.interferer) == out.end()) {
    out.push_back(spec.interferer);
  }
  return out;
}

std::vector<LabeledBurst> generate_overlap_bursts(const OverlapDatasetConfig& cfg) {
  require(cfg.captures_per_config > 0, ErrorKind::InvalidSpec, "captures_per_config must be positive");
  std::vector<LabeledBurst> out;
  std::uint64_t stream = 0;
  for (ReceiverLayout layout : cfg.layouts) {
    for (OverlapCase c : cfg.cases) {
      for (double ratio : cfg.ratios) {
        OverlapSpec spec = OverlapSpec::from_table(c, layout, ratio);
        if (cfg.capture_len > 0) spec.capture_len_samples = cfg.capture_len;
        const std::string scenario = std::string(layout == ReceiverLayout::O1 ? "O1" : "O2") + "_C" +
                                     std::to_string(static_cast<int>(c) + 1) + "_R" +
                                     std::to_string(static_cast<int>(std::lround(ratio * 100)));
        for (int i = 0; i < cfg.captures_per_config; ++i) {
          RandomSource rng(derive_seed(cfg.seed, stream++));
          out.push_back(LabeledBurst{generate_overlapping_capture(spec, rng), overlap_labels(spec), scenario});
        }
      }
    }
  }
  return out;
}

Manifest write_dataset(const fs::path& dir, const std::vector<LabeledBurst>& bursts, std::uint64_t seed,
                       const json& spec) {
  require(!bursts.empty(), ErrorKind::InvalidInput, "no bursts to write");
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
  Manifest m;
  m.seed = seed;
  m.spec = spec;
  m.root = dir;
  for (std::size_t i = 0; i < bursts.size(); ++i) {
    const LabeledBurst& b = bursts[i];
    std::string stem = b.scenario + "_";
    for (ProtocolId p : b.protocols) stem += std::string(to_string(p)) + "_";
    char idx[16];
    std::snprintf(idx, sizeof idx, "%05zu", i);
    stem += idx;
    CaptureMeta meta;
    meta.sample_rate_hz = b.signal.sample_rate_hz;
    meta.protocols = b.protocols;
    meta.seed = derive_seed(seed, i);
    meta.scenario = b.scenario;
    write_capture(dir / (stem + ".iq"), b.signal, meta);
    m.files.push_back(ManifestEntry{stem + ".iq", b.protocols, b.scenario, b.signal.size(), meta.seed});
  }
  write_manifest(dir / "manifest.json", m);
  return m;
}

}  // namespace protoid
