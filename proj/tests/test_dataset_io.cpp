#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

#include "protoid/dataset_io.hpp"
#include "protoid/error.hpp"
#include "test_util.hpp"

using namespace protoid;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("protoid_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ErrorKind error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidInput;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Manifest synthetic_manifest(int per_group, const std::vector<std::string>& scenarios) {
  Manifest m;
  for (const auto& s : scenarios) {
    for (ProtocolId p : kWifiProtocols) {
      for (int i = 0; i < per_group; ++i) {
        m.files.push_back({s + "_" + std::string(to_string(p)) + "_" + std::to_string(i) + ".iq", {p}, s, 100, 0});
      }
    }
  }
  return m;
}

}  // namespace

TEST_CASE("captures round trip bit-identically") {
  RandomSource rng(1);
  ComplexSignal s = protoid::testing::random_signal(1000, rng);
  // the blob stores float32: keep samples on a grid float holds exactly
  const auto grid = [](double v) { return std::ldexp(std::round(std::ldexp(std::clamp(v, -7.5, 7.5), 20)), -20); };
  for (Index i = 0; i < s.size(); ++i) s.samples[i] = Complex(grid(s.samples[i].real()), grid(s.samples[i].imag()));
  CaptureMeta meta;
  meta.sample_rate_hz = 62.5e6;
  meta.center_freq_hz = 2.45e9;
  meta.protocols = {ProtocolId::G80211, ProtocolId::AX80211};
  meta.tx_power_dbm = 10.0;
  meta.seed = 77;
  meta.scenario = "RM_C_1";
  const fs::path dir = scratch("roundtrip");
  write_capture(dir / "cap.iq", s, meta);
  CHECK(fs::file_size(dir / "cap.iq") == 8000);

  for (const fs::path& p : {dir / "cap.iq", dir / "cap.json", dir / "cap"}) {
    const Capture c = read_capture(p);
    CHECK(c.signal.samples == s.samples);
    CHECK(c.signal.sample_rate_hz == 62.5e6);
    CHECK(c.meta.center_freq_hz == 2.45e9);
    CHECK(c.meta.protocols == meta.protocols);
    CHECK(c.meta.tx_power_dbm == 10.0);
    CHECK(c.meta.seed == 77);
    CHECK(c.meta.scenario == "RM_C_1");
    CHECK(c.meta.generator_version == kGeneratorVersion);
  }
  fs::remove_all(dir);
}

TEST_CASE("the blob is little-endian float32 I/Q pairs") {
  CVector v(2);
  v << Complex(1.0, -2.0), Complex(0.5, 4.0);
  CaptureMeta meta;
  meta.protocols = {ProtocolId::B80211};
  const fs::path dir = scratch("layout");
  write_capture(dir / "x.iq", ComplexSignal(v, 20e6), meta);
  const std::string bytes = slurp(dir / "x.iq");
  REQUIRE(bytes.size() == 16);
  const float expected[4] = {1.0f, -2.0f, 0.5f, 4.0f};
  for (int k = 0; k < 4; ++k) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= std::uint32_t(static_cast<unsigned char>(bytes[std::size_t(4 * k + b)])) << (8 * b);
    float f;
    std::memcpy(&f, &bits, 4);
    CHECK(f == expected[k]);
  }
  fs::remove_all(dir);
}

TEST_CASE("a 198080-sample capture occupies 1584640 bytes") {
  CaptureMeta meta;
  meta.protocols = {ProtocolId::N80211};
  const fs::path dir = scratch("size");
  write_capture(dir / "big.iq", ComplexSignal(CVector::Zero(198080), 20e6), meta);
  CHECK(fs::file_size(dir / "big.iq") == 1584640);
  fs::remove_all(dir);
}

TEST_CASE("corrupt captures raise FormatError") {
  CaptureMeta meta;
  meta.protocols = {ProtocolId::N80211};
  const fs::path dir = scratch("corrupt");
  write_capture(dir / "c.iq", ComplexSignal(CVector::Ones(4), 20e6), meta);
  fs::resize_file(dir / "c.iq", 12);
  CHECK(error_kind([&] { read_capture(dir / "c.iq"); }) == ErrorKind::FormatError);

  write_capture(dir / "d.iq", ComplexSignal(CVector::Ones(4), 20e6), meta);
  nlohmann::json side = nlohmann::json::parse(slurp(dir / "d.json"));
  side.erase("sample_rate_hz");
  std::ofstream(dir / "d.json") << side.dump();
  CHECK(error_kind([&] { read_capture(dir / "d.iq"); }) == ErrorKind::FormatError);

  side = nlohmann::json::parse(slurp(dir / "c.json"));
  side["protocols"] = nlohmann::json::array();
  write_capture(dir / "e.iq", ComplexSignal(CVector::Ones(4), 20e6), meta);
  std::ofstream(dir / "e.json") << side.dump();
  CHECK(error_kind([&] { read_capture(dir / "e.iq"); }) == ErrorKind::FormatError);
  fs::remove_all(dir);
}

TEST_CASE("writing a capture without protocols is rejected") {
  const fs::path dir = scratch("nolabel");
  CHECK_THROWS_AS(write_capture(dir / "n.iq", ComplexSignal(CVector::Ones(4), 20e6), CaptureMeta{}), Error);
  fs::remove_all(dir);
}

TEST_CASE("time split takes the first 80 percent of each group") {
  const Manifest m = synthetic_manifest(100, {"sim"});
  const Split s = make_split(m, SplitSpec{});
  CHECK(s.train.size() == 320);
  CHECK(s.test.size() == 80);
  for (ProtocolId p : kWifiProtocols) {
    std::vector<std::string> train, test;
    for (const auto& e : s.train) if (e.protocols.front() == p) train.push_back(e.path);
    for (const auto& e : s.test) if (e.protocols.front() == p) test.push_back(e.path);
    CHECK(train.size() == 80);
    CHECK(test.size() == 20);
    CHECK(train.front() == "sim_" + std::string(to_string(p)) + "_0.iq");
    CHECK(test.front() == "sim_" + std::string(to_string(p)) + "_80.iq");
  }
}

TEST_CASE("scenario split holds out one scenario") {
  const Manifest m = synthetic_manifest(5, {"RM_A_1", "RM_B_1", "RM_C_1"});
  SplitSpec spec;
  spec.strategy = SplitStrategy::ScenarioSplit;
  spec.holdout_scenario = "RM_C_1";
  const Split s = make_split(m, spec);
  CHECK(s.test.size() == 20);
  for (const auto& e : s.test) CHECK(e.scenario == "RM_C_1");
  for (const auto& e : s.train) CHECK(e.scenario != "RM_C_1");

  spec.holdout_scenario = "RM_Z_9";
  CHECK(error_kind([&] { make_split(m, spec); }) == ErrorKind::InvalidSpec);
}

TEST_CASE("splits partition the corpus deterministically") {
  RandomSource rng(2);
  std::uniform_int_distribution<int> n(1, 30);
  for (int trial = 0; trial < 50; ++trial) {
    const Manifest m = synthetic_manifest(n(rng), {"a", "b"});
    for (bool by_scenario : {false, true}) {
      SplitSpec spec;
      if (by_scenario) {
        spec.strategy = SplitStrategy::ScenarioSplit;
        spec.holdout_scenario = "b";
      }
      const Split s = make_split(m, spec);
      std::set<std::string> train, test;
      for (const auto& e : s.train) train.insert(e.path);
      for (const auto& e : s.test) test.insert(e.path);
      for (const auto& p : train) CHECK(test.count(p) == 0);
      CHECK(train.size() + test.size() == m.files.size());
      const Split again = make_split(m, spec);
      CHECK(again.train.size() == s.train.size());
      for (std::size_t i = 0; i < s.train.size(); ++i) CHECK(again.train[i].path == s.train[i].path);
    }
  }
}

TEST_CASE("generated datasets: counts and determinism") {
  GenerateConfig cfg;
  cfg.bursts_per_protocol = 10;
  cfg.seed = 3;
  const auto bursts = generate_bursts(cfg);
  REQUIRE(bursts.size() == 40);
  const fs::path a = scratch("gen_a"), b = scratch("gen_b");
  const Manifest ma = write_dataset(a, bursts, 3, {{"bursts_per_protocol", 10}});
  write_dataset(b, generate_bursts(cfg), 3, {{"bursts_per_protocol", 10}});
  CHECK(ma.files.size() == 40);
  int iq = 0, json = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    iq += e.path().extension() == ".iq";
    json += e.path().extension() == ".json";
  }
  CHECK(iq == 40);
  CHECK(json == 41);  // 40 sidecars + manifest
  for (const auto& e : fs::directory_iterator(a)) CHECK(slurp(e.path()) == slurp(b / e.path().filename()));

  const Manifest back = read_manifest(a / "manifest.json");
  CHECK(back.files.size() == 40);
  const auto loaded = load_bursts(back, back.files);
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].protocols == bursts[i].protocols);
    CHECK(loaded[i].signal.size() == bursts[i].signal.size());
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("extending a dataset keeps earlier bursts") {
  GenerateConfig small;
  small.bursts_per_protocol = 2;
  small.seed = 4;
  GenerateConfig big = small;
  big.bursts_per_protocol = 3;
  const auto a = generate_bursts(small);
  const auto b = generate_bursts(big);
  // protocol-major order
  CHECK(a[0].signal.samples == b[0].signal.samples);
  CHECK(a[1].signal.samples == b[1].signal.samples);
  CHECK(a[2].signal.samples == b[3].signal.samples);
}

TEST_CASE("overlap labels follow the receiver band") {
  const OverlapSpec o1 = OverlapSpec::from_table(OverlapCase::C1, ReceiverLayout::O1, 0.25);
  CHECK(overlap_labels(o1).size() == 2);
  OverlapSpec alone = o1;
  alone.interferer_power = 0.0;
  CHECK(overlap_labels(alone) == std::vector<ProtocolId>{o1.incumbent});

  OverlapDatasetConfig cfg;
  cfg.captures_per_config = 1;
  cfg.ratios = {0.5};
  cfg.capture_len = 4096;
  const auto caps = generate_overlap_bursts(cfg);
  CHECK(caps.size() == kOverlapCases.size());
  for (const auto& c : caps) {
    CHECK(c.signal.size() == 4096);
    CHECK(c.protocols.size() == 2);
  }
}
