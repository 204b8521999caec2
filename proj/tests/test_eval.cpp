#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "protoid/error.hpp"
#include "protoid/dataset_io.hpp"
#include "protoid/eval.hpp"
#include "protoid/report.hpp"
#include "protoid/transformer.hpp"

using namespace protoid;
namespace fs = std::filesystem;

namespace {

std::vector<LabeledBurst> short_bursts(Index len, std::uint64_t seed) {
  std::vector<LabeledBurst> out;
  RandomSource rng(seed);
  for (ProtocolId p : kWifiProtocols) {
    BurstSpec spec = BurstSpec::defaults(p);
    spec.target_len_samples = len;
    out.push_back({generate_burst(spec, rng), {p}, "sim"});
  }
  return out;
}

const TokenizationConfig kTok{8, 16, 0};

Transformer<float> random_net(std::uint64_t seed, bool multi_label = false) {
  TransformerConfig c = TransformerConfig::for_tokens(kTok, 2, 16);
  c.num_layers = 1;
  c.d_ff = 2 * c.d_model;
  c.multi_label = multi_label;
  Transformer<float> net(c);
  RandomSource rng(seed);
  net.initialize(rng);
  return net;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("protoid_eval_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("the default grid is 13 SNRs by 4 channels") {
  const std::vector<double> snrs = default_snr_grid();
  REQUIRE(snrs.size() == 13);
  for (std::size_t i = 0; i < snrs.size(); ++i) CHECK(snrs[i] == -30.0 + 5.0 * double(i));
  CHECK(SweepConfig{}.channels.size() == 4);
}

TEST_CASE("sweep points are consistent with their confusion matrices") {
  const auto data = short_bursts(2048, 1);
  const Transformer<float> net = random_net(2);
  SweepConfig cfg;
  cfg.trials = 37;
  cfg.batch_size = 10;
  cfg.seed = 3;
  const SweepResult r = snr_sweep(net, data, kTok, cfg);
  CHECK(r.points.size() == 52);
  for (const SweepPoint& p : r.points) {
    CHECK(p.trials == 37);
    CHECK(p.confusion.total() == 37);
    CHECK(p.accuracy == double(p.confusion.counts.trace()) / 37.0);
  }
  for (ChannelModel ch : kAllChannelModels) {
    CHECK(r.curve(ch).size() == 13);
    CHECK(r.snrs(ch) == default_snr_grid());
  }
  CHECK_THROWS_AS(r.at(ChannelModel::NoChannel, 1.0), Error);
}

TEST_CASE("sweeps are deterministic and independent of batch size") {
  const auto data = short_bursts(2048, 4);
  const Transformer<float> net = random_net(5);
  SweepConfig cfg;
  cfg.channels = {ChannelModel::Rayleigh, ChannelModel::TGnB};
  cfg.snrs_db = {0.0, 20.0};
  cfg.seed = 6;
  const SweepResult a = snr_sweep(net, data, kTok, cfg);
  cfg.batch_size = 7;
  const SweepResult b = snr_sweep(net, data, kTok, cfg);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].confusion.counts == b.points[i].confusion.counts);
  }
  // trials == 0 uses every sequence once
  CHECK(a.points[0].trials == Index(enumerate_sequences(data, kTok).size()));
}

TEST_CASE("sweep JSON round trips") {
  const auto data = short_bursts(2048, 7);
  const Transformer<float> net = random_net(8);
  SweepConfig cfg;
  cfg.snrs_db = {-10.0, 10.0};
  cfg.trials = 12;
  cfg.model_id = "tiny";
  const SweepResult r = snr_sweep(net, data, kTok, cfg);
  const SweepResult back = sweep_from_json(to_json(r));
  CHECK(back.model_id == "tiny");
  REQUIRE(back.points.size() == r.points.size());
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    CHECK(back.points[i].channel == r.points[i].channel);
    CHECK(back.points[i].snr_db == r.points[i].snr_db);
    CHECK(back.points[i].accuracy == r.points[i].accuracy);
    CHECK(back.points[i].confusion.counts == r.points[i].confusion.counts);
  }
  nlohmann::json bad = to_json(r);
  bad["points"][0]["accuracy"] = 1.5;
  CHECK_THROWS_AS(sweep_from_json(bad), Error);
}

TEST_CASE("sweeps reject mismatched inputs") {
  const auto data = short_bursts(2048, 9);
  const Transformer<float> net = random_net(10);
  CHECK_THROWS_AS(snr_sweep(net, {}, kTok, SweepConfig{}), Error);
  CHECK_THROWS_AS(snr_sweep(net, data, TokenizationConfig{8, 32, 0}, SweepConfig{}), Error);
  CHECK_THROWS_AS(snr_sweep(random_net(11, true), data, kTok, SweepConfig{}), Error);
}

TEST_CASE("multi-label evaluation keeps the accuracy ordering") {
  OverlapDatasetConfig oc;
  oc.captures_per_config = 1;
  oc.ratios = {0.5};
  oc.capture_len = 2048;
  const auto caps = generate_overlap_bursts(oc);
  const Transformer<float> net = random_net(12, true);
  MultiLabelEvalConfig cfg;
  cfg.max_sequences_per_burst = 5;
  const MultiLabelMetrics m = multilabel_evaluate(net, caps, kTok, cfg);
  CHECK(m.samples == Index(caps.size()) * 5);
  CHECK(m.single >= m.single_exact);
  CHECK(m.single_exact >= m.exact);
  CHECK(m.precision.size() == 4);
  const nlohmann::json j = to_json(m);
  for (const char* key : {"exact", "single", "single_exact", "auc"}) CHECK(j.contains(key));
  CHECK_THROWS_AS(multilabel_evaluate(random_net(13), caps, kTok, cfg), Error);
}

TEST_CASE("grid search covers the grid, writes the CSV and reuses its cache") {
  const auto data = short_bursts(1024, 14);
  GridSearchConfig cfg;
  cfg.slices = 4;
  cfg.slice_lens = {8, 16};
  cfg.batch_sizes = {8, 16};
  cfg.learning_rates = {1e-3, 2e-3};
  cfg.num_layers = 1;
  cfg.fc_hidden = 8;
  cfg.train.epochs = 1;
  cfg.train.seed = 15;
  const fs::path dir = scratch("grid");
  const auto rows = grid_search(data, cfg, dir / "cache");
  REQUIRE(rows.size() == 8);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i - 1].accuracy >= rows[i].accuracy);
  for (const GridRow& r : rows) CHECK_FALSE(r.cached);

  write_grid_csv(dir / "grid.csv", rows);
  const auto lines = lines_of(dir / "grid.csv");
  REQUIRE(lines.size() == 9);
  CHECK(lines[0] == "slice_length,batch_size,learning_rate,accuracy,loss,config_hash");

  const auto again = grid_search(data, cfg, dir / "cache");
  REQUIRE(again.size() == 8);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(again[i].cached);
    CHECK(again[i].hash == rows[i].hash);
    CHECK(again[i].accuracy == rows[i].accuracy);
    CHECK(again[i].loss == rows[i].loss);
  }
  fs::remove_all(dir);
}

TEST_CASE("config_hash is a stable hex digest") {
  CHECK(config_hash("") == "cbf29ce484222325");
  CHECK(config_hash("a") == "af63dc4c8601ec8c");
  CHECK(config_hash("abc") != config_hash("abd"));
}

TEST_CASE("reports: one row per grid point, axis labels, and nothing written on error") {
  const auto data = short_bursts(2048, 16);
  SweepConfig cfg;
  cfg.trials = 8;
  cfg.model_id = "a";
  const SweepResult ra = snr_sweep(random_net(17), data, kTok, cfg);
  cfg.model_id = "b";
  cfg.channels = {ChannelModel::NoChannel};
  const SweepResult rb = snr_sweep(random_net(18), data, kTok, cfg);

  const std::string csv = sweep_csv({ra, rb});
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "model,channel,snr_db,accuracy,trials");
  std::map<std::string, int> per_series;
  for (std::string line; std::getline(in, line);) {
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    ++per_series[line.substr(0, c2)];
  }
  CHECK(per_series.size() == 5);
  for (const auto& [key, n] : per_series) CHECK(n == 13);

  const std::string svg = accuracy_plot_svg({ra, rb});
  CHECK(svg.find("SNR (dB)") != std::string::npos);
  CHECK(svg.find("Accuracy") != std::string::npos);

  const fs::path dir = scratch("report");
  const auto written = write_report(dir, {ra, rb});
  CHECK(written.size() == 3 + 5);
  for (const fs::path& p : written) CHECK(fs::file_size(p) > 0);

  const fs::path empty_dir = scratch("report_empty");
  CHECK_THROWS_AS(write_report(empty_dir, {}), Error);
  CHECK_FALSE(fs::exists(empty_dir));
  SweepResult broken = ra;
  broken.points[3].accuracy = -1.0;
  CHECK_THROWS_AS(write_report(empty_dir, {ra, broken}), Error);
  CHECK_FALSE(fs::exists(empty_dir));
  fs::remove_all(dir);
}
