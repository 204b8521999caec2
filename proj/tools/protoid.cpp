// protoid command-line front end.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "protoid/checkpoint.hpp"
#include "protoid/cnn.hpp"
#include "protoid/dataset_io.hpp"
#include "protoid/error.hpp"
#include "protoid/eval.hpp"
#include "protoid/legacy_detector.hpp"
#include "protoid/pipeline.hpp"
#include "protoid/report.hpp"
#include "protoid/train.hpp"
#include "protoid/transformer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace protoid;

namespace {

/// TOML through CLI11's own reader; a file whose first non-blank character is
/// '{' is read as JSON, with nested objects becoming sections. Top-level keys
/// belong to the selected subcommand.
class JsonOrToml : public CLI::ConfigTOML {
 public:
  explicit JsonOrToml(const CLI::App* app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::stringstream buffer;
    buffer << input.rdbuf();
    const std::string text = buffer.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    std::vector<CLI::ConfigItem> items;
    if (first == std::string::npos || text[first] != '{') {
      std::istringstream again(text);
      items = CLI::ConfigTOML::from_config(again);
    } else {
      json doc;
      try {
        doc = json::parse(text);
      } catch (const json::exception& e) {
        throw CLI::ConversionError(std::string("invalid JSON config: ") + e.what());
      }
      flatten(doc, {}, items);
    }
    const auto selected = app_->get_subcommands();
    if (selected.empty()) return items;
    const std::string sub = selected.front()->get_name();
    for (CLI::ConfigItem& item : items) {
      if (item.parents.empty() || item.parents.front() != sub) item.parents.insert(item.parents.begin(), sub);
    }
    return items;
  }

 private:
  const CLI::App* app_;

  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void flatten(const json& obj, std::vector<std::string> parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto nested = parents;
        nested.push_back(key);
        flatten(value, nested, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const json& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      out.push_back(std::move(item));
    }
  }
};

struct Common {
  std::uint64_t seed = 0;
  fs::path out = "out";
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  require(static_cast<bool>(out), ErrorKind::IoError, "write failed for " + path.string());
}

fs::path prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  require(!ec, ErrorKind::IoError, "cannot create " + out.string() + ": " + ec.message());
  return out;
}

std::vector<ProtocolId> parse_protocols(const std::vector<std::string>& names) {
  std::vector<ProtocolId> out;
  for (const auto& n : names) out.push_back(parse_protocol(n));
  return out;
}

std::vector<ChannelModel> parse_channels(const std::vector<std::string>& names) {
  std::vector<ChannelModel> out;
  for (const auto& n : names) out.push_back(parse_channel_model(n));
  return out;
}

std::vector<std::string> channel_names() {
  std::vector<std::string> out;
  for (ChannelModel m : kAllChannelModels) out.emplace_back(to_string(m));
  return out;
}

/// Where bursts come from: a manifest directory with a time split, or bursts
/// generated in memory.
struct DataOptions {
  fs::path data;
  int bursts_per_protocol = 50;
  std::string split = "time";
  std::string holdout;

  void add(CLI::App* sub) {
    sub->add_option("--data", data, "Dataset directory holding manifest.json");
    sub->add_option("--bursts-per-protocol", bursts_per_protocol, "Bursts generated when --data is absent")
        ->capture_default_str();
    sub->add_option("--split", split, "time or scenario")->check(CLI::IsMember({"time", "scenario"}))
        ->capture_default_str();
    sub->add_option("--holdout", holdout, "Held-out scenario for --split scenario");
  }

  /// `train_part` selects the training side of the split; generated data uses
  /// independent seed streams for the two sides.
  std::vector<LabeledBurst> load(bool train_part, std::uint64_t seed) const {
    if (data.empty()) {
      GenerateConfig g;
      g.bursts_per_protocol = train_part ? bursts_per_protocol : std::max(1, bursts_per_protocol / 4);
      g.seed = derive_seed(seed, train_part ? 101 : 202);
      return generate_bursts(g);
    }
    const Manifest m = read_manifest(data / "manifest.json");
    SplitSpec spec;
    if (split == "scenario") {
      spec.strategy = SplitStrategy::ScenarioSplit;
      spec.holdout_scenario = holdout;
    }
    const Split s = make_split(m, spec);
    return load_bursts(m, train_part ? s.train : s.test);
  }
};

// ---------------------------------------------------------------------------

struct GenerateOptions {
  Common common;
  int bursts_per_protocol = 50;
  std::vector<std::string> protocols{"b", "g", "n", "ax"};
  Index payload_bits = 1000;
  std::string scenario = "sim";
  bool overlap = false;
  std::vector<double> ratios{0.25, 0.5};
  std::vector<std::string> layouts{"O1"};
  int captures_per_config = 2;
  Index capture_len = 0;
};

void run_generate(const GenerateOptions& o) {
  const fs::path out = prepare_out(o.common.out);
  std::vector<LabeledBurst> bursts;
  json spec;
  if (o.overlap) {
    OverlapDatasetConfig cfg;
    cfg.ratios = o.ratios;
    cfg.layouts.clear();
    for (const auto& l : o.layouts) {
      require(l == "O1" || l == "O2", ErrorKind::ConfigError, "unknown layout " + l);
      cfg.layouts.push_back(l == "O1" ? ReceiverLayout::O1 : ReceiverLayout::O2);
    }
    cfg.captures_per_config = o.captures_per_config;
    cfg.capture_len = o.capture_len;
    cfg.seed = o.common.seed;
    bursts = generate_overlap_bursts(cfg);
    spec = {{"kind", "overlap"}, {"ratios", o.ratios}, {"layouts", o.layouts},
            {"captures_per_config", o.captures_per_config}, {"capture_len", o.capture_len}};
  } else {
    GenerateConfig cfg;
    cfg.bursts_per_protocol = o.bursts_per_protocol;
    cfg.protocols = parse_protocols(o.protocols);
    cfg.payload_bits = o.payload_bits;
    cfg.scenario = o.scenario;
    cfg.seed = o.common.seed;
    bursts = generate_bursts(cfg);
    spec = {{"kind", "single"}, {"bursts_per_protocol", o.bursts_per_protocol}, {"protocols", o.protocols},
            {"payload_bits", o.payload_bits}, {"scenario", o.scenario}};
  }
  const Manifest m = write_dataset(out, bursts, o.common.seed, spec);
  std::cout << json{{"files", m.files.size()}, {"manifest", (out / "manifest.json").string()}}.dump() << '\n';
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  Common common;
  DataOptions data;
  std::string model = "sm";
  int epochs = 10;
  Index batch_size = 32;
  double learning_rate = 2e-4;
  std::vector<std::string> channels{"none", "rayleigh"};
  double snr_min = 0.0;
  double snr_max = 30.0;
  bool no_augment = false;
  bool no_normalization = false;
  bool multi_label = false;
  bool positional_encoding = false;
  double plateau_factor = 1.0;
};

std::pair<std::unique_ptr<Network<float>>, TokenizationConfig> build_model(const std::string& name, bool multi_label,
                                                                          bool positional_encoding) {
  const Index classes = 4;
  if (name == "cnn") {
    CnnConfig c;
    c.num_classes = classes;
    return {std::make_unique<Cnn<float>>(c), TokenizationConfig{1, c.input_len / 2, 0}};
  }
  TransformerConfig cfg;
  TokenizationConfig tok;
  if (name == "sm") {
    cfg = TransformerConfig::small(classes);
    tok = TokenizationConfig::small();
  } else if (name == "lg") {
    cfg = TransformerConfig::large(classes);
    tok = TokenizationConfig::large();
  } else if (name == "d64") {
    tok = TokenizationConfig{24, 32, 0};
    cfg = TransformerConfig::for_tokens(tok, 4, 64, classes);
  } else {
    fail(ErrorKind::ConfigError, "unknown model preset '" + name + "' (sm, lg, d64, cnn)");
  }
  cfg.multi_label = multi_label;
  cfg.positional_encoding = positional_encoding;
  return {std::make_unique<Transformer<float>>(cfg), tok};
}

void run_train(const TrainOptions& o) {
  const fs::path out = prepare_out(o.common.out);
  auto [net, tok] = build_model(o.model, o.multi_label, o.positional_encoding);
  const std::vector<LabeledBurst> bursts = o.data.load(true, o.common.seed);

  TrainConfig cfg = o.model == "cnn" ? TrainConfig::cnn_defaults() : TrainConfig{};
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  cfg.learning_rate = o.learning_rate;
  cfg.augmentation.enabled = !o.no_augment;
  cfg.augmentation.channels = parse_channels(o.channels);
  cfg.augmentation.snr_min_db = o.snr_min;
  cfg.augmentation.snr_max_db = o.snr_max;
  cfg.power_normalization = !o.no_normalization;
  cfg.plateau_factor = o.plateau_factor;
  cfg.seed = o.common.seed;

  const TrainResult r = train(*net, bursts, tok, cfg, [](const EpochRecord& e) {
    std::cerr << json{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss},
                      {"val_acc", e.val_acc}, {"lr", e.learning_rate}}.dump() << '\n';
  });
  write_history_csv(out / "history.csv", r.history);
  const json meta = {{"seed", o.common.seed}, {"preset", o.model}, {"power_normalization", !o.no_normalization},
                     {"best_epoch", r.best_epoch}, {"best_val_loss", r.best_val_loss},
                     {"train_sequences", r.train_sequences}, {"val_sequences", r.val_sequences}};
  save_checkpoint(out / "model.ckpt", *net, tok, meta);
  write_json(out / "summary.json", meta);
  std::cout << meta.dump() << '\n';
}

// ---------------------------------------------------------------------------

struct SweepOptions {
  Common common;
  DataOptions data;
  fs::path model;
  std::vector<std::string> channels = channel_names();
  std::vector<double> snrs = default_snr_grid();
  Index trials = 0;
  double input_scale_db = 0.0;
  bool no_normalization = false;
  std::string model_id = "model";
};

void run_sweep(const SweepOptions& o) {
  const fs::path out = prepare_out(o.common.out);
  const LoadedModel lm = load_checkpoint(o.model);
  const std::vector<LabeledBurst> test = o.data.load(false, o.common.seed);
  SweepConfig cfg;
  cfg.channels = parse_channels(o.channels);
  cfg.snrs_db = o.snrs;
  cfg.trials = o.trials;
  cfg.power_normalization = !o.no_normalization;
  cfg.input_scale = std::pow(10.0, o.input_scale_db / 20.0);
  cfg.seed = o.common.seed;
  cfg.model_id = o.model_id;
  const SweepResult r = snr_sweep(*lm.network, test, lm.tokenization, cfg);
  write_json(out / "sweep.json", to_json(r));
  std::ofstream(out / "sweep.csv") << sweep_csv({r});
  json summary = json::object();
  for (ChannelModel c : cfg.channels) {
    json row = json::object();
    const auto snrs = r.snrs(c);
    const auto acc = r.curve(c);
    for (std::size_t i = 0; i < snrs.size(); ++i) row[std::to_string(static_cast<int>(snrs[i]))] = acc[i];
    summary[std::string(to_string(c))] = row;
  }
  std::cout << summary.dump() << '\n';
}

// ---------------------------------------------------------------------------

struct LegacyOptions {
  Common common;
  DataOptions data;
  std::vector<std::string> channels = channel_names();
  std::vector<double> snrs = default_snr_grid();
  int trials = 100;
  double calibrate_fa = 0.0;
  bool three_way = false;
  double dsss_threshold = 0.5;
  double packet_threshold = 0.5;
  double format_threshold = 0.5;
};

void run_legacy(const LegacyOptions& o) {
  const fs::path out = prepare_out(o.common.out);
  const std::vector<LabeledBurst> test = o.data.load(false, o.common.seed);
  DetectionTrialConfig cfg;
  cfg.channels = parse_channels(o.channels);
  cfg.snrs_db = o.snrs;
  cfg.trials_per_point = o.trials;
  cfg.seed = o.common.seed;
  cfg.detector.four_way = !o.three_way;
  cfg.detector.thresholds = {o.dsss_threshold, o.packet_threshold, o.format_threshold};
  if (o.calibrate_fa > 0.0) {
    RandomSource rng(derive_seed(o.common.seed, 7));
    cfg.detector.thresholds = calibrate_thresholds(cfg.window_len + cfg.max_lead, 500, o.calibrate_fa, rng);
  }
  const std::vector<AccuracyCell> cells = detection_accuracy(test, cfg);
  write_accuracy_csv(out / "legacy_accuracy.csv", cells);
  json j = {{"thresholds",
             {{"dsss", cfg.detector.thresholds.dsss},
              {"packet", cfg.detector.thresholds.packet},
              {"format", cfg.detector.thresholds.format}}},
            {"four_way", cfg.detector.four_way},
            {"cells", json::array()}};
  for (const AccuracyCell& c : cells) {
    j["cells"].push_back({{"channel", to_string(c.channel)}, {"snr_db", c.snr_db}, {"accuracy", c.accuracy},
                          {"trials", c.trials}});
  }
  write_json(out / "legacy.json", j);
  std::cout << j["thresholds"].dump() << '\n';
}

// ---------------------------------------------------------------------------

struct OverlapOptions {
  Common common;
  fs::path model;
  fs::path data;
  double threshold = 0.5;
  Index max_sequences = 0;
};

void run_overlap_eval(const OverlapOptions& o) {
  const fs::path out = prepare_out(o.common.out);
  const LoadedModel lm = load_checkpoint(o.model);
  require(lm.network->output_mode() == OutputMode::Sigmoid, ErrorKind::ConfigError,
          "overlap-eval needs a multi-label model");
  std::vector<LabeledBurst> captures;
  if (o.data.empty()) {
    OverlapDatasetConfig cfg;
    cfg.seed = o.common.seed;
    captures = generate_overlap_bursts(cfg);
  } else {
    const Manifest m = read_manifest(o.data / "manifest.json");
    captures = load_bursts(m, m.files);
  }
  MultiLabelEvalConfig cfg;
  cfg.threshold = o.threshold;
  cfg.max_sequences_per_burst = o.max_sequences;
  const MultiLabelMetrics metrics = multilabel_evaluate(*lm.network, captures, lm.tokenization, cfg);
  const json j = to_json(metrics);
  write_json(out / "multilabel_metrics.json", j);
  std::cout << json{{"exact", metrics.exact}, {"single", metrics.single}, {"single_exact", metrics.single_exact},
                    {"auc", metrics.auc}}.dump() << '\n';
}

// ---------------------------------------------------------------------------

struct GridOptions {
  Common common;
  DataOptions data;
  std::vector<Index> slice_lens{32, 64};
  std::vector<Index> batch_sizes{32, 122};
  std::vector<double> learning_rates{2e-4, 1e-3};
  int epochs = 2;
  Index fc_hidden = 64;
  bool no_cache = false;
};

void run_grid_search(const GridOptions& o) {
  const fs::path out = prepare_out(o.common.out);
  const std::vector<LabeledBurst> bursts = o.data.load(true, o.common.seed);
  GridSearchConfig cfg;
  cfg.slice_lens = o.slice_lens;
  cfg.batch_sizes = o.batch_sizes;
  cfg.learning_rates = o.learning_rates;
  cfg.fc_hidden = o.fc_hidden;
  cfg.train.epochs = o.epochs;
  cfg.train.seed = o.common.seed;
  const std::vector<GridRow> rows = grid_search(bursts, cfg, o.no_cache ? fs::path{} : out / "cache");
  write_grid_csv(out / "grid.csv", rows);
  std::cout << json{{"rows", rows.size()}, {"best_accuracy", rows.empty() ? 0.0 : rows.front().accuracy}}.dump()
            << '\n';
}

// ---------------------------------------------------------------------------

struct PipelineOptions {
  Common common;
  fs::path model;
  std::vector<fs::path> captures;
  std::vector<std::string> protocols{"b", "g", "n", "ax"};
  double snr_db = 30.0;
  std::string channel = "none";
  int bursts_per_protocol = 2;
  double duration_s = 10.0;
  double pacing = 1.0;
  std::size_t q1 = 2;
  std::size_t q2 = 2;
};

void run_pipeline_cmd(const PipelineOptions& o) {
  const fs::path out = prepare_out(o.common.out);
  const LoadedModel lm = load_checkpoint(o.model);
  std::unique_ptr<ChunkSource> source =
      o.captures.empty() ? make_synthetic_source(parse_protocols(o.protocols), o.snr_db,
                                                 parse_channel_model(o.channel), o.bursts_per_protocol,
                                                 o.common.seed)
                         : make_file_source(o.captures);
  PipelineConfig cfg;
  cfg.queues = {o.q1, o.q2};
  cfg.pacing = o.pacing;
  cfg.duration = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::duration<double>(o.duration_s));
  const PipelineReport rep = run_pipeline(*source, *lm.network, lm.tokenization, cfg);
  write_prediction_log(out / "predictions.log", rep);
  json j = {{"chunks_in", rep.chunks_in},
            {"predictions", rep.predictions.size()},
            {"drops_q1", rep.drops_q1},
            {"drops_q2", rep.drops_q2},
            {"in_flight", rep.in_flight},
            {"max_occupancy_q1", rep.max_occupancy_q1},
            {"max_occupancy_q2", rep.max_occupancy_q2},
            {"wall_seconds", rep.wall_seconds}};
  if (rep.predictions.size() >= 10) j["timings"] = to_json(profile(rep));
  write_json(out / "pipeline.json", j);
  j.erase("timings");
  std::cout << j.dump() << '\n';
}

// ---------------------------------------------------------------------------

struct ReportOptions {
  Common common;
  std::vector<fs::path> inputs;
};

void run_report(const ReportOptions& o) {
  std::vector<SweepResult> results;
  for (const fs::path& p : o.inputs) {
    std::ifstream in(p);
    require(static_cast<bool>(in), ErrorKind::IoError, "cannot read " + p.string());
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      fail(ErrorKind::FormatError, p.string() + ": " + e.what());
    }
    results.push_back(sweep_from_json(j));
  }
  const std::vector<fs::path> written = write_report(o.common.out, results);
  json files = json::array();
  for (const fs::path& p : written) files.push_back(p.string());
  std::cout << json{{"files", files}}.dump() << '\n';
}

void print_error(std::string_view kind, std::string_view message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Protocol identification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML or JSON file with option values");
  app.config_formatter(std::make_shared<JsonOrToml>(&app));
  app.allow_config_extras(CLI::config_extras_mode::error);

  GenerateOptions gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic burst dataset");
  add_common(g, gen.common);
  g->add_option("--bursts-per-protocol", gen.bursts_per_protocol)->capture_default_str();
  g->add_option("--protocols", gen.protocols)->capture_default_str();
  g->add_option("--payload-bits", gen.payload_bits)->capture_default_str();
  g->add_option("--scenario", gen.scenario)->capture_default_str();
  g->add_flag("--overlap", gen.overlap, "Two-transmitter captures instead of single bursts");
  g->add_option("--ratios", gen.ratios)->capture_default_str();
  g->add_option("--layouts", gen.layouts)->capture_default_str();
  g->add_option("--captures-per-config", gen.captures_per_config)->capture_default_str();
  g->add_option("--capture-len", gen.capture_len, "0 keeps the layout length")->capture_default_str();

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train a classifier");
  add_common(t, tr.common);
  tr.data.add(t);
  t->add_option("--model", tr.model, "sm, lg, d64 or cnn")->capture_default_str();
  t->add_option("--epochs", tr.epochs)->capture_default_str();
  t->add_option("--batch-size", tr.batch_size)->capture_default_str();
  t->add_option("--lr", tr.learning_rate)->capture_default_str();
  t->add_option("--channels", tr.channels, "Augmentation channel models")->capture_default_str();
  t->add_option("--snr-min", tr.snr_min)->capture_default_str();
  t->add_option("--snr-max", tr.snr_max)->capture_default_str();
  t->add_flag("--no-augment", tr.no_augment);
  t->add_flag("--no-normalization", tr.no_normalization);
  t->add_flag("--multi-label", tr.multi_label);
  t->add_flag("--positional-encoding", tr.positional_encoding);
  t->add_option("--plateau-factor", tr.plateau_factor)->capture_default_str();

  SweepOptions sw;
  auto* s = app.add_subcommand("sweep", "Accuracy over channel models and SNR");
  add_common(s, sw.common);
  sw.data.add(s);
  s->add_option("--model", sw.model, "Checkpoint path")->required();
  s->add_option("--channels", sw.channels)->capture_default_str();
  s->add_option("--snrs", sw.snrs)->capture_default_str();
  s->add_option("--trials", sw.trials, "Sequences per point, 0 for all")->capture_default_str();
  s->add_option("--input-scale-db", sw.input_scale_db)->capture_default_str();
  s->add_flag("--no-normalization", sw.no_normalization);
  s->add_option("--model-id", sw.model_id)->capture_default_str();

  LegacyOptions lg;
  auto* l = app.add_subcommand("legacy", "Preamble-correlation detector accuracy");
  add_common(l, lg.common);
  lg.data.add(l);
  l->add_option("--channels", lg.channels)->capture_default_str();
  l->add_option("--snrs", lg.snrs)->capture_default_str();
  l->add_option("--trials", lg.trials)->capture_default_str();
  l->add_option("--calibrate-fa", lg.calibrate_fa, "Calibrate thresholds to this noise false-alarm rate");
  l->add_flag("--three-way", lg.three_way, "Fold DSSS into non-HT");
  l->add_option("--dsss-threshold", lg.dsss_threshold)->capture_default_str();
  l->add_option("--packet-threshold", lg.packet_threshold)->capture_default_str();
  l->add_option("--format-threshold", lg.format_threshold)->capture_default_str();

  OverlapOptions ov;
  auto* o = app.add_subcommand("overlap-eval", "Multi-label metrics on overlapping captures");
  add_common(o, ov.common);
  o->add_option("--model", ov.model, "Multi-label checkpoint")->required();
  o->add_option("--data", ov.data, "Overlap dataset directory");
  o->add_option("--threshold", ov.threshold)->capture_default_str();
  o->add_option("--max-sequences", ov.max_sequences, "Per capture, 0 for all")->capture_default_str();

  GridOptions gr;
  auto* gs = app.add_subcommand("grid-search", "Slice length x batch size x learning rate sweep");
  add_common(gs, gr.common);
  gr.data.add(gs);
  gs->add_option("--slice-lens", gr.slice_lens)->capture_default_str();
  gs->add_option("--batch-sizes", gr.batch_sizes)->capture_default_str();
  gs->add_option("--lrs", gr.learning_rates)->capture_default_str();
  gs->add_option("--epochs", gr.epochs)->capture_default_str();
  gs->add_option("--fc-hidden", gr.fc_hidden)->capture_default_str();
  gs->add_flag("--no-cache", gr.no_cache);

  PipelineOptions pl;
  auto* p = app.add_subcommand("pipeline", "Streaming receiver, DSP and inference");
  add_common(p, pl.common);
  p->add_option("--model", pl.model, "Checkpoint path")->required();
  p->add_option("--captures", pl.captures, "Capture files to replay instead of synthetic bursts");
  p->add_option("--protocols", pl.protocols)->capture_default_str();
  p->add_option("--snr", pl.snr_db)->capture_default_str();
  p->add_option("--channel", pl.channel)->capture_default_str();
  p->add_option("--bursts-per-protocol", pl.bursts_per_protocol)->capture_default_str();
  p->add_option("--duration", pl.duration_s, "Seconds")->capture_default_str();
  p->add_option("--pacing", pl.pacing, "Receiver period multiplier, 0 runs free")->capture_default_str();
  p->add_option("--q1", pl.q1)->capture_default_str();
  p->add_option("--q2", pl.q2)->capture_default_str();

  ReportOptions rp;
  auto* r = app.add_subcommand("report", "CSV and SVG plots from sweep results");
  add_common(r, rp.common);
  r->add_option("inputs", rp.inputs, "sweep.json files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("UsageError", e.what());
    return 2;
  }

  try {
    if (*g) run_generate(gen);
    else if (*t) run_train(tr);
    else if (*s) run_sweep(sw);
    else if (*l) run_legacy(lg);
    else if (*o) run_overlap_eval(ov);
    else if (*gs) run_grid_search(gr);
    else if (*p) run_pipeline_cmd(pl);
    else if (*r) run_report(rp);
  } catch (const Error& e) {
    print_error(to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("InternalError", e.what());
    return 1;
  }
  return 0;
}
