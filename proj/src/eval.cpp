#include "protoid/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "protoid/error.hpp"
#include "protoid/transformer.hpp"

namespace protoid {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<double> default_snr_grid() {
  std::vector<double> g;
  for (int s = -30; s <= 30; s += 5) g.push_back(s);
  return g;
}

const SweepPoint& SweepResult::at(ChannelModel channel, double snr_db) const {
  for (const SweepPoint& p : points) {
    if (p.channel == channel && std::abs(p.snr_db - snr_db) < 1e-9) return p;
  }
  fail(ErrorKind::InvalidInput, "no sweep point for " + std::string(to_string(channel)) + " at " +
                                    std::to_string(snr_db) + " dB");
}

std::vector<double> SweepResult::curve(ChannelModel channel) const {
  std::vector<double> out;
  for (const SweepPoint& p : points) {
    if (p.channel == channel) out.push_back(p.accuracy);
  }
  return out;
}

std::vector<double> SweepResult::snrs(ChannelModel channel) const {
  std::vector<double> out;
  for (const SweepPoint& p : points) {
    if (p.channel == channel) out.push_back(p.snr_db);
  }
  return out;
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Sequence list for one grid point: all refs in order, or `trials` refs drawn
/// by cycling a shuffled copy.
std::vector<SequenceRef> pick_sequences(const std::vector<SequenceRef>& all, Index trials, RandomSource& rng) {
  if (trials <= 0) return all;
  std::vector<SequenceRef> order = all;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<SequenceRef> out;
  out.reserve(static_cast<std::size_t>(trials));
  for (Index i = 0; i < trials; ++i) out.push_back(order[static_cast<std::size_t>(i) % order.size()]);
  return out;
}

}  // namespace

SweepResult snr_sweep(const Network<float>& net, const std::vector<LabeledBurst>& test, const TokenizationConfig& tok,
                      const SweepConfig& cfg) {
  require(!test.empty(), ErrorKind::InvalidInput, "no test bursts");
  require(!cfg.channels.empty() && !cfg.snrs_db.empty(), ErrorKind::InvalidSpec, "empty sweep grid");
  require(cfg.batch_size > 0, ErrorKind::InvalidSpec, "batch_size must be positive");
  require(net.output_mode() == OutputMode::LogSoftmax, ErrorKind::ConfigError, "sweep needs a single-label model");
  require(tok.slices == net.seq_len() && tok.token_dim() == net.token_dim(), ErrorKind::ConfigError,
          "tokenizer does not match the network input shape");
  for (const LabeledBurst& b : test) {
    require(b.protocols.size() == 1, ErrorKind::InvalidLabel, "sweep needs single-protocol bursts");
  }
  std::vector<LabeledBurst> scaled;
  const std::vector<LabeledBurst>* data = &test;
  if (cfg.input_scale != 1.0) {
    scaled = test;
    for (LabeledBurst& b : scaled) b.signal.samples *= cfg.input_scale;
    data = &scaled;
  }
  const std::vector<SequenceRef> all = enumerate_sequences(*data, tok);
  require(!all.empty(), ErrorKind::InsufficientSamples, "test bursts are shorter than one sequence");

  SweepResult result;
  result.model_id = cfg.model_id;
  result.timestamp = utc_timestamp();
  std::uint64_t stream = 0;
  const Index m = tok.slices;
  for (ChannelModel ch : cfg.channels) {
    for (double snr : cfg.snrs_db) {
      RandomSource rng(derive_seed(cfg.seed, stream++));
      const std::vector<SequenceRef> refs = pick_sequences(all, cfg.trials, rng);
      SweepPoint point;
      point.channel = ch;
      point.snr_db = snr;
      point.confusion = ConfusionMatrix(net.num_classes());
      const ChannelCondition cond{ch, snr};
      for (std::size_t begin = 0; begin < refs.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t end = std::min(refs.size(), begin + static_cast<std::size_t>(cfg.batch_size));
        RowMatrix<float> tokens(static_cast<Index>(end - begin) * m, tok.token_dim());
        for (std::size_t i = begin; i < end; ++i) {
          const LabeledBurst& b = (*data)[static_cast<std::size_t>(refs[i].burst)];
          tokens.middleRows(static_cast<Index>(i - begin) * m, m) =
              make_sequence(b.signal, refs[i].offset, tok, cond, cfg.power_normalization, rng);
        }
        const std::vector<int> pred = argmax_rows(net.forward(tokens));
        for (std::size_t i = begin; i < end; ++i) {
          const LabeledBurst& b = (*data)[static_cast<std::size_t>(refs[i].burst)];
          point.confusion.add(class_index(b.protocols.front()), pred[i - begin]);
        }
      }
      point.trials = point.confusion.total();
      point.accuracy = point.confusion.accuracy();
      result.points.push_back(std::move(point));
    }
  }
  return result;
}

json to_json(const SweepResult& r) {
  json points = json::array();
  for (const SweepPoint& p : r.points) {
    json rows = json::array();
    for (Index i = 0; i < p.confusion.counts.rows(); ++i) {
      json row = json::array();
      for (Index j = 0; j < p.confusion.counts.cols(); ++j) row.push_back(p.confusion.counts(i, j));
      rows.push_back(row);
    }
    points.push_back({{"channel", std::string(to_string(p.channel))},
                      {"snr_db", p.snr_db},
                      {"accuracy", p.accuracy},
                      {"trials", p.trials},
                      {"confusion", rows}});
  }
  return {{"model_id", r.model_id}, {"timestamp", r.timestamp}, {"points", points}};
}

SweepResult sweep_from_json(const json& j) {
  SweepResult r;
  try {
    r.model_id = j.at("model_id").get<std::string>();
    r.timestamp = j.value("timestamp", std::string());
    for (const json& p : j.at("points")) {
      SweepPoint sp;
      sp.channel = parse_channel_model(p.at("channel").get<std::string>());
      sp.snr_db = p.at("snr_db").get<double>();
      sp.accuracy = p.at("accuracy").get<double>();
      sp.trials = p.at("trials").get<Index>();
      const json& rows = p.at("confusion");
      const auto n = static_cast<Index>(rows.size());
      sp.confusion = ConfusionMatrix(n);
      for (Index i = 0; i < n; ++i) {
        require(static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) == n, ErrorKind::FormatError,
                "confusion matrix is not square");
        for (Index k = 0; k < n; ++k) sp.confusion.counts(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<Index>();
      }
      require(sp.accuracy >= 0.0 && sp.accuracy <= 1.0, ErrorKind::FormatError, "accuracy outside [0, 1]");
      r.points.push_back(std::move(sp));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::FormatError, std::string("sweep result: ") + e.what());
  }
  return r;
}

MultiLabelMetrics multilabel_evaluate(const Network<float>& net, const std::vector<LabeledBurst>& captures,
                                      const TokenizationConfig& tok, const MultiLabelEvalConfig& cfg) {
  require(cfg.threshold > 0.0 && cfg.threshold < 1.0, ErrorKind::InvalidSpec, "threshold must be in (0, 1)");
  require(net.output_mode() == OutputMode::Sigmoid, ErrorKind::ConfigError, "multi-label evaluation needs a Sigmoid head");
  require(!captures.empty(), ErrorKind::InvalidInput, "no captures to evaluate");
  std::vector<SequenceRef> refs;
  for (std::size_t b = 0; b < captures.size(); ++b) {
    std::vector<Index> offs = index_sequences(captures[b].signal.size(), tok);
    if (cfg.max_sequences_per_burst > 0 && static_cast<Index>(offs.size()) > cfg.max_sequences_per_burst) {
      offs.resize(static_cast<std::size_t>(cfg.max_sequences_per_burst));
    }
    for (Index o : offs) refs.push_back(SequenceRef{static_cast<Index>(b), o});
  }
  require(!refs.empty(), ErrorKind::InsufficientSamples, "captures are shorter than one sequence");
  const Index m = tok.slices;
  Eigen::MatrixXd scores(static_cast<Index>(refs.size()), net.num_classes());
  std::vector<std::vector<ProtocolId>> truth;
  RandomSource unused(0);
  const ChannelCondition clean;
  for (std::size_t begin = 0; begin < refs.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t end = std::min(refs.size(), begin + static_cast<std::size_t>(cfg.batch_size));
    RowMatrix<float> tokens(static_cast<Index>(end - begin) * m, tok.token_dim());
    for (std::size_t i = begin; i < end; ++i) {
      const LabeledBurst& b = captures[static_cast<std::size_t>(refs[i].burst)];
      tokens.middleRows(static_cast<Index>(i - begin) * m, m) =
          make_sequence(b.signal, refs[i].offset, tok, clean, cfg.power_normalization, unused);
      truth.push_back(b.protocols);
    }
    scores.middleRows(static_cast<Index>(begin), static_cast<Index>(end - begin)) =
        net.forward(tokens).cast<double>();
  }
  const MultiLabelMetrics metrics = multilabel_metrics(scores, truth, cfg.threshold);
  require(metrics.single >= metrics.single_exact && metrics.single_exact >= metrics.exact, ErrorKind::InvalidInput,
          "metric ordering violated");
  return metrics;
}

json to_json(const MultiLabelMetrics& m) {
  json pairs = json::array();
  for (const PairRate& p : m.pair_rates) {
    pairs.push_back({{"incumbent", std::string(to_string(p.incumbent))},
                     {"interferer", std::string(to_string(p.interferer))},
                     {"count", p.count},
                     {"incumbent_detected", p.incumbent_detected},
                     {"interferer_detected", p.interferer_detected},
                     {"both_detected", p.both_detected}});
  }
  return {{"exact", m.exact},
          {"single", m.single},
          {"single_exact", m.single_exact},
          {"auc", std::isnan(m.auc) ? json(nullptr) : json(m.auc)},
          {"precision", m.precision},
          {"recall", m.recall},
          {"support", m.support},
          {"pair_rates", pairs},
          {"samples", m.samples}};
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

Index heads_for(Index d_model, Index wanted) {
  for (Index h = std::max<Index>(1, wanted); h > 1; --h) {
    if (d_model % h == 0) return h;
  }
  return 1;
}

json grid_point_key(const GridSearchConfig& cfg, Index slice_len, Index batch, double lr,
                    const std::vector<LabeledBurst>& data) {
  Index total = 0;
  double energy = 0.0;
  for (const LabeledBurst& b : data) {
    total += b.signal.size();
    energy += b.signal.samples.squaredNorm();
  }
  const TrainConfig& t = cfg.train;
  return {{"slice_len", slice_len},
          {"batch_size", batch},
          {"learning_rate", lr},
          {"slices", cfg.slices},
          {"num_layers", cfg.num_layers},
          {"num_heads", cfg.num_heads},
          {"fc_hidden", cfg.fc_hidden},
          {"epochs", t.epochs},
          {"seed", t.seed},
          {"augmentation", t.augmentation.enabled},
          {"snr", {t.augmentation.snr_min_db, t.augmentation.snr_max_db}},
          {"normalize", t.power_normalization},
          {"data", {data.size(), total, energy}}};
}

}  // namespace

std::vector<GridRow> grid_search(const std::vector<LabeledBurst>& data, const GridSearchConfig& cfg,
                                 const fs::path& cache_dir) {
  require(!data.empty(), ErrorKind::InvalidInput, "grid search needs data");
  require(!cfg.slice_lens.empty() && !cfg.batch_sizes.empty() && !cfg.learning_rates.empty(), ErrorKind::InvalidSpec,
          "grid axes must be non-empty");
  if (!cache_dir.empty()) {
    std::error_code ec;
    fs::create_directories(cache_dir, ec);
    require(!ec, ErrorKind::IoError, "cannot create " + cache_dir.string());
  }
  std::vector<GridRow> rows;
  for (Index s : cfg.slice_lens) {
    for (Index batch : cfg.batch_sizes) {
      for (double lr : cfg.learning_rates) {
        GridRow row{s, batch, lr, 0.0, 0.0, config_hash(grid_point_key(cfg, s, batch, lr, data).dump()), false};
        const fs::path cached = cache_dir.empty() ? fs::path() : cache_dir / (row.hash + ".json");
        if (!cached.empty() && fs::exists(cached)) {
          std::ifstream in(cached);
          try {
            const json j = json::parse(in);
            row.accuracy = j.at("accuracy").get<double>();
            row.loss = j.at("loss").get<double>();
            row.cached = true;
            rows.push_back(row);
            continue;
          } catch (const json::exception&) {
            // unreadable cache entry: recompute
          }
        }
        TokenizationConfig tok{cfg.slices, s, 0};
        TransformerConfig mc = TransformerConfig::for_tokens(tok, heads_for(2 * s, cfg.num_heads), cfg.fc_hidden);
        mc.num_layers = cfg.num_layers;
        Transformer<float> net(mc);
        TrainConfig tc = cfg.train;
        tc.batch_size = batch;
        tc.learning_rate = lr;
        const TrainResult tr = train(net, data, tok, tc);
        const EpochRecord& best = tr.history[static_cast<std::size_t>(tr.best_epoch - 1)];
        row.accuracy = best.val_acc;
        row.loss = best.val_loss;
        if (!cached.empty()) {
          std::ofstream out(cached);
          out << json{{"accuracy", row.accuracy}, {"loss", row.loss}, {"slice_len", s}, {"batch_size", batch},
                      {"learning_rate", lr}}
                     .dump()
              << "\n";
          require(static_cast<bool>(out), ErrorKind::IoError, "cannot write " + cached.string());
        }
        rows.push_back(row);
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const GridRow& a, const GridRow& b) { return a.accuracy > b.accuracy; });
  return rows;
}

void write_grid_csv(const fs::path& path, const std::vector<GridRow>& rows) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::IoError, "cannot write " + path.string());
  out << "slice_length,batch_size,learning_rate,accuracy,loss,config_hash\n";
  out.precision(9);
  for (const GridRow& r : rows) {
    out << r.slice_len << ',' << r.batch_size << ',' << r.learning_rate << ',' << r.accuracy << ',' << r.loss << ','
        << r.hash << '\n';
  }
  require(static_cast<bool>(out), ErrorKind::IoError, "write failed for " + path.string());
}

}  // namespace protoid
