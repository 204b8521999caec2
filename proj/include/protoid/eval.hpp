#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "protoid/channel.hpp"
#include "protoid/metrics.hpp"
#include "protoid/network.hpp"
#include "protoid/tokenizer.hpp"
#include "protoid/train.hpp"

namespace protoid {

/// {-30, -25, ..., 30} dB.
std::vector<double> default_snr_grid();

struct SweepConfig {
  std::vector<ChannelModel> channels{kAllChannelModels.begin(), kAllChannelModels.end()};
  std::vector<double> snrs_db = default_snr_grid();
  /// Sequences per grid point; 0 uses every sequence of every test burst once.
  Index trials = 0;
  bool power_normalization = true;
  double input_scale = 1.0;  ///< amplitude applied to bursts before the channel
  Index batch_size = 64;
  std::uint64_t seed = 0;
  std::string model_id = "model";
};

struct SweepPoint {
  ChannelModel channel = ChannelModel::NoChannel;
  double snr_db = 0.0;
  double accuracy = 0.0;
  Index trials = 0;
  ConfusionMatrix confusion;
};

struct SweepResult {
  std::string model_id;
  std::string timestamp;
  std::vector<SweepPoint> points;

  const SweepPoint& at(ChannelModel channel, double snr_db) const;
  /// Accuracies along the SNR grid for one channel, in grid order.
  std::vector<double> curve(ChannelModel channel) const;
  std::vector<double> snrs(ChannelModel channel) const;
};

/// Single-label accuracy per (channel, SNR) with fresh fading and noise for
/// every sequence. Deterministic given cfg.seed.
SweepResult snr_sweep(const Network<float>& net, const std::vector<LabeledBurst>& test, const TokenizationConfig& tok,
                      const SweepConfig& cfg);

nlohmann::json to_json(const SweepResult& r);
SweepResult sweep_from_json(const nlohmann::json& j);

struct MultiLabelEvalConfig {
  double threshold = 0.5;
  bool power_normalization = true;
  Index max_sequences_per_burst = 0;  ///< 0 keeps all
  Index batch_size = 64;
};

/// Sigmoid scores for every sequence of every capture, scored against the
/// capture's protocol set.
MultiLabelMetrics multilabel_evaluate(const Network<float>& net, const std::vector<LabeledBurst>& captures,
                                      const TokenizationConfig& tok, const MultiLabelEvalConfig& cfg = {});

nlohmann::json to_json(const MultiLabelMetrics& m);

struct GridSearchConfig {
  std::vector<Index> slice_lens{32, 64};
  std::vector<Index> batch_sizes{32, 122};
  std::vector<double> learning_rates{2e-4, 1e-3};
  Index slices = 24;
  Index num_layers = 2;
  Index num_heads = 4;  ///< reduced to the largest divisor of d_model not above it
  Index fc_hidden = 64;
  TrainConfig train;
};

struct GridRow {
  Index slice_len = 0;
  Index batch_size = 0;
  double learning_rate = 0.0;
  double accuracy = 0.0;
  double loss = 0.0;
  std::string hash;
  bool cached = false;
};

/// Deterministic 64-bit FNV-1a hex digest.
std::string config_hash(const std::string& text);

/// Trains every grid point and returns rows sorted by accuracy (descending).
/// With a cache directory, finished points are stored as <hash>.json and
/// reused on rerun.
std::vector<GridRow> grid_search(const std::vector<LabeledBurst>& data, const GridSearchConfig& cfg,
                                 const std::filesystem::path& cache_dir = {});

void write_grid_csv(const std::filesystem::path& path, const std::vector<GridRow>& rows);

}  // namespace protoid
