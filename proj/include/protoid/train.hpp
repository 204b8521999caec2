#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "protoid/channel.hpp"
#include "protoid/network.hpp"
#include "protoid/tokenizer.hpp"
#include "protoid/waveform.hpp"

namespace protoid {

/// Adam over a flat parameter vector.
template <typename Scalar>
class Adam {
 public:
  Adam(Index size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  void step(Vector<Scalar>& params, const Vector<Scalar>& grad);

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  std::int64_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  Vector<Scalar> m_, v_;
};

struct AugmentationConfig {
  bool enabled = true;
  std::vector<ChannelModel> channels{kAllChannelModels.begin(), kAllChannelModels.end()};
  double snr_min_db = -30.0;
  double snr_max_db = 30.0;
};

struct TrainConfig {
  int epochs = 5;
  Index batch_size = 122;
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  AugmentationConfig augmentation;
  bool power_normalization = true;
  double validation_fraction = 0.2;
  /// Multiply the rate by plateau_factor after plateau_patience epochs without
  /// a validation improvement, never going below min_learning_rate. 1 disables.
  double plateau_factor = 1.0;
  int plateau_patience = 1;
  double min_learning_rate = 1e-4;
  bool reinitialize = true;
  std::uint64_t seed = 0;

  /// Baseline CNN recipe: batch 512, lr 1e-3 decaying on plateau to 1e-4.
  static TrainConfig cnn_defaults();
};

void validate(const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  Vector<float> best_parameters;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  Index train_sequences = 0;
  Index val_sequences = 0;
};

/// (burst index, start offset) of one model input.
struct SequenceRef {
  Index burst = 0;
  Index offset = 0;
};

/// All sequences of every burst at the tokenizer stride.
std::vector<SequenceRef> enumerate_sequences(const std::vector<LabeledBurst>& data, const TokenizationConfig& tok);

/// Cuts the window [offset, offset + M*S), passes it through `condition`
/// (a fresh block-fading draw plus AWGN relative to the faded window's power),
/// optionally RMS-normalizes, and tokenizes.
TokenMatrix<float> make_sequence(const ComplexSignal& burst, Index offset, const TokenizationConfig& tok,
                                 const ChannelCondition& condition, bool normalize, RandomSource& rng);

/// Target row for a protocol set.
RowMatrix<float> target_row(const std::vector<ProtocolId>& protocols, Index num_classes, OutputMode mode);

/// Whether a score row counts as correct: argmax for single-label, exact set
/// match at threshold 0.5 for multi-label.
bool is_correct(const RowMatrix<float>& score_row, const std::vector<ProtocolId>& truth, OutputMode mode);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam over shuffled sequence indices with an 80/20 train/validation
/// split. On return the network holds the best-validation-loss parameters.
TrainResult train(Network<float>& net, const std::vector<LabeledBurst>& data, const TokenizationConfig& tok,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

}  // namespace protoid
