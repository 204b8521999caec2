#include "protoid/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "protoid/error.hpp"

namespace protoid {

template <typename Scalar>
Adam<Scalar>::Adam(Index size, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(epsilon),
      m_(Vector<Scalar>::Zero(size)),
      v_(Vector<Scalar>::Zero(size)) {
  require(learning_rate > 0 && beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && epsilon > 0,
          ErrorKind::InvalidSpec, "invalid Adam hyperparameters");
}

template <typename Scalar>
void Adam<Scalar>::step(Vector<Scalar>& params, const Vector<Scalar>& grad) {
  require(params.size() == m_.size() && grad.size() == m_.size(), ErrorKind::ShapeError,
          "Adam: parameter/gradient size mismatch");
  ++t_;
  const auto b1 = static_cast<Scalar>(beta1_);
  const auto b2 = static_cast<Scalar>(beta2_);
  m_ = b1 * m_ + (Scalar(1) - b1) * grad;
  v_ = b2 * v_ + (Scalar(1) - b2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const auto step = static_cast<Scalar>(lr_ / c1);
  const auto root_c2 = static_cast<Scalar>(std::sqrt(c2));
  const auto eps = static_cast<Scalar>(eps_);
  params.array() -= step * m_.array() / (v_.array().sqrt() / root_c2 + eps);
}

template class Adam<float>;
template class Adam<double>;

TrainConfig TrainConfig::cnn_defaults() {
  TrainConfig c;
  c.batch_size = 512;
  c.learning_rate = 1e-3;
  c.plateau_factor = 0.5;
  c.plateau_patience = 1;
  c.min_learning_rate = 1e-4;
  return c;
}

void validate(const TrainConfig& c) {
  require(c.epochs >= 1, ErrorKind::InvalidSpec, "epochs must be >= 1");
  require(c.batch_size >= 1, ErrorKind::InvalidSpec, "batch_size must be >= 1");
  require(c.learning_rate > 0.0, ErrorKind::InvalidSpec, "learning_rate must be > 0");
  require(c.validation_fraction > 0.0 && c.validation_fraction < 1.0, ErrorKind::InvalidSpec,
          "validation_fraction must be in (0, 1)");
  require(c.plateau_factor > 0.0 && c.plateau_factor <= 1.0, ErrorKind::InvalidSpec,
          "plateau_factor must be in (0, 1]");
  require(!c.augmentation.enabled || !c.augmentation.channels.empty(), ErrorKind::InvalidSpec,
          "augmentation needs at least one channel model");
  require(c.augmentation.snr_min_db <= c.augmentation.snr_max_db, ErrorKind::InvalidSpec, "empty SNR range");
}

std::vector<SequenceRef> enumerate_sequences(const std::vector<LabeledBurst>& data, const TokenizationConfig& tok) {
  std::vector<SequenceRef> refs;
  for (std::size_t b = 0; b < data.size(); ++b) {
    for (Index off : index_sequences(data[b].signal.size(), tok)) {
      refs.push_back(SequenceRef{static_cast<Index>(b), off});
    }
  }
  return refs;
}

TokenMatrix<float> make_sequence(const ComplexSignal& burst, Index offset, const TokenizationConfig& tok,
                                 const ChannelCondition& condition, bool normalize, RandomSource& rng) {
  const Index n = tok.sequence_len();
  require(offset >= 0 && offset + n <= burst.size(), ErrorKind::InsufficientSamples,
          "sequence window exceeds burst");
  ComplexSignal window;
  if (condition.model == ChannelModel::NoChannel) {
    window = burst.segment(offset, n);
  } else {
    // Keep a few samples of history so delayed taps see real signal at the window start.
    constexpr Index kContext = 8;
    const Index start = std::max<Index>(0, offset - kContext);
    const ComplexSignal faded =
        apply_channel(burst.segment(start, offset + n - start), draw_realization(condition.model, rng));
    window = faded.segment(offset - start, n);
  }
  if (std::isfinite(condition.snr_db)) {
    const double p = mean_power(window);
    window = add_awgn(window, condition.snr_db, rng, p > 0.0 ? p : 1.0);
  }
  if (normalize && mean_power(window) > 0.0) window = power_normalize(window);
  return tokenize<float>(window, tok);
}

RowMatrix<float> target_row(const std::vector<ProtocolId>& protocols, Index num_classes, OutputMode mode) {
  require(!protocols.empty(), ErrorKind::InvalidLabel, "empty label set");
  require(mode == OutputMode::Sigmoid || protocols.size() == 1, ErrorKind::InvalidLabel,
          "single-label model given a multi-protocol burst");
  RowMatrix<float> row = RowMatrix<float>::Zero(1, num_classes);
  for (ProtocolId p : protocols) {
    const int c = class_index(p);
    require(c >= 0 && c < num_classes, ErrorKind::InvalidLabel,
            "protocol '" + std::string(to_string(p)) + "' has no output class");
    row(0, c) = 1.0f;
  }
  return row;
}

bool is_correct(const RowMatrix<float>& score_row, const std::vector<ProtocolId>& truth, OutputMode mode) {
  if (mode == OutputMode::LogSoftmax) {
    Index best = 0;
    score_row.row(0).maxCoeff(&best);
    return truth.size() == 1 && class_index(truth.front()) == best;
  }
  for (Index c = 0; c < score_row.cols(); ++c) {
    const bool predicted = score_row(0, c) >= 0.5f;
    const bool present = std::find_if(truth.begin(), truth.end(),
                                      [&](ProtocolId p) { return class_index(p) == c; }) != truth.end();
    if (predicted != present) return false;
  }
  return true;
}

namespace {

struct Batch {
  RowMatrix<float> tokens;
  RowMatrix<float> targets;
};

Batch build_batch(const Network<float>& net, const std::vector<LabeledBurst>& data,
                  const std::vector<SequenceRef>& refs, std::size_t begin, std::size_t end,
                  const TokenizationConfig& tok, const TrainConfig& cfg, RandomSource& rng) {
  const Index m = tok.slices;
  const auto count = static_cast<Index>(end - begin);
  Batch batch{RowMatrix<float>(count * m, tok.token_dim()), RowMatrix<float>(count, net.num_classes())};
  for (std::size_t i = begin; i < end; ++i) {
    const SequenceRef& r = refs[i];
    const LabeledBurst& burst = data[static_cast<std::size_t>(r.burst)];
    ChannelCondition cond;
    if (cfg.augmentation.enabled) {
      cond = sample_random_condition(rng, cfg.augmentation.channels, cfg.augmentation.snr_min_db,
                                     cfg.augmentation.snr_max_db);
    }
    const auto row = static_cast<Index>(i - begin);
    batch.tokens.middleRows(row * m, m) =
        make_sequence(burst.signal, r.offset, tok, cond, cfg.power_normalization, rng);
    batch.targets.row(row) = target_row(burst.protocols, net.num_classes(), net.output_mode());
  }
  return batch;
}

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

Evaluation evaluate(const Network<float>& net, const std::vector<LabeledBurst>& data,
                    const std::vector<SequenceRef>& refs, const TokenizationConfig& tok, const TrainConfig& cfg,
                    std::uint64_t seed) {
  RandomSource rng(seed);
  Evaluation ev;
  std::size_t correct = 0;
  Vector<float> unused;
  const std::size_t step = static_cast<std::size_t>(cfg.batch_size);
  for (std::size_t begin = 0; begin < refs.size(); begin += step) {
    const std::size_t end = std::min(refs.size(), begin + step);
    const Batch b = build_batch(net, data, refs, begin, end, tok, cfg, rng);
    RowMatrix<float> dlogits;
    const RowMatrix<float> z = net.logits(b.tokens);
    ev.loss += static_cast<double>(loss_from_logits(z, b.targets, net.output_mode(), dlogits)) *
               static_cast<double>(end - begin);
    const RowMatrix<float> scores = activate(z, net.output_mode());
    for (std::size_t i = begin; i < end; ++i) {
      const auto row = static_cast<Index>(i - begin);
      correct += is_correct(scores.row(row), data[static_cast<std::size_t>(refs[i].burst)].protocols,
                            net.output_mode());
    }
  }
  ev.loss /= static_cast<double>(refs.size());
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(refs.size());
  return ev;
}

}  // namespace

TrainResult train(Network<float>& net, const std::vector<LabeledBurst>& data, const TokenizationConfig& tok,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  require(!data.empty(), ErrorKind::InvalidInput, "training set is empty");
  validate(cfg);
  validate(tok);
  require(tok.slices == net.seq_len() && tok.token_dim() == net.token_dim(), ErrorKind::ConfigError,
          "tokenizer does not match the network input shape");

  std::vector<SequenceRef> refs = enumerate_sequences(data, tok);
  require(refs.size() >= 2, ErrorKind::InsufficientSamples, "need at least two sequences to train");

  RandomSource split_rng(derive_seed(cfg.seed, 1));
  std::shuffle(refs.begin(), refs.end(), split_rng);
  auto n_val = static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(refs.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, refs.size() - 1);
  const std::vector<SequenceRef> val(refs.end() - static_cast<std::ptrdiff_t>(n_val), refs.end());
  std::vector<SequenceRef> tr(refs.begin(), refs.end() - static_cast<std::ptrdiff_t>(n_val));

  if (cfg.reinitialize) {
    RandomSource init_rng(derive_seed(cfg.seed, 2));
    net.initialize(init_rng);
  }
  RandomSource rng(derive_seed(cfg.seed, 3));
  const std::uint64_t val_seed = derive_seed(cfg.seed, 4);

  Adam<float> opt(net.param_count(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  TrainResult result;
  result.train_sequences = static_cast<Index>(tr.size());
  result.val_sequences = static_cast<Index>(val.size());
  result.best_val_loss = std::numeric_limits<double>::infinity();
  result.best_parameters = net.parameters();
  int stale = 0;
  Vector<float> grad;
  const std::size_t step = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(tr.begin(), tr.end(), rng);
    double total = 0.0;
    for (std::size_t begin = 0; begin < tr.size(); begin += step) {
      const std::size_t end = std::min(tr.size(), begin + step);
      const Batch b = build_batch(net, data, tr, begin, end, tok, cfg, rng);
      const float value = net.loss_and_gradient(b.tokens, b.targets, grad);
      if (!std::isfinite(value) || !grad.allFinite()) {
        fail(ErrorKind::TrainingDiverged, "non-finite loss at epoch " + std::to_string(epoch));
      }
      opt.step(net.parameters(), grad);
      total += static_cast<double>(value) * static_cast<double>(end - begin);
    }
    const Evaluation ev = evaluate(net, data, val, tok, cfg, val_seed);
    if (!std::isfinite(ev.loss)) {
      fail(ErrorKind::TrainingDiverged, "non-finite validation loss at epoch " + std::to_string(epoch));
    }
    EpochRecord rec{epoch, total / static_cast<double>(tr.size()), ev.loss, ev.accuracy, opt.learning_rate()};
    result.history.push_back(rec);
    if (ev.loss < result.best_val_loss) {
      result.best_val_loss = ev.loss;
      result.best_epoch = epoch;
      result.best_parameters = net.parameters();
      stale = 0;
    } else if (++stale >= cfg.plateau_patience && cfg.plateau_factor < 1.0) {
      opt.set_learning_rate(std::max(cfg.min_learning_rate, opt.learning_rate() * cfg.plateau_factor));
      stale = 0;
    }
    if (on_epoch) on_epoch(rec);
  }
  net.parameters() = result.best_parameters;
  return result;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::IoError, "cannot write " + path.string());
  out << "epoch,train_loss,val_loss,val_acc,learning_rate\n";
  out.precision(9);
  for (const EpochRecord& r : history) {
    out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_acc << ',' << r.learning_rate << '\n';
  }
  require(static_cast<bool>(out), ErrorKind::IoError, "write failed for " + path.string());
}

}  // namespace protoid
