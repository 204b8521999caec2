#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "protoid/dataset_io.hpp"
#include "protoid/error.hpp"
#include "protoid/train.hpp"
#include "protoid/transformer.hpp"
#include "test_util.hpp"

using namespace protoid;

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

TransformerConfig tiny_for(const TokenizationConfig& tok) {
  TransformerConfig c = TransformerConfig::for_tokens(tok, 2, 16);
  c.num_layers = 1;
  c.d_ff = 2 * c.d_model;
  return c;
}

}  // namespace

TEST_CASE("Adam matches the bias-corrected update rule") {
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Adam<double> opt(2, lr, b1, b2, eps);
  Vector<double> p(2), g1(2), g2(2);
  p << 1.0, -2.0;
  g1 << 0.5, -1.0;
  g2 << -0.25, 3.0;
  Vector<double> m = Vector<double>::Zero(2), v = Vector<double>::Zero(2), ref = p;
  int t = 0;
  for (const Vector<double>* g : {&g1, &g2}) {
    ++t;
    m = b1 * m + (1 - b1) * *g;
    v = b2 * v + (1 - b2) * g->cwiseAbs2();
    const Vector<double> mhat = m / (1 - std::pow(b1, t));
    const Vector<double> vhat = v / (1 - std::pow(b2, t));
    ref.array() -= lr * mhat.array() / (vhat.array().sqrt() + eps);
    opt.step(p, *g);
  }
  CHECK((p - ref).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(opt.steps() == 2);
}

TEST_CASE("training defaults") {
  const TrainConfig c;
  CHECK(c.epochs == 5);
  CHECK(c.batch_size == 122);
  CHECK(c.learning_rate == 2e-4);
  CHECK(c.validation_fraction == 0.2);
  const TrainConfig cnn = TrainConfig::cnn_defaults();
  CHECK(cnn.batch_size == 512);
  CHECK(cnn.learning_rate == 1e-3);
  CHECK(cnn.min_learning_rate == 1e-4);
}

TEST_CASE("invalid training configs are rejected") {
  TrainConfig c;
  c.epochs = 0;
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.validation_fraction = 1.0;
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.augmentation.snr_min_db = 10;
  c.augmentation.snr_max_db = 0;
  CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("enumerate_sequences covers every burst at the stride") {
  const auto data = short_bursts(1000, 1);
  const TokenizationConfig tok{4, 32, 0};
  const auto refs = enumerate_sequences(data, tok);
  CHECK(refs.size() == 4 * 7);
  for (const SequenceRef& r : refs) CHECK(r.offset + tok.sequence_len() <= data[std::size_t(r.burst)].signal.size());
}

TEST_CASE("make_sequence references the SNR to the faded window") {
  const auto data = short_bursts(4096, 2);
  const TokenizationConfig tok{16, 64, 0};
  const ComplexSignal& burst = data[1].signal;
  const ComplexSignal clean = burst.segment(512, tok.sequence_len());
  double measured = 0.0;
  const int trials = 50;
  RandomSource rng(3);
  for (int i = 0; i < trials; ++i) {
    const auto t = make_sequence(burst, 512, tok, {ChannelModel::NoChannel, 5.0}, false, rng);
    const CVector noisy = reassemble<float>(t);
    measured += (noisy - clean.samples).squaredNorm() / static_cast<double>(noisy.size());
  }
  const double expected = mean_power(clean) / std::pow(10.0, 0.5);
  CHECK(measured / trials == doctest::Approx(expected).epsilon(0.03));
}

TEST_CASE("make_sequence with normalization yields unit power") {
  const auto data = short_bursts(4096, 4);
  const TokenizationConfig tok{16, 64, 0};
  RandomSource rng(5);
  const auto t = make_sequence(data[2].signal, 0, tok, {ChannelModel::TGnB, 10.0}, true, rng);
  CHECK(mean_power(ComplexSignal(reassemble<float>(t), 20e6)) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("target rows and correctness") {
  const RowMatrix<float> single = target_row({ProtocolId::N80211}, 4, OutputMode::LogSoftmax);
  CHECK(single(0, 2) == 1.0f);
  CHECK(single.sum() == 1.0f);
  const RowMatrix<float> multi = target_row({ProtocolId::B80211, ProtocolId::AX80211}, 4, OutputMode::Sigmoid);
  CHECK(multi(0, 0) == 1.0f);
  CHECK(multi(0, 3) == 1.0f);
  CHECK(multi.sum() == 2.0f);
  CHECK_THROWS_AS(target_row({ProtocolId::B80211, ProtocolId::G80211}, 4, OutputMode::LogSoftmax), Error);
  CHECK_THROWS_AS(target_row({ProtocolId::Noise}, 4, OutputMode::LogSoftmax), Error);

  RowMatrix<float> s(1, 4);
  s << 0.9f, 0.2f, 0.1f, 0.7f;
  CHECK(is_correct(s, {ProtocolId::B80211, ProtocolId::AX80211}, OutputMode::Sigmoid));
  CHECK_FALSE(is_correct(s, {ProtocolId::B80211}, OutputMode::Sigmoid));
  CHECK(is_correct(s, {ProtocolId::B80211}, OutputMode::LogSoftmax));
}

TEST_CASE("a tiny model drives its training loss to zero") {
  // Windows past the preamble; g, n and ax share their first samples, which
  // would leave an irreducible loss.
  std::vector<LabeledBurst> data;
  for (const LabeledBurst& b : short_bursts(4096, 6)) data.push_back({b.signal.segment(1024, 1024), b.protocols, "sim"});
  const TokenizationConfig tok{8, 16, 0};
  Transformer<float> net(tiny_for(tok));
  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.batch_size = 8;
  cfg.learning_rate = 1e-3;
  cfg.validation_fraction = 0.1;
  cfg.augmentation.enabled = false;
  cfg.seed = 7;
  const TrainResult r = train(net, data, tok, cfg);
  CHECK(r.train_sequences == 29);
  CHECK(r.history.front().train_loss > 0.5);
  CHECK(r.history.back().train_loss < 0.01);
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  const auto data = short_bursts(2048, 9);
  const TokenizationConfig tok{8, 16, 0};
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.seed = 10;
  Transformer<float> a(tiny_for(tok)), b(tiny_for(tok));
  const TrainResult ra = train(a, data, tok, cfg);
  const TrainResult rb = train(b, data, tok, cfg);
  REQUIRE(ra.history.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    CHECK(ra.history[e].train_loss == rb.history[e].train_loss);
    CHECK(ra.history[e].val_loss == rb.history[e].val_loss);
  }
  CHECK(a.parameters() == b.parameters());
  CHECK(a.parameters() == ra.best_parameters);
}

TEST_CASE("the epoch callback sees every epoch and the best epoch is restored") {
  const auto data = short_bursts(2048, 11);
  const TokenizationConfig tok{8, 16, 0};
  Transformer<float> net(tiny_for(tok));
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 8;
  cfg.plateau_factor = 0.5;
  cfg.min_learning_rate = 1e-5;
  std::vector<int> seen;
  const TrainResult r = train(net, data, tok, cfg, [&](const EpochRecord& e) { seen.push_back(e.epoch); });
  CHECK(seen == std::vector<int>{1, 2, 3, 4});
  double best = 1e300;
  for (const EpochRecord& e : r.history) best = std::min(best, e.val_loss);
  CHECK(r.best_val_loss == best);
  CHECK(r.train_sequences + r.val_sequences == Index(enumerate_sequences(data, tok).size()));
  for (const EpochRecord& e : r.history) CHECK(e.learning_rate >= cfg.min_learning_rate);
}

TEST_CASE("mismatched tokenizer and network are rejected") {
  const auto data = short_bursts(2048, 12);
  Transformer<float> net(tiny_for(TokenizationConfig{8, 16, 0}));
  CHECK_THROWS_AS(train(net, data, TokenizationConfig{8, 32, 0}, TrainConfig{}), Error);
}

TEST_CASE("history CSV has one row per epoch") {
  const auto path = std::filesystem::temp_directory_path() / "protoid_history_test.csv";
  write_history_csv(path, {{1, 1.0, 0.9, 0.5, 2e-4}, {2, 0.8, 0.7, 0.6, 2e-4}});
  std::ifstream in(path);
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "epoch,train_loss,val_loss,val_acc,learning_rate");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2);
  std::filesystem::remove(path);
}
