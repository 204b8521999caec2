#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "protoid/error.hpp"
#include "protoid/metrics.hpp"
#include "test_util.hpp"

using namespace protoid;

namespace {

using ClassSet = std::set<int>;

ClassSet subset_of(int bits) {
  ClassSet s;
  for (int c = 0; c < 5; ++c) {
    if (bits & (1 << c)) s.insert(c);
  }
  return s;
}

std::vector<ProtocolId> protocols_of(const ClassSet& s) {
  std::vector<ProtocolId> out;
  for (int c : s) out.push_back(protocol_from_class(c));
  return out;
}

struct Counts {
  int exact = 0, single = 0, single_exact = 0;
};

// Set-theoretic definitions, written independently of the mask arithmetic.
void tally(const ClassSet& pred, const ClassSet& truth, Counts& c) {
  ClassSet inter;
  std::set_intersection(pred.begin(), pred.end(), truth.begin(), truth.end(), std::inserter(inter, inter.end()));
  c.exact += pred == truth;
  c.single += !inter.empty();
  c.single_exact += !pred.empty() && std::includes(truth.begin(), truth.end(), pred.begin(), pred.end());
}

// Scores that reproduce `pred` under a 0.5 threshold.
Eigen::RowVectorXd scores_for(const ClassSet& pred, RandomSource& rng) {
  std::uniform_real_distribution<double> hi(0.5, 1.0), lo(0.0, 0.4999);
  Eigen::RowVectorXd s(5);
  for (int c = 0; c < 5; ++c) s[c] = pred.count(c) ? hi(rng) : lo(rng);
  return s;
}

}  // namespace

TEST_CASE("set accuracies match brute-force enumeration exactly") {
  RandomSource rng(1);
  std::uniform_int_distribution<int> truth_bits(1, 31), samples(1, 40), pred_bits(0, 31);
  for (int instance = 0; instance < 1000; ++instance) {
    const int n = samples(rng);
    std::vector<ClassSet> preds, truths;
    for (int i = 0; i < n; ++i) {
      truths.push_back(subset_of(truth_bits(rng)));
      preds.push_back(subset_of(pred_bits(rng)));
    }
    // every predicted subset against the first truth
    for (int bits = 0; bits < 32; ++bits) {
      preds.push_back(subset_of(bits));
      truths.push_back(truths.front());
    }
    Counts c;
    Eigen::MatrixXd scores(Index(preds.size()), 5);
    std::vector<std::vector<ProtocolId>> truth_lists;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      tally(preds[i], truths[i], c);
      scores.row(Index(i)) = scores_for(preds[i], rng);
      truth_lists.push_back(protocols_of(truths[i]));
    }
    const double total = static_cast<double>(preds.size());
    const MultiLabelMetrics m = multilabel_metrics(scores, truth_lists);
    CHECK(m.exact == c.exact / total);
    CHECK(m.single == c.single / total);
    CHECK(m.single_exact == c.single_exact / total);
    CHECK(m.single >= m.single_exact);
    CHECK(m.single_exact >= m.exact);
    for (std::size_t k = 0; k < m.precision.size(); ++k) {
      CHECK(m.precision[k] >= 0.0);
      CHECK(m.precision[k] <= 1.0);
      CHECK(m.recall[k] >= 0.0);
      CHECK(m.recall[k] <= 1.0);
    }
  }
}

TEST_CASE("set accuracy examples") {
  const LabelMask b = to_mask({ProtocolId::B80211});
  const LabelMask bg = to_mask({ProtocolId::B80211, ProtocolId::G80211});
  const LabelMask bax = to_mask({ProtocolId::B80211, ProtocolId::AX80211});

  SetAccuracy a = set_accuracy({b}, {bg});
  CHECK(a.exact == 0.0);
  CHECK(a.single == 1.0);
  CHECK(a.single_exact == 1.0);

  a = set_accuracy({bax}, {bg});
  CHECK(a.exact == 0.0);
  CHECK(a.single == 1.0);
  CHECK(a.single_exact == 0.0);

  a = set_accuracy({0}, {bg});
  CHECK(a.exact == 0.0);
  CHECK(a.single == 0.0);
  CHECK(a.single_exact == 0.0);

  CHECK_THROWS_AS(set_accuracy({b, b}, {b}), Error);
}

TEST_CASE("perfect predictions score 1 everywhere") {
  RandomSource rng(2);
  std::uniform_int_distribution<int> bits(1, 31);
  const Index n = 200;
  Eigen::MatrixXd scores(n, 5);
  std::vector<std::vector<ProtocolId>> truth;
  for (Index i = 0; i < n; ++i) {
    const ClassSet t = subset_of(bits(rng));
    truth.push_back(protocols_of(t));
    for (int c = 0; c < 5; ++c) scores(i, c) = t.count(c) ? 0.9 : 0.1;
  }
  const MultiLabelMetrics m = multilabel_metrics(scores, truth);
  CHECK(m.exact == 1.0);
  CHECK(m.single == 1.0);
  CHECK(m.single_exact == 1.0);
  CHECK(m.auc == 1.0);
  for (double p : m.precision) CHECK(p == 1.0);
  for (double r : m.recall) CHECK(r == 1.0);
}

TEST_CASE("roc_auc of a perfect and a random scorer") {
  RandomSource rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution coin(0.3);
  const int n = 10000;
  std::vector<double> perfect, random;
  std::vector<bool> label;
  for (int i = 0; i < n; ++i) {
    const bool y = coin(rng);
    label.push_back(y);
    perfect.push_back(y ? 1.0 + u(rng) : u(rng));
    random.push_back(u(rng));
  }
  CHECK(roc_auc(perfect, label) == 1.0);
  CHECK(std::abs(roc_auc(random, label) - 0.5) < 0.05);
  CHECK(std::isnan(roc_auc({0.1, 0.2}, {true, true})));
}

TEST_CASE("roc_auc matches pairwise counting with ties") {
  RandomSource rng(4);
  std::uniform_int_distribution<int> level(0, 5);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s;
    std::vector<bool> y;
    for (int i = 0; i < 60; ++i) {
      s.push_back(level(rng));
      y.push_back(coin(rng));
    }
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = 0; j < s.size(); ++j) {
        if (!y[i] || y[j]) continue;
        pairs += 1.0;
        wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
    }
    if (pairs == 0.0) continue;
    CHECK(roc_auc(s, y) == doctest::Approx(wins / pairs).epsilon(1e-12));
  }
}

TEST_CASE("pair rates break down two-protocol truths") {
  Eigen::MatrixXd scores(3, 5);
  scores << 0.1, 0.9, 0.8, 0.1, 0.1,  //
      0.1, 0.9, 0.2, 0.1, 0.1,        //
      0.1, 0.1, 0.9, 0.1, 0.1;
  const std::vector<std::vector<ProtocolId>> truth(3, {ProtocolId::G80211, ProtocolId::N80211});
  const MultiLabelMetrics m = multilabel_metrics(scores, truth);
  REQUIRE(m.pair_rates.size() == 1);
  const PairRate& r = m.pair_rates.front();
  CHECK(r.count == 3);
  CHECK(r.incumbent_detected == doctest::Approx(2.0 / 3.0));
  CHECK(r.interferer_detected == doctest::Approx(2.0 / 3.0));
  CHECK(r.both_detected == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("thresholds outside (0, 1) are rejected") {
  const Eigen::MatrixXd scores = Eigen::MatrixXd::Constant(1, 5, 0.5);
  const std::vector<std::vector<ProtocolId>> truth{{ProtocolId::B80211}};
  for (double t : {0.0, 1.0, -0.5, 2.0}) {
    try {
      multilabel_metrics(scores, truth, t);
      FAIL("accepted threshold " << t);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidSpec);
    }
  }
}

TEST_CASE("confusion matrix invariants") {
  RandomSource rng(5);
  std::uniform_int_distribution<int> cls(0, 3);
  ConfusionMatrix cm(4);
  int correct = 0;
  std::array<int, 4> support{};
  for (int i = 0; i < 500; ++i) {
    const int t = cls(rng), p = cls(rng);
    cm.add(t, p);
    correct += t == p;
    ++support[std::size_t(t)];
  }
  CHECK(cm.total() == 500);
  CHECK(cm.accuracy() == correct / 500.0);
  for (int c = 0; c < 4; ++c) CHECK(cm.support(c) == support[std::size_t(c)]);
  CHECK_THROWS_AS(cm.add(4, 0), Error);
  CHECK(ConfusionMatrix(4).accuracy() == 0.0);
}

TEST_CASE("spearman correlation") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3, 4}, {1, 4, 9, 16}) == doctest::Approx(1.0));
  CHECK(std::isnan(spearman({1, 2, 3}, {5, 5, 5})));
  // x = 1..5, y with a tie: ranks (1, 2.5, 2.5, 4, 5)
  CHECK(spearman({1, 2, 3, 4, 5}, {1, 2, 2, 3, 4}) == doctest::Approx(0.9746794344808963));
  CHECK(average_ranks({3.0, 1.0, 3.0}) == std::vector<double>{2.5, 1.0, 2.5});
}
