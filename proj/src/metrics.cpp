#include "protoid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "protoid/error.hpp"

namespace protoid {

LabelMask to_mask(const std::vector<ProtocolId>& protocols) {
  LabelMask m = 0;
  for (ProtocolId p : protocols) m |= LabelMask{1} << class_index(p);
  return m;
}

LabelMask threshold_mask(const Eigen::Ref<const Eigen::RowVectorXd>& scores, double threshold) {
  LabelMask m = 0;
  for (Index c = 0; c < scores.size(); ++c) {
    if (scores[c] >= threshold) m |= LabelMask{1} << c;
  }
  return m;
}

SetAccuracy set_accuracy(const std::vector<LabelMask>& predicted, const std::vector<LabelMask>& truth) {
  require(predicted.size() == truth.size() && !truth.empty(), ErrorKind::ShapeError,
          "predicted and truth sets must be non-empty and of equal count");
  std::size_t exact = 0, single = 0, single_exact = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const LabelMask p = predicted[i];
    const LabelMask t = truth[i];
    exact += p == t;
    single += (p & t) != 0;
    single_exact += p != 0 && (p & ~t) == 0;
  }
  const auto n = static_cast<double>(truth.size());
  return {static_cast<double>(exact) / n, static_cast<double>(single) / n, static_cast<double>(single_exact) / n};
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double roc_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  require(scores.size() == positive.size(), ErrorKind::ShapeError, "scores and labels differ in length");
  const auto n_pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const double n_neg = static_cast<double>(positive.size()) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const std::vector<double> ranks = average_ranks(scores);
  double sum = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (positive[i]) sum += ranks[i];
  }
  return (sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

MultiLabelMetrics multilabel_metrics(const Eigen::MatrixXd& scores, const std::vector<std::vector<ProtocolId>>& truth,
                                     double threshold) {
  require(threshold > 0.0 && threshold < 1.0, ErrorKind::InvalidSpec, "threshold must be in (0, 1)");
  require(scores.rows() == static_cast<Index>(truth.size()) && scores.rows() > 0, ErrorKind::ShapeError,
          "one non-empty truth set per score row required");
  const Index n = scores.rows();
  const Index classes = scores.cols();
  MultiLabelMetrics m;
  m.samples = n;
  std::vector<LabelMask> pred(static_cast<std::size_t>(n)), tmask(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    pred[static_cast<std::size_t>(i)] = threshold_mask(scores.row(i), threshold);
    tmask[static_cast<std::size_t>(i)] = to_mask(truth[static_cast<std::size_t>(i)]);
  }
  const SetAccuracy acc = set_accuracy(pred, tmask);
  m.exact = acc.exact;
  m.single = acc.single;
  m.single_exact = acc.single_exact;

  double auc_sum = 0.0;
  int auc_classes = 0;
  for (Index c = 0; c < classes; ++c) {
    const LabelMask bit = LabelMask{1} << c;
    Index tp = 0, fp = 0, fn = 0;
    std::vector<double> s(static_cast<std::size_t>(n));
    std::vector<bool> pos(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const bool p = (pred[k] & bit) != 0;
      const bool t = (tmask[k] & bit) != 0;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
      s[k] = scores(i, c);
      pos[k] = t;
    }
    m.support.push_back(tp + fn);
    m.precision.push_back(tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0);
    m.recall.push_back(tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0);
    const double a = roc_auc(s, pos);
    if (!std::isnan(a)) {
      auc_sum += a;
      ++auc_classes;
    }
  }
  m.auc = auc_classes > 0 ? auc_sum / auc_classes : std::numeric_limits<double>::quiet_NaN();

  std::map<std::pair<int, int>, PairRate> pairs;
  for (Index i = 0; i < n; ++i) {
    const auto& t = truth[static_cast<std::size_t>(i)];
    if (t.size() != 2) continue;
    PairRate& r = pairs[{class_index(t[0]), class_index(t[1])}];
    r.incumbent = t[0];
    r.interferer = t[1];
    const LabelMask p = pred[static_cast<std::size_t>(i)];
    const bool a = (p >> class_index(t[0])) & 1U;
    const bool b = (p >> class_index(t[1])) & 1U;
    ++r.count;
    r.incumbent_detected += a;
    r.interferer_detected += b;
    r.both_detected += a && b;
  }
  for (auto& [key, r] : pairs) {
    const auto c = static_cast<double>(r.count);
    r.incumbent_detected /= c;
    r.interferer_detected /= c;
    r.both_detected /= c;
    m.pair_rates.push_back(r);
  }
  return m;
}

void ConfusionMatrix::add(int truth, int predicted) {
  require(truth >= 0 && truth < counts.rows() && predicted >= 0 && predicted < counts.cols(),
          ErrorKind::InvalidLabel, "confusion index out of range");
  ++counts(truth, predicted);
}

double ConfusionMatrix::accuracy() const {
  const Index t = total();
  return t > 0 ? static_cast<double>(counts.trace()) / static_cast<double>(t) : 0.0;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::ShapeError, "spearman needs two equal-length series");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace protoid
