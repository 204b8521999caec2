#pragma once

#include <cstdint>
#include <vector>

#include "protoid/signal.hpp"
#include "protoid/waveform.hpp"

namespace protoid {

/// Bit c set means class c is in the set.
using LabelMask = std::uint32_t;

LabelMask to_mask(const std::vector<ProtocolId>& protocols);

/// Classes whose score reaches `threshold`.
LabelMask threshold_mask(const Eigen::Ref<const Eigen::RowVectorXd>& scores, double threshold);

struct SetAccuracy {
  double exact = 0.0;         ///< predicted == truth
  double single = 0.0;        ///< predicted & truth != 0
  double single_exact = 0.0;  ///< predicted != 0 and predicted subset of truth
};

SetAccuracy set_accuracy(const std::vector<LabelMask>& predicted, const std::vector<LabelMask>& truth);

/// Mann-Whitney estimate of the ROC area with tied scores sharing ranks.
/// Returns NaN when either class is absent.
double roc_auc(const std::vector<double>& scores, const std::vector<bool>& positive);

struct PairRate {
  ProtocolId incumbent = ProtocolId::G80211;
  ProtocolId interferer = ProtocolId::N80211;
  Index count = 0;
  double incumbent_detected = 0.0;
  double interferer_detected = 0.0;
  double both_detected = 0.0;
};

struct MultiLabelMetrics {
  double exact = 0.0;
  double single = 0.0;
  double single_exact = 0.0;
  double auc = 0.0;  ///< macro one-vs-rest over classes with both outcomes present
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<Index> support;
  std::vector<PairRate> pair_rates;  ///< two-protocol truths, keyed by (first, second)
  Index samples = 0;
};

/// `scores` is N x C (Sigmoid outputs); truth lists are ordered (incumbent first).
MultiLabelMetrics multilabel_metrics(const Eigen::MatrixXd& scores,
                                     const std::vector<std::vector<ProtocolId>>& truth, double threshold = 0.5);

/// Rows are truth, columns are predictions.
struct ConfusionMatrix {
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> counts;

  explicit ConfusionMatrix(Index num_classes = 4)
      : counts(Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>::Zero(num_classes, num_classes)) {}

  void add(int truth, int predicted);
  Index total() const { return counts.sum(); }
  Index support(int cls) const { return counts.row(cls).sum(); }
  double accuracy() const;
};

/// Spearman rank correlation with average ranks for ties; NaN when either
/// input is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// 1-based average ranks.
std::vector<double> average_ranks(const std::vector<double>& v);

}  // namespace protoid
