#include "protoid/network.hpp"

#include <algorithm>
#include <cmath>

#include "protoid/error.hpp"

namespace protoid {

template <typename Scalar>
Index Network<Scalar>::batch_size_of(const RowMatrix<Scalar>& tokens) const {
  return tokens.rows() / seq_len();
}

template <typename Scalar>
void Network<Scalar>::check_input(const RowMatrix<Scalar>& tokens) const {
  require(tokens.cols() == token_dim(), ErrorKind::ShapeError,
          "token width " + std::to_string(tokens.cols()) + " != " + std::to_string(token_dim()));
  require(tokens.rows() > 0 && tokens.rows() % seq_len() == 0, ErrorKind::ShapeError,
          "token rows " + std::to_string(tokens.rows()) + " not a positive multiple of M=" +
              std::to_string(seq_len()));
  require(params_.size() == layout_.total(), ErrorKind::ShapeError, "parameter vector size mismatch");
}

template <typename Scalar>
RowMatrix<Scalar> one_hot(const std::vector<int>& labels, Index num_classes) {
  RowMatrix<Scalar> t = RowMatrix<Scalar>::Zero(static_cast<Index>(labels.size()), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < num_classes, ErrorKind::InvalidLabel,
            "label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(num_classes) + ")");
    t(static_cast<Index>(i), labels[i]) = Scalar(1);
  }
  return t;
}

template <typename Scalar>
void validate_targets(const RowMatrix<Scalar>& targets, Index num_classes, OutputMode mode) {
  require(targets.cols() == num_classes, ErrorKind::ShapeError, "target width != number of classes");
  for (Index i = 0; i < targets.rows(); ++i) {
    int ones = 0;
    for (Index c = 0; c < targets.cols(); ++c) {
      const Scalar v = targets(i, c);
      require(v == Scalar(0) || v == Scalar(1), ErrorKind::InvalidLabel, "targets must be 0 or 1");
      ones += v == Scalar(1);
    }
    if (mode == OutputMode::LogSoftmax) {
      require(ones == 1, ErrorKind::InvalidLabel, "single-label target row must be one-hot");
    }
  }
}

template <typename Scalar>
Scalar loss(const RowMatrix<Scalar>& scores, const RowMatrix<Scalar>& targets, OutputMode mode) {
  require(scores.rows() == targets.rows() && scores.cols() == targets.cols() && scores.rows() > 0,
          ErrorKind::ShapeError, "scores and targets disagree in shape");
  validate_targets(targets, scores.cols(), mode);
  const Scalar b = static_cast<Scalar>(scores.rows());
  if (mode == OutputMode::LogSoftmax) {
    return -(scores.array() * targets.array()).sum() / b;
  }
  const Scalar lo(-100);
  Scalar total(0);
  for (Index i = 0; i < scores.rows(); ++i) {
    for (Index c = 0; c < scores.cols(); ++c) {
      const Scalar p = scores(i, c);
      const Scalar lp = std::max(std::log(p), lo);
      const Scalar lq = std::max(std::log(Scalar(1) - p), lo);
      total -= targets(i, c) * lp + (Scalar(1) - targets(i, c)) * lq;
    }
  }
  return total / (b * static_cast<Scalar>(scores.cols()));
}

template <typename Scalar>
Scalar loss(const RowMatrix<Scalar>& scores, const std::vector<int>& labels) {
  require(static_cast<Index>(labels.size()) == scores.rows(), ErrorKind::ShapeError,
          "one label per score row required");
  return loss(scores, one_hot<Scalar>(labels, scores.cols()), OutputMode::LogSoftmax);
}

template <typename Scalar>
RowMatrix<Scalar> log_softmax_rows(const RowMatrix<Scalar>& logits) {
  RowMatrix<Scalar> out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const Scalar m = logits.row(i).maxCoeff();
    const Scalar lse = m + std::log((logits.row(i).array() - m).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

template <typename Scalar>
RowMatrix<Scalar> sigmoid(const RowMatrix<Scalar>& logits) {
  return logits.unaryExpr([](Scalar z) {
    if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
    const Scalar e = std::exp(z);
    return e / (Scalar(1) + e);
  });
}

template <typename Scalar>
RowMatrix<Scalar> activate(const RowMatrix<Scalar>& logits, OutputMode mode) {
  return mode == OutputMode::LogSoftmax ? log_softmax_rows(logits) : sigmoid(logits);
}

template <typename Scalar>
Scalar cross_entropy(const RowMatrix<Scalar>& logits, const RowMatrix<Scalar>& targets) {
  return loss(log_softmax_rows(logits), targets, OutputMode::LogSoftmax);
}

namespace {

template <typename Scalar>
Scalar softplus(Scalar z) {
  return z > Scalar(0) ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

template <typename Scalar>
Scalar loss_from_logits(const RowMatrix<Scalar>& logits, const RowMatrix<Scalar>& targets, OutputMode mode,
                        RowMatrix<Scalar>& dlogits) {
  require(logits.rows() == targets.rows() && logits.cols() == targets.cols(), ErrorKind::ShapeError,
          "logits and targets disagree in shape");
  validate_targets(targets, logits.cols(), mode);
  const Scalar b = static_cast<Scalar>(logits.rows());
  if (mode == OutputMode::LogSoftmax) {
    const RowMatrix<Scalar> lp = log_softmax_rows(logits);
    dlogits = (lp.array().exp() - targets.array()) / b;
    return -(lp.array() * targets.array()).sum() / b;
  }
  const Scalar n = b * static_cast<Scalar>(logits.cols());
  Scalar total(0);
  for (Index i = 0; i < logits.rows(); ++i) {
    for (Index c = 0; c < logits.cols(); ++c) {
      const Scalar z = logits(i, c);
      const Scalar t = targets(i, c);
      // -log p = softplus(-z), -log(1-p) = softplus(z)
      total += t * softplus(-z) + (Scalar(1) - t) * softplus(z);
    }
  }
  dlogits = (sigmoid(logits).array() - targets.array()) / n;
  return total / n;
}

template <typename Scalar>
std::vector<int> argmax_rows(const RowMatrix<Scalar>& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    scores.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

template <typename Scalar>
RowMatrix<Scalar> stack_tokens(const std::vector<RowMatrix<Scalar>>& sequences) {
  require(!sequences.empty(), ErrorKind::InvalidInput, "no sequences to stack");
  const Index m = sequences.front().rows();
  const Index d = sequences.front().cols();
  RowMatrix<Scalar> out(m * static_cast<Index>(sequences.size()), d);
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    require(sequences[i].rows() == m && sequences[i].cols() == d, ErrorKind::ShapeError,
            "sequences differ in shape");
    out.middleRows(static_cast<Index>(i) * m, m) = sequences[i];
  }
  return out;
}

double gradient_check(Network<double>& net, const RowMatrix<double>& tokens, const RowMatrix<double>& targets,
                      double step, Index max_per_tensor, double floor) {
  Vector<double> analytic;
  net.loss_and_gradient(tokens, targets, analytic);
  Vector<double>& p = net.parameters();
  Vector<double> unused;
  double worst = 0.0;
  for (const TensorSlot& slot : net.layout().slots()) {
    const Index n = max_per_tensor > 0 ? std::min(max_per_tensor, slot.size()) : slot.size();
    // Spread the probed entries across the tensor.
    const Index hop = std::max<Index>(1, slot.size() / std::max<Index>(n, 1));
    for (Index k = 0; k < n; ++k) {
      const Index idx = slot.offset + std::min(k * hop, slot.size() - 1);
      const double saved = p[idx];
      p[idx] = saved + step;
      const double up = net.loss_and_gradient(tokens, targets, unused);
      p[idx] = saved - step;
      const double down = net.loss_and_gradient(tokens, targets, unused);
      p[idx] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err =
          std::abs(analytic[idx] - numeric) / std::max(std::abs(analytic[idx]) + std::abs(numeric), floor);
      worst = std::max(worst, err);
    }
  }
  return worst;
}

#define PROTOID_INSTANTIATE(S)                                                                       \
  template class Network<S>;                                                                         \
  template RowMatrix<S> one_hot<S>(const std::vector<int>&, Index);                                  \
  template void validate_targets<S>(const RowMatrix<S>&, Index, OutputMode);                         \
  template S loss<S>(const RowMatrix<S>&, const RowMatrix<S>&, OutputMode);                          \
  template S loss<S>(const RowMatrix<S>&, const std::vector<int>&);                                  \
  template S cross_entropy<S>(const RowMatrix<S>&, const RowMatrix<S>&);                             \
  template RowMatrix<S> log_softmax_rows<S>(const RowMatrix<S>&);                                    \
  template RowMatrix<S> sigmoid<S>(const RowMatrix<S>&);                                             \
  template RowMatrix<S> activate<S>(const RowMatrix<S>&, OutputMode);                                \
  template S loss_from_logits<S>(const RowMatrix<S>&, const RowMatrix<S>&, OutputMode, RowMatrix<S>&); \
  template std::vector<int> argmax_rows<S>(const RowMatrix<S>&);                                     \
  template RowMatrix<S> stack_tokens<S>(const std::vector<RowMatrix<S>>&);

PROTOID_INSTANTIATE(float)
PROTOID_INSTANTIATE(double)

#undef PROTOID_INSTANTIATE

}  // namespace protoid
