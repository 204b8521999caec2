#pragma once

#include <string>
#include <vector>

#include "protoid/parameters.hpp"
#include "protoid/signal.hpp"

namespace protoid {

enum class OutputMode {
  LogSoftmax,  ///< single-label; scores are log-probabilities
  Sigmoid,     ///< multi-label; scores are per-class probabilities
};

/// Common interface of the trainable classifiers. Parameters live in one flat
/// vector described by layout(). Inputs are B stacked token matrices, i.e. a
/// (B*M) x d row-major matrix.
template <typename Scalar>
class Network {
 public:
  virtual ~Network() = default;

  virtual std::string family() const = 0;
  virtual Index seq_len() const = 0;
  virtual Index token_dim() const = 0;
  virtual Index num_classes() const = 0;
  virtual OutputMode output_mode() const = 0;

  const ParameterLayout& layout() const { return layout_; }
  Vector<Scalar>& parameters() { return params_; }
  const Vector<Scalar>& parameters() const { return params_; }
  Index param_count() const { return layout_.total(); }

  virtual void initialize(RandomSource& rng) = 0;

  /// B x C scores.
  virtual RowMatrix<Scalar> forward(const RowMatrix<Scalar>& tokens) const = 0;

  /// Raw pre-activation outputs (B x C).
  virtual RowMatrix<Scalar> logits(const RowMatrix<Scalar>& tokens) const = 0;

  /// Mean loss over the batch; `grad` is resized and overwritten with dL/dparams.
  /// Single-label targets are one-hot rows, multi-label targets are {0,1} rows.
  virtual Scalar loss_and_gradient(const RowMatrix<Scalar>& tokens, const RowMatrix<Scalar>& targets,
                                   Vector<Scalar>& grad) const = 0;

  Index batch_size_of(const RowMatrix<Scalar>& tokens) const;

 protected:
  void check_input(const RowMatrix<Scalar>& tokens) const;

  ParameterLayout layout_;
  Vector<Scalar> params_;
};

/// One-hot rows from class indices; out-of-range index raises InvalidLabel.
template <typename Scalar>
RowMatrix<Scalar> one_hot(const std::vector<int>& labels, Index num_classes);

/// Checks targets against the mode: one-hot rows for LogSoftmax, {0,1} for Sigmoid.
template <typename Scalar>
void validate_targets(const RowMatrix<Scalar>& targets, Index num_classes, OutputMode mode);

/// Mean NLL of log-probabilities, or mean BCE of probabilities (logs clamped at -100).
template <typename Scalar>
Scalar loss(const RowMatrix<Scalar>& scores, const RowMatrix<Scalar>& targets, OutputMode mode);

/// Mean NLL against class indices.
template <typename Scalar>
Scalar loss(const RowMatrix<Scalar>& scores, const std::vector<int>& labels);

/// Cross-entropy of raw logits: log-softmax followed by NLL.
template <typename Scalar>
Scalar cross_entropy(const RowMatrix<Scalar>& logits, const RowMatrix<Scalar>& targets);

template <typename Scalar>
RowMatrix<Scalar> log_softmax_rows(const RowMatrix<Scalar>& logits);

template <typename Scalar>
RowMatrix<Scalar> sigmoid(const RowMatrix<Scalar>& logits);

/// Activation for `mode` applied to logits.
template <typename Scalar>
RowMatrix<Scalar> activate(const RowMatrix<Scalar>& logits, OutputMode mode);

/// Mean loss computed from logits, and dL/dlogits.
template <typename Scalar>
Scalar loss_from_logits(const RowMatrix<Scalar>& logits, const RowMatrix<Scalar>& targets, OutputMode mode,
                        RowMatrix<Scalar>& dlogits);

/// Row-wise argmax.
template <typename Scalar>
std::vector<int> argmax_rows(const RowMatrix<Scalar>& scores);

/// Stacks per-sequence token matrices into one (B*M) x d batch.
template <typename Scalar>
RowMatrix<Scalar> stack_tokens(const std::vector<RowMatrix<Scalar>>& sequences);

/// Central finite-difference check of loss_and_gradient. Parameters are
/// perturbed in place and restored. Returns the largest
/// |g_a - g_n| / max(|g_a| + |g_n|, floor) over all parameters (or over at most
/// `max_per_tensor` entries of each tensor when positive). The floor sits
/// above the finite-difference roundoff (about eps * loss / step) so that
/// exactly-zero gradients, such as the attention key bias, compare as equal.
/// A small step keeps the probe from straddling ReLU kinks.
double gradient_check(Network<double>& net, const RowMatrix<double>& tokens,
                      const RowMatrix<double>& targets, double step = 1e-5, Index max_per_tensor = 0,
                      double floor = 1e-6);

}  // namespace protoid
