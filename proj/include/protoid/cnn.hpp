#pragma once

#include <string>

#include "protoid/network.hpp"

namespace protoid {

/// 1-D CNN over a single 1 x input_len interleaved IQ row:
/// conv(1->c1, k1, same) ReLU -> conv(c1->c2, k2, same) ReLU -> flatten
/// -> dense(hidden) ReLU -> dense(classes) -> LogSoftmax.
struct CnnConfig {
  Index input_len = 512;
  Index conv1_channels = 128;
  Index conv1_kernel = 7;
  Index conv2_channels = 64;
  Index conv2_kernel = 5;
  Index dense_hidden = 124;
  Index num_classes = 4;
};

void validate(const CnnConfig& cfg);
Index param_count(const CnnConfig& cfg);

template <typename Scalar>
class Cnn final : public Network<Scalar> {
 public:
  explicit Cnn(const CnnConfig& cfg);

  const CnnConfig& config() const { return cfg_; }

  std::string family() const override { return "cnn"; }
  Index seq_len() const override { return 1; }
  Index token_dim() const override { return cfg_.input_len; }
  Index num_classes() const override { return cfg_.num_classes; }
  OutputMode output_mode() const override { return OutputMode::LogSoftmax; }

  void initialize(RandomSource& rng) override;
  RowMatrix<Scalar> forward(const RowMatrix<Scalar>& tokens) const override;
  RowMatrix<Scalar> logits(const RowMatrix<Scalar>& tokens) const override;
  Scalar loss_and_gradient(const RowMatrix<Scalar>& tokens, const RowMatrix<Scalar>& targets,
                           Vector<Scalar>& grad) const override;

 private:
  struct Cache;
  void run(const RowMatrix<Scalar>& tokens, Cache& cache) const;

  CnnConfig cfg_;
  Index c1w_ = 0, c1b_ = 0, c2w_ = 0, c2b_ = 0, d1w_ = 0, d1b_ = 0, d2w_ = 0, d2b_ = 0;
};

}  // namespace protoid
