#pragma once

#include <string>

#include "protoid/network.hpp"
#include "protoid/tokenizer.hpp"

namespace protoid {

struct TransformerConfig {
  Index num_layers = 2;
  Index d_model = 128;  ///< must equal 2*S
  Index num_heads = 4;
  Index d_ff = 512;
  Index fc_hidden = 380;
  Index num_classes = 4;
  Index seq_len = 24;  ///< M
  bool multi_label = false;
  bool positional_encoding = false;

  /// M=64, S=128 preset, about 6.7M parameters.
  static TransformerConfig large(Index num_classes = 4);
  /// M=24, S=64 preset, about 1.6M parameters.
  static TransformerConfig small(Index num_classes = 4);
  /// Matches a tokenizer with default heads/d_ff ratios.
  static TransformerConfig for_tokens(const TokenizationConfig& tok, Index num_heads, Index fc_hidden,
                                      Index num_classes = 4);
};

void validate(const TransformerConfig& cfg);

/// Exact scalar count of a Transformer built from `cfg`.
Index param_count(const TransformerConfig& cfg);

/// Encoder-only classifier:
///   per-feature affine input norm -> L x [MHSA + add & LN, FFN(ReLU) + add & LN]
///   -> flatten M*d -> FC(ReLU) -> output -> LogSoftmax | Sigmoid
template <typename Scalar>
class Transformer final : public Network<Scalar> {
 public:
  explicit Transformer(const TransformerConfig& cfg);

  const TransformerConfig& config() const { return cfg_; }

  std::string family() const override { return "transformer"; }
  Index seq_len() const override { return cfg_.seq_len; }
  Index token_dim() const override { return cfg_.d_model; }
  Index num_classes() const override { return cfg_.num_classes; }
  OutputMode output_mode() const override {
    return cfg_.multi_label ? OutputMode::Sigmoid : OutputMode::LogSoftmax;
  }

  void initialize(RandomSource& rng) override;
  RowMatrix<Scalar> forward(const RowMatrix<Scalar>& tokens) const override;
  RowMatrix<Scalar> logits(const RowMatrix<Scalar>& tokens) const override;
  Scalar loss_and_gradient(const RowMatrix<Scalar>& tokens, const RowMatrix<Scalar>& targets,
                           Vector<Scalar>& grad) const override;

 private:
  struct LayerIds {
    Index wq, bq, wk, bk, wv, bv, wo, bo, ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b;
  };
  struct LayerCache;
  struct Cache;

  void run(const RowMatrix<Scalar>& tokens, Cache& cache) const;

  TransformerConfig cfg_;
  Index in_g_ = 0, in_b_ = 0;
  std::vector<LayerIds> layers_;
  Index fc_w_ = 0, fc_b_ = 0, out_w_ = 0, out_b_ = 0;
  RowMatrix<Scalar> positional_;
};

/// Sinusoidal table, M x d.
template <typename Scalar>
RowMatrix<Scalar> sinusoidal_positions(Index m, Index d);

}  // namespace protoid
