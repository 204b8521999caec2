#pragma once

#include <vector>

#include "protoid/signal.hpp"

namespace protoid {

/// Splits a sequence of M*S complex samples into M slices ("tokens") of S
/// samples, each flattened to 2S interleaved reals.
struct TokenizationConfig {
  Index slices = 24;         ///< M
  Index slice_len = 64;      ///< S
  Index stride_samples = 0;  ///< hop between training sequences; 0 means M*S

  Index sequence_len() const { return slices * slice_len; }
  Index token_dim() const { return 2 * slice_len; }
  Index stride() const { return stride_samples > 0 ? stride_samples : sequence_len(); }

  static TokenizationConfig small() { return {24, 64, 0}; }
  static TokenizationConfig large() { return {64, 128, 0}; }
};

void validate(const TokenizationConfig& cfg);

/// Row k holds the interleaved samples [k*S, (k+1)*S) of the first M*S samples.
template <typename Scalar = float>
using TokenMatrix = RowMatrix<Scalar>;

template <typename Scalar = float>
TokenMatrix<Scalar> tokenize(const ComplexSignal& signal, const TokenizationConfig& cfg);

/// Inverse of tokenize: concatenated, deinterleaved rows.
template <typename Scalar>
CVector reassemble(const TokenMatrix<Scalar>& tokens);

/// Start offsets {0, stride, 2*stride, ...} whose sequences fit in total_len.
std::vector<Index> index_sequences(Index total_len, const TokenizationConfig& cfg);

}  // namespace protoid
