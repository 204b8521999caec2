#include "protoid/tokenizer.hpp"

#include <string>

#include "protoid/error.hpp"

namespace protoid {

void validate(const TokenizationConfig& cfg) {
  require(cfg.slices >= 1 && cfg.slice_len >= 1 && cfg.stride_samples >= 0, ErrorKind::InvalidSpec,
          "tokenization needs M >= 1, S >= 1 and a non-negative stride");
}

template <typename Scalar>
TokenMatrix<Scalar> tokenize(const ComplexSignal& signal, const TokenizationConfig& cfg) {
  validate(cfg);
  const Index needed = cfg.sequence_len();
  require(signal.size() >= needed, ErrorKind::InsufficientSamples,
          "tokenize: need " + std::to_string(needed) + " samples, have " + std::to_string(signal.size()));
  TokenMatrix<Scalar> tokens(cfg.slices, cfg.token_dim());
  for (Index row = 0; row < cfg.slices; ++row) {
    for (Index j = 0; j < cfg.slice_len; ++j) {
      const Complex s = signal.samples[row * cfg.slice_len + j];
      tokens(row, 2 * j) = static_cast<Scalar>(s.real());
      tokens(row, 2 * j + 1) = static_cast<Scalar>(s.imag());
    }
  }
  return tokens;
}

template <typename Scalar>
CVector reassemble(const TokenMatrix<Scalar>& tokens) {
  require(tokens.cols() % 2 == 0, ErrorKind::ShapeError, "token width must be even");
  const Index s = tokens.cols() / 2;
  CVector out(tokens.rows() * s);
  for (Index row = 0; row < tokens.rows(); ++row) {
    for (Index j = 0; j < s; ++j) {
      out[row * s + j] = Complex(static_cast<double>(tokens(row, 2 * j)),
                                 static_cast<double>(tokens(row, 2 * j + 1)));
    }
  }
  return out;
}

template TokenMatrix<float> tokenize<float>(const ComplexSignal&, const TokenizationConfig&);
template TokenMatrix<double> tokenize<double>(const ComplexSignal&, const TokenizationConfig&);
template CVector reassemble<float>(const TokenMatrix<float>&);
template CVector reassemble<double>(const TokenMatrix<double>&);

std::vector<Index> index_sequences(Index total_len, const TokenizationConfig& cfg) {
  validate(cfg);
  std::vector<Index> offsets;
  const Index n = cfg.sequence_len();
  for (Index off = 0; off + n <= total_len; off += cfg.stride()) offsets.push_back(off);
  return offsets;
}

}  // namespace protoid
