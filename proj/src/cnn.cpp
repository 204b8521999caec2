#include "protoid/cnn.hpp"

#include <algorithm>
#include <cmath>

#include "protoid/error.hpp"

namespace protoid {

void validate(const CnnConfig& c) {
  require(c.input_len > 0 && c.conv1_channels > 0 && c.conv2_channels > 0 && c.dense_hidden > 0,
          ErrorKind::InvalidSpec, "CNN sizes must be positive");
  require(c.conv1_kernel > 0 && c.conv1_kernel % 2 == 1 && c.conv2_kernel > 0 && c.conv2_kernel % 2 == 1,
          ErrorKind::InvalidSpec, "CNN kernels must be odd for same padding");
  require(c.num_classes >= 2, ErrorKind::InvalidSpec, "need at least two classes");
}

Index param_count(const CnnConfig& c) {
  validate(c);
  return (c.conv1_channels * c.conv1_kernel + c.conv1_channels) +
         (c.conv2_channels * c.conv2_kernel * c.conv1_channels + c.conv2_channels) +
         (c.dense_hidden * c.input_len * c.conv2_channels + c.dense_hidden) +
         (c.num_classes * c.dense_hidden + c.num_classes);
}

namespace {

/// Output rows t whose input row t + k - pad is inside [0, len).
struct ShiftRange {
  Index out_lo;
  Index in_lo;
  Index count;
};

ShiftRange shift_range(Index len, Index k, Index pad) {
  const Index lo = std::max<Index>(0, pad - k);
  const Index hi = std::min<Index>(len, len + pad - k);
  return {lo, lo + k - pad, std::max<Index>(0, hi - lo)};
}

}  // namespace

template <typename Scalar>
struct Cnn<Scalar>::Cache {
  Index batch = 0;
  RowMatrix<Scalar> a1;  ///< (B*L) x C1 pre-activation
  RowMatrix<Scalar> r2;  ///< (B*L) x C2 post-activation
  RowMatrix<Scalar> hidden_pre, hidden, logits;
};

template <typename Scalar>
Cnn<Scalar>::Cnn(const CnnConfig& cfg) : cfg_(cfg) {
  validate(cfg_);
  ParameterLayout& L = this->layout_;
  c1w_ = L.add("conv1.w", cfg_.conv1_channels, cfg_.conv1_kernel);
  c1b_ = L.add("conv1.b", cfg_.conv1_channels, 1);
  c2w_ = L.add("conv2.w", cfg_.conv2_channels, cfg_.conv2_kernel * cfg_.conv1_channels);
  c2b_ = L.add("conv2.b", cfg_.conv2_channels, 1);
  d1w_ = L.add("dense1.w", cfg_.dense_hidden, cfg_.input_len * cfg_.conv2_channels);
  d1b_ = L.add("dense1.b", cfg_.dense_hidden, 1);
  d2w_ = L.add("dense2.w", cfg_.num_classes, cfg_.dense_hidden);
  d2b_ = L.add("dense2.b", cfg_.num_classes, 1);
  this->params_ = Vector<Scalar>::Zero(L.total());
}

template <typename Scalar>
void Cnn<Scalar>::initialize(RandomSource& rng) {
  const ParameterLayout& L = this->layout_;
  auto init = [&](Index w, Index b) {
    std::uniform_real_distribution<double> u(-1.0 / std::sqrt(static_cast<double>(L[w].cols)),
                                             1.0 / std::sqrt(static_cast<double>(L[w].cols)));
    for (Index id : {w, b}) {
      auto v = vview(this->params_, L[id]);
      for (Index i = 0; i < v.size(); ++i) v[i] = static_cast<Scalar>(u(rng));
    }
  };
  init(c1w_, c1b_);
  init(c2w_, c2b_);
  init(d1w_, d1b_);
  init(d2w_, d2b_);
}

template <typename Scalar>
void Cnn<Scalar>::run(const RowMatrix<Scalar>& tokens, Cache& c) const {
  this->check_input(tokens);
  const Vector<Scalar>& p = this->params_;
  const ParameterLayout& L = this->layout_;
  const Index len = cfg_.input_len;
  const Index c1 = cfg_.conv1_channels;
  const Index c2 = cfg_.conv2_channels;
  const Index p1 = cfg_.conv1_kernel / 2;
  const Index p2 = cfg_.conv2_kernel / 2;
  const Index batch = tokens.rows();
  c.batch = batch;
  const auto w1 = view(p, L[c1w_]);
  const auto w2 = view(p, L[c2w_]);

  c.a1.resize(batch * len, c1);
  c.r2.resize(batch * len, c2);
  RowMatrix<Scalar> r1(len, c1);
  for (Index b = 0; b < batch; ++b) {
    auto a1 = c.a1.middleRows(b * len, len);
    a1.rowwise() = vview(p, L[c1b_]).transpose();
    for (Index k = 0; k < cfg_.conv1_kernel; ++k) {
      const ShiftRange s = shift_range(len, k, p1);
      a1.middleRows(s.out_lo, s.count).noalias() +=
          tokens.row(b).segment(s.in_lo, s.count).transpose() * w1.col(k).transpose();
    }
    r1 = a1.cwiseMax(Scalar(0));

    auto a2 = c.r2.middleRows(b * len, len);
    a2.rowwise() = vview(p, L[c2b_]).transpose();
    for (Index k = 0; k < cfg_.conv2_kernel; ++k) {
      const ShiftRange s = shift_range(len, k, p2);
      a2.middleRows(s.out_lo, s.count).noalias() +=
          r1.middleRows(s.in_lo, s.count) * w2.block(0, k * c1, c2, c1).transpose();
    }
    a2 = a2.cwiseMax(Scalar(0));
  }

  const Eigen::Map<const RowMatrix<Scalar>> flat(c.r2.data(), batch, len * c2);
  c.hidden_pre.noalias() = flat * view(p, L[d1w_]).transpose();
  c.hidden_pre.rowwise() += vview(p, L[d1b_]).transpose();
  c.hidden = c.hidden_pre.cwiseMax(Scalar(0));
  c.logits.noalias() = c.hidden * view(p, L[d2w_]).transpose();
  c.logits.rowwise() += vview(p, L[d2b_]).transpose();
}

template <typename Scalar>
RowMatrix<Scalar> Cnn<Scalar>::logits(const RowMatrix<Scalar>& tokens) const {
  Cache c;
  run(tokens, c);
  return c.logits;
}

template <typename Scalar>
RowMatrix<Scalar> Cnn<Scalar>::forward(const RowMatrix<Scalar>& tokens) const {
  return log_softmax_rows(logits(tokens));
}

template <typename Scalar>
Scalar Cnn<Scalar>::loss_and_gradient(const RowMatrix<Scalar>& tokens, const RowMatrix<Scalar>& targets,
                                      Vector<Scalar>& grad) const {
  Cache c;
  run(tokens, c);
  require(targets.rows() == c.batch, ErrorKind::ShapeError, "one target row per sequence required");
  RowMatrix<Scalar> dlogits;
  const Scalar value = loss_from_logits(c.logits, targets, OutputMode::LogSoftmax, dlogits);

  const Vector<Scalar>& p = this->params_;
  const ParameterLayout& L = this->layout_;
  grad = Vector<Scalar>::Zero(L.total());
  const Index len = cfg_.input_len;
  const Index c1 = cfg_.conv1_channels;
  const Index c2 = cfg_.conv2_channels;
  const Index p1 = cfg_.conv1_kernel / 2;
  const Index p2 = cfg_.conv2_kernel / 2;
  const Index batch = c.batch;

  view(grad, L[d2w_]).noalias() += dlogits.transpose() * c.hidden;
  vview(grad, L[d2b_]) += dlogits.colwise().sum().transpose();
  RowMatrix<Scalar> dhidden = dlogits * view(p, L[d2w_]);
  dhidden.array() *= (c.hidden_pre.array() > Scalar(0)).template cast<Scalar>();

  const Eigen::Map<const RowMatrix<Scalar>> flat(c.r2.data(), batch, len * c2);
  view(grad, L[d1w_]).noalias() += dhidden.transpose() * flat;
  vview(grad, L[d1b_]) += dhidden.colwise().sum().transpose();
  RowMatrix<Scalar> dflat = dhidden * view(p, L[d1w_]);

  const auto w2 = view(p, L[c2w_]);
  auto gw1 = view(grad, L[c1w_]);
  auto gw2 = view(grad, L[c2w_]);
  RowMatrix<Scalar> r1(len, c1), dr1(len, c1), da2(len, c2);
  for (Index b = 0; b < batch; ++b) {
    const auto a1 = c.a1.middleRows(b * len, len);
    const auto r2 = c.r2.middleRows(b * len, len);
    r1 = a1.cwiseMax(Scalar(0));
    da2 = Eigen::Map<const RowMatrix<Scalar>>(dflat.row(b).data(), len, c2);
    da2.array() *= (r2.array() > Scalar(0)).template cast<Scalar>();
    vview(grad, L[c2b_]) += da2.colwise().sum().transpose();
    dr1.setZero();
    for (Index k = 0; k < cfg_.conv2_kernel; ++k) {
      const ShiftRange s = shift_range(len, k, p2);
      gw2.block(0, k * c1, c2, c1).noalias() +=
          da2.middleRows(s.out_lo, s.count).transpose() * r1.middleRows(s.in_lo, s.count);
      dr1.middleRows(s.in_lo, s.count).noalias() +=
          da2.middleRows(s.out_lo, s.count) * w2.block(0, k * c1, c2, c1);
    }
    dr1.array() *= (a1.array() > Scalar(0)).template cast<Scalar>();
    vview(grad, L[c1b_]) += dr1.colwise().sum().transpose();
    for (Index k = 0; k < cfg_.conv1_kernel; ++k) {
      const ShiftRange s = shift_range(len, k, p1);
      gw1.col(k).noalias() +=
          dr1.middleRows(s.out_lo, s.count).transpose() * tokens.row(b).segment(s.in_lo, s.count).transpose();
    }
  }
  return value;
}

template class Cnn<float>;
template class Cnn<double>;

}  // namespace protoid
