#include "protoid/transformer.hpp"

#include <cmath>

#include "protoid/error.hpp"

namespace protoid {

TransformerConfig TransformerConfig::large(Index num_classes) {
  TransformerConfig c;
  c.d_model = 256;
  c.num_heads = 8;
  c.d_ff = 1024;
  c.fc_hidden = 310;
  c.seq_len = 64;
  c.num_classes = num_classes;
  return c;
}

TransformerConfig TransformerConfig::small(Index num_classes) {
  TransformerConfig c;
  c.num_classes = num_classes;
  return c;
}

TransformerConfig TransformerConfig::for_tokens(const TokenizationConfig& tok, Index num_heads, Index fc_hidden,
                                                Index num_classes) {
  TransformerConfig c;
  c.d_model = tok.token_dim();
  c.seq_len = tok.slices;
  c.num_heads = num_heads;
  c.d_ff = 4 * c.d_model;
  c.fc_hidden = fc_hidden;
  c.num_classes = num_classes;
  return c;
}

void validate(const TransformerConfig& c) {
  require(c.num_layers >= 0, ErrorKind::InvalidSpec, "num_layers must be >= 0");
  require(c.d_model > 0 && c.num_heads > 0 && c.d_ff > 0 && c.fc_hidden > 0 && c.seq_len > 0,
          ErrorKind::InvalidSpec, "transformer sizes must be positive");
  require(c.num_classes >= 2, ErrorKind::InvalidSpec, "need at least two classes");
  require(c.d_model % c.num_heads == 0, ErrorKind::InvalidSpec,
          "d_model " + std::to_string(c.d_model) + " not divisible by num_heads " + std::to_string(c.num_heads));
}

Index param_count(const TransformerConfig& c) {
  validate(c);
  const Index d = c.d_model;
  const Index per_layer = 4 * (d * d + d) + 2 * d + (d * c.d_ff + c.d_ff) + (c.d_ff * d + d) + 2 * d;
  const Index head = (c.seq_len * d * c.fc_hidden + c.fc_hidden) + (c.fc_hidden * c.num_classes + c.num_classes);
  return 2 * d + c.num_layers * per_layer + head;
}

template <typename Scalar>
RowMatrix<Scalar> sinusoidal_positions(Index m, Index d) {
  RowMatrix<Scalar> pe(m, d);
  for (Index pos = 0; pos < m; ++pos) {
    for (Index i = 0; i < d; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
      const double a = static_cast<double>(pos) * freq;
      pe(pos, i) = static_cast<Scalar>(i % 2 == 0 ? std::sin(a) : std::cos(a));
    }
  }
  return pe;
}

namespace {

template <typename S>
using RowMat = RowMatrix<S>;
template <typename S>
using RowRef = Eigen::Ref<const RowMat<S>>;

constexpr double kLayerNormEps = 1e-5;

template <typename S>
void linear(const RowRef<S>& x, const ConstMatrixMap<S>& w, const ConstVectorMap<S>& b, RowMat<S>& y) {
  y.noalias() = x * w.transpose();
  y.rowwise() += b.transpose();
}

template <typename S>
void linear_backward(const RowRef<S>& x, const RowRef<S>& dy, const ConstMatrixMap<S>& w, MatrixMap<S> dw,
                     VectorMap<S> db, RowMat<S>* dx) {
  dw.noalias() += dy.transpose() * x;
  db += dy.colwise().sum().transpose();
  if (dx != nullptr) dx->noalias() = dy * w;
}

template <typename S>
void layer_norm(const RowMat<S>& x, const ConstVectorMap<S>& g, const ConstVectorMap<S>& b, RowMat<S>& xhat,
                Vector<S>& rstd, RowMat<S>& y) {
  xhat.resize(x.rows(), x.cols());
  rstd.resize(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    const S mu = x.row(i).mean();
    xhat.row(i) = x.row(i).array() - mu;
    const S var = xhat.row(i).squaredNorm() / static_cast<S>(x.cols());
    const S r = S(1) / std::sqrt(var + static_cast<S>(kLayerNormEps));
    xhat.row(i) *= r;
    rstd[i] = r;
  }
  y = (xhat.array().rowwise() * g.transpose().array()).rowwise() + b.transpose().array();
}

template <typename S>
void layer_norm_backward(const RowMat<S>& dy, const RowMat<S>& xhat, const Vector<S>& rstd,
                         const ConstVectorMap<S>& g, VectorMap<S> dg, VectorMap<S> db, RowMat<S>& dx) {
  dg += (dy.array() * xhat.array()).colwise().sum().transpose().matrix();
  db += dy.colwise().sum().transpose();
  RowMat<S> dxhat = dy.array().rowwise() * g.transpose().array();
  dx.resize(dy.rows(), dy.cols());
  for (Index i = 0; i < dy.rows(); ++i) {
    const S m1 = dxhat.row(i).mean();
    const S m2 = (dxhat.row(i).array() * xhat.row(i).array()).mean();
    dx.row(i) = rstd[i] * (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2);
  }
}

template <typename S>
void softmax_rows_inplace(Eigen::Block<RowMat<S>> p) {
  for (Index r = 0; r < p.rows(); ++r) {
    const S mx = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - mx).exp();
    p.row(r) /= p.row(r).sum();
  }
}

template <typename S>
void fill_uniform(VectorMap<S> v, double bound, RandomSource& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Index i = 0; i < v.size(); ++i) v[i] = static_cast<S>(u(rng));
}

}  // namespace

template <typename Scalar>
struct Transformer<Scalar>::LayerCache {
  RowMat<Scalar> in, q, k, v, probs, ctx;
  RowMat<Scalar> xhat1, h1, f1, xhat2, h2;
  Vector<Scalar> rstd1, rstd2;
};

template <typename Scalar>
struct Transformer<Scalar>::Cache {
  Index batch = 0;
  RowMat<Scalar> x0;
  std::vector<LayerCache> layers;
  RowMat<Scalar> hidden_pre, hidden, logits;

  const RowMat<Scalar>& encoded() const { return layers.empty() ? x0 : layers.back().h2; }
};

template <typename Scalar>
Transformer<Scalar>::Transformer(const TransformerConfig& cfg) : cfg_(cfg) {
  validate(cfg_);
  const Index d = cfg_.d_model;
  ParameterLayout& L = this->layout_;
  in_g_ = L.add("input.gamma", d, 1);
  in_b_ = L.add("input.beta", d, 1);
  for (Index l = 0; l < cfg_.num_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerIds ids{};
    ids.wq = L.add(p + "attn.wq", d, d);
    ids.bq = L.add(p + "attn.bq", d, 1);
    ids.wk = L.add(p + "attn.wk", d, d);
    ids.bk = L.add(p + "attn.bk", d, 1);
    ids.wv = L.add(p + "attn.wv", d, d);
    ids.bv = L.add(p + "attn.bv", d, 1);
    ids.wo = L.add(p + "attn.wo", d, d);
    ids.bo = L.add(p + "attn.bo", d, 1);
    ids.ln1_g = L.add(p + "ln1.gamma", d, 1);
    ids.ln1_b = L.add(p + "ln1.beta", d, 1);
    ids.w1 = L.add(p + "ffn.w1", cfg_.d_ff, d);
    ids.b1 = L.add(p + "ffn.b1", cfg_.d_ff, 1);
    ids.w2 = L.add(p + "ffn.w2", d, cfg_.d_ff);
    ids.b2 = L.add(p + "ffn.b2", d, 1);
    ids.ln2_g = L.add(p + "ln2.gamma", d, 1);
    ids.ln2_b = L.add(p + "ln2.beta", d, 1);
    layers_.push_back(ids);
  }
  fc_w_ = L.add("head.fc.w", cfg_.fc_hidden, cfg_.seq_len * d);
  fc_b_ = L.add("head.fc.b", cfg_.fc_hidden, 1);
  out_w_ = L.add("head.out.w", cfg_.num_classes, cfg_.fc_hidden);
  out_b_ = L.add("head.out.b", cfg_.num_classes, 1);
  this->params_ = Vector<Scalar>::Zero(L.total());
  if (cfg_.positional_encoding) positional_ = sinusoidal_positions<Scalar>(cfg_.seq_len, d);
}

template <typename Scalar>
void Transformer<Scalar>::initialize(RandomSource& rng) {
  Vector<Scalar>& p = this->params_;
  const ParameterLayout& L = this->layout_;
  auto linear_init = [&](Index w, Index b) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(L[w].cols));
    fill_uniform<Scalar>(vview(p, L[w]), bound, rng);
    fill_uniform<Scalar>(vview(p, L[b]), bound, rng);
  };
  vview(p, L[in_g_]).setOnes();
  vview(p, L[in_b_]).setZero();
  for (const LayerIds& ids : layers_) {
    linear_init(ids.wq, ids.bq);
    linear_init(ids.wk, ids.bk);
    linear_init(ids.wv, ids.bv);
    linear_init(ids.wo, ids.bo);
    vview(p, L[ids.ln1_g]).setOnes();
    vview(p, L[ids.ln1_b]).setZero();
    linear_init(ids.w1, ids.b1);
    linear_init(ids.w2, ids.b2);
    vview(p, L[ids.ln2_g]).setOnes();
    vview(p, L[ids.ln2_b]).setZero();
  }
  linear_init(fc_w_, fc_b_);
  linear_init(out_w_, out_b_);
}

template <typename Scalar>
void Transformer<Scalar>::run(const RowMatrix<Scalar>& tokens, Cache& c) const {
  this->check_input(tokens);
  const Vector<Scalar>& p = this->params_;
  const ParameterLayout& L = this->layout_;
  const Index m = cfg_.seq_len;
  const Index d = cfg_.d_model;
  const Index heads = cfg_.num_heads;
  const Index dh = d / heads;
  const Index batch = tokens.rows() / m;
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
  c.batch = batch;

  c.x0 = (tokens.array().rowwise() * vview(p, L[in_g_]).transpose().array()).rowwise() +
         vview(p, L[in_b_]).transpose().array();
  if (cfg_.positional_encoding) {
    for (Index b = 0; b < batch; ++b) c.x0.middleRows(b * m, m) += positional_;
  }

  c.layers.resize(layers_.size());
  const RowMat<Scalar>* x = &c.x0;
  RowMat<Scalar> tmp;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerIds& ids = layers_[l];
    LayerCache& lc = c.layers[l];
    lc.in = *x;
    linear<Scalar>(lc.in, view(p, L[ids.wq]), vview(p, L[ids.bq]), lc.q);
    linear<Scalar>(lc.in, view(p, L[ids.wk]), vview(p, L[ids.bk]), lc.k);
    linear<Scalar>(lc.in, view(p, L[ids.wv]), vview(p, L[ids.bv]), lc.v);
    lc.probs.resize(batch * heads * m, m);
    lc.ctx.resize(batch * m, d);
    for (Index b = 0; b < batch; ++b) {
      for (Index h = 0; h < heads; ++h) {
        auto pb = lc.probs.block((b * heads + h) * m, 0, m, m);
        pb.noalias() = lc.q.block(b * m, h * dh, m, dh) * lc.k.block(b * m, h * dh, m, dh).transpose();
        pb *= scale;
        softmax_rows_inplace<Scalar>(pb);
        lc.ctx.block(b * m, h * dh, m, dh).noalias() = pb * lc.v.block(b * m, h * dh, m, dh);
      }
    }
    linear<Scalar>(lc.ctx, view(p, L[ids.wo]), vview(p, L[ids.bo]), tmp);
    tmp += lc.in;
    layer_norm<Scalar>(tmp, vview(p, L[ids.ln1_g]), vview(p, L[ids.ln1_b]), lc.xhat1, lc.rstd1, lc.h1);

    linear<Scalar>(lc.h1, view(p, L[ids.w1]), vview(p, L[ids.b1]), lc.f1);
    const RowMat<Scalar> g = lc.f1.cwiseMax(Scalar(0));
    linear<Scalar>(g, view(p, L[ids.w2]), vview(p, L[ids.b2]), tmp);
    tmp += lc.h1;
    layer_norm<Scalar>(tmp, vview(p, L[ids.ln2_g]), vview(p, L[ids.ln2_b]), lc.xhat2, lc.rstd2, lc.h2);
    x = &lc.h2;
  }

  const Eigen::Map<const RowMat<Scalar>> flat(c.encoded().data(), batch, m * d);
  linear<Scalar>(flat, view(p, L[fc_w_]), vview(p, L[fc_b_]), c.hidden_pre);
  c.hidden = c.hidden_pre.cwiseMax(Scalar(0));
  linear<Scalar>(c.hidden, view(p, L[out_w_]), vview(p, L[out_b_]), c.logits);
}

template <typename Scalar>
RowMatrix<Scalar> Transformer<Scalar>::logits(const RowMatrix<Scalar>& tokens) const {
  Cache c;
  run(tokens, c);
  return c.logits;
}

template <typename Scalar>
RowMatrix<Scalar> Transformer<Scalar>::forward(const RowMatrix<Scalar>& tokens) const {
  return activate(logits(tokens), output_mode());
}

template <typename Scalar>
Scalar Transformer<Scalar>::loss_and_gradient(const RowMatrix<Scalar>& tokens, const RowMatrix<Scalar>& targets,
                                              Vector<Scalar>& grad) const {
  Cache c;
  run(tokens, c);
  require(targets.rows() == c.batch, ErrorKind::ShapeError, "one target row per sequence required");
  RowMat<Scalar> dlogits;
  const Scalar value = loss_from_logits(c.logits, targets, output_mode(), dlogits);

  const Vector<Scalar>& p = this->params_;
  const ParameterLayout& L = this->layout_;
  grad = Vector<Scalar>::Zero(L.total());
  const Index m = cfg_.seq_len;
  const Index d = cfg_.d_model;
  const Index heads = cfg_.num_heads;
  const Index dh = d / heads;
  const Index batch = c.batch;
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));

  RowMat<Scalar> dhidden;
  linear_backward<Scalar>(c.hidden, dlogits, view(p, L[out_w_]), view(grad, L[out_w_]), vview(grad, L[out_b_]),
                          &dhidden);
  dhidden.array() *= (c.hidden_pre.array() > Scalar(0)).template cast<Scalar>();
  RowMat<Scalar> dflat;
  const Eigen::Map<const RowMat<Scalar>> flat(c.encoded().data(), batch, m * d);
  linear_backward<Scalar>(flat, dhidden, view(p, L[fc_w_]), view(grad, L[fc_w_]), vview(grad, L[fc_b_]), &dflat);
  RowMat<Scalar> dx = Eigen::Map<const RowMat<Scalar>>(dflat.data(), batch * m, d);

  RowMat<Scalar> dr, dh1, dtmp, dctx, dq, dk, dv;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const LayerIds& ids = layers_[li];
    const LayerCache& lc = c.layers[li];

    layer_norm_backward<Scalar>(dx, lc.xhat2, lc.rstd2, vview(p, L[ids.ln2_g]), vview(grad, L[ids.ln2_g]),
                                vview(grad, L[ids.ln2_b]), dr);
    const RowMat<Scalar> g = lc.f1.cwiseMax(Scalar(0));
    RowMat<Scalar> dg;
    linear_backward<Scalar>(g, dr, view(p, L[ids.w2]), view(grad, L[ids.w2]), vview(grad, L[ids.b2]), &dg);
    dg.array() *= (lc.f1.array() > Scalar(0)).template cast<Scalar>();
    linear_backward<Scalar>(lc.h1, dg, view(p, L[ids.w1]), view(grad, L[ids.w1]), vview(grad, L[ids.b1]), &dh1);
    dh1 += dr;

    layer_norm_backward<Scalar>(dh1, lc.xhat1, lc.rstd1, vview(p, L[ids.ln1_g]), vview(grad, L[ids.ln1_g]),
                                vview(grad, L[ids.ln1_b]), dr);
    linear_backward<Scalar>(lc.ctx, dr, view(p, L[ids.wo]), view(grad, L[ids.wo]), vview(grad, L[ids.bo]), &dctx);

    dq.resize(batch * m, d);
    dk.resize(batch * m, d);
    dv.resize(batch * m, d);
    RowMat<Scalar> dp(m, m);
    for (Index b = 0; b < batch; ++b) {
      for (Index h = 0; h < heads; ++h) {
        const auto pb = lc.probs.block((b * heads + h) * m, 0, m, m);
        const auto dc = dctx.block(b * m, h * dh, m, dh);
        dp.noalias() = dc * lc.v.block(b * m, h * dh, m, dh).transpose();
        dv.block(b * m, h * dh, m, dh).noalias() = pb.transpose() * dc;
        const Vector<Scalar> rows = (dp.array() * pb.array()).rowwise().sum();
        dp = (pb.array() * (dp.array().colwise() - rows.array())) * scale;
        dq.block(b * m, h * dh, m, dh).noalias() = dp * lc.k.block(b * m, h * dh, m, dh);
        dk.block(b * m, h * dh, m, dh).noalias() = dp.transpose() * lc.q.block(b * m, h * dh, m, dh);
      }
    }
    dx = dr;
    linear_backward<Scalar>(lc.in, dq, view(p, L[ids.wq]), view(grad, L[ids.wq]), vview(grad, L[ids.bq]), &dtmp);
    dx += dtmp;
    linear_backward<Scalar>(lc.in, dk, view(p, L[ids.wk]), view(grad, L[ids.wk]), vview(grad, L[ids.bk]), &dtmp);
    dx += dtmp;
    linear_backward<Scalar>(lc.in, dv, view(p, L[ids.wv]), view(grad, L[ids.wv]), vview(grad, L[ids.bv]), &dtmp);
    dx += dtmp;
  }

  vview(grad, L[in_g_]) += (dx.array() * tokens.array()).colwise().sum().transpose().matrix();
  vview(grad, L[in_b_]) += dx.colwise().sum().transpose();
  return value;
}

template class Transformer<float>;
template class Transformer<double>;
template RowMatrix<float> sinusoidal_positions<float>(Index, Index);
template RowMatrix<double> sinusoidal_positions<double>(Index, Index);

}  // namespace protoid
