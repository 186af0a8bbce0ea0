// crstc/stvae.hpp

// Copyright 2026 CRSTC Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Sparse Transition VAE: an MLP encoder producing a per-frame Gaussian
// posterior, an MLP decoder, and an LSTM transition module whose readout
// predicts the next latent from the past. The loss couples reconstruction,
// a KL term against the transition prediction N(zhat_t, sigma_prior^2 I)
// (standard normal at the first frame), and an L1 penalty on the transition
// weight matrices. Per-frame transition embeddings [h_t, mu_t - zhat_t] are
// the clustering input.
//
// Batched sequences are laid out time-major: row t*B + b holds frame t of
// sequence b, so each LSTM step slices one contiguous B x dim block.

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crstc/features.hpp"
#include "crstc/nn.hpp"
#include "crstc/rng.hpp"
#include "crstc/tensor.hpp"

namespace crstc {

enum class EmbeddingKind { Hidden, Residual, HiddenPlusResidual };

inline std::string to_string(EmbeddingKind k) {
  switch (k) {
    case EmbeddingKind::Hidden: return "hidden";
    case EmbeddingKind::Residual: return "residual";
    default: return "hidden+residual";
  }
}

inline EmbeddingKind embedding_kind_from_string(const std::string& s) {
  if (s == "hidden") return EmbeddingKind::Hidden;
  if (s == "residual") return EmbeddingKind::Residual;
  if (s == "hidden+residual") return EmbeddingKind::HiddenPlusResidual;
  throw std::invalid_argument("unknown embedding kind: " + s);
}

struct STVAEConfig {
  std::size_t latent_dim = 8;
  std::vector<std::size_t> encoder_hidden = {128, 128};
  std::vector<std::size_t> decoder_hidden = {128, 128};
  std::size_t lstm_hidden = 64;
  double beta_kl = 0.1;
  double lambda_sparse = 1e-3;
  double sigma_prior = 1.0;
  std::size_t epochs = 100;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  EmbeddingKind embedding = EmbeddingKind::HiddenPlusResidual;

  void validate() const {
    if (latent_dim < 1) throw std::invalid_argument("stvae: latent_dim >= 1");
    if (beta_kl < 0.0 || lambda_sparse < 0.0)
      throw std::invalid_argument("stvae: loss weights must be >= 0");
    if (sigma_prior <= 0.0)
      throw std::invalid_argument("stvae: sigma_prior must be > 0");
    if (epochs < 1 || batch_size < 1)
      throw std::invalid_argument("stvae: epochs and batch size must be >= 1");
  }
};

struct STVAEParams {
  std::vector<DenseLayer> encoder;  // tanh trunk
  DenseLayer enc_mu;
  DenseLayer enc_logvar;
  std::vector<DenseLayer> decoder;  // tanh trunk
  DenseLayer dec_out;
  LstmParams transition;
  DenseLayer readout;  // lstm_hidden -> latent_dim

  std::vector<double> feature_mean;
  std::vector<double> feature_std;

  std::size_t feature_dim = 0;
  std::size_t latent_dim = 0;
  std::size_t lstm_hidden = 0;

  static STVAEParams init(std::size_t feature_dim, const STVAEConfig& cfg,
                          Rng& rng) {
    cfg.validate();
    STVAEParams p;
    p.feature_dim = feature_dim;
    p.latent_dim = cfg.latent_dim;
    p.lstm_hidden = cfg.lstm_hidden;
    std::size_t in = feature_dim;
    for (std::size_t h : cfg.encoder_hidden) {
      p.encoder.push_back(make_dense(in, h, rng));
      in = h;
    }
    p.enc_mu = make_dense(in, cfg.latent_dim, rng);
    p.enc_logvar = make_dense(in, cfg.latent_dim, rng);
    in = cfg.latent_dim;
    for (std::size_t h : cfg.decoder_hidden) {
      p.decoder.push_back(make_dense(in, h, rng));
      in = h;
    }
    p.dec_out = make_dense(in, feature_dim, rng);
    p.transition = make_lstm(cfg.latent_dim, cfg.lstm_hidden, rng);
    p.readout = make_dense(cfg.lstm_hidden, cfg.latent_dim, rng);
    p.feature_mean.assign(feature_dim, 0.0);
    p.feature_std.assign(feature_dim, 1.0);
    return p;
  }

  std::vector<Tensor> trainable() {
    std::vector<Tensor> out;
    auto push_dense = [&out](DenseLayer& l) {
      out.push_back(l.weight);
      out.push_back(l.bias);
    };
    for (auto& l : encoder) push_dense(l);
    push_dense(enc_mu);
    push_dense(enc_logvar);
    for (auto& l : decoder) push_dense(l);
    push_dense(dec_out);
    out.push_back(transition.w_ih);
    out.push_back(transition.w_hh);
    out.push_back(transition.bias);
    push_dense(readout);
    return out;
  }

  std::vector<NamedTensor> named() const {
    std::vector<NamedTensor> out;
    auto push_dense = [&out](const std::string& name, const DenseLayer& l) {
      out.push_back({name + ".w", l.weight});
      out.push_back({name + ".b", l.bias});
    };
    for (std::size_t i = 0; i < encoder.size(); ++i)
      push_dense("enc." + std::to_string(i), encoder[i]);
    push_dense("enc.mu", enc_mu);
    push_dense("enc.logvar", enc_logvar);
    for (std::size_t i = 0; i < decoder.size(); ++i)
      push_dense("dec." + std::to_string(i), decoder[i]);
    push_dense("dec.out", dec_out);
    out.push_back({"trans.w_ih", transition.w_ih});
    out.push_back({"trans.w_hh", transition.w_hh});
    out.push_back({"trans.b", transition.bias});
    push_dense("trans.readout", readout);
    out.push_back({"feat.mean", Tensor::from_values(1, feature_mean.size(),
                                                    feature_mean)});
    out.push_back(
        {"feat.std", Tensor::from_values(1, feature_std.size(), feature_std)});
    return out;
  }

  static STVAEParams from_named(const std::vector<NamedTensor>& tensors) {
    auto find = [&tensors](const std::string& name) -> const Tensor& {
      for (const auto& nt : tensors)
        if (nt.name == name) return nt.tensor;
      throw std::runtime_error("checkpoint: missing tensor " + name);
    };
    auto has = [&tensors](const std::string& name) {
      for (const auto& nt : tensors)
        if (nt.name == name) return true;
      return false;
    };
    auto grad_copy = [](const Tensor& t) {
      Tensor out(t.rows(), t.cols(), 0.0, true);
      out.mutable_values() = t.values();
      return out;
    };
    STVAEParams p;
    for (std::size_t i = 0; has("enc." + std::to_string(i) + ".w"); ++i)
      p.encoder.push_back({grad_copy(find("enc." + std::to_string(i) + ".w")),
                           grad_copy(find("enc." + std::to_string(i) + ".b"))});
    p.enc_mu = {grad_copy(find("enc.mu.w")), grad_copy(find("enc.mu.b"))};
    p.enc_logvar = {grad_copy(find("enc.logvar.w")),
                    grad_copy(find("enc.logvar.b"))};
    for (std::size_t i = 0; has("dec." + std::to_string(i) + ".w"); ++i)
      p.decoder.push_back({grad_copy(find("dec." + std::to_string(i) + ".w")),
                           grad_copy(find("dec." + std::to_string(i) + ".b"))});
    p.dec_out = {grad_copy(find("dec.out.w")), grad_copy(find("dec.out.b"))};
    p.transition.w_ih = grad_copy(find("trans.w_ih"));
    p.transition.w_hh = grad_copy(find("trans.w_hh"));
    p.transition.bias = grad_copy(find("trans.b"));
    p.readout = {grad_copy(find("trans.readout.w")),
                 grad_copy(find("trans.readout.b"))};
    p.feature_mean = find("feat.mean").values();
    p.feature_std = find("feat.std").values();
    p.feature_dim = p.encoder.empty() ? p.enc_mu.weight.rows()
                                      : p.encoder.front().weight.rows();
    p.latent_dim = p.enc_mu.weight.cols();
    p.lstm_hidden = p.transition.w_hh.rows();
    return p;
  }

  /// Frozen copy with no gradient tracking, for inference.
  STVAEParams detached() const {
    STVAEParams p = *this;
    auto d = [](DenseLayer& l) {
      l.weight = l.weight.detach();
      l.bias = l.bias.detach();
    };
    for (auto& l : p.encoder) d(l);
    d(p.enc_mu);
    d(p.enc_logvar);
    for (auto& l : p.decoder) d(l);
    d(p.dec_out);
    p.transition.w_ih = p.transition.w_ih.detach();
    p.transition.w_hh = p.transition.w_hh.detach();
    p.transition.bias = p.transition.bias.detach();
    d(p.readout);
    return p;
  }
};

/// Posterior parameters for a block of frames (rows x feature_dim, already
/// standardized). log-variance is clamped to [-10, 10].
inline std::pair<Tensor, Tensor> encode(const Tensor& x,
                                        const STVAEParams& p) {
  if (x.cols() != p.feature_dim)
    throw std::invalid_argument("encode: feature dim mismatch");
  Tensor h = x;
  for (const auto& layer : p.encoder) h = tanh(dense_forward(layer, h));
  Tensor mu = dense_forward(p.enc_mu, h);
  Tensor log_var = clamp(dense_forward(p.enc_logvar, h), -10.0, 10.0);
  return {mu, log_var};
}

inline Tensor decode(const Tensor& z, const STVAEParams& p) {
  Tensor h = z;
  for (const auto& layer : p.decoder) h = tanh(dense_forward(layer, h));
  return dense_forward(p.dec_out, h);
}

/// z = mu + exp(log_var / 2) * noise.
inline Tensor reparameterize(const Tensor& mu, const Tensor& log_var,
                             const Tensor& noise) {
  detail::check_same_shape(mu, log_var, "reparameterize");
  detail::check_same_shape(mu, noise, "reparameterize");
  return add(mu, mul(exp(mul(log_var, 0.5)), noise));
}

struct TransitionOut {
  // h[t] is the LSTM state after consuming frame t (B x lstm_hidden).
  std::vector<Tensor> h;
  // zhat[t] (t >= 1) is the prediction for frame t read out from h[t-1];
  // zhat[0] is left undefined.
  std::vector<Tensor> zhat;
};

/// Unrolls the transition LSTM over a time-major block of T*B rows.
/// zhat_t depends only on frames before t.
inline TransitionOut transition_forward(const Tensor& z, std::size_t batch,
                                        const STVAEParams& p) {
  if (batch == 0 || z.rows() % batch != 0)
    throw std::invalid_argument("transition_forward: bad batch layout");
  const std::size_t T = z.rows() / batch;
  if (T < 2)
    throw std::invalid_argument("transition_forward: need at least 2 frames");
  TransitionOut out;
  out.h.reserve(T);
  out.zhat.resize(T);
  Tensor h(batch, p.lstm_hidden);
  Tensor c(batch, p.lstm_hidden);
  for (std::size_t t = 0; t < T; ++t) {
    if (t >= 1) out.zhat[t] = dense_forward(p.readout, h);
    Tensor z_t = slice_rows(z, t * batch, (t + 1) * batch);
    LstmState state = lstm_cell(z_t, h, c, p.transition);
    h = state.h;
    c = state.c;
    out.h.push_back(h);
  }
  return out;
}

struct ElboGraph {
  Tensor total;
  Tensor recon;
  Tensor kl_weighted;
  Tensor sparse_weighted;
};

struct ElboBreakdown {
  double total = 0.0;
  double recon = 0.0;
  double kl = 0.0;
  double sparse = 0.0;
};

/// Builds the full loss graph over a time-major batch block. `x` and `noise`
/// are (T*batch) x dim leaves; x must already be standardized.
inline ElboGraph elbo_loss(const Tensor& x, std::size_t batch,
                           const STVAEParams& p, const STVAEConfig& cfg,
                           const Tensor& noise) {
  if (batch == 0 || x.rows() % batch != 0)
    throw std::invalid_argument("elbo_loss: bad batch layout");
  const std::size_t T = x.rows() / batch;
  if (T < 2) throw std::invalid_argument("elbo_loss: need at least 2 frames");

  auto [mu, log_var] = encode(x, p);
  Tensor z = reparameterize(mu, log_var, noise);
  Tensor xhat = decode(z, p);
  Tensor recon = mean(square(sub(xhat, x)));

  TransitionOut trans = transition_forward(z, batch, p);

  const double sp2 = cfg.sigma_prior * cfg.sigma_prior;
  const double log_sp2 = std::log(sp2);
  Tensor kl_acc = Tensor::scalar(0.0);
  for (std::size_t t = 0; t < T; ++t) {
    Tensor mu_t = slice_rows(mu, t * batch, (t + 1) * batch);
    Tensor lv_t = slice_rows(log_var, t * batch, (t + 1) * batch);
    Tensor kl_t;
    if (t == 0) {
      // KL(q || N(0, I)) = 1/2 sum(exp(lv) + mu^2 - lv - 1)
      Tensor inner = sub(sub(add(exp(lv_t), square(mu_t)), lv_t), 1.0);
      kl_t = mul(sum(inner), 0.5);
    } else {
      // KL(q || N(zhat, sp2 I))
      //   = 1/2 sum((exp(lv) + (mu - zhat)^2) / sp2 - lv + log sp2 - 1)
      Tensor diff = sub(mu_t, trans.zhat[t]);
      Tensor scaled = mul(add(exp(lv_t), square(diff)), 1.0 / sp2);
      Tensor inner = add(sub(scaled, lv_t), log_sp2 - 1.0);
      kl_t = mul(sum(inner), 0.5);
    }
    kl_acc = add(kl_acc, kl_t);
  }
  Tensor kl =
      mul(kl_acc, 1.0 / static_cast<double>(T * batch));

  const std::size_t n_weights = p.transition.w_ih.size() +
                                p.transition.w_hh.size() +
                                p.readout.weight.size();
  Tensor abs_sum = add(add(sum(abs(p.transition.w_ih)),
                           sum(abs(p.transition.w_hh))),
                       sum(abs(p.readout.weight)));
  Tensor sparse = mul(abs_sum, 1.0 / static_cast<double>(n_weights));

  ElboGraph g;
  g.recon = recon;
  g.kl_weighted = mul(kl, cfg.beta_kl);
  g.sparse_weighted = mul(sparse, cfg.lambda_sparse);
  g.total = add(add(g.recon, g.kl_weighted), g.sparse_weighted);
  return g;
}

struct EpochLoss {
  std::size_t epoch = 0;
  double recon = 0.0;
  double kl = 0.0;
  double sparse = 0.0;
  double total = 0.0;
};

struct TrainResult {
  STVAEParams params;       // final epoch
  STVAEParams best_params;  // lowest-loss epoch (frozen copy)
  std::size_t best_epoch = 0;
  std::vector<EpochLoss> log;
};

namespace detail {

inline void check_loss_term(const Tensor& t, const char* name) {
  if (!t.all_finite())
    throw std::runtime_error(std::string("stvae train: non-finite value in "
                                         "loss term '") +
                             name + "'");
}

inline Tensor assemble_time_major(
    const std::vector<const std::vector<std::vector<double>>*>& seqs,
    std::size_t T, std::size_t dim) {
  const std::size_t B = seqs.size();
  Tensor x(T * B, dim);
  auto& v = x.mutable_values();
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t b = 0; b < B; ++b)
      std::copy_n((*seqs[b])[t].begin(), dim,
                  v.begin() + (t * B + b) * dim);
  return x;
}

}  // namespace detail

/// Trains on a dataset of equal-length sequences. Deterministic for a fixed
/// seed: initialization, shuffling, and noise all come from one stream.
inline TrainResult train(const std::vector<FeatureSequence>& dataset,
                         const STVAEConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  const std::size_t T = dataset[0].n_frames();
  const std::size_t dim = dataset[0].dim();
  if (T < 2) throw std::invalid_argument("train: sequences need >= 2 frames");
  for (const auto& seq : dataset)
    if (seq.n_frames() != T || seq.dim() != dim)
      throw std::invalid_argument(
          "train: all sequences must share length and feature dim");

  Rng rng(cfg.seed);
  STVAEParams params = STVAEParams::init(dim, cfg, rng);

  FeatureStandardizer st;
  st.fit(dataset);
  params.feature_mean = st.mean;
  params.feature_std = st.std_dev;
  std::vector<std::vector<std::vector<double>>> standardized;
  standardized.reserve(dataset.size());
  for (const auto& seq : dataset) standardized.push_back(st.transform(seq.frames));

  std::vector<Tensor> trainable = params.trainable();
  AdamState adam;
  adam.cfg.lr = cfg.learning_rate;
  adam.init(trainable);

  TrainResult result;
  double best_total = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    EpochLoss ep;
    ep.epoch = epoch;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t B =
          std::min(cfg.batch_size, order.size() - start);
      std::vector<const std::vector<std::vector<double>>*> batch;
      for (std::size_t b = 0; b < B; ++b)
        batch.push_back(&standardized[order[start + b]]);
      Tensor x = detail::assemble_time_major(batch, T, dim);
      Tensor noise(T * B, cfg.latent_dim);
      for (double& v : noise.mutable_values()) v = rng.normal();

      ElboGraph g = elbo_loss(x, B, params, cfg, noise);
      detail::check_loss_term(g.recon, "reconstruction");
      detail::check_loss_term(g.kl_weighted, "kl");
      detail::check_loss_term(g.sparse_weighted, "sparsity");

      for (auto& t : trainable) t.zero_grad();
      backward(g.total);
      adam_step(trainable, adam);

      ep.recon += g.recon.item() * B;
      ep.kl += g.kl_weighted.item() * B;
      ep.sparse += g.sparse_weighted.item() * B;
      ep.total += g.total.item() * B;
      seen += B;
    }
    ep.recon /= seen;
    ep.kl /= seen;
    ep.sparse /= seen;
    ep.total /= seen;
    result.log.push_back(ep);
    if (ep.total < best_total) {
      best_total = ep.total;
      result.best_epoch = epoch;
      result.best_params = params.detached();
    }
  }
  result.params = params;
  return result;
}

/// Deterministic per-frame transition embeddings from the posterior mean
/// (no sampling). Frame 0 uses a zero residual.
inline std::vector<std::vector<double>> extract_embeddings(
    const std::vector<std::vector<double>>& frames, const STVAEParams& params,
    EmbeddingKind kind = EmbeddingKind::HiddenPlusResidual) {
  if (frames.size() < 2)
    throw std::invalid_argument("extract_embeddings: need >= 2 frames");
  STVAEParams p = params.detached();
  FeatureStandardizer st;
  st.mean = p.feature_mean;
  st.std_dev = p.feature_std;
  auto standardized = st.transform(frames);

  const std::size_t T = standardized.size();
  const std::size_t dim = standardized[0].size();
  Tensor x(T, dim);
  for (std::size_t t = 0; t < T; ++t)
    std::copy_n(standardized[t].begin(), dim,
                x.mutable_values().begin() + t * dim);

  auto [mu, log_var] = encode(x, p);
  (void)log_var;
  TransitionOut trans = transition_forward(mu, 1, p);

  const std::size_t n = p.latent_dim;
  const std::size_t H = p.lstm_hidden;
  std::vector<std::vector<double>> out(T);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> residual(n, 0.0);
    if (t >= 1)
      for (std::size_t i = 0; i < n; ++i)
        residual[i] = mu.at(t, i) - trans.zhat[t].at(0, i);
    std::vector<double> emb;
    if (kind != EmbeddingKind::Residual)
      for (std::size_t i = 0; i < H; ++i) emb.push_back(trans.h[t].at(0, i));
    if (kind != EmbeddingKind::Hidden)
      for (std::size_t i = 0; i < n; ++i) emb.push_back(residual[i]);
    out[t] = std::move(emb);
  }
  return out;
}

/// Training-log CSV: epoch, recon, kl, sparse, total (weighted terms; they
/// sum to total).
inline std::string loss_log_to_csv(const std::vector<EpochLoss>& log) {
  std::ostringstream os;
  os.precision(12);
  os << "epoch,recon,kl,sparse,total\n";
  for (const auto& e : log)
    os << e.epoch << ',' << e.recon << ',' << e.kl << ',' << e.sparse << ','
       << e.total << '\n';
  return os.str();
}

}  // namespace crstc
