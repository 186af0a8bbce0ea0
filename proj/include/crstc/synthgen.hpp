// crstc/synthgen.hpp

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

// Synthetic data with known ground truth: piecewise-constant domain labels
// with geometric dwell times, per-domain sparse tanh transition mechanisms
// (masks guaranteed pairwise different), an exactly invertible mixing of
// orthogonal layers with leaky rectifiers, and a permutation-invariant
// agreement score between estimated and true domain labels.

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "crstc/rng.hpp"

namespace crstc {

struct Mechanism {
  std::vector<std::vector<double>> weights;  // n x n, zero off the mask
  std::vector<std::vector<int>> mask;        // n x n binary
  std::vector<double> bias;                  // n

  std::size_t transition_complexity() const {
    std::size_t count = 0;
    for (const auto& row : mask)
      for (int m : row) count += m != 0;
    return count;
  }
};

struct MixingFunction {
  std::vector<std::vector<std::vector<double>>> layers;  // orthogonal matrices
  double slope = 0.2;

  std::vector<double> mix(const std::vector<double>& z) const {
    std::vector<double> v = z;
    for (const auto& q : layers) {
      std::vector<double> next(v.size(), 0.0);
      for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) next[i] += q[i][j] * v[j];
      for (double& x : next)
        if (x < 0.0) x *= slope;
      v = std::move(next);
    }
    return v;
  }

  std::vector<double> unmix(const std::vector<double>& x) const {
    std::vector<double> v = x;
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
      std::vector<double> pre = v;
      for (double& y : pre)
        if (y < 0.0) y /= slope;
      std::vector<double> next(v.size(), 0.0);
      // orthogonal inverse is the transpose
      for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j)
          next[i] += (*it)[j][i] * pre[j];
      v = std::move(next);
    }
    return v;
  }
};

struct SyntheticSequence {
  std::vector<std::vector<double>> observations;  // T x n
  std::vector<std::vector<double>> latents;       // T x n
  std::vector<int> domains;                       // T
};

struct SynthConfig {
  std::size_t n_sequences = 40;
  std::size_t frames = 160;
  std::size_t latent_dim = 8;
  std::size_t obs_dim = 8;
  std::size_t n_domains = 2;
  double noise_scale = 0.05;
  std::size_t min_dwell = 20;
  std::size_t mean_dwell = 40;
  double sparsity = 0.5;
  std::size_t mixing_layers = 2;
  std::uint64_t seed = 1;

  void validate() const {
    if (frames < 2) throw std::invalid_argument("synth: frames >= 2");
    if (latent_dim < 1) throw std::invalid_argument("synth: latent_dim >= 1");
    if (obs_dim != latent_dim)
      throw std::invalid_argument(
          "synth: obs_dim must equal latent_dim (square invertible mixing)");
    if (n_domains < 1) throw std::invalid_argument("synth: n_domains >= 1");
    if (min_dwell < 1 || frames < min_dwell)
      throw std::invalid_argument("synth: need frames >= min_dwell >= 1");
    if (mean_dwell < min_dwell)
      throw std::invalid_argument("synth: mean_dwell >= min_dwell");
    if (sparsity <= 0.0 || sparsity > 1.0)
      throw std::invalid_argument("synth: sparsity in (0, 1]");
    if (noise_scale < 0.0)
      throw std::invalid_argument("synth: noise_scale >= 0");
  }
};

/// Piecewise-constant domain path: runs of geometric length truncated below
/// at min_dwell; each new run picks a different domain than its predecessor.
inline std::vector<int> sample_domains(std::size_t T, std::size_t n_domains,
                                       std::size_t min_dwell,
                                       std::size_t mean_dwell, Rng& rng) {
  if (T < min_dwell || min_dwell < 1)
    throw std::invalid_argument("sample_domains: need T >= min_dwell >= 1");
  std::vector<int> u;
  u.reserve(T);
  // geometric over {0,1,...} with mean (mean_dwell - min_dwell)
  const double extra_mean =
      static_cast<double>(mean_dwell) - static_cast<double>(min_dwell);
  const double p = 1.0 / (1.0 + extra_mean);
  int current = static_cast<int>(rng.uniform_index(n_domains));
  while (u.size() < T) {
    const std::size_t remaining = T - u.size();
    if (!u.empty() && remaining < min_dwell) {
      // not enough room for a fresh run; extend the previous one
      u.insert(u.end(), remaining, u.back());
      break;
    }
    std::size_t dwell = min_dwell;
    while (rng.uniform01() > p) ++dwell;  // count failures before success
    dwell = std::min(dwell, remaining);
    u.insert(u.end(), dwell, current);
    if (n_domains > 1) {
      int next = static_cast<int>(rng.uniform_index(n_domains - 1));
      if (next >= current) ++next;
      current = next;
    }
  }
  return u;
}

/// Per-domain sparse transition mechanisms. Masks keep at least one entry per
/// row and are redrawn until pairwise different; with full masks the
/// variability requirement moves to the weights (some entry differing by at
/// least 0.1).
inline std::vector<Mechanism> sample_mechanisms(std::size_t n,
                                                std::size_t n_domains,
                                                double sparsity, Rng& rng) {
  if (sparsity <= 0.0 || sparsity > 1.0)
    throw std::invalid_argument("sample_mechanisms: sparsity in (0, 1]");
  const bool full = sparsity >= 1.0;
  if (n_domains > 1 && full && n == 0)
    throw std::invalid_argument("sample_mechanisms: degenerate configuration");

  auto draw_mask = [&]() {
    std::vector<std::vector<int>> mask(n, std::vector<int>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
      bool any = false;
      for (std::size_t j = 0; j < n; ++j) {
        if (rng.uniform01() < sparsity) {
          mask[i][j] = 1;
          any = true;
        }
      }
      if (!any) mask[i][rng.uniform_index(n)] = 1;
    }
    return mask;
  };
  auto masks_equal = [](const std::vector<std::vector<int>>& a,
                        const std::vector<std::vector<int>>& b) {
    return a == b;
  };

  std::vector<Mechanism> mechanisms(n_domains);
  const std::size_t max_attempts = 1000;
  for (std::size_t d = 0; d < n_domains; ++d) {
    Mechanism& mech = mechanisms[d];
    std::size_t attempts = 0;
    while (true) {
      if (++attempts > max_attempts)
        throw std::runtime_error(
            "sample_mechanisms: cannot satisfy mechanism variability");
      mech.mask = draw_mask();
      if (full) break;  // variability enforced on weights below
      bool duplicate = false;
      for (std::size_t d2 = 0; d2 < d; ++d2)
        if (masks_equal(mech.mask, mechanisms[d2].mask)) duplicate = true;
      if (!duplicate) break;
      if (n == 1 && sparsity > 0.0) {
        // single entry always forced on; masks cannot differ
        throw std::runtime_error(
            "sample_mechanisms: cannot satisfy mechanism variability with "
            "n = 1 and identical forced masks");
      }
    }
    std::size_t weight_attempts = 0;
    while (true) {
      if (++weight_attempts > max_attempts)
        throw std::runtime_error(
            "sample_mechanisms: cannot satisfy weight variability");
      mech.weights.assign(n, std::vector<double>(n, 0.0));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (mech.mask[i][j]) mech.weights[i][j] = rng.uniform(-0.9, 0.9);
      mech.bias.resize(n);
      for (double& b : mech.bias) b = rng.uniform(-0.9, 0.9);
      if (!full) break;
      // full masks: require a weight entry differing by >= 0.1 from every
      // earlier domain
      bool distinct = true;
      for (std::size_t d2 = 0; d2 < d; ++d2) {
        double max_diff = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            max_diff = std::max(max_diff,
                                std::fabs(mech.weights[i][j] -
                                          mechanisms[d2].weights[i][j]));
        if (max_diff < 0.1) distinct = false;
      }
      if (distinct) break;
    }
  }
  return mechanisms;
}

/// Random orthogonal mixing via Gram-Schmidt on a Gaussian matrix.
inline MixingFunction sample_mixing(std::size_t n, std::size_t n_layers,
                                    Rng& rng, double slope = 0.2) {
  MixingFunction mix;
  mix.slope = slope;
  for (std::size_t layer = 0; layer < n_layers; ++layer) {
    std::vector<std::vector<double>> q(n, std::vector<double>(n));
    while (true) {
      for (auto& row : q)
        for (double& v : row) v = rng.normal();
      bool ok = true;
      for (std::size_t i = 0; i < n && ok; ++i) {
        for (std::size_t k = 0; k < i; ++k) {
          double dot = 0.0;
          for (std::size_t j = 0; j < n; ++j) dot += q[i][j] * q[k][j];
          for (std::size_t j = 0; j < n; ++j) q[i][j] -= dot * q[k][j];
        }
        double norm = 0.0;
        for (double v : q[i]) norm += v * v;
        norm = std::sqrt(norm);
        if (norm < 1e-8) {
          ok = false;
          break;
        }
        for (double& v : q[i]) v /= norm;
      }
      if (ok) break;
    }
    mix.layers.push_back(std::move(q));
  }
  return mix;
}

/// One sequence of the generative process: z_1 ~ N(0, I),
/// z_t = tanh(A_u z_{t-1} + b) + noise_scale * eps, x_t = mix(z_t).
inline SyntheticSequence generate_sequence(
    const std::vector<Mechanism>& mechanisms, const MixingFunction& mixing,
    const std::vector<int>& domains, double noise_scale, Rng& rng) {
  const std::size_t T = domains.size();
  if (T == 0) throw std::invalid_argument("generate_sequence: empty domains");
  const std::size_t n = mechanisms.at(0).bias.size();
  SyntheticSequence seq;
  seq.domains = domains;
  seq.latents.resize(T, std::vector<double>(n));
  seq.observations.resize(T);

  for (std::size_t i = 0; i < n; ++i) seq.latents[0][i] = rng.normal();
  for (std::size_t t = 1; t < T; ++t) {
    const Mechanism& mech = mechanisms.at(domains[t]);
    for (std::size_t i = 0; i < n; ++i) {
      double pre = mech.bias[i];
      for (std::size_t j = 0; j < n; ++j)
        pre += mech.weights[i][j] * seq.latents[t - 1][j];
      seq.latents[t][i] = std::tanh(pre) + noise_scale * rng.normal();
    }
  }
  for (std::size_t t = 0; t < T; ++t)
    seq.observations[t] = mixing.mix(seq.latents[t]);
  return seq;
}

struct SyntheticDataset {
  SynthConfig config;
  std::vector<Mechanism> mechanisms;
  MixingFunction mixing;
  std::vector<SyntheticSequence> sequences;
};

/// Full corpus: mechanisms and mixing are shared across sequences, domain
/// paths and noise are per sequence. Deterministic for a fixed seed.
inline SyntheticDataset generate_dataset(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  SyntheticDataset ds;
  ds.config = cfg;
  ds.mechanisms =
      sample_mechanisms(cfg.latent_dim, cfg.n_domains, cfg.sparsity, rng);
  ds.mixing = sample_mixing(cfg.latent_dim, cfg.mixing_layers, rng);
  for (std::size_t s = 0; s < cfg.n_sequences; ++s) {
    auto domains = sample_domains(cfg.frames, cfg.n_domains, cfg.min_dwell,
                                  cfg.mean_dwell, rng);
    ds.sequences.push_back(generate_sequence(ds.mechanisms, ds.mixing, domains,
                                             cfg.noise_scale, rng));
  }
  return ds;
}

/// Frame agreement maximized over all label permutations (k <= 8).
inline double identifiability_score(const std::vector<int>& estimated,
                                    const std::vector<int>& truth) {
  if (estimated.size() != truth.size())
    throw std::invalid_argument("identifiability_score: length mismatch");
  if (estimated.empty())
    throw std::invalid_argument("identifiability_score: empty input");
  int k = 0;
  for (int l : estimated) {
    if (l < 0) throw std::invalid_argument("identifiability_score: negative label");
    k = std::max(k, l + 1);
  }
  for (int l : truth) {
    if (l < 0) throw std::invalid_argument("identifiability_score: negative label");
    k = std::max(k, l + 1);
  }
  if (k > 8)
    throw std::invalid_argument("identifiability_score: more than 8 labels");

  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t agree = 0;
    for (std::size_t t = 0; t < estimated.size(); ++t)
      if (perm[estimated[t]] == truth[t]) ++agree;
    best = std::max(best, agree);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(estimated.size());
}

}  // namespace crstc
