// tests/test_synthgen.cpp

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

#include <catch2/catch.hpp>

#include <cmath>
#include <map>

#include "crstc/synthgen.hpp"

using crstc::Mechanism;
using crstc::Rng;
using crstc::SynthConfig;

TEST_CASE("sample_domains: constants, dwell floor, determinism", "[synthgen]") {
  SECTION("single domain gives a constant sequence") {
    Rng rng(1);
    auto u = crstc::sample_domains(50, 1, 5, 10, rng);
    REQUIRE(u.size() == 50);
    for (int d : u) REQUIRE(d == 0);
  }
  SECTION("no run shorter than min_dwell") {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      auto u = crstc::sample_domains(200, 3, 10, 25, rng);
      REQUIRE(u.size() == 200);
      std::size_t run = 1;
      for (std::size_t t = 1; t <= u.size(); ++t) {
        if (t < u.size() && u[t] == u[t - 1]) {
          ++run;
        } else {
          REQUIRE(run >= 10);
          run = 1;
        }
      }
    }
  }
  SECTION("fixed seed reproduces the same path") {
    Rng a(77), b(77);
    REQUIRE(crstc::sample_domains(300, 2, 20, 40, a) ==
            crstc::sample_domains(300, 2, 20, 40, b));
  }
  SECTION("infeasible request rejected") {
    Rng rng(1);
    REQUIRE_THROWS_AS(crstc::sample_domains(5, 2, 10, 10, rng),
                      std::invalid_argument);
  }
}

TEST_CASE("sample_mechanisms: variability guarantees", "[synthgen]") {
  SECTION("two domains always differ in at least one mask entry") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      Rng rng(seed);
      auto mechs = crstc::sample_mechanisms(4, 2, 0.5, rng);
      REQUIRE(mechs.size() == 2);
      REQUIRE(mechs[0].mask != mechs[1].mask);
      for (const auto& row : mechs[0].mask) {
        int nonzero = 0;
        for (int m : row) nonzero += m;
        REQUIRE(nonzero >= 1);
      }
    }
  }
  SECTION("full masks push variability onto the weights") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      auto mechs = crstc::sample_mechanisms(3, 2, 1.0, rng);
      REQUIRE(mechs[0].mask == mechs[1].mask);
      double max_diff = 0.0;
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
          max_diff = std::max(max_diff, std::fabs(mechs[0].weights[i][j] -
                                                  mechs[1].weights[i][j]));
      REQUIRE(max_diff >= 0.1);
    }
  }
  SECTION("transition complexity counts nonzeros") {
    Mechanism mech;
    mech.mask = {{1, 0, 1}, {0, 0, 1}, {1, 1, 1}};
    REQUIRE(mech.transition_complexity() == 6);
  }
}

TEST_CASE("generate: hand recursion under zero noise and identity mixing",
          "[synthgen][oracle]") {
  // Diagonal mechanism, no mixing layers: z_{t,i} = tanh(a_i z_{t-1,i} + b_i).
  Mechanism mech;
  const std::vector<double> diag = {0.8, -0.5, 0.3};
  mech.weights = {{0.8, 0.0, 0.0}, {0.0, -0.5, 0.0}, {0.0, 0.0, 0.3}};
  mech.mask = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  mech.bias = {0.1, -0.2, 0.4};
  crstc::MixingFunction identity_mix;  // zero layers

  Rng rng(5);
  std::vector<int> domains(6, 0);
  auto seq =
      crstc::generate_sequence({mech}, identity_mix, domains, 0.0, rng);

  // recurse by hand from the drawn z_1
  std::vector<double> z = seq.latents[0];
  for (std::size_t t = 1; t < 6; ++t) {
    for (std::size_t i = 0; i < 3; ++i)
      z[i] = std::tanh(diag[i] * z[i] + mech.bias[i]);
    for (std::size_t i = 0; i < 3; ++i)
      REQUIRE(seq.latents[t][i] == Approx(z[i]).margin(1e-15));
    // identity mixing: observations equal latents
    REQUIRE(seq.observations[t] == seq.latents[t]);
  }
}

TEST_CASE("mixing: unmix inverts mix to near machine precision",
          "[synthgen][property]") {
  Rng rng(9);
  auto mixing = crstc::sample_mixing(8, 3, rng);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> z(8);
    for (double& v : z) v = rng.uniform(-2.0, 2.0);
    auto x = mixing.mix(z);
    auto back = mixing.unmix(x);
    for (std::size_t i = 0; i < z.size(); ++i)
      REQUIRE(std::fabs(back[i] - z[i]) < 1e-8);
  }
}

TEST_CASE("generate: dataset reconstruction and determinism", "[synthgen]") {
  SynthConfig cfg;
  cfg.n_sequences = 4;
  cfg.frames = 60;
  cfg.latent_dim = 6;
  cfg.obs_dim = 6;
  cfg.min_dwell = 10;
  cfg.mean_dwell = 20;
  cfg.seed = 11;
  auto ds = crstc::generate_dataset(cfg);
  REQUIRE(ds.sequences.size() == 4);
  SECTION("latents recoverable from observations through the stored inverse") {
    for (const auto& seq : ds.sequences)
      for (std::size_t t = 0; t < seq.latents.size(); ++t) {
        auto back = ds.mixing.unmix(seq.observations[t]);
        for (std::size_t i = 0; i < back.size(); ++i)
          REQUIRE(std::fabs(back[i] - seq.latents[t][i]) < 1e-8);
      }
  }
  SECTION("same seed regenerates the identical dataset") {
    auto ds2 = crstc::generate_dataset(cfg);
    for (std::size_t s = 0; s < ds.sequences.size(); ++s) {
      REQUIRE(ds2.sequences[s].domains == ds.sequences[s].domains);
      REQUIRE(ds2.sequences[s].observations == ds.sequences[s].observations);
    }
  }
  SECTION("obs_dim must equal latent_dim") {
    SynthConfig bad = cfg;
    bad.obs_dim = 5;
    REQUIRE_THROWS_AS(crstc::generate_dataset(bad), std::invalid_argument);
  }
}

TEST_CASE("generate: residual noise passes the normality sanity check",
          "[synthgen][oracle]") {
  SynthConfig cfg;
  cfg.n_sequences = 1;
  cfg.frames = 10001;
  cfg.latent_dim = 4;
  cfg.obs_dim = 4;
  cfg.noise_scale = 0.05;
  cfg.min_dwell = 50;
  cfg.mean_dwell = 100;
  cfg.seed = 3;
  auto ds = crstc::generate_dataset(cfg);
  const auto& seq = ds.sequences[0];

  double sum = 0.0, sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 1; t < seq.latents.size(); ++t) {
    const Mechanism& mech = ds.mechanisms[seq.domains[t]];
    for (std::size_t i = 0; i < 4; ++i) {
      double pre = mech.bias[i];
      for (std::size_t j = 0; j < 4; ++j)
        pre += mech.weights[i][j] * seq.latents[t - 1][j];
      const double eps = (seq.latents[t][i] - std::tanh(pre)) / cfg.noise_scale;
      sum += eps;
      sum_sq += eps * eps;
      ++count;
    }
  }
  const double mean = sum / count;
  const double var = sum_sq / count - mean * mean;
  REQUIRE(std::fabs(mean) < 0.1);
  REQUIRE(var > 0.9);
  REQUIRE(var < 1.1);
}

TEST_CASE("generate: domains are a function of consecutive observation pairs",
          "[synthgen][property]") {
  // Mechanism separability diagnostic: identical (x_{t-1}, x_t) pairs must
  // never carry different domain labels.
  SynthConfig cfg;
  cfg.n_sequences = 3;
  cfg.frames = 120;
  cfg.latent_dim = 4;
  cfg.obs_dim = 4;
  cfg.noise_scale = 0.0;
  cfg.min_dwell = 15;
  cfg.mean_dwell = 30;
  cfg.seed = 21;
  auto ds = crstc::generate_dataset(cfg);
  std::map<std::pair<std::vector<double>, std::vector<double>>, int> seen;
  for (const auto& seq : ds.sequences)
    for (std::size_t t = 1; t < seq.observations.size(); ++t) {
      auto key = std::make_pair(seq.observations[t - 1], seq.observations[t]);
      auto [it, inserted] = seen.emplace(key, seq.domains[t]);
      if (!inserted) REQUIRE(it->second == seq.domains[t]);
    }
}

TEST_CASE("identifiability_score: relabeling, random, constant",
          "[synthgen][oracle]") {
  SECTION("a pure relabeling scores 1") {
    std::vector<int> truth = {0, 0, 1, 1, 2, 2, 0};
    std::vector<int> est = {2, 2, 0, 0, 1, 1, 2};
    REQUIRE(crstc::identifiability_score(est, truth) == 1.0);
  }
  SECTION("uniform random estimates against balanced truth are near 0.5") {
    Rng rng(13);
    const std::size_t T = 10000;
    std::vector<int> truth(T), est(T);
    for (std::size_t t = 0; t < T; ++t) {
      truth[t] = static_cast<int>(t % 2);
      est[t] = static_cast<int>(rng.uniform_index(2));
    }
    const double score = crstc::identifiability_score(est, truth);
    REQUIRE(score == Approx(0.5).margin(0.02));
  }
  SECTION("constant estimates against balanced truth score one half") {
    std::vector<int> truth = {0, 1, 0, 1, 0, 1};
    std::vector<int> est(6, 0);
    REQUIRE(crstc::identifiability_score(est, truth) == Approx(0.5));
  }
  SECTION("errors") {
    REQUIRE_THROWS_AS(crstc::identifiability_score({0, 1}, {0}),
                      std::invalid_argument);
    std::vector<int> nine(10);
    for (int i = 0; i < 10; ++i) nine[i] = i % 9;
    REQUIRE_THROWS_AS(crstc::identifiability_score(nine, nine),
                      std::invalid_argument);
  }
}
