// tests/test_pipeline.cpp

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

#include <atomic>

#include "crstc/pipeline.hpp"
#include "crstc/synthgen.hpp"

namespace {

struct TinyRun {
  crstc::SynthConfig scfg;
  crstc::SyntheticDataset dataset;
  std::vector<std::vector<std::vector<double>>> features;
  std::vector<crstc::FrameLabels> truth;  // domains as binary labels
  crstc::FrameGrid grid;
  crstc::TrainResult trained;
};

TinyRun make_tiny_run() {
  TinyRun run;
  run.scfg.n_sequences = 5;
  run.scfg.frames = 60;
  run.scfg.latent_dim = 4;
  run.scfg.obs_dim = 4;
  run.scfg.min_dwell = 10;
  run.scfg.mean_dwell = 18;
  run.scfg.seed = 17;
  run.dataset = crstc::generate_dataset(run.scfg);
  run.grid = crstc::FrameGrid{0.05, run.scfg.frames, 0.05 * run.scfg.frames};

  std::vector<crstc::FeatureSequence> seqs(run.scfg.n_sequences);
  for (std::size_t s = 0; s < run.dataset.sequences.size(); ++s) {
    run.features.push_back(run.dataset.sequences[s].observations);
    run.truth.push_back(
        crstc::FrameLabels{run.dataset.sequences[s].domains, run.grid});
    seqs[s].grid = run.grid;
    seqs[s].frames = run.dataset.sequences[s].observations;
  }
  crstc::STVAEConfig cfg;
  cfg.latent_dim = 4;
  cfg.encoder_hidden = {16};
  cfg.decoder_hidden = {16};
  cfg.lstm_hidden = 8;
  cfg.epochs = 15;
  cfg.batch_size = 5;
  cfg.seed = 17;
  run.trained = crstc::train(seqs, cfg);
  return run;
}

}  // namespace

TEST_CASE("run_segmentation: per-file and pooled modes produce full results",
          "[pipeline]") {
  auto run = make_tiny_run();
  crstc::SegmentOptions opt;
  opt.k = 2;
  opt.smooth_window = 3;
  opt.map_mode = crstc::MapMode::Eval;
  opt.embedding = crstc::EmbeddingKind::HiddenPlusResidual;

  for (bool pooled : {false, true}) {
    opt.pooled = pooled;
    auto results = crstc::run_segmentation(run.features, run.grid,
                                           run.trained.params, opt, &run.truth);
    REQUIRE(results.size() == run.features.size());
    for (std::size_t f = 0; f < results.size(); ++f) {
      REQUIRE(results[f].clusters.size() == run.scfg.frames);
      REQUIRE(results[f].binary.labels.size() == run.scfg.frames);
      for (int l : results[f].binary.labels) REQUIRE((l == 0 || l == 1));
      for (const auto& e : results[f].events) {
        REQUIRE(e.onset_s < e.offset_s);
        REQUIRE(e.offset_s <= run.grid.clip_len_s + 1e-9);
      }
    }
  }
}

TEST_CASE("run_segmentation: eval mapping is at least as accurate as energy",
          "[pipeline]") {
  auto run = make_tiny_run();
  crstc::SegmentOptions eval_opt;
  eval_opt.k = 2;
  eval_opt.map_mode = crstc::MapMode::Eval;
  auto eval_results = crstc::run_segmentation(
      run.features, run.grid, run.trained.params, eval_opt, &run.truth);

  crstc::SegmentOptions energy_opt = eval_opt;
  energy_opt.map_mode = crstc::MapMode::Energy;
  auto energy_results = crstc::run_segmentation(
      run.features, run.grid, run.trained.params, energy_opt, nullptr);

  // eval mapping maximizes frame accuracy over assignments, so it can never
  // lose to the heuristic on the same clusters
  for (std::size_t f = 0; f < run.features.size(); ++f) {
    const auto acc = [&](const crstc::FrameLabels& binary) {
      std::size_t correct = 0;
      for (std::size_t t = 0; t < binary.labels.size(); ++t)
        correct += binary.labels[t] == run.truth[f].labels[t];
      return static_cast<double>(correct) / binary.labels.size();
    };
    REQUIRE(acc(eval_results[f].binary) >= acc(energy_results[f].binary) - 1e-12);
  }
}

TEST_CASE("run_segmentation: mean-shift and auto-k methods run end to end",
          "[pipeline]") {
  auto run = make_tiny_run();
  crstc::SegmentOptions opt;
  opt.map_mode = crstc::MapMode::Eval;

  opt.method = crstc::ClusterMethod::MeanShift;
  opt.bandwidth_factor = 1.5;  // keep the emergent k within the map limit
  auto ms = crstc::run_segmentation(run.features, run.grid, run.trained.params,
                                    opt, &run.truth);
  REQUIRE(ms.size() == run.features.size());

  opt.method = crstc::ClusterMethod::Auto;
  opt.auto_k_candidates = {2, 3};
  auto ak = crstc::run_segmentation(run.features, run.grid, run.trained.params,
                                    opt, &run.truth);
  REQUIRE(ak.size() == run.features.size());
}

TEST_CASE("run_segmentation: eval mode requires truth", "[pipeline]") {
  auto run = make_tiny_run();
  crstc::SegmentOptions opt;
  opt.map_mode = crstc::MapMode::Eval;
  REQUIRE_THROWS_AS(crstc::run_segmentation(run.features, run.grid,
                                            run.trained.params, opt, nullptr),
                    std::invalid_argument);
}

TEST_CASE("parallel_for: covers every index once and propagates exceptions",
          "[pipeline]") {
  std::vector<std::atomic<int>> hits(100);
  for (auto& h : hits) h = 0;
  crstc::parallel_for(100, 8, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) REQUIRE(h == 1);

  REQUIRE_THROWS_WITH(
      crstc::parallel_for(10, 4,
                          [](std::size_t i) {
                            if (i == 7) throw std::runtime_error("boom 7");
                          }),
      Catch::Matchers::Contains("boom"));
}

TEST_CASE("domain label CSV round trip", "[pipeline][io]") {
  std::vector<int> u = {0, 0, 1, 1, 1, 0, 2};
  auto csv = crstc::domain_labels_to_csv(u);
  REQUIRE(crstc::domain_labels_from_csv(csv) == u);
  REQUIRE_THROWS_AS(crstc::domain_labels_from_csv("bad,header\n1,2\n"),
                    std::invalid_argument);
}
