// crstc/config.hpp

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

// Run configuration: one JSON document mirroring every module default.
// Unknown keys are rejected; the resolved document (defaults + file + flag
// overrides) is echoed into every artifact together with a stable hash.

#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "crstc/clustering.hpp"
#include "crstc/features.hpp"
#include "crstc/stvae.hpp"
#include "crstc/synthgen.hpp"

namespace crstc {

using Json = nlohmann::json;

class RunConfig {
 public:
  static Json defaults() {
    return Json{
        {"features",
         {{"sample_rate", 16000},
          {"n_mels", 40},
          {"fft_size", 0},
          {"log_floor", 1e-10},
          {"kind", "logmel"},
          {"n_mfcc", 13},
          {"grid",
           {{"frame_len_s", 0.05}, {"n_frames", 160}, {"clip_len_s", 8.0}}}}},
        {"stvae",
         {{"latent_dim", 8},
          {"encoder_hidden", Json::array({128, 128})},
          {"decoder_hidden", Json::array({128, 128})},
          {"lstm_hidden", 64},
          {"beta_kl", 0.1},
          {"lambda_sparse", 1e-3},
          {"sigma_prior", 1.0},
          {"epochs", 100},
          {"batch_size", 8},
          {"learning_rate", 1e-3},
          {"seed", 1},
          {"embedding", "hidden+residual"}}},
        {"clustering",
         {{"method", "kmeans"},
          {"k", 2},
          {"auto_k_candidates", Json::array({2, 3, 4, 5, 6, 7, 8})},
          {"bandwidth_factor", 0.5},
          {"pooled", false},
          {"n_init", 10},
          {"seed", 1}}},
        {"segmentation",
         {{"smooth_window", 5},
          {"min_duration_s", 0.1},
          {"max_gap_s", 0.1},
          {"map_mode", "energy"}}},
        {"metrics", {{"event_iou_threshold", 0.5}, {"report_pair_iou", true}}},
        {"synth",
         {{"n_sequences", 40},
          {"frames", 160},
          {"latent_dim", 8},
          {"obs_dim", 8},
          {"n_domains", 2},
          {"noise_scale", 0.05},
          {"min_dwell", 20},
          {"mean_dwell", 40},
          {"sparsity", 0.5},
          {"mixing_layers", 2},
          {"seed", 1}}},
        {"split", {{"train_frac", 0.8}, {"seed", 1}}}};
  }

  RunConfig() : tree_(defaults()) {}

  static RunConfig from_json(const Json& overrides) {
    RunConfig cfg;
    merge(cfg.tree_, overrides, "");
    return cfg;
  }

  static RunConfig from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    Json overrides;
    try {
      is >> overrides;
    } catch (const std::exception& e) {
      throw std::runtime_error("config: invalid JSON in " + path + ": " +
                               e.what());
    }
    return from_json(overrides);
  }

  /// Applies one dotted-path override, e.g. set("clustering.k", 4).
  template <typename T>
  void set(const std::string& dotted, const T& value) {
    Json* node = &tree_;
    std::string path = dotted;
    std::size_t dot;
    while ((dot = path.find('.')) != std::string::npos) {
      const std::string head = path.substr(0, dot);
      if (!node->contains(head))
        throw std::invalid_argument("config: unknown key " + dotted);
      node = &(*node)[head];
      path = path.substr(dot + 1);
    }
    if (!node->contains(path))
      throw std::invalid_argument("config: unknown key " + dotted);
    (*node)[path] = value;
  }

  const Json& json() const { return tree_; }
  std::string dump(int indent = 2) const { return tree_.dump(indent); }

  /// FNV-1a 64 over the canonical (key-sorted) serialization.
  std::string hash() const {
    const std::string s = tree_.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
  }

  FrameGrid frame_grid() const {
    const Json& g = tree_["features"]["grid"];
    FrameGrid grid{g["frame_len_s"].get<double>(),
                   g["n_frames"].get<std::size_t>(),
                   g["clip_len_s"].get<double>()};
    grid.validate();
    return grid;
  }

  FeatureConfig feature_config() const {
    const Json& f = tree_["features"];
    FeatureConfig cfg;
    cfg.sample_rate = f["sample_rate"].get<int>();
    cfg.n_mels = f["n_mels"].get<int>();
    cfg.fft_size = f["fft_size"].get<int>();
    cfg.log_floor = f["log_floor"].get<double>();
    cfg.kind = feature_kind_from_string(f["kind"].get<std::string>());
    cfg.n_mfcc = f["n_mfcc"].get<int>();
    return cfg;
  }

  STVAEConfig stvae_config() const {
    const Json& s = tree_["stvae"];
    STVAEConfig cfg;
    cfg.latent_dim = s["latent_dim"].get<std::size_t>();
    cfg.encoder_hidden = s["encoder_hidden"].get<std::vector<std::size_t>>();
    cfg.decoder_hidden = s["decoder_hidden"].get<std::vector<std::size_t>>();
    cfg.lstm_hidden = s["lstm_hidden"].get<std::size_t>();
    cfg.beta_kl = s["beta_kl"].get<double>();
    cfg.lambda_sparse = s["lambda_sparse"].get<double>();
    cfg.sigma_prior = s["sigma_prior"].get<double>();
    cfg.epochs = s["epochs"].get<std::size_t>();
    cfg.batch_size = s["batch_size"].get<std::size_t>();
    cfg.learning_rate = s["learning_rate"].get<double>();
    cfg.seed = s["seed"].get<std::uint64_t>();
    cfg.embedding = embedding_kind_from_string(s["embedding"].get<std::string>());
    cfg.validate();
    return cfg;
  }

  SynthConfig synth_config() const {
    const Json& s = tree_["synth"];
    SynthConfig cfg;
    cfg.n_sequences = s["n_sequences"].get<std::size_t>();
    cfg.frames = s["frames"].get<std::size_t>();
    cfg.latent_dim = s["latent_dim"].get<std::size_t>();
    cfg.obs_dim = s["obs_dim"].get<std::size_t>();
    cfg.n_domains = s["n_domains"].get<std::size_t>();
    cfg.noise_scale = s["noise_scale"].get<double>();
    cfg.min_dwell = s["min_dwell"].get<std::size_t>();
    cfg.mean_dwell = s["mean_dwell"].get<std::size_t>();
    cfg.sparsity = s["sparsity"].get<double>();
    cfg.mixing_layers = s["mixing_layers"].get<std::size_t>();
    cfg.seed = s["seed"].get<std::uint64_t>();
    cfg.validate();
    return cfg;
  }

 private:
  static void merge(Json& base, const Json& overrides,
                    const std::string& prefix) {
    if (!overrides.is_object())
      throw std::invalid_argument("config: expected an object at '" +
                                  (prefix.empty() ? "<root>" : prefix) + "'");
    for (auto it = overrides.begin(); it != overrides.end(); ++it) {
      const std::string path =
          prefix.empty() ? it.key() : prefix + "." + it.key();
      if (!base.contains(it.key()))
        throw std::invalid_argument("config: unknown key '" + path + "'");
      Json& slot = base[it.key()];
      if (slot.is_object()) {
        merge(slot, it.value(), path);
      } else {
        if (slot.is_string() && !it.value().is_string())
          throw std::invalid_argument("config: key '" + path +
                                      "' expects a string");
        if (slot.is_number() && !it.value().is_number())
          throw std::invalid_argument("config: key '" + path +
                                      "' expects a number");
        if (slot.is_boolean() && !it.value().is_boolean())
          throw std::invalid_argument("config: key '" + path +
                                      "' expects a boolean");
        if (slot.is_array() && !it.value().is_array())
          throw std::invalid_argument("config: key '" + path +
                                      "' expects an array");
        slot = it.value();
      }
    }
  }

  Json tree_;
};

}  // namespace crstc
