// crstc/pipeline.hpp

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

// Pipeline orchestration shared by the CLI and the acceptance suite:
// embeddings -> clustering -> smoothing -> class mapping -> events, with
// per-file or pooled clustering, plus small JSON/file helpers and a
// file-level parallel map.

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "crstc/clustering.hpp"
#include "crstc/metrics.hpp"
#include "crstc/segmentation.hpp"
#include "crstc/stvae.hpp"
#include "crstc/synthgen.hpp"

namespace crstc {

enum class ClusterMethod { KMeans, Bisecting, MeanShift, Auto };

inline ClusterMethod cluster_method_from_string(const std::string& s) {
  if (s == "kmeans") return ClusterMethod::KMeans;
  if (s == "bisecting") return ClusterMethod::Bisecting;
  if (s == "meanshift" || s == "mean-shift") return ClusterMethod::MeanShift;
  if (s == "auto") return ClusterMethod::Auto;
  throw std::invalid_argument("unknown clustering method: " + s);
}

inline std::string to_string(ClusterMethod m) {
  switch (m) {
    case ClusterMethod::KMeans: return "kmeans";
    case ClusterMethod::Bisecting: return "bisecting";
    case ClusterMethod::MeanShift: return "meanshift";
    default: return "auto";
  }
}

enum class MapMode { Energy, Eval };

inline MapMode map_mode_from_string(const std::string& s) {
  if (s == "energy") return MapMode::Energy;
  if (s == "eval") return MapMode::Eval;
  throw std::invalid_argument("unknown map mode: " + s);
}

struct SegmentOptions {
  ClusterMethod method = ClusterMethod::KMeans;
  std::size_t k = 2;
  std::vector<std::size_t> auto_k_candidates = {2, 3, 4, 5, 6, 7, 8};
  double bandwidth_factor = 0.5;
  bool pooled = false;
  std::size_t n_init = 10;
  std::uint64_t seed = 1;
  int smooth_window = 5;
  double min_duration_s = 0.1;
  double max_gap_s = 0.1;
  MapMode map_mode = MapMode::Energy;
  EmbeddingKind embedding = EmbeddingKind::HiddenPlusResidual;
};

struct SegmentFileResult {
  std::vector<int> clusters;  // raw cluster labels per frame
  FrameLabels binary;         // smoothed + class-mapped
  EventList events;           // after duration filtering
};

namespace detail {

inline ClusterResult run_clustering(const PointSet& points,
                                    const SegmentOptions& opt) {
  switch (opt.method) {
    case ClusterMethod::KMeans:
      return kmeans(points, opt.k, opt.seed, 300, 1e-6, opt.n_init);
    case ClusterMethod::Bisecting:
      return bisecting_kmeans(points, opt.k, opt.seed);
    case ClusterMethod::MeanShift: {
      const double bw =
          std::max(1e-9, median_pairwise_distance(points) * opt.bandwidth_factor);
      return mean_shift(points, bw);
    }
    case ClusterMethod::Auto: {
      const std::size_t k = select_k(points, opt.auto_k_candidates, opt.seed);
      return kmeans(points, k, opt.seed, 300, 1e-6, opt.n_init);
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace detail

/// Full unsupervised segmentation over a corpus of feature sequences.
/// `truth` (binary frame labels per file) is required only in eval mapping
/// mode; energies are derived from the raw features.
inline std::vector<SegmentFileResult> run_segmentation(
    const std::vector<std::vector<std::vector<double>>>& features,
    const FrameGrid& grid, const STVAEParams& params,
    const SegmentOptions& opt,
    const std::vector<FrameLabels>* truth = nullptr) {
  if (opt.map_mode == MapMode::Eval && truth == nullptr)
    throw std::invalid_argument(
        "run_segmentation: eval mapping requires reference labels");
  if (truth && truth->size() != features.size())
    throw std::invalid_argument("run_segmentation: truth count mismatch");

  const std::size_t n_files = features.size();
  std::vector<SegmentFileResult> results(n_files);

  // embeddings per file
  std::vector<PointSet> embeddings(n_files);
  for (std::size_t f = 0; f < n_files; ++f)
    embeddings[f] = extract_embeddings(features[f], params, opt.embedding);

  // cluster labels per file (per-file or pooled)
  if (opt.pooled) {
    PointSet pooled;
    for (const auto& emb : embeddings)
      pooled.insert(pooled.end(), emb.begin(), emb.end());
    auto clusters = detail::run_clustering(standardize_points(pooled), opt);
    std::size_t offset = 0;
    for (std::size_t f = 0; f < n_files; ++f) {
      results[f].clusters.assign(
          clusters.labels.begin() + offset,
          clusters.labels.begin() + offset + embeddings[f].size());
      offset += embeddings[f].size();
    }
  } else {
    for (std::size_t f = 0; f < n_files; ++f) {
      auto clusters =
          detail::run_clustering(standardize_points(embeddings[f]), opt);
      results[f].clusters = clusters.labels;
    }
  }

  for (std::size_t f = 0; f < n_files; ++f) {
    FrameGrid file_grid = grid;
    file_grid.n_frames = features[f].size();
    file_grid.clip_len_s = file_grid.frame_len_s * file_grid.n_frames;
    FrameLabels raw{results[f].clusters, file_grid};
    FrameLabels smoothed = smooth(raw, opt.smooth_window);
    FrameLabels binary =
        opt.map_mode == MapMode::Eval
            ? map_clusters_eval(smoothed, (*truth)[f])
            : map_clusters_energy(smoothed, frame_rms_energy(features[f]));
    results[f].binary = binary;
    results[f].events =
        min_duration_filter(labels_to_events(binary), opt.min_duration_s,
                            opt.max_gap_s);
  }
  return results;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` worker threads. Exceptions are
/// rethrown on the caller thread.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  if (n == 0) return;
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
          fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline nlohmann::json read_json_file(const std::string& path) {
  return nlohmann::json::parse(read_text_file(path));
}

/// Per-frame domain labels as CSV (frame,u) and back.
inline std::string domain_labels_to_csv(const std::vector<int>& u) {
  std::ostringstream os;
  os << "frame,u\n";
  for (std::size_t t = 0; t < u.size(); ++t) os << t << ',' << u[t] << '\n';
  return os.str();
}

inline std::vector<int> domain_labels_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line.rfind("frame,", 0) != 0)
    throw std::invalid_argument("domain csv: missing frame,u header");
  std::vector<int> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("domain csv: malformed row: " + line);
    out.push_back(std::stoi(line.substr(comma + 1)));
  }
  return out;
}

}  // namespace crstc
