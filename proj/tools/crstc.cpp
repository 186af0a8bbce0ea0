// tools/crstc.cpp

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

// crstc: command-line front end for the unsupervised acoustic-event
// detection pipeline. Subcommands: features, synth, train, segment, eval,
// aggregate, split. Every artifact directory carries a manifest with the
// resolved configuration and its hash; eval refuses to mix hashes unless
// forced. Diagnostics go to stderr; exit code 0 means no errors.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crstc/annotations.hpp"
#include "crstc/audio.hpp"
#include "crstc/clustering.hpp"
#include "crstc/config.hpp"
#include "crstc/features.hpp"
#include "crstc/metrics.hpp"
#include "crstc/pipeline.hpp"
#include "crstc/segmentation.hpp"
#include "crstc/stvae.hpp"
#include "crstc/synthgen.hpp"

namespace fs = std::filesystem;
using crstc::Json;

namespace {

constexpr const char* kVersion = "crstc 1.0.0";

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value pairs
  std::size_t jobs = 1;
};

crstc::RunConfig resolve_config(const CommonArgs& args) {
  crstc::RunConfig cfg = args.config_path.empty()
                             ? crstc::RunConfig()
                             : crstc::RunConfig::from_file(args.config_path);
  for (const std::string& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got: " + kv);
    const std::string key = kv.substr(0, eq);
    const std::string raw = kv.substr(eq + 1);
    Json value;
    try {
      value = Json::parse(raw);
    } catch (...) {
      value = raw;  // plain string
    }
    cfg.set(key, value);
  }
  return cfg;
}

std::vector<fs::path> sorted_files(const fs::path& dir,
                                   const std::string& extension) {
  if (!fs::is_directory(dir))
    throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == extension) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

Json manifest_skeleton(const std::string& kind, const crstc::RunConfig& cfg) {
  return Json{{"kind", kind},
              {"tool", kVersion},
              {"config_hash", cfg.hash()},
              {"config", cfg.json()}};
}

// ---------------------------------------------------------------------------
// features
// ---------------------------------------------------------------------------

int cmd_features(const std::string& wav_dir, const std::string& out_dir,
                 const std::string& format, const CommonArgs& common) {
  const crstc::RunConfig cfg = resolve_config(common);
  const auto fcfg = cfg.feature_config();
  const auto grid = cfg.frame_grid();
  fs::create_directories(out_dir);

  auto wavs = sorted_files(wav_dir, ".wav");
  std::vector<Json> entries(wavs.size());
  crstc::parallel_for(wavs.size(), common.jobs, [&](std::size_t i) {
    const fs::path& wav = wavs[i];
    crstc::AudioClip clip = crstc::read_wav(wav.string());
    clip = crstc::resample(clip, fcfg.sample_rate);
    clip = crstc::pad_or_trim(clip, grid.clip_len_s);
    auto seq = crstc::extract_features(clip, grid, fcfg);
    const std::string id = wav.stem().string();
    const std::string ext = format == "csv" ? ".csv" : ".fmat";
    const fs::path out = fs::path(out_dir) / (id + ext);
    if (format == "csv")
      crstc::save_matrix_csv(out.string(), seq.frames);
    else
      crstc::save_matrix_binary(out.string(), seq.frames);
    entries[i] = Json{{"id", id},
                      {"path", out.filename().string()},
                      {"rows", seq.n_frames()},
                      {"cols", seq.dim()}};
  });

  Json manifest = manifest_skeleton("features", cfg);
  manifest["format"] = format;
  manifest["files"] = entries;
  crstc::write_json_file((fs::path(out_dir) / "manifest.json").string(),
                         manifest);
  std::cerr << "features: wrote " << wavs.size() << " matrices to " << out_dir
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int cmd_synth(const std::string& out_dir, const CommonArgs& common) {
  const crstc::RunConfig cfg = resolve_config(common);
  const auto scfg = cfg.synth_config();
  fs::create_directories(out_dir);

  auto dataset = crstc::generate_dataset(scfg);
  Json entries = Json::array();
  for (std::size_t s = 0; s < dataset.sequences.size(); ++s) {
    char name[32];
    std::snprintf(name, sizeof(name), "seq%04zu", s);
    const std::string id = name;
    const fs::path fmat = fs::path(out_dir) / (id + ".fmat");
    const fs::path truth = fs::path(out_dir) / (id + "_truth.csv");
    crstc::save_matrix_binary(fmat.string(),
                              dataset.sequences[s].observations);
    crstc::write_text_file(
        truth.string(),
        crstc::domain_labels_to_csv(dataset.sequences[s].domains));
    entries.push_back(Json{{"id", id},
                           {"path", fmat.filename().string()},
                           {"truth", truth.filename().string()},
                           {"rows", dataset.sequences[s].observations.size()},
                           {"cols", scfg.obs_dim}});
  }
  Json manifest = manifest_skeleton("synth", cfg);
  manifest["format"] = "bin";
  manifest["files"] = entries;
  manifest["seed"] = scfg.seed;
  crstc::write_json_file((fs::path(out_dir) / "manifest.json").string(),
                         manifest);
  std::cerr << "synth: wrote " << dataset.sequences.size()
            << " sequences to " << out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct LoadedFeatures {
  std::vector<std::string> ids;
  std::vector<std::vector<std::vector<double>>> matrices;
  Json manifest;
  crstc::FrameGrid grid;
};

LoadedFeatures load_features(const std::string& dir,
                             const crstc::RunConfig& cfg) {
  LoadedFeatures out;
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  if (!fs::exists(manifest_path))
    throw std::runtime_error("missing manifest.json in " + dir);
  out.manifest = crstc::read_json_file(manifest_path.string());
  const std::string format = out.manifest.value("format", "bin");
  out.grid = cfg.frame_grid();
  for (const Json& entry : out.manifest.at("files")) {
    const fs::path path = fs::path(dir) / entry.at("path").get<std::string>();
    auto rows = format == "csv" ? crstc::load_matrix_csv(path.string())
                                : crstc::load_matrix_binary(path.string());
    out.ids.push_back(entry.at("id").get<std::string>());
    out.matrices.push_back(std::move(rows));
  }
  if (!out.matrices.empty()) {
    out.grid.n_frames = out.matrices[0].size();
    out.grid.clip_len_s = out.grid.frame_len_s * out.grid.n_frames;
  }
  return out;
}

int cmd_train(const std::string& features_dir, const std::string& out_dir,
              const CommonArgs& common) {
  const crstc::RunConfig cfg = resolve_config(common);
  auto loaded = load_features(features_dir, cfg);
  if (loaded.matrices.empty())
    throw std::runtime_error("train: no feature files in " + features_dir);
  fs::create_directories(out_dir);

  std::vector<crstc::FeatureSequence> dataset(loaded.matrices.size());
  for (std::size_t i = 0; i < loaded.matrices.size(); ++i) {
    dataset[i].grid = loaded.grid;
    dataset[i].frames = loaded.matrices[i];
  }
  const auto vae_cfg = cfg.stvae_config();
  auto result = crstc::train(dataset, vae_cfg);

  const fs::path ckpt = fs::path(out_dir) / "checkpoint.bin";
  const fs::path best = fs::path(out_dir) / "checkpoint_best.bin";
  crstc::save_checkpoint(ckpt.string(), result.params.named());
  crstc::save_checkpoint(best.string(), result.best_params.named());
  crstc::write_text_file((fs::path(out_dir) / "loss.csv").string(),
                         crstc::loss_log_to_csv(result.log));

  Json manifest = manifest_skeleton("train", cfg);
  manifest["checkpoint"] = ckpt.filename().string();
  manifest["checkpoint_best"] = best.filename().string();
  manifest["loss_log"] = "loss.csv";
  manifest["best_epoch"] = result.best_epoch;
  manifest["final_loss"] = result.log.back().total;
  manifest["features_manifest_hash"] =
      loaded.manifest.value("config_hash", "");
  manifest["n_sequences"] = dataset.size();
  crstc::write_json_file((fs::path(out_dir) / "manifest.json").string(),
                         manifest);
  std::cerr << "train: " << result.log.size() << " epochs, final loss "
            << result.log.back().total << ", best epoch " << result.best_epoch
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// segment
// ---------------------------------------------------------------------------

crstc::SegmentOptions segment_options(const crstc::RunConfig& cfg) {
  const Json& cl = cfg.json().at("clustering");
  const Json& seg = cfg.json().at("segmentation");
  crstc::SegmentOptions opt;
  opt.method =
      crstc::cluster_method_from_string(cl.at("method").get<std::string>());
  opt.k = cl.at("k").get<std::size_t>();
  opt.auto_k_candidates =
      cl.at("auto_k_candidates").get<std::vector<std::size_t>>();
  opt.bandwidth_factor = cl.at("bandwidth_factor").get<double>();
  opt.pooled = cl.at("pooled").get<bool>();
  opt.n_init = cl.at("n_init").get<std::size_t>();
  opt.seed = cl.at("seed").get<std::uint64_t>();
  opt.smooth_window = seg.at("smooth_window").get<int>();
  opt.min_duration_s = seg.at("min_duration_s").get<double>();
  opt.max_gap_s = seg.at("max_gap_s").get<double>();
  opt.map_mode =
      crstc::map_mode_from_string(seg.at("map_mode").get<std::string>());
  opt.embedding = crstc::embedding_kind_from_string(
      cfg.json().at("stvae").at("embedding").get<std::string>());
  return opt;
}

int cmd_segment(const std::string& features_dir, const std::string& ckpt_path,
                const std::string& out_dir, const std::string& truth_csv,
                const CommonArgs& common) {
  const crstc::RunConfig cfg = resolve_config(common);
  auto loaded = load_features(features_dir, cfg);
  if (loaded.matrices.empty())
    throw std::runtime_error("segment: no feature files in " + features_dir);
  fs::create_directories(out_dir);

  auto params =
      crstc::STVAEParams::from_named(crstc::load_checkpoint(ckpt_path));
  if (loaded.matrices[0][0].size() != params.feature_dim)
    throw std::runtime_error(
        "segment: checkpoint feature dimension (" +
        std::to_string(params.feature_dim) + ") does not match features (" +
        std::to_string(loaded.matrices[0][0].size()) + ")");

  crstc::SegmentOptions opt = segment_options(cfg);
  std::vector<crstc::FrameLabels> truth;
  if (opt.map_mode == crstc::MapMode::Eval) {
    if (truth_csv.empty())
      throw std::runtime_error("segment: map_mode=eval requires --truth");
    auto by_file =
        crstc::parse_csv_annotations(crstc::read_text_file(truth_csv));
    for (std::size_t i = 0; i < loaded.ids.size(); ++i) {
      auto it = by_file.find(loaded.ids[i]);
      crstc::FrameGrid grid = loaded.grid;
      grid.n_frames = loaded.matrices[i].size();
      grid.clip_len_s = grid.frame_len_s * grid.n_frames;
      truth.push_back(crstc::events_to_labels(
          it == by_file.end() ? crstc::EventList{} : it->second, grid));
    }
  }

  auto results =
      crstc::run_segmentation(loaded.matrices, loaded.grid, params, opt,
                              truth.empty() ? nullptr : &truth);

  Json entries = Json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::string& id = loaded.ids[i];
    const fs::path events_csv = fs::path(out_dir) / (id + "_events.csv");
    const fs::path events_json = fs::path(out_dir) / (id + "_events.json");
    const fs::path clusters_csv = fs::path(out_dir) / (id + "_clusters.csv");
    crstc::write_text_file(events_csv.string(),
                           crstc::events_to_csv(results[i].events));
    Json jevents = Json::array();
    for (const auto& e : results[i].events)
      jevents.push_back(Json{{"onset_s", e.onset_s},
                             {"offset_s", e.offset_s},
                             {"label", e.label}});
    crstc::write_json_file(events_json.string(), jevents);
    std::ostringstream ccsv;
    ccsv << "frame,cluster\n";
    for (std::size_t t = 0; t < results[i].clusters.size(); ++t)
      ccsv << t << ',' << results[i].clusters[t] << '\n';
    crstc::write_text_file(clusters_csv.string(), ccsv.str());
    entries.push_back(Json{{"id", id},
                           {"events", events_csv.filename().string()},
                           {"events_json", events_json.filename().string()},
                           {"clusters", clusters_csv.filename().string()},
                           {"n_events", results[i].events.size()}});
  }
  Json manifest = manifest_skeleton("segment", cfg);
  manifest["files"] = entries;
  manifest["checkpoint"] = ckpt_path;
  manifest["map_mode"] =
      opt.map_mode == crstc::MapMode::Eval ? "eval" : "energy";
  manifest["map_mode_is_heuristic"] = opt.map_mode == crstc::MapMode::Energy;
  manifest["method"] = crstc::to_string(opt.method);
  crstc::write_json_file((fs::path(out_dir) / "manifest.json").string(),
                         manifest);
  std::cerr << "segment: wrote events for " << results.size() << " files to "
            << out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int cmd_eval(const std::string& pred_dir, const std::string& truth_path,
             const std::string& out_path, const std::string& mode,
             const std::string& summary_csv, bool force,
             const CommonArgs& common) {
  const crstc::RunConfig cfg = resolve_config(common);
  const Json pred_manifest =
      crstc::read_json_file((fs::path(pred_dir) / "manifest.json").string());
  const std::string pred_hash = pred_manifest.value("config_hash", "");
  if (!force && pred_hash != cfg.hash())
    throw std::runtime_error(
        "eval: config hash mismatch with prediction artifacts (" + pred_hash +
        " vs " + cfg.hash() +
        "); re-run with the matching config or pass --force");

  Json report = manifest_skeleton("eval", cfg);
  report["mode"] = mode;
  report["pred_manifest_hash"] = pred_hash;

  if (mode == "identifiability") {
    const Json truth_manifest = crstc::read_json_file(
        (fs::path(truth_path) / "manifest.json").string());
    std::map<std::string, std::string> truth_files;
    for (const Json& entry : truth_manifest.at("files"))
      truth_files[entry.at("id").get<std::string>()] =
          entry.at("truth").get<std::string>();
    double mean_score = 0.0;
    Json per_file = Json::array();
    std::size_t n = 0;
    for (const Json& entry : pred_manifest.at("files")) {
      const std::string id = entry.at("id").get<std::string>();
      auto it = truth_files.find(id);
      if (it == truth_files.end())
        throw std::runtime_error("eval: missing ground truth for " + id);
      auto clusters = crstc::domain_labels_from_csv(crstc::read_text_file(
          (fs::path(pred_dir) / entry.at("clusters").get<std::string>())
              .string()));
      auto truth = crstc::domain_labels_from_csv(
          crstc::read_text_file((fs::path(truth_path) / it->second).string()));
      const double score = crstc::identifiability_score(clusters, truth);
      per_file.push_back(Json{{"id", id}, {"identifiability", score}});
      mean_score += score;
      ++n;
    }
    mean_score /= static_cast<double>(n);
    report["identifiability_mean"] = mean_score;
    report["per_file"] = per_file;
    crstc::write_json_file(out_path, report);
    std::cerr << "eval: identifiability mean " << mean_score << " over " << n
              << " files\n";
    return 0;
  }

  // detection mode: truth is the annotation CSV (file,onset_s,offset_s,label)
  auto truth_by_file =
      crstc::parse_csv_annotations(crstc::read_text_file(truth_path));
  const double threshold =
      cfg.json().at("metrics").at("event_iou_threshold").get<double>();
  std::vector<crstc::EvalPair> pairs;
  Json per_file = Json::array();
  for (const Json& entry : pred_manifest.at("files")) {
    const std::string id = entry.at("id").get<std::string>();
    auto it = truth_by_file.find(id);
    if (it == truth_by_file.end())
      throw std::runtime_error("eval: missing ground truth for " + id);
    crstc::EvalPair pair;
    pair.pred_events = crstc::events_from_csv(crstc::read_text_file(
        (fs::path(pred_dir) / entry.at("events").get<std::string>())
            .string()));
    pair.truth_events = it->second;
    const crstc::FrameGrid grid = cfg.frame_grid();
    pair.pred_frames = crstc::events_to_labels(pair.pred_events, grid).labels;
    pair.truth_frames =
        crstc::events_to_labels(pair.truth_events, grid).labels;
    pairs.push_back(std::move(pair));
    per_file.push_back(Json{{"id", id}});
  }
  auto corpus = crstc::evaluate_corpus(pairs, threshold);
  report["frame"] = Json{{"accuracy", corpus.frames.accuracy},
                         {"precision", corpus.frames.precision},
                         {"recall", corpus.frames.recall},
                         {"f1", corpus.frames.f1},
                         {"tp", corpus.frames.tp},
                         {"fp", corpus.frames.fp},
                         {"fn", corpus.frames.fn},
                         {"tn", corpus.frames.tn}};
  report["event"] = Json{{"f1", corpus.events.f1},
                         {"precision", corpus.events.precision},
                         {"recall", corpus.events.recall},
                         {"tp", corpus.events.tp},
                         {"fp", corpus.events.fp},
                         {"fn", corpus.events.fn},
                         {"iou", corpus.event_iou_macro},
                         {"matched_pair_iou", corpus.pair_iou_macro}};
  report["n_files"] = corpus.n_files;
  for (std::size_t i = 0; i < corpus.per_file_iou.size(); ++i)
    per_file[i]["event_iou"] = corpus.per_file_iou[i];
  report["per_file"] = per_file;
  crstc::write_json_file(out_path, report);

  if (!summary_csv.empty()) {
    std::ostringstream os;
    if (!fs::exists(summary_csv))
      os << "config_hash,n_files,frame_accuracy,frame_f1,event_f1,event_iou,"
            "matched_pair_iou\n";
    os.precision(6);
    os << cfg.hash() << ',' << corpus.n_files << ',' << corpus.frames.accuracy
       << ',' << corpus.frames.f1 << ',' << corpus.events.f1 << ','
       << corpus.event_iou_macro << ',' << corpus.pair_iou_macro << '\n';
    std::ofstream append(summary_csv, std::ios::app);
    append << os.str();
  }
  std::cerr << "eval: frame f1 " << corpus.frames.f1 << ", accuracy "
            << corpus.frames.accuracy << ", event f1 " << corpus.events.f1
            << ", event iou " << corpus.event_iou_macro << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// aggregate
// ---------------------------------------------------------------------------

int cmd_aggregate(const std::string& textgrid_dir, const std::string& out_dir,
                  const CommonArgs& common) {
  const crstc::RunConfig cfg = resolve_config(common);
  const crstc::FrameGrid grid = cfg.frame_grid();
  fs::create_directories(out_dir);

  // Group TextGrids by file id: "<id>__<annotator>.TextGrid", or one file
  // with several interval tiers (each tier is an annotator).
  auto grids = sorted_files(textgrid_dir, ".textgrid");
  std::map<std::string, std::vector<fs::path>> by_id;
  for (const auto& path : grids) {
    std::string stem = path.stem().string();
    const auto sep = stem.find("__");
    by_id[sep == std::string::npos ? stem : stem.substr(0, sep)].push_back(
        path);
  }

  std::ostringstream corpus_csv;
  corpus_csv << "file,onset_s,offset_s,label\n";
  Json entries = Json::array();
  std::size_t total_warnings = 0;
  for (const auto& [id, paths] : by_id) {
    std::vector<crstc::FrameLabels> annotators;
    for (const auto& path : paths) {
      auto grid_doc =
          crstc::parse_textgrid(crstc::read_text_file(path.string()));
      for (const auto& w : grid_doc.warnings) {
        std::cerr << "aggregate: " << path.filename().string() << ": " << w
                  << "\n";
        ++total_warnings;
      }
      for (const auto& tier : grid_doc.tiers) {
        auto events = crstc::tier_to_events(tier);
        annotators.push_back(crstc::events_to_labels(events, grid));
      }
    }
    if (annotators.empty())
      throw std::runtime_error("aggregate: no interval tiers for " + id);
    auto voted = crstc::majority_vote(annotators);
    const fs::path voted_csv = fs::path(out_dir) / (id + "_voted.csv");
    std::ostringstream vcsv;
    vcsv << "frame,label\n";
    for (std::size_t t = 0; t < voted.labels.size(); ++t)
      vcsv << t << ',' << voted.labels[t] << '\n';
    crstc::write_text_file(voted_csv.string(), vcsv.str());
    for (const auto& e : crstc::labels_to_events(voted))
      corpus_csv << id << ',' << e.onset_s << ',' << e.offset_s << ','
                 << e.label << '\n';
    entries.push_back(Json{{"id", id},
                           {"annotators", annotators.size()},
                           {"voted", voted_csv.filename().string()}});
  }
  crstc::write_text_file((fs::path(out_dir) / "annotations.csv").string(),
                         corpus_csv.str());
  Json manifest = manifest_skeleton("aggregate", cfg);
  manifest["files"] = entries;
  manifest["annotations_csv"] = "annotations.csv";
  manifest["warnings"] = total_warnings;
  crstc::write_json_file((fs::path(out_dir) / "manifest.json").string(),
                         manifest);
  std::cerr << "aggregate: voted " << by_id.size() << " files\n";
  return 0;
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

int cmd_split(const std::string& ids_from, const std::string& out_path,
              const CommonArgs& common) {
  const crstc::RunConfig cfg = resolve_config(common);
  std::vector<std::string> ids;
  if (fs::is_directory(ids_from)) {
    for (const auto& entry : fs::directory_iterator(ids_from))
      if (entry.is_regular_file() &&
          entry.path().filename().string() != "manifest.json")
        ids.push_back(entry.path().stem().string());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  } else {
    std::istringstream is(crstc::read_text_file(ids_from));
    std::string line;
    while (std::getline(is, line)) {
      line = crstc::detail::trim(line);
      if (!line.empty()) ids.push_back(line);
    }
  }
  const double frac = cfg.json().at("split").at("train_frac").get<double>();
  const std::uint64_t seed =
      cfg.json().at("split").at("seed").get<std::uint64_t>();
  auto split = crstc::split_ids(ids, frac, seed);
  Json manifest = manifest_skeleton("split", cfg);
  manifest["train_frac"] = frac;
  manifest["seed"] = seed;
  manifest["train"] = split.train;
  manifest["test"] = split.test;
  crstc::write_json_file(out_path, manifest);
  std::cerr << "split: " << split.train.size() << " train / "
            << split.test.size() << " test\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CRSTC unsupervised acoustic event detection pipeline"};
  app.set_version_flag("--version", std::string(kVersion));
  app.fallthrough();  // global options may follow the subcommand

  bool config_dump = false;
  app.add_flag("--config-dump", config_dump,
               "print the resolved configuration as JSON and exit");

  CommonArgs common;
  app.add_option("--config", common.config_path, "JSON configuration file");
  app.add_option("--set", common.overrides,
                 "override a config key, e.g. --set clustering.k=4")
      ->take_all();
  app.add_option("--jobs", common.jobs, "worker threads for per-file stages")
      ->check(CLI::PositiveNumber);

  std::string arg_wav_dir, arg_out, arg_format = "bin";
  auto* features = app.add_subcommand(
      "features", "extract log-mel features from a WAV directory");
  features->add_option("wav_dir", arg_wav_dir, "directory of .wav files")
      ->required();
  features->add_option("--out", arg_out, "output directory")->required();
  features->add_option("--format", arg_format, "bin (CRSTCF1) or csv")
      ->check(CLI::IsMember({"bin", "csv"}));

  std::string synth_out;
  auto* synth = app.add_subcommand(
      "synth", "generate a synthetic dataset with known domain labels");
  synth->add_option("--out", synth_out, "output directory")->required();

  std::string train_features, train_out;
  auto* train = app.add_subcommand("train", "train the ST-VAE on features");
  train->add_option("--features", train_features, "features directory")
      ->required();
  train->add_option("--out", train_out, "output directory")->required();

  std::string seg_features, seg_ckpt, seg_out, seg_truth;
  auto* segment = app.add_subcommand(
      "segment", "cluster transition embeddings and emit events");
  segment->add_option("--features", seg_features, "features directory")
      ->required();
  segment->add_option("--checkpoint", seg_ckpt, "trained checkpoint")
      ->required();
  segment->add_option("--out", seg_out, "output directory")->required();
  segment->add_option("--truth", seg_truth, "annotation CSV for map_mode=eval");

  std::string eval_pred, eval_truth, eval_out, eval_mode = "detection",
                                               eval_summary;
  bool eval_force = false;
  auto* eval = app.add_subcommand("eval", "evaluate predictions");
  eval->add_option("--pred", eval_pred, "segment output directory")
      ->required();
  eval->add_option("--truth", eval_truth,
                   "annotation CSV (detection) or synth directory "
                   "(identifiability)")
      ->required();
  eval->add_option("--out", eval_out, "report JSON path")->required();
  eval->add_option("--mode", eval_mode, "detection or identifiability")
      ->check(CLI::IsMember({"detection", "identifiability"}));
  eval->add_option("--summary-csv", eval_summary,
                   "append a one-line summary row to this CSV");
  eval->add_flag("--force", eval_force, "ignore config hash mismatches");

  std::string agg_dir, agg_out;
  auto* aggregate = app.add_subcommand(
      "aggregate", "majority-vote TextGrid annotations into frame labels");
  aggregate->add_option("--textgrids", agg_dir, "directory of .TextGrid files")
      ->required();
  aggregate->add_option("--out", agg_out, "output directory")->required();

  std::string split_from, split_out;
  auto* split = app.add_subcommand("split", "deterministic train/test split");
  split
      ->add_option("--ids-from", split_from,
                   "directory (file stems) or text file with one id per line")
      ->required();
  split->add_option("--out", split_out, "split manifest JSON path")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (config_dump) {
      std::cout << resolve_config(common).dump() << "\n";
      return 0;
    }
    if (features->parsed())
      return cmd_features(arg_wav_dir, arg_out, arg_format, common);
    if (synth->parsed()) return cmd_synth(synth_out, common);
    if (train->parsed()) return cmd_train(train_features, train_out, common);
    if (segment->parsed())
      return cmd_segment(seg_features, seg_ckpt, seg_out, seg_truth, common);
    if (eval->parsed())
      return cmd_eval(eval_pred, eval_truth, eval_out, eval_mode, eval_summary,
                      eval_force, common);
    if (aggregate->parsed()) return cmd_aggregate(agg_dir, agg_out, common);
    if (split->parsed()) return cmd_split(split_from, split_out, common);
    std::cerr << app.help() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
