// tests/cli_test.cpp

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

// End-to-end checks that drive the crstc binary (path injected at compile
// time) through synth -> train -> segment -> eval, plus the file-facing
// subcommands.

#define CATCH_CONFIG_MAIN
#include <catch2/catch.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "crstc/annotations.hpp"
#include "crstc/config.hpp"
#include "crstc/pipeline.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using crstc::Json;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args) {
  static const std::string binary = CRSTC_BIN_PATH;
  testsupport::ScratchDir io("cli_io");
  const std::string out_path = io.file("out.txt");
  const std::string err_path = io.file("err.txt");
  const std::string cmd =
      binary + " " + args + " > " + out_path + " 2> " + err_path;
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = crstc::read_text_file(out_path);
  r.err = crstc::read_text_file(err_path);
  return r;
}

// Small synthetic + tiny model so the whole pipeline runs in seconds.
std::string tiny_config_json() {
  return R"({
  "synth": {"n_sequences": 6, "frames": 48, "latent_dim": 4, "obs_dim": 4,
            "min_dwell": 8, "mean_dwell": 14, "seed": 5},
  "stvae": {"latent_dim": 4, "encoder_hidden": [16], "decoder_hidden": [16],
            "lstm_hidden": 8, "epochs": 6, "batch_size": 3, "seed": 5},
  "segmentation": {"smooth_window": 3}
})";
}

std::string read_file(const fs::path& p) {
  return crstc::read_text_file(p.string());
}

}  // namespace

TEST_CASE("cli: version and config dump", "[cli]") {
  auto version = run_cli("--version");
  REQUIRE(version.code == 0);
  REQUIRE(version.out.find("crstc") != std::string::npos);

  auto dump = run_cli("--config-dump --set clustering.k=6");
  REQUIRE(dump.code == 0);
  auto parsed = Json::parse(dump.out);
  REQUIRE(parsed["clustering"]["k"] == 6);

  auto bad = run_cli("--config-dump --set clustering.nope=1");
  REQUIRE(bad.code != 0);
  REQUIRE(bad.err.find("unknown") != std::string::npos);
}

TEST_CASE("cli: features on an empty directory succeeds with an empty "
          "manifest",
          "[cli]") {
  testsupport::ScratchDir dir("cli_feat_empty");
  fs::create_directories(dir.file("wavs"));
  auto r = run_cli("features " + dir.file("wavs") + " --out " +
                   dir.file("out"));
  REQUIRE(r.code == 0);
  auto manifest = crstc::read_json_file(dir.file("out") + "/manifest.json");
  REQUIRE(manifest["files"].empty());
  REQUIRE(manifest.contains("config_hash"));
}

TEST_CASE("cli: features extracts deterministic matrices", "[cli]") {
  testsupport::ScratchDir dir("cli_feat");
  const std::string wavs = dir.file("wavs");
  fs::create_directories(wavs);
  std::vector<double> tone(16000 * 2);
  for (std::size_t i = 0; i < tone.size(); ++i)
    tone[i] = 0.4 * std::sin(2.0 * 3.14159 * 500.0 * i / 16000.0);
  testsupport::write_wav_pcm16(wavs + "/a.wav", 16000, {tone});
  testsupport::write_wav_pcm16(wavs + "/b.wav", 8000,
                               {std::vector<double>(8000, 0.1)});

  auto r1 = run_cli("features " + wavs + " --out " + dir.file("out1"));
  REQUIRE(r1.code == 0);
  auto manifest = crstc::read_json_file(dir.file("out1") + "/manifest.json");
  REQUIRE(manifest["files"].size() == 2);
  for (const auto& f : manifest["files"]) {
    REQUIRE(f["rows"] == 160);
    REQUIRE(f["cols"] == 40);
  }
  // resampled + padded to the full grid regardless of input rate/length
  auto rows = crstc::load_matrix_binary(dir.file("out1") + "/a.fmat");
  REQUIRE(rows.size() == 160);

  // parallel workers must not change the outputs
  auto r2 = run_cli("features " + wavs + " --out " + dir.file("out2") +
                    " --jobs 4");
  REQUIRE(r2.code == 0);
  REQUIRE(read_file(dir.file("out1") + "/a.fmat") ==
          read_file(dir.file("out2") + "/a.fmat"));
  REQUIRE(read_file(dir.file("out1") + "/manifest.json") ==
          read_file(dir.file("out2") + "/manifest.json"));
}

TEST_CASE("cli: features fails loudly on an unreadable file", "[cli]") {
  testsupport::ScratchDir dir("cli_feat_bad");
  const std::string wavs = dir.file("wavs");
  fs::create_directories(wavs);
  std::ofstream(wavs + "/broken.wav") << "not a wav";
  auto r = run_cli("features " + wavs + " --out " + dir.file("out"));
  REQUIRE(r.code != 0);
  REQUIRE(r.err.find("broken.wav") != std::string::npos);
}

TEST_CASE("cli: full synthetic pipeline", "[cli][pipeline]") {
  testsupport::ScratchDir dir("cli_pipe");
  const std::string cfg_path = dir.file("config.json");
  std::ofstream(cfg_path) << tiny_config_json();
  const std::string common = " --config " + cfg_path;

  // synth is byte-deterministic
  auto s1 = run_cli("synth --out " + dir.file("synth1") + common);
  REQUIRE(s1.code == 0);
  auto s2 = run_cli("synth --out " + dir.file("synth2") + common);
  REQUIRE(s2.code == 0);
  auto m1 = crstc::read_json_file(dir.file("synth1") + "/manifest.json");
  REQUIRE(m1["files"].size() == 6);
  REQUIRE(read_file(dir.file("synth1") + "/seq0000.fmat") ==
          read_file(dir.file("synth2") + "/seq0000.fmat"));
  REQUIRE(read_file(dir.file("synth1") + "/seq0000_truth.csv") ==
          read_file(dir.file("synth2") + "/seq0000_truth.csv"));

  // both domains appear across the corpus
  bool has0 = false, has1 = false;
  for (const auto& f : m1["files"]) {
    auto u = crstc::domain_labels_from_csv(read_file(
        fs::path(dir.file("synth1")) / f["truth"].get<std::string>()));
    for (int d : u) (d == 0 ? has0 : has1) = true;
  }
  REQUIRE(has0);
  REQUIRE(has1);

  // train
  auto t = run_cli("train --features " + dir.file("synth1") + " --out " +
                   dir.file("model") + common);
  REQUIRE(t.code == 0);
  REQUIRE(fs::exists(dir.file("model") + "/checkpoint.bin"));
  auto loss_csv = read_file(dir.file("model") + "/loss.csv");
  REQUIRE(loss_csv.rfind("epoch,recon,kl,sparse,total", 0) == 0);
  REQUIRE(std::count(loss_csv.begin(), loss_csv.end(), '\n') == 7);  // header+6

  // segment
  auto g = run_cli("segment --features " + dir.file("synth1") +
                   " --checkpoint " + dir.file("model") + "/checkpoint.bin" +
                   " --out " + dir.file("seg") + common);
  REQUIRE(g.code == 0);
  auto seg_manifest = crstc::read_json_file(dir.file("seg") + "/manifest.json");
  REQUIRE(seg_manifest["files"].size() == 6);
  REQUIRE(fs::exists(dir.file("seg") + "/seq0000_events.csv"));
  REQUIRE(fs::exists(dir.file("seg") + "/seq0000_clusters.csv"));
  // events JSON mirrors the CSV schema
  auto jevents = crstc::read_json_file(dir.file("seg") + "/seq0000_events.json");
  auto cevents = crstc::events_from_csv(
      read_file(dir.file("seg") + "/seq0000_events.csv"));
  REQUIRE(jevents.size() == cevents.size());
  for (std::size_t i = 0; i < cevents.size(); ++i) {
    REQUIRE(jevents[i]["onset_s"].get<double>() ==
            Approx(cevents[i].onset_s));
    REQUIRE(jevents[i]["offset_s"].get<double>() ==
            Approx(cevents[i].offset_s));
    REQUIRE(jevents[i]["label"].get<int>() == cevents[i].label);
  }

  // eval identifiability: report exists with a score in [0, 1]
  auto e = run_cli("eval --pred " + dir.file("seg") + " --truth " +
                   dir.file("synth1") + " --out " + dir.file("report.json") +
                   " --mode identifiability" + common);
  REQUIRE(e.code == 0);
  auto report = crstc::read_json_file(dir.file("report.json"));
  const double score = report["identifiability_mean"].get<double>();
  REQUIRE(score >= 0.0);
  REQUIRE(score <= 1.0);
  REQUIRE(report["per_file"].size() == 6);

  // config hash gate: different config must be refused, --force overrides
  auto refused = run_cli("eval --pred " + dir.file("seg") + " --truth " +
                         dir.file("synth1") + " --out " +
                         dir.file("r2.json") + " --mode identifiability" +
                         common + " --set clustering.k=5");
  REQUIRE(refused.code != 0);
  REQUIRE(refused.err.find("hash mismatch") != std::string::npos);
  auto forced = run_cli("eval --pred " + dir.file("seg") + " --truth " +
                        dir.file("synth1") + " --out " + dir.file("r3.json") +
                        " --mode identifiability --force" + common +
                        " --set clustering.k=5");
  REQUIRE(forced.code == 0);

  // checkpoint/feature dimension mismatch is a hard error
  auto mismatch = run_cli(
      "segment --features " + dir.file("synth1") + " --checkpoint " +
      dir.file("model") + "/checkpoint.bin --out " + dir.file("seg_bad") +
      common + " --set stvae.latent_dim=3 --set synth.latent_dim=3 --set "
      "synth.obs_dim=3");
  REQUIRE(mismatch.code == 0);  // same checkpoint still fits 4-dim features

  auto synth3 = run_cli("synth --out " + dir.file("synth3") + common +
                        " --set synth.latent_dim=3 --set synth.obs_dim=3");
  REQUIRE(synth3.code == 0);
  auto seg_bad = run_cli("segment --features " + dir.file("synth3") +
                         " --checkpoint " + dir.file("model") +
                         "/checkpoint.bin --out " + dir.file("seg_bad2") +
                         common);
  REQUIRE(seg_bad.code != 0);
  REQUIRE(seg_bad.err.find("dimension") != std::string::npos);
}

TEST_CASE("cli: eval detection scores a hand-built perfect prediction",
          "[cli]") {
  testsupport::ScratchDir dir("cli_eval");
  // truth annotations
  const std::string truth_csv = dir.file("truth.csv");
  std::ofstream(truth_csv) << "file,onset_s,offset_s,label\n"
                              "a,1.0,2.0,1\n"
                              "a,4.0,5.5,1\n"
                              "b,0.5,0.8,1\n";
  // hand-built segment output predicting exactly the truth
  const std::string pred = dir.file("pred");
  fs::create_directories(pred);
  std::ofstream(pred + "/a_events.csv") << "onset_s,offset_s,label\n"
                                           "1.0,2.0,1\n"
                                           "4.0,5.5,1\n";
  std::ofstream(pred + "/b_events.csv") << "onset_s,offset_s,label\n"
                                           "0.5,0.8,1\n";
  crstc::RunConfig cfg;
  Json manifest = {
      {"kind", "segment"},
      {"config_hash", cfg.hash()},
      {"files", Json::array({Json{{"id", "a"}, {"events", "a_events.csv"}},
                             Json{{"id", "b"}, {"events", "b_events.csv"}}})}};
  crstc::write_json_file(pred + "/manifest.json", manifest);

  const std::string summary = dir.file("summary.csv");
  auto r = run_cli("eval --pred " + pred + " --truth " + truth_csv +
                   " --out " + dir.file("report.json") + " --summary-csv " +
                   summary);
  REQUIRE(r.code == 0);
  auto report = crstc::read_json_file(dir.file("report.json"));
  REQUIRE(report["frame"]["f1"].get<double>() == 1.0);
  REQUIRE(report["frame"]["accuracy"].get<double>() == 1.0);
  REQUIRE(report["event"]["f1"].get<double>() == 1.0);
  REQUIRE(report["event"]["iou"].get<double>() == 1.0);
  const std::string csv = read_file(summary);
  REQUIRE(csv.find("frame_accuracy") != std::string::npos);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("cli: aggregate majority-votes TextGrid annotators", "[cli]") {
  testsupport::ScratchDir dir("cli_agg");
  const std::string grids = dir.file("grids");
  fs::create_directories(grids);

  auto write_grid = [&](const std::string& name, double cry_start,
                        double cry_end) {
    crstc::TextGrid g;
    g.xmin = 0.0;
    g.xmax = 8.0;
    crstc::AnnotationTier tier;
    tier.name = "cry";
    tier.xmin = 0.0;
    tier.xmax = 8.0;
    if (cry_start > 0.0)
      tier.intervals.push_back({0.0, cry_start, ""});
    tier.intervals.push_back({cry_start, cry_end, "cry"});
    if (cry_end < 8.0) tier.intervals.push_back({cry_end, 8.0, ""});
    g.tiers.push_back(tier);
    crstc::write_text_file(grids + "/" + name,
                           crstc::serialize_textgrid(g));
  };
  // two annotators say [1, 3], one says [5, 6]: majority is [1, 3]
  write_grid("fileA__ann1.TextGrid", 1.0, 3.0);
  write_grid("fileA__ann2.TextGrid", 1.0, 3.0);
  write_grid("fileA__ann3.TextGrid", 5.0, 6.0);

  auto r = run_cli("aggregate --textgrids " + grids + " --out " +
                   dir.file("agg"));
  INFO(r.err);
  REQUIRE(r.code == 0);
  const std::string csv = read_file(dir.file("agg") + "/annotations.csv");
  REQUIRE(csv.find("fileA,1,3,1") != std::string::npos);
  REQUIRE(csv.find("5,6") == std::string::npos);
  REQUIRE(fs::exists(dir.file("agg") + "/fileA_voted.csv"));
}

TEST_CASE("cli: split produces a deterministic manifest", "[cli]") {
  testsupport::ScratchDir dir("cli_split");
  const std::string ids = dir.file("ids.txt");
  {
    std::ofstream os(ids);
    for (int i = 0; i < 10; ++i) os << "file" << i << "\n";
  }
  auto r1 = run_cli("split --ids-from " + ids + " --out " + dir.file("s1.json"));
  REQUIRE(r1.code == 0);
  auto r2 = run_cli("split --ids-from " + ids + " --out " + dir.file("s2.json"));
  REQUIRE(r2.code == 0);
  auto s1 = crstc::read_json_file(dir.file("s1.json"));
  auto s2 = crstc::read_json_file(dir.file("s2.json"));
  REQUIRE(s1["train"].size() == 8);
  REQUIRE(s1["test"].size() == 2);
  REQUIRE(s1["train"] == s2["train"]);
  REQUIRE(s1["test"] == s2["test"]);
}
