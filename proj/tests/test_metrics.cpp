// tests/test_metrics.cpp

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

#include "crstc/metrics.hpp"
#include "crstc/rng.hpp"

using crstc::Event;
using crstc::EventList;

namespace {

// Brute-force confusion counter, independent code path from frame_metrics.
struct BruteCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

BruteCounts brute_confusion(const std::vector<int>& pred,
                            const std::vector<int>& truth) {
  BruteCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == 1, t = truth[i] == 1;
    if (p && t) ++c.tp;
    if (p && !t) ++c.fp;
    if (!p && t) ++c.fn;
    if (!p && !t) ++c.tn;
  }
  return c;
}

}  // namespace

TEST_CASE("frame_metrics: identity and degenerate cases", "[metrics]") {
  SECTION("perfect prediction") {
    std::vector<int> labels = {1, 0, 1, 1, 0};
    auto r = crstc::frame_metrics(labels, labels);
    REQUIRE(r.accuracy == 1.0);
    REQUIRE(r.f1 == 1.0);
  }
  SECTION("hand-computed confusion matrix") {
    std::vector<int> truth = {1, 1, 0, 0, 0, 0};
    std::vector<int> pred = {1, 0, 0, 0, 1, 0};
    auto r = crstc::frame_metrics(pred, truth);
    REQUIRE(r.tp == 1);
    REQUIRE(r.fp == 1);
    REQUIRE(r.fn == 1);
    REQUIRE(r.tn == 3);
    REQUIRE(r.accuracy == Approx(4.0 / 6.0));
    REQUIRE(r.precision == Approx(0.5));
    REQUIRE(r.recall == Approx(0.5));
    REQUIRE(r.f1 == Approx(0.5));
  }
  SECTION("all-negative agreement: accuracy 1, f1 defined as 0") {
    std::vector<int> zeros(10, 0);
    auto r = crstc::frame_metrics(zeros, zeros);
    REQUIRE(r.accuracy == 1.0);
    REQUIRE(r.f1 == 0.0);
  }
  SECTION("length mismatch rejected") {
    REQUIRE_THROWS_AS(crstc::frame_metrics({1}, {1, 0}),
                      std::invalid_argument);
  }
}

TEST_CASE("frame_metrics agrees exactly with the brute-force counter",
          "[metrics][oracle][property]") {
  crstc::Rng rng(321);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(160);
    std::vector<int> pred(n), truth(n);
    for (auto& l : pred) l = static_cast<int>(rng.uniform_index(2));
    for (auto& l : truth) l = static_cast<int>(rng.uniform_index(2));
    auto r = crstc::frame_metrics(pred, truth);
    auto b = brute_confusion(pred, truth);
    REQUIRE(r.tp == b.tp);
    REQUIRE(r.fp == b.fp);
    REQUIRE(r.fn == b.fn);
    REQUIRE(r.tn == b.tn);
    const double acc =
        static_cast<double>(b.tp + b.tn) / static_cast<double>(n);
    REQUIRE(r.accuracy == Approx(acc).margin(1e-15));
  }
}

TEST_CASE("event_f1: worked examples", "[metrics][oracle]") {
  SECTION("identical lists score 1") {
    EventList events = {{0.0, 1.0, 1}, {2.0, 3.0, 1}};
    auto r = crstc::event_f1(events, events);
    REQUIRE(r.f1 == 1.0);
    REQUIRE(r.tp == 2);
  }
  SECTION("hand IoU arithmetic: one match, one miss") {
    // truth {[0,1],[2,3]}, pred {[0.1,0.9],[2.5,4.0]}:
    //   IoU(pred0, truth0) = 0.8 / 1.0 = 0.8 >= 0.5 -> match
    //   IoU(pred1, truth1) = 0.5 / 2.0 = 0.25 < 0.5 -> no match
    EventList truth = {{0.0, 1.0, 1}, {2.0, 3.0, 1}};
    EventList pred = {{0.1, 0.9, 1}, {2.5, 4.0, 1}};
    auto r = crstc::event_f1(pred, truth, 0.5);
    REQUIRE(r.tp == 1);
    REQUIRE(r.fp == 1);
    REQUIRE(r.fn == 1);
    REQUIRE(r.f1 == Approx(0.5));
    REQUIRE(r.matched_pair_iou == Approx(0.8));
  }
  SECTION("empty prediction against non-empty truth") {
    EventList truth = {{0.0, 1.0, 1}};
    auto r = crstc::event_f1({}, truth);
    REQUIRE(r.f1 == 0.0);
    REQUIRE(r.fn == 1);
  }
  SECTION("threshold domain") {
    REQUIRE_THROWS_AS(crstc::event_f1({}, {}, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(crstc::event_f1({}, {}, 1.5), std::invalid_argument);
  }
}

TEST_CASE("event_f1 symmetry: swapping sides swaps precision and recall",
          "[metrics][property]") {
  crstc::Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    auto random_events = [&rng]() {
      EventList out;
      double t = 0.0;
      const std::size_t n = rng.uniform_index(6);
      for (std::size_t i = 0; i < n; ++i) {
        t += rng.uniform(0.05, 1.0);
        const double end = t + rng.uniform(0.05, 1.0);
        out.push_back({t, end, 1});
        t = end;
      }
      return out;
    };
    EventList a = random_events(), b = random_events();
    auto ab = crstc::event_f1(a, b);
    auto ba = crstc::event_f1(b, a);
    REQUIRE(ab.tp == ba.tp);
    REQUIRE(ab.precision == Approx(ba.recall).margin(1e-12));
    REQUIRE(ab.recall == Approx(ba.precision).margin(1e-12));
    REQUIRE(ab.f1 == Approx(ba.f1).margin(1e-12));
  }
}

TEST_CASE("event_iou: interval arithmetic and symmetry", "[metrics][oracle]") {
  SECTION("pred [1,3] vs truth [2,4] gives 1/3") {
    EventList pred = {{1.0, 3.0, 1}};
    EventList truth = {{2.0, 4.0, 1}};
    REQUIRE(crstc::event_iou(pred, truth) == Approx(1.0 / 3.0));
    REQUIRE(crstc::event_iou(truth, pred) == Approx(1.0 / 3.0));
  }
  SECTION("identical coverage gives 1") {
    EventList a = {{0.5, 2.0, 1}};
    REQUIRE(crstc::event_iou(a, a) == 1.0);
  }
  SECTION("disjoint coverage gives 0") {
    EventList pred = {{0.0, 1.0, 1}};
    EventList truth = {{2.0, 3.0, 1}};
    REQUIRE(crstc::event_iou(pred, truth) == 0.0);
  }
  SECTION("both empty defined as 1") {
    REQUIRE(crstc::event_iou({}, {}) == 1.0);
  }
  SECTION("splitting an event into abutting halves changes nothing") {
    EventList whole = {{1.0, 3.0, 1}};
    EventList split = {{1.0, 1.7, 1}, {1.7, 3.0, 1}};
    EventList truth = {{0.5, 2.5, 1}};
    REQUIRE(crstc::event_iou(whole, truth) ==
            Approx(crstc::event_iou(split, truth)).margin(1e-12));
  }
}

TEST_CASE("evaluate_corpus: pooling rules", "[metrics]") {
  using crstc::EvalPair;
  SECTION("single file equals per-file metrics") {
    EvalPair f;
    f.pred_frames = {1, 0, 1, 0};
    f.truth_frames = {1, 1, 0, 0};
    f.pred_events = {{0.0, 0.05, 1}};
    f.truth_events = {{0.0, 0.05, 1}};
    auto corpus = crstc::evaluate_corpus({f});
    auto single = crstc::frame_metrics(f.pred_frames, f.truth_frames);
    REQUIRE(corpus.frames.accuracy == single.accuracy);
    REQUIRE(corpus.frames.f1 == single.f1);
    REQUIRE(corpus.event_iou_macro ==
            crstc::event_iou(f.pred_events, f.truth_events));
  }
  SECTION("pooled frame accuracy over equal-sized files") {
    EvalPair perfect;
    perfect.pred_frames = {1, 1, 0, 0};
    perfect.truth_frames = {1, 1, 0, 0};
    EvalPair half;
    half.pred_frames = {1, 1, 0, 0};
    half.truth_frames = {1, 0, 1, 0};
    auto corpus = crstc::evaluate_corpus({perfect, half});
    REQUIRE(corpus.frames.accuracy == Approx(0.75));
  }
  SECTION("duplicating a file leaves micro frame metrics unchanged") {
    EvalPair f;
    f.pred_frames = {1, 0, 0, 1, 1};
    f.truth_frames = {1, 1, 0, 0, 1};
    auto once = crstc::evaluate_corpus({f});
    auto twice = crstc::evaluate_corpus({f, f});
    REQUIRE(once.frames.accuracy == Approx(twice.frames.accuracy));
    REQUIRE(once.frames.f1 == Approx(twice.frames.f1));
  }
  SECTION("empty corpus rejected") {
    REQUIRE_THROWS_AS(crstc::evaluate_corpus({}), std::invalid_argument);
  }
}
