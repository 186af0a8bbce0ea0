// crstc/metrics.hpp

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

// Evaluation measures: frame-based accuracy/precision/recall/F1 from exact
// confusion counts, event-based F1 under greedy IoU matching, and event IoU
// as set coverage (with the mean matched-pair variant reported alongside).
// Corpus aggregation: frame metrics micro (pooled frames), event F1 micro
// (pooled counts), event IoU macro (mean per file).

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "crstc/segmentation.hpp"

namespace crstc {

struct FrameReport {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static FrameReport from_counts(std::size_t tp, std::size_t fp,
                                 std::size_t fn, std::size_t tn) {
    FrameReport r{tp, fp, fn, tn};
    const std::size_t total = tp + fp + fn + tn;
    r.accuracy = total ? static_cast<double>(tp + tn) / total : 0.0;
    r.precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
    r.recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
    r.f1 = (r.precision + r.recall) > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    return r;
  }
};

inline FrameReport frame_metrics(const std::vector<int>& pred,
                                 const std::vector<int>& truth) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("frame_metrics: length mismatch");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] != 0 && pred[i] != 1)
      throw std::invalid_argument("frame_metrics: labels must be binary");
    if (truth[i] != 0 && truth[i] != 1)
      throw std::invalid_argument("frame_metrics: labels must be binary");
    if (pred[i] == 1 && truth[i] == 1) ++tp;
    else if (pred[i] == 1) ++fp;
    else if (truth[i] == 1) ++fn;
    else ++tn;
  }
  return FrameReport::from_counts(tp, fp, fn, tn);
}

inline FrameReport frame_metrics(const FrameLabels& pred,
                                 const FrameLabels& truth) {
  return frame_metrics(pred.labels, truth.labels);
}

inline double interval_iou(const Event& a, const Event& b) {
  const double inter =
      std::max(0.0, std::min(a.offset_s, b.offset_s) -
                        std::max(a.onset_s, b.onset_s));
  const double uni = a.duration() + b.duration() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

struct EventReport {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double coverage_iou = 0.0;      // set-based temporal IoU
  double matched_pair_iou = 0.0;  // mean IoU over matched pairs (variant)
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (pred, truth)

  void finish() {
    precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
    recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
    f1 = (precision + recall) > 0.0
             ? 2.0 * precision * recall / (precision + recall)
             : 0.0;
  }
};

/// Greedy one-to-one matching in descending pairwise IoU; a pair is a true
/// positive iff its IoU reaches the threshold.
inline EventReport event_f1(const EventList& pred, const EventList& truth,
                            double iou_threshold = 0.5) {
  if (iou_threshold <= 0.0 || iou_threshold > 1.0)
    throw std::invalid_argument("event_f1: threshold must lie in (0, 1]");
  validate_events(pred);
  validate_events(truth);

  struct Pair {
    double iou;
    std::size_t p, t;
  };
  std::vector<Pair> pairs;
  for (std::size_t p = 0; p < pred.size(); ++p)
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const double iou = interval_iou(pred[p], truth[t]);
      if (iou >= iou_threshold) pairs.push_back({iou, p, t});
    }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.p != b.p) return a.p < b.p;
    return a.t < b.t;
  });

  std::vector<bool> p_used(pred.size(), false), t_used(truth.size(), false);
  EventReport report;
  double iou_sum = 0.0;
  for (const Pair& pr : pairs) {
    if (p_used[pr.p] || t_used[pr.t]) continue;
    p_used[pr.p] = true;
    t_used[pr.t] = true;
    report.matches.emplace_back(pr.p, pr.t);
    iou_sum += pr.iou;
  }
  report.tp = report.matches.size();
  report.fp = pred.size() - report.tp;
  report.fn = truth.size() - report.tp;
  report.matched_pair_iou =
      report.tp ? iou_sum / static_cast<double>(report.tp) : 0.0;
  report.finish();
  return report;
}

namespace detail {

// Total length of the union of cry intervals.
inline double coverage_length(const EventList& events) {
  std::vector<std::pair<double, double>> spans;
  for (const Event& e : events)
    if (e.label == 1) spans.emplace_back(e.onset_s, e.offset_s);
  std::sort(spans.begin(), spans.end());
  double total = 0.0, cur_lo = 0.0, cur_hi = -1.0;
  for (const auto& [lo, hi] : spans) {
    if (hi <= cur_hi) continue;
    if (lo > cur_hi) {
      if (cur_hi > cur_lo) total += cur_hi - cur_lo;
      cur_lo = lo;
      cur_hi = hi;
    } else {
      cur_hi = hi;
    }
  }
  if (cur_hi > cur_lo) total += cur_hi - cur_lo;
  return total;
}

inline double coverage_intersection(const EventList& a, const EventList& b) {
  double total = 0.0;
  for (const Event& ea : a) {
    if (ea.label != 1) continue;
    for (const Event& eb : b) {
      if (eb.label != 1) continue;
      total += std::max(0.0, std::min(ea.offset_s, eb.offset_s) -
                                 std::max(ea.onset_s, eb.onset_s));
    }
  }
  return total;
}

}  // namespace detail

/// Set-based temporal IoU of cry coverage: immune to event splitting.
/// Defined as 1 when both sides are empty.
inline double event_iou(const EventList& pred, const EventList& truth) {
  validate_events(pred);
  validate_events(truth);
  const double len_p = detail::coverage_length(pred);
  const double len_t = detail::coverage_length(truth);
  const double inter = detail::coverage_intersection(pred, truth);
  const double uni = len_p + len_t - inter;
  if (uni <= 0.0) return 1.0;
  return inter / uni;
}

struct CorpusReport {
  FrameReport frames;        // micro: pooled confusion counts
  EventReport events;        // micro: pooled tp/fp/fn
  double event_iou_macro = 0.0;       // mean per-file coverage IoU
  double pair_iou_macro = 0.0;        // mean per-file matched-pair IoU
  std::size_t n_files = 0;
  std::vector<double> per_file_iou;
};

struct EvalPair {
  std::vector<int> pred_frames;
  std::vector<int> truth_frames;
  EventList pred_events;
  EventList truth_events;
};

inline CorpusReport evaluate_corpus(const std::vector<EvalPair>& files,
                                    double iou_threshold = 0.5) {
  if (files.empty()) throw std::invalid_argument("evaluate_corpus: no files");
  CorpusReport report;
  report.n_files = files.size();
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const EvalPair& f : files) {
    const FrameReport fr = frame_metrics(f.pred_frames, f.truth_frames);
    tp += fr.tp;
    fp += fr.fp;
    fn += fr.fn;
    tn += fr.tn;
    const EventReport er = event_f1(f.pred_events, f.truth_events, iou_threshold);
    report.events.tp += er.tp;
    report.events.fp += er.fp;
    report.events.fn += er.fn;
    const double iou = event_iou(f.pred_events, f.truth_events);
    report.per_file_iou.push_back(iou);
    report.event_iou_macro += iou;
    report.pair_iou_macro += er.matched_pair_iou;
  }
  report.frames = FrameReport::from_counts(tp, fp, fn, tn);
  report.events.finish();
  report.event_iou_macro /= static_cast<double>(files.size());
  report.pair_iou_macro /= static_cast<double>(files.size());
  return report;
}

}  // namespace crstc
