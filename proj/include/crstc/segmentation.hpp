// crstc/segmentation.hpp

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

// From per-frame cluster labels to labeled events: majority smoothing,
// cluster-to-class mapping (accuracy-optimal against a reference, or
// energy-heuristic), run-length event assembly, and duration filtering.
// Class convention: 1 = cry, 0 = non-cry.

#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crstc/features.hpp"

namespace crstc {

struct FrameLabels {
  std::vector<int> labels;
  FrameGrid grid;

  std::size_t size() const { return labels.size(); }
};

struct Event {
  double onset_s = 0.0;
  double offset_s = 0.0;
  int label = 1;

  double duration() const { return offset_s - onset_s; }
};

using EventList = std::vector<Event>;

inline void validate_events(const EventList& events) {
  for (const Event& e : events)
    if (!(e.onset_s < e.offset_s))
      throw std::invalid_argument("event: onset must precede offset");
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].onset_s < events[i - 1].onset_s)
      throw std::invalid_argument("events: must be sorted by onset");
    if (events[i].label == events[i - 1].label &&
        events[i].onset_s < events[i - 1].offset_s)
      throw std::invalid_argument("events: same-label events overlap");
  }
}

/// Majority vote in a centered window (odd width). Edges use the truncated
/// window; ties keep the original label.
inline FrameLabels smooth(const FrameLabels& input, int window = 5) {
  if (window < 1 || window % 2 == 0)
    throw std::invalid_argument("smooth: window must be odd and >= 1");
  if (window == 1) return input;
  FrameLabels out = input;
  const int n = static_cast<int>(input.labels.size());
  const int half = window / 2;
  for (int t = 0; t < n; ++t) {
    const int lo = std::max(0, t - half);
    const int hi = std::min(n - 1, t + half);
    int max_label = 0;
    for (int i = lo; i <= hi; ++i)
      max_label = std::max(max_label, input.labels[i]);
    std::vector<int> counts(max_label + 1, 0);
    for (int i = lo; i <= hi; ++i) ++counts[input.labels[i]];
    int best = *std::max_element(counts.begin(), counts.end());
    int winner = -1;
    bool tie = false;
    for (int l = 0; l <= max_label; ++l) {
      if (counts[l] == best) {
        if (winner >= 0) tie = true;
        if (winner < 0) winner = l;
      }
    }
    out.labels[t] = tie ? input.labels[t] : winner;
  }
  return out;
}

/// Exhaustive cluster -> {cry, non-cry} assignment maximizing frame accuracy
/// against the reference. k <= 8; ties break toward the lowest assignment
/// mask (all-non-cry first).
inline FrameLabels map_clusters_eval(const FrameLabels& clusters,
                                     const FrameLabels& reference) {
  if (clusters.labels.size() != reference.labels.size())
    throw std::invalid_argument("map_clusters: length mismatch");
  int k = 0;
  for (int l : clusters.labels) {
    if (l < 0) throw std::invalid_argument("map_clusters: negative label");
    k = std::max(k, l + 1);
  }
  if (k > 8) throw std::invalid_argument("map_clusters: more than 8 clusters");
  // count, per cluster, how many frames are cry / non-cry in the reference
  std::vector<std::size_t> cry(k, 0), total(k, 0);
  for (std::size_t t = 0; t < clusters.labels.size(); ++t) {
    ++total[clusters.labels[t]];
    if (reference.labels[t] == 1) ++cry[clusters.labels[t]];
  }
  std::size_t best_correct = 0;
  unsigned best_mask = 0;
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    std::size_t correct = 0;
    for (int c = 0; c < k; ++c)
      correct += (mask >> c) & 1u ? cry[c] : total[c] - cry[c];
    if (correct > best_correct) {
      best_correct = correct;
      best_mask = mask;
    }
  }
  FrameLabels out = clusters;
  for (int& l : out.labels) l = (best_mask >> l) & 1u ? 1 : 0;
  return out;
}

/// Deployment heuristic: clusters whose mean frame RMS energy exceeds the
/// median frame energy map to cry.
inline FrameLabels map_clusters_energy(const FrameLabels& clusters,
                                       const std::vector<double>& frame_energy) {
  if (clusters.labels.size() != frame_energy.size())
    throw std::invalid_argument("map_clusters: energy length mismatch");
  int k = 0;
  for (int l : clusters.labels) k = std::max(k, l + 1);
  std::vector<double> sorted = frame_energy;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median =
      n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  std::vector<double> cluster_sum(k, 0.0);
  std::vector<std::size_t> cluster_n(k, 0);
  for (std::size_t t = 0; t < clusters.labels.size(); ++t) {
    cluster_sum[clusters.labels[t]] += frame_energy[t];
    ++cluster_n[clusters.labels[t]];
  }
  FrameLabels out = clusters;
  for (int& l : out.labels) {
    const double mean_e = cluster_sum[l] / static_cast<double>(cluster_n[l]);
    l = mean_e > median ? 1 : 0;
  }
  return out;
}

/// Maximal runs of label 1 become cry events on the frame grid.
inline EventList labels_to_events(const FrameLabels& labels) {
  for (int l : labels.labels)
    if (l != 0 && l != 1)
      throw std::invalid_argument("labels_to_events: labels must be binary");
  EventList events;
  const double fl = labels.grid.frame_len_s;
  std::size_t t = 0;
  while (t < labels.labels.size()) {
    if (labels.labels[t] != 1) {
      ++t;
      continue;
    }
    std::size_t end = t;
    while (end + 1 < labels.labels.size() && labels.labels[end + 1] == 1) ++end;
    events.push_back({t * fl, (end + 1) * fl, 1});
    t = end + 1;
  }
  return events;
}

/// A frame is labeled 1 iff at least half of it is covered by a cry event.
inline FrameLabels events_to_labels(const EventList& events,
                                    const FrameGrid& grid) {
  grid.validate();
  validate_events(events);
  for (const Event& e : events)
    if (e.onset_s < -1e-9 || e.offset_s > grid.clip_len_s + 1e-9)
      throw std::invalid_argument("events_to_labels: event outside the clip");
  FrameLabels out;
  out.grid = grid;
  out.labels.assign(grid.n_frames, 0);
  const double fl = grid.frame_len_s;
  for (std::size_t t = 0; t < grid.n_frames; ++t) {
    const double lo = t * fl, hi = (t + 1) * fl;
    double covered = 0.0;
    for (const Event& e : events) {
      if (e.label != 1) continue;
      covered += std::max(0.0, std::min(hi, e.offset_s) - std::max(lo, e.onset_s));
    }
    if (covered >= 0.5 * fl - 1e-12) out.labels[t] = 1;
  }
  return out;
}

/// Merges same-label events separated by less than max_gap_s, then drops
/// events shorter than min_s.
inline EventList min_duration_filter(const EventList& events,
                                     double min_s = 0.1,
                                     double max_gap_s = 0.1) {
  validate_events(events);
  EventList merged;
  for (const Event& e : events) {
    bool joined = false;
    for (auto it = merged.rbegin(); it != merged.rend(); ++it) {
      if (it->label != e.label) continue;
      if (e.onset_s - it->offset_s < max_gap_s) {
        it->offset_s = std::max(it->offset_s, e.offset_s);
        joined = true;
      }
      break;  // only the most recent same-label event can merge
    }
    if (!joined) merged.push_back(e);
  }
  EventList out;
  for (const Event& e : merged)
    if (!(e.duration() < min_s)) out.push_back(e);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization: CSV with header onset_s,offset_s,label and a JSON array.
// ---------------------------------------------------------------------------

inline std::string events_to_csv(const EventList& events) {
  std::ostringstream os;
  os.precision(12);
  os << "onset_s,offset_s,label\n";
  for (const Event& e : events)
    os << e.onset_s << ',' << e.offset_s << ',' << e.label << '\n';
  return os.str();
}

inline EventList events_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line.rfind("onset_s,offset_s,label", 0) != 0)
    throw std::invalid_argument("events csv: missing header");
  EventList events;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string onset, offset, label;
    if (!std::getline(row, onset, ',') || !std::getline(row, offset, ',') ||
        !std::getline(row, label, ','))
      throw std::invalid_argument("events csv: malformed row: " + line);
    events.push_back({std::stod(onset), std::stod(offset), std::stoi(label)});
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) {
                     return a.onset_s < b.onset_s;
                   });
  validate_events(events);
  return events;
}

}  // namespace crstc
