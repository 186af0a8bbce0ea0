// crstc/annotations.hpp

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

// Ground-truth annotation handling: long-form Praat TextGrid interval tiers
// (point tiers are skipped with a warning), the per-corpus annotation CSV
// (file,onset_s,offset_s,label), per-frame majority voting across annotators,
// and seeded train/test splits.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crstc/rng.hpp"
#include "crstc/segmentation.hpp"

namespace crstc {

struct AnnotationInterval {
  double xmin = 0.0;
  double xmax = 0.0;
  std::string text;
};

struct AnnotationTier {
  std::string name;
  double xmin = 0.0;
  double xmax = 0.0;
  std::vector<AnnotationInterval> intervals;
};

struct TextGrid {
  double xmin = 0.0;
  double xmax = 0.0;
  std::vector<AnnotationTier> tiers;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline double parse_number(const std::string& value, const std::string& line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    while (used < value.size() &&
           std::isspace(static_cast<unsigned char>(value[used])))
      ++used;
    if (used != value.size())
      throw std::invalid_argument("trailing garbage");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("textgrid: malformed numeric field: " + line);
  }
}

// Praat quotes strings and doubles embedded quotes.
inline std::string unquote(const std::string& value, const std::string& line) {
  const std::size_t first = value.find('"');
  const std::size_t last = value.rfind('"');
  if (first == std::string::npos || last == first)
    throw std::runtime_error("textgrid: malformed string field: " + line);
  std::string raw = value.substr(first + 1, last - first - 1);
  std::string out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '"' && i + 1 < raw.size() && raw[i + 1] == '"') ++i;
    out.push_back(raw[i]);
  }
  return out;
}

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Parses a long-form TextGrid. Interval tiers only; point tiers produce a
/// warning and are skipped.
inline TextGrid parse_textgrid(const std::string& text) {
  if (text.size() >= 2) {
    const unsigned char b0 = text[0], b1 = text[1];
    if ((b0 == 0xFF && b1 == 0xFE) || (b0 == 0xFE && b1 == 0xFF))
      throw std::runtime_error("textgrid: UTF-16 encoding is not supported");
  }
  std::string body = text;
  if (body.size() >= 3 && static_cast<unsigned char>(body[0]) == 0xEF &&
      static_cast<unsigned char>(body[1]) == 0xBB &&
      static_cast<unsigned char>(body[2]) == 0xBF)
    body.erase(0, 3);  // UTF-8 BOM

  std::vector<std::string> lines;
  {
    std::istringstream is(body);
    std::string line;
    while (std::getline(is, line)) lines.push_back(detail::trim(line));
  }

  auto value_of = [](const std::string& line) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("textgrid: expected key = value: " + line);
    return detail::trim(line.substr(eq + 1));
  };

  TextGrid grid;
  bool saw_header = false;
  for (const auto& line : lines)
    if (line.rfind("Object class", 0) == 0 &&
        line.find("TextGrid") != std::string::npos)
      saw_header = true;
  if (!saw_header)
    throw std::runtime_error("textgrid: missing Object class = \"TextGrid\"");

  std::size_t i = 0;
  const std::size_t n = lines.size();
  // file-level xmin/xmax are the first two encountered
  bool got_xmin = false, got_xmax = false;
  for (; i < n; ++i) {
    const std::string& line = lines[i];
    if (!got_xmin && line.rfind("xmin", 0) == 0) {
      grid.xmin = detail::parse_number(value_of(line), line);
      got_xmin = true;
    } else if (!got_xmax && line.rfind("xmax", 0) == 0) {
      grid.xmax = detail::parse_number(value_of(line), line);
      got_xmax = true;
    } else if (line.rfind("item", 0) == 0) {
      break;
    }
  }

  while (i < n) {
    // find next numbered item
    while (i < n && !(lines[i].rfind("item [", 0) == 0 &&
                      lines[i].find("[]") == std::string::npos))
      ++i;
    if (i >= n) break;
    ++i;  // into the item body
    std::string klass, name;
    double txmin = 0.0, txmax = 0.0;
    long n_intervals = -1;
    AnnotationTier tier;
    bool is_interval_tier = false, skip_tier = false;
    for (; i < n; ++i) {
      const std::string& line = lines[i];
      if (line.rfind("item [", 0) == 0 &&
          line.find("[]") == std::string::npos)
        break;  // next tier
      if (line.rfind("class", 0) == 0) {
        klass = detail::unquote(value_of(line), line);
        if (klass == "IntervalTier") {
          is_interval_tier = true;
        } else {
          grid.warnings.push_back("skipped non-interval tier of class \"" +
                                  klass + "\"");
          skip_tier = true;
        }
      } else if (line.rfind("name", 0) == 0) {
        name = detail::unquote(value_of(line), line);
      } else if (line.rfind("xmin", 0) == 0 && n_intervals < 0) {
        txmin = detail::parse_number(value_of(line), line);
      } else if (line.rfind("xmax", 0) == 0 && n_intervals < 0) {
        txmax = detail::parse_number(value_of(line), line);
      } else if (line.rfind("intervals: size", 0) == 0) {
        n_intervals =
            static_cast<long>(detail::parse_number(value_of(line), line));
        tier.name = name;
        tier.xmin = txmin;
        tier.xmax = txmax;
        // parse interval blocks
        long parsed = 0;
        ++i;
        while (i < n && parsed < n_intervals) {
          if (lines[i].rfind("intervals [", 0) != 0)
            throw std::runtime_error("textgrid: expected intervals [" +
                                     std::to_string(parsed + 1) + "]");
          ++i;
          AnnotationInterval interval;
          bool have_min = false, have_max = false, have_text = false;
          for (; i < n && !(have_min && have_max && have_text); ++i) {
            const std::string& field = lines[i];
            if (field.rfind("xmin", 0) == 0) {
              interval.xmin = detail::parse_number(value_of(field), field);
              have_min = true;
            } else if (field.rfind("xmax", 0) == 0) {
              interval.xmax = detail::parse_number(value_of(field), field);
              have_max = true;
            } else if (field.rfind("text", 0) == 0) {
              interval.text = detail::unquote(value_of(field), field);
              have_text = true;
            } else {
              throw std::runtime_error("textgrid: unexpected line in interval: " +
                                       field);
            }
          }
          if (!(have_min && have_max && have_text))
            throw std::runtime_error("textgrid: truncated interval block");
          tier.intervals.push_back(interval);
          ++parsed;
        }
        --i;  // compensate the outer loop increment
      }
    }
    if (skip_tier || !is_interval_tier) continue;

    // validate: start < end, sorted, contiguous
    for (const auto& iv : tier.intervals) {
      if (!(iv.xmin < iv.xmax))
        throw std::runtime_error(
            "textgrid: interval with start >= end in tier \"" + tier.name +
            "\"");
    }
    for (std::size_t k = 1; k < tier.intervals.size(); ++k) {
      if (std::fabs(tier.intervals[k].xmin - tier.intervals[k - 1].xmax) >
          1e-9)
        throw std::runtime_error(
            "textgrid: non-contiguous intervals in tier \"" + tier.name +
            "\"");
    }
    grid.tiers.push_back(std::move(tier));
  }
  return grid;
}

/// Long-form serialization; parse(serialize(parse(x))) is structurally
/// identical to parse(x).
inline std::string serialize_textgrid(const TextGrid& grid) {
  std::ostringstream os;
  os << "File type = \"ooTextFile\"\n";
  os << "Object class = \"TextGrid\"\n\n";
  os << "xmin = " << detail::format_number(grid.xmin) << " \n";
  os << "xmax = " << detail::format_number(grid.xmax) << " \n";
  os << "tiers? <exists> \n";
  os << "size = " << grid.tiers.size() << " \n";
  os << "item []: \n";
  for (std::size_t t = 0; t < grid.tiers.size(); ++t) {
    const AnnotationTier& tier = grid.tiers[t];
    os << "    item [" << (t + 1) << "]:\n";
    os << "        class = \"IntervalTier\" \n";
    os << "        name = " << detail::quote(tier.name) << " \n";
    os << "        xmin = " << detail::format_number(tier.xmin) << " \n";
    os << "        xmax = " << detail::format_number(tier.xmax) << " \n";
    os << "        intervals: size = " << tier.intervals.size() << " \n";
    for (std::size_t k = 0; k < tier.intervals.size(); ++k) {
      const AnnotationInterval& iv = tier.intervals[k];
      os << "        intervals [" << (k + 1) << "]:\n";
      os << "            xmin = " << detail::format_number(iv.xmin) << " \n";
      os << "            xmax = " << detail::format_number(iv.xmax) << " \n";
      os << "            text = " << detail::quote(iv.text) << " \n";
    }
  }
  return os.str();
}

/// Interval text -> class mapping. Empty and listed texts (after trimming
/// and lowercasing) are non-cry; anything else is cry.
struct LabelMap {
  std::vector<std::string> non_cry_texts = {"", "silence", "noise"};

  int label_for(const std::string& text) const {
    std::string key = detail::trim(text);
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    for (const auto& t : non_cry_texts)
      if (key == t) return 0;
    return 1;
  }
};

/// Cry events from an interval tier; adjacent cry intervals merge.
inline EventList tier_to_events(const AnnotationTier& tier,
                                const LabelMap& map = {}) {
  EventList events;
  for (const auto& iv : tier.intervals) {
    if (map.label_for(iv.text) != 1) continue;
    if (!events.empty() && std::fabs(events.back().offset_s - iv.xmin) < 1e-9)
      events.back().offset_s = iv.xmax;
    else
      events.push_back({iv.xmin, iv.xmax, 1});
  }
  return events;
}

/// Parses the corpus annotation CSV (header file,onset_s,offset_s,label)
/// into per-file sorted event lists.
inline std::map<std::string, EventList> parse_csv_annotations(
    const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) ||
      detail::trim(line).rfind("file,onset_s,offset_s,label", 0) != 0)
    throw std::invalid_argument(
        "annotations csv: expected header file,onset_s,offset_s,label");
  std::map<std::string, EventList> out;
  while (std::getline(is, line)) {
    if (detail::trim(line).empty()) continue;
    std::istringstream row(line);
    std::string file, onset, offset, label;
    if (!std::getline(row, file, ',') || !std::getline(row, onset, ',') ||
        !std::getline(row, offset, ',') || !std::getline(row, label, ','))
      throw std::invalid_argument("annotations csv: malformed row: " + line);
    Event e{std::stod(onset), std::stod(offset), std::stoi(label)};
    if (!(e.onset_s < e.offset_s))
      throw std::invalid_argument("annotations csv: offset <= onset: " + line);
    out[file].push_back(e);
  }
  for (auto& [file, events] : out) {
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) {
                       return a.onset_s < b.onset_s;
                     });
    validate_events(events);  // rejects overlapping same-label rows
  }
  return out;
}

/// Per-frame majority across annotators; exact ties resolve to non-cry.
inline FrameLabels majority_vote(const std::vector<FrameLabels>& annotators) {
  if (annotators.empty())
    throw std::invalid_argument("majority_vote: no annotators");
  const std::size_t T = annotators[0].labels.size();
  for (const auto& a : annotators)
    if (a.labels.size() != T)
      throw std::invalid_argument("majority_vote: length mismatch");
  FrameLabels out = annotators[0];
  for (std::size_t t = 0; t < T; ++t) {
    std::size_t cry = 0;
    for (const auto& a : annotators) cry += a.labels[t] == 1;
    const std::size_t non_cry = annotators.size() - cry;
    out.labels[t] = cry > non_cry ? 1 : 0;
  }
  return out;
}

struct SplitResult {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

/// Seeded shuffle then prefix split; both sides come back sorted.
inline SplitResult split_ids(std::vector<std::string> ids, double train_frac,
                             std::uint64_t seed) {
  if (ids.empty()) throw std::invalid_argument("split: empty id list");
  if (train_frac <= 0.0 || train_frac >= 1.0)
    throw std::invalid_argument("split: train_frac must lie in (0, 1)");
  Rng rng(seed);
  rng.shuffle(ids);
  const std::size_t n_train = static_cast<std::size_t>(std::min<long long>(
      static_cast<long long>(ids.size()),
      std::llround(train_frac * static_cast<double>(ids.size()))));
  SplitResult out;
  out.train.assign(ids.begin(), ids.begin() + n_train);
  out.test.assign(ids.begin() + n_train, ids.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

}  // namespace crstc
