// crstc/features.hpp

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

// Frame-aligned feature extraction: non-overlapping Hann-windowed frames on a
// fixed 0.05 s grid, triangular mel filterbank, log-mel (optionally MFCC)
// features, per-dataset standardization, and feature-matrix file formats.
//
// Binary matrix layout (little endian):
//   magic "CRSTCF1" (7 bytes), u32 rows, u32 cols, row-major float32 payload.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crstc/audio.hpp"

namespace crstc {

struct FrameGrid {
  double frame_len_s = 0.05;
  std::size_t n_frames = 160;
  double clip_len_s = 8.0;

  void validate() const {
    if (frame_len_s <= 0.0 || clip_len_s <= 0.0 || n_frames == 0)
      throw std::invalid_argument("FrameGrid: fields must be positive");
    if (std::fabs(n_frames * frame_len_s - clip_len_s) > 1e-9)
      throw std::invalid_argument(
          "FrameGrid: n_frames * frame_len_s must equal clip_len_s");
  }
};

enum class FeatureKind { LogMel, Mfcc };

inline std::string to_string(FeatureKind k) {
  return k == FeatureKind::LogMel ? "logmel" : "mfcc";
}

inline FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "logmel" || s == "log-mel") return FeatureKind::LogMel;
  if (s == "mfcc") return FeatureKind::Mfcc;
  throw std::invalid_argument("unknown feature kind: " + s);
}

struct FeatureConfig {
  int sample_rate = 16000;
  int n_mels = 40;
  int fft_size = 0;  // 0 = next power of two >= frame samples
  double log_floor = 1e-10;
  FeatureKind kind = FeatureKind::LogMel;
  int n_mfcc = 13;
};

struct FeatureSequence {
  std::vector<std::vector<double>> frames;  // n_frames x dim
  FrameGrid grid;
  FeatureKind kind = FeatureKind::LogMel;

  std::size_t n_frames() const { return frames.size(); }
  std::size_t dim() const { return frames.empty() ? 0 : frames[0].size(); }
};

namespace detail {

inline void fft_radix2(std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  if (n <= 1) return;
  // bit reversal
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (j > i) std::swap(x[i], x[j]);
    std::size_t m = n >> 1;
    while (m >= 1 && j >= m) {
      j -= m;
      m >>= 1;
    }
    j += m;
  }
  const double pi = 3.14159265358979323846;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::complex<double> w_len =
        std::exp(std::complex<double>(0.0, -2.0 * pi / static_cast<double>(len)));
    for (std::size_t k = 0; k < n; k += len) {
      std::complex<double> w = 1.0;
      for (std::size_t m = 0; m < len / 2; ++m) {
        const std::complex<double> t = w * x[k + m + len / 2];
        const std::complex<double> u = x[k + m];
        x[k + m] = u + t;
        x[k + m + len / 2] = u - t;
        w *= w_len;
      }
    }
  }
}

inline double hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

}  // namespace detail

/// Triangular mel filterbank over FFT bins [0, n_fft/2]. Rows are filters;
/// each filter overlaps only its immediate neighbours.
inline std::vector<std::vector<double>> mel_filterbank(int n_mels, int n_fft,
                                                       int sample_rate) {
  if (n_mels < 1) throw std::invalid_argument("mel_filterbank: n_mels < 1");
  const int n_bins = n_fft / 2 + 1;
  const double mel_lo = detail::hz_to_mel(0.0);
  const double mel_hi = detail::hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    edges[i] =
        detail::mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));

  std::vector<std::vector<double>> filters(
      n_mels, std::vector<double>(n_bins, 0.0));
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double freq =
          static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      if (freq > left && freq < center)
        filters[m][k] = (freq - left) / (center - left);
      else if (freq >= center && freq < right)
        filters[m][k] = (right - freq) / (right - center);
    }
  }
  return filters;
}

/// Center frequencies (Hz) of the mel filters, for diagnostics.
inline std::vector<double> mel_center_frequencies(int n_mels,
                                                  int sample_rate) {
  const double mel_lo = detail::hz_to_mel(0.0);
  const double mel_hi = detail::hz_to_mel(sample_rate / 2.0);
  std::vector<double> centers(n_mels);
  for (int m = 0; m < n_mels; ++m)
    centers[m] =
        detail::mel_to_hz(mel_lo + (mel_hi - mel_lo) * (m + 1) / (n_mels + 1));
  return centers;
}

/// Pre-log mel energies, one row per frame. Frames are non-overlapping and
/// Hann windowed; the FFT is zero padded to fft_size.
inline std::vector<std::vector<double>> mel_power_frames(
    const AudioClip& clip, const FrameGrid& grid, const FeatureConfig& cfg) {
  grid.validate();
  if (clip.sample_rate != cfg.sample_rate)
    throw std::invalid_argument("features: clip rate differs from config");
  if (std::fabs(clip.duration_s() - grid.clip_len_s) >
      1.0 / clip.sample_rate + 1e-9)
    throw std::invalid_argument("features: clip duration must match the grid");
  if (cfg.n_mels < 1)
    throw std::invalid_argument("features: mel band count must be >= 1");

  const std::size_t frame_len = static_cast<std::size_t>(
      std::llround(grid.frame_len_s * clip.sample_rate));
  std::size_t n_fft = static_cast<std::size_t>(cfg.fft_size);
  if (n_fft == 0) {
    n_fft = 1;
    while (n_fft < frame_len) n_fft <<= 1;
  }
  if (n_fft < frame_len)
    throw std::invalid_argument("features: FFT size smaller than frame length");

  const auto filters =
      mel_filterbank(cfg.n_mels, static_cast<int>(n_fft), cfg.sample_rate);
  const std::size_t n_bins = n_fft / 2 + 1;

  std::vector<double> window(frame_len);
  const double pi = 3.14159265358979323846;
  for (std::size_t i = 0; i < frame_len; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * pi * i / frame_len);

  std::vector<std::vector<double>> energies(
      grid.n_frames, std::vector<double>(cfg.n_mels, 0.0));
  std::vector<std::complex<double>> buf(n_fft);
  for (std::size_t t = 0; t < grid.n_frames; ++t) {
    const std::size_t start = t * frame_len;
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (std::size_t i = 0; i < frame_len && start + i < clip.samples.size();
         ++i)
      buf[i] = clip.samples[start + i] * window[i];
    detail::fft_radix2(buf);
    std::vector<double> power(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) power[k] = std::norm(buf[k]);
    for (int m = 0; m < cfg.n_mels; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < n_bins; ++k) e += power[k] * filters[m][k];
      energies[t][m] = e;
    }
  }
  return energies;
}

/// Log-mel (or MFCC) features on the frame grid. The log floor keeps silence
/// finite.
inline FeatureSequence extract_features(const AudioClip& clip,
                                        const FrameGrid& grid,
                                        const FeatureConfig& cfg) {
  auto energies = mel_power_frames(clip, grid, cfg);
  FeatureSequence seq;
  seq.grid = grid;
  seq.kind = cfg.kind;
  seq.frames.resize(energies.size());
  for (std::size_t t = 0; t < energies.size(); ++t) {
    std::vector<double> logmel(energies[t].size());
    for (std::size_t m = 0; m < logmel.size(); ++m)
      logmel[m] = std::log(std::max(energies[t][m], cfg.log_floor));
    if (cfg.kind == FeatureKind::LogMel) {
      seq.frames[t] = std::move(logmel);
    } else {
      // DCT-II over the log-mel bands.
      const int n = static_cast<int>(logmel.size());
      const int n_out = std::min(cfg.n_mfcc, n);
      std::vector<double> mfcc(n_out, 0.0);
      const double pi = 3.14159265358979323846;
      for (int k = 0; k < n_out; ++k) {
        double acc = 0.0;
        for (int m = 0; m < n; ++m)
          acc += logmel[m] * std::cos(pi * k * (m + 0.5) / n);
        mfcc[k] = acc;
      }
      seq.frames[t] = std::move(mfcc);
    }
  }
  return seq;
}

/// Per-frame RMS energy derived from log-power features, used by the
/// energy-based cluster naming heuristic.
inline std::vector<double> frame_rms_energy(
    const std::vector<std::vector<double>>& frames) {
  std::vector<double> energy(frames.size(), 0.0);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    double acc = 0.0;
    for (double v : frames[t]) acc += std::exp(std::min(v, 50.0));
    energy[t] = frames[t].empty()
                    ? 0.0
                    : std::sqrt(acc / static_cast<double>(frames[t].size()));
  }
  return energy;
}

/// Zero-mean unit-variance scaling fitted per dimension over a dataset.
struct FeatureStandardizer {
  std::vector<double> mean;
  std::vector<double> std_dev;

  void fit(const std::vector<FeatureSequence>& dataset) {
    std::size_t dim = 0, count = 0;
    for (const auto& seq : dataset)
      for (const auto& f : seq.frames) {
        if (dim == 0) dim = f.size();
        if (f.size() != dim)
          throw std::invalid_argument("standardizer: inconsistent feature dim");
        ++count;
      }
    if (count == 0) throw std::invalid_argument("standardizer: empty dataset");
    mean.assign(dim, 0.0);
    std_dev.assign(dim, 0.0);
    for (const auto& seq : dataset)
      for (const auto& f : seq.frames)
        for (std::size_t d = 0; d < dim; ++d) mean[d] += f[d];
    for (double& m : mean) m /= static_cast<double>(count);
    for (const auto& seq : dataset)
      for (const auto& f : seq.frames)
        for (std::size_t d = 0; d < dim; ++d) {
          const double c = f[d] - mean[d];
          std_dev[d] += c * c;
        }
    for (double& s : std_dev) s = std::sqrt(s / static_cast<double>(count));
    for (double& s : std_dev)
      if (s < 1e-12) s = 1.0;  // constant dimension
  }

  std::vector<std::vector<double>> transform(
      const std::vector<std::vector<double>>& frames) const {
    std::vector<std::vector<double>> out = frames;
    for (auto& f : out) {
      if (f.size() != mean.size())
        throw std::invalid_argument("standardizer: feature dim mismatch");
      for (std::size_t d = 0; d < f.size(); ++d)
        f[d] = (f[d] - mean[d]) / std_dev[d];
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Matrix file formats
// ---------------------------------------------------------------------------

inline void save_matrix_binary(const std::string& path,
                               const std::vector<std::vector<double>>& rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("matrix: cannot open " + path);
  const std::uint32_t r = static_cast<std::uint32_t>(rows.size());
  const std::uint32_t c =
      rows.empty() ? 0 : static_cast<std::uint32_t>(rows[0].size());
  os.write("CRSTCF1", 7);
  os.write(reinterpret_cast<const char*>(&r), 4);
  os.write(reinterpret_cast<const char*>(&c), 4);
  for (const auto& row : rows) {
    if (row.size() != c)
      throw std::invalid_argument("matrix: ragged rows");
    for (double v : row) {
      const float f = static_cast<float>(v);
      os.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
  if (!os) throw std::runtime_error("matrix: write failed for " + path);
}

inline std::vector<std::vector<double>> load_matrix_binary(
    const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("matrix: cannot open " + path);
  char magic[7];
  is.read(magic, 7);
  if (!is || std::memcmp(magic, "CRSTCF1", 7) != 0)
    throw std::runtime_error("matrix: bad magic in " + path);
  std::uint32_t r = 0, c = 0;
  is.read(reinterpret_cast<char*>(&r), 4);
  is.read(reinterpret_cast<char*>(&c), 4);
  if (!is) throw std::runtime_error("matrix: truncated header in " + path);
  std::vector<std::vector<double>> rows(r, std::vector<double>(c));
  for (auto& row : rows)
    for (double& v : row) {
      float f;
      is.read(reinterpret_cast<char*>(&f), 4);
      if (!is) throw std::runtime_error("matrix: truncated payload in " + path);
      v = static_cast<double>(f);
    }
  return rows;
}

inline void save_matrix_csv(const std::string& path,
                            const std::vector<std::vector<double>>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("matrix: cannot open " + path);
  os.precision(17);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      os << row[i];
    }
    os << '\n';
  }
}

inline std::vector<std::vector<double>> load_matrix_csv(
    const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("matrix: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      row.push_back(std::stod(cell, &used));
    }
    if (!rows.empty() && row.size() != rows[0].size())
      throw std::runtime_error("matrix: ragged CSV in " + path);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace crstc
