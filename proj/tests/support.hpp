// tests/support.hpp

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

// Shared test utilities: a central finite-difference gradient oracle, a
// scratch-directory guard, and little-endian WAV writers for fixtures.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "crstc/tensor.hpp"

namespace testsupport {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  std::string worst;
  bool ok(double tol = 1e-4) const { return max_rel_err <= tol; }
};

// Relative error with an absolute floor: comparisons below 1e-4 in magnitude
// are judged against an absolute 1e-8 instead of blowing up the ratio.
inline double grad_rel_err(double analytic, double numeric) {
  const double scale =
      std::max(std::max(std::fabs(analytic), std::fabs(numeric)), 1e-4);
  return std::fabs(analytic - numeric) / scale;
}

/// Central finite-difference check of every entry of every parameter.
/// `build_loss` must rebuild the whole forward graph from the current
/// parameter values and return the scalar loss tensor.
inline GradCheckReport check_gradients(
    std::vector<crstc::Tensor> params,
    const std::function<crstc::Tensor()>& build_loss, double h = 1e-5) {
  for (auto& p : params) p.zero_grad();
  crstc::Tensor loss = build_loss();
  crstc::backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.grad());

  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& values = params[p].mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double f_plus = build_loss().item();
      values[i] = saved - h;
      const double f_minus = build_loss().item();
      values[i] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double err = grad_rel_err(analytic[p][i], numeric);
      ++report.checked;
      if (err > report.max_rel_err) {
        report.max_rel_err = err;
        std::ostringstream oss;
        oss << "param " << p << " index " << i << " analytic "
            << analytic[p][i] << " numeric " << numeric;
        report.worst = oss.str();
      }
    }
  }
  return report;
}

/// Unique scratch directory removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("crstc_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}
inline void put_u16(std::ostream& os, std::uint16_t v) {
  os.write(reinterpret_cast<const char*>(&v), 2);
}

inline void write_wav(const std::string& path, std::uint16_t format,
                      std::uint16_t bits, int rate,
                      const std::vector<std::vector<double>>& channels) {
  const std::uint16_t n_ch = static_cast<std::uint16_t>(channels.size());
  const std::size_t n_frames = channels.empty() ? 0 : channels[0].size();
  const std::uint16_t block = static_cast<std::uint16_t>(n_ch * bits / 8);
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(n_frames * block);
  std::ofstream os(path, std::ios::binary);
  os.write("RIFF", 4);
  put_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put_u32(os, 16);
  put_u16(os, format);
  put_u16(os, n_ch);
  put_u32(os, static_cast<std::uint32_t>(rate));
  put_u32(os, static_cast<std::uint32_t>(rate) * block);
  put_u16(os, block);
  put_u16(os, bits);
  os.write("data", 4);
  put_u32(os, data_bytes);
  for (std::size_t i = 0; i < n_frames; ++i) {
    for (const auto& ch : channels) {
      if (format == 1) {
        double v = ch[i] * 32768.0;
        v = std::max(-32768.0, std::min(32767.0, v));
        const std::int16_t s = static_cast<std::int16_t>(std::lrint(v));
        os.write(reinterpret_cast<const char*>(&s), 2);
      } else {
        const float f = static_cast<float>(ch[i]);
        os.write(reinterpret_cast<const char*>(&f), 4);
      }
    }
  }
}

}  // namespace detail

inline void write_wav_pcm16(const std::string& path, int rate,
                            const std::vector<std::vector<double>>& channels) {
  detail::write_wav(path, 1, 16, rate, channels);
}

inline void write_wav_float32(const std::string& path, int rate,
                              const std::vector<std::vector<double>>& channels) {
  detail::write_wav(path, 3, 32, rate, channels);
}

/// Writes a PCM16 WAV from raw integer sample values (for exact scaling
/// checks).
inline void write_wav_pcm16_raw(const std::string& path, int rate,
                                const std::vector<std::int16_t>& samples) {
  std::ofstream os(path, std::ios::binary);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  os.write("RIFF", 4);
  detail::put_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  detail::put_u32(os, 16);
  detail::put_u16(os, 1);
  detail::put_u16(os, 1);
  detail::put_u32(os, static_cast<std::uint32_t>(rate));
  detail::put_u32(os, static_cast<std::uint32_t>(rate) * 2);
  detail::put_u16(os, 2);
  detail::put_u16(os, 16);
  os.write("data", 4);
  detail::put_u32(os, data_bytes);
  os.write(reinterpret_cast<const char*>(samples.data()),
           static_cast<std::streamsize>(data_bytes));
}

}  // namespace testsupport
