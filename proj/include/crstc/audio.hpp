// crstc/audio.hpp

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

// Audio ingestion: RIFF/WAVE reading (PCM16 and IEEE float32), linear
// resampling, and fixed-length padding/truncation.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace crstc {

struct AudioClip {
  std::vector<double> samples;  // mono, [-1, 1]
  int sample_rate = 0;

  double duration_s() const {
    return sample_rate > 0
               ? static_cast<double>(samples.size()) / sample_rate
               : 0.0;
  }
};

namespace detail {

inline std::uint32_t rd_u32(std::istream& is, const char* what) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  if (!is) throw std::runtime_error(std::string("wav: truncated ") + what);
  return v;
}

inline std::uint16_t rd_u16(std::istream& is, const char* what) {
  std::uint16_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 2);
  if (!is) throw std::runtime_error(std::string("wav: truncated ") + what);
  return v;
}

}  // namespace detail

/// Reads a RIFF/WAVE stream. Multichannel input is averaged to mono; PCM16 is
/// scaled by 1/32768, float32 is clamped to [-1, 1].
inline AudioClip read_wav(std::istream& is) {
  char tag[4];
  is.read(tag, 4);
  if (!is || std::memcmp(tag, "RIFF", 4) != 0)
    throw std::runtime_error("wav: not a RIFF file");
  detail::rd_u32(is, "RIFF size");
  is.read(tag, 4);
  if (!is || std::memcmp(tag, "WAVE", 4) != 0)
    throw std::runtime_error("wav: not a WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::vector<char> data;
  bool have_data = false;

  while (is.read(tag, 4)) {
    const std::uint32_t chunk_size = detail::rd_u32(is, "chunk size");
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw std::runtime_error("wav: malformed fmt chunk");
      format = detail::rd_u16(is, "fmt");
      channels = detail::rd_u16(is, "fmt");
      rate = detail::rd_u32(is, "fmt");
      detail::rd_u32(is, "fmt");  // byte rate
      detail::rd_u16(is, "fmt");  // block align
      bits = detail::rd_u16(is, "fmt");
      is.ignore(chunk_size - 16);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data.resize(chunk_size);
      is.read(data.data(), chunk_size);
      if (!is) throw std::runtime_error("wav: truncated data chunk");
      have_data = true;
    } else {
      is.ignore(chunk_size);
    }
    if (chunk_size % 2 == 1) is.ignore(1);  // chunks are word aligned
  }

  if (!have_fmt) throw std::runtime_error("wav: missing fmt chunk");
  if (!have_data || data.empty())
    throw std::runtime_error("wav: empty or missing data chunk");
  if (channels == 0 || rate == 0)
    throw std::runtime_error("wav: malformed fmt fields");

  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32)
    throw std::runtime_error("wav: unsupported codec (format " +
                             std::to_string(format) + ", " +
                             std::to_string(bits) + " bit); expected PCM 16 or "
                             "IEEE float 32");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t n_frames = data.size() / frame_bytes;
  if (n_frames == 0) throw std::runtime_error("wav: empty data chunk");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const char* p = data.data() + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        std::int16_t s;
        std::memcpy(&s, p, 2);
        acc += static_cast<double>(s) / 32768.0;
      } else {
        float f;
        std::memcpy(&f, p, 4);
        if (!std::isfinite(f))
          throw std::runtime_error("wav: non-finite float sample");
        acc += std::max(-1.0, std::min(1.0, static_cast<double>(f)));
      }
    }
    clip.samples[i] = acc / channels;
  }
  return clip;
}

inline AudioClip read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("wav: cannot open " + path);
  try {
    return read_wav(is);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string(e.what()) + " [" + path + "]");
  }
}

/// Linear resampling with endpoint alignment: output sample i is taken at
/// input position i * (n_in - 1) / (n_out - 1), so first and last samples
/// are preserved and duration matches within one sample period.
inline AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0)
    throw std::invalid_argument("resample: target rate must be positive");
  if (clip.sample_rate <= 0)
    throw std::invalid_argument("resample: clip has no sample rate");
  if (target_rate == clip.sample_rate) return clip;

  const std::size_t n_in = clip.samples.size();
  AudioClip out;
  out.sample_rate = target_rate;
  if (n_in == 0) return out;

  const std::size_t n_out = static_cast<std::size_t>(std::max<long long>(
      1, std::llround(static_cast<double>(n_in) * target_rate /
                      clip.sample_rate)));
  out.samples.resize(n_out);
  if (n_in == 1 || n_out == 1) {
    std::fill(out.samples.begin(), out.samples.end(), clip.samples[0]);
    return out;
  }
  const double step =
      static_cast<double>(n_in - 1) / static_cast<double>(n_out - 1);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = i * step;
    const std::size_t lo = std::min(static_cast<std::size_t>(pos), n_in - 2);
    const double frac = pos - static_cast<double>(lo);
    out.samples[i] =
        clip.samples[lo] * (1.0 - frac) + clip.samples[lo + 1] * frac;
  }
  return out;
}

/// Pads with trailing zeros or truncates at the end to exactly target_s.
inline AudioClip pad_or_trim(const AudioClip& clip, double target_s = 8.0) {
  if (target_s <= 0.0)
    throw std::invalid_argument("pad_or_trim: target must be positive");
  if (clip.sample_rate <= 0)
    throw std::invalid_argument("pad_or_trim: clip has no sample rate");
  const std::size_t target =
      static_cast<std::size_t>(std::llround(target_s * clip.sample_rate));
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples = clip.samples;
  out.samples.resize(target, 0.0);
  return out;
}

}  // namespace crstc
