// crstc/nn.hpp

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

// Network building blocks on top of the tensor engine: dense layers, an LSTM
// cell, the Adam optimizer, and the named-tensor checkpoint file.
//
// Checkpoint layout (little endian):
//   magic "CRSTCP1" (7 bytes), u32 tensor count, then per tensor:
//   u32 name length, name bytes, u32 rank, u32 dims[rank], float64 payload
//   (row major).

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "crstc/rng.hpp"
#include "crstc/tensor.hpp"

namespace crstc {

struct DenseLayer {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out
};

/// Glorot uniform initialization.
inline Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out,
                             Rng& rng) {
  const double limit =
      std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(fan_in, fan_out, 0.0, true);
  for (double& v : t.mutable_values()) v = rng.uniform(-limit, limit);
  return t;
}

inline DenseLayer make_dense(std::size_t in, std::size_t out, Rng& rng) {
  DenseLayer layer;
  layer.weight = xavier_uniform(in, out, rng);
  layer.bias = Tensor(1, out, 0.0, true);
  return layer;
}

inline Tensor dense_forward(const DenseLayer& layer, const Tensor& x) {
  return add_row_bias(matmul(x, layer.weight), layer.bias);
}

struct LstmParams {
  Tensor w_ih;  // in x 4*hidden, gate order [input, forget, cell, output]
  Tensor w_hh;  // hidden x 4*hidden
  Tensor bias;  // 1 x 4*hidden
  std::size_t hidden() const { return w_hh.rows(); }
};

inline LstmParams make_lstm(std::size_t in, std::size_t hidden, Rng& rng) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(hidden));
  LstmParams p;
  p.w_ih = Tensor(in, 4 * hidden, 0.0, true);
  p.w_hh = Tensor(hidden, 4 * hidden, 0.0, true);
  p.bias = Tensor(1, 4 * hidden, 0.0, true);
  for (double& v : p.w_ih.mutable_values()) v = rng.uniform(-limit, limit);
  for (double& v : p.w_hh.mutable_values()) v = rng.uniform(-limit, limit);
  return p;
}

struct LstmState {
  Tensor h;
  Tensor c;
};

/// One standard LSTM step over a batch of rows. Input x is batch x in,
/// state tensors are batch x hidden.
inline LstmState lstm_cell(const Tensor& x, const Tensor& h_prev,
                           const Tensor& c_prev, const LstmParams& p) {
  const std::size_t hid = p.hidden();
  if (x.cols() != p.w_ih.rows())
    throw std::invalid_argument("lstm_cell: input width mismatch");
  if (h_prev.cols() != hid || c_prev.cols() != hid ||
      h_prev.rows() != x.rows() || c_prev.rows() != x.rows())
    throw std::invalid_argument("lstm_cell: state shape mismatch");
  Tensor gates =
      add_row_bias(add(matmul(x, p.w_ih), matmul(h_prev, p.w_hh)), p.bias);
  Tensor i = sigmoid(slice_cols(gates, 0, hid));
  Tensor f = sigmoid(slice_cols(gates, hid, 2 * hid));
  Tensor g = tanh(slice_cols(gates, 2 * hid, 3 * hid));
  Tensor o = sigmoid(slice_cols(gates, 3 * hid, 4 * hid));
  Tensor c = add(mul(f, c_prev), mul(i, g));
  Tensor h = mul(o, tanh(c));
  return {h, c};
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  long long step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  void init(const std::vector<Tensor>& params) {
    step = 0;
    m.clear();
    v.clear();
    for (const Tensor& p : params) {
      m.emplace_back(p.size(), 0.0);
      v.emplace_back(p.size(), 0.0);
    }
  }
};

/// Standard Adam with bias correction; updates parameter values in place
/// from their accumulated gradients.
inline void adam_step(std::vector<Tensor>& params, AdamState& st) {
  if (st.m.size() != params.size())
    throw std::invalid_argument("adam_step: state not initialized for params");
  st.step += 1;
  const double b1 = st.cfg.beta1, b2 = st.cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (st.m[p].size() != params[p].size())
      throw std::invalid_argument("adam_step: moment shape mismatch");
    auto& values = params[p].mutable_values();
    const auto& grad = params[p].grad();
    auto& m = st.m[p];
    auto& v = st.v[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      values[i] -= st.cfg.lr * mhat / (std::sqrt(vhat) + st.cfg.eps);
    }
  }
}

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}

inline std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path,
                            const std::vector<NamedTensor>& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
  os.write("CRSTCP1", 7);
  detail::write_u32(os, static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& nt : tensors) {
    detail::write_u32(os, static_cast<std::uint32_t>(nt.name.size()));
    os.write(nt.name.data(), static_cast<std::streamsize>(nt.name.size()));
    detail::write_u32(os, 2);
    detail::write_u32(os, static_cast<std::uint32_t>(nt.tensor.rows()));
    detail::write_u32(os, static_cast<std::uint32_t>(nt.tensor.cols()));
    os.write(reinterpret_cast<const char*>(nt.tensor.values().data()),
             static_cast<std::streamsize>(nt.tensor.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

inline std::vector<NamedTensor> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[7];
  is.read(magic, 7);
  if (!is || std::memcmp(magic, "CRSTCP1", 7) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const std::uint32_t count = detail::read_u32(is);
  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint32_t name_len = detail::read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const std::uint32_t rank = detail::read_u32(is);
    if (rank == 0 || rank > 2)
      throw std::runtime_error("checkpoint: unsupported tensor rank");
    std::uint32_t rows = detail::read_u32(is);
    std::uint32_t cols = rank == 2 ? detail::read_u32(is) : 1;
    std::vector<double> values(static_cast<std::size_t>(rows) * cols);
    is.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated tensor payload");
    tensors.push_back(
        {std::move(name), Tensor::from_values(rows, cols, std::move(values))});
  }
  return tensors;
}

}  // namespace crstc
