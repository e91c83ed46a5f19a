#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ehsched/common.hpp"
#include "ehsched/matrix.hpp"

namespace ehsched {

enum class Activation { kIdentity, kTanh };

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct DenseParams {
  Matrix w;  // out x hidden
  Vec b;
  Activation act = Activation::kIdentity;
};

// One LSTM gate; the weight acts on the concatenation [x ; h_prev].
struct GateParams {
  Matrix w;  // hidden x (input + hidden)
  Vec b;
};

struct LstmParams {
  int input_size = 0;
  int hidden_size = 0;
  GateParams forget, input, cell, output;
};

struct NetworkParams {
  LstmParams lstm;
  DenseParams dense;

  int input_size() const { return lstm.input_size; }
  int output_size() const { return dense.w.rows(); }
};

// Same shapes as NetworkParams; holds d(loss)/d(parameter).
using GradientSet = NetworkParams;

namespace detail {

// Visits every parameter array in a fixed order shared by gradients,
// checkpoints and the finite-difference sweep.
template <typename P, typename Fn>
void for_each_array(P& p, Fn&& fn) {
  fn("lstm.forget.w", p.lstm.forget.w);
  fn("lstm.forget.b", p.lstm.forget.b);
  fn("lstm.input.w", p.lstm.input.w);
  fn("lstm.input.b", p.lstm.input.b);
  fn("lstm.cell.w", p.lstm.cell.w);
  fn("lstm.cell.b", p.lstm.cell.b);
  fn("lstm.output.w", p.lstm.output.w);
  fn("lstm.output.b", p.lstm.output.b);
  fn("dense.w", p.dense.w);
  fn("dense.b", p.dense.b);
}

inline std::vector<double*> flat_view(NetworkParams& p) {
  std::vector<double*> out;
  for_each_array(p, [&](const char*, auto& arr) {
    if constexpr (std::is_same_v<std::decay_t<decltype(arr)>, Matrix>) {
      for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(arr.data() + i);
    } else {
      for (double& v : arr) out.push_back(&v);
    }
  });
  return out;
}

inline void check_congruent(const NetworkParams& a, const NetworkParams& b) {
  bool ok = a.lstm.input_size == b.lstm.input_size &&
            a.lstm.hidden_size == b.lstm.hidden_size &&
            a.dense.w.same_shape(b.dense.w) && a.dense.b.size() == b.dense.b.size();
  if (!ok) throw std::invalid_argument("network parameter shapes do not match");
}

}  // namespace detail

struct LstmStepCache {
  Vec joint_input;  // [x ; h_prev]
  Vec c_prev;
  Vec f, i, g, o;   // gate outputs after their nonlinearities
  Vec c, tanh_c;
};

struct ForwardCache {
  std::vector<LstmStepCache> steps;
  Vec final_h;
  Vec dense_pre;
  Vec output;
  int input_size = 0;
  int hidden_size = 0;
  int output_size = 0;
};

// Standard gate equations; optionally records intermediates for backprop.
inline std::pair<Vec, Vec> lstm_cell_forward(const Vec& input, const Vec& hidden_prev,
                                             const Vec& cell_prev, const LstmParams& p,
                                             LstmStepCache* cache = nullptr) {
  const int h = p.hidden_size;
  if (static_cast<int>(input.size()) != p.input_size ||
      static_cast<int>(hidden_prev.size()) != h ||
      static_cast<int>(cell_prev.size()) != h)
    throw std::invalid_argument("lstm_cell_forward: shape mismatch");

  Vec u(input.size() + hidden_prev.size());
  std::copy(input.begin(), input.end(), u.begin());
  std::copy(hidden_prev.begin(), hidden_prev.end(), u.begin() + input.size());

  Vec af, ai, ag, ao;
  matvec_into(p.forget.w, u, af);
  matvec_into(p.input.w, u, ai);
  matvec_into(p.cell.w, u, ag);
  matvec_into(p.output.w, u, ao);

  Vec f(h), i(h), g(h), o(h), c(h), tc(h), hidden(h);
  for (int j = 0; j < h; ++j) {
    f[j] = sigmoid(af[j] + p.forget.b[j]);
    i[j] = sigmoid(ai[j] + p.input.b[j]);
    g[j] = std::tanh(ag[j] + p.cell.b[j]);
    o[j] = sigmoid(ao[j] + p.output.b[j]);
    c[j] = f[j] * cell_prev[j] + i[j] * g[j];
    tc[j] = std::tanh(c[j]);
    hidden[j] = o[j] * tc[j];
  }
  if (cache) {
    cache->joint_input = std::move(u);
    cache->c_prev = cell_prev;
    cache->f = f;
    cache->i = i;
    cache->g = g;
    cache->o = o;
    cache->c = c;
    cache->tanh_c = tc;
  }
  return {std::move(hidden), std::move(c)};
}

inline Vec apply_dense(const DenseParams& d, const Vec& h, Vec* pre = nullptr) {
  Vec y;
  matvec_into(d.w, h, y);
  for (std::size_t j = 0; j < y.size(); ++j) y[j] += d.b[j];
  if (pre) *pre = y;
  if (d.act == Activation::kTanh)
    for (double& v : y) v = std::tanh(v);
  return y;
}

// Unrolls the LSTM over the sequence from zero state, then the dense head on
// the final hidden state.
inline ForwardCache network_forward_cached(const NetworkParams& p,
                                           const std::vector<Vec>& inputs) {
  if (inputs.empty()) throw std::invalid_argument("network_forward: empty sequence");
  ForwardCache cache;
  cache.input_size = p.lstm.input_size;
  cache.hidden_size = p.lstm.hidden_size;
  cache.output_size = p.output_size();
  cache.steps.resize(inputs.size());
  Vec h(p.lstm.hidden_size, 0.0), c(p.lstm.hidden_size, 0.0);
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    auto hc = lstm_cell_forward(inputs[t], h, c, p.lstm, &cache.steps[t]);
    h = std::move(hc.first);
    c = std::move(hc.second);
  }
  cache.final_h = h;
  cache.output = apply_dense(p.dense, h, &cache.dense_pre);
  return cache;
}

inline Vec network_forward(const NetworkParams& p, const std::vector<Vec>& inputs) {
  Vec h(p.lstm.hidden_size, 0.0), c(p.lstm.hidden_size, 0.0);
  for (const Vec& x : inputs) {
    auto hc = lstm_cell_forward(x, h, c, p.lstm);
    h = std::move(hc.first);
    c = std::move(hc.second);
  }
  return apply_dense(p.dense, h);
}

inline GradientSet zero_gradients(const NetworkParams& p) {
  GradientSet g;
  g.lstm.input_size = p.lstm.input_size;
  g.lstm.hidden_size = p.lstm.hidden_size;
  const int h = p.lstm.hidden_size;
  const int u = p.lstm.input_size + h;
  g.lstm.forget = {Matrix(h, u), Vec(h, 0.0)};
  g.lstm.input = {Matrix(h, u), Vec(h, 0.0)};
  g.lstm.cell = {Matrix(h, u), Vec(h, 0.0)};
  g.lstm.output = {Matrix(h, u), Vec(h, 0.0)};
  g.dense.w = Matrix(p.dense.w.rows(), p.dense.w.cols());
  g.dense.b = Vec(p.dense.b.size(), 0.0);
  g.dense.act = p.dense.act;
  return g;
}

// Backpropagation through time for the cached forward pass. d_output is
// d(loss)/d(network output). Optionally also produces d(loss)/d(input_t),
// which the two-layer chain needs.
inline GradientSet network_backward(const NetworkParams& p, const ForwardCache& cache,
                                    const Vec& d_output,
                                    std::vector<Vec>* d_inputs = nullptr) {
  if (cache.input_size != p.lstm.input_size || cache.hidden_size != p.lstm.hidden_size ||
      cache.output_size != p.output_size() || cache.steps.empty())
    throw std::invalid_argument("network_backward: cache does not match network");
  if (static_cast<int>(d_output.size()) != p.output_size())
    throw std::invalid_argument("network_backward: bad output error size");

  GradientSet grads = zero_gradients(p);
  const int hs = p.lstm.hidden_size;
  const int in = p.lstm.input_size;

  // Dense head.
  Vec da(d_output);
  if (p.dense.act == Activation::kTanh) {
    for (std::size_t j = 0; j < da.size(); ++j) {
      const double y = std::tanh(cache.dense_pre[j]);
      da[j] *= 1.0 - y * y;
    }
  }
  add_outer(grads.dense.w, da, cache.final_h);
  for (std::size_t j = 0; j < da.size(); ++j) grads.dense.b[j] += da[j];

  Vec dh(hs, 0.0), dc(hs, 0.0);
  add_matvec_transposed(p.dense.w, da, dh);

  if (d_inputs) d_inputs->assign(cache.steps.size(), Vec(in, 0.0));

  for (int t = static_cast<int>(cache.steps.size()) - 1; t >= 0; --t) {
    const LstmStepCache& s = cache.steps[t];
    Vec daf(hs), dai(hs), dag(hs), dao(hs);
    for (int j = 0; j < hs; ++j) {
      const double do_ = dh[j] * s.tanh_c[j];
      dao[j] = do_ * s.o[j] * (1.0 - s.o[j]);
      const double dcj = dc[j] + dh[j] * s.o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
      daf[j] = dcj * s.c_prev[j] * s.f[j] * (1.0 - s.f[j]);
      dai[j] = dcj * s.g[j] * s.i[j] * (1.0 - s.i[j]);
      dag[j] = dcj * s.i[j] * (1.0 - s.g[j] * s.g[j]);
      dc[j] = dcj * s.f[j];
    }
    add_outer(grads.lstm.forget.w, daf, s.joint_input);
    add_outer(grads.lstm.input.w, dai, s.joint_input);
    add_outer(grads.lstm.cell.w, dag, s.joint_input);
    add_outer(grads.lstm.output.w, dao, s.joint_input);
    for (int j = 0; j < hs; ++j) {
      grads.lstm.forget.b[j] += daf[j];
      grads.lstm.input.b[j] += dai[j];
      grads.lstm.cell.b[j] += dag[j];
      grads.lstm.output.b[j] += dao[j];
    }
    Vec du(in + hs, 0.0);
    add_matvec_transposed(p.lstm.forget.w, daf, du);
    add_matvec_transposed(p.lstm.input.w, dai, du);
    add_matvec_transposed(p.lstm.cell.w, dag, du);
    add_matvec_transposed(p.lstm.output.w, dao, du);
    if (d_inputs)
      std::copy(du.begin(), du.begin() + in, (*d_inputs)[t].begin());
    std::copy(du.begin() + in, du.end(), dh.begin());
  }
  return grads;
}

inline void accumulate(GradientSet& into, const GradientSet& g, double scale) {
  detail::check_congruent(into, g);
  auto flat_a = detail::flat_view(into);
  auto flat_b = detail::flat_view(const_cast<GradientSet&>(g));
  for (std::size_t i = 0; i < flat_a.size(); ++i) *flat_a[i] += scale * *flat_b[i];
}

inline double global_grad_norm(const GradientSet& g) {
  double ss = 0.0;
  auto flat = detail::flat_view(const_cast<GradientSet&>(g));
  for (double* v : flat) ss += *v * *v;
  return std::sqrt(ss);
}

inline void clip_global_norm(GradientSet& g, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = global_grad_norm(g);
  if (norm <= max_norm) return;
  const double s = max_norm / norm;
  for (double* v : detail::flat_view(g)) *v *= s;
}

// Plain gradient descent. Non-finite gradients abort the run with diagnostics.
inline void sgd_step(NetworkParams& params, const GradientSet& grads, double lr) {
  detail::check_congruent(params, grads);
  auto flat_p = detail::flat_view(params);
  auto flat_g = detail::flat_view(const_cast<GradientSet&>(grads));
  for (std::size_t i = 0; i < flat_p.size(); ++i) {
    if (!std::isfinite(*flat_g[i]))
      throw NumericalFault("sgd_step: non-finite gradient at parameter index " +
                           std::to_string(i));
    *flat_p[i] -= lr * *flat_g[i];
  }
}

// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)]; forget-gate bias starts
// at +1 so early memory is retained.
inline NetworkParams weight_init(int input_size, int hidden_size, int output_size,
                                 Activation act, Rng& rng) {
  NetworkParams p;
  p.lstm.input_size = input_size;
  p.lstm.hidden_size = hidden_size;
  const int u = input_size + hidden_size;
  auto init_gate = [&](GateParams& gate, double bias) {
    gate.w = Matrix(hidden_size, u);
    gate.b = Vec(hidden_size, bias);
    const double a = 1.0 / std::sqrt(static_cast<double>(u));
    std::uniform_real_distribution<double> d(-a, a);
    for (std::size_t i = 0; i < gate.w.size(); ++i) gate.w.data()[i] = d(rng);
  };
  init_gate(p.lstm.forget, 1.0);
  init_gate(p.lstm.input, 0.0);
  init_gate(p.lstm.cell, 0.0);
  init_gate(p.lstm.output, 0.0);

  p.dense.w = Matrix(output_size, hidden_size);
  p.dense.b = Vec(output_size, 0.0);
  p.dense.act = act;
  const double a = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  std::uniform_real_distribution<double> d(-a, a);
  for (std::size_t i = 0; i < p.dense.w.size(); ++i) p.dense.w.data()[i] = d(rng);
  return p;
}

// Scalar loss probe used by the gradient checker.
struct LossProbe {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
};

// Central finite differences over every parameter against the analytic
// backward pass. Relative error uses a small floor so exactly-zero gradients
// compare by absolute size.
inline double finite_diff_gradcheck(const NetworkParams& net,
                                    const std::vector<Vec>& inputs,
                                    const LossProbe& loss, double epsilon) {
  if (epsilon < 1e-7 || epsilon > 1e-3)
    throw std::invalid_argument("gradcheck epsilon out of [1e-7, 1e-3]");
  NetworkParams work = net;
  const ForwardCache cache = network_forward_cached(work, inputs);
  const GradientSet analytic = network_backward(work, cache, loss.grad(cache.output));

  auto params = detail::flat_view(work);
  auto grads = detail::flat_view(const_cast<GradientSet&>(analytic));
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = *params[i];
    *params[i] = saved + epsilon;
    const double up = loss.value(network_forward(work, inputs));
    *params[i] = saved - epsilon;
    const double down = loss.value(network_forward(work, inputs));
    *params[i] = saved;
    const double fd = (up - down) / (2.0 * epsilon);
    const double a = *grads[i];
    const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-3});
    worst = std::max(worst, rel);
  }
  return worst;
}

// --- checkpoint format -------------------------------------------------
//
//   ehsched-params 1
//   <key> <rows> <cols>
//   <rows lines of cols decimal doubles>
//
// Keys are lstm.{forget,input,cell,output}.{w,b} and dense.{w,b}; vectors are
// written as a single row. An optional key prefix separates the networks of a
// two-layer checkpoint. Doubles use 17 significant digits and round-trip
// exactly.

inline void save_params(std::ostream& os, const NetworkParams& p,
                        const std::string& prefix = "") {
  char buf[64];
  auto write_row = [&](const double* v, int n) {
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", v[i]);
      os << buf << (i + 1 == n ? "" : " ");
    }
    os << "\n";
  };
  detail::for_each_array(const_cast<NetworkParams&>(p), [&](const char* key, auto& arr) {
    if constexpr (std::is_same_v<std::decay_t<decltype(arr)>, Matrix>) {
      os << prefix << key << " " << arr.rows() << " " << arr.cols() << "\n";
      for (int r = 0; r < arr.rows(); ++r) write_row(arr.data() + static_cast<std::size_t>(r) * arr.cols(), arr.cols());
    } else {
      os << prefix << key << " 1 " << arr.size() << "\n";
      write_row(arr.data(), static_cast<int>(arr.size()));
    }
  });
  os << prefix << "dense.act 1 1\n" << (p.dense.act == Activation::kTanh ? 1 : 0) << "\n";
}

inline void save_checkpoint(const std::string& path, const NetworkParams& p,
                            const std::string& prefix = "") {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open checkpoint for writing: " + path);
  os << "ehsched-params 1\n";
  save_params(os, p, prefix);
}

namespace detail {

inline std::map<std::string, Matrix> read_array_map(std::istream& is) {
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "ehsched-params" || version != 1)
    throw ConfigError("not an ehsched checkpoint");
  std::map<std::string, Matrix> out;
  std::string key;
  while (is >> key) {
    int rows = 0, cols = 0;
    if (!(is >> rows >> cols) || rows < 0 || cols < 0)
      throw ConfigError("malformed checkpoint block: " + key);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (!(is >> m.data()[i])) throw ConfigError("truncated checkpoint block: " + key);
    out.emplace(std::move(key), std::move(m));
  }
  return out;
}

inline NetworkParams params_from_map(const std::map<std::string, Matrix>& map,
                                     const std::string& prefix) {
  NetworkParams p;
  auto fetch = [&](const std::string& key) -> const Matrix& {
    auto it = map.find(prefix + key);
    if (it == map.end()) throw ConfigError("checkpoint missing key: " + prefix + key);
    return it->second;
  };
  auto to_vec = [](const Matrix& m) {
    return Vec(m.data(), m.data() + m.size());
  };
  auto load_gate = [&](GateParams& g, const std::string& name) {
    g.w = fetch("lstm." + name + ".w");
    g.b = to_vec(fetch("lstm." + name + ".b"));
  };
  load_gate(p.lstm.forget, "forget");
  load_gate(p.lstm.input, "input");
  load_gate(p.lstm.cell, "cell");
  load_gate(p.lstm.output, "output");
  p.dense.w = fetch("dense.w");
  p.dense.b = to_vec(fetch("dense.b"));
  p.dense.act = fetch("dense.act").data()[0] != 0.0 ? Activation::kTanh
                                                    : Activation::kIdentity;
  p.lstm.hidden_size = p.lstm.forget.w.rows();
  p.lstm.input_size = p.lstm.forget.w.cols() - p.lstm.hidden_size;
  return p;
}

}  // namespace detail

inline NetworkParams load_checkpoint(const std::string& path,
                                     const std::string& prefix = "") {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open checkpoint: " + path);
  return detail::params_from_map(detail::read_array_map(is), prefix);
}

}  // namespace ehsched
