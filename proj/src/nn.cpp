#include "aquaopt/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>

#include "aquaopt/simd/kernels.hpp"

namespace aquaopt {

ChannelSet ChannelSet::gradient(std::size_t n_inputs) {
  ChannelSet c;
  for (std::size_t i = 0; i < n_inputs; ++i) c.grad.push_back(i);
  return c;
}

ChannelSet ChannelSet::gradient_and_hess(std::size_t n_inputs, std::vector<std::size_t> diag) {
  ChannelSet c = gradient(n_inputs);
  c.hess = std::move(diag);
  return c;
}

Mlp::Mlp(std::vector<std::size_t> widths, Activation act, OutputTransform out, std::uint64_t seed)
    : widths_(std::move(widths)), act_(act), out_(out) {
  if (widths_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output widths");
  for (std::size_t w : widths_) {
    if (w == 0) throw std::invalid_argument("Mlp: zero layer width");
  }
  layout();
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < n_layers(); ++l) {
    const std::size_t fan_in = widths_[l], fan_out = widths_[l + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    double* w = params_.data() + weight_offset(l);
    for (std::size_t k = 0; k < fan_in * fan_out; ++k) w[k] = dist(rng);
  }
}

void Mlp::layout() {
  offsets_.clear();
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    offsets_.push_back(total);
    total += widths_[l + 1] * (widths_[l] + 1);
  }
  params_.assign(total, 0.0);
  lo_.assign(widths_.front(), -1.0);
  hi_.assign(widths_.front(), 1.0);
}

void Mlp::set_input_box(std::vector<double> lo, std::vector<double> hi) {
  if (lo.size() != n_inputs() || hi.size() != n_inputs()) throw std::invalid_argument("Mlp: input box width mismatch");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(hi[i] > lo[i])) throw std::invalid_argument("Mlp: input box needs lo < hi");
  }
  lo_ = std::move(lo);
  hi_ = std::move(hi);
}

bool Mlp::operator==(const Mlp& o) const {
  auto same = [](const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
  };
  return widths_ == o.widths_ && act_ == o.act_ && out_ == o.out_ && same(lo_, o.lo_) && same(hi_, o.hi_) &&
         same(params_, o.params_);
}

std::size_t Tape::grad_channel(std::size_t input) const {
  for (std::size_t k = 0; k < channels.grad.size(); ++k) {
    if (channels.grad[k] == input) return 1 + k;
  }
  throw std::invalid_argument("Tape: first derivative channel not computed");
}

std::size_t Tape::hess_channel(std::size_t input) const {
  for (std::size_t k = 0; k < channels.hess.size(); ++k) {
    if (channels.hess[k] == input) return 1 + channels.grad.size() + k;
  }
  throw std::invalid_argument("Tape: second derivative channel not computed");
}

namespace {

struct Derivs {
  double y, s1, s2, s3;
};

inline Derivs hidden_derivs(Activation act, double a) {
  if (act == Activation::Tanh) {
    const double y = std::tanh(a);
    const double s1 = 1.0 - y * y;
    return {y, s1, -2.0 * y * s1, -2.0 * s1 * s1 + 4.0 * y * y * s1};
  }
  return a > 0.0 ? Derivs{a, 1.0, 0.0, 0.0} : Derivs{0.0, 0.0, 0.0, 0.0};
}

inline Derivs output_derivs(OutputTransform out, double a) {
  switch (out) {
    case OutputTransform::Identity:
      return {a, 1.0, 0.0, 0.0};
    case OutputTransform::Abs:
      return a < 0.0 ? Derivs{-a, -1.0, 0.0, 0.0} : Derivs{a, 1.0, 0.0, 0.0};
    case OutputTransform::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-a));
      const double s1 = s * (1.0 - s);
      const double s2 = s1 * (1.0 - 2.0 * s);
      return {s, s1, s2, s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1};
    }
  }
  return {a, 1.0, 0.0, 0.0};
}

// For hess channel k, the channel holding the first derivative of the same input.
std::vector<std::size_t> hess_partner(const ChannelSet& cs) {
  std::vector<std::size_t> partner;
  for (std::size_t j : cs.hess) {
    auto it = std::find(cs.grad.begin(), cs.grad.end(), j);
    if (it == cs.grad.end()) throw std::invalid_argument("forward: second derivative requested without first");
    partner.push_back(1 + static_cast<std::size_t>(it - cs.grad.begin()));
  }
  return partner;
}

}  // namespace

void forward(const Mlp& net, const InputBatch& in, const ChannelSet& channels, Tape& tape) {
  if (in.n_features != net.n_inputs() || in.x.size() != in.n * in.n_features) {
    throw std::invalid_argument("forward: input width mismatch");
  }
  if (!channels.hess.empty() && net.activation() == Activation::Relu) {
    throw std::invalid_argument("forward: second derivatives of a relu network are not defined");
  }
  for (std::size_t i : channels.grad) {
    if (i >= net.n_inputs()) throw std::invalid_argument("forward: derivative input index out of range");
  }
  const std::vector<std::size_t> partner = hess_partner(channels);
  const std::size_t B = in.n;
  const std::size_t C = 1 + channels.grad.size() + channels.hess.size();
  const std::size_t cols = C * B;
  const std::size_t L = net.n_layers();
  tape.batch = B;
  tape.channels = channels;
  tape.n_channels = C;
  tape.pre.resize(L);
  tape.post.resize(L + 1);

  const std::size_t n_in = net.n_inputs();
  std::vector<double>& x0 = tape.post[0];
  x0.assign(n_in * cols, 0.0);
  for (std::size_t f = 0; f < n_in; ++f) {
    const double centre = 0.5 * (net.input_hi()[f] + net.input_lo()[f]);
    const double inv_half = 2.0 / (net.input_hi()[f] - net.input_lo()[f]);
    double* row = x0.data() + f * cols;
    for (std::size_t i = 0; i < B; ++i) row[i] = (in.at(f, i) - centre) * inv_half;
    for (std::size_t k = 0; k < channels.grad.size(); ++k) {
      if (channels.grad[k] == f) std::fill(row + (1 + k) * B, row + (2 + k) * B, inv_half);
    }
  }

  const auto params = net.params();
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t fan_in = net.widths()[l], fan_out = net.widths()[l + 1];
    std::vector<double>& pre = tape.pre[l];
    std::vector<double>& post = tape.post[l + 1];
    pre.resize(fan_out * cols);
    post.resize(fan_out * cols);
    simd::GemmArgs g;
    g.m = fan_out;
    g.n = cols;
    g.k = fan_in;
    g.a = params.data() + net.weight_offset(l);
    g.a_row = fan_in;
    g.a_col = 1;
    g.b = tape.post[l].data();
    g.ldb = cols;
    g.c = pre.data();
    g.ldc = cols;
    g.bias = params.data() + net.bias_offset(l);
    g.bias_cols = B;
    simd::gemm_nn(g);

    const bool last = l + 1 == L;
    for (std::size_t u = 0; u < fan_out; ++u) {
      const double* a = pre.data() + u * cols;
      double* y = post.data() + u * cols;
      for (std::size_t i = 0; i < B; ++i) {
        const Derivs d = last ? output_derivs(net.output_transform(), a[i]) : hidden_derivs(net.activation(), a[i]);
        y[i] = d.y;
        for (std::size_t c = 1; c < 1 + channels.grad.size(); ++c) y[c * B + i] = d.s1 * a[c * B + i];
        for (std::size_t k = 0; k < partner.size(); ++k) {
          const std::size_t c = 1 + channels.grad.size() + k;
          const double da = a[partner[k] * B + i];
          y[c * B + i] = d.s2 * da * da + d.s1 * a[c * B + i];
        }
      }
    }
  }
}

std::vector<double> predict(const Mlp& net, const InputBatch& in) {
  // Reused across calls: large per-call buffers otherwise dominate batched evaluation.
  thread_local Tape tape;
  forward(net, in, ChannelSet::value_only(), tape);
  const std::vector<double>& out = tape.post.back();
  return std::vector<double>(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(in.n));
}

void backward(const Mlp& net, const Tape& tape, std::span<const double> out_adjoint, std::span<double> grad) {
  const std::size_t B = tape.batch;
  const std::size_t C = tape.n_channels;
  const std::size_t cols = C * B;
  const std::size_t L = net.n_layers();
  if (net.n_outputs() != 1) throw std::invalid_argument("backward: only single-output networks are supported");
  if (out_adjoint.size() != cols) throw std::invalid_argument("backward: adjoint size mismatch");
  if (grad.size() != net.params().size()) throw std::invalid_argument("backward: gradient size mismatch");
  const std::vector<std::size_t> partner = hess_partner(tape.channels);
  const std::size_t ng = tape.channels.grad.size();
  const auto params = net.params();

  std::vector<double> adj_post(out_adjoint.begin(), out_adjoint.end());
  std::vector<double> adj_pre;
  for (std::size_t l = L; l-- > 0;) {
    const std::size_t fan_in = net.widths()[l], fan_out = net.widths()[l + 1];
    const bool last = l + 1 == L;
    const std::vector<double>& pre = tape.pre[l];
    adj_pre.assign(fan_out * cols, 0.0);
    for (std::size_t u = 0; u < fan_out; ++u) {
      const double* a = pre.data() + u * cols;
      const double* ybar = adj_post.data() + u * cols;
      double* abar = adj_pre.data() + u * cols;
      for (std::size_t i = 0; i < B; ++i) {
        const Derivs d = last ? output_derivs(net.output_transform(), a[i]) : hidden_derivs(net.activation(), a[i]);
        double v = ybar[i] * d.s1;
        for (std::size_t c = 1; c <= ng; ++c) {
          v += ybar[c * B + i] * d.s2 * a[c * B + i];
          abar[c * B + i] = ybar[c * B + i] * d.s1;
        }
        for (std::size_t k = 0; k < partner.size(); ++k) {
          const std::size_t c = 1 + ng + k;
          const double q = ybar[c * B + i];
          const double da = a[partner[k] * B + i];
          v += q * (d.s3 * da * da + d.s2 * a[c * B + i]);
          abar[partner[k] * B + i] += q * 2.0 * d.s2 * da;
          abar[c * B + i] = q * d.s1;
        }
        abar[i] = v;
      }
    }

    simd::GemmNtArgs gw;
    gw.m = fan_out;
    gw.p = fan_in;
    gw.n = cols;
    gw.a = adj_pre.data();
    gw.lda = cols;
    gw.b = tape.post[l].data();
    gw.ldb = cols;
    gw.c = grad.data() + net.weight_offset(l);
    gw.ldc = fan_in;
    simd::gemm_nt(gw);
    double* gb = grad.data() + net.bias_offset(l);
    for (std::size_t u = 0; u < fan_out; ++u) {
      const double* abar = adj_pre.data() + u * cols;
      double s = 0.0;
      for (std::size_t i = 0; i < B; ++i) s += abar[i];
      gb[u] += s;
    }

    if (l > 0) {
      adj_post.assign(fan_in * cols, 0.0);
      simd::GemmArgs g;
      g.m = fan_in;
      g.n = cols;
      g.k = fan_out;
      g.a = params.data() + net.weight_offset(l);
      g.a_row = 1;
      g.a_col = fan_in;
      g.b = adj_pre.data();
      g.ldb = cols;
      g.c = adj_post.data();
      g.ldc = cols;
      simd::gemm_nn(g);
    }
  }
}

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& s, double lr) {
  if (grad.size() != params.size() || s.m.size() != params.size() || s.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    s.m[k] = s.beta1 * s.m[k] + (1.0 - s.beta1) * grad[k];
    s.v[k] = s.beta2 * s.v[k] + (1.0 - s.beta2) * grad[k] * grad[k];
    const double mhat = s.m[k] / c1;
    const double vhat = s.v[k] / c2;
    params[k] -= lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

double lr_schedule(std::size_t epoch, double lr0) {
  return lr0 * std::ldexp(1.0, -static_cast<int>(epoch / 1000));
}

namespace {

constexpr char kMagic[8] = {'A', 'Q', 'M', 'L', 'P', '0', '0', '1'};

template <typename T>
void put(std::ostream& out, const T* p, std::size_t n) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(T)));
}

template <typename T>
void get(std::istream& in, T* p, std::size_t n) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) throw std::runtime_error("load_checkpoint: truncated input");
}

}  // namespace

void save_checkpoint(const Mlp& net, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  const std::uint64_t nw = net.widths().size();
  put(out, &nw, 1);
  for (std::size_t w : net.widths()) {
    const std::uint64_t v = w;
    put(out, &v, 1);
  }
  const auto act = static_cast<std::uint32_t>(net.activation());
  const auto tr = static_cast<std::uint32_t>(net.output_transform());
  put(out, &act, 1);
  put(out, &tr, 1);
  put(out, net.input_lo().data(), net.n_inputs());
  put(out, net.input_hi().data(), net.n_inputs());
  put(out, net.params().data(), net.params().size());
  if (!out) throw std::runtime_error("save_checkpoint: write failed");
}

Mlp load_checkpoint(std::istream& in) {
  char magic[8];
  get(in, magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("load_checkpoint: bad magic");
  std::uint64_t nw = 0;
  get(in, &nw, 1);
  if (nw < 2 || nw > 64) throw std::runtime_error("load_checkpoint: implausible layer count");
  std::vector<std::size_t> widths;
  for (std::uint64_t k = 0; k < nw; ++k) {
    std::uint64_t v = 0;
    get(in, &v, 1);
    widths.push_back(v);
  }
  std::uint32_t act = 0, tr = 0;
  get(in, &act, 1);
  get(in, &tr, 1);
  if (act > 1 || tr > 2) throw std::runtime_error("load_checkpoint: unknown activation or output tag");
  Mlp net(widths, static_cast<Activation>(act), static_cast<OutputTransform>(tr), 0);
  std::vector<double> lo(net.n_inputs()), hi(net.n_inputs());
  get(in, lo.data(), lo.size());
  get(in, hi.data(), hi.size());
  net.set_input_box(std::move(lo), std::move(hi));
  get(in, net.params().data(), net.params().size());
  return net;
}

void save_checkpoint_file(const Mlp& net, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  save_checkpoint(net, f);
}

Mlp load_checkpoint_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  return load_checkpoint(f);
}

}  // namespace aquaopt
