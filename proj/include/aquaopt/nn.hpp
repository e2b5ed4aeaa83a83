#pragma once

// Small fully connected networks with exact input derivatives.
//
// Evaluation is channel-major: besides the value, a forward pass can carry
// first derivatives with respect to any input and diagonal second
// derivatives for selected inputs. Each layer is one GEMM over
// [units x (channels * batch)], and parameter gradients of any loss on the
// output channels come from one reverse sweep through the same tape.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace aquaopt {

enum class Activation : std::uint32_t { Tanh = 0, Relu = 1 };
enum class OutputTransform : std::uint32_t { Identity = 0, Abs = 1, Sigmoid = 2 };

/// Output channel selection. Value is always present; a second derivative
/// of input i implies the first derivative of input i.
struct ChannelSet {
  std::vector<std::size_t> grad;
  std::vector<std::size_t> hess;

  static ChannelSet value_only() { return {}; }
  static ChannelSet gradient(std::size_t n_inputs);
  /// Full gradient plus the listed diagonal second derivatives.
  static ChannelSet gradient_and_hess(std::size_t n_inputs, std::vector<std::size_t> diag);
};

class Mlp {
 public:
  Mlp() = default;
  /// widths = {n_in, hidden..., n_out}; Xavier-uniform weights, zero biases.
  Mlp(std::vector<std::size_t> widths, Activation act, OutputTransform out, std::uint64_t seed);

  std::size_t n_inputs() const { return widths_.front(); }
  std::size_t n_outputs() const { return widths_.back(); }
  std::size_t n_layers() const { return widths_.size() - 1; }
  const std::vector<std::size_t>& widths() const { return widths_; }
  Activation activation() const { return act_; }
  OutputTransform output_transform() const { return out_; }

  /// Inputs are mapped affinely from [lo, hi] to [-1, 1] before the first
  /// layer; derivatives are reported in the original units.
  void set_input_box(std::vector<double> lo, std::vector<double> hi);
  const std::vector<double>& input_lo() const { return lo_; }
  const std::vector<double>& input_hi() const { return hi_; }

  /// Flat parameters: per layer row-major W[out x in] followed by b[out].
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return offsets_[layer] + widths_[layer + 1] * widths_[layer]; }

  bool operator==(const Mlp& o) const;

 private:
  void layout();

  std::vector<std::size_t> widths_;
  Activation act_ = Activation::Tanh;
  OutputTransform out_ = OutputTransform::Identity;
  std::vector<double> lo_, hi_;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;
};

/// Column batch of inputs, feature-major: x[f * n + i].
struct InputBatch {
  std::size_t n = 0;
  std::size_t n_features = 0;
  std::vector<double> x;

  InputBatch() = default;
  InputBatch(std::size_t features, std::size_t count) : n(count), n_features(features), x(features * count) {}
  double& at(std::size_t f, std::size_t i) { return x[f * n + i]; }
  double at(std::size_t f, std::size_t i) const { return x[f * n + i]; }
};

/// Forward state kept for the reverse sweep. Channel order: value,
/// grad[0..], hess[0..].
struct Tape {
  std::size_t batch = 0;
  ChannelSet channels;
  std::size_t n_channels = 1;
  /// Per layer: pre-activations and post-activations, [units x C * batch].
  std::vector<std::vector<double>> pre, post;

  /// Output unit 0, channel c, sample i.
  double out(std::size_t c, std::size_t i) const { return post.back()[c * batch + i]; }
  double value(std::size_t i) const { return out(0, i); }
  /// Channel index of d/dx_input; throws if not requested.
  std::size_t grad_channel(std::size_t input) const;
  std::size_t hess_channel(std::size_t input) const;
};

/// Evaluates the network and the requested derivative channels. Throws
/// std::invalid_argument on a width mismatch or second derivatives of a
/// relu network.
void forward(const Mlp& net, const InputBatch& in, const ChannelSet& channels, Tape& tape);

/// Values only (output unit 0).
std::vector<double> predict(const Mlp& net, const InputBatch& in);

/// Accumulates d loss / d params into grad given adjoints of the output
/// channels, laid out like tape.post.back() (single output unit).
void backward(const Mlp& net, const Tape& tape, std::span<const double> out_adjoint, std::span<double> grad);

struct AdamState {
  std::vector<double> m, v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update in place.
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, double lr);

/// lr0 * 0.5^floor(epoch / 1000).
double lr_schedule(std::size_t epoch, double lr0 = 5e-3);

/// Binary checkpoint (little-endian):
///   "AQMLP001" | u64 n_widths | u64 widths[] | u32 activation | u32 output
///   | f64 input_lo[n_in] | f64 input_hi[n_in] | f64 params[]
void save_checkpoint(const Mlp& net, std::ostream& out);
Mlp load_checkpoint(std::istream& in);
void save_checkpoint_file(const Mlp& net, const std::string& path);
Mlp load_checkpoint_file(const std::string& path);

}  // namespace aquaopt
