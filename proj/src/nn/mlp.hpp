#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"

namespace avc::nn {

enum class Activation { linear = 0, relu = 1, tanh = 2 };

/// Fully connected network over a flat parameter vector. Per-layer layout:
/// row-major weights (n_out x n_in) followed by biases (n_out).
struct Mlp {
  std::vector<int> layer_sizes;          // L+1 entries
  std::vector<Activation> activations;   // L entries
  std::vector<double> parameters;

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  std::size_t parameter_count() const;
  bool same_shape(const Mlp& other) const;
};

std::size_t parameter_count(const std::vector<int>& layer_sizes);

/// Uniform fan-in initialization: weights and biases of a layer with n_in
/// inputs drawn from U(-1/sqrt(n_in), +1/sqrt(n_in)).
Mlp make_mlp(const std::vector<int>& layer_sizes, const std::vector<Activation>& activations,
             std::uint64_t seed);

/// Scratch space reused across forward/backward calls.
struct Workspace {
  std::vector<std::vector<double>> pre;   // pre-activation per layer
  std::vector<std::vector<double>> post;  // post-activation per layer (post[0] = input)
  std::vector<double> delta;
  std::vector<double> input_grad;
};

void forward(const Mlp& net, std::span<const double> input, std::vector<double>& output,
             Workspace& ws);
std::vector<double> forward(const Mlp& net, std::span<const double> input);

struct Gradient {
  std::vector<double> values;  // aligned with Mlp::parameters
};

/// Reverse-mode gradient of dot(output, upstream) with respect to every
/// parameter; `weight` times the gradient is accumulated into `acc` (which
/// must be sized like the parameter vector). ws.input_grad receives the
/// same-weighted gradient with respect to the input.
void backward_accumulate(const Mlp& net, std::span<const double> input,
                         std::span<const double> upstream, double weight, Gradient& acc,
                         Workspace& ws);

Gradient backward(const Mlp& net, std::span<const double> input,
                  std::span<const double> upstream);

enum class OptMethod { sgd, adam };

struct OptimizerState {
  OptMethod method = OptMethod::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<double> m;  // first moment (adam)
  std::vector<double> v;  // second moment (adam)
};

OptimizerState make_sgd(double learning_rate);
OptimizerState make_adam(double learning_rate);

/// One descent step; adam uses the standard bias-corrected moments.
/// Throws on non-finite gradient entries.
void apply_update(Mlp& net, const Gradient& grad, OptimizerState& opt);

/// theta_target <- tau * theta_online + (1 - tau) * theta_target.
void soft_blend(Mlp& target, const Mlp& online, double tau);

/// Versioned binary container holding one or more named networks
/// (little-endian, FNV-1a checksummed). Round-trips are bit-exact.
void save_networks(const std::string& path,
                   const std::vector<std::pair<std::string, const Mlp*>>& nets);
std::vector<std::pair<std::string, Mlp>> load_networks(const std::string& path);

void save_checkpoint(const Mlp& net, const std::string& path);
/// Loads a single-network checkpoint; when expected_sizes is nonempty the
/// stored shape must match it.
Mlp load_checkpoint(const std::string& path, const std::vector<int>& expected_sizes = {});

}  // namespace avc::nn
