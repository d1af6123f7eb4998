#include "nn/mlp.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace avc::nn {

namespace {

double activate(Activation a, double x) {
  switch (a) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    default: return x;
  }
}

// Derivative expressed through the post-activation value.
double activate_grad(Activation a, double pre, double post) {
  switch (a) {
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - post * post;
    default: return 1.0;
  }
}

void check_input(const Mlp& net, std::span<const double> input) {
  if (static_cast<int>(input.size()) != net.input_size())
    throw Error(ErrorCode::bounds, "input length " + std::to_string(input.size()) +
                                       " != declared " + std::to_string(net.input_size()));
}

}  // namespace

std::size_t parameter_count(const std::vector<int>& layer_sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    n += static_cast<std::size_t>(layer_sizes[l] + 1) * layer_sizes[l + 1];
  return n;
}

std::size_t Mlp::parameter_count() const { return nn::parameter_count(layer_sizes); }

bool Mlp::same_shape(const Mlp& other) const {
  return layer_sizes == other.layer_sizes && activations == other.activations;
}

Mlp make_mlp(const std::vector<int>& layer_sizes, const std::vector<Activation>& activations,
             std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw Error(ErrorCode::config, "mlp needs at least two layer sizes");
  if (activations.size() != layer_sizes.size() - 1)
    throw Error(ErrorCode::config, "one activation per layer required");
  for (int s : layer_sizes)
    if (s < 1) throw Error(ErrorCode::config, "layer sizes must be positive");
  Mlp net;
  net.layer_sizes = layer_sizes;
  net.activations = activations;
  net.parameters.resize(nn::parameter_count(layer_sizes));
  Rng rng(seed);
  std::size_t at = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer_sizes[l]));
    const std::size_t count = static_cast<std::size_t>(layer_sizes[l] + 1) * layer_sizes[l + 1];
    for (std::size_t k = 0; k < count; ++k) net.parameters[at++] = rng.uniform(-bound, bound);
  }
  return net;
}

void forward(const Mlp& net, std::span<const double> input, std::vector<double>& output,
             Workspace& ws) {
  check_input(net, input);
  const int layers = static_cast<int>(net.activations.size());
  ws.post.resize(layers + 1);
  ws.post[0].assign(input.begin(), input.end());
  const double* p = net.parameters.data();
  for (int l = 0; l < layers; ++l) {
    const int nin = net.layer_sizes[l];
    const int nout = net.layer_sizes[l + 1];
    const double* w = p;
    const double* b = p + static_cast<std::size_t>(nin) * nout;
    p = b + nout;
    auto& out = ws.post[l + 1];
    out.resize(nout);
    const double* in = ws.post[l].data();
    for (int o = 0; o < nout; ++o) {
      const double* row = w + static_cast<std::size_t>(o) * nin;
      double acc = b[o];
      for (int i = 0; i < nin; ++i) acc += row[i] * in[i];
      out[o] = activate(net.activations[l], acc);
    }
  }
  output = ws.post[layers];
}

std::vector<double> forward(const Mlp& net, std::span<const double> input) {
  Workspace ws;
  std::vector<double> out;
  forward(net, input, out, ws);
  return out;
}

void backward_accumulate(const Mlp& net, std::span<const double> input,
                         std::span<const double> upstream, double weight, Gradient& acc,
                         Workspace& ws) {
  check_input(net, input);
  if (static_cast<int>(upstream.size()) != net.output_size())
    throw Error(ErrorCode::bounds, "upstream length != output size");
  if (acc.values.size() != net.parameters.size())
    throw Error(ErrorCode::bounds, "gradient accumulator has wrong length");

  const int layers = static_cast<int>(net.activations.size());
  ws.pre.resize(layers);
  ws.post.resize(layers + 1);
  ws.post[0].assign(input.begin(), input.end());

  // Forward with cached pre-activations.
  {
    const double* p = net.parameters.data();
    for (int l = 0; l < layers; ++l) {
      const int nin = net.layer_sizes[l];
      const int nout = net.layer_sizes[l + 1];
      const double* w = p;
      const double* b = p + static_cast<std::size_t>(nin) * nout;
      p = b + nout;
      ws.pre[l].resize(nout);
      ws.post[l + 1].resize(nout);
      const double* in = ws.post[l].data();
      for (int o = 0; o < nout; ++o) {
        const double* row = w + static_cast<std::size_t>(o) * nin;
        double v = b[o];
        for (int i = 0; i < nin; ++i) v += row[i] * in[i];
        ws.pre[l][o] = v;
        ws.post[l + 1][o] = activate(net.activations[l], v);
      }
    }
  }

  // Reverse sweep: delta holds d(dot(output, upstream))/d(pre-activation).
  ws.delta.assign(upstream.begin(), upstream.end());
  for (int o = 0; o < net.layer_sizes[layers]; ++o)
    ws.delta[o] *= activate_grad(net.activations[layers - 1], ws.pre[layers - 1][o],
                                 ws.post[layers][o]);

  // Parameter offsets of each layer.
  std::size_t offset = net.parameters.size();
  std::vector<double> prev_delta;
  for (int l = layers - 1; l >= 0; --l) {
    const int nin = net.layer_sizes[l];
    const int nout = net.layer_sizes[l + 1];
    offset -= static_cast<std::size_t>(nin + 1) * nout;
    const double* w = net.parameters.data() + offset;
    double* gw = acc.values.data() + offset;
    double* gb = gw + static_cast<std::size_t>(nin) * nout;
    const double* in = ws.post[l].data();

    prev_delta.assign(nin, 0.0);
    for (int o = 0; o < nout; ++o) {
      const double d = ws.delta[o] * weight;
      if (d != 0.0) {
        double* grow = gw + static_cast<std::size_t>(o) * nin;
        const double* row = w + static_cast<std::size_t>(o) * nin;
        for (int i = 0; i < nin; ++i) {
          grow[i] += d * in[i];
          prev_delta[i] += ws.delta[o] * row[i];
        }
        gb[o] += d;
      } else if (ws.delta[o] != 0.0) {
        const double* row = w + static_cast<std::size_t>(o) * nin;
        for (int i = 0; i < nin; ++i) prev_delta[i] += ws.delta[o] * row[i];
      }
    }
    if (l > 0) {
      for (int i = 0; i < nin; ++i)
        prev_delta[i] *= activate_grad(net.activations[l - 1], ws.pre[l - 1][i], ws.post[l][i]);
    }
    ws.delta = prev_delta;
  }
  ws.input_grad.resize(net.layer_sizes[0]);
  for (int i = 0; i < net.layer_sizes[0]; ++i) ws.input_grad[i] = ws.delta[i] * weight;
}

Gradient backward(const Mlp& net, std::span<const double> input,
                  std::span<const double> upstream) {
  Gradient g;
  g.values.assign(net.parameters.size(), 0.0);
  Workspace ws;
  backward_accumulate(net, input, upstream, 1.0, g, ws);
  return g;
}

OptimizerState make_sgd(double learning_rate) {
  OptimizerState s;
  s.method = OptMethod::sgd;
  s.learning_rate = learning_rate;
  return s;
}

OptimizerState make_adam(double learning_rate) {
  OptimizerState s;
  s.method = OptMethod::adam;
  s.learning_rate = learning_rate;
  return s;
}

void apply_update(Mlp& net, const Gradient& grad, OptimizerState& opt) {
  if (grad.values.size() != net.parameters.size())
    throw Error(ErrorCode::bounds, "gradient length != parameter length");
  for (double g : grad.values)
    if (!std::isfinite(g)) throw Error(ErrorCode::internal, "non-finite gradient");

  const std::size_t n = net.parameters.size();
  if (opt.method == OptMethod::sgd) {
    for (std::size_t i = 0; i < n; ++i) net.parameters[i] -= opt.learning_rate * grad.values[i];
    ++opt.step;
    return;
  }
  if (opt.m.size() != n) opt.m.assign(n, 0.0);
  if (opt.v.size() != n) opt.v.assign(n, 0.0);
  ++opt.step;
  const double b1t = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double b2t = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad.values[i];
    opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * g;
    opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * g * g;
    const double mhat = opt.m[i] / b1t;
    const double vhat = opt.v[i] / b2t;
    net.parameters[i] -= opt.learning_rate * mhat / (std::sqrt(vhat) + opt.eps);
  }
}

void soft_blend(Mlp& target, const Mlp& online, double tau) {
  if (!target.same_shape(online))
    throw Error(ErrorCode::bounds, "soft_blend requires identical shapes");
  for (std::size_t i = 0; i < target.parameters.size(); ++i)
    target.parameters[i] = tau * online.parameters[i] + (1.0 - tau) * target.parameters[i];
}

// ---- checkpoint container ----

namespace {

constexpr char kMagic[8] = {'A', 'V', 'C', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

struct Reader {
  const std::string& data;
  std::size_t at = 0;

  void need(std::size_t n) const {
    if (at + n > data.size()) throw Error(ErrorCode::io, "checkpoint truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[at++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[at++])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data.substr(at, n);
    at += n;
    return s;
  }
};

}  // namespace

void save_networks(const std::string& path,
                   const std::vector<std::pair<std::string, const Mlp*>>& nets) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(nets.size()));
  for (const auto& [name, net] : nets) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
    put_u32(out, static_cast<std::uint32_t>(net->layer_sizes.size()));
    for (int s : net->layer_sizes) put_u64(out, static_cast<std::uint64_t>(s));
    for (Activation a : net->activations) put_u32(out, static_cast<std::uint32_t>(a));
    put_u64(out, net->parameters.size());
    for (double v : net->parameters) put_f64(out, v);
  }
  put_u64(out, fnv1a64(out.data(), out.size()));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::io, "cannot write checkpoint: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorCode::io, "checkpoint write failed: " + path);
}

std::vector<std::pair<std::string, Mlp>> load_networks(const std::string& path) {
  const std::string data = read_text_file(path);
  if (data.size() < sizeof(kMagic) + 16) throw Error(ErrorCode::io, "checkpoint truncated");
  if (std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0)
    throw Error(ErrorCode::io, "not a checkpoint file: " + path);
  const std::uint64_t stored = [&] {
    Reader r{data, data.size() - 8};
    return r.u64();
  }();
  if (fnv1a64(data.data(), data.size() - 8) != stored)
    throw Error(ErrorCode::io, "checkpoint checksum mismatch: " + path);

  Reader r{data, sizeof(kMagic)};
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw Error(ErrorCode::io, "unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  std::vector<std::pair<std::string, Mlp>> nets;
  nets.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t name_len = r.u32();
    std::string name = r.bytes(name_len);
    Mlp net;
    const std::uint32_t n_sizes = r.u32();
    if (n_sizes < 2) throw Error(ErrorCode::io, "checkpoint declares a degenerate network");
    net.layer_sizes.resize(n_sizes);
    for (auto& s : net.layer_sizes) s = static_cast<int>(r.u64());
    net.activations.resize(n_sizes - 1);
    for (auto& a : net.activations) {
      const std::uint32_t code = r.u32();
      if (code > 2) throw Error(ErrorCode::io, "unknown activation code in checkpoint");
      a = static_cast<Activation>(code);
    }
    const std::uint64_t pcount = r.u64();
    if (pcount != net.parameter_count())
      throw Error(ErrorCode::io, "checkpoint parameter count does not match shapes");
    net.parameters.resize(pcount);
    for (auto& v : net.parameters) v = r.f64();
    nets.emplace_back(std::move(name), std::move(net));
  }
  return nets;
}

void save_checkpoint(const Mlp& net, const std::string& path) {
  save_networks(path, {{"net", &net}});
}

Mlp load_checkpoint(const std::string& path, const std::vector<int>& expected_sizes) {
  auto nets = load_networks(path);
  if (nets.size() != 1)
    throw Error(ErrorCode::io, "expected a single-network checkpoint, found " +
                                   std::to_string(nets.size()));
  Mlp net = std::move(nets[0].second);
  if (!expected_sizes.empty() && net.layer_sizes != expected_sizes)
    throw Error(ErrorCode::bounds, "checkpoint shape does not match the declared architecture");
  return net;
}

}  // namespace avc::nn
