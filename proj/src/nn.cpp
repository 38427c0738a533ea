#include "hems/nn.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "hems/config.hpp"
#include "hems/error.hpp"

namespace hems {

namespace {

std::uint64_t next_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Identity:
      return z;
    case Activation::Relu:
      return z > 0.0 ? z : 0.0;
    case Activation::Tanh:
      return std::tanh(z);
    case Activation::Sigmoid:
      return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

// Derivative expressed through the pre-activation z and the output y.
double activate_grad(Activation a, double z, double y) {
  switch (a) {
    case Activation::Identity:
      return 1.0;
    case Activation::Relu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh:
      return 1.0 - y * y;
    case Activation::Sigmoid:
      return y * (1.0 - y);
  }
  return 1.0;
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity:
      return "identity";
    case Activation::Relu:
      return "relu";
    case Activation::Tanh:
      return "tanh";
    case Activation::Sigmoid:
      return "sigmoid";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw ParameterError("unknown activation '" + name + "'");
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 3) throw ParameterError("an MLP needs at least one hidden layer");
  for (int w : layer_sizes) {
    if (w < 1) throw ParameterError("layer widths must be >= 1");
  }
  if (output_activations.size() != static_cast<std::size_t>(layer_sizes.back())) {
    throw ParameterError("need one output activation per output unit");
  }
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (const auto& w : weights) m = std::max(m, w.cwiseAbs().maxCoeff());
  for (const auto& b : biases) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)), id_(next_id()) {
  spec_.validate();
  std::mt19937_64 rng(spec_.seed);
  const std::size_t n = spec_.layer_sizes.size() - 1;
  for (std::size_t l = 0; l < n; ++l) {
    const int fan_in = spec_.layer_sizes[l];
    const int fan_out = spec_.layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(fan_in, fan_out);
    // Row-major draw order so the stream does not depend on Eigen's storage.
    for (int i = 0; i < fan_in; ++i) {
      for (int j = 0; j < fan_out; ++j) w(i, j) = dist(rng);
    }
    RowVector b(fan_out);
    for (int j = 0; j < fan_out; ++j) b(j) = dist(rng);
    weights_.push_back(std::move(w));
    biases_.push_back(std::move(b));
    m_w_.push_back(Matrix::Zero(fan_in, fan_out));
    v_w_.push_back(Matrix::Zero(fan_in, fan_out));
    m_b_.push_back(RowVector::Zero(fan_out));
    v_b_.push_back(RowVector::Zero(fan_out));
  }
}

Mlp::Mlp(const Mlp& other)
    : spec_(other.spec_),
      weights_(other.weights_),
      biases_(other.biases_),
      m_w_(other.m_w_),
      v_w_(other.v_w_),
      m_b_(other.m_b_),
      v_b_(other.v_b_),
      adam_step_(other.adam_step_),
      id_(next_id()),
      version_(0) {}

Mlp& Mlp::operator=(const Mlp& other) {
  if (this != &other) {
    spec_ = other.spec_;
    weights_ = other.weights_;
    biases_ = other.biases_;
    m_w_ = other.m_w_;
    v_w_ = other.v_w_;
    m_b_ = other.m_b_;
    v_b_ = other.v_b_;
    adam_step_ = other.adam_step_;
    touch();
  }
  return *this;
}

void Mlp::touch() { ++version_; }

Matrix& Mlp::mutable_weight(std::size_t layer) {
  touch();
  return weights_.at(layer);
}

RowVector& Mlp::mutable_bias(std::size_t layer) {
  touch();
  return biases_.at(layer);
}

std::size_t Mlp::num_parameters() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

Matrix Mlp::forward(const Matrix& batch, ForwardCache* cache) const {
  if (batch.cols() != input_dim()) {
    throw ShapeError("forward: input has " + std::to_string(batch.cols()) +
                     " columns, network expects " + std::to_string(input_dim()));
  }
  if (cache) {
    cache->net_id = id_;
    cache->version = version_;
    cache->inputs.clear();
    cache->pre.clear();
  }
  Matrix x = batch;
  const std::size_t n = weights_.size();
  for (std::size_t l = 0; l < n; ++l) {
    Matrix z = x * weights_[l];
    z.rowwise() += biases_[l];
    Matrix y(z.rows(), z.cols());
    if (l + 1 < n) {
      y = z.cwiseMax(0.0);
    } else {
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const Activation a = spec_.output_activations[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < z.rows(); ++i) y(i, j) = activate(a, z(i, j));
      }
    }
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->pre.push_back(std::move(z));
    }
    x = std::move(y);
  }
  if (cache) cache->output = x;
  return x;
}

Eigen::VectorXd Mlp::forward(std::span<const double> input) const {
  Matrix batch(1, static_cast<Eigen::Index>(input.size()));
  for (std::size_t i = 0; i < input.size(); ++i) batch(0, static_cast<Eigen::Index>(i)) = input[i];
  return forward(batch).row(0).transpose();
}

Gradients Mlp::backward(const ForwardCache& cache, const Matrix& output_grad,
                        bool weight_grads) const {
  if (cache.net_id != id_ || cache.version != version_) {
    throw ShapeError("backward: cache was produced by a different or since-modified network");
  }
  const std::size_t n = weights_.size();
  if (cache.pre.size() != n || output_grad.rows() != cache.output.rows() ||
      output_grad.cols() != cache.output.cols()) {
    throw ShapeError("backward: output gradient shape does not match the cached forward pass");
  }
  Gradients g;
  if (weight_grads) {
    g.weights.resize(n);
    g.biases.resize(n);
  }
  // dz for the output layer
  Matrix dz(output_grad.rows(), output_grad.cols());
  const Matrix& z_out = cache.pre.back();
  for (Eigen::Index j = 0; j < dz.cols(); ++j) {
    const Activation a = spec_.output_activations[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < dz.rows(); ++i) {
      dz(i, j) = output_grad(i, j) * activate_grad(a, z_out(i, j), cache.output(i, j));
    }
  }
  for (std::size_t l = n; l-- > 0;) {
    if (weight_grads) {
      g.weights[l].noalias() = cache.inputs[l].transpose() * dz;
      g.biases[l] = dz.colwise().sum();
    }
    Matrix dx = dz * weights_[l].transpose();
    if (l == 0) {
      g.input = std::move(dx);
      break;
    }
    dz = dx.cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return g;
}

void Mlp::adam_update(const Gradients& grads, double learning_rate, const AdamConfig& adam) {
  const std::size_t n = weights_.size();
  if (grads.weights.size() != n || grads.biases.size() != n) {
    throw ShapeError("adam_update: gradient layer count does not match the network");
  }
  for (std::size_t l = 0; l < n; ++l) {
    if (grads.weights[l].rows() != weights_[l].rows() ||
        grads.weights[l].cols() != weights_[l].cols() ||
        grads.biases[l].size() != biases_[l].size()) {
      throw ShapeError("adam_update: gradient shape mismatch in layer " + std::to_string(l));
    }
    if (!grads.weights[l].allFinite() || !grads.biases[l].allFinite()) {
      throw NumericError("adam_update: non-finite gradient in layer " + std::to_string(l));
    }
  }
  ++adam_step_;
  const double t = static_cast<double>(adam_step_);
  const double bc1 = 1.0 - std::pow(adam.beta1, t);
  const double bc2 = 1.0 - std::pow(adam.beta2, t);
  const double b1 = adam.beta1;
  const double b2 = adam.beta2;
  for (std::size_t l = 0; l < n; ++l) {
    m_w_[l] = b1 * m_w_[l] + (1.0 - b1) * grads.weights[l];
    v_w_[l] = b2 * v_w_[l] + (1.0 - b2) * grads.weights[l].cwiseAbs2();
    weights_[l].array() -= learning_rate * (m_w_[l].array() / bc1) /
                           ((v_w_[l].array() / bc2).sqrt() + adam.eps);
    m_b_[l] = b1 * m_b_[l] + (1.0 - b1) * grads.biases[l];
    v_b_[l] = b2 * v_b_[l] + (1.0 - b2) * grads.biases[l].cwiseAbs2();
    biases_[l].array() -= learning_rate * (m_b_[l].array() / bc1) /
                          ((v_b_[l].array() / bc2).sqrt() + adam.eps);
  }
  touch();
}

bool Mlp::same_shape(const Mlp& other) const {
  return spec_.layer_sizes == other.spec_.layer_sizes;
}

void Mlp::soft_update_from(const Mlp& online, double tau) {
  if (!same_shape(online)) throw ShapeError("soft_update: networks have different shapes");
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    weights_[l] = tau * online.weights_[l] + (1.0 - tau) * weights_[l];
    biases_[l] = tau * online.biases_[l] + (1.0 - tau) * biases_[l];
  }
  touch();
}

void soft_update(Mlp& target, const Mlp& online, double tau) { target.soft_update_from(online, tau); }

bool Mlp::all_finite() const {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
  }
  return true;
}

double Mlp::max_abs_diff(const Mlp& other) const {
  if (!same_shape(other)) throw ShapeError("max_abs_diff: networks have different shapes");
  double m = 0.0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    m = std::max(m, (weights_[l] - other.weights_[l]).cwiseAbs().maxCoeff());
    m = std::max(m, (biases_[l] - other.biases_[l]).cwiseAbs().maxCoeff());
  }
  return m;
}

std::string Mlp::serialize() const {
  std::string out = "hems-mlp 1\nsizes";
  for (int s : spec_.layer_sizes) out += " " + std::to_string(s);
  out += "\noutputs";
  for (auto a : spec_.output_activations) out += " " + to_string(a);
  out += "\nseed " + std::to_string(spec_.seed) + "\n";
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto& w = weights_[l];
    out += "W " + std::to_string(l) + " " + std::to_string(w.rows()) + " " +
           std::to_string(w.cols()) + "\n";
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        if (j) out += ' ';
        out += format_double(w(i, j));
      }
      out += '\n';
    }
    out += "b " + std::to_string(l) + " " + std::to_string(biases_[l].size()) + "\n";
    for (Eigen::Index j = 0; j < biases_[l].size(); ++j) {
      if (j) out += ' ';
      out += format_double(biases_[l](j));
    }
    out += '\n';
  }
  return out;
}

Mlp Mlp::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "hems-mlp" || version != 1) {
    throw SchemaError("not a hems-mlp v1 weight file");
  }
  std::string line;
  std::getline(in, line);
  MlpSpec spec;
  if (!std::getline(in, line) || line.rfind("sizes", 0) != 0) throw SchemaError("missing sizes line");
  {
    std::istringstream ls(line.substr(5));
    int s = 0;
    while (ls >> s) spec.layer_sizes.push_back(s);
  }
  if (!std::getline(in, line) || line.rfind("outputs", 0) != 0) {
    throw SchemaError("missing outputs line");
  }
  {
    std::istringstream ls(line.substr(7));
    std::string a;
    while (ls >> a) spec.output_activations.push_back(activation_from_string(a));
  }
  if (!(in >> tag >> spec.seed) || tag != "seed") throw SchemaError("missing seed line");
  Mlp net(spec);
  std::string token;
  const auto read_value = [&]() {
    if (!(in >> token)) throw SchemaError("truncated weight file");
    return parse_double(token);
  };
  for (std::size_t l = 0; l < net.weights_.size(); ++l) {
    std::size_t idx = 0;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> tag >> idx >> rows >> cols) || tag != "W" || idx != l ||
        rows != net.weights_[l].rows() || cols != net.weights_[l].cols()) {
      throw SchemaError("bad weight header for layer " + std::to_string(l));
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) net.weights_[l](i, j) = read_value();
    }
    Eigen::Index n = 0;
    if (!(in >> tag >> idx >> n) || tag != "b" || idx != l || n != net.biases_[l].size()) {
      throw SchemaError("bad bias header for layer " + std::to_string(l));
    }
    for (Eigen::Index j = 0; j < n; ++j) net.biases_[l](j) = read_value();
  }
  net.touch();
  return net;
}

void Mlp::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize();
  if (!out) throw IoError("write failed: " + path.string());
}

Mlp Mlp::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace hems
