#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hems {

enum class Activation { Identity, Relu, Tanh, Sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// Fully connected network layout. Hidden layers use a rectifier; each output
// unit has its own activation.
struct MlpSpec {
  std::vector<int> layer_sizes;  // input, hidden..., output
  std::vector<Activation> output_activations;
  std::uint64_t seed = 0;

  void validate() const;
};

// Batched matrices hold one sample per row.
using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<RowVector> biases;
  Matrix input;  // d(loss)/d(input), one row per sample

  // Largest |component| over weights and biases.
  double max_abs() const;
};

// Intermediate values of one forward pass, tied to the network state that
// produced them.
struct ForwardCache {
  std::uint64_t net_id = 0;
  std::uint64_t version = 0;
  std::vector<Matrix> inputs;       // layer inputs; inputs[0] is the batch
  std::vector<Matrix> pre;          // affine outputs before activation
  Matrix output;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Weights, biases, Adam moments and step counter of one network.
class Mlp {
 public:
  // Weights and biases drawn from Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  explicit Mlp(MlpSpec spec);

  Mlp(const Mlp& other);
  Mlp& operator=(const Mlp& other);
  Mlp(Mlp&&) noexcept = default;
  Mlp& operator=(Mlp&&) noexcept = default;

  Matrix forward(const Matrix& batch, ForwardCache* cache = nullptr) const;
  Eigen::VectorXd forward(std::span<const double> input) const;

  // Reverse-mode gradients of sum_i <output_grad_i, y_i>. With
  // `weight_grads == false` only the input gradient is produced.
  Gradients backward(const ForwardCache& cache, const Matrix& output_grad,
                     bool weight_grads = true) const;

  // One bias-corrected Adam step of size `learning_rate` against `grads`.
  void adam_update(const Gradients& grads, double learning_rate, const AdamConfig& adam = {});

  // this <- tau * online + (1 - tau) * this
  void soft_update_from(const Mlp& online, double tau);

  const MlpSpec& spec() const { return spec_; }
  std::size_t num_layers() const { return weights_.size(); }
  int input_dim() const { return spec_.layer_sizes.front(); }
  int output_dim() const { return spec_.layer_sizes.back(); }
  std::size_t num_parameters() const;
  std::uint64_t adam_steps() const { return adam_step_; }

  const Matrix& weight(std::size_t layer) const { return weights_[layer]; }
  const RowVector& bias(std::size_t layer) const { return biases_[layer]; }
  Matrix& mutable_weight(std::size_t layer);
  RowVector& mutable_bias(std::size_t layer);

  bool all_finite() const;
  // max |this - other| over all weights and biases.
  double max_abs_diff(const Mlp& other) const;
  bool same_shape(const Mlp& other) const;

  // Text format: header with layer sizes and output activations, then each
  // weight matrix row-major followed by its bias.
  void save(const std::filesystem::path& path) const;
  static Mlp load(const std::filesystem::path& path);
  std::string serialize() const;
  static Mlp deserialize(const std::string& text);

 private:
  void touch();

  MlpSpec spec_;
  std::vector<Matrix> weights_;  // (in x out)
  std::vector<RowVector> biases_;
  std::vector<Matrix> m_w_, v_w_;
  std::vector<RowVector> m_b_, v_b_;
  std::uint64_t adam_step_ = 0;
  std::uint64_t id_ = 0;
  std::uint64_t version_ = 0;
};

void soft_update(Mlp& target, const Mlp& online, double tau);

}  // namespace hems
