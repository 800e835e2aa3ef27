#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rgan/rng.hpp"
#include "rgan/serialize.hpp"
#include "rgan/tensor.hpp"

namespace rgan::nn {

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() { grad.set_zero(); }
};

// Layer contract:
//   - forward(x, train) caches whatever backward needs;
//   - backward(g) must follow the forward pass whose output it
//     differentiates (caches are single-slot, not a tape);
//   - backward accumulates into param grads until zero_grad;
//   - backward works in both train and eval mode (eval-mode backward is
//     what lets generator gradients flow through the frozen encoder).
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, bool train) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual std::vector<Param*> params() { return {}; }
  virtual const char* kind() const = 0;
  virtual void save(BinaryWriter& w) const = 0;
  virtual void init(Rng&) {}

  void zero_grad() {
    for (Param* p : params()) p->zero_grad();
  }
};

std::shared_ptr<Layer> load_layer(BinaryReader& r);

class Dense : public Layer {
 public:
  Dense(Index in_dim, Index out_dim);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  const char* kind() const override { return "dense"; }
  void save(BinaryWriter& w) const override;
  void init(Rng& rng) override;

  Index in_dim() const { return in_; }
  Index out_dim() const { return out_; }

 private:
  friend std::shared_ptr<Layer> load_layer(BinaryReader&);
  Index in_, out_;
  Param weight_;  // (out, in)
  Param bias_;    // (out)
  Tensor cached_in_;
};

class Conv2d : public Layer {
 public:
  Conv2d(Index in_c, Index out_c, Index kernel, Index stride, Index pad);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  const char* kind() const override { return "conv2d"; }
  void save(BinaryWriter& w) const override;
  void init(Rng& rng) override;

 private:
  friend std::shared_ptr<Layer> load_layer(BinaryReader&);
  Index in_c_, out_c_, k_, stride_, pad_;
  Param weight_;  // (out_c, in_c, k, k)
  Param bias_;    // (out_c)
  MatrixXd cols_;
  std::vector<Index> in_shape_;
};

class ConvTranspose2d : public Layer {
 public:
  ConvTranspose2d(Index in_c, Index out_c, Index kernel, Index stride, Index pad);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  const char* kind() const override { return "conv_transpose2d"; }
  void save(BinaryWriter& w) const override;
  void init(Rng& rng) override;

 private:
  friend std::shared_ptr<Layer> load_layer(BinaryReader&);
  Index in_c_, out_c_, k_, stride_, pad_;
  Param weight_;  // (in_c, out_c, k, k)
  Param bias_;    // (out_c)
  MatrixXd in_mat_;
  std::vector<Index> in_shape_;
};

// Per-channel batch normalization over (N, H, W); rank-2 inputs (N, C) are
// treated as C channels of 1x1 maps. Running statistics feed eval mode.
class BatchNorm : public Layer {
 public:
  explicit BatchNorm(Index channels, double eps = 1e-5, double momentum = 0.1);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&gamma_, &beta_}; }
  const char* kind() const override { return "batch_norm"; }
  void save(BinaryWriter& w) const override;
  void init(Rng& rng) override;

 private:
  friend std::shared_ptr<Layer> load_layer(BinaryReader&);
  Index c_;
  double eps_, momentum_;
  Param gamma_, beta_;
  Tensor running_mean_, running_var_;
  // caches
  Tensor xhat_;
  VectorXd inv_std_;
  bool train_mode_ = false;
  std::vector<Index> in_shape_;
};

class LeakyReLU : public Layer {
 public:
  explicit LeakyReLU(double alpha = 0.2) : alpha_(alpha) {}
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  const char* kind() const override { return "leaky_relu"; }
  void save(BinaryWriter& w) const override;

 private:
  double alpha_;
  Tensor cached_in_;
};

class ReLU : public Layer {
 public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  const char* kind() const override { return "relu"; }
  void save(BinaryWriter& w) const override;

 private:
  Tensor cached_in_;
};

class Tanh : public Layer {
 public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  const char* kind() const override { return "tanh"; }
  void save(BinaryWriter& w) const override;

 private:
  Tensor cached_out_;
};

class Sigmoid : public Layer {
 public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  const char* kind() const override { return "sigmoid"; }
  void save(BinaryWriter& w) const override;

 private:
  Tensor cached_out_;
};

// Reshapes every sample to `tail`; the batch dimension is preserved.
class Reshape : public Layer {
 public:
  explicit Reshape(std::vector<Index> tail) : tail_(std::move(tail)) {}
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  const char* kind() const override { return "reshape"; }
  void save(BinaryWriter& w) const override;

 private:
  friend std::shared_ptr<Layer> load_layer(BinaryReader&);
  std::vector<Index> tail_;
  std::vector<Index> in_shape_;
};

// Sequential container. Layers are shared_ptr so two networks can alias the
// same layer (weight tying); parameter gradients then accumulate from both.
class Network {
 public:
  Network() = default;
  explicit Network(std::string name) : name_(std::move(name)) {}

  Network& add(std::shared_ptr<Layer> layer);
  Tensor forward(const Tensor& x, bool train);
  Tensor backward(const Tensor& grad_out);

  std::vector<Param*> params() const;
  void zero_grad();
  uint64_t params_checksum() const;
  Index param_count() const;

  const std::vector<std::shared_ptr<Layer>>& layers() const { return layers_; }
  const std::string& name() const { return name_; }

  void save(BinaryWriter& w) const;
  static Network load(BinaryReader& r);

 private:
  std::string name_;
  std::vector<std::shared_ptr<Layer>> layers_;
};

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Parameters are deduplicated by address, so a weight-tied layer reachable
// from two networks is stepped exactly once per step() with the summed
// gradient it accumulated.
class Adam {
 public:
  Adam(std::vector<Param*> params, AdamConfig cfg);

  void step();
  void zero_grad();
  bool grads_finite() const;

  const std::vector<Param*>& params() const { return params_; }
  const AdamConfig& config() const { return cfg_; }
  int64_t step_count() const { return t_; }

  void save(BinaryWriter& w) const;
  // Restores moment buffers; `params` must enumerate the same tensors in the
  // same order as at save time.
  void load(BinaryReader& r);

 private:
  std::vector<Param*> params_;
  AdamConfig cfg_;
  std::vector<Eigen::ArrayXd> m_, v_;
  int64_t t_ = 0;
};

// Flat parameter vector helpers; the finite-difference oracles in the test
// suites drive networks through these.
VectorXd flatten_params(const std::vector<Param*>& params);
void unflatten_params(const std::vector<Param*>& params, const VectorXd& flat);
std::vector<Param*> dedup_params(const std::vector<Param*>& params);

}  // namespace rgan::nn
