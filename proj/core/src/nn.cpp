#include "rgan/nn.hpp"

#include <cmath>
#include <unordered_set>

namespace rgan::nn {

namespace {

void write_tensor(BinaryWriter& w, const Tensor& t) {
  w.u64(t.rank());
  for (Index d : t.shape()) w.i64(d);
  w.f64_span(t.data(), static_cast<size_t>(t.numel()));
}

Tensor read_tensor(BinaryReader& r) {
  const uint64_t rank = r.u64();
  std::vector<Index> shape(rank);
  for (auto& d : shape) d = r.i64();
  Tensor t(shape);
  r.f64_into(t.data(), static_cast<size_t>(t.numel()));
  return t;
}

// Column gathering shared by Conv2d and ConvTranspose2d. `cols` has one row
// per (channel, ky, kx) and one column per (sample, sh, sw) source-grid
// position; entry = img[n][c][sh*stride - pad + ky][sw*stride - pad + kx],
// zero outside the image.
void gather_cols(const double* img, Index n_batch, Index c, Index dh, Index dw,
                 Index k, Index stride, Index pad, Index sh, Index sw,
                 MatrixXd& cols) {
  const Index rows = c * k * k;
  const Index n_cols = n_batch * sh * sw;
  cols.resize(rows, n_cols);
  Index col = 0;
  for (Index n = 0; n < n_batch; ++n) {
    const double* sample = img + n * c * dh * dw;
    for (Index y = 0; y < sh; ++y) {
      for (Index x = 0; x < sw; ++x, ++col) {
        double* out = cols.data() + col * rows;
        Index row = 0;
        for (Index ci = 0; ci < c; ++ci) {
          const double* plane = sample + ci * dh * dw;
          for (Index ky = 0; ky < k; ++ky) {
            const Index iy = y * stride - pad + ky;
            if (iy < 0 || iy >= dh) {
              for (Index kx = 0; kx < k; ++kx) out[row++] = 0.0;
              continue;
            }
            const double* line = plane + iy * dw;
            for (Index kx = 0; kx < k; ++kx) {
              const Index ix = x * stride - pad + kx;
              out[row++] = (ix >= 0 && ix < dw) ? line[ix] : 0.0;
            }
          }
        }
      }
    }
  }
}

// Adjoint of gather_cols: scatter-adds column entries back into the image.
void scatter_cols_add(const MatrixXd& cols, Index n_batch, Index c, Index dh,
                      Index dw, Index k, Index stride, Index pad, Index sh,
                      Index sw, double* img) {
  const Index rows = c * k * k;
  Index col = 0;
  for (Index n = 0; n < n_batch; ++n) {
    double* sample = img + n * c * dh * dw;
    for (Index y = 0; y < sh; ++y) {
      for (Index x = 0; x < sw; ++x, ++col) {
        const double* in = cols.data() + col * rows;
        Index row = 0;
        for (Index ci = 0; ci < c; ++ci) {
          double* plane = sample + ci * dh * dw;
          for (Index ky = 0; ky < k; ++ky) {
            const Index iy = y * stride - pad + ky;
            if (iy < 0 || iy >= dh) {
              row += k;
              continue;
            }
            double* line = plane + iy * dw;
            for (Index kx = 0; kx < k; ++kx, ++row) {
              const Index ix = x * stride - pad + kx;
              if (ix >= 0 && ix < dw) line[ix] += in[row];
            }
          }
        }
      }
    }
  }
}

void init_normal(Tensor& t, Rng& rng, double mean, double stddev) {
  for (Index i = 0; i < t.numel(); ++i) t[i] = rng.normal(mean, stddev);
}

}  // namespace

// ---------------------------------------------------------------- Dense

Dense::Dense(Index in_dim, Index out_dim) : in_(in_dim), out_(out_dim) {
  require(in_dim >= 1 && out_dim >= 1, ErrorCategory::config, "dense dims must be >= 1");
  weight_ = {"weight", Tensor({out_, in_}), Tensor({out_, in_})};
  bias_ = {"bias", Tensor({out_}), Tensor({out_})};
}

void Dense::init(Rng& rng) { init_normal(weight_.value, rng, 0.0, 0.02); }

Tensor Dense::forward(const Tensor& x, bool) {
  const Index b = x.dim(0);
  const Index d = x.numel() / b;
  require(d == in_, ErrorCategory::shape,
          "dense: expected input dim " + std::to_string(in_) + ", got " + std::to_string(d));
  cached_in_ = x;
  Tensor y({b, out_});
  y.mat(b, out_) = x.mat(b, in_) * weight_.value.mat(out_, in_).transpose();
  y.mat(b, out_).rowwise() +=
      Eigen::Map<const Eigen::RowVectorXd>(bias_.value.data(), out_);
  return y;
}

Tensor Dense::backward(const Tensor& grad_out) {
  const Index b = grad_out.dim(0);
  auto g = grad_out.mat(b, out_);
  auto x = cached_in_.mat(b, in_);
  weight_.grad.mat(out_, in_) += g.transpose() * x;
  Eigen::Map<Eigen::RowVectorXd>(bias_.grad.data(), out_) += g.colwise().sum();
  Tensor gx(cached_in_.shape());
  gx.mat(b, in_) = g * weight_.value.mat(out_, in_);
  return gx;
}

void Dense::save(BinaryWriter& w) const {
  w.str(kind());
  w.i64(in_);
  w.i64(out_);
  write_tensor(w, weight_.value);
  write_tensor(w, bias_.value);
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(Index in_c, Index out_c, Index kernel, Index stride, Index pad)
    : in_c_(in_c), out_c_(out_c), k_(kernel), stride_(stride), pad_(pad) {
  weight_ = {"weight", Tensor({out_c_, in_c_, k_, k_}), Tensor({out_c_, in_c_, k_, k_})};
  bias_ = {"bias", Tensor({out_c_}), Tensor({out_c_})};
}

void Conv2d::init(Rng& rng) { init_normal(weight_.value, rng, 0.0, 0.02); }

Tensor Conv2d::forward(const Tensor& x, bool) {
  require(x.rank() == 4 && x.dim(1) == in_c_, ErrorCategory::shape,
          "conv2d: bad input shape " + shape_str(x.shape()));
  const Index n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const Index oh = (h + 2 * pad_ - k_) / stride_ + 1;
  const Index ow = (w + 2 * pad_ - k_) / stride_ + 1;
  require(oh >= 1 && ow >= 1, ErrorCategory::shape, "conv2d: output would be empty");
  in_shape_ = x.shape();

  gather_cols(x.data(), n, in_c_, h, w, k_, stride_, pad_, oh, ow, cols_);
  MatrixXd out = weight_.value.mat(out_c_, in_c_ * k_ * k_) * cols_;

  Tensor y({n, out_c_, oh, ow});
  const Index plane = oh * ow;
  for (Index i = 0; i < n; ++i) {
    Eigen::Map<RowMajorMatrix>(y.data() + i * out_c_ * plane, out_c_, plane) =
        out.middleCols(i * plane, plane);
  }
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < out_c_; ++c)
      Eigen::Map<Eigen::ArrayXd>(y.data() + (i * out_c_ + c) * plane, plane) +=
          bias_.value[c];
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const Index n = grad_out.dim(0), oh = grad_out.dim(2), ow = grad_out.dim(3);
  const Index plane = oh * ow;
  MatrixXd g(out_c_, n * plane);
  for (Index i = 0; i < n; ++i)
    g.middleCols(i * plane, plane) = Eigen::Map<const RowMajorMatrix>(
        grad_out.data() + i * out_c_ * plane, out_c_, plane);

  weight_.grad.mat(out_c_, in_c_ * k_ * k_) += g * cols_.transpose();
  Eigen::Map<Eigen::VectorXd>(bias_.grad.data(), out_c_) += g.rowwise().sum();

  MatrixXd gcols = weight_.value.mat(out_c_, in_c_ * k_ * k_).transpose() * g;
  Tensor gx(in_shape_);
  scatter_cols_add(gcols, n, in_c_, in_shape_[2], in_shape_[3], k_, stride_, pad_,
                   oh, ow, gx.data());
  return gx;
}

void Conv2d::save(BinaryWriter& w) const {
  w.str(kind());
  w.i64(in_c_);
  w.i64(out_c_);
  w.i64(k_);
  w.i64(stride_);
  w.i64(pad_);
  write_tensor(w, weight_.value);
  write_tensor(w, bias_.value);
}

// ------------------------------------------------------- ConvTranspose2d

ConvTranspose2d::ConvTranspose2d(Index in_c, Index out_c, Index kernel,
                                 Index stride, Index pad)
    : in_c_(in_c), out_c_(out_c), k_(kernel), stride_(stride), pad_(pad) {
  weight_ = {"weight", Tensor({in_c_, out_c_, k_, k_}), Tensor({in_c_, out_c_, k_, k_})};
  bias_ = {"bias", Tensor({out_c_}), Tensor({out_c_})};
}

void ConvTranspose2d::init(Rng& rng) { init_normal(weight_.value, rng, 0.0, 0.02); }

Tensor ConvTranspose2d::forward(const Tensor& x, bool) {
  require(x.rank() == 4 && x.dim(1) == in_c_, ErrorCategory::shape,
          "conv_transpose2d: bad input shape " + shape_str(x.shape()));
  const Index n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const Index oh = (h - 1) * stride_ - 2 * pad_ + k_;
  const Index ow = (w - 1) * stride_ - 2 * pad_ + k_;
  in_shape_ = x.shape();

  const Index plane = h * w;
  in_mat_.resize(in_c_, n * plane);
  for (Index i = 0; i < n; ++i)
    in_mat_.middleCols(i * plane, plane) = Eigen::Map<const RowMajorMatrix>(
        x.data() + i * in_c_ * plane, in_c_, plane);

  MatrixXd cols =
      weight_.value.mat(in_c_, out_c_ * k_ * k_).transpose() * in_mat_;

  Tensor y({n, out_c_, oh, ow});
  scatter_cols_add(cols, n, out_c_, oh, ow, k_, stride_, pad_, h, w, y.data());
  const Index out_plane = oh * ow;
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < out_c_; ++c)
      Eigen::Map<Eigen::ArrayXd>(y.data() + (i * out_c_ + c) * out_plane, out_plane) +=
          bias_.value[c];
  return y;
}

Tensor ConvTranspose2d::backward(const Tensor& grad_out) {
  const Index n = in_shape_[0], h = in_shape_[2], w = in_shape_[3];
  const Index oh = grad_out.dim(2), ow = grad_out.dim(3);
  const Index out_plane = oh * ow;

  MatrixXd gcols;
  gather_cols(grad_out.data(), n, out_c_, oh, ow, k_, stride_, pad_, h, w, gcols);

  weight_.grad.mat(in_c_, out_c_ * k_ * k_) += in_mat_ * gcols.transpose();
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < out_c_; ++c)
      bias_.grad[c] += Eigen::Map<const Eigen::ArrayXd>(
                           grad_out.data() + (i * out_c_ + c) * out_plane, out_plane)
                           .sum();

  MatrixXd gx_mat = weight_.value.mat(in_c_, out_c_ * k_ * k_) * gcols;
  Tensor gx(in_shape_);
  const Index plane = h * w;
  for (Index i = 0; i < n; ++i)
    Eigen::Map<RowMajorMatrix>(gx.data() + i * in_c_ * plane, in_c_, plane) =
        gx_mat.middleCols(i * plane, plane);
  return gx;
}

void ConvTranspose2d::save(BinaryWriter& w) const {
  w.str(kind());
  w.i64(in_c_);
  w.i64(out_c_);
  w.i64(k_);
  w.i64(stride_);
  w.i64(pad_);
  write_tensor(w, weight_.value);
  write_tensor(w, bias_.value);
}

// ------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(Index channels, double eps, double momentum)
    : c_(channels), eps_(eps), momentum_(momentum) {
  gamma_ = {"gamma", Tensor::full({c_}, 1.0), Tensor({c_})};
  beta_ = {"beta", Tensor({c_}), Tensor({c_})};
  running_mean_ = Tensor({c_});
  running_var_ = Tensor::full({c_}, 1.0);
}

void BatchNorm::init(Rng& rng) {
  init_normal(gamma_.value, rng, 1.0, 0.02);
  beta_.value.set_zero();
}

Tensor BatchNorm::forward(const Tensor& x, bool train) {
  require((x.rank() == 4 || x.rank() == 2) && x.dim(1) == c_, ErrorCategory::shape,
          "batch_norm: bad input shape " + shape_str(x.shape()));
  const Index n = x.dim(0);
  const Index hw = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
  const Index m = n * hw;
  in_shape_ = x.shape();
  train_mode_ = train;
  xhat_ = Tensor(x.shape());
  inv_std_.resize(c_);

  Tensor y(x.shape());
  for (Index c = 0; c < c_; ++c) {
    double mean, var;
    if (train) {
      double sum = 0.0, sq = 0.0;
      for (Index i = 0; i < n; ++i) {
        auto plane = Eigen::Map<const Eigen::ArrayXd>(
            x.data() + (i * c_ + c) * hw, hw);
        sum += plane.sum();
        sq += plane.square().sum();
      }
      mean = sum / m;
      var = sq / m - mean * mean;
      if (var < 0.0) var = 0.0;
      const double unbiased = m > 1 ? var * m / (m - 1) : var;
      running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean;
      running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * unbiased;
    } else {
      mean = running_mean_[c];
      var = running_var_[c];
    }
    const double istd = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = istd;
    const double g = gamma_.value[c], b = beta_.value[c];
    for (Index i = 0; i < n; ++i) {
      auto xin = Eigen::Map<const Eigen::ArrayXd>(x.data() + (i * c_ + c) * hw, hw);
      auto xh = Eigen::Map<Eigen::ArrayXd>(xhat_.data() + (i * c_ + c) * hw, hw);
      auto yo = Eigen::Map<Eigen::ArrayXd>(y.data() + (i * c_ + c) * hw, hw);
      xh = (xin - mean) * istd;
      yo = g * xh + b;
    }
  }
  return y;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
  const Index n = in_shape_[0];
  const Index hw = in_shape_.size() == 4 ? in_shape_[2] * in_shape_[3] : 1;
  const Index m = n * hw;
  Tensor gx(in_shape_);

  for (Index c = 0; c < c_; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (Index i = 0; i < n; ++i) {
      auto g = Eigen::Map<const Eigen::ArrayXd>(grad_out.data() + (i * c_ + c) * hw, hw);
      auto xh = Eigen::Map<const Eigen::ArrayXd>(xhat_.data() + (i * c_ + c) * hw, hw);
      sum_g += g.sum();
      sum_gx += (g * xh).sum();
    }
    gamma_.grad[c] += sum_gx;
    beta_.grad[c] += sum_g;

    const double gam = gamma_.value[c];
    const double istd = inv_std_[c];
    for (Index i = 0; i < n; ++i) {
      auto g = Eigen::Map<const Eigen::ArrayXd>(grad_out.data() + (i * c_ + c) * hw, hw);
      auto xh = Eigen::Map<const Eigen::ArrayXd>(xhat_.data() + (i * c_ + c) * hw, hw);
      auto out = Eigen::Map<Eigen::ArrayXd>(gx.data() + (i * c_ + c) * hw, hw);
      if (train_mode_) {
        out = (gam * istd / m) * (m * g - sum_g - xh * sum_gx);
      } else {
        out = gam * istd * g;
      }
    }
  }
  return gx;
}

void BatchNorm::save(BinaryWriter& w) const {
  w.str(kind());
  w.i64(c_);
  w.f64(eps_);
  w.f64(momentum_);
  write_tensor(w, gamma_.value);
  write_tensor(w, beta_.value);
  write_tensor(w, running_mean_);
  write_tensor(w, running_var_);
}

// ------------------------------------------------------------ activations

Tensor LeakyReLU::forward(const Tensor& x, bool) {
  cached_in_ = x;
  Tensor y(x.shape());
  y.array() = (x.array() > 0.0).select(x.array(), alpha_ * x.array());
  return y;
}

Tensor LeakyReLU::backward(const Tensor& grad_out) {
  Tensor gx(cached_in_.shape());
  gx.array() = (cached_in_.array() > 0.0)
                   .select(grad_out.array(), alpha_ * grad_out.array());
  return gx;
}

void LeakyReLU::save(BinaryWriter& w) const {
  w.str(kind());
  w.f64(alpha_);
}

Tensor ReLU::forward(const Tensor& x, bool) {
  cached_in_ = x;
  Tensor y(x.shape());
  y.array() = x.array().max(0.0);
  return y;
}

Tensor ReLU::backward(const Tensor& grad_out) {
  Tensor gx(cached_in_.shape());
  gx.array() = (cached_in_.array() > 0.0).select(grad_out.array(), 0.0);
  return gx;
}

void ReLU::save(BinaryWriter& w) const { w.str(kind()); }

Tensor Tanh::forward(const Tensor& x, bool) {
  Tensor y(x.shape());
  y.array() = x.array().tanh();
  cached_out_ = y;
  return y;
}

Tensor Tanh::backward(const Tensor& grad_out) {
  Tensor gx(cached_out_.shape());
  gx.array() = grad_out.array() * (1.0 - cached_out_.array().square());
  return gx;
}

void Tanh::save(BinaryWriter& w) const { w.str(kind()); }

Tensor Sigmoid::forward(const Tensor& x, bool) {
  Tensor y(x.shape());
  y.array() = 1.0 / (1.0 + (-x.array()).exp());
  cached_out_ = y;
  return y;
}

Tensor Sigmoid::backward(const Tensor& grad_out) {
  Tensor gx(cached_out_.shape());
  gx.array() =
      grad_out.array() * cached_out_.array() * (1.0 - cached_out_.array());
  return gx;
}

void Sigmoid::save(BinaryWriter& w) const { w.str(kind()); }

Tensor Reshape::forward(const Tensor& x, bool) {
  in_shape_ = x.shape();
  std::vector<Index> shape{x.dim(0)};
  shape.insert(shape.end(), tail_.begin(), tail_.end());
  return x.reshaped(std::move(shape));
}

Tensor Reshape::backward(const Tensor& grad_out) {
  return grad_out.reshaped(in_shape_);
}

void Reshape::save(BinaryWriter& w) const {
  w.str(kind());
  w.u64(tail_.size());
  for (Index d : tail_) w.i64(d);
}

// ---------------------------------------------------------------- loader

std::shared_ptr<Layer> load_layer(BinaryReader& r) {
  const std::string kind = r.str();
  if (kind == "dense") {
    const Index in = r.i64(), out = r.i64();
    auto l = std::make_shared<Dense>(in, out);
    l->weight_.value = read_tensor(r);
    l->bias_.value = read_tensor(r);
    return l;
  }
  if (kind == "conv2d") {
    const Index ic = r.i64(), oc = r.i64(), k = r.i64(), s = r.i64(), p = r.i64();
    auto l = std::make_shared<Conv2d>(ic, oc, k, s, p);
    l->weight_.value = read_tensor(r);
    l->bias_.value = read_tensor(r);
    return l;
  }
  if (kind == "conv_transpose2d") {
    const Index ic = r.i64(), oc = r.i64(), k = r.i64(), s = r.i64(), p = r.i64();
    auto l = std::make_shared<ConvTranspose2d>(ic, oc, k, s, p);
    l->weight_.value = read_tensor(r);
    l->bias_.value = read_tensor(r);
    return l;
  }
  if (kind == "batch_norm") {
    const Index c = r.i64();
    const double eps = r.f64(), mom = r.f64();
    auto l = std::make_shared<BatchNorm>(c, eps, mom);
    l->gamma_.value = read_tensor(r);
    l->beta_.value = read_tensor(r);
    l->running_mean_ = read_tensor(r);
    l->running_var_ = read_tensor(r);
    return l;
  }
  if (kind == "leaky_relu") return std::make_shared<LeakyReLU>(r.f64());
  if (kind == "relu") return std::make_shared<ReLU>();
  if (kind == "tanh") return std::make_shared<Tanh>();
  if (kind == "sigmoid") return std::make_shared<Sigmoid>();
  if (kind == "reshape") {
    const uint64_t rank = r.u64();
    std::vector<Index> tail(rank);
    for (auto& d : tail) d = r.i64();
    return std::make_shared<Reshape>(tail);
  }
  fail(ErrorCategory::version, "unknown layer kind: " + kind);
}

// ---------------------------------------------------------------- Network

Network& Network::add(std::shared_ptr<Layer> layer) {
  layers_.push_back(std::move(layer));
  return *this;
}

Tensor Network::forward(const Tensor& x, bool train) {
  Tensor h = x;
  for (auto& l : layers_) h = l->forward(h, train);
  return h;
}

Tensor Network::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

std::vector<Param*> Network::params() const {
  std::vector<Param*> out;
  for (const auto& l : layers_)
    for (Param* p : l->params()) out.push_back(p);
  return out;
}

void Network::zero_grad() {
  for (Param* p : params()) p->zero_grad();
}

uint64_t Network::params_checksum() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const Param* p : params())
    h = fnv1a64(p->value.data(), static_cast<size_t>(p->value.numel()) * sizeof(double), h);
  return h;
}

Index Network::param_count() const {
  Index n = 0;
  for (const Param* p : params()) n += p->value.numel();
  return n;
}

void Network::save(BinaryWriter& w) const {
  w.str(name_);
  w.u64(layers_.size());
  for (const auto& l : layers_) l->save(w);
}

Network Network::load(BinaryReader& r) {
  Network net(r.str());
  const uint64_t n = r.u64();
  for (uint64_t i = 0; i < n; ++i) net.add(load_layer(r));
  return net;
}

// ------------------------------------------------------------------ Adam

Adam::Adam(std::vector<Param*> params, AdamConfig cfg)
    : params_(dedup_params(params)), cfg_(cfg) {
  require(cfg_.lr > 0.0, ErrorCategory::config, "adam: lr must be positive");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Param* p : params_) {
    m_.emplace_back(Eigen::ArrayXd::Zero(p->value.numel()));
    v_.emplace_back(Eigen::ArrayXd::Zero(p->value.numel()));
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    auto& g = params_[i]->grad.array();
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.square();
    params_[i]->value.array() -=
        cfg_.lr * (m_[i] / c1) / ((v_[i] / c2).sqrt() + cfg_.eps);
  }
}

void Adam::zero_grad() {
  for (Param* p : params_) p->zero_grad();
}

bool Adam::grads_finite() const {
  for (const Param* p : params_)
    if (!p->grad.all_finite()) return false;
  return true;
}

void Adam::save(BinaryWriter& w) const {
  w.i64(t_);
  w.f64(cfg_.lr);
  w.f64(cfg_.beta1);
  w.f64(cfg_.beta2);
  w.f64(cfg_.eps);
  w.u64(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) {
    w.f64_span(m_[i].data(), m_[i].size());
    w.f64_span(v_[i].data(), v_[i].size());
  }
}

void Adam::load(BinaryReader& r) {
  t_ = r.i64();
  cfg_.lr = r.f64();
  cfg_.beta1 = r.f64();
  cfg_.beta2 = r.f64();
  cfg_.eps = r.f64();
  const uint64_t n = r.u64();
  require(n == params_.size(), ErrorCategory::integrity,
          "adam state does not match parameter list");
  for (size_t i = 0; i < n; ++i) {
    auto m = r.f64_vec();
    auto v = r.f64_vec();
    require(static_cast<Index>(m.size()) == params_[i]->value.numel(),
            ErrorCategory::integrity, "adam moment size mismatch");
    m_[i] = Eigen::Map<const Eigen::ArrayXd>(m.data(), m.size());
    v_[i] = Eigen::Map<const Eigen::ArrayXd>(v.data(), v.size());
  }
}

// ----------------------------------------------------------------- misc

VectorXd flatten_params(const std::vector<Param*>& params) {
  Index total = 0;
  for (const Param* p : params) total += p->value.numel();
  VectorXd flat(total);
  Index off = 0;
  for (const Param* p : params) {
    flat.segment(off, p->value.numel()) = p->value.array().matrix();
    off += p->value.numel();
  }
  return flat;
}

void unflatten_params(const std::vector<Param*>& params, const VectorXd& flat) {
  Index off = 0;
  for (Param* p : params) {
    p->value.array() = flat.segment(off, p->value.numel()).array();
    off += p->value.numel();
  }
}

std::vector<Param*> dedup_params(const std::vector<Param*>& params) {
  std::vector<Param*> out;
  std::unordered_set<const Param*> seen;
  for (Param* p : params)
    if (seen.insert(p).second) out.push_back(p);
  return out;
}

}  // namespace rgan::nn
