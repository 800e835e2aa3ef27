#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "rgan/error.hpp"

namespace rgan {

using Index = Eigen::Index;
using MatrixXd = Eigen::MatrixXd;
using VectorXd = Eigen::VectorXd;
using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense double tensor with row-major logical layout. Image batches are
// (N, C, H, W); feature batches are (N, D). The class stays deliberately
// thin: layers interpret shapes, Eigen does the math through maps.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<Index> shape);
  Tensor(std::initializer_list<Index> shape) : Tensor(std::vector<Index>(shape)) {}

  static Tensor zeros(std::vector<Index> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<Index> shape, double value);
  static Tensor from_values(std::vector<Index> shape, std::vector<double> values);

  const std::vector<Index>& shape() const { return shape_; }
  Index dim(size_t i) const { return shape_.at(i); }
  size_t rank() const { return shape_.size(); }
  Index numel() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  Eigen::ArrayXd& array() { return data_; }
  const Eigen::ArrayXd& array() const { return data_; }

  double& operator[](Index i) { return data_[i]; }
  double operator[](Index i) const { return data_[i]; }

  // Reinterprets the shape; element count must match.
  void reshape(std::vector<Index> shape);
  Tensor reshaped(std::vector<Index> shape) const;

  void set_zero() { data_.setZero(); }
  void fill(double v) { data_.setConstant(v); }

  // (rows, cols) row-major matrix view over the flat buffer.
  Eigen::Map<RowMajorMatrix> mat(Index rows, Index cols);
  Eigen::Map<const RowMajorMatrix> mat(Index rows, Index cols) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const { return data_.isFinite().all(); }

  uint64_t checksum() const;

 private:
  std::vector<Index> shape_;
  Eigen::ArrayXd data_;
};

Index shape_numel(const std::vector<Index>& shape);
std::string shape_str(const std::vector<Index>& shape);

}  // namespace rgan
