#include "rgan/tensor.hpp"

#include <sstream>

#include "rgan/serialize.hpp"

namespace rgan {

Index shape_numel(const std::vector<Index>& shape) {
  Index n = 1;
  for (Index d : shape) {
    require(d >= 0, ErrorCategory::shape, "negative dimension");
    n *= d;
  }
  return n;
}

std::string shape_str(const std::vector<Index>& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ")";
  return os.str();
}

Tensor::Tensor(std::vector<Index> shape) : shape_(std::move(shape)) {
  data_ = Eigen::ArrayXd::Zero(shape_numel(shape_));
}

Tensor Tensor::full(std::vector<Index> shape, double value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::from_values(std::vector<Index> shape, std::vector<double> values) {
  Tensor t;
  t.shape_ = std::move(shape);
  require(shape_numel(t.shape_) == static_cast<Index>(values.size()),
          ErrorCategory::shape, "value count does not match shape");
  t.data_ = Eigen::Map<const Eigen::ArrayXd>(values.data(), values.size());
  return t;
}

void Tensor::reshape(std::vector<Index> shape) {
  require(shape_numel(shape) == numel(), ErrorCategory::shape,
          "reshape " + shape_str(shape_) + " -> " + shape_str(shape) + " changes numel");
  shape_ = std::move(shape);
}

Tensor Tensor::reshaped(std::vector<Index> shape) const {
  Tensor t = *this;
  t.reshape(std::move(shape));
  return t;
}

Eigen::Map<RowMajorMatrix> Tensor::mat(Index rows, Index cols) {
  require(rows * cols == numel(), ErrorCategory::shape, "matrix view size mismatch");
  return Eigen::Map<RowMajorMatrix>(data_.data(), rows, cols);
}

Eigen::Map<const RowMajorMatrix> Tensor::mat(Index rows, Index cols) const {
  require(rows * cols == numel(), ErrorCategory::shape, "matrix view size mismatch");
  return Eigen::Map<const RowMajorMatrix>(data_.data(), rows, cols);
}

uint64_t Tensor::checksum() const {
  uint64_t h = fnv1a64(shape_.data(), shape_.size() * sizeof(Index));
  return fnv1a64(data_.data(), static_cast<size_t>(numel()) * sizeof(double), h);
}

}  // namespace rgan
