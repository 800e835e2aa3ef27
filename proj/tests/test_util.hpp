#pragma once

#include <cmath>
#include <functional>

#include "rgan/nn.hpp"
#include "rgan/tensor.hpp"

namespace test_util {

using rgan::Index;
using rgan::Tensor;

// Central finite difference of a scalar functional at selected coordinates
// of `point`; compares against `analytic` with a relative tolerance.
struct GradCheckResult {
  double max_rel_err = 0.0;
  Index worst_index = -1;
};

inline GradCheckResult grad_check(std::function<double(const Tensor&)> f,
                                  const Tensor& point, const Tensor& analytic,
                                  const std::vector<Index>& coords,
                                  double h = 1e-5) {
  GradCheckResult res;
  Tensor p = point;
  for (Index idx : coords) {
    const double orig = p[idx];
    p[idx] = orig + h;
    const double fp = f(p);
    p[idx] = orig - h;
    const double fm = f(p);
    p[idx] = orig;
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(analytic[idx]), 1e-8});
    const double rel = std::abs(fd - analytic[idx]) / denom;
    if (rel > res.max_rel_err) {
      res.max_rel_err = rel;
      res.worst_index = idx;
    }
  }
  return res;
}

// Deterministic coordinate subsample.
inline std::vector<Index> pick_coords(Index numel, Index count, uint64_t seed) {
  rgan::Rng rng(seed);
  std::vector<Index> coords;
  for (Index i = 0; i < count; ++i)
    coords.push_back(static_cast<Index>(rng.uniform_int(numel)));
  return coords;
}

// Scalar functional: fixed random linear readout of a network's output.
// Gradcheck through arbitrary stacks reduces to this.
class LinearReadout {
 public:
  LinearReadout(Index out_numel, uint64_t seed) : weights_(out_numel) {
    rgan::Rng rng(seed);
    for (Index i = 0; i < out_numel; ++i) weights_[i] = rng.uniform(-1.0, 1.0);
  }

  double value(const Tensor& out) const {
    double s = 0.0;
    for (Index i = 0; i < out.numel(); ++i) s += weights_[i] * out[i];
    return s;
  }

  Tensor grad(const std::vector<Index>& out_shape) const {
    Tensor g(out_shape);
    for (Index i = 0; i < g.numel(); ++i) g[i] = weights_[i];
    return g;
  }

 private:
  std::vector<double> weights_;
};

inline Tensor random_tensor(std::vector<Index> shape, uint64_t seed,
                            double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  rgan::Rng rng(seed);
  for (Index i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

}  // namespace test_util
