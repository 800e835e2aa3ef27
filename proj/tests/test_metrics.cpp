#include <doctest.h>

#include <Eigen/Cholesky>
#include <cmath>
#include <vector>

#include "rgan/data.hpp"
#include "rgan/metrics.hpp"
#include "test_util.hpp"

using namespace rgan;
using namespace test_util;

// ---------------------------------------------------------------------------
// Independent straight-from-the-formula MS-SSIM reference. Direct 2D window
// loops, no separable filtering, no code shared with the library path. Only
// the published constants and this project's scale-reduction rule coincide.
namespace reference {

using Grid = std::vector<std::vector<double>>;

Grid luminance(const Tensor& img) {
  const Index h = img.dim(1), w = img.dim(2);
  Grid g(h, std::vector<double>(w));
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      const double r = (img[(0 * h + y) * w + x] + 1.0) / 2.0;
      const double gg = (img[(1 * h + y) * w + x] + 1.0) / 2.0;
      const double b = (img[(2 * h + y) * w + x] + 1.0) / 2.0;
      g[y][x] = 0.299 * r + 0.587 * gg + 0.114 * b;
    }
  return g;
}

Grid half(const Grid& g) {
  const size_t h = g.size() / 2, w = g[0].size() / 2;
  Grid out(h, std::vector<double>(w));
  for (size_t y = 0; y < h; ++y)
    for (size_t x = 0; x < w; ++x)
      out[y][x] =
          (g[2 * y][2 * x] + g[2 * y][2 * x + 1] + g[2 * y + 1][2 * x] +
           g[2 * y + 1][2 * x + 1]) /
          4.0;
  return out;
}

double ms_ssim_ref(const Tensor& ia, const Tensor& ib, Index scales) {
  static const double weights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  const double c1 = 1e-4, c2 = 9e-4;

  Grid a = luminance(ia), b = luminance(ib);
  const Index side = static_cast<Index>(std::min(a.size(), a[0].size()));
  Index usable = 1;
  while (usable < scales && (side >> usable) >= 8) ++usable;
  if (usable > 5) usable = 5;
  double wsum = 0;
  for (Index s = 0; s < usable; ++s) wsum += weights[s];

  double result = 1.0;
  for (Index s = 0; s < usable; ++s) {
    const Index h = static_cast<Index>(a.size()), w = static_cast<Index>(a[0].size());
    const Index win = std::min<Index>(11, std::min(h, w));
    // 2D gaussian window, sigma 1.5
    std::vector<std::vector<double>> kern(win, std::vector<double>(win));
    double ksum = 0;
    for (Index i = 0; i < win; ++i)
      for (Index j = 0; j < win; ++j) {
        const double dy = i - (win - 1) / 2.0, dx = j - (win - 1) / 2.0;
        kern[i][j] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
        ksum += kern[i][j];
      }
    for (auto& row : kern)
      for (double& v : row) v /= ksum;

    double cs_sum = 0, l_sum = 0;
    Index count = 0;
    for (Index y = 0; y + win <= h; ++y)
      for (Index x = 0; x + win <= w; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (Index i = 0; i < win; ++i)
          for (Index j = 0; j < win; ++j) {
            const double va = a[y + i][x + j], vb = b[y + i][x + j];
            const double k = kern[i][j];
            ma += k * va;
            mb += k * vb;
            saa += k * va * va;
            sbb += k * vb * vb;
            sab += k * va * vb;
          }
        const double var_a = saa - ma * ma;
        const double var_b = sbb - mb * mb;
        const double cov = sab - ma * mb;
        cs_sum += (2 * cov + c2) / (var_a + var_b + c2);
        l_sum += (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        ++count;
      }
    const double cs = cs_sum / count;
    const double w_s = weights[s] / wsum;
    auto spow = [](double v, double e) {
      return v == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(v), e), v);
    };
    result *= spow(cs, w_s);
    if (s + 1 == usable) result *= spow(l_sum / count, w_s);
    if (s + 1 < usable) {
      a = half(a);
      b = half(b);
    }
  }
  return result;
}

}  // namespace reference

TEST_CASE("ms_ssim identity, symmetry, bounds") {
  Tensor a = random_tensor({3, 32, 32}, 1);
  CHECK(metrics::ms_ssim(a, a) == doctest::Approx(1.0).epsilon(1e-6));

  Tensor b = random_tensor({3, 32, 32}, 2);
  const double ab = metrics::ms_ssim(a, b);
  const double ba = metrics::ms_ssim(b, a);
  CHECK(std::abs(ab - ba) < 1e-10);
  CHECK(ab > -1.0);
  CHECK(ab <= 1.0);

  Tensor c = random_tensor({3, 16, 32}, 3);
  CHECK_THROWS_AS(metrics::ms_ssim(a, c), Error);
  Tensor tiny_a = random_tensor({3, 4, 4}, 4);
  Tensor tiny_b = random_tensor({3, 4, 4}, 5);
  CHECK_THROWS_AS(metrics::ms_ssim(tiny_a, tiny_b), Error);
}

TEST_CASE("ms_ssim auto scale reduction: 32 -> 3 scales, 64 -> 4") {
  Tensor a32 = random_tensor({3, 32, 32}, 6);
  Tensor b32 = random_tensor({3, 32, 32}, 7);
  Index used = 0;
  metrics::ms_ssim(a32, b32, 5, &used);
  CHECK(used == 3);

  Tensor a64 = random_tensor({3, 64, 64}, 8);
  Tensor b64 = random_tensor({3, 64, 64}, 9);
  metrics::ms_ssim(a64, b64, 5, &used);
  CHECK(used == 4);
}

TEST_CASE("ms_ssim agrees with the independent reference implementation") {
  // structured + random pairs at 64x64, as well as 32x32
  for (int trial = 0; trial < 100; ++trial) {
    const Index side = trial % 2 == 0 ? 64 : 32;
    Tensor a, b;
    if (trial % 3 == 0) {
      // correlated pair: same base with perturbation, more realistic values
      a = random_tensor({3, side, side}, 1000 + trial);
      b = a;
      Rng rng(2000 + trial);
      for (Index i = 0; i < b.numel(); ++i)
        b[i] = std::clamp(b[i] + rng.uniform(-0.2, 0.2), -1.0, 1.0);
    } else {
      a = random_tensor({3, side, side}, 3000 + trial);
      b = random_tensor({3, side, side}, 4000 + trial);
    }
    const double ours = metrics::ms_ssim(a, b);
    const double ref = reference::ms_ssim_ref(a, b, 5);
    CHECK(std::abs(ours - ref) < 1e-6);
  }
}

TEST_CASE("mean pairwise ms_ssim: identical set, two-element set, determinism") {
  // identical images -> exactly 1
  Tensor one = random_tensor({3, 32, 32}, 10);
  Tensor stack({4, 3, 32, 32});
  for (int i = 0; i < 4; ++i)
    std::copy(one.data(), one.data() + one.numel(), stack.data() + i * one.numel());
  auto rep = metrics::mean_pairwise_ms_ssim(stack, 20, 7, 3);
  CHECK(rep.mean == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.n_repeats == 3);

  // two-element set: every pair is (a,b)
  Tensor two({2, 3, 32, 32});
  Tensor a = random_tensor({3, 32, 32}, 11), b = random_tensor({3, 32, 32}, 12);
  std::copy(a.data(), a.data() + a.numel(), two.data());
  std::copy(b.data(), b.data() + b.numel(), two.data() + a.numel());
  auto rep2 = metrics::mean_pairwise_ms_ssim(two, 17, 3, 2);
  CHECK(rep2.mean == doctest::Approx(metrics::ms_ssim(a, b)).epsilon(1e-12));
  CHECK(rep2.stddev == 0.0);

  // determinism given seed
  auto r1 = metrics::mean_pairwise_ms_ssim(stack, 10, 42, 2);
  auto r2 = metrics::mean_pairwise_ms_ssim(stack, 10, 42, 2);
  CHECK(r1.values == r2.values);

  Tensor single({1, 3, 32, 32});
  CHECK_THROWS_AS(metrics::mean_pairwise_ms_ssim(single, 5, 1), Error);
}

namespace {

features::FeatureStats stats_1d(double mean, double var) {
  features::FeatureStats s;
  s.mean = VectorXd::Constant(1, mean);
  s.covariance = MatrixXd::Constant(1, 1, var);
  s.n = 1000;
  return s;
}

}  // namespace

TEST_CASE("fid closed-form 1D cases") {
  CHECK(metrics::fid(stats_1d(0, 1), stats_1d(0, 1)) == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(metrics::fid(stats_1d(0, 1), stats_1d(1, 1)) == doctest::Approx(1.0).epsilon(1e-8));
  // N(0,1) vs N(0,4): (sigma_a - sigma_b)^2 = (1-2)^2 = 1
  CHECK(metrics::fid(stats_1d(0, 1), stats_1d(0, 4)) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("fid symmetry / non-negativity / identity on random PSD pairs") {
  Rng rng(13);
  for (int trial = 0; trial < 1000; ++trial) {
    const Index d = 2 + static_cast<Index>(rng.uniform_int(4));
    auto random_stats = [&] {
      features::FeatureStats s;
      s.mean = VectorXd(d);
      for (Index i = 0; i < d; ++i) s.mean[i] = rng.uniform(-2, 2);
      MatrixXd a(d, d);
      for (Index i = 0; i < d * d; ++i) a.data()[i] = rng.uniform(-1, 1);
      s.covariance = a.transpose() * a + 1e-9 * MatrixXd::Identity(d, d);
      s.n = 100;
      return s;
    };
    auto sa = random_stats();
    auto sb = random_stats();
    const double dab = metrics::fid(sa, sb);
    const double dba = metrics::fid(sb, sa);
    CHECK(dab >= 0.0);
    CHECK(std::abs(dab - dba) < 1e-8 * std::max(1.0, dab));
    CHECK(metrics::fid(sa, sa) < 1e-8);
  }
}

TEST_CASE("fid 1D matrix path equals the scalar closed form to 1e-10") {
  Rng rng(14);
  for (int trial = 0; trial < 1000; ++trial) {
    const double ma = rng.uniform(-3, 3), mb = rng.uniform(-3, 3);
    const double va = rng.uniform(0.01, 4), vb = rng.uniform(0.01, 4);
    const double closed =
        (ma - mb) * (ma - mb) + std::pow(std::sqrt(va) - std::sqrt(vb), 2);
    const double matrix_path = metrics::fid(stats_1d(ma, va), stats_1d(mb, vb));
    CHECK(std::abs(matrix_path - closed) <= 1e-10 * std::max(1.0, closed));
  }
}

TEST_CASE("feature_fid identity on equal sample sets and Monte-Carlo convergence") {
  metrics::IdentityExtractor identity;

  // equal sets -> 0 within 1e-8
  Tensor samples = random_tensor({64, 2, 1, 1}, 15);
  auto rep = metrics::feature_fid(identity, samples, samples);
  CHECK(rep.values[0] == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(rep.extractor_id == "identity");

  // sampled 2D gaussians with known parameters, n = 100k per side
  VectorXd mu_a(2), mu_b(2);
  mu_a << 0.0, 0.0;
  mu_b << 1.0, 0.5;
  MatrixXd cov_a(2, 2), cov_b(2, 2);
  cov_a << 1.0, 0.2, 0.2, 0.8;
  cov_b << 2.0, 0.3, 0.3, 1.5;
  const Eigen::LLT<MatrixXd> la(cov_a), lb(cov_b);

  const Index n = 100000;
  Tensor sa({n, 2, 1, 1}), sb({n, 2, 1, 1});
  Rng rng(16);
  for (Index i = 0; i < n; ++i) {
    VectorXd e(2);
    e << rng.normal(), rng.normal();
    VectorXd va = mu_a + la.matrixL() * e;
    VectorXd f(2);
    f << rng.normal(), rng.normal();
    VectorXd vb = mu_b + lb.matrixL() * f;
    sa[2 * i] = va[0];
    sa[2 * i + 1] = va[1];
    sb[2 * i] = vb[0];
    sb[2 * i + 1] = vb[1];
  }
  const double estimated = metrics::feature_fid(identity, sa, sb).values[0];

  features::FeatureStats ta, tb;
  ta.mean = mu_a;
  ta.covariance = cov_a;
  ta.n = n;
  tb.mean = mu_b;
  tb.covariance = cov_b;
  tb.n = n;
  const double analytic = metrics::fid(ta, tb);
  CHECK(std::abs(estimated - analytic) / analytic < 0.05);
}

TEST_CASE("covariance distance") {
  features::FeatureStats x, y;
  x.mean = y.mean = VectorXd::Zero(2);
  x.covariance = MatrixXd::Identity(2, 2);
  y.covariance = MatrixXd::Identity(2, 2);
  x.n = y.n = 10;
  CHECK(metrics::covariance_distance(x, y) == 0.0);

  y.covariance(1, 1) = 4.0;  // diag(1,4)
  CHECK(metrics::covariance_distance(x, y) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(metrics::covariance_distance(x, y, metrics::CovNorm::l1) ==
        doctest::Approx(3.0).epsilon(1e-12));
  CHECK(metrics::covariance_distance(x, y) == metrics::covariance_distance(y, x));

  features::FeatureStats z;
  z.mean = VectorXd::Zero(3);
  z.covariance = MatrixXd::Identity(3, 3);
  z.n = 10;
  CHECK_THROWS_AS(metrics::covariance_distance(x, z), Error);
}

TEST_CASE("attribute extraction flags blank images invalid") {
  Tensor blank = Tensor::full({3, 32, 32}, -0.7);  // colorless
  auto e = metrics::extract_attributes(blank, data::ShapeClass::circle);
  CHECK_FALSE(e.valid);
}

TEST_CASE("attribute correlation: identical attributes give correlation 1") {
  Rng rng(17);
  const Index n = 16;
  Tensor xs({n, 3, 32, 32}), ys({n, 3, 32, 32});
  for (Index i = 0; i < n; ++i) {
    data::AttributeRecord a;
    a.hue = rng.uniform();
    a.center_x = rng.uniform(0.4, 0.6);
    a.center_y = rng.uniform(0.4, 0.6);
    a.size = rng.uniform(0.35, 0.5);
    a.shape_class = data::ShapeClass::circle;
    Tensor img = data::render_shape(a, 32);
    std::copy(img.data(), img.data() + img.numel(), xs.data() + i * img.numel());
    std::copy(img.data(), img.data() + img.numel(), ys.data() + i * img.numel());
  }
  auto corr = metrics::attribute_correlation(xs, ys, data::ShapeClass::circle,
                                             data::ShapeClass::circle);
  CHECK(corr.hue.mean == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(corr.center_x.mean == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(corr.center_y.mean == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(corr.size.mean == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(corr.n_dropped == 0);
}

TEST_CASE("attribute correlation: independent attributes give near zero") {
  Rng rng(18);
  const Index n = 1000;
  Tensor xs({n, 3, 32, 32}), ys({n, 3, 32, 32});
  auto render_random = [&](Tensor& stack, Index i, data::ShapeClass fam) {
    data::AttributeRecord a;
    a.hue = rng.uniform();
    a.center_x = rng.uniform(0.35, 0.65);
    a.center_y = rng.uniform(0.35, 0.65);
    a.size = rng.uniform(0.3, 0.55);
    a.shape_class = fam;
    Tensor img = data::render_shape(a, 32);
    std::copy(img.data(), img.data() + img.numel(), stack.data() + i * img.numel());
  };
  for (Index i = 0; i < n; ++i) {
    render_random(xs, i, data::ShapeClass::circle);
    render_random(ys, i, data::ShapeClass::square);
  }
  auto corr = metrics::attribute_correlation(xs, ys, data::ShapeClass::circle,
                                             data::ShapeClass::square);
  CHECK(std::abs(corr.hue.mean) < 0.15);
  CHECK(std::abs(corr.center_x.mean) < 0.15);
  CHECK(std::abs(corr.center_y.mean) < 0.15);
  CHECK(std::abs(corr.size.mean) < 0.15);
}

TEST_CASE("correlation attenuation under additive noise matches theory") {
  // unit-variance attribute, noise sigma=0.1: r = 1/sqrt(1 + 0.01)
  Rng rng(19);
  const int n = 20000;
  std::vector<double> a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a[i] = rng.normal();
    b[i] = a[i] + rng.normal(0.0, 0.1);
  }
  const double expect = 1.0 / std::sqrt(1.01);
  CHECK(metrics::pearson_correlation(a, b) == doctest::Approx(expect).epsilon(0.005));
}

TEST_CASE("circular correlation handles hue wraparound") {
  // hues straddling the 0/1 wrap: circular correlation must still be 1
  std::vector<double> a, b;
  Rng rng(20);
  for (int i = 0; i < 200; ++i) {
    double h = 0.95 + 0.1 * rng.uniform();  // in [0.95, 1.05) mod 1
    if (h >= 1.0) h -= 1.0;
    a.push_back(h);
    b.push_back(h);
  }
  CHECK(metrics::circular_correlation(a, b) == doctest::Approx(1.0).epsilon(1e-9));

  // permuted pairing destroys the correlation
  std::vector<double> shuffled = b;
  Rng r2(21);
  r2.shuffle(shuffled);
  CHECK(std::abs(metrics::circular_correlation(a, shuffled)) < 0.2);
}

TEST_CASE("attribute correlation drops degenerate pairs and errors past 50%") {
  Rng rng(22);
  const Index n = 12;
  Tensor xs({n, 3, 32, 32}), ys({n, 3, 32, 32});
  Index blank_count = 0;
  for (Index i = 0; i < n; ++i) {
    data::AttributeRecord a;
    a.hue = rng.uniform();
    a.center_x = 0.5;
    a.center_y = 0.5;
    a.size = 0.4;
    a.shape_class = data::ShapeClass::circle;
    Tensor img = data::render_shape(a, 32);
    std::copy(img.data(), img.data() + img.numel(), xs.data() + i * img.numel());
    if (i < 3) {
      Tensor blank = Tensor::full({3, 32, 32}, 0.0);
      std::copy(blank.data(), blank.data() + blank.numel(),
                ys.data() + i * blank.numel());
      ++blank_count;
    } else {
      std::copy(img.data(), img.data() + img.numel(), ys.data() + i * img.numel());
    }
  }
  auto corr = metrics::attribute_correlation(xs, ys, data::ShapeClass::circle,
                                             data::ShapeClass::circle);
  CHECK(corr.n_dropped == blank_count);
  CHECK(corr.n_pairs_used == n - blank_count);

  // > 50% dropped: blank out 7 of 12
  for (Index i = 0; i < 7; ++i) {
    Tensor blank = Tensor::full({3, 32, 32}, 0.0);
    std::copy(blank.data(), blank.data() + blank.numel(), ys.data() + i * blank.numel());
  }
  CHECK_THROWS_AS(metrics::attribute_correlation(xs, ys, data::ShapeClass::circle,
                                                 data::ShapeClass::circle),
                  Error);

  Tensor few({4, 3, 32, 32});
  CHECK_THROWS_AS(
      metrics::attribute_correlation(few, few, data::ShapeClass::circle,
                                     data::ShapeClass::circle),
      Error);
}
