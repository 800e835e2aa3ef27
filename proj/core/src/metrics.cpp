#include "rgan/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "rgan/rng.hpp"
#include "rgan/serialize.hpp"

namespace rgan::metrics {

MetricReport make_report(std::string name, std::vector<double> values) {
  require(!values.empty(), ErrorCategory::statistics, "report needs >= 1 value");
  MetricReport r;
  r.name = std::move(name);
  r.values = std::move(values);
  r.n_repeats = static_cast<Index>(r.values.size());
  double sum = 0.0;
  for (double v : r.values) sum += v;
  r.mean = sum / r.n_repeats;
  if (r.n_repeats > 1) {
    double sq = 0.0;
    for (double v : r.values) sq += (v - r.mean) * (v - r.mean);
    r.stddev = std::sqrt(sq / (r.n_repeats - 1));
  }
  return r;
}

// --- MS-SSIM ------------------------------------------------------------

namespace {

constexpr double kMsSsimWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
constexpr Index kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (K1 L)^2 on [0,1] luminance
constexpr double kC2 = 0.03 * 0.03;
constexpr Index kMinSide = 8;  // coarsest scale must keep this many pixels

MatrixXd to_luminance(const Tensor& img) {
  require(img.rank() == 3, ErrorCategory::shape, "expected (C,H,W)");
  const Index c = img.dim(0), h = img.dim(1), w = img.dim(2);
  require(c == 1 || c == 3, ErrorCategory::shape, "expected 1 or 3 channels");
  MatrixXd lum(h, w);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      double v;
      if (c == 3) {
        const double r = (img[(0 * h + y) * w + x] + 1.0) / 2.0;
        const double g = (img[(1 * h + y) * w + x] + 1.0) / 2.0;
        const double b = (img[(2 * h + y) * w + x] + 1.0) / 2.0;
        v = 0.299 * r + 0.587 * g + 0.114 * b;
      } else {
        v = (img[y * w + x] + 1.0) / 2.0;
      }
      lum(y, x) = v;
    }
  return lum;
}

VectorXd gaussian_kernel(Index win) {
  VectorXd k(win);
  const double center = (win - 1) / 2.0;
  for (Index i = 0; i < win; ++i)
    k[i] = std::exp(-(i - center) * (i - center) / (2.0 * kSigma * kSigma));
  k /= k.sum();
  return k;
}

// Separable valid-mode filter.
MatrixXd filter_valid(const MatrixXd& img, const VectorXd& kernel) {
  const Index win = kernel.size();
  const Index h = img.rows(), w = img.cols();
  MatrixXd tmp(h, w - win + 1);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x + win <= w; ++x)
      tmp(y, x) = img.row(y).segment(x, win).dot(kernel);
  MatrixXd out(h - win + 1, w - win + 1);
  for (Index x = 0; x < tmp.cols(); ++x)
    for (Index y = 0; y + win <= h; ++y)
      out(y, x) = tmp.col(x).segment(y, win).dot(kernel);
  return out;
}

MatrixXd downsample2(const MatrixXd& img) {
  const Index h = img.rows() / 2, w = img.cols() / 2;
  MatrixXd out(h, w);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x)
      out(y, x) = (img(2 * y, 2 * x) + img(2 * y, 2 * x + 1) + img(2 * y + 1, 2 * x) +
                   img(2 * y + 1, 2 * x + 1)) /
                  4.0;
  return out;
}

void ssim_scale(const MatrixXd& a, const MatrixXd& b, double* cs_out, double* l_out) {
  const Index win = std::min<Index>(kWindow, std::min(a.rows(), a.cols()));
  const VectorXd kernel = gaussian_kernel(win);
  const MatrixXd mu_a = filter_valid(a, kernel);
  const MatrixXd mu_b = filter_valid(b, kernel);
  const MatrixXd var_a = filter_valid(a.cwiseProduct(a), kernel) - mu_a.cwiseProduct(mu_a);
  const MatrixXd var_b = filter_valid(b.cwiseProduct(b), kernel) - mu_b.cwiseProduct(mu_b);
  const MatrixXd cov = filter_valid(a.cwiseProduct(b), kernel) - mu_a.cwiseProduct(mu_b);

  const MatrixXd cs_map =
      (2.0 * cov.array() + kC2) / (var_a.array() + var_b.array() + kC2);
  *cs_out = cs_map.mean();
  if (l_out) {
    const MatrixXd l_map = (2.0 * mu_a.array() * mu_b.array() + kC1) /
                           (mu_a.array().square() + mu_b.array().square() + kC1);
    *l_out = l_map.mean();
  }
}

double sign_pow(double v, double w) {
  if (v == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(v), w), v);
}

}  // namespace

double ms_ssim(const Tensor& img_a, const Tensor& img_b, Index scales,
               Index* scales_used) {
  require(img_a.same_shape(img_b), ErrorCategory::shape,
          "ms_ssim: image shapes differ");
  require(scales >= 1, ErrorCategory::config, "scales must be >= 1");
  MatrixXd a = to_luminance(img_a);
  MatrixXd b = to_luminance(img_b);
  const Index side = std::min(a.rows(), a.cols());
  require(side >= kMinSide, ErrorCategory::shape,
          "image too small for one scale (side " + std::to_string(side) + " < " +
              std::to_string(kMinSide) + ")");

  Index usable = 1;
  while (usable < scales && (side >> usable) >= kMinSide) ++usable;
  usable = std::min<Index>(usable, 5);
  if (scales_used) *scales_used = usable;

  double weight_sum = 0.0;
  for (Index s = 0; s < usable; ++s) weight_sum += kMsSsimWeights[s];

  double result = 1.0;
  for (Index s = 0; s < usable; ++s) {
    const double w = kMsSsimWeights[s] / weight_sum;
    const bool last = s + 1 == usable;
    double cs = 0.0, l = 0.0;
    ssim_scale(a, b, &cs, last ? &l : nullptr);
    result *= sign_pow(cs, w);
    if (last) result *= sign_pow(l, w);
    if (!last) {
      a = downsample2(a);
      b = downsample2(b);
    }
  }
  return result;
}

MetricReport mean_pairwise_ms_ssim(const Tensor& samples, Index n_pairs,
                                   uint64_t seed, Index n_repeats, Index scales) {
  require(samples.rank() == 4, ErrorCategory::shape, "expected (N,C,H,W)");
  const Index n = samples.dim(0);
  require(n >= 2, ErrorCategory::statistics, "need >= 2 samples for pairwise MS-SSIM");
  require(n_pairs >= 1 && n_repeats >= 1, ErrorCategory::config,
          "n_pairs and n_repeats must be >= 1");

  const Index c = samples.dim(1), h = samples.dim(2), w = samples.dim(3);
  const Index numel = c * h * w;
  auto sample_tensor = [&](Index i) {
    Tensor t({c, h, w});
    std::copy(samples.data() + i * numel, samples.data() + (i + 1) * numel, t.data());
    return t;
  };

  Index used_scales = 0;
  std::vector<double> repeat_means;
  Rng root(seed);
  for (Index rep = 0; rep < n_repeats; ++rep) {
    Rng rng = root.split(static_cast<uint64_t>(rep) + 1);
    double sum = 0.0;
    for (Index p = 0; p < n_pairs; ++p) {
      const Index i = static_cast<Index>(rng.uniform_int(n));
      Index j = static_cast<Index>(rng.uniform_int(n - 1));
      if (j >= i) ++j;
      sum += ms_ssim(sample_tensor(i), sample_tensor(j), scales, &used_scales);
    }
    repeat_means.push_back(sum / n_pairs);
  }

  MetricReport report = make_report("mean_pairwise_ms_ssim", std::move(repeat_means));
  report.sample_counts = {n, n_pairs};
  std::ostringstream notes;
  notes << "scales_used=" << used_scales << " window=" << kWindow;
  report.notes = notes.str();
  return report;
}

// --- Frechet distance ----------------------------------------------------

namespace {

// Symmetric PSD square root via eigendecomposition, negatives clamped.
MatrixXd psd_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  require(es.info() == Eigen::Success, ErrorCategory::numeric,
          "eigendecomposition failed");
  VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double fid(const features::FeatureStats& stats_a, const features::FeatureStats& stats_b) {
  require(stats_a.dim() == stats_b.dim(), ErrorCategory::shape,
          "FID: dimension mismatch");
  const MatrixXd sqrt_a = psd_sqrt(stats_a.covariance);
  MatrixXd inner = sqrt_a * stats_b.covariance * sqrt_a;
  inner = ((inner + inner.transpose()) / 2.0).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(inner);
  require(es.info() == Eigen::Success, ErrorCategory::numeric,
          "eigendecomposition failed");
  const double trace_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double mean_term = (stats_a.mean - stats_b.mean).squaredNorm();
  const double d = mean_term + stats_a.covariance.trace() + stats_b.covariance.trace() -
                   2.0 * trace_sqrt;
  require(std::isfinite(d), ErrorCategory::numeric, "FID is non-finite");
  require(d >= -1e-6, ErrorCategory::numeric,
          "FID below tolerance: " + std::to_string(d));
  return std::max(d, 0.0);
}

MatrixXd IdentityExtractor::extract(const Tensor& samples) {
  require(samples.rank() >= 2, ErrorCategory::shape, "expected (N, ...)");
  const Index n = samples.dim(0);
  const Index d = samples.numel() / n;
  return samples.mat(n, d);
}

EncoderExtractor::EncoderExtractor(const features::EncoderModel& encoder) {
  BinaryWriter w;
  encoder.net.save(w);
  BinaryReader r(w.bytes());
  encoder_.net = nn::Network::load(r);
  encoder_.feature_dim = encoder.feature_dim;
  encoder_.image_size = encoder.image_size;
  encoder_.channels = encoder.channels;
  encoder_.frozen = encoder.frozen;
}

MatrixXd EncoderExtractor::extract(const Tensor& samples) {
  require(samples.rank() == 4, ErrorCategory::shape, "expected (N,C,H,W)");
  const Index n = samples.dim(0);
  MatrixXd feats(n, encoder_.feature_dim);
  const Index chunk = 256;
  const Index numel = samples.numel() / n;
  for (Index start = 0; start < n; start += chunk) {
    const Index b = std::min(chunk, n - start);
    Tensor block({b, samples.dim(1), samples.dim(2), samples.dim(3)});
    std::copy(samples.data() + start * numel, samples.data() + (start + b) * numel,
              block.data());
    feats.middleRows(start, b) = features::encode(encoder_, block);
  }
  return feats;
}

std::string EncoderExtractor::id() const {
  std::ostringstream os;
  os << "ae_encoder:" << std::hex << encoder_.params_checksum();
  return os.str();
}

MetricReport feature_fid(FeatureExtractor& extractor, const Tensor& samples_a,
                         const Tensor& samples_b) {
  const MatrixXd fa = extractor.extract(samples_a);
  const MatrixXd fb = extractor.extract(samples_b);
  const auto stats_a = features::compute_feature_stats(fa);
  const auto stats_b = features::compute_feature_stats(fb);
  MetricReport report = make_report("feature_fid", {fid(stats_a, stats_b)});
  report.sample_counts = {fa.rows(), fb.rows()};
  report.extractor_id = extractor.id();
  return report;
}

// --- covariance distance -------------------------------------------------

double covariance_distance(const features::FeatureStats& stats_x,
                           const features::FeatureStats& stats_y, CovNorm norm) {
  require(stats_x.dim() == stats_y.dim(), ErrorCategory::shape,
          "covariance_distance: dimension mismatch");
  const MatrixXd diff = stats_x.covariance - stats_y.covariance;
  return norm == CovNorm::frobenius ? diff.norm() : diff.cwiseAbs().sum();
}

// --- attribute extraction -------------------------------------------------

namespace {

double hue_from_rgb(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  if (d <= 1e-12) return -1.0;
  double h;
  if (mx == r)
    h = std::fmod((g - b) / d, 6.0);
  else if (mx == g)
    h = (b - r) / d + 2.0;
  else
    h = (r - g) / d + 4.0;
  if (h < 0.0) h += 6.0;
  double turns = h / 6.0;
  if (turns >= 1.0) turns -= 1.0;
  return turns;
}

}  // namespace

ExtractedAttributes extract_attributes(const Tensor& image, data::ShapeClass family) {
  require(image.rank() == 3 && image.dim(0) == 3, ErrorCategory::shape,
          "attribute extraction expects (3,H,W)");
  const Index h = image.dim(1), w = image.dim(2);
  require(h == w, ErrorCategory::shape, "attribute extraction expects square images");
  const Index s = h;

  ExtractedAttributes out;
  double total_w = 0.0, sum_x = 0.0, sum_y = 0.0;
  double sum_r = 0.0, sum_g = 0.0, sum_b = 0.0;
  for (Index y = 0; y < s; ++y) {
    for (Index x = 0; x < s; ++x) {
      const double r = (image[(0 * s + y) * s + x] + 1.0) / 2.0;
      const double g = (image[(1 * s + y) * s + x] + 1.0) / 2.0;
      const double b = (image[(2 * s + y) * s + x] + 1.0) / 2.0;
      const double chroma = std::max({r, g, b}) - std::min({r, g, b});
      if (chroma <= 0.0) continue;
      total_w += chroma;
      sum_x += chroma * (x + 0.5);
      sum_y += chroma * (y + 0.5);
      sum_r += chroma * r;
      sum_g += chroma * g;
      sum_b += chroma * b;
    }
  }
  if (total_w < 2.0) return out;  // blank or colorless: invalid

  out.center_x = sum_x / total_w / s;
  out.center_y = sum_y / total_w / s;
  const double area = total_w;  // chroma == coverage for saturated shapes
  if (family == data::ShapeClass::circle)
    out.size = 2.0 * std::sqrt(area / M_PI) / s;
  else
    out.size = std::sqrt(area) / s;
  out.hue = hue_from_rgb(sum_r / total_w, sum_g / total_w, sum_b / total_w);
  if (out.hue < 0.0) return out;
  out.valid = true;
  return out;
}

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size() && a.size() >= 2, ErrorCategory::statistics,
          "pearson: need paired samples (>= 2)");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double circular_correlation(const std::vector<double>& a_turns,
                            const std::vector<double>& b_turns) {
  require(a_turns.size() == b_turns.size() && a_turns.size() >= 2,
          ErrorCategory::statistics, "circular correlation: need paired samples");
  const size_t n = a_turns.size();
  double ca = 0.0, sa = 0.0, cb = 0.0, sb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    ca += std::cos(2.0 * M_PI * a_turns[i]);
    sa += std::sin(2.0 * M_PI * a_turns[i]);
    cb += std::cos(2.0 * M_PI * b_turns[i]);
    sb += std::sin(2.0 * M_PI * b_turns[i]);
  }
  const double mean_a = std::atan2(sa, ca);
  const double mean_b = std::atan2(sb, cb);
  double num = 0.0, da = 0.0, db = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double u = std::sin(2.0 * M_PI * a_turns[i] - mean_a);
    const double v = std::sin(2.0 * M_PI * b_turns[i] - mean_b);
    num += u * v;
    da += u * u;
    db += v * v;
  }
  if (da <= 0.0 || db <= 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

AttributeCorrelation attribute_correlation(const Tensor& images_x,
                                           const Tensor& images_y,
                                           data::ShapeClass family_x,
                                           data::ShapeClass family_y) {
  require(images_x.rank() == 4 && images_y.rank() == 4, ErrorCategory::shape,
          "expected (N,C,H,W) stacks");
  require(images_x.dim(0) == images_y.dim(0), ErrorCategory::shape,
          "stacks must pair the same latents");
  const Index n = images_x.dim(0);
  require(n >= 10, ErrorCategory::statistics, "need >= 10 pairs");

  const Index numel_x = images_x.numel() / n;
  const Index numel_y = images_y.numel() / n;
  std::vector<double> hx, hy, cxx, cxy, cyx, cyy, sx, sy;
  Index dropped = 0;
  for (Index i = 0; i < n; ++i) {
    Tensor ix({images_x.dim(1), images_x.dim(2), images_x.dim(3)});
    std::copy(images_x.data() + i * numel_x, images_x.data() + (i + 1) * numel_x,
              ix.data());
    Tensor iy({images_y.dim(1), images_y.dim(2), images_y.dim(3)});
    std::copy(images_y.data() + i * numel_y, images_y.data() + (i + 1) * numel_y,
              iy.data());
    const auto ax = extract_attributes(ix, family_x);
    const auto ay = extract_attributes(iy, family_y);
    if (!ax.valid || !ay.valid) {
      ++dropped;
      continue;
    }
    hx.push_back(ax.hue);
    hy.push_back(ay.hue);
    cxx.push_back(ax.center_x);
    cxy.push_back(ay.center_x);
    cyx.push_back(ax.center_y);
    cyy.push_back(ay.center_y);
    sx.push_back(ax.size);
    sy.push_back(ay.size);
  }
  require(dropped * 2 <= n, ErrorCategory::statistics,
          "more than 50% of pairs dropped (" + std::to_string(dropped) + "/" +
              std::to_string(n) + ")");

  AttributeCorrelation out;
  out.n_pairs_used = n - dropped;
  out.n_dropped = dropped;
  const std::string note = "dropped=" + std::to_string(dropped);
  auto finish = [&](MetricReport& r, const char* name, double value) {
    r = make_report(name, {value});
    r.sample_counts = {out.n_pairs_used};
    r.notes = note;
  };
  finish(out.hue, "attribute_correlation_hue", circular_correlation(hx, hy));
  finish(out.center_x, "attribute_correlation_center_x", pearson_correlation(cxx, cxy));
  finish(out.center_y, "attribute_correlation_center_y", pearson_correlation(cyx, cyy));
  finish(out.size, "attribute_correlation_size", pearson_correlation(sx, sy));
  return out;
}

}  // namespace rgan::metrics
