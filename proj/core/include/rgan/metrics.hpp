#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rgan/data.hpp"
#include "rgan/feature_space.hpp"
#include "rgan/tensor.hpp"

namespace rgan::metrics {

struct MetricReport {
  std::string name;
  std::vector<double> values;  // one per repeat
  double mean = 0.0;
  double stddev = 0.0;  // sample stddev over repeats, 0 for a single repeat
  Index n_repeats = 0;
  std::vector<Index> sample_counts;
  std::string extractor_id;  // which feature map produced the values
  std::string notes;
  uint64_t config_hash = 0;
};

MetricReport make_report(std::string name, std::vector<double> values);

// --- MS-SSIM ------------------------------------------------------------

// Multi-scale SSIM on the luminance channel of two [-1,1] images (C,H,W).
// Standard construction: 11x11 Gaussian window (sigma 1.5), contrast/
// structure at every scale, luminance at the coarsest, exponent weights
// 0.0448/0.2856/0.3001/0.2363/0.1333 renormalized over the scales used.
// Scales auto-reduce until the coarsest side is >= 8 (64x64 -> 4 scales,
// 32x32 -> 3); the window clips to the side length. Returns a value in
// (-1, 1]; scales_used, when given, receives the effective scale count.
double ms_ssim(const Tensor& img_a, const Tensor& img_b, Index scales = 5,
               Index* scales_used = nullptr);

// Mean MS-SSIM over n_pairs uniformly random distinct pairs from a sample
// stack (N,C,H,W), repeated n_repeats times for mean +- std.
MetricReport mean_pairwise_ms_ssim(const Tensor& samples, Index n_pairs,
                                   uint64_t seed, Index n_repeats = 5,
                                   Index scales = 5);

// --- Frechet distance ----------------------------------------------------

// ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa Sb)^{1/2}); the matrix square root
// goes through the symmetric eigendecomposition of Sa^{1/2} Sb Sa^{1/2}
// with negative eigenvalues clamped to zero.
double fid(const features::FeatureStats& stats_a, const features::FeatureStats& stats_b);

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual MatrixXd extract(const Tensor& samples) = 0;  // (N,...) -> N x d
  virtual std::string id() const = 0;
};

// Flattens each sample; the oracle tests feed raw feature vectors through
// this as (N, d) or (N, d, 1, 1) stacks.
class IdentityExtractor : public FeatureExtractor {
 public:
  MatrixXd extract(const Tensor& samples) override;
  std::string id() const override { return "identity"; }
};

// The frozen AE encoder (keeps a private copy so concurrent metric passes
// cannot interfere through layer caches).
class EncoderExtractor : public FeatureExtractor {
 public:
  explicit EncoderExtractor(const features::EncoderModel& encoder);
  MatrixXd extract(const Tensor& samples) override;
  std::string id() const override;

 private:
  features::EncoderModel encoder_;
};

MetricReport feature_fid(FeatureExtractor& extractor, const Tensor& samples_a,
                         const Tensor& samples_b);

// --- covariance distance -------------------------------------------------

enum class CovNorm { frobenius, l1 };

double covariance_distance(const features::FeatureStats& stats_x,
                           const features::FeatureStats& stats_y,
                           CovNorm norm = CovNorm::frobenius);

// --- synthetic attribute extraction / correlation -------------------------

struct ExtractedAttributes {
  double hue = 0.0;
  double center_x = 0.0;
  double center_y = 0.0;
  double size = 0.0;
  bool valid = false;  // false for blank/degenerate images
};

// Pixel-level recovery of the synthetic attributes from a rendered or
// generated (C,H,W) image. Foreground weight per pixel is its chroma
// (max-min channel), which equals shape coverage for the renderer's
// saturated colors over the neutral background.
ExtractedAttributes extract_attributes(const Tensor& image, data::ShapeClass family);

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);
// Circular correlation for unit-interval angles (Jammalamadaka-SenGupta).
double circular_correlation(const std::vector<double>& a_turns,
                            const std::vector<double>& b_turns);

struct AttributeCorrelation {
  MetricReport hue;       // circular correlation
  MetricReport center_x;  // Pearson
  MetricReport center_y;
  MetricReport size;
  Index n_pairs_used = 0;
  Index n_dropped = 0;

  double center_mean() const { return (center_x.mean + center_y.mean) / 2.0; }
};

// Correlation per attribute between two stacks of paired images (row i of
// each stack generated from the same latent). Pairs where extraction fails
// on either side are dropped; more than 50% dropped is an error.
AttributeCorrelation attribute_correlation(const Tensor& images_x,
                                           const Tensor& images_y,
                                           data::ShapeClass family_x,
                                           data::ShapeClass family_y);

}  // namespace rgan::metrics
