#include "rgan/objectives.hpp"

#include <cmath>

namespace rgan::objectives {

const char* fc_mode_name(FcMode m) {
  return m == FcMode::centered_difference ? "centered_difference" : "concatenation";
}

FcMode fc_mode_from_name(const std::string& s) {
  if (s == "centered_difference") return FcMode::centered_difference;
  if (s == "concatenation") return FcMode::concatenation;
  fail(ErrorCategory::config, "unknown fc_mode: " + s);
}

const char* adversarial_mode_name(AdversarialMode m) {
  return m == AdversarialMode::non_saturating ? "non_saturating" : "minimax";
}

AdversarialMode adversarial_mode_from_name(const std::string& s) {
  if (s == "non_saturating") return AdversarialMode::non_saturating;
  if (s == "minimax") return AdversarialMode::minimax;
  fail(ErrorCategory::config, "unknown adversarial_mode: " + s);
}

namespace {

// Validates the raw probabilities then clamps them kProbClamp away from the
// boundary; exact 0 and 1 are legal inputs, anything outside [0,1] or
// non-finite is a numeric error.
ArrayXd clamp_probs(const ArrayXd& p, const char* what) {
  require(p.size() > 0, ErrorCategory::shape, std::string(what) + ": empty batch");
  require(p.isFinite().all(), ErrorCategory::numeric,
          std::string(what) + ": non-finite probability");
  require((p >= 0.0).all() && (p <= 1.0).all(), ErrorCategory::numeric,
          std::string(what) + ": probability outside [0,1]");
  return p.max(kProbClamp).min(1.0 - kProbClamp);
}

}  // namespace

double discriminator_loss(const ArrayXd& d_real, const ArrayXd& d_fake) {
  const ArrayXd pr = clamp_probs(d_real, "d_real");
  const ArrayXd pf = clamp_probs(d_fake, "d_fake");
  return -pr.log().mean() - (1.0 - pf).log().mean();
}

ArrayXd discriminator_real_grad(const ArrayXd& d_real) {
  const ArrayXd pr = clamp_probs(d_real, "d_real");
  return -1.0 / (pr * static_cast<double>(pr.size()));
}

ArrayXd discriminator_fake_grad(const ArrayXd& d_fake) {
  const ArrayXd pf = clamp_probs(d_fake, "d_fake");
  return 1.0 / ((1.0 - pf) * static_cast<double>(pf.size()));
}

void discriminator_loss_grad(const ArrayXd& d_real, const ArrayXd& d_fake,
                             ArrayXd& grad_real, ArrayXd& grad_fake) {
  grad_real = discriminator_real_grad(d_real);
  grad_fake = discriminator_fake_grad(d_fake);
}

double generator_adversarial_loss(const ArrayXd& d_fake, const LossVariant& variant) {
  const ArrayXd pf = clamp_probs(d_fake, "d_fake");
  if (variant.adversarial_mode == AdversarialMode::non_saturating)
    return -pf.log().mean();
  return (1.0 - pf).log().mean();
}

ArrayXd generator_adversarial_loss_grad(const ArrayXd& d_fake,
                                        const LossVariant& variant) {
  const ArrayXd pf = clamp_probs(d_fake, "d_fake");
  const double n = static_cast<double>(pf.size());
  if (variant.adversarial_mode == AdversarialMode::non_saturating)
    return -1.0 / (pf * n);
  return -1.0 / ((1.0 - pf) * n);
}

namespace {

void check_fc_shapes(const MatrixXd& feat_x, const MatrixXd& feat_y,
                     const VectorXd& mu_x, const VectorXd& mu_y) {
  require(feat_x.rows() == feat_y.rows(), ErrorCategory::shape,
          "feature batches must pair the same latents (batch mismatch)");
  require(feat_x.cols() == feat_y.cols(), ErrorCategory::shape,
          "feature dims differ between domains");
  require(mu_x.size() == feat_x.cols() && mu_y.size() == feat_y.cols(),
          ErrorCategory::shape, "domain mean dim does not match features");
  require(feat_x.rows() > 0, ErrorCategory::shape, "empty feature batch");
}

}  // namespace

double feature_covariance_loss(const MatrixXd& feat_x, const MatrixXd& feat_y,
                               const VectorXd& mu_x, const VectorXd& mu_y,
                               const LossVariant& variant) {
  check_fc_shapes(feat_x, feat_y, mu_x, mu_y);
  const double b = static_cast<double>(feat_x.rows());
  const MatrixXd rx = feat_x.rowwise() - mu_x.transpose();
  const MatrixXd ry = feat_y.rowwise() - mu_y.transpose();
  if (variant.fc_mode == FcMode::centered_difference)
    return (rx - ry).cwiseAbs().sum() / b;
  return (rx.cwiseAbs().sum() + ry.cwiseAbs().sum()) / b;
}

void feature_covariance_loss_grad(const MatrixXd& feat_x, const MatrixXd& feat_y,
                                  const VectorXd& mu_x, const VectorXd& mu_y,
                                  const LossVariant& variant, MatrixXd& grad_x,
                                  MatrixXd& grad_y) {
  check_fc_shapes(feat_x, feat_y, mu_x, mu_y);
  const double b = static_cast<double>(feat_x.rows());
  const MatrixXd rx = feat_x.rowwise() - mu_x.transpose();
  const MatrixXd ry = feat_y.rowwise() - mu_y.transpose();
  auto sign = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
  if (variant.fc_mode == FcMode::centered_difference) {
    grad_x = (rx - ry).unaryExpr(sign) / b;
    grad_y = -grad_x;
  } else {
    grad_x = rx.unaryExpr(sign) / b;
    grad_y = ry.unaryExpr(sign) / b;
  }
}

LossBreakdown total_generator_loss(double g_x_adv, double g_y_adv, double g_xf_adv,
                                   double g_yf_adv, double fc, double omega,
                                   double d_x, double d_y, double d_xf, double d_yf) {
  require(omega >= 0.0, ErrorCategory::config, "omega must be >= 0");
  LossBreakdown b;
  b.d_x = d_x;
  b.d_y = d_y;
  b.d_xf = d_xf;
  b.d_yf = d_yf;
  b.g_x_adv = g_x_adv;
  b.g_y_adv = g_y_adv;
  b.g_xf_adv = g_xf_adv;
  b.g_yf_adv = g_yf_adv;
  b.fc = fc;
  b.omega = omega;
  b.total_d = d_x + d_y + d_xf + d_yf;
  b.total_g = g_x_adv + g_y_adv + g_xf_adv + g_yf_adv + omega * fc;
  require(std::isfinite(b.total_d) && std::isfinite(b.total_g),
          ErrorCategory::numeric, "non-finite loss aggregate");
  return b;
}

}  // namespace rgan::objectives
