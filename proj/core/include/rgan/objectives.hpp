#pragma once

#include <string>

#include "rgan/tensor.hpp"

namespace rgan::objectives {

using Eigen::ArrayXd;

// Resolves the two ambiguities in the loss definitions; both readings are
// implemented so ablations can compare them.
enum class FcMode { centered_difference, concatenation };
enum class AdversarialMode { non_saturating, minimax };

const char* fc_mode_name(FcMode m);
FcMode fc_mode_from_name(const std::string& s);
const char* adversarial_mode_name(AdversarialMode m);
AdversarialMode adversarial_mode_from_name(const std::string& s);

struct LossVariant {
  FcMode fc_mode = FcMode::centered_difference;
  AdversarialMode adversarial_mode = AdversarialMode::non_saturating;
};

// Probabilities are clamped this far from {0,1} before any log.
constexpr double kProbClamp = 1e-7;

// Binary cross-entropy for one discriminator:
//   -mean[log d_real] - mean[log(1 - d_fake)].
double discriminator_loss(const ArrayXd& d_real, const ArrayXd& d_fake);

// Gradients w.r.t. the probability vectors.
void discriminator_loss_grad(const ArrayXd& d_real, const ArrayXd& d_fake,
                             ArrayXd& grad_real, ArrayXd& grad_fake);

// Per-term gradients; the trainer backpropagates the real and fake passes
// separately, so each side is exposed on its own.
ArrayXd discriminator_real_grad(const ArrayXd& d_real);  // of -mean[log p]
ArrayXd discriminator_fake_grad(const ArrayXd& d_fake);  // of -mean[log(1-p)]

// non_saturating: -mean[log d_fake];  minimax: mean[log(1 - d_fake)].
double generator_adversarial_loss(const ArrayXd& d_fake, const LossVariant& variant);
ArrayXd generator_adversarial_loss_grad(const ArrayXd& d_fake,
                                        const LossVariant& variant);

// Feature covariance constraint over a batch of same-latent feature pairs.
// centered_difference: mean_i || (fx_i - mu_x) - (fy_i - mu_y) ||_1
// concatenation:       mean_i ( ||fx_i - mu_x||_1 + ||fy_i - mu_y||_1 )
double feature_covariance_loss(const MatrixXd& feat_x, const MatrixXd& feat_y,
                               const VectorXd& mu_x, const VectorXd& mu_y,
                               const LossVariant& variant);
void feature_covariance_loss_grad(const MatrixXd& feat_x, const MatrixXd& feat_y,
                                  const VectorXd& mu_x, const VectorXd& mu_y,
                                  const LossVariant& variant, MatrixXd& grad_x,
                                  MatrixXd& grad_y);

struct LossBreakdown {
  double d_x = 0, d_y = 0, d_xf = 0, d_yf = 0;
  double g_x_adv = 0, g_y_adv = 0, g_xf_adv = 0, g_yf_adv = 0;
  double fc = 0;
  double omega = 1.0;
  double total_d = 0;
  double total_g = 0;
};

// Aggregates the generator objective: total_g = sum of the four adversarial
// terms + omega * fc. Discriminator terms are carried through for logging.
LossBreakdown total_generator_loss(double g_x_adv, double g_y_adv, double g_xf_adv,
                                   double g_yf_adv, double fc, double omega,
                                   double d_x = 0, double d_y = 0, double d_xf = 0,
                                   double d_yf = 0);

}  // namespace rgan::objectives
