#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace plasticity::stats {

/// Gaussian-family, identity-link GLM fit. Equivalent to OLS with the dispersion
/// estimated as RSS / (n - p) and z-based coefficient inference.
struct GlmResult {
  std::vector<std::string> names;
  Eigen::VectorXd coef;
  Eigen::VectorXd std_err;
  Eigen::VectorXd z;
  Eigen::VectorXd p;
  Eigen::VectorXd ci_low;
  Eigen::VectorXd ci_high;
  int n_obs = 0;
  int df_model = 0;
  int df_resid = 0;
  double scale = 0.0;
  double deviance = 0.0;
  double null_deviance = 0.0;
  double log_likelihood = 0.0;
  double pseudo_r2 = 0.0;  // Cox-Snell
};

/// `x` must already contain the intercept column when one is wanted; `names`
/// labels the columns (defaults to x0, x1, ...).
GlmResult glm_gaussian(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> names = {});

/// Prepends a column of ones.
Eigen::MatrixXd add_intercept(const Eigen::MatrixXd& x);

std::string format_glm_text(const GlmResult& r, const std::string& title);
std::string format_glm_csv(const GlmResult& r);

}  // namespace plasticity::stats
