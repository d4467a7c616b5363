#include "plasticity/stats/glm.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "plasticity/errors.hpp"
#include "plasticity/stats/distributions.hpp"

namespace plasticity::stats {

Eigen::MatrixXd add_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(x.rows(), x.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(x.cols()) = x;
  return out;
}

namespace {

double gaussian_llf(double rss, double n) {
  return -0.5 * n * (std::log(2.0 * std::numbers::pi * rss / n) + 1.0);
}

}  // namespace

GlmResult glm_gaussian(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> names) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (y.size() != n) throw StatisticsError("glm_gaussian: design matrix and response differ in rows");
  if (p == 0) throw StatisticsError("glm_gaussian: empty design matrix");
  if (n <= p) throw StatisticsError("glm_gaussian: need more observations than columns");
  if (names.empty()) {
    for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  }
  if (static_cast<Eigen::Index>(names.size()) != p) throw StatisticsError("glm_gaussian: wrong number of column names");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < p) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = qr.rank(); j < p; ++j) {
      if (!cols.empty()) cols += ", ";
      cols += names[static_cast<std::size_t>(perm(j))];
    }
    throw StatisticsError("glm_gaussian: design matrix is rank deficient; collinear column(s): " + cols);
  }

  GlmResult r;
  r.names = std::move(names);
  r.n_obs = static_cast<int>(n);
  r.df_resid = static_cast<int>(n - p);
  r.df_model = static_cast<int>(p) - 1;
  r.coef = qr.solve(y);
  const Eigen::VectorXd resid = y - x * r.coef;
  r.deviance = resid.squaredNorm();
  r.scale = r.deviance / r.df_resid;

  // (X^T X)^{-1} = P R^{-1} R^{-T} P^T
  const Eigen::MatrixXd rtri = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd rinv = rtri.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd inner = rinv * rinv.transpose();
  const auto& perm = qr.colsPermutation();
  const Eigen::MatrixXd cov = perm * inner * perm.transpose();

  r.std_err = (cov.diagonal() * r.scale).array().sqrt();
  r.z = r.coef.array() / r.std_err.array();
  r.p.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) r.p(j) = normal_two_sided_p(r.z(j));
  r.ci_low = r.coef - kNormal975 * r.std_err;
  r.ci_high = r.coef + kNormal975 * r.std_err;

  const double nd = static_cast<double>(n);
  r.null_deviance = (y.array() - y.mean()).square().sum();
  r.log_likelihood = gaussian_llf(r.deviance, nd);
  const double llnull = gaussian_llf(r.null_deviance, nd);
  r.pseudo_r2 = 1.0 - std::exp(2.0 / nd * (llnull - r.log_likelihood));
  return r;
}

std::string format_glm_text(const GlmResult& r, const std::string& title) {
  std::ostringstream os;
  os << title << '\n';
  os << fmt::format("No. Observations: {:8d}    Df Residuals: {:6d}    Df Model: {:3d}\n", r.n_obs, r.df_resid,
                    r.df_model);
  os << fmt::format("Scale: {:12.5g}    Log-Likelihood: {:10.4f}    Deviance: {:10.4f}    Pseudo R-squ. (CS): {:.4f}\n",
                    r.scale, r.log_likelihood, r.deviance, r.pseudo_r2);
  std::size_t w = 10;
  for (const auto& n : r.names) w = std::max(w, n.size() + 2);
  const std::string rule(w + 60, '=');
  os << rule << '\n';
  os << fmt::format("{:<{}} {:>9} {:>9} {:>8} {:>7} {:>9} {:>9}\n", "", w, "coef", "std err", "z", "P>|z|", "[0.025",
                    "0.975]");
  os << std::string(w + 60, '-') << '\n';
  for (std::size_t j = 0; j < r.names.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    os << fmt::format("{:<{}} {:9.4f} {:9.3f} {:8.3f} {:7.3f} {:9.3f} {:9.3f}\n", r.names[j], w, r.coef(i),
                      r.std_err(i), r.z(i), r.p(i), r.ci_low(i), r.ci_high(i));
  }
  os << rule << '\n';
  return os.str();
}

std::string format_glm_csv(const GlmResult& r) {
  std::ostringstream os;
  os << "term,coef,std_err,z,p,ci_low,ci_high\n";
  os.precision(10);
  for (std::size_t j = 0; j < r.names.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    os << r.names[j] << ',' << r.coef(i) << ',' << r.std_err(i) << ',' << r.z(i) << ',' << r.p(i) << ','
       << r.ci_low(i) << ',' << r.ci_high(i) << '\n';
  }
  return os.str();
}

}  // namespace plasticity::stats
