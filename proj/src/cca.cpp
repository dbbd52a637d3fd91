#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "lcz/ccf.hpp"
#include "lcz/error.hpp"

namespace lcz {
namespace {

// Fraction of the variance of u explained by class membership (ANOVA R^2),
// i.e. the squared correlation between u and its best linear fit on the
// one-hot class indicators.
double explained_fraction(const Eigen::VectorXd& u, std::span<const int> labels) {
  std::array<double, kNumLabels + 1> sum{};
  std::array<double, kNumLabels + 1> cnt{};
  const double mean = u.mean();
  double total = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    sum[labels[i]] += u[i];
    cnt[labels[i]] += 1.0;
    total += (u[i] - mean) * (u[i] - mean);
  }
  if (!(total > 0.0)) return 0.0;
  double between = 0.0;
  for (int c = 1; c <= kNumLabels; ++c) {
    if (cnt[c] == 0.0) continue;
    const double d = sum[c] / cnt[c] - mean;
    between += cnt[c] * d * d;
  }
  return std::clamp(between / total, 0.0, 1.0);
}

}  // namespace

CcaResult cca_project(std::span<const double> x, std::size_t n, std::size_t p,
                      std::span<const int> labels, double ridge) {
  if (n < 2) throw UsageError("cca_project needs at least two samples");
  if (p < 1) throw UsageError("cca_project needs at least one feature");
  if (x.size() != n * p || labels.size() != n) throw UsageError("cca_project: shape mismatch");

  std::vector<int> classes;
  for (int l : labels) {
    if (!is_label(l)) throw UsageError("cca_project: label out of range");
    if (std::find(classes.begin(), classes.end(), l) == classes.end()) classes.push_back(l);
  }
  std::sort(classes.begin(), classes.end());
  if (classes.size() < 2) throw UsageError("cca_project needs at least two distinct classes");

  const auto ni = static_cast<Eigen::Index>(n);
  const auto pi = static_cast<Eigen::Index>(p);
  // One indicator column per class except the last: the dropped column is
  // affine in the others, so the canonical space is unchanged and Cyy stays
  // nonsingular without leaning on the ridge.
  const auto ci = static_cast<Eigen::Index>(classes.size() - 1);

  Eigen::MatrixXd X(ni, pi);
  for (Eigen::Index i = 0; i < ni; ++i) {
    for (Eigen::Index j = 0; j < pi; ++j) X(i, j) = x[static_cast<std::size_t>(i) * p + j];
  }
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(ni, ci);
  for (Eigen::Index i = 0; i < ni; ++i) {
    const auto pos = std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin();
    if (pos < ci) Y(i, pos) = 1.0;
  }
  const Eigen::RowVectorXd mx = X.colwise().mean();
  const Eigen::RowVectorXd my = Y.colwise().mean();
  X.rowwise() -= mx;
  Y.rowwise() -= my;
  const double scale = 1.0 / static_cast<double>(n - 1);

  Eigen::MatrixXd cxx = (X.transpose() * X) * scale;
  Eigen::MatrixXd cyy = (Y.transpose() * Y) * scale;
  const Eigen::MatrixXd cxy = (X.transpose() * Y) * scale;

  // Escalate the ridge until both blocks factor; degenerate node data must
  // never abort training.
  double eps = ridge;
  const double tr = std::max(1.0, cxx.trace() / static_cast<double>(p));
  Eigen::LLT<Eigen::MatrixXd> lxx, lyy;
  for (int attempt = 0;; ++attempt) {
    Eigen::MatrixXd a = cxx;
    a.diagonal().array() += eps;
    Eigen::MatrixXd b = cyy;
    b.diagonal().array() += eps;
    lxx.compute(a);
    lyy.compute(b);
    if (lxx.info() == Eigen::Success && lyy.info() == Eigen::Success) {
      cxx = std::move(a);
      cyy = std::move(b);
      break;
    }
    if (attempt > 30) throw NumericalError("cca_project: covariance not factorable");
    eps = std::max(eps * 10.0, 1e-12 * tr);
  }

  const Eigen::MatrixXd m = cxy * lyy.solve(cxy.transpose());
  const Eigen::MatrixXd msym = 0.5 * (m + m.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      msym, cxx, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) throw NumericalError("cca_project: eigensolver failed");

  const std::size_t k = std::min<std::size_t>(p, classes.size() - 1);
  CcaResult out;
  std::vector<std::pair<double, std::vector<double>>> dirs;
  for (std::size_t r = 0; r < k; ++r) {
    const Eigen::Index col = pi - 1 - static_cast<Eigen::Index>(r);  // eigenvalues ascend
    Eigen::VectorXd a = solver.eigenvectors().col(col);
    const double norm = a.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) continue;
    a /= norm;
    Eigen::Index arg = 0;
    a.cwiseAbs().maxCoeff(&arg);
    if (a[arg] < 0.0) a = -a;
    const Eigen::VectorXd u = X * a;
    const double rho = std::sqrt(explained_fraction(u, labels));
    dirs.emplace_back(rho, std::vector<double>(a.data(), a.data() + a.size()));
  }
  std::stable_sort(dirs.begin(), dirs.end(),
                   [](const auto& l, const auto& r) { return l.first > r.first; });
  for (auto& [rho, v] : dirs) {
    out.correlations.push_back(rho);
    out.projections.push_back(std::move(v));
  }
  return out;
}

}  // namespace lcz
