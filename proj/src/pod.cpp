#include "mfpod/pod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfpod {

int energy_rank(const Vector& sigma, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw Error(ErrorKind::Parameter, "eps_pod must lie in (0, 1)");
  }
  const Eigen::Index k = sigma.size();
  if (k == 0) return 0;
  // Tail sums from the back avoid cancellation in 1 - captured/total.
  Vector tail(k + 1);
  tail(k) = 0.0;
  for (Eigen::Index i = k - 1; i >= 0; --i) tail(i) = tail(i + 1) + sigma(i) * sigma(i);
  const double total = tail(0);
  if (total == 0.0) return 1;
  const double budget = eps * eps * total;
  for (Eigen::Index n = 1; n <= k; ++n) {
    if (tail(n) <= budget) return int(n);
  }
  return int(k);
}

PodBasis build_basis(const SnapshotSet& hf, const TruncationRule& rule, bool center) {
  if (hf.data.size() == 0 || hf.n_mu() == 0) {
    throw Error(ErrorKind::Validation, "cannot build a basis from an empty snapshot set");
  }
  if (rule.kind == TruncationRule::Kind::Tolerance && !(rule.eps > 0.0 && rule.eps < 1.0)) {
    throw Error(ErrorKind::Parameter, "eps_pod must lie in (0, 1)");
  }
  if (rule.kind == TruncationRule::Kind::Fixed && rule.count < 1) {
    throw Error(ErrorKind::Parameter, "fixed mode count must be >= 1");
  }

  PodBasis basis;
  basis.grid = hf.grid;
  basis.field_names = hf.field_names;
  SvdResult svd;
  if (center) {
    const Vector mean = hf.data.rowwise().mean();
    svd = thin_svd(hf.data.colwise() - mean);
    basis.mean = mean;
  } else {
    svd = thin_svd(hf.data);
  }
  basis.sigma = svd.sigma;

  if (rule.kind == TruncationRule::Kind::Tolerance) {
    basis.n_pod = energy_rank(svd.sigma, rule.eps);
    basis.eps_pod = rule.eps;
  } else {
    // Numerical rank: singular values above the rounding floor of the largest.
    const double floor = svd.sigma(0) * std::numeric_limits<double>::epsilon() *
                         double(std::max(hf.data.rows(), hf.data.cols()));
    int rank = 0;
    while (rank < svd.sigma.size() && svd.sigma(rank) > floor) ++rank;
    basis.n_pod = std::max(1, std::min(rule.count, rank));
  }
  basis.modes = svd.U.leftCols(basis.n_pod);
  return basis;
}

CoefficientSeries project(const PodBasis& basis, const Matrix& data,
                          const std::vector<double>& times, const Matrix& params) {
  if (data.rows() != basis.modes.rows()) {
    throw Error(ErrorKind::Shape, "snapshot n_dof " + std::to_string(data.rows()) +
                                      " does not match basis rows " +
                                      std::to_string(basis.modes.rows()));
  }
  CoefficientSeries out;
  if (basis.mean) {
    out.coeffs = basis.modes.transpose() * (data.colwise() - *basis.mean);
  } else {
    out.coeffs = basis.modes.transpose() * data;
  }
  out.times = times;
  out.params = params;
  return out;
}

CoefficientSeries project(const PodBasis& basis, const SnapshotSet& x) {
  return project(basis, x.data, x.times, x.params);
}

Matrix reconstruct_matrix(const PodBasis& basis, const Matrix& coeffs) {
  if (coeffs.rows() != basis.modes.cols()) {
    throw Error(ErrorKind::Shape, "coefficient rows " + std::to_string(coeffs.rows()) +
                                      " do not match n_pod " +
                                      std::to_string(basis.modes.cols()));
  }
  Matrix out = basis.modes * coeffs;
  if (basis.mean) out.colwise() += *basis.mean;
  return out;
}

SnapshotSet reconstruct(const PodBasis& basis, const CoefficientSeries& coeffs) {
  SnapshotSet out;
  out.fidelity = Fidelity::High;
  out.data = reconstruct_matrix(basis, coeffs.coeffs);
  out.grid = basis.grid;
  out.times = coeffs.times;
  out.params = coeffs.params;
  out.field_names = basis.field_names;
  return out;
}

}  // namespace mfpod
